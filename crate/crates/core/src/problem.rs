//! A heterogeneous model instance: mesh, material, boundary data and the
//! initial pressure.

use crate::assembly::{assemble_at_state, AssembledOperators, LoadConfig, StateTag};
use crate::constitutive::{CoefficientBounds, CoefficientSource, MaterialModel};
use crate::error::{Error, Result};
use crate::mesh::{BoundaryConfig, DofMap, StructuredTriMesh};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct Problem<T> {
    pub mesh: StructuredTriMesh<T>,
    pub dofs: DofMap,
    pub material: MaterialModel<T>,
    pub bc: BoundaryConfig<T>,
    pub loads: LoadConfig<T>,
    /// Uniform initial pressure (Pa).
    pub p_initial: T,
    /// Pressure samples used for the coefficient bounds.
    pub bound_samples: usize,
}

impl<T: Real> Problem<T> {
    pub fn new(
        mesh: StructuredTriMesh<T>,
        material: MaterialModel<T>,
        bc: BoundaryConfig<T>,
        p_initial: T,
        elevation_head: bool,
    ) -> Result<Self> {
        bc.validate()?;
        if material.n_cells() != mesh.n_triangles() {
            return Err(Error::DimensionMismatch {
                context: "material fields vs mesh cells",
                expected: mesh.n_triangles(),
                got: material.n_cells(),
            });
        }
        let dofs = DofMap::new(&mesh, &bc);
        let f = &material.fluid;
        let loads = LoadConfig {
            elevation_head,
            rho_w: f.rho_w,
            g_scalar: f.g_scalar,
            g_vec: f.g_vec,
        };
        Ok(Self {
            mesh,
            dofs,
            material,
            bc,
            loads,
            p_initial,
            bound_samples: 64,
        })
    }

    pub fn alpha(&self) -> T {
        self.material.fluid.alpha
    }

    pub fn n_pressure(&self) -> usize {
        self.dofs.n_pressure()
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.n_total()
    }

    pub fn initial_pressure(&self) -> Vec<T> {
        vec![self.p_initial; self.n_pressure()]
    }

    /// Interval spanned by the initial and boundary pressures, widened when
    /// the two coincide.
    pub fn pressure_interval(&self) -> (T, T) {
        let (a, b) = (self.p_initial, self.bc.p1);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if lo < hi {
            (lo, hi)
        } else {
            let pad = T::one().max(lo.abs() * T::lit(1e-6));
            (lo - pad, hi + pad)
        }
    }

    pub fn bounds(&self) -> Result<CoefficientBounds<T>> {
        let (lo, hi) = self.pressure_interval();
        self.material.coefficient_bounds(lo, hi, self.bound_samples)
    }

    /// All blocks at a nodal pressure.
    pub fn assemble_at_state(&self, p: &[T]) -> Result<AssembledOperators<T>> {
        self.assemble_with(&self.material, Some(p), StateTag::State)
    }

    /// The fixed linear part from coefficient bounds.
    pub fn assemble_linear(&self, bounds: &CoefficientBounds<T>) -> Result<AssembledOperators<T>> {
        self.assemble_with(bounds, None, StateTag::Linear)
    }

    pub fn assemble_with<S: CoefficientSource<T> + ?Sized>(
        &self,
        source: &S,
        p: Option<&[T]>,
        tag: StateTag,
    ) -> Result<AssembledOperators<T>> {
        assemble_at_state(&self.mesh, &self.dofs, source, p, &self.bc, &self.loads, tag)
    }
}

/// `[p; u]` from the two blocks.
pub fn join<T: Real>(p: &[T], u: &[T]) -> Vec<T> {
    let mut x = Vec::with_capacity(p.len() + u.len());
    x.extend_from_slice(p);
    x.extend_from_slice(u);
    x
}

/// Splits a coupled vector after `n_p` pressure entries.
pub fn split<T: Real>(x: &[T], n_p: usize) -> (Vec<T>, Vec<T>) {
    (x[..n_p].to_vec(), x[n_p..].to_vec())
}
