//! P1 assembly of the flow and mechanics blocks, right-hand sides and the
//! displacement constraints.
//!
//! Quadrature is the interior three-point rule (barycentric `(2/3, 1/6, 1/6)`
//! and permutations, weights `|T|/3`), exact for quadratics. Coefficients are
//! evaluated at quadrature points from the interpolated nodal pressure.

use serde::{Deserialize, Serialize};

use crate::constitutive::{CoefficientSource, PointCoefficients};
use crate::error::{Error, Result};
use crate::linalg::{block2x2, SparseMatrix, TripletBuilder};
use crate::mesh::{BoundaryConfig, DofMap, StructuredTriMesh};
use crate::scalar::Real;

const QUAD_BARY: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

/// Whether the blocks hold the fixed linear part or a state evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateTag {
    Linear,
    State,
    Residual,
}

/// Load terms entering the right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadConfig<T> {
    /// Adds the elevation potential `ρ_w g y` to the flow source.
    pub elevation_head: bool,
    pub rho_w: T,
    pub g_scalar: T,
    pub g_vec: [T; 2],
}

impl<T: Real> LoadConfig<T> {
    pub fn none() -> Self {
        Self {
            elevation_head: false,
            rho_w: T::zero(),
            g_scalar: T::zero(),
            g_vec: [T::zero(); 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowBlocks<T> {
    pub m: SparseMatrix<T>,
    pub a: SparseMatrix<T>,
    pub f_p: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechanicsBlocks<T> {
    pub k: SparseMatrix<T>,
    pub d: SparseMatrix<T>,
    pub g: SparseMatrix<T>,
    pub f_u: Vec<T>,
}

/// The full block set of the discrete system.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledOperators<T> {
    pub m: SparseMatrix<T>,
    pub a: SparseMatrix<T>,
    pub k: SparseMatrix<T>,
    pub d: SparseMatrix<T>,
    pub g: SparseMatrix<T>,
    pub f_p: Vec<T>,
    pub f_u: Vec<T>,
    pub tag: StateTag,
}

impl<T: Real> AssembledOperators<T> {
    /// `[[M + τA, αD], [αG, K]]`.
    pub fn coupled_matrix(&self, tau: T, alpha: T) -> Result<SparseMatrix<T>> {
        let top_left = self.m.linear_combination(T::one(), &self.a, tau)?;
        block2x2(&top_left, &self.d.scaled(alpha), &self.g.scaled(alpha), &self.k)
    }

    /// Blockwise `self − other`; right-hand sides are differenced as well.
    pub fn minus(&self, other: &Self) -> Result<Self> {
        let neg = -T::one();
        Ok(Self {
            m: self.m.linear_combination(T::one(), &other.m, neg)?,
            a: self.a.linear_combination(T::one(), &other.a, neg)?,
            k: self.k.linear_combination(T::one(), &other.k, neg)?,
            d: self.d.linear_combination(T::one(), &other.d, neg)?,
            g: self.g.linear_combination(T::one(), &other.g, neg)?,
            f_p: self.f_p.iter().zip(&other.f_p).map(|(&a, &b)| a - b).collect(),
            f_u: self.f_u.iter().zip(&other.f_u).map(|(&a, &b)| a - b).collect(),
            tag: StateTag::Residual,
        })
    }
}

/// Pressure at the quadrature points of triangle `t`.
fn quad_pressures<T: Real>(tri: &[usize; 3], p: Option<&[T]>) -> [T; 3] {
    let mut out = [T::zero(); 3];
    if let Some(p) = p {
        for (q, bary) in QUAD_BARY.iter().enumerate() {
            out[q] = (0..3).map(|k| T::lit(bary[k]) * p[tri[k]]).sum();
        }
    }
    out
}

fn quad_coefficients<T: Real, S: CoefficientSource<T> + ?Sized>(
    source: &S,
    t: usize,
    tri: &[usize; 3],
    p: Option<&[T]>,
) -> [PointCoefficients<T>; 3] {
    let pq = quad_pressures(tri, p);
    [source.at(t, pq[0]), source.at(t, pq[1]), source.at(t, pq[2])]
}

fn check_pressure<T>(mesh_vertices: usize, p: Option<&[T]>) -> Result<()> {
    match p {
        Some(p) if p.len() != mesh_vertices => Err(Error::DimensionMismatch {
            context: "nodal pressure",
            expected: mesh_vertices,
            got: p.len(),
        }),
        _ => Ok(()),
    }
}

/// Mass matrix weighted by `c`, stiffness weighted by `κ` plus the Robin
/// term, and the flow load vector.
pub fn assemble_flow<T: Real, S: CoefficientSource<T> + ?Sized>(
    mesh: &StructuredTriMesh<T>,
    source: &S,
    p: Option<&[T]>,
    bc: &BoundaryConfig<T>,
    loads: &LoadConfig<T>,
) -> Result<FlowBlocks<T>> {
    let nv = mesh.n_vertices();
    check_pressure(nv, p)?;
    let nt = mesh.n_triangles();
    let mut mb = TripletBuilder::with_capacity(nv, nv, 9 * nt);
    let mut ab = TripletBuilder::with_capacity(nv, nv, 9 * nt + 4 * mesh.n());
    let mut f_p = vec![T::zero(); nv];
    let third = T::one() / T::lit(3.0);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.signed_area(t);
        let w = area * third;
        let grads = mesh.hat_gradients(t);
        let coeffs = quad_coefficients(source, t, tri, p);
        let kappa_int: T = coeffs.iter().map(|q| q.kappa).sum::<T>() * w;
        for a in 0..3 {
            for b in 0..3 {
                let mut mass = T::zero();
                for (q, bary) in QUAD_BARY.iter().enumerate() {
                    mass += coeffs[q].c * T::lit(bary[a] * bary[b]);
                }
                mb.push(tri[a], tri[b], mass * w);
                let gg = grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1];
                ab.push(tri[a], tri[b], kappa_int * gg);
            }
        }
        if loads.elevation_head {
            // f̃ contribution −∫ κ ∇(ρ_w g y)·∇φ_a with ∇(ρ_w g y) = (0, ρ_w g)
            let rg = loads.rho_w * loads.g_scalar;
            for a in 0..3 {
                f_p[tri[a]] -= kappa_int * rg * grads[a][1];
            }
        }
    }
    push_robin(mesh, bc, &mut ab, &mut f_p);
    Ok(FlowBlocks {
        m: mb.finalize(),
        a: ab.finalize(),
        f_p,
    })
}

/// Adds `γ∫φᵢφⱼ ds` and `γ∫p₁φᵢ ds` over the Robin side.
fn push_robin<T: Real>(
    mesh: &StructuredTriMesh<T>,
    bc: &BoundaryConfig<T>,
    ab: &mut TripletBuilder<T>,
    f_p: &mut [T],
) {
    if bc.gamma <= T::zero() {
        return;
    }
    let sixth = T::one() / T::lit(6.0);
    for (side, [i, j]) in mesh.boundary_edges() {
        if *side != bc.robin_side {
            continue;
        }
        let (pi, pj) = (mesh.vertices()[*i], mesh.vertices()[*j]);
        let len = ((pj[0] - pi[0]).powi(2) + (pj[1] - pi[1]).powi(2)).sqrt();
        let s = bc.gamma * len * sixth;
        ab.push(*i, *i, s * T::lit(2.0));
        ab.push(*j, *j, s * T::lit(2.0));
        ab.push(*i, *j, s);
        ab.push(*j, *i, s);
        let load = bc.gamma * bc.p1 * len * T::lit(0.5);
        f_p[*i] += load;
        f_p[*j] += load;
    }
}

/// The Robin boundary mass `γ∫φᵢφⱼ ds` alone (the part of `A` that does not
/// depend on the coefficients).
pub fn robin_mass<T: Real>(mesh: &StructuredTriMesh<T>, bc: &BoundaryConfig<T>) -> SparseMatrix<T> {
    let nv = mesh.n_vertices();
    let mut ab = TripletBuilder::with_capacity(nv, nv, 4 * mesh.n());
    let mut scratch = vec![T::zero(); nv];
    push_robin(mesh, bc, &mut ab, &mut scratch);
    ab.finalize()
}

/// A factor `B` of the Robin boundary mass, `BᵀB = γ∫φᵢφⱼ ds`: two rows per
/// Robin edge, one column per vertex.
pub fn robin_root<T: Real>(mesh: &StructuredTriMesh<T>, bc: &BoundaryConfig<T>) -> SparseMatrix<T> {
    let nv = mesh.n_vertices();
    let edges: Vec<[usize; 2]> = if bc.gamma > T::zero() {
        mesh.boundary_edges()
            .iter()
            .filter(|(side, _)| *side == bc.robin_side)
            .map(|(_, e)| *e)
            .collect()
    } else {
        Vec::new()
    };
    let mut b = TripletBuilder::with_capacity(2 * edges.len(), nv, 3 * edges.len());
    let half = T::lit(0.5);
    for (k, [i, j]) in edges.iter().enumerate() {
        let (pi, pj) = (mesh.vertices()[*i], mesh.vertices()[*j]);
        let len = ((pj[0] - pi[0]).powi(2) + (pj[1] - pi[1]).powi(2)).sqrt();
        // s [[2, 1], [1, 2]] = GᵀG with G = √s [[√2, 1/√2], [0, √(3/2)]]
        let rs = (bc.gamma * len / T::lit(6.0)).sqrt();
        b.push(2 * k, *i, rs * T::lit(2.0).sqrt());
        b.push(2 * k, *j, rs * half.sqrt());
        b.push(2 * k + 1, *j, rs * T::lit(1.5).sqrt());
    }
    b.finalize()
}

/// Elasticity stiffness, the two coupling blocks and the body-force vector.
///
/// Displacement unknowns are ordered `(u_x, u_y)` per vertex.
pub fn assemble_mechanics<T: Real, S: CoefficientSource<T> + ?Sized>(
    mesh: &StructuredTriMesh<T>,
    source: &S,
    p: Option<&[T]>,
    loads: &LoadConfig<T>,
) -> Result<MechanicsBlocks<T>> {
    let nv = mesh.n_vertices();
    check_pressure(nv, p)?;
    let nt = mesh.n_triangles();
    let nu = 2 * nv;
    let mut kb = TripletBuilder::with_capacity(nu, nu, 36 * nt);
    let mut db = TripletBuilder::with_capacity(nv, nu, 18 * nt);
    let mut gb = TripletBuilder::with_capacity(nu, nv, 18 * nt);
    let mut f_u = vec![T::zero(); nu];
    let third = T::one() / T::lit(3.0);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let w = mesh.signed_area(t) * third;
        let g = mesh.hat_gradients(t);
        let coeffs = quad_coefficients(source, t, tri, p);
        let mu_int: T = coeffs.iter().map(|q| q.mu).sum::<T>() * w;
        let lambda_int: T = coeffs.iter().map(|q| q.lambda).sum::<T>() * w;
        let grad_p = match p {
            Some(p) => {
                let mut gp = [T::zero(); 2];
                for k in 0..3 {
                    gp[0] += p[tri[k]] * g[k][0];
                    gp[1] += p[tri[k]] * g[k][1];
                }
                gp
            }
            None => [T::zero(); 2],
        };
        for a in 0..3 {
            for c in 0..2 {
                let row = 2 * tri[a] + c;
                for b in 0..3 {
                    let gab = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                    for d in 0..2 {
                        let col = 2 * tri[b] + d;
                        let delta = if c == d { gab } else { T::zero() };
                        let v = mu_int * (delta + g[a][d] * g[b][c]) + lambda_int * g[a][c] * g[b][d];
                        kb.push(row, col, v);
                    }
                }
            }
        }
        for i in 0..3 {
            for b in 0..3 {
                for d in 0..2 {
                    let mut dv = T::zero();
                    let mut gv = T::zero();
                    for (q, bary) in QUAD_BARY.iter().enumerate() {
                        let (li, lb) = (T::lit(bary[i]), T::lit(bary[b]));
                        dv += coeffs[q].s * li * g[b][d];
                        gv += (coeffs[q].s_prime * grad_p[d] * li + coeffs[q].s * g[i][d]) * lb;
                    }
                    db.push(tri[i], 2 * tri[b] + d, dv * w);
                    gb.push(2 * tri[b] + d, tri[i], gv * w);
                }
            }
        }
        if loads.g_vec != [T::zero(); 2] {
            for b in 0..3 {
                let mut rho = T::zero();
                for (q, bary) in QUAD_BARY.iter().enumerate() {
                    rho += coeffs[q].rho_b * T::lit(bary[b]);
                }
                for d in 0..2 {
                    f_u[2 * tri[b] + d] += rho * loads.g_vec[d] * w;
                }
            }
        }
    }
    Ok(MechanicsBlocks {
        k: kb.finalize(),
        d: db.finalize(),
        g: gb.finalize(),
        f_u,
    })
}

/// Body-force vector alone (constraints applied), cheaper than a full
/// mechanics assembly.
pub fn assemble_body_force<T: Real, S: CoefficientSource<T> + ?Sized>(
    mesh: &StructuredTriMesh<T>,
    dofs: &DofMap,
    source: &S,
    p: Option<&[T]>,
    loads: &LoadConfig<T>,
) -> Result<Vec<T>> {
    let nv = mesh.n_vertices();
    check_pressure(nv, p)?;
    let mut f_u = vec![T::zero(); 2 * nv];
    if loads.g_vec == [T::zero(); 2] {
        return Ok(f_u);
    }
    let third = T::one() / T::lit(3.0);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let w = mesh.signed_area(t) * third;
        let coeffs = quad_coefficients(source, t, tri, p);
        for b in 0..3 {
            let mut rho = T::zero();
            for (q, bary) in QUAD_BARY.iter().enumerate() {
                rho += coeffs[q].rho_b * T::lit(bary[b]);
            }
            for d in 0..2 {
                f_u[2 * tri[b] + d] += rho * loads.g_vec[d] * w;
            }
        }
    }
    for (f, &fixed) in f_u.iter_mut().zip(dofs.displacement_constrained()) {
        if fixed {
            *f = T::zero();
        }
    }
    Ok(f_u)
}

/// Eliminates constrained displacements: unit diagonal in `K`, zero rows and
/// columns elsewhere, zero load.
pub fn apply_displacement_bc<T: Real>(mech: &mut MechanicsBlocks<T>, dofs: &DofMap) {
    let mask = dofs.displacement_constrained();
    mech.k.zero_columns(mask);
    for (i, &fixed) in mask.iter().enumerate() {
        if fixed {
            mech.k.set_row_identity(i, T::one());
            mech.g.zero_row(i);
            mech.f_u[i] = T::zero();
        }
    }
    mech.d.zero_columns(mask);
}

/// All blocks at a nodal pressure state, constraints applied.
pub fn assemble_at_state<T: Real, S: CoefficientSource<T> + ?Sized>(
    mesh: &StructuredTriMesh<T>,
    dofs: &DofMap,
    source: &S,
    p: Option<&[T]>,
    bc: &BoundaryConfig<T>,
    loads: &LoadConfig<T>,
    tag: StateTag,
) -> Result<AssembledOperators<T>> {
    let flow = assemble_flow(mesh, source, p, bc, loads)?;
    let mut mech = assemble_mechanics(mesh, source, p, loads)?;
    apply_displacement_bc(&mut mech, dofs);
    Ok(AssembledOperators {
        m: flow.m,
        a: flow.a,
        k: mech.k,
        d: mech.d,
        g: mech.g,
        f_p: flow.f_p,
        f_u: mech.f_u,
        tag,
    })
}
