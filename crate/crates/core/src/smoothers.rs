//! Pointwise Jacobi and Gauss–Seidel sweeps and the multicolor overlapping
//! Vanka smoother on coarse-grid patches.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarse_space::CoarseGrid;
use crate::error::{Error, Result};
use crate::linalg::{DenseLu, SparseMatrix};
use crate::mesh::DofMap;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchKind {
    /// Vertex neighbourhoods `ω_l` (four coarse cells in the interior).
    Omega,
    /// Coarse cells extended by `overlap` fine layers.
    Cell { overlap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmootherKind {
    Jacobi { damping: f64 },
    GaussSeidel,
    Vanka { patch: PatchKind, colors: usize },
}

impl SmootherKind {
    /// Short table label: `J`, `GS`, `VK`, `VK1`, `VK2`, `V`.
    pub fn label(&self) -> String {
        match self {
            SmootherKind::Jacobi { .. } => "J".into(),
            SmootherKind::GaussSeidel => "GS".into(),
            SmootherKind::Vanka {
                patch: PatchKind::Omega,
                ..
            } => "V".into(),
            SmootherKind::Vanka {
                patch: PatchKind::Cell { overlap: 0 },
                ..
            } => "VK".into(),
            SmootherKind::Vanka {
                patch: PatchKind::Cell { overlap },
                ..
            } => format!("VK{overlap}"),
        }
    }

    pub fn colors(&self) -> usize {
        match self {
            SmootherKind::Vanka { colors, .. } => *colors,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherConfig {
    pub kind: SmootherKind,
    pub sweeps: usize,
}

impl SmootherConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::InvalidArgument("smoother needs at least one sweep".into()));
        }
        if let SmootherKind::Vanka { colors, .. } = self.kind {
            if ![1, 2, 4].contains(&colors) {
                return Err(Error::InvalidArgument(format!("colors must be 1, 2 or 4, got {colors}")));
            }
        }
        Ok(())
    }
}

/// A set of global DOFs solved together, tagged with its coarse index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub coarse: (usize, usize),
    /// Sorted global indices.
    pub dofs: Vec<usize>,
}

fn patch_dofs(dofs: &DofMap, n: usize, (i0, i1): (usize, usize), (j0, j1): (usize, usize)) -> Vec<usize> {
    let mut out = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            let v = j * (n + 1) + i;
            out.push(dofs.pressure(v));
            for c in 0..2 {
                let g = dofs.displacement(v, c);
                if !dofs.is_constrained_global(g) {
                    out.push(g);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Patches of the given kind; constrained displacement DOFs are excluded.
pub fn build_patches(grid: &CoarseGrid, dofs: &DofMap, kind: PatchKind) -> Vec<Patch> {
    let n = grid.n_fine;
    match kind {
        PatchKind::Omega => (0..grid.n_vertices())
            .map(|l| {
                let (ri, rj) = grid.omega_vertex_range(l);
                Patch {
                    coarse: grid.vertex_ij(l),
                    dofs: patch_dofs(dofs, n, ri, rj),
                }
            })
            .collect(),
        PatchKind::Cell { overlap } => {
            let r = grid.ratio();
            (0..grid.n_cells())
                .map(|c| {
                    let (ci, cj) = grid.cell_ij(c);
                    let range = |k: usize| ((k * r).saturating_sub(overlap), ((k + 1) * r + overlap).min(n));
                    Patch {
                        coarse: (ci, cj),
                        dofs: patch_dofs(dofs, n, range(ci), range(cj)),
                    }
                })
                .collect()
        }
    }
}

/// Color of each patch from its coarse index.
pub fn color_patches(patches: &[Patch], colors: usize) -> Result<Vec<usize>> {
    let f: fn((usize, usize)) -> usize = match colors {
        1 => |_| 0,
        2 => |(i, j)| (i + j) % 2,
        4 => |(i, j)| i % 2 + 2 * (j % 2),
        _ => {
            return Err(Error::InvalidArgument(format!("colors must be 1, 2 or 4, got {colors}")));
        }
    };
    Ok(patches.iter().map(|p| f(p.coarse)).collect())
}

/// Factorized local matrices, overlap weights and the color classes.
#[derive(Debug, Clone)]
pub struct VankaSetup<T> {
    pub patches: Vec<Patch>,
    pub colors: Vec<usize>,
    pub n_colors: usize,
    /// Per patch, `1 / multiplicity` of each local DOF.
    pub weights: Vec<Vec<T>>,
    lus: Vec<DenseLu<T>>,
    /// DOFs in no patch, relaxed pointwise.
    uncovered: Vec<usize>,
}

impl<T: Real> VankaSetup<T> {
    pub fn new(matrix: &SparseMatrix<T>, patches: Vec<Patch>, colors: Vec<usize>) -> Result<Self> {
        let n = matrix.n_rows();
        if colors.len() != patches.len() {
            return Err(Error::DimensionMismatch {
                context: "patch colors",
                expected: patches.len(),
                got: colors.len(),
            });
        }
        let mut mult = vec![0usize; n];
        for p in &patches {
            for &d in &p.dofs {
                if d >= n {
                    return Err(Error::IndexOutOfRange { index: d, len: n });
                }
                mult[d] += 1;
            }
        }
        let weights = patches
            .iter()
            .map(|p| p.dofs.iter().map(|&d| T::one() / T::from_count(mult[d])).collect())
            .collect();
        let lus = patches
            .par_iter()
            .map(|p| matrix.submatrix(&p.dofs, &p.dofs)?.lu())
            .collect::<Result<Vec<_>>>()?;
        let uncovered = (0..n).filter(|&i| mult[i] == 0).collect();
        let n_colors = colors.iter().max().map_or(0, |&c| c + 1);
        Ok(Self {
            patches,
            colors,
            n_colors,
            weights,
            lus,
            uncovered,
        })
    }

    pub fn from_grid(
        matrix: &SparseMatrix<T>,
        grid: &CoarseGrid,
        dofs: &DofMap,
        patch: PatchKind,
        colors: usize,
    ) -> Result<Self> {
        let patches = build_patches(grid, dofs, patch);
        let c = color_patches(&patches, colors)?;
        Self::new(matrix, patches, c)
    }

    pub fn uncovered(&self) -> &[usize] {
        &self.uncovered
    }

    /// Patch indices of color `k`.
    pub fn color_class(&self, k: usize) -> Vec<usize> {
        (0..self.patches.len()).filter(|&i| self.colors[i] == k).collect()
    }

    /// `Σ_{i ∈ class} Rᵢᵀ Wᵢ Lᵢ⁻¹ Rᵢ r` added to `x`, patches visited in `order`.
    pub fn apply_class(&self, order: &[usize], r: &[T], x: &mut [T]) {
        let corrections: Vec<Vec<T>> = order
            .par_iter()
            .map(|&i| {
                let p = &self.patches[i];
                let local: Vec<T> = p.dofs.iter().map(|&d| r[d]).collect();
                let mut e = vec![T::zero(); local.len()];
                self.lus[i].solve_into(&local, &mut e);
                e.iter().zip(&self.weights[i]).map(|(&a, &w)| a * w).collect()
            })
            .collect();
        for (&i, e) in order.iter().zip(&corrections) {
            for (&d, &v) in self.patches[i].dofs.iter().zip(e) {
                x[d] += v;
            }
        }
    }

    /// `sweeps` passes of the colored fractional steps; the residual is
    /// refreshed once per color.
    pub fn apply(&self, matrix: &SparseMatrix<T>, b: &[T], x: &mut [T], sweeps: usize) {
        let classes: Vec<Vec<usize>> = (0..self.n_colors).map(|k| self.color_class(k)).collect();
        let mut r = vec![T::zero(); b.len()];
        for _ in 0..sweeps {
            for class in &classes {
                matrix.residual_into(b, x, &mut r);
                self.apply_class(class, &r, x);
            }
            for &i in &self.uncovered {
                relax_row(matrix, b, x, i);
            }
        }
    }
}

fn relax_row<T: Real>(matrix: &SparseMatrix<T>, b: &[T], x: &mut [T], i: usize) {
    let (cols, vals) = matrix.row(i);
    let mut acc = b[i];
    let mut diag = T::zero();
    for (&j, &v) in cols.iter().zip(vals) {
        if j == i {
            diag += v;
        } else {
            acc -= v * x[j];
        }
    }
    if diag != T::zero() {
        x[i] = acc / diag;
    }
}

fn checked_diagonal<T: Real>(matrix: &SparseMatrix<T>) -> Result<Vec<T>> {
    let d = matrix.diagonal();
    match d.iter().position(|&v| v == T::zero()) {
        Some(row) => Err(Error::Singular { pivot: row }),
        None => Ok(d),
    }
}

/// Damped Jacobi: `x ← x + ω D⁻¹ (b − L x)`.
pub fn jacobi_sweeps<T: Real>(
    matrix: &SparseMatrix<T>,
    inv_diag: &[T],
    damping: T,
    b: &[T],
    x: &mut [T],
    sweeps: usize,
) {
    let mut r = vec![T::zero(); b.len()];
    for _ in 0..sweeps {
        matrix.residual_into(b, x, &mut r);
        for ((xi, &ri), &di) in x.iter_mut().zip(&r).zip(inv_diag) {
            *xi += damping * di * ri;
        }
    }
}

/// Lexicographic forward Gauss–Seidel.
pub fn gauss_seidel_sweeps<T: Real>(matrix: &SparseMatrix<T>, b: &[T], x: &mut [T], sweeps: usize) {
    for _ in 0..sweeps {
        for i in 0..b.len() {
            relax_row(matrix, b, x, i);
        }
    }
}

/// A smoother bound to one matrix.
#[derive(Debug, Clone)]
pub enum Smoother<T> {
    Jacobi { damping: T, inv_diag: Vec<T> },
    GaussSeidel,
    Vanka(VankaSetup<T>),
}

impl<T: Real> Smoother<T> {
    pub fn setup(
        matrix: &SparseMatrix<T>,
        kind: &SmootherKind,
        grid: &CoarseGrid,
        dofs: &DofMap,
    ) -> Result<Self> {
        Ok(match *kind {
            SmootherKind::Jacobi { damping } => Smoother::Jacobi {
                damping: T::lit(damping),
                inv_diag: checked_diagonal(matrix)?.iter().map(|&d| T::one() / d).collect(),
            },
            SmootherKind::GaussSeidel => {
                checked_diagonal(matrix)?;
                Smoother::GaussSeidel
            }
            SmootherKind::Vanka { patch, colors } => {
                Smoother::Vanka(VankaSetup::from_grid(matrix, grid, dofs, patch, colors)?)
            }
        })
    }

    pub fn apply(&self, matrix: &SparseMatrix<T>, b: &[T], x: &mut [T], sweeps: usize) {
        match self {
            Smoother::Jacobi { damping, inv_diag } => jacobi_sweeps(matrix, inv_diag, *damping, b, x, sweeps),
            Smoother::GaussSeidel => gauss_seidel_sweeps(matrix, b, x, sweeps),
            Smoother::Vanka(v) => v.apply(matrix, b, x, sweeps),
        }
    }
}
