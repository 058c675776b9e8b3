//! Spectral coarse space: coarse grid and vertex patches `ω_l`, local
//! generalized eigenproblems for pressure and displacement, partition of
//! unity, prolongation and the Galerkin coarse operator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constitutive::CoefficientBounds;
use crate::error::{Error, Result};
use crate::linalg::{generalized_sym_eig, DenseLu, DenseMatrix, EigenPairs, SparseMatrix, TripletBuilder};
use crate::mesh::{DofMap, StructuredTriMesh};
use crate::scalar::Real;

/// `N_H × N_H` coarse cells, each a block of `r × r` fine squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoarseGrid {
    pub n_fine: usize,
    pub n_coarse: usize,
}

impl CoarseGrid {
    pub fn new(n_fine: usize, n_coarse: usize) -> Result<Self> {
        if n_coarse == 0 || n_fine % n_coarse != 0 {
            return Err(Error::InvalidArgument(format!(
                "coarse size {n_coarse} does not divide fine size {n_fine}"
            )));
        }
        Ok(Self { n_fine, n_coarse })
    }

    pub fn for_mesh<T: Real>(mesh: &StructuredTriMesh<T>, n_coarse: usize) -> Result<Self> {
        Self::new(mesh.n(), n_coarse)
    }

    /// Fine squares per coarse cell side.
    pub fn ratio(&self) -> usize {
        self.n_fine / self.n_coarse
    }

    pub fn n_cells(&self) -> usize {
        self.n_coarse * self.n_coarse
    }

    pub fn n_vertices(&self) -> usize {
        (self.n_coarse + 1) * (self.n_coarse + 1)
    }

    pub fn cell_index(&self, ci: usize, cj: usize) -> usize {
        cj * self.n_coarse + ci
    }

    pub fn cell_ij(&self, c: usize) -> (usize, usize) {
        (c % self.n_coarse, c / self.n_coarse)
    }

    pub fn vertex_ij(&self, l: usize) -> (usize, usize) {
        (l % (self.n_coarse + 1), l / (self.n_coarse + 1))
    }

    /// Fine triangles of coarse cell `(ci, cj)`.
    pub fn cell_triangles(&self, ci: usize, cj: usize) -> Vec<usize> {
        let r = self.ratio();
        let n = self.n_fine;
        let mut out = Vec::with_capacity(2 * r * r);
        for j in cj * r..(cj + 1) * r {
            for i in ci * r..(ci + 1) * r {
                let s = j * n + i;
                out.push(2 * s);
                out.push(2 * s + 1);
            }
        }
        out
    }

    /// Coarse cells sharing coarse vertex `l`.
    pub fn omega_cells(&self, l: usize) -> Vec<(usize, usize)> {
        let (vi, vj) = self.vertex_ij(l);
        let mut out = Vec::with_capacity(4);
        for cj in vj.saturating_sub(1)..=vj.min(self.n_coarse - 1) {
            for ci in vi.saturating_sub(1)..=vi.min(self.n_coarse - 1) {
                out.push((ci, cj));
            }
        }
        out
    }

    /// Inclusive fine-vertex ranges `(i0, i1), (j0, j1)` of `ω_l`.
    pub fn omega_vertex_range(&self, l: usize) -> ((usize, usize), (usize, usize)) {
        let (vi, vj) = self.vertex_ij(l);
        let r = self.ratio();
        let n = self.n_fine;
        (
            (vi.saturating_sub(1) * r, ((vi + 1) * r).min(n)),
            (vj.saturating_sub(1) * r, ((vj + 1) * r).min(n)),
        )
    }

    /// Fine vertices of `ω_l` in row-major order.
    pub fn omega_vertices(&self, l: usize) -> Vec<usize> {
        let ((i0, i1), (j0, j1)) = self.omega_vertex_range(l);
        let np = self.n_fine + 1;
        let mut out = Vec::with_capacity((i1 - i0 + 1) * (j1 - j0 + 1));
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.push(j * np + i);
            }
        }
        out
    }

    /// Bilinear coarse hat of vertex `l` at fine vertex `(i, j)`.
    pub fn pou<T: Real>(&self, l: usize, i: usize, j: usize) -> T {
        let (vi, vj) = self.vertex_ij(l);
        let r = self.ratio() as f64;
        let hat = |a: usize, b: usize| (1.0 - (a as f64 - (b as f64) * r).abs() / r).max(0.0);
        T::lit(hat(i, vi) * hat(j, vj))
    }
}

/// Eigenpairs of one vertex patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchBasis<T> {
    /// Fine vertices of `ω_l`.
    pub vertices: Vec<usize>,
    /// Partition-of-unity values at `vertices`.
    pub pou: Vec<T>,
    pub pressure_values: Vec<T>,
    /// `vertices.len() × count`, row-major.
    pub pressure_vectors: Vec<T>,
    /// Unconstrained displacement-block indices (`2 v + component`).
    pub displacement_dofs: Vec<usize>,
    pub displacement_values: Vec<T>,
    /// `displacement_dofs.len() × count`, row-major.
    pub displacement_vectors: Vec<T>,
}

impl<T: Real> PatchBasis<T> {
    pub fn pressure_count(&self) -> usize {
        self.pressure_values.len()
    }

    pub fn displacement_count(&self) -> usize {
        self.displacement_values.len()
    }

    pub fn pressure_vector(&self, j: usize) -> Vec<T> {
        let c = self.pressure_count();
        (0..self.vertices.len()).map(|i| self.pressure_vectors[i * c + j]).collect()
    }

    pub fn displacement_vector(&self, j: usize) -> Vec<T> {
        let c = self.displacement_count();
        (0..self.displacement_dofs.len())
            .map(|i| self.displacement_vectors[i * c + j])
            .collect()
    }
}

/// Per-vertex spectral bases for the whole coarse grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBasis<T> {
    pub grid: CoarseGrid,
    pub patches: Vec<PatchBasis<T>>,
}

/// Local matrices of the pressure problem on a patch: `κ̄`-weighted stiffness
/// and mass, natural boundary conditions.
pub fn pressure_patch_matrices<T: Real>(
    mesh: &StructuredTriMesh<T>,
    grid: &CoarseGrid,
    l: usize,
    bounds: &CoefficientBounds<T>,
) -> (Vec<usize>, DenseMatrix<T>, DenseMatrix<T>) {
    let vertices = grid.omega_vertices(l);
    let local = local_index(mesh.n_vertices(), &vertices);
    let n = vertices.len();
    let mut a = DenseMatrix::zeros(n, n);
    let mut s = DenseMatrix::zeros(n, n);
    let twelfth = T::one() / T::lit(12.0);
    for (ci, cj) in grid.omega_cells(l) {
        for t in grid.cell_triangles(ci, cj) {
            let tri = mesh.triangles()[t];
            let area = mesh.signed_area(t);
            let g = mesh.hat_gradients(t);
            let k = bounds.kappa[t];
            for x in 0..3 {
                let lx = local[tri[x]];
                for y in 0..3 {
                    let ly = local[tri[y]];
                    a[(lx, ly)] += k * area * (g[x][0] * g[y][0] + g[x][1] * g[y][1]);
                    let m = if x == y { T::lit(2.0) } else { T::one() };
                    s[(lx, ly)] += k * area * twelfth * m;
                }
            }
        }
    }
    (vertices, a, s)
}

/// Local matrices of the displacement problem on a patch: elasticity with the
/// bound Lamé parameters and the `(λ̄ + 2μ̄)`-weighted vector mass, with
/// globally constrained unknowns removed.
pub fn displacement_patch_matrices<T: Real>(
    mesh: &StructuredTriMesh<T>,
    dofs: &DofMap,
    grid: &CoarseGrid,
    l: usize,
    bounds: &CoefficientBounds<T>,
) -> (Vec<usize>, DenseMatrix<T>, DenseMatrix<T>) {
    let vertices = grid.omega_vertices(l);
    let constrained = dofs.displacement_constrained();
    let disp: Vec<usize> = vertices
        .iter()
        .flat_map(|&v| [2 * v, 2 * v + 1])
        .filter(|&d| !constrained[d])
        .collect();
    let local = local_index(2 * mesh.n_vertices(), &disp);
    let n = disp.len();
    let mut k = DenseMatrix::zeros(n, n);
    let mut s = DenseMatrix::zeros(n, n);
    let twelfth = T::one() / T::lit(12.0);
    for (ci, cj) in grid.omega_cells(l) {
        for t in grid.cell_triangles(ci, cj) {
            let tri = mesh.triangles()[t];
            let area = mesh.signed_area(t);
            let g = mesh.hat_gradients(t);
            let (lam, mu) = (bounds.lambda[t], bounds.mu[t]);
            let weight = lam + T::lit(2.0) * mu;
            for a in 0..3 {
                for c in 0..2 {
                    let row = local[2 * tri[a] + c];
                    if row == usize::MAX {
                        continue;
                    }
                    for b in 0..3 {
                        let gab = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                        for d in 0..2 {
                            let col = local[2 * tri[b] + d];
                            if col == usize::MAX {
                                continue;
                            }
                            let delta = if c == d { gab } else { T::zero() };
                            k[(row, col)] += area
                                * (mu * (delta + g[a][d] * g[b][c]) + lam * g[a][c] * g[b][d]);
                            if c == d {
                                let m = if a == b { T::lit(2.0) } else { T::one() };
                                s[(row, col)] += weight * area * twelfth * m;
                            }
                        }
                    }
                }
            }
        }
    }
    (disp, k, s)
}

fn local_index(n_global: usize, idx: &[usize]) -> Vec<usize> {
    let mut local = vec![usize::MAX; n_global];
    for (k, &g) in idx.iter().enumerate() {
        local[g] = k;
    }
    local
}

fn flatten<T: Real>(e: &EigenPairs<T>) -> Vec<T> {
    e.eigenvectors.as_slice().to_vec()
}

impl<T: Real> SpectralBasis<T> {
    /// Solves every local eigenproblem for up to `m_p` pressure and `m_u`
    /// displacement modes (clamped to the patch dimension).
    pub fn compute(
        mesh: &StructuredTriMesh<T>,
        dofs: &DofMap,
        grid: CoarseGrid,
        bounds: &CoefficientBounds<T>,
        m_p: usize,
        m_u: usize,
    ) -> Result<Self> {
        if grid.n_fine != mesh.n() {
            return Err(Error::DimensionMismatch {
                context: "coarse grid vs mesh",
                expected: mesh.n(),
                got: grid.n_fine,
            });
        }
        let patches: Result<Vec<PatchBasis<T>>> = (0..grid.n_vertices())
            .into_par_iter()
            .map(|l| {
                let (vertices, a, s) = pressure_patch_matrices(mesh, &grid, l, bounds);
                let pe = generalized_sym_eig(&a, &s, m_p.min(vertices.len()))?;
                let (disp, k, sk) = displacement_patch_matrices(mesh, dofs, &grid, l, bounds);
                let de = generalized_sym_eig(&k, &sk, m_u.min(disp.len()))?;
                let pou = vertices
                    .iter()
                    .map(|&v| {
                        let (i, j) = mesh.vertex_ij(v);
                        grid.pou(l, i, j)
                    })
                    .collect();
                Ok(PatchBasis {
                    vertices,
                    pou,
                    pressure_values: pe.eigenvalues.clone(),
                    pressure_vectors: flatten(&pe),
                    displacement_dofs: disp,
                    displacement_values: de.eigenvalues.clone(),
                    displacement_vectors: flatten(&de),
                })
            })
            .collect();
        Ok(Self {
            grid,
            patches: patches?,
        })
    }
}

/// Block prolongation `P = diag(P_p, P_u)` in the coupled ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct Prolongation<T> {
    pub matrix: SparseMatrix<T>,
    pub transpose: SparseMatrix<T>,
    pub n_coarse_p: usize,
    pub n_coarse_u: usize,
}

impl<T: Real> Prolongation<T> {
    /// Columns `χ^l φ_j` (pressure) then `χ^l Φ_j` (displacement), using the
    /// first `m_p`, `m_u` modes of each patch.
    pub fn assemble(basis: &SpectralBasis<T>, dofs: &DofMap, m_p: usize, m_u: usize) -> Self {
        let nv = dofs.n_vertices();
        let n = dofs.n_total();
        let mut cols: Vec<Vec<(usize, T)>> = Vec::new();
        for patch in &basis.patches {
            for j in 0..m_p.min(patch.pressure_count()) {
                let v = patch.pressure_vector(j);
                let col = patch
                    .vertices
                    .iter()
                    .zip(&patch.pou)
                    .zip(&v)
                    .filter(|((_, &chi), _)| chi != T::zero())
                    .map(|((&vert, &chi), &x)| (dofs.pressure(vert), chi * x))
                    .collect();
                cols.push(col);
            }
        }
        let n_coarse_p = cols.len();
        for patch in &basis.patches {
            let chi_of = local_pou(nv, patch);
            for j in 0..m_u.min(patch.displacement_count()) {
                let v = patch.displacement_vector(j);
                let col = patch
                    .displacement_dofs
                    .iter()
                    .zip(&v)
                    .filter_map(|(&d, &x)| {
                        let chi = chi_of[d / 2];
                        (chi != T::zero()).then(|| (nv + d, chi * x))
                    })
                    .collect();
                cols.push(col);
            }
        }
        let n_coarse_u = cols.len() - n_coarse_p;
        let mut t = TripletBuilder::new(n, cols.len());
        for (c, col) in cols.iter().enumerate() {
            for &(r, v) in col {
                t.push(r, c, v);
            }
        }
        let matrix = t.finalize();
        let transpose = matrix.transpose();
        Self {
            matrix,
            transpose,
            n_coarse_p,
            n_coarse_u,
        }
    }

    pub fn n_coarse(&self) -> usize {
        self.n_coarse_p + self.n_coarse_u
    }

    /// `P c`.
    pub fn prolong(&self, c: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.matrix.n_rows()];
        self.matrix.mul_vec_unchecked(c, &mut out);
        out
    }

    /// `Pᵀ r`.
    pub fn restrict(&self, r: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.transpose.n_rows()];
        self.transpose.mul_vec_unchecked(r, &mut out);
        out
    }
}

fn local_pou<T: Real>(nv: usize, patch: &PatchBasis<T>) -> Vec<T> {
    let mut chi = vec![T::zero(); nv];
    for (&v, &c) in patch.vertices.iter().zip(&patch.pou) {
        chi[v] = c;
    }
    chi
}

/// Galerkin operator `L_H = Pᵀ L P`, dense and factorized once.
///
/// When the fine matrix is given as `soft + BᵀB` (the Robin penalty in
/// factored form), the factorization is of the augmented matrix
///
/// ```text
/// [ Pᵀ soft P   (B P)ᵀ ]
/// [ B P         −I     ]
/// ```
///
/// whose Schur complement is `L_H`. The penalty-sized product `Pᵀ BᵀB P` is
/// never formed, so its rounding does not swamp the order-one part.
#[derive(Debug, Clone)]
pub struct CoarseOperator<T> {
    pub matrix: DenseMatrix<T>,
    lu: DenseLu<T>,
    /// Rows of `B P` carried by the augmented factorization.
    extra: usize,
}

impl<T: Real> CoarseOperator<T> {
    pub fn new(l: &SparseMatrix<T>, p: &Prolongation<T>) -> Result<Self> {
        let lp = l.matmul(&p.matrix)?;
        let matrix = p.transpose.matmul(&lp)?.to_dense();
        let lu = matrix.lu()?;
        Ok(Self { matrix, lu, extra: 0 })
    }

    /// Coarse operator of `soft + rootᵀ root`.
    pub fn from_split(soft: &SparseMatrix<T>, root: &SparseMatrix<T>, p: &Prolongation<T>) -> Result<Self> {
        let hs = p.transpose.matmul(&soft.matmul(&p.matrix)?)?.to_dense();
        let bp = root.matmul(&p.matrix)?;
        let rows: Vec<usize> = (0..bp.n_rows()).filter(|&i| !bp.row(i).0.is_empty()).collect();
        let bh = bp.to_dense();
        let n = hs.n_rows();
        let k = rows.len();
        let mut matrix = hs.clone();
        for &r in &rows {
            let br = bh.row(r);
            for i in 0..n {
                if br[i] == T::zero() {
                    continue;
                }
                let row = matrix.row_mut(i);
                for j in 0..n {
                    row[j] += br[i] * br[j];
                }
            }
        }
        let mut aug = DenseMatrix::zeros(n + k, n + k);
        for i in 0..n {
            aug.row_mut(i)[..n].copy_from_slice(hs.row(i));
        }
        for (a, &r) in rows.iter().enumerate() {
            let br = bh.row(r);
            aug.row_mut(n + a)[..n].copy_from_slice(br);
            for i in 0..n {
                aug.row_mut(i)[n + a] = br[i];
            }
            aug.row_mut(n + a)[n + a] = -T::one();
        }
        let lu = aug.lu()?;
        Ok(Self { matrix, lu, extra: k })
    }

    pub fn dim(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn solve_into(&self, r: &[T], e: &mut [T]) {
        if self.extra == 0 {
            self.lu.solve_into(r, e);
            return;
        }
        let n = r.len();
        let mut rhs = r.to_vec();
        rhs.resize(n + self.extra, T::zero());
        let mut x = vec![T::zero(); n + self.extra];
        self.lu.solve_into(&rhs, &mut x);
        e.copy_from_slice(&x[..n]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoundaryConfig;

    fn homogeneous_bounds(n_cells: usize) -> CoefficientBounds<f64> {
        CoefficientBounds {
            c: vec![1.0; n_cells],
            kappa: vec![1.0; n_cells],
            s: vec![1.0; n_cells],
            lambda: vec![1.0; n_cells],
            mu: vec![1.0; n_cells],
            p_min: 0.0,
            p_max: 1.0,
        }
    }

    #[test]
    fn grid_counts() {
        let g = CoarseGrid::new(8, 2).unwrap();
        assert_eq!(g.n_cells(), 4);
        assert_eq!(g.n_vertices(), 9);
        assert_eq!(g.omega_cells(0).len(), 1);
        assert_eq!(g.omega_cells(4).len(), 4);
        assert!(CoarseGrid::new(8, 3).is_err());
        let mut owner = vec![0; 2 * 64];
        for c in 0..4 {
            let (ci, cj) = g.cell_ij(c);
            for t in g.cell_triangles(ci, cj) {
                owner[t] += 1;
            }
        }
        assert!(owner.iter().all(|&k| k == 1));
    }

    #[test]
    fn partition_of_unity_sums_to_one() {
        let g = CoarseGrid::new(12, 3).unwrap();
        for j in 0..=12 {
            for i in 0..=12 {
                let s: f64 = (0..g.n_vertices()).map(|l| g.pou::<f64>(l, i, j)).sum();
                assert!((s - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pressure_patch_has_constant_kernel() {
        let mesh = StructuredTriMesh::new(8, 1.0).unwrap();
        let grid = CoarseGrid::new(8, 4).unwrap();
        let b = homogeneous_bounds(mesh.n_triangles());
        let (_, a, s) = pressure_patch_matrices(&mesh, &grid, 6, &b);
        let ones = vec![1.0; a.n_rows()];
        assert!(a.matvec(&ones).unwrap().iter().all(|x| x.abs() < 1e-12));
        let e = generalized_sym_eig(&a, &s, 2).unwrap();
        assert!(e.eigenvalues[0].abs() < 1e-10);
        assert!(e.eigenvalues[1] > 1e-3);
        let v0 = e.vector(0);
        assert!(v0.iter().all(|&x| (x - v0[0]).abs() < 1e-10 && x > 0.0));
    }

    #[test]
    fn coarse_dimension_matches_counts() {
        let mesh = StructuredTriMesh::new(8, 1.0).unwrap();
        let dofs = DofMap::new(&mesh, &BoundaryConfig::new(0.0, 0.0));
        let grid = CoarseGrid::new(8, 2).unwrap();
        let b = homogeneous_bounds(mesh.n_triangles());
        let basis = SpectralBasis::compute(&mesh, &dofs, grid, &b, 2, 2).unwrap();
        let p = Prolongation::assemble(&basis, &dofs, 2, 2);
        assert_eq!(p.n_coarse_p, 9 * 2);
        assert_eq!(p.n_coarse_u, 9 * 2);
        assert_eq!(p.matrix.n_cols(), 36);
    }
}
