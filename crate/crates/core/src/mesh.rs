//! Structured triangulation of `[0, L]²` and the coupled degree-of-freedom map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];
}

/// `N × N` squares, each split along the bottom-left to top-right diagonal.
///
/// Vertex `(i, j)` has index `j (N + 1) + i`. Square `(i, j)` holds triangles
/// `2 (j N + i)` = (BL, BR, TR) and `2 (j N + i) + 1` = (BL, TR, TL), both
/// counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredTriMesh<T> {
    n: usize,
    length: T,
    vertices: Vec<[T; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<(Side, [usize; 2])>,
}

impl<T: Real> StructuredTriMesh<T> {
    pub fn new(n: usize, length: T) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "mesh needs at least 2 cells per side, got {n}"
            )));
        }
        if !(length > T::zero()) {
            return Err(Error::InvalidArgument("mesh side length must be positive".into()));
        }
        let h = length / T::from_count(n);
        let np = n + 1;
        let mut vertices = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                vertices.push([h * T::from_count(i), h * T::from_count(j)]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let bl = j * np + i;
                let br = bl + 1;
                let tl = bl + np;
                let tr = tl + 1;
                triangles.push([bl, br, tr]);
                triangles.push([bl, tr, tl]);
            }
        }
        let mut boundary_edges = Vec::with_capacity(4 * n);
        for k in 0..n {
            boundary_edges.push((Side::Bottom, [k, k + 1]));
            boundary_edges.push((Side::Right, [k * np + n, (k + 1) * np + n]));
            boundary_edges.push((Side::Top, [n * np + k, n * np + k + 1]));
            boundary_edges.push((Side::Left, [k * np, (k + 1) * np]));
        }
        Ok(Self {
            n,
            length,
            vertices,
            triangles,
            boundary_edges,
        })
    }

    /// Cells per side.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn h(&self) -> T {
        self.length / T::from_count(self.n)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[[T; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[(Side, [usize; 2])] {
        &self.boundary_edges
    }

    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    /// Grid coordinates `(i, j)` of a vertex.
    pub fn vertex_ij(&self, v: usize) -> (usize, usize) {
        (v % (self.n + 1), v / (self.n + 1))
    }

    /// Square `(i, j)` containing triangle `t`.
    pub fn triangle_square(&self, t: usize) -> (usize, usize) {
        let s = t / 2;
        (s % self.n, s / self.n)
    }

    pub fn on_side(&self, v: usize, side: Side) -> bool {
        let (i, j) = self.vertex_ij(v);
        match side {
            Side::Bottom => j == 0,
            Side::Top => j == self.n,
            Side::Left => i == 0,
            Side::Right => i == self.n,
        }
    }

    /// Signed area (positive for counter-clockwise triangles).
    pub fn signed_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        T::lit(0.5) * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    /// Constant gradients of the three barycentric hat functions on `t`.
    pub fn hat_gradients(&self, t: usize) -> [[T; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        let p = [self.vertices[a], self.vertices[b], self.vertices[c]];
        let two_area = T::lit(2.0) * self.signed_area(t);
        let mut g = [[T::zero(); 2]; 3];
        for k in 0..3 {
            let (q1, q2) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            g[k] = [(q1[1] - q2[1]) / two_area, (q2[0] - q1[0]) / two_area];
        }
        g
    }
}

/// Boundary data: Robin exchange on one side and displacement constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConfig<T> {
    pub gamma: T,
    pub p1: T,
    #[serde(default = "default_robin_side")]
    pub robin_side: Side,
    #[serde(default = "default_fix_ux")]
    pub fix_ux: Vec<Side>,
    #[serde(default = "default_fix_uy")]
    pub fix_uy: Vec<Side>,
}

fn default_robin_side() -> Side {
    Side::Top
}

fn default_fix_ux() -> Vec<Side> {
    vec![Side::Left]
}

fn default_fix_uy() -> Vec<Side> {
    vec![Side::Bottom]
}

impl<T: Real> BoundaryConfig<T> {
    /// Robin exchange on the top side, `u_x = 0` on the left, `u_y = 0` at the bottom.
    pub fn new(gamma: T, p1: T) -> Self {
        Self {
            gamma,
            p1,
            robin_side: Side::Top,
            fix_ux: default_fix_ux(),
            fix_uy: default_fix_uy(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= T::zero()) {
            return Err(Error::InvalidArgument("Robin coefficient must be non-negative".into()));
        }
        Ok(())
    }
}

/// Coupled ordering `[p_0 … p_{n_v−1}, u_x0, u_y0, u_x1, u_y1, …]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    n_vertices: usize,
    /// Over the `2 n_v` displacement unknowns.
    constrained: Vec<bool>,
}

impl DofMap {
    pub fn new<T: Real>(mesh: &StructuredTriMesh<T>, bc: &BoundaryConfig<T>) -> Self {
        let nv = mesh.n_vertices();
        let mut constrained = vec![false; 2 * nv];
        for v in 0..nv {
            if bc.fix_ux.iter().any(|&s| mesh.on_side(v, s)) {
                constrained[2 * v] = true;
            }
            if bc.fix_uy.iter().any(|&s| mesh.on_side(v, s)) {
                constrained[2 * v + 1] = true;
            }
        }
        Self {
            n_vertices: nv,
            constrained,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_pressure(&self) -> usize {
        self.n_vertices
    }

    pub fn n_displacement(&self) -> usize {
        2 * self.n_vertices
    }

    pub fn n_total(&self) -> usize {
        3 * self.n_vertices
    }

    pub fn pressure(&self, v: usize) -> usize {
        v
    }

    /// Index within the displacement block.
    pub fn displacement_local(&self, v: usize, component: usize) -> usize {
        2 * v + component
    }

    /// Global index of a displacement component.
    pub fn displacement(&self, v: usize, component: usize) -> usize {
        self.n_vertices + 2 * v + component
    }

    /// Mask over displacement-block indices.
    pub fn displacement_constrained(&self) -> &[bool] {
        &self.constrained
    }

    pub fn is_constrained_global(&self, dof: usize) -> bool {
        dof >= self.n_vertices && self.constrained[dof - self.n_vertices]
    }

    /// Mask over all coupled unknowns.
    pub fn constrained_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n_vertices];
        m.extend_from_slice(&self.constrained);
        m
    }

    /// Permutation to the vertex-interleaved ordering `(p, u_x, u_y)` per
    /// vertex, which gives the coupled matrix a narrow band.
    pub fn interleaved_of_coupled(&self) -> Vec<usize> {
        let nv = self.n_vertices;
        let mut perm = vec![0; 3 * nv];
        for v in 0..nv {
            perm[v] = 3 * v;
            perm[nv + 2 * v] = 3 * v + 1;
            perm[nv + 2 * v + 1] = 3 * v + 2;
        }
        perm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_for_small_mesh() {
        let m = StructuredTriMesh::new(2, 1.0f64).unwrap();
        assert_eq!(m.n_vertices(), 9);
        assert_eq!(m.n_triangles(), 8);
        let area: f64 = (0..8).map(|t| m.signed_area(t)).sum();
        assert!((area - 1.0).abs() < 1e-14);
        for s in Side::ALL {
            assert_eq!(m.boundary_edges().iter().filter(|(side, _)| *side == s).count(), 2);
        }
    }

    #[test]
    fn coupled_dof_count_at_128() {
        let m = StructuredTriMesh::new(128, 10.0f64).unwrap();
        let d = DofMap::new(&m, &BoundaryConfig::new(1e6, 0.0));
        assert_eq!(d.n_total(), 49_923);
    }

    #[test]
    fn triangles_positively_oriented_and_cover_domain() {
        let m = StructuredTriMesh::new(7, 3.5f64).unwrap();
        let mut area = 0.0;
        for t in 0..m.n_triangles() {
            let a = m.signed_area(t);
            assert!(a > 0.0);
            area += a;
        }
        assert!((area - 3.5 * 3.5).abs() < 1e-12 * 3.5 * 3.5);
    }

    #[test]
    fn boundary_edges_lie_on_their_side() {
        let m = StructuredTriMesh::new(4, 1.0f64).unwrap();
        assert_eq!(m.boundary_edges().len(), 16);
        for (side, [a, b]) in m.boundary_edges() {
            assert!(m.on_side(*a, *side) && m.on_side(*b, *side));
        }
    }

    #[test]
    fn hat_gradients_sum_to_zero() {
        let m = StructuredTriMesh::new(3, 2.0f64).unwrap();
        for t in 0..m.n_triangles() {
            let g = m.hat_gradients(t);
            for d in 0..2 {
                assert!((g[0][d] + g[1][d] + g[2][d]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constraints_follow_sides() {
        let m = StructuredTriMesh::new(2, 1.0f64).unwrap();
        let d = DofMap::new(&m, &BoundaryConfig::new(0.0, 0.0));
        let c = d.displacement_constrained();
        // u_x fixed on the left column, u_y on the bottom row
        assert_eq!(c.iter().filter(|&&x| x).count(), 6);
        assert!(c[0] && c[1]);
        assert!(!c[2 * 4] && !c[2 * 4 + 1]);
        assert!(d.is_constrained_global(d.displacement(3, 0)));
        assert!(!d.is_constrained_global(d.pressure(0)));
    }

    #[test]
    fn rejects_degenerate_mesh() {
        assert!(StructuredTriMesh::new(1, 1.0f64).is_err());
    }
}
