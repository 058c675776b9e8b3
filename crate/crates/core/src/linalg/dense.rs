use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![T::zero(); n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            assert_eq!(r.len(), n_cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { n_rows, n_cols, data }
    }

    pub fn from_row_major(n_rows: usize, n_cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                context: "dense data",
                expected: n_rows * n_cols,
                got: data.len(),
            });
        }
        Ok(Self { n_rows, n_cols, data })
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n_rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                context: "dense matvec",
                expected: self.n_cols,
                got: x.len(),
            });
        }
        Ok((0..self.n_rows)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch {
                context: "dense product",
                expected: self.n_cols,
                got: other.n_rows,
            });
        }
        let mut out = Self::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let src = other.row(k);
                let dst = out.row_mut(i);
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m })
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// `(self + selfᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        let mut s = self.clone();
        let half = T::lit(0.5);
        for i in 0..self.n_rows {
            for j in 0..i {
                let v = half * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    pub fn lu(&self) -> Result<DenseLu<T>> {
        DenseLu::factor(self)
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n_cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n_cols + j]
    }
}

/// LU factorization with row and column equilibration and partial pivoting.
///
/// Rows, then columns, are scaled to unit max-norm before elimination, which
/// makes the singularity test meaningful for the badly scaled coupled systems
/// (Robin penalty rows next to mass rows next to elasticity rows, pressure
/// unknowns in Pa next to displacements in m).
#[derive(Debug, Clone)]
pub struct DenseLu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
    row_scale: Vec<T>,
    col_scale: Vec<T>,
}

impl<T: Real> DenseLu<T> {
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                context: "LU of non-square matrix",
                expected: a.n_rows(),
                got: a.n_cols(),
            });
        }
        let n = a.n_rows();
        let mut lu = a.data.clone();
        let mut row_scale = vec![T::one(); n];
        for i in 0..n {
            let m = lu[i * n..(i + 1) * n]
                .iter()
                .fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m });
            if m == T::zero() || !m.is_finite() {
                return Err(Error::Singular { pivot: i });
            }
            let s = T::one() / m;
            row_scale[i] = s;
            lu[i * n..(i + 1) * n].iter_mut().for_each(|v| *v *= s);
        }
        let mut col_scale = vec![T::zero(); n];
        for i in 0..n {
            for (c, &v) in col_scale.iter_mut().zip(&lu[i * n..(i + 1) * n]) {
                if v.abs() > *c {
                    *c = v.abs();
                }
            }
        }
        if let Some(j) = col_scale.iter().position(|&c| c == T::zero()) {
            return Err(Error::Singular { pivot: j });
        }
        col_scale.iter_mut().for_each(|c| *c = T::one() / *c);
        for i in 0..n {
            for (v, &c) in lu[i * n..(i + 1) * n].iter_mut().zip(&col_scale) {
                *v *= c;
            }
        }
        let tiny = T::epsilon() * T::from_count(n.max(1)) * T::lit(16.0);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in k + 1..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= tiny || !best.is_finite() {
                return Err(Error::Singular { pivot: k });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                row_scale.swap(k, p);
            }
            let pivot = lu[k * n + k];
            let (upper, lower) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n..(k + 1) * n];
            for i in 0..n - k - 1 {
                let row = &mut lower[i * n..(i + 1) * n];
                let l = row[k] / pivot;
                row[k] = l;
                if l != T::zero() {
                    for j in k + 1..n {
                        row[j] -= l * pivot_row[j];
                    }
                }
            }
        }
        Ok(Self {
            n,
            lu,
            perm,
            row_scale,
            col_scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "LU solve",
                expected: self.n,
                got: b.len(),
            });
        }
        let mut x: Vec<T> = self
            .perm
            .iter()
            .zip(&self.row_scale)
            .map(|(&p, &s)| b[p] * s)
            .collect();
        self.solve_permuted_in_place(&mut x);
        Ok(x)
    }

    /// Solves in place; `work` must have length `dim()`.
    pub fn solve_into(&self, b: &[T], x: &mut [T]) {
        for (k, xi) in x.iter_mut().enumerate() {
            *xi = b[self.perm[k]] * self.row_scale[k];
        }
        self.solve_permuted_in_place(x);
    }

    fn solve_permuted_in_place(&self, x: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let mut acc = x[i];
            for (j, &l) in row.iter().enumerate() {
                acc -= l * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= row[j] * x[j];
            }
            x[i] = acc / row[i];
        }
        for (xi, &c) in x.iter_mut().zip(&self.col_scale) {
            *xi *= c;
        }
    }
}

/// Cholesky factor `L` of a symmetric positive definite matrix (`A = L Lᵀ`).
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                context: "Cholesky of non-square matrix",
                expected: a.n_rows(),
                got: a.n_cols(),
            });
        }
        let n = a.n_rows();
        let mut l = vec![T::zero(); n * n];
        let scale = (0..n).fold(T::zero(), |m, i| m.max(a[(i, i)].abs()));
        let tiny = scale * T::epsilon() * T::from_count(n.max(1));
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[(i, j)];
                let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                for (a, b) in ri.iter().zip(rj) {
                    s -= *a * *b;
                }
                if i == j {
                    if s <= tiny || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { row: i });
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn l(&self, i: usize, j: usize) -> T {
        self.l[i * self.n + j]
    }

    /// Solves `L y = b` in place.
    pub fn forward_in_place(&self, y: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let mut acc = y[i];
            for (j, &v) in row.iter().enumerate() {
                acc -= v * y[j];
            }
            y[i] = acc / self.l[i * n + i];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn backward_transposed_in_place(&self, x: &mut [T]) {
        let n = self.n;
        for i in (0..n).rev() {
            let xi = x[i] / self.l[i * n + i];
            x[i] = xi;
            for j in 0..i {
                x[j] -= self.l[i * n + j] * xi;
            }
        }
    }

    /// `L⁻¹ M`, computed row by row.
    pub fn solve_lower_matrix(&self, m: &DenseMatrix<T>) -> DenseMatrix<T> {
        let n = self.n;
        let c = m.n_cols();
        let mut y = m.clone();
        for i in 0..n {
            for j in 0..i {
                let lij = self.l[i * n + j];
                if lij == T::zero() {
                    continue;
                }
                let (done, rest) = y.data.split_at_mut(i * c);
                let src = &done[j * c..(j + 1) * c];
                let dst = &mut rest[..c];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d -= lij * s;
                }
            }
            let inv = T::one() / self.l[i * n + i];
            y.row_mut(i).iter_mut().for_each(|v| *v *= inv);
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solve_trivial_systems() {
        let lu = DenseMatrix::<f64>::identity(2).lu().unwrap();
        assert_eq!(lu.solve(&[4.0, 5.0]).unwrap(), vec![4.0, 5.0]);
        let lu = DenseMatrix::from_diagonal(&[2.0, 4.0]).lu().unwrap();
        assert_eq!(lu.solve(&[2.0, 4.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn solve_cramer_example() {
        // [[4,1],[1,3]] x = (1,2): det = 11, x = (1/11, 7/11)
        let a = DenseMatrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let x = a.lu().unwrap().solve(&[1.0, 2.0]).unwrap();
        assert_relative_eq!(x[0], 1.0 / 11.0, max_relative = 1e-14);
        assert_relative_eq!(x[1], 7.0 / 11.0, max_relative = 1e-14);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(a.lu(), Err(Error::Singular { .. })));
        let z = DenseMatrix::<f64>::zeros(2, 2);
        assert!(matches!(z.lu(), Err(Error::Singular { pivot: 0 })));
    }

    #[test]
    fn badly_scaled_rows_are_not_singular() {
        let a = DenseMatrix::from_rows(&[vec![1e9, 1e-3], vec![1e-12, 3e-9]]);
        let x = a.lu().unwrap().solve(&[1e9, 3e-9]).unwrap();
        let r = a.matvec(&x).unwrap();
        assert_relative_eq!(r[0], 1e9, max_relative = 1e-13);
        assert_relative_eq!(r[1], 3e-9, max_relative = 1e-10);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(
            Cholesky::factor(&a),
            Err(Error::NotPositiveDefinite { row: 1 })
        ));
    }

    #[test]
    fn cholesky_triangular_solves() {
        let a = DenseMatrix::from_rows(&[
            vec![4.0, 2.0, 0.4],
            vec![2.0, 5.0, 1.0],
            vec![0.4, 1.0, 3.0],
        ]);
        let c = Cholesky::factor(&a).unwrap();
        let b = [1.0, -2.0, 0.5];
        let mut x = b.to_vec();
        c.forward_in_place(&mut x);
        c.backward_transposed_in_place(&mut x);
        let r = a.matvec(&x).unwrap();
        for (ri, bi) in r.iter().zip(b) {
            assert_relative_eq!(*ri, bi, epsilon = 1e-14);
        }
        let linv_a = c.solve_lower_matrix(&a);
        // L (L⁻¹ A) = A
        let mut l = DenseMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..=i {
                l[(i, j)] = c.l(i, j);
            }
        }
        let back = l.matmul(&linv_a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(back[(i, j)], a[(i, j)], epsilon = 1e-14);
            }
        }
    }
}
