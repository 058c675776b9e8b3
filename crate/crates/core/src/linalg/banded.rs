//! Banded factorizations for the fine-level systems at desk scale.

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::scalar::Real;

/// LU factorization of a banded matrix with row equilibration and partial
/// pivoting. Rows are stored with `2·kl + ku + 1` slots to hold pivot fill.
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
    row_scale: Vec<T>,
    pivots: Vec<usize>,
}

impl<T: Real> BandedLu<T> {
    pub fn factor(a: &SparseMatrix<T>) -> Result<Self> {
        let n = a.n_rows();
        if a.n_cols() != n {
            return Err(Error::DimensionMismatch {
                context: "banded LU (square)",
                expected: n,
                got: a.n_cols(),
            });
        }
        let (kl, ku) = a.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut data = vec![T::zero(); n * width];
        let mut row_scale = vec![T::one(); n];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            let m = vals.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            if m == T::zero() {
                return Err(Error::Singular { pivot: i });
            }
            let s = T::one() / m;
            row_scale[i] = s;
            for (&j, &v) in cols.iter().zip(vals) {
                data[i * width + j + kl - i] = v * s;
            }
        }
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            data,
            row_scale,
            pivots: vec![0; n],
        };
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + j + self.kl - i
    }

    fn eliminate(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let tiny = T::epsilon() * T::from_count(16 * n.max(1));
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= tiny {
                return Err(Error::Singular { pivot: k });
            }
            self.pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            let urow_start = self.idx(k, k + 1);
            let len = last_col - k;
            for i in k + 1..=last_row {
                let lik_pos = self.idx(i, k);
                let l = self.data[lik_pos] / pivot;
                self.data[lik_pos] = l;
                if l == T::zero() {
                    continue;
                }
                let row_start = self.idx(i, k + 1);
                // row i is stored after row k, so the pivot row lies in `h`
                let (h, t) = self.data.split_at_mut(row_start);
                let head = &h[urow_start..urow_start + len];
                let tail = &mut t[..len];
                for (t, &u) in tail.iter_mut().zip(head) {
                    *t -= l * u;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "banded LU solve",
                expected: self.n,
                got: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for (xi, s) in x.iter_mut().zip(&self.row_scale) {
            *xi *= *s;
        }
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk == T::zero() {
                continue;
            }
            for i in k + 1..=(k + kl).min(n.saturating_sub(1)) {
                x[i] -= self.data[self.idx(i, k)] * xk;
            }
        }
        for i in (0..n).rev() {
            let last = (i + kl + ku).min(n - 1);
            let base = self.idx(i, i);
            let mut acc = x[i];
            for (off, xj) in x[i + 1..=last].iter().enumerate() {
                acc -= self.data[base + 1 + off] * *xj;
            }
            x[i] = acc / self.data[base];
        }
    }
}

/// Attempts a banded Cholesky factorization of `a − shift·I` (lower band of
/// the symmetric part is used). Returns `false` as soon as a non-positive pivot
/// appears, i.e. when the shifted matrix is not positive definite.
pub fn shifted_is_positive_definite<T: Real>(a: &SparseMatrix<T>, shift: T) -> bool {
    let n = a.n_rows();
    let (kl, _) = a.bandwidths();
    let w = kl + 1;
    // row i stores columns i−kl..=i
    let mut l = vec![T::zero(); n * w];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j <= i && i - j <= kl {
                l[i * w + j + kl - i] = v;
            }
        }
        l[i * w + kl] -= shift;
    }
    for i in 0..n {
        let j0 = i.saturating_sub(kl);
        for j in j0..=i {
            let mut s = l[i * w + j + kl - i];
            let k0 = j0.max(j.saturating_sub(kl));
            for k in k0..j {
                s -= l[i * w + k + kl - i] * l[j * w + k + kl - j];
            }
            if j == i {
                if !(s > T::zero()) {
                    return false;
                }
                l[i * w + kl] = s.sqrt();
            } else {
                l[i * w + j + kl - i] = s / l[j * w + kl];
            }
        }
    }
    true
}

/// Smallest eigenvalue of a symmetric sparse matrix by bisection on positive
/// definiteness of the shifted matrix, to absolute accuracy `tol`.
pub fn smallest_eigenvalue_bisection<T: Real>(a: &SparseMatrix<T>, tol: T) -> T {
    let n = a.n_rows();
    if n == 0 {
        return T::zero();
    }
    // Gershgorin interval
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let mut d = T::zero();
        let mut r = T::zero();
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                d = v;
            } else {
                r += v.abs();
            }
        }
        lo = lo.min(d - r);
        hi = hi.max(d + r);
    }
    let tol = tol.max(T::epsilon() * (hi.abs().max(lo.abs())));
    lo -= tol;
    while hi - lo > tol {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if shifted_is_positive_definite(a, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    T::lit(0.5) * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DenseMatrix, TripletBuilder};

    fn tridiag(n: usize, sub: f64, diag: f64, sup: f64) -> SparseMatrix<f64> {
        let mut t = TripletBuilder::new(n, n);
        for i in 0..n {
            t.push(i, i, diag);
            if i > 0 {
                t.push(i, i - 1, sub);
            }
            if i + 1 < n {
                t.push(i, i + 1, sup);
            }
        }
        t.finalize()
    }

    #[test]
    fn solves_cramer_example() {
        let a = SparseMatrix::<f64>::from_dense(&DenseMatrix::from_rows(&[
            vec![4.0, 1.0],
            vec![1.0, 3.0],
        ]));
        let x = BandedLu::factor(&a).unwrap().solve(&[1.0, 2.0]).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-15);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = SparseMatrix::<f64>::from_dense(&DenseMatrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 2.0],
            vec![0.0, 3.0, 1.0],
        ]));
        let b = [1.0, 2.0, 3.0];
        let x = BandedLu::factor(&a).unwrap().solve(&b).unwrap();
        let r = a.spmv(&x).unwrap();
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn nonsymmetric_band_matches_dense_lu() {
        let n = 40;
        let mut t = TripletBuilder::new(n, n);
        for i in 0..n {
            t.push(i, i, 0.1 + (i % 3) as f64);
            if i >= 3 {
                t.push(i, i - 3, 1.0 + 0.01 * i as f64);
            }
            if i + 2 < n {
                t.push(i, i + 2, -2.0);
            }
        }
        let a = t.finalize();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = BandedLu::factor(&a).unwrap().solve(&b).unwrap();
        let y = a.to_dense().lu().unwrap().solve(&b).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((xi - yi).abs() < 1e-10 * (1.0 + yi.abs()));
        }
    }

    #[test]
    fn singular_is_reported() {
        let a = SparseMatrix::<f64>::from_dense(&DenseMatrix::from_rows(&[
            vec![1.0, 2.0],
            vec![2.0, 4.0],
        ]));
        assert!(matches!(BandedLu::factor(&a), Err(Error::Singular { .. })));
    }

    #[test]
    fn bisection_finds_laplacian_minimum() {
        let n = 30;
        let a = tridiag(n, -1.0, 2.0, -1.0);
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        let l = smallest_eigenvalue_bisection(&a, 1e-13);
        assert!((l - exact).abs() < 1e-11);
        assert!(shifted_is_positive_definite(&a, 0.0));
        assert!(!shifted_is_positive_definite(&a, exact + 1e-6));
    }
}
