//! Dense symmetric (generalized) eigensolver for the small patch problems.
//!
//! Pipeline: Cholesky reduction `C = L⁻¹ A L⁻ᵀ` (generalized case only),
//! Householder tridiagonalization, implicit QL for the eigenvalues, inverse
//! iteration for the requested eigenvectors and back-transformation.

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, DenseMatrix};
use crate::rng::SplitMix64;
use crate::scalar::Real;

/// Eigenvalues in ascending order with matching eigenvectors stored as columns.
///
/// Vectors are normalized in the metric of the problem (`vᵀ S v = 1`) and the
/// first entry of largest magnitude is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs<T> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: DenseMatrix<T>,
}

impl<T: Real> EigenPairs<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, j: usize) -> Vec<T> {
        self.eigenvectors.column(j)
    }
}

/// Householder reduction `A = Q T Qᵀ`.
struct Tridiagonal<T> {
    diag: Vec<T>,
    off: Vec<T>,
    /// Reflector `k` acts on indices `k+1..n`: `H = I − β v vᵀ`.
    reflectors: Vec<(T, Vec<T>)>,
}

fn tridiagonalize<T: Real>(a: &DenseMatrix<T>) -> Tridiagonal<T> {
    let n = a.n_rows();
    let mut w = a.as_slice().to_vec();
    let mut diag = vec![T::zero(); n];
    let mut off = vec![T::zero(); n.saturating_sub(1)];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    let mut p = vec![T::zero(); n];
    for k in 0..n.saturating_sub(2) {
        diag[k] = w[k * n + k];
        let m = n - k - 1;
        let x: Vec<T> = w[k * n + k + 1..(k + 1) * n].to_vec();
        let tail: T = x[1..].iter().map(|&v| v * v).sum();
        if tail == T::zero() {
            off[k] = x[0];
            reflectors.push((T::zero(), Vec::new()));
            continue;
        }
        let norm = (x[0] * x[0] + tail).sqrt();
        let alpha = if x[0] >= T::zero() { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vtv: T = v.iter().map(|&t| t * t).sum();
        let beta = T::lit(2.0) / vtv;
        off[k] = alpha;
        // p = β B v on the trailing block B = w[k+1.., k+1..]
        let base = k + 1;
        for i in 0..m {
            let row = &w[(base + i) * n + base..(base + i) * n + n];
            let mut acc = T::zero();
            for (bij, vj) in row.iter().zip(&v) {
                acc += *bij * *vj;
            }
            p[i] = beta * acc;
        }
        let ptv: T = p[..m].iter().zip(&v).map(|(&a, &b)| a * b).sum();
        let kcoef = T::lit(0.5) * beta * ptv;
        for i in 0..m {
            p[i] -= kcoef * v[i];
        }
        for i in 0..m {
            let (vi, qi) = (v[i], p[i]);
            let row = &mut w[(base + i) * n + base..(base + i) * n + n];
            for j in 0..m {
                row[j] -= vi * p[j] + qi * v[j];
            }
        }
        reflectors.push((beta, v));
    }
    if n >= 2 {
        diag[n - 2] = w[(n - 2) * n + n - 2];
        off[n - 2] = w[(n - 2) * n + n - 1];
    }
    if n >= 1 {
        diag[n - 1] = w[(n - 1) * n + n - 1];
    }
    Tridiagonal {
        diag,
        off,
        reflectors,
    }
}

impl<T: Real> Tridiagonal<T> {
    /// `x ← Q x`.
    fn apply_q(&self, x: &mut [T]) {
        for (k, (beta, v)) in self.reflectors.iter().enumerate().rev() {
            if *beta == T::zero() {
                continue;
            }
            let seg = &mut x[k + 1..];
            let s: T = seg.iter().zip(v).map(|(&a, &b)| a * b).sum();
            let f = *beta * s;
            for (xi, vi) in seg.iter_mut().zip(v) {
                *xi -= f * *vi;
            }
        }
    }

    fn norm_inf(&self) -> T {
        let n = self.diag.len();
        let mut m = T::zero();
        for i in 0..n {
            let mut r = self.diag[i].abs();
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            m = m.max(r);
        }
        m
    }
}

/// Implicit QL iteration; returns eigenvalues in ascending order.
fn tridiagonal_eigenvalues<T: Real>(diag: &[T], off: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![T::zero(); n];
    e[..off.len()].copy_from_slice(off);
    let eps = T::epsilon();
    let two = T::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigenNoConvergence(format!(
                    "QL iteration stalled at index {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let signed_r = if g >= T::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + signed_r);
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(d)
}

/// Pivoted LU of `T − σI` for inverse iteration.
struct ShiftedTridiagLu<T> {
    dl: Vec<T>,
    dd: Vec<T>,
    du: Vec<T>,
    du2: Vec<T>,
    swapped: Vec<bool>,
}

impl<T: Real> ShiftedTridiagLu<T> {
    fn new(diag: &[T], off: &[T], sigma: T, tiny: T) -> Self {
        let n = diag.len();
        let mut dl = off.to_vec();
        let mut du = off.to_vec();
        let mut dd: Vec<T> = diag.iter().map(|&d| d - sigma).collect();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if dd[i].abs() >= dl[i].abs() {
                if dd[i] == T::zero() {
                    dd[i] = tiny;
                }
                let fact = dl[i] / dd[i];
                dl[i] = fact;
                dd[i + 1] -= fact * du[i];
            } else {
                let fact = dd[i] / dl[i];
                dd[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = dd[i + 1];
                dd[i + 1] = temp - fact * dd[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        for v in dd.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < T::zero() { -tiny } else { tiny };
            }
        }
        Self {
            dl,
            dd,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [T]) {
        let n = self.dd.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let t = b[i];
                b[i] = b[i + 1];
                b[i + 1] = t - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        if n == 0 {
            return;
        }
        b[n - 1] /= self.dd[n - 1];
        if n >= 2 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.dd[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.dd[i];
        }
    }
}

fn normalize<T: Real>(x: &mut [T]) -> T {
    let nrm = x.iter().map(|&v| v * v).sum::<T>().sqrt();
    if nrm > T::zero() {
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    nrm
}

/// Eigenvectors of the tridiagonal matrix for the given (ascending) eigenvalues.
fn tridiagonal_eigenvectors<T: Real>(tri: &Tridiagonal<T>, values: &[T]) -> Vec<Vec<T>> {
    let n = tri.diag.len();
    let tnorm = tri.norm_inf().max(T::min_positive_value());
    let tiny = T::epsilon() * tnorm;
    let cluster_tol = T::lit(1e-3) * tnorm;
    let mut vectors: Vec<Vec<T>> = Vec::with_capacity(values.len());
    let mut cluster_start = 0;
    for (j, &lambda) in values.iter().enumerate() {
        if j > 0 && (lambda - values[j - 1]).abs() > cluster_tol {
            cluster_start = j;
        }
        let lu = ShiftedTridiagLu::new(&tri.diag, &tri.off, lambda, tiny);
        let mut rng = SplitMix64::new(0x5EED_0000 + j as u64);
        let mut x: Vec<T> = (0..n).map(|_| T::lit(rng.next_f64() * 2.0 - 1.0)).collect();
        for _ in 0..4 {
            orthogonalize(&mut x, &vectors[cluster_start..j]);
            normalize(&mut x);
            lu.solve(&mut x);
            normalize(&mut x);
        }
        orthogonalize(&mut x, &vectors[cluster_start..j]);
        normalize(&mut x);
        vectors.push(x);
    }
    vectors
}

fn orthogonalize<T: Real>(x: &mut [T], basis: &[Vec<T>]) {
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for q in basis {
            let c: T = x.iter().zip(q).map(|(&a, &b)| a * b).sum();
            for (xi, qi) in x.iter_mut().zip(q) {
                *xi -= c * *qi;
            }
        }
    }
}

fn fix_sign<T: Real>(v: &mut [T]) {
    let max = v.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if max == T::zero() {
        return;
    }
    let threshold = max * (T::one() - T::lit(1e-8));
    if let Some(&lead) = v.iter().find(|x| x.abs() >= threshold) {
        if lead < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn check_symmetric_square<T: Real>(a: &DenseMatrix<T>, what: &'static str) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: what,
            expected: a.n_rows(),
            got: a.n_cols(),
        });
    }
    Ok(())
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues<T: Real>(a: &DenseMatrix<T>) -> Result<Vec<T>> {
    check_symmetric_square(a, "symmetric eigenvalues")?;
    let tri = tridiagonalize(&a.symmetrized());
    tridiagonal_eigenvalues(&tri.diag, &tri.off)
}

/// The `count` smallest eigenpairs of a symmetric matrix.
pub fn symmetric_eig<T: Real>(a: &DenseMatrix<T>, count: usize) -> Result<EigenPairs<T>> {
    check_symmetric_square(a, "symmetric eigenproblem")?;
    let n = a.n_rows();
    if count > n {
        return Err(Error::InvalidArgument(format!(
            "requested {count} eigenpairs of a {n}×{n} matrix"
        )));
    }
    let tri = tridiagonalize(&a.symmetrized());
    let all = tridiagonal_eigenvalues(&tri.diag, &tri.off)?;
    let values = all[..count].to_vec();
    let vectors = tridiagonal_eigenvectors(&tri, &values);
    let mut out = DenseMatrix::zeros(n, count);
    for (j, mut y) in vectors.into_iter().enumerate() {
        tri.apply_q(&mut y);
        normalize(&mut y);
        fix_sign(&mut y);
        for i in 0..n {
            out[(i, j)] = y[i];
        }
    }
    Ok(EigenPairs {
        eigenvalues: values,
        eigenvectors: out,
    })
}

/// The `count` smallest eigenpairs of `a v = λ s v` with `s` positive definite.
pub fn generalized_sym_eig<T: Real>(
    a: &DenseMatrix<T>,
    s: &DenseMatrix<T>,
    count: usize,
) -> Result<EigenPairs<T>> {
    check_symmetric_square(a, "generalized eigenproblem (a)")?;
    check_symmetric_square(s, "generalized eigenproblem (s)")?;
    let n = a.n_rows();
    if s.n_rows() != n {
        return Err(Error::DimensionMismatch {
            context: "generalized eigenproblem",
            expected: n,
            got: s.n_rows(),
        });
    }
    if count > n {
        return Err(Error::InvalidArgument(format!(
            "requested {count} eigenpairs of a {n}×{n} pencil"
        )));
    }
    let chol = Cholesky::factor(&s.symmetrized())?;
    // C = L⁻¹ A L⁻ᵀ = L⁻¹ (L⁻¹ A)ᵀ
    let y = chol.solve_lower_matrix(&a.symmetrized());
    let c = chol.solve_lower_matrix(&y.transpose()).symmetrized();
    let tri = tridiagonalize(&c);
    let all = tridiagonal_eigenvalues(&tri.diag, &tri.off)?;
    let values = all[..count].to_vec();
    let vectors = tridiagonal_eigenvectors(&tri, &values);
    let mut out = DenseMatrix::zeros(n, count);
    for (j, mut z) in vectors.into_iter().enumerate() {
        tri.apply_q(&mut z);
        normalize(&mut z);
        chol.backward_transposed_in_place(&mut z);
        fix_sign(&mut z);
        for i in 0..n {
            out[(i, j)] = z[i];
        }
    }
    Ok(EigenPairs {
        eigenvalues: values,
        eigenvectors: out,
    })
}
