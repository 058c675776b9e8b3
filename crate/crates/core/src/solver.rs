//! Linear-solver interface shared by the time integrators, a banded direct
//! solver for the coupled system, and setup/solve instrumentation.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{BandedLu, SparseMatrix};
use crate::scalar::Real;

/// Result of one linear solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    pub relative_residual: T,
}

/// A solver bound to one fixed matrix.
pub trait LinearSolver<T: Real>: Send + Sync {
    fn dim(&self) -> usize;
    fn solve(&self, b: &[T]) -> Result<SolveOutcome<T>>;
}

/// Counts of expensive setup events and solves.
#[derive(Debug, Default)]
pub struct Instrumentation {
    system_assemblies: AtomicUsize,
    coarse_factorizations: AtomicUsize,
    vanka_setups: AtomicUsize,
    direct_factorizations: AtomicUsize,
    solves: AtomicUsize,
}

/// Plain snapshot of [`Instrumentation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CounterSnapshot {
    pub system_assemblies: usize,
    pub coarse_factorizations: usize,
    pub vanka_setups: usize,
    pub direct_factorizations: usize,
    pub solves: usize,
}

impl Instrumentation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_system_assembly(&self) {
        self.system_assemblies.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_coarse_factorization(&self) {
        self.coarse_factorizations.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_vanka_setup(&self) {
        self.vanka_setups.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_direct_factorization(&self) {
        self.direct_factorizations.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_solve(&self) {
        self.solves.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> CounterSnapshot {
        CounterSnapshot {
            system_assemblies: self.system_assemblies.load(Ordering::Relaxed),
            coarse_factorizations: self.coarse_factorizations.load(Ordering::Relaxed),
            vanka_setups: self.vanka_setups.load(Ordering::Relaxed),
            direct_factorizations: self.direct_factorizations.load(Ordering::Relaxed),
            solves: self.solves.load(Ordering::Relaxed),
        }
    }
}

/// Banded LU of a symmetrically permuted matrix (e.g. the vertex-interleaved
/// ordering of the coupled system).
#[derive(Debug, Clone)]
pub struct DirectSolver<T> {
    lu: BandedLu<T>,
    new_of_old: Vec<usize>,
}

impl<T: Real> DirectSolver<T> {
    pub fn factor(a: &SparseMatrix<T>, new_of_old: Vec<usize>) -> Result<Self> {
        if new_of_old.len() != a.n_rows() {
            return Err(Error::DimensionMismatch {
                context: "direct solver permutation",
                expected: a.n_rows(),
                got: new_of_old.len(),
            });
        }
        let permuted = a.permute_symmetric(&new_of_old)?;
        Ok(Self {
            lu: BandedLu::factor(&permuted)?,
            new_of_old,
        })
    }

    pub fn identity_order(a: &SparseMatrix<T>) -> Result<Self> {
        Self::factor(a, (0..a.n_rows()).collect())
    }

    pub fn solve_vec(&self, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.new_of_old.len() {
            return Err(Error::DimensionMismatch {
                context: "direct solve",
                expected: self.new_of_old.len(),
                got: b.len(),
            });
        }
        let mut y = vec![T::zero(); b.len()];
        for (i, &k) in self.new_of_old.iter().enumerate() {
            y[k] = b[i];
        }
        self.lu.solve_in_place(&mut y);
        Ok(self.new_of_old.iter().map(|&k| y[k]).collect())
    }
}

impl<T: Real> LinearSolver<T> for DirectSolver<T> {
    fn dim(&self) -> usize {
        self.new_of_old.len()
    }

    fn solve(&self, b: &[T]) -> Result<SolveOutcome<T>> {
        Ok(SolveOutcome {
            x: self.solve_vec(b)?,
            iterations: 1,
            converged: true,
            relative_residual: T::zero(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TripletBuilder;

    #[test]
    fn permuted_direct_solve_round_trip() {
        let n = 12;
        let mut t = TripletBuilder::new(n, n);
        for i in 0..n {
            t.push(i, i, 4.0 + i as f64);
            t.push(i, (i + 5) % n, -1.0);
            t.push((i + 5) % n, i, -0.5);
        }
        let a = t.finalize();
        let perm: Vec<usize> = (0..n).map(|i| (7 * i) % n).collect();
        let s = DirectSolver::factor(&a, perm).unwrap();
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
        let x = s.solve(&b).unwrap().x;
        let r = a.spmv(&x).unwrap();
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn counters_accumulate() {
        let c = Instrumentation::new();
        c.record_solve();
        c.record_solve();
        c.record_vanka_setup();
        let s = c.snapshot();
        assert_eq!(s.solves, 2);
        assert_eq!(s.vanka_setups, 1);
        assert_eq!(s.coarse_factorizations, 0);
    }
}
