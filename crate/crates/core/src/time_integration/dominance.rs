//! Runnable check of the stability condition of the splitting: the symmetric
//! part of `(1 − ρ) X^lin − X^nl` must be positive semidefinite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{shifted_is_positive_definite, smallest_eigenvalue_bisection, SparseMatrix};
use crate::problem::Problem;
use crate::scalar::Real;

use super::SplitOperators;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub block: String,
    pub passed: bool,
    /// Smallest eigenvalue of the symmetrized difference.
    pub margin: f64,
    /// `max |X^lin|`, the reference for the pass tolerance.
    pub scale: f64,
}

/// Informational size ratio `max |X^nl| / max |X^lin|` of a coupling block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRatio {
    pub block: String,
    pub ratio: f64,
}

/// Passes iff `λ_min(sym((1 − ρ) lin − nl)) ≥ −1e−10 · max |lin|`.
pub fn verify_splitting_dominance<T: Real>(
    block: &str,
    lin: &SparseMatrix<T>,
    nl: &SparseMatrix<T>,
    rho: T,
) -> Result<DominanceReport> {
    if !(rho > T::zero() && rho < T::one()) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1), got {rho}")));
    }
    if lin.n_rows() != nl.n_rows() || lin.n_cols() != nl.n_cols() || lin.n_rows() != lin.n_cols() {
        return Err(Error::DimensionMismatch {
            context: "dominance blocks",
            expected: lin.n_rows(),
            got: nl.n_rows(),
        });
    }
    let x = lin.linear_combination(T::one() - rho, nl, -T::one())?;
    let sym = x.linear_combination(T::lit(0.5), &x.transpose(), T::lit(0.5))?;
    let scale = lin.max_abs();
    let tol = T::lit(1e-10) * scale;
    let passed = shifted_is_positive_definite(&sym, -tol);
    let margin = smallest_eigenvalue_bisection(&sym, T::lit(1e-13) * scale.max(sym.max_abs()));
    Ok(DominanceReport {
        block: block.to_string(),
        passed,
        margin: margin.as_f64(),
        scale: scale.as_f64(),
    })
}

/// Checks `M`, `A` and `K` at the pressure state `p`.
pub fn verify_state_dominance<T: Real>(
    problem: &Problem<T>,
    split: &SplitOperators<T>,
    p: &[T],
    rho: T,
) -> Result<Vec<DominanceReport>> {
    let nl = split.residual_blocks(problem, p)?;
    let lin = &split.linear;
    Ok(vec![
        verify_splitting_dominance("M", &lin.m, &nl.m, rho)?,
        verify_splitting_dominance("A", &lin.a, &nl.a, rho)?,
        verify_splitting_dominance("K", &lin.k, &nl.k, rho)?,
    ])
}

/// Size ratios of the non-symmetric coupling blocks at `p`.
pub fn coupling_ratios<T: Real>(
    problem: &Problem<T>,
    split: &SplitOperators<T>,
    p: &[T],
) -> Result<Vec<CouplingRatio>> {
    let nl = split.residual_blocks(problem, p)?;
    let ratio = |a: &SparseMatrix<T>, b: &SparseMatrix<T>| {
        let d = b.max_abs();
        if d == T::zero() {
            0.0
        } else {
            (a.max_abs() / d).as_f64()
        }
    };
    Ok(vec![
        CouplingRatio {
            block: "D".into(),
            ratio: ratio(&nl.d, &split.linear.d),
        },
        CouplingRatio {
            block: "G".into(),
            ratio: ratio(&nl.g, &split.linear.g),
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_residual_always_passes() {
        let lin = SparseMatrix::<f64>::identity(4);
        let nl = SparseMatrix::zeros(4, 4);
        for rho in [0.05, 0.5, 0.95] {
            assert!(verify_splitting_dominance("X", &lin, &nl, rho).unwrap().passed);
        }
    }

    #[test]
    fn diagonal_margins() {
        let lin = SparseMatrix::<f64>::identity(3);
        let nl = SparseMatrix::from_diagonal(&[0.5; 3]);
        let ok = verify_splitting_dominance("X", &lin, &nl, 0.4).unwrap();
        assert!(ok.passed);
        assert!((ok.margin - 0.1).abs() < 1e-12);
        let bad = verify_splitting_dominance("X", &lin, &nl, 0.6).unwrap();
        assert!(!bad.passed);
        assert!((bad.margin + 0.1).abs() < 1e-12);
    }

    #[test]
    fn rho_outside_unit_interval_is_rejected() {
        let lin = SparseMatrix::<f64>::identity(2);
        assert!(verify_splitting_dominance("X", &lin, &lin, 1.0).is_err());
    }
}
