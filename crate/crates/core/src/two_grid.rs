//! Two-grid cycle (Galerkin coarse correction followed by post-smoothing)
//! used as a stationary solver for the fixed implicit-explicit matrix.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coarse_space::{CoarseOperator, Prolongation, SpectralBasis};
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::mesh::DofMap;
use crate::scalar::{norm2, Real};
use crate::smoothers::{Smoother, SmootherConfig};
use crate::solver::{Instrumentation, LinearSolver, SolveOutcome};

/// Residual growth beyond which an iteration is abandoned as divergent.
const DIVERGENCE_FACTOR: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoGridConfig {
    pub smoother: SmootherConfig,
    /// Pressure modes per patch.
    pub m_p: usize,
    /// Displacement modes per patch.
    pub m_u: usize,
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    pub n_coarse: usize,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iters() -> usize {
    500
}

impl TwoGridConfig {
    pub fn new(smoother: SmootherConfig, m: usize, n_coarse: usize) -> Self {
        Self {
            smoother,
            m_p: m,
            m_u: m,
            rel_tol: default_tol(),
            max_iters: default_max_iters(),
            n_coarse,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.smoother.validate()?;
        if !(self.rel_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "two-grid needs rel_tol > 0 and max_iters >= 1".into(),
            ));
        }
        if self.m_p == 0 && self.m_u == 0 {
            return Err(Error::InvalidArgument("empty coarse space".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residuals `‖b − L x_k‖ / ‖b‖`, `k = 0..=iterations`.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
}

/// Prolongation, factorized coarse operator and smoother, all bound to one
/// fine matrix.
#[derive(Debug, Clone)]
pub struct TwoGridSolver<T> {
    matrix: SparseMatrix<T>,
    prolongation: Prolongation<T>,
    coarse: CoarseOperator<T>,
    smoother: Smoother<T>,
    config: TwoGridConfig,
    setup_seconds: f64,
}

impl<T: Real> TwoGridSolver<T> {
    pub fn setup(
        matrix: SparseMatrix<T>,
        basis: &SpectralBasis<T>,
        dofs: &DofMap,
        config: TwoGridConfig,
        instrumentation: Option<&Instrumentation>,
    ) -> Result<Self> {
        Self::setup_split(matrix, None, basis, dofs, config, instrumentation)
    }

    /// As [`setup`](Self::setup), with `matrix = soft + stiff` supplied in
    /// parts (`matrix = soft + rootᵀ root`) for a stable coarse factorization
    /// (see [`CoarseOperator::from_split`]).
    pub fn setup_split(
        matrix: SparseMatrix<T>,
        split: Option<(&SparseMatrix<T>, &SparseMatrix<T>)>,
        basis: &SpectralBasis<T>,
        dofs: &DofMap,
        config: TwoGridConfig,
        instrumentation: Option<&Instrumentation>,
    ) -> Result<Self> {
        config.validate()?;
        if matrix.n_rows() != dofs.n_total() || matrix.n_cols() != dofs.n_total() {
            return Err(Error::DimensionMismatch {
                context: "two-grid matrix vs DOF map",
                expected: dofs.n_total(),
                got: matrix.n_rows(),
            });
        }
        let start = Instant::now();
        let prolongation = Prolongation::assemble(basis, dofs, config.m_p, config.m_u);
        let coarse = match split {
            Some((soft, stiff)) => CoarseOperator::from_split(soft, stiff, &prolongation)?,
            None => CoarseOperator::new(&matrix, &prolongation)?,
        };
        if let Some(c) = instrumentation {
            c.record_coarse_factorization();
        }
        let smoother = Smoother::setup(&matrix, &config.smoother.kind, &basis.grid, dofs)?;
        if let (Some(c), Smoother::Vanka(_)) = (instrumentation, &smoother) {
            c.record_vanka_setup();
        }
        Ok(Self {
            matrix,
            prolongation,
            coarse,
            smoother,
            config,
            setup_seconds: start.elapsed().as_secs_f64(),
        })
    }

    pub fn config(&self) -> &TwoGridConfig {
        &self.config
    }

    pub fn matrix(&self) -> &SparseMatrix<T> {
        &self.matrix
    }

    pub fn prolongation(&self) -> &Prolongation<T> {
        &self.prolongation
    }

    pub fn coarse_dim(&self) -> usize {
        self.coarse.dim()
    }

    pub fn setup_seconds(&self) -> f64 {
        self.setup_seconds
    }

    /// `x ← x + P L_H⁻¹ Pᵀ (b − L x)`.
    pub fn coarse_correction(&self, b: &[T], x: &mut [T]) {
        let mut r = vec![T::zero(); b.len()];
        self.matrix.residual_into(b, x, &mut r);
        let r_h = self.prolongation.restrict(&r);
        let mut e_h = vec![T::zero(); r_h.len()];
        self.coarse.solve_into(&r_h, &mut e_h);
        let e = self.prolongation.prolong(&e_h);
        for (xi, ei) in x.iter_mut().zip(&e) {
            *xi += *ei;
        }
    }

    /// One cycle: coarse correction, then post-smoothing.
    pub fn cycle(&self, b: &[T], x: &mut [T]) {
        self.coarse_correction(b, x);
        self.smoother.apply(&self.matrix, b, x, self.config.smoother.sweeps);
    }

    /// Iterates from `x0` (zero if absent) until the relative residual drops
    /// below the tolerance, the iteration cap is hit, or the residual blows up.
    pub fn solve_with_report(&self, b: &[T], x0: Option<&[T]>) -> Result<(Vec<T>, SolveReport)> {
        let n = self.matrix.n_rows();
        if b.len() != n || x0.is_some_and(|x| x.len() != n) {
            return Err(Error::DimensionMismatch {
                context: "two-grid solve",
                expected: n,
                got: b.len(),
            });
        }
        let start = Instant::now();
        let mut x = x0.map_or_else(|| vec![T::zero(); n], <[T]>::to_vec);
        let b_norm = norm2(b).as_f64();
        let mut r = vec![T::zero(); n];
        let rel = |x: &[T], r: &mut [T]| {
            self.matrix.residual_into(b, x, r);
            let rn = norm2(r).as_f64();
            if b_norm == 0.0 {
                rn
            } else {
                rn / b_norm
            }
        };
        let mut history = vec![rel(&x, &mut r)];
        let tol = self.config.rel_tol;
        let mut converged = history[0] <= tol;
        let mut iterations = 0;
        while !converged && iterations < self.config.max_iters {
            self.cycle(b, &mut x);
            iterations += 1;
            let res = rel(&x, &mut r);
            history.push(res);
            if res <= tol {
                converged = true;
            } else if !res.is_finite() || res > DIVERGENCE_FACTOR * history[0].max(f64::MIN_POSITIVE) {
                break;
            }
        }
        Ok((
            x,
            SolveReport {
                iterations,
                residual_history: history,
                converged,
                setup_seconds: self.setup_seconds,
                solve_seconds: start.elapsed().as_secs_f64(),
            },
        ))
    }
}

impl<T: Real> LinearSolver<T> for TwoGridSolver<T> {
    fn dim(&self) -> usize {
        self.matrix.n_rows()
    }

    fn solve(&self, b: &[T]) -> Result<SolveOutcome<T>> {
        let (x, report) = self.solve_with_report(b, None)?;
        Ok(SolveOutcome {
            x,
            iterations: report.iterations,
            converged: report.converged,
            relative_residual: T::lit(*report.residual_history.last().unwrap_or(&0.0)),
        })
    }
}
