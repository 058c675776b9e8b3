//! Full transients for one scheme, with the implicit-explicit system and its
//! solver set up once before the time loop.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coarse_space::{CoarseGrid, SpectralBasis};
use crate::error::Result;
use crate::problem::{split, Problem};
use crate::scalar::Real;
use crate::solver::{CounterSnapshot, DirectSolver, Instrumentation, LinearSolver};
use crate::two_grid::{SolveReport, TwoGridConfig, TwoGridSolver};

use super::{
    increments, initial_state, step_implicit_picard, step_semi_implicit, PicardSettings, Scheme,
    SplitOperators, State, StepReport, TimeGrid,
};

/// Linear solver for the implicit-explicit system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinearSolverChoice {
    Direct,
    TwoGrid(TwoGridConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientConfig<T> {
    pub scheme: Scheme,
    pub grid: TimeGrid<T>,
    pub picard: PicardSettings<T>,
    pub imex_solver: LinearSolverChoice,
    /// Start each two-grid solve for the increment from the previous
    /// increment instead of zero.
    pub warm_start: bool,
    /// Precomputed spectral basis for the two-grid solver (built from the
    /// same coefficient bounds, with at least the configured mode counts).
    pub basis: Option<Arc<SpectralBasis<T>>>,
}

impl<T: Real> TransientConfig<T> {
    pub fn new(scheme: Scheme, grid: TimeGrid<T>) -> Self {
        Self {
            scheme,
            grid,
            picard: PicardSettings::default(),
            imex_solver: LinearSolverChoice::Direct,
            warm_start: false,
            basis: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransientResult<T> {
    /// States at `t_0, …, t_k`; all `N_t + 1` levels unless aborted.
    pub states: Vec<State<T>>,
    pub steps: Vec<StepReport>,
    /// Two-grid reports, one per implicit-explicit step.
    pub solves: Vec<SolveReport>,
    pub counters: CounterSnapshot,
    pub aborted: Option<String>,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub total_seconds: f64,
}

impl<T: Real> TransientResult<T> {
    pub fn final_state(&self) -> &State<T> {
        self.states.last().expect("at least the initial state")
    }

    pub fn completed(&self) -> bool {
        self.aborted.is_none()
    }

    /// Mean iterations of the two-grid solves (all steps when none were made).
    pub fn mean_iterations(&self) -> f64 {
        if !self.solves.is_empty() {
            return self.solves.iter().map(|s| s.iterations as f64).sum::<f64>() / self.solves.len() as f64;
        }
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.solver_iterations as f64).sum::<f64>() / self.steps.len() as f64
    }
}

enum ImexSolver<T> {
    Direct(DirectSolver<T>),
    TwoGrid(Box<TwoGridSolver<T>>),
}

fn setup_imex<T: Real>(
    problem: &Problem<T>,
    tau: T,
    choice: &LinearSolverChoice,
    cached: Option<&SpectralBasis<T>>,
    instr: &Instrumentation,
) -> Result<(SplitOperators<T>, ImexSolver<T>)> {
    let split_ops = SplitOperators::new(problem, problem.bounds()?, tau, Some(instr))?;
    let solver = match choice {
        LinearSolverChoice::Direct => {
            instr.record_direct_factorization();
            ImexSolver::Direct(DirectSolver::factor(
                &split_ops.system,
                problem.dofs.interleaved_of_coupled(),
            )?)
        }
        LinearSolverChoice::TwoGrid(cfg) => {
            let grid = CoarseGrid::for_mesh(&problem.mesh, cfg.n_coarse)?;
            let computed;
            let basis = match cached {
                Some(b) if b.grid == grid => b,
                _ => {
                    computed = SpectralBasis::compute(
                        &problem.mesh,
                        &problem.dofs,
                        grid,
                        &split_ops.bounds,
                        cfg.m_p,
                        cfg.m_u,
                    )?;
                    &computed
                }
            };
            let (soft, stiff) = split_ops.robin_splitting(problem)?;
            ImexSolver::TwoGrid(Box::new(TwoGridSolver::setup_split(
                split_ops.system.clone(),
                Some((&soft, &stiff)),
                basis,
                &problem.dofs,
                *cfg,
                Some(instr),
            )?))
        }
    };
    Ok((split_ops, solver))
}

/// Runs `N_t` steps of the configured scheme from the initial state. A
/// two-grid solve that fails to converge ends the transient early with
/// `aborted` set; the states computed so far are kept.
pub fn run_transient<T: Real>(
    problem: &Problem<T>,
    config: &TransientConfig<T>,
    instr: &Instrumentation,
) -> Result<TransientResult<T>> {
    let start = Instant::now();
    let tau = config.grid.tau();
    let mut states = vec![initial_state(problem)?];
    let mut steps = Vec::with_capacity(config.grid.n_t);
    let mut solves = Vec::new();
    let mut aborted = None;
    let mut solve_seconds = 0.0;
    let mut setup_seconds = 0.0;

    match config.scheme {
        Scheme::Im | Scheme::SIm => {
            for k in 1..=config.grid.n_t {
                let t0 = Instant::now();
                let (next, report) = if config.scheme == Scheme::Im {
                    step_implicit_picard(problem, &states[k - 1], tau, &config.picard, k)?
                } else {
                    step_semi_implicit(problem, &states[k - 1], tau, k)?
                };
                solve_seconds += t0.elapsed().as_secs_f64();
                for _ in 0..report.solver_iterations {
                    instr.record_direct_factorization();
                    instr.record_solve();
                }
                states.push(next);
                steps.push(report);
            }
        }
        Scheme::ImEx => {
            let t0 = Instant::now();
            let (split_ops, solver) = setup_imex(problem, tau, &config.imex_solver, config.basis.as_deref(), instr)?;
            setup_seconds = t0.elapsed().as_secs_f64();
            for k in 1..=config.grid.n_t {
                if k == 1 {
                    // the three-level scheme needs two levels; bootstrap semi-implicitly
                    let t1 = Instant::now();
                    let (next, report) = step_semi_implicit(problem, &states[0], tau, 1)?;
                    solve_seconds += t1.elapsed().as_secs_f64();
                    instr.record_direct_factorization();
                    instr.record_solve();
                    states.push(next);
                    steps.push(report);
                    continue;
                }
                let current = &states[k - 1];
                let previous = &states[k - 2];
                let rhs = split_ops.imex_rhs(problem, current, previous)?;
                let t1 = Instant::now();
                let (x, iterations, converged, residual) = match &solver {
                    ImexSolver::Direct(d) => {
                        let out = d.solve(&rhs)?;
                        (out.x, 1, true, 0.0)
                    }
                    ImexSolver::TwoGrid(tg) => {
                        // solve for the increment so the relative residual is
                        // measured against this step's imbalance
                        let base = current.coupled();
                        let mut b = vec![T::zero(); base.len()];
                        split_ops.system.residual_into(&rhs, &base, &mut b);
                        let guess: Option<Vec<T>> = config.warm_start.then(|| {
                            base.iter().zip(previous.coupled()).map(|(&a, b)| a - b).collect()
                        });
                        let (dx, report) = tg.solve_with_report(&b, guess.as_deref())?;
                        let x: Vec<T> = base.iter().zip(&dx).map(|(&a, &d)| a + d).collect();
                        let out = (
                            x,
                            report.iterations,
                            report.converged,
                            *report.residual_history.last().unwrap_or(&0.0),
                        );
                        solves.push(report);
                        out
                    }
                };
                solve_seconds += t1.elapsed().as_secs_f64();
                instr.record_solve();
                let (p, u) = split(&x, problem.n_pressure());
                let next = State {
                    time: current.time + tau,
                    p,
                    u,
                };
                let (dp_norm, du_norm) = increments(&next, current);
                steps.push(StepReport {
                    step: k,
                    time: next.time.as_f64(),
                    scheme: Scheme::ImEx,
                    picard_iterations: None,
                    picard_converged: None,
                    solver_iterations: iterations,
                    solver_converged: converged,
                    relative_residual: residual,
                    dp_norm,
                    du_norm,
                });
                if !converged {
                    aborted = Some(format!("step {k}: linear solver did not converge"));
                    break;
                }
                states.push(next);
            }
        }
    }
    Ok(TransientResult {
        states,
        steps,
        solves,
        counters: instr.snapshot(),
        aborted,
        setup_seconds,
        solve_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
    })
}
