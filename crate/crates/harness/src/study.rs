//! The experiment drivers: time-scheme study, solver study, splitting check
//! and single simulations.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use unsat_poro::coarse_space::{CoarseGrid, SpectralBasis};
use unsat_poro::smoothers::{SmootherConfig, SmootherKind};
use unsat_poro::solver::{CounterSnapshot, Instrumentation};
use unsat_poro::time_integration::{
    coupling_ratios, run_transient, verify_state_dominance, CouplingRatio, DominanceReport, LinearSolverChoice, Scheme, SplitOperators, StepReport, TimeGrid, TransientConfig,
    TransientResult,
};
use unsat_poro::two_grid::TwoGridConfig;
use unsat_poro::{Problem64, State64};

use crate::config::ExperimentConfig;

/// One line of the result CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub grid: String,
    pub scheme: String,
    pub smoother: String,
    pub colors: Option<usize>,
    pub sweeps: Option<usize>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    /// Mean iterations per solve; `None` when a solve hit the cap.
    pub iters_mean: Option<f64>,
    /// The iteration cap that was exceeded.
    pub exceeded: Option<usize>,
    pub solve_s: Option<f64>,
    pub total_s: Option<f64>,
    pub e_p: Option<f64>,
    pub e_u: Option<f64>,
}

/// Per-step diagnostics tagged with their run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub experiment: String,
    pub n_t: usize,
    #[serde(flatten)]
    pub report: StepReport,
}

pub fn grid_label(n: usize) -> String {
    format!("{n}x{n}")
}

/// `‖a − b‖ / ‖b‖` in the Euclidean norm.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

pub fn state_errors(state: &State64, reference: &State64) -> (f64, f64) {
    (relative_error(&state.p, &reference.p), relative_error(&state.u, &reference.u))
}

fn time_grid(cfg: &ExperimentConfig, n_t: usize) -> anyhow::Result<TimeGrid<f64>> {
    Ok(TimeGrid::new(cfg.time.t_max, n_t)?)
}

fn run_scheme(
    cfg: &ExperimentConfig,
    problem: &Problem64,
    scheme: Scheme,
    n_t: usize,
) -> anyhow::Result<TransientResult<f64>> {
    let mut tc = TransientConfig::new(scheme, time_grid(cfg, n_t)?);
    tc.picard = cfg.picard;
    let out = run_transient(problem, &tc, &Instrumentation::new())?;
    if let Some(msg) = &out.aborted {
        anyhow::bail!("{scheme} with N_t = {n_t}: {msg}");
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeStudy {
    pub rows: Vec<ResultRow>,
    pub steps: Vec<StepRecord>,
}

impl TimeStudy {
    pub fn row(&self, scheme: Scheme, n_t: usize) -> Option<&ResultRow> {
        let id = time_experiment(n_t);
        self.rows.iter().find(|r| r.scheme == scheme.label() && r.experiment == id)
    }

    /// Picard counts per step of the implicit run with `n_t` steps.
    pub fn picard_counts(&self, n_t: usize) -> Vec<usize> {
        let id = time_experiment(n_t);
        self.steps
            .iter()
            .filter(|s| s.experiment == id && s.report.scheme == Scheme::Im)
            .filter_map(|s| s.report.picard_iterations)
            .collect()
    }
}

fn time_experiment(n_t: usize) -> String {
    format!("time_nt{n_t}")
}

/// Every configured scheme at every `N_t`, with final-time errors against an
/// implicit run at `reference_n_t`.
pub fn run_time_study(cfg: &ExperimentConfig) -> anyhow::Result<TimeStudy> {
    let problem = cfg.problem(cfg.mesh.n)?;
    let reference = run_scheme(cfg, &problem, Scheme::Im, cfg.time.reference_n_t)?;
    let ref_state = reference.final_state();
    let mut rows = Vec::new();
    let mut steps = Vec::new();
    for &n_t in &cfg.time.n_t {
        for &scheme in &cfg.schemes {
            let out = run_scheme(cfg, &problem, scheme, n_t)?;
            let (e_p, e_u) = state_errors(out.final_state(), ref_state);
            let id = time_experiment(n_t);
            rows.push(ResultRow {
                experiment: id.clone(),
                grid: grid_label(cfg.mesh.n),
                scheme: scheme.label().into(),
                smoother: "direct".into(),
                colors: None,
                sweeps: None,
                m: None,
                iters_mean: Some(out.mean_iterations()),
                exceeded: None,
                solve_s: cfg.output.timings.then_some(out.solve_seconds),
                total_s: cfg.output.timings.then_some(out.total_seconds),
                e_p: Some(e_p),
                e_u: Some(e_u),
            });
            steps.extend(out.steps.into_iter().map(|report| StepRecord {
                experiment: id.clone(),
                n_t,
                report,
            }));
        }
    }
    Ok(TimeStudy { rows, steps })
}

/// One cell of the solver table together with its instrumentation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverCell {
    pub n: usize,
    pub smoother: SmootherKind,
    pub sweeps: usize,
    pub m: usize,
    pub converged: bool,
    pub iters_mean: f64,
    pub counters: CounterSnapshot,
    pub row: ResultRow,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverStudy {
    pub cells: Vec<SolverCell>,
    pub steps: Vec<StepRecord>,
}

impl SolverStudy {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.cells.iter().map(|c| c.row.clone()).collect()
    }

    pub fn find(&self, n: usize, label: &str, colors: usize, sweeps: usize, m: usize) -> Option<&SolverCell> {
        self.cells.iter().find(|c| {
            c.n == n && c.smoother.label() == label && c.smoother.colors() == colors && c.sweeps == sweeps && c.m == m
        })
    }

    /// Appendix-B-style layout for one grid: rows are `(sweeps, M)`,
    /// columns are smoother and colors.
    pub fn table(&self, cfg: &ExperimentConfig, n: usize) -> Table {
        let s = &cfg.solver;
        let columns = s.smoothers.iter().map(column_label).collect();
        let mut rows = Vec::new();
        for &sweeps in &s.sweeps {
            for &m in &s.m_values {
                let cells = s
                    .smoothers
                    .iter()
                    .map(|k| {
                        self.cells
                            .iter()
                            .find(|c| c.n == n && c.smoother == *k && c.sweeps == sweeps && c.m == m)
                            .map_or_else(|| "missing".to_string(), |c| iteration_cell(&c.row))
                    })
                    .collect();
                rows.push(TableRow { sweeps, m, cells });
            }
        }
        Table {
            grid: grid_label(n),
            columns,
            rows,
        }
    }
}

fn column_label(k: &SmootherKind) -> String {
    match k {
        SmootherKind::Vanka { colors, .. } => format!("{}-{colors}c", k.label()),
        _ => k.label(),
    }
}

/// `iters_mean` as printed: two decimals, or `>cap`.
pub fn iteration_cell(row: &ResultRow) -> String {
    match (row.iters_mean, row.exceeded) {
        (_, Some(cap)) => format!(">{cap}"),
        (Some(v), None) => format!("{v:.2}"),
        (None, None) => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub grid: String,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub sweeps: usize,
    pub m: usize,
    pub cells: Vec<String>,
}

/// ImEx transients with the two-grid solver for every (grid, smoother,
/// sweeps, M). Errors are against the same transient with a direct solver.
/// The spectral basis is computed once per grid with the largest `M`.
pub fn run_solver_study(cfg: &ExperimentConfig) -> anyhow::Result<SolverStudy> {
    let s = &cfg.solver;
    let mut cells = Vec::new();
    let mut steps = Vec::new();
    for &n in &s.grids {
        let problem = cfg.problem(n)?;
        let grid = time_grid(cfg, s.n_t)?;
        let direct = run_scheme(cfg, &problem, Scheme::ImEx, s.n_t)?;
        let ref_state = direct.final_state();
        let m_max = s.m_values.iter().copied().max().unwrap_or(1);
        let basis = Arc::new(SpectralBasis::compute(
            &problem.mesh,
            &problem.dofs,
            CoarseGrid::for_mesh(&problem.mesh, cfg.mesh.n_coarse)?,
            &problem.bounds()?,
            m_max,
            m_max,
        )?);
        for &kind in &s.smoothers {
            for &sweeps in &s.sweeps {
                for &m in &s.m_values {
                    let tg = TwoGridConfig {
                        smoother: SmootherConfig { kind, sweeps },
                        m_p: m,
                        m_u: m,
                        rel_tol: s.rel_tol,
                        max_iters: s.max_iters,
                        n_coarse: cfg.mesh.n_coarse,
                    };
                    tg.validate()?;
                    let mut tc = TransientConfig::new(Scheme::ImEx, grid);
                    tc.imex_solver = LinearSolverChoice::TwoGrid(tg);
                    tc.warm_start = s.warm_start;
                    tc.basis = Some(Arc::clone(&basis));
                    let instr = Instrumentation::new();
                    let out = run_transient(&problem, &tc, &instr)?;
                    let converged = out.completed();
                    let (e_p, e_u) = if converged {
                        let (a, b) = state_errors(out.final_state(), ref_state);
                        (Some(a), Some(b))
                    } else {
                        (None, None)
                    };
                    let iters_mean = out.mean_iterations();
                    let id = format!("solver_nt{}", s.n_t);
                    let row = ResultRow {
                        experiment: id.clone(),
                        grid: grid_label(n),
                        scheme: Scheme::ImEx.label().into(),
                        smoother: kind.label(),
                        colors: Some(kind.colors()),
                        sweeps: Some(sweeps),
                        m: Some(m),
                        iters_mean: converged.then_some(iters_mean),
                        exceeded: (!converged).then_some(s.max_iters),
                        solve_s: cfg.output.timings.then_some(out.solve_seconds),
                        total_s: cfg.output.timings.then_some(out.total_seconds),
                        e_p,
                        e_u,
                    };
                    steps.extend(out.steps.into_iter().map(|report| StepRecord {
                        experiment: format!("{id}_{}_{}_{}c_s{sweeps}_m{m}", grid_label(n), kind.label(), kind.colors()),
                        n_t: s.n_t,
                        report,
                    }));
                    cells.push(SolverCell {
                        n,
                        smoother: kind,
                        sweeps,
                        m,
                        converged,
                        iters_mean,
                        counters: out.counters,
                        row,
                    });
                }
            }
        }
    }
    Ok(SolverStudy { cells, steps })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplittingCheck {
    pub step: usize,
    pub time: f64,
    pub blocks: Vec<DominanceReport>,
    pub couplings: Vec<CouplingRatio>,
}

impl SplittingCheck {
    pub fn passed(&self) -> bool {
        self.blocks.iter().all(|b| b.passed)
    }
}

/// Dominance of the bar splitting at every state of a semi-implicit
/// trajectory with `n_states` steps on the configured mesh.
pub fn validate_splitting(cfg: &ExperimentConfig, rho: f64, n_states: usize) -> anyhow::Result<Vec<SplittingCheck>> {
    let problem = cfg.problem(cfg.mesh.n)?;
    let traj = run_scheme(cfg, &problem, Scheme::SIm, n_states)?;
    let tau = cfg.time.t_max / n_states as f64;
    let split = SplitOperators::new(&problem, problem.bounds()?, tau, None)?;
    traj.states
        .iter()
        .enumerate()
        .skip(1)
        .map(|(step, state)| {
            Ok(SplittingCheck {
                step,
                time: state.time,
                blocks: verify_state_dominance(&problem, &split, &state.p, rho)?,
                couplings: coupling_ratios(&problem, &split, &state.p)?,
            })
        })
        .collect()
}

/// One transient of one scheme on the configured mesh (direct solves).
pub fn simulate(cfg: &ExperimentConfig, scheme: Scheme, n_t: usize) -> anyhow::Result<(Problem64, TransientResult<f64>)> {
    let problem = cfg.problem(cfg.mesh.n)?;
    let out = run_scheme(cfg, &problem, scheme, n_t)?;
    Ok((problem, out))
}
