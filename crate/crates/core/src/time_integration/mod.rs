//! Time stepping: implicit with Picard iterations, semi-implicit, and the
//! implicit-explicit scheme on a fixed linear operator.
//!
//! All schemes advance the coupled state `(p, u)` of
//!
//! ```text
//! M (pⁿ⁺¹ − pⁿ) + τ A pⁿ⁺¹ + α D (uⁿ⁺¹ − uⁿ) = τ F_p
//! α G pⁿ⁺¹ + K uⁿ⁺¹                        = F_u
//! ```
//!
//! and differ in where the coefficients of the blocks are evaluated.

mod dominance;
mod driver;

pub use dominance::{
    coupling_ratios, verify_splitting_dominance, verify_state_dominance, CouplingRatio,
    DominanceReport,
};
pub use driver::{
    run_transient, LinearSolverChoice, TransientConfig, TransientResult,
};

use serde::{Deserialize, Serialize};

use crate::assembly::{
    apply_displacement_bc, assemble_at_state, assemble_body_force, assemble_mechanics, robin_root,
    AssembledOperators, StateTag,
};
use crate::constitutive::CoefficientBounds;
use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::mesh::BoundaryConfig;
use crate::problem::{join, split, Problem};
use crate::scalar::{norm2, relative_difference, Real};
use crate::solver::{DirectSolver, Instrumentation, LinearSolver};

/// Nodal pressure and displacement at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State<T> {
    pub time: T,
    pub p: Vec<T>,
    pub u: Vec<T>,
}

impl<T: Real> State<T> {
    pub fn coupled(&self) -> Vec<T> {
        join(&self.p, &self.u)
    }
}

/// `τ = T_max / N_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<T> {
    pub t_max: T,
    pub n_t: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t_max: T, n_t: usize) -> Result<Self> {
        if n_t == 0 || !(t_max > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "time grid needs N_t >= 1 and T_max > 0 (got {n_t}, {t_max})"
            )));
        }
        Ok(Self { t_max, n_t })
    }

    pub fn tau(&self) -> T {
        self.t_max / T::from_count(self.n_t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardSettings<T> {
    pub max_iters: usize,
    pub rel_tol_p: T,
    pub rel_tol_u: T,
}

impl<T: Real> Default for PicardSettings<T> {
    fn default() -> Self {
        Self {
            max_iters: 10,
            rel_tol_p: T::lit(1e-3),
            rel_tol_u: T::lit(1e-3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Implicit with Picard iterations.
    Im,
    /// Semi-implicit (coefficients from the previous step).
    #[serde(rename = "sim")]
    SIm,
    ImEx,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Im => "Im",
            Scheme::SIm => "sIm",
            Scheme::ImEx => "ImEx",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Per-step diagnostics; one JSON-lines record per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub scheme: Scheme,
    /// Number of linear solves of the Picard loop (implicit scheme only).
    pub picard_iterations: Option<usize>,
    pub picard_converged: Option<bool>,
    pub solver_iterations: usize,
    pub solver_converged: bool,
    pub relative_residual: f64,
    pub dp_norm: f64,
    pub du_norm: f64,
}

pub(crate) fn increments<T: Real>(new: &State<T>, old: &State<T>) -> (f64, f64) {
    let dp: Vec<T> = new.p.iter().zip(&old.p).map(|(&a, &b)| a - b).collect();
    let du: Vec<T> = new.u.iter().zip(&old.u).map(|(&a, &b)| a - b).collect();
    (norm2(&dp).as_f64(), norm2(&du).as_f64())
}

fn direct_solve<T: Real>(problem: &Problem<T>, a: &SparseMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    DirectSolver::factor(a, problem.dofs.interleaved_of_coupled())?.solve_vec(b)
}

/// `τ F_p + M pⁿ + α D uⁿ` with the blocks of `ops`.
fn flow_rhs<T: Real>(ops: &AssembledOperators<T>, tau: T, alpha: T, p_n: &[T], u_n: &[T]) -> Vec<T> {
    let mut b: Vec<T> = ops.f_p.iter().map(|&f| tau * f).collect();
    ops.m.mul_vec_add(T::one(), p_n, &mut b);
    ops.d.mul_vec_add(alpha, u_n, &mut b);
    b
}

/// Displacement consistent with the initial pressure:
/// `K u⁰ = F_u(p⁰) − α G(p⁰) p⁰` with the constraints applied.
pub fn initial_displacement<T: Real>(problem: &Problem<T>, p0: &[T]) -> Result<Vec<T>> {
    let mut mech = assemble_mechanics(&problem.mesh, &problem.material, Some(p0), &problem.loads)?;
    apply_displacement_bc(&mut mech, &problem.dofs);
    let mut rhs = mech.f_u.clone();
    mech.g.mul_vec_add(-problem.alpha(), p0, &mut rhs);
    DirectSolver::identity_order(&mech.k)?.solve_vec(&rhs)
}

/// Initial state at `t = 0`.
pub fn initial_state<T: Real>(problem: &Problem<T>) -> Result<State<T>> {
    let p = problem.initial_pressure();
    let u = initial_displacement(problem, &p)?;
    Ok(State {
        time: T::zero(),
        p,
        u,
    })
}

/// One step with every block evaluated at the previous state.
pub fn step_semi_implicit<T: Real>(
    problem: &Problem<T>,
    state: &State<T>,
    tau: T,
    step: usize,
) -> Result<(State<T>, StepReport)> {
    let alpha = problem.alpha();
    let ops = problem.assemble_at_state(&state.p)?;
    let a = ops.coupled_matrix(tau, alpha)?;
    let rhs = join(&flow_rhs(&ops, tau, alpha, &state.p, &state.u), &ops.f_u);
    let x = direct_solve(problem, &a, &rhs)?;
    let (p, u) = split(&x, problem.n_pressure());
    let next = State {
        time: state.time + tau,
        p,
        u,
    };
    let (dp_norm, du_norm) = increments(&next, state);
    Ok((
        next,
        StepReport {
            step,
            time: (state.time + tau).as_f64(),
            scheme: Scheme::SIm,
            picard_iterations: None,
            picard_converged: None,
            solver_iterations: 1,
            solver_converged: true,
            relative_residual: 0.0,
            dp_norm,
            du_norm,
        },
    ))
}

/// One implicit step; Picard iterations re-evaluate the coefficients at the
/// latest iterate. The count is the number of linear solves; an iterate is
/// accepted once it agrees with its predecessor iterate, so at least two
/// solves are made.
pub fn step_implicit_picard<T: Real>(
    problem: &Problem<T>,
    state: &State<T>,
    tau: T,
    settings: &PicardSettings<T>,
    step: usize,
) -> Result<(State<T>, StepReport)> {
    let alpha = problem.alpha();
    let n_p = problem.n_pressure();
    let mut p_it = state.p.clone();
    let mut u_it = state.u.clone();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < settings.max_iters.max(1) {
        let ops = problem.assemble_at_state(&p_it)?;
        let a = ops.coupled_matrix(tau, alpha)?;
        let rhs = join(&flow_rhs(&ops, tau, alpha, &state.p, &state.u), &ops.f_u);
        let x = direct_solve(problem, &a, &rhs)?;
        let (p_new, u_new) = split(&x, n_p);
        iterations += 1;
        let done = iterations >= 2
            && relative_difference(&p_new, &p_it) <= settings.rel_tol_p
            && relative_difference(&u_new, &u_it) <= settings.rel_tol_u;
        p_it = p_new;
        u_it = u_new;
        if done {
            converged = true;
            break;
        }
    }
    let next = State {
        time: state.time + tau,
        p: p_it,
        u: u_it,
    };
    let (dp_norm, du_norm) = increments(&next, state);
    Ok((
        next,
        StepReport {
            step,
            time: (state.time + tau).as_f64(),
            scheme: Scheme::Im,
            picard_iterations: Some(iterations),
            picard_converged: Some(converged),
            solver_iterations: iterations,
            solver_converged: true,
            relative_residual: 0.0,
            dp_norm,
            du_norm,
        },
    ))
}

/// Fixed linear part of the splitting and the implicit-explicit system matrix
/// `[[M̄ + τĀ, αD̄], [αḠ, K̄]]`.
#[derive(Debug, Clone)]
pub struct SplitOperators<T> {
    pub bounds: CoefficientBounds<T>,
    pub linear: AssembledOperators<T>,
    pub system: SparseMatrix<T>,
    pub tau: T,
    pub alpha: T,
}

impl<T: Real> SplitOperators<T> {
    pub fn new(
        problem: &Problem<T>,
        bounds: CoefficientBounds<T>,
        tau: T,
        instrumentation: Option<&Instrumentation>,
    ) -> Result<Self> {
        let linear = problem.assemble_linear(&bounds)?;
        let alpha = problem.alpha();
        let system = linear.coupled_matrix(tau, alpha)?;
        if let Some(c) = instrumentation {
            c.record_system_assembly();
        }
        Ok(Self {
            bounds,
            linear,
            system,
            tau,
            alpha,
        })
    }

    /// The system as `soft + BᵀB`, where `BᵀB` is the Robin term `τ γ∫φᵢφⱼ`
    /// in the pressure block and `soft` is everything else, assembled without
    /// it. `B` has one column per coupled unknown.
    pub fn robin_splitting(&self, problem: &Problem<T>) -> Result<(SparseMatrix<T>, SparseMatrix<T>)> {
        let no_robin = BoundaryConfig {
            gamma: T::zero(),
            ..problem.bc.clone()
        };
        let interior = assemble_at_state(
            &problem.mesh,
            &problem.dofs,
            &self.bounds,
            None,
            &no_robin,
            &problem.loads,
            StateTag::Linear,
        )?;
        let soft = interior.coupled_matrix(self.tau, self.alpha)?;
        let r = robin_root(&problem.mesh, &problem.bc);
        let scale = self.tau.sqrt();
        let mut t = TripletBuilder::with_capacity(r.n_rows(), problem.n_dofs(), r.nnz());
        for i in 0..r.n_rows() {
            let (cols, vals) = r.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push(i, problem.dofs.pressure(j), scale * v);
            }
        }
        Ok((soft, t.finalize()))
    }

    /// Nonlinear residual blocks `X(p) − X^lin`.
    pub fn residual_blocks(&self, problem: &Problem<T>, p: &[T]) -> Result<AssembledOperators<T>> {
        problem.assemble_at_state(p)?.minus(&self.linear)
    }

    /// Right-hand side of the implicit-explicit step from levels `n` and `n − 1`.
    pub fn imex_rhs(
        &self,
        problem: &Problem<T>,
        current: &State<T>,
        previous: &State<T>,
    ) -> Result<Vec<T>> {
        let (tau, alpha) = (self.tau, self.alpha);
        let lin = &self.linear;
        let state = problem.assemble_at_state(&current.p)?;
        let f_u_prev = assemble_body_force(
            &problem.mesh,
            &problem.dofs,
            &problem.material,
            Some(&previous.p),
            &problem.loads,
        )?;
        let dp: Vec<T> = current.p.iter().zip(&previous.p).map(|(&a, &b)| a - b).collect();
        let du: Vec<T> = current.u.iter().zip(&previous.u).map(|(&a, &b)| a - b).collect();
        let neg = -T::one();

        // b_p = τF_pⁿ + M̄pⁿ + αD̄uⁿ − M̃ δp − αD̃ δu − τÃpⁿ, X̃ = X(pⁿ) − X̄
        let mut b_p: Vec<T> = state.f_p.iter().map(|&f| tau * f).collect();
        lin.m.mul_vec_add(T::one(), &current.p, &mut b_p);
        lin.d.mul_vec_add(alpha, &current.u, &mut b_p);
        state.m.mul_vec_add(neg, &dp, &mut b_p);
        lin.m.mul_vec_add(T::one(), &dp, &mut b_p);
        state.d.mul_vec_add(-alpha, &du, &mut b_p);
        lin.d.mul_vec_add(alpha, &du, &mut b_p);
        state.a.mul_vec_add(-tau, &current.p, &mut b_p);
        lin.a.mul_vec_add(tau, &current.p, &mut b_p);

        // b_u = F_uⁿ − F_uⁿ⁻¹ + αḠpⁿ + K̄uⁿ − αG̃ δp − K̃ δu
        let mut b_u: Vec<T> = state.f_u.iter().zip(&f_u_prev).map(|(&a, &b)| a - b).collect();
        lin.g.mul_vec_add(alpha, &current.p, &mut b_u);
        lin.k.mul_vec_add(T::one(), &current.u, &mut b_u);
        state.g.mul_vec_add(-alpha, &dp, &mut b_u);
        lin.g.mul_vec_add(alpha, &dp, &mut b_u);
        state.k.mul_vec_add(neg, &du, &mut b_u);
        lin.k.mul_vec_add(T::one(), &du, &mut b_u);
        Ok(join(&b_p, &b_u))
    }
}

/// One implicit-explicit step on the fixed system; `solver` must be bound to
/// `split.system`.
pub fn step_imex<T: Real>(
    problem: &Problem<T>,
    split_ops: &SplitOperators<T>,
    solver: &dyn LinearSolver<T>,
    current: &State<T>,
    previous: &State<T>,
    step: usize,
) -> Result<(State<T>, StepReport)> {
    let rhs = split_ops.imex_rhs(problem, current, previous)?;
    let out = solver.solve(&rhs)?;
    let (p, u) = split(&out.x, problem.n_pressure());
    let next = State {
        time: current.time + split_ops.tau,
        p,
        u,
    };
    let (dp_norm, du_norm) = increments(&next, current);
    Ok((
        next,
        StepReport {
            step,
            time: (current.time + split_ops.tau).as_f64(),
            scheme: Scheme::ImEx,
            picard_iterations: None,
            picard_converged: None,
            solver_iterations: out.iterations,
            solver_converged: out.converged,
            relative_residual: out.relative_residual.as_f64(),
            dp_norm,
            du_norm,
        },
    ))
}
