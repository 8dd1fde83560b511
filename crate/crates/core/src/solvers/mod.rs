//! Conic solvers built on the splitting engines: the convergent
//! three-block method for equality-only problems, its inequality variant
//! through a slack reformulation, and the directly extended baselines.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;

use crate::admm::{
    initial_spadmm3c, run_admm_direct, run_spadmm3c, BlockOracle, Iterate, IterateLog,
    LinearBlockOracle, ProjectorPair, RunState, SigmaPolicy, SplittingConfig, Status,
};
use crate::error::{Error, Result};
use crate::problem::{residuals, ConicProblem, PrimalDualPoint, ResidualReport};

mod monitor;
mod oracles;
mod reformulation;

pub use reformulation::{reformulate_ineq, IneqReformulation};

use monitor::{ConicMonitor, Layout};
use oracles::{estimate_rho_max, DualPolyOracle, IneqOracle, PsdOracle};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolverKind {
    /// Convergent three-block ADMM, `m_I = 0`.
    Admm3c,
    /// Convergent three-block sPADMM on the slack reformulation, `m_I > 0`.
    Spadmm3c,
    /// Directly extended three-block ADMM with fixed step length.
    Admm3d { tau: f64 },
    /// Directly extended four-block sPADMM with fixed step length.
    Spadmm4d { tau: f64 },
}

impl SolverKind {
    pub const NAMES: [&'static str; 6] = [
        "admm3c",
        "spadmm3c",
        "admm3d_1",
        "admm3d_1618",
        "spadmm4d_1",
        "spadmm4d_1618",
    ];

    pub fn needs_inequalities(self) -> bool {
        matches!(self, SolverKind::Spadmm3c | SolverKind::Spadmm4d { .. })
    }

    /// The convergent solver for a problem's shape.
    pub fn default_for(problem: &ConicProblem) -> Self {
        if problem.m_ineq() > 0 {
            SolverKind::Spadmm3c
        } else {
            SolverKind::Admm3c
        }
    }
}

fn tau_suffix(tau: f64) -> String {
    if tau == 1.0 {
        "1".into()
    } else if tau == 1.618 {
        "1618".into()
    } else {
        format!("{tau}")
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverKind::Admm3c => f.write_str("admm3c"),
            SolverKind::Spadmm3c => f.write_str("spadmm3c"),
            SolverKind::Admm3d { tau } => write!(f, "admm3d_{}", tau_suffix(*tau)),
            SolverKind::Spadmm4d { tau } => write!(f, "spadmm4d_{}", tau_suffix(*tau)),
        }
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "admm3c" => SolverKind::Admm3c,
            "spadmm3c" => SolverKind::Spadmm3c,
            "admm3d_1" => SolverKind::Admm3d { tau: 1.0 },
            "admm3d_1618" => SolverKind::Admm3d { tau: 1.618 },
            "spadmm4d_1" => SolverKind::Spadmm4d { tau: 1.0 },
            "spadmm4d_1618" => SolverKind::Spadmm4d { tau: 1.618 },
            _ => {
                return Err(Error::InvalidInput(format!(
                    "unknown solver '{s}' (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }
}

/// Options shared by every conic solver. `None` fields take the
/// problem-dependent defaults: tolerance 1e-6 and 25000 iterations without
/// inequalities, 1e-5 and 50000 with them.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub sigma0: f64,
    /// Overrides the solver's initial step length.
    pub tau0: Option<f64>,
    pub rho: f64,
    pub c0: f64,
    pub sigma_policy: Option<SigmaPolicy>,
    pub stall_window: usize,
    /// Refresh period of the eigenvalue-based residual components.
    pub eig_every: usize,
    /// Initial slack scaling for the inequality reformulation.
    pub alpha0: f64,
    pub adapt_alpha: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: None,
            max_iters: None,
            sigma0: 1.0,
            tau0: None,
            rho: 0.95,
            c0: 1.0,
            sigma_policy: Some(SigmaPolicy::default()),
            stall_window: 2000,
            eig_every: 10,
            alpha0: 4.0,
            adapt_alpha: true,
        }
    }
}

impl SolveOptions {
    pub fn tolerance(&self, problem: &ConicProblem) -> f64 {
        self.tol
            .unwrap_or(if problem.m_ineq() > 0 { 1e-5 } else { 1e-6 })
    }

    pub fn iteration_cap(&self, problem: &ConicProblem) -> usize {
        self.max_iters
            .unwrap_or(if problem.m_ineq() > 0 { 50_000 } else { 25_000 })
    }

    fn config(&self, problem: &ConicProblem, kind: SolverKind) -> SplittingConfig {
        let (tau0, safeguard) = match kind {
            SolverKind::Admm3c | SolverKind::Spadmm3c => (self.tau0.unwrap_or(1.95), true),
            SolverKind::Admm3d { tau } | SolverKind::Spadmm4d { tau } => {
                (self.tau0.unwrap_or(tau), false)
            }
        };
        SplittingConfig {
            sigma0: self.sigma0,
            tau0,
            rho: self.rho,
            c0: self.c0,
            tau_floor: 1.618,
            safeguard,
            max_iters: self.iteration_cap(problem),
            tol: self.tolerance(problem),
            sigma_policy: self.sigma_policy,
            stall_window: self.stall_window,
            stall_rel: 1e-3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutput {
    pub solver: SolverKind,
    pub point: PrimalDualPoint,
    /// Residuals of `point`, fully recomputed after the last iteration.
    pub report: ResidualReport,
    pub log: IterateLog,
    pub status: Status,
    pub iterations: usize,
    /// Objective in the problem's own sense and offset.
    pub objective: f64,
    /// Factorizations and other one-off work before the first iteration.
    pub setup_secs: f64,
    /// Wall time of the iteration loop including residual evaluation.
    pub solve_secs: f64,
    /// Largest `η_P` observed over all iterates.
    pub max_eta_p: f64,
    /// Final slack scaling and `‖U - Z‖/(1 + ‖Z‖)` for the reformulated
    /// solver.
    pub alpha: Option<f64>,
    pub uz_consistency: Option<f64>,
}

/// Solves `problem` with `kind`. Problem/solver mismatches (a solver for
/// inequality-free problems given inequalities, or the converse) are input
/// errors.
pub fn solve(problem: &ConicProblem, kind: SolverKind, opts: &SolveOptions) -> Result<SolveOutput> {
    let has_ineq = problem.m_ineq() > 0;
    if kind.needs_inequalities() != has_ineq {
        return Err(Error::InvalidInput(format!(
            "solver {kind} requires a problem {} inequality constraints, got m_I = {}",
            if kind.needs_inequalities() {
                "with"
            } else {
                "without"
            },
            problem.m_ineq()
        )));
    }
    match kind {
        SolverKind::Admm3c => solve_conic_admm3c(problem, opts),
        SolverKind::Spadmm3c => reformulation::solve_conic_spadmm3c(problem, opts),
        SolverKind::Admm3d { .. } | SolverKind::Spadmm4d { .. } => {
            solve_direct_baseline(problem, kind, opts)
        }
    }
}

fn equality_projectors(problem: &ConicProblem) -> Result<ProjectorPair<'_>> {
    ProjectorPair::with_solver(
        problem.eq(),
        Box::new(problem.gram_factor().clone()),
        problem.b_eq().clone(),
    )
}

fn finish(
    problem: &ConicProblem,
    kind: SolverKind,
    layout: Layout,
    state: RunState,
    monitor: &ConicMonitor<'_>,
    setup_secs: f64,
    solve_secs: f64,
) -> Result<SolveOutput> {
    let point = layout.point(&state.iterate, problem.n())?;
    let report = residuals(problem, &point)?;
    let status = state.log.status.unwrap_or(Status::MaxIters);
    Ok(SolveOutput {
        solver: kind,
        objective: problem.reported_objective(report.primal_objective),
        point,
        report,
        iterations: state.log.iterations(),
        log: state.log,
        status,
        setup_secs,
        solve_secs,
        max_eta_p: monitor.max_eta_p,
        alpha: None,
        uz_consistency: None,
    })
}

/// Convergent three-block ADMM on the dual: blocks `S ⪰ 0`, `Z ∈ K_p*`
/// and `y_E`, with the extra `y_E` solve between the `S` and `Z` updates.
pub fn solve_conic_admm3c(problem: &ConicProblem, opts: &SolveOptions) -> Result<SolveOutput> {
    if problem.m_ineq() > 0 {
        return Err(Error::InvalidInput(
            "admm3c handles problems without inequality constraints".into(),
        ));
    }
    let setup = Instant::now();
    let n = problem.n();
    let cfg = opts.config(problem, SolverKind::Admm3c);
    let proj = equality_projectors(problem)?;
    let s_oracle = PsdOracle::new(n);
    let z_oracle = DualPolyOracle::new(problem.pattern());
    let c = problem.cost().to_vector();
    let start = initial_spadmm3c(
        &s_oracle,
        &z_oracle,
        &proj,
        &c,
        DVector::zeros(n * n),
        DVector::zeros(n * n),
        &DVector::zeros(n * n),
    );
    let setup_secs = setup.elapsed().as_secs_f64();

    let clock = Instant::now();
    let mut monitor = ConicMonitor::new(problem, Layout::ThreeBlock, cfg.tol, opts.eig_every);
    let state = run_spadmm3c(
        &s_oracle,
        &z_oracle,
        &proj,
        &c,
        RunState::new(start, &cfg),
        &cfg,
        &mut monitor,
    )?;
    let solve_secs = clock.elapsed().as_secs_f64();
    finish(
        problem,
        SolverKind::Admm3c,
        Layout::ThreeBlock,
        state,
        &monitor,
        setup_secs,
        solve_secs,
    )
}

/// Directly extended Gauss-Seidel ADMM over `(S, Z, y_E)` or, with
/// inequalities, `(S, y_I, Z, y_E)` where `y_I` carries the proximal term
/// `ρ_max I - A_I A_I*`. No convergence guarantee; divergence ends the run
/// as `Stalled` or `MaxIters`.
pub fn solve_direct_baseline(
    problem: &ConicProblem,
    kind: SolverKind,
    opts: &SolveOptions,
) -> Result<SolveOutput> {
    let four = match kind {
        SolverKind::Admm3d { .. } => false,
        SolverKind::Spadmm4d { .. } => true,
        _ => {
            return Err(Error::InvalidInput(format!(
                "{kind} is not a directly extended solver"
            )))
        }
    };
    if four != (problem.m_ineq() > 0) {
        return Err(Error::InvalidInput(format!(
            "{kind} does not match a problem with m_I = {}",
            problem.m_ineq()
        )));
    }
    let setup = Instant::now();
    let n = problem.n();
    let n2 = n * n;
    let cfg = opts.config(problem, kind);
    let proj = equality_projectors(problem)?;
    let s_oracle = PsdOracle::new(n);
    let z_oracle = DualPolyOracle::new(problem.pattern());
    let y_oracle = LinearBlockOracle::new(&proj);
    let c = problem.cost().to_vector();
    let x0 = proj.correct_x(&DVector::zeros(n2));

    let (rho_max, rho_fallback) = if four {
        estimate_rho_max(&problem.ineq().gram_matrix())
    } else {
        (0.0, false)
    };
    let ineq_oracle = IneqOracle::new(problem.ineq(), problem.ineq(), problem.b_ineq(), rho_max);

    let (oracles, blocks, layout): (Vec<&dyn BlockOracle>, Vec<DVector<f64>>, Layout) = if four {
        (
            vec![&s_oracle, &ineq_oracle, &z_oracle, &y_oracle],
            vec![
                DVector::zeros(n2),
                DVector::zeros(problem.m_ineq()),
                DVector::zeros(n2),
                DVector::zeros(problem.m_eq()),
            ],
            Layout::FourBlock,
        )
    } else {
        (
            vec![&s_oracle, &z_oracle, &y_oracle],
            vec![
                DVector::zeros(n2),
                DVector::zeros(n2),
                DVector::zeros(problem.m_eq()),
            ],
            Layout::ThreeBlock,
        )
    };
    let start = Iterate { blocks, x: x0 };
    let setup_secs = setup.elapsed().as_secs_f64();

    let clock = Instant::now();
    let mut monitor = ConicMonitor::new(problem, layout, cfg.tol, opts.eig_every);
    let mut state = run_admm_direct(&oracles, &c, RunState::new(start, &cfg), &cfg, &mut monitor)?;
    let solve_secs = clock.elapsed().as_secs_f64();
    if rho_fallback {
        state
            .log
            .notes
            .push("power iteration did not settle; Gershgorin bound used for rho_max".into());
    }
    finish(
        problem, kind, layout, state, &monitor, setup_secs, solve_secs,
    )
}
