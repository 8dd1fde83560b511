//! Inequality handling through a scaled slack copy of `Z`.
//!
//! The dual with inequalities is rewritten on `X × X` as
//! `S + A_I* y_I + Z + A_E* y_E = C`, `α(U - Z) = 0`, giving the blocks
//! `(S, U)` (projections), `y_I` (majorized clamp) and `(Z, y_E)` (linear,
//! solved through the structured factorization below).

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::monitor::{ConicMonitor, Layout};
use super::oracles::{estimate_rho_max, project_psd_flat, shifted_dual_projection, IneqOracle};
use super::{finish, SolveOptions, SolveOutput, SolverKind};
use crate::admm::{
    initial_spadmm3c, run_spadmm3c, BlockOracle, GramSolver, Iterate, LinearMap, ProjectorPair,
    RunState, Status,
};
use crate::cones::PolyhedralPattern;
use crate::error::{Error, Result};
use crate::linalg::CholeskyFactor;
use crate::problem::{ConicProblem, ConstraintMap};

pub const ALPHA_MIN: f64 = 3.0;
pub const ALPHA_MAX: f64 = 6.0;
const ALPHA_STEP: f64 = 0.5;
const ALPHA_PERIOD: usize = 100;

/// `(S, U) ↦ (S, αU)`.
struct SlackPairMap {
    n2: usize,
    alpha: f64,
}

impl LinearMap for SlackPairMap {
    fn block_dim(&self) -> usize {
        2 * self.n2
    }

    fn space_dim(&self) -> usize {
        2 * self.n2
    }

    fn adjoint(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = v.clone();
        out.rows_mut(self.n2, self.n2).scale_mut(self.alpha);
        out
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.adjoint(x)
    }
}

/// `y_I ↦ (A_I* y_I, 0)`.
struct IneqPairMap<'p> {
    ineq: &'p ConstraintMap,
}

impl LinearMap for IneqPairMap<'_> {
    fn block_dim(&self) -> usize {
        self.ineq.len()
    }

    fn space_dim(&self) -> usize {
        2 * self.ineq.order() * self.ineq.order()
    }

    fn adjoint(&self, v: &DVector<f64>) -> DVector<f64> {
        let n2 = self.ineq.order() * self.ineq.order();
        let mut out = DVector::zeros(2 * n2);
        self.ineq.adjoint_add(v, 1.0, &mut out.as_mut_slice()[..n2]);
        out
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let n2 = self.ineq.order() * self.ineq.order();
        self.ineq.apply_slice(&x.as_slice()[..n2])
    }
}

/// `(Z, y_E) ↦ (Z + A_E* y_E, -αZ)`.
struct LinearPairMap<'p> {
    eq: &'p ConstraintMap,
    alpha: f64,
}

impl LinearMap for LinearPairMap<'_> {
    fn block_dim(&self) -> usize {
        let n = self.eq.order();
        n * n + self.eq.len()
    }

    fn space_dim(&self) -> usize {
        let n = self.eq.order();
        2 * n * n
    }

    fn adjoint(&self, v: &DVector<f64>) -> DVector<f64> {
        let n2 = self.eq.order() * self.eq.order();
        let z = &v.as_slice()[..n2];
        let y = v.rows(n2, self.eq.len()).into_owned();
        let mut out = DVector::zeros(2 * n2);
        let s = out.as_mut_slice();
        s[..n2].copy_from_slice(z);
        self.eq.adjoint_add(&y, 1.0, &mut s[..n2]);
        for (o, zi) in s[n2..].iter_mut().zip(z) {
            *o = -self.alpha * zi;
        }
        out
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let n2 = self.eq.order() * self.eq.order();
        let (x1, x2) = x.as_slice().split_at(n2);
        let mut out = DVector::zeros(n2 + self.eq.len());
        for i in 0..n2 {
            out[i] = x1[i] - self.alpha * x2[i];
        }
        out.rows_mut(n2, self.eq.len())
            .copy_from(&self.eq.apply_slice(x1));
        out
    }
}

/// Solves `[[(1+α²)I, A_E*], [A_E, A_E A_E*]] (z, y) = (r1, r2)` by block
/// elimination with one Cholesky solve of `A_E A_E*`.
struct LinearPairSolver<'p> {
    eq: &'p ConstraintMap,
    factor: &'p CholeskyFactor,
    alpha: f64,
}

impl GramSolver for LinearPairSolver<'_> {
    fn dim(&self) -> usize {
        let n = self.eq.order();
        n * n + self.eq.len()
    }

    fn solve(&self, r: &DVector<f64>) -> DVector<f64> {
        let n2 = self.eq.order() * self.eq.order();
        let m = self.eq.len();
        let a2 = self.alpha * self.alpha;
        let d = 1.0 + a2;
        let r1 = &r.as_slice()[..n2];
        let mut rhs = r.rows(n2, m).into_owned();
        rhs.axpy(-1.0 / d, &self.eq.apply_slice(r1), 1.0);
        let y = self.factor.solve(&rhs) * (d / a2);
        let mut out = DVector::zeros(n2 + m);
        {
            let s = out.as_mut_slice();
            s[..n2].copy_from_slice(r1);
            self.eq.adjoint_add(&y, -1.0, &mut s[..n2]);
            for v in &mut s[..n2] {
                *v /= d;
            }
        }
        out.rows_mut(n2, m).copy_from(&y);
        out
    }
}

/// `S = Π_{S+}(t1)`, `U = Π_{K_p*}(t2/α + M/(σα²))`.
struct SlackPairOracle<'p> {
    n: usize,
    pattern: &'p PolyhedralPattern,
    map: SlackPairMap,
}

impl BlockOracle for SlackPairOracle<'_> {
    fn map(&self) -> &dyn LinearMap {
        &self.map
    }

    fn solve(
        &self,
        target: &DVector<f64>,
        sigma: f64,
        _prev: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let n2 = self.n * self.n;
        let a = self.map.alpha;
        let (t1, t2) = target.as_slice().split_at(n2);
        let s = project_psd_flat(self.n, t1)?;
        let scaled: Vec<f64> = t2.iter().map(|v| v / a).collect();
        let u = shifted_dual_projection(self.pattern, &scaled, 1.0 / (sigma * a * a));
        let mut out = DVector::zeros(2 * n2);
        out.as_mut_slice()[..n2].copy_from_slice(&s);
        out.as_mut_slice()[n2..].copy_from_slice(&u);
        Ok(out)
    }
}

/// Precomputed data for the slack reformulation at a given `α`.
#[derive(Clone, Debug, PartialEq)]
pub struct IneqReformulation {
    /// Slack scaling after clamping to `[3, 6]`.
    pub alpha: f64,
    /// Whether the requested `α` had to be clamped.
    pub alpha_clamped: bool,
    /// Upper estimate of `λ_max(A_I A_I*)`.
    pub rho_max: f64,
    /// True when the power method did not settle and `rho_max` is the
    /// Gershgorin bound.
    pub rho_fallback: bool,
}

impl IneqReformulation {
    /// Solves the system with the Gram matrix of the linear `(Z, y_E)`
    /// block for this `α`.
    pub fn solve_linear_block(&self, problem: &ConicProblem, r: &DVector<f64>) -> DVector<f64> {
        LinearPairSolver {
            eq: problem.eq(),
            factor: problem.gram_factor(),
            alpha: self.alpha,
        }
        .solve(r)
    }

    /// The dense Gram matrix of the linear `(Z, y_E)` block, for checking.
    pub fn linear_block_gram(&self, problem: &ConicProblem) -> DMatrix<f64> {
        LinearPairMap {
            eq: problem.eq(),
            alpha: self.alpha,
        }
        .gram()
    }
}

pub fn reformulate_ineq(problem: &ConicProblem, alpha: f64) -> Result<IneqReformulation> {
    if problem.m_ineq() == 0 {
        return Err(Error::InvalidInput(
            "the slack reformulation needs inequality constraints".into(),
        ));
    }
    if !alpha.is_finite() {
        return Err(Error::InvalidInput(format!(
            "invalid slack scaling {alpha}"
        )));
    }
    let clamped = alpha.clamp(ALPHA_MIN, ALPHA_MAX);
    let (rho_max, rho_fallback) = estimate_rho_max(&problem.ineq().gram_matrix());
    Ok(IneqReformulation {
        alpha: clamped,
        alpha_clamped: clamped != alpha,
        rho_max,
        rho_fallback,
    })
}

/// Moves `α` by one step when the `U = Z` consistency residual is the worst
/// component, or ten times smaller than every other one.
fn next_alpha(alpha: f64, uz: f64, others: &[f64]) -> f64 {
    let worst = others.iter().copied().fold(0.0, f64::max);
    let best = others.iter().copied().fold(f64::INFINITY, f64::min);
    if uz > worst {
        (alpha + ALPHA_STEP).min(ALPHA_MAX)
    } else if 10.0 * uz < best {
        (alpha - ALPHA_STEP).max(ALPHA_MIN)
    } else {
        alpha
    }
}

fn uz_residual(it: &Iterate, n2: usize) -> f64 {
    let u = &it.blocks[0].as_slice()[n2..];
    let z = &it.blocks[2].as_slice()[..n2];
    let d: f64 = u
        .iter()
        .zip(z)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let nz: f64 = z.iter().map(|a| a * a).sum::<f64>().sqrt();
    d / (1.0 + nz)
}

pub(super) fn solve_conic_spadmm3c(
    problem: &ConicProblem,
    opts: &SolveOptions,
) -> Result<SolveOutput> {
    let setup = Instant::now();
    let mut reform = reformulate_ineq(problem, opts.alpha0)?;
    let n = problem.n();
    let n2 = n * n;
    let m_e = problem.m_eq();
    let cfg = opts.config(problem, SolverKind::Spadmm3c);
    let mut c = DVector::zeros(2 * n2);
    c.as_mut_slice()[..n2].copy_from_slice(problem.cost().as_slice());
    let mut b = DVector::zeros(n2 + m_e);
    b.rows_mut(n2, m_e).copy_from(problem.b_eq());

    let ineq_oracle = IneqOracle::new(
        IneqPairMap {
            ineq: problem.ineq(),
        },
        problem.ineq(),
        problem.b_ineq(),
        reform.rho_max,
    );
    let mut notes = Vec::new();
    if reform.alpha_clamped {
        notes.push(format!("alpha {} clamped to {}", opts.alpha0, reform.alpha));
    }
    if reform.rho_fallback {
        notes.push("power iteration did not settle; Gershgorin bound used for rho_max".into());
    }

    let mut state: Option<RunState> = None;
    let mut setup_secs = 0.0;
    let clock = Instant::now();
    let mut monitor = ConicMonitor::new(problem, Layout::Reformulated, cfg.tol, opts.eig_every);
    loop {
        let alpha = reform.alpha;
        let h = LinearPairMap {
            eq: problem.eq(),
            alpha,
        };
        let solver = LinearPairSolver {
            eq: problem.eq(),
            factor: problem.gram_factor(),
            alpha,
        };
        let proj = ProjectorPair::with_solver(&h, Box::new(solver), b.clone())?;
        let f_oracle = SlackPairOracle {
            n,
            pattern: problem.pattern(),
            map: SlackPairMap { n2, alpha },
        };
        let current = match state.take() {
            None => {
                let it = initial_spadmm3c(
                    &f_oracle,
                    &ineq_oracle,
                    &proj,
                    &c,
                    DVector::zeros(2 * n2),
                    DVector::zeros(problem.m_ineq()),
                    &DVector::zeros(2 * n2),
                );
                setup_secs = setup.elapsed().as_secs_f64();
                RunState::new(it, &cfg)
            }
            Some(mut s) => {
                // keep X, rescale the copy so that Hx = b holds for the new α
                let (x1, x2) = s.iterate.x.as_mut_slice().split_at_mut(n2);
                for (a, b) in x2.iter_mut().zip(x1.iter()) {
                    *a = b / alpha;
                }
                s
            }
        };
        let chunk_end = if opts.adapt_alpha {
            (current.iterations() + ALPHA_PERIOD).min(cfg.max_iters)
        } else {
            cfg.max_iters
        };
        let chunk_cfg = crate::admm::SplittingConfig {
            max_iters: chunk_end,
            ..cfg.clone()
        };
        let next = run_spadmm3c(
            &f_oracle,
            &ineq_oracle,
            &proj,
            &c,
            current,
            &chunk_cfg,
            &mut monitor,
        )?;
        let done = next.log.status != Some(Status::MaxIters) || chunk_end >= cfg.max_iters;
        if done {
            let secs = clock.elapsed().as_secs_f64();
            let uz = uz_residual(&next.iterate, n2);
            let mut out = finish(
                problem,
                SolverKind::Spadmm3c,
                Layout::Reformulated,
                next,
                &monitor,
                setup_secs,
                secs,
            )?;
            out.log.notes.extend(notes);
            out.alpha = Some(alpha);
            out.uz_consistency = Some(uz);
            return Ok(out);
        }
        if let Some(r) = monitor.last {
            let uz = uz_residual(&next.iterate, n2);
            let others = [
                r.eta_p,
                r.eta_d,
                r.eta_k,
                r.eta_pc,
                r.eta_kstar,
                r.eta_pcstar,
                r.eta_c1,
                r.eta_c2,
                r.eta_i.unwrap_or(0.0),
                r.eta_istar.unwrap_or(0.0),
            ];
            let a = next_alpha(alpha, uz, &others);
            if a != alpha {
                notes.push(format!(
                    "iteration {}: alpha {alpha} -> {a}",
                    next.iterations()
                ));
                reform.alpha = a;
            }
        }
        state = Some(next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_rule() {
        assert_eq!(next_alpha(4.0, 1.0, &[0.1, 0.2]), 4.5);
        assert_eq!(next_alpha(6.0, 1.0, &[0.1]), 6.0);
        assert_eq!(next_alpha(4.0, 1e-5, &[0.1, 0.2]), 3.5);
        assert_eq!(next_alpha(3.0, 1e-5, &[0.1]), 3.0);
        assert_eq!(next_alpha(4.0, 0.05, &[0.1, 0.2]), 4.0);
    }
}
