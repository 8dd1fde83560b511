//! Generic splitting engines over flattened block variables.
//!
//! All schemes solve `min f(y) + g(z) [- ⟨b, w⟩]` subject to
//! `F* y + G* z [+ H* w] = c` in a Euclidean space `X`, with multiplier
//! `x ∈ X`. Each nonlinear block is updated by a [`BlockOracle`].

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub mod maps;
pub mod projectors;
mod schemes;
mod sigma;

pub use maps::{DenseMap, GramSolver, IdentityMap, LinearMap};
pub use projectors::{build_projectors, ProjectorPair};
pub use schemes::{
    initial_spadmm2s, initial_spadmm3c, run_admm_direct, run_spadmm2, run_spadmm2s, run_spadmm3c,
    LinearBlockOracle,
};
pub use sigma::{adapt_sigma, SigmaPolicy};

use crate::error::{Error, Result};

/// Exact minimizer of `f(v) + (σ/2)‖B* v - target‖² + (σ/2)‖v - prev‖²_T`
/// for one block, where `B` is [`BlockOracle::map`] and `T` is the oracle's
/// own semi-proximal operator (often zero).
pub trait BlockOracle {
    fn map(&self) -> &dyn LinearMap;
    fn solve(&self, target: &DVector<f64>, sigma: f64, prev: &DVector<f64>)
        -> Result<DVector<f64>>;
}

/// Block variables plus the multiplier. For the reduced two-block scheme
/// `x` holds `λ`, with the true multiplier being `b̄ + λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Iterate {
    pub blocks: Vec<DVector<f64>>,
    pub x: DVector<f64>,
}

/// Progress measurement for one iterate. `exact` is false when `eta` is
/// only a lower bound (some expensive components were skipped).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measure {
    pub eta: f64,
    pub primal: f64,
    pub dual: f64,
    pub exact: bool,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

/// Evaluates the termination residual of iterates as they are produced.
pub trait Monitor {
    fn observe(&mut self, k: usize, iterate: &Iterate, sigma: f64, tau: f64) -> Result<Measure>;
}

impl<F> Monitor for F
where
    F: FnMut(usize, &Iterate, f64, f64) -> Result<Measure>,
{
    fn observe(&mut self, k: usize, iterate: &Iterate, sigma: f64, tau: f64) -> Result<Measure> {
        self(k, iterate, sigma, tau)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplittingConfig {
    pub sigma0: f64,
    pub tau0: f64,
    pub rho: f64,
    pub c0: f64,
    /// Lower limit of the step-length safeguard.
    pub tau_floor: f64,
    pub safeguard: bool,
    pub max_iters: usize,
    pub tol: f64,
    pub sigma_policy: Option<SigmaPolicy>,
    pub stall_window: usize,
    pub stall_rel: f64,
}

impl Default for SplittingConfig {
    fn default() -> Self {
        SplittingConfig {
            sigma0: 1.0,
            tau0: 1.95,
            rho: 0.95,
            c0: 1.0,
            tau_floor: 1.618,
            safeguard: true,
            max_iters: 25_000,
            tol: 1e-6,
            sigma_policy: Some(SigmaPolicy::default()),
            stall_window: 2000,
            stall_rel: 1e-3,
        }
    }
}

impl SplittingConfig {
    /// Settings for the directly extended baseline: fixed step length.
    pub fn direct(tau: f64) -> Self {
        SplittingConfig {
            tau0: tau,
            safeguard: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma0 > 0.0
            && self.sigma0.is_finite()
            && self.tau0 > 0.0
            && self.tau0.is_finite()
            && self.rho > 0.0
            && self.rho < 1.0
            && self.c0 > 0.0
            && self.tau_floor > 0.0
            && self.tol > 0.0
            && self.max_iters > 0;
        if !ok {
            return Err(Error::InvalidInput(format!(
                "invalid splitting configuration: {self:?}"
            )));
        }
        if let Some(p) = &self.sigma_policy {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
    Stalled,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIters => "max_iters",
            Status::Stalled => "stalled",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    pub eta: f64,
    pub primal: f64,
    pub dual: f64,
    pub exact: bool,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub sigma: f64,
    pub tau: f64,
    pub tau_reset: bool,
    /// Seconds since the start of the run, monitor time included.
    pub elapsed: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterateLog {
    pub records: Vec<IterRecord>,
    pub status: Option<Status>,
    /// Time spent in the iteration loop, excluding monitor evaluations.
    pub iter_secs: f64,
    pub notes: Vec<String>,
}

impl IterateLog {
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.k)
    }

    pub fn tau_resets(&self) -> usize {
        self.records.iter().filter(|r| r.tau_reset).count()
    }

    pub fn last(&self) -> Option<&IterRecord> {
        self.records.last()
    }
}

/// Everything needed to continue a run where it stopped.
#[derive(Clone, Debug)]
pub struct RunState {
    pub iterate: Iterate,
    pub sigma: f64,
    pub tau: f64,
    pub log: IterateLog,
}

impl RunState {
    pub fn new(iterate: Iterate, cfg: &SplittingConfig) -> Self {
        RunState {
            iterate,
            sigma: cfg.sigma0,
            tau: cfg.tau0,
            log: IterateLog::default(),
        }
    }

    pub fn iterations(&self) -> usize {
        self.log.iterations()
    }
}

/// One iteration of a scheme. Returns the safeguard quantity when the
/// scheme has one.
pub(crate) trait Scheme {
    fn step(&mut self, state: &mut Iterate, sigma: f64, tau: f64) -> Result<Option<f64>>;
}

/// Runs `scheme` from `state` until convergence, stall, or
/// `cfg.max_iters` total iterations.
pub(crate) fn drive(
    scheme: &mut dyn Scheme,
    mut state: RunState,
    cfg: &SplittingConfig,
    monitor: &mut dyn Monitor,
) -> Result<RunState> {
    cfg.validate()?;
    state.log.status = None;
    let start = Instant::now();
    let elapsed_before = state.log.last().map_or(0.0, |r| r.elapsed);
    let first = state.iterations() + 1;
    let mut last_change = last_sigma_change(&state.log.records);
    for k in first..=cfg.max_iters {
        let t0 = Instant::now();
        let quantity = scheme
            .step(&mut state.iterate, state.sigma, state.tau)
            .map_err(|e| Error::Oracle {
                iteration: k,
                source: Box::new(e),
            })?;
        state.log.iter_secs += t0.elapsed().as_secs_f64();

        let mut tau_reset = false;
        if cfg.safeguard && state.tau > cfg.tau_floor {
            if let Some(q) = quantity {
                if q.is_nan() || q > cfg.c0 * (k as f64).powf(-1.2) {
                    state.tau = (cfg.rho * state.tau).max(cfg.tau_floor);
                    tau_reset = true;
                }
            }
        }

        let m = monitor.observe(k, &state.iterate, state.sigma, state.tau)?;
        state.log.records.push(IterRecord {
            k,
            eta: m.eta,
            primal: m.primal,
            dual: m.dual,
            exact: m.exact,
            primal_objective: m.primal_objective,
            dual_objective: m.dual_objective,
            sigma: state.sigma,
            tau: state.tau,
            tau_reset,
            elapsed: elapsed_before + start.elapsed().as_secs_f64(),
        });

        if m.exact && m.eta <= cfg.tol {
            state.log.status = Some(Status::Converged);
            return Ok(state);
        }
        if !m.eta.is_finite() || stalled(&state.log.records, cfg) {
            state.log.status = Some(Status::Stalled);
            return Ok(state);
        }
        if let Some(policy) = &cfg.sigma_policy {
            // The interval after a change is left to settle before the
            // balance is measured again.
            if k % policy.interval == 0 && k >= last_change + 2 * policy.interval {
                let recent =
                    &state.log.records[state.log.records.len().saturating_sub(policy.interval)..];
                if let Some((primal, dual)) = median_balance(recent) {
                    let next = adapt_sigma(primal, dual, state.sigma, policy);
                    if next != state.sigma {
                        state.sigma = next;
                        last_change = k;
                    }
                }
            }
        }
    }
    state.log.status = Some(Status::MaxIters);
    Ok(state)
}

fn last_sigma_change(records: &[IterRecord]) -> usize {
    records
        .windows(2)
        .rev()
        .find(|w| w[0].sigma != w[1].sigma)
        .map_or(0, |w| w[0].k)
}

/// Primal and dual groups of the exact record with the median
/// primal-to-dual ratio.
fn median_balance(records: &[IterRecord]) -> Option<(f64, f64)> {
    let mut exact: Vec<&IterRecord> = records.iter().filter(|r| r.exact).collect();
    let ratio = |r: &IterRecord| r.primal / r.dual.max(f64::MIN_POSITIVE);
    exact.sort_by(|a, b| ratio(a).total_cmp(&ratio(b)));
    exact.get(exact.len() / 2).map(|r| (r.primal, r.dual))
}

/// True when, over the latest `stall_window` iterations, neither the best
/// exact η nor the median exact η of a 100-iteration window improved by
/// `stall_rel` relative.
fn stalled(records: &[IterRecord], cfg: &SplittingConfig) -> bool {
    const SPAN: usize = 100;
    let w = cfg.stall_window;
    let len = records.len();
    if w == 0 || len < w + SPAN || !len.is_multiple_of(SPAN) {
        return false;
    }
    let exact = |rs: &[IterRecord]| {
        let mut etas: Vec<f64> = rs.iter().filter(|r| r.exact).map(|r| r.eta).collect();
        etas.sort_by(f64::total_cmp);
        etas
    };
    let median = |etas: &[f64]| etas.get(etas.len() / 2).copied();
    let keep = 1.0 - cfg.stall_rel;
    let best_improved = match (
        exact(&records[..len - w]).first(),
        exact(&records[len - w..]).first(),
    ) {
        (Some(&before), Some(&recent)) => recent <= keep * before,
        _ => true,
    };
    let median_improved = match (
        median(&exact(&records[len - w - SPAN..len - w])),
        median(&exact(&records[len - SPAN..])),
    ) {
        (Some(before), Some(recent)) => recent <= keep * before,
        _ => true,
    };
    !best_improved && !median_improved
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(k: usize, eta: f64) -> IterRecord {
        IterRecord {
            k,
            eta,
            primal: eta,
            dual: eta,
            exact: true,
            primal_objective: 0.0,
            dual_objective: 0.0,
            sigma: 1.0,
            tau: 1.618,
            tau_reset: false,
            elapsed: 0.0,
        }
    }

    #[test]
    fn stall_detection() {
        let cfg = SplittingConfig {
            stall_window: 100,
            ..SplittingConfig::default()
        };
        let flat: Vec<_> = (1..=300).map(|k| record(k, 1.0)).collect();
        assert!(stalled(&flat, &cfg));
        let falling: Vec<_> = (1..=300).map(|k| record(k, 1.0 / k as f64)).collect();
        assert!(!stalled(&falling, &cfg));
    }

    #[test]
    fn config_validation() {
        assert!(SplittingConfig::default().validate().is_ok());
        let bad = SplittingConfig {
            rho: 1.0,
            ..SplittingConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
