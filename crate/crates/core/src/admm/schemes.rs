use nalgebra::DVector;

use super::maps::LinearMap;
use super::projectors::ProjectorPair;
use super::{drive, BlockOracle, Iterate, Monitor, RunState, Scheme, SplittingConfig};
use crate::error::{Error, Result};

/// `c - Σ others - x/σ`, the target every Gauss-Seidel block update shares.
fn block_target(
    c: &DVector<f64>,
    others: &[&DVector<f64>],
    x: &DVector<f64>,
    sigma: f64,
) -> DVector<f64> {
    let mut t = c.clone();
    for o in others {
        t -= *o;
    }
    t.axpy(-1.0 / sigma, x, 1.0);
    t
}

/// `Σ images - c`.
fn constraint_residual(images: &[&DVector<f64>], c: &DVector<f64>) -> DVector<f64> {
    let mut r = images[0].clone();
    for im in &images[1..] {
        r += *im;
    }
    r -= c;
    r
}

fn check_len(context: &'static str, expected: usize, v: &DVector<f64>) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

fn check_blocks(it: &Iterate, maps: &[&dyn LinearMap], c: &DVector<f64>) -> Result<()> {
    if it.blocks.len() != maps.len() {
        return Err(Error::DimensionMismatch {
            context: "number of blocks",
            expected: maps.len(),
            found: it.blocks.len(),
        });
    }
    for (b, m) in it.blocks.iter().zip(maps) {
        check_len("block variable", m.block_dim(), b)?;
        if m.space_dim() != c.len() {
            return Err(Error::DimensionMismatch {
                context: "block map range",
                expected: c.len(),
                found: m.space_dim(),
            });
        }
    }
    check_len("multiplier", c.len(), &it.x)
}

/// Block oracle for `h(w) = -⟨b, w⟩`: `w = (HH*)⁻¹(H target + b/σ)`.
pub struct LinearBlockOracle<'p, 'a> {
    proj: &'p ProjectorPair<'a>,
}

impl<'p, 'a> LinearBlockOracle<'p, 'a> {
    pub fn new(proj: &'p ProjectorPair<'a>) -> Self {
        LinearBlockOracle { proj }
    }
}

impl BlockOracle for LinearBlockOracle<'_, '_> {
    fn map(&self) -> &dyn LinearMap {
        self.proj.map()
    }

    fn solve(
        &self,
        target: &DVector<f64>,
        sigma: f64,
        _prev: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let mut r = self.proj.map().apply(target);
        r.axpy(1.0 / sigma, self.proj.b(), 1.0);
        Ok(self.proj.solve_gram(&r))
    }
}

struct Spadmm2<'o> {
    f: &'o dyn BlockOracle,
    g: Option<&'o dyn BlockOracle>,
    c: &'o DVector<f64>,
}

impl Scheme for Spadmm2<'_> {
    fn step(&mut self, it: &mut Iterate, sigma: f64, tau: f64) -> Result<Option<f64>> {
        let Some(g) = self.g else {
            let t = block_target(self.c, &[], &it.x, sigma);
            it.blocks[0] = self.f.solve(&t, sigma, &it.blocks[0])?;
            let fy = self.f.map().adjoint(&it.blocks[0]);
            let r = constraint_residual(&[&fy], self.c);
            it.x.axpy(tau * sigma, &r, 1.0);
            return Ok(Some(r.norm_squared() / tau));
        };
        let gz_old = g.map().adjoint(&it.blocks[1]);
        let t = block_target(self.c, &[&gz_old], &it.x, sigma);
        it.blocks[0] = self.f.solve(&t, sigma, &it.blocks[0])?;
        let fy = self.f.map().adjoint(&it.blocks[0]);
        let t = block_target(self.c, &[&fy], &it.x, sigma);
        it.blocks[1] = g.solve(&t, sigma, &it.blocks[1])?;
        let gz = g.map().adjoint(&it.blocks[1]);
        let r = constraint_residual(&[&fy, &gz], self.c);
        it.x.axpy(tau * sigma, &r, 1.0);
        Ok(Some(
            (&gz - &gz_old).norm_squared() + r.norm_squared() / tau,
        ))
    }
}

/// Two-block semi-proximal ADMM; `g = None` runs the single-block
/// (z-absent) method. Blocks are `[y]` or `[y, z]`.
pub fn run_spadmm2(
    f: &dyn BlockOracle,
    g: Option<&dyn BlockOracle>,
    c: &DVector<f64>,
    state: RunState,
    cfg: &SplittingConfig,
    monitor: &mut dyn Monitor,
) -> Result<RunState> {
    let mut maps = vec![f.map()];
    maps.extend(g.map(|g| g.map()));
    check_blocks(&state.iterate, &maps, c)?;
    drive(&mut Spadmm2 { f, g, c }, state, cfg, monitor)
}

struct Direct<'o> {
    oracles: &'o [&'o dyn BlockOracle],
    c: &'o DVector<f64>,
}

impl Scheme for Direct<'_> {
    fn step(&mut self, it: &mut Iterate, sigma: f64, tau: f64) -> Result<Option<f64>> {
        let mut images: Vec<DVector<f64>> = self
            .oracles
            .iter()
            .zip(&it.blocks)
            .map(|(o, b)| o.map().adjoint(b))
            .collect();
        for i in 0..self.oracles.len() {
            let others: Vec<&DVector<f64>> = images
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, im)| im)
                .collect();
            let t = block_target(self.c, &others, &it.x, sigma);
            it.blocks[i] = self.oracles[i].solve(&t, sigma, &it.blocks[i])?;
            images[i] = self.oracles[i].map().adjoint(&it.blocks[i]);
        }
        let refs: Vec<&DVector<f64>> = images.iter().collect();
        let r = constraint_residual(&refs, self.c);
        it.x.axpy(tau * sigma, &r, 1.0);
        Ok(None)
    }
}

/// Directly extended Gauss-Seidel ADMM over any number of blocks with a
/// fixed step length; `cfg.safeguard` is ignored.
pub fn run_admm_direct(
    oracles: &[&dyn BlockOracle],
    c: &DVector<f64>,
    state: RunState,
    cfg: &SplittingConfig,
    monitor: &mut dyn Monitor,
) -> Result<RunState> {
    if oracles.is_empty() {
        return Err(Error::InvalidInput("at least one block is required".into()));
    }
    let maps: Vec<&dyn LinearMap> = oracles.iter().map(|o| o.map()).collect();
    check_blocks(&state.iterate, &maps, c)?;
    drive(&mut Direct { oracles, c }, state, cfg, monitor)
}

/// Starting point for [`run_spadmm3c`]: `x` is moved onto `{Hx = b}` and
/// `w` is the least-squares completion of `(y, z)`.
pub fn initial_spadmm3c(
    f: &dyn BlockOracle,
    g: &dyn BlockOracle,
    proj: &ProjectorPair<'_>,
    c: &DVector<f64>,
    y0: DVector<f64>,
    z0: DVector<f64>,
    x_raw: &DVector<f64>,
) -> Iterate {
    let v = c - f.map().adjoint(&y0) - g.map().adjoint(&z0);
    let w0 = proj.solve_w(&v);
    Iterate {
        blocks: vec![y0, z0, w0],
        x: proj.correct_x(x_raw),
    }
}

/// Longest interval between re-projections of `x` onto `{Hx = b}`.
const MAX_CORRECTION_PERIOD: usize = 50;

struct Spadmm3c<'o, 'a> {
    f: &'o dyn BlockOracle,
    g: &'o dyn BlockOracle,
    proj: &'o ProjectorPair<'a>,
    c: &'o DVector<f64>,
    period: usize,
    since_correction: usize,
}

impl Spadmm3c<'_, '_> {
    /// `Hr = 0` holds only up to rounding, so `x` drifts off `{Hx = b}`.
    /// The drift removed at each correction sets the next period.
    fn correct(&mut self, x: &mut DVector<f64>) {
        let h = self.proj.map();
        let gap = self.proj.b() - h.apply(x);
        let rel = gap.norm() / (1.0 + self.proj.b().norm());
        *x += h.adjoint(&self.proj.solve_gram(&gap));
        self.since_correction = 0;
        if rel > 1e-13 {
            self.period = (self.period / 2).max(1);
        } else if rel < 1e-14 {
            self.period = (self.period * 2).min(MAX_CORRECTION_PERIOD);
        }
    }
}

impl Scheme for Spadmm3c<'_, '_> {
    fn step(&mut self, it: &mut Iterate, sigma: f64, tau: f64) -> Result<Option<f64>> {
        let h = self.proj.map();
        let gz_old = self.g.map().adjoint(&it.blocks[1]);
        let hw_old = h.adjoint(&it.blocks[2]);

        let t = block_target(self.c, &[&gz_old, &hw_old], &it.x, sigma);
        it.blocks[0] = self.f.solve(&t, sigma, &it.blocks[0])?;
        let fy = self.f.map().adjoint(&it.blocks[0]);

        let w_half = self.proj.solve_w(&(self.c - &fy - &gz_old));
        let hw_half = h.adjoint(&w_half);

        let t = block_target(self.c, &[&fy, &hw_half], &it.x, sigma);
        it.blocks[1] = self.g.solve(&t, sigma, &it.blocks[1])?;
        let gz = self.g.map().adjoint(&it.blocks[1]);

        it.blocks[2] = self.proj.solve_w(&(self.c - &fy - &gz));
        let hw = h.adjoint(&it.blocks[2]);

        let r = constraint_residual(&[&fy, &gz, &hw], self.c);
        it.x.axpy(tau * sigma, &r, 1.0);
        self.since_correction += 1;
        if self.since_correction >= self.period {
            self.correct(&mut it.x);
        }
        let d = (&gz - &gz_old) + (&hw - &hw_half);
        Ok(Some(d.norm_squared() + r.norm_squared() / tau))
    }
}

/// Convergent three-block sPADMM with the `y → w → z → w` cycle.
/// Blocks are `[y, z, w]`; `x` must satisfy `Hx = b`.
pub fn run_spadmm3c(
    f: &dyn BlockOracle,
    g: &dyn BlockOracle,
    proj: &ProjectorPair<'_>,
    c: &DVector<f64>,
    state: RunState,
    cfg: &SplittingConfig,
    monitor: &mut dyn Monitor,
) -> Result<RunState> {
    check_blocks(&state.iterate, &[f.map(), g.map(), proj.map()], c)?;
    let h = proj.map();
    let gap = (h.apply(&state.iterate.x) - proj.b()).norm();
    if gap > 1e-8 * (1.0 + proj.b().norm() + state.iterate.x.norm()) {
        return Err(Error::Precondition(format!(
            "initial multiplier violates Hx = b (residual {gap:e})"
        )));
    }
    let mut scheme = Spadmm3c {
        f,
        g,
        proj,
        c,
        period: 1,
        since_correction: 0,
    };
    drive(&mut scheme, state, cfg, monitor)
}

/// Starting point for [`run_spadmm2s`] with `λ = Q λ_raw`.
pub fn initial_spadmm2s(
    proj: &ProjectorPair<'_>,
    y0: DVector<f64>,
    z0: DVector<f64>,
    lambda_raw: &DVector<f64>,
) -> Iterate {
    Iterate {
        blocks: vec![y0, z0],
        x: proj.apply_q(lambda_raw),
    }
}

struct Spadmm2s<'o, 'a> {
    f: &'o dyn BlockOracle,
    g: &'o dyn BlockOracle,
    proj: &'o ProjectorPair<'a>,
    c: &'o DVector<f64>,
}

impl Spadmm2s<'_, '_> {
    /// `-(b̄ + Qλ)/σ - Q(other - c) + P(own)`.
    fn target(
        &self,
        qlambda: &DVector<f64>,
        other: &DVector<f64>,
        own: &DVector<f64>,
        sigma: f64,
    ) -> DVector<f64> {
        let mut t = self.proj.apply_p(own);
        t -= self.proj.apply_q(&(other - self.c));
        t.axpy(-1.0 / sigma, &(self.proj.bbar() + qlambda), 1.0);
        t
    }
}

impl Scheme for Spadmm2s<'_, '_> {
    fn step(&mut self, it: &mut Iterate, sigma: f64, tau: f64) -> Result<Option<f64>> {
        let qlambda = self.proj.apply_q(&it.x);
        let fy_old = self.f.map().adjoint(&it.blocks[0]);
        let gz_old = self.g.map().adjoint(&it.blocks[1]);

        let t = self.target(&qlambda, &gz_old, &fy_old, sigma);
        it.blocks[0] = self.f.solve(&t, sigma, &it.blocks[0])?;
        let fy = self.f.map().adjoint(&it.blocks[0]);

        let t = self.target(&qlambda, &fy, &gz_old, sigma);
        it.blocks[1] = self.g.solve(&t, sigma, &it.blocks[1])?;
        let gz = self.g.map().adjoint(&it.blocks[1]);

        let qr = self.proj.apply_q(&constraint_residual(&[&fy, &gz], self.c));
        it.x.axpy(tau * sigma, &qr, 1.0);
        let qdz = self.proj.apply_q(&(&gz - &gz_old));
        Ok(Some(qdz.norm_squared() + qr.norm_squared() / tau))
    }
}

/// Two-block sPADMM on the problem with `w` eliminated through `P`/`Q`.
/// Blocks are `[y, z]`; `x` holds `λ`, which must lie in `Range(Q)`.
pub fn run_spadmm2s(
    f: &dyn BlockOracle,
    g: &dyn BlockOracle,
    proj: &ProjectorPair<'_>,
    c: &DVector<f64>,
    state: RunState,
    cfg: &SplittingConfig,
    monitor: &mut dyn Monitor,
) -> Result<RunState> {
    check_blocks(&state.iterate, &[f.map(), g.map()], c)?;
    let off = proj.apply_p(&state.iterate.x).norm();
    if off > 1e-10 * (1.0 + state.iterate.x.norm()) {
        return Err(Error::Precondition(format!(
            "initial λ is not in the range of Q (component {off:e} along Range(H*))"
        )));
    }
    drive(&mut Spadmm2s { f, g, proj, c }, state, cfg, monitor)
}
