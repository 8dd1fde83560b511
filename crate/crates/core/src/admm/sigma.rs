use crate::error::{Error, Result};

/// Penalty update from the balance of primal and dual residual groups.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaPolicy {
    pub interval: usize,
    pub scale: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub eps: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Default for SigmaPolicy {
    fn default() -> Self {
        SigmaPolicy {
            interval: 50,
            scale: 1.25,
            band_lo: 0.2,
            band_hi: 5.0,
            eps: 1e-16,
            sigma_min: 1e-6,
            sigma_max: 1e6,
        }
    }
}

impl SigmaPolicy {
    pub fn validate(&self) -> Result<()> {
        let ok = self.interval > 0
            && self.scale > 1.0
            && self.band_lo > 0.0
            && self.band_lo <= self.band_hi
            && self.eps > 0.0
            && self.sigma_min > 0.0
            && self.sigma_min <= self.sigma_max;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "invalid sigma policy: {self:?}"
            )))
        }
    }
}

/// `r = primal / max(dual, ε)`; σ shrinks by `scale` above the band and
/// grows by it below, clamped to `[sigma_min, sigma_max]`. A smaller σ
/// weights the primal residual more heavily in the next iterations.
pub fn adapt_sigma(primal: f64, dual: f64, sigma: f64, policy: &SigmaPolicy) -> f64 {
    let r = primal / dual.max(policy.eps);
    let next = if r > policy.band_hi {
        sigma / policy.scale
    } else if r < policy.band_lo {
        sigma * policy.scale
    } else {
        sigma
    };
    if next.is_finite() {
        next.clamp(policy.sigma_min, policy.sigma_max)
    } else {
        sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_residuals_leave_sigma() {
        let p = SigmaPolicy::default();
        assert_eq!(adapt_sigma(1e-3, 1e-3, 2.0, &p), 2.0);
    }

    #[test]
    fn large_ratio_scales_down() {
        let p = SigmaPolicy::default();
        assert_eq!(adapt_sigma(100.0, 1.0, 1.0, &p), 0.8);
        assert_eq!(adapt_sigma(1.0, 100.0, 1.0, &p), 1.25);
    }

    #[test]
    fn clamped_to_limits() {
        let p = SigmaPolicy::default();
        assert_eq!(adapt_sigma(100.0, 1.0, p.sigma_min, &p), p.sigma_min);
        assert_eq!(adapt_sigma(1.0, 100.0, p.sigma_max, &p), p.sigma_max);
    }

    #[test]
    fn zero_dual_uses_epsilon() {
        let p = SigmaPolicy::default();
        assert_eq!(adapt_sigma(1e-3, 0.0, 1.0, &p), 0.8);
        assert_eq!(adapt_sigma(0.0, 0.0, 1.0, &p), 1.25);
    }
}
