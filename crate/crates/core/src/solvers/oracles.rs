use nalgebra::{DMatrix, DVector};

use crate::admm::{BlockOracle, IdentityMap, LinearMap};
use crate::cones::{project_dual_polyhedral_slice, project_psd_matrix, PolyhedralPattern};
use crate::error::Result;
use crate::problem::ConstraintMap;

/// `S = Π_{S+}(target)` on the flattened matrix space.
pub(crate) struct PsdOracle {
    n: usize,
    map: IdentityMap,
}

impl PsdOracle {
    pub fn new(n: usize) -> Self {
        PsdOracle {
            n,
            map: IdentityMap::new(n * n),
        }
    }
}

pub(crate) fn project_psd_flat(n: usize, v: &[f64]) -> Result<Vec<f64>> {
    let m = DMatrix::from_column_slice(n, n, v);
    Ok(project_psd_matrix(&m)?.into_matrix().as_slice().to_vec())
}

impl BlockOracle for PsdOracle {
    fn map(&self) -> &dyn LinearMap {
        &self.map
    }

    fn solve(
        &self,
        target: &DVector<f64>,
        _sigma: f64,
        _prev: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(project_psd_flat(
            self.n,
            target.as_slice(),
        )?))
    }
}

/// `Z = Π_{K_p*}(target + M/σ)`: the shift enters the dual objective as
/// the linear term `-⟨M, Z⟩`.
pub(crate) struct DualPolyOracle<'p> {
    pattern: &'p PolyhedralPattern,
    map: IdentityMap,
}

impl<'p> DualPolyOracle<'p> {
    pub fn new(pattern: &'p PolyhedralPattern) -> Self {
        let n = pattern.order();
        DualPolyOracle {
            pattern,
            map: IdentityMap::new(n * n),
        }
    }
}

pub(crate) fn shifted_dual_projection(
    pattern: &PolyhedralPattern,
    target: &[f64],
    shift_scale: f64,
) -> Vec<f64> {
    let mut z = target.to_vec();
    if let Some(m) = pattern.shift() {
        for (v, s) in z.iter_mut().zip(m.as_slice()) {
            *v += shift_scale * s;
        }
    }
    project_dual_polyhedral_slice(pattern, &mut z);
    z
}

impl BlockOracle for DualPolyOracle<'_> {
    fn map(&self) -> &dyn LinearMap {
        &self.map
    }

    fn solve(
        &self,
        target: &DVector<f64>,
        sigma: f64,
        _prev: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(shifted_dual_projection(
            self.pattern,
            target.as_slice(),
            1.0 / sigma,
        )))
    }
}

/// `y_I ≥ 0` block with `g(y) = -⟨b_I, y⟩` and semi-proximal operator
/// `T = ρ_max I - A_I A_I*`, which makes the update a single clamp:
/// `y = Π₊(y_prev + (A_I(t - A_I* y_prev) + b_I/σ) / ρ_max)`.
pub(crate) struct IneqOracle<'p, M: LinearMap> {
    map: M,
    ineq: &'p ConstraintMap,
    b: &'p DVector<f64>,
    rho_max: f64,
}

impl<'p, M: LinearMap> IneqOracle<'p, M> {
    /// `map` must act as `A_I*` on its first `n²` coordinates and as zero
    /// elsewhere.
    pub fn new(map: M, ineq: &'p ConstraintMap, b: &'p DVector<f64>, rho_max: f64) -> Self {
        IneqOracle {
            map,
            ineq,
            b,
            rho_max,
        }
    }
}

impl<M: LinearMap> BlockOracle for IneqOracle<'_, M> {
    fn map(&self) -> &dyn LinearMap {
        &self.map
    }

    fn solve(
        &self,
        target: &DVector<f64>,
        sigma: f64,
        prev: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let n2 = self.ineq.order() * self.ineq.order();
        let mut t = target.rows(0, n2).into_owned();
        self.ineq.adjoint_add(prev, -1.0, t.as_mut_slice());
        let mut step = self.ineq.apply_slice(t.as_slice());
        step.axpy(1.0 / sigma, self.b, 1.0);
        Ok((prev + step / self.rho_max).map(|v| v.max(0.0)))
    }
}

/// Largest eigenvalue estimate of `A_I A_I*` and whether the power method
/// failed to settle (the Gershgorin bound is returned then).
pub(crate) fn estimate_rho_max(gram: &DMatrix<f64>) -> (f64, bool) {
    const STEPS: usize = 200;
    const TOL: f64 = 1e-10;
    const INFLATE: f64 = 1.0 + 1e-6;
    let m = gram.nrows();
    if m == 0 {
        return (0.0, false);
    }
    // deterministic start with no symmetry to get stuck on
    let mut v = DVector::from_fn(m, |i, _| 1.0 + 0.01 * ((i * 7919) % 101) as f64);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..STEPS {
        let w = gram * &v;
        let next = v.dot(&w);
        let nw = w.norm();
        if nw == 0.0 {
            return (0.0, false);
        }
        v = w / nw;
        if (next - lambda).abs() <= TOL * next.abs() {
            let rq = v.dot(&(gram * &v));
            return (rq.max(next) * INFLATE, false);
        }
        lambda = next;
    }
    let gershgorin = gram
        .row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    (gershgorin, true)
}
