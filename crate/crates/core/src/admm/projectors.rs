use nalgebra::DVector;

use super::maps::{GramSolver, LinearMap};
use crate::error::{Error, Result};
use crate::linalg::CholeskyFactor;

/// The orthogonal projectors `P = H*(HH*)⁻¹H` onto `Range(H*)` and
/// `Q = I - P`, together with `b̄ = H*(HH*)⁻¹b`.
pub struct ProjectorPair<'a> {
    h: &'a dyn LinearMap,
    solver: Box<dyn GramSolver + 'a>,
    b: DVector<f64>,
    bbar: DVector<f64>,
}

impl<'a> ProjectorPair<'a> {
    /// Uses `solver` for systems with `HH*` instead of factoring it here.
    pub fn with_solver(
        h: &'a dyn LinearMap,
        solver: Box<dyn GramSolver + 'a>,
        b: DVector<f64>,
    ) -> Result<Self> {
        if solver.dim() != h.block_dim() {
            return Err(Error::DimensionMismatch {
                context: "Gram solver order",
                expected: h.block_dim(),
                found: solver.dim(),
            });
        }
        if b.len() != h.block_dim() {
            return Err(Error::DimensionMismatch {
                context: "right-hand side b",
                expected: h.block_dim(),
                found: b.len(),
            });
        }
        let bbar = h.adjoint(&solver.solve(&b));
        Ok(ProjectorPair { h, solver, b, bbar })
    }

    pub fn map(&self) -> &dyn LinearMap {
        self.h
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn bbar(&self) -> &DVector<f64> {
        &self.bbar
    }

    /// `(HH*)⁻¹ H v`, the minimizer of `‖H* w - v‖`.
    pub fn solve_w(&self, v: &DVector<f64>) -> DVector<f64> {
        self.solver.solve(&self.h.apply(v))
    }

    /// `(HH*)⁻¹ r`.
    pub fn solve_gram(&self, r: &DVector<f64>) -> DVector<f64> {
        self.solver.solve(r)
    }

    pub fn apply_p(&self, v: &DVector<f64>) -> DVector<f64> {
        self.h.adjoint(&self.solve_w(v))
    }

    pub fn apply_q(&self, v: &DVector<f64>) -> DVector<f64> {
        v - self.apply_p(v)
    }

    /// Shifts `x` onto `{x : Hx = b}` along `Range(H*)`.
    pub fn correct_x(&self, x: &DVector<f64>) -> DVector<f64> {
        let r = &self.b - self.h.apply(x);
        x + self.h.adjoint(&self.solver.solve(&r))
    }
}

/// Factors `HH*` densely and builds the projector pair.
pub fn build_projectors<'a>(h: &'a dyn LinearMap, b: DVector<f64>) -> Result<ProjectorPair<'a>> {
    let factor = CholeskyFactor::new(h.gram())?;
    ProjectorPair::with_solver(h, Box::new(factor), b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admm::maps::{DenseMap, IdentityMap};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_map_gives_full_projector() {
        let h = IdentityMap::new(3);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let pq = build_projectors(&h, b.clone()).unwrap();
        let v = DVector::from_vec(vec![3.0, 1.0, -1.0]);
        assert_eq!(pq.apply_p(&v), v);
        assert_eq!(pq.apply_q(&v).norm(), 0.0);
        assert_eq!(pq.bbar(), &b);
    }

    #[test]
    fn coordinate_row_projector() {
        // H = (1, 0), so H* w = (w, 0)
        let h = DenseMap::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0]));
        let pq = build_projectors(&h, DVector::from_vec(vec![0.0])).unwrap();
        let v = DVector::from_vec(vec![2.0, 5.0]);
        assert_eq!(pq.apply_p(&v).as_slice(), &[2.0, 0.0]);
        assert_eq!(pq.apply_q(&v).as_slice(), &[0.0, 5.0]);
    }

    #[test]
    fn rank_deficient_h_is_rejected() {
        let h = DenseMap::new(DMatrix::from_column_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]));
        assert!(matches!(
            build_projectors(&h, DVector::zeros(2)),
            Err(Error::SurjectivityViolation { .. })
        ));
    }

    #[test]
    fn random_projector_identities_against_dense_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = DMatrix::from_fn(7, 3, |_, _| rng.gen_range(-1.0..1.0));
        let h = DenseMap::new(m.clone());
        let pq = build_projectors(&h, DVector::zeros(3)).unwrap();
        // dense oracle: P = M (MᵀM)⁻¹ Mᵀ
        let p_dense = &m * (m.tr_mul(&m)).try_inverse().unwrap() * m.transpose();
        let mut p_cols = DMatrix::zeros(7, 7);
        for j in 0..7 {
            let mut e = DVector::zeros(7);
            e[j] = 1.0;
            p_cols.set_column(j, &pq.apply_p(&e));
        }
        assert!((&p_cols - &p_dense).abs().max() < 1e-10);
        let q = DMatrix::identity(7, 7) - &p_dense;
        assert!((&q * &q - &q).abs().max() < 1e-10);
        assert!((m.transpose() * &q).abs().max() < 1e-10);
        assert!((&p_dense * &m - &m).abs().max() < 1e-10);
    }

    #[test]
    fn corrected_x_satisfies_constraint() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = DMatrix::from_fn(6, 2, |_, _| rng.gen_range(-1.0..1.0));
        let h = DenseMap::new(m);
        let b = DVector::from_vec(vec![0.3, -1.2]);
        let pq = build_projectors(&h, b.clone()).unwrap();
        let x = DVector::from_fn(6, |_, _| rng.gen_range(-1.0..1.0));
        let y = pq.correct_x(&x);
        assert!((h.apply(&y) - b).norm() < 1e-12);
    }
}
