use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

// Pivots below this fraction of the largest diagonal entry are treated as
// rank deficiency.
const RELATIVE_PIVOT_FLOOR: f64 = 1e-12;

/// Reusable Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    chol: Option<Cholesky<f64, Dyn>>,
    order: usize,
}

impl CholeskyFactor {
    /// Factors `g`, failing with `SurjectivityViolation` when `g` is not
    /// numerically positive definite.
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        let order = g.nrows();
        if order != g.ncols() {
            return Err(Error::DimensionMismatch {
                context: "Gram matrix (square)",
                expected: order,
                found: g.ncols(),
            });
        }
        if order == 0 {
            return Ok(CholeskyFactor { chol: None, order });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::SurjectivityViolation {
                order,
                pivot: f64::NAN,
            });
        }
        let max_diag = g.diagonal().iter().fold(0.0_f64, |m, &v| m.max(v));
        let chol = Cholesky::new(g).ok_or(Error::SurjectivityViolation { order, pivot: 0.0 })?;
        let min_pivot = chol
            .l_dirty()
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v * v));
        if min_pivot.is_nan() || min_pivot <= RELATIVE_PIVOT_FLOOR * max_diag {
            return Err(Error::SurjectivityViolation {
                order,
                pivot: min_pivot,
            });
        }
        Ok(CholeskyFactor {
            chol: Some(chol),
            order,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Returns `G⁻¹ r`.
    pub fn solve(&self, r: &DVector<f64>) -> DVector<f64> {
        assert_eq!(r.len(), self.order, "right-hand side has wrong length");
        match &self.chol {
            Some(c) => c.solve(r),
            None => DVector::zeros(0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_singular() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            CholeskyFactor::new(g),
            Err(Error::SurjectivityViolation { .. })
        ));
    }

    #[test]
    fn rejects_nearly_singular() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-14]);
        assert!(CholeskyFactor::new(g).is_err());
    }

    #[test]
    fn empty_factor_solves_to_empty() {
        let f = CholeskyFactor::new(DMatrix::zeros(0, 0)).unwrap();
        assert_eq!(f.solve(&DVector::zeros(0)).len(), 0);
    }
}
