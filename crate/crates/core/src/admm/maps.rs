use nalgebra::{DMatrix, DVector};

use crate::linalg::CholeskyFactor;

/// A linear map `B` from the constraint space `X` into a block space, used
/// through its adjoint `B*` (block space → `X`).
pub trait LinearMap: Send + Sync {
    /// Dimension of the block space.
    fn block_dim(&self) -> usize;

    /// Dimension of the constraint space `X`.
    fn space_dim(&self) -> usize;

    /// `B* v`.
    fn adjoint(&self, v: &DVector<f64>) -> DVector<f64>;

    /// `B x`.
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;

    /// The matrix of `B B*`, assembled column by column from unit vectors.
    fn gram(&self) -> DMatrix<f64> {
        let m = self.block_dim();
        let mut g = DMatrix::zeros(m, m);
        let mut e = DVector::zeros(m);
        for j in 0..m {
            e[j] = 1.0;
            let col = self.apply(&self.adjoint(&e));
            g.set_column(j, &col);
            e[j] = 0.0;
        }
        g
    }
}

/// Solves linear systems with `H H*` for some fixed surjective `H`.
pub trait GramSolver: Send + Sync {
    fn dim(&self) -> usize;
    fn solve(&self, r: &DVector<f64>) -> DVector<f64>;
}

impl GramSolver for CholeskyFactor {
    fn dim(&self) -> usize {
        self.order()
    }

    fn solve(&self, r: &DVector<f64>) -> DVector<f64> {
        CholeskyFactor::solve(self, r)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IdentityMap {
    pub dim: usize,
}

impl IdentityMap {
    pub fn new(dim: usize) -> Self {
        IdentityMap { dim }
    }
}

impl LinearMap for IdentityMap {
    fn block_dim(&self) -> usize {
        self.dim
    }

    fn space_dim(&self) -> usize {
        self.dim
    }

    fn adjoint(&self, v: &DVector<f64>) -> DVector<f64> {
        v.clone()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }

    fn gram(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim)
    }
}

/// Map whose adjoint is multiplication by a dense matrix `M`
/// (`space_dim × block_dim`): `B* v = M v`, `B x = Mᵀ x`.
#[derive(Clone, Debug)]
pub struct DenseMap {
    pub adjoint_matrix: DMatrix<f64>,
}

impl DenseMap {
    pub fn new(adjoint_matrix: DMatrix<f64>) -> Self {
        DenseMap { adjoint_matrix }
    }
}

impl LinearMap for DenseMap {
    fn block_dim(&self) -> usize {
        self.adjoint_matrix.ncols()
    }

    fn space_dim(&self) -> usize {
        self.adjoint_matrix.nrows()
    }

    fn adjoint(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.adjoint_matrix * v
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.adjoint_matrix.tr_mul(x)
    }

    fn gram(&self) -> DMatrix<f64> {
        self.adjoint_matrix.tr_mul(&self.adjoint_matrix)
    }
}

impl<T: LinearMap + ?Sized> LinearMap for &T {
    fn block_dim(&self) -> usize {
        (**self).block_dim()
    }

    fn space_dim(&self) -> usize {
        (**self).space_dim()
    }

    fn adjoint(&self, v: &DVector<f64>) -> DVector<f64> {
        (**self).adjoint(v)
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).apply(x)
    }

    fn gram(&self) -> DMatrix<f64> {
        (**self).gram()
    }
}
