//! Symmetric matrices and the metric projections used by the splitting
//! schemes: the PSD cone (self-dual), sign-pattern polyhedral cones with an
//! optional shift, their duals, and the non-negative orthant.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Dense symmetric matrix. Every constructor enforces exact symmetry.
#[derive(Clone, PartialEq)]
pub struct SymMat {
    data: DMatrix<f64>,
}

impl fmt::Debug for SymMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymMat{}", self.data)
    }
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        SymMat {
            data: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        SymMat {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMat {
            data: DMatrix::from_diagonal(&DVector::from_column_slice(d)),
        }
    }

    /// Symmetrizes `m` as `(m + mᵀ)/2`.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                context: "symmetric matrix (square)",
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let mut data = m;
        symmetrize_in_place(&mut data);
        Ok(SymMat { data })
    }

    /// Row-major entries; the result is symmetrized.
    pub fn from_row_slice(n: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), n * n, "expected {} entries", n * n);
        let mut data = DMatrix::from_row_slice(n, n, entries);
        symmetrize_in_place(&mut data);
        SymMat { data }
    }

    /// Builds from the upper triangle given by `f(i, j)` with `i <= j`.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = f(i, j);
                data[(i, j)] = v;
                data[(j, i)] = v;
            }
        }
        SymMat { data }
    }

    /// Wraps a matrix that is already exactly symmetric. Only used on
    /// results of operations that preserve symmetry bit-for-bit.
    pub(crate) fn from_symmetric_unchecked(data: DMatrix<f64>) -> Self {
        debug_assert!(data.nrows() == data.ncols());
        SymMat { data }
    }

    /// Interprets a column-major vector of length n² as a matrix and
    /// symmetrizes it.
    pub fn from_vector(n: usize, v: &DVector<f64>) -> Result<Self> {
        if v.len() != n * n {
            return Err(Error::DimensionMismatch {
                context: "flattened symmetric matrix",
                expected: n * n,
                found: v.len(),
            });
        }
        let mut data = DMatrix::from_column_slice(n, n, v.as_slice());
        symmetrize_in_place(&mut data);
        Ok(SymMat { data })
    }

    pub fn order(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[(i, j)] = v;
        self.data[(j, i)] = v;
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Column-major flattening (length n²). The Euclidean inner product of
    /// two flattened matrices equals their Frobenius inner product.
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(self.data.as_slice())
    }

    pub fn as_slice(&self) -> &[f64] {
        self.data.as_slice()
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &SymMat) -> f64 {
        self.data.dot(&other.data)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    pub fn scale(&self, a: f64) -> SymMat {
        SymMat {
            data: &self.data * a,
        }
    }

    pub fn max_abs_diff(&self, other: &SymMat) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Add for &SymMat {
    type Output = SymMat;
    fn add(self, rhs: &SymMat) -> SymMat {
        SymMat {
            data: &self.data + &rhs.data,
        }
    }
}

impl Sub for &SymMat {
    type Output = SymMat;
    fn sub(self, rhs: &SymMat) -> SymMat {
        SymMat {
            data: &self.data - &rhs.data,
        }
    }
}

impl Neg for &SymMat {
    type Output = SymMat;
    fn neg(self) -> SymMat {
        SymMat { data: -&self.data }
    }
}

impl Mul<f64> for &SymMat {
    type Output = SymMat;
    fn mul(self, rhs: f64) -> SymMat {
        self.scale(rhs)
    }
}

pub(crate) fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Sign constraint on one entry of a polyhedral cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EntryKind {
    NonNeg,
    NonPos,
    Free,
    Zero,
}

impl EntryKind {
    /// Entrywise dual: the orthant signs are self-dual, `Free` and `Zero`
    /// swap.
    pub fn dual(self) -> EntryKind {
        match self {
            EntryKind::NonNeg => EntryKind::NonNeg,
            EntryKind::NonPos => EntryKind::NonPos,
            EntryKind::Free => EntryKind::Zero,
            EntryKind::Zero => EntryKind::Free,
        }
    }

    #[inline]
    pub fn clamp(self, v: f64) -> f64 {
        match self {
            EntryKind::NonNeg => v.max(0.0),
            EntryKind::NonPos => v.min(0.0),
            EntryKind::Free => v,
            EntryKind::Zero => 0.0,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            EntryKind::NonNeg => "NONNEG",
            EntryKind::NonPos => "NONPOS",
            EntryKind::Free => "FREE",
            EntryKind::Zero => "ZERO",
        }
    }

    pub fn from_token(s: &str) -> Option<EntryKind> {
        match s {
            "NONNEG" => Some(EntryKind::NonNeg),
            "NONPOS" => Some(EntryKind::NonPos),
            "FREE" => Some(EntryKind::Free),
            "ZERO" => Some(EntryKind::Zero),
            _ => None,
        }
    }
}

/// The set `{X : X - M ∈ K}` where `K` is given by one sign constraint per
/// entry. The shift `M` defaults to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyhedralPattern {
    n: usize,
    kinds: Vec<EntryKind>,
    shift: Option<SymMat>,
}

impl PolyhedralPattern {
    pub fn uniform(n: usize, kind: EntryKind) -> Self {
        PolyhedralPattern {
            n,
            kinds: vec![kind; n * n],
            shift: None,
        }
    }

    pub fn nonneg(n: usize) -> Self {
        Self::uniform(n, EntryKind::NonNeg)
    }

    pub fn free(n: usize) -> Self {
        Self::uniform(n, EntryKind::Free)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn kind(&self, i: usize, j: usize) -> EntryKind {
        self.kinds[i + j * self.n]
    }

    /// Sets `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, kind: EntryKind) {
        self.kinds[i + j * self.n] = kind;
        self.kinds[j + i * self.n] = kind;
    }

    pub fn shift(&self) -> Option<&SymMat> {
        self.shift.as_ref()
    }

    pub fn with_shift(mut self, shift: SymMat) -> Result<Self> {
        self.set_shift(Some(shift))?;
        Ok(self)
    }

    pub fn set_shift(&mut self, shift: Option<SymMat>) -> Result<()> {
        if let Some(m) = &shift {
            check_order("pattern shift", self.n, m.order())?;
        }
        self.shift = shift.filter(|m| m.as_slice().iter().any(|&v| v != 0.0));
        Ok(())
    }

    /// True when every entry is `Free` (the cone is the whole space).
    pub fn is_all_free(&self) -> bool {
        self.kinds.iter().all(|&k| k == EntryKind::Free)
    }

    /// The entrywise dual pattern, without shift.
    pub fn dual(&self) -> PolyhedralPattern {
        PolyhedralPattern {
            n: self.n,
            kinds: self.kinds.iter().map(|k| k.dual()).collect(),
            shift: None,
        }
    }

    /// Column-major kinds, aligned with `SymMat::as_slice`.
    pub fn kinds(&self) -> &[EntryKind] {
        &self.kinds
    }
}

fn check_order(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

/// Eigendecomposition of the symmetrized input.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let n = a.nrows();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen { order: n });
    }
    let mut m = a.clone();
    symmetrize_in_place(&mut m);
    SymmetricEigen::try_new(m, f64::EPSILON, 100 * n.max(10)).ok_or(Error::Eigen { order: n })
}

/// Returns `(Π₊(A), Π₊(-A))` from a single eigendecomposition. By the
/// Moreau decomposition `A = Π₊(A) - Π₊(-A)`.
pub fn psd_split(a: &DMatrix<f64>) -> Result<(SymMat, SymMat)> {
    let n = a.nrows();
    let eig = symmetric_eigen(a)?;
    let pos = gram_of_columns(&eig, n, |d| d > 0.0);
    let neg = gram_of_columns(&eig, n, |d| d < 0.0);
    Ok((pos, neg))
}

// Σ |d_i| u_i u_iᵀ over the selected eigenpairs, formed as V Vᵀ so that the
// result is exactly symmetric and PSD.
fn gram_of_columns(
    eig: &SymmetricEigen<f64, nalgebra::Dyn>,
    n: usize,
    keep: impl Fn(f64) -> bool,
) -> SymMat {
    let idx: Vec<usize> = (0..n).filter(|&i| keep(eig.eigenvalues[i])).collect();
    if idx.is_empty() {
        return SymMat::zeros(n);
    }
    let mut v = DMatrix::zeros(n, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        let s = eig.eigenvalues[i].abs().sqrt();
        for r in 0..n {
            v[(r, c)] = eig.eigenvectors[(r, i)] * s;
        }
    }
    SymMat::from_symmetric_unchecked(&v * v.transpose())
}

/// Metric projection onto the PSD cone: eigenvalues clamped at zero.
pub fn project_psd(a: &SymMat) -> Result<SymMat> {
    project_psd_matrix(a.as_matrix())
}

pub(crate) fn project_psd_matrix(a: &DMatrix<f64>) -> Result<SymMat> {
    let n = a.nrows();
    let eig = symmetric_eigen(a)?;
    Ok(gram_of_columns(&eig, n, |d| d > 0.0))
}

/// Metric projection onto `{X : X - M ∈ K}`.
pub fn project_polyhedral(pattern: &PolyhedralPattern, a: &SymMat) -> Result<SymMat> {
    check_order("polyhedral projection", pattern.order(), a.order())?;
    let mut out = a.as_matrix().clone();
    project_polyhedral_slice(pattern, out.as_mut_slice());
    Ok(SymMat::from_symmetric_unchecked(out))
}

pub(crate) fn project_polyhedral_slice(pattern: &PolyhedralPattern, data: &mut [f64]) {
    match pattern.shift() {
        None => {
            for (v, k) in data.iter_mut().zip(pattern.kinds()) {
                *v = k.clamp(*v);
            }
        }
        Some(m) => {
            for ((v, k), s) in data.iter_mut().zip(pattern.kinds()).zip(m.as_slice()) {
                *v = k.clamp(*v - s) + s;
            }
        }
    }
}

/// Metric projection onto the dual cone `K*` of the (unshifted) pattern
/// cone, computed entrywise with the dual kinds.
pub fn project_dual_polyhedral(pattern: &PolyhedralPattern, a: &SymMat) -> Result<SymMat> {
    check_order("dual polyhedral projection", pattern.order(), a.order())?;
    let mut out = a.as_matrix().clone();
    project_dual_polyhedral_slice(pattern, out.as_mut_slice());
    Ok(SymMat::from_symmetric_unchecked(out))
}

pub(crate) fn project_dual_polyhedral_slice(pattern: &PolyhedralPattern, data: &mut [f64]) {
    for (v, k) in data.iter_mut().zip(pattern.kinds()) {
        *v = k.dual().clamp(*v);
    }
}

/// Entrywise `max(v, 0)`.
pub fn project_nonneg_vector(v: &DVector<f64>) -> DVector<f64> {
    v.map(|x| x.max(0.0))
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn random_sym(rng: &mut impl Rng, n: usize) -> SymMat {
        SymMat::from_upper_fn(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    pub fn random_psd_unit(rng: &mut impl Rng, n: usize) -> SymMat {
        let rank = rng.gen_range(1..=n);
        let b = DMatrix::from_fn(n, rank, |_, _| rng.gen_range(-1.0..1.0));
        let y = SymMat::from_matrix(&b * b.transpose()).unwrap();
        let nrm = y.norm();
        y.scale(1.0 / nrm)
    }

    pub fn random_pattern(rng: &mut impl Rng, n: usize) -> PolyhedralPattern {
        let kinds = [
            EntryKind::NonNeg,
            EntryKind::NonPos,
            EntryKind::Free,
            EntryKind::Zero,
        ];
        let mut p = PolyhedralPattern::free(n);
        for j in 0..n {
            for i in 0..=j {
                p.set(i, j, kinds[rng.gen_range(0..4)]);
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn psd_projection_of_identity_is_identity() {
        let r = project_psd(&SymMat::identity(2)).unwrap();
        assert!(r.max_abs_diff(&SymMat::identity(2)) < 1e-15);
    }

    #[test]
    fn psd_projection_clamps_negative_eigenvalue() {
        let r = project_psd(&SymMat::from_diagonal(&[1.0, -1.0])).unwrap();
        assert!(r.max_abs_diff(&SymMat::from_diagonal(&[1.0, 0.0])) < 1e-15);
    }

    #[test]
    fn psd_projection_satisfies_variational_inequality() {
        let mut rng = rng(11);
        let a = random_sym(&mut rng, 5);
        let r = project_psd(&a).unwrap();
        let d = &a - &r;
        for _ in 0..100 {
            let y = random_psd_unit(&mut rng, 5);
            assert!(d.dot(&(&y - &r)) <= 1e-10);
        }
    }

    #[test]
    fn psd_projection_rejects_nan() {
        let mut a = SymMat::identity(3);
        a.set(0, 1, f64::NAN);
        assert!(matches!(project_psd(&a), Err(Error::Eigen { order: 3 })));
    }

    #[test]
    fn polyhedral_examples() {
        let a = SymMat::from_row_slice(2, &[1.0, -2.0, -2.0, 3.0]);
        let r = project_polyhedral(&PolyhedralPattern::nonneg(2), &a).unwrap();
        assert_eq!(r, SymMat::from_diagonal(&[1.0, 3.0]));
        let r = project_polyhedral(&PolyhedralPattern::free(2), &a).unwrap();
        assert_eq!(r, a);

        let ones = SymMat::from_upper_fn(2, |_, _| 1.0);
        let p = PolyhedralPattern::nonneg(2)
            .with_shift(ones.clone())
            .unwrap();
        let r = project_polyhedral(&p, &SymMat::zeros(2)).unwrap();
        assert_eq!(r, ones);
    }

    #[test]
    fn polyhedral_dimension_mismatch() {
        let err = project_polyhedral(&PolyhedralPattern::nonneg(3), &SymMat::zeros(2));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        let err = project_dual_polyhedral(&PolyhedralPattern::nonneg(3), &SymMat::zeros(2));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dual_polyhedral_examples() {
        let r = project_dual_polyhedral(
            &PolyhedralPattern::nonneg(2),
            &SymMat::from_diagonal(&[-1.0, 2.0]),
        )
        .unwrap();
        assert_eq!(r, SymMat::from_diagonal(&[0.0, 2.0]));

        let mut rng = rng(3);
        let a = random_sym(&mut rng, 4);
        let r = project_dual_polyhedral(&PolyhedralPattern::free(4), &a).unwrap();
        assert_eq!(r, SymMat::zeros(4));
    }

    #[test]
    fn dual_pattern_swaps_free_and_zero() {
        let mut p = PolyhedralPattern::free(2);
        p.set(0, 1, EntryKind::Zero);
        p.set(1, 1, EntryKind::NonPos);
        let d = p.dual();
        assert_eq!(d.kind(0, 0), EntryKind::Zero);
        assert_eq!(d.kind(1, 0), EntryKind::Free);
        assert_eq!(d.kind(1, 1), EntryKind::NonPos);
    }

    #[test]
    fn mixed_pattern_moreau_identity() {
        let mut rng = rng(5);
        let p = random_pattern(&mut rng, 6);
        let a = random_sym(&mut rng, 6);
        let lhs =
            &project_polyhedral(&p, &a).unwrap() - &project_dual_polyhedral(&p, &(-&a)).unwrap();
        assert!(lhs.max_abs_diff(&a) <= 1e-12);
    }

    #[test]
    fn nonneg_vector_examples() {
        let v = DVector::from_vec(vec![1.0, -1.0, 0.0]);
        assert_eq!(
            project_nonneg_vector(&v),
            DVector::from_vec(vec![1.0, 0.0, 0.0])
        );
        let v = DVector::from_vec(vec![-1.0, -2.0]);
        assert_eq!(project_nonneg_vector(&v), DVector::zeros(2));

        let mut rng = rng(9);
        let v = DVector::from_fn(20, |_, _| rng.gen_range(-1.0..1.0));
        let w = project_nonneg_vector(&v);
        assert!((&w - &v).dot(&w).abs() <= 1e-14);
        assert!(w.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn psd_split_matches_projections() {
        let mut rng = rng(21);
        let a = random_sym(&mut rng, 7);
        let (p, m) = psd_split(a.as_matrix()).unwrap();
        assert!(p.max_abs_diff(&project_psd(&a).unwrap()) < 1e-12);
        assert!(m.max_abs_diff(&project_psd(&(-&a)).unwrap()) < 1e-12);
    }

    #[test]
    fn projections_are_nonexpansive() {
        let mut rng = rng(77);
        for _ in 0..50 {
            let n = rng.gen_range(1..7);
            let p = random_pattern(&mut rng, n);
            let a = random_sym(&mut rng, n).scale(3.0);
            let b = random_sym(&mut rng, n).scale(3.0);
            let dist = (&a - &b).norm();
            let psd = (&project_psd(&a).unwrap() - &project_psd(&b).unwrap()).norm();
            let poly = (&project_polyhedral(&p, &a).unwrap()
                - &project_polyhedral(&p, &b).unwrap())
                .norm();
            let dual = (&project_dual_polyhedral(&p, &a).unwrap()
                - &project_dual_polyhedral(&p, &b).unwrap())
                .norm();
            assert!(psd <= dist + 1e-12);
            assert!(poly <= dist + 1e-12);
            assert!(dual <= dist + 1e-12);
        }
    }

    #[test]
    fn projections_minimize_distance() {
        let mut rng = rng(78);
        let n = 5;
        let a = random_sym(&mut rng, n).scale(2.0);
        let p = random_pattern(&mut rng, n);
        let psd = project_psd(&a).unwrap();
        let poly = project_polyhedral(&p, &a).unwrap();
        let dual = project_dual_polyhedral(&p, &a).unwrap();
        for _ in 0..100 {
            // random feasible points for each set
            let y = random_psd_unit(&mut rng, n).scale(rng.gen_range(0.0..4.0));
            assert!((&a - &psd).norm() <= (&a - &y).norm() + 1e-12);
            let raw = random_sym(&mut rng, n).scale(3.0);
            let yp = project_polyhedral(&p, &raw).unwrap();
            assert!((&a - &poly).norm() <= (&a - &yp).norm() + 1e-12);
            let yd = project_dual_polyhedral(&p, &raw).unwrap();
            assert!((&a - &dual).norm() <= (&a - &yd).norm() + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn psd_idempotent_and_self_dual_moreau(seed in any::<u64>(), n in 1usize..8) {
            let mut rng = rng(seed);
            let a = random_sym(&mut rng, n).scale(5.0);
            let p = project_psd(&a).unwrap();
            let pp = project_psd(&p).unwrap();
            prop_assert!(pp.max_abs_diff(&p) <= 1e-10);
            let m = project_psd(&(-&a)).unwrap();
            prop_assert!((&p - &m).max_abs_diff(&a) <= 1e-10);
        }

        #[test]
        fn polyhedral_moreau(seed in any::<u64>(), n in 1usize..8) {
            let mut rng = rng(seed);
            let p = random_pattern(&mut rng, n);
            let a = random_sym(&mut rng, n).scale(5.0);
            let lhs = &project_polyhedral(&p, &a).unwrap()
                - &project_dual_polyhedral(&p, &(-&a)).unwrap();
            prop_assert!(lhs.max_abs_diff(&a) <= 1e-12);
        }
    }
}
