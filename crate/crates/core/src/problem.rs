//! Conic program data: `min ⟨C, X⟩` subject to `A_E X = b_E`,
//! `A_I X ≥ b_I`, `X ⪰ 0` and `X - M ∈ K_p`, its dual, and the relative KKT
//! residuals used for termination.

use nalgebra::{DMatrix, DVector};

use crate::admm::maps::LinearMap;
use crate::cones::{
    project_dual_polyhedral_slice, project_polyhedral_slice, symmetrize_in_place,
    PolyhedralPattern, SymMat,
};
use crate::error::{Error, Result};
use crate::linalg::CholeskyFactor;

/// Sparse symmetric matrix stored as its upper triangle.
///
/// Entries are kept sorted by `(j, i)`, merged, and free of explicit zeros,
/// so two equal matrices always have identical storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSym {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    /// Triplets may name either triangle; `(i, j)` and `(j, i)` refer to the
    /// same symmetric pair and duplicates are summed.
    pub fn new(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) out of range for order {n}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) is not finite"
                )));
            }
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            entries.push((i, j, v));
        }
        entries.sort_by_key(|&(i, j, _)| (j, i));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        Ok(SparseSym { n, entries: merged })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `⟨A, X⟩` for a column-major dense `X`; off-diagonals count twice.
    pub fn dot_dense(&self, x: &[f64]) -> f64 {
        let n = self.n;
        self.entries.iter().fold(0.0, |acc, &(i, j, v)| {
            if i == j {
                acc + v * x[i + j * n]
            } else {
                acc + 2.0 * v * x[i + j * n]
            }
        })
    }

    /// `out += scale · A` on a column-major dense buffer.
    pub fn add_to(&self, scale: f64, out: &mut [f64]) {
        let n = self.n;
        for &(i, j, v) in &self.entries {
            out[i + j * n] += scale * v;
            if i != j {
                out[j + i * n] += scale * v;
            }
        }
    }

    pub fn to_dense(&self) -> SymMat {
        let mut m = DMatrix::zeros(self.n, self.n);
        self.add_to(1.0, m.as_mut_slice());
        SymMat::from_symmetric_unchecked(m)
    }

    pub fn from_dense(m: &SymMat) -> Self {
        let n = m.order();
        let mut entries = Vec::new();
        for j in 0..n {
            for i in 0..=j {
                let v = m.get(i, j);
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        SparseSym { n, entries }
    }
}

/// The linear map `X ↦ (⟨A_1, X⟩, …, ⟨A_m, X⟩)` with sparse symmetric rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintMap {
    n: usize,
    rows: Vec<SparseSym>,
}

impl ConstraintMap {
    pub fn new(n: usize, rows: Vec<SparseSym>) -> Result<Self> {
        for r in &rows {
            if r.order() != n {
                return Err(Error::DimensionMismatch {
                    context: "constraint matrix order",
                    expected: n,
                    found: r.order(),
                });
            }
        }
        Ok(ConstraintMap { n, rows })
    }

    pub fn empty(n: usize) -> Self {
        ConstraintMap {
            n,
            rows: Vec::new(),
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[SparseSym] {
        &self.rows
    }

    pub fn apply_mat(&self, x: &SymMat) -> Result<DVector<f64>> {
        if x.order() != self.n {
            return Err(Error::DimensionMismatch {
                context: "constraint map argument",
                expected: self.n,
                found: x.order(),
            });
        }
        Ok(self.apply_slice(x.as_slice()))
    }

    pub(crate) fn apply_slice(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|r| r.dot_dense(x)))
    }

    /// `Σ_i y_i A_i`.
    pub fn adjoint_mat(&self, y: &DVector<f64>) -> SymMat {
        let mut m = DMatrix::zeros(self.n, self.n);
        self.adjoint_add(y, 1.0, m.as_mut_slice());
        SymMat::from_symmetric_unchecked(m)
    }

    pub(crate) fn adjoint_add(&self, y: &DVector<f64>, scale: f64, out: &mut [f64]) {
        assert_eq!(y.len(), self.rows.len(), "multiplier length");
        for (r, &yi) in self.rows.iter().zip(y.iter()) {
            if yi != 0.0 {
                r.add_to(scale * yi, out);
            }
        }
    }

    /// The m×m matrix `[⟨A_i, A_j⟩]`.
    pub fn gram_matrix(&self) -> DMatrix<f64> {
        let m = self.rows.len();
        let n = self.n;
        let mut g = DMatrix::zeros(m, m);
        let mut scratch = vec![0.0; n * n];
        for i in 0..m {
            self.rows[i].add_to(1.0, &mut scratch);
            for j in i..m {
                let v = self.rows[j].dot_dense(&scratch);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
            for &(p, q, _) in self.rows[i].entries() {
                scratch[p + q * n] = 0.0;
                scratch[q + p * n] = 0.0;
            }
        }
        g
    }
}

impl LinearMap for ConstraintMap {
    fn block_dim(&self) -> usize {
        self.rows.len()
    }

    fn space_dim(&self) -> usize {
        self.n * self.n
    }

    fn adjoint(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n * self.n);
        self.adjoint_add(v, 1.0, out.as_mut_slice());
        out
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.apply_slice(x.as_slice())
    }

    fn gram(&self) -> DMatrix<f64> {
        self.gram_matrix()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Raw problem data. `cost` is always the matrix of the internal
/// minimization; `sense` and `offset` only affect reported objective values:
/// `reported = ±⟨C, X⟩ + offset` with the minus sign for `Maximize`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemData {
    pub name: String,
    pub n: usize,
    pub cost: SymMat,
    pub eq: ConstraintMap,
    pub b_eq: DVector<f64>,
    pub ineq: ConstraintMap,
    pub b_ineq: DVector<f64>,
    pub pattern: PolyhedralPattern,
    pub sense: Sense,
    pub offset: f64,
}

impl ProblemData {
    /// Equality-only problem with a free polyhedral pattern.
    pub fn new(n: usize, cost: SymMat, eq: ConstraintMap, b_eq: DVector<f64>) -> Self {
        ProblemData {
            name: String::new(),
            n,
            cost,
            eq,
            b_eq,
            ineq: ConstraintMap::empty(n),
            b_ineq: DVector::zeros(0),
            pattern: PolyhedralPattern::free(n),
            sense: Sense::Minimize,
            offset: 0.0,
        }
    }
}

/// A validated problem. The Gram factor of `A_E A_E*` is computed once at
/// construction; failure means `A_E` is not surjective.
#[derive(Clone, Debug)]
pub struct ConicProblem {
    data: ProblemData,
    gram: CholeskyFactor,
}

impl PartialEq for ConicProblem {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data
    }
}

impl ConicProblem {
    pub fn new(data: ProblemData) -> Result<Self> {
        let n = data.n;
        if n == 0 {
            return Err(Error::InvalidInput("matrix order must be positive".into()));
        }
        let check = |context: &'static str, expected: usize, found: usize| {
            if expected != found {
                Err(Error::DimensionMismatch {
                    context,
                    expected,
                    found,
                })
            } else {
                Ok(())
            }
        };
        check("cost order", n, data.cost.order())?;
        check("equality map order", n, data.eq.order())?;
        check("inequality map order", n, data.ineq.order())?;
        check("pattern order", n, data.pattern.order())?;
        check("equality rhs length", data.eq.len(), data.b_eq.len())?;
        check("inequality rhs length", data.ineq.len(), data.b_ineq.len())?;
        if !data.cost.is_finite()
            || data
                .b_eq
                .iter()
                .chain(data.b_ineq.iter())
                .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput("problem data is not finite".into()));
        }
        let gram = factorize_gram(&data.eq)?;
        Ok(ConicProblem { data, gram })
    }

    pub fn data(&self) -> &ProblemData {
        &self.data
    }

    pub fn into_data(self) -> ProblemData {
        self.data
    }

    pub fn name(&self) -> &str {
        &self.data.name
    }

    pub fn n(&self) -> usize {
        self.data.n
    }

    pub fn cost(&self) -> &SymMat {
        &self.data.cost
    }

    pub fn eq(&self) -> &ConstraintMap {
        &self.data.eq
    }

    pub fn b_eq(&self) -> &DVector<f64> {
        &self.data.b_eq
    }

    pub fn ineq(&self) -> &ConstraintMap {
        &self.data.ineq
    }

    pub fn b_ineq(&self) -> &DVector<f64> {
        &self.data.b_ineq
    }

    pub fn pattern(&self) -> &PolyhedralPattern {
        &self.data.pattern
    }

    pub fn m_eq(&self) -> usize {
        self.data.eq.len()
    }

    pub fn m_ineq(&self) -> usize {
        self.data.ineq.len()
    }

    pub fn gram_factor(&self) -> &CholeskyFactor {
        &self.gram
    }

    /// `A_E X`.
    pub fn apply_eq(&self, x: &SymMat) -> Result<DVector<f64>> {
        self.data.eq.apply_mat(x)
    }

    /// Objective in the problem's own sense, from the internal `⟨C, X⟩`.
    pub fn reported_objective(&self, internal: f64) -> f64 {
        match self.data.sense {
            Sense::Minimize => internal + self.data.offset,
            Sense::Maximize => -internal + self.data.offset,
        }
    }
}

/// Factors the Gram matrix `[⟨A_i, A_j⟩]`.
pub fn factorize_gram(map: &ConstraintMap) -> Result<CholeskyFactor> {
    CholeskyFactor::new(map.gram_matrix())
}

/// Primal `X` together with the dual variables `(S, Z, y_E, y_I)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalDualPoint {
    pub x: SymMat,
    pub s: SymMat,
    pub z: SymMat,
    pub y_eq: DVector<f64>,
    pub y_ineq: Option<DVector<f64>>,
}

impl PrimalDualPoint {
    pub fn zeros(problem: &ConicProblem) -> Self {
        let n = problem.n();
        PrimalDualPoint {
            x: SymMat::zeros(n),
            s: SymMat::zeros(n),
            z: SymMat::zeros(n),
            y_eq: DVector::zeros(problem.m_eq()),
            y_ineq: (problem.m_ineq() > 0).then(|| DVector::zeros(problem.m_ineq())),
        }
    }
}

/// Relative KKT residuals. `eta_i`/`eta_istar` are present iff the problem
/// has inequality rows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualReport {
    pub eta_p: f64,
    pub eta_d: f64,
    pub eta_k: f64,
    pub eta_pc: f64,
    pub eta_kstar: f64,
    pub eta_pcstar: f64,
    pub eta_c1: f64,
    pub eta_c2: f64,
    pub eta_i: Option<f64>,
    pub eta_istar: Option<f64>,
    pub eta: f64,
    pub eta_g: f64,
    /// `⟨C, X⟩`.
    pub primal_objective: f64,
    /// `⟨b_E, y_E⟩ + ⟨b_I, y_I⟩ + ⟨M, Z⟩`.
    pub dual_objective: f64,
}

impl ResidualReport {
    /// `max(η_P, η_K, η_Pc[, η_I])`.
    pub fn primal_group(&self) -> f64 {
        self.eta_p
            .max(self.eta_k)
            .max(self.eta_pc)
            .max(self.eta_i.unwrap_or(0.0))
    }

    /// `max(η_D, η_K*, η_P*[, η_I*])`.
    pub fn dual_group(&self) -> f64 {
        self.eta_d
            .max(self.eta_kstar)
            .max(self.eta_pcstar)
            .max(self.eta_istar.unwrap_or(0.0))
    }
}

/// Residual components that need no eigendecomposition.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CheapResiduals {
    pub eta_p: f64,
    pub eta_d: f64,
    pub eta_pc: f64,
    pub eta_pcstar: f64,
    pub eta_c1: f64,
    pub eta_c2: f64,
    pub eta_i: Option<f64>,
    pub eta_istar: Option<f64>,
    pub eta_g: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

impl CheapResiduals {
    pub fn max(&self) -> f64 {
        [
            self.eta_p,
            self.eta_d,
            self.eta_pc,
            self.eta_pcstar,
            self.eta_c1,
            self.eta_c2,
            self.eta_i.unwrap_or(0.0),
            self.eta_istar.unwrap_or(0.0),
        ]
        .into_iter()
        .fold(0.0, nan_max)
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Borrowed view of a primal-dual point in column-major storage.
pub(crate) struct PointView<'a> {
    pub x: &'a [f64],
    pub s: &'a [f64],
    pub z: &'a [f64],
    pub y_eq: &'a DVector<f64>,
    pub y_ineq: Option<&'a DVector<f64>>,
}

pub(crate) fn cheap_residuals(problem: &ConicProblem, pt: &PointView<'_>) -> CheapResiduals {
    let d = problem.data();
    let n = d.n;
    let x = pt.x;
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let nx = norm(x);
    let ns = norm(pt.s);
    let nz = norm(pt.z);

    let ax = d.eq.apply_slice(x);
    let eta_p = (&ax - &d.b_eq).norm() / (1.0 + d.b_eq.norm());

    let mut dres = vec![0.0; n * n];
    d.eq.adjoint_add(pt.y_eq, 1.0, &mut dres);
    if let Some(yi) = pt.y_ineq {
        d.ineq.adjoint_add(yi, 1.0, &mut dres);
    }
    for (k, r) in dres.iter_mut().enumerate() {
        *r += pt.s[k] + pt.z[k] - d.cost.as_slice()[k];
    }
    let eta_d = norm(&dres) / (1.0 + d.cost.norm());

    let mut px = x.to_vec();
    project_polyhedral_slice(&d.pattern, &mut px);
    let diff: f64 = x
        .iter()
        .zip(&px)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let eta_pc = diff / (1.0 + nx);

    let mut pz = pt.z.to_vec();
    project_dual_polyhedral_slice(&d.pattern, &mut pz);
    let diff: f64 =
        pt.z.iter()
            .zip(&pz)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
    let eta_pcstar = diff / (1.0 + nz);

    let eta_c1 = dot(x, pt.s).abs() / (1.0 + nx + ns);
    let (xz, mz) = match d.pattern.shift() {
        Some(m) => (
            dot(x, pt.z) - dot(m.as_slice(), pt.z),
            dot(m.as_slice(), pt.z),
        ),
        None => (dot(x, pt.z), 0.0),
    };
    let eta_c2 = xz.abs() / (1.0 + nx + nz);

    let (eta_i, eta_istar, by_i) = match pt.y_ineq {
        Some(yi) if !d.ineq.is_empty() => {
            let aix = d.ineq.apply_slice(x);
            let viol = (&d.b_ineq - aix).map(|v| v.max(0.0));
            let eta_i = viol.norm() / (1.0 + d.b_ineq.norm());
            let neg = yi.map(|v| (-v).max(0.0));
            let eta_istar = neg.norm() / (1.0 + yi.norm());
            (Some(eta_i), Some(eta_istar), d.b_ineq.dot(yi))
        }
        _ => (None, None, 0.0),
    };

    let primal_objective = dot(d.cost.as_slice(), x);
    let dual_objective = d.b_eq.dot(pt.y_eq) + by_i + mz;
    let eta_g =
        (primal_objective - dual_objective) / (1.0 + primal_objective.abs() + dual_objective.abs());

    CheapResiduals {
        eta_p,
        eta_d,
        eta_pc,
        eta_pcstar,
        eta_c1,
        eta_c2,
        eta_i,
        eta_istar,
        eta_g,
        primal_objective,
        dual_objective,
    }
}

/// `(η_K, η_K*)`; each costs one symmetric eigenvalue computation.
pub(crate) fn cone_residuals(n: usize, x: &[f64], s: &[f64]) -> Result<(f64, f64)> {
    let rel = |v: &[f64]| -> Result<f64> {
        if v.iter().any(|a| !a.is_finite()) {
            return Err(Error::Eigen { order: n });
        }
        let mut m = DMatrix::from_column_slice(n, n, v);
        symmetrize_in_place(&mut m);
        let neg = m
            .symmetric_eigenvalues()
            .iter()
            .filter(|&&d| d < 0.0)
            .map(|d| d * d)
            .sum::<f64>()
            .sqrt();
        Ok(neg / (1.0 + m.norm()))
    };
    Ok((rel(x)?, rel(s)?))
}

pub(crate) fn assemble_report(cheap: CheapResiduals, eta_k: f64, eta_kstar: f64) -> ResidualReport {
    let eta = nan_max(nan_max(cheap.max(), eta_k), eta_kstar);
    ResidualReport {
        eta_p: cheap.eta_p,
        eta_d: cheap.eta_d,
        eta_k,
        eta_pc: cheap.eta_pc,
        eta_kstar,
        eta_pcstar: cheap.eta_pcstar,
        eta_c1: cheap.eta_c1,
        eta_c2: cheap.eta_c2,
        eta_i: cheap.eta_i,
        eta_istar: cheap.eta_istar,
        eta,
        eta_g: cheap.eta_g,
        primal_objective: cheap.primal_objective,
        dual_objective: cheap.dual_objective,
    }
}

/// Relative KKT residuals of `pt` for `problem`.
///
/// With a shifted pattern (`X - M ∈ K_p`) complementarity is measured as
/// `⟨X - M, Z⟩` and `⟨M, Z⟩` enters the dual objective; for `M = 0` these
/// reduce to the unshifted formulas.
pub fn residuals(problem: &ConicProblem, pt: &PrimalDualPoint) -> Result<ResidualReport> {
    let n = problem.n();
    for (context, m) in [("primal X", &pt.x), ("dual S", &pt.s), ("dual Z", &pt.z)] {
        if m.order() != n {
            return Err(Error::DimensionMismatch {
                context,
                expected: n,
                found: m.order(),
            });
        }
    }
    if pt.y_eq.len() != problem.m_eq() {
        return Err(Error::DimensionMismatch {
            context: "equality multiplier",
            expected: problem.m_eq(),
            found: pt.y_eq.len(),
        });
    }
    if let Some(yi) = &pt.y_ineq {
        if yi.len() != problem.m_ineq() {
            return Err(Error::DimensionMismatch {
                context: "inequality multiplier",
                expected: problem.m_ineq(),
                found: yi.len(),
            });
        }
    }
    let zero_yi;
    let y_ineq = match (&pt.y_ineq, problem.m_ineq()) {
        (Some(y), _) => Some(y),
        (None, 0) => None,
        (None, m) => {
            zero_yi = DVector::zeros(m);
            Some(&zero_yi)
        }
    };
    let view = PointView {
        x: pt.x.as_slice(),
        s: pt.s.as_slice(),
        z: pt.z.as_slice(),
        y_eq: &pt.y_eq,
        y_ineq,
    };
    let cheap = cheap_residuals(problem, &view);
    let (eta_k, eta_kstar) = cone_residuals(n, view.x, view.s)?;
    Ok(assemble_report(cheap, eta_k, eta_kstar))
}
