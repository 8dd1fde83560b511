//! Seeded instances of the benchmark problem classes, with brute-force
//! reference values where enumeration is affordable.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cones::{EntryKind, PolyhedralPattern, SymMat};
use crate::error::{Error, Result};
use crate::problem::{ConicProblem, ConstraintMap, ProblemData, Sense, SparseSym};

/// Largest number of binary variables enumerated for BIQ references.
pub const BIQ_ENUMERATION_LIMIT: usize = 20;
/// Largest assignment size enumerated for QAP references.
pub const QAP_ENUMERATION_LIMIT: usize = 8;

/// Undirected simple graph on vertices `0..n` with optional edge weights.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSpec {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub weights: Option<Vec<f64>>,
}

impl GraphSpec {
    /// Edges are normalized to `i < j`; self-loops, duplicates and
    /// out-of-range vertices are rejected.
    pub fn new(n: usize, edges: Vec<(usize, usize)>, weights: Option<Vec<f64>>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        let mut norm = Vec::with_capacity(edges.len());
        for (i, j) in edges {
            if i == j {
                return Err(Error::InvalidInput(format!(
                    "self-loop at vertex {}",
                    i + 1
                )));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({}, {}) out of range for {n} vertices",
                    i + 1,
                    j + 1
                )));
            }
            let e = (i.min(j), i.max(j));
            if !seen.insert(e) {
                return Err(Error::InvalidInput(format!(
                    "duplicate edge ({}, {})",
                    e.0 + 1,
                    e.1 + 1
                )));
            }
            norm.push(e);
        }
        if let Some(w) = &weights {
            if w.len() != norm.len() {
                return Err(Error::DimensionMismatch {
                    context: "edge weights",
                    expected: norm.len(),
                    found: w.len(),
                });
            }
        }
        Ok(GraphSpec {
            n,
            edges: norm,
            weights,
        })
    }

    /// Erdős–Rényi graph `G(n, p)`.
    pub fn random(n: usize, p: f64, rng: &mut impl Rng) -> Self {
        let mut edges = Vec::new();
        for j in 0..n {
            for i in 0..j {
                if rng.gen_bool(p.clamp(0.0, 1.0)) {
                    edges.push((i, j));
                }
            }
        }
        GraphSpec {
            n,
            edges,
            weights: None,
        }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
        GraphSpec {
            n,
            edges,
            weights: None,
        }
    }

    pub fn weight(&self, e: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[e])
    }

    /// Size of a maximum stable set, by branch and bound over bitmasks.
    pub fn stability_number(&self) -> Result<usize> {
        if self.n > 64 {
            return Err(Error::InvalidInput(
                "stability number is only computed for at most 64 vertices".into(),
            ));
        }
        let mut adj = vec![0u64; self.n];
        for &(i, j) in &self.edges {
            adj[i] |= 1 << j;
            adj[j] |= 1 << i;
        }
        fn grow(cand: u64, size: usize, best: &mut usize, adj: &[u64]) {
            if cand == 0 {
                *best = (*best).max(size);
                return;
            }
            if size + cand.count_ones() as usize <= *best {
                return;
            }
            let v = cand.trailing_zeros() as usize;
            let rest = cand & !(1u64 << v);
            grow(rest & !adj[v], size + 1, best, adj);
            grow(rest, size, best, adj);
        }
        let all = if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        };
        let mut best = 0;
        grow(all, 0, &mut best, &adj);
        Ok(best)
    }
}

/// Which side of the combinatorial reference the relaxation lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundSide {
    /// Relaxation value ≤ reference (minimization problems).
    Below,
    /// Relaxation value ≥ reference (stable set).
    Above,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reference {
    pub value: f64,
    pub side: BoundSide,
}

impl Reference {
    /// Whether `relaxation` lies on the right side of the reference with
    /// slack `1e-6·(1 + |value|)`.
    pub fn respected_by(&self, relaxation: f64) -> bool {
        let slack = 1e-6 * (1.0 + relaxation.abs());
        match self.side {
            BoundSide::Below => relaxation <= self.value + slack,
            BoundSide::Above => relaxation >= self.value - slack,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub problem: ConicProblem,
    pub reference: Option<Reference>,
    pub notes: Vec<String>,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sparse(n: usize, t: impl IntoIterator<Item = (usize, usize, f64)>) -> SparseSym {
    SparseSym::new(n, t).expect("generator entries are in range")
}

/// Integer data of a binary quadratic program `min ½xᵀQx + cᵀx`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiqData {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl BiqData {
    /// Symmetric `Q` and `c` with integer entries uniform in `[-10, 10]`.
    pub fn random(seed: u64, vars: usize) -> Self {
        let mut r = rng(seed);
        let mut q = DMatrix::zeros(vars, vars);
        for j in 0..vars {
            for i in 0..=j {
                let v = r.gen_range(-10i32..=10) as f64;
                q[(i, j)] = v;
                q[(j, i)] = v;
            }
        }
        let c = DVector::from_fn(vars, |_, _| r.gen_range(-10i32..=10) as f64);
        BiqData { q, c }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        0.5 * x.dot(&(&self.q * &x)) + self.c.dot(&x)
    }

    /// Exact optimum by enumerating all binary vectors.
    pub fn enumerate(&self) -> Option<f64> {
        let v = self.c.len();
        if v > BIQ_ENUMERATION_LIMIT {
            return None;
        }
        let mut best = 0.0_f64;
        let mut x = vec![0.0; v];
        for mask in 1u64..(1u64 << v) {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = ((mask >> i) & 1) as f64;
            }
            best = best.min(self.value(&x));
        }
        Some(best)
    }
}

/// DNN relaxation of `min ½xᵀQx + cᵀx, x ∈ {0,1}^{n-1}` over
/// `X = [Y x; xᵀ 1]` of order `n`.
pub fn biq_problem(data: &BiqData, name: &str) -> Result<ConicProblem> {
    let vars = data.c.len();
    let n = vars + 1;
    let last = n - 1;
    let cost = SymMat::from_upper_fn(n, |i, j| {
        if j < last {
            0.5 * data.q[(i, j)]
        } else if i < last {
            0.5 * data.c[i]
        } else {
            0.0
        }
    });
    let mut rows: Vec<SparseSym> = (0..vars)
        .map(|i| sparse(n, [(i, i, 1.0), (i, last, -0.5)]))
        .collect();
    rows.push(sparse(n, [(last, last, 1.0)]));
    let mut b = DVector::zeros(n);
    b[last] = 1.0;
    let mut pd = ProblemData::new(n, cost, ConstraintMap::new(n, rows)?, b);
    pd.pattern = PolyhedralPattern::nonneg(n);
    pd.name = name.to_string();
    ConicProblem::new(pd)
}

pub fn gen_biq(seed: u64, n: usize) -> Result<Generated> {
    if n < 2 {
        return Err(Error::InvalidInput("BIQ order must be at least 2".into()));
    }
    let data = BiqData::random(seed, n - 1);
    let problem = biq_problem(&data, &format!("biq-n{n}-s{seed}"))?;
    Ok(with_biq_reference(problem, &data))
}

fn with_biq_reference(problem: ConicProblem, data: &BiqData) -> Generated {
    let reference = data.enumerate().map(|value| Reference {
        value,
        side: BoundSide::Below,
    });
    let notes = if reference.is_none() {
        vec![format!(
            "{} binary variables exceed the enumeration limit; no reference",
            data.c.len()
        )]
    } else {
        Vec::new()
    };
    Generated {
        problem,
        reference,
        notes,
    }
}

/// The three triangle-type cuts per pair of binary variables:
/// `x_i - Y_ij ≥ 0`, `x_j - Y_ij ≥ 0`, `Y_ij - x_i - x_j ≥ -1`.
pub fn biq_cuts(n: usize) -> (ConstraintMap, DVector<f64>) {
    let last = n - 1;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for j in 0..last {
        for i in 0..j {
            rows.push(sparse(n, [(i, j, -0.5), (i, last, 0.5)]));
            rhs.push(0.0);
            rows.push(sparse(n, [(i, j, -0.5), (j, last, 0.5)]));
            rhs.push(0.0);
            rows.push(sparse(n, [(i, j, 0.5), (i, last, -0.5), (j, last, -0.5)]));
            rhs.push(-1.0);
        }
    }
    (
        ConstraintMap::new(n, rows).expect("rows have order n"),
        DVector::from_vec(rhs),
    )
}

/// BIQ relaxation of [`gen_biq`] with the same seed, plus the pairwise cuts.
pub fn gen_biq_extended(seed: u64, n: usize) -> Result<Generated> {
    if n < 3 {
        return Err(Error::InvalidInput(
            "extended BIQ needs at least two binary variables (n ≥ 3)".into(),
        ));
    }
    let data = BiqData::random(seed, n - 1);
    let base = biq_problem(&data, &format!("biqext-n{n}-s{seed}"))?;
    let mut pd = base.into_data();
    let (ineq, b) = biq_cuts(n);
    pd.ineq = ineq;
    pd.b_ineq = b;
    Ok(with_biq_reference(ConicProblem::new(pd)?, &data))
}

/// `θ₊(G) = max ⟨J, X⟩` s.t. `X_ij = 0` on edges, `tr X = 1`, `X ⪰ 0`,
/// `X ≥ 0`. Reference: the stability number, which `θ₊` bounds above.
pub fn gen_theta_plus(graph: &GraphSpec, name: &str) -> Result<Generated> {
    let n = graph.n;
    if n == 0 {
        return Err(Error::InvalidInput("graph has no vertices".into()));
    }
    let mut rows: Vec<SparseSym> = graph
        .edges
        .iter()
        .map(|&(i, j)| sparse(n, [(i, j, 1.0)]))
        .collect();
    rows.push(sparse(n, (0..n).map(|i| (i, i, 1.0))));
    let mut b = DVector::zeros(rows.len());
    b[rows.len() - 1] = 1.0;
    let mut pd = ProblemData::new(
        n,
        SymMat::from_upper_fn(n, |_, _| -1.0),
        ConstraintMap::new(n, rows)?,
        b,
    );
    pd.pattern = PolyhedralPattern::nonneg(n);
    pd.sense = Sense::Maximize;
    pd.name = name.to_string();
    let reference = (n <= 64)
        .then(|| graph.stability_number())
        .transpose()?
        .map(|a| Reference {
            value: a as f64,
            side: BoundSide::Above,
        });
    Ok(Generated {
        problem: ConicProblem::new(pd)?,
        reference,
        notes: Vec::new(),
    })
}

pub fn gen_theta_random(seed: u64, n: usize, p: f64) -> Result<Generated> {
    let g = GraphSpec::random(n, p, &mut rng(seed));
    gen_theta_plus(&g, &format!("theta-n{n}-p{p}-s{seed}"))
}

/// Povh–Rendl relaxation of `min_P ⟨P, A P B⟩` over `Y ∈ S^{n²}`.
///
/// The listed constraint families are linearly dependent, so rows that are
/// combinations of earlier ones are dropped (in listing order) to keep the
/// equality map surjective. The feasible set is unchanged because the
/// system is consistent.
pub fn gen_qap(a: &SymMat, b: &SymMat, name: &str) -> Result<Generated> {
    let n = a.order();
    if b.order() != n || n == 0 {
        return Err(Error::InvalidInput(
            "QAP matrices must be nonempty and of equal order".into(),
        ));
    }
    let big = n * n;
    let idx = |blk: usize, k: usize| blk * n + k;
    let cost = SymMat::from_upper_fn(big, |p, q| b.get(p / n, q / n) * a.get(p % n, q % n));
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    // Σ_i Y^{ii} = I
    for l in 0..n {
        for k in 0..=l {
            let v = if k == l { 1.0 } else { 0.5 };
            rows.push(sparse(big, (0..n).map(|i| (idx(i, k), idx(i, l), v))));
            rhs.push(if k == l { 1.0 } else { 0.0 });
        }
    }
    // ⟨I, Y^{ij}⟩ = δ_ij
    for j in 0..n {
        for i in 0..=j {
            let v = if i == j { 1.0 } else { 0.5 };
            rows.push(sparse(big, (0..n).map(|k| (idx(i, k), idx(j, k), v))));
            rhs.push(if i == j { 1.0 } else { 0.0 });
        }
    }
    // ⟨E, Y^{ij}⟩ = 1
    for j in 0..n {
        for i in 0..=j {
            let mut t = Vec::new();
            for k in 0..n {
                for l in 0..n {
                    if i == j {
                        if k <= l {
                            t.push((idx(i, k), idx(i, l), 1.0));
                        }
                    } else {
                        t.push((idx(i, k), idx(j, l), 0.5));
                    }
                }
            }
            rows.push(sparse(big, t));
            rhs.push(1.0);
        }
    }
    let listed = rows.len();
    let (rows, rhs) = drop_dependent_rows(big, rows, rhs);
    let mut notes = Vec::new();
    if rows.len() < listed {
        notes.push(format!(
            "{} of {listed} listed equality rows were linearly dependent and dropped",
            listed - rows.len()
        ));
    }
    let mut pd = ProblemData::new(
        big,
        cost,
        ConstraintMap::new(big, rows)?,
        DVector::from_vec(rhs),
    );
    pd.pattern = PolyhedralPattern::nonneg(big);
    pd.name = name.to_string();
    let reference = qap_enumerate(a, b).map(|value| Reference {
        value,
        side: BoundSide::Below,
    });
    Ok(Generated {
        problem: ConicProblem::new(pd)?,
        reference,
        notes,
    })
}

/// Number of equality rows [`gen_qap`] keeps for assignment size `n`.
pub fn qap_row_count(n: usize) -> usize {
    match n {
        0 => 0,
        1 => 1,
        // two dependencies among the 3·n(n+1)/2 listed rows
        _ => 3 * n * (n + 1) / 2 - 2,
    }
}

fn drop_dependent_rows(
    order: usize,
    rows: Vec<SparseSym>,
    rhs: Vec<f64>,
) -> (Vec<SparseSym>, Vec<f64>) {
    // Gram-Schmidt on the rows as vectors under the trace inner product.
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut keep_rows = Vec::new();
    let mut keep_rhs = Vec::new();
    for (row, r) in rows.into_iter().zip(rhs) {
        let mut v = DVector::from_column_slice(row.to_dense().as_slice());
        let norm0 = v.norm();
        for q in &basis {
            let d = q.dot(&v);
            v.axpy(-d, q, 1.0);
        }
        for q in &basis {
            let d = q.dot(&v);
            v.axpy(-d, q, 1.0);
        }
        let nv = v.norm();
        if nv > 1e-9 * norm0.max(1.0) {
            basis.push(v / nv);
            keep_rows.push(row);
            keep_rhs.push(r);
        }
    }
    debug_assert!(keep_rows.iter().all(|r| r.order() == order));
    (keep_rows, keep_rhs)
}

/// `min_P ⟨P, A P B⟩` over permutation matrices, by enumeration.
pub fn qap_enumerate(a: &SymMat, b: &SymMat) -> Option<f64> {
    let n = a.order();
    if n > QAP_ENUMERATION_LIMIT {
        return None;
    }
    // with P e_j = e_{π(j)}: ⟨P, A P B⟩ = Σ_{j,l} A_{π(j) π(l)} B_{l j}
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let mut s = 0.0;
        for j in 0..n {
            for l in 0..n {
                s += a.get(p[j], p[l]) * b.get(l, j);
            }
        }
        best = best.min(s);
    });
    Some(best)
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

/// QAPLIB-style data: symmetric integer flows in `[0, 10]` with zero
/// diagonal, and Manhattan distances between random grid locations.
pub fn gen_qap_random(seed: u64, n: usize) -> Result<Generated> {
    let mut r = rng(seed);
    let flow = SymMat::from_upper_fn(n, |i, j| {
        if i == j {
            0.0
        } else {
            r.gen_range(0i32..=10) as f64
        }
    });
    let side = (n as f64).sqrt().ceil() as i32 + 1;
    let locs: Vec<(i32, i32)> = (0..n)
        .map(|_| (r.gen_range(0..=side), r.gen_range(0..=side)))
        .collect();
    let dist = SymMat::from_upper_fn(n, |i, j| {
        ((locs[i].0 - locs[j].0).abs() + (locs[i].1 - locs[j].1).abs()) as f64
    });
    gen_qap(&flow, &dist, &format!("qap-n{n}-s{seed}"))
}

/// Clustering relaxation `min ⟨W, I - X⟩` s.t. `Xe = e`, `tr X = K`,
/// `X ⪰ 0`, `X ≥ 0`, with Gaussian affinities `W_ij = exp(-‖p_i - p_j‖²)`.
pub fn gen_rcp(points: &DMatrix<f64>, k: usize, name: &str) -> Result<Generated> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("no points".into()));
    }
    if k < 1 || k > n {
        return Err(Error::InvalidInput(format!(
            "cluster count {k} outside [1, {n}]"
        )));
    }
    let w = SymMat::from_upper_fn(n, |i, j| {
        let d = (points.row(i) - points.row(j)).norm_squared();
        (-d).exp()
    });
    let mut rows: Vec<SparseSym> = (0..n)
        .map(|i| sparse(n, (0..n).map(|j| (i, j, if i == j { 1.0 } else { 0.5 }))))
        .collect();
    rows.push(sparse(n, (0..n).map(|i| (i, i, 1.0))));
    let mut b = DVector::from_element(n + 1, 1.0);
    b[n] = k as f64;
    let mut pd = ProblemData::new(n, -&w, ConstraintMap::new(n, rows)?, b);
    pd.pattern = PolyhedralPattern::nonneg(n);
    pd.offset = w.trace();
    pd.name = name.to_string();
    Ok(Generated {
        problem: ConicProblem::new(pd)?,
        reference: None,
        notes: Vec::new(),
    })
}

/// `n` points in `dim` dimensions drawn around `k` random centers.
pub fn gen_rcp_random(seed: u64, n: usize, k: usize, dim: usize) -> Result<Generated> {
    let mut r = rng(seed);
    let centers = DMatrix::from_fn(k.max(1), dim, |_, _| r.gen_range(-2.0..2.0));
    let points = DMatrix::from_fn(n, dim, |i, d| {
        centers[(i % k.max(1), d)] + 0.5 * r.gen_range(-1.0..1.0)
    });
    gen_rcp(&points, k, &format!("rcp-n{n}-k{k}-d{dim}-s{seed}"))
}

/// Frequency assignment relaxation: maximize
/// `⟨((k-1)/(2k)) L(G,W) - ½ Diag(We), X⟩` s.t. `diag X = e`, `X ⪰ 0`,
/// `X - M ∈ K_p` with `M_ij = -1/(k-1)` on edges, `K_p` zero on `U`,
/// non-negative on the other edges and free elsewhere.
pub fn gen_fap(graph: &GraphSpec, in_u: &[bool], k: usize, name: &str) -> Result<Generated> {
    let n = graph.n;
    if n == 0 {
        return Err(Error::InvalidInput("graph has no vertices".into()));
    }
    if k < 2 {
        return Err(Error::InvalidInput(format!("FAP needs k ≥ 2, got {k}")));
    }
    if in_u.len() != graph.edges.len() {
        return Err(Error::DimensionMismatch {
            context: "edge subset U",
            expected: graph.edges.len(),
            found: in_u.len(),
        });
    }
    let kf = k as f64;
    let mut w = DMatrix::zeros(n, n);
    for (e, &(i, j)) in graph.edges.iter().enumerate() {
        w[(i, j)] = graph.weight(e);
        w[(j, i)] = graph.weight(e);
    }
    let we: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    // objective = (k-1)/(2k) (Diag(We) - W) - ½ Diag(We), negated
    let a = (kf - 1.0) / (2.0 * kf);
    let cost = SymMat::from_upper_fn(n, |i, j| {
        if i == j {
            -(a * we[i] - 0.5 * we[i])
        } else {
            a * w[(i, j)]
        }
    });
    let rows = (0..n).map(|i| sparse(n, [(i, i, 1.0)])).collect();
    let mut pattern = PolyhedralPattern::free(n);
    let mut shift = SymMat::zeros(n);
    for (e, &(i, j)) in graph.edges.iter().enumerate() {
        pattern.set(
            i,
            j,
            if in_u[e] {
                EntryKind::Zero
            } else {
                EntryKind::NonNeg
            },
        );
        shift.set(i, j, -1.0 / (kf - 1.0));
    }
    let mut pd = ProblemData::new(
        n,
        cost,
        ConstraintMap::new(n, rows)?,
        DVector::from_element(n, 1.0),
    );
    pd.pattern = pattern.with_shift(shift)?;
    pd.sense = Sense::Maximize;
    pd.name = name.to_string();
    Ok(Generated {
        problem: ConicProblem::new(pd)?,
        reference: None,
        notes: Vec::new(),
    })
}

/// Random graph `G(n, p)` with integer weights in `[1, 10]`; each edge
/// joins `U` with probability `u`.
pub fn gen_fap_random(seed: u64, n: usize, p: f64, k: usize, u: f64) -> Result<Generated> {
    let mut r = rng(seed);
    let mut g = GraphSpec::random(n, p, &mut r);
    g.weights = Some(
        (0..g.edges.len())
            .map(|_| r.gen_range(1i32..=10) as f64)
            .collect(),
    );
    let in_u: Vec<bool> = (0..g.edges.len())
        .map(|_| r.gen_bool(u.clamp(0.0, 1.0)))
        .collect();
    gen_fap(&g, &in_u, k, &format!("fap-n{n}-p{p}-k{k}-u{u}-s{seed}"))
}

/// A generator invocation such as `biq:n=11,seed=7`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub class: ProblemClass,
    params: BTreeMap<String, String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemClass {
    Biq,
    BiqExtended,
    Theta,
    Qap,
    Rcp,
    Fap,
}

impl ProblemClass {
    fn name(self) -> &'static str {
        match self {
            ProblemClass::Biq => "biq",
            ProblemClass::BiqExtended => "biqext",
            ProblemClass::Theta => "theta",
            ProblemClass::Qap => "qap",
            ProblemClass::Rcp => "rcp",
            ProblemClass::Fap => "fap",
        }
    }

    fn allowed(self) -> &'static [&'static str] {
        match self {
            ProblemClass::Biq | ProblemClass::BiqExtended | ProblemClass::Qap => &["n", "seed"],
            ProblemClass::Theta => &["n", "p", "seed", "graph"],
            ProblemClass::Rcp => &["n", "k", "seed", "dim"],
            ProblemClass::Fap => &["n", "p", "k", "u", "seed", "graph"],
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.class.name())?;
        let parts: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (class, rest) = s.split_once(':').unwrap_or((s, ""));
        let class = match class.trim() {
            "biq" => ProblemClass::Biq,
            "biqext" => ProblemClass::BiqExtended,
            "theta" => ProblemClass::Theta,
            "qap" => ProblemClass::Qap,
            "rcp" => ProblemClass::Rcp,
            "fap" => ProblemClass::Fap,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown problem class '{other}' (expected biq, biqext, theta, qap, rcp or fap)"
                )))
            }
        };
        let mut params = BTreeMap::new();
        for kv in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("generator parameter '{kv}' is not key=value"))
            })?;
            if !class.allowed().contains(&k) {
                return Err(Error::InvalidInput(format!(
                    "unknown parameter '{k}' for {} (allowed: {})",
                    class.name(),
                    class.allowed().join(", ")
                )));
            }
            params.insert(k.to_string(), v.to_string());
        }
        Ok(GeneratorSpec { class, params })
    }
}

impl GeneratorSpec {
    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                Error::InvalidInput(format!("invalid value '{v}' for parameter '{key}'"))
            }),
        }
    }

    /// The graph named by a `graph=PATH` parameter and its file stem.
    fn graph(&self) -> Result<Option<(GraphSpec, String)>> {
        let Some(path) = self.params.get("graph") else {
            return Ok(None);
        };
        let path = std::path::Path::new(path);
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(Some((crate::io::read_graph(path)?, stem)))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.params.insert("seed".into(), seed.to_string());
        self
    }

    pub fn generate(&self) -> Result<Generated> {
        let seed: u64 = self.get("seed", 0)?;
        match self.class {
            ProblemClass::Biq => gen_biq(seed, self.get("n", 11)?),
            ProblemClass::BiqExtended => gen_biq_extended(seed, self.get("n", 11)?),
            ProblemClass::Theta => match self.graph()? {
                Some((g, name)) => gen_theta_plus(&g, &format!("theta-{name}")),
                None => gen_theta_random(seed, self.get("n", 20)?, self.get("p", 0.3)?),
            },
            ProblemClass::Qap => gen_qap_random(seed, self.get("n", 4)?),
            ProblemClass::Rcp => gen_rcp_random(
                seed,
                self.get("n", 20)?,
                self.get("k", 2)?,
                self.get("dim", 2)?,
            ),
            ProblemClass::Fap => {
                let (k, u): (usize, f64) = (self.get("k", 3)?, self.get("u", 0.3)?);
                match self.graph()? {
                    Some((g, name)) => {
                        let mut r = rng(seed);
                        let in_u: Vec<bool> = (0..g.edges.len())
                            .map(|_| r.gen_bool(u.clamp(0.0, 1.0)))
                            .collect();
                        gen_fap(&g, &in_u, k, &format!("fap-{name}-k{k}-u{u}-s{seed}"))
                    }
                    None => gen_fap_random(seed, self.get("n", 12)?, self.get("p", 0.4)?, k, u),
                }
            }
        }
    }
}

/// Shuffled copy of `0..n`, exposed for seeded relabelling in tests.
pub fn seeded_permutation(seed: u64, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng(seed));
    p
}

/// The fixed 20-instance desk-scale suite: four instances each of BIQ
/// (n = 11), θ₊ (n ≤ 30), RCP (n = 20), QAP (n = 4) and FAP (n ≤ 20).
pub fn standard_suite() -> Vec<GeneratorSpec> {
    let specs = [
        "biq:n=11,seed=1",
        "biq:n=11,seed=2",
        "biq:n=11,seed=3",
        "biq:n=11,seed=4",
        "theta:n=16,p=0.3,seed=1",
        "theta:n=20,p=0.2,seed=2",
        "theta:n=25,p=0.3,seed=3",
        "theta:n=30,p=0.15,seed=4",
        "rcp:n=20,k=2,seed=1,dim=2",
        "rcp:n=20,k=3,seed=2,dim=2",
        "rcp:n=20,k=2,seed=3,dim=3",
        "rcp:n=20,k=4,seed=4,dim=2",
        "qap:n=4,seed=1",
        "qap:n=4,seed=2",
        "qap:n=4,seed=3",
        "qap:n=4,seed=4",
        "fap:n=12,p=0.4,k=3,u=0.3,seed=1",
        "fap:n=15,p=0.3,k=3,u=0.3,seed=2",
        "fap:n=18,p=0.3,k=4,u=0.2,seed=3",
        "fap:n=20,p=0.25,k=3,u=0.3,seed=4",
    ];
    specs
        .iter()
        .map(|s| s.parse().expect("suite specs are well formed"))
        .collect()
}

/// Ten extended-BIQ instances with n = 11.
pub fn extended_suite() -> Vec<GeneratorSpec> {
    (1..=10)
        .map(|s| {
            format!("biqext:n=11,seed={s}")
                .parse()
                .expect("well formed")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn biq_one_variable_reference() {
        let data = BiqData {
            q: DMatrix::from_element(1, 1, 2.0),
            c: DVector::from_element(1, -3.0),
        };
        assert_eq!(data.enumerate(), Some(-2.0));
    }

    #[test]
    fn biq_shape() {
        let g = gen_biq(7, 11).unwrap();
        assert_eq!(g.problem.n(), 11);
        assert_eq!(g.problem.m_eq(), 11);
        assert!(g.reference.is_some());
    }

    #[test]
    fn biq_cost_reproduces_objective_on_rank_one_points() {
        let data = BiqData::random(3, 4);
        let p = biq_problem(&data, "t").unwrap();
        let x = [1.0, 0.0, 1.0, 1.0];
        let mut v = x.to_vec();
        v.push(1.0);
        let xx = SymMat::from_upper_fn(5, |i, j| v[i] * v[j]);
        assert!((p.cost().dot(&xx) - data.value(&x)).abs() < 1e-12);
        let r = p.apply_eq(&xx).unwrap();
        assert!((r - p.b_eq()).norm() < 1e-12);
    }

    #[test]
    fn extended_cut_counts() {
        assert_eq!(gen_biq_extended(0, 3).unwrap().problem.m_ineq(), 3);
        assert_eq!(gen_biq_extended(0, 11).unwrap().problem.m_ineq(), 135);
        for n in 3..9 {
            assert_eq!(biq_cuts(n).0.len(), 3 * (n - 2) * (n - 1) / 2);
        }
    }

    #[test]
    fn cuts_hold_at_binary_points() {
        let n = 5;
        let (a, b) = biq_cuts(n);
        for mask in 0..16u32 {
            let mut v: Vec<f64> = (0..4).map(|i| ((mask >> i) & 1) as f64).collect();
            v.push(1.0);
            let xx = SymMat::from_upper_fn(n, |i, j| v[i] * v[j]);
            let ax = a.apply_mat(&xx).unwrap();
            assert!(ax.iter().zip(b.iter()).all(|(l, r)| l >= &(r - 1e-12)));
        }
    }

    #[test]
    fn stability_numbers() {
        let empty = GraphSpec::new(6, vec![], None).unwrap();
        assert_eq!(empty.stability_number().unwrap(), 6);
        assert_eq!(GraphSpec::complete(5).stability_number().unwrap(), 1);
        // 5-cycle
        let c5 = GraphSpec::new(5, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)], None).unwrap();
        assert_eq!(c5.stability_number().unwrap(), 2);
    }

    #[test]
    fn graph_validation() {
        assert!(GraphSpec::new(3, vec![(0, 0)], None).is_err());
        assert!(GraphSpec::new(3, vec![(0, 1), (1, 0)], None).is_err());
        assert!(GraphSpec::new(3, vec![(0, 3)], None).is_err());
    }

    #[test]
    fn qap_two_by_two_identity() {
        let i2 = SymMat::identity(2);
        let g = gen_qap(&i2, &i2, "t").unwrap();
        assert_eq!(g.reference.unwrap().value, 2.0);
    }

    #[test]
    fn qap_rows_and_permutation_feasibility() {
        for n in 2..=5 {
            let g = gen_qap_random(n as u64, n).unwrap();
            let p = &g.problem;
            assert_eq!(p.m_eq(), qap_row_count(n), "n = {n}");
            // every permutation lifts to a feasible Y with value ⟨P, A P B⟩
            let perm = seeded_permutation(n as u64, n);
            let mut x = vec![0.0; n * n];
            for j in 0..n {
                x[j * n + perm[j]] = 1.0;
            }
            let y = SymMat::from_upper_fn(n * n, |a, b| x[a] * x[b]);
            assert!((p.apply_eq(&y).unwrap() - p.b_eq()).norm() < 1e-12);
        }
    }

    #[test]
    fn qap_zero_flow() {
        let z = SymMat::zeros(3);
        let d = SymMat::from_upper_fn(3, |i, j| (i + j) as f64);
        assert_eq!(gen_qap(&z, &d, "t").unwrap().reference.unwrap().value, 0.0);
    }

    #[test]
    fn rcp_identity_is_feasible_for_k_equal_n() {
        let g = gen_rcp_random(1, 6, 6, 2).unwrap();
        let p = &g.problem;
        let x = SymMat::identity(6);
        assert!((p.apply_eq(&x).unwrap() - p.b_eq()).norm() < 1e-12);
        assert!(p.reported_objective(p.cost().dot(&x)).abs() < 1e-12);
        assert!(gen_rcp_random(1, 6, 7, 2).is_err());
        assert!(gen_rcp_random(1, 6, 0, 2).is_err());
    }

    #[test]
    fn fap_pattern_and_shift() {
        let g = GraphSpec::new(3, vec![(0, 1)], Some(vec![2.0])).unwrap();
        let gen = gen_fap(&g, &[true], 3, "t").unwrap();
        let pat = gen.problem.pattern();
        assert_eq!(pat.kind(0, 1), EntryKind::Zero);
        assert_eq!(pat.kind(0, 2), EntryKind::Free);
        assert_eq!(pat.shift().unwrap().get(0, 1), -0.5);
        assert!(gen_fap(&g, &[true], 1, "t").is_err());
    }

    #[test]
    fn specs_parse_and_generate_deterministically() {
        let s: GeneratorSpec = "biq:n=6,seed=3".parse().unwrap();
        let a = s.generate().unwrap();
        let b = s.generate().unwrap();
        assert_eq!(a.problem, b.problem);
        assert!("foo:n=3".parse::<GeneratorSpec>().is_err());
        assert!("biq:m=3".parse::<GeneratorSpec>().is_err());
        assert!("biq:n=x"
            .parse::<GeneratorSpec>()
            .unwrap()
            .generate()
            .is_err());
        for s in [
            "theta:n=8,p=0.4,seed=1",
            "qap:n=3,seed=2",
            "rcp:n=8,k=2,seed=1,dim=2",
            "fap:n=8,p=0.5,k=3,u=0.3,seed=4",
            "biqext:n=5,seed=1",
        ] {
            s.parse::<GeneratorSpec>().unwrap().generate().unwrap();
        }
    }
}
