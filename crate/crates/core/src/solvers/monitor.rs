use nalgebra::DVector;

use crate::admm::{Iterate, Measure, Monitor};
use crate::cones::SymMat;
use crate::error::Result;
use crate::problem::{
    assemble_report, cheap_residuals, cone_residuals, ConicProblem, PointView, PrimalDualPoint,
    ResidualReport,
};

/// Where each primal-dual variable lives inside an engine iterate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Layout {
    /// Blocks `[S, Z, y_E]`, multiplier `X`.
    ThreeBlock,
    /// Blocks `[S, y_I, Z, y_E]`, multiplier `X`.
    FourBlock,
    /// Blocks `[(S, U), y_I, (Z, y_E)]`, multiplier `(X, X/α)`.
    Reformulated,
}

pub(crate) struct Parts<'a> {
    pub x: &'a [f64],
    pub s: &'a [f64],
    pub z: &'a [f64],
    pub y_eq: DVector<f64>,
    pub y_ineq: Option<DVector<f64>>,
}

impl Layout {
    pub fn parts<'a>(self, it: &'a Iterate, n2: usize) -> Parts<'a> {
        match self {
            Layout::ThreeBlock => Parts {
                x: it.x.as_slice(),
                s: it.blocks[0].as_slice(),
                z: it.blocks[1].as_slice(),
                y_eq: it.blocks[2].clone(),
                y_ineq: None,
            },
            Layout::FourBlock => Parts {
                x: it.x.as_slice(),
                s: it.blocks[0].as_slice(),
                z: it.blocks[2].as_slice(),
                y_eq: it.blocks[3].clone(),
                y_ineq: Some(it.blocks[1].clone()),
            },
            Layout::Reformulated => {
                let zy = &it.blocks[2];
                Parts {
                    x: &it.x.as_slice()[..n2],
                    s: &it.blocks[0].as_slice()[..n2],
                    z: &zy.as_slice()[..n2],
                    y_eq: zy.rows(n2, zy.len() - n2).into_owned(),
                    y_ineq: Some(it.blocks[1].clone()),
                }
            }
        }
    }

    pub fn point(self, it: &Iterate, n: usize) -> Result<PrimalDualPoint> {
        let p = self.parts(it, n * n);
        let mat = |v: &[f64]| SymMat::from_vector(n, &DVector::from_column_slice(v));
        Ok(PrimalDualPoint {
            x: mat(p.x)?,
            s: mat(p.s)?,
            z: mat(p.z)?,
            y_eq: p.y_eq,
            y_ineq: p.y_ineq,
        })
    }
}

/// Computes the KKT residual of conic iterates. The two eigenvalue-based
/// components are refreshed every `eig_every` iterations, and whenever the
/// remaining components already meet the tolerance, so only fresh
/// measurements can declare convergence.
pub(crate) struct ConicMonitor<'p> {
    problem: &'p ConicProblem,
    layout: Layout,
    tol: f64,
    eig_every: usize,
    cone: Option<(f64, f64)>,
    pub max_eta_p: f64,
    pub last: Option<ResidualReport>,
}

impl<'p> ConicMonitor<'p> {
    pub fn new(problem: &'p ConicProblem, layout: Layout, tol: f64, eig_every: usize) -> Self {
        ConicMonitor {
            problem,
            layout,
            tol,
            eig_every: eig_every.max(1),
            cone: None,
            max_eta_p: 0.0,
            last: None,
        }
    }
}

impl Monitor for ConicMonitor<'_> {
    fn observe(&mut self, k: usize, it: &Iterate, _sigma: f64, _tau: f64) -> Result<Measure> {
        let n = self.problem.n();
        let p = self.layout.parts(it, n * n);
        let view = PointView {
            x: p.x,
            s: p.s,
            z: p.z,
            y_eq: &p.y_eq,
            y_ineq: p.y_ineq.as_ref(),
        };
        let cheap = cheap_residuals(self.problem, &view);
        self.max_eta_p = self.max_eta_p.max(cheap.eta_p);
        let fresh =
            self.cone.is_none() || k.is_multiple_of(self.eig_every) || cheap.max() <= self.tol;
        if fresh {
            self.cone = Some(cone_residuals(n, p.x, p.s)?);
        }
        let (eta_k, eta_kstar) = self.cone.unwrap_or((0.0, 0.0));
        let report = assemble_report(cheap, eta_k, eta_kstar);
        self.last = Some(report);
        Ok(Measure {
            eta: report.eta,
            primal: report.primal_group(),
            dual: report.dual_group(),
            exact: fresh,
            primal_objective: report.primal_objective,
            dual_objective: report.dual_objective,
        })
    }
}
