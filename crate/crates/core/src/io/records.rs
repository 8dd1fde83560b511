use std::fs::OpenOptions;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::admm::Status;
use crate::error::{Error, Result};
use crate::solvers::SolveOutput;

/// One solver run, as stored in the results CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: String,
    pub solver: String,
    pub status: Status,
    pub iterations: usize,
    pub tol: f64,
    pub eta: f64,
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
    pub eta_g: f64,
    pub objective: f64,
    pub setup_secs: f64,
    pub solve_secs: f64,
}

impl RunRecord {
    pub fn from_output(problem: &str, tol: f64, out: &SolveOutput) -> Self {
        let r = &out.report;
        RunRecord {
            problem: problem.to_string(),
            solver: out.solver.to_string(),
            status: out.status,
            iterations: out.iterations,
            tol,
            eta: r.eta,
            eta_p: r.eta_p,
            eta_d: r.eta_d,
            eta_k: r.eta_k,
            eta_pc: r.eta_pc,
            eta_kstar: r.eta_kstar,
            eta_pcstar: r.eta_pcstar,
            eta_c1: r.eta_c1,
            eta_c2: r.eta_c2,
            eta_i: r.eta_i,
            eta_istar: r.eta_istar,
            eta_g: r.eta_g,
            objective: out.objective,
            setup_secs: out.setup_secs,
            solve_secs: out.solve_secs,
        }
    }

    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

/// Appends rows to `path`, writing the header only when the file is new or
/// empty.
pub fn append_records(path: impl AsRef<Path>, records: &[RunRecord]) -> Result<()> {
    let path = path.as_ref();
    super::create_parent(path)?;
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let empty = file.metadata().map_err(|e| Error::io(path, e))?.len() == 0;
    let mut w = csv::WriterBuilder::new()
        .has_headers(empty)
        .from_writer(file);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize()
        .collect::<std::result::Result<Vec<RunRecord>, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn record(
        problem: &str,
        solver: &str,
        iterations: usize,
        converged: bool,
    ) -> RunRecord {
        RunRecord {
            problem: problem.into(),
            solver: solver.into(),
            status: if converged {
                Status::Converged
            } else {
                Status::MaxIters
            },
            iterations,
            tol: 1e-6,
            eta: 0.1 + 1e-7,
            eta_p: 1.0 / 3.0,
            eta_d: 2e-300,
            eta_k: 0.0,
            eta_pc: -0.0,
            eta_kstar: f64::MIN_POSITIVE,
            eta_pcstar: 1e300,
            eta_c1: 7.25,
            eta_c2: 1e-17,
            eta_i: Some(0.5),
            eta_istar: None,
            eta_g: -3.3e-9,
            objective: -82.48472142,
            setup_secs: 0.001,
            solve_secs: 12.5,
        }
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.csv");
        let a = vec![
            record("p1", "admm3c", 10, true),
            record("p,2", "spadmm3c", 7, false),
        ];
        append_records(&path, &a[..1]).unwrap();
        append_records(&path, &a[1..]).unwrap();
        let back = read_records(&path).unwrap();
        assert_eq!(back, a);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.lines().filter(|l| l.starts_with("problem,")).count(),
            1
        );
    }
}
