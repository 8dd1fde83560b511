use std::collections::BTreeMap;
use std::path::Path;

use super::records::RunRecord;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Time,
    Iterations,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time" => Ok(Metric::Time),
            "iterations" => Ok(Metric::Iterations),
            _ => Err(Error::InvalidInput(format!(
                "unknown metric '{s}' (expected time or iterations)"
            ))),
        }
    }
}

/// `ys[s][i]` is the fraction of problems solver `s` solves within a factor
/// `xs[i]` of the best solver on each problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub solvers: Vec<String>,
    pub xs: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
}

/// 200 log-spaced points from 1 to 32, both ends exact.
pub fn profile_grid() -> Vec<f64> {
    const POINTS: usize = 200;
    let mut xs: Vec<f64> = (0..POINTS)
        .map(|i| (32f64.ln() * i as f64 / (POINTS - 1) as f64).exp())
        .collect();
    xs[0] = 1.0;
    xs[POINTS - 1] = 32.0;
    xs
}

pub fn performance_profile(records: &[RunRecord], metric: Metric) -> Result<Profile> {
    profile_at(records, metric, &profile_grid())
}

/// Profile on a caller-chosen grid. Unconverged runs count as +∞ and are
/// never within any factor of the best, even when no solver converged.
pub fn profile_at(records: &[RunRecord], metric: Metric, xs: &[f64]) -> Result<Profile> {
    let mut solvers: Vec<String> = Vec::new();
    for r in records {
        if !solvers.contains(&r.solver) {
            solvers.push(r.solver.clone());
        }
    }
    let mut table: BTreeMap<&str, Vec<Option<f64>>> = BTreeMap::new();
    for r in records {
        let s = solvers.iter().position(|x| *x == r.solver).unwrap();
        let row = table
            .entry(r.problem.as_str())
            .or_insert_with(|| vec![None; solvers.len()]);
        row.resize(solvers.len(), None);
        if row[s].is_some() {
            return Err(Error::InvalidInput(format!(
                "two records for solver '{}' on problem '{}'",
                r.solver, r.problem
            )));
        }
        let value = match (r.converged(), metric) {
            (false, _) => f64::INFINITY,
            (true, Metric::Time) => r.solve_secs,
            (true, Metric::Iterations) => r.iterations as f64,
        };
        row[s] = Some(value);
    }
    let mut rows = Vec::with_capacity(table.len());
    for (problem, row) in &table {
        let mut full = Vec::with_capacity(solvers.len());
        for (s, v) in solvers
            .iter()
            .zip(row.iter().chain(std::iter::repeat(&None)))
        {
            full.push(v.ok_or_else(|| {
                Error::InvalidInput(format!("no record for solver '{s}' on problem '{problem}'"))
            })?);
        }
        rows.push(full);
    }
    let count = rows.len().max(1) as f64;
    let ys = (0..solvers.len())
        .map(|s| {
            xs.iter()
                .map(|&x| {
                    let solved = rows
                        .iter()
                        .filter(|row| ratio(row, s).is_some_and(|r| r <= x))
                        .count();
                    solved as f64 / count
                })
                .collect()
        })
        .collect();
    Ok(Profile {
        solvers,
        xs: xs.to_vec(),
        ys,
    })
}

/// `t_s / min_t`, or `None` when solver `s` did not converge. A tie with the
/// best counts as 1 even when the best is 0.
fn ratio(row: &[f64], s: usize) -> Option<f64> {
    let best = row.iter().copied().fold(f64::INFINITY, f64::min);
    let t = row[s];
    if !t.is_finite() {
        None
    } else if t == best {
        Some(1.0)
    } else {
        Some(t / best)
    }
}

/// Columns `x, y_<solver>...`.
pub fn write_profile_csv(profile: &Profile, path: impl AsRef<Path>) -> Result<()> {
    super::create_parent(path.as_ref())?;
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec!["x".to_string()];
    header.extend(profile.solvers.iter().map(|s| format!("y_{s}")));
    w.write_record(&header)?;
    for (i, x) in profile.xs.iter().enumerate() {
        let mut row = vec![x.to_string()];
        row.extend(profile.ys.iter().map(|y| y[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admm::Status;

    fn rec(problem: &str, solver: &str, iterations: usize, converged: bool) -> RunRecord {
        RunRecord {
            problem: problem.into(),
            solver: solver.into(),
            status: if converged {
                Status::Converged
            } else {
                Status::Stalled
            },
            iterations,
            tol: 1e-6,
            eta: 0.0,
            eta_p: 0.0,
            eta_d: 0.0,
            eta_k: 0.0,
            eta_pc: 0.0,
            eta_kstar: 0.0,
            eta_pcstar: 0.0,
            eta_c1: 0.0,
            eta_c2: 0.0,
            eta_i: None,
            eta_istar: None,
            eta_g: 0.0,
            objective: 0.0,
            setup_secs: 0.0,
            solve_secs: iterations as f64 * 1e-3,
        }
    }

    #[test]
    fn grid_shape() {
        let xs = profile_grid();
        assert_eq!(xs.len(), 200);
        assert_eq!((xs[0], xs[199]), (1.0, 32.0));
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn single_solver_is_fraction_solved() {
        let rs = [rec("a", "s", 5, true), rec("b", "s", 9, false)];
        let p = performance_profile(&rs, Metric::Iterations).unwrap();
        assert!(p.ys[0].iter().all(|&y| y == 0.5));
    }

    #[test]
    fn two_solvers_one_problem() {
        let rs = [rec("a", "s1", 1, true), rec("a", "s2", 2, true)];
        let p = profile_at(&rs, Metric::Iterations, &[1.0, 2.0]).unwrap();
        assert_eq!(p.ys, vec![vec![1.0, 1.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn unsolved_everywhere_never_counts() {
        let rs = [rec("a", "s1", 1, false), rec("a", "s2", 2, false)];
        let p = profile_at(&rs, Metric::Time, &[1.0, 1e9]).unwrap();
        assert_eq!(p.ys, vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn missing_or_repeated_pairs_fail() {
        let rs = [
            rec("a", "s1", 1, true),
            rec("a", "s2", 2, true),
            rec("b", "s1", 3, true),
        ];
        assert!(performance_profile(&rs, Metric::Iterations).is_err());
        let rs = [rec("a", "s1", 1, true), rec("a", "s1", 2, true)];
        assert!(performance_profile(&rs, Metric::Iterations).is_err());
    }

    #[test]
    fn csv_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let rs = [rec("a", "s1", 1, true), rec("a", "s2", 2, true)];
        write_profile_csv(
            &performance_profile(&rs, Metric::Iterations).unwrap(),
            &path,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next(), Some("x,y_s1,y_s2"));
        assert_eq!(text.lines().count(), 201);
    }
}
