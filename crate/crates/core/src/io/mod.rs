//! Problem files, run records and performance profiles.

use std::path::Path;

use crate::error::{Error, Result};
use crate::generators::GraphSpec;

mod native;
mod profile;
mod records;
mod sdpa;

pub use native::{annotation_path, format_native, parse_native, read_native, write_native};
pub use profile::{
    performance_profile, profile_at, profile_grid, write_profile_csv, Metric, Profile,
};
pub use records::{append_records, read_records, RunRecord};
pub use sdpa::{format_sdpa, parse_sdpa, read_sdpa, write_sdpa};

/// Environment variable naming the default directory for CSV output.
pub const OUT_DIR_ENV: &str = "CONIC_ADMM_OUT_DIR";

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    create_parent(path)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
        }
        _ => Ok(()),
    }
}

/// Reads a problem, choosing the format by extension: `.native` or `.txt`
/// files use the native format, everything else is read as SDPA.
pub fn read_problem(path: impl AsRef<Path>) -> Result<crate::problem::ConicProblem> {
    let path = path.as_ref();
    if is_native_path(path) {
        read_native(path)
    } else {
        read_sdpa(path)
    }
}

/// `.native` and `.txt` files hold the native format; anything else SDPA.
pub fn is_native_path(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("native" | "txt")
    )
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<GraphSpec> {
    let path = path.as_ref();
    parse_graph(&read_text(path)?, path)
}

/// Header `n m`, then `m` lines `i j [w]` with 1-based vertices. Lines
/// starting with `#` are comments. Weights must be given on all edges or
/// none.
pub fn parse_graph(text: &str, path: &Path) -> Result<GraphSpec> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (ln, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty graph file"))?;
    let h: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse(path, ln, format!("invalid header '{header}'")))?;
    let &[n, m] = h.as_slice() else {
        return Err(Error::parse(path, ln, "header must be 'n m'"));
    };
    let mut edges = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    let mut last = ln;
    for (ln, l) in lines {
        last = ln;
        let t: Vec<&str> = l.split_whitespace().collect();
        if !(t.len() == 2 || t.len() == 3) {
            return Err(Error::parse(
                path,
                ln,
                format!("expected 'i j [w]', found '{l}'"),
            ));
        }
        let vertex = |s: &str| match s.parse::<usize>() {
            Ok(v) if v >= 1 && v <= n => Ok(v - 1),
            _ => Err(Error::parse(
                path,
                ln,
                format!("invalid vertex '{s}' for {n} vertices"),
            )),
        };
        let (i, j) = (vertex(t[0])?, vertex(t[1])?);
        if i == j {
            return Err(Error::parse(
                path,
                ln,
                format!("self-loop at vertex {}", i + 1),
            ));
        }
        if edges
            .iter()
            .any(|&(a, b)| (a, b) == (i, j) || (a, b) == (j, i))
        {
            return Err(Error::parse(
                path,
                ln,
                format!("repeated edge ({}, {})", i + 1, j + 1),
            ));
        }
        edges.push((i, j));
        if let Some(w) = t.get(2) {
            weights.push(
                w.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(path, ln, format!("invalid weight '{w}'")))?,
            );
        }
        if !weights.is_empty() && weights.len() != edges.len() {
            return Err(Error::parse(
                path,
                ln,
                "weights must be given on all edges or none",
            ));
        }
    }
    if edges.len() != m {
        return Err(Error::parse(
            path,
            last,
            format!("header announces {m} edges, found {}", edges.len()),
        ));
    }
    let weights = (!weights.is_empty()).then_some(weights);
    GraphSpec::new(n, edges, weights).map_err(|e| Error::parse(path, last, e.to_string()))
}
