//! Single-block SDPA sparse format.
//!
//! Matrix 0 is read as the cost `C` of `min ⟨C, X⟩`, matrices `1..=m` as
//! the equality rows, and the objective vector as their right-hand sides.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use super::native::{self, annotation_path};
use super::{read_text, write_text};
use crate::error::{Error, Result};
use crate::problem::{ConicProblem, ConstraintMap, ProblemData, SparseSym};

/// Reads `path` and, if present, the annotation file beside it.
pub fn read_sdpa(path: impl AsRef<Path>) -> Result<ConicProblem> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut data = parse_sdpa(&text, path)?;
    data.name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ann = annotation_path(path);
    if ann.exists() {
        native::apply_annotation(&mut data, &read_text(&ann)?, &ann)?;
    }
    ConicProblem::new(data)
}

/// Writes `problem` to `path`. Anything SDPA cannot carry (pattern, shift,
/// inequalities, sense, offset, a name other than the file stem) goes to the
/// annotation file; a stale annotation file is removed.
pub fn write_sdpa(problem: &ConicProblem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_text(path, &format_sdpa(problem))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ann = annotation_path(path);
    match native::format_annotation(problem.data(), &stem) {
        Some(text) => write_text(&ann, &text),
        None if ann.exists() => std::fs::remove_file(&ann).map_err(|e| Error::io(ann, e)),
        None => Ok(()),
    }
}

pub fn format_sdpa(problem: &ConicProblem) -> String {
    let d = problem.data();
    let mut out = String::new();
    let _ = writeln!(out, "\"{}\"", d.name.replace('"', "'"));
    let _ = writeln!(out, "{}", d.eq.len());
    let _ = writeln!(out, "1");
    let _ = writeln!(out, "{}", d.n);
    let rhs: Vec<String> = d.b_eq.iter().map(|v| format!("{v}")).collect();
    let _ = writeln!(out, "{}", rhs.join(" "));
    for (i, j, v) in SparseSym::from_dense(&d.cost).entries() {
        let _ = writeln!(out, "0 1 {} {} {v}", i + 1, j + 1);
    }
    for (k, row) in d.eq.rows().iter().enumerate() {
        for (i, j, v) in row.entries() {
            let _ = writeln!(out, "{} 1 {} {} {v}", k + 1, i + 1, j + 1);
        }
    }
    out
}

/// Parses SDPA text; `path` only labels errors.
pub fn parse_sdpa(text: &str, path: &Path) -> Result<ProblemData> {
    let err = |line: usize, msg: String| Error::parse(PathBuf::from(path), line, msg);
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('*') && !l.starts_with('"'));

    let mut header = |what: &str| {
        lines.next().ok_or_else(|| {
            err(
                text.lines().count(),
                format!("unexpected end of file, expected {what}"),
            )
        })
    };
    let (ln, l) = header("the number of constraints")?;
    let m: usize = first_token(l)
        .parse()
        .map_err(|_| err(ln, format!("invalid constraint count '{}'", first_token(l))))?;
    let (ln, l) = header("the number of blocks")?;
    let nblocks: usize = first_token(l)
        .parse()
        .map_err(|_| err(ln, format!("invalid block count '{}'", first_token(l))))?;
    if nblocks != 1 {
        return Err(err(
            ln,
            format!("{nblocks} blocks: only single-block files with one PSD block are supported"),
        ));
    }
    let (ln, l) = header("the block sizes")?;
    let size: i64 = first_token(l)
        .parse()
        .map_err(|_| err(ln, format!("invalid block size '{}'", first_token(l))))?;
    if size <= 0 {
        return Err(err(
            ln,
            format!("block size {size}: diagonal (LP) blocks are not supported"),
        ));
    }
    let n = size as usize;

    let mut rhs = Vec::with_capacity(m);
    while rhs.len() < m {
        let (ln, l) = header("the objective vector")?;
        for tok in tokens(l) {
            if rhs.len() == m {
                return Err(err(
                    ln,
                    format!("objective vector has more than {m} entries"),
                ));
            }
            rhs.push(parse_f64(tok).ok_or_else(|| err(ln, format!("invalid number '{tok}'")))?);
        }
    }

    let mut mats: Vec<BTreeMap<(usize, usize), f64>> = vec![BTreeMap::new(); m + 1];
    for (ln, l) in lines {
        let t: Vec<&str> = tokens(l).collect();
        if t.len() != 5 {
            return Err(err(
                ln,
                format!("expected 'matno blkno i j value', found {} fields", t.len()),
            ));
        }
        let int = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|_| err(ln, format!("invalid {what} '{s}'")))
        };
        let k = int(t[0], "matrix number")?;
        let blk = int(t[1], "block number")?;
        let i = int(t[2], "row index")?;
        let j = int(t[3], "column index")?;
        let v = parse_f64(t[4]).ok_or_else(|| err(ln, format!("invalid number '{}'", t[4])))?;
        if k > m {
            return Err(err(ln, format!("matrix number {k} exceeds {m}")));
        }
        if blk != 1 {
            return Err(err(
                ln,
                format!("block number {blk} out of range (1 block)"),
            ));
        }
        if i == 0 || j == 0 || i > n || j > n {
            return Err(err(
                ln,
                format!("index ({i}, {j}) out of range for block size {n}"),
            ));
        }
        let key = (i.min(j) - 1, i.max(j) - 1);
        match mats[k].insert(key, v) {
            Some(old) if old != v => {
                return Err(err(
                    ln,
                    format!("conflicting duplicate entry ({i}, {j}) of matrix {k}: {old} and {v}"),
                ))
            }
            _ => {}
        }
    }

    let sparse = |entries: &BTreeMap<(usize, usize), f64>| {
        SparseSym::new(n, entries.iter().map(|(&(i, j), &v)| (i, j, v)))
    };
    let cost = sparse(&mats[0])?.to_dense();
    let rows = mats[1..].iter().map(sparse).collect::<Result<Vec<_>>>()?;
    Ok(ProblemData::new(
        n,
        cost,
        ConstraintMap::new(n, rows)?,
        DVector::from_vec(rhs),
    ))
}

/// Whitespace tokens after turning SDPA's optional punctuation into spaces.
fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')'))
        .filter(|t| !t.is_empty())
}

fn first_token(line: &str) -> &str {
    tokens(line).next().unwrap_or("")
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}
