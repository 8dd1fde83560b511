//! Native text format. See `docs/native-format.md` for the grammar.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use super::{read_text, write_text};
use crate::cones::{EntryKind, PolyhedralPattern, SymMat};
use crate::error::{Error, Result};
use crate::problem::{ConicProblem, ConstraintMap, ProblemData, Sense, SparseSym};

const SECTIONS: [&str; 8] = [
    "meta", "cost", "eq", "rhs_eq", "ineq", "rhs_ineq", "pattern", "shift",
];
const ANNOTATION_SECTIONS: [&str; 5] = ["meta", "ineq", "rhs_ineq", "pattern", "shift"];

/// `problem.dat-s` → `problem.ann`.
pub fn annotation_path(path: &Path) -> PathBuf {
    path.with_extension("ann")
}

pub fn read_native(path: impl AsRef<Path>) -> Result<ConicProblem> {
    let path = path.as_ref();
    ConicProblem::new(parse_native(&read_text(path)?, path)?)
}

pub fn write_native(problem: &ConicProblem, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &format_native(problem.data()))
}

struct Section<'a> {
    header_line: usize,
    lines: Vec<(usize, &'a str)>,
}

struct Parser<'a> {
    path: &'a Path,
    sections: BTreeMap<&'a str, Section<'a>>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, path: &'a Path, allowed: &[&str]) -> Result<Self> {
        let mut sections: BTreeMap<&str, Section> = BTreeMap::new();
        let mut current: Option<&str> = None;
        for (idx, raw) in text.lines().enumerate() {
            let ln = idx + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                let name = name.trim();
                if !allowed.contains(&name) {
                    return Err(Error::parse(path, ln, format!("unknown section [{name}]")));
                }
                if let Some(prev) = sections.get(name) {
                    return Err(Error::parse(
                        path,
                        ln,
                        format!(
                            "section [{name}] duplicated (first at line {})",
                            prev.header_line
                        ),
                    ));
                }
                sections.insert(
                    name,
                    Section {
                        header_line: ln,
                        lines: Vec::new(),
                    },
                );
                current = Some(name);
                continue;
            }
            match current {
                Some(name) => sections.get_mut(name).unwrap().lines.push((ln, l)),
                None => return Err(Error::parse(path, ln, "content before the first section")),
            }
        }
        Ok(Parser { path, sections })
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.path, line, msg)
    }

    fn end_line(&self) -> usize {
        self.sections
            .values()
            .flat_map(|s| s.lines.last().map(|l| l.0).or(Some(s.header_line)))
            .max()
            .unwrap_or(0)
    }

    fn require(&self, name: &str) -> Result<&Section<'a>> {
        self.sections
            .get(name)
            .ok_or_else(|| self.err(self.end_line(), format!("section [{name}] missing")))
    }

    fn meta(&self) -> Result<BTreeMap<&'a str, (usize, &'a str)>> {
        let mut out = BTreeMap::new();
        let Some(sec) = self.sections.get("meta") else {
            return Ok(out);
        };
        for &(ln, l) in &sec.lines {
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| self.err(ln, format!("expected 'key = value', found '{l}'")))?;
            if out.insert(k.trim(), (ln, v.trim())).is_some() {
                return Err(self.err(ln, format!("key '{}' repeated", k.trim())));
            }
        }
        Ok(out)
    }

    fn fields<'l>(&self, ln: usize, l: &'l str, count: usize, form: &str) -> Result<Vec<&'l str>> {
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != count {
            return Err(self.err(ln, format!("expected '{form}', found '{l}'")));
        }
        Ok(t)
    }

    fn index(&self, ln: usize, s: &str, bound: usize, what: &str) -> Result<usize> {
        match s.parse::<usize>() {
            Ok(i) if i >= 1 && i <= bound => Ok(i - 1),
            Ok(i) => Err(self.err(ln, format!("{what} {i} out of range 1..={bound}"))),
            Err(_) => Err(self.err(ln, format!("invalid {what} '{s}'"))),
        }
    }

    fn value(&self, ln: usize, s: &str) -> Result<f64> {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(ln, format!("invalid number '{s}'")))
    }

    /// Entries of a symmetric matrix section with lines `i j value`.
    fn matrix(&self, name: &str, n: usize) -> Result<SymMat> {
        let Some(sec) = self.sections.get(name) else {
            return Ok(SymMat::zeros(n));
        };
        let mut entries = BTreeMap::new();
        for &(ln, l) in &sec.lines {
            let t = self.fields(ln, l, 3, "i j value")?;
            let i = self.index(ln, t[0], n, "row index")?;
            let j = self.index(ln, t[1], n, "column index")?;
            let v = self.value(ln, t[2])?;
            self.insert(&mut entries, (i.min(j), i.max(j)), v, ln)?;
        }
        Ok(SparseSym::new(n, entries.into_iter().map(|((i, j), v)| (i, j, v)))?.to_dense())
    }

    /// Rows of a constraint section with lines `k i j value`.
    fn constraints(&self, name: &str, n: usize, m: usize) -> Result<ConstraintMap> {
        let mut rows: Vec<BTreeMap<(usize, usize), f64>> = vec![BTreeMap::new(); m];
        if m > 0 {
            for &(ln, l) in &self.require(name)?.lines {
                let t = self.fields(ln, l, 4, "k i j value")?;
                let k = self.index(ln, t[0], m, "constraint index")?;
                let i = self.index(ln, t[1], n, "row index")?;
                let j = self.index(ln, t[2], n, "column index")?;
                let v = self.value(ln, t[3])?;
                self.insert(&mut rows[k], (i.min(j), i.max(j)), v, ln)?;
            }
        } else if let Some(sec) = self.sections.get(name) {
            if let Some(&(ln, _)) = sec.lines.first() {
                return Err(self.err(ln, format!("entries in [{name}] but no such constraints")));
            }
        }
        let rows = rows
            .into_iter()
            .map(|r| SparseSym::new(n, r.into_iter().map(|((i, j), v)| (i, j, v))))
            .collect::<Result<Vec<_>>>()?;
        ConstraintMap::new(n, rows)
    }

    /// Right-hand side section with lines `k value`; absent entries are zero.
    fn rhs(&self, name: &str, m: usize) -> Result<DVector<f64>> {
        let mut b = DVector::zeros(m);
        let mut seen = vec![false; m];
        if m == 0 {
            if let Some(&(ln, _)) = self.sections.get(name).and_then(|s| s.lines.first()) {
                return Err(self.err(ln, format!("entries in [{name}] but no such constraints")));
            }
            return Ok(b);
        }
        for &(ln, l) in &self.require(name)?.lines {
            let t = self.fields(ln, l, 2, "k value")?;
            let k = self.index(ln, t[0], m, "constraint index")?;
            if std::mem::replace(&mut seen[k], true) {
                return Err(self.err(ln, format!("right-hand side {} given twice", k + 1)));
            }
            b[k] = self.value(ln, t[1])?;
        }
        Ok(b)
    }

    fn pattern(&self, n: usize) -> Result<PolyhedralPattern> {
        let Some(sec) = self.sections.get("pattern") else {
            return Ok(PolyhedralPattern::free(n));
        };
        let kind = |ln: usize, s: &str| {
            EntryKind::from_token(s).ok_or_else(|| {
                self.err(
                    ln,
                    format!("unknown kind token '{s}' (expected NONNEG, NONPOS, FREE or ZERO)"),
                )
            })
        };
        let mut pattern = PolyhedralPattern::free(n);
        let mut seen = BTreeMap::new();
        for (pos, &(ln, l)) in sec.lines.iter().enumerate() {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.first() == Some(&"default") {
                if t.len() != 2 || pos != 0 {
                    return Err(self.err(ln, "'default KIND' must be the first line of [pattern]"));
                }
                pattern = PolyhedralPattern::uniform(n, kind(ln, t[1])?);
                continue;
            }
            let t = self.fields(ln, l, 3, "i j KIND")?;
            let i = self.index(ln, t[0], n, "row index")?;
            let j = self.index(ln, t[1], n, "column index")?;
            let k = kind(ln, t[2])?;
            if let Some(prev) = seen.insert((i.min(j), i.max(j)), k) {
                if prev != k {
                    return Err(self.err(
                        ln,
                        format!("conflicting kinds for entry ({}, {})", i + 1, j + 1),
                    ));
                }
            }
            pattern.set(i, j, k);
        }
        let shift = self.matrix("shift", n)?;
        pattern.set_shift(Some(shift))?;
        Ok(pattern)
    }

    fn insert(
        &self,
        map: &mut BTreeMap<(usize, usize), f64>,
        key: (usize, usize),
        v: f64,
        ln: usize,
    ) -> Result<()> {
        match map.insert(key, v) {
            Some(old) if old != v => Err(self.err(
                ln,
                format!(
                    "conflicting duplicate entry ({}, {}): {old} and {v}",
                    key.0 + 1,
                    key.1 + 1
                ),
            )),
            _ => Ok(()),
        }
    }
}

fn parse_count(
    p: &Parser,
    meta: &BTreeMap<&str, (usize, &str)>,
    key: &str,
) -> Result<Option<usize>> {
    meta.get(key)
        .map(|&(ln, v)| {
            v.parse::<usize>()
                .map_err(|_| p.err(ln, format!("invalid value '{v}' for '{key}'")))
        })
        .transpose()
}

fn apply_meta(
    p: &Parser,
    meta: &BTreeMap<&str, (usize, &str)>,
    data: &mut ProblemData,
) -> Result<()> {
    if let Some(&(_, v)) = meta.get("name") {
        data.name = v.to_string();
    }
    if let Some(&(ln, v)) = meta.get("sense") {
        data.sense = match v {
            "min" => Sense::Minimize,
            "max" => Sense::Maximize,
            _ => return Err(p.err(ln, format!("invalid sense '{v}' (expected min or max)"))),
        };
    }
    if let Some(&(ln, v)) = meta.get("offset") {
        data.offset = p.value(ln, v)?;
    }
    Ok(())
}

fn check_keys(p: &Parser, meta: &BTreeMap<&str, (usize, &str)>, allowed: &[&str]) -> Result<()> {
    for (k, &(ln, _)) in meta {
        if !allowed.contains(k) {
            return Err(p.err(ln, format!("unknown key '{k}' in [meta]")));
        }
    }
    Ok(())
}

/// Parses native text; `path` only labels errors.
pub fn parse_native(text: &str, path: &Path) -> Result<ProblemData> {
    let p = Parser::new(text, path, &SECTIONS)?;
    let meta_sec = p.require("meta")?;
    let meta = p.meta()?;
    check_keys(&p, &meta, &["name", "n", "m_E", "m_I", "sense", "offset"])?;
    let need = |key: &str| {
        parse_count(&p, &meta, key)?
            .ok_or_else(|| p.err(meta_sec.header_line, format!("[meta] lacks '{key}'")))
    };
    let n = need("n")?;
    if n == 0 {
        return Err(p.err(meta.get("n").map_or(0, |e| e.0), "n must be positive"));
    }
    let m_eq = need("m_E")?;
    let m_ineq = parse_count(&p, &meta, "m_I")?.unwrap_or(0);
    p.require("cost")?;

    let mut data = ProblemData::new(
        n,
        p.matrix("cost", n)?,
        p.constraints("eq", n, m_eq)?,
        p.rhs("rhs_eq", m_eq)?,
    );
    data.ineq = p.constraints("ineq", n, m_ineq)?;
    data.b_ineq = p.rhs("rhs_ineq", m_ineq)?;
    data.pattern = p.pattern(n)?;
    apply_meta(&p, &meta, &mut data)?;
    Ok(data)
}

/// Applies an annotation (`[meta]` with name, sense, offset, m_I; plus
/// `[ineq]`, `[rhs_ineq]`, `[pattern]`, `[shift]`) to data read elsewhere.
pub fn apply_annotation(data: &mut ProblemData, text: &str, path: &Path) -> Result<()> {
    let p = Parser::new(text, path, &ANNOTATION_SECTIONS)?;
    let meta = p.meta()?;
    check_keys(&p, &meta, &["name", "m_I", "sense", "offset"])?;
    let m_ineq = parse_count(&p, &meta, "m_I")?.unwrap_or(0);
    data.ineq = p.constraints("ineq", data.n, m_ineq)?;
    data.b_ineq = p.rhs("rhs_ineq", m_ineq)?;
    data.pattern = p.pattern(data.n)?;
    apply_meta(&p, &meta, data)?;
    Ok(())
}

pub fn format_native(d: &ProblemData) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[meta]");
    if !d.name.is_empty() {
        let _ = writeln!(out, "name = {}", d.name);
    }
    let _ = writeln!(
        out,
        "n = {}\nm_E = {}\nm_I = {}",
        d.n,
        d.eq.len(),
        d.ineq.len()
    );
    write_meta_tail(&mut out, d);
    let _ = writeln!(out, "[cost]");
    write_matrix(&mut out, &d.cost);
    write_constraints(&mut out, "eq", "rhs_eq", &d.eq, &d.b_eq);
    write_constraints(&mut out, "ineq", "rhs_ineq", &d.ineq, &d.b_ineq);
    write_pattern(&mut out, &d.pattern);
    out
}

/// The annotation that restores what SDPA cannot carry, or `None` when
/// nothing needs restoring. `stem` is the name the SDPA reader will assign.
pub fn format_annotation(d: &ProblemData, stem: &str) -> Option<String> {
    let trivial = d.name == stem
        && d.ineq.is_empty()
        && d.sense == Sense::Minimize
        && d.offset == 0.0
        && d.pattern.is_all_free()
        && d.pattern.shift().is_none();
    if trivial {
        return None;
    }
    let mut out = String::new();
    let _ = writeln!(out, "[meta]\nname = {}\nm_I = {}", d.name, d.ineq.len());
    write_meta_tail(&mut out, d);
    write_constraints(&mut out, "ineq", "rhs_ineq", &d.ineq, &d.b_ineq);
    write_pattern(&mut out, &d.pattern);
    Some(out)
}

fn write_meta_tail(out: &mut String, d: &ProblemData) {
    let sense = match d.sense {
        Sense::Minimize => "min",
        Sense::Maximize => "max",
    };
    let _ = writeln!(out, "sense = {sense}\noffset = {}", d.offset);
}

fn write_matrix(out: &mut String, m: &SymMat) {
    for (i, j, v) in SparseSym::from_dense(m).entries() {
        let _ = writeln!(out, "{} {} {v}", i + 1, j + 1);
    }
}

fn write_constraints(
    out: &mut String,
    rows: &str,
    rhs: &str,
    map: &ConstraintMap,
    b: &DVector<f64>,
) {
    if map.is_empty() {
        return;
    }
    let _ = writeln!(out, "[{rows}]");
    for (k, row) in map.rows().iter().enumerate() {
        for (i, j, v) in row.entries() {
            let _ = writeln!(out, "{} {} {} {v}", k + 1, i + 1, j + 1);
        }
    }
    let _ = writeln!(out, "[{rhs}]");
    for (k, v) in b.iter().enumerate() {
        let _ = writeln!(out, "{} {v}", k + 1);
    }
}

fn write_pattern(out: &mut String, pattern: &PolyhedralPattern) {
    let n = pattern.order();
    if !pattern.is_all_free() {
        let kinds = [
            EntryKind::NonNeg,
            EntryKind::NonPos,
            EntryKind::Free,
            EntryKind::Zero,
        ];
        let default = *kinds
            .iter()
            .max_by_key(|&&k| pattern.kinds().iter().filter(|&&x| x == k).count())
            .unwrap();
        let _ = writeln!(out, "[pattern]\ndefault {}", default.token());
        for j in 0..n {
            for i in 0..=j {
                let k = pattern.kind(i, j);
                if k != default {
                    let _ = writeln!(out, "{} {} {}", i + 1, j + 1, k.token());
                }
            }
        }
    }
    if let Some(m) = pattern.shift() {
        let _ = writeln!(out, "[shift]");
        write_matrix(out, m);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ProblemData> {
        parse_native(text, Path::new("t.native"))
    }

    const SMALL: &str =
        "[meta]\nn = 2\nm_E = 1\n[cost]\n1 1 1\n[eq]\n1 1 1 1\n1 2 2 1\n[rhs_eq]\n1 1\n";

    #[test]
    fn absent_pattern_is_free() {
        let d = parse(SMALL).unwrap();
        assert!(d.pattern.is_all_free());
        assert_eq!(d.eq.rows()[0].entries(), &[(0, 0, 1.0), (1, 1, 1.0)]);
        assert_eq!(d.sense, Sense::Minimize);
    }

    #[test]
    fn unknown_kind_names_token_and_line() {
        let text = format!("{SMALL}[pattern]\n1 2 POS\n");
        match parse(&text) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 12);
                assert!(message.contains("POS"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn section_errors() {
        let dup = format!("{SMALL}[cost]\n");
        assert!(matches!(parse(&dup), Err(Error::Parse { line: 11, .. })));
        let missing = "[meta]\nn = 2\nm_E = 0\n";
        let e = parse(missing).unwrap_err();
        assert!(e.to_string().contains("[cost]"), "{e}");
        let no_eq = "[meta]\nn = 2\nm_E = 1\n[cost]\n";
        assert!(parse(no_eq).unwrap_err().to_string().contains("[eq]"));
        assert!(parse("[bogus]\n").is_err());
        assert!(parse("n = 2\n").is_err());
    }

    #[test]
    fn pattern_and_shift_parse() {
        let text =
            format!("{SMALL}[pattern]\ndefault NONNEG\n1 2 FREE\n2 2 ZERO\n[shift]\n1 1 -1\n");
        let d = parse(&text).unwrap();
        assert_eq!(d.pattern.kind(0, 0), EntryKind::NonNeg);
        assert_eq!(d.pattern.kind(1, 0), EntryKind::Free);
        assert_eq!(d.pattern.kind(1, 1), EntryKind::Zero);
        assert_eq!(d.pattern.shift().unwrap().get(0, 0), -1.0);
    }

    #[test]
    fn format_then_parse_is_identity() {
        let mut d = parse(SMALL).unwrap();
        d.name = "demo".into();
        d.sense = Sense::Maximize;
        d.offset = 0.1;
        d.pattern = PolyhedralPattern::nonneg(2)
            .with_shift(SymMat::from_diagonal(&[0.3, 0.0]))
            .unwrap();
        d.pattern.set(0, 1, EntryKind::Free);
        d.ineq =
            ConstraintMap::new(2, vec![SparseSym::new(2, [(0, 1, 1.0 / 3.0)]).unwrap()]).unwrap();
        d.b_ineq = DVector::from_element(1, -0.7);
        assert_eq!(parse(&format_native(&d)).unwrap(), d);
    }
}
