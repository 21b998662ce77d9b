//! Line-oriented text format for parametrized cone programs.
//!
//! ```text
//! conerepair 1
//! dims <n> <m> <k>
//! cone <zero|nonneg|soc> <dim>        (repeated)
//! A <nnz>
//! <row> <col> <value>                 (nnz lines)
//! b <m values>
//! c <n values>
//! param <i>                           (i = 0..k, in order)
//! A <nnz> / triplet lines
//! b <nnz> / <index> <value> lines
//! c <nnz> / <index> <value> lines
//! theta0 <k values>
//! regularizer
//! <tree>
//! end
//! ```
//!
//! A regularizer tree is `sum <count>` followed by its children, or one of
//! the atoms `l1` and `l2sq` (followed by `weights ...` and `center ...`
//! lines) and `box` (followed by `lower ...` and `upper ...`). Blank lines
//! and lines starting with `#` are ignored. Numbers are written with the
//! shortest representation that parses back to the same `f64`, so a
//! serialize/parse cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use conerepair::{
    ConeBlock, ConeDescriptor, ConeKind, ConeProgram, ParamConeProgram, ParamIncrement, Regularizer, SparseMatrix,
};

use crate::error::CliError;

const MAGIC: &str = "conerepair";
const VERSION: &str = "1";

/// A parametrized program together with its starting parameter and metric.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub pcp: ParamConeProgram,
    pub theta0: Vec<f64>,
    pub regularizer: Regularizer,
}

#[derive(Debug, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

pub fn read_problem(path: &Path) -> Result<(Problem, Vec<u8>), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| CliError::Input(format!("{}: not UTF-8", path.display())))?;
    let problem = parse(text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((problem, bytes))
}

pub fn write_problem(path: &Path, problem: &Problem) -> Result<(), CliError> {
    std::fs::write(path, serialize(problem)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn serialize(p: &Problem) -> String {
    let base = p.pcp.base();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "dims {} {} {}", p.pcp.n(), p.pcp.m(), p.pcp.k());
    for b in base.cones.blocks() {
        let _ = writeln!(out, "cone {} {}", b.kind, b.dim);
    }
    write_triplets(&mut out, &base.a);
    let _ = writeln!(out, "b{}", join(&base.b));
    let _ = writeln!(out, "c{}", join(&base.c));
    for (i, inc) in p.pcp.params().iter().enumerate() {
        let _ = writeln!(out, "param {i}");
        write_triplets(&mut out, &inc.a);
        write_sparse_vec(&mut out, "b", &inc.b);
        write_sparse_vec(&mut out, "c", &inc.c);
    }
    let _ = writeln!(out, "theta0{}", join(&p.theta0));
    out.push_str("regularizer\n");
    write_regularizer(&mut out, &p.regularizer);
    out.push_str("end\n");
    out
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!(" {x}")).collect()
}

fn write_triplets(out: &mut String, a: &SparseMatrix) {
    let _ = writeln!(out, "A {}", a.nnz());
    for (r, c, v) in a.triplets() {
        let _ = writeln!(out, "{r} {c} {v}");
    }
}

fn write_sparse_vec(out: &mut String, key: &str, v: &[f64]) {
    // keep −0.0 so the round trip is bit-exact
    let nz: Vec<(usize, f64)> = v.iter().copied().enumerate().filter(|(_, x)| x.to_bits() != 0).collect();
    let _ = writeln!(out, "{key} {}", nz.len());
    for (i, x) in nz {
        let _ = writeln!(out, "{i} {x}");
    }
}

fn write_regularizer(out: &mut String, r: &Regularizer) {
    match r {
        Regularizer::ScaledL1 { weights, center } | Regularizer::ScaledL2Sq { weights, center } => {
            let name = if matches!(r, Regularizer::ScaledL1 { .. }) { "l1" } else { "l2sq" };
            let _ = writeln!(out, "{name}");
            let _ = writeln!(out, "weights{}", join(weights));
            let _ = writeln!(out, "center{}", join(center));
        }
        Regularizer::Box { lower, upper } => {
            out.push_str("box\n");
            let _ = writeln!(out, "lower{}", join(lower));
            let _ = writeln!(out, "upper{}", join(upper));
        }
        Regularizer::Sum(children) => {
            let _ = writeln!(out, "sum {}", children.len());
            for ch in children {
                write_regularizer(out, ch);
            }
        }
    }
}

struct Lines<'a> {
    lines: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .filter_map(|(i, l)| {
                let t = l.trim();
                if t.is_empty() || t.starts_with('#') {
                    None
                } else {
                    Some((i + 1, t.split_whitespace().collect()))
                }
            })
            .collect();
        Lines { lines, pos: 0 }
    }

    fn last_line(&self) -> usize {
        self.lines.last().map_or(1, |l| l.0)
    }

    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), ParseError> {
        match self.lines.get(self.pos) {
            Some(l) => {
                self.pos += 1;
                Ok(l.clone())
            }
            None => Err(ParseError {
                line: self.last_line(),
                message: format!("unexpected end of file, expected {what}"),
            }),
        }
    }

    /// Next line, which must start with `key`; returns its line number and
    /// the remaining tokens.
    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>), ParseError> {
        let (line, toks) = self.next(&format!("'{key}'"))?;
        if toks[0] != key {
            return Err(err(line, format!("expected '{key}', found unknown key '{}'", toks[0])));
        }
        Ok((line, toks[1..].to_vec()))
    }

    fn peek_key(&self) -> Option<&'a str> {
        self.lines.get(self.pos).map(|l| l.1[0])
    }
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

fn parse_usize(line: usize, tok: &str, what: &str) -> Result<usize, ParseError> {
    tok.parse().map_err(|_| err(line, format!("{what}: '{tok}' is not a nonnegative integer")))
}

fn parse_f64(line: usize, tok: &str) -> Result<f64, ParseError> {
    let v: f64 = tok.parse().map_err(|_| err(line, format!("'{tok}' is not a number")))?;
    if v.is_nan() {
        return Err(err(line, "NaN is not allowed"));
    }
    Ok(v)
}

fn expect_count(line: usize, toks: &[&str], count: usize, what: &str) -> Result<(), ParseError> {
    if toks.len() != count {
        return Err(err(line, format!("{what} needs {count} value(s), found {}", toks.len())));
    }
    Ok(())
}

fn finite_vec(line: usize, toks: &[&str], len: usize, what: &str) -> Result<Vec<f64>, ParseError> {
    expect_count(line, toks, len, what)?;
    let v = toks.iter().map(|t| parse_f64(line, t)).collect::<Result<Vec<_>, _>>()?;
    if v.iter().any(|x| x.is_infinite()) {
        return Err(err(line, format!("{what} must be finite")));
    }
    Ok(v)
}

fn extended_vec(line: usize, toks: &[&str], len: usize, what: &str) -> Result<Vec<f64>, ParseError> {
    expect_count(line, toks, len, what)?;
    toks.iter().map(|t| parse_f64(line, t)).collect()
}

fn parse_triplets(lines: &mut Lines, m: usize, n: usize) -> Result<SparseMatrix, ParseError> {
    let (line, toks) = lines.keyed("A")?;
    expect_count(line, &toks, 1, "A")?;
    let nnz = parse_usize(line, toks[0], "A")?;
    let mut trip = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let (l, t) = lines.next("a matrix entry")?;
        expect_count(l, &t, 3, "matrix entry")?;
        let r = parse_usize(l, t[0], "row")?;
        let c = parse_usize(l, t[1], "column")?;
        if r >= m || c >= n {
            return Err(err(l, format!("entry ({r}, {c}) outside a {m}x{n} matrix")));
        }
        let v = parse_f64(l, t[2])?;
        if v.is_infinite() {
            return Err(err(l, "matrix entries must be finite"));
        }
        trip.push((r, c, v));
    }
    SparseMatrix::from_triplets(m, n, trip).map_err(|e| err(line, e.to_string()))
}

fn parse_sparse_vec(lines: &mut Lines, key: &str, len: usize) -> Result<Vec<f64>, ParseError> {
    let (line, toks) = lines.keyed(key)?;
    expect_count(line, &toks, 1, key)?;
    let nnz = parse_usize(line, toks[0], key)?;
    let mut v = vec![0.0; len];
    for _ in 0..nnz {
        let (l, t) = lines.next("a vector entry")?;
        expect_count(l, &t, 2, "vector entry")?;
        let i = parse_usize(l, t[0], "index")?;
        if i >= len {
            return Err(err(l, format!("index {i} outside a vector of length {len}")));
        }
        let x = parse_f64(l, t[1])?;
        if x.is_infinite() {
            return Err(err(l, "vector entries must be finite"));
        }
        v[i] = x;
    }
    Ok(v)
}

fn parse_regularizer(lines: &mut Lines, k: usize, depth: usize) -> Result<Regularizer, ParseError> {
    if depth > 64 {
        return Err(err(lines.last_line(), "regularizer nesting is too deep"));
    }
    let (line, toks) = lines.next("a regularizer node")?;
    let node = match toks[0] {
        "sum" => {
            expect_count(line, &toks[1..], 1, "sum")?;
            let count = parse_usize(line, toks[1], "sum")?;
            let children = (0..count)
                .map(|_| parse_regularizer(lines, k, depth + 1))
                .collect::<Result<Vec<_>, _>>()?;
            Regularizer::sum(children)
        }
        kind @ ("l1" | "l2sq") => {
            expect_count(line, &toks[1..], 0, kind)?;
            let (lw, w) = lines.keyed("weights")?;
            let weights = finite_vec(lw, &w, k, "weights")?;
            let (lc, c) = lines.keyed("center")?;
            let center = finite_vec(lc, &c, k, "center")?;
            let built = if kind == "l1" {
                Regularizer::l1(weights, center)
            } else {
                Regularizer::l2_squared(weights, center)
            };
            built.map_err(|e| err(line, e.to_string()))?
        }
        "box" => {
            expect_count(line, &toks[1..], 0, "box")?;
            let (ll, lo) = lines.keyed("lower")?;
            let lower = extended_vec(ll, &lo, k, "lower")?;
            let (lu, up) = lines.keyed("upper")?;
            let upper = extended_vec(lu, &up, k, "upper")?;
            Regularizer::bounds(lower, upper).map_err(|e| err(line, e.to_string()))?
        }
        other => return Err(err(line, format!("unknown regularizer node '{other}'"))),
    };
    Ok(node)
}

pub fn parse(text: &str) -> Result<Problem, ParseError> {
    let mut lines = Lines::new(text);
    let (line, toks) = lines.next("header")?;
    if toks.len() != 2 || toks[0] != MAGIC {
        return Err(err(line, format!("expected header '{MAGIC} {VERSION}'")));
    }
    if toks[1] != VERSION {
        return Err(err(line, format!("unsupported format version '{}'", toks[1])));
    }

    let (dl, d) = lines.keyed("dims")?;
    expect_count(dl, &d, 3, "dims")?;
    let n = parse_usize(dl, d[0], "n")?;
    let m = parse_usize(dl, d[1], "m")?;
    let k = parse_usize(dl, d[2], "k")?;

    let mut blocks = Vec::new();
    while lines.peek_key() == Some("cone") {
        let (l, t) = lines.keyed("cone")?;
        expect_count(l, &t, 2, "cone")?;
        let kind: ConeKind = t[0].parse().map_err(|_| err(l, format!("unknown cone kind '{}'", t[0])))?;
        let dim = parse_usize(l, t[1], "cone dimension")?;
        blocks.push(ConeBlock::new(kind, dim).map_err(|e| err(l, e.to_string()))?);
    }
    let cones = ConeDescriptor::new(blocks).map_err(|e| err(dl, e.to_string()))?;
    if cones.dim() != m {
        return Err(err(dl, format!("cones cover {} rows but m = {m}", cones.dim())));
    }

    let a = parse_triplets(&mut lines, m, n)?;
    let (bl, bt) = lines.keyed("b")?;
    let b = finite_vec(bl, &bt, m, "b")?;
    let (cl, ct) = lines.keyed("c")?;
    let c = finite_vec(cl, &ct, n, "c")?;
    let base = ConeProgram::new(a, b, c, cones).map_err(|e| err(cl, e.to_string()))?;

    let mut params = Vec::with_capacity(k);
    for i in 0..k {
        let (pl, pt) = lines.keyed("param")?;
        expect_count(pl, &pt, 1, "param")?;
        if parse_usize(pl, pt[0], "param index")? != i {
            return Err(err(pl, format!("expected param {i}")));
        }
        let a = parse_triplets(&mut lines, m, n)?;
        let b = parse_sparse_vec(&mut lines, "b", m)?;
        let c = parse_sparse_vec(&mut lines, "c", n)?;
        params.push(ParamIncrement { a, b, c });
    }
    let pcp = ParamConeProgram::new(base, params).map_err(|e| err(dl, e.to_string()))?;

    let (tl, tt) = lines.keyed("theta0")?;
    let theta0 = finite_vec(tl, &tt, k, "theta0")?;
    let (rl, rt) = lines.keyed("regularizer")?;
    expect_count(rl, &rt, 0, "regularizer")?;
    let regularizer = parse_regularizer(&mut lines, k, 0)?;
    let (el, et) = lines.keyed("end")?;
    expect_count(el, &et, 0, "end")?;
    if let Some(&(l, ref t)) = lines.lines.get(lines.pos) {
        return Err(err(l, format!("unexpected content after 'end': '{}'", t[0])));
    }
    Ok(Problem { pcp, theta0, regularizer })
}
