//! Cone descriptions and Euclidean projections.
//!
//! A [`ConeDescriptor`] is an ordered product of blocks. Each block is the
//! zero cone `{0}`, the nonnegative orthant, or a second-order cone
//! `{(t, x) : ‖x‖₂ ≤ t}`. The dual of the zero cone is the whole space; the
//! other two kinds are self-dual.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::norm2;

/// Absolute tolerance used when reporting cone membership.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConeKind {
    Zero,
    Nonneg,
    SecondOrder,
}

impl ConeKind {
    pub fn name(self) -> &'static str {
        match self {
            ConeKind::Zero => "zero",
            ConeKind::Nonneg => "nonneg",
            ConeKind::SecondOrder => "soc",
        }
    }
}

impl fmt::Display for ConeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(ConeKind::Zero),
            "nonneg" => Ok(ConeKind::Nonneg),
            "soc" => Ok(ConeKind::SecondOrder),
            other => Err(Error::invalid(format!("unknown cone kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub dim: usize,
}

impl ConeBlock {
    pub fn new(kind: ConeKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid(format!("{kind} cone block must have positive dimension")));
        }
        Ok(ConeBlock { kind, dim })
    }

    /// Polyhedral blocks need no interior shrinking for strong duality.
    pub fn is_polyhedral(&self) -> bool {
        !matches!(self.kind, ConeKind::SecondOrder)
    }
}

/// A contiguous segment of a vector that belongs to one cone block.
#[derive(Debug)]
pub struct ConeBlockView<'a> {
    pub kind: ConeKind,
    pub segment: &'a [f64],
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeDescriptor {
    blocks: Vec<ConeBlock>,
}

impl ConeDescriptor {
    pub fn new(blocks: Vec<ConeBlock>) -> Result<Self> {
        for b in &blocks {
            if b.dim == 0 {
                return Err(Error::invalid(format!(
                    "{} cone block must have positive dimension",
                    b.kind
                )));
            }
        }
        Ok(ConeDescriptor { blocks })
    }

    pub fn empty() -> Self {
        ConeDescriptor { blocks: Vec::new() }
    }

    /// Appends a block, merging it into the previous one when both are
    /// polyhedral blocks of the same kind.
    pub fn push(&mut self, kind: ConeKind, dim: usize) {
        if dim == 0 {
            return;
        }
        if let Some(last) = self.blocks.last_mut() {
            if last.kind == kind && kind != ConeKind::SecondOrder {
                last.dim += dim;
                return;
            }
        }
        self.blocks.push(ConeBlock { kind, dim });
    }

    pub fn blocks(&self) -> &[ConeBlock] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    /// Blocks paired with the index range they occupy.
    pub fn ranges(&self) -> impl Iterator<Item = (ConeBlock, Range<usize>)> + '_ {
        let mut offset = 0;
        self.blocks.iter().map(move |b| {
            let r = offset..offset + b.dim;
            offset += b.dim;
            (*b, r)
        })
    }

    pub fn views<'a>(&'a self, v: &'a [f64]) -> impl Iterator<Item = ConeBlockView<'a>> + 'a {
        self.ranges().map(move |(b, r)| ConeBlockView {
            kind: b.kind,
            segment: &v[r],
        })
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::invalid(format!(
                "vector length {} does not match cone dimension {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Euclidean projection onto K.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let mut out = v.to_vec();
        self.project_in_place(&mut out);
        Ok(out)
    }

    /// Euclidean projection onto the dual cone K*.
    pub fn project_dual(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let mut out = v.to_vec();
        self.project_dual_in_place(&mut out);
        Ok(out)
    }

    pub(crate) fn project_in_place(&self, v: &mut [f64]) {
        for (b, r) in self.ranges() {
            let seg = &mut v[r];
            match b.kind {
                ConeKind::Zero => seg.fill(0.0),
                ConeKind::Nonneg => project_nonneg(seg),
                ConeKind::SecondOrder => project_soc(seg),
            }
        }
    }

    pub(crate) fn project_dual_in_place(&self, v: &mut [f64]) {
        for (b, r) in self.ranges() {
            let seg = &mut v[r];
            match b.kind {
                ConeKind::Zero => {}
                ConeKind::Nonneg => project_nonneg(seg),
                ConeKind::SecondOrder => project_soc(seg),
            }
        }
    }

    /// Largest violation of membership in K (zero when inside).
    pub fn violation(&self, v: &[f64]) -> f64 {
        self.ranges()
            .map(|(b, r)| {
                let seg = &v[r];
                match b.kind {
                    ConeKind::Zero => seg.iter().fold(0.0f64, |m, x| m.max(x.abs())),
                    ConeKind::Nonneg => seg.iter().fold(0.0f64, |m, x| m.max(-x)),
                    ConeKind::SecondOrder => (norm2(&seg[1..]) - seg[0]).max(0.0),
                }
            })
            .fold(0.0, f64::max)
    }

    /// Largest violation of membership in K*.
    pub fn dual_violation(&self, v: &[f64]) -> f64 {
        self.ranges()
            .map(|(b, r)| {
                let seg = &v[r];
                match b.kind {
                    ConeKind::Zero => 0.0,
                    ConeKind::Nonneg => seg.iter().fold(0.0f64, |m, x| m.max(-x)),
                    ConeKind::SecondOrder => (norm2(&seg[1..]) - seg[0]).max(0.0),
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        v.len() == self.dim() && self.violation(v) <= tol
    }

    pub fn dual_contains(&self, v: &[f64], tol: f64) -> bool {
        v.len() == self.dim() && self.dual_violation(v) <= tol
    }
}

/// Projection onto K; see [`ConeDescriptor::project`].
pub fn project_cone(v: &[f64], cones: &ConeDescriptor) -> Result<Vec<f64>> {
    cones.project(v)
}

/// Projection onto K*; see [`ConeDescriptor::project_dual`].
pub fn project_dual_cone(v: &[f64], cones: &ConeDescriptor) -> Result<Vec<f64>> {
    cones.project_dual(v)
}

fn project_nonneg(seg: &mut [f64]) {
    for x in seg {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

fn project_soc(seg: &mut [f64]) {
    let t = seg[0];
    let nx = norm2(&seg[1..]);
    if nx <= t {
        return;
    }
    if nx <= -t {
        seg.fill(0.0);
        return;
    }
    let a = 0.5 * (t + nx);
    seg[0] = a;
    let ratio = a / nx;
    for x in &mut seg[1..] {
        *x *= ratio;
    }
}
