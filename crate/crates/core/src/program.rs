//! Cone programs and their affine parametrization.
//!
//! A [`ConeProgram`] holds the data of
//!
//! ```text
//! minimize cᵀx  subject to  Ax + s = b,  s ∈ K
//! ```
//!
//! and its dual `maximize −bᵀy subject to Aᵀy + c = 0, y ∈ K*`. A
//! [`ParamConeProgram`] maps a parameter vector θ to such data through
//! `A(θ) = A₀ + Σ θᵢ Aᵢ` and likewise for `b` and `c`.

use serde::{Deserialize, Serialize};

use crate::cones::ConeDescriptor;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeProgram {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub cones: ConeDescriptor,
}

impl ConeProgram {
    pub fn new(a: SparseMatrix, b: Vec<f64>, c: Vec<f64>, cones: ConeDescriptor) -> Result<Self> {
        let p = ConeProgram { a, b, c, cones };
        p.validate()?;
        Ok(p)
    }

    /// Number of primal variables.
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Number of constraint rows (slack dimension).
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.a.nrows(), self.a.ncols());
        if self.b.len() != m {
            return Err(Error::invalid(format!("b has length {}, expected {m}", self.b.len())));
        }
        if self.c.len() != n {
            return Err(Error::invalid(format!("c has length {}, expected {n}", self.c.len())));
        }
        if self.cones.dim() != m {
            return Err(Error::invalid(format!(
                "cones cover {} rows, but A has {m}",
                self.cones.dim()
            )));
        }
        if self.b.iter().chain(&self.c).any(|v| !v.is_finite()) {
            return Err(Error::invalid("b and c must be finite"));
        }
        Ok(())
    }
}

/// Increments contributed by one parameter coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamIncrement {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ParamIncrement {
    pub fn zeros(m: usize, n: usize) -> Self {
        ParamIncrement {
            a: SparseMatrix::zeros(m, n),
            b: vec![0.0; m],
            c: vec![0.0; n],
        }
    }
}

#[derive(Clone, Debug)]
pub struct ParamConeProgram {
    base: ConeProgram,
    params: Vec<ParamIncrement>,
    /// Union of the sparsity patterns of A₀ and every Aᵢ, with zero values.
    union: UnionPattern,
}

impl PartialEq for ParamConeProgram {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.params == other.params
    }
}

#[derive(Clone, Debug)]
struct UnionPattern {
    pattern: SparseMatrix,
    base_pos: Vec<usize>,
    param_pos: Vec<Vec<usize>>,
}

impl ParamConeProgram {
    pub fn new(base: ConeProgram, params: Vec<ParamIncrement>) -> Result<Self> {
        base.validate()?;
        let (m, n) = (base.m(), base.n());
        for (i, p) in params.iter().enumerate() {
            if p.a.nrows() != m || p.a.ncols() != n || p.b.len() != m || p.c.len() != n {
                return Err(Error::invalid(format!(
                    "increment {i} is not {m}x{n}-consistent with the base data"
                )));
            }
            if p.b.iter().chain(&p.c).any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("increment {i} has non-finite entries")));
            }
        }
        let union = UnionPattern::build(&base.a, &params);
        Ok(ParamConeProgram {
            base,
            params,
            union,
        })
    }

    pub fn base(&self) -> &ConeProgram {
        &self.base
    }

    pub fn params(&self) -> &[ParamIncrement] {
        &self.params
    }

    /// Parameter dimension k.
    pub fn k(&self) -> usize {
        self.params.len()
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn m(&self) -> usize {
        self.base.m()
    }

    pub fn cones(&self) -> &ConeDescriptor {
        &self.base.cones
    }

    /// True when no parameter touches A.
    pub fn has_constant_a(&self) -> bool {
        self.params.iter().all(|p| p.a.values().iter().all(|&v| v == 0.0))
    }

    /// Evaluates the affine map at θ. The returned A always carries the
    /// union sparsity pattern, so its structure does not depend on θ.
    pub fn materialize(&self, theta: &[f64]) -> Result<ConeProgram> {
        if theta.len() != self.k() {
            return Err(Error::invalid(format!(
                "theta has length {}, expected {}",
                theta.len(),
                self.k()
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("theta must be finite"));
        }
        let union = &self.union;
        let mut a = union.pattern.clone();
        {
            let vals = a.values_mut();
            for (&pos, &v) in union.base_pos.iter().zip(self.base.a.values()) {
                vals[pos] += v;
            }
            for ((p, positions), &t) in self.params.iter().zip(&union.param_pos).zip(theta) {
                if t == 0.0 {
                    continue;
                }
                for (&pos, &v) in positions.iter().zip(p.a.values()) {
                    vals[pos] += t * v;
                }
            }
        }
        let mut b = self.base.b.clone();
        let mut c = self.base.c.clone();
        for (p, &t) in self.params.iter().zip(theta) {
            if t == 0.0 {
                continue;
            }
            b.iter_mut().zip(&p.b).for_each(|(bi, v)| *bi += t * v);
            c.iter_mut().zip(&p.c).for_each(|(ci, v)| *ci += t * v);
        }
        Ok(ConeProgram {
            a,
            b,
            c,
            cones: self.base.cones.clone(),
        })
    }
}

impl UnionPattern {
    fn build(base: &SparseMatrix, params: &[ParamIncrement]) -> Self {
        let (m, n) = (base.nrows(), base.ncols());
        let all = base
            .triplets()
            .chain(params.iter().flat_map(|p| p.a.triplets()))
            .map(|(r, c, _)| (r, c, 0.0));
        let pattern = SparseMatrix::from_triplets(m, n, all).expect("validated dimensions");
        let locate = |mat: &SparseMatrix| -> Vec<usize> {
            mat.triplets()
                .map(|(r, c, _)| {
                    let start = pattern.col_ptr()[c];
                    let end = pattern.col_ptr()[c + 1];
                    start + pattern.row_idx()[start..end].binary_search(&r).expect("entry in union")
                })
                .collect()
        };
        let base_pos = locate(base);
        let param_pos = params.iter().map(|p| locate(&p.a)).collect();
        UnionPattern {
            pattern,
            base_pos,
            param_pos,
        }
    }
}

/// Free-function form of [`ParamConeProgram::materialize`].
pub fn materialize(pcp: &ParamConeProgram, theta: &[f64]) -> Result<ConeProgram> {
    pcp.materialize(theta)
}
