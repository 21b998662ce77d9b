//! Cone program solving behind a backend interface.
//!
//! Everything above this module talks to a [`ConeSolver`]; the bundled
//! [`AdmmSolver`] is a first-order operator-splitting method on the
//! homogeneous self-dual embedding, and any other conforming backend can be
//! dropped in.

mod admm;
pub mod ldl;
mod scaling;

use serde::{Deserialize, Serialize};

pub use admm::AdmmSolver;

use crate::error::{Error, Result};
use crate::program::ConeProgram;
use crate::sparse::{dot, norm2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Tolerance on normalized infeasibility and unboundedness certificates.
    pub eps_infeas: f64,
    pub max_iters: usize,
    pub scaling_enabled: bool,
    /// Over-relaxation parameter in (0, 2).
    pub relaxation: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            eps_abs: 1e-8,
            eps_rel: 1e-8,
            eps_infeas: 1e-8,
            max_iters: 100_000,
            scaling_enabled: true,
            relaxation: 1.5,
        }
    }
}

impl SolverSettings {
    pub fn with_tolerance(tol: f64) -> Self {
        SolverSettings {
            eps_abs: tol,
            eps_rel: tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_abs > 0.0 && self.eps_rel > 0.0 && self.eps_infeas > 0.0) {
            return Err(Error::invalid("solver tolerances must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(Error::invalid("relaxation must lie in (0, 2)"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Solved,
    /// Stopped at the iteration limit with residuals within 100× tolerance.
    Inaccurate,
    MaxIters,
    /// `y` holds a certificate: `Aᵀy = 0`, `y ∈ K*`, `bᵀy = −1`.
    InfeasibleCert,
    /// `(x, s)` hold a certificate: `Ax + s = 0`, `s ∈ K`, `cᵀx = −1`.
    UnboundedCert,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Solved => "SOLVED",
            SolveStatus::Inaccurate => "INACCURATE",
            SolveStatus::MaxIters => "MAX_ITERS",
            SolveStatus::InfeasibleCert => "INFEASIBLE_CERT",
            SolveStatus::UnboundedCert => "UNBOUNDED_CERT",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub status: SolveStatus,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
}

impl Solution {
    pub fn objective(&self, prog: &ConeProgram) -> f64 {
        dot(&prog.c, &self.x)
    }
}

/// Residual norms of the optimality conditions, unnormalized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residuals {
    /// `‖Ax + s − b‖₂`
    pub primal: f64,
    /// `‖Aᵀy + c‖₂`
    pub dual: f64,
    /// `|cᵀx + bᵀy|`
    pub gap: f64,
}

/// Evaluates the three residuals of the optimality conditions at a
/// candidate `(x, y, s)`.
pub fn residuals(prog: &ConeProgram, x: &[f64], y: &[f64], s: &[f64]) -> Result<Residuals> {
    let (m, n) = (prog.m(), prog.n());
    if x.len() != n || y.len() != m || s.len() != m {
        return Err(Error::invalid(format!(
            "candidate has lengths (x={}, y={}, s={}), expected ({n}, {m}, {m})",
            x.len(),
            y.len(),
            s.len()
        )));
    }
    let mut pr = prog.a.mul_vec(x);
    for i in 0..m {
        pr[i] += s[i] - prog.b[i];
    }
    let mut dr = prog.a.mul_t_vec(y);
    for j in 0..n {
        dr[j] += prog.c[j];
    }
    Ok(Residuals {
        primal: norm2(&pr),
        dual: norm2(&dr),
        gap: (dot(&prog.c, x) + dot(&prog.b, y)).abs(),
    })
}

/// Residuals of a returned [`Solution`].
pub fn solution_residuals(prog: &ConeProgram, sol: &Solution) -> Result<Residuals> {
    residuals(prog, &sol.x, &sol.y, &sol.s)
}

/// Whether the residuals satisfy the termination test
/// `‖Ax+s−b‖ ≤ ε_abs + ε_rel‖b‖`, `‖Aᵀy+c‖ ≤ ε_abs + ε_rel‖c‖`,
/// `|cᵀx+bᵀy| ≤ ε_abs + ε_rel(|cᵀx| + |bᵀy|)`, scaled by `factor`.
pub(crate) fn within_tolerance(
    prog: &ConeProgram,
    x: &[f64],
    y: &[f64],
    r: &Residuals,
    settings: &SolverSettings,
    factor: f64,
) -> bool {
    let (e_abs, e_rel) = (settings.eps_abs * factor, settings.eps_rel * factor);
    r.primal <= e_abs + e_rel * norm2(&prog.b)
        && r.dual <= e_abs + e_rel * norm2(&prog.c)
        && r.gap <= e_abs + e_rel * (dot(&prog.c, x).abs() + dot(&prog.b, y).abs())
}

/// A conic solver backend.
pub trait ConeSolver: Send + Sync {
    fn solve(&self, prog: &ConeProgram, settings: &SolverSettings, warm: Option<&Solution>) -> Result<Solution>;
}

impl<S: ConeSolver + ?Sized> ConeSolver for &S {
    fn solve(&self, prog: &ConeProgram, settings: &SolverSettings, warm: Option<&Solution>) -> Result<Solution> {
        (**self).solve(prog, settings, warm)
    }
}
