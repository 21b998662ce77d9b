//! The primal-dual embedding and its optimal value `t*`.
//!
//! For data `(A, b, c, K)` the embedding is
//!
//! ```text
//! minimize    t
//! subject to  ‖(Ax + s − b, Aᵀy + c, cᵀx + bᵀy)‖₂ ≤ t,   s ∈ K,   y ∈ K*
//! ```
//!
//! over `(t, x, y, s)`. It is always feasible, its value is nonnegative, and
//! the value is zero exactly when the original program has a primal-dual
//! solution. Since the feasible set does not depend on the data, the
//! envelope theorem gives the gradient of `t*` with respect to the data from
//! the normalized residual at any minimizer.

use serde::{Deserialize, Serialize};

use crate::cones::{ConeDescriptor, ConeKind};
use crate::error::{Error, Result};
use crate::program::{ConeProgram, ParamConeProgram};
use crate::solver::{ConeSolver, Solution, SolveStatus, SolverSettings};
use crate::sparse::{dot, norm2, SparseMatrix};

/// Below this value of `t*` the residual direction is numerically
/// meaningless and no gradient is produced.
pub const GRAD_ZERO_THRESHOLD: f64 = 1e-9;

/// Standard-form data of the embedding plus where each block of variables
/// lives.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub program: ConeProgram,
    /// Original dimensions `(m, n)`.
    pub m: usize,
    pub n: usize,
}

impl Embedding {
    pub fn t_index(&self) -> usize {
        0
    }

    pub fn x_range(&self) -> std::ops::Range<usize> {
        1..1 + self.n
    }

    pub fn y_range(&self) -> std::ops::Range<usize> {
        1 + self.n..1 + self.n + self.m
    }

    pub fn s_range(&self) -> std::ops::Range<usize> {
        1 + self.n + self.m..1 + self.n + 2 * self.m
    }

    /// The lifted residual `r = N(x, y, s)`.
    pub fn r_range(&self) -> std::ops::Range<usize> {
        1 + self.n + 2 * self.m..2 + 2 * self.n + 3 * self.m
    }

    /// Dimension of the norm-constraint cone, `m + n + 2`.
    pub fn soc_dim(&self) -> usize {
        self.m + self.n + 2
    }
}

/// Builds the embedding of `prog` in standard form over
/// `z = (t, x, y, s, r)`.
///
/// The residual is lifted into free variables `r = N(x, y, s)`, so the
/// norm constraint is the second-order cone block `(t, r)` of dimension
/// `m + n + 2` with identity coefficients, and each residual component is a
/// separate zero-cone row that row equilibration can scale on its own.
/// Rows, in order: the norm cone, the zero-cone rows defining `r`, the
/// blocks of `K` for `s`, and the blocks of `K*` for `y` (zero-cone blocks
/// have a free dual and contribute no rows). The gap row keeps every entry
/// of `b` and `c`, zeros included, so the pattern depends only on the
/// pattern of `A`.
pub fn build_embedding(prog: &ConeProgram) -> Result<Embedding> {
    prog.validate()?;
    let (m, n) = (prog.m(), prog.n());
    let nr = m + n + 1;
    let nz = 1 + n + 2 * m + nr;
    let (xo, yo, so, ro) = (1, 1 + n, 1 + n + m, 1 + n + 2 * m);

    let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(3 * prog.a.nnz() + 4 * m + 3 * n + 2);
    let mut b_e = Vec::with_capacity(2 * nr + 1 + 2 * m);
    let mut cones = ConeDescriptor::empty();

    // (t, r) in the second-order cone
    trip.push((0, 0, -1.0));
    for k in 0..nr {
        trip.push((1 + k, ro + k, -1.0));
    }
    b_e.resize(nr + 1, 0.0);
    cones.push(ConeKind::SecondOrder, nr + 1);

    // r₁ − Ax − s = −b
    let r1 = nr + 1;
    for (i, j, v) in prog.a.triplets() {
        trip.push((r1 + i, xo + j, -v));
    }
    for i in 0..m {
        trip.push((r1 + i, so + i, -1.0));
        trip.push((r1 + i, ro + i, 1.0));
        b_e.push(-prog.b[i]);
    }
    // r₂ − Aᵀy = c
    let r2 = r1 + m;
    for (i, j, v) in prog.a.triplets() {
        trip.push((r2 + j, yo + i, -v));
    }
    for j in 0..n {
        trip.push((r2 + j, ro + m + j, 1.0));
        b_e.push(prog.c[j]);
    }
    // r₃ − cᵀx − bᵀy = 0
    let r3 = r2 + n;
    for j in 0..n {
        trip.push((r3, xo + j, -prog.c[j]));
    }
    for i in 0..m {
        trip.push((r3, yo + i, -prog.b[i]));
    }
    trip.push((r3, ro + m + n, 1.0));
    b_e.push(0.0);
    cones.push(ConeKind::Zero, nr);

    // s ∈ K
    let mut row = 2 * nr + 1;
    for (blk, range) in prog.cones.ranges() {
        for i in range {
            trip.push((row, so + i, -1.0));
            b_e.push(0.0);
            row += 1;
        }
        cones.push(blk.kind, blk.dim);
    }

    // y ∈ K*
    for (blk, range) in prog.cones.ranges() {
        if blk.kind == ConeKind::Zero {
            continue;
        }
        for i in range {
            trip.push((row, yo + i, -1.0));
            b_e.push(0.0);
            row += 1;
        }
        cones.push(blk.kind, blk.dim);
    }

    let a_e = SparseMatrix::from_triplets(row, nz, trip)?;
    let mut c_e = vec![0.0; nz];
    c_e[0] = 1.0;
    Ok(Embedding {
        program: ConeProgram::new(a_e, b_e, c_e, cones)?,
        m,
        n,
    })
}

/// Optimal point of the embedding at some θ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbeddingWitness {
    /// `‖N‖₂` at the returned point; an upper bound on the true value that
    /// matches it to solver tolerance.
    pub tstar: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    /// `N = (Ax + s − b, Aᵀy + c, cᵀx + bᵀy)`.
    pub residual: Vec<f64>,
    pub solver_status: SolveStatus,
    pub iterations: usize,
    /// Raw embedding solution, used to warm-start the next solve.
    pub(crate) raw: Option<Solution>,
}

impl EmbeddingWitness {
    /// The always-feasible point `(x, y, s) = 0`, `t = ‖(b, c)‖₂`.
    fn trivial(prog: &ConeProgram) -> Self {
        let (m, n) = (prog.m(), prog.n());
        let (x, y, s) = (vec![0.0; n], vec![0.0; m], vec![0.0; m]);
        let residual = kkt_residual(prog, &x, &y, &s);
        EmbeddingWitness {
            tstar: norm2(&residual),
            x,
            y,
            s,
            residual,
            solver_status: SolveStatus::MaxIters,
            iterations: 0,
            raw: None,
        }
    }
}

/// `N(x, y, s) = (Ax + s − b, Aᵀy + c, cᵀx + bᵀy)`.
pub fn kkt_residual(prog: &ConeProgram, x: &[f64], y: &[f64], s: &[f64]) -> Vec<f64> {
    let (m, n) = (prog.m(), prog.n());
    let mut out = Vec::with_capacity(m + n + 1);
    let ax = prog.a.mul_vec(x);
    out.extend((0..m).map(|i| ax[i] + s[i] - prog.b[i]));
    let aty = prog.a.mul_t_vec(y);
    out.extend((0..n).map(|j| aty[j] + prog.c[j]));
    out.push(dot(&prog.c, x) + dot(&prog.b, y));
    out
}

/// Solves the embedding of already-materialized data.
pub fn solve_embedding<S: ConeSolver + ?Sized>(
    solver: &S,
    prog: &ConeProgram,
    settings: &SolverSettings,
    warm: Option<&EmbeddingWitness>,
) -> Result<EmbeddingWitness> {
    let emb = build_embedding(prog)?;
    let warm_raw = warm
        .and_then(|w| w.raw.as_ref())
        .filter(|raw| raw.x.len() == emb.program.n() && raw.y.len() == emb.program.m());
    let sol = solver
        .solve(&emb.program, settings, warm_raw)
        .map_err(|e| e.context("solving the primal-dual embedding"))?;

    let trivial = EmbeddingWitness::trivial(prog);
    if matches!(sol.status, SolveStatus::InfeasibleCert | SolveStatus::UnboundedCert) {
        // Cannot happen for exact arithmetic; keep the feasible fallback.
        return Ok(EmbeddingWitness {
            solver_status: sol.status,
            iterations: sol.iterations,
            ..trivial
        });
    }

    let x = sol.x[emb.x_range()].to_vec();
    let mut y = sol.x[emb.y_range()].to_vec();
    let mut s = sol.x[emb.s_range()].to_vec();
    prog.cones.project_dual_in_place(&mut y);
    prog.cones.project_in_place(&mut s);
    let residual = kkt_residual(prog, &x, &y, &s);
    let tstar = norm2(&residual);
    if !tstar.is_finite() {
        return Err(Error::Numerical("embedding solution is not finite".into()));
    }
    let witness = EmbeddingWitness {
        tstar,
        x,
        y,
        s,
        residual,
        solver_status: sol.status,
        iterations: sol.iterations,
        raw: Some(sol),
    };
    if witness.tstar <= trivial.tstar {
        Ok(witness)
    } else {
        Ok(EmbeddingWitness {
            solver_status: witness.solver_status,
            iterations: witness.iterations,
            raw: witness.raw,
            ..trivial
        })
    }
}

/// Evaluates `t*(θ)` and returns the minimizing point.
pub fn eval_tstar<S: ConeSolver + ?Sized>(
    solver: &S,
    pcp: &ParamConeProgram,
    theta: &[f64],
    settings: &SolverSettings,
    warm: Option<&EmbeddingWitness>,
) -> Result<EmbeddingWitness> {
    let prog = pcp.materialize(theta)?;
    solve_embedding(solver, &prog, settings, warm)
}

/// Gradients of `t*` with respect to the data `(A, b, c)`, from the
/// normalized residual `u = N/‖N‖ = (u₁, u₂, u₃)`:
/// `G_A = u₁xᵀ + y u₂ᵀ`, `g_b = −u₁ + u₃y`, `g_c = u₂ + u₃x`.
#[derive(Clone, Debug)]
pub struct DataGradient {
    u1: Vec<f64>,
    u2: Vec<f64>,
    u3: f64,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl DataGradient {
    pub fn from_witness(witness: &EmbeddingWitness) -> Result<Self> {
        if !(witness.tstar > GRAD_ZERO_THRESHOLD) {
            return Err(Error::DegenerateGradient {
                tstar: witness.tstar,
                threshold: GRAD_ZERO_THRESHOLD,
            });
        }
        let (m, n) = (witness.y.len(), witness.x.len());
        let nrm = norm2(&witness.residual);
        let u: Vec<f64> = witness.residual.iter().map(|v| v / nrm).collect();
        Ok(DataGradient {
            u1: u[..m].to_vec(),
            u2: u[m..m + n].to_vec(),
            u3: u[m + n],
            x: witness.x.clone(),
            y: witness.y.clone(),
        })
    }

    /// `(G_A)_{ij}`
    pub fn a_entry(&self, i: usize, j: usize) -> f64 {
        self.u1[i] * self.x[j] + self.y[i] * self.u2[j]
    }

    pub fn b(&self) -> Vec<f64> {
        self.u1.iter().zip(&self.y).map(|(u, y)| -u + self.u3 * y).collect()
    }

    pub fn c(&self) -> Vec<f64> {
        self.u2.iter().zip(&self.x).map(|(u, x)| u + self.u3 * x).collect()
    }

    /// Chain rule through the affine parameter map.
    pub fn to_params(&self, pcp: &ParamConeProgram) -> Vec<f64> {
        let gb = self.b();
        let gc = self.c();
        pcp.params()
            .iter()
            .map(|p| {
                let da: f64 = p.a.triplets().map(|(i, j, v)| v * self.a_entry(i, j)).sum();
                da + dot(&gb, &p.b) + dot(&gc, &p.c)
            })
            .collect()
    }
}

/// `∇t*(θ)` by the envelope theorem. Fails with
/// [`Error::DegenerateGradient`] when `t*` is at or below
/// [`GRAD_ZERO_THRESHOLD`]; the caller should treat θ as solvable.
pub fn grad_tstar(pcp: &ParamConeProgram, theta: &[f64], witness: &EmbeddingWitness) -> Result<Vec<f64>> {
    if theta.len() != pcp.k() {
        return Err(Error::invalid(format!(
            "theta has length {}, expected {}",
            theta.len(),
            pcp.k()
        )));
    }
    if witness.x.len() != pcp.n() || witness.y.len() != pcp.m() {
        return Err(Error::invalid("witness dimensions do not match the program"));
    }
    Ok(DataGradient::from_witness(witness)?.to_params(pcp))
}
