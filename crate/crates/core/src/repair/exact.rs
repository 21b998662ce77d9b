//! Convex reformulation of the repair problem when only `b` and `c` depend
//! on θ.
//!
//! With `A` fixed, solvability is expressed jointly in `(θ, x, y, s)`:
//!
//! ```text
//! minimize    r(θ)
//! subject to  A x + s = b(θ),  Aᵀ y + c(θ) = 0,  s ∈ K_ε,  y ∈ K*
//! ```
//!
//! `K_ε` leaves polyhedral blocks untouched and shrinks every second-order
//! block to `‖s₁‖₂ ≤ s₀ − ε`, which keeps strict feasibility (and hence
//! strong duality) once ε > 0. The regularizer enters through epigraph
//! variables, so the whole problem is a single cone program.

use serde::{Deserialize, Serialize};

use crate::cones::{ConeDescriptor, ConeKind};
use crate::error::{Error, Result};
use crate::program::{ConeProgram, ParamConeProgram};
use crate::regularizer::Regularizer;
use crate::solver::{ConeSolver, SolveStatus, SolverSettings};
use crate::sparse::SparseMatrix;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactRepair {
    pub theta: Vec<f64>,
    pub r_value: f64,
    pub eps: f64,
    pub solver_status: SolveStatus,
    pub iterations: usize,
}

/// Rows of the joint cone program, accumulated block by block.
struct Builder {
    triplets: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
    cones: ConeDescriptor,
    nvars: usize,
    objective: Vec<(usize, f64)>,
}

impl Builder {
    fn row(&mut self, entries: &[(usize, f64)], rhs: f64) -> usize {
        let r = self.b.len();
        for &(col, v) in entries {
            if v != 0.0 {
                self.triplets.push((r, col, v));
            }
        }
        self.b.push(rhs);
        r
    }

    fn var(&mut self) -> usize {
        self.nvars += 1;
        self.nvars - 1
    }

    fn add_regularizer(&mut self, reg: &Regularizer, theta0: usize) {
        match reg {
            Regularizer::ScaledL1 { weights, center } => {
                for (i, (&w, &c)) in weights.iter().zip(center).enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let u = self.var();
                    let t = theta0 + i;
                    self.objective.push((u, w));
                    // u ≥ θ − c and u ≥ c − θ
                    self.row(&[(t, 1.0), (u, -1.0)], c);
                    self.row(&[(t, -1.0), (u, -1.0)], -c);
                    self.cones.push(ConeKind::Nonneg, 2);
                }
            }
            Regularizer::ScaledL2Sq { weights, center } => {
                for (i, (&w, &c)) in weights.iter().zip(center).enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let v = self.var();
                    let t = theta0 + i;
                    self.objective.push((v, w));
                    // (v + 1, 2(θ − c), v − 1) ∈ SOC  ⇔  v ≥ (θ − c)²
                    self.row(&[(v, -1.0)], 1.0);
                    self.row(&[(t, -2.0)], -2.0 * c);
                    self.row(&[(v, -1.0)], -1.0);
                    self.cones.push(ConeKind::SecondOrder, 3);
                }
            }
            Regularizer::Box { lower, upper } => {
                for (i, (&l, &u)) in lower.iter().zip(upper).enumerate() {
                    let t = theta0 + i;
                    if l.is_finite() {
                        self.row(&[(t, -1.0)], -l);
                        self.cones.push(ConeKind::Nonneg, 1);
                    }
                    if u.is_finite() {
                        self.row(&[(t, 1.0)], u);
                        self.cones.push(ConeKind::Nonneg, 1);
                    }
                }
            }
            Regularizer::Sum(children) => {
                for ch in children {
                    self.add_regularizer(ch, theta0);
                }
            }
        }
    }
}

/// Builds the joint program over `(θ, x, y, epigraph variables)`.
fn build(pcp: &ParamConeProgram, reg: &Regularizer, eps: f64) -> ConeProgram {
    let (k, n, m) = (pcp.k(), pcp.n(), pcp.m());
    let base = pcp.base();
    let (th, xs, ys) = (0, k, k + n);
    let mut bld = Builder {
        triplets: Vec::new(),
        b: Vec::new(),
        cones: ConeDescriptor::empty(),
        nvars: k + n + m,
        objective: Vec::new(),
    };

    // s = b₀ + Σ θᵢ bᵢ − A x ∈ K_ε
    let mut a_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for (r, col, v) in base.a.triplets() {
        a_rows[r].push((xs + col, v));
    }
    for (blk, range) in base.cones.ranges() {
        for r in range.clone() {
            let mut entries = a_rows[r].clone();
            for (i, p) in pcp.params().iter().enumerate() {
                entries.push((th + i, -p.b[r]));
            }
            let shift = if blk.kind == ConeKind::SecondOrder && r == range.start { eps } else { 0.0 };
            bld.row(&entries, base.b[r] - shift);
        }
        bld.cones.push(blk.kind, blk.dim);
    }

    // Aᵀ y + c₀ + Σ θᵢ cᵢ = 0
    let mut at_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (r, col, v) in base.a.triplets() {
        at_rows[col].push((ys + r, v));
    }
    for j in 0..n {
        let mut entries = std::mem::take(&mut at_rows[j]);
        for (i, p) in pcp.params().iter().enumerate() {
            entries.push((th + i, p.c[j]));
        }
        bld.row(&entries, -base.c[j]);
    }
    bld.cones.push(ConeKind::Zero, n);

    // y ∈ K*; the dual of the zero cone is free
    for (blk, range) in base.cones.ranges() {
        if blk.kind == ConeKind::Zero {
            continue;
        }
        for r in range {
            bld.row(&[(ys + r, -1.0)], 0.0);
        }
        bld.cones.push(blk.kind, blk.dim);
    }

    bld.add_regularizer(reg, th);

    let mut c = vec![0.0; bld.nvars];
    for &(v, w) in &bld.objective {
        c[v] += w;
    }
    let a = SparseMatrix::from_triplets(bld.b.len(), bld.nvars, bld.triplets.iter().copied())
        .expect("joint program entries are in range and finite");
    ConeProgram {
        a,
        b: bld.b,
        c,
        cones: bld.cones,
    }
}

/// Minimizes `r(θ)` subject to solvability with interior margin `eps` on
/// second-order blocks. Requires `A` to be independent of θ.
pub fn exact_repair_affine<S: ConeSolver + ?Sized>(
    solver: &S,
    pcp: &ParamConeProgram,
    reg: &Regularizer,
    eps: f64,
    settings: &SolverSettings,
) -> Result<ExactRepair> {
    if !pcp.has_constant_a() {
        return Err(Error::Unsupported(
            "the convex reformulation requires A to be independent of the parameters".into(),
        ));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("interior margin must be a finite nonnegative number, got {eps}")));
    }
    reg.validate(pcp.k())?;

    let joint = build(pcp, reg, eps);
    let sol = solver.solve(&joint, settings, None).map_err(|e| e.context("solving the convex reformulation"))?;
    match sol.status {
        SolveStatus::Solved | SolveStatus::Inaccurate => {}
        SolveStatus::InfeasibleCert if eps > 0.0 => return Err(Error::InteriorInfeasible { eps }),
        SolveStatus::InfeasibleCert => {
            return Err(Error::invalid(
                "no parameter allowed by the regularizer makes the program solvable",
            ))
        }
        status => {
            return Err(Error::Numerical(format!(
                "convex reformulation ended with status {status} after {} iterations",
                sol.iterations
            )))
        }
    }
    let theta = sol.x[..pcp.k()].to_vec();
    let r_value = reg.eval(&theta);
    Ok(ExactRepair {
        theta,
        r_value,
        eps,
        solver_status: sol.status,
        iterations: sol.iterations,
    })
}

/// Geometric schedule `start, start·factor, …` of `count` margins.
pub fn eps_schedule(start: f64, factor: f64, count: usize) -> Vec<f64> {
    std::iter::successors(Some(start), |e| Some(e * factor)).take(count).collect()
}

/// Runs [`exact_repair_affine`] for each margin and reports every outcome,
/// giving the `r(ε)` curve as ε shrinks.
pub fn exact_repair_path<S: ConeSolver + ?Sized>(
    solver: &S,
    pcp: &ParamConeProgram,
    reg: &Regularizer,
    margins: &[f64],
    settings: &SolverSettings,
) -> Vec<(f64, Result<ExactRepair>)> {
    margins
        .iter()
        .map(|&eps| (eps, exact_repair_affine(solver, pcp, reg, eps, settings)))
        .collect()
}
