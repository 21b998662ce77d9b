//! Command implementations shared by the binary and the tests.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use conerepair::repair::exact_repair_affine;
use conerepair::{
    eval_tstar, repair, AdmmSolver, ConeSolver, Error, RepairSettings, RepairStatus, SolveStatus, TraceEntry,
};

use crate::error::CliError;
use crate::format::Problem;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_REPAIRED: i32 = 1;

/// Relative size of the `--seed` perturbation of θ₀.
const SEED_JITTER: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct DiagnoseReport {
    pub input_digest: String,
    pub tstar: f64,
    pub solvable: bool,
    /// Status of the conic solver applied to the program itself at θ₀.
    pub program_status: SolveStatus,
    pub embedding_status: SolveStatus,
    pub eps_out: f64,
}

impl DiagnoseReport {
    pub fn verdict(&self) -> &'static str {
        if self.solvable {
            "SOLVABLE"
        } else {
            "UNSOLVABLE"
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.solvable {
            EXIT_OK
        } else {
            EXIT_NOT_REPAIRED
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "t* = {}\nverdict: {}\nprogram status: {}\nembedding status: {}\n",
            self.tstar,
            self.verdict(),
            self.program_status,
            self.embedding_status
        )
    }
}

pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn diagnose<S: ConeSolver + ?Sized>(
    solver: &S,
    problem: &Problem,
    input: &[u8],
    settings: &RepairSettings,
) -> Result<DiagnoseReport, CliError> {
    let prog = problem.pcp.materialize(&problem.theta0)?;
    let sol = solver.solve(&prog, &settings.solver, None)?;
    let w = eval_tstar(solver, &problem.pcp, &problem.theta0, &settings.solver, None)?;
    Ok(DiagnoseReport {
        input_digest: digest(input),
        tstar: w.tstar,
        solvable: w.tstar <= settings.eps_out,
        program_status: sol.status,
        embedding_status: w.solver_status,
        eps_out: settings.eps_out,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Heuristic,
    Exact,
}

#[derive(Clone, Debug, Serialize)]
pub struct RepairReport {
    pub input_digest: String,
    pub method: Method,
    pub status: String,
    pub theta0: Vec<f64>,
    pub initial_tstar: f64,
    pub initial_r: f64,
    pub final_theta: Vec<f64>,
    pub final_tstar: f64,
    pub final_r: f64,
    pub iterations: usize,
    pub accepted_steps: usize,
    pub wall_clock_seconds: f64,
    pub diagnostics: Option<String>,
    pub seed: Option<u64>,
    pub eps_interior: Option<f64>,
    pub settings: RepairSettings,
    pub trace: Vec<TraceEntry>,
}

impl RepairReport {
    pub fn repaired(&self) -> bool {
        self.status == RepairStatus::Repaired.name()
    }

    pub fn exit_code(&self) -> i32 {
        if self.repaired() {
            EXIT_OK
        } else {
            EXIT_NOT_REPAIRED
        }
    }

    pub fn to_text(&self, with_trace: bool) -> String {
        let mut out = String::new();
        if with_trace {
            out.push_str("iter lambda alpha tstar r accepted\n");
            for e in &self.trace {
                out.push_str(&format!(
                    "{} {} {} {} {} {}\n",
                    e.iter, e.lambda, e.alpha, e.tstar, e.r_value, e.accepted
                ));
            }
        }
        out.push_str(&format!("status: {}\n", self.status));
        out.push_str(&format!("initial t* = {}  r = {}\n", self.initial_tstar, self.initial_r));
        out.push_str(&format!("final t* = {}  r = {}\n", self.final_tstar, self.final_r));
        out.push_str(&format!("theta = {:?}\n", self.final_theta));
        out.push_str(&format!(
            "iterations: {} ({} accepted), {} s\n",
            self.iterations, self.accepted_steps, self.wall_clock_seconds
        ));
        if let Some(d) = &self.diagnostics {
            out.push_str(&format!("note: {d}\n"));
        }
        out
    }
}

#[derive(Clone, Debug, Default)]
pub struct RepairOptions {
    pub seed: Option<u64>,
    /// Use the convex reformulation with this interior margin.
    pub exact: Option<f64>,
}

/// θ₀ jittered by a seeded relative perturbation and mapped back into the
/// regularizer's domain.
pub fn perturbed_start(problem: &Problem, seed: u64) -> Result<Vec<f64>, CliError> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lower, upper) = problem.regularizer.box_bounds(problem.theta0.len())?;
    Ok(problem
        .theta0
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let jitter = SEED_JITTER * t.abs().max(1.0) * rng.gen_range(-1.0..1.0);
            (t + jitter).clamp(lower[i], upper[i])
        })
        .collect())
}

pub fn run_repair<S: ConeSolver + ?Sized>(
    solver: &S,
    problem: &Problem,
    input: &[u8],
    settings: &RepairSettings,
    opts: &RepairOptions,
) -> Result<RepairReport, CliError> {
    let start = Instant::now();
    let theta0 = match opts.seed {
        Some(seed) => perturbed_start(problem, seed)?,
        None => problem.theta0.clone(),
    };
    let base = |method| RepairReport {
        input_digest: digest(input),
        method,
        status: String::new(),
        theta0: theta0.clone(),
        initial_tstar: f64::NAN,
        initial_r: problem.regularizer.eval(&theta0),
        final_theta: Vec::new(),
        final_tstar: f64::NAN,
        final_r: f64::NAN,
        iterations: 0,
        accepted_steps: 0,
        wall_clock_seconds: 0.0,
        diagnostics: None,
        seed: opts.seed,
        eps_interior: opts.exact,
        settings: settings.clone(),
        trace: Vec::new(),
    };

    if let Some(eps) = opts.exact {
        let mut report = base(Method::Exact);
        report.initial_tstar = eval_tstar(solver, &problem.pcp, &theta0, &settings.solver, None)?.tstar;
        match exact_repair_affine(solver, &problem.pcp, &problem.regularizer, eps, &settings.solver) {
            Ok(out) => {
                let check = eval_tstar(solver, &problem.pcp, &out.theta, &settings.solver, None)?;
                let repaired = check.tstar <= settings.eps_out;
                report.status = if repaired { RepairStatus::Repaired.name() } else { "UNVERIFIED" }.to_string();
                if !repaired {
                    report.diagnostics = Some(format!(
                        "the convex reformulation returned a parameter with t* = {:e} above eps_out",
                        check.tstar
                    ));
                }
                report.final_tstar = check.tstar;
                report.final_r = out.r_value;
                report.final_theta = out.theta;
                report.iterations = out.iterations;
            }
            Err(e @ Error::InteriorInfeasible { .. }) => {
                report.status = "INFEASIBLE".to_string();
                report.diagnostics = Some(e.to_string());
                report.final_theta = theta0.clone();
                report.final_tstar = report.initial_tstar;
                report.final_r = report.initial_r;
            }
            Err(e) => return Err(e.into()),
        }
        report.wall_clock_seconds = start.elapsed().as_secs_f64();
        return Ok(report);
    }

    let res = repair(solver, &problem.pcp, &problem.regularizer, &theta0, settings)?;
    let mut report = base(Method::Heuristic);
    report.status = res.status.name().to_string();
    report.initial_tstar = res.initial_tstar;
    report.initial_r = res.initial_r;
    report.final_tstar = res.final_tstar;
    report.final_r = res.final_r;
    report.iterations = res.trace.len();
    report.accepted_steps = res.accepted_steps();
    report.diagnostics = res.diagnostics;
    report.final_theta = res.theta_final;
    report.trace = res.trace;
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Solver used by the command-line front end.
pub fn default_solver() -> AdmmSolver {
    AdmmSolver::new()
}
