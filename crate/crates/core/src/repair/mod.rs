//! Penalty method with an adaptive proximal-gradient inner loop.
//!
//! Minimizes `L(θ, λ) = λ r(θ) + t*(θ)` by proximal gradient steps
//! `θ⁺ = prox_{αλr}(θ − α ∇t*(θ))`. A step is accepted only if it strictly
//! decreases `L(·, λ)`; accepted steps grow α by `alpha_up`, rejected ones
//! shrink it by `alpha_down`. When an accepted step satisfies
//! `‖(θ − θ⁺)/α + ∇t*(θ⁺) − ∇t*(θ)‖₂ ≤ eps_in`, the inner problem is
//! considered solved and λ is multiplied by `lambda_decay`. The run stops as
//! soon as `t*(θ) ≤ eps_out`.

use serde::{Deserialize, Serialize};

use crate::embedding::{eval_tstar, grad_tstar, EmbeddingWitness};
use crate::error::{Error, Result};
use crate::program::ParamConeProgram;
use crate::regularizer::Regularizer;
use crate::solver::{ConeSolver, SolverSettings};
use crate::sparse::norm2;

pub mod exact;

pub use exact::{eps_schedule, exact_repair_affine, exact_repair_path, ExactRepair};

/// Consecutive rejected steps after which the run is declared stalled.
pub const STALL_REJECTS: usize = 50;
/// Step sizes below this declare the run stalled.
pub const MIN_STEP: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairSettings {
    pub lambda0: f64,
    pub alpha0: f64,
    pub n_iter: usize,
    pub eps_out: f64,
    pub eps_in: f64,
    pub lambda_decay: f64,
    pub alpha_up: f64,
    pub alpha_down: f64,
    pub solver: SolverSettings,
}

impl Default for RepairSettings {
    fn default() -> Self {
        RepairSettings {
            lambda0: 1.0,
            alpha0: 1.0,
            n_iter: 500,
            eps_out: 1e-5,
            eps_in: 1e-6,
            lambda_decay: 0.5,
            alpha_up: 1.2,
            alpha_down: 0.5,
            solver: SolverSettings::default(),
        }
    }
}

impl RepairSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda0", self.lambda0),
            ("alpha0", self.alpha0),
            ("eps_out", self.eps_out),
            ("eps_in", self.eps_in),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.lambda_decay > 0.0 && self.lambda_decay < 1.0) {
            return Err(Error::invalid("lambda_decay must lie in (0, 1)"));
        }
        if !(self.alpha_down > 0.0 && self.alpha_down < 1.0) {
            return Err(Error::invalid("alpha_down must lie in (0, 1)"));
        }
        if !(self.alpha_up > 1.0 && self.alpha_up.is_finite()) {
            return Err(Error::invalid("alpha_up must exceed 1"));
        }
        self.solver.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RepairStatus {
    Repaired,
    MaxIters,
    Stalled,
}

impl RepairStatus {
    pub fn name(self) -> &'static str {
        match self {
            RepairStatus::Repaired => "REPAIRED",
            RepairStatus::MaxIters => "MAX_ITERS",
            RepairStatus::Stalled => "STALLED",
        }
    }
}

impl std::fmt::Display for RepairStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One proximal-gradient iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    /// Penalty weight used for this iteration.
    pub lambda: f64,
    /// Step size used for this iteration.
    pub alpha: f64,
    /// `t*` and `r` at the iterate after this step (unchanged on rejection).
    pub tstar: f64,
    pub r_value: f64,
    pub accepted: bool,
    /// `L(θ, λ)` at the current iterate and at the tentative point.
    pub merit_current: f64,
    pub merit_tentative: f64,
    /// Iterate after this step.
    pub theta: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepairResult {
    pub theta_final: Vec<f64>,
    pub status: RepairStatus,
    pub initial_tstar: f64,
    pub initial_r: f64,
    pub final_tstar: f64,
    pub final_r: f64,
    pub trace: Vec<TraceEntry>,
    /// Human-readable reason for STALLED or MAX_ITERS.
    pub diagnostics: Option<String>,
}

impl RepairResult {
    pub fn accepted_steps(&self) -> usize {
        self.trace.iter().filter(|e| e.accepted).count()
    }
}

/// Runs the penalty / proximal-gradient heuristic from `theta0`.
pub fn repair<S: ConeSolver + ?Sized>(
    solver: &S,
    pcp: &ParamConeProgram,
    reg: &Regularizer,
    theta0: &[f64],
    settings: &RepairSettings,
) -> Result<RepairResult> {
    settings.validate()?;
    if theta0.len() != pcp.k() {
        return Err(Error::invalid(format!(
            "theta0 has length {}, expected {}",
            theta0.len(),
            pcp.k()
        )));
    }
    reg.validate(pcp.k())?;
    let r0 = reg.eval(theta0);
    if !r0.is_finite() {
        return Err(Error::invalid("theta0 violates the regularizer's hard constraints"));
    }

    let tstar_at = |theta: &[f64], warm: Option<&EmbeddingWitness>| {
        eval_tstar(solver, pcp, theta, &settings.solver, warm).map_err(|e| e.context("evaluating t*"))
    };

    let mut theta = theta0.to_vec();
    let mut witness = tstar_at(&theta, None)?;
    let mut r_val = r0;
    let initial_tstar = witness.tstar;
    let mut trace = Vec::new();
    let finish = |theta: Vec<f64>, status, witness: &EmbeddingWitness, r_val, trace, diagnostics| RepairResult {
        theta_final: theta,
        status,
        initial_tstar,
        initial_r: r0,
        final_tstar: witness.tstar,
        final_r: r_val,
        trace,
        diagnostics,
    };

    if witness.tstar <= settings.eps_out {
        return Ok(finish(theta, RepairStatus::Repaired, &witness, r_val, trace, None));
    }
    let mut grad = match grad_tstar(pcp, &theta, &witness) {
        Ok(g) => g,
        Err(e) => {
            let msg = format!("no usable gradient at the starting point: {e}");
            return Ok(finish(theta, RepairStatus::Stalled, &witness, r_val, trace, Some(msg)));
        }
    };

    let mut lambda = settings.lambda0;
    let mut alpha = settings.alpha0;
    let mut rejects = 0usize;

    for iter in 1..=settings.n_iter {
        let merit = lambda * r_val + witness.tstar;
        let half: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - alpha * g).collect();
        let tent = reg.prox(alpha * lambda, &half)?;
        let tent_r = reg.eval(&tent);
        let tent_witness = tstar_at(&tent, Some(&witness))?;
        let tent_merit = lambda * tent_r + tent_witness.tstar;

        if tent_merit < merit {
            let step_alpha = alpha;
            alpha *= settings.alpha_up;
            rejects = 0;
            let prev_theta = std::mem::replace(&mut theta, tent);
            witness = tent_witness;
            r_val = tent_r;
            trace.push(TraceEntry {
                iter,
                lambda,
                alpha: step_alpha,
                tstar: witness.tstar,
                r_value: r_val,
                accepted: true,
                merit_current: merit,
                merit_tentative: tent_merit,
                theta: theta.clone(),
            });
            if witness.tstar <= settings.eps_out {
                return Ok(finish(theta, RepairStatus::Repaired, &witness, r_val, trace, None));
            }
            let new_grad = match grad_tstar(pcp, &theta, &witness) {
                Ok(g) => g,
                Err(e) => {
                    let msg = format!("gradient unavailable at iteration {iter}: {e}");
                    return Ok(finish(theta, RepairStatus::Stalled, &witness, r_val, trace, Some(msg)));
                }
            };
            let optimality: Vec<f64> = (0..theta.len())
                .map(|i| (prev_theta[i] - theta[i]) / step_alpha + (new_grad[i] - grad[i]))
                .collect();
            if norm2(&optimality) <= settings.eps_in {
                lambda *= settings.lambda_decay;
            }
            grad = new_grad;
        } else {
            trace.push(TraceEntry {
                iter,
                lambda,
                alpha,
                tstar: witness.tstar,
                r_value: r_val,
                accepted: false,
                merit_current: merit,
                merit_tentative: tent_merit,
                theta: theta.clone(),
            });
            alpha *= settings.alpha_down;
            rejects += 1;
            if rejects >= STALL_REJECTS || alpha < MIN_STEP {
                let msg = format!(
                    "{rejects} consecutive rejected steps (step size {alpha:e}); t* = {:e}",
                    witness.tstar
                );
                return Ok(finish(theta, RepairStatus::Stalled, &witness, r_val, trace, Some(msg)));
            }
        }
    }

    let msg = format!("iteration limit {} reached with t* = {:e}", settings.n_iter, witness.tstar);
    Ok(finish(theta, RepairStatus::MaxIters, &witness, r_val, trace, Some(msg)))
}
