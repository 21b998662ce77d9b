mod common;

use conerepair::repair::exact_repair_affine;
use conerepair::{
    eval_tstar, repair, AdmmSolver, ConeBlock, ConeDescriptor, ConeKind, ConeProgram, ParamConeProgram,
    ParamIncrement, Regularizer, RepairResult, RepairSettings, RepairStatus, SolverSettings, SparseMatrix,
};
use rand::Rng;

/// `x ≤ 0`, `x ≥ θ`.
fn bound_pair() -> ParamConeProgram {
    let cones = ConeDescriptor::new(vec![ConeBlock::new(ConeKind::Nonneg, 2).unwrap()]).unwrap();
    let base = ConeProgram::new(
        SparseMatrix::from_dense(&[vec![1.0], vec![-1.0]]).unwrap(),
        vec![0.0, 0.0],
        vec![0.0],
        cones,
    )
    .unwrap();
    let inc = ParamIncrement {
        a: SparseMatrix::zeros(2, 1),
        b: vec![0.0, -1.0],
        c: vec![0.0],
    };
    ParamConeProgram::new(base, vec![inc]).unwrap()
}

/// Checks the step-size and penalty bookkeeping of a trace and that the
/// accepted iterates reproduce the final parameter.
fn replay(res: &RepairResult, theta0: &[f64], settings: &RepairSettings) {
    let mut alpha = settings.alpha0;
    let mut lambda = settings.lambda0;
    let mut theta = theta0.to_vec();
    for e in &res.trace {
        assert_eq!(e.alpha, alpha, "iteration {}", e.iter);
        assert!(e.lambda <= lambda, "penalty increased at iteration {}", e.iter);
        assert!(
            e.lambda == lambda || e.lambda == lambda * settings.lambda_decay,
            "penalty changed by an unexpected factor"
        );
        lambda = e.lambda;
        if e.accepted {
            assert!(e.merit_tentative < e.merit_current, "accepted a non-decreasing step");
            alpha *= settings.alpha_up;
            theta = e.theta.clone();
        } else {
            assert!(e.merit_tentative >= e.merit_current);
            assert_eq!(e.theta, theta);
            alpha *= settings.alpha_down;
        }
    }
    assert_eq!(res.theta_final, theta);
}

#[test]
fn lp_repair_trace_replays_and_is_sound() {
    let pcp = bound_pair();
    let reg = Regularizer::l1(vec![1.0], vec![1.0]).unwrap();
    let settings = RepairSettings {
        lambda0: 0.1,
        ..Default::default()
    };
    let solver = AdmmSolver::new();
    let res = repair(&solver, &pcp, &reg, &[1.0], &settings).unwrap();
    assert_eq!(res.status, RepairStatus::Repaired);
    replay(&res, &[1.0], &settings);
    let cold = eval_tstar(&AdmmSolver::new(), &pcp, &res.theta_final, &settings.solver, None).unwrap();
    assert!(cold.tstar <= 2.0 * settings.eps_out, "{}", cold.tstar);

    let again = repair(&AdmmSolver::new(), &pcp, &reg, &[1.0], &settings).unwrap();
    assert_eq!(again.theta_final, res.theta_final);
    assert_eq!(again.trace, res.trace);
}

#[test]
fn random_b_repairs_are_sound() {
    let mut rng = common::rng(21);
    let solver = AdmmSolver::new();
    let settings = RepairSettings::default();
    let mut repaired = 0;
    for _ in 0..5 {
        let (pcp, theta0) = constant_a_instance(&mut rng);
        let reg = Regularizer::l1(vec![1.0; theta0.len()], theta0.clone()).unwrap();
        let res = repair(&solver, &pcp, &reg, &theta0, &settings).unwrap();
        replay(&res, &theta0, &settings);
        if res.status == RepairStatus::Repaired {
            repaired += 1;
            let cold = eval_tstar(&AdmmSolver::new(), &pcp, &res.theta_final, &settings.solver, None).unwrap();
            assert!(cold.tstar <= 2.0 * settings.eps_out, "{}", cold.tstar);
            let exact = exact_repair_affine(&solver, &pcp, &reg, 0.0, &settings.solver).unwrap();
            assert!(exact.r_value <= res.final_r + 1e-3, "{} vs {}", exact.r_value, res.final_r);
        }
    }
    assert!(repaired >= 3, "only {repaired} of 5 repaired");
}

/// Random LP `Ax + s = b₀ + θ`, `s ≥ 0`, with `c` a negative combination of
/// rows so that it is bounded whenever feasible, started infeasible.
fn constant_a_instance(rng: &mut rand_chacha::ChaCha8Rng) -> (ParamConeProgram, Vec<f64>) {
    let (m, n) = (6, 3);
    let a = common::random_sparse(rng, m, n, 0.7);
    let y: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
    let c: Vec<f64> = a.mul_t_vec(&y).into_iter().map(|v| -v).collect();
    let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..-0.5)).collect();
    let cones = ConeDescriptor::new(vec![ConeBlock::new(ConeKind::Nonneg, m).unwrap()]).unwrap();
    let base = ConeProgram::new(a, b, c, cones).unwrap();
    let params = (0..m)
        .map(|i| {
            let mut inc = ParamIncrement::zeros(m, n);
            inc.b[i] = 1.0;
            inc
        })
        .collect();
    (ParamConeProgram::new(base, params).unwrap(), vec![0.0; m])
}

#[test]
fn division_pathology_is_reported_truthfully() {
    // minimize 0 s.t. θx = 1: solvable exactly when θ ≠ 0
    let cones = ConeDescriptor::new(vec![ConeBlock::new(ConeKind::Zero, 1).unwrap()]).unwrap();
    let base = ConeProgram::new(SparseMatrix::from_triplets(1, 1, [(0, 0, 0.0)]).unwrap(), vec![1.0], vec![0.0], cones)
        .unwrap();
    let inc = ParamIncrement {
        a: SparseMatrix::from_dense(&[vec![1.0]]).unwrap(),
        b: vec![0.0],
        c: vec![0.0],
    };
    let pcp = ParamConeProgram::new(base, vec![inc]).unwrap();
    let solver = AdmmSolver::new();
    let settings = SolverSettings::default();
    let t0 = eval_tstar(&solver, &pcp, &[0.0], &settings, None).unwrap().tstar;
    assert!((t0 - 1.0).abs() <= 1e-6, "{t0}");
    for th in [-1.0, -0.5, 0.5, 1.0] {
        let t = eval_tstar(&solver, &pcp, &[th], &settings, None).unwrap().tstar;
        assert!(t <= 1e-6, "θ = {th}: {t}");
    }

    let reg = Regularizer::l2_squared(vec![1.0], vec![0.0]).unwrap();
    let res = repair(&solver, &pcp, &reg, &[0.0], &RepairSettings::default()).unwrap();
    if res.status == RepairStatus::Repaired {
        assert_ne!(res.theta_final[0], 0.0);
        let cold = eval_tstar(&AdmmSolver::new(), &pcp, &res.theta_final, &settings, None).unwrap();
        assert!(cold.tstar <= 2e-5);
    } else {
        assert!(res.diagnostics.is_some());
    }
}

#[test]
fn zero_one_gadget_terminates_truthfully() {
    // x = θ, (θᵢ − 1) xᵢ = 0, x₁ + x₂ = 1 with r = 0
    let cones = ConeDescriptor::new(vec![ConeBlock::new(ConeKind::Zero, 5).unwrap()]).unwrap();
    let a = SparseMatrix::from_dense(&[
        vec![1.0, 0.0],
        vec![0.0, 1.0],
        vec![-1.0, 0.0],
        vec![0.0, -1.0],
        vec![1.0, 1.0],
    ])
    .unwrap();
    let base = ConeProgram::new(a, vec![0.0, 0.0, 0.0, 0.0, 1.0], vec![0.0, 0.0], cones).unwrap();
    let params = (0..2)
        .map(|i| {
            let mut inc = ParamIncrement::zeros(5, 2);
            inc.b[i] = 1.0;
            inc.a = SparseMatrix::from_triplets(5, 2, [(2 + i, i, 1.0)]).unwrap();
            inc
        })
        .collect();
    let pcp = ParamConeProgram::new(base, params).unwrap();
    assert!(!pcp.has_constant_a());
    let reg = Regularizer::sum(Vec::new());
    let theta0 = [0.5, 0.5];
    let solver = AdmmSolver::new();
    let res = repair(&solver, &pcp, &reg, &theta0, &RepairSettings::default()).unwrap();
    if res.status == RepairStatus::Repaired {
        let cold = eval_tstar(&AdmmSolver::new(), &pcp, &res.theta_final, &SolverSettings::default(), None).unwrap();
        assert!(cold.tstar <= 2e-5, "{}", cold.tstar);
    } else {
        assert!(res.diagnostics.is_some());
    }
    assert!(exact_repair_affine(&solver, &pcp, &reg, 0.0, &SolverSettings::default()).is_err());
}
