mod common;

use conerepair::{eval_tstar, grad_tstar, AdmmSolver, SolverSettings};
use rand::Rng;

#[test]
fn gradient_matches_central_differences() {
    let mut rng = common::rng(11);
    let solver = AdmmSolver::new();
    let settings = SolverSettings::with_tolerance(1e-11);
    let h = 1e-5;
    let (mut total, mut good, mut instances) = (0, 0, 0);
    while instances < 50 {
        let m = rng.gen_range(2..=10);
        let n = rng.gen_range(1..=8);
        let k = rng.gen_range(1..=4);
        let pcp = common::random_pcp(&mut rng, m, n, k, true);
        let theta: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = eval_tstar(&solver, &pcp, &theta, &settings, None).unwrap();
        if w.tstar <= 0.01 {
            continue;
        }
        instances += 1;
        let g = grad_tstar(&pcp, &theta, &w).unwrap();
        for i in 0..k {
            let mut tp = theta.clone();
            tp[i] += h;
            let mut tm = theta.clone();
            tm[i] -= h;
            let fp = eval_tstar(&solver, &pcp, &tp, &settings, None).unwrap().tstar;
            let fm = eval_tstar(&solver, &pcp, &tm, &settings, None).unwrap().tstar;
            let fd = (fp - fm) / (2.0 * h);
            let rel = (g[i] - fd).abs() / fd.abs().max(g[i].abs()).max(1e-6);
            total += 1;
            if rel <= 1e-3 {
                good += 1;
            } else {
                eprintln!("instance {instances} coord {i}: grad {} fd {} rel {rel:e} ({:?} iters {})", g[i], fd, w.solver_status, w.iterations);
            }
        }
    }
    eprintln!("{good}/{total} coordinates within 1e-3");
    assert!(good as f64 >= 0.95 * total as f64);
}

#[test]
fn warm_start_leaves_tstar_unchanged() {
    let mut rng = common::rng(12);
    let solver = AdmmSolver::new();
    let settings = SolverSettings::default();
    for _ in 0..20 {
        let k = rng.gen_range(1..=3);
        let pcp = common::random_pcp(&mut rng, 6, 4, k, true);
        let theta: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cold = eval_tstar(&solver, &pcp, &theta, &settings, None).unwrap();
        let warm = eval_tstar(&solver, &pcp, &theta, &settings, Some(&cold)).unwrap();
        assert!((cold.tstar - warm.tstar).abs() <= 1e-8, "{} vs {}", cold.tstar, warm.tstar);
    }
}

#[test]
fn solvable_instances_have_zero_tstar() {
    use conerepair::{ParamConeProgram, ParamIncrement};
    let mut rng = common::rng(13);
    let solver = AdmmSolver::new();
    for _ in 0..20 {
        let (prog, ..) = common::feasible_program(&mut rng, 8, 5, true);
        let (m, n) = (prog.m(), prog.n());
        let pcp = ParamConeProgram::new(prog, vec![ParamIncrement::zeros(m, n)]).unwrap();
        let w = eval_tstar(&solver, &pcp, &[0.0], &SolverSettings::default(), None).unwrap();
        assert!(w.tstar <= 1e-6, "{}", w.tstar);
    }
}
