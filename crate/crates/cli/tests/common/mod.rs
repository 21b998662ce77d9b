#![allow(dead_code)]

use conerepair::{
    ConeBlock, ConeDescriptor, ConeKind, ConeProgram, ParamConeProgram, ParamIncrement, Regularizer, SparseMatrix,
};
use conerepair_cli::Problem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn single(kind: ConeKind, dim: usize) -> ConeDescriptor {
    ConeDescriptor::new(vec![ConeBlock::new(kind, dim).unwrap()]).unwrap()
}

pub fn random_cones(rng: &mut ChaCha8Rng, m: usize, allow_soc: bool) -> ConeDescriptor {
    let mut blocks = Vec::new();
    let mut left = m;
    while left > 0 {
        let kind = match rng.gen_range(0..if allow_soc { 3 } else { 2 }) {
            0 => ConeKind::Zero,
            1 => ConeKind::Nonneg,
            _ => ConeKind::SecondOrder,
        };
        let dim = rng.gen_range(1..=left.min(6));
        blocks.push(ConeBlock::new(kind, dim).unwrap());
        left -= dim;
    }
    ConeDescriptor::new(blocks).unwrap()
}

pub fn random_sparse(rng: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> SparseMatrix {
    let mut t = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if rng.gen_bool(density) {
                t.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    SparseMatrix::from_triplets(m, n, t).unwrap()
}

/// `(s, y)` with `s ∈ K`, `y ∈ K*` and `sᵀy = 0`.
pub fn complementary_pair(rng: &mut ChaCha8Rng, cones: &ConeDescriptor) -> (Vec<f64>, Vec<f64>) {
    let m = cones.dim();
    let mut s = vec![0.0; m];
    let mut y = vec![0.0; m];
    for (b, r) in cones.ranges() {
        match b.kind {
            ConeKind::Zero => r.for_each(|i| y[i] = rng.gen_range(-1.0..1.0)),
            ConeKind::Nonneg => {
                for i in r {
                    if rng.gen_bool(0.5) {
                        s[i] = rng.gen_range(0.1..1.0);
                    } else {
                        y[i] = rng.gen_range(0.1..1.0);
                    }
                }
            }
            ConeKind::SecondOrder => {
                let z: Vec<f64> = (1..b.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let nz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                match rng.gen_range(0..3) {
                    0 => {
                        s[r.start] = nz + rng.gen_range(0.1..1.0);
                        s[r.start + 1..r.end].copy_from_slice(&z);
                    }
                    1 => {
                        y[r.start] = nz + rng.gen_range(0.1..1.0);
                        y[r.start + 1..r.end].copy_from_slice(&z);
                    }
                    _ => {
                        let gamma = rng.gen_range(0.2..2.0);
                        s[r.start] = nz;
                        y[r.start] = gamma * nz;
                        for (k, i) in (r.start + 1..r.end).enumerate() {
                            s[i] = z[k];
                            y[i] = -gamma * z[k];
                        }
                    }
                }
            }
        }
    }
    (s, y)
}

/// Program with a known primal-dual solution `(x̂, ŷ, ŝ)`.
pub fn feasible_program(rng: &mut ChaCha8Rng, m: usize, n: usize, allow_soc: bool) -> (ConeProgram, Vec<f64>) {
    let cones = random_cones(rng, m, allow_soc);
    let a = random_sparse(rng, m, n, 0.4);
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (s, y) = complementary_pair(rng, &cones);
    let mut b = a.mul_vec(&x);
    b.iter_mut().zip(&s).for_each(|(bi, si)| *bi += si);
    let c: Vec<f64> = a.mul_t_vec(&y).into_iter().map(|v| -v).collect();
    (ConeProgram::new(a, b, c, cones).unwrap(), x)
}

pub fn random_pcp(rng: &mut ChaCha8Rng, m: usize, n: usize, k: usize, allow_soc: bool) -> ParamConeProgram {
    let cones = random_cones(rng, m, allow_soc);
    let a = random_sparse(rng, m, n, 0.5);
    let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let base = ConeProgram::new(a, b, c, cones).unwrap();
    let params = (0..k)
        .map(|_| ParamIncrement {
            a: random_sparse(rng, m, n, 0.2),
            b: (0..m).map(|_| if rng.gen_bool(0.5) { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect(),
            c: (0..n).map(|_| if rng.gen_bool(0.5) { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect(),
        })
        .collect();
    ParamConeProgram::new(base, params).unwrap()
}

/// Values that stress exact decimal round-tripping.
fn awkward(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..6) {
        0 => 0.1 + 0.2,
        1 => -0.0,
        2 => rng.gen_range(-1.0..1.0) * 1e-300,
        3 => rng.gen_range(-1.0..1.0) * 1e300,
        4 => f64::from_bits(rng.gen::<u64>() & 0x7fef_ffff_ffff_ffff),
        _ => rng.gen_range(-10.0..10.0),
    }
}

fn random_regularizer(rng: &mut ChaCha8Rng, k: usize, depth: usize) -> Regularizer {
    let pos = |rng: &mut ChaCha8Rng| (0..k).map(|_| rng.gen_range(1e-3..10.0)).collect::<Vec<f64>>();
    let any = |rng: &mut ChaCha8Rng| (0..k).map(|_| awkward(rng)).collect::<Vec<f64>>();
    match rng.gen_range(0..if depth > 0 { 4 } else { 3 }) {
        0 => Regularizer::l1(pos(rng), any(rng)).unwrap(),
        1 => Regularizer::l2_squared(pos(rng), any(rng)).unwrap(),
        2 => {
            let lower: Vec<f64> = (0..k)
                .map(|_| if rng.gen_bool(0.3) { f64::NEG_INFINITY } else { rng.gen_range(-5.0..0.0) })
                .collect();
            let upper: Vec<f64> = (0..k)
                .map(|_| if rng.gen_bool(0.3) { f64::INFINITY } else { rng.gen_range(0.0..5.0) })
                .collect();
            Regularizer::bounds(lower, upper).unwrap()
        }
        _ => {
            let count = rng.gen_range(0..4);
            Regularizer::sum((0..count).map(|_| random_regularizer(rng, k, depth - 1)).collect())
        }
    }
}

/// Random problem file contents, including awkward floating-point values.
pub fn random_problem(rng: &mut ChaCha8Rng) -> Problem {
    let m = rng.gen_range(0..8);
    let n = rng.gen_range(1..6);
    let k = rng.gen_range(1..4);
    let cones = random_cones(rng, m, true);
    let dense = |rng: &mut ChaCha8Rng, density: f64| {
        let mut t = Vec::new();
        for i in 0..m {
            for j in 0..n {
                if rng.gen_bool(density) {
                    t.push((i, j, awkward(rng)));
                }
            }
        }
        SparseMatrix::from_triplets(m, n, t).unwrap()
    };
    let a = dense(rng, 0.5);
    let b: Vec<f64> = (0..m).map(|_| awkward(rng)).collect();
    let c: Vec<f64> = (0..n).map(|_| awkward(rng)).collect();
    let base = ConeProgram::new(a, b, c, cones).unwrap();
    let params = (0..k)
        .map(|_| ParamIncrement {
            a: dense(rng, 0.2),
            b: (0..m).map(|_| if rng.gen_bool(0.5) { awkward(rng) } else { 0.0 }).collect(),
            c: (0..n).map(|_| if rng.gen_bool(0.5) { awkward(rng) } else { 0.0 }).collect(),
        })
        .collect();
    Problem {
        pcp: ParamConeProgram::new(base, params).unwrap(),
        theta0: (0..k).map(|_| awkward(rng)).collect(),
        regularizer: random_regularizer(rng, k, 2),
    }
}

/// `minimize 0` subject to `θx = 1`, solvable exactly when `θ ≠ 0`.
pub fn theta_x_eq_one() -> ParamConeProgram {
    let base = ConeProgram::new(
        SparseMatrix::from_triplets(1, 1, [(0, 0, 0.0)]).unwrap(),
        vec![1.0],
        vec![0.0],
        single(ConeKind::Zero, 1),
    )
    .unwrap();
    let inc = ParamIncrement {
        a: SparseMatrix::from_dense(&[vec![1.0]]).unwrap(),
        b: vec![0.0],
        c: vec![0.0],
    };
    ParamConeProgram::new(base, vec![inc]).unwrap()
}

/// `x = θ`, `(θᵢ − 1) xᵢ = 0` and `x₁ + x₂ = 1`: solvable only at 0-1 points.
pub fn zero_one_gadget() -> ParamConeProgram {
    let a = SparseMatrix::from_dense(&[
        vec![1.0, 0.0],
        vec![0.0, 1.0],
        vec![-1.0, 0.0],
        vec![0.0, -1.0],
        vec![1.0, 1.0],
    ])
    .unwrap();
    let base = ConeProgram::new(a, vec![0.0, 0.0, 0.0, 0.0, 1.0], vec![0.0, 0.0], single(ConeKind::Zero, 5)).unwrap();
    let params = (0..2)
        .map(|i| {
            let mut inc = ParamIncrement::zeros(5, 2);
            inc.b[i] = 1.0;
            inc.a = SparseMatrix::from_triplets(5, 2, [(2 + i, i, 1.0)]).unwrap();
            inc
        })
        .collect();
    ParamConeProgram::new(base, params).unwrap()
}

/// Random LP `Ax + s = b₀ + θ`, `s ≥ 0` with `c = −Aᵀy`, `y > 0`, so it is
/// bounded whenever feasible, and `b₀ < 0` so θ = 0 is usually infeasible.
pub fn constant_a_lp(rng: &mut ChaCha8Rng) -> (ParamConeProgram, Vec<f64>) {
    let (m, n) = (6, 3);
    let a = random_sparse(rng, m, n, 0.7);
    let y: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
    let c: Vec<f64> = a.mul_t_vec(&y).into_iter().map(|v| -v).collect();
    let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..-0.5)).collect();
    let base = ConeProgram::new(a, b, c, single(ConeKind::Nonneg, m)).unwrap();
    let params = (0..m)
        .map(|i| {
            let mut inc = ParamIncrement::zeros(m, n);
            inc.b[i] = 1.0;
            inc
        })
        .collect();
    (ParamConeProgram::new(base, params).unwrap(), vec![0.0; m])
}

/// `s = (θ, 1, x)` in the 3-D second-order cone, solvable exactly when θ ≥ 1.
pub fn soc_head_instance() -> ParamConeProgram {
    let base = ConeProgram::new(
        SparseMatrix::from_dense(&[vec![0.0], vec![0.0], vec![-1.0]]).unwrap(),
        vec![0.0, 1.0, 0.0],
        vec![0.0],
        single(ConeKind::SecondOrder, 3),
    )
    .unwrap();
    let inc = ParamIncrement {
        a: SparseMatrix::zeros(3, 1),
        b: vec![1.0, 0.0, 0.0],
        c: vec![0.0],
    };
    ParamConeProgram::new(base, vec![inc]).unwrap()
}
