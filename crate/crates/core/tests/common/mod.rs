#![allow(dead_code)]

use conerepair::{ConeBlock, ConeDescriptor, ConeKind, ConeProgram, SparseMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
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

/// Complementary pair (s, y) with s ∈ K, y ∈ K*, sᵀy = 0.
pub fn complementary_pair(rng: &mut ChaCha8Rng, cones: &ConeDescriptor) -> (Vec<f64>, Vec<f64>) {
    let m = cones.dim();
    let mut s = vec![0.0; m];
    let mut y = vec![0.0; m];
    for (b, r) in cones.ranges() {
        match b.kind {
            ConeKind::Zero => {
                for i in r {
                    y[i] = rng.gen_range(-1.0..1.0);
                }
            }
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
                let d = b.dim;
                let z: Vec<f64> = (1..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
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

/// Feasible-by-construction program with known optimal (x̂, ŷ, ŝ).
pub fn feasible_program(
    rng: &mut ChaCha8Rng,
    m: usize,
    n: usize,
    allow_soc: bool,
) -> (ConeProgram, Vec<f64>, Vec<f64>, Vec<f64>) {
    let cones = random_cones(rng, m, allow_soc);
    let a = random_sparse(rng, m, n, 0.4);
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (s, y) = complementary_pair(rng, &cones);
    let mut b = a.mul_vec(&x);
    b.iter_mut().zip(&s).for_each(|(bi, si)| *bi += si);
    let c: Vec<f64> = a.mul_t_vec(&y).into_iter().map(|v| -v).collect();
    (ConeProgram::new(a, b, c, cones).unwrap(), x, y, s)
}

/// Random parametrized program with dense-ish increments in A, b and c.
pub fn random_pcp(rng: &mut ChaCha8Rng, m: usize, n: usize, k: usize, allow_soc: bool) -> conerepair::ParamConeProgram {
    use conerepair::{ParamConeProgram, ParamIncrement};
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
