//! Generators for the two worked examples: powered spacecraft landing and
//! arbitrage-free return matrices.

use conerepair::{
    ConeBlock, ConeDescriptor, ConeKind, ConeProgram, ParamConeProgram, ParamIncrement, Regularizer, SparseMatrix,
};

use crate::error::CliError;
use crate::format::Problem;

/// Landing data; θ = (mass, fuel budget, thrust limit, gimbal tangent).
#[derive(Clone, Debug, PartialEq)]
pub struct SpacecraftData {
    pub horizon: f64,
    pub step: f64,
    pub gravity: f64,
    pub x_init: [f64; 3],
    pub v_init: [f64; 3],
    pub fuel_rate: f64,
    pub theta0: [f64; 4],
    /// Lower bound on the mass.
    pub min_mass: f64,
}

impl Default for SpacecraftData {
    fn default() -> Self {
        SpacecraftData {
            horizon: 10.0,
            step: 1.0,
            gravity: 9.8,
            x_init: [10.0, 10.0, 50.0],
            v_init: [10.0, -10.0, -10.0],
            fuel_rate: 1.0,
            theta0: [12.0, 200.0, 50.0, 0.5],
            min_mass: 9.0,
        }
    }
}

impl SpacecraftData {
    /// Number of grid points `T/h + 1`.
    pub fn stages(&self) -> Result<usize, CliError> {
        let ratio = self.horizon / self.step;
        if !(self.step > 0.0 && ratio.is_finite() && ratio >= 1.0 && (ratio - ratio.round()).abs() < 1e-9) {
            return Err(CliError::Input(format!(
                "horizon {} must be a positive multiple of the step {}",
                self.horizon, self.step
            )));
        }
        Ok(ratio.round() as usize + 1)
    }
}

/// Row-by-row assembly of a parametrized program.
struct Rows {
    base: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
    param_a: Vec<Vec<(usize, usize, f64)>>,
    param_b: Vec<Vec<(usize, f64)>>,
}

impl Rows {
    fn new(k: usize) -> Self {
        Rows {
            base: Vec::new(),
            b: Vec::new(),
            param_a: vec![Vec::new(); k],
            param_b: vec![Vec::new(); k],
        }
    }

    fn row(&mut self, entries: &[(usize, f64)], rhs: f64) -> usize {
        let r = self.b.len();
        self.base.extend(entries.iter().map(|&(c, v)| (r, c, v)));
        self.b.push(rhs);
        r
    }

    fn finish(self, n: usize, c: Vec<f64>, cones: ConeDescriptor) -> ParamConeProgram {
        let m = self.b.len();
        let base = ConeProgram::new(
            SparseMatrix::from_triplets(m, n, self.base).expect("generated entries are valid"),
            self.b,
            c,
            cones,
        )
        .expect("generated program is consistent");
        let params = self
            .param_a
            .into_iter()
            .zip(self.param_b)
            .map(|(a, b)| {
                let mut inc = ParamIncrement::zeros(m, n);
                inc.a = SparseMatrix::from_triplets(m, n, a).expect("generated entries are valid");
                for (r, v) in b {
                    inc.b[r] += v;
                }
                inc
            })
            .collect();
        ParamConeProgram::new(base, params).expect("generated increments are consistent")
    }
}

const MASS: usize = 0;
const FUEL: usize = 1;
const THRUST: usize = 2;
const GIMBAL: usize = 3;

/// Feasibility problem for the discretized landing.
///
/// Variables are positions `x_k`, velocities `v_k`, thrusts `f_k` and fuel
/// epigraph variables `u_k ≥ ‖f_k‖₂` for `k = 1..H`. The dynamics are
///
/// ```text
/// x_{k+1} = x_k + (h/2)(v_{k+1} + v_k)
/// m v_{k+1} = m v_k + h (f_k − m g e₃)        k = 1..H−1
/// ```
///
/// so the mass multiplies the velocity rows of `A` and the gravity term of
/// `b`. The gimbal cone `(f₃, α f₁, α f₂) ∈ SOC` carries α in `A`; the fuel
/// budget and thrust limit enter `b` only.
pub fn spacecraft(data: &SpacecraftData) -> Result<Problem, CliError> {
    let hz = data.stages()?;
    let h = data.step;
    let x = |k: usize, d: usize| 3 * k + d;
    let v = |k: usize, d: usize| 3 * hz + 3 * k + d;
    let f = |k: usize, d: usize| 6 * hz + 3 * k + d;
    let u = |k: usize| 9 * hz + k;
    let n = 10 * hz;

    let mut rows = Rows::new(4);
    let mut cones = ConeDescriptor::empty();
    let mut zero_rows = 0;

    for k in 0..hz - 1 {
        for d in 0..3 {
            rows.row(
                &[(x(k + 1, d), 1.0), (x(k, d), -1.0), (v(k + 1, d), -h / 2.0), (v(k, d), -h / 2.0)],
                0.0,
            );
            zero_rows += 1;
        }
    }
    for k in 0..hz - 1 {
        for d in 0..3 {
            let r = rows.row(&[(f(k, d), -h)], 0.0);
            rows.param_a[MASS].push((r, v(k + 1, d), 1.0));
            rows.param_a[MASS].push((r, v(k, d), -1.0));
            if d == 2 {
                rows.param_b[MASS].push((r, -h * data.gravity));
            }
            zero_rows += 1;
        }
    }
    for d in 0..3 {
        rows.row(&[(x(0, d), 1.0)], data.x_init[d]);
        rows.row(&[(v(0, d), 1.0)], data.v_init[d]);
        rows.row(&[(x(hz - 1, d), 1.0)], 0.0);
        rows.row(&[(v(hz - 1, d), 1.0)], 0.0);
        zero_rows += 4;
    }
    cones.push(ConeKind::Zero, zero_rows);

    // ‖f_k‖₂ ≤ F_max
    for k in 0..hz {
        let r = rows.row(&[], 0.0);
        rows.param_b[THRUST].push((r, 1.0));
        for d in 0..3 {
            rows.row(&[(f(k, d), -1.0)], 0.0);
        }
        cones.push(ConeKind::SecondOrder, 4);
    }
    // ‖f_k‖₂ ≤ u_k
    for k in 0..hz {
        rows.row(&[(u(k), -1.0)], 0.0);
        for d in 0..3 {
            rows.row(&[(f(k, d), -1.0)], 0.0);
        }
        cones.push(ConeKind::SecondOrder, 4);
    }
    // Σ h γ u_k ≤ M_fuel
    let entries: Vec<(usize, f64)> = (0..hz).map(|k| (u(k), h * data.fuel_rate)).collect();
    let r = rows.row(&entries, 0.0);
    rows.param_b[FUEL].push((r, 1.0));
    cones.push(ConeKind::Nonneg, 1);
    // (f₃, α f₁, α f₂) ∈ SOC
    for k in 0..hz {
        rows.row(&[(f(k, 2), -1.0)], 0.0);
        for d in 0..2 {
            let r = rows.row(&[], 0.0);
            rows.param_a[GIMBAL].push((r, f(k, d), -1.0));
        }
        cones.push(ConeKind::SecondOrder, 3);
    }

    let pcp = rows.finish(n, vec![0.0; n], cones);
    let theta0 = data.theta0.to_vec();
    let mut lower = vec![f64::NEG_INFINITY; 4];
    lower[MASS] = data.min_mass;
    let relative = Regularizer::relative_l1(theta0.clone()).map_err(|e| CliError::Input(e.to_string()))?;
    let regularizer = Regularizer::sum(vec![
        relative,
        Regularizer::bounds(lower, vec![f64::INFINITY; 4]).map_err(|e| CliError::Input(e.to_string()))?,
    ]);
    Ok(Problem {
        pcp,
        theta0,
        regularizer,
    })
}

/// Return matrix used in the horse-race example (5 outcomes, 3 wagers).
pub fn horse_race_returns() -> Vec<Vec<f64>> {
    vec![
        vec![0.05, 1.74, -0.88],
        vec![0.08, 0.45, -1.02],
        vec![0.18, -0.31, 1.29],
        vec![0.9, -1.17, 0.27],
        vec![-0.93, 0.17, 2.39],
    ]
}

/// `maximize 1ᵀRw s.t. Rw ≥ 0, w ≥ 0` in cone form with θ = vec(R)
/// (column-major) and metric `Σ |R − R₀| / |R₀|`.
///
/// The program is `minimize −1ᵀRw` with `A = [−R; −I]`, `b = 0`, so it is
/// solvable exactly when no arbitrage exists.
pub fn arbitrage(r0: &[Vec<f64>]) -> Result<Problem, CliError> {
    let m = r0.len();
    let n = r0.first().map_or(0, Vec::len);
    if m == 0 || n == 0 || r0.iter().any(|row| row.len() != n) {
        return Err(CliError::Input("return matrix must be a nonempty rectangle".into()));
    }
    for (i, row) in r0.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v == 0.0 || !v.is_finite() {
                return Err(CliError::Input(format!(
                    "R0[{i}][{j}] = {v}; the relative metric needs nonzero finite entries"
                )));
            }
        }
    }
    let k = m * n;
    let mut rows = Rows::new(k);
    for i in 0..m {
        let r = rows.row(&[], 0.0);
        for j in 0..n {
            rows.param_a[i + j * m].push((r, j, -1.0));
        }
    }
    for j in 0..n {
        rows.row(&[(j, -1.0)], 0.0);
    }
    let cones = ConeDescriptor::new(vec![ConeBlock::new(ConeKind::Nonneg, m + n).expect("nonzero")])
        .expect("valid cone");
    let mut pcp = rows.finish(n, vec![0.0; n], cones);
    // c = −Rᵀ1: each R_ij contributes −1 to c_j
    let base = pcp.base().clone();
    let mut params = pcp.params().to_vec();
    for j in 0..n {
        for i in 0..m {
            params[i + j * m].c[j] = -1.0;
        }
    }
    pcp = ParamConeProgram::new(base, params).expect("consistent increments");

    let theta0: Vec<f64> = (0..n).flat_map(|j| r0.iter().map(move |row| row[j])).collect();
    let regularizer = Regularizer::relative_l1(theta0.clone()).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(Problem {
        pcp,
        theta0,
        regularizer,
    })
}

/// Reads θ = vec(R) back into an `m × n` matrix.
pub fn unvec(theta: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = theta.len() / m;
    (0..m).map(|i| (0..n).map(|j| theta[i + j * m]).collect()).collect()
}
