//! Reference backend: operator splitting on the homogeneous self-dual
//! embedding.
//!
//! With `u = (x, y, τ)` and the skew-symmetric
//!
//! ```text
//!     ┌  0   Aᵀ   c ┐
//! Q = │ −A   0    b │
//!     └ −cᵀ  −bᵀ  0 ┘
//! ```
//!
//! the embedding asks for `u ∈ C = Rⁿ × K* × R₊` with `Qu ∈ C*` and
//! `uᵀQu = 0`. Douglas–Rachford splitting in the metric
//! `R = diag(ρₓ I, σ⁻¹ I, 1)` iterates
//!
//! ```text
//! ũ = (R + Q)⁻¹ R w
//! u = Π_C(2ũ − w)
//! w ← w + α(u − ũ)
//! ```
//!
//! and recovers the slack `v = (0, s, κ) = R(u + w − 2ũ)`. The `(R + Q)`
//! solve reduces to the quasi-definite system `[[ρₓ I, Ãᵀ], [Ã, −σ⁻¹ I]]`
//! plus a rank-one correction. The dual scale σ adapts to the balance of
//! primal and dual residuals; each change costs one numeric refactorization.

use std::sync::{Arc, Mutex};

use super::ldl::{Factor, SymPattern, Symbolic};
use super::scaling::Scaling;
use super::{residuals, within_tolerance, ConeSolver, Solution, SolveStatus, SolverSettings};
use crate::cones::{ConeDescriptor, ConeKind};
use crate::error::{Error, Result};
use crate::program::ConeProgram;
use crate::sparse::{dot, norm2, SparseMatrix};

/// Residual checks run every this many iterations.
const CHECK_EVERY: usize = 5;
/// `INACCURATE` is reported when the final residuals are within this
/// multiple of the requested tolerance.
const INACCURATE_FACTOR: f64 = 100.0;
/// Primal regularization in the x block of the metric.
const RHO_X: f64 = 1e-6;
const INITIAL_SCALE: f64 = 0.1;
const MIN_SCALE: f64 = 1e-6;
const MAX_SCALE: f64 = 1e6;
/// The zero cone's rows get a much smaller metric weight.
const ZERO_CONE_WEIGHT: f64 = 1e-3;
/// Minimum iterations between scale updates.
const RESCALE_MIN_ITERS: usize = 100;
/// Scale is updated once the averaged residual ratio leaves
/// `[1/RESCALE_TRIGGER, RESCALE_TRIGGER]`.
const RESCALE_TRIGGER: f64 = 3.1622776601683795;

/// Data derived from the constraint matrix alone.
struct Prepared {
    a: SparseMatrix,
    cones: ConeDescriptor,
    scaling_enabled: bool,
    scaling: Scaling,
    a_scaled: SparseMatrix,
    symbolic: Arc<Symbolic>,
    /// Values of the quasi-definite matrix with zero diagonal.
    values: Vec<f64>,
    /// Position of each diagonal entry in `values`.
    diag_pos: Vec<usize>,
    /// Most recent scale and its factorization, reused by the next solve.
    last: Mutex<Option<(f64, Arc<Factor>)>>,
}

impl Prepared {
    /// Diagonal of the metric `R` for dual scale `scale`.
    fn metric(&self, scale: f64) -> Vec<f64> {
        let (m, n) = (self.a.nrows(), self.a.ncols());
        let mut r = Vec::with_capacity(n + m + 1);
        r.resize(n, RHO_X);
        for (b, range) in self.cones.ranges() {
            let w = if b.kind == ConeKind::Zero { ZERO_CONE_WEIGHT } else { 1.0 };
            r.extend(range.map(|_| w / scale));
        }
        r.push(1.0);
        r
    }

    fn factor(&self, scale: f64) -> Result<Factor> {
        let n = self.a.ncols();
        let r = self.metric(scale);
        let mut values = self.values.clone();
        for (j, &p) in self.diag_pos.iter().enumerate() {
            values[p] = if j < n { r[j] } else { -r[j] };
        }
        Factor::factorize(Arc::clone(&self.symbolic), &values)
    }
}

#[derive(Default)]
struct Cache {
    symbolic: Option<(SymPattern, Arc<Symbolic>)>,
    prepared: Option<Arc<Prepared>>,
}

/// First-order conic solver. Holds a cache of the most recent symbolic
/// analysis and numeric factorization, so repeated solves with the same
/// matrix (or the same pattern) skip that work.
#[derive(Default)]
pub struct AdmmSolver {
    cache: Mutex<Cache>,
}

impl AdmmSolver {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare(&self, prog: &ConeProgram, settings: &SolverSettings) -> Result<Arc<Prepared>> {
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(p) = &cache.prepared {
            if p.scaling_enabled == settings.scaling_enabled && p.cones == prog.cones && p.a == prog.a {
                return Ok(Arc::clone(p));
            }
        }

        let (m, n) = (prog.m(), prog.n());
        let mut a_scaled = prog.a.clone();
        let scaling = if settings.scaling_enabled {
            Scaling::equilibrate(&mut a_scaled, &prog.cones)
        } else {
            Scaling::identity(m, n)
        };

        // Upper triangle of [[ρₓ I, Ãᵀ], [Ã, −R_y]]: column j < n holds the
        // diagonal; column n + i holds row i of Ã (as rows 0..n) and the
        // diagonal.
        let at = a_scaled.transpose();
        let mut col_ptr = Vec::with_capacity(n + m + 1);
        let mut row_idx = Vec::with_capacity(n + m + at.nnz());
        let mut values = Vec::with_capacity(n + m + at.nnz());
        let mut diag_pos = Vec::with_capacity(n + m);
        col_ptr.push(0);
        for j in 0..n {
            diag_pos.push(row_idx.len());
            row_idx.push(j);
            values.push(0.0);
            col_ptr.push(row_idx.len());
        }
        for i in 0..m {
            for p in at.col_ptr()[i]..at.col_ptr()[i + 1] {
                row_idx.push(at.row_idx()[p]);
                values.push(at.values()[p]);
            }
            diag_pos.push(row_idx.len());
            row_idx.push(n + i);
            values.push(0.0);
            col_ptr.push(row_idx.len());
        }
        let pattern = SymPattern {
            n: n + m,
            col_ptr,
            row_idx,
        };
        let symbolic = match &cache.symbolic {
            Some((pat, sym)) if *pat == pattern => Arc::clone(sym),
            _ => {
                let sym = Arc::new(Symbolic::analyze(&pattern)?);
                cache.symbolic = Some((pattern, Arc::clone(&sym)));
                sym
            }
        };

        let mut prepared = Prepared {
            a: prog.a.clone(),
            cones: prog.cones.clone(),
            scaling_enabled: settings.scaling_enabled,
            scaling,
            a_scaled,
            symbolic,
            values,
            diag_pos,
            last: Mutex::new(None),
        };
        let factor = prepared.factor(INITIAL_SCALE)?;
        prepared.last = Mutex::new(Some((INITIAL_SCALE, Arc::new(factor))));
        let prepared = Arc::new(prepared);
        cache.prepared = Some(Arc::clone(&prepared));
        Ok(prepared)
    }
}

impl ConeSolver for AdmmSolver {
    fn solve(&self, prog: &ConeProgram, settings: &SolverSettings, warm: Option<&Solution>) -> Result<Solution> {
        settings.validate()?;
        prog.validate()?;
        let (m, n) = (prog.m(), prog.n());
        if let Some(w) = warm {
            if w.x.len() != n || w.y.len() != m || w.s.len() != m {
                return Err(Error::invalid("warm start has inconsistent dimensions"));
            }
        }
        let prepared = self.prepare(prog, settings)?;
        let mut run = Run::new(prog, &prepared, settings);
        let sol = run.iterate(warm);
        *prepared.last.lock().unwrap_or_else(|e| e.into_inner()) = Some((run.scale, Arc::clone(&run.factor)));
        sol
    }
}

/// State of one solve.
struct Run<'a> {
    prog: &'a ConeProgram,
    prep: &'a Prepared,
    settings: &'a SolverSettings,
    scaling: Scaling,
    b: Vec<f64>,
    c: Vec<f64>,
    scale: f64,
    /// Diagonal of the metric.
    r: Vec<f64>,
    factor: Arc<Factor>,
    /// `K⁻¹ h` with `h = (c̃, b̃)`.
    g: Vec<f64>,
    /// `R_τ + hᵀ K⁻¹ h`
    denom: f64,
    work: Vec<f64>,
}

impl<'a> Run<'a> {
    fn new(prog: &'a ConeProgram, prep: &'a Prepared, settings: &'a SolverSettings) -> Self {
        let mut scaling = prep.scaling.clone();
        let (b, c) = if settings.scaling_enabled {
            scaling.scale_vectors(&prep.a_scaled, &prog.b, &prog.c)
        } else {
            (prog.b.clone(), prog.c.clone())
        };
        let (scale, factor) = prep
            .last
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
            .expect("prepared data always holds a factorization");
        let mut run = Run {
            prog,
            prep,
            settings,
            scaling,
            b,
            c,
            scale,
            r: prep.metric(scale),
            factor,
            g: Vec::new(),
            denom: 1.0,
            work: Vec::new(),
        };
        run.refresh_rank_one();
        run
    }

    fn refresh_rank_one(&mut self) {
        let n = self.prog.n();
        let mut g = [self.c.clone(), self.b.clone()].concat();
        self.solve_k(&mut g);
        self.denom = self.r[self.r.len() - 1] + dot(&self.c, &g[..n]) + dot(&self.b, &g[n..]);
        self.g = g;
    }

    fn rescale(&mut self, scale: f64) -> Result<()> {
        self.factor = Arc::new(self.prep.factor(scale)?);
        self.scale = scale;
        self.r = self.prep.metric(scale);
        self.refresh_rank_one();
        Ok(())
    }

    /// Solves `K z = w` in place for `K = [[ρₓ I, Ãᵀ], [−Ã, R_y]]`.
    fn solve_k(&mut self, w: &mut [f64]) {
        let n = self.prog.n();
        for v in &mut w[n..] {
            *v = -*v;
        }
        self.factor.solve_in_place(w, &mut self.work);
    }

    /// `ũ = (R + Q)⁻¹ R w`.
    fn linear_step(&mut self, w: &[f64], ut: &mut [f64]) {
        let (m, n) = (self.prog.m(), self.prog.n());
        let len = n + m + 1;
        for i in 0..len {
            ut[i] = self.r[i] * w[i];
        }
        let tau_rhs = ut[len - 1];
        self.solve_k(&mut ut[..len - 1]);
        let hz = dot(&self.c, &ut[..n]) + dot(&self.b, &ut[n..n + m]);
        let tau = (tau_rhs + hz) / self.denom;
        for i in 0..len - 1 {
            ut[i] -= tau * self.g[i];
        }
        ut[len - 1] = tau;
    }

    /// Relative primal and dual residuals of the homogeneous iterate in the
    /// scaled space.
    fn relative_residuals(&self, u: &[f64], v: &[f64]) -> (f64, f64) {
        let (m, n) = (self.prog.m(), self.prog.n());
        let a = &self.prep.a_scaled;
        let tau = u[n + m];
        let inf = |x: &[f64]| x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let ax = a.mul_vec(&u[..n]);
        let s = &v[n..n + m];
        let btau: Vec<f64> = self.b.iter().map(|b| b * tau).collect();
        let pri: Vec<f64> = (0..m).map(|i| ax[i] + s[i] - btau[i]).collect();
        let pri_scale = inf(&ax).max(inf(s)).max(inf(&btau));
        let aty = a.mul_t_vec(&u[n..n + m]);
        let ctau: Vec<f64> = self.c.iter().map(|c| c * tau).collect();
        let dual: Vec<f64> = (0..n).map(|j| aty[j] + ctau[j]).collect();
        let dual_scale = inf(&aty).max(inf(&ctau));
        let rel = |r: f64, s: f64| if s > 1e-18 { r / s } else { r };
        (rel(inf(&pri), pri_scale), rel(inf(&dual), dual_scale))
    }

    fn iterate(&mut self, warm: Option<&Solution>) -> Result<Solution> {
        let (m, n) = (self.prog.m(), self.prog.n());
        let len = n + m + 1;
        let alpha = self.settings.relaxation;

        let mut u = vec![0.0; len];
        let mut v = vec![0.0; len];
        let mut warm_started = false;
        match warm {
            Some(w) if w.status != SolveStatus::InfeasibleCert && w.status != SolveStatus::UnboundedCert => {
                let (mut x, mut y, mut s) = (w.x.clone(), w.y.clone(), w.s.clone());
                self.prog.cones.project_dual_in_place(&mut y);
                self.prog.cones.project_in_place(&mut s);
                self.scaling.scale_iterate(&mut x, &mut y, &mut s);
                u[..n].copy_from_slice(&x);
                u[n..n + m].copy_from_slice(&y);
                u[len - 1] = 1.0;
                v[n..n + m].copy_from_slice(&s);
                warm_started = true;
            }
            _ => {
                u[len - 1] = 1.0;
                v[len - 1] = 1.0;
            }
        }

        if warm_started {
            if let Some(sol) = self.check(&u, &v, 0, 1.0)? {
                return Ok(sol);
            }
        }

        // At a fixed point ũ = u and v = R(w − u).
        let mut w: Vec<f64> = (0..len).map(|i| u[i] + v[i] / self.r[i]).collect();
        let mut ut = vec![0.0; len];
        let mut log_ratio_sum = 0.0;
        let mut ratio_count = 0usize;
        let mut last_rescale = 0usize;
        for k in 1..=self.settings.max_iters {
            self.linear_step(&w, &mut ut);
            for i in 0..len {
                u[i] = 2.0 * ut[i] - w[i];
            }
            self.prog.cones.project_dual_in_place(&mut u[n..n + m]);
            u[len - 1] = u[len - 1].max(0.0);
            for i in 0..len {
                v[i] = self.r[i] * (u[i] + w[i] - 2.0 * ut[i]);
                w[i] += alpha * (u[i] - ut[i]);
            }

            if k % CHECK_EVERY != 0 && k != self.settings.max_iters {
                continue;
            }
            if u.iter().chain(&v).any(|x| !x.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite iterate at iteration {k} (tau = {}, kappa = {})",
                    u[len - 1],
                    v[len - 1]
                )));
            }
            if let Some(sol) = self.check(&u, &v, k, 1.0)? {
                return Ok(sol);
            }

            let (pri, dual) = self.relative_residuals(&u, &v);
            if pri > 0.0 && dual > 0.0 {
                log_ratio_sum += 0.5 * (pri / dual).ln();
                ratio_count += 1;
            }
            if k - last_rescale >= RESCALE_MIN_ITERS && ratio_count > 0 {
                let factor = (log_ratio_sum / ratio_count as f64).exp();
                if !(1.0 / RESCALE_TRIGGER..=RESCALE_TRIGGER).contains(&factor) {
                    let scale = (self.scale * factor).clamp(MIN_SCALE, MAX_SCALE);
                    if scale != self.scale {
                        self.rescale(scale)?;
                        // Same (u, v), expressed in the new metric.
                        for i in 0..len {
                            w[i] = u[i] + v[i] / self.r[i];
                        }
                    }
                    last_rescale = k;
                    log_ratio_sum = 0.0;
                    ratio_count = 0;
                }
            }
        }

        let k = self.settings.max_iters;
        if let Some(mut sol) = self.check(&u, &v, k, INACCURATE_FACTOR)? {
            if sol.status == SolveStatus::Solved {
                sol.status = SolveStatus::Inaccurate;
            }
            return Ok(sol);
        }
        let (x, y, s) = self.unscaled(&u, &v, true);
        let r = residuals(self.prog, &x, &y, &s)?;
        Ok(Solution {
            x,
            y,
            s,
            status: SolveStatus::MaxIters,
            primal_residual: r.primal,
            dual_residual: r.dual,
            gap: r.gap,
            iterations: k,
        })
    }

    /// Unscaled `(x, y, s)`, divided by τ when `normalize` and τ > 0.
    fn unscaled(&self, u: &[f64], v: &[f64], normalize: bool) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (m, n) = (self.prog.m(), self.prog.n());
        let tau = u[n + m];
        let div = if normalize && tau > 0.0 { tau } else { 1.0 };
        let mut x: Vec<f64> = u[..n].iter().map(|a| a / div).collect();
        let mut y: Vec<f64> = u[n..n + m].iter().map(|a| a / div).collect();
        let mut s: Vec<f64> = v[n..n + m].iter().map(|a| a / div).collect();
        self.scaling.unscale(&mut x, &mut y, &mut s);
        (x, y, s)
    }

    /// Termination test: optimality first, then certificates.
    fn check(&self, u: &[f64], v: &[f64], iter: usize, factor: f64) -> Result<Option<Solution>> {
        let (m, n) = (self.prog.m(), self.prog.n());
        let tau = u[n + m];
        if tau > 0.0 {
            let (x, y, s) = self.unscaled(u, v, true);
            let r = residuals(self.prog, &x, &y, &s)?;
            if within_tolerance(self.prog, &x, &y, &r, self.settings, factor) {
                return Ok(Some(Solution {
                    x,
                    y,
                    s,
                    status: SolveStatus::Solved,
                    primal_residual: r.primal,
                    dual_residual: r.dual,
                    gap: r.gap,
                    iterations: iter,
                }));
            }
        }
        if factor > 1.0 {
            return Ok(None);
        }

        let (x, y, s) = self.unscaled(u, v, false);
        let eps = self.settings.eps_infeas;
        let bty = dot(&self.prog.b, &y);
        if bty < 0.0 {
            let ybar: Vec<f64> = y.iter().map(|a| a / -bty).collect();
            let aty = norm2(&self.prog.a.mul_t_vec(&ybar));
            if aty * norm2(&self.prog.b).max(1.0) <= eps {
                return Ok(Some(Solution {
                    x: vec![0.0; n],
                    y: ybar,
                    s: vec![0.0; m],
                    status: SolveStatus::InfeasibleCert,
                    primal_residual: f64::INFINITY,
                    dual_residual: aty,
                    gap: f64::NAN,
                    iterations: iter,
                }));
            }
        }
        let ctx = dot(&self.prog.c, &x);
        if ctx < 0.0 {
            let xbar: Vec<f64> = x.iter().map(|a| a / -ctx).collect();
            let sbar: Vec<f64> = s.iter().map(|a| a / -ctx).collect();
            let mut r = self.prog.a.mul_vec(&xbar);
            r.iter_mut().zip(&sbar).for_each(|(a, b)| *a += b);
            let res = norm2(&r);
            if res * norm2(&self.prog.c).max(1.0) <= eps {
                return Ok(Some(Solution {
                    x: xbar,
                    y: vec![0.0; m],
                    s: sbar,
                    status: SolveStatus::UnboundedCert,
                    primal_residual: res,
                    dual_residual: f64::INFINITY,
                    gap: f64::NAN,
                    iterations: iter,
                }));
            }
        }
        Ok(None)
    }
}
