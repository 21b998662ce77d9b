//! Ruiz equilibration of the constraint matrix.
//!
//! Produces `Ã = D A E` with rows and columns of roughly unit norm. Rows of a
//! second-order cone block share one scale factor so that `D` maps the cone
//! onto itself.

use crate::cones::{ConeDescriptor, ConeKind};
use crate::sparse::{norm2, SparseMatrix};

const PASSES: usize = 25;
const MIN_NORM: f64 = 1e-4;
const MAX_FACTOR: f64 = 1e4;
const MIN_FACTOR: f64 = 1e-4;

#[derive(Clone, Debug)]
pub(crate) struct Scaling {
    /// Row factors (length m).
    pub d: Vec<f64>,
    /// Column factors (length n).
    pub e: Vec<f64>,
    /// Multiplier applied to `D b`.
    pub sb: f64,
    /// Multiplier applied to `E c`.
    pub sc: f64,
}

impl Scaling {
    pub fn identity(m: usize, n: usize) -> Self {
        Scaling {
            d: vec![1.0; m],
            e: vec![1.0; n],
            sb: 1.0,
            sc: 1.0,
        }
    }

    /// Equilibrates `a` in place and returns the factors used.
    pub fn equilibrate(a: &mut SparseMatrix, cones: &ConeDescriptor) -> Self {
        let (m, n) = (a.nrows(), a.ncols());
        let mut d = vec![1.0; m];
        let mut e = vec![1.0; n];
        let mut row_norm = vec![0.0; m];
        let mut col_norm = vec![0.0; n];
        let mut step_r = vec![1.0; m];
        let mut step_c = vec![1.0; n];
        let ones_m = vec![1.0; m];
        let ones_n = vec![1.0; n];

        for _ in 0..PASSES {
            row_norm.fill(0.0);
            for (r, _, v) in a.triplets() {
                row_norm[r] = f64::max(row_norm[r], v.abs());
            }
            for (b, range) in cones.ranges() {
                if b.kind == ConeKind::SecondOrder {
                    let mx = row_norm[range.clone()].iter().cloned().fold(0.0, f64::max);
                    row_norm[range].fill(mx);
                }
            }
            for i in 0..m {
                let nrm = if row_norm[i] < MIN_NORM { 1.0 } else { row_norm[i] };
                let next = (d[i] / nrm.sqrt()).clamp(MIN_FACTOR, MAX_FACTOR);
                step_r[i] = next / d[i];
                d[i] = next;
            }
            a.scale(&step_r, &ones_n);

            col_norm.fill(0.0);
            for (_, c, v) in a.triplets() {
                col_norm[c] = f64::max(col_norm[c], v.abs());
            }
            for j in 0..n {
                let nrm = if col_norm[j] < MIN_NORM { 1.0 } else { col_norm[j] };
                let next = (e[j] / nrm.sqrt()).clamp(MIN_FACTOR, MAX_FACTOR);
                step_c[j] = next / e[j];
                e[j] = next;
            }
            a.scale(&ones_m, &step_c);
        }

        Scaling { d, e, sb: 1.0, sc: 1.0 }
    }

    /// Picks `sb`, `sc` so the scaled `b` and `c` are commensurate with `Ã`,
    /// then returns `(b̃, c̃)`.
    pub fn scale_vectors(&mut self, a_scaled: &SparseMatrix, b: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (a_scaled.nrows(), a_scaled.ncols());
        let mut b_s: Vec<f64> = b.iter().zip(&self.d).map(|(v, d)| v * d).collect();
        let mut c_s: Vec<f64> = c.iter().zip(&self.e).map(|(v, e)| v * e).collect();

        let mut row_sq = vec![0.0; m];
        let mut col_sq = vec![0.0; n];
        for (r, col, v) in a_scaled.triplets() {
            row_sq[r] += v * v;
            col_sq[col] += v * v;
        }
        let mean_row = if m > 0 { row_sq.iter().map(|v| v.sqrt()).sum::<f64>() / m as f64 } else { 1.0 };
        let mean_col = if n > 0 { col_sq.iter().map(|v| v.sqrt()).sum::<f64>() / n as f64 } else { 1.0 };

        let pick = |target: f64, nrm: f64| {
            if nrm < 1e-12 || target < 1e-12 {
                1.0
            } else {
                (target / nrm).clamp(1e-3, 1e3)
            }
        };
        self.sb = pick(mean_col, norm2(&b_s));
        self.sc = pick(mean_row, norm2(&c_s));
        b_s.iter_mut().for_each(|v| *v *= self.sb);
        c_s.iter_mut().for_each(|v| *v *= self.sc);
        (b_s, c_s)
    }

    /// Maps scaled iterates back: `x = E x̃ / sb`, `y = D ỹ / sc`, `s = D⁻¹ s̃ / sb`.
    pub fn unscale(&self, x: &mut [f64], y: &mut [f64], s: &mut [f64]) {
        for (v, e) in x.iter_mut().zip(&self.e) {
            *v *= e / self.sb;
        }
        for (v, d) in y.iter_mut().zip(&self.d) {
            *v *= d / self.sc;
        }
        for (v, d) in s.iter_mut().zip(&self.d) {
            *v /= d * self.sb;
        }
    }

    /// Inverse of [`Scaling::unscale`], used for warm starts.
    pub fn scale_iterate(&self, x: &mut [f64], y: &mut [f64], s: &mut [f64]) {
        for (v, e) in x.iter_mut().zip(&self.e) {
            *v *= self.sb / e;
        }
        for (v, d) in y.iter_mut().zip(&self.d) {
            *v *= self.sc / d;
        }
        for (v, d) in s.iter_mut().zip(&self.d) {
            *v *= d * self.sb;
        }
    }
}
