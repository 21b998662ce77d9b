//! Convex performance metrics over θ with closed-form proximal operators.
//!
//! A regularizer is a small tree of atoms combined with `Sum`. The proximal
//! operator is exact for trees that are separable per coordinate with at most
//! one distance atom (weighted L1 or weighted squared L2) per coordinate plus
//! any number of boxes. For a single coordinate the objective
//! `scale·(w|θ−c| or w(θ−c)²) + ½(θ−v)²` restricted to an interval is a 1-D
//! convex problem, so its minimizer is the clip of the unconstrained
//! minimizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularizer {
    /// `Σᵢ wᵢ |θᵢ − cᵢ|`
    ScaledL1 { weights: Vec<f64>, center: Vec<f64> },
    /// `Σᵢ wᵢ (θᵢ − cᵢ)²`
    ScaledL2Sq { weights: Vec<f64>, center: Vec<f64> },
    /// Indicator of `lower ≤ θ ≤ upper`; bounds may be infinite.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Sum(Vec<Regularizer>),
}

impl Regularizer {
    pub fn l1(weights: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        check_weights(&weights, &center)?;
        Ok(Regularizer::ScaledL1 { weights, center })
    }

    pub fn l2_squared(weights: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        check_weights(&weights, &center)?;
        Ok(Regularizer::ScaledL2Sq { weights, center })
    }

    /// `Σᵢ |θᵢ − cᵢ| / |cᵢ|`, the relative change from `center`. Zero
    /// entries in `center` are rejected; use [`Regularizer::l1`] with
    /// explicit weights for those.
    pub fn relative_l1(center: Vec<f64>) -> Result<Self> {
        if let Some(i) = center.iter().position(|&c| c == 0.0) {
            return Err(Error::invalid(format!(
                "relative metric needs a nonzero center, but entry {i} is zero"
            )));
        }
        let weights = center.iter().map(|c| 1.0 / c.abs()).collect();
        Self::l1(weights, center)
    }

    pub fn bounds(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::invalid("box bounds have different lengths"));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                return Err(Error::invalid(format!("invalid box bounds [{l}, {u}] at coordinate {i}")));
            }
        }
        Ok(Regularizer::Box { lower, upper })
    }

    pub fn sum(children: Vec<Regularizer>) -> Self {
        Regularizer::Sum(children)
    }

    /// Dimension the tree expects, or `None` for an empty sum.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Regularizer::ScaledL1 { weights, .. } | Regularizer::ScaledL2Sq { weights, .. } => Some(weights.len()),
            Regularizer::Box { lower, .. } => Some(lower.len()),
            Regularizer::Sum(children) => children.iter().find_map(Regularizer::dim),
        }
    }

    /// Checks the tree for internal consistency and dimension `k`.
    pub fn validate(&self, k: usize) -> Result<()> {
        match self {
            Regularizer::ScaledL1 { weights, center } | Regularizer::ScaledL2Sq { weights, center } => {
                check_weights(weights, center)?;
                if weights.len() != k {
                    return Err(Error::invalid(format!(
                        "regularizer atom has dimension {}, expected {k}",
                        weights.len()
                    )));
                }
            }
            Regularizer::Box { lower, upper } => {
                Regularizer::bounds(lower.clone(), upper.clone())?;
                if lower.len() != k {
                    return Err(Error::invalid(format!("box has dimension {}, expected {k}", lower.len())));
                }
            }
            Regularizer::Sum(children) => {
                for ch in children {
                    ch.validate(k)?;
                }
            }
        }
        Ok(())
    }

    /// `r(θ)`, `+∞` exactly when a box bound is violated.
    pub fn eval(&self, theta: &[f64]) -> f64 {
        match self {
            Regularizer::ScaledL1 { weights, center } => weights
                .iter()
                .zip(center)
                .zip(theta)
                .map(|((w, c), t)| w * (t - c).abs())
                .sum(),
            Regularizer::ScaledL2Sq { weights, center } => weights
                .iter()
                .zip(center)
                .zip(theta)
                .map(|((w, c), t)| w * (t - c) * (t - c))
                .sum(),
            Regularizer::Box { lower, upper } => {
                let inside = theta.iter().zip(lower.iter().zip(upper)).all(|(t, (l, u))| t >= l && t <= u);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Regularizer::Sum(children) => children.iter().map(|ch| ch.eval(theta)).sum(),
        }
    }

    /// `argmin_θ scale·r(θ) + ½‖θ − v‖²`.
    pub fn prox(&self, scale: f64, v: &[f64]) -> Result<Vec<f64>> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::invalid(format!("prox scale must be positive, got {scale}")));
        }
        let coords = self.separate(v.len())?;
        Ok(v.iter()
            .zip(&coords)
            .map(|(&vi, coord)| coord.prox(scale, vi))
            .collect())
    }

    /// Per-coordinate decomposition used by [`Regularizer::prox`].
    fn separate(&self, k: usize) -> Result<Vec<Coordinate>> {
        let mut coords = vec![Coordinate::default(); k];
        self.collect_into(&mut coords)?;
        Ok(coords)
    }

    fn collect_into(&self, coords: &mut [Coordinate]) -> Result<()> {
        let k = coords.len();
        match self {
            Regularizer::ScaledL1 { weights, center } | Regularizer::ScaledL2Sq { weights, center } => {
                if weights.len() != k || center.len() != k {
                    return Err(Error::invalid(format!("regularizer atom does not have dimension {k}")));
                }
                let squared = matches!(self, Regularizer::ScaledL2Sq { .. });
                for (i, coord) in coords.iter_mut().enumerate() {
                    if weights[i] == 0.0 {
                        continue;
                    }
                    if coord.distance.is_some() {
                        return Err(Error::UnsupportedComposition(format!(
                            "coordinate {i} carries more than one distance atom"
                        )));
                    }
                    coord.distance = Some(Distance {
                        weight: weights[i],
                        center: center[i],
                        squared,
                    });
                }
            }
            Regularizer::Box { lower, upper } => {
                if lower.len() != k {
                    return Err(Error::invalid(format!("box does not have dimension {k}")));
                }
                for (i, coord) in coords.iter_mut().enumerate() {
                    coord.lower = coord.lower.max(lower[i]);
                    coord.upper = coord.upper.min(upper[i]);
                    if coord.lower > coord.upper {
                        return Err(Error::invalid(format!("boxes have an empty intersection at coordinate {i}")));
                    }
                }
            }
            Regularizer::Sum(children) => {
                for ch in children {
                    ch.collect_into(coords)?;
                }
            }
        }
        Ok(())
    }

    /// Intersection of all boxes in the tree, as `(lower, upper)`.
    pub fn box_bounds(&self, k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let coords = self.separate(k)?;
        Ok(coords.iter().map(|c| (c.lower, c.upper)).unzip())
    }
}

fn check_weights(weights: &[f64], center: &[f64]) -> Result<()> {
    if weights.len() != center.len() {
        return Err(Error::invalid("weights and center have different lengths"));
    }
    if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid(format!("weight {i} must be finite and nonnegative")));
    }
    if center.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("center must be finite"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
struct Distance {
    weight: f64,
    center: f64,
    squared: bool,
}

#[derive(Clone, Copy, Debug)]
struct Coordinate {
    distance: Option<Distance>,
    lower: f64,
    upper: f64,
}

impl Default for Coordinate {
    fn default() -> Self {
        Coordinate {
            distance: None,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }
}

impl Coordinate {
    fn prox(&self, scale: f64, v: f64) -> f64 {
        let free = match self.distance {
            None => v,
            Some(Distance {
                weight,
                center,
                squared: false,
            }) => {
                let thr = scale * weight;
                let d = v - center;
                center + d.signum() * (d.abs() - thr).max(0.0)
            }
            Some(Distance {
                weight,
                center,
                squared: true,
            }) => (v + 2.0 * scale * weight * center) / (1.0 + 2.0 * scale * weight),
        };
        free.clamp(self.lower, self.upper)
    }
}
