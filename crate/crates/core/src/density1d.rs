//! Linear probability densities on a bounded interval.
//!
//! `rho(x) = (1 + a (x - c)) / w` on `[left, right]`, where `c` is the
//! midpoint and `w` the width. Positivity requires `|a| <= 2 / w`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this slope magnitude the quantile uses the uniform formula.
const UNIFORM_SLOPE_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearDensity1D {
    left: f64,
    right: f64,
    slope: f64,
}

/// Result of fitting a density to the samples of one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub density: LinearDensity1D,
    /// No samples were available; the density is uniform.
    pub empty_fallback: bool,
}

impl LinearDensity1D {
    /// A density with the given slope. The slope must satisfy `|a| <= 2 / w`
    /// (a relative slack of 1e-12 is accepted and clamped away).
    pub fn new(left: f64, right: f64, slope: f64) -> Result<Self> {
        if !(right > left) || !left.is_finite() || !right.is_finite() {
            return Err(Error::domain(format!("invalid interval [{left}, {right}]")));
        }
        let b = 2.0 / (right - left);
        if !slope.is_finite() || slope.abs() > b * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "slope {slope} violates positivity bound {b}"
            )));
        }
        Ok(Self {
            left,
            right,
            slope: slope.clamp(-b, b),
        })
    }

    pub fn uniform(left: f64, right: f64) -> Result<Self> {
        Self::new(left, right, 0.0)
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.left + self.right)
    }

    /// Largest admissible slope magnitude, `2 / w`.
    pub fn slope_bound(&self) -> f64 {
        2.0 / self.width()
    }

    /// Same density shifted by `t`.
    pub fn translated(&self, t: f64) -> Self {
        Self {
            left: self.left + t,
            right: self.right + t,
            slope: self.slope,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.left || x > self.right {
            return 0.0;
        }
        ((1.0 + self.slope * (x - self.center())) / self.width()).max(0.0)
    }

    /// Analytic CDF; `x` is clamped to the support.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.left {
            return 0.0;
        }
        if x >= self.right {
            return 1.0;
        }
        let h = 0.5 * self.width();
        let s = x - self.center();
        let v = (s + h) * (1.0 + 0.5 * self.slope * (s - h)) / self.width();
        v.clamp(0.0, 1.0)
    }

    /// Inverse CDF: the point in `[left, right]` with `cdf(x) = u`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(format!("quantile level {u} outside [0, 1]")));
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.left;
        }
        if u >= 1.0 {
            return self.right;
        }
        if self.slope.abs() < UNIFORM_SLOPE_EPS {
            return (self.left + u * self.width()).clamp(self.left, self.right);
        }
        (self.center() + self.centered_quantile(u)).clamp(self.left, self.right)
    }

    /// Quantile measured from the interval midpoint, in `[-w/2, w/2]`.
    pub(crate) fn centered_quantile(&self, u: f64) -> f64 {
        let w = self.width();
        let h = 0.5 * w;
        let u = u.clamp(0.0, 1.0);
        if self.slope.abs() < UNIFORM_SLOPE_EPS {
            return (u - 0.5) * w;
        }
        // (a/2) s^2 + s + k = 0 with s = x - center, k = h - a h^2 / 2 - u w.
        // The root inside [-h, h] is the "+" branch; written in the form that
        // avoids cancellation when a is small.
        let a = self.slope;
        let k = h - 0.5 * a * h * h - u * w;
        let disc = (1.0 - 2.0 * a * k).max(0.0);
        let s = -2.0 * k / (1.0 + disc.sqrt());
        s.clamp(-h, h)
    }

    /// Distances in `u` from `[0, 1]` to the branch point of the quantile
    /// function, at the low and high end. The quantile is analytic on
    /// `[0, 1]` but behaves like a square root when the gap is small.
    pub(crate) fn quantile_branch_gaps(&self) -> (f64, f64) {
        let alpha = (self.slope * 0.5 * self.width()).clamp(-1.0, 1.0);
        if alpha == 0.0 {
            return (f64::INFINITY, f64::INFINITY);
        }
        let gap = (1.0 - alpha.abs()).powi(2) / (4.0 * alpha.abs());
        if alpha > 0.0 {
            (gap, f64::INFINITY)
        } else {
            (f64::INFINITY, gap)
        }
    }
}

/// Fits the slope from the samples of one segment.
///
/// `a0 = 4 * sum(x_k - c) / (n * w)`, then clamped to `[-2/w, 2/w]`. With no
/// samples the fit falls back to the uniform density.
pub fn fit_linear_density(values: &[f64], left: f64, right: f64) -> Result<LinearFit> {
    if !(right > left) {
        return Err(Error::domain(format!("invalid interval [{left}, {right}]")));
    }
    if values.is_empty() {
        return Ok(LinearFit {
            density: LinearDensity1D::uniform(left, right)?,
            empty_fallback: true,
        });
    }
    let w = right - left;
    let c = 0.5 * (left + right);
    let n = values.len() as f64;
    let a0 = 4.0 * values.iter().map(|x| x - c).sum::<f64>() / (n * w);
    let b = 2.0 / w;
    Ok(LinearFit {
        density: LinearDensity1D::new(left, right, a0.clamp(-b, b))?,
        empty_fallback: false,
    })
}
