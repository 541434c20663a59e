//! Deterministic numerical kernels: grids, quadrature, root finding, finite
//! differences, monotonicity checks, and monotone cubic interpolation.
//!
//! Every routine here is reproducible bit-for-bit across runs: there is no
//! randomness and no adaptivity driven by timing or thread scheduling.

mod interp;
mod quadrature;
mod roots;

pub use interp::MonotoneCubic;
pub use quadrature::{default_rule, integrate, integrate_with_breaks, QuadratureRule};
pub use roots::find_root;

use crate::error::{Error, Result};

/// Direction for monotonicity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Numerical tolerances used across the solver.
///
/// The defaults are deliberately conservative relative to the quadrature
/// order (64-point Gauss-Legendre resolves the smooth integrands in this
/// crate to well below 1e-12).
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Absolute tolerance for bracketed root finding.
    pub root: f64,
    /// Target absolute accuracy of quadrature; fixed-order rules on the
    /// default grids comfortably exceed it for smooth integrands.
    pub integration: f64,
    /// Slack allowed when asserting weak monotonicity on a grid.
    pub monotone_slack: f64,
    /// Relative step scale for central finite differences.
    pub fd_step_scale: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            root: 1e-10,
            integration: 1e-10,
            monotone_slack: 1e-9,
            fd_step_scale: 1e-5,
        }
    }
}

/// A finite, strictly increasing set of evaluation points.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    /// `n` evenly spaced points on `[lo, hi]`, inclusive. Requires `lo < hi`
    /// and `n >= 2`.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidGrid(format!(
                "bounds must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {n}")));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        // Pin the last point so the grid covers the interval exactly.
        points[n - 1] = hi;
        Ok(Grid { points })
    }

    /// Wraps an explicit point set; must be strictly increasing with at
    /// least two finite entries.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid("points must be finite".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        Ok(Grid { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        *self.points.last().expect("grid is non-empty")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().copied()
    }
}

/// Central finite difference `(f(x+h) - f(x-h)) / 2h` with the default step
/// `h = scale * max(1, |x|)`.
pub fn derivative<F>(f: F, x: f64, step_scale: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let h = step_scale * x.abs().max(1.0);
    let hi = f(x + h);
    let lo = f(x - h);
    if !hi.is_finite() {
        return Err(Error::NonFiniteEvaluation { x: x + h });
    }
    if !lo.is_finite() {
        return Err(Error::NonFiniteEvaluation { x: x - h });
    }
    Ok((hi - lo) / (2.0 * h))
}

/// Weak monotonicity of a sample sequence, allowing violations up to `slack`
/// per step.
pub fn is_monotone(values: &[f64], direction: Direction, slack: f64) -> bool {
    values.windows(2).all(|w| match direction {
        Direction::Increasing => w[1] >= w[0] - slack,
        Direction::Decreasing => w[1] <= w[0] + slack,
    })
}
