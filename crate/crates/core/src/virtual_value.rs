//! The dynamic virtual value: realized value adjusted for the information
//! rent owed to higher first-period signals.
//!
//! For signal cdf `F` with density `f` and conditional value cdf
//! `G(v | theta)` with density `g`,
//!
//! ```text
//! phi(theta, v) = v + (1 - F(theta)) / f(theta) * dG/dtheta (v | theta) / g(v | theta)
//! ```
//!
//! and the *static* virtual value of the signal alone is
//! `phi_F(theta) = theta - (1 - F(theta)) / f(theta)`. In a multiplicative
//! family `v = theta z`, the conditional ratio collapses to `-v / theta` and
//! `phi(theta, v) = z * phi_F(theta)`; that product form extends `phi` to
//! the whole signal-value rectangle and is used whenever the family exposes
//! its shock. Generic families are evaluated through the ratio and report an
//! error where the conditional density vanishes.

use std::sync::Arc;

use crate::diagnostics::{Diagnostic, Violation};
use crate::error::{Error, Result};
use crate::model::{Model, SignalDistribution, ValueFamily};
use crate::numerics::Grid;

/// Evaluates dynamic and static virtual values for one model.
#[derive(Clone)]
pub struct VirtualValueField {
    signal: Arc<SignalDistribution>,
    family: Arc<dyn ValueFamily>,
}

impl VirtualValueField {
    pub fn new(model: &Model) -> Self {
        VirtualValueField {
            signal: Arc::clone(&model.signal),
            family: Arc::clone(&model.family),
        }
    }

    /// `phi(theta, v)`.
    pub fn dynamic(&self, theta: f64, v: f64) -> Result<f64> {
        if self.family.shock().is_some() {
            // Multiplicative product form, valid on the whole rectangle.
            let z = v / theta;
            return Ok(z * self.static_virtual(theta)?);
        }
        let g = self.family.pdf(v, theta);
        if g <= 0.0 {
            return Err(Error::UndefinedDensity { theta, v });
        }
        let rent = self.signal.inverse_hazard(theta)?;
        Ok(v + rent * self.family.theta_partial(v, theta) / g)
    }

    /// `phi_F(theta) = theta - (1 - F) / f`.
    pub fn static_virtual(&self, theta: f64) -> Result<f64> {
        Ok(theta - self.signal.inverse_hazard(theta)?)
    }

    pub fn signal(&self) -> &SignalDistribution {
        &self.signal
    }

    pub fn family(&self) -> &dyn ValueFamily {
        self.family.as_ref()
    }
}

/// Checks that the *truncated* virtual value `max(phi, 0)` is nondecreasing
/// in both the signal and the value on the given grids, within `slack`.
///
/// The truncation matters: where `phi < 0` the buyer is excluded and the
/// allocation is identically zero, so orderings inside the excluded region
/// carry no content — a family whose low signals are fully excluded is still
/// regular. Grid points where `phi` is not evaluable (vanishing density in a
/// generic family) are skipped; monotonicity is enforced between consecutive
/// evaluable points.
pub fn regularity_check(
    field: &VirtualValueField,
    theta_grid: &Grid,
    v_grid: &Grid,
    slack: f64,
) -> Diagnostic {
    let phi =
        |theta: f64, v: f64| field.dynamic(theta, v).ok().map(|p| p.max(0.0));
    regularity_check_fn(phi, theta_grid, v_grid, slack)
}

/// Grid monotonicity audit for an arbitrary partial field; `None` marks a
/// point where the field is undefined.
pub fn regularity_check_fn(
    phi: impl Fn(f64, f64) -> Option<f64>,
    theta_grid: &Grid,
    v_grid: &Grid,
    slack: f64,
) -> Diagnostic {
    let thetas = theta_grid.points();
    let vs = v_grid.points();
    let values: Vec<Vec<Option<f64>>> = thetas
        .iter()
        .map(|&t| vs.iter().map(|&v| phi(t, v)).collect())
        .collect();
    let mut violations = Vec::new();
    // Along the signal at fixed value.
    for (j, &v) in vs.iter().enumerate() {
        let mut prev: Option<f64> = None;
        for (i, &theta) in thetas.iter().enumerate() {
            if let Some(cur) = values[i][j] {
                if let Some(p) = prev {
                    let drop = p - cur - slack;
                    if drop > 0.0 {
                        violations.push(Violation {
                            theta,
                            v: Some(v),
                            magnitude: drop,
                        });
                    }
                }
                prev = Some(cur);
            }
        }
    }
    // Along the value at fixed signal.
    for (i, &theta) in thetas.iter().enumerate() {
        let mut prev: Option<f64> = None;
        for (j, &v) in vs.iter().enumerate() {
            if let Some(cur) = values[i][j] {
                if let Some(p) = prev {
                    let drop = p - cur - slack;
                    if drop > 0.0 {
                        violations.push(Violation {
                            theta,
                            v: Some(v),
                            magnitude: drop,
                        });
                    }
                }
                prev = Some(cur);
            }
        }
    }
    Diagnostic::from_violations("regularity", slack, violations)
}

/// Checks the monotone-hazard property of the signal: `(1 - F) / f`
/// nonincreasing on the grid within `slack`. A vanishing density is
/// reported as a violation of unbounded magnitude.
pub fn mhr_check(signal: &SignalDistribution, theta_grid: &Grid, slack: f64) -> Diagnostic {
    let mut violations = Vec::new();
    let mut prev: Option<f64> = None;
    for theta in theta_grid.iter() {
        match signal.inverse_hazard(theta) {
            Ok(h) => {
                if let Some(p) = prev {
                    let rise = h - p - slack;
                    if rise > 0.0 {
                        violations.push(Violation {
                            theta,
                            v: None,
                            magnitude: rise,
                        });
                    }
                }
                prev = Some(h);
            }
            Err(_) => violations.push(Violation {
                theta,
                v: None,
                magnitude: f64::MAX,
            }),
        }
    }
    Diagnostic::from_violations("monotone_hazard", slack, violations)
}
