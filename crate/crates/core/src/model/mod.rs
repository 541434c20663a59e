//! Economic primitives: preferences, technology, and the two-stage
//! information structure.
//!
//! The buyer's gross utility from quantity `q` at realized value `v` is
//! `v * q^alpha` with `alpha` in (0, 1); the seller's cost is `c * q`. The
//! buyer first draws a private signal `theta ~ F` (see
//! [`SignalDistribution`]) and later a value `v ~ G(. | theta)` (see
//! [`ValueFamily`]).

mod family;
mod signal;
mod tabulated;

pub use family::{InverseScaleFamily, MultiplicativeFamily, ShockDistribution, ValueFamily};
pub use signal::SignalDistribution;
pub use tabulated::TabulatedFamily;

use std::sync::Arc;

use crate::diagnostics::{Diagnostic, Violation};
use crate::error::{Error, Result};
use crate::numerics::Grid;

/// Preference and technology parameters, plus optional frictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    /// Curvature of the buyer's value `v * q^alpha`; strictly between 0 and 1.
    pub alpha: f64,
    /// Seller's constant marginal cost; strictly positive.
    pub cost: f64,
    /// Proportional cost attached to positive upfront payments; zero when
    /// absent.
    pub gamma: f64,
    /// Per-unit price of the outside spot market, when one exists. Must
    /// exceed `cost`.
    pub spot_price: Option<f64>,
}

impl Environment {
    pub fn new(alpha: f64, cost: f64) -> Result<Self> {
        let env = Environment {
            alpha,
            cost,
            gamma: 0.0,
            spot_price: None,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    pub fn with_spot_price(mut self, spot_price: f64) -> Result<Self> {
        self.spot_price = Some(spot_price);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidDomain(format!(
                "alpha must lie strictly between 0 and 1, got {}",
                self.alpha
            )));
        }
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "cost must be positive, got {}",
                self.cost
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "gamma must be non-negative, got {}",
                self.gamma
            )));
        }
        if let Some(p) = self.spot_price {
            if !(p > self.cost && p.is_finite()) {
                return Err(Error::InvalidDomain(format!(
                    "spot price must exceed cost {}, got {p}",
                    self.cost
                )));
            }
        }
        Ok(())
    }
}

/// A complete model: environment, signal distribution, and value family.
#[derive(Clone)]
pub struct Model {
    pub env: Environment,
    pub signal: Arc<SignalDistribution>,
    pub family: Arc<dyn ValueFamily>,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("env", &self.env)
            .field("theta", &(self.signal.lo(), self.signal.hi()))
            .field("v", &(self.family.global_lo(), self.family.global_hi()))
            .finish()
    }
}

impl Model {
    pub fn new(
        env: Environment,
        signal: SignalDistribution,
        family: Arc<dyn ValueFamily>,
    ) -> Result<Self> {
        env.validate()?;
        let (lo, hi) = (family.global_lo(), family.global_hi());
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidDomain(format!(
                "family value hull must be a finite interval, got [{lo}, {hi}]"
            )));
        }
        Ok(Model {
            env,
            signal: Arc::new(signal),
            family,
        })
    }

    /// The uniform reference model: `theta ~ U[1, 2]`, `v = theta * z` with
    /// `z ~ U[1/2, 1]`, `alpha = 1/2`, unit cost.
    pub fn example1() -> Self {
        let env = Environment::new(0.5, 1.0).expect("reference parameters are valid");
        let signal = SignalDistribution::uniform(1.0, 2.0).expect("valid support");
        let shock = ShockDistribution::uniform(0.5, 1.0).expect("valid support");
        let family = MultiplicativeFamily::new(shock, 1.0, 2.0).expect("valid support");
        Model::new(env, signal, Arc::new(family)).expect("reference model is valid")
    }

    /// A multiplicative model with a uniform signal and uniform shock.
    pub fn uniform_multiplicative(
        env: Environment,
        theta_lo: f64,
        theta_hi: f64,
        z_lo: f64,
        z_hi: f64,
    ) -> Result<Self> {
        let signal = SignalDistribution::uniform(theta_lo, theta_hi)?;
        let shock = ShockDistribution::uniform(z_lo, z_hi)?;
        let family = MultiplicativeFamily::new(shock, theta_lo, theta_hi)?;
        Model::new(env, signal, Arc::new(family))
    }

    pub fn theta_bounds(&self) -> (f64, f64) {
        (self.signal.lo(), self.signal.hi())
    }

    pub fn value_bounds(&self) -> (f64, f64) {
        (self.family.global_lo(), self.family.global_hi())
    }

    pub fn is_multiplicative(&self) -> bool {
        self.family.shock().is_some()
    }
}

/// Checks first-order stochastic dominance of the value family in the
/// signal: `G(v | theta')` must not exceed `G(v | theta)` for `theta' >
/// theta`, up to `slack`, at every grid point. Violations are reported with
/// coordinates (the higher signal of the offending pair).
pub fn fosd_check(
    family: &dyn ValueFamily,
    theta_grid: &Grid,
    v_grid: &Grid,
    slack: f64,
) -> Diagnostic {
    let mut violations = Vec::new();
    for v in v_grid.iter() {
        for pair in theta_grid.points().windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let excess = family.cdf(v, hi) - family.cdf(v, lo) - slack;
            if excess > 0.0 {
                violations.push(Violation {
                    theta: hi,
                    v: Some(v),
                    magnitude: excess,
                });
            }
        }
    }
    Diagnostic::from_violations("stochastic_dominance", slack, violations)
}

/// Quantity and payoff of a buyer with value `v` purchasing at a constant
/// unit price on a spot market: `argmax_q v q^alpha - price * q` and its
/// value. Requires a positive price and `alpha` in (0, 1); non-positive `v`
/// buys nothing.
pub fn spot_best_response(v: f64, price: f64, alpha: f64) -> (f64, f64) {
    assert!(price > 0.0, "spot price must be positive, got {price}");
    assert!(
        alpha > 0.0 && alpha < 1.0,
        "alpha must lie strictly between 0 and 1, got {alpha}"
    );
    if v <= 0.0 {
        return (0.0, 0.0);
    }
    let q = (alpha * v / price).powf(1.0 / (1.0 - alpha));
    let payoff = (1.0 - alpha) * (alpha / price).powf(alpha / (1.0 - alpha)) * v.powf(1.0 / (1.0 - alpha));
    (q, payoff)
}
