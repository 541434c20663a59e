//! Conditional value distributions `G(v | theta)`.

use std::fmt;

use crate::error::{Error, Result};

type ScalarFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A family of conditional distributions of the realized value `v` given the
/// signal `theta`.
///
/// Implementations must be total functions of `(v, theta)`: outside a type's
/// support the cdf saturates at 0 or 1 and the density vanishes. Families
/// with a multiplicative decomposition `v = theta * z` expose it through
/// [`ValueFamily::shock`]; the solver uses that structure to extend the
/// virtual value analytically beyond a type's support.
pub trait ValueFamily: Send + Sync {
    /// `G(v | theta)`.
    fn cdf(&self, v: f64, theta: f64) -> f64;
    /// `g(v | theta) = dG/dv`.
    fn pdf(&self, v: f64, theta: f64) -> f64;
    /// `dG(v | theta) / dtheta`.
    fn theta_partial(&self, v: f64, theta: f64) -> f64;
    /// Lower support bound of `v` given `theta`.
    fn support_lo(&self, theta: f64) -> f64;
    /// Upper support bound of `v` given `theta`.
    fn support_hi(&self, theta: f64) -> f64;
    /// Smallest value in any type's support.
    fn global_lo(&self) -> f64;
    /// Largest value in any type's support.
    fn global_hi(&self) -> f64;
    /// The shock distribution when the family is `v = theta * z`.
    fn shock(&self) -> Option<&ShockDistribution> {
        None
    }
}

/// Distribution `H` of a scale-free shock `z` on a compact interval.
pub struct ShockDistribution {
    lo: f64,
    hi: f64,
    cdf: ScalarFn,
    pdf: ScalarFn,
}

impl fmt::Debug for ShockDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ShockDistribution")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .finish_non_exhaustive()
    }
}

impl ShockDistribution {
    pub fn from_fns(
        lo: f64,
        hi: f64,
        cdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        pdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidDomain(format!(
                "shock support must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        if lo < 0.0 {
            return Err(Error::InvalidDomain(format!(
                "shock support must be non-negative, got lo = {lo}"
            )));
        }
        Ok(ShockDistribution {
            lo,
            hi,
            cdf: Box::new(cdf),
            pdf: Box::new(pdf),
        })
    }

    /// Uniform shock on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let width = hi - lo;
        Self::from_fns(
            lo,
            hi,
            move |z| ((z - lo) / width).clamp(0.0, 1.0),
            move |z| if (lo..=hi).contains(&z) { 1.0 / width } else { 0.0 },
        )
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn cdf(&self, z: f64) -> f64 {
        (self.cdf)(z)
    }

    pub fn pdf(&self, z: f64) -> f64 {
        (self.pdf)(z)
    }
}

/// Multiplicative family `v = theta * z` with `z ~ H` independent of the
/// signal. Satisfies first-order stochastic dominance in `theta` by
/// construction.
#[derive(Debug)]
pub struct MultiplicativeFamily {
    shock: ShockDistribution,
    theta_lo: f64,
    theta_hi: f64,
}

impl MultiplicativeFamily {
    /// `theta` must range over a positive interval so the shock `z = v /
    /// theta` is well defined.
    pub fn new(shock: ShockDistribution, theta_lo: f64, theta_hi: f64) -> Result<Self> {
        if !(theta_lo > 0.0 && theta_lo < theta_hi && theta_hi.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "multiplicative family needs 0 < theta_lo < theta_hi, got [{theta_lo}, {theta_hi}]"
            )));
        }
        Ok(MultiplicativeFamily {
            shock,
            theta_lo,
            theta_hi,
        })
    }
}

impl ValueFamily for MultiplicativeFamily {
    fn cdf(&self, v: f64, theta: f64) -> f64 {
        self.shock.cdf(v / theta)
    }

    fn pdf(&self, v: f64, theta: f64) -> f64 {
        self.shock.pdf(v / theta) / theta
    }

    fn theta_partial(&self, v: f64, theta: f64) -> f64 {
        -(v / (theta * theta)) * self.shock.pdf(v / theta)
    }

    fn support_lo(&self, theta: f64) -> f64 {
        theta * self.shock.lo
    }

    fn support_hi(&self, theta: f64) -> f64 {
        theta * self.shock.hi
    }

    fn global_lo(&self) -> f64 {
        self.theta_lo * self.shock.lo
    }

    fn global_hi(&self) -> f64 {
        self.theta_hi * self.shock.hi
    }

    fn shock(&self) -> Option<&ShockDistribution> {
        Some(&self.shock)
    }
}

/// Diagnostic counterexample family `v = z / theta`: a higher signal shifts
/// the value distribution *down*, so first-order stochastic dominance fails
/// by construction. Useful for exercising the dominance check.
#[derive(Debug)]
pub struct InverseScaleFamily {
    shock: ShockDistribution,
    theta_lo: f64,
    theta_hi: f64,
}

impl InverseScaleFamily {
    pub fn new(shock: ShockDistribution, theta_lo: f64, theta_hi: f64) -> Result<Self> {
        if !(theta_lo > 0.0 && theta_lo < theta_hi && theta_hi.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "inverse-scale family needs 0 < theta_lo < theta_hi, got [{theta_lo}, {theta_hi}]"
            )));
        }
        Ok(InverseScaleFamily {
            shock,
            theta_lo,
            theta_hi,
        })
    }
}

impl ValueFamily for InverseScaleFamily {
    fn cdf(&self, v: f64, theta: f64) -> f64 {
        self.shock.cdf(v * theta)
    }

    fn pdf(&self, v: f64, theta: f64) -> f64 {
        theta * self.shock.pdf(v * theta)
    }

    fn theta_partial(&self, v: f64, theta: f64) -> f64 {
        v * self.shock.pdf(v * theta)
    }

    fn support_lo(&self, theta: f64) -> f64 {
        self.shock.lo / theta
    }

    fn support_hi(&self, theta: f64) -> f64 {
        self.shock.hi / theta
    }

    fn global_lo(&self) -> f64 {
        self.shock.lo / self.theta_hi
    }

    fn global_hi(&self) -> f64 {
        self.shock.hi / self.theta_lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn multiplicative_matches_shock_identities_on_a_grid() {
        let fam =
            MultiplicativeFamily::new(ShockDistribution::uniform(0.5, 1.0).unwrap(), 1.0, 2.0)
                .unwrap();
        let shock = ShockDistribution::uniform(0.5, 1.0).unwrap();
        for i in 0..50 {
            let theta = 1.0 + (i as f64) / 49.0;
            for j in 0..50 {
                let v = 0.5 + 1.5 * (j as f64) / 49.0;
                let z = v / theta;
                assert_abs_diff_eq!(fam.cdf(v, theta), shock.cdf(z), epsilon = 1e-10);
                assert_abs_diff_eq!(fam.pdf(v, theta), shock.pdf(z) / theta, epsilon = 1e-10);
                assert_abs_diff_eq!(
                    fam.theta_partial(v, theta),
                    -(v / (theta * theta)) * shock.pdf(z),
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn reference_family_values() {
        let fam =
            MultiplicativeFamily::new(ShockDistribution::uniform(0.5, 1.0).unwrap(), 1.0, 2.0)
                .unwrap();
        // G(v | theta) = 2 v / theta - 1 inside the support.
        assert_abs_diff_eq!(fam.cdf(1.5, 2.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(fam.pdf(1.5, 2.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fam.theta_partial(1.5, 2.0), -0.75, epsilon = 1e-15);
        assert_eq!(fam.support_lo(1.5), 0.75);
        assert_eq!(fam.support_hi(1.5), 1.5);
        assert_eq!(fam.global_lo(), 0.5);
        assert_eq!(fam.global_hi(), 2.0);
        assert!(fam.shock().is_some());
    }

    #[test]
    fn cdf_saturates_outside_support() {
        let fam =
            MultiplicativeFamily::new(ShockDistribution::uniform(0.5, 1.0).unwrap(), 1.0, 2.0)
                .unwrap();
        assert_eq!(fam.cdf(0.1, 2.0), 0.0);
        assert_eq!(fam.cdf(3.0, 1.2), 1.0);
        assert_eq!(fam.pdf(0.1, 2.0), 0.0);
        assert_eq!(fam.theta_partial(0.1, 2.0), 0.0);
    }

    #[test]
    fn inverse_scale_family_shifts_down_in_theta() {
        let fam =
            InverseScaleFamily::new(ShockDistribution::uniform(0.5, 1.0).unwrap(), 1.0, 2.0)
                .unwrap();
        // At any interior v, the cdf rises with theta: dominance fails.
        assert!(fam.cdf(0.6, 2.0) > fam.cdf(0.6, 1.0));
        assert_eq!(fam.global_lo(), 0.25);
        assert_eq!(fam.global_hi(), 1.0);
        assert!(fam.shock().is_none());
    }

    #[test]
    fn constructors_reject_non_positive_theta() {
        let shock = ShockDistribution::uniform(0.5, 1.0).unwrap();
        assert!(MultiplicativeFamily::new(shock, 0.0, 2.0).is_err());
        let shock = ShockDistribution::uniform(0.5, 1.0).unwrap();
        assert!(InverseScaleFamily::new(shock, -1.0, 2.0).is_err());
        assert!(ShockDistribution::uniform(-0.5, 1.0).is_err());
    }
}
