//! First-period signal distributions.

use std::fmt;

use crate::error::{Error, Result};

type ScalarFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Distribution `F` of the buyer's private signal on a compact interval.
pub struct SignalDistribution {
    lo: f64,
    hi: f64,
    cdf: ScalarFn,
    pdf: ScalarFn,
}

impl fmt::Debug for SignalDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SignalDistribution")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .finish_non_exhaustive()
    }
}

impl SignalDistribution {
    /// Wraps explicit distribution callables on `[lo, hi]`.
    pub fn from_fns(
        lo: f64,
        hi: f64,
        cdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        pdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidDomain(format!(
                "signal support must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(SignalDistribution {
            lo,
            hi,
            cdf: Box::new(cdf),
            pdf: Box::new(pdf),
        })
    }

    /// Uniform signal on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let width = hi - lo;
        Self::from_fns(
            lo,
            hi,
            move |t| ((t - lo) / width).clamp(0.0, 1.0),
            move |t| if (lo..=hi).contains(&t) { 1.0 / width } else { 0.0 },
        )
    }

    /// Mixture of uniform components `(lo, hi, weight)`. Weights are
    /// normalized; the support is the hull of the component supports.
    /// Overlapping components are the standard way to produce a bimodal
    /// signal whose hazard rate is not monotone.
    pub fn uniform_mixture(components: &[(f64, f64, f64)]) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidDomain("mixture needs at least one component".into()));
        }
        for &(lo, hi, w) in components {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidDomain(format!(
                    "mixture component must satisfy lo < hi, got [{lo}, {hi}]"
                )));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidDomain(format!(
                    "mixture weight must be positive, got {w}"
                )));
            }
        }
        let total: f64 = components.iter().map(|c| c.2).sum();
        let parts: Vec<(f64, f64, f64)> =
            components.iter().map(|&(lo, hi, w)| (lo, hi, w / total)).collect();
        let lo = parts.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        let hi = parts.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        let cdf_parts = parts.clone();
        Self::from_fns(
            lo,
            hi,
            move |t| {
                cdf_parts
                    .iter()
                    .map(|&(a, b, w)| w * ((t - a) / (b - a)).clamp(0.0, 1.0))
                    .sum()
            },
            move |t| {
                parts
                    .iter()
                    .map(|&(a, b, w)| if (a..=b).contains(&t) { w / (b - a) } else { 0.0 })
                    .sum()
            },
        )
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn cdf(&self, theta: f64) -> f64 {
        (self.cdf)(theta)
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        (self.pdf)(theta)
    }

    /// The inverse hazard `(1 - F(theta)) / f(theta)`, the information-rent
    /// weight in the dynamic virtual value. Errors where the density
    /// vanishes.
    pub fn inverse_hazard(&self, theta: f64) -> Result<f64> {
        let f = self.pdf(theta);
        if f <= 0.0 {
            return Err(Error::UndefinedSignalDensity { theta });
        }
        Ok((1.0 - self.cdf(theta)) / f)
    }
}
