//! Fixed-order Gauss-Legendre quadrature, optionally composed over
//! subintervals so integrands with isolated kinks can be split at the kink.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Order of the shared default rule. 64 points integrate polynomials up to
/// degree 127 exactly, far beyond what the smooth integrands here require.
pub const DEFAULT_ORDER: usize = 64;

/// A Gauss-Legendre rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Computes nodes and weights by Newton iteration on the Legendre
    /// polynomial `P_n`, seeded with Chebyshev-like estimates. Nodes are
    /// accurate to machine precision for the orders used here.
    pub fn gauss_legendre(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidDomain("quadrature order must be positive".into()));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() <= 1e-15 {
                    break;
                }
            }
            let (_, deriv) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
            // cos() ordering yields the positive nodes first; mirror them.
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Ok(QuadratureRule { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0; // P_0
    let mut p = x; // P_1
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let dp = (n as f64) * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// The shared default-order rule.
pub fn default_rule() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| {
        QuadratureRule::gauss_legendre(DEFAULT_ORDER).expect("default order is positive")
    })
}

/// Integrates `f` over `[lo, hi]` with a single application of `rule`.
/// Requires `lo <= hi`; a zero-width interval integrates to zero. Non-finite
/// integrand values are reported with the offending abscissa.
pub fn integrate<F>(f: F, lo: f64, hi: f64, rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidDomain(format!(
            "integration bounds must be finite, got [{lo}, {hi}]"
        )));
    }
    if lo > hi {
        return Err(Error::InvalidDomain(format!(
            "integration bounds must satisfy lo <= hi, got [{lo}, {hi}]"
        )));
    }
    if lo == hi {
        return Ok(0.0);
    }
    let mid = 0.5 * (lo + hi);
    let scale = 0.5 * (hi - lo);
    let mut acc = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let at = mid + scale * x;
        let y = f(at);
        if !y.is_finite() {
            return Err(Error::NonFiniteEvaluation { x: at });
        }
        acc += w * y;
    }
    Ok(scale * acc)
}

/// Integrates `f` over `[lo, hi]`, splitting the interval at each interior
/// breakpoint (kinks of the integrand). Breakpoints outside `(lo, hi)` are
/// ignored; they need not be sorted.
pub fn integrate_with_breaks<F>(f: F, lo: f64, hi: f64, breaks: &[f64], rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("breakpoints are finite"));
    cuts.dedup();
    let mut acc = 0.0;
    let mut left = lo;
    for cut in cuts {
        acc += integrate(&f, left, cut, rule)?;
        left = cut;
    }
    acc += integrate(&f, left, hi, rule)?;
    Ok(acc)
}
