//! Bracketed scalar root finding: bisection with secant acceleration.

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

/// Finds a root of `f` on `[lo, hi]`.
///
/// Requires a sign change (or an exact zero) at the bracket endpoints. Each
/// iteration tries a secant step from the current bracket; the step is used
/// only when it falls inside the bracket, and any step that fails to shrink
/// the bracket substantially forces a bisection on the next iteration, so the
/// bracket width decays geometrically. Terminates when the width drops below
/// `tol` (absolute, in the argument).
pub fn find_root<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidDomain(format!(
            "root bracket must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidDomain(format!("tolerance must be positive, got {tol}")));
    }
    let mut a = lo;
    let mut b = hi;
    let mut fa = eval(&f, a)?;
    let mut fb = eval(&f, b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket { lo, hi, f_lo: fa, f_hi: fb });
    }
    let mut force_bisection = false;
    for _ in 0..MAX_ITER {
        let width = b - a;
        if width <= tol {
            return Ok(0.5 * (a + b));
        }
        let secant = b - fb * (b - a) / (fb - fa);
        let margin = 0.01 * width;
        let x = if !force_bisection && secant.is_finite() && secant > a + margin && secant < b - margin
        {
            secant
        } else {
            0.5 * (a + b)
        };
        let fx = eval(&f, x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        // A step that kept more than 3/4 of the bracket was too timid;
        // bisect next time to guarantee geometric shrinkage.
        force_bisection = (b - a) > 0.75 * width;
    }
    Err(Error::NoConvergence { max_iter: MAX_ITER })
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFiniteEvaluation { x })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn linear_root() {
        let r = find_root(|x| x - 1.0, 0.0, 3.0, 1e-10).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn cutoff_equation_of_reference_model() {
        // 2(t - 1)/t = 1/2 has the root t = 4/3.
        let r = find_root(|t| 2.0 * (t - 1.0) / t - 0.5, 1.0, 2.0, 1e-12).unwrap();
        assert_abs_diff_eq!(r, 4.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn missing_bracket_is_an_error() {
        let err = find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-10);
        assert!(matches!(err, Err(Error::NoBracket { .. })));
    }

    #[test]
    fn exact_zero_at_endpoint_is_returned() {
        let r = find_root(|x| x, 0.0, 1.0, 1e-10).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn stiff_function_still_converges() {
        // A root with a nearly flat flank exercises the bisection fallback.
        let f = |x: f64| (x - 0.9).powi(9);
        let r = find_root(f, 0.0, 1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(r, 0.9, epsilon = 1e-6);
    }

    #[test]
    fn non_finite_evaluation_is_reported() {
        let err = find_root(|x| 1.0 / x, -1.0, 1.0, 1e-10);
        assert!(matches!(err, Err(Error::NonFiniteEvaluation { .. })));
    }
}
