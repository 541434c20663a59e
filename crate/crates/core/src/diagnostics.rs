//! Lightweight diagnostic reports for model-assumption checks.
//!
//! A [`Diagnostic`] records every grid point at which a property failed,
//! with the magnitude of the violation, so a failing check can be traced to
//! coordinates rather than just a boolean.

/// One violated inequality at a grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub theta: f64,
    /// Second coordinate when the check runs over a rectangle.
    pub v: Option<f64>,
    /// How far past the allowed slack the inequality was violated.
    pub magnitude: f64,
}

/// Outcome of a property check on a grid.
#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub name: &'static str,
    pub pass: bool,
    /// Slack that was allowed before declaring a violation.
    pub slack: f64,
    pub violations: Vec<Violation>,
}

impl Diagnostic {
    pub fn passing(name: &'static str, slack: f64) -> Self {
        Diagnostic {
            name,
            pass: true,
            slack,
            violations: Vec::new(),
        }
    }

    pub fn from_violations(name: &'static str, slack: f64, violations: Vec<Violation>) -> Self {
        Diagnostic {
            name,
            pass: violations.is_empty(),
            slack,
            violations,
        }
    }

    /// The largest violation, if any.
    pub fn worst(&self) -> Option<&Violation> {
        self.violations
            .iter()
            .max_by(|a, b| a.magnitude.partial_cmp(&b.magnitude).expect("finite magnitudes"))
    }
}
