//! Numerical verification of the solved mechanism's defining properties.
//!
//! Every property the construction is supposed to deliver is re-checked
//! here by brute force, independently of how the solution was computed:
//!
//! * signal-stage truthfulness (no profitable first-stage misreport,
//!   allowing optimal second-stage behavior after the lie);
//! * value-stage truthfulness type by type;
//! * participation (nonnegative interim utility, or utility at least the
//!   spot payoff under the spot extension), including where it binds;
//! * revenue equivalence of the direct mechanism and both menu forms;
//! * monotonicity of upfront payments and spend floors;
//! * the allocation against a grid-search maximizer of the virtual surplus.
//!
//! Results are plain data ([`CheckResult`]) that serialize to a stable JSON
//! report.

use rayon::prelude::*;
use serde::Serialize;

use crate::contracts::{CommittedSpendContract, TwoPartTariff};
use crate::diagnostics::Diagnostic;
use crate::error::{Error, Result};
use crate::frictions::SpotMarketSolution;
use crate::mechanism::DirectMechanism;
use crate::numerics::{default_rule, integrate_with_breaks};

/// Where a check's worst deviation sits.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Site {
    /// A first-stage misreport: true signal and reported signal.
    SignalReport { theta: f64, theta_report: f64 },
    /// A second-stage misreport at a fixed signal.
    ValueReport { theta: f64, v: f64, v_report: f64 },
    /// A point of the signal-value rectangle.
    Point { theta: f64, v: f64 },
    /// A signal alone.
    Signal { theta: f64 },
}

/// Outcome of one verification check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub pass: bool,
    /// Largest amount by which the checked inequality failed. Negative
    /// values report the margin by which the check held.
    pub worst_violation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at: Option<Site>,
    pub tolerance: f64,
    /// Signals where the inequality holds with equality (within tolerance).
    #[serde(skip)]
    pub binding: Vec<f64>,
}

impl CheckResult {
    pub fn new(
        check: impl Into<String>,
        tolerance: f64,
        worst_violation: f64,
        at: Option<Site>,
    ) -> Self {
        CheckResult {
            check: check.into(),
            pass: worst_violation <= tolerance,
            worst_violation,
            at,
            tolerance,
            binding: Vec::new(),
        }
    }

    pub fn with_binding(mut self, binding: Vec<f64>) -> Self {
        self.binding = binding;
        self
    }
}

/// Uniform view of a model-assumption [`Diagnostic`] as a check result, so
/// reports mix assumption audits and mechanism audits.
pub fn check_from_diagnostic(diag: &Diagnostic) -> CheckResult {
    let at = diag.worst().map(|w| match w.v {
        Some(v) => Site::Point { theta: w.theta, v },
        None => Site::Signal { theta: w.theta },
    });
    CheckResult {
        check: diag.name.to_string(),
        pass: diag.pass,
        worst_violation: diag.worst().map(|w| w.magnitude).unwrap_or(0.0),
        at,
        tolerance: diag.slack,
        binding: Vec::new(),
    }
}

/// All checks of one verification run.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn new() -> Self {
        VerificationReport { checks: Vec::new() }
    }

    pub fn push(&mut self, check: CheckResult) {
        self.checks.push(check);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Stable, human-readable JSON (fixed field order, trailing newline).
    pub fn to_json(&self) -> Result<String> {
        let body = serde_json::to_string_pretty(self)?;
        Ok(format!("{body}\n"))
    }
}

impl Default for VerificationReport {
    fn default() -> Self {
        Self::new()
    }
}

/// Interim payoffs of every (true signal, reported signal) pair:
/// `w(theta, report)` is the expected utility of holding signal `theta`,
/// reporting `report`, and then behaving optimally. Truthful play sits on
/// the diagonal when the two axes coincide.
#[derive(Debug, Clone)]
pub struct DeviationMatrix {
    thetas: Vec<f64>,
    reports: Vec<f64>,
    /// Row-major: `values[i * reports.len() + j] = w(thetas[i], reports[j])`.
    values: Vec<f64>,
}

impl DeviationMatrix {
    pub fn new(thetas: Vec<f64>, reports: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() || reports.is_empty() {
            return Err(Error::InvalidGrid(
                "deviation matrices need at least one signal and one report".into(),
            ));
        }
        if !thetas.windows(2).all(|w| w[1] > w[0])
            || !reports.windows(2).all(|w| w[1] > w[0])
        {
            return Err(Error::InvalidGrid(
                "deviation matrix axes must increase strictly".into(),
            ));
        }
        if values.len() != thetas.len() * reports.len() {
            return Err(Error::InvalidGrid(format!(
                "deviation matrix needs {} values, got {}",
                thetas.len() * reports.len(),
                values.len()
            )));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid(
                "deviation matrix values must be finite".into(),
            ));
        }
        Ok(DeviationMatrix {
            thetas,
            reports,
            values,
        })
    }

    /// Computes the matrix from a solved mechanism. A deviator keeps its
    /// true value distribution but faces the reported type's menu; optimal
    /// second-stage behavior makes its ex-post utility the reported type's
    /// utility envelope evaluated at the true value. Rows run in parallel.
    pub fn compute(
        mech: &DirectMechanism,
        thetas: &[f64],
        reports: &[f64],
    ) -> Result<Self> {
        let rows: Vec<Vec<f64>> = thetas
            .par_iter()
            .map(|&theta| -> Result<Vec<f64>> {
                let (v_lo, v_hi) = mech.value_support(theta);
                reports
                    .iter()
                    .map(|&report| -> Result<f64> {
                        let breaks: Vec<f64> =
                            mech.exclusion_value(report)?.into_iter().collect();
                        let rent = integrate_with_breaks(
                            |v| {
                                mech.cumulative_rent(report, v).unwrap_or(f64::NAN)
                                    * mech.model().family.pdf(v, theta)
                            },
                            v_lo,
                            v_hi,
                            &breaks,
                            default_rule(),
                        )?;
                        Ok(mech.base_utility(report) + rent)
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?;
        DeviationMatrix::new(
            thetas.to_vec(),
            reports.to_vec(),
            rows.into_iter().flatten().collect(),
        )
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn reports(&self) -> &[f64] {
        &self.reports
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.reports.len() + j]
    }
}

/// First-stage truthfulness: on a square deviation matrix, no row may beat
/// its diagonal. The worst violation is the largest `w(theta, report) -
/// w(theta, theta)` across all off-diagonal pairs.
pub fn check_ic0(matrix: &DeviationMatrix, tol: f64) -> Result<CheckResult> {
    if matrix.thetas.len() != matrix.reports.len()
        || matrix
            .thetas
            .iter()
            .zip(&matrix.reports)
            .any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::InvalidGrid(
            "first-stage truthfulness needs a square matrix with matching axes".into(),
        ));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for (i, &theta) in matrix.thetas.iter().enumerate() {
        let truthful = matrix.at(i, i);
        for (j, &report) in matrix.reports.iter().enumerate() {
            let violation = matrix.at(i, j) - truthful;
            if violation > worst {
                worst = violation;
                at = Some(Site::SignalReport {
                    theta,
                    theta_report: report,
                });
            }
        }
    }
    Ok(CheckResult::new("ic0", tol, worst, at))
}

/// Second-stage truthfulness at a fixed signal, from raw slices: value
/// nodes, `q^alpha` at each node, and transfers at each node. The deviation
/// payoff of holding `v` and reporting `v'` is `v q^alpha(v') - t(v')`.
pub fn check_ic1_slices(
    theta: f64,
    vs: &[f64],
    q_pow: &[f64],
    transfers: &[f64],
    tol: f64,
) -> Result<CheckResult> {
    if vs.is_empty() || vs.len() != q_pow.len() || vs.len() != transfers.len() {
        return Err(Error::InvalidGrid(format!(
            "value-stage slices disagree: {} values, {} allocations, {} transfers",
            vs.len(),
            q_pow.len(),
            transfers.len()
        )));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for (i, &v) in vs.iter().enumerate() {
        let truthful = v * q_pow[i] - transfers[i];
        for (j, &report) in vs.iter().enumerate() {
            let violation = (v * q_pow[j] - transfers[j]) - truthful;
            if violation > worst {
                worst = violation;
                at = Some(Site::ValueReport {
                    theta,
                    v,
                    v_report: report,
                });
            }
        }
    }
    Ok(CheckResult::new("ic1", tol, worst, at))
}

/// Second-stage truthfulness of a solved mechanism at signal `theta`,
/// sampled on `v_points` evenly spaced values over the conditional support.
pub fn check_ic1(
    mech: &DirectMechanism,
    theta: f64,
    v_points: usize,
    tol: f64,
) -> Result<CheckResult> {
    if v_points < 2 {
        return Err(Error::InvalidGrid(
            "value-stage truthfulness needs at least two sample values".into(),
        ));
    }
    let (lo, hi) = mech.value_support(theta);
    let mut vs = Vec::with_capacity(v_points);
    let mut q_pow = Vec::with_capacity(v_points);
    let mut transfers = Vec::with_capacity(v_points);
    for j in 0..v_points {
        let v = lo + (hi - lo) * j as f64 / (v_points - 1) as f64;
        vs.push(v);
        q_pow.push(mech.quantity_pow(theta, v)?);
        transfers.push(mech.transfer(theta, v)?);
    }
    check_ic1_slices(theta, &vs, &q_pow, &transfers, tol)
}

/// Single-crossing audit of a deviation matrix: the gain from reporting a
/// higher signal over a lower one must grow with the true signal. Violations
/// indicate the menu cannot be truthfully implemented by *any* transfers.
pub fn single_crossing_audit(matrix: &DeviationMatrix, slack: f64) -> CheckResult {
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for j in 0..matrix.reports.len() {
        for k in (j + 1)..matrix.reports.len() {
            let mut prev: Option<f64> = None;
            for (i, &theta) in matrix.thetas.iter().enumerate() {
                let gain = matrix.at(i, k) - matrix.at(i, j);
                if let Some(p) = prev {
                    let violation = p - gain;
                    if violation > worst {
                        worst = violation;
                        at = Some(Site::SignalReport {
                            theta,
                            theta_report: matrix.reports[k],
                        });
                    }
                }
                prev = Some(gain);
            }
        }
    }
    if worst == f64::NEG_INFINITY {
        worst = 0.0;
    }
    CheckResult::new("single_crossing", slack, worst, at)
}

/// Interim participation: expected utility must be nonnegative at every
/// sampled signal. Signals where it vanishes are reported as binding.
pub fn check_ir(mech: &DirectMechanism, thetas: &[f64], tol: f64) -> Result<CheckResult> {
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    let mut binding = Vec::new();
    for &theta in thetas {
        let u = mech.expected_utility(theta)?;
        let violation = -u;
        if violation > worst {
            worst = violation;
            at = Some(Site::Signal { theta });
        }
        if u.abs() <= tol {
            binding.push(theta);
        }
    }
    Ok(CheckResult::new("ir", tol, worst, at).with_binding(binding))
}

/// Participation against the spot outside option: the constrained contract
/// payoff must weakly beat full spot coverage at every sampled signal.
/// Binds exactly at the cutoff (and trivially below it, where the buyer is
/// on the spot market anyway — those signals are not reported as binding).
pub fn check_ir_spot(
    solution: &SpotMarketSolution<'_>,
    thetas: &[f64],
    tol: f64,
) -> Result<CheckResult> {
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    let mut binding = Vec::new();
    for &theta in thetas {
        let gap = solution.interim_contract_payoff(theta)? - solution.u_spot(theta)?;
        let violation = -gap;
        if violation > worst {
            worst = violation;
            at = Some(Site::Signal { theta });
        }
        // The cutoff itself is known only to root-finding accuracy, so use
        // a slack wider than the root tolerance when classifying signals.
        if theta >= solution.theta_star() - 1e-9 && gap.abs() <= tol {
            binding.push(theta);
        }
    }
    Ok(CheckResult::new("ir_spot", tol, worst, at).with_binding(binding))
}

/// Revenue equivalence of the three forms: at every signal node and every
/// generating value node, the direct transfer, the tariff total (upfront
/// plus usage), and the committed-schedule payment must agree. Pass the
/// same `v_points` used to build the menus so the samples hit the
/// schedules' own points.
pub fn check_revenue_equivalence(
    mech: &DirectMechanism,
    tariff: &TwoPartTariff,
    committed: &CommittedSpendContract,
    v_points: usize,
    tol: f64,
) -> Result<CheckResult> {
    let thetas = mech.theta_grid().points();
    if tariff.theta_grid() != thetas || committed.theta_grid() != thetas {
        return Err(Error::InvalidGrid(
            "menus were built on a different signal grid than the mechanism".into(),
        ));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for (i, &theta) in thetas.iter().enumerate() {
        let (v_lo, v_hi) = mech.value_support(theta);
        for j in 0..v_points {
            let v = v_lo + (v_hi - v_lo) * j as f64 / (v_points - 1) as f64;
            let q = mech.quantity(theta, v)?;
            let direct = mech.transfer(theta, v)?;
            let via_tariff = tariff.upfronts()[i] + tariff.schedule(i).price(q);
            let via_committed = committed.schedule(i).price(q);
            let gap = (via_tariff - direct)
                .abs()
                .max((via_committed - direct).abs());
            if gap > worst {
                worst = gap;
                at = Some(Site::Point { theta, v });
            }
        }
    }
    Ok(CheckResult::new("revenue_equivalence", tol, worst, at))
}

/// Monotonicity of a per-signal payment sequence (upfronts, spend floors,
/// interim utilities, ...): values must not decrease along the grid.
pub fn check_nondecreasing(
    name: impl Into<String>,
    thetas: &[f64],
    values: &[f64],
    slack: f64,
) -> CheckResult {
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for i in 1..values.len().min(thetas.len()) {
        let drop = values[i - 1] - values[i];
        if drop > worst {
            worst = drop;
            at = Some(Site::Signal { theta: thetas[i] });
        }
    }
    if worst == f64::NEG_INFINITY {
        worst = 0.0;
    }
    CheckResult::new(name, slack, worst, at)
}

/// Grid-search maximizer of the pointwise virtual surplus
/// `phi q^alpha - cost q` over `q_points` quantities up to `q_max`.
pub fn brute_force_quantity(
    phi: f64,
    alpha: f64,
    cost: f64,
    q_max: f64,
    q_points: usize,
) -> f64 {
    let mut best_q = 0.0;
    let mut best_val = 0.0; // q = 0 earns zero
    for k in 1..q_points {
        let q = q_max * k as f64 / (q_points - 1) as f64;
        let val = phi * q.powf(alpha) - cost * q;
        if val > best_val {
            best_val = val;
            best_q = q;
        }
    }
    best_q
}

/// Audits the closed-form allocation against the grid-search maximizer on
/// an `n_theta x n_v` sample of the type rectangle. The tolerance should be
/// a small multiple of the search spacing.
pub fn allocation_oracle_check(
    mech: &DirectMechanism,
    n_theta: usize,
    n_v: usize,
    q_points: usize,
    tol: f64,
) -> Result<CheckResult> {
    if n_theta < 2 || n_v < 2 || q_points < 2 {
        return Err(Error::InvalidGrid(
            "the allocation audit needs at least two samples per axis".into(),
        ));
    }
    let env = mech.model().env;
    let (t_lo, t_hi) = mech.model().theta_bounds();
    // The largest virtual value on the rectangle sits at the top corner
    // (monotonicity was enforced at solve time).
    let (_, v_top) = mech.value_support(t_hi);
    let q_cap = 1.5 * mech.quantity(t_hi, v_top)?.max(1e-6);
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for i in 0..n_theta {
        let theta = t_lo + (t_hi - t_lo) * i as f64 / (n_theta - 1) as f64;
        let (v_lo, v_hi) = mech.value_support(theta);
        for j in 0..n_v {
            let v = v_lo + (v_hi - v_lo) * j as f64 / (n_v - 1) as f64;
            let phi = mech.phi(theta, v)?;
            let brute = brute_force_quantity(phi, env.alpha, env.cost, q_cap, q_points);
            let gap = (brute - mech.quantity(theta, v)?).abs();
            if gap > worst {
                worst = gap;
                at = Some(Site::Point { theta, v });
            }
        }
    }
    Ok(CheckResult::new("allocation_oracle", tol, worst, at))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::{build_committed_spend, build_two_part_tariff};
    use crate::frictions::solve_spot_constrained;
    use crate::mechanism::SolveOptions;
    use crate::model::Model;
    use approx::assert_abs_diff_eq;
    use std::sync::OnceLock;

    fn example1() -> &'static DirectMechanism {
        static MECH: OnceLock<DirectMechanism> = OnceLock::new();
        MECH.get_or_init(|| {
            DirectMechanism::solve(&Model::example1(), &SolveOptions::default())
                .expect("reference model solves")
        })
    }

    fn sample_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn first_stage_truthfulness_holds() {
        let thetas = sample_grid(1.0, 2.0, 21);
        let m = DeviationMatrix::compute(example1(), &thetas, &thetas).unwrap();
        let res = check_ic0(&m, 1e-7).unwrap();
        assert!(res.pass, "{res:?}");
        // Truthful reporting reproduces the interim utility.
        assert_abs_diff_eq!(m.at(20, 20), 7.0 / 24.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.at(0, 0), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn first_stage_check_catches_a_planted_deviation() {
        let thetas = vec![1.0, 1.5, 2.0];
        let mut values = vec![
            0.00, -0.01, -0.03, //
            -0.02, 0.10, 0.08, //
            -0.05, 0.20, 0.30,
        ];
        values[1] = 0.02; // w(1.0 -> report 1.5) beats truthfulness by 0.02
        let m = DeviationMatrix::new(thetas.clone(), thetas, values).unwrap();
        let res = check_ic0(&m, 1e-7).unwrap();
        assert!(!res.pass);
        assert_abs_diff_eq!(res.worst_violation, 0.02, epsilon = 1e-12);
        match res.at {
            Some(Site::SignalReport {
                theta,
                theta_report,
            }) => {
                assert_abs_diff_eq!(theta, 1.0);
                assert_abs_diff_eq!(theta_report, 1.5);
            }
            other => panic!("unexpected site {other:?}"),
        }
    }

    #[test]
    fn second_stage_truthfulness_holds() {
        for theta in [1.0, 1.2, 1.5, 1.8, 2.0] {
            let res = check_ic1(example1(), theta, 101, 1e-7).unwrap();
            assert!(res.pass, "theta={theta}: {res:?}");
        }
    }

    #[test]
    fn second_stage_check_catches_a_planted_discount() {
        let vs = vec![1.0, 1.2, 1.4];
        let q_pow = vec![0.5, 0.6, 0.7];
        let mut t = vec![0.3, 0.42, 0.56];
        t[2] -= 0.05; // the top bundle becomes a bargain
        let res = check_ic1_slices(1.5, &vs, &q_pow, &t, 1e-9).unwrap();
        assert!(!res.pass);
        assert!(res.worst_violation > 0.0);
    }

    #[test]
    fn constant_payoffs_are_weakly_truthful() {
        let vs = vec![0.5, 1.0];
        let res = check_ic1_slices(1.0, &vs, &[0.0, 0.0], &[0.0, 0.0], 0.0).unwrap();
        assert!(res.pass);
        assert_abs_diff_eq!(res.worst_violation, 0.0);
    }

    #[test]
    fn single_crossing_holds_on_the_reference_model() {
        let thetas = sample_grid(1.0, 2.0, 15);
        let m = DeviationMatrix::compute(example1(), &thetas, &thetas).unwrap();
        let res = single_crossing_audit(&m, 1e-9);
        assert!(res.pass, "{res:?}");
    }

    #[test]
    fn single_crossing_catches_a_reversal() {
        let thetas = vec![1.0, 2.0];
        let reports = vec![1.0, 2.0];
        // The gain of the high report falls from 0.3 to 0.1 as theta rises.
        let values = vec![0.0, 0.3, 0.5, 0.6];
        let m = DeviationMatrix::new(thetas, reports, values).unwrap();
        let res = single_crossing_audit(&m, 1e-9);
        assert!(!res.pass);
        assert_abs_diff_eq!(res.worst_violation, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn participation_binds_only_at_the_bottom() {
        let thetas = sample_grid(1.0, 2.0, 26);
        let res = check_ir(example1(), &thetas, 1e-9).unwrap();
        assert!(res.pass, "{res:?}");
        assert_eq!(res.binding, vec![1.0]);
    }

    #[test]
    fn spot_participation_binds_at_the_cutoff() {
        let sol = solve_spot_constrained(example1(), 2.0).unwrap();
        // 17 nodes step by 1/16, so none of them collides with the cutoff
        // 4/3 that is appended by hand.
        let mut thetas = sample_grid(1.0, 2.0, 17);
        thetas.push(4.0 / 3.0);
        thetas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let res = check_ir_spot(&sol, &thetas, 1e-7).unwrap();
        assert!(res.pass, "{res:?}");
        assert_eq!(res.binding.len(), 1);
        assert_abs_diff_eq!(res.binding[0], 4.0 / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn menus_are_revenue_equivalent() {
        let mech = example1();
        let tariff = build_two_part_tariff(mech, 41).unwrap();
        let committed = build_committed_spend(mech, 41).unwrap();
        let res = check_revenue_equivalence(mech, &tariff, &committed, 41, 1e-10).unwrap();
        assert!(res.pass, "{res:?}");
    }

    #[test]
    fn revenue_check_catches_a_shifted_upfront() {
        let mech = example1();
        let tariff = build_two_part_tariff(mech, 41).unwrap();
        let committed = build_committed_spend(mech, 41).unwrap();
        let mut upfronts = tariff.upfronts().to_vec();
        upfronts[70] += 1e-3;
        let shifted = TwoPartTariff::from_parts(
            tariff.theta_grid().to_vec(),
            upfronts,
            (0..tariff.len()).map(|i| tariff.schedule(i).clone()).collect(),
        )
        .unwrap();
        let res = check_revenue_equivalence(mech, &shifted, &committed, 41, 1e-10).unwrap();
        assert!(!res.pass);
        assert_abs_diff_eq!(res.worst_violation, 1e-3, epsilon = 1e-9);
    }

    #[test]
    fn monotonicity_check_reports_drops() {
        let thetas = vec![1.0, 1.5, 2.0];
        let ok = check_nondecreasing("upfront_monotone", &thetas, &[0.0, 0.1, 0.2], 1e-9);
        assert!(ok.pass);
        let bad = check_nondecreasing("upfront_monotone", &thetas, &[0.0, 0.2, 0.1], 1e-9);
        assert!(!bad.pass);
        assert_abs_diff_eq!(bad.worst_violation, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn allocation_survives_the_grid_search() {
        let res = allocation_oracle_check(example1(), 10, 10, 10_001, 3e-4).unwrap();
        assert!(res.pass, "{res:?}");
    }

    #[test]
    fn brute_force_matches_the_closed_form() {
        // phi = 2, alpha = 1/2, cost = 1: argmax of 2 sqrt(q) - q is 1.
        let q = brute_force_quantity(2.0, 0.5, 1.0, 1.5, 100_001);
        assert_abs_diff_eq!(q, 1.0, epsilon = 3e-5);
        // Nonpositive virtual values buy nothing.
        assert_eq!(brute_force_quantity(-1.0, 0.5, 1.0, 1.5, 1001), 0.0);
        assert_eq!(brute_force_quantity(0.0, 0.5, 1.0, 1.5, 1001), 0.0);
    }

    #[test]
    fn report_serializes_deterministically() {
        let mech = example1();
        let thetas = sample_grid(1.0, 2.0, 11);
        let make = || -> VerificationReport {
            let m = DeviationMatrix::compute(mech, &thetas, &thetas).unwrap();
            let mut report = VerificationReport::new();
            report.push(check_ic0(&m, 1e-7).unwrap());
            report.push(check_ir(mech, &thetas, 1e-9).unwrap());
            report
        };
        let a = make().to_json().unwrap();
        let b = make().to_json().unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"check\": \"ic0\""));
        assert!(a.contains("\"pass\": true"));
        assert!(a.ends_with('\n'));
    }

    #[test]
    fn matrix_validation_rejects_bad_shapes() {
        assert!(DeviationMatrix::new(vec![], vec![1.0], vec![]).is_err());
        assert!(DeviationMatrix::new(vec![1.0, 1.0], vec![1.0, 2.0], vec![0.0; 4]).is_err());
        assert!(DeviationMatrix::new(vec![1.0, 2.0], vec![1.0, 2.0], vec![0.0; 3]).is_err());
        assert!(
            DeviationMatrix::new(vec![1.0, 2.0], vec![1.0, 2.0], vec![0.0, 0.0, 0.0, f64::NAN])
                .is_err()
        );
        let m = DeviationMatrix::new(vec![1.0], vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(m.at(0, 1), 0.0);
        assert!(check_ic0(&m, 1e-9).is_err());
    }
}
