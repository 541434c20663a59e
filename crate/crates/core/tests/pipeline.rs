//! End-to-end runs of the public API: model -> solve -> menus -> checks ->
//! exports, on the analytic reference model, on a custom family implemented
//! against the public trait, and on a tabulated family loaded from CSV.

use std::sync::Arc;

use approx::assert_abs_diff_eq;
use seqscreen::contracts::{
    build_committed_spend, build_two_part_tariff, guaranteed_positive_quantity,
};
use seqscreen::export;
use seqscreen::frictions::{optimal_contract_under_gamma, solve_spot_constrained};
use seqscreen::model::{fosd_check, SignalDistribution, TabulatedFamily, ValueFamily};
use seqscreen::verify::{
    allocation_oracle_check, check_from_diagnostic, check_ic0, check_ic1, check_ir,
    check_ir_spot, check_nondecreasing, check_revenue_equivalence, single_crossing_audit,
    DeviationMatrix, VerificationReport,
};
use seqscreen::virtual_value::{mhr_check, regularity_check};
use seqscreen::{DirectMechanism, Environment, Error, Grid, Model, SolveOptions};

/// A non-multiplicative family defined through the public trait:
/// `G(v | theta) = v - theta v (1 - v) / 2` on the unit square, a uniform
/// density tilted toward high values as the signal rises.
#[derive(Debug)]
struct TiltedFamily;

impl ValueFamily for TiltedFamily {
    fn cdf(&self, v: f64, theta: f64) -> f64 {
        let v = v.clamp(0.0, 1.0);
        v - theta * v * (1.0 - v) / 2.0
    }

    fn pdf(&self, v: f64, theta: f64) -> f64 {
        if !(0.0..=1.0).contains(&v) {
            return 0.0;
        }
        1.0 + theta * (v - 0.5)
    }

    fn theta_partial(&self, v: f64, theta: f64) -> f64 {
        let _ = theta;
        if !(0.0..=1.0).contains(&v) {
            return 0.0;
        }
        -v * (1.0 - v) / 2.0
    }

    fn support_lo(&self, _theta: f64) -> f64 {
        0.0
    }

    fn support_hi(&self, _theta: f64) -> f64 {
        1.0
    }

    fn global_lo(&self) -> f64 {
        0.0
    }

    fn global_hi(&self) -> f64 {
        1.0
    }
}

fn tilted_model() -> Model {
    Model::new(
        Environment::new(0.5, 1.0).unwrap(),
        SignalDistribution::uniform(0.0, 1.0).unwrap(),
        Arc::new(TiltedFamily),
    )
    .unwrap()
}

/// Runs the whole battery of checks a solved model is supposed to satisfy
/// and returns the report. `ic_tol` absorbs the discretization of the model
/// itself (tabulated families are checked more loosely than analytic ones).
fn full_report(mech: &DirectMechanism, ic_tol: f64) -> VerificationReport {
    let mut report = VerificationReport::new();
    let model = mech.model();

    let diag = fosd_check(model.family.as_ref(), mech.theta_grid(), mech.v_grid(), 1e-9);
    report.push(check_from_diagnostic(&diag));
    report.push(check_from_diagnostic(&mhr_check(
        &model.signal,
        mech.theta_grid(),
        1e-9,
    )));
    report.push(check_from_diagnostic(&regularity_check(
        mech.field(),
        mech.theta_grid(),
        mech.v_grid(),
        1e-9,
    )));

    report.push(allocation_oracle_check(mech, 8, 8, 4001, 1e-3).unwrap());

    // Signal-stage deviations on every other solve node, so the utility
    // cache is evaluated only where it is exact.
    let thetas: Vec<f64> = mech.theta_grid().points().iter().copied().step_by(2).collect();
    let matrix = DeviationMatrix::compute(mech, &thetas, &thetas).unwrap();
    report.push(check_ic0(&matrix, ic_tol).unwrap());
    report.push(single_crossing_audit(&matrix, ic_tol));

    for idx in [0, mech.theta_grid().len() / 2, mech.theta_grid().len() - 1] {
        report.push(check_ic1(mech, mech.theta_grid().points()[idx], 51, ic_tol).unwrap());
    }
    report.push(check_ir(mech, mech.theta_grid().points(), 1e-9).unwrap());

    let v_points = mech.v_grid().len();
    let tariff = build_two_part_tariff(mech, v_points).unwrap();
    let committed = build_committed_spend(mech, v_points).unwrap();
    report.push(check_revenue_equivalence(mech, &tariff, &committed, v_points, 1e-10).unwrap());
    report.push(check_nondecreasing(
        "upfront_monotone",
        tariff.theta_grid(),
        tariff.upfronts(),
        1e-9,
    ));
    report.push(check_nondecreasing(
        "budget_monotone",
        committed.theta_grid(),
        committed.budgets(),
        1e-9,
    ));
    report
}

#[test]
fn reference_model_passes_every_check() {
    let mech = DirectMechanism::solve(&Model::example1(), &SolveOptions::default()).unwrap();
    let report = full_report(&mech, 1e-7);
    for check in &report.checks {
        assert!(
            check.pass,
            "{} failed: worst violation {} vs tolerance {}",
            check.check, check.worst_violation, check.tolerance
        );
    }
    assert!(report.pass());

    // Profit agrees between the envelope route and the virtual-surplus
    // route, and matches the closed form for the reference model.
    assert_abs_diff_eq!(mech.seller_profit(), 7.0 / 36.0, epsilon = 1e-9);
    assert_abs_diff_eq!(
        mech.profit_virtual_route().unwrap(),
        7.0 / 36.0,
        epsilon = 1e-9
    );

    // The report is stable JSON.
    let a = report.to_json().unwrap();
    let b = full_report(&mech, 1e-7).to_json().unwrap();
    assert_eq!(a, b);
    for name in [
        "stochastic_dominance",
        "monotone_hazard",
        "regularity",
        "allocation_oracle",
        "ic0",
        "single_crossing",
        "ic1",
        "ir",
        "revenue_equivalence",
        "upfront_monotone",
        "budget_monotone",
    ] {
        assert!(a.contains(&format!("\"check\": \"{name}\"")), "missing {name}");
    }
}

#[test]
fn reference_model_extensions_compose() {
    let mech = DirectMechanism::solve(&Model::example1(), &SolveOptions::default()).unwrap();

    // Commitment-cost extension: the committed menu dominates split
    // payments and leaves profit unchanged.
    let solution = optimal_contract_under_gamma(&mech, 0.25, 101).unwrap();
    assert!(solution.dominance.pass);
    assert_abs_diff_eq!(solution.seller_profit, 7.0 / 36.0, epsilon = 1e-7);
    assert!(guaranteed_positive_quantity(&solution.contract, 1e-12));

    // Spot extension: participation holds against the outside option and
    // binds at the cutoff.
    let spot = solve_spot_constrained(&mech, 2.0).unwrap();
    assert_abs_diff_eq!(spot.theta_star(), 4.0 / 3.0, epsilon = 1e-9);
    let mut thetas: Vec<f64> = mech.theta_grid().points().to_vec();
    thetas.push(spot.theta_star());
    thetas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thetas.dedup();
    let ir = check_ir_spot(&spot, &thetas, 1e-7).unwrap();
    assert!(ir.pass);
    assert!(!ir.binding.is_empty());

    // Exports serialize the lot without error.
    let mut buf = Vec::new();
    export::write_spot_csv(&spot, &mut buf).unwrap();
    assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 1 + 101);
    let mut buf = Vec::new();
    export::write_spot_summary_json(&spot, &mut buf).unwrap();
    assert!(std::str::from_utf8(&buf).unwrap().contains("theta_star"));
}

#[test]
fn custom_family_through_the_public_trait() {
    let model = tilted_model();
    let opts = SolveOptions {
        theta_points: 51,
        v_points: 51,
        ..SolveOptions::default()
    };
    let mech = DirectMechanism::solve(&model, &opts).unwrap();
    let report = full_report(&mech, 1e-7);
    for check in &report.checks {
        assert!(
            check.pass,
            "{} failed: worst violation {} vs tolerance {}",
            check.check, check.worst_violation, check.tolerance
        );
    }

    // Profit audits agree with each other even without a closed form.
    let by_parts = mech.seller_profit();
    let by_virtual = mech.profit_virtual_route().unwrap();
    assert_abs_diff_eq!(by_parts, by_virtual, epsilon = 1e-9);
    assert!(by_parts > 0.0);

    // No multiplicative structure means no spot-market extension.
    match solve_spot_constrained(&mech, 2.0) {
        Err(Error::UnsupportedModel { .. }) => {}
        other => panic!("expected an unsupported-model error, got {other:?}"),
    }
}

#[test]
fn tabulated_family_round_trips_through_the_solver() {
    // Tabulate the analytic family finely, reload it, and solve both.
    let tg = Grid::linspace(0.0, 1.0, 201).unwrap();
    let vg = Grid::linspace(0.0, 1.0, 201).unwrap();
    let mut csv = Vec::new();
    TabulatedFamily::write_csv(&TiltedFamily, &tg, &vg, &mut csv).unwrap();
    let tabulated = TabulatedFamily::from_reader(csv.as_slice()).unwrap();

    let analytic_model = tilted_model();
    let tabulated_model = Model::new(
        Environment::new(0.5, 1.0).unwrap(),
        SignalDistribution::uniform(0.0, 1.0).unwrap(),
        Arc::new(tabulated),
    )
    .unwrap();

    let opts = SolveOptions {
        theta_points: 41,
        v_points: 41,
        ..SolveOptions::default()
    };
    let analytic = DirectMechanism::solve(&analytic_model, &opts).unwrap();
    let tabulated = DirectMechanism::solve(&tabulated_model, &opts).unwrap();

    // Bilinear interpolation error bounds how far the two solutions drift.
    assert_abs_diff_eq!(
        analytic.seller_profit(),
        tabulated.seller_profit(),
        epsilon = 1e-4
    );
    for &theta in tabulated.theta_grid().points().iter().step_by(10) {
        assert_abs_diff_eq!(
            analytic.expected_utility(theta).unwrap(),
            tabulated.expected_utility(theta).unwrap(),
            epsilon = 1e-4
        );
    }

    // Internal consistency still holds at tight tolerances: the checks
    // compare the solution against itself, not against the analytic model.
    let ir = check_ir(&tabulated, tabulated.theta_grid().points(), 1e-9).unwrap();
    assert!(ir.pass);
    let thetas: Vec<f64> =
        tabulated.theta_grid().points().iter().copied().step_by(2).collect();
    let matrix = DeviationMatrix::compute(&tabulated, &thetas, &thetas).unwrap();
    let ic0 = check_ic0(&matrix, 1e-6).unwrap();
    assert!(ic0.pass, "worst violation {}", ic0.worst_violation);

    // Menus and exports work on the tabulated solution too.
    let tariff = build_two_part_tariff(&tabulated, 41).unwrap();
    let committed = build_committed_spend(&tabulated, 41).unwrap();
    let re = check_revenue_equivalence(&tabulated, &tariff, &committed, 41, 1e-10).unwrap();
    assert!(re.pass);
    let mut buf = Vec::new();
    export::write_mechanism_csv(&tabulated, &mut buf).unwrap();
    assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 1 + 41 * 41);
}
