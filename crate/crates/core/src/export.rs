//! Tabular and JSON output of solved mechanisms, menus, and spot solutions.
//!
//! All numeric cells go through [`fmt_sig9`], which renders nine significant
//! digits in positional notation for moderate magnitudes and scientific
//! notation outside them. The formatting is deterministic, so repeated runs
//! of the same solve produce byte-identical files — handy for diffing and
//! for golden tests downstream.

use std::io::Write;

use serde::Serialize;

use crate::contracts::{constant_marginal_price, CommittedSpendContract, TwoPartTariff};
use crate::error::Result;
use crate::frictions::SpotMarketSolution;
use crate::mechanism::DirectMechanism;

/// Relative slack used when deciding whether a schedule is linear enough to
/// report a single per-unit price.
pub const UNIT_PRICE_REL_TOL: f64 = 1e-6;

/// Formats a float with nine significant digits.
///
/// Values below `1e-12` in magnitude collapse to `"0"`, magnitudes in
/// `[1e-4, 1e9)` use positional notation, anything else uses scientific
/// notation, and non-finite values become the empty string (an empty CSV
/// cell). Rounding happens before the notation is chosen, so values that
/// round across a power of ten still format consistently.
pub fn fmt_sig9(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    if x.abs() < 1e-12 {
        return "0".to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponential format has an 'e'");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if !(-4..9).contains(&exp) {
        return sci;
    }
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::with_capacity(16);
    if neg {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    } else {
        let point = (exp + 1) as usize;
        out.push_str(&digits[..point]);
        if point < digits.len() {
            out.push('.');
            out.push_str(&digits[point..]);
        }
    }
    out
}

fn cell(x: Result<f64>) -> String {
    match x {
        Ok(v) if v.is_finite() => fmt_sig9(v),
        _ => String::new(),
    }
}

/// Writes the solved direct mechanism as tidy CSV: one row per
/// (signal, value) node with the virtual value, allocation, transfer, and
/// ex-post utility. Signals run over the solve grid; values run over an
/// evenly spaced grid on each signal's conditional support with the solve's
/// value resolution. Cells that cannot be evaluated are left empty.
pub fn write_mechanism_csv<W: Write>(mech: &DirectMechanism, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "v", "phi", "q", "t", "u"])?;
    let n_v = mech.v_grid().points().len();
    for &theta in mech.theta_grid().points() {
        let (lo, hi) = mech.value_support(theta);
        for j in 0..n_v {
            let v = lo + (hi - lo) * j as f64 / (n_v - 1) as f64;
            w.write_record([
                fmt_sig9(theta),
                fmt_sig9(v),
                cell(mech.phi(theta, v)),
                cell(mech.quantity(theta, v)),
                cell(mech.transfer(theta, v)),
                cell(mech.expost_utility(theta, v)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the two-part-tariff menu as CSV: one row per signal with the
/// upfront payment and the usage schedule's per-unit price (empty when the
/// schedule is not linear).
pub fn write_tariff_csv<W: Write>(tariff: &TwoPartTariff, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "t0", "unit_price"])?;
    for i in 0..tariff.len() {
        let unit = constant_marginal_price(tariff.schedule(i), UNIT_PRICE_REL_TOL);
        w.write_record([
            fmt_sig9(tariff.theta_grid()[i]),
            fmt_sig9(tariff.upfronts()[i]),
            unit.map(fmt_sig9).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the committed-spend menu as CSV: one row per signal with the
/// spend floor and the schedule's per-unit price (empty when the schedule
/// is not linear).
pub fn write_committed_csv<W: Write>(
    contract: &CommittedSpendContract,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "B", "unit_price"])?;
    for i in 0..contract.len() {
        let unit = constant_marginal_price(contract.schedule(i), UNIT_PRICE_REL_TOL);
        w.write_record([
            fmt_sig9(contract.theta_grid()[i]),
            fmt_sig9(contract.budgets()[i]),
            unit.map(fmt_sig9).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the spot-constrained solution as CSV: one row per signal on the
/// solve grid, with whether the signal is above the participation cutoff,
/// where its quantity comes from, the lump discount applied to its
/// transfers, the all-spot payoff, and the payoff under the constrained
/// contract.
pub fn write_spot_csv<W: Write>(solution: &SpotMarketSolution<'_>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "theta",
        "cutoff_flag",
        "q_source",
        "t_discount",
        "u_spot",
        "u_contract",
    ])?;
    for &theta in solution.mechanism().theta_grid().points() {
        let served = theta >= solution.theta_star() - 1e-12;
        w.write_record([
            fmt_sig9(theta),
            served.to_string(),
            if served { "contract" } else { "spot" }.to_string(),
            fmt_sig9(if served { solution.discount() } else { 0.0 }),
            cell(solution.u_spot(theta)),
            cell(solution.interim_contract_payoff(theta)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Headline numbers of a spot-constrained solution.
#[derive(Debug, Clone, Serialize)]
pub struct SpotSummary {
    pub spot_price: f64,
    pub theta_star: f64,
    pub discount: f64,
    pub heuristic_gap: f64,
    pub seller_profit: f64,
}

impl SpotSummary {
    pub fn from_solution(solution: &SpotMarketSolution<'_>) -> Result<Self> {
        Ok(SpotSummary {
            spot_price: solution.spot_price(),
            theta_star: solution.theta_star(),
            discount: solution.discount(),
            heuristic_gap: solution.heuristic_gap(),
            seller_profit: solution.seller_profit()?,
        })
    }
}

/// Writes the headline numbers of a spot-constrained solution as pretty
/// JSON with a trailing newline.
pub fn write_spot_summary_json<W: Write>(
    solution: &SpotMarketSolution<'_>,
    mut out: W,
) -> Result<()> {
    let summary = SpotSummary::from_solution(solution)?;
    let body = serde_json::to_string_pretty(&summary)?;
    out.write_all(body.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
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

    #[test]
    fn nine_significant_digits_reference_strings() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(-0.0), "0");
        assert_eq!(fmt_sig9(5e-13), "0");
        assert_eq!(fmt_sig9(1.0), "1.00000000");
        assert_eq!(fmt_sig9(11.0 / 48.0), "0.229166667");
        assert_eq!(fmt_sig9(7.0 / 72.0), "0.0972222222");
        assert_eq!(fmt_sig9(-1.0 / 24.0), "-0.0416666667");
        assert_eq!(fmt_sig9(0.3125), "0.312500000");
        assert_eq!(fmt_sig9(123456789.0), "123456789");
        assert_eq!(fmt_sig9(1e-4), "0.000100000000");
        // Outside the positional window: scientific with the same precision.
        assert_eq!(fmt_sig9(5e-5), "5.00000000e-5");
        assert_eq!(fmt_sig9(1.23e12), "1.23000000e12");
        // Rounding across a power of ten stays consistent.
        assert_eq!(fmt_sig9(0.9999999997), "1.00000000");
        // Non-finite values turn into empty cells.
        assert_eq!(fmt_sig9(f64::NAN), "");
        assert_eq!(fmt_sig9(f64::INFINITY), "");
    }

    #[test]
    fn mechanism_csv_reference_row() {
        let mut buf = Vec::new();
        write_mechanism_csv(example1(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "theta,v,phi,q,t,u");
        assert_eq!(text.lines().count(), 1 + 101 * 101);
        let row = text
            .lines()
            .find(|l| l.starts_with("2.00000000,1.00000000,"))
            .expect("row for the top signal at its lowest value");
        assert_eq!(
            row,
            "2.00000000,1.00000000,1.00000000,0.250000000,0.541666667,-0.0416666667"
        );
    }

    #[test]
    fn tariff_csv_reference_rows() {
        let tariff = build_two_part_tariff(example1(), 101).unwrap();
        let mut buf = Vec::new();
        write_tariff_csv(&tariff, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "theta,t0,unit_price");
        // The lowest signal never trades: zero upfront, no per-unit price.
        assert_eq!(lines.next().unwrap(), "1.00000000,0,");
        let last = text.lines().last().unwrap();
        assert_eq!(last, "2.00000000,0.229166667,1.00000000");
    }

    #[test]
    fn committed_csv_reference_rows() {
        let contract = build_committed_spend(example1(), 101).unwrap();
        let mut buf = Vec::new();
        write_committed_csv(&contract, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("theta,B,unit_price\n"));
        let last = text.lines().last().unwrap();
        assert_eq!(last, "2.00000000,0.541666667,1.00000000");
    }

    #[test]
    fn spot_csv_and_summary_reference_values() {
        let sol = solve_spot_constrained(example1(), 2.0).unwrap();

        let mut buf = Vec::new();
        write_spot_csv(&sol, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "theta,cutoff_flag,q_source,t_discount,u_spot,u_contract"
        );
        // Below the cutoff the buyer shops the spot market on its own.
        assert_eq!(
            lines.next().unwrap(),
            "1.00000000,false,spot,0,0.0729166667,0.0729166667"
        );
        let last = text.lines().last().unwrap();
        assert_eq!(
            last,
            "2.00000000,true,contract,0.0972222222,0.291666667,0.388888889"
        );

        let mut buf = Vec::new();
        write_spot_summary_json(&sol, &mut buf).unwrap();
        let json = String::from_utf8(buf).unwrap();
        assert!(json.ends_with('\n'));
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_abs_diff_eq!(value["spot_price"].as_f64().unwrap(), 2.0);
        assert_abs_diff_eq!(
            value["theta_star"].as_f64().unwrap(),
            4.0 / 3.0,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            value["discount"].as_f64().unwrap(),
            7.0 / 72.0,
            epsilon = 1e-7
        );
        let profit = value["seller_profit"].as_f64().unwrap();
        assert!(profit > 0.0 && profit < 7.0 / 36.0);
        // Field order is the struct order, so output is reproducible.
        let spot_pos = json.find("spot_price").unwrap();
        let star_pos = json.find("theta_star").unwrap();
        assert!(spot_pos < star_pos);
    }

    #[test]
    fn exports_are_deterministic() {
        let tariff = build_two_part_tariff(example1(), 41).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_tariff_csv(&tariff, &mut a).unwrap();
        write_tariff_csv(&tariff, &mut b).unwrap();
        assert_eq!(a, b);
    }
}
