//! Indirect implementations of the optimal mechanism.
//!
//! The direct mechanism quotes a transfer per reported `(theta, v)` pair.
//! Buyers in practice face *menus*: a signal report picks a price schedule,
//! and the realized value picks a quantity off that schedule. Two familiar
//! menu shapes implement the same allocation and revenue:
//!
//! * a **two-part tariff**: an upfront payment `t0(theta)` due when the
//!   schedule is chosen, plus a usage schedule paid on consumption;
//! * a **committed-spend contract**: no upfront payment, but the schedule
//!   has a spend floor `B(theta)` owed even at zero consumption. The floor
//!   equals the transfer of the lowest value realization, so on path every
//!   buyer spends at least `B`.
//!
//! Both menus are built from the solved mechanism on its signal grid; each
//! type's schedule passes through that type's equilibrium quantity-payment
//! pairs and extends off path in a way that never attracts deviations
//! (payments below the first purchase level are flat, and beyond the last
//! point the marginal price continues at the top rate).

use crate::error::{Error, Result};
use crate::mechanism::DirectMechanism;
use crate::numerics::MonotoneCubic;

/// Slack allowed when validating that payments do not decrease.
const PAYMENT_SLACK: f64 = 1e-9;

/// A usage price schedule: total payment as a function of quantity.
///
/// The schedule is piecewise linear through `points` (strictly increasing
/// quantities, nondecreasing payments). Below the first point the payment is
/// flat; exactly at zero it drops to `zero_payment` (zero for a tariff
/// schedule, the spend floor for a committed schedule). Beyond the last
/// point the payment grows at `tail_slope` per unit; a type that never
/// trades carries an infinite tail, making off-path purchases unattractive.
#[derive(Debug, Clone)]
pub struct PriceSchedule {
    zero_payment: f64,
    points: Vec<(f64, f64)>,
    tail_slope: f64,
}

impl PriceSchedule {
    pub fn new(zero_payment: f64, points: Vec<(f64, f64)>, tail_slope: f64) -> Result<Self> {
        if !zero_payment.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "payment at zero must be finite, got {zero_payment}"
            )));
        }
        if points.is_empty() {
            return Err(Error::InvalidSchedule(
                "a schedule needs at least one quantity-payment point".into(),
            ));
        }
        for &(q, p) in &points {
            if !(q.is_finite() && p.is_finite()) {
                return Err(Error::InvalidSchedule(format!(
                    "non-finite schedule point ({q}, {p})"
                )));
            }
        }
        if points[0].0 < 0.0 {
            return Err(Error::InvalidSchedule(format!(
                "quantities must be nonnegative, got {}",
                points[0].0
            )));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidSchedule(format!(
                    "quantities must increase strictly, got {} then {}",
                    w[0].0, w[1].0
                )));
            }
            if w[1].1 < w[0].1 - PAYMENT_SLACK {
                return Err(Error::InvalidSchedule(format!(
                    "payments must not decrease, got {} then {}",
                    w[0].1, w[1].1
                )));
            }
        }
        if zero_payment > points[0].1 + PAYMENT_SLACK {
            return Err(Error::InvalidSchedule(format!(
                "payment at zero ({zero_payment}) exceeds the first scheduled payment ({})",
                points[0].1
            )));
        }
        if tail_slope.is_nan() || tail_slope < 0.0 {
            return Err(Error::InvalidSchedule(format!(
                "tail slope must be nonnegative, got {tail_slope}"
            )));
        }
        Ok(PriceSchedule {
            zero_payment,
            points,
            tail_slope,
        })
    }

    /// Total payment owed for quantity `q`.
    pub fn price(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return self.zero_payment;
        }
        let (q0, p0) = self.points[0];
        if q <= q0 {
            return p0;
        }
        let &(q_last, p_last) = self.points.last().expect("validated nonempty");
        if q > q_last {
            return p_last + self.tail_slope * (q - q_last);
        }
        let idx = self.points.partition_point(|&(x, _)| x < q);
        let (qa, pa) = self.points[idx - 1];
        let (qb, pb) = self.points[idx];
        pa + (pb - pa) * (q - qa) / (qb - qa)
    }

    pub fn zero_payment(&self) -> f64 {
        self.zero_payment
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn tail_slope(&self) -> f64 {
        self.tail_slope
    }

    /// Smallest scheduled quantity (the lowest equilibrium purchase).
    pub fn min_quantity(&self) -> f64 {
        self.points[0].0
    }

    pub fn max_quantity(&self) -> f64 {
        self.points.last().expect("validated nonempty").0
    }

    /// Payment at the smallest scheduled quantity.
    pub fn min_payment(&self) -> f64 {
        self.points[0].1
    }

    pub fn max_payment(&self) -> f64 {
        self.points.last().expect("validated nonempty").1
    }
}

/// Menu of upfront payments and usage schedules, one per signal-grid node.
#[derive(Debug, Clone)]
pub struct TwoPartTariff {
    theta_grid: Vec<f64>,
    upfronts: Vec<f64>,
    schedules: Vec<PriceSchedule>,
    upfront_interp: MonotoneCubic,
}

/// Menu of spend commitments, one per signal-grid node. Schedules embed the
/// commitment as their payment floor; there is no upfront payment.
#[derive(Debug, Clone)]
pub struct CommittedSpendContract {
    theta_grid: Vec<f64>,
    budgets: Vec<f64>,
    schedules: Vec<PriceSchedule>,
    budget_interp: MonotoneCubic,
}

impl TwoPartTariff {
    pub fn from_parts(
        theta_grid: Vec<f64>,
        upfronts: Vec<f64>,
        schedules: Vec<PriceSchedule>,
    ) -> Result<Self> {
        check_menu_shape(&theta_grid, upfronts.len(), schedules.len())?;
        let upfront_interp = MonotoneCubic::new(&theta_grid, &upfronts)?;
        Ok(TwoPartTariff {
            theta_grid,
            upfronts,
            schedules,
            upfront_interp,
        })
    }

    pub fn theta_grid(&self) -> &[f64] {
        &self.theta_grid
    }

    pub fn upfronts(&self) -> &[f64] {
        &self.upfronts
    }

    /// Upfront payment interpolated between grid nodes.
    pub fn upfront(&self, theta: f64) -> f64 {
        self.upfront_interp.eval(theta)
    }

    pub fn schedule(&self, idx: usize) -> &PriceSchedule {
        &self.schedules[idx]
    }

    /// Schedule of the grid node nearest to `theta`.
    pub fn schedule_for(&self, theta: f64) -> &PriceSchedule {
        &self.schedules[nearest_node(&self.theta_grid, theta)]
    }

    pub fn len(&self) -> usize {
        self.theta_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_grid.is_empty()
    }
}

impl CommittedSpendContract {
    pub fn from_parts(
        theta_grid: Vec<f64>,
        budgets: Vec<f64>,
        schedules: Vec<PriceSchedule>,
    ) -> Result<Self> {
        check_menu_shape(&theta_grid, budgets.len(), schedules.len())?;
        let budget_interp = MonotoneCubic::new(&theta_grid, &budgets)?;
        Ok(CommittedSpendContract {
            theta_grid,
            budgets,
            schedules,
            budget_interp,
        })
    }

    pub fn theta_grid(&self) -> &[f64] {
        &self.theta_grid
    }

    /// Spend floors `B(theta_i)` along the grid.
    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    /// Spend floor interpolated between grid nodes.
    pub fn budget(&self, theta: f64) -> f64 {
        self.budget_interp.eval(theta)
    }

    pub fn schedule(&self, idx: usize) -> &PriceSchedule {
        &self.schedules[idx]
    }

    pub fn schedule_for(&self, theta: f64) -> &PriceSchedule {
        &self.schedules[nearest_node(&self.theta_grid, theta)]
    }

    /// Quantity delivered when a type spends exactly its floor.
    pub fn quantity_at_minimum_spend(&self, idx: usize) -> f64 {
        self.schedules[idx].min_quantity()
    }

    pub fn len(&self) -> usize {
        self.theta_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_grid.is_empty()
    }
}

fn check_menu_shape(theta_grid: &[f64], payments: usize, schedules: usize) -> Result<()> {
    if theta_grid.len() < 2 {
        return Err(Error::InvalidSchedule(
            "a menu needs at least two signal nodes".into(),
        ));
    }
    if theta_grid.len() != payments || theta_grid.len() != schedules {
        return Err(Error::InvalidSchedule(format!(
            "menu sizes disagree: {} signals, {} payments, {} schedules",
            theta_grid.len(),
            payments,
            schedules
        )));
    }
    Ok(())
}

fn nearest_node(grid: &[f64], theta: f64) -> usize {
    let idx = grid.partition_point(|&x| x < theta);
    if idx == 0 {
        return 0;
    }
    if idx >= grid.len() {
        return grid.len() - 1;
    }
    if (theta - grid[idx - 1]) <= (grid[idx] - theta) {
        idx - 1
    } else {
        idx
    }
}

/// Quantities closer than this collapse into one schedule point.
const QUANTITY_DEDUPE: f64 = 1e-12;

/// Builds each type's equilibrium quantity-payment pairs by sweeping
/// `v_points` evenly spaced value realizations over the type's conditional
/// support. Returns the pairs with total transfers as payments, plus the
/// marginal price at the top realization (the tail slope continuation).
fn schedule_points(
    mech: &DirectMechanism,
    theta: f64,
    v_points: usize,
) -> Result<(Vec<(f64, f64)>, f64)> {
    let (v_lo, v_hi) = mech.value_support(theta);
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(v_points);
    for j in 0..v_points {
        let v = v_lo + (v_hi - v_lo) * j as f64 / (v_points - 1) as f64;
        let q = mech.quantity(theta, v)?;
        let t = mech.transfer(theta, v)?;
        match points.last() {
            Some(&(q_prev, _)) if (q - q_prev).abs() <= QUANTITY_DEDUPE => {}
            _ => points.push((q, t)),
        }
    }
    let tail = match mech.marginal_price(theta, v_hi) {
        Ok(p) => p,
        Err(Error::ExcludedPoint { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok((points, tail))
}

/// Builds the two-part tariff menu implementing `mech`: each signal node
/// pays `t0 = -u(theta, v_min)` upfront and then buys off a usage schedule
/// whose payments are the mechanism transfers net of the upfront.
pub fn build_two_part_tariff(mech: &DirectMechanism, v_points: usize) -> Result<TwoPartTariff> {
    if v_points < 2 {
        return Err(Error::InvalidSchedule(
            "schedules need at least two value nodes".into(),
        ));
    }
    let thetas: Vec<f64> = mech.theta_grid().points().to_vec();
    let mut upfronts = Vec::with_capacity(thetas.len());
    let mut schedules = Vec::with_capacity(thetas.len());
    for (i, &theta) in thetas.iter().enumerate() {
        let upfront = -mech.base_values()[i];
        let (points, tail) = schedule_points(mech, theta, v_points)?;
        let usage: Vec<(f64, f64)> = points.iter().map(|&(q, t)| (q, t - upfront)).collect();
        schedules.push(PriceSchedule::new(0.0, usage, tail)?);
        upfronts.push(upfront);
    }
    TwoPartTariff::from_parts(thetas, upfronts, schedules)
}

/// Builds the committed-spend menu implementing `mech`: no upfront payment,
/// and each signal node's schedule charges the full mechanism transfer with
/// the lowest realization's transfer as the spend floor.
pub fn build_committed_spend(
    mech: &DirectMechanism,
    v_points: usize,
) -> Result<CommittedSpendContract> {
    if v_points < 2 {
        return Err(Error::InvalidSchedule(
            "schedules need at least two value nodes".into(),
        ));
    }
    let thetas: Vec<f64> = mech.theta_grid().points().to_vec();
    let mut budgets = Vec::with_capacity(thetas.len());
    let mut schedules = Vec::with_capacity(thetas.len());
    for &theta in &thetas {
        let (points, tail) = schedule_points(mech, theta, v_points)?;
        let floor = points[0].1;
        budgets.push(floor);
        schedules.push(PriceSchedule::new(floor, points, tail)?);
    }
    CommittedSpendContract::from_parts(thetas, budgets, schedules)
}

/// Whether the committed-spend menu guarantees positive consumption: every
/// signal above the lowest grid node must carry a positive spend floor *and*
/// receive a positive quantity when spending exactly that floor. The lowest
/// node is exempt because exclusion of the very bottom type is generic.
pub fn guaranteed_positive_quantity(contract: &CommittedSpendContract, tol: f64) -> bool {
    contract
        .budgets
        .iter()
        .zip(&contract.schedules)
        .skip(1)
        .all(|(&b, s)| b > tol && s.min_quantity() > tol)
}

/// Whether the menu implementation is pinned down uniquely at `theta`: the
/// virtual value must vanish at the bottom of the type's conditional
/// support, so the lowest realization trades zero and the spend floor
/// cannot be shifted into usage prices.
pub fn uniqueness_condition(mech: &DirectMechanism, theta: f64, tol: f64) -> Result<bool> {
    let v_lo = mech.value_support(theta).0;
    Ok(mech.phi(theta, v_lo)?.abs() <= tol)
}

/// If every segment of the schedule charges the same marginal price (within
/// a relative tolerance), returns that price. Schedules implementing
/// product-structure models are affine per type; generic models are not.
pub fn constant_marginal_price(schedule: &PriceSchedule, rel_tol: f64) -> Option<f64> {
    let pts = schedule.points();
    let mut slopes = Vec::new();
    for w in pts.windows(2) {
        let dq = w[1].0 - w[0].0;
        if dq > QUANTITY_DEDUPE {
            slopes.push((w[1].1 - w[0].1) / dq);
        }
    }
    if slopes.is_empty() {
        return None;
    }
    let (q0, p0) = pts[0];
    let (q1, p1) = *pts.last().expect("nonempty");
    let overall = (p1 - p0) / (q1 - q0);
    let scale = overall.abs().max(1.0);
    slopes
        .iter()
        .all(|s| (s - overall).abs() <= rel_tol * scale)
        .then_some(overall)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::{DirectMechanism, SolveOptions};
    use crate::model::{Environment, Model};
    use approx::assert_abs_diff_eq;
    use std::sync::OnceLock;

    fn example1() -> &'static DirectMechanism {
        static MECH: OnceLock<DirectMechanism> = OnceLock::new();
        MECH.get_or_init(|| {
            DirectMechanism::solve(&Model::example1(), &SolveOptions::default())
                .expect("reference model solves")
        })
    }

    fn tariff() -> &'static TwoPartTariff {
        static T: OnceLock<TwoPartTariff> = OnceLock::new();
        T.get_or_init(|| build_two_part_tariff(example1(), 101).expect("tariff builds"))
    }

    fn committed() -> &'static CommittedSpendContract {
        static C: OnceLock<CommittedSpendContract> = OnceLock::new();
        C.get_or_init(|| build_committed_spend(example1(), 101).expect("contract builds"))
    }

    #[test]
    fn schedule_evaluation_semantics() {
        let s = PriceSchedule::new(0.0, vec![(0.25, 0.3125), (1.0, 1.0625)], 1.0).unwrap();
        assert_eq!(s.price(0.0), 0.0);
        assert_eq!(s.price(-1.0), 0.0);
        // Flat below the first purchase level.
        assert_eq!(s.price(0.1), 0.3125);
        assert_eq!(s.price(0.25), 0.3125);
        // Linear in between.
        assert_abs_diff_eq!(s.price(0.625), 0.6875, epsilon = 1e-12);
        assert_eq!(s.price(1.0), 1.0625);
        // Tail continues at the top marginal price.
        assert_abs_diff_eq!(s.price(1.5), 1.5625, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_schedule_blocks_trade() {
        let s = PriceSchedule::new(0.0, vec![(0.0, 0.0)], f64::INFINITY).unwrap();
        assert_eq!(s.price(0.0), 0.0);
        assert_eq!(s.price(1e-9), f64::INFINITY);
    }

    #[test]
    fn schedule_validation_rejects_bad_shapes() {
        assert!(PriceSchedule::new(0.0, vec![], 1.0).is_err());
        assert!(PriceSchedule::new(0.0, vec![(0.5, 1.0), (0.5, 2.0)], 1.0).is_err());
        assert!(PriceSchedule::new(0.0, vec![(0.5, 1.0), (0.7, 0.5)], 1.0).is_err());
        assert!(PriceSchedule::new(2.0, vec![(0.5, 1.0)], 1.0).is_err());
        assert!(PriceSchedule::new(0.0, vec![(0.5, 1.0)], -1.0).is_err());
        assert!(PriceSchedule::new(0.0, vec![(0.5, f64::NAN)], 1.0).is_err());
    }

    #[test]
    fn tariff_reference_values() {
        let t = tariff();
        assert_abs_diff_eq!(t.upfront(2.0), 11.0 / 48.0, epsilon = 1e-9);
        assert_abs_diff_eq!(t.upfront(1.0), 0.0, epsilon = 1e-9);
        // Top type: schedule runs from q(2,1) = 1/4 at payment 5/16 up to
        // q(2,2) = 1 and stays affine at marginal price 1.
        let s = t.schedule_for(2.0);
        assert_abs_diff_eq!(s.min_quantity(), 0.25, epsilon = 1e-9);
        assert_abs_diff_eq!(s.min_payment(), 5.0 / 16.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.max_quantity(), 1.0, epsilon = 1e-9);
        assert_eq!(s.zero_payment(), 0.0);
        assert_abs_diff_eq!(s.tail_slope(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn committed_reference_values() {
        let c = committed();
        assert_abs_diff_eq!(c.budget(2.0), 13.0 / 24.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.budget(1.5), 23.0 / 96.0, epsilon = 1e-9);
        let s = c.schedule_for(2.0);
        // The floor is owed even at zero consumption.
        assert_abs_diff_eq!(s.price(0.0), 13.0 / 24.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.price(0.1), 13.0 / 24.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.max_payment(), 31.0 / 24.0, epsilon = 1e-9);
    }

    #[test]
    fn menus_charge_identical_totals() {
        let (t, c, m) = (tariff(), committed(), example1());
        for idx in [20usize, 50, 87, 100] {
            let theta = t.theta_grid()[idx];
            for k in 0..7 {
                let (v_lo, v_hi) = m.value_support(theta);
                let v = v_lo + (v_hi - v_lo) * k as f64 / 6.0;
                let q = m.quantity(theta, v).unwrap();
                let direct = m.transfer(theta, v).unwrap();
                let via_tariff = t.upfronts()[idx] + t.schedule(idx).price(q);
                let via_committed = c.schedule(idx).price(q);
                assert_abs_diff_eq!(via_tariff, direct, epsilon = 1e-9);
                assert_abs_diff_eq!(via_committed, direct, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn schedules_are_expost_incentive_compatible() {
        // A buyer who knows v and faces the committed schedule must find its
        // optimum at the mechanism quantity (up to search-grid spacing).
        let (c, m) = (committed(), example1());
        for &(theta, v) in &[(2.0, 1.3), (1.5, 1.1), (1.75, 1.6)] {
            let s = c.schedule_for(theta);
            let q_star = m.quantity(theta, v).unwrap();
            let hi = s.max_quantity() * 1.5;
            let n = 4001;
            let mut best = (0.0, v * 0.0 - s.price(0.0));
            for k in 0..n {
                let q = hi * k as f64 / (n - 1) as f64;
                let val = v * q.sqrt() - s.price(q);
                if val > best.1 {
                    best = (q, val);
                }
            }
            let spacing = hi / (n - 1) as f64;
            assert!(
                (best.0 - q_star).abs() <= 2.0 * spacing,
                "theta={theta} v={v}: searched optimum {} vs mechanism {}",
                best.0,
                q_star
            );
        }
    }

    #[test]
    fn excluded_types_get_degenerate_schedules() {
        let env = Environment::new(0.5, 1.0).unwrap();
        let model = Model::uniform_multiplicative(env, 0.5, 1.5, 0.5, 1.0).unwrap();
        let mech = DirectMechanism::solve(&model, &SolveOptions::default()).unwrap();
        let c = build_committed_spend(&mech, 101).unwrap();
        // theta = 0.6 < 0.75 never trades: floor zero, nothing purchasable.
        let s = c.schedule_for(0.6);
        assert_eq!(s.price(0.0), 0.0);
        assert_eq!(s.price(0.05), f64::INFINITY);
        assert_eq!(c.budget(0.6), 0.0);
        assert!(!guaranteed_positive_quantity(&c, 1e-9));
    }

    #[test]
    fn reference_menu_guarantees_positive_quantities() {
        assert!(guaranteed_positive_quantity(committed(), 1e-9));
    }

    #[test]
    fn upfronts_and_budgets_rise_with_the_signal() {
        let t = tariff();
        assert!(t.upfronts().windows(2).all(|w| w[1] >= w[0] - 1e-9));
        let c = committed();
        assert!(c.budgets().windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }

    #[test]
    fn uniqueness_condition_detects_interior_floors() {
        let m = example1();
        // The lowest signal's virtual value vanishes at its bottom value;
        // higher signals trade strictly at the bottom.
        assert!(uniqueness_condition(m, 1.0, 1e-9).unwrap());
        assert!(!uniqueness_condition(m, 2.0, 1e-9).unwrap());
    }

    #[test]
    fn product_structure_prices_linearly() {
        let c = committed();
        // Marginal price theta / (2 (theta - 1)) per type.
        let s = c.schedule_for(2.0);
        let p = constant_marginal_price(s, 1e-6).expect("affine schedule");
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-9);
        let s = c.schedule_for(1.5);
        let p = constant_marginal_price(s, 1e-6).expect("affine schedule");
        assert_abs_diff_eq!(p, 1.5, epsilon = 1e-9);
    }

    #[test]
    fn generic_families_do_not_price_linearly() {
        use crate::model::tests::TiltedUniformFamily;
        use crate::model::SignalDistribution;
        let env = Environment::new(0.5, 1.0).unwrap();
        let model = Model::new(
            env,
            SignalDistribution::uniform(0.0, 1.0).unwrap(),
            std::sync::Arc::new(TiltedUniformFamily),
        )
        .unwrap();
        let mech = DirectMechanism::solve(&model, &SolveOptions::default()).unwrap();
        let c = build_committed_spend(&mech, 101).unwrap();
        assert!(constant_marginal_price(c.schedule_for(0.5), 1e-6).is_none());
    }
}
