//! Contracting frictions layered on top of the optimal mechanism.
//!
//! Two departures from the frictionless environment are supported:
//!
//! * **Upfront-payment aversion.** Paying before consuming carries a
//!   proportional burden `gamma > 0` (financing, budget, or accounting
//!   cost), so a strictly positive upfront `t0` costs the buyer
//!   `(1 + gamma) * t0`. Among all menus that implement the optimal
//!   allocation, the committed-spend form — which front-loads nothing —
//!   dominates every split with a positive upfront by exactly
//!   `gamma * t0`, while seller revenue is unchanged.
//!
//! * **A competitive spot market.** Buyers can always walk away and buy at a
//!   posted unit price `p > cost`. The constrained-optimal contract keeps
//!   the unconstrained allocation and transfers above a cutoff signal,
//!   sweetened by a lump-sum discount that makes the cutoff type exactly
//!   indifferent to the spot option; signals below the cutoff are ceded to
//!   the spot market.

use crate::contracts::{build_committed_spend, CommittedSpendContract};
use crate::error::{Error, Result};
use crate::mechanism::{panel_cuts, DirectMechanism};
use crate::model::spot_best_response;
use crate::numerics::{default_rule, find_root, integrate, integrate_with_breaks};
use crate::verify::{CheckResult, Site};

/// Tolerance for the dominance audit under the upfront friction.
const DOMINANCE_TOL: f64 = 1e-9;

/// Upfront shares of the tariff maximum tested against the committed menu.
const UPFRONT_SHARES: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Buyer payoff when an `upfront` payment is penalized at rate `gamma`:
/// `v q^alpha - (1 + gamma 1[upfront > 0]) upfront - usage`.
pub fn payoff_with_gamma(
    v: f64,
    q: f64,
    upfront: f64,
    usage: f64,
    alpha: f64,
    gamma: f64,
) -> f64 {
    let burden = if upfront > 0.0 { 1.0 + gamma } else { 1.0 };
    v * q.powf(alpha) - burden * upfront - usage
}

/// The optimal menu under upfront-payment aversion, with the numerical
/// dominance audit that justifies it.
#[derive(Debug)]
pub struct CommitmentCostSolution {
    pub gamma: f64,
    pub contract: CommittedSpendContract,
    /// Audit that the committed menu weakly dominates every tested split of
    /// the transfer into a positive upfront plus usage payments.
    pub dominance: CheckResult,
    /// Seller profit under the committed menu (identical to the
    /// frictionless optimum: no upfront is charged, so no burden is borne).
    pub seller_profit: f64,
}

/// Solves the contracting problem under a positive upfront friction. The
/// allocation and transfers stay at the frictionless optimum; what changes
/// is which menu implements them, and the proof obligation is dominance of
/// the zero-upfront form, checked type by type against upfront shares of
/// the two-part tariff's payment.
pub fn optimal_contract_under_gamma(
    mech: &DirectMechanism,
    gamma: f64,
    v_points: usize,
) -> Result<CommitmentCostSolution> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidDomain(format!(
            "the upfront friction must be positive (menus are payoff-equivalent at zero), got {gamma}"
        )));
    }
    let contract = build_committed_spend(mech, v_points)?;
    let env = mech.model().env;
    let thetas = mech.theta_grid().points();
    let rule = default_rule();

    let mut worst = f64::NEG_INFINITY;
    let mut worst_at = None;
    for (i, &theta) in thetas.iter().enumerate() {
        // Interim payoff under the committed menu: no upfront, usage equals
        // the full transfer.
        let committed = integrate_with_breaks(
            |v| {
                let q = mech.quantity(theta, v).unwrap_or(f64::NAN);
                let t = mech.transfer(theta, v).unwrap_or(f64::NAN);
                payoff_with_gamma(v, q, 0.0, t, env.alpha, gamma)
                    * mech.model().family.pdf(v, theta)
            },
            mech.value_support(theta).0,
            mech.value_support(theta).1,
            &[],
            rule,
        )?;
        let upfront_max = -mech.base_values()[i];
        for share in UPFRONT_SHARES {
            let upfront = share * upfront_max;
            let split = integrate_with_breaks(
                |v| {
                    let q = mech.quantity(theta, v).unwrap_or(f64::NAN);
                    let t = mech.transfer(theta, v).unwrap_or(f64::NAN);
                    payoff_with_gamma(v, q, upfront, t - upfront, env.alpha, gamma)
                        * mech.model().family.pdf(v, theta)
                },
                mech.value_support(theta).0,
                mech.value_support(theta).1,
                &[],
                rule,
            )?;
            let violation = split - committed;
            if violation > worst {
                worst = violation;
                worst_at = Some(Site::Signal { theta });
            }
        }
    }
    let dominance = CheckResult::new(
        "committed_spend_dominates_upfronts",
        DOMINANCE_TOL,
        worst,
        worst_at,
    );

    // Honest recomputation of E[t - cost q] under the committed menu (the
    // transfers are the mechanism's, and zero upfront avoids the burden).
    let (t_lo, t_hi) = mech.model().theta_bounds();
    let cuts = panel_cuts(t_lo, t_hi, mech.exclusion_start());
    let seller_profit = integrate_with_breaks(
        |t| {
            let flow = mech.surplus_flow(t).unwrap_or(f64::NAN);
            let buyer = mech.base_utility(t) + mech.expected_rent(t).unwrap_or(f64::NAN);
            mech.model().signal.pdf(t) * (flow - buyer)
        },
        t_lo,
        t_hi,
        &cuts,
        rule,
    )?;

    Ok(CommitmentCostSolution {
        gamma,
        contract,
        dominance,
        seller_profit,
    })
}

/// The cutoff signal above which the seller retains the buyer against a
/// competitive spot market at `spot_price`: the root of
/// `phi_F(theta) / theta = cost / spot_price`, clamped to the bottom of the
/// support when even the lowest signal is worth retaining. Requires the
/// product structure (the cutoff characterization uses it).
pub fn spot_cutoff(mech: &DirectMechanism, spot_price: f64) -> Result<f64> {
    let model = mech.model();
    if !model.is_multiplicative() {
        return Err(Error::UnsupportedModel {
            operation: "spot-market-constrained pricing",
        });
    }
    let cost = model.env.cost;
    if !(spot_price.is_finite() && spot_price > cost) {
        return Err(Error::InvalidDomain(format!(
            "the spot price must exceed the marginal cost {cost}, got {spot_price}"
        )));
    }
    let (t_lo, t_hi) = model.theta_bounds();
    let target = cost / spot_price;
    let psi = |t: f64| match mech.field().static_virtual(t) {
        Ok(phi_f) => phi_f / t - target,
        Err(_) => f64::NAN,
    };
    if psi(t_lo) >= 0.0 {
        return Ok(t_lo);
    }
    // At the top the static virtual value equals the signal itself, so
    // psi(t_hi) = 1 - cost / spot_price > 0 and a root is bracketed.
    find_root(psi, t_lo, t_hi, mech.tolerances().root)
}

/// Interim payoff of a buyer with signal `theta` who covers all demand on
/// the spot market at `spot_price`.
pub fn spot_interim_payoff(mech: &DirectMechanism, spot_price: f64, theta: f64) -> Result<f64> {
    if !(spot_price.is_finite() && spot_price > 0.0) {
        return Err(Error::InvalidDomain(format!(
            "the spot price must be positive, got {spot_price}"
        )));
    }
    let alpha = mech.model().env.alpha;
    let (lo, hi) = mech.value_support(theta);
    integrate(
        |v| spot_best_response(v, spot_price, alpha).1 * mech.model().family.pdf(v, theta),
        lo,
        hi,
        default_rule(),
    )
}

/// The constrained-optimal contract against a spot market.
#[derive(Debug)]
pub struct SpotMarketSolution<'a> {
    mech: &'a DirectMechanism,
    spot_price: f64,
    theta_star: f64,
    discount: f64,
    heuristic_gap: f64,
}

/// Solves the spot-constrained problem: keeps the unconstrained terms above
/// the cutoff with a lump-sum discount that binds participation there, and
/// cedes signals below the cutoff to the spot market.
pub fn solve_spot_constrained(
    mech: &DirectMechanism,
    spot_price: f64,
) -> Result<SpotMarketSolution<'_>> {
    let theta_star = spot_cutoff(mech, spot_price)?;
    let u_spot_star = spot_interim_payoff(mech, spot_price, theta_star)?;
    let u_mech_star = mech.expected_utility(theta_star)?;
    let discount = (u_spot_star - u_mech_star).max(0.0);

    // Profit the unconstrained mechanism would have earned on the ceded
    // region, net of what merely matching the spot terms there would earn.
    let model = mech.model();
    let (t_lo, _) = model.theta_bounds();
    let heuristic_gap = if theta_star > t_lo {
        let rule = default_rule();
        let cuts = panel_cuts(t_lo, theta_star, mech.exclusion_start());
        let mech_flow = integrate_with_breaks(
            |t| model.signal.pdf(t) * mech.surplus_flow(t).unwrap_or(f64::NAN),
            t_lo,
            theta_star,
            &cuts,
            rule,
        )?;
        // integral of f U by parts over [t_lo, theta_star].
        let rent_tail = integrate_with_breaks(
            |t| mech.envelope_rate(t).unwrap_or(f64::NAN) * model.signal.cdf(t),
            t_lo,
            theta_star,
            &cuts,
            rule,
        )?;
        let mech_rent = u_mech_star * model.signal.cdf(theta_star) - rent_tail;
        let margin = spot_price - model.env.cost;
        let alpha = model.env.alpha;
        let spot_flow = integrate_with_breaks(
            |t| {
                let expected_spot_q = integrate(
                    |v| spot_best_response(v, spot_price, alpha).0 * model.family.pdf(v, t),
                    model.family.support_lo(t),
                    model.family.support_hi(t),
                    rule,
                )
                .unwrap_or(f64::NAN);
                model.signal.pdf(t) * margin * expected_spot_q
            },
            t_lo,
            theta_star,
            &cuts,
            rule,
        )?;
        (mech_flow - mech_rent) - spot_flow
    } else {
        0.0
    };

    Ok(SpotMarketSolution {
        mech,
        spot_price,
        theta_star,
        discount,
        heuristic_gap,
    })
}

impl<'a> SpotMarketSolution<'a> {
    pub fn mechanism(&self) -> &'a DirectMechanism {
        self.mech
    }

    pub fn spot_price(&self) -> f64 {
        self.spot_price
    }

    /// Lowest signal the seller retains.
    pub fn theta_star(&self) -> f64 {
        self.theta_star
    }

    /// Lump-sum discount granted to every retained signal.
    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Forgone profit on the ceded region relative to matching spot terms.
    pub fn heuristic_gap(&self) -> f64 {
        self.heuristic_gap
    }

    /// Interim payoff of full spot-market coverage.
    pub fn u_spot(&self, theta: f64) -> Result<f64> {
        spot_interim_payoff(self.mech, self.spot_price, theta)
    }

    /// Interim payoff under the constrained-optimal arrangement: contract
    /// terms plus the discount above the cutoff, spot coverage below.
    pub fn interim_contract_payoff(&self, theta: f64) -> Result<f64> {
        if theta >= self.theta_star - 1e-12 {
            Ok(self.mech.expected_utility(theta)? + self.discount)
        } else {
            self.u_spot(theta)
        }
    }

    /// Quantity consumed at `(theta, v)`: contract allocation above the
    /// cutoff, spot demand below.
    pub fn constrained_quantity(&self, theta: f64, v: f64) -> Result<f64> {
        if theta >= self.theta_star - 1e-12 {
            self.mech.quantity(theta, v)
        } else {
            Ok(spot_best_response(v, self.spot_price, self.mech.model().env.alpha).0)
        }
    }

    /// Payment made at `(theta, v)`: the discounted contract transfer above
    /// the cutoff; below it, the buyer's spot bill (paid to the market, not
    /// the seller).
    pub fn constrained_transfer(&self, theta: f64, v: f64) -> Result<f64> {
        if theta >= self.theta_star - 1e-12 {
            Ok(self.mech.transfer(theta, v)? - self.discount)
        } else {
            let (q, _) = spot_best_response(v, self.spot_price, self.mech.model().env.alpha);
            Ok(self.spot_price * q)
        }
    }

    /// Seller profit: retained types' transfers net of cost, less the
    /// discount actually paid out; ceded types contribute nothing.
    pub fn seller_profit(&self) -> Result<f64> {
        let model = self.mech.model();
        let (_, t_hi) = model.theta_bounds();
        if self.theta_star >= t_hi {
            return Ok(0.0);
        }
        let rule = default_rule();
        let cuts = panel_cuts(
            self.theta_star,
            t_hi,
            self.mech.exclusion_start().max(self.theta_star),
        );
        let flow = integrate_with_breaks(
            |t| model.signal.pdf(t) * self.mech.surplus_flow(t).unwrap_or(f64::NAN),
            self.theta_star,
            t_hi,
            &cuts,
            rule,
        )?;
        // integral of f U over the retained region, by parts.
        let rent_tail = integrate_with_breaks(
            |t| self.mech.envelope_rate(t).unwrap_or(f64::NAN) * model.signal.cdf(t),
            self.theta_star,
            t_hi,
            &cuts,
            rule,
        )?;
        let u_top = self.mech.expected_utility(t_hi)?;
        let u_star = self.mech.expected_utility(self.theta_star)?;
        let star_cdf = model.signal.cdf(self.theta_star);
        let rents = u_top - u_star * star_cdf - rent_tail;
        let served_mass = 1.0 - star_cdf;
        Ok(flow - rents - self.discount * served_mass)
    }
}

/// Closed-form ratio of envelope derivatives `U'(theta) / u_spot'(theta)`
/// in product-structure models:
/// `(spot_price / cost * phi_F(theta) / theta)^(alpha / (1 - alpha))`.
/// Equals one exactly at the cutoff and exceeds one above it; excluded
/// signals have a flat contract envelope, so the ratio is zero there.
pub fn envelope_derivative_ratio(
    mech: &DirectMechanism,
    spot_price: f64,
    theta: f64,
) -> Result<f64> {
    let model = mech.model();
    if !model.is_multiplicative() {
        return Err(Error::UnsupportedModel {
            operation: "envelope-derivative ratio",
        });
    }
    let cost = model.env.cost;
    if !(spot_price.is_finite() && spot_price > cost) {
        return Err(Error::InvalidDomain(format!(
            "the spot price must exceed the marginal cost {cost}, got {spot_price}"
        )));
    }
    let phi_f = mech.field().static_virtual(theta)?;
    if phi_f <= 0.0 {
        return Ok(0.0);
    }
    let alpha = model.env.alpha;
    Ok((spot_price / cost * phi_f / theta).powf(alpha / (1.0 - alpha)))
}

/// The same ratio computed from quadratures of the two envelope rates:
/// `U'` from the contract allocation and `u_spot'` from the spot demand
/// (both are integrals of `q^alpha` against the signal-slope of the value
/// distribution). Used to cross-check the closed form.
pub fn envelope_derivative_ratio_direct(
    mech: &DirectMechanism,
    spot_price: f64,
    theta: f64,
) -> Result<f64> {
    if !(spot_price.is_finite() && spot_price > 0.0) {
        return Err(Error::InvalidDomain(format!(
            "the spot price must be positive, got {spot_price}"
        )));
    }
    let num = mech.envelope_rate(theta)?;
    let model = mech.model();
    let alpha = model.env.alpha;
    let (lo, hi) = mech.value_support(theta);
    let den = -integrate(
        |v| {
            let (q, _) = spot_best_response(v, spot_price, alpha);
            q.powf(alpha) * model.family.theta_partial(v, theta)
        },
        lo,
        hi,
        default_rule(),
    )?;
    if !(den > 0.0) {
        return Err(Error::NonFiniteEvaluation { x: theta });
    }
    Ok(num / den)
}
