//! The revenue-optimal direct mechanism.
//!
//! The solver works with a buyer who reports a signal `theta` up front and a
//! realized value `v` afterwards, consumes a quantity `q` with gross payoff
//! `v * q^alpha`, and pays a transfer `t`. Revenue maximization subject to
//! truthful reporting at both stages and interim participation pins the
//! solution down to closed forms driven by the dynamic virtual value
//! `phi(theta, v)`:
//!
//! * allocation: `q(theta, v) = (alpha / cost * max(phi, 0))^(1 / (1 - alpha))`;
//! * utility envelope in the value: `u(theta, v) = u(theta, v_min) +
//!   integral of q^alpha dx from v_min to v`;
//! * utility envelope in the signal: `U(theta)` grows from zero at the lowest
//!   signal at rate `-integral q^alpha dG/dtheta dv`;
//! * transfers: `t = v * q^alpha - u`.
//!
//! Everything except one interpolated cache is evaluated on demand from
//! these forms. The cache holds the base utilities `u(theta_i, v_min)` on
//! the solver's signal grid: each one costs a nested quadrature
//! (`u(theta, v_min) = U(theta) - E_v[u(theta, v) - u(theta, v_min)]`), so
//! they are tabulated once and interpolated monotonically in between.
//! Signal-level expected utilities are *not* interpolated; `expected_utility`
//! always integrates the envelope rate directly so that off-grid arguments
//! (participation cutoffs, roots) lose no accuracy.

use crate::error::{Error, Result};
use crate::model::{fosd_check, Model};
use crate::numerics::{default_rule, find_root, integrate, integrate_with_breaks};
use crate::numerics::{Grid, MonotoneCubic, Tolerances};
use crate::virtual_value::{regularity_check, VirtualValueField};

/// Grid sizes and tolerances for [`DirectMechanism::solve`].
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Signal grid size for the base-utility cache and diagnostics.
    pub theta_points: usize,
    /// Value grid size for diagnostics and exports.
    pub v_points: usize,
    pub tolerances: Tolerances,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            theta_points: 101,
            v_points: 101,
            tolerances: Tolerances::default(),
        }
    }
}

/// Sign structure of `phi(theta, .)` over the conditional value support.
enum ValueCut {
    /// `phi >= 0` on the whole support: every realization trades.
    AllIncluded,
    /// `phi <= 0` on the whole support: the type never trades.
    AllExcluded,
    /// `phi` crosses zero once, at the given value.
    Root(f64),
}

/// A solved revenue-optimal mechanism for one [`Model`].
///
/// Construction validates the model's assumptions (first-order stochastic
/// dominance in the signal and monotonicity of the truncated virtual value)
/// and refuses to solve when they fail, since the closed forms below are
/// only optimal under them.
pub struct DirectMechanism {
    model: Model,
    field: VirtualValueField,
    theta_grid: Grid,
    v_grid: Grid,
    /// Lowest signal whose static virtual value is nonnegative (signals
    /// below it are fully excluded in multiplicative families).
    alloc_start: f64,
    /// `u(theta_i, v_min)` on `theta_grid`.
    base_values: Vec<f64>,
    /// `U(theta_i)` on `theta_grid`, accumulated progressively.
    expected_values: Vec<f64>,
    base: MonotoneCubic,
    profit: f64,
    tol: Tolerances,
}

impl std::fmt::Debug for DirectMechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirectMechanism")
            .field("model", &self.model)
            .field("theta_points", &self.theta_grid.len())
            .field("v_points", &self.v_grid.len())
            .field("alloc_start", &self.alloc_start)
            .field("profit", &self.profit)
            .finish()
    }
}

impl DirectMechanism {
    pub fn solve(model: &Model, opts: &SolveOptions) -> Result<Self> {
        model.env.validate()?;
        if opts.theta_points < 2 || opts.v_points < 2 {
            return Err(Error::InvalidGrid(format!(
                "solver grids need at least two points per axis, got {} x {}",
                opts.theta_points, opts.v_points
            )));
        }
        let (t_lo, t_hi) = model.theta_bounds();
        let (v_lo, v_hi) = model.value_bounds();
        let theta_grid = Grid::linspace(t_lo, t_hi, opts.theta_points)?;
        let v_grid = Grid::linspace(v_lo, v_hi, opts.v_points)?;
        let field = VirtualValueField::new(model);
        let slack = opts.tolerances.monotone_slack;

        let dominance = fosd_check(model.family.as_ref(), &theta_grid, &v_grid, slack);
        if !dominance.pass {
            return Err(Error::AssumptionViolated {
                check: "stochastic_dominance",
                detail: describe_worst(&dominance),
            });
        }
        let regular = regularity_check(&field, &theta_grid, &v_grid, slack);
        if !regular.pass {
            return Err(Error::AssumptionViolated {
                check: "regularity",
                detail: describe_worst(&regular),
            });
        }

        // Static exclusion threshold. The static virtual value at the top of
        // the support equals the top signal itself (the hazard weight
        // vanishes), so a negative value at the bottom guarantees a bracket.
        let alloc_start = if model.is_multiplicative() {
            let at_lo = field.static_virtual(t_lo)?;
            if at_lo >= 0.0 {
                t_lo
            } else {
                find_root(
                    |t| field.static_virtual(t).unwrap_or(f64::NAN),
                    t_lo,
                    t_hi,
                    opts.tolerances.root,
                )?
            }
        } else {
            t_lo
        };

        let mut mech = DirectMechanism {
            model: model.clone(),
            field,
            theta_grid,
            v_grid,
            alloc_start,
            base_values: Vec::new(),
            expected_values: Vec::new(),
            base: MonotoneCubic::new(&[t_lo, t_hi], &[0.0, 0.0])?,
            profit: 0.0,
            tol: opts.tolerances,
        };

        // Tabulate U progressively along the grid (one quadrature panel per
        // segment), then recover the base utility at each node.
        let pts: Vec<f64> = mech.theta_grid.points().to_vec();
        let rule = default_rule();
        let mut acc = 0.0;
        let mut expected_values = Vec::with_capacity(pts.len());
        let mut base_values = Vec::with_capacity(pts.len());
        for (i, &theta) in pts.iter().enumerate() {
            if i > 0 {
                acc += integrate_with_breaks(
                    |t| mech.envelope_rate(t).unwrap_or(f64::NAN),
                    pts[i - 1],
                    theta,
                    &[mech.alloc_start],
                    rule,
                )?;
            }
            expected_values.push(acc);
            base_values.push(acc - mech.expected_rent(theta)?);
        }
        mech.base = MonotoneCubic::new(&pts, &base_values)?;
        mech.base_values = base_values;
        mech.expected_values = expected_values;
        mech.profit = mech.compute_profit()?;
        Ok(mech)
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn field(&self) -> &VirtualValueField {
        &self.field
    }

    pub fn theta_grid(&self) -> &Grid {
        &self.theta_grid
    }

    pub fn v_grid(&self) -> &Grid {
        &self.v_grid
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// Lowest signal that trades with positive probability (in families with
    /// the product structure; the full support lower bound otherwise).
    pub fn exclusion_start(&self) -> f64 {
        self.alloc_start
    }

    /// Cached `u(theta_i, v_min)` values, aligned with `theta_grid`.
    pub fn base_values(&self) -> &[f64] {
        &self.base_values
    }

    /// Cached `U(theta_i)` values, aligned with `theta_grid`.
    pub fn expected_values(&self) -> &[f64] {
        &self.expected_values
    }

    /// Conditional value support at a signal.
    pub fn value_support(&self, theta: f64) -> (f64, f64) {
        (
            self.model.family.support_lo(theta),
            self.model.family.support_hi(theta),
        )
    }

    /// `phi(theta, v)`.
    pub fn phi(&self, theta: f64, v: f64) -> Result<f64> {
        self.field.dynamic(theta, v)
    }

    /// The value at which `phi(theta, .)` crosses zero, when the crossing is
    /// interior to the conditional support (the allocation kinks there).
    pub fn exclusion_value(&self, theta: f64) -> Result<Option<f64>> {
        Ok(match self.value_cut(theta)? {
            ValueCut::Root(r) => Some(r),
            _ => None,
        })
    }

    /// Optimal quantity `q(theta, v)`.
    pub fn quantity(&self, theta: f64, v: f64) -> Result<f64> {
        Ok(self.alloc(self.field.dynamic(theta, v)?))
    }

    /// `q(theta, v)^alpha`, the buyer's marginal utility of value.
    pub fn quantity_pow(&self, theta: f64, v: f64) -> Result<f64> {
        Ok(self.alloc_pow(self.field.dynamic(theta, v)?))
    }

    /// Marginal price charged at the optimal quantity,
    /// `cost * v / phi(theta, v)`. Excluded points have no trade and no
    /// marginal price.
    pub fn marginal_price(&self, theta: f64, v: f64) -> Result<f64> {
        let phi = self.field.dynamic(theta, v)?;
        if phi <= 0.0 {
            return Err(Error::ExcludedPoint { theta, v });
        }
        Ok(self.model.env.cost * v / phi)
    }

    /// `u(theta, v_min)`: the ex-post utility at the lowest value in the
    /// hull, interpolated from the solver cache.
    pub fn base_utility(&self, theta: f64) -> f64 {
        self.base.eval(theta)
    }

    /// Accumulated information rent `u(theta, v) - u(theta, v_min)`,
    /// i.e. the integral of `q^alpha` from the hull bottom up to `v`.
    pub fn cumulative_rent(&self, theta: f64, v: f64) -> Result<f64> {
        self.check_theta(theta)?;
        let lo = self.model.family.global_lo();
        let hi = self.model.family.global_hi();
        if !(v.is_finite() && v >= lo - 1e-9 && v <= hi + 1e-9) {
            return Err(Error::InvalidDomain(format!(
                "value {v} outside the hull [{lo}, {hi}]"
            )));
        }
        let v = v.clamp(lo, hi);
        let start = match self.value_cut(theta)? {
            ValueCut::AllExcluded => return Ok(0.0),
            ValueCut::AllIncluded => lo,
            ValueCut::Root(r) => r,
        };
        if v <= start {
            return Ok(0.0);
        }
        integrate(
            |x| self.alloc_pow_or_nan(theta, x),
            start,
            v,
            default_rule(),
        )
    }

    /// Ex-post utility `u(theta, v)`.
    pub fn expost_utility(&self, theta: f64, v: f64) -> Result<f64> {
        Ok(self.base_utility(theta) + self.cumulative_rent(theta, v)?)
    }

    /// Transfer `t(theta, v) = v * q^alpha - u`.
    pub fn transfer(&self, theta: f64, v: f64) -> Result<f64> {
        let gross = v * self.alloc_pow(self.field.dynamic(theta, v)?);
        Ok(gross - self.expost_utility(theta, v)?)
    }

    /// Envelope growth rate of the interim utility,
    /// `U'(theta) = -integral q^alpha dG/dtheta dv`.
    pub fn envelope_rate(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        let (lo, hi) = self.value_support(theta);
        let from = match self.value_cut(theta)? {
            ValueCut::AllExcluded => return Ok(0.0),
            ValueCut::AllIncluded => lo,
            ValueCut::Root(r) => r.max(lo),
        };
        let raw = integrate(
            |v| {
                let pow = self.alloc_pow_or_nan(theta, v);
                pow * self.model.family.theta_partial(v, theta)
            },
            from,
            hi,
            default_rule(),
        )?;
        Ok(-raw)
    }

    /// Interim expected utility `U(theta)`, integrated directly from the
    /// envelope rate (exact for off-grid signals).
    pub fn expected_utility(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        let t_lo = self.model.theta_bounds().0;
        if theta <= t_lo {
            return Ok(0.0);
        }
        let cuts = panel_cuts(t_lo, theta, self.alloc_start);
        integrate_with_breaks(
            |t| self.envelope_rate(t).unwrap_or(f64::NAN),
            t_lo,
            theta,
            &cuts,
            default_rule(),
        )
    }

    /// Expected seller profit, computed at solve time from realized
    /// transfers net of cost (the interim utilities enter by parts).
    pub fn seller_profit(&self) -> f64 {
        self.profit
    }

    /// Expected seller profit recomputed through the virtual surplus,
    /// `E[phi * q^alpha - cost * q]`. Agrees with [`seller_profit`] up to
    /// quadrature error; the two routes share no intermediate values beyond
    /// the allocation itself, so their agreement is a useful audit.
    ///
    /// [`seller_profit`]: DirectMechanism::seller_profit
    pub fn profit_virtual_route(&self) -> Result<f64> {
        let (t_lo, t_hi) = self.model.theta_bounds();
        let cuts = panel_cuts(t_lo, t_hi, self.alloc_start);
        integrate_with_breaks(
            |t| {
                self.signal_pdf(t)
                    * self
                        .virtual_flow(t)
                        .unwrap_or(f64::NAN)
            },
            t_lo,
            t_hi,
            &cuts,
            default_rule(),
        )
    }

    // ---- internals ----

    fn check_theta(&self, theta: f64) -> Result<()> {
        let (lo, hi) = self.model.theta_bounds();
        if !(theta.is_finite() && theta >= lo - 1e-9 && theta <= hi + 1e-9) {
            return Err(Error::InvalidDomain(format!(
                "signal {theta} outside the support [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    fn signal_pdf(&self, theta: f64) -> f64 {
        self.model.signal.pdf(theta)
    }

    /// `q` from a virtual value.
    fn alloc(&self, phi: f64) -> f64 {
        if phi <= 0.0 {
            return 0.0;
        }
        let env = &self.model.env;
        (env.alpha / env.cost * phi).powf(1.0 / (1.0 - env.alpha))
    }

    /// `q^alpha` from a virtual value.
    fn alloc_pow(&self, phi: f64) -> f64 {
        if phi <= 0.0 {
            return 0.0;
        }
        let env = &self.model.env;
        (env.alpha / env.cost * phi).powf(env.alpha / (1.0 - env.alpha))
    }

    fn alloc_pow_or_nan(&self, theta: f64, v: f64) -> f64 {
        match self.field.dynamic(theta, v) {
            Ok(phi) => self.alloc_pow(phi),
            Err(_) => f64::NAN,
        }
    }

    /// Locates the zero crossing of `phi(theta, .)` over the conditional
    /// support. Families with the product structure inherit the sign of the
    /// static virtual value; generic families are bracketed numerically.
    fn value_cut(&self, theta: f64) -> Result<ValueCut> {
        if self.model.is_multiplicative() {
            return Ok(if self.field.static_virtual(theta)? >= 0.0 {
                ValueCut::AllIncluded
            } else {
                ValueCut::AllExcluded
            });
        }
        let (lo, hi) = self.value_support(theta);
        let at_lo = self.field.dynamic(theta, lo)?;
        if at_lo >= 0.0 {
            return Ok(ValueCut::AllIncluded);
        }
        let at_hi = self.field.dynamic(theta, hi)?;
        if at_hi <= 0.0 {
            return Ok(ValueCut::AllExcluded);
        }
        let root = find_root(
            |v| self.field.dynamic(theta, v).unwrap_or(f64::NAN),
            lo,
            hi,
            self.tol.root,
        )?;
        Ok(ValueCut::Root(root))
    }

    /// `E_v[u(theta, v) - u(theta, v_min) | theta]`: the conditional mean of
    /// the accumulated rent, used to recover the base utility from `U`.
    pub(crate) fn expected_rent(&self, theta: f64) -> Result<f64> {
        let (lo, hi) = self.value_support(theta);
        let breaks = match self.value_cut(theta)? {
            ValueCut::AllExcluded => return Ok(0.0),
            ValueCut::AllIncluded => Vec::new(),
            ValueCut::Root(r) => vec![r],
        };
        integrate_with_breaks(
            |v| {
                self.cumulative_rent(theta, v).unwrap_or(f64::NAN)
                    * self.model.family.pdf(v, theta)
            },
            lo,
            hi,
            &breaks,
            default_rule(),
        )
    }

    /// `E_v[v q^alpha - cost * q | theta]`: the seller's flow from realized
    /// transfers gross of the buyer's interim rent.
    pub(crate) fn surplus_flow(&self, theta: f64) -> Result<f64> {
        self.conditional_flow(theta, |v, phi| v * self.alloc_pow(phi) - self.model.env.cost * self.alloc(phi))
    }

    /// `E_v[phi q^alpha - cost * q | theta]`.
    fn virtual_flow(&self, theta: f64) -> Result<f64> {
        self.conditional_flow(theta, |_, phi| {
            phi * self.alloc_pow(phi) - self.model.env.cost * self.alloc(phi)
        })
    }

    fn conditional_flow(&self, theta: f64, integrand: impl Fn(f64, f64) -> f64) -> Result<f64> {
        let (lo, hi) = self.value_support(theta);
        let breaks = match self.value_cut(theta)? {
            ValueCut::AllExcluded => return Ok(0.0),
            ValueCut::AllIncluded => Vec::new(),
            ValueCut::Root(r) => vec![r],
        };
        integrate_with_breaks(
            |v| match self.field.dynamic(theta, v) {
                Ok(phi) => integrand(v, phi) * self.model.family.pdf(v, theta),
                Err(_) => f64::NAN,
            },
            lo,
            hi,
            &breaks,
            default_rule(),
        )
    }

    /// Profit from the transfer side:
    /// `integral f(theta) (E_v[v q^alpha - cost q] - U(theta)) dtheta`.
    /// The `U` term integrates by parts to `U(theta_hi) - integral U' F`,
    /// which avoids nesting a signal integral inside a signal integral.
    fn compute_profit(&self) -> Result<f64> {
        let (t_lo, t_hi) = self.model.theta_bounds();
        let cuts = panel_cuts(t_lo, t_hi, self.alloc_start);
        let rule = default_rule();
        let flow = integrate_with_breaks(
            |t| self.signal_pdf(t) * self.surplus_flow(t).unwrap_or(f64::NAN),
            t_lo,
            t_hi,
            &cuts,
            rule,
        )?;
        let rent_tail = integrate_with_breaks(
            |t| self.envelope_rate(t).unwrap_or(f64::NAN) * self.model.signal.cdf(t),
            t_lo,
            t_hi,
            &cuts,
            rule,
        )?;
        let u_top = *self
            .expected_values
            .last()
            .expect("solve tabulates at least two nodes");
        Ok(flow - u_top + rent_tail)
    }
}

/// Interior panel boundaries for signal-axis integrals: eighth points plus
/// the exclusion threshold. The integrands are smooth within panels; the
/// threshold is the one kink.
pub(crate) fn panel_cuts(lo: f64, hi: f64, exclusion: f64) -> Vec<f64> {
    let mut cuts: Vec<f64> = (1..8)
        .map(|k| lo + (hi - lo) * k as f64 / 8.0)
        .collect();
    cuts.push(exclusion);
    cuts
}

fn describe_worst(diag: &crate::diagnostics::Diagnostic) -> String {
    match diag.worst() {
        Some(w) => match w.v {
            Some(v) => format!(
                "worst violation {:.3e} at theta = {:.6}, v = {:.6} ({} sites)",
                w.magnitude,
                w.theta,
                v,
                diag.violations.len()
            ),
            None => format!(
                "worst violation {:.3e} at theta = {:.6} ({} sites)",
                w.magnitude,
                w.theta,
                diag.violations.len()
            ),
        },
        None => "no violations".to_string(),
    }
}
