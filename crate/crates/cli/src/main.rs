//! Command-line front end for the sequential-screening solver.
//!
//! Subcommands:
//! - `solve` — solve the model and write the mechanism and menu data files.
//! - `figures` — alias of `solve` (the data files feed plotting directly).
//! - `verify` — solve and run the full numerical verification battery.
//! - `sweep` — re-solve a friction across a list of parameter values.
//!
//! Exit codes: 0 success, 2 configuration error, 3 model assumptions
//! violated (the solver refuses), 4 verification checks failed, 5 requested
//! analysis unsupported for the model, 1 anything else.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;
use seqscreen::contracts::{build_committed_spend, build_two_part_tariff};
use seqscreen::export::{
    fmt_sig9, write_committed_csv, write_mechanism_csv, write_spot_csv,
    write_spot_summary_json, write_tariff_csv,
};
use seqscreen::frictions::{optimal_contract_under_gamma, solve_spot_constrained};
use seqscreen::model::fosd_check;
use seqscreen::verify::{
    allocation_oracle_check, check_from_diagnostic, check_ic0, check_ic1, check_ir,
    check_ir_spot, check_nondecreasing, check_revenue_equivalence, single_crossing_audit,
    DeviationMatrix, VerificationReport,
};
use seqscreen::virtual_value::{mhr_check, regularity_check};
use seqscreen::{
    CheckResult, DirectMechanism, Error, Grid, Model, Result, SolveOptions, VirtualValueField,
};

/// Two menu totals computed from the same solved mechanism must agree to
/// quadrature accuracy, not just to the check tolerances above.
const REVENUE_EQ_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(
    name = "seqscreen",
    version,
    about = "Revenue-optimal sequential screening: solve, verify, and sweep"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the model and write mechanism and menu data files.
    Solve(RunArgs),
    /// Alias of `solve`: writes the same data files.
    Figures(RunArgs),
    /// Solve, then check truthfulness, participation, monotonicity, and
    /// revenue equivalence numerically; write report.json.
    Verify(VerifyArgs),
    /// Re-solve a friction over a list of parameter values and tabulate
    /// the headline numbers.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; omitted, the built-in reference model runs.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's outputs.directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Signal grid resolution (overrides the config).
    #[arg(long)]
    theta_points: Option<usize>,
    /// Value grid resolution (overrides the config).
    #[arg(long)]
    v_points: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Tolerance for the truthfulness checks (overrides the config).
    #[arg(long)]
    tol_ic: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Which friction parameter to sweep.
    #[arg(long, value_enum)]
    parameter: SweepParameter,
    /// Comma-separated parameter values; empty writes just the header.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    values: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParameter {
    /// Proportional cost of upfront payments.
    Gamma,
    /// Outside spot-market price.
    SpotPrice,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(args) | Command::Figures(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidDomain(_)
        | Error::InvalidGrid(_)
        | Error::InvalidSchedule(_)
        | Error::TabulatedFormat(_)
        | Error::Io(_)
        | Error::Csv(_) => 2,
        Error::AssumptionViolated { .. } => 3,
        Error::UnsupportedModel { .. } => 5,
        _ => 1,
    }
}

/// A prepared run: configuration merged with command-line overrides and the
/// model built from it.
struct Session {
    config: RunConfig,
    model: Model,
    opts: SolveOptions,
    out_dir: PathBuf,
}

impl Session {
    fn prepare(run: &RunArgs) -> Result<Session> {
        let config = match &run.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let base_dir = run
            .config
            .as_deref()
            .and_then(Path::parent)
            .filter(|dir| !dir.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let model = config.build_model(base_dir)?;
        let mut opts = config.solve_options();
        if let Some(n) = run.theta_points {
            opts.theta_points = n;
        }
        if let Some(n) = run.v_points {
            opts.v_points = n;
        }
        let out_dir = run
            .out
            .clone()
            .unwrap_or_else(|| config.outputs.directory.clone());
        Ok(Session {
            config,
            model,
            opts,
            out_dir,
        })
    }

    fn csv(&self) -> bool {
        self.config.outputs.writes("csv")
    }

    fn json(&self) -> bool {
        self.config.outputs.writes("json")
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write_file<F>(&self, name: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        std::fs::create_dir_all(&self.out_dir)?;
        let path = self.path(name);
        std::fs::write(&path, &buf)?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn cmd_solve(args: &RunArgs) -> Result<u8> {
    let session = Session::prepare(args)?;
    let mech = DirectMechanism::solve(&session.model, &session.opts)?;
    println!(
        "solved on a {} x {} grid; seller profit {}",
        session.opts.theta_points,
        session.opts.v_points,
        fmt_sig9(mech.seller_profit())
    );
    if session.csv() {
        session.write_file("mechanism.csv", |w| write_mechanism_csv(&mech, w))?;
        let tariff = build_two_part_tariff(&mech, session.opts.v_points)?;
        session.write_file("tariff.csv", |w| write_tariff_csv(&tariff, w))?;
        let committed = build_committed_spend(&mech, session.opts.v_points)?;
        session.write_file("committed.csv", |w| write_committed_csv(&committed, w))?;
    }
    if let Some(price) = session.model.env.spot_price {
        let spot = solve_spot_constrained(&mech, price)?;
        println!(
            "spot market at price {}: participation cutoff {}",
            fmt_sig9(price),
            fmt_sig9(spot.theta_star())
        );
        if session.csv() {
            session.write_file("spot.csv", |w| write_spot_csv(&spot, w))?;
        }
        if session.json() {
            session.write_file("spot_summary.json", |w| write_spot_summary_json(&spot, w))?;
        }
    }
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8> {
    let session = Session::prepare(&args.run)?;
    let ic_tol = args.tol_ic.unwrap_or(session.config.tolerances.ic);
    let slack = session.config.tolerances.monotone;

    // Model-assumption diagnostics come first, so a refusal still leaves a
    // report explaining which assumption broke.
    let (t_lo, t_hi) = session.model.theta_bounds();
    let (v_lo, v_hi) = session.model.value_bounds();
    let theta_grid = Grid::linspace(t_lo, t_hi, session.opts.theta_points)?;
    let v_grid = Grid::linspace(v_lo, v_hi, session.opts.v_points)?;
    let field = VirtualValueField::new(&session.model);

    let mut report = VerificationReport::new();
    report.push(check_from_diagnostic(&fosd_check(
        session.model.family.as_ref(),
        &theta_grid,
        &v_grid,
        slack,
    )));
    report.push(check_from_diagnostic(&mhr_check(
        &session.model.signal,
        &theta_grid,
        slack,
    )));
    report.push(check_from_diagnostic(&regularity_check(
        &field,
        &theta_grid,
        &v_grid,
        slack,
    )));

    let mech = match DirectMechanism::solve(&session.model, &session.opts) {
        Ok(mech) => mech,
        Err(err) => {
            finish_report(&session, &report)?;
            return Err(err);
        }
    };
    run_battery(&session, &mech, ic_tol, slack, &mut report)?;

    finish_report(&session, &report)?;
    if report.pass() {
        println!("result: PASS ({} checks)", report.checks.len());
        Ok(0)
    } else {
        println!("result: FAIL");
        Ok(4)
    }
}

/// The mechanism-level checks, in report order.
fn run_battery(
    session: &Session,
    mech: &DirectMechanism,
    ic_tol: f64,
    slack: f64,
    report: &mut VerificationReport,
) -> Result<()> {
    let nodes = mech.theta_grid().points();
    let (_, t_hi) = session.model.theta_bounds();

    // Closed-form allocation against a grid-search maximizer; the tolerance
    // is a small multiple of the search spacing over the searched range.
    let q_points = session.config.grids.q_oracle_points;
    let (_, v_top) = mech.value_support(t_hi);
    let q_cap = 1.5 * mech.quantity(t_hi, v_top)?.max(1e-6);
    let oracle_tol = 2.5 * q_cap / (q_points - 1) as f64;
    report.push(allocation_oracle_check(mech, 20, 20, q_points, oracle_tol)?);

    // First-stage truthfulness on every other solve node, where the
    // deviation payoffs are exact (no interpolation between nodes).
    let coarse: Vec<f64> = nodes.iter().copied().step_by(2).collect();
    let matrix = DeviationMatrix::compute(mech, &coarse, &coarse)?;
    report.push(check_ic0(&matrix, ic_tol)?);
    report.push(single_crossing_audit(&matrix, ic_tol));

    // Second-stage truthfulness at eleven signals, folded to the worst.
    let mut ic1: Option<CheckResult> = None;
    for k in 0..11usize {
        let theta = nodes[k * (nodes.len() - 1) / 10];
        let result = check_ic1(mech, theta, session.opts.v_points, ic_tol)?;
        ic1 = Some(match ic1 {
            Some(best) if best.worst_violation >= result.worst_violation => best,
            _ => result,
        });
    }
    report.push(ic1.expect("eleven signals sampled"));

    report.push(check_ir(mech, nodes, slack)?);

    if let Some(price) = session.model.env.spot_price {
        let spot = solve_spot_constrained(mech, price)?;
        let mut thetas = nodes.to_vec();
        let star = spot.theta_star();
        if thetas.iter().all(|&t| (t - star).abs() > 1e-12) {
            thetas.push(star);
            thetas.sort_by(f64::total_cmp);
        }
        report.push(check_ir_spot(&spot, &thetas, ic_tol)?);
    }

    let tariff = build_two_part_tariff(mech, session.opts.v_points)?;
    let committed = build_committed_spend(mech, session.opts.v_points)?;
    report.push(check_revenue_equivalence(
        mech,
        &tariff,
        &committed,
        session.opts.v_points,
        REVENUE_EQ_TOL,
    )?);
    report.push(check_nondecreasing(
        "upfront_monotone",
        nodes,
        tariff.upfronts(),
        slack,
    ));
    report.push(check_nondecreasing(
        "budget_monotone",
        nodes,
        committed.budgets(),
        slack,
    ));
    Ok(())
}

fn finish_report(session: &Session, report: &VerificationReport) -> Result<()> {
    for check in &report.checks {
        println!(
            "check {:<20} {}  worst {:>13.6e}  tolerance {:.1e}",
            check.check,
            if check.pass { "PASS" } else { "FAIL" },
            check.worst_violation,
            check.tolerance
        );
    }
    if session.json() {
        let body = report.to_json()?;
        session.write_file("report.json", |w| {
            use std::io::Write;
            w.write_all(body.as_bytes())?;
            Ok(())
        })?;
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<u8> {
    let session = Session::prepare(&args.run)?;
    let values = parse_values(&args.values)?;
    match args.parameter {
        SweepParameter::Gamma => sweep_gamma(&session, &values),
        SweepParameter::SpotPrice => sweep_spot_price(&session, &values),
    }
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let value: f64 = part.parse().map_err(|_| {
            Error::InvalidDomain(format!("cannot parse sweep value {part:?} as a number"))
        })?;
        values.push(value);
    }
    Ok(values)
}

fn sweep_gamma(session: &Session, values: &[f64]) -> Result<u8> {
    let mut body = String::from("gamma,buyer_gain_vs_tariff,seller_profit\n");
    if !values.is_empty() {
        let mech = DirectMechanism::solve(&session.model, &session.opts)?;
        let tariff = build_two_part_tariff(&mech, session.opts.v_points)?;
        // Both menus collect the same totals, so under the friction the
        // committed form saves the top type exactly gamma times the
        // tariff's upfront at that signal.
        let top_upfront = *tariff.upfronts().last().expect("tariff has nodes");
        for &gamma in values {
            let (gain, profit) = if gamma == 0.0 {
                (0.0, mech.seller_profit())
            } else {
                let solution = optimal_contract_under_gamma(&mech, gamma, session.opts.v_points)?;
                (gamma * top_upfront, solution.seller_profit)
            };
            body.push_str(&format!(
                "{},{},{}\n",
                fmt_sig9(gamma),
                fmt_sig9(gain),
                fmt_sig9(profit)
            ));
        }
    }
    session.write_file("sweep_gamma.csv", |w| {
        use std::io::Write;
        w.write_all(body.as_bytes())?;
        Ok(())
    })?;
    Ok(0)
}

fn sweep_spot_price(session: &Session, values: &[f64]) -> Result<u8> {
    if !session.model.is_multiplicative() {
        return Err(Error::UnsupportedModel {
            operation: "spot-market-constrained pricing",
        });
    }
    let mut body = String::from("spot_price,theta_star,discount,seller_profit,heuristic_gap\n");
    if !values.is_empty() {
        let mech = DirectMechanism::solve(&session.model, &session.opts)?;
        for &price in values {
            let solution = solve_spot_constrained(&mech, price)?;
            body.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_sig9(price),
                fmt_sig9(solution.theta_star()),
                fmt_sig9(solution.discount()),
                fmt_sig9(solution.seller_profit()?),
                fmt_sig9(solution.heuristic_gap()),
            ));
        }
    }
    session.write_file("sweep_spot_price.csv", |w| {
        use std::io::Write;
        w.write_all(body.as_bytes())?;
        Ok(())
    })?;
    Ok(0)
}
