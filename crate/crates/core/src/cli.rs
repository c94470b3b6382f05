//! Command-line front end: single-point evaluation, solver invocation,
//! bounds, Monte Carlo runs, and the profit-comparison sweep.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::equilibrium::solve_cutoff;
use crate::error::{Error, Result};
use crate::fmt::fmt_g12;
use crate::market::{optimal_price, MarketParams};
use crate::schedule::RewardSchedule;
use crate::sim::{records_to_csv, simulate, SimConfig};
use crate::solvers::{
    optimize_interval_refund, profit_bounds, solve_rate_constrained, solve_relaxed,
    solve_spread_constrained, IntervalSearchConfig, SolverReport,
};
use crate::sweep::{rows_to_csv, rows_to_json, run_sweep, SweepOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "rebate", version, about = "Sales-based rebate design toolkit")]
struct Cli {
    /// Prior mean quality.
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Idiosyncratic taste stddev.
    #[arg(long, global = true)]
    sigma_eps: Option<f64>,
    /// Quality-uncertainty stddev.
    #[arg(long, global = true)]
    sigma_theta: Option<f64>,
    /// Output encoding for structured commands.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write output to a file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Participation-constraint tolerance for the interval search.
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the profit-maximizing fixed price.
    Price,
    /// Solve the consumer cutoff for a schedule JSON file.
    Cutoff {
        /// Path to a RewardSchedule JSON document.
        #[arg(long)]
        schedule: PathBuf,
        /// Price; defaults to the optimal fixed price.
        #[arg(long)]
        price: Option<f64>,
    },
    /// Construct an optimal program (sc | rc | relaxed | intervals).
    Solve {
        #[arg(value_enum)]
        which: Program,
        /// Interval count for the intervals search.
        #[arg(long, default_value_t = 1)]
        levels: usize,
        /// Price; defaults to the optimal fixed price.
        #[arg(long)]
        price: Option<f64>,
    },
    /// Print the profit bounds pi1, pi2, pi_h.
    Bounds {
        #[arg(long)]
        price: Option<f64>,
    },
    /// Monte Carlo run for a schedule file or a solved program.
    Simulate {
        #[arg(long, conflicts_with = "program")]
        schedule: Option<PathBuf>,
        #[arg(long, value_enum)]
        program: Option<Program>,
        #[arg(long, default_value_t = 10_000)]
        agents: usize,
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
        #[arg(long)]
        antithetic: bool,
        /// Write per-draw records as CSV to this path.
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        price: Option<f64>,
    },
    /// Profit-comparison sweep over sigma_eps at fixed total uncertainty.
    Sweep {
        #[arg(long, default_value_t = 1.0)]
        sigma_total: f64,
        /// Grid as lo:hi:n (n points, inclusive).
        #[arg(long)]
        grid: String,
        /// Comma-separated interval counts to search per row.
        #[arg(long)]
        intervals: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Program {
    Sc,
    Rc,
    Relaxed,
    Intervals,
}

fn params_from(cli: &Cli) -> Result<MarketParams> {
    let theta = cli
        .theta
        .ok_or_else(|| Error::InvalidInput("--theta is required".into()))?;
    let se = cli
        .sigma_eps
        .ok_or_else(|| Error::InvalidInput("--sigma-eps is required".into()))?;
    let st = cli
        .sigma_theta
        .ok_or_else(|| Error::InvalidInput("--sigma-theta is required".into()))?;
    MarketParams::new(theta, se, st)
}

fn price_or_optimal(params: &MarketParams, price: Option<f64>) -> Result<f64> {
    match price {
        Some(p) if p > 0.0 => Ok(p),
        Some(p) => Err(Error::InvalidInput(format!("price must be positive, got {p}"))),
        None => optimal_price(params),
    }
}

fn load_schedule(path: &PathBuf) -> Result<RewardSchedule> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    RewardSchedule::from_json(&text)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidInput(format!("grid must be lo:hi:n, got {spec}")));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad grid lower bound {}", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad grid upper bound {}", parts[1])))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad grid count {}", parts[2])))?;
    if n == 0 || !(lo <= hi) {
        return Err(Error::InvalidInput(format!("empty grid {spec}")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn parse_levels(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad interval count {s}")))
        })
        .collect()
}

fn solve_program(
    params: &MarketParams,
    p: f64,
    which: Program,
    levels: usize,
    tol: f64,
) -> Result<(SolverReport, Option<f64>)> {
    match which {
        Program::Sc => Ok((solve_spread_constrained(params, p)?, None)),
        Program::Rc => Ok((solve_rate_constrained(params, p)?, None)),
        Program::Relaxed => {
            let (rep, pi2) = solve_relaxed(params, p)?;
            Ok((rep, Some(pi2)))
        }
        Program::Intervals => {
            let cfg = IntervalSearchConfig { constraint_tol: tol, ..Default::default() };
            Ok((optimize_interval_refund(params, p, levels, &cfg)?, None))
        }
    }
}

fn report_json(rep: &SolverReport, pi2: Option<f64>) -> serde_json::Value {
    let mut v = serde_json::to_value(rep).expect("report serializes");
    let obj = v.as_object_mut().expect("object");
    obj.insert("schema".into(), serde_json::json!(1));
    if let Some(pi2) = pi2 {
        obj.insert("pi2".into(), serde_json::json!(pi2));
    }
    v
}

fn report_csv(rep: &SolverReport) -> String {
    let mut header =
        String::from("converged,residual_inf_norm,iterations,cutoff,expected_profit");
    let mut row = format!(
        "{},{},{},{},{}",
        rep.converged,
        fmt_g12(rep.residual_inf_norm),
        rep.iterations,
        fmt_g12(rep.cutoff),
        fmt_g12(rep.expected_profit)
    );
    for (name, val) in rep.names.iter().zip(&rep.solution) {
        header.push(',');
        header.push_str(name);
        row.push(',');
        row.push_str(&fmt_g12(*val));
    }
    format!("{header}\n{row}\n")
}

fn emit(cli: &Cli, text: String) -> Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Price => {
            let p = optimal_price(&params_from(cli)?)?;
            emit(cli, format!("{}\n", fmt_g12(p)))
        }
        Command::Cutoff { schedule, price } => {
            let params = params_from(cli)?;
            let sched = load_schedule(schedule)?;
            let p = price_or_optimal(&params, *price)?;
            let eq = solve_cutoff(&params, p, &sched)?;
            emit(cli, format!("{}\n", fmt_g12(eq.cutoff)))
        }
        Command::Solve { which, levels, price } => {
            let params = params_from(cli)?;
            let p = price_or_optimal(&params, *price)?;
            let (rep, pi2) = solve_program(&params, p, *which, *levels, cli.tol)?;
            let text = match cli.format {
                Format::Json => format!(
                    "{}\n",
                    serde_json::to_string_pretty(&report_json(&rep, pi2)).expect("json")
                ),
                Format::Csv => report_csv(&rep),
            };
            emit(cli, text)
        }
        Command::Bounds { price } => {
            let params = params_from(cli)?;
            let p = price_or_optimal(&params, *price)?;
            let b = profit_bounds(&params, p)?;
            let text = match cli.format {
                Format::Json => format!(
                    "{}\n",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "schema": 1,
                        "p": p,
                        "pi1": b.pi1,
                        "pi2": b.pi2,
                        "pi_h": b.pi_h,
                    }))
                    .expect("json")
                ),
                Format::Csv => format!(
                    "p,pi1,pi2,pi_h\n{},{},{},{}\n",
                    fmt_g12(p),
                    fmt_g12(b.pi1),
                    fmt_g12(b.pi2),
                    fmt_g12(b.pi_h)
                ),
            };
            emit(cli, text)
        }
        Command::Simulate { schedule, program, agents, draws, antithetic, records, price } => {
            let params = params_from(cli)?;
            let p = price_or_optimal(&params, *price)?;
            let (sched, cutoff) = match (schedule, program) {
                (Some(path), None) => {
                    let sched = load_schedule(path)?;
                    let eq = solve_cutoff(&params, p, &sched)?;
                    (sched, eq.cutoff)
                }
                (None, Some(prog)) => {
                    let (rep, _) = solve_program(&params, p, *prog, 1, cli.tol)?;
                    (rep.schedule, rep.cutoff)
                }
                _ => {
                    return Err(Error::InvalidInput(
                        "simulate needs exactly one of --schedule or --program".into(),
                    ))
                }
            };
            let config = SimConfig {
                n_agents: *agents,
                n_quality_draws: *draws,
                seed: cli.seed,
                antithetic: *antithetic,
            };
            let result = simulate(&params, p, &sched, cutoff, &config)?;
            if let Some(path) = records {
                let recs = result.per_draw_records.as_deref().unwrap_or(&[]);
                std::fs::write(path, records_to_csv(recs))
                    .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
            }
            let text = match cli.format {
                Format::Json => format!(
                    "{}\n",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "schema": 1,
                        "p": p,
                        "cutoff": cutoff,
                        "mean_profit": result.mean_profit,
                        "profit_std_error": result.profit_std_error,
                        "mean_sales_volume": result.mean_sales_volume,
                    }))
                    .expect("json")
                ),
                Format::Csv => format!(
                    "p,cutoff,mean_profit,profit_std_error,mean_sales_volume\n{},{},{},{},{}\n",
                    fmt_g12(p),
                    fmt_g12(cutoff),
                    fmt_g12(result.mean_profit),
                    fmt_g12(result.profit_std_error),
                    fmt_g12(result.mean_sales_volume)
                ),
            };
            emit(cli, text)
        }
        Command::Sweep { sigma_total, grid, intervals } => {
            let theta = cli
                .theta
                .ok_or_else(|| Error::InvalidInput("--theta is required".into()))?;
            let grid = parse_grid(grid)?;
            let mut options = SweepOptions::default();
            if let Some(spec) = intervals {
                options.interval_levels = parse_levels(spec)?;
            }
            options.interval_config.constraint_tol = cli.tol;
            let rows = run_sweep(theta, *sigma_total, &grid, &options)?;
            let text = match cli.format {
                Format::Csv => rows_to_csv(&rows),
                Format::Json => format!(
                    "{}\n",
                    serde_json::to_string_pretty(&rows_to_json(theta, *sigma_total, &rows))
                        .expect("json")
                ),
            };
            emit(cli, text)
        }
    }
}

/// Entry point shared by the binary and tests. Exit codes: 0 success, 2 input
/// error, 3 solver non-convergence / no-equilibrium.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version to stdout with success
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Domain(_) | Error::InvalidInput(_) => 2,
                _ => 3,
            }
        }
    }
}
