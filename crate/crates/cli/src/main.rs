use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mimocap_cli::error::{CliError, CliResult};
use mimocap_cli::report::{kkt_json, kkt_text, matrix_json, SolveRendering};
use mimocap_cli::scenario::{load_covariance, Scenario};
use mimocap_cli::sweep::sweep_to_writer;
use mimocap_core::{
    kkt_check, log_det_capacity, multiplier_estimate, regime_budget, solve, ConstraintRegime,
    CovarianceSolution, Provenance,
};

#[derive(Parser)]
#[command(
    name = "mimocap",
    about = "Capacity and optimal transmit covariance of fixed Gaussian MIMO channels \
             under total, per-antenna, and joint power constraints",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum RegimeArg {
    Tpc,
    Pac,
    Joint,
}

impl From<RegimeArg> for ConstraintRegime {
    fn from(arg: RegimeArg) -> Self {
        match arg {
            RegimeArg::Tpc => ConstraintRegime::TpcOnly,
            RegimeArg::Pac => ConstraintRegime::PacOnly,
            RegimeArg::Joint => ConstraintRegime::Joint,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and print the optimal covariance, capacity,
    /// multipliers, activity flags, and a KKT audit.
    Solve {
        /// Scenario JSON file.
        file: PathBuf,
        /// Override the scenario's constraint regime.
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
        /// Display capacity in bits instead of nats.
        #[arg(long)]
        bits: bool,
        /// Machine-readable JSON output.
        #[arg(long)]
        json: bool,
    },
    /// Sweep the total power over a grid and emit a CSV of capacities under
    /// all regimes (the per-antenna power is fixed by the scenario).
    Sweep {
        /// Scenario JSON file.
        file: PathBuf,
        /// Smallest total power of the grid.
        #[arg(long)]
        ptmin: f64,
        /// Largest total power of the grid.
        #[arg(long)]
        ptmax: f64,
        /// Number of grid points (inclusive endpoints).
        #[arg(long)]
        steps: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit a covariance file against a scenario's optimality conditions.
    /// Exit code 3 when the KKT check fails.
    Check {
        /// Scenario JSON file.
        file: PathBuf,
        /// Covariance JSON file (m x m nested [re, im] pairs).
        #[arg(long)]
        cov: PathBuf,
    },
}

fn cmd_solve(file: &Path, regime: Option<RegimeArg>, bits: bool, json: bool) -> CliResult<()> {
    let scenario = Scenario::load(file)?;
    let regime = regime
        .map(ConstraintRegime::from)
        .unwrap_or(scenario.regime);
    let solution = solve(&scenario.gram, &scenario.budget, regime)?;
    let audit_budget = regime_budget(&scenario.budget, regime, scenario.gram.dim());
    let report = kkt_check(&scenario.gram, &audit_budget, &solution);
    let rendering = SolveRendering {
        label: scenario.label.as_deref(),
        regime,
        budget: &scenario.budget,
        gram: &scenario.gram,
        solution: &solution,
        kkt: &report,
        bits,
    };
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&rendering.to_json()).expect("valid json")
        );
    } else {
        print!("{}", rendering.to_text());
    }
    Ok(())
}

fn cmd_sweep(
    file: &Path,
    ptmin: f64,
    ptmax: f64,
    steps: usize,
    out: Option<&Path>,
) -> CliResult<()> {
    let scenario = Scenario::load(file)?;
    let result = match out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::io(format!("cannot create {}", path.display()), e))?;
            let mut writer = BufWriter::new(file);
            let r = sweep_to_writer(
                &scenario.gram,
                scenario.budget.p_antenna(),
                ptmin,
                ptmax,
                steps,
                &mut writer,
            );
            writer
                .flush()
                .map_err(|e| CliError::io("cannot flush CSV", e))?;
            r
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            sweep_to_writer(
                &scenario.gram,
                scenario.budget.p_antenna(),
                ptmin,
                ptmax,
                steps,
                &mut lock,
            )
        }
    };
    result.map_err(|(rows_written, err)| {
        eprintln!("warning: sweep aborted after {rows_written} rows; partial output was written");
        err
    })
}

fn cmd_check(file: &Path, cov: &Path) -> CliResult<()> {
    let scenario = Scenario::load(file)?;
    let r = load_covariance(cov)?;
    if r.dim() != scenario.gram.dim() {
        return Err(CliError::Validation(format!(
            "covariance dimension {} does not match channel dimension {}",
            r.dim(),
            scenario.gram.dim()
        )));
    }
    let audit_budget = regime_budget(&scenario.budget, scenario.regime, scenario.gram.dim());
    let capacity = log_det_capacity(&scenario.gram, &r)?;
    let estimate = multiplier_estimate(&scenario.gram, &audit_budget, &r);
    let m = scenario.gram.dim();
    let solution = CovarianceSolution {
        capacity,
        lambda: estimate.lambda,
        lambda_i: estimate.lambda_i,
        tpc_active: (r.trace() - scenario.budget.p_total()).abs() <= 1e-8,
        pac_active: (0..m)
            .map(|i| (r.get(i, i).re - scenario.budget.p_antenna()).abs() <= 1e-9)
            .collect(),
        provenance: Provenance::NumericalOracle,
        r,
    };
    let report = kkt_check(&scenario.gram, &audit_budget, &solution);
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "capacity_nats": capacity,
            "lambda": solution.lambda,
            "lambda_i": solution.lambda_i.iter().cloned().collect::<Vec<f64>>(),
            "r": matrix_json(&solution.r),
            "kkt": kkt_json(&report),
        }))
        .expect("valid json")
    );
    eprint!("{}", kkt_text(&report));
    if report.pass {
        Ok(())
    } else {
        Err(CliError::KktFail {
            max_residual: report.max_residual(),
            tolerance: mimocap_core::solvers::KKT_TOL * report.scale,
        })
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Solve {
            file,
            regime,
            bits,
            json,
        } => cmd_solve(file, *regime, *bits, *json),
        Command::Sweep {
            file,
            ptmin,
            ptmax,
            steps,
            out,
        } => cmd_sweep(file, *ptmin, *ptmax, *steps, out.as_deref()),
        Command::Check { file, cov } => cmd_check(file, cov),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
