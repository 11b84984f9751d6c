mod report;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use heatgrid::demand::DemandMode;
use heatgrid::expansion::{self, CarbonBudget};
use heatgrid::fixture::{self, FixtureParams};
use heatgrid::lp::mps::{write_mps, MpsNames};
use heatgrid::lp::SolverOptions;
use heatgrid::scenario::{self, PreparedScenario, ScenarioConfig, ScenarioError};
use log::info;

use report::RunContext;

pub const LOG_ENV: &str = "HEATGRID_LOG";

#[derive(Debug, Parser)]
#[command(name = "heatgrid", version, about = "Heat-pump demand synthesis and expansion planning")]
#[command(after_help = "Log level is read from HEATGRID_LOG (error, warn, info, debug, trace; default info).\n\
Exit codes: 0 success, 1 internal or output error, 2 infeasible model, 3 input error.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Population-weighted national temperature.
    Homo,
    /// Local temperature at every bus.
    Het,
    /// Both variants and a diff report.
    Pair,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the expansion model and write one output bundle per variant.
    Run {
        /// Scenario TOML file.
        scenario: PathBuf,
        /// Output directory; bundles go to `<dir>/<mode>/`.
        output_dir: PathBuf,
        /// Demand variant(s) to solve. Defaults to the scenario's demand_mode.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Budget label from the scenario file. Defaults to the first budget.
        #[arg(long)]
        budget: Option<String>,
        /// Model step in hours, overriding the scenario's step_hours.
        #[arg(long)]
        tau: Option<f64>,
        /// Also write `<dir>/<mode>.mps` (fixed format, generated names) and
        /// `<dir>/<mode>_names.mps` (model names).
        #[arg(long)]
        export_mps: bool,
    },
    /// Write both demand variants and a peak/average summary without solving.
    Demand {
        scenario: PathBuf,
        output_dir: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Load the scenario, select weeks and build both models.
    Validate {
        scenario: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Regenerate the synthetic 3-bus data set.
    Fixture {
        /// Target directory, e.g. data/synthetic_3bus.
        output_dir: PathBuf,
        #[arg(long, default_value_t = FixtureParams::default().seed)]
        seed: u64,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<ScenarioError>() {
        Some(ScenarioError::Infeasible { .. }) => 2,
        Some(e) if e.is_input_error() => 3,
        _ => 1,
    }
}

fn load(path: &Path, tau: Option<f64>) -> Result<(ScenarioConfig, PreparedScenario)> {
    let config = ScenarioConfig::load(path)?;
    let prepared = scenario::prepare(&config, tau)?;
    Ok((config, prepared))
}

fn modes(mode: Mode) -> Vec<DemandMode> {
    match mode {
        Mode::Homo => vec![DemandMode::Homogeneous],
        Mode::Het => vec![DemandMode::Heterogeneous],
        Mode::Pair => vec![DemandMode::Homogeneous, DemandMode::Heterogeneous],
    }
}

fn export_mps(dir: &Path, prepared: &PreparedScenario, mode: DemandMode, budget: &CarbonBudget) -> Result<()> {
    let problem = expansion::build(&prepared.inputs(mode, budget)).map_err(ScenarioError::from)?;
    for (suffix, names) in [("", MpsNames::Generated), ("_names", MpsNames::Original)] {
        let path = dir.join(format!("{}{suffix}.mps", mode.short()));
        let file = fs::File::create(&path).with_context(|| format!("{}: cannot create", path.display()))?;
        let mut out = BufWriter::new(file);
        write_mps(&problem.lp, &prepared.config.name, names, &mut out)
            .with_context(|| format!("{}: cannot write", path.display()))?;
        info!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_run(
    scenario_path: &Path,
    output_dir: &Path,
    mode: Option<Mode>,
    budget: Option<&str>,
    tau: Option<f64>,
    mps: bool,
) -> Result<()> {
    let (config, prepared) = load(scenario_path, tau)?;
    let budget = config.budget(budget)?;
    let ctx = RunContext::new(scenario_path, &prepared)?;
    fs::create_dir_all(output_dir).with_context(|| format!("{}: cannot create directory", output_dir.display()))?;
    let mode = mode.unwrap_or(match config.demand_mode {
        DemandMode::Homogeneous => Mode::Homo,
        DemandMode::Heterogeneous => Mode::Het,
    });
    if mps {
        for m in modes(mode) {
            export_mps(output_dir, &prepared, m, &budget)?;
        }
    }
    let options = SolverOptions::default();
    let results = if mode == Mode::Pair {
        let pair = scenario::run_pair(&prepared, &budget, &options)?;
        report::write_json(output_dir, "diff.json", &pair.diff)?;
        vec![pair.homogeneous, pair.heterogeneous]
    } else {
        vec![scenario::run_variant(&prepared, modes(mode)[0], &budget, &options)?]
    };
    for result in &results {
        let dir = output_dir.join(format!("{:?}", result.mode).to_lowercase());
        report::write_bundle(&dir, &ctx, &prepared, result)?;
        println!(
            "{}: capital {:.6e} $, dispatch {:.6e} $, storage {:.3} GWh / {:.3} GW, max residual {:.2e} -> {}",
            result.mode.short(),
            result.metrics.capital_cost,
            result.metrics.dispatch_cost,
            result.metrics.total_storage_energy,
            result.metrics.total_storage_power,
            result.audit.max_residual,
            dir.display()
        );
        if !result.audit.within_tolerance {
            log::warn!(
                "{} audit exceeds {:e}: {:?}",
                result.mode.short(),
                result.audit.tolerance,
                result.audit.worst()
            );
        }
    }
    Ok(())
}

fn cmd_demand(scenario_path: &Path, output_dir: &Path, tau: Option<f64>) -> Result<()> {
    let (_, prepared) = load(scenario_path, tau)?;
    let ctx = RunContext::new(scenario_path, &prepared)?;
    report::write_demand_bundle(output_dir, &ctx, &prepared)?;
    print!("{}", report::demand_summary_csv(&prepared));
    Ok(())
}

fn cmd_validate(scenario_path: &Path, tau: Option<f64>) -> Result<()> {
    let (config, prepared) = load(scenario_path, tau)?;
    for w in &prepared.weeks {
        println!(
            "month {:>2}: critical {} ({} .. {}){}",
            w.month,
            w.critical_time,
            w.days[0],
            w.days[w.days.len() - 1],
            if w.wrapped { " wrapped" } else { "" }
        );
    }
    for b in &config.budgets {
        let budget = b.resolve().map_err(ScenarioError::from)?;
        for mode in [DemandMode::Homogeneous, DemandMode::Heterogeneous] {
            let problem = expansion::build(&prepared.inputs(mode, &budget)).map_err(ScenarioError::from)?;
            println!(
                "budget {} ({} tCO2e), {}: {} variables, {} rows, {} nonzeros",
                budget.label,
                budget.limit,
                mode.short(),
                problem.lp.num_vars(),
                problem.lp.num_rows(),
                problem.lp.matrix.len()
            );
        }
    }
    Ok(())
}

fn cmd_fixture(dir: &Path, seed: u64) -> Result<()> {
    let params = FixtureParams { seed, ..FixtureParams::default() };
    let files = fixture::write(&params, dir)?;
    println!("wrote {} files under {}", files.len(), dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "info")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { scenario, output_dir, mode, budget, tau, export_mps } => {
            cmd_run(scenario, output_dir, *mode, budget.as_deref(), *tau, *export_mps)
        }
        Command::Demand { scenario, output_dir, tau } => cmd_demand(scenario, output_dir, *tau),
        Command::Validate { scenario, tau } => cmd_validate(scenario, *tau),
        Command::Fixture { output_dir, seed } => cmd_fixture(output_dir, *seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
