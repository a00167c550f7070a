//! `rotation` — optimal forest rotation under carbon pricing and damage risk.
//!
//! Subcommands: `solve` (optimal rotation for one scenario), `simulate`
//! (Monte Carlo summary at the optimal or a configured rotation age),
//! `sweep` (carbon-price x damage-rate grid with frontier extraction) and
//! `curves` (growth/price and carbon-decay tabulations).

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use rotation_cli::config::{ResolvedScenario, ScenarioConfig};
use rotation_cli::output::{self, OutputWriter};
use rotation_cli::CliError;
use rotation_core::{
    extract_frontier, run_sweep, simulate_summary, solve_with, ModelError, SimulationConfig,
    SweepGrid, SweepSimSettings,
};

#[derive(Debug, Parser)]
#[command(
    name = "rotation",
    version,
    about = "Optimal forest rotation under carbon pricing and stochastic damage risk"
)]
struct Cli {
    #[command(subcommand)]
    command: Mode,
    /// Scenario file (TOML); the bundled Scots pine fire preset when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (default: config, then $ROTATION_OUT_DIR, then ./out).
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Override the simulation seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 or omitted picks the machine default.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Mode {
    /// Solve for the optimal rotation and write solution.json.
    Solve,
    /// Monte Carlo summary at the optimal (or configured) rotation age.
    Simulate,
    /// Solve and simulate every carbon-price x damage-rate grid cell.
    Sweep,
    /// Tabulate growth/price curves and post-event carbon decay.
    Curves,
}

impl Mode {
    fn name(&self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Simulate => "simulate",
            Mode::Sweep => "sweep",
            Mode::Curves => "curves",
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        let doc = serde_json::json!({
            "error": { "kind": err.kind_name(), "message": err.message }
        });
        eprintln!("{doc}");
        std::process::exit(err.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default_preset(),
    };
    if let Some(seed) = cli.seed {
        config.simulation.seed = seed;
    }
    if let Some(workers) = cli.workers {
        config.simulation.workers = workers;
    }
    if config.simulation.workers > 0 {
        // Ignore the error when a pool already exists (e.g. in tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.simulation.workers)
            .build_global();
    }

    let out_dir = cli
        .output
        .or_else(|| config.run.output_dir.clone().map(PathBuf::from))
        .or_else(|| std::env::var_os("ROTATION_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let scenario = config.resolve(cli.command.name())?;
    for warning in &scenario.warnings {
        eprintln!("warning: {warning}");
    }
    let mut writer = OutputWriter::new(&out_dir, &scenario.config)?;

    match cli.command {
        Mode::Solve => run_solve(&scenario, &mut writer),
        Mode::Simulate => run_simulate(&scenario, &mut writer),
        Mode::Sweep => run_sweep_mode(&scenario, &mut writer),
        Mode::Curves => run_curves(&scenario, &mut writer),
    }?;

    for path in &writer.written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_solve(scenario: &ResolvedScenario, writer: &mut OutputWriter) -> Result<(), CliError> {
    let problem = scenario.problem()?;
    let solution = solve_with(&problem, &scenario.solver).map_err(CliError::numerical)?;
    println!(
        "{} / {}: regime {}, LEV {:.2} eur/ha{}",
        scenario.species.name,
        scenario.damage,
        output::regime_name(&solution.regime),
        solution.lev,
        solution
            .regime
            .t_star()
            .map(|t| format!(", T* = {t:.3} yr"))
            .unwrap_or_default(),
    );
    writer.write_solution(
        &scenario.species.name,
        scenario.damage,
        scenario.econ.carbon_price,
        scenario.damage_rate,
        &solution,
    )?;
    Ok(())
}

fn run_simulate(scenario: &ResolvedScenario, writer: &mut OutputWriter) -> Result<(), CliError> {
    let problem = scenario.problem()?;
    let rotation_age = match scenario.config.run.rotation_age {
        Some(age) => age,
        None => {
            let solution = solve_with(&problem, &scenario.solver).map_err(CliError::numerical)?;
            solution.rotation_age().ok_or_else(|| {
                CliError::numerical(ModelError::Numerical {
                    op: "simulate",
                    reason: "no positive-value policy to simulate".to_string(),
                })
            })?
        }
    };
    // Regime and land value derive from the rotation age alone, so a
    // re-ingested solution reproduces the solve-then-simulate bytes exactly.
    let (regime, lev) = if rotation_age.is_finite() {
        (
            "finite",
            problem
                .land_value(rotation_age)
                .map_err(CliError::numerical)?,
        )
    } else {
        (
            "infinite",
            problem.land_value_infinite().map_err(CliError::numerical)?,
        )
    };

    let sim = &scenario.config.simulation;
    let npv_config = SimulationConfig {
        n_paths: sim.n_paths,
        horizon: sim.npv_horizon,
        rng_seed: sim.seed,
        time_step: sim.time_step,
    };
    let stock_config = SimulationConfig {
        horizon: sim.stock_horizon,
        ..npv_config
    };
    let summary = simulate_summary(&problem, rotation_age, &npv_config, &stock_config)
        .map_err(CliError::numerical)?;
    if summary.horizon_warning {
        eprintln!(
            "warning: npv_horizon {} yr is short: the discount factor at the horizon \
             exceeds 1e-3, the NPV estimate is truncated",
            sim.npv_horizon
        );
    }
    println!(
        "{} / {}: rotation {}, mean NPV {:.2} eur/ha, rel std {:.4}, stock {:.1} tCO2/ha, \
         harvest {:.3} m3/ha/yr",
        scenario.species.name,
        scenario.damage,
        if rotation_age.is_finite() {
            format!("{rotation_age:.3} yr")
        } else {
            "never".to_string()
        },
        summary.mean_npv,
        summary.rel_std_npv,
        summary.avg_carbon_stock,
        summary.avg_harvest,
    );
    writer.write_summary(
        &scenario.species.name,
        scenario.damage,
        scenario.econ.carbon_price,
        scenario.damage_rate,
        lev,
        regime,
        &summary,
    )?;
    Ok(())
}

fn run_sweep_mode(scenario: &ResolvedScenario, writer: &mut OutputWriter) -> Result<(), CliError> {
    let sweep_block = &scenario.config.sweep;
    let defaults = SweepGrid::default_grid(scenario.sweep_species.clone(), scenario.damage);
    let grid = SweepGrid {
        carbon_prices: if sweep_block.carbon_prices.is_empty() {
            defaults.carbon_prices
        } else {
            sweep_block.carbon_prices.clone()
        },
        damage_rates: if sweep_block.damage_rates.is_empty() {
            defaults.damage_rates
        } else {
            sweep_block.damage_rates.clone()
        },
        species: scenario.sweep_species.clone(),
        damage_kind: scenario.damage,
    };
    let settings = sweep_block.simulate.then_some(SweepSimSettings {
        n_paths: sweep_block.n_paths,
        npv_horizon: scenario.config.simulation.npv_horizon,
        stock_horizon: scenario.config.simulation.stock_horizon,
        time_step: scenario.config.simulation.time_step,
        rng_seed: scenario.config.simulation.seed,
    });

    let cells = run_sweep(
        &grid,
        &scenario.econ,
        &scenario.price,
        settings.as_ref(),
        &scenario.solver,
    )
    .map_err(CliError::numerical)?;

    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    if failed > 0 {
        eprintln!(
            "warning: {failed} of {} sweep cells failed; see sweep_cells.csv",
            cells.len()
        );
    }

    let mut frontiers = Vec::new();
    for species in &grid.species {
        match extract_frontier(&cells, &species.name, grid.damage_kind) {
            Ok(mut curves) => frontiers.append(&mut curves),
            Err(err) => eprintln!("warning: frontier for {}: {err}", species.name),
        }
    }

    println!(
        "swept {} cells ({} species x {} prices x {} damage rates), {} frontier curves",
        cells.len(),
        grid.species.len(),
        grid.carbon_prices.len(),
        grid.damage_rates.len(),
        frontiers.len(),
    );
    writer.write_sweep(
        &cells,
        &frontiers,
        &grid.carbon_prices,
        &grid.damage_rates,
        &grid.species,
    )?;
    Ok(())
}

fn run_curves(scenario: &ResolvedScenario, writer: &mut OutputWriter) -> Result<(), CliError> {
    for species in &scenario.sweep_species {
        writer.write_curves(species, &scenario.price)?;
    }
    Ok(())
}
