//! Bit-stable output files: CSV/JSON emission with fixed numeric precision.
//!
//! Every float is written with 17 significant digits so re-running a
//! scenario yields byte-identical files, and every artifact embeds the
//! config hash and seed of the run that produced it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use rotation_core::{
    DamageKind, FrontierCurve, Regime, RotationSolution, SimulationSummary, SpeciesParams,
    SweepCell,
};

use crate::config::ScenarioConfig;
use crate::CliError;

/// 17 significant digits: lossless for f64, stable across runs.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_f64)
}

/// FNV-1a hash over the problem-defining parts of the config. Orchestration
/// details that cannot change results -- the run block and the worker count
/// -- are excluded, so a re-ingested rotation age or a different thread
/// count keeps the scenario identity.
pub fn config_hash(config: &ScenarioConfig) -> String {
    let sim = &config.simulation;
    let canonical = serde_json::to_string(&(
        &config.economics,
        &config.price,
        &config.damage,
        (
            sim.n_paths,
            sim.npv_horizon,
            sim.stock_horizon,
            sim.time_step,
            sim.seed,
        ),
        &config.sweep,
        &config.solver,
        &config.species,
    ))
    .unwrap_or_default();
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in canonical.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

pub struct OutputWriter {
    dir: PathBuf,
    hash: String,
    seed: u64,
    pub written: Vec<PathBuf>,
}

impl OutputWriter {
    pub fn new(dir: &Path, config: &ScenarioConfig) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::io(format!("cannot create `{}`: {e}", dir.display())))?;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            hash: config_hash(config),
            seed: config.simulation.seed,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::io(format!("cannot write `{}`: {e}", path.display())))?;
        self.written.push(path.clone());
        Ok(path)
    }

    fn csv_header(&self) -> String {
        format!("# config_hash={} seed={}\n", self.hash, self.seed)
    }

    pub fn write_json<T: Serialize>(
        &mut self,
        name: &str,
        payload: &T,
    ) -> Result<PathBuf, CliError> {
        let body = serde_json::to_string_pretty(payload)
            .map_err(|e| CliError::io(format!("serialize {name}: {e}")))?;
        self.write(name, &format!("{body}\n"))
    }

    pub fn write_solution(
        &mut self,
        scenario_species: &str,
        damage: DamageKind,
        carbon_price: f64,
        damage_rate: f64,
        solution: &RotationSolution,
    ) -> Result<PathBuf, CliError> {
        #[derive(Serialize)]
        struct SolutionDoc<'a> {
            config_hash: &'a str,
            seed: u64,
            species: &'a str,
            damage_kind: DamageKind,
            carbon_price: f64,
            damage_rate: f64,
            /// None encodes the never-harvest (infinite rotation) policy.
            rotation_age: Option<f64>,
            solution: &'a RotationSolution,
        }
        let rotation_age = solution.rotation_age().filter(|age| age.is_finite());
        let doc = SolutionDoc {
            config_hash: &self.hash.clone(),
            seed: self.seed,
            species: scenario_species,
            damage_kind: damage,
            carbon_price,
            damage_rate,
            rotation_age,
            solution,
        };
        self.write_json("solution.json", &doc)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn write_summary(
        &mut self,
        species: &str,
        damage: DamageKind,
        carbon_price: f64,
        damage_rate: f64,
        lev: f64,
        regime: &str,
        summary: &SimulationSummary,
    ) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct SummaryDoc<'a> {
            config_hash: &'a str,
            seed: u64,
            species: &'a str,
            damage_kind: DamageKind,
            carbon_price: f64,
            damage_rate: f64,
            regime: &'a str,
            lev: f64,
            summary: &'a SimulationSummary,
        }
        let doc = SummaryDoc {
            config_hash: &self.hash.clone(),
            seed: self.seed,
            species,
            damage_kind: damage,
            carbon_price,
            damage_rate,
            regime,
            lev,
            summary,
        };
        self.write_json("summary.json", &doc)?;

        let mut csv = self.csv_header();
        csv.push_str(
            "species,damage_kind,carbon_price,damage_rate,regime,rotation_age,lev,mean_npv,\
             rel_std_npv,ci_halfwidth_npv,avg_carbon_stock,ci_halfwidth_stock,avg_harvest,\
             ci_halfwidth_harvest,avg_harvest_analytic,n_paths,rng_seed,npv_horizon,\
             stock_horizon,time_step,horizon_warning\n",
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            species,
            damage,
            fmt_f64(carbon_price),
            fmt_f64(damage_rate),
            regime,
            fmt_opt(summary.rotation_age),
            fmt_f64(lev),
            fmt_f64(summary.mean_npv),
            fmt_f64(summary.rel_std_npv),
            fmt_f64(summary.ci_halfwidth_npv),
            fmt_f64(summary.avg_carbon_stock),
            fmt_f64(summary.ci_halfwidth_stock),
            fmt_f64(summary.avg_harvest),
            fmt_f64(summary.ci_halfwidth_harvest),
            fmt_f64(summary.avg_harvest_analytic),
            summary.n_paths,
            summary.rng_seed,
            fmt_f64(summary.npv_horizon),
            fmt_f64(summary.stock_horizon),
            fmt_f64(summary.time_step),
            summary.horizon_warning,
        ));
        self.write("summary.csv", &csv)?;
        Ok(())
    }

    pub fn write_sweep(
        &mut self,
        cells: &[SweepCell],
        frontiers: &[FrontierCurve],
        grid_prices: &[f64],
        grid_rates: &[f64],
        species: &[SpeciesParams],
    ) -> Result<(), CliError> {
        // One row per cell, all fields.
        let mut csv = self.csv_header();
        csv.push_str(
            "species,damage_kind,carbon_price,damage_rate,regime,t_star,lev,foc_residual,\
             avg_harvest,avg_carbon_stock,rel_std_npv,error\n",
        );
        for cell in cells {
            let (regime, t_star, lev, residual) = match &cell.solution {
                Some(s) => (
                    regime_name(&s.regime),
                    match s.regime {
                        Regime::Finite { t_star } => fmt_f64(t_star),
                        Regime::Infinite => "inf".to_string(),
                        Regime::NoPositiveValue => String::new(),
                    },
                    fmt_f64(s.lev),
                    fmt_f64(s.foc_residual),
                ),
                None => ("error", String::new(), String::new(), String::new()),
            };
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                cell.species,
                cell.damage_kind,
                fmt_f64(cell.carbon_price),
                fmt_f64(cell.damage_rate),
                regime,
                t_star,
                lev,
                residual,
                fmt_opt(cell.avg_harvest),
                fmt_opt(cell.avg_carbon_stock),
                fmt_opt(cell.rel_std_npv),
                cell.error.clone().unwrap_or_default(),
            ));
        }
        self.write("sweep_cells.csv", &csv)?;

        // Frontier polylines, one row per point.
        let mut csv = self.csv_header();
        csv.push_str(
            "species,damage_kind,damage_rate,carbon_price,avg_carbon_stock,avg_harvest,\
             infinite_regime,mixed_regime_curve\n",
        );
        for curve in frontiers {
            for point in &curve.points {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    curve.species,
                    curve.damage_kind,
                    fmt_f64(curve.damage_rate),
                    fmt_f64(point.carbon_price),
                    fmt_f64(point.avg_carbon_stock),
                    fmt_f64(point.avg_harvest),
                    point.infinite_regime,
                    curve.mixed_regime,
                ));
            }
        }
        self.write("frontier.csv", &csv)?;

        // Contour-ready T* matrices, one file per species: damage rates down,
        // carbon prices across.
        for sp in species {
            let mut csv = self.csv_header();
            csv.push_str("damage_rate");
            for p in grid_prices {
                csv.push_str(&format!(",p_c_{p}"));
            }
            csv.push('\n');
            for &rate in grid_rates {
                csv.push_str(&fmt_f64(rate));
                for &p in grid_prices {
                    let entry = cells
                        .iter()
                        .find(|c| {
                            c.species == sp.name && c.carbon_price == p && c.damage_rate == rate
                        })
                        .and_then(|c| c.solution.as_ref())
                        .map(|s| match s.regime {
                            Regime::Finite { t_star } => fmt_f64(t_star),
                            Regime::Infinite => "inf".to_string(),
                            Regime::NoPositiveValue => String::new(),
                        })
                        .unwrap_or_default();
                    csv.push(',');
                    csv.push_str(&entry);
                }
                csv.push('\n');
            }
            self.write(&format!("tstar_grid_{}.csv", sp.name), &csv)?;
        }

        #[derive(Serialize)]
        struct SweepDoc<'a> {
            config_hash: &'a str,
            seed: u64,
            cells: &'a [SweepCell],
            frontiers: &'a [FrontierCurve],
        }
        let doc = SweepDoc {
            config_hash: &self.hash.clone(),
            seed: self.seed,
            cells,
            frontiers,
        };
        self.write_json("sweep.json", &doc)?;
        Ok(())
    }

    /// Growth/price tabulation (ages 0..=200) and decay tabulations
    /// (0..=300 years after the event) for one species.
    pub fn write_curves(
        &mut self,
        species: &SpeciesParams,
        price: &rotation_core::PriceSchedule,
    ) -> Result<(), CliError> {
        let mut csv = self.csv_header();
        csv.push_str("age_years,volume_m3_ha,increment_m3_ha_yr,price_eur_m3\n");
        for age in 0..=200 {
            let t = age as f64;
            csv.push_str(&format!(
                "{},{},{},{}\n",
                age,
                fmt_f64(species.growth.volume(t).map_err(CliError::numerical)?),
                fmt_f64(species.growth.increment(t).map_err(CliError::numerical)?),
                fmt_f64(price.price(t).map_err(CliError::numerical)?),
            ));
        }
        self.write(&format!("growth_curve_{}.csv", species.name), &csv)?;

        for (label, profile) in [
            ("storm", &species.storm),
            ("fire", &species.fire),
            ("harvest", &species.harvest),
        ] {
            let mut csv = self.csv_header();
            csv.push_str("years_since_event,fraction_remaining\n");
            for year in 0..=300 {
                let fraction = profile
                    .remaining_stock_fraction(year as f64)
                    .map_err(CliError::numerical)?;
                csv.push_str(&format!("{},{}\n", year, fmt_f64(fraction)));
            }
            self.write(&format!("carbon_decay_{}_{label}.csv", species.name), &csv)?;
        }
        Ok(())
    }
}

pub fn regime_name(regime: &Regime) -> &'static str {
    match regime {
        Regime::Finite { .. } => "finite",
        Regime::Infinite => "infinite",
        Regime::NoPositiveValue => "no_positive_value",
    }
}
