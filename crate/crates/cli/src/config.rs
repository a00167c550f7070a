//! Scenario configuration: TOML schema, validation and assembly into core
//! model objects. Unknown keys are rejected everywhere so typos fail loudly.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use rotation_core::{
    CarbonPool, DamageKind, EconomicEnv, EventCarbonProfile, EventKind, GrowthCurve, PriceSchedule,
    RotationProblem, SolverOptions, SpeciesParams,
};

use crate::CliError;

/// Top-level scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub run: RunBlock,
    #[serde(default)]
    pub economics: EconomicsBlock,
    #[serde(default)]
    pub price: PriceBlock,
    #[serde(default)]
    pub damage: DamageBlock,
    #[serde(default)]
    pub simulation: SimulationBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    /// Custom species blocks; the bundled presets are available without any.
    #[serde(default)]
    pub species: BTreeMap<String, SpeciesBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    /// Species key for solve/simulate/curves; a bundled preset name or a
    /// `[species.<key>]` block.
    #[serde(default = "default_species_key")]
    pub species: String,
    /// Optional mode cross-check against the chosen subcommand.
    #[serde(default)]
    pub mode: Option<String>,
    /// Simulate at this rotation age instead of solving first.
    #[serde(default)]
    pub rotation_age: Option<f64>,
    /// Default output directory (overridden by --output and ROTATION_OUT_DIR).
    #[serde(default)]
    pub output_dir: Option<String>,
}

impl Default for RunBlock {
    fn default() -> Self {
        RunBlock {
            species: default_species_key(),
            mode: None,
            rotation_age: None,
            output_dir: None,
        }
    }
}

fn default_species_key() -> String {
    "scots_pine".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomicsBlock {
    pub carbon_price: f64,
    pub discount_rate: f64,
    pub regeneration_cost: f64,
    pub salvage_fraction: f64,
}

impl Default for EconomicsBlock {
    fn default() -> Self {
        EconomicsBlock {
            carbon_price: 50.0,
            discount_rate: 0.03,
            regeneration_cost: 0.0,
            salvage_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "kind")]
pub enum PriceBlock {
    AgeDependent { mu: f64, max_price: f64 },
    Constant { price: f64 },
}

impl Default for PriceBlock {
    fn default() -> Self {
        PriceBlock::AgeDependent {
            mu: PriceSchedule::DEFAULT_MU,
            max_price: PriceSchedule::DEFAULT_P_F_MAX,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DamageBlock {
    pub kind: DamageKind,
    pub rate: f64,
}

impl Default for DamageBlock {
    fn default() -> Self {
        DamageBlock {
            kind: DamageKind::Fire,
            rate: 0.005,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    pub n_paths: usize,
    pub npv_horizon: f64,
    pub stock_horizon: f64,
    pub time_step: f64,
    pub seed: u64,
    /// Worker threads; 0 picks the machine default.
    pub workers: usize,
}

impl Default for SimulationBlock {
    fn default() -> Self {
        SimulationBlock {
            n_paths: 100_000,
            npv_horizon: 2000.0,
            stock_horizon: 10_000.0,
            time_step: 1.0,
            seed: 42,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    /// Empty means the default grid 0..=100 in steps of 5.
    #[serde(default)]
    pub carbon_prices: Vec<f64>,
    /// Empty means the default grid 0..=0.01 in steps of 0.001.
    #[serde(default)]
    pub damage_rates: Vec<f64>,
    /// Species keys to sweep; empty means the run species.
    #[serde(default)]
    pub species: Vec<String>,
    /// Per-cell Monte Carlo paths for rel_std and stock columns.
    #[serde(default = "default_sweep_paths")]
    pub n_paths: usize,
    /// Disable to solve cells without any Monte Carlo columns.
    #[serde(default = "default_true")]
    pub simulate: bool,
}

fn default_sweep_paths() -> usize {
    2000
}

fn default_true() -> bool {
    true
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock {
            carbon_prices: Vec::new(),
            damage_rates: Vec::new(),
            species: Vec::new(),
            n_paths: default_sweep_paths(),
            simulate: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub t_max: f64,
    pub coarse_step: f64,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let defaults = SolverOptions::default();
        SolverBlock {
            t_max: defaults.t_max,
            coarse_step: defaults.coarse_step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RetentionMode {
    /// Use the configured gamma/beta constants.
    #[default]
    Configured,
    /// Derive gamma/beta from the pool profiles at the discount rate.
    FromProfiles,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesBlock {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub v4: f64,
    /// Optional reference integration constant; checked, not used.
    #[serde(default)]
    pub v5: Option<f64>,
    pub alpha: f64,
    #[serde(default)]
    pub gamma_fire: Option<f64>,
    #[serde(default)]
    pub gamma_storm: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub retention: RetentionMode,
    /// Pool profiles; a preset species name may omit them to reuse the
    /// bundled profiles.
    #[serde(default)]
    pub pools: Option<PoolsBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolsBlock {
    pub storm: Vec<CarbonPool>,
    pub fire: Vec<CarbonPool>,
    pub harvest: Vec<CarbonPool>,
}

/// A fully validated scenario ready to run.
#[derive(Debug)]
pub struct ResolvedScenario {
    pub config: ScenarioConfig,
    pub species: SpeciesParams,
    pub sweep_species: Vec<SpeciesParams>,
    pub price: PriceSchedule,
    pub econ: EconomicEnv,
    pub damage: DamageKind,
    pub damage_rate: f64,
    pub solver: SolverOptions,
    /// Non-fatal validation notes (printed to stderr).
    pub warnings: Vec<String>,
}

impl ScenarioConfig {
    /// The bundled default scenario (Scots pine, fire risk).
    pub fn default_preset() -> Self {
        ScenarioConfig {
            run: RunBlock::default(),
            economics: EconomicsBlock::default(),
            price: PriceBlock::default(),
            damage: DamageBlock::default(),
            simulation: SimulationBlock::default(),
            sweep: SweepBlock::default(),
            solver: SolverBlock::default(),
            species: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::validation(format!("cannot read config `{}`: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::validation(format!("config `{}`: {e}", path.display())))
    }

    /// Validate every block and assemble the core model objects.
    pub fn resolve(self, mode: &str) -> Result<ResolvedScenario, CliError> {
        let mut warnings = Vec::new();

        if let Some(declared) = &self.run.mode {
            if declared != mode {
                return Err(CliError::validation(format!(
                    "run.mode: config declares `{declared}` but the `{mode}` subcommand was invoked"
                )));
            }
        }

        let econ = EconomicEnv::new(
            self.economics.carbon_price,
            self.economics.discount_rate,
            self.economics.regeneration_cost,
            self.economics.salvage_fraction,
        )
        .map_err(|e| CliError::validation(format!("economics: {e}")))?;

        let price = match self.price {
            PriceBlock::AgeDependent { mu, max_price } => PriceSchedule::AgeDependent {
                mu,
                p_f_max: max_price,
            },
            PriceBlock::Constant { price } => PriceSchedule::Constant { price },
        };
        price
            .validate()
            .map_err(|e| CliError::validation(format!("price: {e}")))?;

        if !(self.damage.rate.is_finite() && self.damage.rate >= 0.0) {
            return Err(CliError::validation(
                "damage.rate: damage_rate must be finite and >= 0".to_string(),
            ));
        }

        if self.simulation.n_paths == 0 {
            return Err(CliError::validation(
                "simulation.n_paths: must be >= 1".to_string(),
            ));
        }
        for (name, value) in [
            ("simulation.npv_horizon", self.simulation.npv_horizon),
            ("simulation.stock_horizon", self.simulation.stock_horizon),
            ("simulation.time_step", self.simulation.time_step),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(CliError::validation(format!(
                    "{name}: must be finite and > 0"
                )));
            }
        }
        if let Some(age) = self.run.rotation_age {
            if age.is_nan() || age <= 0.0 {
                return Err(CliError::validation(
                    "run.rotation_age: must be > 0".to_string(),
                ));
            }
        }

        if !(self.solver.t_max.is_finite() && self.solver.t_max > 1.0) {
            return Err(CliError::validation(
                "solver.t_max: must be > 1".to_string(),
            ));
        }
        if !(self.solver.coarse_step.is_finite() && self.solver.coarse_step > 0.0) {
            return Err(CliError::validation(
                "solver.coarse_step: must be > 0".to_string(),
            ));
        }
        let solver = SolverOptions {
            t_max: self.solver.t_max,
            coarse_step: self.solver.coarse_step,
            ..SolverOptions::default()
        };

        let species = resolve_species(&self, &self.run.species, &mut warnings)?;
        let mut sweep_species = Vec::new();
        let sweep_keys: Vec<String> = if self.sweep.species.is_empty() {
            vec![self.run.species.clone()]
        } else {
            self.sweep.species.clone()
        };
        for key in &sweep_keys {
            sweep_species.push(resolve_species(&self, key, &mut warnings)?);
        }
        if self.sweep.n_paths == 0 {
            return Err(CliError::validation(
                "sweep.n_paths: must be >= 1".to_string(),
            ));
        }
        warnings.dedup();

        Ok(ResolvedScenario {
            species,
            sweep_species,
            price,
            econ,
            damage: self.damage.kind,
            damage_rate: self.damage.rate,
            solver,
            warnings,
            config: self,
        })
    }
}

fn resolve_species(
    config: &ScenarioConfig,
    key: &str,
    warnings: &mut Vec<String>,
) -> Result<SpeciesParams, CliError> {
    if let Some(block) = config.species.get(key) {
        return species_from_block(key, block, warnings);
    }
    match key {
        "scots_pine" => Ok(SpeciesParams::scots_pine()),
        "norway_spruce" => Ok(SpeciesParams::norway_spruce()),
        other => Err(CliError::validation(format!(
            "run.species: `{other}` is neither a bundled preset (scots_pine, norway_spruce) \
             nor a [species.{other}] block"
        ))),
    }
}

fn species_from_block(
    key: &str,
    block: &SpeciesBlock,
    warnings: &mut Vec<String>,
) -> Result<SpeciesParams, CliError> {
    let field = |name: &str| format!("species.{key}.{name}");

    let growth = match block.v5 {
        Some(v5) => {
            let (curve, warning) =
                GrowthCurve::with_reference_constant(block.v1, block.v2, block.v3, block.v4, v5)
                    .map_err(|e| CliError::validation(format!("{}: {e}", field("v1..v5"))))?;
            if let Some(text) = warning {
                warnings.push(format!("species.{key}: {text}"));
            }
            curve
        }
        None => GrowthCurve::new(block.v1, block.v2, block.v3, block.v4)
            .map_err(|e| CliError::validation(format!("{}: {e}", field("v1..v4"))))?,
    };

    if !(block.alpha.is_finite() && block.alpha > 0.0) {
        return Err(CliError::validation(format!(
            "{}: must be finite and > 0",
            field("alpha")
        )));
    }

    let preset = match key {
        "scots_pine" => Some(SpeciesParams::scots_pine()),
        "norway_spruce" => Some(SpeciesParams::norway_spruce()),
        _ => None,
    };

    let (storm, fire, harvest) = match (&block.pools, preset) {
        (Some(pools), _) => {
            let build = |kind: EventKind, pools: &[CarbonPool], name: &str| {
                EventCarbonProfile::new(kind, pools.to_vec())
                    .map_err(|e| CliError::validation(format!("{}: {e}", field(name))))
            };
            (
                build(EventKind::Storm, &pools.storm, "pools.storm")?,
                build(EventKind::Fire, &pools.fire, "pools.fire")?,
                build(EventKind::Harvest, &pools.harvest, "pools.harvest")?,
            )
        }
        (None, Some(preset)) => (preset.storm, preset.fire, preset.harvest),
        (None, None) => {
            return Err(CliError::validation(format!(
                "{}: custom species need storm/fire/harvest pool profiles",
                field("pools")
            )))
        }
    };

    let retention_constants = match block.retention {
        RetentionMode::Configured => {
            let (Some(gamma_fire), Some(gamma_storm), Some(beta)) =
                (block.gamma_fire, block.gamma_storm, block.beta)
            else {
                return Err(CliError::validation(format!(
                    "species.{key}: retention = \"configured\" needs gamma_fire, gamma_storm and beta"
                )));
            };
            Some(rotation_core::RetentionConstants {
                gamma_fire,
                gamma_storm,
                beta,
            })
        }
        RetentionMode::FromProfiles => None,
    };

    let species = SpeciesParams {
        name: key.to_string(),
        growth,
        alpha: block.alpha,
        storm,
        fire,
        harvest,
        retention_constants,
    };
    species
        .validate()
        .map_err(|e| CliError::validation(format!("species.{key}: {e}")))?;
    Ok(species)
}

impl ResolvedScenario {
    /// Rotation problem for the run species with the configured damage kind.
    pub fn problem(&self) -> Result<RotationProblem, CliError> {
        let carbon = match self
            .config
            .species
            .get(&self.species.name)
            .map(|b| b.retention)
        {
            Some(RetentionMode::FromProfiles) => self
                .species
                .carbon_params_from_profiles(self.damage, self.econ.discount_rate),
            _ => self
                .species
                .carbon_params(self.damage, self.econ.discount_rate),
        }
        .map_err(CliError::numerical)?;
        RotationProblem::new(
            self.species.growth,
            self.price,
            carbon,
            self.econ,
            self.damage_rate,
        )
        .map_err(|e| CliError::validation(e.to_string()))
    }
}
