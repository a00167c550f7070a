//! Parameter sweeps over carbon price and damage probability, and the
//! long-run production possibility frontier extracted from them.
//!
//! Cells are embarrassingly parallel; results are collected in row-major
//! order (species, then carbon price, then damage rate) regardless of
//! completion order, and per-cell seeds depend only on the cell index, so a
//! sweep is reproducible for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::economics::{EconomicEnv, RotationProblem};
use crate::error::{ModelError, Result};
use crate::growth::PriceSchedule;
use crate::optimizer::{solve_with, Regime, RotationSolution, SolverOptions};
use crate::simulate::{
    average_harvest_analytic, long_term_carbon_stock, npv_statistics, SimulationConfig,
};
use crate::species::{DamageKind, SpeciesParams};

/// Grid of sweep inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub carbon_prices: Vec<f64>,
    pub damage_rates: Vec<f64>,
    pub species: Vec<SpeciesParams>,
    pub damage_kind: DamageKind,
}

impl SweepGrid {
    /// The default grid: carbon price 0..=100 in steps of 5 and damage rate
    /// 0..=1% in steps of 0.1%.
    pub fn default_grid(species: Vec<SpeciesParams>, damage_kind: DamageKind) -> Self {
        SweepGrid {
            carbon_prices: (0..=20).map(|i| 5.0 * i as f64).collect(),
            damage_rates: (0..=10).map(|i| 0.001 * i as f64).collect(),
            species,
            damage_kind,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.carbon_prices.is_empty() || self.damage_rates.is_empty() || self.species.is_empty()
        {
            return Err(ModelError::invalid(
                "sweep grid",
                "carbon prices, damage rates and species must be non-empty",
            ));
        }
        for species in &self.species {
            species.validate()?;
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.carbon_prices.len() * self.damage_rates.len() * self.species.len()
    }
}

/// Monte Carlo settings applied per sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSimSettings {
    pub n_paths: usize,
    pub npv_horizon: f64,
    pub stock_horizon: f64,
    pub time_step: f64,
    pub rng_seed: u64,
}

impl Default for SweepSimSettings {
    fn default() -> Self {
        SweepSimSettings {
            n_paths: 2000,
            npv_horizon: 2000.0,
            stock_horizon: 10_000.0,
            time_step: 1.0,
            rng_seed: 0,
        }
    }
}

/// One solved sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub species: String,
    pub damage_kind: DamageKind,
    pub carbon_price: f64,
    pub damage_rate: f64,
    pub solution: Option<RotationSolution>,
    /// Long-run average harvest from the renewal formula; 0 in the infinite
    /// regime.
    pub avg_harvest: Option<f64>,
    /// Monte Carlo long-run average carbon stock.
    pub avg_carbon_stock: Option<f64>,
    /// Monte Carlo relative standard deviation of NPV returns.
    pub rel_std_npv: Option<f64>,
    /// Failure description when any stage of the cell failed.
    pub error: Option<String>,
}

/// Solve (and optionally simulate) every cell of the grid.
///
/// Per-cell failures are recorded in the cell and never abort the sweep.
pub fn run_sweep(
    grid: &SweepGrid,
    base_econ: &EconomicEnv,
    price: &PriceSchedule,
    sim: Option<&SweepSimSettings>,
    solver: &SolverOptions,
) -> Result<Vec<SweepCell>> {
    grid.validate()?;
    base_econ.validate()?;
    price.validate()?;

    let mut inputs = Vec::with_capacity(grid.cell_count());
    for species in &grid.species {
        for &p_c in &grid.carbon_prices {
            for &lambda in &grid.damage_rates {
                inputs.push((species, p_c, lambda));
            }
        }
    }

    Ok(inputs
        .into_par_iter()
        .enumerate()
        .map(|(cell_index, (species, p_c, lambda))| {
            compute_cell(
                species,
                grid.damage_kind,
                p_c,
                lambda,
                base_econ,
                price,
                sim,
                solver,
                cell_index as u64,
            )
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn compute_cell(
    species: &SpeciesParams,
    damage_kind: DamageKind,
    carbon_price: f64,
    damage_rate: f64,
    base_econ: &EconomicEnv,
    price: &PriceSchedule,
    sim: Option<&SweepSimSettings>,
    solver: &SolverOptions,
    cell_index: u64,
) -> SweepCell {
    let mut cell = SweepCell {
        species: species.name.clone(),
        damage_kind,
        carbon_price,
        damage_rate,
        solution: None,
        avg_harvest: None,
        avg_carbon_stock: None,
        rel_std_npv: None,
        error: None,
    };

    let outcome = (|| -> Result<()> {
        let econ = EconomicEnv {
            carbon_price,
            ..*base_econ
        };
        let carbon = species.carbon_params(damage_kind, econ.discount_rate)?;
        let problem = RotationProblem::new(species.growth, *price, carbon, econ, damage_rate)?;
        let solution = solve_with(&problem, solver)?;
        let rotation_age = solution.rotation_age();
        cell.solution = Some(solution);

        if let Some(age) = rotation_age {
            cell.avg_harvest = Some(average_harvest_analytic(&problem, age)?);
            if let Some(settings) = sim {
                // Seed per cell so neighbouring cells draw independent paths,
                // derived from the cell index alone for reproducibility.
                let seed = settings.rng_seed ^ (cell_index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let npv_cfg = SimulationConfig {
                    n_paths: settings.n_paths,
                    horizon: settings.npv_horizon,
                    rng_seed: seed,
                    time_step: settings.time_step,
                };
                let stock_cfg = SimulationConfig {
                    horizon: settings.stock_horizon,
                    ..npv_cfg
                };
                cell.rel_std_npv = Some(npv_statistics(&problem, age, &npv_cfg)?.rel_std);
                cell.avg_carbon_stock =
                    Some(long_term_carbon_stock(&problem, age, &stock_cfg)?.mean);
            }
        } else {
            // No positive value: bare land, nothing harvested or stored.
            cell.avg_harvest = Some(0.0);
        }
        Ok(())
    })();

    if let Err(err) = outcome {
        cell.error = Some(err.to_string());
    }
    cell
}

/// One (carbon stock, harvest) point of a frontier curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub carbon_price: f64,
    pub avg_carbon_stock: f64,
    pub avg_harvest: f64,
    pub infinite_regime: bool,
}

/// Frontier polyline for one damage rate, ordered by ascending carbon price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierCurve {
    pub species: String,
    pub damage_kind: DamageKind,
    pub damage_rate: f64,
    pub points: Vec<FrontierPoint>,
    /// True when the curve mixes finite- and infinite-regime cells.
    pub mixed_regime: bool,
}

/// Extract the production possibility frontier for one species: per damage
/// rate, the (stock, harvest) pairs ordered by ascending carbon price.
///
/// Cells without both Monte Carlo stock and a solution are skipped; cells
/// that failed are reported as an error.
pub fn extract_frontier(
    cells: &[SweepCell],
    species: &str,
    damage_kind: DamageKind,
) -> Result<Vec<FrontierCurve>> {
    let relevant: Vec<&SweepCell> = cells
        .iter()
        .filter(|c| c.species == species && c.damage_kind == damage_kind)
        .collect();
    if relevant.is_empty() {
        return Err(ModelError::domain(
            "extract_frontier",
            format!("no cells for species `{species}` and damage `{damage_kind}`"),
        ));
    }
    if let Some(bad) = relevant.iter().find(|c| c.error.is_some()) {
        return Err(ModelError::Numerical {
            op: "extract_frontier",
            reason: format!(
                "cell (P_c={}, lambda={}) failed: {}",
                bad.carbon_price,
                bad.damage_rate,
                bad.error.clone().unwrap_or_default()
            ),
        });
    }

    let mut lambdas: Vec<f64> = relevant.iter().map(|c| c.damage_rate).collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();

    let mut curves = Vec::with_capacity(lambdas.len());
    for lambda in lambdas {
        let mut cells_for_lambda: Vec<&&SweepCell> = relevant
            .iter()
            .filter(|c| c.damage_rate == lambda)
            .collect();
        cells_for_lambda.sort_by(|a, b| a.carbon_price.total_cmp(&b.carbon_price));
        let mut points = Vec::new();
        let mut saw_finite = false;
        let mut saw_infinite = false;
        for cell in cells_for_lambda {
            let (Some(solution), Some(stock), Some(harvest)) =
                (&cell.solution, cell.avg_carbon_stock, cell.avg_harvest)
            else {
                continue;
            };
            let infinite = matches!(solution.regime, Regime::Infinite);
            saw_finite |= solution.regime.is_finite();
            saw_infinite |= infinite;
            points.push(FrontierPoint {
                carbon_price: cell.carbon_price,
                avg_carbon_stock: stock,
                avg_harvest: harvest,
                infinite_regime: infinite,
            });
        }
        curves.push(FrontierCurve {
            species: species.to_string(),
            damage_kind,
            damage_rate: lambda,
            points,
            mixed_regime: saw_finite && saw_infinite,
        });
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_grid() -> SweepGrid {
        SweepGrid {
            carbon_prices: vec![0.0, 50.0],
            damage_rates: vec![0.0, 0.005],
            species: vec![SpeciesParams::scots_pine()],
            damage_kind: DamageKind::Fire,
        }
    }

    fn econ() -> EconomicEnv {
        EconomicEnv::new(0.0, 0.03, 0.0, 0.0).unwrap()
    }

    #[test]
    fn default_grid_has_231_cells_per_species() {
        let grid = SweepGrid::default_grid(vec![SpeciesParams::scots_pine()], DamageKind::Fire);
        assert_eq!(grid.cell_count(), 231);
    }

    #[test]
    fn single_faustmann_cell() {
        let grid = SweepGrid {
            carbon_prices: vec![0.0],
            damage_rates: vec![0.0],
            species: vec![SpeciesParams::scots_pine()],
            damage_kind: DamageKind::Fire,
        };
        let cells = run_sweep(
            &grid,
            &econ(),
            &PriceSchedule::constant(60.0),
            None,
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(cells.len(), 1);
        let cell = &cells[0];
        assert!(cell.error.is_none());
        let solution = cell.solution.as_ref().unwrap();
        let t = solution.regime.t_star().expect("finite");
        assert!(t > 20.0 && t < 60.0);
        assert!(cell.avg_harvest.unwrap() > 0.0);
    }

    #[test]
    fn rotation_monotone_in_price_and_damage() {
        let grid = SweepGrid {
            carbon_prices: vec![0.0, 10.0, 20.0, 30.0, 40.0],
            damage_rates: vec![0.0, 0.0025, 0.005, 0.0075, 0.01],
            species: vec![SpeciesParams::scots_pine()],
            damage_kind: DamageKind::Fire,
        };
        let cells = run_sweep(
            &grid,
            &econ(),
            &PriceSchedule::default_age_dependent(),
            None,
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(cells.len(), 25);
        let t_star = |p_c: f64, lambda: f64| -> f64 {
            cells
                .iter()
                .find(|c| c.carbon_price == p_c && c.damage_rate == lambda)
                .and_then(|c| c.solution.as_ref())
                .and_then(|s| s.regime.t_star())
                .expect("finite cell")
        };
        // Non-decreasing along carbon price, non-increasing along damage.
        for &lambda in &grid.damage_rates {
            let mut prev = t_star(0.0, lambda);
            for &p_c in &grid.carbon_prices[1..] {
                let t = t_star(p_c, lambda);
                assert!(t >= prev - 0.05, "t*({p_c}, {lambda}) = {t} < {prev}");
                prev = t;
            }
        }
        for &p_c in &grid.carbon_prices {
            let mut prev = t_star(p_c, 0.0);
            for &lambda in &grid.damage_rates[1..] {
                let t = t_star(p_c, lambda);
                assert!(t <= prev + 0.05, "t*({p_c}, {lambda}) = {t} > {prev}");
                prev = t;
            }
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let grid = tiny_grid();
        let settings = SweepSimSettings {
            n_paths: 50,
            npv_horizon: 400.0,
            stock_horizon: 600.0,
            time_step: 1.0,
            rng_seed: 99,
        };
        let run = || {
            run_sweep(
                &grid,
                &econ(),
                &PriceSchedule::default_age_dependent(),
                Some(&settings),
                &SolverOptions::default(),
            )
            .unwrap()
        };
        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let pool3 = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let a = pool1.install(run);
        let b = pool3.install(run);
        assert_eq!(a, b);
    }

    #[test]
    fn frontier_ordering_and_regime_flags() {
        let grid = SweepGrid {
            carbon_prices: vec![0.0, 40.0, 100.0],
            damage_rates: vec![0.0],
            species: vec![SpeciesParams::norway_spruce()],
            damage_kind: DamageKind::Fire,
        };
        let settings = SweepSimSettings {
            n_paths: 60,
            npv_horizon: 300.0,
            stock_horizon: 2000.0,
            time_step: 1.0,
            rng_seed: 4,
        };
        let cells = run_sweep(
            &grid,
            &econ(),
            &PriceSchedule::default_age_dependent(),
            Some(&settings),
            &SolverOptions::default(),
        )
        .unwrap();
        let curves = extract_frontier(&cells, "norway_spruce", DamageKind::Fire).unwrap();
        assert_eq!(curves.len(), 1);
        let curve = &curves[0];
        assert_eq!(curve.points.len(), 3);
        // Ordered by ascending carbon price.
        assert!(curve
            .points
            .windows(2)
            .all(|w| w[0].carbon_price < w[1].carbon_price));
        // Spruce at a high carbon price and no damage never harvests.
        let last = curve.points.last().unwrap();
        assert!(last.infinite_regime);
        assert_eq!(last.avg_harvest, 0.0);
        assert!(curve.mixed_regime);
        // Stock rises along the curve.
        assert!(last.avg_carbon_stock > curve.points[0].avg_carbon_stock);
    }

    #[test]
    fn missing_species_is_an_error() {
        let cells: Vec<SweepCell> = Vec::new();
        assert!(extract_frontier(&cells, "scots_pine", DamageKind::Fire).is_err());
    }

    #[test]
    fn interior_cells_are_consistent_with_grid_interpolation() {
        // Smoothness sanity check: dropping an interior finite cell and
        // re-interpolating its rotation length linearly from the four
        // neighbours lands within 10%.
        let grid = SweepGrid::default_grid(vec![SpeciesParams::scots_pine()], DamageKind::Fire);
        let cells = run_sweep(
            &grid,
            &econ(),
            &PriceSchedule::default_age_dependent(),
            None,
            &SolverOptions::default(),
        )
        .unwrap();
        let n_rates = grid.damage_rates.len();
        let t_star = |pi: usize, li: usize| -> Option<f64> {
            cells[pi * n_rates + li]
                .solution
                .as_ref()
                .and_then(|s| s.regime.t_star())
        };
        let mut interior_checked = 0;
        for pi in 1..grid.carbon_prices.len() - 1 {
            for li in 1..n_rates - 1 {
                let (Some(center), Some(left), Some(right), Some(down), Some(up)) = (
                    t_star(pi, li),
                    t_star(pi - 1, li),
                    t_star(pi + 1, li),
                    t_star(pi, li - 1),
                    t_star(pi, li + 1),
                ) else {
                    continue;
                };
                let interpolated = 0.25 * (left + right + down + up);
                assert!(
                    ((interpolated - center) / center).abs() <= 0.10,
                    "cell (P_c={}, lambda={}): T* {center} vs interpolated {interpolated}",
                    grid.carbon_prices[pi],
                    grid.damage_rates[li]
                );
                interior_checked += 1;
            }
        }
        assert!(
            interior_checked > 50,
            "only {interior_checked} interior cells"
        );
    }
}
