//! Monte Carlo simulation of infinite rotation chains.
//!
//! Paths are independent and deterministic given `(rng_seed, path_index)`,
//! so results are identical for any number of worker threads. Reductions run
//! over path-indexed buffers in a fixed order for the same reason.
//!
//! A rotation age of `f64::INFINITY` encodes the never-harvest policy of the
//! infinite-rotation regime: rotations then end only in damage events.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::carbon::EventCarbonProfile;
use crate::economics::RotationProblem;
use crate::error::{ModelError, Result};
use crate::rng::PathRng;

/// Default horizon for NPV accumulation: the discount factor at 2000 years
/// is below 1e-26, so truncation is invisible.
pub const DEFAULT_NPV_HORIZON: f64 = 2000.0;

/// Default horizon for long-run stock and harvest averaging.
pub const DEFAULT_STOCK_HORIZON: f64 = 10_000.0;

/// Monte Carlo run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_paths: usize,
    /// Simulated calendar span per path (years).
    pub horizon: f64,
    pub rng_seed: u64,
    /// Sampling step for time-averaged stocks (years).
    pub time_step: f64,
}

impl SimulationConfig {
    /// Defaults for NPV statistics.
    pub fn npv_default(rng_seed: u64) -> Self {
        SimulationConfig {
            n_paths: 100_000,
            horizon: DEFAULT_NPV_HORIZON,
            rng_seed,
            time_step: 1.0,
        }
    }

    /// Defaults for long-run stock averaging.
    pub fn stock_default(rng_seed: u64) -> Self {
        SimulationConfig {
            n_paths: 100_000,
            horizon: DEFAULT_STOCK_HORIZON,
            rng_seed,
            time_step: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 1 {
            return Err(ModelError::invalid("n_paths", "must be >= 1"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(ModelError::invalid("horizon", "must be finite and > 0"));
        }
        if !(self.time_step.is_finite() && self.time_step > 0.0) {
            return Err(ModelError::invalid("time_step", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// How a rotation ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RotationEnd {
    Damage,
    Harvest,
}

/// One completed rotation within a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationEvent {
    /// Calendar time of the event (years from path start).
    pub time: f64,
    /// Stand age at the event.
    pub age: f64,
    pub end: RotationEnd,
}

fn check_rotation_age(rotation_age: f64) -> Result<()> {
    if rotation_age.is_nan() || rotation_age <= 0.0 {
        return Err(ModelError::domain(
            "rotation_age",
            "must be > 0 (f64::INFINITY encodes never harvesting)",
        ));
    }
    Ok(())
}

/// Streaming generator of rotation-ending events along one path.
struct EventGen {
    rng: PathRng,
    lambda: f64,
    rotation_age: f64,
    horizon: f64,
    clock: f64,
    done: bool,
}

impl EventGen {
    fn new(lambda: f64, rotation_age: f64, horizon: f64, seed: u64, path_index: u64) -> Self {
        EventGen {
            rng: PathRng::for_path(seed, path_index),
            lambda,
            rotation_age,
            horizon,
            clock: 0.0,
            done: false,
        }
    }

    fn next(&mut self) -> Option<RotationEvent> {
        if self.done {
            return None;
        }
        // One exponential draw per rotation, consumed whether or not the
        // damage candidate preempts the harvest.
        let (age, end) = if self.lambda > 0.0 {
            let z = self.rng.next_exponential(self.lambda);
            if z < self.rotation_age {
                (z, RotationEnd::Damage)
            } else {
                (self.rotation_age, RotationEnd::Harvest)
            }
        } else if self.rotation_age.is_finite() {
            (self.rotation_age, RotationEnd::Harvest)
        } else {
            self.done = true;
            return None;
        };
        let time = self.clock + age;
        if !time.is_finite() || time >= self.horizon {
            self.done = true;
            return None;
        }
        self.clock = time;
        Some(RotationEvent { time, age, end })
    }
}

/// Sample the rotation-end events of one path. Deterministic in
/// `(config.rng_seed, path_index)`; contains every event strictly before the
/// horizon.
pub fn sample_rotation_chain(
    problem: &RotationProblem,
    rotation_age: f64,
    config: &SimulationConfig,
    path_index: u64,
) -> Result<Vec<RotationEvent>> {
    check_rotation_age(rotation_age)?;
    config.validate()?;
    let mut gen = EventGen::new(
        problem.damage_rate,
        rotation_age,
        config.horizon,
        config.rng_seed,
        path_index,
    );
    let mut events = Vec::new();
    while let Some(ev) = gen.next() {
        events.push(ev);
    }
    Ok(events)
}

/// Discounted cash flow of one path over the horizon.
///
/// Carbon payments from stand growth accrue as annual sums of exactly
/// discounted volume increments, so a full rotation's growth income equals
/// the closed-form integral in the revenue equations; events pay the same
/// amounts those equations charge.
fn path_npv(
    problem: &RotationProblem,
    rotation_age: f64,
    config: &SimulationConfig,
    path: u64,
) -> f64 {
    let r = problem.econ.discount_rate;
    let alpha_pc = problem.carbon.alpha * problem.econ.carbon_price;
    let gamma = problem.carbon.gamma;
    let beta = problem.carbon.beta;
    let delta = problem.econ.salvage_fraction;
    let regen = problem.econ.regeneration_cost;

    let mut gen = EventGen::new(
        problem.damage_rate,
        rotation_age,
        config.horizon,
        config.rng_seed,
        path,
    );
    let mut npv = 0.0;
    let mut rotation_start = 0.0;
    while let Some(ev) = gen.next() {
        if alpha_pc != 0.0 {
            npv += alpha_pc
                * (-r * rotation_start).exp()
                * problem.growth.discounted_increment_unchecked(ev.age, r);
        }
        let volume = problem.growth.volume_unchecked(ev.age);
        let cash = match ev.end {
            RotationEnd::Damage => {
                -(1.0 - gamma) * alpha_pc * volume - regen
                    + delta * problem.price.price_unchecked(ev.age) * volume
            }
            RotationEnd::Harvest => {
                (problem.price.price_unchecked(ev.age) - (1.0 - beta) * alpha_pc) * volume - regen
            }
        };
        npv += (-r * ev.time).exp() * cash;
        rotation_start = ev.time;
    }
    // Growth payments of the final, horizon-truncated rotation.
    if alpha_pc != 0.0 && rotation_start < config.horizon {
        npv += alpha_pc
            * (-r * rotation_start).exp()
            * problem
                .growth
                .discounted_increment_unchecked(config.horizon - rotation_start, r);
    }
    npv
}

/// NPV return statistics over paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NpvStats {
    pub mean: f64,
    /// Relative standard deviation, std/mean.
    pub rel_std: f64,
    /// 95% confidence half-width of the mean.
    pub ci_halfwidth: f64,
    pub n_paths: usize,
    /// Set when the discount factor at the horizon exceeds 1e-3, i.e. the
    /// horizon is too short for the NPV to have converged.
    pub horizon_warning: bool,
}

/// Monte Carlo mean and relative standard deviation of per-path NPV.
pub fn npv_statistics(
    problem: &RotationProblem,
    rotation_age: f64,
    config: &SimulationConfig,
) -> Result<NpvStats> {
    check_rotation_age(rotation_age)?;
    config.validate()?;
    problem.validate()?;

    let npvs: Vec<f64> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|path| path_npv(problem, rotation_age, config, path))
        .collect();

    let n = npvs.len() as f64;
    let mean = npvs.iter().sum::<f64>() / n;
    let variance = if npvs.len() > 1 {
        npvs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let std = variance.sqrt();
    let rel_std = if std == 0.0 {
        0.0
    } else if mean == 0.0 {
        f64::INFINITY
    } else {
        std / mean.abs()
    };
    Ok(NpvStats {
        mean,
        rel_std,
        ci_halfwidth: 1.96 * std / n.sqrt(),
        n_paths: npvs.len(),
        horizon_warning: (-problem.econ.discount_rate * config.horizon).exp() > 1e-3,
    })
}

/// Long-run average harvest implied by the renewal structure:
/// expected yield of one rotation over its expected length.
///
/// `e^{-lambda T} v(T) / [lambda^{-1}(1 - e^{-lambda T}(1 + lambda T)) + e^{-lambda T} T]`,
/// with the `lambda -> 0` limit `v(T)/T` taken analytically. The infinite
/// rotation never harvests and yields 0.
pub fn average_harvest_analytic(problem: &RotationProblem, rotation_age: f64) -> Result<f64> {
    check_rotation_age(rotation_age)?;
    if rotation_age.is_infinite() {
        return Ok(0.0);
    }
    let volume = problem.growth.volume(rotation_age)?;
    let lambda = problem.damage_rate;
    let lt = lambda * rotation_age;
    if lt < 1e-8 {
        return Ok(volume / rotation_age);
    }
    let survival = (-lt).exp();
    let expected_length = (1.0 - survival * (1.0 + lt)) / lambda + survival * rotation_age;
    Ok(survival * volume / expected_length)
}

/// Monte Carlo estimate of the long-run average harvest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarvestStats {
    /// Harvested volume per year of completed rotation time (m3/ha/yr).
    pub mean: f64,
    /// 95% confidence half-width (delta method on the yield/length ratio).
    pub ci_halfwidth: f64,
}

/// Pooled-ratio estimator of average harvest: total harvested volume across
/// paths over total rotation time.
///
/// Paths run in complete rotation cycles: the rotation straddling the
/// horizon is finished and counted. Cutting mid-cycle instead would
/// under-sample long (harvest-ending) rotations and bias the ratio.
pub fn harvest_statistics(
    problem: &RotationProblem,
    rotation_age: f64,
    config: &SimulationConfig,
) -> Result<HarvestStats> {
    check_rotation_age(rotation_age)?;
    config.validate()?;

    let lambda = problem.damage_rate;
    let per_path: Vec<(f64, f64)> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut rng = PathRng::for_path(config.rng_seed, path);
            let mut harvested = 0.0;
            let mut elapsed = 0.0;
            loop {
                let (age, is_harvest) = if lambda > 0.0 {
                    let z = rng.next_exponential(lambda);
                    if z < rotation_age {
                        (z, false)
                    } else {
                        (rotation_age, true)
                    }
                } else if rotation_age.is_finite() {
                    (rotation_age, true)
                } else {
                    break; // single never-ending rotation, nothing harvested
                };
                elapsed += age;
                if is_harvest {
                    harvested += problem.growth.volume_unchecked(age);
                }
                if elapsed >= config.horizon {
                    break;
                }
            }
            (harvested, elapsed)
        })
        .collect();

    let total_yield: f64 = per_path.iter().map(|p| p.0).sum();
    let total_time: f64 = per_path.iter().map(|p| p.1).sum();
    if total_time == 0.0 {
        return Ok(HarvestStats {
            mean: 0.0,
            ci_halfwidth: 0.0,
        });
    }
    let ratio = total_yield / total_time;
    let n = per_path.len() as f64;
    let mean_time = total_time / n;
    let ss: f64 = per_path
        .iter()
        .map(|(y, l)| {
            let g = y - ratio * l;
            g * g
        })
        .sum();
    let se = if per_path.len() > 1 {
        (ss / (n - 1.0)).sqrt() / (mean_time * n.sqrt())
    } else {
        0.0
    };
    Ok(HarvestStats {
        mean: ratio,
        ci_halfwidth: 1.96 * se,
    })
}

/// Decay state shared by the stock simulation: one channel per distinct
/// exponential rate across the damage and harvest profiles.
struct DecayChannels {
    rates: Vec<f64>,
    step_factor: Vec<f64>,
    damage_inject: Vec<(usize, f64)>,
    harvest_inject: Vec<(usize, f64)>,
    damage_permanent: f64,
    harvest_permanent: f64,
}

impl DecayChannels {
    fn build(damage: &EventCarbonProfile, harvest: &EventCarbonProfile, dt: f64) -> Self {
        let mut rates: Vec<f64> = Vec::new();
        let mut map_profile = |profile: &EventCarbonProfile| -> Vec<(usize, f64)> {
            profile
                .exponential_pools()
                .map(|(rate, share)| {
                    let idx = rates.iter().position(|&r| r == rate).unwrap_or_else(|| {
                        rates.push(rate);
                        rates.len() - 1
                    });
                    (idx, share)
                })
                .collect()
        };
        let damage_inject = map_profile(damage);
        let harvest_inject = map_profile(harvest);
        let step_factor = rates.iter().map(|&r| (-r * dt).exp()).collect();
        DecayChannels {
            rates,
            step_factor,
            damage_inject,
            harvest_inject,
            damage_permanent: damage.permanent_share(),
            harvest_permanent: harvest.permanent_share(),
        }
    }
}

/// Long-run average carbon stock statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StockStats {
    /// Time-averaged carbon stock (t_CO2/ha): living stand plus all decaying
    /// event pools (dead biomass, products, residues).
    pub mean: f64,
    pub ci_halfwidth: f64,
}

/// Time-average of the total carbon stock over the horizon, sampled at
/// midpoints of `time_step` intervals.
pub fn long_term_carbon_stock(
    problem: &RotationProblem,
    rotation_age: f64,
    config: &SimulationConfig,
) -> Result<StockStats> {
    check_rotation_age(rotation_age)?;
    config.validate()?;
    problem.validate()?;

    let dt = config.time_step;
    let n_samples = (config.horizon / dt).floor() as usize;
    if n_samples == 0 {
        return Err(ModelError::invalid(
            "time_step",
            "must fit at least one sample inside the horizon",
        ));
    }
    let channels = DecayChannels::build(
        &problem.carbon.damage_profile,
        &problem.carbon.harvest_profile,
        dt,
    );
    let alpha = problem.carbon.alpha;

    let per_path: Vec<f64> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut gen = EventGen::new(
                problem.damage_rate,
                rotation_age,
                config.horizon,
                config.rng_seed,
                path,
            );
            let mut states = vec![0.0_f64; channels.rates.len()];
            let mut permanent = 0.0;
            let mut rotation_start = 0.0;
            let mut pending = gen.next();
            let mut acc = 0.0;
            for j in 0..n_samples {
                let tau = (j as f64 + 0.5) * dt;
                if j > 0 {
                    for (state, factor) in states.iter_mut().zip(&channels.step_factor) {
                        *state *= factor;
                    }
                }
                while let Some(ev) = pending {
                    if ev.time > tau {
                        break;
                    }
                    let stock = alpha * problem.growth.volume_unchecked(ev.age);
                    let (inject, perm_share) = match ev.end {
                        RotationEnd::Damage => (&channels.damage_inject, channels.damage_permanent),
                        RotationEnd::Harvest => {
                            (&channels.harvest_inject, channels.harvest_permanent)
                        }
                    };
                    for &(idx, share) in inject {
                        states[idx] +=
                            stock * share * (-channels.rates[idx] * (tau - ev.time)).exp();
                    }
                    permanent += stock * perm_share;
                    rotation_start = ev.time;
                    pending = gen.next();
                }
                let live = alpha * problem.growth.volume_unchecked(tau - rotation_start);
                acc += live + states.iter().sum::<f64>() + permanent;
            }
            acc / n_samples as f64
        })
        .collect();

    let n = per_path.len() as f64;
    let mean = per_path.iter().sum::<f64>() / n;
    let variance = if per_path.len() > 1 {
        per_path
            .iter()
            .map(|x| (x - mean) * (x - mean))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    Ok(StockStats {
        mean,
        ci_halfwidth: 1.96 * variance.sqrt() / n.sqrt(),
    })
}

/// Combined per-run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    /// Rotation age simulated; `None` encodes the never-harvest policy.
    pub rotation_age: Option<f64>,
    pub mean_npv: f64,
    pub rel_std_npv: f64,
    pub ci_halfwidth_npv: f64,
    pub avg_carbon_stock: f64,
    pub ci_halfwidth_stock: f64,
    pub avg_harvest: f64,
    pub ci_halfwidth_harvest: f64,
    pub avg_harvest_analytic: f64,
    pub n_paths: usize,
    pub rng_seed: u64,
    pub npv_horizon: f64,
    pub stock_horizon: f64,
    pub time_step: f64,
    pub horizon_warning: bool,
}

/// Run the NPV, stock and harvest estimators and collect one summary row.
pub fn simulate_summary(
    problem: &RotationProblem,
    rotation_age: f64,
    npv_config: &SimulationConfig,
    stock_config: &SimulationConfig,
) -> Result<SimulationSummary> {
    let npv = npv_statistics(problem, rotation_age, npv_config)?;
    let stock = long_term_carbon_stock(problem, rotation_age, stock_config)?;
    let harvest = harvest_statistics(problem, rotation_age, stock_config)?;
    let analytic = average_harvest_analytic(problem, rotation_age)?;
    Ok(SimulationSummary {
        rotation_age: rotation_age.is_finite().then_some(rotation_age),
        mean_npv: npv.mean,
        rel_std_npv: npv.rel_std,
        ci_halfwidth_npv: npv.ci_halfwidth,
        avg_carbon_stock: stock.mean,
        ci_halfwidth_stock: stock.ci_halfwidth,
        avg_harvest: harvest.mean,
        ci_halfwidth_harvest: harvest.ci_halfwidth,
        avg_harvest_analytic: analytic,
        n_paths: npv_config.n_paths,
        rng_seed: npv_config.rng_seed,
        npv_horizon: npv_config.horizon,
        stock_horizon: stock_config.horizon,
        time_step: stock_config.time_step,
        horizon_warning: npv.horizon_warning,
    })
}
