//! Economically optimal forest rotation under carbon pricing and stochastic
//! stand-destroying damage.
//!
//! The library models an infinite chain of rotations on one hectare of bare
//! land. Each rotation grows along a closed-form stem-volume curve, earns
//! carbon payments on the growing stock, and ends either in a harvest at the
//! chosen rotation age or in a damage event (fire or storm) arriving as a
//! Poisson process. Damage and harvest release carbon gradually through
//! calibrated decay pools; the discounted release streams enter the revenue
//! equations as retained fractions.
//!
//! On top of the valuation core sit:
//!
//! * [`optimizer`] — finds the optimal rotation age, detecting finite
//!   optima, the infinite-rotation (never harvest) regime and never-plant
//!   corners;
//! * [`simulate`] — reproducible parallel Monte Carlo over rotation chains:
//!   NPV return statistics, long-run average carbon stock and harvest;
//! * [`sweep`] — carbon-price x damage-rate grids and the production
//!   possibility frontier between storing carbon and supplying timber.

#![forbid(unsafe_code)]

pub mod carbon;
pub mod economics;
pub mod error;
pub mod growth;
pub mod optimizer;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod species;
pub mod sweep;

pub use carbon::{
    carbon_stock, CarbonParams, CarbonPool, EventCarbonProfile, EventKind, FractionSource,
    ReleaseProfile,
};
pub use economics::{EconomicEnv, RotationProblem};
pub use error::{ModelError, Result};
pub use growth::{GrowthCurve, PriceSchedule};
pub use optimizer::{
    solution_sensitivity, solve_optimal_rotation, solve_with, PerturbParam, Regime,
    RotationSolution, SolverOptions,
};
pub use simulate::{
    average_harvest_analytic, harvest_statistics, long_term_carbon_stock, npv_statistics,
    sample_rotation_chain, simulate_summary, SimulationConfig, SimulationSummary,
};
pub use species::{DamageKind, RetentionConstants, SpeciesParams};
pub use sweep::{
    extract_frontier, run_sweep, FrontierCurve, SweepCell, SweepGrid, SweepSimSettings,
};
