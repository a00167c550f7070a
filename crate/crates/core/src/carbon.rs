//! Carbon stock conversion and post-event carbon pool dynamics.
//!
//! After a storm, fire or harvest the event-time carbon stock is split into
//! pools that release their carbon immediately, exponentially over time, or
//! never. Discounting the release stream at rate `r` yields the net-present
//! retained fractions (gamma after damage, beta after harvest) that enter the
//! revenue equations.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// How one pool releases its carbon after the event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "release")]
pub enum ReleaseProfile {
    /// Released at the event itself (e.g. burnt biomass, sawmill losses).
    Immediate,
    /// First-order decay: a fraction `rate` of the remaining stock per year.
    Exponential { rate: f64 },
    /// Never released within the model horizon.
    Permanent,
}

/// One carbon pool: a share of the event-time stock plus its release profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarbonPool {
    pub share: f64,
    #[serde(flatten)]
    pub release: ReleaseProfile,
}

impl CarbonPool {
    pub fn immediate(share: f64) -> Self {
        CarbonPool {
            share,
            release: ReleaseProfile::Immediate,
        }
    }

    pub fn exponential(share: f64, rate: f64) -> Self {
        CarbonPool {
            share,
            release: ReleaseProfile::Exponential { rate },
        }
    }

    pub fn permanent(share: f64) -> Self {
        CarbonPool {
            share,
            release: ReleaseProfile::Permanent,
        }
    }
}

/// The kind of stand-replacing event a profile describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Storm,
    Fire,
    Harvest,
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EventKind::Storm => write!(f, "storm"),
            EventKind::Fire => write!(f, "fire"),
            EventKind::Harvest => write!(f, "harvest"),
        }
    }
}

/// Complete post-event decomposition of the carbon stock into pools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCarbonProfile {
    label: EventKind,
    pools: Vec<CarbonPool>,
}

const SHARE_SUM_TOLERANCE: f64 = 1e-9;

impl EventCarbonProfile {
    pub fn new(label: EventKind, pools: Vec<CarbonPool>) -> Result<Self> {
        if pools.is_empty() {
            return Err(ModelError::invalid(
                "pools",
                "profile needs at least one pool",
            ));
        }
        let mut sum = 0.0;
        for (i, pool) in pools.iter().enumerate() {
            if !(pool.share.is_finite() && (0.0..=1.0).contains(&pool.share)) {
                return Err(ModelError::invalid(
                    "pools",
                    format!("pool {i} share {} outside [0, 1]", pool.share),
                ));
            }
            if let ReleaseProfile::Exponential { rate } = pool.release {
                if !(rate.is_finite() && rate > 0.0) {
                    return Err(ModelError::invalid(
                        "pools",
                        format!("pool {i} exponential rate must be > 0, got {rate}"),
                    ));
                }
            }
            sum += pool.share;
        }
        if (sum - 1.0).abs() > SHARE_SUM_TOLERANCE {
            return Err(ModelError::invalid(
                "pools",
                format!("pool shares must sum to 1 within 1e-9, got {sum}"),
            ));
        }
        Ok(EventCarbonProfile { label, pools })
    }

    pub fn label(&self) -> EventKind {
        self.label
    }

    pub fn pools(&self) -> &[CarbonPool] {
        &self.pools
    }

    /// Fraction of the event-time stock still stored `s` years later.
    pub fn remaining_stock_fraction(&self, s: f64) -> Result<f64> {
        if !s.is_finite() || s < 0.0 {
            return Err(ModelError::domain(
                "remaining_stock_fraction",
                format!("years since event must be finite and >= 0, got {s}"),
            ));
        }
        Ok(self.remaining_unchecked(s))
    }

    pub(crate) fn remaining_unchecked(&self, s: f64) -> f64 {
        self.pools
            .iter()
            .map(|p| match p.release {
                ReleaseProfile::Immediate => 0.0,
                ReleaseProfile::Exponential { rate } => p.share * (-rate * s).exp(),
                ReleaseProfile::Permanent => p.share,
            })
            .sum()
    }

    /// Net-present retained fraction of the event-time stock at discount
    /// rate `r`: one minus the discounted release stream. An exponential pool
    /// releasing `rate e^{-rate s}` has discounted weight `rate/(rate + r)`.
    ///
    /// This is the gamma (damage) or beta (harvest) of the revenue equations.
    pub fn npv_retained_fraction(&self, r: f64) -> Result<f64> {
        if !r.is_finite() || r < 0.0 {
            return Err(ModelError::domain(
                "npv_retained_fraction",
                format!("discount rate must be finite and >= 0, got {r}"),
            ));
        }
        let released_npv: f64 = self
            .pools
            .iter()
            .map(|p| match p.release {
                ReleaseProfile::Immediate => p.share,
                ReleaseProfile::Exponential { rate } => p.share * rate / (rate + r),
                ReleaseProfile::Permanent => 0.0,
            })
            .sum();
        Ok(1.0 - released_npv)
    }

    /// Share released at the event itself.
    pub fn immediate_share(&self) -> f64 {
        self.pools
            .iter()
            .filter(|p| matches!(p.release, ReleaseProfile::Immediate))
            .map(|p| p.share)
            .sum()
    }

    /// Share never released.
    pub fn permanent_share(&self) -> f64 {
        self.pools
            .iter()
            .filter(|p| matches!(p.release, ReleaseProfile::Permanent))
            .map(|p| p.share)
            .sum()
    }

    /// `(rate, share)` pairs of the exponential pools.
    pub fn exponential_pools(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.pools.iter().filter_map(|p| match p.release {
            ReleaseProfile::Exponential { rate } => Some((rate, p.share)),
            _ => None,
        })
    }
}

/// Carbon stock of a stand (t_CO2/ha) from its stem volume.
pub fn carbon_stock(alpha: f64, volume: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(ModelError::invalid("alpha", "must be finite and > 0"));
    }
    if !(volume.is_finite() && volume >= 0.0) {
        return Err(ModelError::domain(
            "carbon_stock",
            "volume must be finite and >= 0",
        ));
    }
    Ok(alpha * volume)
}

/// Where a retained fraction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FractionSource {
    /// Taken directly from configuration (e.g. a published table value).
    ConfiguredConstant,
    /// Computed as the NPV-retained fraction of a decay profile.
    ComputedFromProfile,
}

/// Carbon parameters entering the revenue equations for one problem:
/// the volume-to-carbon conversion plus the retained fractions for the
/// chosen damage type and for harvest. The underlying decay profiles ride
/// along for simulating stock dynamics after events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarbonParams {
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub gamma_source: FractionSource,
    pub beta_source: FractionSource,
    pub damage_profile: EventCarbonProfile,
    pub harvest_profile: EventCarbonProfile,
}

impl CarbonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(ModelError::invalid("alpha", "must be finite and > 0"));
        }
        for (name, value) in [("gamma", self.gamma), ("beta", self.beta)] {
            if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
                return Err(ModelError::invalid(name, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}
