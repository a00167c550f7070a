//! Species parameter bundles and the bundled boreal presets.
//!
//! A species couples a growth curve, a carbon-content factor and the carbon
//! pool profiles for storms, fires and harvests. The bundled Scots pine and
//! Norway spruce presets carry published retained-fraction constants next to
//! pool profiles calibrated to reproduce them at a 3% discount rate.

use serde::{Deserialize, Serialize};

use crate::carbon::{CarbonParams, CarbonPool, EventCarbonProfile, EventKind, FractionSource};
use crate::error::{ModelError, Result};
use crate::growth::GrowthCurve;

/// Which disturbance destroys the stand in a given scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DamageKind {
    Fire,
    Storm,
}

impl DamageKind {
    pub fn event_kind(self) -> EventKind {
        match self {
            DamageKind::Fire => EventKind::Fire,
            DamageKind::Storm => EventKind::Storm,
        }
    }
}

impl std::fmt::Display for DamageKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DamageKind::Fire => write!(f, "fire"),
            DamageKind::Storm => write!(f, "storm"),
        }
    }
}

/// Published retained-fraction constants (alternative to profile-derived).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetentionConstants {
    pub gamma_fire: f64,
    pub gamma_storm: f64,
    pub beta: f64,
}

/// Full parameter set for one species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesParams {
    pub name: String,
    pub growth: GrowthCurve,
    /// Carbon content per stem volume (t_CO2/m3).
    pub alpha: f64,
    pub storm: EventCarbonProfile,
    pub fire: EventCarbonProfile,
    pub harvest: EventCarbonProfile,
    /// When present, these constants are used for gamma/beta instead of the
    /// profile-derived values.
    pub retention_constants: Option<RetentionConstants>,
}

// Compartment decay rates (1/yr). Single-exponential stand-ins for the decay
// of coarse woody material (stem, stump, roots), small branches and foliage,
// and for the medium- and long-lived product pools. These rates, and the
// compartment shares below, are calibration artifacts: they are fitted so the
// discounted retained fractions at r = 3% reproduce the published constants,
// not measured values themselves.
const DECAY_COARSE: f64 = 0.0169;
const DECAY_BRANCH: f64 = 0.08;
const DECAY_FOLIAGE: f64 = 0.35;
const DECAY_PRODUCT_LONG: f64 = 0.014;
const DECAY_PRODUCT_MEDIUM: f64 = 0.055;

// Fire consumes the foliage entirely, three quarters of the branches and a
// quarter of the stemwood; what survives decays on site.
const FIRE_BURNT_FOLIAGE: f64 = 1.0;
const FIRE_BURNT_BRANCH: f64 = 0.75;
const FIRE_BURNT_STEM: f64 = 0.25;

// Harvested stemwood: 56% is released at the sawmill; of the remainder, half
// goes into long-lived and 15% into medium-lived products, the rest being
// released at processing. Residues (branches, foliage, stump and roots) stay
// on site and decay like storm debris.
const SAWMILL_RELEASE: f64 = 0.56;
const PRODUCT_LONG_SHARE: f64 = 0.50;
const PRODUCT_MEDIUM_SHARE: f64 = 0.15;

/// Biomass compartment shares (fractions of total tree carbon).
struct Compartments {
    stem: f64,
    branches: f64,
    foliage: f64,
    roots: f64,
}

impl Compartments {
    fn storm_profile(&self) -> EventCarbonProfile {
        EventCarbonProfile::new(
            EventKind::Storm,
            vec![
                CarbonPool::exponential(self.stem + self.roots, DECAY_COARSE),
                CarbonPool::exponential(self.branches, DECAY_BRANCH),
                CarbonPool::exponential(self.foliage, DECAY_FOLIAGE),
            ],
        )
        .expect("storm preset profile")
    }

    fn fire_profile(&self) -> EventCarbonProfile {
        let burnt = FIRE_BURNT_FOLIAGE * self.foliage
            + FIRE_BURNT_BRANCH * self.branches
            + FIRE_BURNT_STEM * self.stem;
        EventCarbonProfile::new(
            EventKind::Fire,
            vec![
                CarbonPool::immediate(burnt),
                CarbonPool::exponential(
                    (1.0 - FIRE_BURNT_STEM) * self.stem + self.roots,
                    DECAY_COARSE,
                ),
                CarbonPool::exponential((1.0 - FIRE_BURNT_BRANCH) * self.branches, DECAY_BRANCH),
            ],
        )
        .expect("fire preset profile")
    }

    fn harvest_profile(&self) -> EventCarbonProfile {
        let survives_mill = 1.0 - SAWMILL_RELEASE;
        let released =
            SAWMILL_RELEASE + survives_mill * (1.0 - PRODUCT_LONG_SHARE - PRODUCT_MEDIUM_SHARE);
        EventCarbonProfile::new(
            EventKind::Harvest,
            vec![
                CarbonPool::immediate(self.stem * released),
                CarbonPool::exponential(
                    self.stem * survives_mill * PRODUCT_LONG_SHARE,
                    DECAY_PRODUCT_LONG,
                ),
                CarbonPool::exponential(
                    self.stem * survives_mill * PRODUCT_MEDIUM_SHARE,
                    DECAY_PRODUCT_MEDIUM,
                ),
                CarbonPool::exponential(self.roots, DECAY_COARSE),
                CarbonPool::exponential(self.branches, DECAY_BRANCH),
                CarbonPool::exponential(self.foliage, DECAY_FOLIAGE),
            ],
        )
        .expect("harvest preset profile")
    }
}

impl SpeciesParams {
    /// Scots pine preset for Southern Finland.
    pub fn scots_pine() -> Self {
        let compartments = Compartments {
            stem: 0.474,
            branches: 0.197,
            foliage: 0.076,
            roots: 0.253,
        };
        SpeciesParams {
            name: "scots_pine".to_string(),
            growth: GrowthCurve::new(0.0632, -0.0153, 0.00414, -0.104)
                .expect("pine preset growth curve"),
            alpha: 1.29,
            storm: compartments.storm_profile(),
            fire: compartments.fire_profile(),
            harvest: compartments.harvest_profile(),
            retention_constants: Some(RetentionConstants {
                gamma_fire: 0.403,
                gamma_storm: 0.525,
                beta: 0.319,
            }),
        }
    }

    /// Norway spruce preset for Southern Finland.
    pub fn norway_spruce() -> Self {
        let compartments = Compartments {
            stem: 0.456,
            branches: 0.194,
            foliage: 0.108,
            roots: 0.242,
        };
        SpeciesParams {
            name: "norway_spruce".to_string(),
            growth: GrowthCurve::new(0.235, -0.0153, 0.00621, -0.109)
                .expect("spruce preset growth curve"),
            alpha: 1.36,
            storm: compartments.storm_profile(),
            fire: compartments.fire_profile(),
            harvest: compartments.harvest_profile(),
            retention_constants: Some(RetentionConstants {
                gamma_fire: 0.387,
                gamma_storm: 0.508,
                beta: 0.303,
            }),
        }
    }

    /// Both bundled presets.
    pub fn presets() -> Vec<SpeciesParams> {
        vec![Self::scots_pine(), Self::norway_spruce()]
    }

    pub fn damage_profile(&self, damage: DamageKind) -> &EventCarbonProfile {
        match damage {
            DamageKind::Fire => &self.fire,
            DamageKind::Storm => &self.storm,
        }
    }

    /// Resolve the carbon parameters for a problem with the given damage
    /// type: configured constants when present, otherwise the NPV-retained
    /// fractions of the decay profiles at discount rate `r`.
    pub fn carbon_params(&self, damage: DamageKind, r: f64) -> Result<CarbonParams> {
        match self.retention_constants {
            Some(constants) => {
                let gamma = match damage {
                    DamageKind::Fire => constants.gamma_fire,
                    DamageKind::Storm => constants.gamma_storm,
                };
                let params = CarbonParams {
                    alpha: self.alpha,
                    gamma,
                    beta: constants.beta,
                    gamma_source: FractionSource::ConfiguredConstant,
                    beta_source: FractionSource::ConfiguredConstant,
                    damage_profile: self.damage_profile(damage).clone(),
                    harvest_profile: self.harvest.clone(),
                };
                params.validate()?;
                Ok(params)
            }
            None => self.carbon_params_from_profiles(damage, r),
        }
    }

    /// Carbon parameters with gamma/beta always computed from the profiles.
    pub fn carbon_params_from_profiles(&self, damage: DamageKind, r: f64) -> Result<CarbonParams> {
        let damage_profile = self.damage_profile(damage).clone();
        let gamma = damage_profile.npv_retained_fraction(r)?;
        let beta = self.harvest.npv_retained_fraction(r)?;
        let params = CarbonParams {
            alpha: self.alpha,
            gamma,
            beta,
            gamma_source: FractionSource::ComputedFromProfile,
            beta_source: FractionSource::ComputedFromProfile,
            damage_profile,
            harvest_profile: self.harvest.clone(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(ModelError::invalid("species.name", "must not be empty"));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(ModelError::invalid(
                "species.alpha",
                "must be finite and > 0",
            ));
        }
        if let Some(c) = self.retention_constants {
            for (name, v) in [
                ("gamma_fire", c.gamma_fire),
                ("gamma_storm", c.gamma_storm),
                ("beta", c.beta),
            ] {
                if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                    return Err(ModelError::invalid(name, "must lie in [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_profiles_reproduce_published_fractions() {
        // The calibration target: profile-derived retained fractions at
        // r = 3% within +/- 0.02 of the published constants.
        for species in SpeciesParams::presets() {
            let constants = species.retention_constants.unwrap();
            let gamma_fire = species.fire.npv_retained_fraction(0.03).unwrap();
            let gamma_storm = species.storm.npv_retained_fraction(0.03).unwrap();
            let beta = species.harvest.npv_retained_fraction(0.03).unwrap();
            assert!(
                (gamma_fire - constants.gamma_fire).abs() <= 0.02,
                "{}: gamma_fire {gamma_fire} vs {}",
                species.name,
                constants.gamma_fire
            );
            assert!(
                (gamma_storm - constants.gamma_storm).abs() <= 0.02,
                "{}: gamma_storm {gamma_storm} vs {}",
                species.name,
                constants.gamma_storm
            );
            assert!(
                (beta - constants.beta).abs() <= 0.02,
                "{}: beta {beta} vs {}",
                species.name,
                constants.beta
            );
        }
    }

    #[test]
    fn retention_ordering_holds_per_species() {
        for species in SpeciesParams::presets() {
            let gamma_fire = species.fire.npv_retained_fraction(0.03).unwrap();
            let gamma_storm = species.storm.npv_retained_fraction(0.03).unwrap();
            let beta = species.harvest.npv_retained_fraction(0.03).unwrap();
            assert!(
                gamma_storm > gamma_fire && gamma_fire > beta,
                "{}: {gamma_storm} > {gamma_fire} > {beta} violated",
                species.name
            );
        }
    }

    #[test]
    fn configured_constants_take_precedence() {
        let pine = SpeciesParams::scots_pine();
        let params = pine.carbon_params(DamageKind::Fire, 0.03).unwrap();
        assert_eq!(params.gamma, 0.403);
        assert_eq!(params.beta, 0.319);
        assert_eq!(params.gamma_source, FractionSource::ConfiguredConstant);

        let from_profiles = pine
            .carbon_params_from_profiles(DamageKind::Fire, 0.03)
            .unwrap();
        assert_eq!(
            from_profiles.gamma_source,
            FractionSource::ComputedFromProfile
        );
        assert!((from_profiles.gamma - 0.403).abs() <= 0.02);
    }

    #[test]
    fn storm_leaves_everything_on_site() {
        for species in SpeciesParams::presets() {
            assert_eq!(species.storm.immediate_share(), 0.0);
            assert!((species.storm.remaining_stock_fraction(0.0).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
