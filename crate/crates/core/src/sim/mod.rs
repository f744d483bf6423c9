//! Seeded synthetic world and weekly scan/session simulation.
//!
//! The world holds households with home APs, companies with office or shop
//! APs, and a few households carrying pocket WiFi. [`simulate`] runs it week
//! by week and records every relocation it performs as a
//! [`GroundTruthEvent`](crate::records::GroundTruthEvent), including the
//! three pseudo-migration sources: company moves, second-hand trades, and
//! roaming pocket APs.

mod run;
mod world;

use serde::{Deserialize, Serialize};

use crate::geo::{GeoError, WorldLayout};

pub use run::{simulate, SimOutput};
pub use world::{generate_world, AccessPoint, ApKind, Building, BuildingKind, Company, Household, Owner, World};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("world needs at least one household")]
    NoHouseholds,
    #[error("{name} = {value} is outside [0, 1]")]
    RateOutOfRange { name: &'static str, value: f64 },
    #[error("simulation needs at least 2 weeks, got {0}")]
    TooFewWeeks(u32),
    #[error("invalid simulator setting: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

/// Simulator settings. Rates are per week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Taken from the run-level seed, not from the `[sim]` section.
    #[serde(skip)]
    pub seed: u64,
    pub n_households: usize,
    pub n_companies: usize,
    pub weeks: u32,
    /// Probability that a household relocates in a given week.
    pub household_move_rate: f64,
    /// Probability that a company relocates all of its APs in a given week.
    pub company_move_rate: f64,
    /// Second-hand router trades as a fraction of household relocations:
    /// each week a home AP is sold with probability
    /// `trade_rate * household_move_rate`.
    pub trade_rate: f64,
    /// Fraction of households that also carry a pocket AP.
    pub pocket_ap_fraction: f64,
    /// Scan batches per occupied building per week.
    pub scan_density: u32,
    pub rssi_noise_sigma: f64,
    pub rssi_min: f64,
    pub rssi_max: f64,
    /// Fraction of APs whose sessions follow the opposite diurnal schedule.
    pub violator_fraction: f64,
    /// Per-month multiplier on `household_move_rate`; months past the end use 1.
    pub monthly_move_multiplier: Vec<f64>,
    pub households_per_building: usize,
    pub companies_per_office_building: usize,
    /// Fraction of companies that are shops with a single mixed-use AP.
    pub shop_fraction: f64,
    /// Minimum pairwise distance between a pocket AP's weekly waypoints.
    pub pocket_spread_m: f64,
    /// Distance decay of the gravity model choosing move destinations.
    pub gravity_length_m: f64,
    #[serde(skip)]
    pub layout: WorldLayout,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_households: 10_000,
            n_companies: 3000,
            weeks: 12,
            household_move_rate: 0.01,
            company_move_rate: 0.01,
            trade_rate: 0.0001,
            pocket_ap_fraction: 0.02,
            scan_density: 4,
            rssi_noise_sigma: 3.0,
            rssi_min: 0.0,
            rssi_max: 100.0,
            violator_fraction: 0.02,
            monthly_move_multiplier: Vec::new(),
            households_per_building: 12,
            companies_per_office_building: 8,
            shop_fraction: 0.2,
            pocket_spread_m: 6000.0,
            gravity_length_m: 8000.0,
            layout: WorldLayout::default(),
        }
    }
}

impl SimConfig {
    // negated comparisons so that NaN fails them
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_households == 0 {
            return Err(SimError::NoHouseholds);
        }
        self.layout.validate()?;
        let rates = [
            ("household_move_rate", self.household_move_rate),
            ("company_move_rate", self.company_move_rate),
            ("trade_rate", self.trade_rate),
            ("pocket_ap_fraction", self.pocket_ap_fraction),
            ("violator_fraction", self.violator_fraction),
            ("shop_fraction", self.shop_fraction),
        ];
        for (name, value) in rates {
            if !(0.0..=1.0).contains(&value) {
                return Err(SimError::RateOutOfRange { name, value });
            }
        }
        for (i, m) in self.monthly_move_multiplier.iter().enumerate() {
            let effective = m * self.household_move_rate;
            if !(*m >= 0.0 && effective <= 1.0) {
                return Err(SimError::Invalid(format!(
                    "monthly_move_multiplier[{i}] = {m} gives a move rate outside [0, 1]"
                )));
            }
        }
        if self.households_per_building == 0 || self.companies_per_office_building == 0 {
            return Err(SimError::Invalid("building capacities must be positive".into()));
        }
        if self.scan_density == 0 {
            return Err(SimError::Invalid("scan_density must be positive".into()));
        }
        if !(self.rssi_min < self.rssi_max) || !(self.rssi_noise_sigma >= 0.0) {
            return Err(SimError::Invalid("bad RSSI range or noise".into()));
        }
        if !(self.pocket_spread_m > 0.0 && self.gravity_length_m > 0.0) {
            return Err(SimError::Invalid("distances must be positive".into()));
        }
        Ok(())
    }

    pub fn move_rate_in_month(&self, month: u32) -> f64 {
        let m = self
            .monthly_move_multiplier
            .get(month as usize)
            .copied()
            .unwrap_or(1.0);
        self.household_move_rate * m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        SimConfig::default().validate().unwrap();
        assert_eq!(SimConfig::default().trade_rate, 0.0001);
    }

    #[test]
    fn rejects_bad_rates() {
        let c = SimConfig { household_move_rate: 1.5, ..SimConfig::default() };
        assert!(matches!(c.validate(), Err(SimError::RateOutOfRange { .. })));
        let c = SimConfig { n_households: 0, ..SimConfig::default() };
        assert_eq!(c.validate(), Err(SimError::NoHouseholds));
        let c = SimConfig { monthly_move_multiplier: vec![1.0, 200.0], ..SimConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn monthly_multiplier_scales_rate() {
        let c = SimConfig {
            household_move_rate: 0.01,
            monthly_move_multiplier: vec![1.0, 1.0, 2.0],
            ..SimConfig::default()
        };
        assert_eq!(c.move_rate_in_month(2), 0.02);
        assert_eq!(c.move_rate_in_month(7), 0.01);
    }
}
