//! Scenario parameters shared by every stage of a simulation run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower edge of the Okumura-Hata frequency validity range, MHz.
pub const HATA_MIN_FREQ_MHZ: f64 = 150.0;
/// Upper edge of the Okumura-Hata frequency validity range, MHz.
pub const HATA_MAX_FREQ_MHZ: f64 = 1500.0;

/// Acceptance rule for a candidate swap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapRule {
    /// Total sum-rate must grow by more than `swap_epsilon`.
    #[default]
    SumRate,
    /// The two users and two subchannels involved must all be no worse off,
    /// and at least one must gain more than `swap_epsilon`.
    Pareto,
}

/// All problem parameters for one scenario.
///
/// Every field has a documented default, so a config file only needs to
/// name the values it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_users: usize,
    pub n_subchannels: usize,
    /// Maximum subchannels per user.
    pub d_v: usize,
    /// Maximum users per subchannel.
    pub d_f: usize,
    /// Side of the square deployment area, meters.
    pub area_side: f64,
    /// Carrier frequency, MHz.
    pub carrier_freq: f64,
    /// Base station antenna height, meters.
    pub bs_height: f64,
    /// Mobile antenna height, meters.
    pub ms_height: f64,
    /// Total transmit power budget per user, watts.
    pub user_tx_power: f64,
    /// Receiver noise power per subchannel, watts.
    pub noise_power: f64,
    pub swap_epsilon: f64,
    /// Sweep budget for the swap phase. `None` means `10 * N * K`.
    pub max_iterations: Option<usize>,
    pub seed: u64,
    /// Unit-mean exponential power fading on every link. When off, gains
    /// are path loss only.
    pub fading: bool,
    pub swap_rule: SwapRule,
    /// A matched user counts as scheduled only if its rate reaches this
    /// value (bit/s/Hz). Zero means any assigned subchannel suffices.
    pub min_rate: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_users: 100,
            n_subchannels: 10,
            d_v: 3,
            d_f: 5,
            area_side: 350.0,
            carrier_freq: 900.0,
            bs_height: 30.0,
            ms_height: 1.5,
            user_tx_power: 0.2,
            noise_power: 1e-14,
            swap_epsilon: 1e-9,
            max_iterations: None,
            seed: 0,
            fading: true,
            swap_rule: SwapRule::SumRate,
            min_rate: 0.0,
        }
    }
}

impl ScenarioConfig {
    /// Tiny scenario helper used heavily by tests and the oracle tooling.
    pub fn small(n_users: usize, n_subchannels: usize, d_v: usize, d_f: usize) -> Self {
        Self {
            n_users,
            n_subchannels,
            d_v,
            d_f,
            ..Self::default()
        }
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations
            .unwrap_or(10 * self.n_users * self.n_subchannels)
    }

    /// Total seat capacity `K * d_f`.
    pub fn capacity(&self) -> usize {
        self.n_subchannels * self.d_f
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users < 1 {
            return Err(Error::config("n_users", "must be at least 1"));
        }
        if self.n_subchannels < 1 {
            return Err(Error::config("n_subchannels", "must be at least 1"));
        }
        if self.d_v < 1 || self.d_v > self.n_subchannels {
            return Err(Error::config(
                "d_v",
                format!(
                    "must lie in [1, n_subchannels = {}], got {}",
                    self.n_subchannels, self.d_v
                ),
            ));
        }
        if self.d_f < 1 || self.d_f > self.n_users {
            return Err(Error::config(
                "d_f",
                format!(
                    "must lie in [1, n_users = {}], got {}",
                    self.n_users, self.d_f
                ),
            ));
        }
        positive("area_side", self.area_side)?;
        check_frequency(self.carrier_freq)?;
        positive("bs_height", self.bs_height)?;
        positive("ms_height", self.ms_height)?;
        positive("user_tx_power", self.user_tx_power)?;
        positive("noise_power", self.noise_power)?;
        if !(self.swap_epsilon >= 0.0 && self.swap_epsilon.is_finite()) {
            return Err(Error::config(
                "swap_epsilon",
                format!("must be finite and non-negative, got {}", self.swap_epsilon),
            ));
        }
        if !(self.min_rate >= 0.0 && self.min_rate.is_finite()) {
            return Err(Error::config(
                "min_rate",
                format!("must be finite and non-negative, got {}", self.min_rate),
            ));
        }
        Ok(())
    }
}

pub(crate) fn check_frequency(carrier_freq: f64) -> Result<()> {
    if !(HATA_MIN_FREQ_MHZ..=HATA_MAX_FREQ_MHZ).contains(&carrier_freq) {
        return Err(Error::config(
            "carrier_freq",
            format!(
                "must lie in [{HATA_MIN_FREQ_MHZ}, {HATA_MAX_FREQ_MHZ}] MHz, got {carrier_freq}"
            ),
        ));
    }
    Ok(())
}

fn positive(field: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("must be finite and positive, got {value}"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(err: Error) -> &'static str {
        match err {
            Error::Config { field, .. } => field,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn default_is_valid() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.max_iterations(), 10_000);
        assert_eq!(cfg.capacity(), 50);
    }

    #[test]
    fn rejects_bad_degrees() {
        let cfg = ScenarioConfig {
            d_v: 11,
            ..Default::default()
        };
        assert_eq!(field_of(cfg.validate().unwrap_err()), "d_v");

        let cfg = ScenarioConfig::small(2, 2, 1, 3);
        assert_eq!(field_of(cfg.validate().unwrap_err()), "d_f");

        let cfg = ScenarioConfig::small(2, 2, 0, 1);
        assert_eq!(field_of(cfg.validate().unwrap_err()), "d_v");
    }

    #[test]
    fn rejects_out_of_range_frequency() {
        for f in [149.9, 1500.1, f64::NAN] {
            let cfg = ScenarioConfig {
                carrier_freq: f,
                ..Default::default()
            };
            assert_eq!(field_of(cfg.validate().unwrap_err()), "carrier_freq");
        }
        for f in [150.0, 1500.0] {
            let cfg = ScenarioConfig {
                carrier_freq: f,
                ..Default::default()
            };
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn rejects_nonpositive_radio_values() {
        let cfg = ScenarioConfig {
            noise_power: 0.0,
            ..Default::default()
        };
        assert_eq!(field_of(cfg.validate().unwrap_err()), "noise_power");
        let cfg = ScenarioConfig {
            swap_epsilon: -1.0,
            ..Default::default()
        };
        assert_eq!(field_of(cfg.validate().unwrap_err()), "swap_epsilon");
        let cfg = ScenarioConfig {
            n_users: 0,
            ..Default::default()
        };
        assert_eq!(field_of(cfg.validate().unwrap_err()), "n_users");
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: ScenarioConfig =
            serde_json::from_str(r#"{"n_users": 40, "swap_rule": "pareto"}"#).unwrap();
        assert_eq!(cfg.n_users, 40);
        assert_eq!(cfg.swap_rule, SwapRule::Pareto);
        assert_eq!(cfg.d_f, 5);
        assert!(serde_json::from_str::<ScenarioConfig>(r#"{"n_user": 4}"#).is_err());
    }
}
