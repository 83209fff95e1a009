//! Radio environment: user drops, Okumura-Hata path loss and Rayleigh
//! fading, collapsed into a subchannel-by-user matrix of power gains.
//!
//! The base station sits at the centre of the square deployment area.
//! Path loss uses the urban (small/medium city) Okumura-Hata formula:
//!
//! ```text
//! L = 69.55 + 26.16 log10(f) - 13.82 log10(h_b) - a(h_m)
//!     + (44.9 - 6.55 log10(h_b)) log10(d_km)
//! a(h_m) = (1.1 log10(f) - 0.7) h_m - (1.56 log10(f) - 0.8)
//! ```
//!
//! Only the frequency range is enforced. The formula is applied outside its
//! nominal 1-20 km distance and 30-200 m / 1-10 m antenna ranges as is.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::config::{check_frequency, ScenarioConfig};
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Distances below this are clamped before entering the log.
pub const MIN_DISTANCE_M: f64 = 1.0;

pub type Position = (f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    /// One entry per user; empty for synthetic instances built from gains.
    pub positions: Vec<Position>,
    /// Linear power gain `|h_kj|^2`, indexed `(subchannel, user)`.
    pub gains: Grid,
}

impl ChannelState {
    /// Synthetic channel with no geometry. Gains must be positive and finite.
    pub fn from_gains(gains: Grid) -> Result<Self> {
        check_gains(&gains)?;
        Ok(Self {
            positions: Vec::new(),
            gains,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let gains = Grid::from_rows(rows).ok_or_else(|| Error::Shape("ragged gain rows".into()))?;
        Self::from_gains(gains)
    }

    pub fn n_users(&self) -> usize {
        self.gains.n_users()
    }

    pub fn n_subchannels(&self) -> usize {
        self.gains.n_subchannels()
    }

    pub fn gain(&self, k: usize, j: usize) -> f64 {
        self.gains[(k, j)]
    }

    pub(crate) fn check_shape(&self, cfg: &ScenarioConfig) -> Result<()> {
        if self.n_users() != cfg.n_users || self.n_subchannels() != cfg.n_subchannels {
            return Err(Error::Shape(format!(
                "channel is {}x{} (subchannels x users), config expects {}x{}",
                self.n_subchannels(),
                self.n_users(),
                cfg.n_subchannels,
                cfg.n_users
            )));
        }
        Ok(())
    }
}

fn check_gains(gains: &Grid) -> Result<()> {
    match gains
        .values()
        .iter()
        .find(|g| !(g.is_finite() && **g > 0.0))
    {
        Some(g) => Err(Error::Shape(format!(
            "gains must be positive and finite, found {g}"
        ))),
        None => Ok(()),
    }
}

pub fn base_station(cfg: &ScenarioConfig) -> Position {
    (cfg.area_side / 2.0, cfg.area_side / 2.0)
}

/// Drops `n_users` uniformly over the square `[0, area_side]^2`.
pub fn place_users<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Vec<Position> {
    (0..cfg.n_users)
        .map(|_| {
            let x = rng.random::<f64>() * cfg.area_side;
            let y = rng.random::<f64>() * cfg.area_side;
            (x, y)
        })
        .collect()
}

/// Mobile antenna height correction `a(h_m)` for small and medium cities.
pub fn mobile_correction_db(carrier_freq: f64, ms_height: f64) -> f64 {
    let lf = carrier_freq.log10();
    (1.1 * lf - 0.7) * ms_height - (1.56 * lf - 0.8)
}

/// Urban Okumura-Hata path loss in dB for a link of `distance` meters.
pub fn hata_path_loss(distance: f64, cfg: &ScenarioConfig) -> Result<f64> {
    check_frequency(cfg.carrier_freq)?;
    let d_km = distance.max(MIN_DISTANCE_M) / 1000.0;
    let lf = cfg.carrier_freq.log10();
    let lhb = cfg.bs_height.log10();
    Ok(
        69.55 + 26.16 * lf - 13.82 * lhb - mobile_correction_db(cfg.carrier_freq, cfg.ms_height)
            + (44.9 - 6.55 * lhb) * d_km.log10(),
    )
}

/// One unit-mean exponential power fading draw.
pub fn draw_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Places users, then draws `gains[k][j] = 10^(-L(d_j)/10) * x_kj`.
///
/// Fading samples are drawn subchannel-major after all positions.
pub fn build_channel<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<ChannelState> {
    cfg.validate()?;
    let positions = place_users(cfg, rng);
    let bs = base_station(cfg);
    let path_gain = positions
        .iter()
        .map(|&(x, y)| {
            let d = (x - bs.0).hypot(y - bs.1);
            hata_path_loss(d, cfg).map(|l| 10f64.powf(-l / 10.0))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut gains = Grid::zeros(cfg.n_subchannels, cfg.n_users);
    for k in 0..cfg.n_subchannels {
        for (j, pg) in path_gain.iter().enumerate() {
            let fading = if cfg.fading { draw_fading(rng) } else { 1.0 };
            // An exponential draw can be exactly zero.
            gains[(k, j)] = (pg * fading).max(f64::MIN_POSITIVE);
        }
    }
    check_gains(&gains)?;
    Ok(ChannelState { positions, gains })
}
