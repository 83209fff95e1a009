//! Swap-matching resource allocation for uplink NOMA/SCMA.
//!
//! Users and subchannels form a degree-constrained many-to-many matching.
//! Starting from a random feasible assignment, pairs of users repeatedly
//! exchange one subchannel each while the exchange is swap-blocking, until no
//! such pair remains. Rates are evaluated under SIC with equal per-user
//! power split, on an Okumura-Hata plus Rayleigh channel.
//!
//! Modules follow the pipeline:
//! [`channel`] → [`matching`] → [`rate`] → [`usma`], with [`oracle`] as
//! exhaustive ground truth for tiny instances and [`harness`] for sweeps,
//! output files and the CLI glue.

pub mod channel;
pub mod config;
pub mod error;
pub mod grid;
pub mod harness;
pub mod matching;
pub mod oracle;
pub mod rate;
pub mod usma;

pub use channel::{build_channel, hata_path_loss, place_users, ChannelState};
pub use config::{ScenarioConfig, SwapRule};
pub use error::{Error, Result};
pub use grid::Grid;
pub use matching::{enumerate_swap_candidates, init_random, Matching, SwapSpec};
pub use oracle::{certify_stable, enumerate_matchings, optimal, OracleReport};
pub use rate::{
    equal_power_split, evaluate, evaluate_matching, interference, PowerAllocation, RateReport,
};
pub use usma::{is_swap_blocking, run, run_from, RunStats, SwapGains};
