//! Experiment plumbing: scenario composition, the OFDMA-style reference
//! baseline, Monte Carlo sweeps, output files and the randomized invariant
//! checks behind the `check` subcommand.

pub mod check;
pub mod emit;
pub mod sweep;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{build_channel, ChannelState};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::matching::{init_random, Matching};
use crate::rate::{evaluate_matching, RateReport};
use crate::usma::{run_from, RunStats};

pub use sweep::{aggregate, sweep, sweep_with_threads, SweepResult, SweepRow, TrialRecord};

/// Everything produced by one seeded scenario.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub channel: ChannelState,
    pub initial: Matching,
    pub matching: Matching,
    pub stats: RunStats,
}

/// Builds the channel from `cfg.seed`, draws the initial matching from the
/// same stream and runs the swap phase.
pub fn simulate(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let channel = build_channel(cfg, &mut rng)?;
    let initial = init_random(cfg, &mut rng);
    let (matching, stats) = run_from(initial.clone(), &channel, cfg)?;
    Ok(ScenarioRun {
        channel,
        initial,
        matching,
        stats,
    })
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(Matching, RunStats)> {
    simulate(cfg).map(|r| (r.matching, r.stats))
}

/// One-to-one reference assignment: links are taken greedily in descending
/// gain order, each user and subchannel used at most once, each matched user
/// transmitting its full budget on its single subchannel.
///
/// This is a reconstruction of an orthogonal (OFDMA-like) comparison point,
/// not a published baseline.
pub fn ofdma_baseline(ch: &ChannelState, cfg: &ScenarioConfig) -> Result<(Matching, RateReport)> {
    let one_to_one = ScenarioConfig {
        d_v: 1,
        d_f: 1,
        ..cfg.clone()
    };
    let mut links: Vec<(usize, usize)> = (0..ch.n_subchannels())
        .flat_map(|k| (0..ch.n_users()).map(move |j| (k, j)))
        .collect();
    // stable sort keeps (k, j) order among equal gains
    links.sort_by(|a, b| ch.gain(b.0, b.1).total_cmp(&ch.gain(a.0, a.1)));
    let mut m = Matching::empty_for(&one_to_one);
    for (k, j) in links {
        if m.user_subs(j).is_empty() && m.sub_users(k).is_empty() {
            m.assign(j, k)?;
        }
    }
    let report = evaluate_matching(&m, ch, &one_to_one);
    Ok((m, report))
}

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial seed, a pure function of the base seed, the user count and the
/// trial index.
pub fn derive_seed(base_seed: u64, n_users: usize, trial: usize) -> u64 {
    mix64(mix64(mix64(base_seed) ^ n_users as u64) ^ trial as u64)
}

/// Reads a JSON config file. Missing fields take their defaults.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })
}
