use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::harness::{derive_seed, ofdma_baseline, simulate};
use crate::rate::evaluate_matching;

/// Raw outcome of one Monte Carlo trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n_users: usize,
    pub trial: usize,
    pub seed: u64,
    pub scheduled: usize,
    pub sum_rate: f64,
    pub initial_scheduled: usize,
    pub initial_sum_rate: f64,
    pub baseline_scheduled: usize,
    pub baseline_sum_rate: f64,
    pub swaps: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Aggregates over the trials of one user count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_users: usize,
    pub trials: usize,
    pub sched_min: usize,
    pub sched_avg: f64,
    pub sched_max: usize,
    pub rate_min: f64,
    pub rate_avg: f64,
    pub rate_max: f64,
    pub avg_swaps: f64,
    pub avg_iters: f64,
    pub converged_frac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Every trial, grouped by user count in sweep order, then by trial index.
    pub trials: Vec<TrialRecord>,
}

fn run_trial(base: &ScenarioConfig, n_users: usize, trial: usize) -> Result<TrialRecord> {
    let cfg = ScenarioConfig {
        n_users,
        seed: derive_seed(base.seed, n_users, trial),
        ..base.clone()
    };
    let run = simulate(&cfg)?;
    let initial = evaluate_matching(&run.initial, &run.channel, &cfg);
    let (_, baseline) = ofdma_baseline(&run.channel, &cfg)?;
    Ok(TrialRecord {
        n_users,
        trial,
        seed: cfg.seed,
        scheduled: run.stats.final_report.scheduled_users,
        sum_rate: run.stats.final_report.sum_rate,
        initial_scheduled: initial.scheduled_users,
        initial_sum_rate: run.stats.initial_sum_rate,
        baseline_scheduled: baseline.scheduled_users,
        baseline_sum_rate: baseline.sum_rate,
        swaps: run.stats.swaps_executed,
        iterations: run.stats.iterations,
        converged: run.stats.converged,
    })
}

/// Min/avg/max over `records`, all of which must share one user count.
/// Sums run in slice order.
pub fn aggregate(records: &[TrialRecord]) -> SweepRow {
    assert!(!records.is_empty(), "aggregate needs at least one trial");
    let n = records.len() as f64;
    let mean = |f: &dyn Fn(&TrialRecord) -> f64| records.iter().map(f).fold(0.0, |a, x| a + x) / n;
    let rate_min = records
        .iter()
        .map(|r| r.sum_rate)
        .fold(f64::INFINITY, f64::min);
    let rate_max = records
        .iter()
        .map(|r| r.sum_rate)
        .fold(f64::NEG_INFINITY, f64::max);
    SweepRow {
        n_users: records[0].n_users,
        trials: records.len(),
        sched_min: records.iter().map(|r| r.scheduled).min().unwrap_or(0),
        sched_avg: mean(&|r| r.scheduled as f64),
        sched_max: records.iter().map(|r| r.scheduled).max().unwrap_or(0),
        rate_min,
        // rounding in the running sum can push the mean just past an extreme
        rate_avg: mean(&|r| r.sum_rate).clamp(rate_min, rate_max),
        rate_max,
        avg_swaps: mean(&|r| r.swaps as f64),
        avg_iters: mean(&|r| r.iterations as f64),
        converged_frac: mean(&|r| if r.converged { 1.0 } else { 0.0 }),
    }
}

/// Runs `trials` seeded scenarios for every user count on the global rayon
/// pool. Results do not depend on the number of worker threads.
pub fn sweep(base: &ScenarioConfig, n_values: &[usize], trials: usize) -> Result<SweepResult> {
    if trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    for &n in n_values {
        ScenarioConfig {
            n_users: n,
            ..base.clone()
        }
        .validate()?;
    }
    let jobs: Vec<(usize, usize)> = n_values
        .iter()
        .flat_map(|&n| (0..trials).map(move |t| (n, t)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(n, t)| run_trial(base, n, t))
        .collect::<Result<Vec<_>>>()?;
    let rows = records.chunks(trials).map(aggregate).collect();
    Ok(SweepResult {
        rows,
        trials: records,
    })
}

/// [`sweep`] on a dedicated pool of `threads` workers.
pub fn sweep_with_threads(
    base: &ScenarioConfig,
    n_values: &[usize],
    trials: usize,
    threads: usize,
) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    pool.install(|| sweep(base, n_values, trials))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_base() -> ScenarioConfig {
        ScenarioConfig {
            seed: 99,
            ..ScenarioConfig::small(10, 4, 2, 3)
        }
    }

    #[test]
    fn single_trial_collapses_statistics() {
        let result = sweep(&small_base(), &[6, 12], 1).unwrap();
        for row in &result.rows {
            assert_eq!(row.sched_min, row.sched_max);
            assert_eq!(row.sched_avg, row.sched_min as f64);
            assert_eq!(row.rate_min, row.rate_max);
            assert_eq!(row.rate_avg, row.rate_min);
        }
    }

    #[test]
    fn rows_are_ordered_and_bounded() {
        let base = small_base();
        let result = sweep(&base, &[4, 8, 16], 5).unwrap();
        assert_eq!(result.rows.len(), 3);
        assert_eq!(result.trials.len(), 15);
        for row in &result.rows {
            assert!(row.sched_min as f64 <= row.sched_avg && row.sched_avg <= row.sched_max as f64);
            assert!(row.rate_min <= row.rate_avg && row.rate_avg <= row.rate_max);
            assert!(row.sched_max <= row.n_users.min(base.capacity()));
            assert_eq!(row.converged_frac, 1.0);
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let base = small_base();
        let one = sweep_with_threads(&base, &[5, 10], 4, 1).unwrap();
        let four = sweep_with_threads(&base, &[5, 10], 4, 4).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn rejects_zero_trials_and_bad_sizes() {
        assert!(matches!(
            sweep(&small_base(), &[10], 0),
            Err(Error::Config {
                field: "trials",
                ..
            })
        ));
        // d_f = 3 needs at least three users
        assert!(matches!(
            sweep(&small_base(), &[2], 1),
            Err(Error::Config { field: "d_f", .. })
        ));
    }
}
