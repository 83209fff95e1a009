//! Randomized invariant suite behind the `check` subcommand, plus the
//! tiny-instance family used for oracle gap studies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{build_channel, hata_path_loss, ChannelState};
use crate::config::{ScenarioConfig, SwapRule};
use crate::error::Result;
use crate::grid::Grid;
use crate::harness::derive_seed;
use crate::matching::{init_random, Matching};
use crate::oracle::{certify_stable, optimal, relative_gap};
use crate::rate::{evaluate_matching, RateReport};
use crate::usma::run;

/// Path loss at 350 m for the default radio (900 MHz, 30 m, 1.5 m),
/// evaluated by hand from the urban Okumura-Hata formula.
pub const HATA_DEFAULT_350M_DB: f64 = 110.343_149_096_879_36;

/// Random scenario with `N <= 6`, `K <= 3`, `d_v <= 2`, `d_f <= 2`.
pub fn tiny_config(seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_users = rng.random_range(1..=6);
    let n_subchannels = rng.random_range(1..=3);
    ScenarioConfig {
        d_v: rng.random_range(1..=n_subchannels.min(2)),
        d_f: rng.random_range(1..=n_users.min(2)),
        fading: rng.random_bool(0.8),
        seed: rng.random(),
        ..ScenarioConfig::small(n_users, n_subchannels, 1, 1)
    }
}

/// One USMA run on a tiny instance, checked against the oracle.
#[derive(Debug, Clone, Serialize)]
pub struct TinyOutcome {
    pub config: ScenarioConfig,
    pub converged: bool,
    pub stable: bool,
    pub initial_sum_rate: f64,
    pub usma_sum_rate: f64,
    pub best_sum_rate: f64,
    pub gap: f64,
    /// Sum-rate increments of every executed swap.
    pub increments: Vec<f64>,
}

pub fn run_tiny(cfg: &ScenarioConfig) -> Result<TinyOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ch = build_channel(cfg, &mut rng)?;
    let (m, stats) = run(&ch, cfg, &mut rng)?;
    let best = optimal(&ch, cfg)?;
    let mut prev = stats.initial_sum_rate;
    let increments = stats
        .sum_rate_trajectory
        .iter()
        .map(|r| {
            let d = r - prev;
            prev = *r;
            d
        })
        .collect();
    Ok(TinyOutcome {
        config: cfg.clone(),
        converged: stats.converged,
        stable: certify_stable(&m, &ch, cfg)?,
        initial_sum_rate: stats.initial_sum_rate,
        usma_sum_rate: stats.final_report.sum_rate,
        best_sum_rate: best.best_sum_rate,
        gap: relative_gap(best.best_sum_rate, stats.final_report.sum_rate),
        increments,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GapSummary {
    pub instances: usize,
    pub converged: usize,
    pub stable: usize,
    pub optimal_hits: usize,
    pub mean_gap: f64,
    pub max_gap: f64,
}

pub fn summarize(outcomes: &[TinyOutcome]) -> GapSummary {
    let n = outcomes.len();
    GapSummary {
        instances: n,
        converged: outcomes.iter().filter(|o| o.converged).count(),
        stable: outcomes.iter().filter(|o| o.stable).count(),
        optimal_hits: outcomes.iter().filter(|o| o.gap <= 1e-12).count(),
        mean_gap: outcomes.iter().map(|o| o.gap).sum::<f64>() / n.max(1) as f64,
        max_gap: outcomes.iter().map(|o| o.gap).fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub instances: usize,
    pub fuzz_swaps: usize,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            instances: 1000,
            fuzz_swaps: 100_000,
            seed: 0,
        }
    }
}

fn outcome(name: &'static str, failures: Vec<String>, ok_detail: String) -> CheckOutcome {
    match failures.first() {
        None => CheckOutcome {
            name,
            passed: true,
            detail: ok_detail,
        },
        Some(first) => CheckOutcome {
            name,
            passed: false,
            detail: format!("{} failure(s), first: {first}", failures.len()),
        },
    }
}

fn tiny_suite(opts: &CheckOptions, rule: SwapRule) -> Result<Vec<TinyOutcome>> {
    (0..opts.instances)
        .map(|i| {
            let cfg = ScenarioConfig {
                swap_rule: rule,
                ..tiny_config(derive_seed(opts.seed, 0, i))
            };
            run_tiny(&cfg)
        })
        .collect()
}

fn stability_and_gap_checks(name_rule: SwapRule, outcomes: &[TinyOutcome]) -> Vec<CheckOutcome> {
    let label = |sum: &'static str, pareto: &'static str| match name_rule {
        SwapRule::SumRate => sum,
        SwapRule::Pareto => pareto,
    };
    let mut checks = Vec::new();

    let unstable: Vec<String> = outcomes
        .iter()
        .filter(|o| o.converged && !o.stable)
        .map(|o| format!("seed {}", o.config.seed))
        .collect();
    checks.push(outcome(
        label("stability (sum-rate)", "stability (pareto)"),
        unstable,
        format!(
            "{} of {} runs converged, all certified stable",
            outcomes.iter().filter(|o| o.converged).count(),
            outcomes.len()
        ),
    ));

    let mut bad_steps = Vec::new();
    for o in outcomes {
        for d in &o.increments {
            let ok = match name_rule {
                SwapRule::SumRate => *d > o.config.swap_epsilon,
                SwapRule::Pareto => *d >= 0.0,
            };
            if !ok {
                bad_steps.push(format!("seed {} step {d:e}", o.config.seed));
            }
        }
    }
    let steps: usize = outcomes.iter().map(|o| o.increments.len()).sum();
    checks.push(outcome(
        label(
            "monotone improvement (sum-rate)",
            "monotone improvement (pareto)",
        ),
        bad_steps,
        format!("{steps} swaps, all improving"),
    ));

    let bound: Vec<String> = outcomes
        .iter()
        .filter(|o| {
            o.usma_sum_rate > o.best_sum_rate + 1e-12 || o.usma_sum_rate < o.initial_sum_rate
        })
        .map(|o| format!("seed {}", o.config.seed))
        .collect();
    let s = summarize(outcomes);
    checks.push(outcome(
        label("oracle bounds (sum-rate)", "oracle bounds (pareto)"),
        bound,
        format!(
            "mean gap {:.3e}, max gap {:.3e}, optimal in {}/{}",
            s.mean_gap, s.max_gap, s.optimal_hits, s.instances
        ),
    ));
    checks
}

fn fuzz_matchings(opts: &CheckOptions) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, 1, 0));
    let mut failures = Vec::new();
    let mut done = 0;
    while done < opts.fuzz_swaps && failures.is_empty() {
        let n = rng.random_range(2..=12);
        let k = rng.random_range(2..=8);
        let cfg = ScenarioConfig::small(n, k, rng.random_range(1..=k), rng.random_range(1..=n));
        let mut m = init_random(&cfg, &mut rng);
        let degrees = (m.user_degrees(), m.sub_degrees());
        for _ in 0..200 {
            let cands: Vec<_> = m.swap_candidates().collect();
            if cands.is_empty() {
                break;
            }
            let s = cands[rng.random_range(0..cands.len())];
            match m.swap_in_place(&s) {
                Ok(()) => {}
                Err(e) => failures.push(e.to_string()),
            }
            if let Err(e) = m.check_invariants() {
                failures.push(e);
            }
            done += 1;
        }
        if (m.user_degrees(), m.sub_degrees()) != degrees {
            failures.push("degree vectors changed".into());
        }
    }
    outcome(
        "matching invariants under swap fuzzing",
        failures,
        format!("{done} random swaps"),
    )
}

fn random_channel(rng: &mut ChaCha8Rng, cfg: &ScenarioConfig) -> ChannelState {
    let rows: Vec<Vec<f64>> = (0..cfg.n_subchannels)
        .map(|_| {
            (0..cfg.n_users)
                .map(|_| 10f64.powf(rng.random_range(-3.0..2.0)))
                .collect()
        })
        .collect();
    ChannelState::from_rows(&rows).expect("positive gains")
}

fn rate_checks(opts: &CheckOptions) -> Vec<CheckOutcome> {
    let mut checks = Vec::new();

    let unit = ScenarioConfig {
        user_tx_power: 1.0,
        noise_power: 1.0,
        ..ScenarioConfig::small(1, 1, 1, 1)
    };
    let one = Matching::from_pairs(&unit, [(0, 0)]).expect("single pair");
    let ch = ChannelState::from_rows(&[vec![1.0]]).expect("unit gain");
    let r = evaluate_matching(&one, &ch, &unit).link_rate[(0, 0)];
    checks.push(CheckOutcome {
        name: "unit SNR link rate",
        passed: (r - 1.0).abs() <= 1e-12,
        detail: format!("rate {r}"),
    });

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, 2, 0));
    let mut scaling = Vec::new();
    let mut monotone = Vec::new();
    let trials = opts.instances.max(1) * 10;
    for t in 0..trials {
        let n = rng.random_range(2..=6);
        let k = rng.random_range(1..=3);
        let cfg = ScenarioConfig {
            user_tx_power: rng.random_range(0.1..2.0),
            noise_power: 10f64.powf(rng.random_range(-3.0..0.0)),
            ..ScenarioConfig::small(n, k, rng.random_range(1..=k), rng.random_range(2..=n))
        };
        let ch = random_channel(&mut rng, &cfg);
        let m = init_random(&cfg, &mut rng);
        let base = evaluate_matching(&m, &ch, &cfg);

        let c = 10f64.powf(rng.random_range(-4.0..4.0));
        let scaled_gains = Grid::from_rows(
            &(0..k)
                .map(|kk| ch.gains.row(kk).iter().map(|g| g * c).collect())
                .collect::<Vec<_>>(),
        )
        .expect("rectangular");
        let scaled_ch = ChannelState::from_gains(scaled_gains).expect("positive");
        let scaled_cfg = ScenarioConfig {
            noise_power: cfg.noise_power * c,
            ..cfg.clone()
        };
        let scaled = evaluate_matching(&m, &scaled_ch, &scaled_cfg);
        if let Some(msg) = compare_links(&base, &scaled, 1e-9) {
            scaling.push(format!("trial {t}: {msg}"));
        }

        if let Some((kk, &victim)) = (0..k)
            .filter(|&kk| m.sub_users(kk).len() >= 2)
            .map(|kk| (kk, m.sub_users(kk).iter().next().expect("non-empty")))
            .next()
        {
            let reduced = Matching::from_pairs(&cfg, m.pairs().filter(|&p| p != (victim, kk)))
                .expect("subset of a feasible matching");
            let after = evaluate_matching(&reduced, &ch, &cfg);
            for &u in reduced.sub_users(kk) {
                if after.link_rate[(kk, u)] < base.link_rate[(kk, u)] {
                    monotone.push(format!("trial {t}: user {u} on sub {kk} lost rate"));
                }
            }
        }
    }
    checks.push(outcome(
        "gain/noise joint scaling invariance",
        scaling,
        format!("{trials} instances within 1e-9 relative"),
    ));
    checks.push(outcome(
        "interference monotonicity",
        monotone,
        format!("{trials} instances"),
    ));
    checks
}

fn compare_links(a: &RateReport, b: &RateReport, rel: f64) -> Option<String> {
    a.link_rate
        .values()
        .iter()
        .zip(b.link_rate.values())
        .find(|(x, y)| (*x - *y).abs() > rel * x.abs().max(1e-300))
        .map(|(x, y)| format!("{x} vs {y}"))
}

fn hata_check() -> CheckOutcome {
    let l = hata_path_loss(350.0, &ScenarioConfig::default());
    match l {
        Ok(l) => CheckOutcome {
            name: "Okumura-Hata spot value",
            passed: (l - HATA_DEFAULT_350M_DB).abs() <= 0.01,
            detail: format!("L(350 m) = {l:.4} dB"),
        },
        Err(e) => CheckOutcome {
            name: "Okumura-Hata spot value",
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Runs every check; none of them stops early on another's failure.
pub fn run_checks(opts: &CheckOptions) -> Result<Vec<CheckOutcome>> {
    let mut checks = Vec::new();
    for rule in [SwapRule::SumRate, SwapRule::Pareto] {
        let outcomes = tiny_suite(opts, rule)?;
        checks.extend(stability_and_gap_checks(rule, &outcomes));
    }
    checks.push(fuzz_matchings(opts));
    checks.extend(rate_checks(opts));
    checks.push(hata_check());
    Ok(checks)
}
