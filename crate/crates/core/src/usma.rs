//! User-subchannel swap matching.
//!
//! Starting from a random degree-feasible matching, candidate exchanges are
//! scanned in canonical order. The first swap-blocking exchange is executed
//! and the scan restarts; the run ends after a full scan finds none.
//!
//! Under [`SwapRule::SumRate`] every executed swap raises the sum-rate by more
//! than `swap_epsilon`, so with a positive epsilon the run terminates: the
//! set of matchings is finite and the sum-rate is a strictly increasing
//! potential.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelState;
use crate::config::{ScenarioConfig, SwapRule};
use crate::error::Result;
use crate::matching::{init_random, Matching, SwapSpec};
use crate::rate::{
    equal_power_split, equal_share, evaluate, evaluate_matching, sic_link_rates, Link,
    PowerAllocation, RateReport,
};

/// Utility changes caused by one exchange.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapGains {
    pub sum_rate: f64,
    pub user_i: f64,
    pub user_j: f64,
    pub sub_p: f64,
    pub sub_q: f64,
}

impl SwapGains {
    pub fn is_blocking(&self, rule: SwapRule, epsilon: f64) -> bool {
        match rule {
            SwapRule::SumRate => self.sum_rate > epsilon,
            SwapRule::Pareto => {
                let players = [self.user_i, self.user_j, self.sub_p, self.sub_q];
                players.iter().all(|d| *d >= 0.0) && players.iter().any(|d| *d > epsilon)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    /// Candidate scans started, including the final one.
    pub iterations: usize,
    pub swaps_executed: usize,
    pub initial_sum_rate: f64,
    /// Sum-rate after each executed swap.
    pub sum_rate_trajectory: Vec<f64>,
    pub converged: bool,
    pub final_report: RateReport,
}

/// Utility changes from applying `s` to `m`, recomputing the power split
/// and every rate of the hypothetical matching from scratch.
pub fn swap_gains(
    s: &SwapSpec,
    m: &Matching,
    ch: &ChannelState,
    cfg: &ScenarioConfig,
) -> Result<SwapGains> {
    m.validate_swap(s)?;
    let before = evaluate_matching(m, ch, cfg);
    let after = evaluate_matching(&m.apply_swap(s)?, ch, cfg);
    let user_delta = |j: usize| -> f64 {
        (0..m.n_subchannels())
            .map(|k| after.link_rate[(k, j)] - before.link_rate[(k, j)])
            .fold(0.0, |acc, d| acc + d)
    };
    Ok(SwapGains {
        sum_rate: (0..m.n_subchannels())
            .map(|k| after.sub_rate[k] - before.sub_rate[k])
            .fold(0.0, |acc, d| acc + d),
        user_i: user_delta(s.user_i),
        user_j: user_delta(s.user_j),
        sub_p: after.sub_rate[s.sub_p] - before.sub_rate[s.sub_p],
        sub_q: after.sub_rate[s.sub_q] - before.sub_rate[s.sub_q],
    })
}

/// Whether `s` is a swap-blocking exchange for `m` under the configured rule.
pub fn is_swap_blocking(
    s: &SwapSpec,
    m: &Matching,
    ch: &ChannelState,
    cfg: &ScenarioConfig,
) -> Result<bool> {
    Ok(swap_gains(s, m, ch, cfg)?.is_blocking(cfg.swap_rule, cfg.swap_epsilon))
}

/// Current matching plus cached rates, so a candidate only re-evaluates the
/// two subchannels it touches.
///
/// Produces bit-identical [`SwapGains`] to [`swap_gains`]: untouched rates
/// cancel to exact zeros there, and the touched subchannels go through the
/// same `sic_link_rates` call with links in the same order.
struct SwapState<'a> {
    ch: &'a ChannelState,
    cfg: &'a ScenarioConfig,
    matching: Matching,
    power: PowerAllocation,
    report: RateReport,
}

impl<'a> SwapState<'a> {
    fn new(matching: Matching, ch: &'a ChannelState, cfg: &'a ScenarioConfig) -> Self {
        let power = equal_power_split(&matching, cfg);
        let report = evaluate(&matching, &power, ch, cfg);
        Self {
            ch,
            cfg,
            matching,
            power,
            report,
        }
    }

    /// Links on `k` after `leaving` hands it to `joining`, ascending by user,
    /// plus the rate obtained by `joining`.
    fn rates_after(&self, k: usize, leaving: usize, joining: usize) -> (f64, f64) {
        let joining_power = equal_share(
            self.cfg.user_tx_power,
            self.matching.user_subs(joining).len(),
        );
        let mut links: Vec<Link> = self
            .matching
            .sub_users(k)
            .iter()
            .filter(|&&u| u != leaving)
            .map(|&u| Link {
                user: u,
                power: self.power.power(k, u),
                gain: self.ch.gain(k, u),
            })
            .collect();
        let at = links.partition_point(|l| l.user < joining);
        links.insert(
            at,
            Link {
                user: joining,
                power: joining_power,
                gain: self.ch.gain(k, joining),
            },
        );
        let rates = sic_link_rates(&links, self.cfg.noise_power);
        let total = rates.iter().fold(0.0, |acc, r| acc + r);
        (total, rates[at])
    }

    fn gains(&self, s: &SwapSpec) -> SwapGains {
        let (p_total, j_on_p) = self.rates_after(s.sub_p, s.user_i, s.user_j);
        let (q_total, i_on_q) = self.rates_after(s.sub_q, s.user_j, s.user_i);
        let sub_p = p_total - self.report.sub_rate[s.sub_p];
        let sub_q = q_total - self.report.sub_rate[s.sub_q];
        let lr = &self.report.link_rate;
        SwapGains {
            sum_rate: sub_p + sub_q,
            user_i: i_on_q - lr[(s.sub_p, s.user_i)],
            user_j: j_on_p - lr[(s.sub_q, s.user_j)],
            sub_p,
            sub_q,
        }
    }

    fn first_blocking(&self) -> Option<SwapSpec> {
        self.matching.swap_candidates().find(|s| {
            self.gains(s)
                .is_blocking(self.cfg.swap_rule, self.cfg.swap_epsilon)
        })
    }

    fn execute(&mut self, s: &SwapSpec) -> Result<()> {
        self.matching.swap_in_place(s)?;
        self.power = equal_power_split(&self.matching, self.cfg);
        self.report = evaluate(&self.matching, &self.power, self.ch, self.cfg);
        Ok(())
    }
}

/// Runs the swap phase from a given starting matching.
pub fn run_from(
    initial: Matching,
    ch: &ChannelState,
    cfg: &ScenarioConfig,
) -> Result<(Matching, RunStats)> {
    cfg.validate()?;
    ch.check_shape(cfg)?;
    let mut state = SwapState::new(initial, ch, cfg);
    let initial_sum_rate = state.report.sum_rate;
    let max_iterations = cfg.max_iterations();
    let mut iterations = 0;
    let mut trajectory = Vec::new();
    let mut converged = false;

    while iterations < max_iterations {
        iterations += 1;
        match state.first_blocking() {
            Some(s) => {
                state.execute(&s)?;
                trajectory.push(state.report.sum_rate);
            }
            None => {
                converged = true;
                break;
            }
        }
    }

    let stats = RunStats {
        iterations,
        swaps_executed: trajectory.len(),
        initial_sum_rate,
        sum_rate_trajectory: trajectory,
        converged,
        final_report: state.report,
    };
    Ok((state.matching, stats))
}

/// Random initial matching, then the swap phase.
pub fn run<R: Rng + ?Sized>(
    ch: &ChannelState,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<(Matching, RunStats)> {
    cfg.validate()?;
    ch.check_shape(cfg)?;
    run_from(init_random(cfg, rng), ch, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::build_channel;
    use crate::error::Error;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_cfg(n: usize, k: usize, dv: usize, df: usize) -> ScenarioConfig {
        ScenarioConfig {
            user_tx_power: 1.0,
            noise_power: 1.0,
            ..ScenarioConfig::small(n, k, dv, df)
        }
    }

    fn crossed() -> (ScenarioConfig, ChannelState, Matching) {
        // each user is weak on the subchannel it holds and strong on the other
        let cfg = unit_cfg(2, 2, 1, 1);
        let ch = ChannelState::from_rows(&[vec![1.0, 10.0], vec![10.0, 1.0]]).unwrap();
        let m = Matching::from_pairs(&cfg, [(0, 0), (1, 1)]).unwrap();
        (cfg, ch, m)
    }

    #[test]
    fn crossed_gains_block_in_both_modes() {
        let (cfg, ch, m) = crossed();
        let s = SwapSpec::new(0, 0, 1, 1);
        let g = swap_gains(&s, &m, &ch, &cfg).unwrap();
        // 2 * log2(11) - 2 * log2(2)
        assert!((g.sum_rate - (2.0 * 11f64.log2() - 2.0)).abs() < 1e-12);
        assert!(is_swap_blocking(&s, &m, &ch, &cfg).unwrap());
        let pareto = ScenarioConfig {
            swap_rule: SwapRule::Pareto,
            ..cfg.clone()
        };
        assert!(is_swap_blocking(&s, &m, &ch, &pareto).unwrap());

        let (done, stats) = run_from(m, &ch, &cfg).unwrap();
        assert!(stats.converged);
        assert_eq!(stats.swaps_executed, 1);
        assert_eq!(stats.iterations, 2);
        assert_eq!(done.pairs().collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn symmetric_swap_is_not_blocking() {
        let cfg = unit_cfg(2, 2, 1, 1);
        let ch = ChannelState::from_rows(&[vec![4.0, 4.0], vec![4.0, 4.0]]).unwrap();
        let m = Matching::from_pairs(&cfg, [(0, 0), (1, 1)]).unwrap();
        let s = SwapSpec::new(0, 0, 1, 1);
        assert!(!is_swap_blocking(&s, &m, &ch, &cfg).unwrap());
        let pareto = ScenarioConfig {
            swap_rule: SwapRule::Pareto,
            ..cfg
        };
        assert!(!is_swap_blocking(&s, &m, &ch, &pareto).unwrap());
    }

    #[test]
    fn invalid_spec_propagates() {
        let (cfg, ch, m) = crossed();
        let err = is_swap_blocking(&SwapSpec::new(0, 1, 1, 0), &m, &ch, &cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidSwap { .. }));
    }

    #[test]
    fn cached_gains_match_full_recomputation() {
        for seed in 0..40 {
            let cfg = ScenarioConfig {
                swap_rule: if seed % 2 == 0 {
                    SwapRule::SumRate
                } else {
                    SwapRule::Pareto
                },
                ..ScenarioConfig::small(8, 4, 2, 3)
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ch = build_channel(&cfg, &mut rng).unwrap();
            let state = SwapState::new(init_random(&cfg, &mut rng), &ch, &cfg);
            for s in state.matching.swap_candidates() {
                let full = swap_gains(&s, &state.matching, &ch, &cfg).unwrap();
                assert_eq!(state.gains(&s), full, "seed {seed} {s}");
            }
        }
    }

    #[test]
    fn single_user_needs_no_swaps() {
        let cfg = ScenarioConfig::small(1, 3, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = build_channel(&cfg, &mut rng).unwrap();
        let (_, stats) = run(&ch, &cfg, &mut rng).unwrap();
        assert!(stats.converged);
        assert_eq!(stats.swaps_executed, 0);
        assert_eq!(stats.iterations, 1);
    }

    #[test]
    fn unit_capacity_needs_no_swaps() {
        let cfg = ScenarioConfig::small(4, 1, 1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ch = build_channel(&cfg, &mut rng).unwrap();
        let (m, stats) = run(&ch, &cfg, &mut rng).unwrap();
        assert_eq!(m.total(), 1);
        assert!(stats.converged);
        assert_eq!(stats.swaps_executed, 0);
    }

    #[test]
    fn default_scenario_is_deterministic_and_converges() {
        let cfg = ScenarioConfig::default();
        let go = || {
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            let ch = build_channel(&cfg, &mut rng).unwrap();
            run(&ch, &cfg, &mut rng).unwrap()
        };
        let (m1, s1) = go();
        let (m2, s2) = go();
        assert_eq!(m1, m2);
        assert_eq!(s1, s2);
        assert!(s1.converged);
        m1.check_invariants().unwrap();
        let mut prev = s1.initial_sum_rate;
        for r in &s1.sum_rate_trajectory {
            assert!(*r - prev > cfg.swap_epsilon);
            prev = *r;
        }
    }

    #[test]
    fn iteration_cap_is_reported() {
        let (mut cfg, ch, m) = crossed();
        cfg.max_iterations = Some(1);
        let (_, stats) = run_from(m, &ch, &cfg).unwrap();
        assert_eq!(stats.iterations, 1);
        assert_eq!(stats.swaps_executed, 1);
        assert!(!stats.converged);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let (_, ch, _) = crossed();
        let cfg = unit_cfg(3, 2, 1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(run(&ch, &cfg, &mut rng), Err(Error::Shape(_))));
    }
}
