//! Uplink rates under successive interference cancellation.
//!
//! The receiver decodes the users sharing a subchannel in descending order of
//! channel gain, breaking ties by lower user index first. A user is disturbed
//! only by co-users decoded after it:
//!
//! ```text
//! I_kj = sum over i on k decoded after j of p_ki * g_ki
//! r_kj = log2(1 + p_kj g_kj / (noise + I_kj))
//! ```

use serde::{Deserialize, Serialize};

use crate::channel::ChannelState;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::matching::Matching;

/// Transmit power per (subchannel, user), watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub p: Grid,
}

impl PowerAllocation {
    pub fn power(&self, k: usize, j: usize) -> f64 {
        self.p[(k, j)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// bit/s/Hz per (subchannel, user); zero where unassigned.
    pub link_rate: Grid,
    pub user_rate: Vec<f64>,
    pub sub_rate: Vec<f64>,
    pub sum_rate: f64,
    pub scheduled_users: usize,
}

/// One user's signal on a subchannel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub user: usize,
    pub power: f64,
    pub gain: f64,
}

impl Link {
    fn received(&self) -> f64 {
        self.power * self.gain
    }

    /// True when `self` is decoded after `other` and therefore interferes with it.
    fn decoded_after(&self, other: &Link) -> bool {
        self.gain < other.gain || (self.gain == other.gain && self.user > other.user)
    }
}

/// Per-subchannel power share of a user holding `degree` subchannels.
pub fn equal_share(total_power: f64, degree: usize) -> f64 {
    if degree == 0 {
        0.0
    } else {
        total_power / degree as f64
    }
}

pub fn equal_power_split(m: &Matching, cfg: &ScenarioConfig) -> PowerAllocation {
    let mut p = Grid::zeros(m.n_subchannels(), m.n_users());
    for j in 0..m.n_users() {
        let share = equal_share(cfg.user_tx_power, m.user_subs(j).len());
        for &k in m.user_subs(j) {
            p[(k, j)] = share;
        }
    }
    PowerAllocation { p }
}

/// Interference seen by `link` from the others in `links`.
fn residual_interference(link: &Link, links: &[Link]) -> f64 {
    links
        .iter()
        .filter(|other| other.user != link.user && other.decoded_after(link))
        .map(Link::received)
        .sum()
}

/// SIC link rates for the users sharing one subchannel, in the order given.
///
/// Callers pass links sorted by user index so that every route through this
/// function sums interference in the same order.
pub fn sic_link_rates(links: &[Link], noise_power: f64) -> Vec<f64> {
    links
        .iter()
        .map(|link| {
            let sinr = link.received() / (noise_power + residual_interference(link, links));
            (1.0 + sinr).log2()
        })
        .collect()
}

/// Links currently on subchannel `k`, ascending by user.
pub fn subchannel_links(
    m: &Matching,
    k: usize,
    pa: &PowerAllocation,
    ch: &ChannelState,
) -> Vec<Link> {
    m.sub_users(k)
        .iter()
        .map(|&j| Link {
            user: j,
            power: pa.power(k, j),
            gain: ch.gain(k, j),
        })
        .collect()
}

/// `I_kj` for an assigned pair.
pub fn interference(
    k: usize,
    j: usize,
    m: &Matching,
    pa: &PowerAllocation,
    ch: &ChannelState,
) -> Result<f64> {
    if k >= m.n_subchannels() || j >= m.n_users() || !m.contains(j, k) {
        return Err(Error::NotMatched { sub: k, user: j });
    }
    let links = subchannel_links(m, k, pa, ch);
    let me = links
        .iter()
        .find(|l| l.user == j)
        .expect("matched user present on its subchannel");
    Ok(residual_interference(me, &links))
}

pub fn evaluate(
    m: &Matching,
    pa: &PowerAllocation,
    ch: &ChannelState,
    cfg: &ScenarioConfig,
) -> RateReport {
    let (n_sub, n_users) = (m.n_subchannels(), m.n_users());
    let mut link_rate = Grid::zeros(n_sub, n_users);
    let mut sub_rate = vec![0.0; n_sub];
    for (k, total) in sub_rate.iter_mut().enumerate() {
        let links = subchannel_links(m, k, pa, ch);
        for (link, r) in links.iter().zip(sic_link_rates(&links, cfg.noise_power)) {
            link_rate[(k, link.user)] = r;
            *total += r;
        }
    }
    let user_rate: Vec<f64> = (0..n_users).map(|j| link_rate.column(j).sum()).collect();
    let sum_rate = sub_rate.iter().sum();
    let scheduled_users = (0..n_users)
        .filter(|&j| !m.user_subs(j).is_empty() && user_rate[j] >= cfg.min_rate)
        .count();
    RateReport {
        link_rate,
        user_rate,
        sub_rate,
        sum_rate,
        scheduled_users,
    }
}

/// Equal power split followed by [`evaluate`].
pub fn evaluate_matching(m: &Matching, ch: &ChannelState, cfg: &ScenarioConfig) -> RateReport {
    evaluate(m, &equal_power_split(m, cfg), ch, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::init_random;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_cfg(n: usize, k: usize, dv: usize, df: usize) -> ScenarioConfig {
        ScenarioConfig {
            user_tx_power: 1.0,
            noise_power: 1.0,
            ..ScenarioConfig::small(n, k, dv, df)
        }
    }

    #[test]
    fn equal_split_thirds() {
        let cfg = unit_cfg(2, 4, 3, 2);
        let m = Matching::from_pairs(&cfg, [(0, 0), (0, 2), (0, 3)]).unwrap();
        let pa = equal_power_split(&m, &cfg);
        for k in [0, 2, 3] {
            assert_eq!(pa.power(k, 0), 1.0 / 3.0);
        }
        assert_eq!(pa.power(1, 0), 0.0);
        assert!(pa.p.column(1).all(|p| p == 0.0));
        assert!((pa.p.column(0).sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unit_snr_gives_one_bit() {
        let cfg = unit_cfg(1, 1, 1, 1);
        let ch = ChannelState::from_rows(&[vec![1.0]]).unwrap();
        let m = Matching::from_pairs(&cfg, [(0, 0)]).unwrap();
        let r = evaluate_matching(&m, &ch, &cfg);
        assert!((r.link_rate[(0, 0)] - 1.0).abs() < 1e-12);
        assert_eq!(r.scheduled_users, 1);
    }

    #[test]
    fn empty_matching_has_no_rate() {
        let cfg = unit_cfg(3, 2, 1, 2);
        let ch = ChannelState::from_rows(&[vec![1.0; 3], vec![2.0; 3]]).unwrap();
        let r = evaluate_matching(&Matching::empty_for(&cfg), &ch, &cfg);
        assert_eq!(r.sum_rate, 0.0);
        assert_eq!(r.scheduled_users, 0);
    }

    #[test]
    fn two_user_sic_matches_hand_values() {
        // gains 3 and 1, unit power and noise:
        // strong user log2(1 + 3/2), weak user log2(2), total log2(5).
        let cfg = unit_cfg(2, 1, 1, 2);
        let ch = ChannelState::from_rows(&[vec![3.0, 1.0]]).unwrap();
        let m = Matching::from_pairs(&cfg, [(0, 0), (1, 0)]).unwrap();
        let pa = equal_power_split(&m, &cfg);
        assert_eq!(interference(0, 0, &m, &pa, &ch).unwrap(), 1.0);
        assert_eq!(interference(0, 1, &m, &pa, &ch).unwrap(), 0.0);
        let r = evaluate(&m, &pa, &ch, &cfg);
        assert!((r.link_rate[(0, 0)] - 2.5f64.log2()).abs() < 1e-12);
        assert!((r.link_rate[(0, 1)] - 1.0).abs() < 1e-12);
        assert!((r.sum_rate - 5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn interference_on_three_user_subchannel() {
        // gains 1, 5, 3; received powers 2, 0.5*5, 0.5*3
        // decode order 1, 2, 0 -> I1 = 1.5 + 2, I2 = 2, I0 = 0
        let cfg = ScenarioConfig {
            user_tx_power: 1.0,
            ..ScenarioConfig::small(3, 2, 2, 3)
        };
        let ch = ChannelState::from_rows(&[vec![1.0, 5.0, 3.0], vec![1.0, 1.0, 1.0]]).unwrap();
        let m = Matching::from_pairs(&cfg, [(0, 0), (1, 0), (1, 1), (2, 0), (2, 1)]).unwrap();
        let mut pa = equal_power_split(&m, &cfg);
        pa.p[(0, 0)] = 2.0;
        let i: Vec<f64> = (0..3)
            .map(|j| interference(0, j, &m, &pa, &ch).unwrap())
            .collect();
        assert_eq!(i, vec![0.0, 0.5 * 3.0 + 2.0, 2.0]);
        assert!(matches!(
            interference(1, 0, &m, &pa, &ch),
            Err(Error::NotMatched { sub: 1, user: 0 })
        ));
    }

    #[test]
    fn equal_gains_break_ties_by_index() {
        let cfg = unit_cfg(2, 1, 1, 2);
        let ch = ChannelState::from_rows(&[vec![2.0, 2.0]]).unwrap();
        let m = Matching::from_pairs(&cfg, [(0, 0), (1, 0)]).unwrap();
        let pa = equal_power_split(&m, &cfg);
        assert_eq!(interference(0, 0, &m, &pa, &ch).unwrap(), 2.0);
        assert_eq!(interference(0, 1, &m, &pa, &ch).unwrap(), 0.0);
    }

    #[test]
    fn min_rate_threshold_filters_scheduled() {
        let cfg = ScenarioConfig {
            min_rate: 1.5,
            ..unit_cfg(2, 2, 1, 1)
        };
        let ch = ChannelState::from_rows(&[vec![1.0, 1.0], vec![1.0, 7.0]]).unwrap();
        let m = Matching::from_pairs(&cfg, [(0, 0), (1, 1)]).unwrap();
        let r = evaluate_matching(&m, &ch, &cfg);
        // user 0 gets exactly 1 bit, user 1 gets 3 bits
        assert_eq!(r.scheduled_users, 1);
    }

    fn random_instance(seed: u64) -> (ScenarioConfig, ChannelState, Matching) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..7);
        let k = rng.random_range(1..4);
        let cfg = ScenarioConfig {
            user_tx_power: rng.random_range(0.1..2.0),
            noise_power: rng.random_range(0.01..1.0),
            ..ScenarioConfig::small(n, k, rng.random_range(1..=k), rng.random_range(1..=n))
        };
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| rng.random_range(0.01..10.0)).collect())
            .collect();
        let ch = ChannelState::from_rows(&rows).unwrap();
        let m = init_random(&cfg, &mut rng);
        (cfg, ch, m)
    }

    proptest! {
        #[test]
        fn report_totals_agree(seed in any::<u64>()) {
            let (cfg, ch, m) = random_instance(seed);
            let r = evaluate_matching(&m, &ch, &cfg);
            let by_user: f64 = r.user_rate.iter().sum();
            prop_assert!((r.sum_rate - by_user).abs() <= 1e-9 * r.sum_rate.max(1.0));
            prop_assert!(r.sum_rate >= 0.0);
            for k in 0..cfg.n_subchannels {
                for j in 0..cfg.n_users {
                    if !m.contains(j, k) {
                        prop_assert_eq!(r.link_rate[(k, j)], 0.0);
                    } else {
                        prop_assert!(r.link_rate[(k, j)] > 0.0);
                    }
                }
            }
            prop_assert!(r.scheduled_users <= cfg.n_users.min(cfg.capacity()));
        }

        #[test]
        fn sum_rate_survives_user_relabeling(seed in any::<u64>()) {
            let (cfg, ch, m) = random_instance(seed);
            let n = cfg.n_users;
            let perm: Vec<usize> = (0..n).rev().collect();
            let rows: Vec<Vec<f64>> = (0..cfg.n_subchannels)
                .map(|k| (0..n).map(|j| ch.gain(k, perm[j])).collect())
                .collect();
            let permuted_ch = ChannelState::from_rows(&rows).unwrap();
            let pairs = m.pairs().map(|(j, k)| (perm[j], k));
            let permuted_m = Matching::from_pairs(&cfg, pairs).unwrap();
            let a = evaluate_matching(&m, &ch, &cfg).sum_rate;
            let b = evaluate_matching(&permuted_m, &permuted_ch, &cfg).sum_rate;
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }
    }
}
