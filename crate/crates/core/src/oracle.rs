//! Exhaustive ground truth for tiny instances.
//!
//! Every binary assignment matrix is scanned, so the instance size is capped
//! at [`MAX_CELLS`] user-subchannel cells.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelState;
use crate::config::{ScenarioConfig, SwapRule};
use crate::error::{Error, Result};
use crate::matching::{Matching, SwapSpec};
use crate::rate::evaluate_matching;

pub const MAX_CELLS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub n_feasible: usize,
    pub best_matching: Matching,
    pub best_sum_rate: f64,
    /// `(best - usma) / best`, once a USMA result has been attached.
    pub usma_gap: Option<f64>,
}

impl OracleReport {
    pub fn with_usma(mut self, usma_sum_rate: f64) -> Self {
        self.usma_gap = Some(relative_gap(self.best_sum_rate, usma_sum_rate));
        self
    }
}

pub fn relative_gap(best: f64, achieved: f64) -> f64 {
    if best > 0.0 {
        (best - achieved) / best
    } else {
        0.0
    }
}

fn guard(cfg: &ScenarioConfig) -> Result<usize> {
    let cells = cfg.n_users * cfg.n_subchannels;
    if cells > MAX_CELLS {
        return Err(Error::TooLarge {
            cells,
            limit: MAX_CELLS,
        });
    }
    Ok(cells)
}

/// Decodes `mask` (bit `k * N + j` set means user `j` holds subchannel `k`)
/// into a matching if it respects both degree caps.
fn decode(mask: u32, cfg: &ScenarioConfig) -> Option<Matching> {
    let n = cfg.n_users;
    for k in 0..cfg.n_subchannels {
        let row = (mask >> (k * n)) & ((1u32 << n) - 1);
        if row.count_ones() as usize > cfg.d_f {
            return None;
        }
    }
    for j in 0..n {
        let col = (0..cfg.n_subchannels)
            .filter(|k| mask & (1 << (k * n + j)) != 0)
            .count();
        if col > cfg.d_v {
            return None;
        }
    }
    let mut m = Matching::empty_for(cfg);
    for k in 0..cfg.n_subchannels {
        for j in 0..n {
            if mask & (1 << (k * n + j)) != 0 {
                m.assign(j, k).expect("caps checked above");
            }
        }
    }
    Some(m)
}

/// Every degree-feasible matching, the empty one first.
pub fn enumerate_matchings(cfg: &ScenarioConfig) -> Result<impl Iterator<Item = Matching> + '_> {
    let cells = guard(cfg)?;
    Ok((0..1u32 << cells).filter_map(move |mask| decode(mask, cfg)))
}

/// Sum-rate optimum over all feasible matchings under equal power split.
/// Ties go to the earliest matching in enumeration order.
pub fn optimal(ch: &ChannelState, cfg: &ScenarioConfig) -> Result<OracleReport> {
    let cells = guard(cfg)?;
    ch.check_shape(cfg)?;
    let (n_feasible, best) = (0..1u32 << cells)
        .into_par_iter()
        .filter_map(|mask| {
            decode(mask, cfg).map(|m| {
                (
                    1usize,
                    Some((mask, evaluate_matching(&m, ch, cfg).sum_rate)),
                )
            })
        })
        .reduce(
            || (0, None),
            |(na, a), (nb, b)| {
                let best = match (a, b) {
                    (Some(a), Some(b)) => {
                        // strictly greater wins; on equal rates the lower mask wins
                        if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                            Some(b)
                        } else {
                            Some(a)
                        }
                    }
                    (a, b) => a.or(b),
                };
                (na + nb, best)
            },
        );
    let (mask, best_sum_rate) = best.expect("the empty matching is always feasible");
    Ok(OracleReport {
        n_feasible,
        best_matching: decode(mask, cfg).expect("mask came from a feasible matching"),
        best_sum_rate,
        usma_gap: None,
    })
}

/// All exchanges of `m` that the configured rule would accept, found by a
/// direct scan that re-evaluates each hypothetical matching in full.
pub fn blocking_pairs(
    m: &Matching,
    ch: &ChannelState,
    cfg: &ScenarioConfig,
) -> Result<Vec<SwapSpec>> {
    ch.check_shape(cfg)?;
    let before = evaluate_matching(m, ch, cfg);
    let n_sub = m.n_subchannels();
    let mut found = Vec::new();
    for i in 0..m.n_users() {
        for j in 0..m.n_users() {
            if i >= j {
                continue;
            }
            for &p in m.user_subs(i) {
                for &q in m.user_subs(j) {
                    if p == q || m.contains(i, q) || m.contains(j, p) {
                        continue;
                    }
                    let mut pairs: Vec<(usize, usize)> = m
                        .pairs()
                        .filter(|&pair| pair != (i, p) && pair != (j, q))
                        .collect();
                    pairs.push((i, q));
                    pairs.push((j, p));
                    let swapped = Matching::from_pairs(cfg, pairs)?;
                    let after = evaluate_matching(&swapped, ch, cfg);

                    let total = (0..n_sub)
                        .map(|k| after.sub_rate[k] - before.sub_rate[k])
                        .fold(0.0, |acc, d| acc + d);
                    let user = |u: usize| {
                        (0..n_sub)
                            .map(|k| after.link_rate[(k, u)] - before.link_rate[(k, u)])
                            .fold(0.0, |acc, d| acc + d)
                    };
                    let eps = cfg.swap_epsilon;
                    let blocking = match cfg.swap_rule {
                        SwapRule::SumRate => total > eps,
                        SwapRule::Pareto => {
                            let d = [
                                user(i),
                                user(j),
                                after.sub_rate[p] - before.sub_rate[p],
                                after.sub_rate[q] - before.sub_rate[q],
                            ];
                            d.iter().all(|x| *x >= 0.0) && d.iter().any(|x| *x > eps)
                        }
                    };
                    if blocking {
                        found.push(SwapSpec::new(i, p, j, q));
                    }
                }
            }
        }
    }
    Ok(found)
}

/// True when no exchange of `m` is swap-blocking.
pub fn certify_stable(m: &Matching, ch: &ChannelState, cfg: &ScenarioConfig) -> Result<bool> {
    Ok(blocking_pairs(m, ch, cfg)?.is_empty())
}
