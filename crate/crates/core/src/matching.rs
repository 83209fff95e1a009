//! Degree-constrained many-to-many matching between users and subchannels.
//!
//! A [`Matching`] is the set form of the binary assignment matrix `F`:
//! subchannel `k` is assigned to user `j` iff `k` is in `user_subs(j)`.
//! Both directions are stored and kept mutually consistent.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matching {
    d_v: usize,
    d_f: usize,
    user_to_subs: Vec<BTreeSet<usize>>,
    sub_to_users: Vec<BTreeSet<usize>>,
}

/// User `user_i` hands `sub_p` to `user_j` and takes `sub_q` in return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SwapSpec {
    pub user_i: usize,
    pub sub_p: usize,
    pub user_j: usize,
    pub sub_q: usize,
}

impl SwapSpec {
    pub fn new(user_i: usize, sub_p: usize, user_j: usize, sub_q: usize) -> Self {
        Self {
            user_i,
            sub_p,
            user_j,
            sub_q,
        }
    }

    /// The same exchange seen from the other user.
    pub fn mirrored(self) -> Self {
        Self::new(self.user_j, self.sub_q, self.user_i, self.sub_p)
    }
}

impl fmt::Display for SwapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(user {} sub {} <-> user {} sub {})",
            self.user_i, self.sub_p, self.user_j, self.sub_q
        )
    }
}

impl Matching {
    pub fn empty(n_users: usize, n_subchannels: usize, d_v: usize, d_f: usize) -> Self {
        Self {
            d_v,
            d_f,
            user_to_subs: vec![BTreeSet::new(); n_users],
            sub_to_users: vec![BTreeSet::new(); n_subchannels],
        }
    }

    pub fn empty_for(cfg: &ScenarioConfig) -> Self {
        Self::empty(cfg.n_users, cfg.n_subchannels, cfg.d_v, cfg.d_f)
    }

    /// Builds a matching from `(user, subchannel)` pairs, enforcing both caps.
    pub fn from_pairs(
        cfg: &ScenarioConfig,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut m = Self::empty_for(cfg);
        for (j, k) in pairs {
            m.assign(j, k)?;
        }
        Ok(m)
    }

    /// Adds `k` to user `j`. Fails on out-of-range indices, duplicates or a
    /// full cap on either side.
    pub fn assign(&mut self, j: usize, k: usize) -> Result<()> {
        if j >= self.n_users() || k >= self.n_subchannels() {
            return Err(Error::Shape(format!(
                "pair (user {j}, sub {k}) outside {}x{}",
                self.n_users(),
                self.n_subchannels()
            )));
        }
        if self.user_to_subs[j].contains(&k) {
            return Err(Error::Shape(format!("user {j} already holds sub {k}")));
        }
        if self.user_to_subs[j].len() >= self.d_v {
            return Err(Error::Shape(format!(
                "user {j} already at d_v = {}",
                self.d_v
            )));
        }
        if self.sub_to_users[k].len() >= self.d_f {
            return Err(Error::Shape(format!(
                "sub {k} already at d_f = {}",
                self.d_f
            )));
        }
        self.user_to_subs[j].insert(k);
        self.sub_to_users[k].insert(j);
        Ok(())
    }

    pub fn n_users(&self) -> usize {
        self.user_to_subs.len()
    }

    pub fn n_subchannels(&self) -> usize {
        self.sub_to_users.len()
    }

    pub fn d_v(&self) -> usize {
        self.d_v
    }

    pub fn d_f(&self) -> usize {
        self.d_f
    }

    pub fn user_subs(&self, j: usize) -> &BTreeSet<usize> {
        &self.user_to_subs[j]
    }

    pub fn sub_users(&self, k: usize) -> &BTreeSet<usize> {
        &self.sub_to_users[k]
    }

    pub fn contains(&self, j: usize, k: usize) -> bool {
        self.user_to_subs[j].contains(&k)
    }

    pub fn user_degrees(&self) -> Vec<usize> {
        self.user_to_subs.iter().map(BTreeSet::len).collect()
    }

    pub fn sub_degrees(&self) -> Vec<usize> {
        self.sub_to_users.iter().map(BTreeSet::len).collect()
    }

    /// Number of assigned (user, subchannel) pairs.
    pub fn total(&self) -> usize {
        self.user_to_subs.iter().map(BTreeSet::len).sum()
    }

    /// Users holding at least one subchannel.
    pub fn matched_users(&self) -> usize {
        self.user_to_subs.iter().filter(|s| !s.is_empty()).count()
    }

    /// All assigned pairs as `(user, subchannel)`, ascending.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.user_to_subs
            .iter()
            .enumerate()
            .flat_map(|(j, subs)| subs.iter().map(move |&k| (j, k)))
    }

    /// Checks mutual consistency and both degree caps.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (j, subs) in self.user_to_subs.iter().enumerate() {
            if subs.len() > self.d_v {
                return Err(format!(
                    "user {j} holds {} > d_v = {}",
                    subs.len(),
                    self.d_v
                ));
            }
            for &k in subs {
                if k >= self.n_subchannels() || !self.sub_to_users[k].contains(&j) {
                    return Err(format!("user {j} -> sub {k} has no reverse entry"));
                }
            }
        }
        for (k, users) in self.sub_to_users.iter().enumerate() {
            if users.len() > self.d_f {
                return Err(format!(
                    "sub {k} holds {} > d_f = {}",
                    users.len(),
                    self.d_f
                ));
            }
            for &j in users {
                if j >= self.n_users() || !self.user_to_subs[j].contains(&k) {
                    return Err(format!("sub {k} -> user {j} has no reverse entry"));
                }
            }
        }
        Ok(())
    }

    pub fn validate_swap(&self, s: &SwapSpec) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidSwap {
                swap: s.to_string(),
                reason: reason.to_owned(),
            })
        };
        if s.user_i >= self.n_users() || s.user_j >= self.n_users() {
            return fail("user index out of range");
        }
        if s.sub_p >= self.n_subchannels() || s.sub_q >= self.n_subchannels() {
            return fail("subchannel index out of range");
        }
        if s.user_i == s.user_j {
            return fail("users must differ");
        }
        if s.sub_p == s.sub_q {
            return fail("subchannels must differ");
        }
        if !self.contains(s.user_i, s.sub_p) {
            return fail("sub_p is not held by user_i");
        }
        if !self.contains(s.user_j, s.sub_q) {
            return fail("sub_q is not held by user_j");
        }
        if self.contains(s.user_i, s.sub_q) {
            return fail("user_i already holds sub_q");
        }
        if self.contains(s.user_j, s.sub_p) {
            return fail("user_j already holds sub_p");
        }
        Ok(())
    }

    /// Executes the exchange in place.
    ///
    /// A spec that is invalid as written but valid with `sub_p` and `sub_q`
    /// read the other way round (the state right after applying it) is
    /// executed in that orientation, so applying a swap twice restores the original.
    pub fn swap_in_place(&mut self, s: &SwapSpec) -> Result<()> {
        let s = match self.validate_swap(s) {
            Ok(()) => *s,
            Err(err) => {
                let undo = SwapSpec::new(s.user_i, s.sub_q, s.user_j, s.sub_p);
                if self.validate_swap(&undo).is_err() {
                    return Err(err);
                }
                undo
            }
        };
        let SwapSpec {
            user_i: i,
            sub_p: p,
            user_j: j,
            sub_q: q,
        } = s;
        self.user_to_subs[i].remove(&p);
        self.user_to_subs[i].insert(q);
        self.user_to_subs[j].remove(&q);
        self.user_to_subs[j].insert(p);
        self.sub_to_users[p].remove(&i);
        self.sub_to_users[p].insert(j);
        self.sub_to_users[q].remove(&j);
        self.sub_to_users[q].insert(i);
        Ok(())
    }

    /// Returns the matching with `s` applied, leaving `self` untouched.
    pub fn apply_swap(&self, s: &SwapSpec) -> Result<Matching> {
        let mut next = self.clone();
        next.swap_in_place(s)?;
        Ok(next)
    }

    /// Every valid exchange, each unordered pair once with `user_i < user_j`,
    /// ordered by `(user_i, user_j, sub_p, sub_q)`.
    pub fn swap_candidates(&self) -> impl Iterator<Item = SwapSpec> + '_ {
        let n = self.n_users();
        (0..n).flat_map(move |i| {
            (i + 1..n).flat_map(move |j| {
                let subs_i = &self.user_to_subs[i];
                let subs_j = &self.user_to_subs[j];
                subs_i
                    .iter()
                    .filter(move |p| !subs_j.contains(p))
                    .flat_map(move |&p| {
                        subs_j
                            .iter()
                            .filter(move |q| !subs_i.contains(q))
                            .map(move |&q| SwapSpec::new(i, p, j, q))
                    })
            })
        })
    }
}

pub fn enumerate_swap_candidates(m: &Matching) -> Vec<SwapSpec> {
    m.swap_candidates().collect()
}

/// Random initial matching.
///
/// Users are visited in shuffled order; each draws `min(d_v, available)`
/// distinct subchannels uniformly among those still below `d_f`. Once all
/// `K * d_f` seats are taken the remaining users stay unmatched.
pub fn init_random<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Matching {
    let mut m = Matching::empty_for(cfg);
    let mut order: Vec<usize> = (0..cfg.n_users).collect();
    order.shuffle(rng);
    for j in order {
        let open: Vec<usize> = (0..cfg.n_subchannels)
            .filter(|&k| m.sub_to_users[k].len() < cfg.d_f)
            .collect();
        if open.is_empty() {
            break;
        }
        let take = cfg.d_v.min(open.len());
        for idx in index::sample(rng, open.len(), take) {
            let k = open[idx];
            m.user_to_subs[j].insert(k);
            m.sub_to_users[k].insert(j);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_by_two() -> (ScenarioConfig, Matching) {
        let cfg = ScenarioConfig::small(2, 2, 1, 1);
        let m = Matching::from_pairs(&cfg, [(0, 0), (1, 1)]).unwrap();
        (cfg, m)
    }

    #[test]
    fn single_cell_init() {
        let cfg = ScenarioConfig::small(1, 1, 1, 1);
        let m = init_random(&cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(m.pairs().collect::<Vec<_>>(), vec![(0, 0)]);
    }

    #[test]
    fn default_init_respects_capacity() {
        let cfg = ScenarioConfig::default();
        for seed in 0..20 {
            let m = init_random(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
            m.check_invariants().unwrap();
            // min(N * d_v, K * d_f) = min(300, 50)
            assert!(m.total() <= 50);
        }
        let a = init_random(&cfg, &mut ChaCha8Rng::seed_from_u64(7));
        let b = init_random(&cfg, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }

    #[test]
    fn two_element_exchange() {
        let (_, m) = two_by_two();
        let s = SwapSpec::new(0, 0, 1, 1);
        let swapped = m.apply_swap(&s).unwrap();
        assert_eq!(swapped.pairs().collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
        assert_eq!(swapped.apply_swap(&s).unwrap(), m);
        assert_eq!(swapped.user_degrees(), m.user_degrees());
        assert_eq!(swapped.sub_degrees(), m.sub_degrees());
    }

    #[test]
    fn rejects_invalid_swaps() {
        let cfg = ScenarioConfig::small(3, 3, 2, 2);
        let m = Matching::from_pairs(&cfg, [(0, 0), (0, 1), (1, 1), (1, 2)]).unwrap();
        let bad = [
            SwapSpec::new(0, 0, 0, 1), // same user
            SwapSpec::new(0, 1, 1, 1), // same subchannel
            SwapSpec::new(0, 2, 1, 1), // user 0 lacks sub 2
            SwapSpec::new(0, 0, 1, 1), // user 0 already holds sub 1
            SwapSpec::new(0, 0, 2, 1), // user 2 holds nothing
            SwapSpec::new(0, 0, 5, 1), // out of range
        ];
        for s in bad {
            assert!(
                matches!(m.apply_swap(&s), Err(Error::InvalidSwap { .. })),
                "{s}"
            );
        }
        assert!(m.apply_swap(&SwapSpec::new(0, 0, 1, 2)).is_ok());
    }

    #[test]
    fn candidates_on_small_instances() {
        let cfg = ScenarioConfig::small(2, 2, 1, 1);
        assert!(enumerate_swap_candidates(&Matching::empty_for(&cfg)).is_empty());
        let (_, m) = two_by_two();
        assert_eq!(
            enumerate_swap_candidates(&m),
            vec![SwapSpec::new(0, 0, 1, 1)]
        );
    }

    #[test]
    fn candidates_are_canonical_and_complete() {
        let cfg = ScenarioConfig::small(4, 3, 2, 3);
        let m = init_random(&cfg, &mut ChaCha8Rng::seed_from_u64(11));
        let listed = enumerate_swap_candidates(&m);
        let mut brute = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                for p in 0..3 {
                    for q in 0..3 {
                        let s = SwapSpec::new(i, p, j, q);
                        if m.validate_swap(&s).is_ok() {
                            brute.push(s);
                        }
                    }
                }
            }
        }
        assert_eq!(listed, brute);
        let mut sorted = listed.clone();
        sorted.sort_by_key(|s| (s.user_i, s.user_j, s.sub_p, s.sub_q));
        assert_eq!(listed, sorted);
    }

    #[test]
    fn assign_enforces_caps() {
        let cfg = ScenarioConfig::small(3, 2, 1, 2);
        let mut m = Matching::empty_for(&cfg);
        m.assign(0, 0).unwrap();
        assert!(m.assign(0, 1).is_err());
        m.assign(1, 0).unwrap();
        assert!(m.assign(2, 0).is_err());
        assert!(m.assign(1, 0).is_err());
        assert!(m.assign(3, 0).is_err());
    }

    proptest! {
        #[test]
        fn random_swap_sequences_keep_invariants(
            n in 2usize..8, k in 2usize..6, dv in 1usize..4, df in 1usize..4,
            seed in any::<u64>(), picks in prop::collection::vec(any::<usize>(), 1..60),
        ) {
            let cfg = ScenarioConfig::small(n, k, dv.min(k), df.min(n));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = init_random(&cfg, &mut rng);
            prop_assert!(m.total() <= (n * cfg.d_v).min(k * cfg.d_f));
            let degrees = (m.user_degrees(), m.sub_degrees());
            for pick in picks {
                let cands = enumerate_swap_candidates(&m);
                if cands.is_empty() {
                    break;
                }
                let s = cands[pick % cands.len()];
                let next = m.apply_swap(&s).unwrap();
                prop_assert!(next.check_invariants().is_ok());
                prop_assert_eq!(&next.apply_swap(&s).unwrap(), &m);
                prop_assert_eq!(next.total(), m.total());
                m = next;
            }
            prop_assert_eq!((m.user_degrees(), m.sub_degrees()), degrees);
        }
    }
}
