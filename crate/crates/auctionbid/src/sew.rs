//! Successive exponential weighting: a bidding policy for adversarial
//! first-price auctions that tracks every 1-Lipschitz bidding strategy while
//! doing `O(sqrt(T))` work per round and using `O(T)` memory.
//!
//! The policy maintains `L = floor(log2 sqrt(T))` levels. Level `l` splits
//! the value space `(0, 1]` into `M_l = 2^(l+1)` bins and the bid space into
//! `U_l = 2^(l+1) - 1` overlapping dyadic intervals
//! `J_{l,u} = (2^(-l-1)(u-1), 2^(-l-1)(u+1)]`, each of width `2^-l`. Within
//! the active bin of each level, experts are organized into `W_l = 2^l - 1`
//! groups of four: the *lower*, *middle*, and *upper* employees refine the
//! parent interval at the next level, while the *dummy* employee bids the
//! fixed price `b_{l,w} = 2^-l (w+1)`, the supremum of the group's reachable
//! bids. Because the reward is one-sided Lipschitz in the bid, the dummy is
//! within `2^(1-l)` of the best employee on every round, which is exactly the
//! gap handed to the inner exponential-weighting step.
//!
//! Each round has three steps: compute the four-way weight vectors for every
//! group in the active bin of every level; descend the tree sampling one of
//! the four arms per level to produce a bid; then, once the highest competing
//! bid is revealed, push rewards bottom-up, crediting internal experts with
//! the expected reward of the mixture they played.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::auction::{bin_index, reward_raw, settle, Bid, HighestOtherBid, RoundOutcome, Value};
use crate::error::{Error, Result};
use crate::ew::{ew_probabilities4, LearningRate};
use crate::ew::sample_slice;

/// Configuration for one policy instance. The horizon must be known up
/// front; it fixes the number of levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SewConfig {
    pub horizon: u64,
    pub learning_rate: LearningRate,
    /// When set, emitted bids are clamped to at most the current private
    /// value. Off by default: bids then stay on the dyadic grid.
    pub clip_bids: bool,
}

impl SewConfig {
    pub fn new(horizon: u64) -> Self {
        SewConfig {
            horizon,
            learning_rate: LearningRate::Theoretical,
            clip_bids: false,
        }
    }

    pub fn with_learning_rate(mut self, mode: LearningRate) -> Self {
        self.learning_rate = mode;
        self
    }

    pub fn with_clipping(mut self, clip: bool) -> Self {
        self.clip_bids = clip;
        self
    }
}

/// The deterministic level/bin/group layout derived from the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SewGeometry {
    /// Number of levels, `floor(log2 sqrt(T))`.
    pub levels: u32,
}

impl SewGeometry {
    pub fn for_horizon(horizon: u64) -> Result<Self> {
        if horizon < 4 {
            return Err(Error::HorizonTooSmall(horizon));
        }
        // largest L with 4^L <= T, i.e. floor(log2 sqrt(T))
        let mut levels = 0u32;
        while 4u64.checked_pow(levels + 1).is_some_and(|p| p <= horizon) {
            levels += 1;
        }
        Ok(SewGeometry { levels })
    }

    /// `M_l = 2^(l+1)` bins at level `l`.
    #[inline]
    pub fn bins(&self, level: u32) -> usize {
        1usize << (level + 1)
    }

    /// `U_l = 2^(l+1) - 1` regular experts per bin.
    #[inline]
    pub fn regular_experts(&self, level: u32) -> usize {
        (1usize << (level + 1)) - 1
    }

    /// `W_l = 2^l - 1` four-way groups per bin.
    #[inline]
    pub fn groups(&self, level: u32) -> usize {
        (1usize << level) - 1
    }

    /// Fixed price of the dummy expert of group `w` at level `l`:
    /// `2^-l (w+1)`, the supremum of the group's three intervals.
    #[inline]
    pub fn dummy_bid(&self, level: u32, group: usize) -> f64 {
        (group as f64 + 1.0) / (1u64 << level) as f64
    }

    /// Interval `J_{l,u}` of regular expert `u` at level `l`.
    pub fn expert_interval(&self, level: u32, u: usize) -> (f64, f64) {
        let half = 1.0 / (1u64 << (level + 1)) as f64;
        ((u as f64 - 1.0) * half, (u as f64 + 1.0) * half)
    }

    /// Deterministic bid of leaf expert `u`: the midpoint `2^(-L-1) u`.
    #[inline]
    pub fn leaf_bid(&self, u: usize) -> f64 {
        u as f64 / (1u64 << (self.levels + 1)) as f64
    }

    /// Suboptimality gap handed to the inner weighting at level `l`.
    #[inline]
    pub fn gap(&self, level: u32) -> f64 {
        2.0 / (1u64 << level) as f64
    }

    /// Total number of cumulative-reward cells, `sum_l M_l (U_l + W_l)`.
    /// Closed form: `8 · 2^L (2^L - 1)`, which stays below `8T`.
    pub fn ledger_cells(&self) -> u64 {
        let p = 1u64 << self.levels;
        8 * p * (p - 1)
    }

    /// Exact number of four-way weight evaluations performed per round,
    /// `sum_l W_l = 2^(L+1) - L - 2`.
    pub fn weight_evals_per_round(&self) -> u64 {
        (1u64 << (self.levels + 1)) - self.levels as u64 - 2
    }
}

/// Per-level ledger: visit counts per bin plus cumulative rewards for the
/// regular and dummy experts of every bin, laid out contiguously.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LevelLedger {
    /// T_{l,m}, indexed by bin - 1.
    visits: Vec<u64>,
    /// R_{l,m,u}, indexed by (bin - 1) * U_l + (u - 1).
    regular: Vec<f64>,
    /// R'_{l,m,w}, indexed by (bin - 1) * W_l + (w - 1).
    dummy: Vec<f64>,
}

/// Weight vectors and bin pointers for one round, reused by the update step
/// so the mixture that produced the bid is also the one that is credited.
#[derive(Debug, Clone)]
pub struct RoundScratch {
    round: u64,
    value_bits: u64,
    /// Active bin per level (1-based), index by level - 1.
    active_bins: Vec<usize>,
    /// probs[level - 1][group - 1]: the four-way vector for that group.
    probs: Vec<Vec<[f64; 4]>>,
}

/// Serializable snapshot sufficient to resume a run mid-trace.
#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format_version: u32,
    config: SewConfig,
    rounds_played: u64,
    levels: Vec<LevelLedger>,
}

const CHECKPOINT_VERSION: u32 = 1;

/// The successive-exponential-weighting bidding policy.
#[derive(Debug, Clone)]
pub struct SewPolicy {
    config: SewConfig,
    geometry: SewGeometry,
    ledger: Vec<LevelLedger>,
    rounds_played: u64,
    scratch: Option<RoundScratch>,
    last_bid: Option<Bid>,
    weight_evals: u64,
    // reusable per-round reward buffers, one per level, indexed 1..=U_l / 1..=W_l
    buf_regular: Vec<Vec<f64>>,
    buf_dummy: Vec<Vec<f64>>,
}

impl SewPolicy {
    /// Initializes geometry and a zeroed ledger for the given horizon.
    /// Horizons below 4 are rejected: they leave no levels.
    pub fn new(config: SewConfig) -> Result<Self> {
        let geometry = SewGeometry::for_horizon(config.horizon)?;
        let cells = geometry.ledger_cells();
        assert!(
            cells <= 8 * config.horizon,
            "ledger budget exceeded: {cells} cells for horizon {}",
            config.horizon
        );
        let mut ledger = Vec::with_capacity(geometry.levels as usize);
        let mut buf_regular = Vec::with_capacity(geometry.levels as usize);
        let mut buf_dummy = Vec::with_capacity(geometry.levels as usize);
        for l in 1..=geometry.levels {
            let bins = geometry.bins(l);
            let u = geometry.regular_experts(l);
            let w = geometry.groups(l);
            ledger.push(LevelLedger {
                visits: vec![0; bins],
                regular: vec![0.0; bins * u],
                dummy: vec![0.0; bins * w],
            });
            buf_regular.push(vec![0.0; u + 1]);
            buf_dummy.push(vec![0.0; w + 1]);
        }
        Ok(SewPolicy {
            config,
            geometry,
            ledger,
            rounds_played: 0,
            scratch: None,
            last_bid: None,
            weight_evals: 0,
            buf_regular,
            buf_dummy,
        })
    }

    pub fn geometry(&self) -> SewGeometry {
        self.geometry
    }

    pub fn config(&self) -> SewConfig {
        self.config
    }

    pub fn rounds_played(&self) -> u64 {
        self.rounds_played
    }

    /// Cumulative number of four-way weight evaluations so far.
    pub fn weight_evals(&self) -> u64 {
        self.weight_evals
    }

    /// The pending round's scratch, if weights have been computed.
    pub fn current_scratch(&self) -> Option<&RoundScratch> {
        self.scratch.as_ref()
    }

    /// Cumulative reward cell of regular expert `u` in `bin` at `level`.
    pub fn regular_reward(&self, level: u32, bin: usize, u: usize) -> f64 {
        let led = &self.ledger[(level - 1) as usize];
        let stride = self.geometry.regular_experts(level);
        led.regular[(bin - 1) * stride + (u - 1)]
    }

    /// Cumulative reward cell of the dummy expert of `group` in `bin`.
    pub fn dummy_reward(&self, level: u32, bin: usize, group: usize) -> f64 {
        let led = &self.ledger[(level - 1) as usize];
        let stride = self.geometry.groups(level);
        led.dummy[(bin - 1) * stride + (group - 1)]
    }

    /// Visit count of `bin` at `level`.
    pub fn visits(&self, level: u32, bin: usize) -> u64 {
        self.ledger[(level - 1) as usize].visits[bin - 1]
    }

    /// Step 1: locate the active bin at every level, bump its visit count,
    /// and compute the four-way weight vector of every group there. No other
    /// bin is read or written.
    pub fn compute_weights(&mut self, v: Value) -> &RoundScratch {
        let levels = self.geometry.levels;
        let mut active_bins = Vec::with_capacity(levels as usize);
        let mut probs = Vec::with_capacity(levels as usize);
        for l in 1..=levels {
            let bins = self.geometry.bins(l);
            let m_star = bin_index(v, bins);
            let led = &mut self.ledger[(l - 1) as usize];
            led.visits[m_star - 1] += 1;
            let t = led.visits[m_star - 1];
            let u_stride = self.geometry.regular_experts(l);
            let w_stride = self.geometry.groups(l);
            let gap = self.geometry.gap(l);
            let reg = &led.regular[(m_star - 1) * u_stride..m_star * u_stride];
            let dum = &led.dummy[(m_star - 1) * w_stride..m_star * w_stride];
            let mut level_probs = Vec::with_capacity(w_stride);
            for w in 1..=w_stride {
                let rewards = [reg[2 * w - 2], reg[2 * w - 1], reg[2 * w], dum[w - 1]];
                level_probs.push(ew_probabilities4(rewards, t, gap, self.config.learning_rate));
            }
            self.weight_evals += level_probs.len() as u64;
            active_bins.push(m_star);
            probs.push(level_probs);
        }
        self.scratch = Some(RoundScratch {
            round: self.rounds_played,
            value_bits: v.get().to_bits(),
            active_bins,
            probs,
        });
        self.scratch.as_ref().unwrap()
    }

    /// Step 2: descend from the root group, sampling one of the four arms at
    /// each level. Arm 4 stops at the dummy's fixed price; arms 1-3 refine
    /// into the corresponding child group, and at the last level bid the
    /// midpoint of the chosen interval.
    pub fn select_bid(&self, scratch: &RoundScratch, rng: &mut dyn RngCore) -> Bid {
        let bid = descend(&self.geometry, &scratch.probs, rng);
        let bid = if self.config.clip_bids {
            bid.min(f64::from_bits(scratch.value_bits))
        } else {
            bid
        };
        Bid::new(bid).expect("dyadic bids stay inside (0, 1]")
    }

    /// Step 3: credit rewards bottom-up in the active bins. Leaf experts get
    /// the realized reward of their fixed bids; each internal expert gets the
    /// expected reward of the four-way mixture it played this round, using
    /// the same weight vectors that produced the bid.
    pub fn apply_update(&mut self, v: Value, m: HighestOtherBid) -> Result<()> {
        let scratch = self
            .scratch
            .take()
            .ok_or_else(|| Error::StaleScratch("no pending round: call compute_weights first".into()))?;
        if scratch.value_bits != v.get().to_bits() || scratch.round != self.rounds_played {
            return Err(Error::StaleScratch(
                "scratch was computed for a different round".into(),
            ));
        }
        let vv = v.get();
        let mm = m.get();
        let levels = self.geometry.levels;
        for l in (1..=levels).rev() {
            let li = (l - 1) as usize;
            let m_star = scratch.active_bins[li];
            let u_count = self.geometry.regular_experts(l);
            let w_count = self.geometry.groups(l);
            let reg_base = (m_star - 1) * u_count;
            let dum_base = (m_star - 1) * w_count;

            for w in 1..=w_count {
                let r = reward_raw(self.geometry.dummy_bid(l, w), vv, mm);
                self.buf_dummy[li][w] = r;
                self.ledger[li].dummy[dum_base + (w - 1)] += r;
            }
            if l == levels {
                for u in 1..=u_count {
                    let r = reward_raw(self.geometry.leaf_bid(u), vv, mm);
                    self.buf_regular[li][u] = r;
                    self.ledger[li].regular[reg_base + (u - 1)] += r;
                }
            } else {
                let (head, tail) = self.buf_regular.split_at_mut(li + 1);
                let parent_buf = &mut head[li];
                let child_buf = &tail[0];
                let dummy_child = &self.buf_dummy[li + 1];
                let led = &mut self.ledger[li];
                for u in 1..=u_count {
                    let p = scratch.probs[li + 1][u - 1];
                    let r = mix_parent_reward(
                        p,
                        [child_buf[2 * u - 1], child_buf[2 * u], child_buf[2 * u + 1]],
                        dummy_child[u],
                    );
                    parent_buf[u] = r;
                    led.regular[reg_base + (u - 1)] += r;
                }
            }
        }
        self.rounds_played += 1;
        Ok(())
    }

    /// Runs one full round: weights, bid, reveal, update.
    pub fn round(
        &mut self,
        v: Value,
        m: HighestOtherBid,
        rng: &mut dyn RngCore,
    ) -> Result<RoundOutcome> {
        if self.rounds_played >= self.config.horizon {
            return Err(Error::HorizonExceeded(self.config.horizon));
        }
        self.compute_weights(v);
        let bid = self.select_bid(self.scratch.as_ref().unwrap(), rng);
        self.last_bid = Some(bid);
        self.apply_update(v, m)?;
        Ok(settle(bid, v, m))
    }

    /// Serializes config, ledger, and round index as a versioned checkpoint.
    pub fn checkpoint(&self) -> Result<String> {
        let cp = Checkpoint {
            format_version: CHECKPOINT_VERSION,
            config: self.config,
            rounds_played: self.rounds_played,
            levels: self.ledger.clone(),
        };
        Ok(serde_json::to_string(&cp)?)
    }

    /// Restores a policy from [`SewPolicy::checkpoint`] output.
    pub fn resume(text: &str) -> Result<Self> {
        let cp: Checkpoint = serde_json::from_str(text)?;
        if cp.format_version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {}",
                cp.format_version
            )));
        }
        let mut policy = SewPolicy::new(cp.config)?;
        if cp.levels.len() != policy.ledger.len() {
            return Err(Error::Checkpoint("level count mismatch".into()));
        }
        for (mine, theirs) in policy.ledger.iter().zip(cp.levels.iter()) {
            if mine.visits.len() != theirs.visits.len()
                || mine.regular.len() != theirs.regular.len()
                || mine.dummy.len() != theirs.dummy.len()
            {
                return Err(Error::Checkpoint("ledger shape mismatch".into()));
            }
        }
        if cp.rounds_played > cp.config.horizon {
            return Err(Error::Checkpoint("round index exceeds horizon".into()));
        }
        policy.ledger = cp.levels;
        policy.rounds_played = cp.rounds_played;
        Ok(policy)
    }
}

/// The descent of Step 2 as a pure function of the per-group weight vectors.
pub(crate) fn descend(
    geometry: &SewGeometry,
    probs: &[Vec<[f64; 4]>],
    rng: &mut dyn RngCore,
) -> f64 {
    let mut group = 1usize;
    for l in 1..=geometry.levels {
        let p = &probs[(l - 1) as usize][group - 1];
        let s = sample_slice(p, rng) + 1; // arms are 1-based
        if s == 4 {
            return geometry.dummy_bid(l, group);
        }
        if l < geometry.levels {
            group = 2 * (group - 1) + s;
        } else {
            return geometry.leaf_bid(2 * (group - 1) + s);
        }
    }
    unreachable!("descent always returns at or before the last level")
}

/// Expected reward of an internal expert: the mixture of its three refining
/// children and its dummy, at the weights played this round.
#[inline]
pub fn mix_parent_reward(p: [f64; 4], children: [f64; 3], dummy: f64) -> f64 {
    p[0] * children[0] + p[1] * children[1] + p[2] * children[2] + p[3] * dummy
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64) -> Value {
        Value::new(x).unwrap()
    }
    fn m(x: f64) -> HighestOtherBid {
        HighestOtherBid::new(x).unwrap()
    }

    #[test]
    fn geometry_examples() {
        let g = SewGeometry::for_horizon(100).unwrap();
        assert_eq!(g.levels, 3);
        assert_eq!(
            (1..=3).map(|l| g.bins(l)).collect::<Vec<_>>(),
            vec![4, 8, 16]
        );
        assert_eq!(
            (1..=3).map(|l| g.regular_experts(l)).collect::<Vec<_>>(),
            vec![3, 7, 15]
        );
        assert_eq!(
            (1..=3).map(|l| g.groups(l)).collect::<Vec<_>>(),
            vec![1, 3, 7]
        );

        let g = SewGeometry::for_horizon(4).unwrap();
        assert_eq!(g.levels, 1);
        assert_eq!(g.bins(1), 4);
        assert_eq!(g.regular_experts(1), 3);
        assert_eq!(g.groups(1), 1);

        assert!(SewGeometry::for_horizon(3).is_err());
    }

    #[test]
    fn ledger_cell_count_matches_enumeration_and_budget() {
        for t in [4u64, 100, 1 << 10, 1 << 20] {
            let g = SewGeometry::for_horizon(t).unwrap();
            let enumerated: u64 = (1..=g.levels)
                .map(|l| (g.bins(l) * (g.regular_experts(l) + g.groups(l))) as u64)
                .sum();
            assert_eq!(g.ledger_cells(), enumerated);
            assert!(g.ledger_cells() <= 8 * t);
        }
    }

    #[test]
    fn weight_eval_count_closed_form() {
        for t in [4u64, 64, 1 << 10, 1 << 16] {
            let g = SewGeometry::for_horizon(t).unwrap();
            let per_level: u64 = (1..=g.levels).map(|l| g.groups(l) as u64).sum();
            assert_eq!(g.weight_evals_per_round(), per_level);
        }
    }

    #[test]
    fn weight_eval_count_quadrupling_horizon_at_most_doubles() {
        for t in [1u64 << 8, 1 << 10, 1 << 12, 1 << 16] {
            let a = SewGeometry::for_horizon(t).unwrap().weight_evals_per_round();
            let b = SewGeometry::for_horizon(4 * t)
                .unwrap()
                .weight_evals_per_round();
            assert!((b as f64 / a as f64) <= 2.5);
        }
    }

    #[test]
    fn dummy_is_supremum_of_its_group_exactly() {
        let g = SewGeometry::for_horizon(1 << 12).unwrap();
        for l in 1..=g.levels {
            for w in 1..=g.groups(l) {
                let sup = [2 * w - 1, 2 * w, 2 * w + 1]
                    .iter()
                    .map(|&u| g.expert_interval(l, u).1)
                    .fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(g.dummy_bid(l, w), sup);
                let inf = [2 * w - 1, 2 * w, 2 * w + 1]
                    .iter()
                    .map(|&u| g.expert_interval(l, u).0)
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(sup - inf, g.gap(l));
            }
        }
    }

    #[test]
    fn fresh_ledger_gives_uniform_weights() {
        let mut p = SewPolicy::new(SewConfig::new(64)).unwrap();
        let scratch = p.compute_weights(v(0.37));
        for level in &scratch.probs {
            for group in level {
                for &x in group {
                    assert!((x - 0.25).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn active_bins_follow_value() {
        let mut p = SewPolicy::new(SewConfig::new(30)).unwrap(); // L = 2
        let scratch = p.compute_weights(v(0.3));
        assert_eq!(scratch.active_bins, vec![2, 3]);
    }

    #[test]
    fn descent_hand_traces() {
        let g = SewGeometry::for_horizon(30).unwrap(); // L = 2
        assert_eq!(g.levels, 2);
        let forced = |arm: usize| -> [f64; 4] {
            let mut p = [0.0; 4];
            p[arm - 1] = 1.0;
            p
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);

        // middle at level 1 then dummy at level 2: group 2, price 2^-2·3
        let probs = vec![
            vec![forced(2)],
            vec![forced(1), forced(4), forced(1)],
        ];
        assert_eq!(descend(&g, &probs, &mut rng), 0.75);

        // middle then lower: leaf 2(2-1)+1 = 3, bid 2^-3·3
        let probs = vec![
            vec![forced(2)],
            vec![forced(1), forced(1), forced(1)],
        ];
        assert_eq!(descend(&g, &probs, &mut rng), 0.375);

        // single level, dummy arm: the top price
        let g1 = SewGeometry::for_horizon(4).unwrap();
        let probs = vec![vec![forced(4)]];
        assert_eq!(descend(&g1, &probs, &mut rng), 1.0);
    }

    #[test]
    fn leaf_reward_example() {
        // level-2 expert u=3 bids 2^-3·3 = 0.375 and earns 0.125 at (v, m) = (0.5, 0.3)
        let mut p = SewPolicy::new(SewConfig::new(30)).unwrap();
        p.compute_weights(v(0.5));
        p.apply_update(v(0.5), m(0.3)).unwrap();
        let bin = bin_index(v(0.5), 8);
        assert_eq!(bin, 4);
        assert_eq!(p.regular_reward(2, bin, 3), 0.125);
    }

    #[test]
    fn parent_mixture_example() {
        let r = mix_parent_reward([0.25; 4], [0.1, 0.2, 0.0], 0.05);
        assert!((r - 0.0875).abs() < 1e-15);
    }

    #[test]
    fn losing_rounds_record_zero_and_overbids_negative() {
        let mut p = SewPolicy::new(SewConfig::new(16)).unwrap();
        // m > v: every bid either loses (reward 0) or wins at a loss
        p.compute_weights(v(0.2));
        p.apply_update(v(0.2), m(0.9)).unwrap();
        let g = p.geometry();
        for l in 1..=g.levels {
            let bin = bin_index(v(0.2), g.bins(l));
            for u in 1..=g.regular_experts(l) {
                assert!(p.regular_reward(l, bin, u) <= 0.0);
            }
            for w in 1..=g.groups(l) {
                assert!(p.dummy_reward(l, bin, w) <= 0.0);
            }
        }
    }

    #[test]
    fn only_active_bins_mutate() {
        let mut p = SewPolicy::new(SewConfig::new(256)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // seed some history
        for _ in 0..40 {
            let vv = v(rng.gen_range(0.01..=1.0));
            let mm = m(rng.gen_range(0.0..=1.0));
            p.round(vv, mm, &mut rng).unwrap();
        }
        let before = p.clone();
        let vv = v(0.31);
        let mm = m(0.4);
        p.round(vv, mm, &mut rng).unwrap();
        let g = p.geometry();
        for l in 1..=g.levels {
            let active = bin_index(vv, g.bins(l));
            for bin in 1..=g.bins(l) {
                let visits_changed = p.visits(l, bin) != before.visits(l, bin);
                let mut rewards_changed = false;
                for u in 1..=g.regular_experts(l) {
                    if p.regular_reward(l, bin, u) != before.regular_reward(l, bin, u) {
                        rewards_changed = true;
                    }
                }
                for w in 1..=g.groups(l) {
                    if p.dummy_reward(l, bin, w) != before.dummy_reward(l, bin, w) {
                        rewards_changed = true;
                    }
                }
                if bin == active {
                    assert!(visits_changed);
                } else {
                    assert!(!visits_changed && !rewards_changed, "bin {bin} level {l} mutated");
                }
            }
        }
    }

    #[test]
    fn bids_stay_on_dyadic_grid() {
        let mut p = SewPolicy::new(SewConfig::new(512)).unwrap();
        let g = p.geometry();
        let denom = (1u64 << (g.levels + 1)) as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..512 {
            let vv = v(rng.gen_range(0.001..=1.0));
            let mm = m(rng.gen_range(0.0..=1.0));
            let out = p.round(vv, mm, &mut rng).unwrap();
            let scaled = out.bid.get() * denom;
            assert_eq!(scaled, scaled.round());
            assert!(out.bid.get() > 0.0 && out.bid.get() <= 1.0);
            assert_eq!(out.won, out.bid.get() >= mm.get());
        }
    }

    #[test]
    fn full_run_is_deterministic_given_seed() {
        let run = |seed: u64| -> Vec<f64> {
            let mut p = SewPolicy::new(SewConfig::new(200)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut trace_rng = ChaCha8Rng::seed_from_u64(1234);
            (0..200)
                .map(|_| {
                    let vv = v(trace_rng.gen_range(0.01..=1.0));
                    let mm = m(trace_rng.gen_range(0.0..=1.0));
                    p.round(vv, mm, &mut rng).unwrap().bid.get()
                })
                .collect()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn horizon_is_enforced() {
        let mut p = SewPolicy::new(SewConfig::new(4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..4 {
            p.round(v(0.5), m(0.2), &mut rng).unwrap();
        }
        assert!(matches!(
            p.round(v(0.5), m(0.2), &mut rng),
            Err(Error::HorizonExceeded(4))
        ));
    }

    #[test]
    fn stale_scratch_rejected() {
        let mut p = SewPolicy::new(SewConfig::new(16)).unwrap();
        assert!(matches!(
            p.apply_update(v(0.5), m(0.2)),
            Err(Error::StaleScratch(_))
        ));
        p.compute_weights(v(0.5));
        assert!(matches!(
            p.apply_update(v(0.6), m(0.2)),
            Err(Error::StaleScratch(_))
        ));
    }

    #[test]
    fn checkpoint_resume_matches_uninterrupted_run() {
        let horizon = 128u64;
        let mut trace_rng = ChaCha8Rng::seed_from_u64(5);
        let trace: Vec<(Value, HighestOtherBid)> = (0..horizon)
            .map(|_| {
                (
                    v(trace_rng.gen_range(0.01..=1.0)),
                    m(trace_rng.gen_range(0.0..=1.0)),
                )
            })
            .collect();

        let mut straight = SewPolicy::new(SewConfig::new(horizon)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut bids = Vec::new();
        let mut snapshot = None;
        let mut rng_snapshot = None;
        for (i, &(vv, mm)) in trace.iter().enumerate() {
            if i == 64 {
                snapshot = Some(straight.checkpoint().unwrap());
                rng_snapshot = Some(rng.clone());
            }
            bids.push(straight.round(vv, mm, &mut rng).unwrap().bid);
        }

        let mut resumed = SewPolicy::resume(&snapshot.unwrap()).unwrap();
        assert_eq!(resumed.rounds_played(), 64);
        let mut rng2 = rng_snapshot.unwrap();
        for (i, &(vv, mm)) in trace.iter().enumerate().skip(64) {
            let out = resumed.round(vv, mm, &mut rng2).unwrap();
            assert_eq!(out.bid, bids[i], "bid diverged at round {i}");
        }
    }

    #[test]
    fn checkpoint_rejects_bad_version() {
        let p = SewPolicy::new(SewConfig::new(16)).unwrap();
        let text = p.checkpoint().unwrap().replace("\"format_version\":1", "\"format_version\":9");
        assert!(matches!(SewPolicy::resume(&text), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn lipschitz_image_refines_into_child_interval_exactly() {
        // Random 1-Lipschitz pieces mapped through the dyadic interval tree:
        // whenever a function's image over a bin fits one expert interval,
        // its image over either child bin fits one of that expert's three
        // refining intervals. Run in integer units so every containment
        // check is exact.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut checked = 0usize;
        while checked < 10_000 {
            let level: u32 = rng.gen_range(1..=3);
            let bins = 1usize << (level + 1);
            let m_bin = rng.gen_range(1..=bins);
            // knots at step h = 2^-level-5 across the bin; values in units of
            // h/4 = 2^-(level+7); J endpoints are multiples of 64 units.
            let segments = 16usize;
            let unit_per_knot = 4i64;
            let u_count = (1usize << (level + 1)) - 1;
            let target_u = rng.gen_range(1..=u_count);
            let j_lo = (target_u as i64 - 1) * 16 * unit_per_knot; // 2^-l-1(u-1) in units
            let j_hi = (target_u as i64 + 1) * 16 * unit_per_knot;

            // random 1-Lipschitz walk clamped into (j_lo, j_hi]
            let mut vals = Vec::with_capacity(segments + 1);
            let mut cur = rng.gen_range(j_lo + 1..=j_hi);
            vals.push(cur);
            for _ in 0..segments {
                cur += rng.gen_range(-unit_per_knot..=unit_per_knot);
                cur = cur.clamp(j_lo + 1, j_hi);
                vals.push(cur);
            }

            // premise holds by construction: image within (j_lo, j_hi]
            // children of bin m at level+1: 2m-1 and 2m, i.e. knots [0..8], [8..16]
            let child_intervals = [(0usize, segments / 2), (segments / 2, segments)];
            for &(k_lo, k_hi) in &child_intervals {
                let seg = &vals[k_lo..=k_hi];
                let lo = *seg.iter().min().unwrap();
                let hi = *seg.iter().max().unwrap();
                // find u' among {2u-1, 2u, 2u+1} at level+1 with
                // image ⊆ (2^-l-2(u'-1), 2^-l-2(u'+1)] = ((u'-1)·32, (u'+1)·32] units
                let mut found = false;
                for u_child in [2 * target_u - 1, 2 * target_u, 2 * target_u + 1] {
                    let c_lo = (u_child as i64 - 1) * 8 * unit_per_knot;
                    let c_hi = (u_child as i64 + 1) * 8 * unit_per_knot;
                    if lo > c_lo && hi <= c_hi {
                        found = true;
                        break;
                    }
                }
                assert!(
                    found,
                    "no covering child interval: level {level} bin {m_bin} u {target_u} image [{lo},{hi}]"
                );
            }
            checked += 1;
        }
    }
}
