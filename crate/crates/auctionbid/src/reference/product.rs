//! Single-level product experts: piecewise-constant bidding functions on `M`
//! equal bins with bids drawn from the grid `{1/M, ..., 1}`.
//!
//! Joint exponential weighting over all `M^M` such functions factorizes: at a
//! fixed learning rate, the bid distribution in a bin depends only on the
//! rewards accumulated on the rounds that landed in that bin, so the policy
//! just runs one small weighting instance per bin.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::auction::{bin_index, reward_raw, settle, Bid, HighestOtherBid, RoundOutcome, Value};
use crate::error::{Error, Result};
use crate::ew::{learning_rate, sample_slice, softmax};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EtaMode {
    Fixed(f64),
    /// `min(1/4, sqrt(ln|B| / t))` with `t` the bin's visit count.
    TimeVarying,
}

#[derive(Debug, Clone)]
pub struct ProductExpertState {
    bins: usize,
    actions: Vec<f64>,
    /// cum[bin - 1][action]: total reward the action would have earned on
    /// this bin's rounds.
    cum: Vec<Vec<f64>>,
    visits: Vec<u64>,
    pub eta: EtaMode,
}

impl ProductExpertState {
    pub fn new(bins: usize, eta: EtaMode) -> Result<Self> {
        if bins < 1 {
            return Err(Error::InvalidParam("need at least one bin".into()));
        }
        let actions = (1..=bins).map(|k| k as f64 / bins as f64).collect();
        Ok(ProductExpertState {
            bins,
            actions,
            cum: vec![vec![0.0; bins]; bins],
            visits: vec![0; bins],
            eta,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn visits(&self, bin: usize) -> u64 {
        self.visits[bin - 1]
    }

    pub fn cum_rewards(&self, bin: usize) -> &[f64] {
        &self.cum[bin - 1]
    }

    fn eta_for(&self, bin: usize) -> f64 {
        match self.eta {
            EtaMode::Fixed(eta) => eta,
            EtaMode::TimeVarying => {
                if self.bins == 1 {
                    0.25
                } else {
                    learning_rate(self.visits[bin - 1] + 1, 1.0, self.bins)
                        .expect("valid schedule parameters")
                }
            }
        }
    }

    /// Bid distribution the policy would play right now on a round landing
    /// in `bin`.
    pub fn bin_probabilities(&self, bin: usize) -> Vec<f64> {
        if self.bins == 1 {
            return vec![1.0];
        }
        softmax(&self.cum[bin - 1], self.eta_for(bin)).expect("finite cumulative rewards")
    }

    /// One round: sample a grid bid for the value's bin, then credit every
    /// grid action with the reward it would have earned there.
    pub fn round(
        &mut self,
        v: Value,
        m: HighestOtherBid,
        rng: &mut dyn RngCore,
    ) -> RoundOutcome {
        let bin = bin_index(v, self.bins);
        let p = self.bin_probabilities(bin);
        let action = sample_slice(&p, rng);
        let bid = Bid::new(self.actions[action]).expect("grid bids lie in (0, 1]");
        self.credit(bin, v, m);
        settle(bid, v, m)
    }

    fn credit(&mut self, bin: usize, v: Value, m: HighestOtherBid) {
        self.visits[bin - 1] += 1;
        for (slot, &b) in self.actions.iter().enumerate() {
            self.cum[bin - 1][slot] += reward_raw(b, v.get(), m.get());
        }
    }
}

/// Policy adapter splitting the round into bid and feedback halves.
#[derive(Debug, Clone)]
pub struct ProductPolicy {
    state: ProductExpertState,
    pending_bin: Option<usize>,
}

impl ProductPolicy {
    pub fn new(bins: usize, eta: EtaMode) -> Result<Self> {
        Ok(ProductPolicy {
            state: ProductExpertState::new(bins, eta)?,
            pending_bin: None,
        })
    }

    pub fn state(&self) -> &ProductExpertState {
        &self.state
    }

    pub fn bid(&mut self, v: Value, rng: &mut dyn RngCore) -> Bid {
        let bin = bin_index(v, self.state.bins);
        let p = self.state.bin_probabilities(bin);
        let action = sample_slice(&p, rng);
        self.pending_bin = Some(bin);
        Bid::new(self.state.actions[action]).expect("grid bids lie in (0, 1]")
    }

    pub fn feedback(&mut self, v: Value, m: HighestOtherBid) {
        let bin = self.pending_bin.take().expect("feedback without a bid");
        debug_assert_eq!(bin, bin_index(v, self.state.bins));
        self.state.credit(bin, v, m);
    }
}
