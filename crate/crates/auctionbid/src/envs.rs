//! Synthetic environments and trace replay.
//!
//! Three iid presets mimic the qualitative regimes seen in production
//! first-price data: competing bids concentrated on a few price points,
//! smooth competing-bid distributions, and competing bids strongly coupled to
//! the private value. Beyond those, [`gen_monotone_killer`] builds the
//! adversarial sequence on which every bidding policy loses linearly to the
//! best monotone hindsight function, and [`gen_goodexpert_lb`] builds the
//! reward matrices that force the good-expert regret rate for experts
//! problems.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use crate::auction::{normalize_trace, parse_trace_csv, AuctionTrace, HighestOtherBid, Value};
use crate::error::{Error, Result};

/// Marginal distribution of private values for iid generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ValueDist {
    /// Uniform on `[lo, hi]`, `0 < lo <= hi <= 1`.
    Uniform { lo: f64, hi: f64 },
    /// Mean of two uniforms on `[lo, hi]` — a smooth triangular bump.
    Triangular { lo: f64, hi: f64 },
}

impl ValueDist {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = match *self {
            ValueDist::Uniform { lo, hi } | ValueDist::Triangular { lo, hi } => (lo, hi),
        };
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "value distribution support ({lo}, {hi}) outside (0, 1]"
            )));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            ValueDist::Uniform { lo, hi } => rng.gen_range(lo..=hi),
            ValueDist::Triangular { lo, hi } => {
                let a: f64 = rng.gen_range(lo..=hi);
                let b: f64 = rng.gen_range(lo..=hi);
                0.5 * (a + b)
            }
        }
    }
}

/// Conditional distribution of the highest competing bid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BidDist {
    /// Independent discrete bids: at most a handful of price points.
    Atoms { atoms: Vec<(f64, f64)> },
    /// Independent smooth bids: mean of two uniforms on `[lo, hi]`.
    Triangular { lo: f64, hi: f64 },
    /// Coupled to the value: `clamp(slope·v + intercept + noise, 0, 1)` with
    /// symmetric triangular noise of the given half-width.
    LinearInValue {
        slope: f64,
        intercept: f64,
        noise_halfwidth: f64,
    },
}

impl BidDist {
    fn validate(&self) -> Result<()> {
        match self {
            BidDist::Atoms { atoms } => {
                if atoms.is_empty() || atoms.len() > 5 {
                    return Err(Error::InvalidParam(
                        "atom preset requires 1..=5 price points".into(),
                    ));
                }
                let total: f64 = atoms.iter().map(|&(_, w)| w).sum();
                if atoms
                    .iter()
                    .any(|&(p, w)| !(0.0..=1.0).contains(&p) || w <= 0.0)
                    || (total - 1.0).abs() > 1e-9
                {
                    return Err(Error::InvalidParam("invalid atom table".into()));
                }
                Ok(())
            }
            BidDist::Triangular { lo, hi } => {
                if !(*lo >= 0.0 && lo <= hi && *hi <= 1.0) {
                    return Err(Error::InvalidParam("bid support outside [0, 1]".into()));
                }
                Ok(())
            }
            BidDist::LinearInValue {
                slope,
                intercept,
                noise_halfwidth,
            } => {
                if !slope.is_finite() || !intercept.is_finite() || *noise_halfwidth < 0.0 {
                    return Err(Error::InvalidParam("invalid linear bid model".into()));
                }
                Ok(())
            }
        }
    }

    fn sample(&self, v: f64, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            BidDist::Atoms { atoms } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for &(p, w) in atoms {
                    acc += w;
                    if u < acc {
                        return p;
                    }
                }
                atoms.last().unwrap().0
            }
            BidDist::Triangular { lo, hi } => {
                let a: f64 = rng.gen_range(*lo..=*hi);
                let b: f64 = rng.gen_range(*lo..=*hi);
                0.5 * (a + b)
            }
            BidDist::LinearInValue {
                slope,
                intercept,
                noise_halfwidth,
            } => {
                let noise = noise_halfwidth * (rng.gen::<f64>() - rng.gen::<f64>());
                (slope * v + intercept + noise).clamp(0.0, 1.0)
            }
        }
    }
}

/// Full specification of an iid round distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IidSpec {
    pub value: ValueDist,
    pub bid: BidDist,
}

impl IidSpec {
    /// Competing bids on five round price points, weakly coupled to value;
    /// values smooth.
    pub fn discrete() -> Self {
        IidSpec {
            value: ValueDist::Uniform { lo: 0.08, hi: 1.0 },
            bid: BidDist::Atoms {
                atoms: vec![
                    (0.125, 0.30),
                    (0.25, 0.25),
                    (0.375, 0.20),
                    (0.5, 0.15),
                    (0.75, 0.10),
                ],
            },
        }
    }

    /// Smooth value and competing-bid densities with mild coupling.
    pub fn continuous() -> Self {
        IidSpec {
            value: ValueDist::Triangular { lo: 0.05, hi: 1.0 },
            bid: BidDist::LinearInValue {
                slope: 0.35,
                intercept: 0.1,
                noise_halfwidth: 0.45,
            },
        }
    }

    /// Competing bids strongly coupled to the value (target sample
    /// correlation about 0.66).
    pub fn correlated() -> Self {
        IidSpec {
            value: ValueDist::Uniform { lo: 0.02, hi: 1.0 },
            bid: BidDist::LinearInValue {
                slope: 0.55,
                intercept: 0.18,
                noise_halfwidth: 0.44,
            },
        }
    }
}

/// Named iid presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IidPreset {
    Discrete,
    Continuous,
    Correlated,
}

impl IidPreset {
    pub fn spec(&self) -> IidSpec {
        match self {
            IidPreset::Discrete => IidSpec::discrete(),
            IidPreset::Continuous => IidSpec::continuous(),
            IidPreset::Correlated => IidSpec::correlated(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            IidPreset::Discrete => "discrete",
            IidPreset::Continuous => "continuous",
            IidPreset::Correlated => "correlated",
        }
    }
}

/// Draws `t` iid rounds from the spec. Pure function of `(spec, seed)`.
pub fn gen_iid(t: u64, spec: &IidSpec, seed: u64) -> Result<AuctionTrace> {
    spec.value.validate()?;
    spec.bid.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rounds = Vec::with_capacity(t as usize);
    for _ in 0..t {
        let v = spec.value.sample(&mut rng);
        let m = spec.bid.sample(v, &mut rng);
        rounds.push((Value::new(v)?, HighestOtherBid::new(m)?));
    }
    Ok(AuctionTrace::new(rounds))
}

/// The adversary that defeats monotone-oracle chasing: competing bids flip a
/// fair coin between `0` and `1/8`, and the next private value moves by
/// `±2^-(t+1)` so that the realized `(value -> competing bid)` map stays
/// monotone while no online policy can predict the coin.
///
/// A competing bid of exactly `0` is kept literally; under the ties-win rule
/// any bid wins such a round, which matches the hindsight accounting where
/// the oracle bids exactly `m_t`.
pub fn gen_monotone_killer(t: u64, seed: u64) -> AuctionTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rounds = Vec::with_capacity(t as usize);
    let mut v = 0.5f64;
    let mut step = 0.125f64; // 2^-(t+1) at t = 2
    for i in 0..t {
        let m = if rng.gen::<bool>() { 0.125 } else { 0.0 };
        rounds.push((
            Value::new(v).expect("values stay within [1/4, 3/4]"),
            HighestOtherBid::new(m).unwrap(),
        ));
        if i + 1 < t {
            v = if m == 0.0 { v + step } else { v - step };
            step *= 0.5;
        }
    }
    AuctionTrace::new(rounds)
}

/// A reward matrix for prediction with expert advice in which expert 1 is
/// `gap`-good on every round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertRewardMatrix {
    /// `rows[t][a]` is expert `a`'s reward at round `t`; all in `[0, 1]`.
    pub rows: Vec<Vec<f64>>,
    /// Index of the designated good expert (always 0 here).
    pub good_expert: usize,
    pub gap: f64,
    /// Which expert the Bernoulli tilt favours, 1-based.
    pub scenario: usize,
}

/// Builds the three-branch adversarial mixture: with probability 1/2 the
/// reward vector is `(1-gap, 1, ..., 1)`; with probability
/// `(1-4·gap)/(2(1-2·gap))` it is all zeros; otherwise it is
/// `(1-gap, Bern(p_2), ..., Bern(p_K))` with
/// `p_i = 1/2 - delta + 2·delta·1(i = scenario)` and
/// `delta = (1/16)·sqrt(ln K / (T·gap))`.
pub fn gen_goodexpert_lb(
    t: u64,
    k: usize,
    gap: f64,
    scenario: usize,
    seed: u64,
) -> Result<ExpertRewardMatrix> {
    if k < 2 {
        return Err(Error::InvalidParam("need at least 2 experts".into()));
    }
    if !(gap > 0.0 && gap <= 0.25) {
        return Err(Error::InvalidParam(format!(
            "gap must lie in (0, 1/4], got {gap}"
        )));
    }
    if scenario < 1 || scenario > k {
        return Err(Error::InvalidParam(format!(
            "scenario {scenario} outside 1..={k}"
        )));
    }
    let delta = goodexpert_delta(t, k, gap);
    if delta > 0.25 {
        return Err(Error::InvalidParam(format!(
            "Bernoulli tilt {delta} exceeds 1/4; increase T or the gap"
        )));
    }
    let p_all_one = 0.5;
    let p_zero = (1.0 - 4.0 * gap) / (2.0 * (1.0 - 2.0 * gap));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(t as usize);
    for _ in 0..t {
        let u: f64 = rng.gen();
        let row = if u < p_all_one {
            let mut row = vec![1.0; k];
            row[0] = 1.0 - gap;
            row
        } else if u < p_all_one + p_zero {
            vec![0.0; k]
        } else {
            let mut row = vec![0.0; k];
            row[0] = 1.0 - gap;
            for (i, slot) in row.iter_mut().enumerate().skip(1) {
                let p = if i + 1 == scenario {
                    0.5 + delta
                } else {
                    0.5 - delta
                };
                *slot = f64::from(rng.gen::<f64>() < p);
            }
            row
        };
        rows.push(row);
    }
    Ok(ExpertRewardMatrix {
        rows,
        good_expert: 0,
        gap,
        scenario,
    })
}

/// The Bernoulli tilt used by [`gen_goodexpert_lb`].
pub fn goodexpert_delta(t: u64, k: usize, gap: f64) -> f64 {
    ((k as f64).ln() / (t as f64 * gap)).sqrt() / 16.0
}

/// Branch probabilities `(all-one, zero, Bernoulli)` of the mixture.
pub fn goodexpert_branch_probs(gap: f64) -> (f64, f64, f64) {
    let zero = (1.0 - 4.0 * gap) / (2.0 * (1.0 - 2.0 * gap));
    (0.5, zero, gap / (1.0 - 2.0 * gap))
}

/// Closed-form expected reward of each expert under scenario `j`.
pub fn goodexpert_mean_reward(k: usize, gap: f64, delta: f64, scenario: usize, expert: usize) -> f64 {
    let base = (1.0 - gap) / (2.0 * (1.0 - 2.0 * gap));
    if expert == 0 {
        base
    } else {
        let p = if expert + 1 == scenario { 0.5 + delta } else { 0.5 - delta };
        let _ = k;
        base + gap / (1.0 - 2.0 * gap) * (p - 0.5)
    }
}

/// Reward-matrix CSV: header `t,r1,...,rK`, one row per round.
pub fn matrix_to_csv(matrix: &ExpertRewardMatrix) -> String {
    let k = matrix.rows.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for a in 1..=k {
        let _ = write!(out, ",r{a}");
    }
    out.push('\n');
    for (t, row) in matrix.rows.iter().enumerate() {
        let _ = write!(out, "{}", t + 1);
        for r in row {
            let _ = write!(out, ",{r}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::EmptyTrace)?;
    if !header.trim_start().starts_with("t,r1") {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header 't,r1,...', got '{header}'"),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        fields.next(); // round index
        let mut row = Vec::new();
        for f in fields {
            row.push(f.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: i + 1,
                msg: format!("'{f}': {e}"),
            })?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(rows)
}

/// A replayed trace plus ingestion bookkeeping.
#[derive(Debug, Clone)]
pub struct Replay {
    pub trace: AuctionTrace,
    /// Original units per normalized unit (1 when input was already in range).
    pub scale: f64,
    /// Rounds dropped because the value was zero or negative.
    pub dropped_nonpositive_value: usize,
    /// Rounds dropped by the optional `v > m` pruning filter.
    pub dropped_unwinnable: usize,
}

/// Reads a trace CSV, normalizing raw units when needed. Rounds with
/// non-positive values are always dropped (bidding zero would be trivially
/// optimal there); when `prune_unwinnable` is set, rounds with `v <= m` are
/// dropped as well. Both counts are reported.
pub fn replay_csv(path: &Path, prune_unwinnable: bool) -> Result<Replay> {
    let text = std::fs::read_to_string(path)?;
    replay_csv_text(&text, prune_unwinnable)
}

pub fn replay_csv_text(text: &str, prune_unwinnable: bool) -> Result<Replay> {
    let pairs = parse_trace_csv(text)?;
    for (i, &(v, m)) in pairs.iter().enumerate() {
        if !v.is_finite() || !m.is_finite() {
            return Err(Error::NonFinite(format!("line {}: ({v}, {m})", i + 2)));
        }
    }
    let mut dropped_nonpositive = 0usize;
    let kept: Vec<(f64, f64)> = pairs
        .iter()
        .copied()
        .filter(|&(v, _)| {
            if v <= 0.0 {
                dropped_nonpositive += 1;
                false
            } else {
                true
            }
        })
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let in_range = kept
        .iter()
        .all(|&(v, m)| v <= 1.0 && (0.0..=1.0).contains(&m));
    let (mut trace, scale) = if in_range {
        (AuctionTrace::from_raw(&kept)?, 1.0)
    } else {
        let n = normalize_trace(&kept)?;
        (n.trace, n.scale)
    };
    let mut dropped_unwinnable = 0usize;
    if prune_unwinnable {
        let filtered: Vec<_> = trace
            .rounds()
            .iter()
            .copied()
            .filter(|&(v, m)| {
                if v.get() > m.get() {
                    true
                } else {
                    dropped_unwinnable += 1;
                    false
                }
            })
            .collect();
        if filtered.is_empty() {
            return Err(Error::EmptyTrace);
        }
        trace = AuctionTrace::new(filtered);
    }
    Ok(Replay {
        trace,
        scale,
        dropped_nonpositive_value: dropped_nonpositive,
        dropped_unwinnable,
    })
}
