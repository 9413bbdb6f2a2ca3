//! Exponential weighting over a finite set of experts, tuned for the case
//! where some expert is known to be within a gap `delta` of the best one on
//! every round.
//!
//! The presence of such a "good" expert lets the learning rate shrink as
//! `min(1/4, sqrt(ln K / (t·delta)))` instead of the classical
//! `sqrt(ln K / t)`, which improves the regret from `O(sqrt(T ln K))` to
//! `O(sqrt(T·delta·ln K))` plus a polylogarithmic additive term.

use rand::Rng;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::PROB_TOL;

/// Learning-rate schedule for one weighting instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LearningRate {
    /// `min(1/4, sqrt(ln K / (t·delta)))` — the schedule backing the regret
    /// guarantee. Natural logarithm throughout.
    #[default]
    Theoretical,
    /// `5 / sqrt(t·delta)` — an aggressive uncapped variant that performs
    /// well empirically.
    Empirical5,
}

/// Time-varying learning rate at visit `t >= 1` with gap `delta > 0` over
/// `k >= 2` experts.
pub fn learning_rate(t: u64, delta: f64, k: usize) -> Result<f64> {
    learning_rate_with(LearningRate::Theoretical, t, delta, k)
}

pub fn learning_rate_with(mode: LearningRate, t: u64, delta: f64, k: usize) -> Result<f64> {
    if t < 1 {
        return Err(Error::InvalidParam("visit count must be >= 1".into()));
    }
    if delta <= 0.0 || !delta.is_finite() {
        return Err(Error::InvalidParam(format!("gap must be positive, got {delta}")));
    }
    if k < 2 {
        return Err(Error::InvalidParam(format!("need at least 2 experts, got {k}")));
    }
    let td = t as f64 * delta;
    Ok(match mode {
        LearningRate::Theoretical => 0.25f64.min(((k as f64).ln() / td).sqrt()),
        LearningRate::Empirical5 => 5.0 / td.sqrt(),
    })
}

/// Cumulative-reward vector plus the visit count and gap that drive one
/// softmax step.
#[derive(Debug, Clone, PartialEq)]
pub struct EwInput {
    /// Cumulative rewards, one entry per expert.
    pub rewards: Vec<f64>,
    /// How many rounds this instance has seen, 1-based.
    pub visits: u64,
    /// Suboptimality gap of the good expert.
    pub gap: f64,
    pub mode: LearningRate,
}

impl EwInput {
    pub fn new(rewards: Vec<f64>, visits: u64, gap: f64) -> Self {
        EwInput {
            rewards,
            visits,
            gap,
            mode: LearningRate::Theoretical,
        }
    }
}

/// A probability vector: entries nonnegative, summing to one within 1e-12.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        let sum: f64 = p.iter().sum();
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) || (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidParam(format!(
                "not a probability vector (sum {sum})"
            )));
        }
        Ok(ProbVector(p))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Softmax at rate `eta` with max-subtraction; mathematically identical to
/// `exp(eta·r_i) / sum_j exp(eta·r_j)` but immune to overflow.
pub fn softmax(rewards: &[f64], eta: f64) -> Result<Vec<f64>> {
    if rewards.is_empty() {
        return Err(Error::InvalidParam("empty reward vector".into()));
    }
    if rewards.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("reward vector".into()));
    }
    let top = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = rewards.iter().map(|r| (eta * (r - top)).exp()).collect();
    let z: f64 = p.iter().sum();
    for x in &mut p {
        *x /= z;
    }
    Ok(p)
}

/// One weighting step: each expert is chosen with probability proportional to
/// the exponentiated cumulative reward at the schedule's current rate.
pub fn ew_probabilities(input: &EwInput) -> Result<ProbVector> {
    let eta = learning_rate_with(input.mode, input.visits, input.gap, input.rewards.len())?;
    ProbVector::new(softmax(&input.rewards, eta)?)
}

/// Fixed-size variant used in the per-round hot path; same math as
/// [`ew_probabilities`] for `K = 4`.
#[inline]
pub fn ew_probabilities4(rewards: [f64; 4], visits: u64, gap: f64, mode: LearningRate) -> [f64; 4] {
    let td = visits as f64 * gap;
    let eta = match mode {
        LearningRate::Theoretical => 0.25f64.min((LN_4 / td).sqrt()),
        LearningRate::Empirical5 => 5.0 / td.sqrt(),
    };
    let top = rewards[0]
        .max(rewards[1])
        .max(rewards[2])
        .max(rewards[3]);
    let e = [
        (eta * (rewards[0] - top)).exp(),
        (eta * (rewards[1] - top)).exp(),
        (eta * (rewards[2] - top)).exp(),
        (eta * (rewards[3] - top)).exp(),
    ];
    let z = e[0] + e[1] + e[2] + e[3];
    [e[0] / z, e[1] / z, e[2] / z, e[3] / z]
}

const LN_4: f64 = 1.3862943611198906;

/// Draws an index distributed per `p` by inverting the CDF in the stated
/// order. Deterministic given the rng state.
pub fn ew_sample(p: &ProbVector, rng: &mut dyn RngCore) -> usize {
    sample_slice(p.as_slice(), rng)
}

#[inline]
pub(crate) fn sample_slice(p: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Result of a full-information run over a `T x K` reward matrix.
#[derive(Debug, Clone)]
pub struct EwRun {
    /// Realized expert choice per round, 0-based.
    pub choices: Vec<usize>,
    /// Sum of the realized per-round rewards.
    pub realized_reward: f64,
    /// Sum of the per-round expected rewards `p_t · r_t`. Exact given the
    /// matrix: the weights never depend on the sampled choices.
    pub expected_reward: f64,
    /// Best column sum minus `expected_reward`.
    pub regret: f64,
    /// Per-round instantaneous expected regret against the best column.
    pub per_round: Vec<(usize, f64)>,
}

/// Runs the weighting over all rounds of a reward matrix, revealing every
/// expert's reward after each round, and reports regret against the best
/// single expert in hindsight.
pub fn ew_run(
    matrix: &[Vec<f64>],
    gap: f64,
    mode: LearningRate,
    rng: &mut dyn RngCore,
) -> Result<EwRun> {
    if matrix.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let k = matrix[0].len();
    if k == 0 {
        return Err(Error::InvalidParam("no experts".into()));
    }
    for (t, row) in matrix.iter().enumerate() {
        if row.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                got: row.len(),
            });
        }
        if row.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::InvalidParam(format!(
                "reward outside [0,1] at round {t}"
            )));
        }
    }

    let mut cum = vec![0.0f64; k];
    let mut choices = Vec::with_capacity(matrix.len());
    let mut expected = 0.0f64;
    let mut realized = 0.0f64;
    let best_col = (0..k)
        .map(|a| matrix.iter().map(|row| row[a]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);

    let mut per_round = Vec::with_capacity(matrix.len());
    for (t, row) in matrix.iter().enumerate() {
        let p = if k == 1 {
            vec![1.0]
        } else {
            let eta = learning_rate_with(mode, (t + 1) as u64, gap, k)?;
            softmax(&cum, eta)?
        };
        let choice = sample_slice(&p, rng);
        let exp_t: f64 = p.iter().zip(row.iter()).map(|(pi, ri)| pi * ri).sum();
        let best_t = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        expected += exp_t;
        realized += row[choice];
        choices.push(choice);
        per_round.push((choice, best_t - exp_t));
        for (c, r) in cum.iter_mut().zip(row.iter()) {
            *c += r;
        }
    }

    Ok(EwRun {
        choices,
        realized_reward: realized,
        expected_reward: expected,
        regret: best_col - expected,
        per_round,
    })
}

/// Dumps a run as CSV (`t,choice,instant_regret`) for plotting.
pub fn ew_run_to_csv(run: &EwRun) -> String {
    let mut out = String::from("t,choice,instant_regret\n");
    for (t, (choice, r)) in run.per_round.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", t + 1, choice + 1, r));
    }
    out
}
