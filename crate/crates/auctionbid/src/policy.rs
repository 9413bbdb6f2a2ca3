//! The interface every bidding policy exposes to the round loop: commit a
//! bid knowing only the current value, then observe the revealed competing
//! bid. The loop structure is what enforces the feedback discipline — no
//! policy sees `m_t` before its bid is committed.

use rand::RngCore;

use crate::auction::{Bid, HighestOtherBid, Value};
use crate::baselines::{
    default_theta2_grid, dist_learning_bid_sorted, linear_fit, nonlinear_bid, nonlinear_fit,
    WindowBuffer,
};
use crate::error::Result;
use crate::ew::LearningRate;
use crate::reference::chew::ChewPolicy;
use crate::reference::product::{EtaMode, ProductPolicy};
use crate::sew::{SewConfig, SewPolicy};

pub trait BiddingPolicy: Send {
    fn name(&self) -> &str;
    fn next_bid(&mut self, v: Value, rng: &mut dyn RngCore) -> Bid;
    fn observe(&mut self, v: Value, m: HighestOtherBid);
}

impl BiddingPolicy for SewPolicy {
    fn name(&self) -> &str {
        "sew"
    }

    fn next_bid(&mut self, v: Value, rng: &mut dyn RngCore) -> Bid {
        self.compute_weights(v);
        let scratch = self.current_scratch().expect("weights just computed");
        self.select_bid(scratch, rng)
    }

    fn observe(&mut self, v: Value, m: HighestOtherBid) {
        self.apply_update(v, m)
            .expect("observe follows next_bid with the same value");
    }
}

impl BiddingPolicy for ChewPolicy {
    fn name(&self) -> &str {
        "chew"
    }

    fn next_bid(&mut self, v: Value, rng: &mut dyn RngCore) -> Bid {
        self.bid(v, rng)
    }

    fn observe(&mut self, v: Value, m: HighestOtherBid) {
        self.feedback(v, m)
            .expect("observe follows next_bid with the same value");
    }
}

impl BiddingPolicy for ProductPolicy {
    fn name(&self) -> &str {
        "product"
    }

    fn next_bid(&mut self, v: Value, rng: &mut dyn RngCore) -> Bid {
        self.bid(v, rng)
    }

    fn observe(&mut self, v: Value, m: HighestOtherBid) {
        self.feedback(v, m);
    }
}

/// Linear shading: bid `theta·v`, refitting `theta` by grid search over the
/// previous window once per window.
pub struct LinearShadingPolicy {
    theta: f64,
    grid_step: f64,
    window: WindowBuffer,
    seen: u64,
}

impl LinearShadingPolicy {
    pub fn new(window_len: usize, grid_step: f64) -> Self {
        LinearShadingPolicy {
            theta: 0.0,
            grid_step,
            window: WindowBuffer::new(window_len),
            seen: 0,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

impl BiddingPolicy for LinearShadingPolicy {
    fn name(&self) -> &str {
        "linear_shading"
    }

    fn next_bid(&mut self, v: Value, _rng: &mut dyn RngCore) -> Bid {
        Bid::new((self.theta * v.get()).clamp(0.0, 1.0)).expect("shaded bid in range")
    }

    fn observe(&mut self, v: Value, m: HighestOtherBid) {
        self.window.push(v.get(), m.get());
        self.seen += 1;
        if self.seen.is_multiple_of(self.window.capacity() as u64) {
            self.theta = linear_fit(&self.window.as_pairs(), self.grid_step);
        }
    }
}

/// Log-form shading: bid `ln(1 + t1·t2·v)/t2`, refitting both parameters by
/// grid search over the previous window once per window.
pub struct NonlinearShadingPolicy {
    theta: (f64, f64),
    theta1_grid: Vec<f64>,
    theta2_grid: Vec<f64>,
    window: WindowBuffer,
    seen: u64,
}

impl NonlinearShadingPolicy {
    pub fn new(window_len: usize, theta1_step: f64) -> Self {
        let n = (1.0 / theta1_step).round().max(1.0) as usize;
        NonlinearShadingPolicy {
            theta: (0.0, 0.0),
            theta1_grid: (0..=n).map(|k| k as f64 / n as f64).collect(),
            theta2_grid: default_theta2_grid(),
            window: WindowBuffer::new(window_len),
            seen: 0,
        }
    }

    pub fn theta(&self) -> (f64, f64) {
        self.theta
    }
}

impl BiddingPolicy for NonlinearShadingPolicy {
    fn name(&self) -> &str {
        "nonlinear_shading"
    }

    fn next_bid(&mut self, v: Value, _rng: &mut dyn RngCore) -> Bid {
        let b = nonlinear_bid(self.theta.0, self.theta.1, v.get());
        Bid::new(b.clamp(0.0, 1.0)).expect("shaded bid in range")
    }

    fn observe(&mut self, v: Value, m: HighestOtherBid) {
        self.window.push(v.get(), m.get());
        self.seen += 1;
        if self.seen.is_multiple_of(self.window.capacity() as u64) {
            self.theta = nonlinear_fit(
                &self.window.as_pairs(),
                &self.theta1_grid,
                &self.theta2_grid,
            );
        }
    }
}

/// Distribution learning: treat the previous window's competing bids as the
/// truth and bid the payoff-maximizing support point for each value.
pub struct DistLearningPolicy {
    snapshot: Vec<f64>, // sorted competing bids from the previous window
    window: WindowBuffer,
    seen: u64,
}

impl DistLearningPolicy {
    pub fn new(window_len: usize) -> Self {
        DistLearningPolicy {
            snapshot: Vec::new(),
            window: WindowBuffer::new(window_len),
            seen: 0,
        }
    }
}

impl BiddingPolicy for DistLearningPolicy {
    fn name(&self) -> &str {
        "dist_learning"
    }

    fn next_bid(&mut self, v: Value, _rng: &mut dyn RngCore) -> Bid {
        Bid::new(dist_learning_bid_sorted(&self.snapshot, v.get())).expect("support bid in range")
    }

    fn observe(&mut self, v: Value, m: HighestOtherBid) {
        self.window.push(v.get(), m.get());
        self.seen += 1;
        if self.seen.is_multiple_of(self.window.capacity() as u64) {
            let mut ms: Vec<f64> = self.window.as_pairs().iter().map(|&(_, m)| m).collect();
            ms.sort_by(|a, b| a.partial_cmp(b).unwrap());
            self.snapshot = ms;
        }
    }
}

/// The policies the harness knows how to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Sew,
    Chew,
    Product,
    LinearShading,
    NonlinearShading,
    DistLearning,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::Sew,
        PolicyKind::Chew,
        PolicyKind::Product,
        PolicyKind::LinearShading,
        PolicyKind::NonlinearShading,
        PolicyKind::DistLearning,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Sew => "sew",
            PolicyKind::Chew => "chew",
            PolicyKind::Product => "product",
            PolicyKind::LinearShading => "linear_shading",
            PolicyKind::NonlinearShading => "nonlinear_shading",
            PolicyKind::DistLearning => "dist_learning",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "sew" => PolicyKind::Sew,
            "chew" => PolicyKind::Chew,
            "product" => PolicyKind::Product,
            "linear_shading" => PolicyKind::LinearShading,
            "nonlinear_shading" => PolicyKind::NonlinearShading,
            "dist_learning" => PolicyKind::DistLearning,
            other => {
                return Err(crate::Error::InvalidParam(format!(
                    "unknown policy '{other}'"
                )))
            }
        })
    }
}

/// Build knobs shared by the harness and the examples.
#[derive(Debug, Clone)]
pub struct PolicyParams {
    pub horizon: u64,
    pub window: usize,
    pub lr_mode: LearningRate,
    pub clip_bids: bool,
    pub chew_levels: usize,
    pub product_bins: usize,
    pub linear_grid_step: f64,
    pub theta1_grid_step: f64,
}

impl PolicyParams {
    pub fn new(horizon: u64) -> Self {
        PolicyParams {
            horizon,
            window: ((horizon as f64) / 30.0).ceil().max(1.0) as usize,
            lr_mode: LearningRate::Theoretical,
            clip_bids: false,
            chew_levels: 2,
            product_bins: (horizon as f64).cbrt().ceil().max(1.0) as usize,
            linear_grid_step: 0.01,
            theta1_grid_step: 0.01,
        }
    }
}

pub fn build_policy(kind: PolicyKind, params: &PolicyParams) -> Result<Box<dyn BiddingPolicy>> {
    Ok(match kind {
        PolicyKind::Sew => Box::new(SewPolicy::new(
            SewConfig::new(params.horizon)
                .with_learning_rate(params.lr_mode)
                .with_clipping(params.clip_bids),
        )?),
        PolicyKind::Chew => Box::new(ChewPolicy::new(params.horizon, params.chew_levels)?),
        PolicyKind::Product => Box::new(ProductPolicy::new(
            params.product_bins,
            EtaMode::TimeVarying,
        )?),
        PolicyKind::LinearShading => Box::new(LinearShadingPolicy::new(
            params.window,
            params.linear_grid_step,
        )),
        PolicyKind::NonlinearShading => Box::new(NonlinearShadingPolicy::new(
            params.window,
            params.theta1_grid_step,
        )),
        PolicyKind::DistLearning => Box::new(DistLearningPolicy::new(params.window)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64) -> Value {
        Value::new(x).unwrap()
    }
    fn hm(x: f64) -> HighestOtherBid {
        HighestOtherBid::new(x).unwrap()
    }

    #[test]
    fn baselines_bid_zero_until_first_refit() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut lin = LinearShadingPolicy::new(3, 0.1);
        let mut dist = DistLearningPolicy::new(3);
        for _ in 0..3 {
            assert_eq!(lin.next_bid(v(0.8), &mut rng).get(), 0.0);
            assert_eq!(dist.next_bid(v(0.8), &mut rng).get(), 0.0);
            lin.observe(v(0.8), hm(0.2));
            dist.observe(v(0.8), hm(0.2));
        }
        // window boundary crossed: both now exploit the data
        assert!(lin.next_bid(v(0.8), &mut rng).get() > 0.0);
        assert_eq!(dist.next_bid(v(0.8), &mut rng).get(), 0.2);
    }

    #[test]
    fn refits_happen_once_per_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut lin = LinearShadingPolicy::new(4, 0.05);
        for i in 0..8 {
            lin.next_bid(v(0.5), &mut rng);
            lin.observe(v(0.5), hm(0.25));
            let theta = lin.theta();
            if i < 3 {
                assert_eq!(theta, 0.0);
            } else {
                assert!(theta > 0.0);
            }
        }
    }

    #[test]
    fn all_policy_kinds_build_and_run() {
        let params = PolicyParams::new(64);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in PolicyKind::ALL {
            let mut p = build_policy(kind, &params).unwrap();
            assert_eq!(p.name(), kind.name());
            for _ in 0..8 {
                let b = p.next_bid(v(0.6), &mut rng);
                assert!((0.0..=1.0).contains(&b.get()));
                p.observe(v(0.6), hm(0.3));
            }
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(PolicyKind::parse("sew").unwrap(), PolicyKind::Sew);
        assert_eq!(
            PolicyKind::parse(" dist_learning ").unwrap(),
            PolicyKind::DistLearning
        );
        assert!(PolicyKind::parse("nope").is_err());
    }
}
