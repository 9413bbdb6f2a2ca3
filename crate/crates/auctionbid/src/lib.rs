//! Online bidding for repeated first-price auctions.
//!
//! The bidder sees a private value `v_t`, commits a bid `b_t`, and only then
//! learns the highest competing bid `m_t`; winning pays the bid, so the
//! round's reward is `(v_t - b_t)·1(b_t >= m_t)`. Both `v_t` and `m_t` may be
//! chosen adversarially. The library provides:
//!
//! - [`sew`]: the production policy — successive exponential weighting over a
//!   hierarchy of dyadic experts, with `O(sqrt(T))` work per round, `O(T)`
//!   memory, and regret `O(sqrt(T)·log T)` against every 1-Lipschitz bidding
//!   strategy.
//! - [`ew`]: the inner subroutine — exponential weights with a time-varying
//!   learning rate exploiting the presence of a good expert.
//! - [`mod@reference`]: small-scale scaffolding used for cross-validation —
//!   explicit Lipschitz bracket enumeration, the chained expert tree it
//!   supports, and the single-level product-expert policy.
//! - [`baselines`]: linear bid shading, log-form nonlinear shading, and the
//!   empirical distribution-learning bidder.
//! - [`envs`]: synthetic environments — iid presets, an adversary that defeats
//!   every monotone-oracle chaser, and the good-expert lower-bound reward
//!   matrices — plus trace replay from CSV.
//! - [`oracle`]: hindsight benchmarks (best Lipschitz / monotone / fixed bid)
//!   computed by dynamic programming over a bid grid, with certified error
//!   bounds and replayable witnesses.
//! - [`harness`]: deterministic experiment orchestration and report emission.
//!
//! Each major capability has a runnable example under `examples/`:
//!
//! ```bash
//! cargo run --release --example run_sew
//! cargo run --release --example good_expert_ew
//! cargo run --release --example hindsight_oracles
//! cargo run --release --example baseline_shootout
//! cargo run --release --example monotone_impossibility
//! cargo run --release --example chew_crosscheck
//! cargo run --release --example product_factorization
//! cargo run --release --example bracket_explorer
//! cargo run --release --example checkpoint_resume
//! cargo run --release --example throughput
//! ```
//!
//! A thin `auctionbid` binary exposes the same machinery as `gen`, `oracle`,
//! and `run` subcommands for scripted use.

pub mod auction;
pub mod baselines;
pub mod envs;
mod error;
pub mod ew;
pub mod harness;
pub mod oracle;
pub mod policy;
pub mod reference;
pub mod sew;

pub use auction::{
    bin_index, normalize_trace, reward, AuctionTrace, Bid, HighestOtherBid, NormalizedTrace,
    RoundOutcome, Value, PROB_TOL,
};
pub use error::{Error, Result};
