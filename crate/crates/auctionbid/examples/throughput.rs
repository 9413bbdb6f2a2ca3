//! Per-round cost of the production bidder across horizons: the ledger is
//! linear in the horizon, per-round work tracks the number of expert groups
//! (about 2·sqrt(T) four-way weight evaluations), and quadrupling the
//! horizon roughly doubles both.
//!
//! ```bash
//! cargo run --release --example throughput
//! ```

use auctionbid::sew::{SewConfig, SewGeometry, SewPolicy};
use auctionbid::{HighestOtherBid, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn measure(horizon: u64, rounds: usize) -> (f64, u64) {
    let rounds = rounds.min(horizon as usize);
    let mut policy = SewPolicy::new(SewConfig::new(horizon)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut trace_rng = ChaCha8Rng::seed_from_u64(4);
    let pairs: Vec<(Value, HighestOtherBid)> = (0..rounds)
        .map(|_| {
            (
                Value::new(trace_rng.gen_range(0.001..=1.0)).unwrap(),
                HighestOtherBid::new(trace_rng.gen_range(0.0..=1.0)).unwrap(),
            )
        })
        .collect();
    let before = policy.weight_evals();
    let start = Instant::now();
    for &(v, m) in &pairs {
        policy.round(v, m, &mut rng).unwrap();
    }
    let ns = start.elapsed().as_nanos() as f64 / rounds as f64;
    ((ns * 10.0).round() / 10.0, (policy.weight_evals() - before) / rounds as u64)
}

fn main() {
    println!(
        "{:>8} {:>7} {:>14} {:>12} {:>14} {:>12}",
        "horizon", "levels", "ledger cells", "cells/T", "evals/round", "ns/round"
    );
    let sample_rounds = 4096;
    let mut prev_ns: Option<f64> = None;
    for exp in [8u32, 10, 12, 14, 16, 18, 20] {
        let t = 1u64 << exp;
        let g = SewGeometry::for_horizon(t).unwrap();
        let (ns, evals) = measure(t, sample_rounds);
        let ratio = prev_ns.map_or(String::from("     -"), |p| format!("x{:.2}", ns / p));
        println!(
            "{:>8} {:>7} {:>14} {:>12.3} {:>14} {:>9.1} {ratio}",
            format!("2^{exp}"),
            g.levels,
            g.ledger_cells(),
            g.ledger_cells() as f64 / t as f64,
            evals,
            ns,
        );
        prev_ns = Some(ns);
    }
    println!("\n(timings over {sample_rounds} sampled rounds; per-round cost depends on the");
    println!("horizon only through the level count, not on the round index)");
}
