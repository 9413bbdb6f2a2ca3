//! Hindsight benchmarks on a small trace: the best Lipschitz, monotone, and
//! fixed-bid strategies computed by dynamic programming, with their witness
//! functions printed as knot lists.
//!
//! ```bash
//! cargo run --release --example hindsight_oracles
//! ```

use auctionbid::oracle::{best_fixed_bid, best_lipschitz, best_monotone};
use auctionbid::AuctionTrace;

fn main() {
    let pairs = [
        (0.50, 0.20),
        (0.60, 0.30),
        (0.52, 0.40),
        (0.90, 0.35),
        (0.30, 0.25),
        (0.75, 0.10),
        (0.52, 0.15),
    ];
    let trace = AuctionTrace::from_raw(&pairs).unwrap();
    let grid = 100;

    println!("trace ({} rounds):", trace.horizon());
    for (v, m) in trace.iter() {
        println!("  value {:.2}  highest other bid {:.2}", v.get(), m.get());
    }
    println!();

    for (label, result) in [
        ("1-Lipschitz", best_lipschitz(&trace, grid).unwrap()),
        ("monotone   ", best_monotone(&trace, grid).unwrap()),
        ("fixed bid  ", best_fixed_bid(&trace, grid).unwrap()),
    ] {
        println!(
            "best {label} strategy: reward {:.4} (grid {} , slack {:.3})",
            result.best_reward, result.grid, result.error_bound
        );
        print!("  witness:");
        for (v, b) in &result.witness {
            print!(" ({v:.2} -> {b:.2})");
        }
        println!();
        let replayed = result.replay(&trace);
        println!("  replaying the witness reproduces {replayed:.4}\n");
    }
}
