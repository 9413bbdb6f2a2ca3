//! Quickstart: run the successive-exponential-weighting bidder on a smooth
//! synthetic market and benchmark it against the hindsight oracles.
//!
//! ```bash
//! cargo run --release --example run_sew
//! ```

use auctionbid::envs::{gen_iid, IidPreset};
use auctionbid::oracle::{best_fixed_bid, best_lipschitz, best_monotone, default_grid, regret};
use auctionbid::sew::{SewConfig, SewPolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let horizon = 1u64 << 14;
    let trace = gen_iid(horizon, &IidPreset::Continuous.spec(), 42).expect("valid preset");

    let mut policy = SewPolicy::new(SewConfig::new(horizon)).expect("horizon >= 4");
    let geometry = policy.geometry();
    println!(
        "horizon {horizon}: {} levels, {} ledger cells, {} weight evaluations per round",
        geometry.levels,
        geometry.ledger_cells(),
        geometry.weight_evals_per_round()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut rewards = Vec::with_capacity(trace.horizon());
    let mut wins = 0u64;
    for (v, m) in trace.iter() {
        let outcome = policy.round(v, m, &mut rng).expect("within horizon");
        rewards.push(outcome.payoff);
        wins += u64::from(outcome.won);
    }
    let total: f64 = rewards.iter().sum();
    println!("total reward {total:.2} over {horizon} rounds ({wins} wins)");

    let grid = default_grid(trace.horizon());
    for (name, oracle) in [
        ("lipschitz", best_lipschitz(&trace, grid).unwrap()),
        ("monotone", best_monotone(&trace, grid).unwrap()),
        ("fixed-bid", best_fixed_bid(&trace, grid).unwrap()),
    ] {
        let r = regret(&trace, &rewards, &oracle).unwrap();
        println!(
            "vs best {name:<9} oracle: hindsight reward {:.2}, regret {r:.2} (±{:.1} grid slack)",
            oracle.best_reward, oracle.error_bound
        );
    }
    let c = rewards.len() as f64;
    let rate = (regret(&trace, &rewards, &best_lipschitz(&trace, grid).unwrap()).unwrap())
        / (c.sqrt() * c.log2());
    println!("regret / (sqrt(T)·log2 T) = {rate:.3}");
}
