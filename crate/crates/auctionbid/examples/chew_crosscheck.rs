//! Cross-check the production policy against the reference chained-expert
//! tree on identical traces. The tree enumerates explicit bracket functions
//! and mixes them through manager weightings — statistically equivalent, but
//! exponentially expensive, so it runs only at small scale.
//!
//! ```bash
//! cargo run --release --example chew_crosscheck
//! ```

use auctionbid::envs::{gen_iid, IidPreset};
use auctionbid::oracle::{best_lipschitz, default_grid, regret};
use auctionbid::reference::chew::ChewTree;
use auctionbid::sew::{SewConfig, SewPolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let horizon = 512u64;
    let tree = ChewTree::new(horizon, 3).unwrap();
    println!(
        "reference tree: {} levels, {} nodes, {} terminals, gaps {:?}",
        tree.levels,
        tree.nodes.len(),
        tree.leaf_count(),
        tree.gaps
    );

    let seeds = 8u64;
    let mut rows = Vec::new();
    for seed in 0..seeds {
        let trace = gen_iid(horizon, &IidPreset::Continuous.spec(), seed).unwrap();
        let lip = best_lipschitz(&trace, default_grid(horizon as usize)).unwrap();

        let mut chew = ChewTree::new(horizon, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC4E);
        let chew_rewards: Vec<f64> = trace
            .iter()
            .map(|(v, m)| chew.round(v, m, &mut rng).unwrap().payoff)
            .collect();

        let mut sew = SewPolicy::new(SewConfig::new(horizon)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5E3);
        let sew_rewards: Vec<f64> = trace
            .iter()
            .map(|(v, m)| sew.round(v, m, &mut rng).unwrap().payoff)
            .collect();

        rows.push((
            chew_rewards.iter().sum::<f64>(),
            sew_rewards.iter().sum::<f64>(),
            regret(&trace, &chew_rewards, &lip).unwrap(),
            regret(&trace, &sew_rewards, &lip).unwrap(),
        ));
    }

    println!(
        "\n{:>6} {:>12} {:>12} {:>14} {:>14}",
        "seed", "chained", "production", "chained regret", "prod. regret"
    );
    for (seed, (c, s, rc, rs)) in rows.iter().enumerate() {
        println!("{seed:>6} {c:>12.2} {s:>12.2} {rc:>14.2} {rs:>14.2}");
    }
    let mc = rows.iter().map(|r| r.0).sum::<f64>() / seeds as f64;
    let ms = rows.iter().map(|r| r.1).sum::<f64>() / seeds as f64;
    let band = 2.0 * rows.iter().map(|r| r.2.max(r.3)).fold(0.0f64, f64::max);
    println!(
        "\nmean rewards: chained {mc:.2} vs production {ms:.2}; difference {:.2} within band {band:.2}",
        (mc - ms).abs()
    );
}
