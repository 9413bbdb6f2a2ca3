//! The product structure that makes large expert classes tractable: joint
//! exponential weighting over all M^M piecewise-constant bidding functions
//! collapses into M independent per-bin weightings. This example runs both
//! routes side by side and prints the largest deviation.
//!
//! ```bash
//! cargo run --release --example product_factorization
//! ```

use auctionbid::auction::{bin_index, reward_raw, Value};
use auctionbid::reference::product::{EtaMode, ProductExpertState};
use auctionbid::HighestOtherBid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn joint_distribution(bins: usize, history: &[(f64, f64)], eta: f64, v: f64) -> Vec<f64> {
    let actions: Vec<f64> = (1..=bins).map(|k| k as f64 / bins as f64).collect();
    let count = bins.pow(bins as u32);
    let assignment = |mut idx: usize| -> Vec<usize> {
        (0..bins)
            .map(|_| {
                let a = idx % bins;
                idx /= bins;
                a
            })
            .collect()
    };
    let weights: Vec<f64> = (0..count)
        .map(|e| {
            let a = assignment(e);
            let total: f64 = history
                .iter()
                .map(|&(hv, hm)| {
                    let bin = bin_index(Value::new(hv).unwrap(), bins);
                    reward_raw(actions[a[bin - 1]], hv, hm)
                })
                .sum();
            (eta * total).exp()
        })
        .collect();
    let z: f64 = weights.iter().sum();
    let cur = bin_index(Value::new(v).unwrap(), bins);
    let mut p = vec![0.0; bins];
    for (e, w) in weights.iter().enumerate() {
        p[assignment(e)[cur - 1]] += w / z;
    }
    p
}

fn main() {
    let (bins, eta, horizon) = (3usize, 0.4, 50usize);
    println!(
        "{bins} bins x {bins} grid bids: {} product experts, factored into {bins} weightings\n",
        bins.pow(bins as u32)
    );

    let mut state = ProductExpertState::new(bins, EtaMode::Fixed(eta)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut history = Vec::new();
    let mut max_dev = 0.0f64;
    for t in 1..=horizon {
        let v = rng.gen_range(0.01..=1.0);
        let m = rng.gen_range(0.0..=1.0);
        let joint = joint_distribution(bins, &history, eta, v);
        let bin = bin_index(Value::new(v).unwrap(), bins);
        let factored = state.bin_probabilities(bin);
        let dev = joint
            .iter()
            .zip(factored.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        max_dev = max_dev.max(dev);
        if t <= 5 || t == horizon {
            println!(
                "round {t:>2} bin {bin}: joint {joint:.6?} vs factored {factored:.6?}"
            );
        }
        state.round(
            Value::new(v).unwrap(),
            HighestOtherBid::new(m).unwrap(),
            &mut rng,
        );
        history.push((v, m));
    }
    println!("\nlargest deviation over {horizon} rounds: {max_dev:.2e}");
}
