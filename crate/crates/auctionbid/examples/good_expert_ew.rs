//! Exponential weights in the presence of a good expert: run the weighting
//! on the adversarial reward matrices that force the sqrt(T·gap·ln K) rate,
//! and compare the measured regret to the closed-form upper bound.
//!
//! ```bash
//! cargo run --release --example good_expert_ew
//! ```

use auctionbid::envs::{gen_goodexpert_lb, goodexpert_delta};
use auctionbid::ew::{ew_run, ew_run_to_csv, LearningRate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let (t, k) = (10_000u64, 8usize);
    let seeds = 50u64;
    println!("horizon {t}, {k} experts, {seeds} seeds per gap\n");
    println!("{:>6} {:>10} {:>12} {:>12} {:>8}", "gap", "tilt", "mean regret", "bound", "ratio");
    for gap in [0.05, 0.1, 0.2] {
        let mut total = 0.0;
        for seed in 0..seeds {
            let scenario = (seed as usize % k) + 1;
            let matrix = gen_goodexpert_lb(t, k, gap, scenario, seed).expect("valid parameters");
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xE0);
            let run = ew_run(&matrix.rows, gap, LearningRate::Theoretical, &mut rng).unwrap();
            total += run.regret;
        }
        let mean = total / seeds as f64;
        let bound = 4.0 * (t as f64 * gap * (k as f64).ln()).sqrt()
            + 32.0 * (4.0 + (t as f64).ln()) * (k as f64).ln();
        println!(
            "{gap:>6} {:>10.5} {mean:>12.2} {bound:>12.2} {:>8.3}",
            goodexpert_delta(t, k, gap),
            mean / bound
        );
    }

    // dump one short run for plotting
    let matrix = gen_goodexpert_lb(200, 4, 0.2, 2, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let run = ew_run(&matrix.rows, 0.2, LearningRate::Theoretical, &mut rng).unwrap();
    let path = std::env::temp_dir().join("good_expert_ew_run.csv");
    std::fs::write(&path, ew_run_to_csv(&run)).unwrap();
    println!("\nper-round choices of a short run written to {}", path.display());
}
