//! Compare the production bidder against the three baseline policies across
//! the three synthetic market presets, through the experiment harness.
//!
//! ```bash
//! cargo run --release --example baseline_shootout          # T = 20000
//! cargo run --release --example baseline_shootout 100000   # paper-scale
//! ```

use auctionbid::envs::IidPreset;
use auctionbid::ew::LearningRate;
use auctionbid::harness::{run_experiment, EnvKind, ExperimentConfig};
use auctionbid::policy::PolicyKind;

fn main() {
    let horizon: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_000);
    let seeds: Vec<u64> = (1..=5).collect();
    let policies = [
        PolicyKind::Sew,
        PolicyKind::LinearShading,
        PolicyKind::NonlinearShading,
        PolicyKind::DistLearning,
    ];

    println!("horizon {horizon}, {} seeds, aggressive learning rate\n", seeds.len());
    println!(
        "{:>12} {:>12} {:>16} {:>18} {:>14}",
        "preset", "sew", "linear_shading", "nonlinear_shading", "dist_learning"
    );
    for preset in [IidPreset::Discrete, IidPreset::Continuous, IidPreset::Correlated] {
        let mut cfg = ExperimentConfig::new(EnvKind::Iid(preset), horizon);
        cfg.policies = policies.to_vec();
        cfg.seeds = seeds.clone();
        cfg.lr_mode = LearningRate::Empirical5;
        cfg.compute_oracles = false;
        let (report, timing) = run_experiment(&cfg).expect("valid config");
        let mean = |name: &str| -> f64 {
            report
                .cells
                .iter()
                .filter(|c| c.policy == name)
                .map(|c| c.final_reward)
                .sum::<f64>()
                / seeds.len() as f64
        };
        println!(
            "{:>12} {:>12.1} {:>16.1} {:>18.1} {:>14.1}",
            preset.name(),
            mean("sew"),
            mean("linear_shading"),
            mean("nonlinear_shading"),
            mean("dist_learning"),
        );
        let slowest = timing
            .cells
            .iter()
            .map(|c| c.ns_per_round)
            .fold(0.0f64, f64::max);
        println!("{:>12}   (slowest cell: {slowest:.0} ns/round)", "");
    }
}
