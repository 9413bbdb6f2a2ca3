//! Enumerate the bracket families behind the reference tree: piecewise-linear
//! shaded bidding strategies on dyadic knot grids, their counts, and the
//! dummy (pointwise-maximum) construction.
//!
//! ```bash
//! cargo run --release --example bracket_explorer
//! ```

use auctionbid::reference::bracket::{build_bracket, PwLinear};

fn render(f: &PwLinear) -> String {
    f.knot_values()
        .iter()
        .map(|v| format!("{v:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() {
    println!("{:>6} {:>8} {:>10}", "eps", "members", "exp(2/eps)");
    for e in 0..=3u32 {
        let b = build_bracket(e).unwrap();
        println!(
            "{:>6} {:>8} {:>10.0}",
            b.epsilon,
            b.members.len(),
            (2.0 / b.epsilon).exp()
        );
    }

    let b = build_bracket(1).unwrap();
    println!("\nall members at eps = 1/2 (knot values at 0, 1/2, 1):");
    for m in &b.members {
        println!("  {}", render(m));
    }

    let refs: Vec<&PwLinear> = b.members.iter().collect();
    let dummy = PwLinear::pointwise_max(&refs);
    println!("\npointwise max of the family (the dummy construction):");
    println!("  {}", render(&dummy));
    println!(
        "  1-Lipschitz: {}; below identity: {}",
        dummy.is_one_lipschitz(),
        dummy.leq_identity()
    );

    println!("\nfixture dump of the eps = 1/2 family:\n{}", b.to_text());
}
