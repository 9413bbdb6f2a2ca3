//! Suspend a bidder mid-trace and resume it elsewhere: the checkpoint
//! carries the config, the full reward ledger, and the round index, so a
//! resumed policy continues exactly where the original left off.
//!
//! ```bash
//! cargo run --release --example checkpoint_resume
//! ```

use auctionbid::envs::{gen_iid, IidPreset};
use auctionbid::sew::{SewConfig, SewPolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let horizon = 2_000u64;
    let trace = gen_iid(horizon, &IidPreset::Discrete.spec(), 5).unwrap();
    let mut policy = SewPolicy::new(SewConfig::new(horizon)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let halfway = (horizon / 2) as usize;
    let mut bids = Vec::new();
    for &(v, m) in &trace.rounds()[..halfway] {
        bids.push(policy.round(v, m, &mut rng).unwrap().bid);
    }

    let checkpoint = policy.checkpoint().unwrap();
    let path = std::env::temp_dir().join("sew_checkpoint.json");
    std::fs::write(&path, &checkpoint).unwrap();
    println!(
        "checkpointed after {} rounds: {} bytes at {}",
        policy.rounds_played(),
        checkpoint.len(),
        path.display()
    );

    // the original keeps going...
    let rng_fork = rng.clone();
    for &(v, m) in &trace.rounds()[halfway..] {
        bids.push(policy.round(v, m, &mut rng).unwrap().bid);
    }

    // ...and the resumed copy, fed the same randomness, matches it bid for bid
    let mut resumed = SewPolicy::resume(&std::fs::read_to_string(&path).unwrap()).unwrap();
    println!("resumed at round {}", resumed.rounds_played());
    let mut rng2 = rng_fork;
    let mut divergences = 0;
    for (i, &(v, m)) in trace.rounds().iter().enumerate().skip(halfway) {
        let out = resumed.round(v, m, &mut rng2).unwrap();
        if out.bid != bids[i] {
            divergences += 1;
        }
    }
    println!(
        "replayed rounds {}..{}: {divergences} divergences from the uninterrupted run",
        halfway, horizon
    );
    assert_eq!(divergences, 0);
}
