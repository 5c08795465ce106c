//! Repeated rounds where users rate the winning model and the auctioneer
//! folds each report into per-owner score multipliers. The resulting
//! history is saved and reloaded.
//!
//!     cargo run --example feedback_dynamics -- [rounds]

use gms::feedback::{load_history, persist_history};
use gms::sim::{derive_stream, run_round, ExperimentConfig};

fn main() {
    let rounds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    let cfg = ExperimentConfig { feedback_enabled: true, sizes: vec![4], ..Default::default() };
    let mut scoring = cfg.initial_scoring().unwrap();

    // same owners every round; only the draws change
    for round in 0..rounds {
        let mut stream = derive_stream(cfg.master_seed, 4, 0, round);
        let result = run_round(&cfg, 4, round, &mut stream, &scoring).unwrap();
        if let Some(r) = result.feedback {
            println!(
                "round {round:>3}: owner {} served, acceptance {:.3}, quality {:.3} -> multiplier {:.4}",
                r.owner_id,
                r.user_acceptance,
                r.content_quality,
                result.scoring.multiplier(r.owner_id)
            );
        }
        scoring = result.scoring;
    }

    println!("\nfinal multipliers:");
    for (owner, m) in &scoring.feedback_multiplier {
        println!("  owner {owner}: {m:.4}");
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scoring_history.ndjson");
    persist_history(&scoring, &path).unwrap();
    let restored = load_history(&path).unwrap();
    assert_eq!(restored, scoring);
    println!("\nsaved and reloaded {} reports from {}", restored.history.len(), path.display());
}
