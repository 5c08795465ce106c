//! How the scoring rule shapes second-score revenue: the default price-free
//! score, per-request normalization, and a small price weight.
//!
//!     cargo run --release --example scoring_sensitivity

use gms::sim::{sweep_sizes, ExperimentConfig};
use gms::{Mechanism, ScoringParams};

fn main() {
    let variants = [
        ("default", ScoringParams::default()),
        ("normalized", ScoringParams { normalize_by_request_count: true, ..Default::default() }),
        ("price_weight_0.2", ScoringParams { price_weight: 0.2, ..Default::default() }),
        ("basic_only", ScoringParams { execution_weight: 0.0, ..Default::default() }),
    ];
    let sizes = vec![1, 4, 7, 10];
    print!("{:<18}", "variant");
    for s in &sizes {
        print!(" {:>9}", format!("{s}B"));
    }
    println!();
    for (name, scoring) in variants {
        let cfg = ExperimentConfig {
            scoring,
            sizes: sizes.clone(),
            replications: 500,
            mechanisms: vec![Mechanism::SecondScore],
            ..Default::default()
        };
        let curve = sweep_sizes(&cfg).unwrap();
        print!("{name:<18}");
        for r in &curve.records {
            print!(" {:>9.3}", r.mean_revenue);
        }
        println!();
    }
}
