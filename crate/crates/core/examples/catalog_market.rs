//! A market seeded from the sample model catalog on a small edge server:
//! costly models no longer fit, and only feasible bids are ranked.
//!
//!     cargo run --example catalog_market -- [capacity]

use gms::mechanisms::{feasible, run_second_score};
use gms::population::{load_catalog, sample_market, PopulationConfig};
use gms::{derive_stream, ScoringSystem};

fn main() {
    let capacity: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.5);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/model_catalog.json");
    let catalog = load_catalog(path).expect("sample catalog");
    let cfg = PopulationConfig { catalog: Some(catalog.clone()), ..PopulationConfig::constrained(capacity) };

    let size = 6;
    let mut stream = derive_stream(1, size, 0, 0);
    let (bids, requests) = sample_market(&cfg, size, &mut stream).unwrap();
    println!("edge server capacity {capacity} per resource, {size}B models\n");
    for b in &bids {
        let entry = &catalog[b.owner_id() as usize % catalog.len()];
        println!(
            "owner {} {:<30} cost {:.2} latency {:<6} {}",
            b.owner_id(),
            entry.name,
            b.profile.resource_cost.memory_units,
            b.profile.latency_tier,
            if feasible(b, &cfg.capacity) { "fits" } else { "does not fit" }
        );
    }

    let out = run_second_score(&bids, &requests, &cfg.capacity, &ScoringSystem::default()).unwrap();
    println!(
        "\n{} of {} bids feasible; winner {:?} pays {:.3}",
        out.feasible_count,
        bids.len(),
        out.winner,
        out.payment
    );
}
