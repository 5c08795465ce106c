//! One market round, step by step: bids, scores, ranking, and settlement
//! under both mechanisms.
//!
//!     cargo run --example second_score_walkthrough -- [seed] [size]

use gms::mechanisms::{compute_score, run_second_price, run_second_score, welfare};
use gms::population::{sample_market, PopulationConfig};
use gms::{derive_stream, ScoringSystem};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let size: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);

    let cfg = PopulationConfig::default();
    let scoring = ScoringSystem::default();
    let mut stream = derive_stream(seed, size, 0, 0);
    let (bids, requests) = sample_market(&cfg, size, &mut stream).expect("valid population");

    println!("{} owners bid for one edge server; {size}B models, {} tasks requested\n", bids.len(), requests.len());
    println!("{:>5} {:>8} {:>8} {:>8}", "owner", "basic", "price", "score");
    for b in &bids {
        println!(
            "{:>5} {:>8.3} {:>8.3} {:>8.3}",
            b.owner_id(),
            b.profile.basic_value,
            b.price,
            compute_score(b, &requests, &scoring)
        );
    }

    let ss = run_second_score(&bids, &requests, &cfg.capacity, &scoring).unwrap();
    let sp = run_second_price(&bids, &cfg.capacity).unwrap();
    for out in [&ss, &sp] {
        let ranking: Vec<_> = out.ranked_ledger.iter().map(|e| e.owner_id).collect();
        println!(
            "\n{}: ranking {:?}\n  winner {:?} pays {:.3}, welfare {:.3}",
            out.mechanism,
            ranking,
            out.winner,
            out.payment,
            welfare(out, &bids, &requests, &scoring)
        );
    }
}
