//! Paired comparison of allocative welfare: both mechanisms clear the same
//! sampled markets, and we count how often scoring the model attributes
//! picks a better model than price alone.
//!
//!     cargo run --release --example welfare_comparison -- [markets]

use gms::mechanisms::{run_second_price, run_second_score, welfare};
use gms::population::{sample_market, PopulationConfig};
use gms::{derive_stream, ScoringSystem};

fn main() {
    let markets: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let cfg = PopulationConfig::default();
    let scoring = ScoringSystem::default();

    println!("{:>5} {:>9} {:>9} {:>9} {:>8}", "size", "ss_welf", "sp_welf", "gain", "better%");
    for size in 1..=10 {
        let (mut ws, mut wp, mut better) = (0.0, 0.0, 0u64);
        for i in 0..markets {
            let mut stream = derive_stream(99, size, i, 0);
            let (bids, requests) = sample_market(&cfg, size, &mut stream).unwrap();
            let ss = run_second_score(&bids, &requests, &cfg.capacity, &scoring).unwrap();
            let sp = run_second_price(&bids, &cfg.capacity).unwrap();
            let (a, b) = (welfare(&ss, &bids, &requests, &scoring), welfare(&sp, &bids, &requests, &scoring));
            assert!(a >= b);
            ws += a;
            wp += b;
            better += u64::from(a > b);
        }
        let n = markets as f64;
        println!(
            "{size:>5} {:>9.3} {:>9.3} {:>9.3} {:>7.1}%",
            ws / n,
            wp / n,
            (ws - wp) / n,
            100.0 * better as f64 / n
        );
    }
}
