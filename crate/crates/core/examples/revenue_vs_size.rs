//! Mean edge-server revenue against model size for both mechanisms, in a
//! whitespace-separated layout any plotting tool can read.
//!
//!     cargo run --release --example revenue_vs_size -- [replications]

use gms::sim::{spearman_rho, sweep_sizes, ExperimentConfig};
use gms::Mechanism;

fn main() {
    let replications = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let cfg = ExperimentConfig { replications, ..Default::default() };
    let curve = sweep_sizes(&cfg).expect("default preset is valid");

    println!("# size  ss_revenue  ss_stderr  sp_revenue  sp_stderr  ss_welfare  sp_welfare");
    for &size in &cfg.sizes {
        let ss = curve.get(size, Mechanism::SecondScore).unwrap();
        let sp = curve.get(size, Mechanism::SecondPrice).unwrap();
        println!(
            "{size:>6}  {:>10.3}  {:>9.3}  {:>10.3}  {:>9.3}  {:>10.3}  {:>10.3}",
            ss.mean_revenue, ss.revenue_stderr, sp.mean_revenue, sp.revenue_stderr, ss.mean_welfare, sp.mean_welfare
        );
    }
    for m in Mechanism::ALL {
        let (x, y): (Vec<f64>, Vec<f64>) = curve.revenue_series(m).into_iter().map(|(s, r)| (s as f64, r)).unzip();
        println!("# {m}: spearman(size, revenue) = {:.3}", spearman_rho(&x, &y).unwrap_or(f64::NAN));
    }
}
