//! Acceptance suite. Runs every exit criterion, prints one PASS/FAIL line
//! each, and exits non-zero if any criterion fails.

mod support;

use std::time::{Duration, Instant};

use gms::cli::{self, CommonArgs, SweepArgs};
use gms::feedback::{feedback_target, update_scoring};
use gms::mechanisms::{run_second_price, run_second_score, welfare};
use gms::population::{generate_profile, sample_market, PopulationConfig};
use gms::sim::{derive_stream, spearman_rho, sweep_sizes, ExperimentConfig};
use gms::{market_model::validate_profile, FeedbackReport, Mechanism, ScoringParams, ScoringSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{oracle_second_price, oracle_second_score, random_market};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn within(limit: Duration, elapsed: Duration) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("took {:.2}s, limit {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()))
    }
}

/// 1. Every generated profile has exactly size² capabilities.
fn scaling_law() -> Outcome {
    let start = Instant::now();
    let cfg = PopulationConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut violations = 0;
    let mut checked = 0;
    for size in 1..=10u32 {
        for owner in 0..1000 {
            let p = generate_profile(owner, size, &cfg, &mut rng).map_err(|e| e.to_string())?;
            let distinct: std::collections::BTreeSet<_> = p.capabilities.keys().collect();
            if p.capabilities.len() != (size * size) as usize
                || distinct.len() != p.capabilities.len()
                || validate_profile(&p, cfg.task_universe).is_err()
            {
                violations += 1;
            }
            checked += 1;
        }
    }
    within(Duration::from_secs(5), start.elapsed())?;
    if violations > 0 {
        return Err(format!("{violations} of {checked} profiles violate the square law"));
    }
    Ok(format!("{checked} profiles, 0 violations"))
}

/// 2. Both mechanisms agree with the dominance-count oracle.
fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    let markets = 10_000;
    for i in 0..markets {
        let m = random_market(&mut rng, i % 3 == 0);
        let ss = run_second_score(&m.bids, &m.requests, &m.capacity, &m.scoring).map_err(|e| e.to_string())?;
        let sp = run_second_price(&m.bids, &m.capacity).map_err(|e| e.to_string())?;
        let oss = oracle_second_score(&m.bids, &m.requests, &m.capacity, &m.scoring);
        let osp = oracle_second_price(&m.bids, &m.capacity);
        if (ss.winner, ss.payment) != (oss.winner, oss.payment) {
            mismatches += 1;
        }
        if (sp.winner, sp.payment) != (osp.winner, osp.payment) {
            mismatches += 1;
        }
    }
    within(Duration::from_secs(30), start.elapsed())?;
    if mismatches > 0 {
        return Err(format!("{mismatches} mismatches over {markets} markets"));
    }
    Ok(format!("{markets} markets x 2 mechanisms, 0 mismatches"))
}

/// 3. Second-score welfare never falls below second-price welfare.
fn welfare_dominance() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    let mut strict = 0;
    let markets = 10_000;
    for i in 0..markets {
        let (bids, requests, capacity, scoring) = if i % 2 == 0 {
            let m = random_market(&mut rng, i % 4 == 0);
            (m.bids, m.requests, m.capacity, m.scoring)
        } else {
            let size = rng.random_range(1..=10);
            let cfg = PopulationConfig {
                n_owners: rng.random_range(1..=10),
                ..PopulationConfig::constrained(if rng.random_bool(0.5) { 10.0 } else { 1.0 })
            };
            let (bids, requests) = sample_market(&cfg, size, &mut rng).map_err(|e| e.to_string())?;
            (bids, requests, cfg.capacity, ScoringSystem::default())
        };
        let ss = run_second_score(&bids, &requests, &capacity, &scoring).map_err(|e| e.to_string())?;
        let sp = run_second_price(&bids, &capacity).map_err(|e| e.to_string())?;
        let (ws, wp) = (welfare(&ss, &bids, &requests, &scoring), welfare(&sp, &bids, &requests, &scoring));
        if ws < wp {
            violations += 1;
        } else if ws > wp {
            strict += 1;
        }
    }
    within(Duration::from_secs(30), start.elapsed())?;
    if violations > 0 {
        return Err(format!("{violations} of {markets} markets lost welfare"));
    }
    Ok(format!("{markets} paired markets, 0 violations, strictly higher in {strict}"))
}

fn strictly_increasing(series: &[(u32, f64)]) -> bool {
    series.windows(2).all(|w| w[1].1 > w[0].1)
}

/// 4. Revenue grows with model size in the default preset.
fn revenue_trend() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::default();
    let curve = sweep_sizes(&cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    within(Duration::from_secs(60), elapsed)?;

    let ss = curve.revenue_series(Mechanism::SecondScore);
    let sp = curve.revenue_series(Mechanism::SecondPrice);
    if ss.len() != 10 {
        return Err(format!("expected 10 sizes, got {}", ss.len()));
    }
    let sizes: Vec<f64> = ss.iter().map(|p| p.0 as f64).collect();
    let revenue: Vec<f64> = ss.iter().map(|p| p.1).collect();
    let rho = spearman_rho(&sizes, &revenue).ok_or("constant revenue series")?;
    if !strictly_increasing(&ss) {
        return Err(format!("second-score revenue not strictly increasing: {revenue:?}"));
    }
    if rho < 0.95 {
        return Err(format!("spearman rho {rho} < 0.95"));
    }
    Ok(format!(
        "second-score revenue {:.2} -> {:.2}, rho {rho:.3}; second-price {:.2} -> {:.2} (increasing: {})",
        revenue[0],
        revenue[9],
        sp[0].1,
        sp[9].1,
        strictly_increasing(&sp)
    ))
}

/// 5. Scaling every weight by c keeps winner and payment.
fn argmax_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let markets = 10_000;
    let mut violations = 0;
    for _ in 0..markets {
        let m = random_market(&mut rng, false);
        let base = run_second_score(&m.bids, &m.requests, &m.capacity, &m.scoring).map_err(|e| e.to_string())?;
        for c in [0.01, 1.0, 100.0] {
            let mut scaled = m.scoring.clone();
            scaled.params = scaled.params.scaled(c);
            let out = run_second_score(&m.bids, &m.requests, &m.capacity, &scaled).map_err(|e| e.to_string())?;
            let order = |o: &gms::AuctionOutcome| o.ranked_ledger.iter().map(|e| e.owner_id).collect::<Vec<_>>();
            if out.winner != base.winner || out.payment != base.payment || order(&out) != order(&base) {
                violations += 1;
            }
        }
    }
    if violations > 0 {
        return Err(format!("{violations} violations"));
    }
    Ok(format!("{markets} markets x c in {{0.01, 1, 100}}, 0 violations"))
}

/// 6. Identical config and seed give byte-identical CSVs at any worker count.
fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    let workers = [1usize, 8];
    let mut bytes = Vec::new();
    for (dir, w) in dirs.iter().zip(workers) {
        let args = SweepArgs {
            common: CommonArgs { output: Some(dir.path().to_path_buf()), seed: Some(77), ..Default::default() },
            workers: Some(w),
            ..Default::default()
        };
        cli::cmd_sweep(&args).map_err(|e| e.to_string())?;
        bytes.push(std::fs::read(dir.path().join(cli::CURVE_FILE)).map_err(|e| e.to_string())?);
    }
    if bytes[0] != bytes[1] {
        return Err("CSV differs between 1 and 8 workers".into());
    }
    let rows = bytes[0].iter().filter(|b| **b == b'\n').count() - 1;
    Ok(format!("{} bytes, {rows} rows identical across 1 and 8 workers", bytes[0].len()))
}

/// 7. EMA contraction toward a constant target at alpha 0.2.
fn feedback_contraction() -> Outcome {
    let params = ScoringParams { ema_alpha: 0.2, ..ScoringParams::default() };
    let mut worst: f64 = 0.0;
    // (acceptance, quality, starting multiplier)
    let cases = [(0.8, 0.8, 1.0), (0.1, 0.1, 1.0), (1.0, 1.0, 0.5), (0.0, 0.0, 1.5), (0.3, 0.7, 0.9)];
    for (acceptance, quality, m0) in cases {
        let owner = 4;
        let mut scoring = ScoringSystem::new(params).map_err(|e| e.to_string())?;
        scoring.feedback_multiplier.insert(owner, m0);
        let report = FeedbackReport { owner_id: owner, round_index: 0, user_acceptance: acceptance, content_quality: quality };
        let target = feedback_target(&params, &report);
        for k in 1..=50i32 {
            scoring = update_scoring(&scoring, &FeedbackReport { round_index: k as u64, ..report })
                .map_err(|e| e.to_string())?;
            let m = scoring.multiplier(owner);
            if !(0.5..=1.5).contains(&m) {
                return Err(format!("multiplier {m} left [0.5, 1.5]"));
            }
            let err = ((m - target).abs() - 0.8f64.powi(k) * (m0 - target).abs()).abs();
            worst = worst.max(err);
            if err > 1e-12 {
                return Err(format!("step {k}: deviation {err:e} from geometric contraction"));
            }
        }
        if scoring.history.len() != 50 {
            return Err("history did not grow by one per report".into());
        }
    }

    // arbitrary report streams stay inside the bounds
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut scoring = ScoringSystem::new(params).map_err(|e| e.to_string())?;
    for i in 0..5000u64 {
        let r = FeedbackReport {
            owner_id: rng.random_range(0..5),
            round_index: i,
            user_acceptance: rng.random(),
            content_quality: rng.random(),
        };
        scoring = update_scoring(&scoring, &r).map_err(|e| e.to_string())?;
    }
    if scoring.feedback_multiplier.values().any(|m| !(0.5..=1.5).contains(m)) {
        return Err("random stream pushed a multiplier out of bounds".into());
    }
    Ok(format!("{} targets x 50 steps, max deviation {worst:.1e}", cases.len()))
}

/// 8. Sampled value means match the uniform laws.
fn statistical_sanity() -> Outcome {
    let cfg = PopulationConfig::default();
    let mut basic = 0.0;
    let mut exec = 0.0;
    let n = 100_000;
    for i in 0..n {
        let mut stream = derive_stream(8, 1, i as u64, 0);
        let p = generate_profile(0, 1, &cfg, &mut stream).map_err(|e| e.to_string())?;
        basic += p.basic_value;
        exec += p.capabilities.values().next().copied().unwrap_or(f64::NAN);
    }
    let (mb, me) = (basic / n as f64, exec / n as f64);
    if (mb - 5.0).abs() > 0.05 {
        return Err(format!("mean basic value {mb}"));
    }
    if (me - 0.5).abs() > 0.01 {
        return Err(format!("mean execution value {me}"));
    }
    Ok(format!("{n} draws: mean basic {mb:.4}, mean execution {me:.4}"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("AC1 scaling-law exactness", scaling_law),
        ("AC2 mechanism oracle equivalence", oracle_equivalence),
        ("AC3 welfare dominance", welfare_dominance),
        ("AC4 revenue-vs-size trend", revenue_trend),
        ("AC5 argmax invariance", argmax_invariance),
        ("AC6 determinism across workers", determinism),
        ("AC7 feedback contraction", feedback_contraction),
        ("AC8 statistical sanity", statistical_sanity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("[PASS] {name}: {detail} ({secs:.2}s)"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name}: {why} ({secs:.2}s)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
