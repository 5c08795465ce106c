//! Test-only reference implementations and market generators.
//!
//! The oracles below recompute scores from raw bid fields and pick the
//! winner and runner-up by pairwise dominance counts instead of sorting, so
//! they share no code path with the library's ranking.

#![allow(dead_code)]

use gms::{ModelBid, ModelProfile, OwnerId, Resources, ScoringSystem, TaskId, TaskRequestSet, Tier};
use rand::Rng;

/// Winner and payment as the oracle sees them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOutcome {
    pub winner: Option<OwnerId>,
    pub payment: f64,
}

pub fn oracle_fits(bid: &ModelBid, cap: &Resources) -> bool {
    let c = &bid.profile.resource_cost;
    c.memory_units <= cap.memory_units
        && c.compute_units <= cap.compute_units
        && c.bandwidth_units <= cap.bandwidth_units
}

/// Score recomputed from raw fields, walking the request set in ascending order.
pub fn oracle_score(bid: &ModelBid, requests: &TaskRequestSet, scoring: &ScoringSystem) -> f64 {
    let p = &scoring.params;
    let mut covered = 0.0;
    for task in &requests.requested {
        if let Some(v) = bid.profile.capabilities.get(task) {
            covered += *v;
        }
    }
    if p.normalize_by_request_count && !requests.requested.is_empty() {
        covered /= requests.requested.len() as f64;
    }
    let multiplier = scoring.feedback_multiplier.get(&bid.profile.owner_id).copied().unwrap_or(1.0);
    multiplier * (p.basic_weight * bid.profile.basic_value + p.execution_weight * covered + p.price_weight * bid.price)
}

/// Rank position by counting how many candidates beat each one. `beats(a, b)`
/// must be a strict total order.
fn settle_by_dominance(candidates: &[(OwnerId, f64, f64)]) -> OracleOutcome {
    // candidates: (owner, key, price); higher key wins, lower owner breaks ties
    let beats = |a: &(OwnerId, f64, f64), b: &(OwnerId, f64, f64)| a.1 > b.1 || (a.1 == b.1 && a.0 < b.0);
    let mut winner = None;
    let mut runner_up_price = None;
    for c in candidates {
        let beaten_by = candidates.iter().filter(|o| beats(o, c)).count();
        match beaten_by {
            0 => winner = Some(c.0),
            1 => runner_up_price = Some(c.2),
            _ => {}
        }
    }
    OracleOutcome { winner, payment: runner_up_price.unwrap_or(0.0) }
}

pub fn oracle_second_score(
    bids: &[ModelBid],
    requests: &TaskRequestSet,
    cap: &Resources,
    scoring: &ScoringSystem,
) -> OracleOutcome {
    let candidates: Vec<_> = bids
        .iter()
        .filter(|b| oracle_fits(b, cap))
        .map(|b| (b.profile.owner_id, oracle_score(b, requests, scoring), b.price))
        .collect();
    settle_by_dominance(&candidates)
}

pub fn oracle_second_price(bids: &[ModelBid], cap: &Resources) -> OracleOutcome {
    let candidates: Vec<_> = bids
        .iter()
        .filter(|b| oracle_fits(b, cap))
        .map(|b| (b.profile.owner_id, b.price, b.price))
        .collect();
    settle_by_dominance(&candidates)
}

/// Highest oracle score among feasible bids, 0 when none fit.
pub fn oracle_max_score(bids: &[ModelBid], requests: &TaskRequestSet, cap: &Resources, scoring: &ScoringSystem) -> f64 {
    bids.iter()
        .filter(|b| oracle_fits(b, cap))
        .map(|b| oracle_score(b, requests, scoring))
        .fold(0.0, f64::max)
}

/// A small adversarial market: 2–6 bidders, shuffled owner ids, mixed sizes,
/// some infeasible bids, random feedback multipliers, and (with `ties`)
/// coarse values that make equal scores and prices common.
pub struct RandomMarket {
    pub bids: Vec<ModelBid>,
    pub requests: TaskRequestSet,
    pub capacity: Resources,
    pub scoring: ScoringSystem,
}

const UNIVERSE: u32 = 16;

fn coarse<R: Rng>(rng: &mut R, ties: bool, hi: f64, steps: u32) -> f64 {
    if ties {
        hi * rng.random_range(0..=steps) as f64 / steps as f64
    } else {
        rng.random_range(0.0..=hi)
    }
}

pub fn random_market<R: Rng>(rng: &mut R, ties: bool) -> RandomMarket {
    let n = rng.random_range(2..=6usize);
    let mut owners: Vec<OwnerId> = (0..20).collect();
    for i in 0..n {
        let j = rng.random_range(i..owners.len());
        owners.swap(i, j);
    }

    let bids = owners[..n]
        .iter()
        .map(|&owner_id| {
            let size = rng.random_range(1..=3u32);
            let mut tasks: Vec<u32> = (0..UNIVERSE).collect();
            for i in 0..(size * size) as usize {
                let j = rng.random_range(i..tasks.len());
                tasks.swap(i, j);
            }
            let capabilities = tasks[..(size * size) as usize]
                .iter()
                .map(|&t| (TaskId(t), coarse(rng, ties, 1.0, 2)))
                .collect();
            let cost = Resources::new(
                rng.random_range(0.0..2.0),
                rng.random_range(0.0..2.0),
                rng.random_range(0.0..2.0),
            );
            ModelBid {
                profile: ModelProfile {
                    owner_id,
                    size_billions: size,
                    basic_value: coarse(rng, ties, 10.0, 5),
                    capabilities,
                    latency_tier: Tier::Medium,
                    resource_cost: cost,
                },
                price: coarse(rng, ties, 20.0, 4),
            }
        })
        .collect();

    let requests = (0..UNIVERSE).filter(|_| rng.random_bool(0.5)).map(TaskId).collect();
    let capacity = Resources::uniform(if rng.random_bool(0.7) { 2.0 } else { 1.2 });

    let mut scoring = ScoringSystem::with_weights(
        rng.random_range(0.1..2.0),
        rng.random_range(0.1..2.0),
        if rng.random_bool(0.3) { rng.random_range(0.0..0.5) } else { 0.0 },
    )
    .unwrap();
    if ties {
        scoring.params.basic_weight = 1.0;
        scoring.params.execution_weight = 1.0;
        scoring.params.price_weight = 0.0;
    } else {
        scoring.params.normalize_by_request_count = rng.random_bool(0.3);
        for owner in &owners[..n] {
            if rng.random_bool(0.5) {
                scoring.feedback_multiplier.insert(*owner, rng.random_range(0.5..=1.5));
            }
        }
    }
    RandomMarket { bids, requests, capacity, scoring }
}
