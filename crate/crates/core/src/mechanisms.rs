//! Allocation and payment rules.
//!
//! Both auctions sell a single time window on a single edge server. Bids
//! whose resource cost does not fit the server are dropped before ranking.
//! Ties on the ranking value go to the lower owner id, so every function
//! here is a pure function of its inputs. The reserve price is zero.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::market_model::{
    AuctionOutcome, EdgeServerCapacity, LedgerEntry, Mechanism, ModelBid, OwnerId, ScoringSystem,
    TaskRequestSet,
};

/// Clearing price when only one feasible bid competes.
pub const RESERVE_PRICE: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MechanismError {
    #[error("duplicate owner id {0} in bid set")]
    DuplicateOwner(OwnerId),
}

/// Sort key for ranking bids: larger `primary` first, then smaller owner id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingKey {
    pub primary: f64,
    pub tiebreak: OwnerId,
}

impl RankingKey {
    /// Ordering where the best bid compares as `Less`.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        other
            .primary
            .total_cmp(&self.primary)
            .then(self.tiebreak.cmp(&other.tiebreak))
    }
}

/// Whether the bid's model fits on the server (inclusive at equality).
pub fn feasible(bid: &ModelBid, capacity: &EdgeServerCapacity) -> bool {
    bid.profile.resource_cost.fits_within(capacity)
}

/// Score of a bid against the current requests under `scoring`.
///
/// `multiplier × (w_basic·basic + w_exec·E + w_price·price)` where `E` is the
/// summed execution value over requested tasks the model covers, optionally
/// divided by the number of requested tasks.
pub fn compute_score(bid: &ModelBid, requests: &TaskRequestSet, scoring: &ScoringSystem) -> f64 {
    let p = &scoring.params;
    let mut execution = bid.profile.covered_execution_value(requests);
    if p.normalize_by_request_count && !requests.is_empty() {
        execution /= requests.len() as f64;
    }
    let raw = p.basic_weight * bid.profile.basic_value
        + p.execution_weight * execution
        + p.price_weight * bid.price;
    scoring.multiplier(bid.owner_id()) * raw
}

fn check_unique(bids: &[ModelBid]) -> Result<(), MechanismError> {
    let mut seen = BTreeSet::new();
    for bid in bids {
        if !seen.insert(bid.owner_id()) {
            return Err(MechanismError::DuplicateOwner(bid.owner_id()));
        }
    }
    Ok(())
}

/// Rank feasible entries by `key` and settle: rank 1 wins, paying the price
/// of the rank-2 bid, or the reserve when it stands alone.
fn settle(
    mechanism: Mechanism,
    mut ranked: Vec<(RankingKey, LedgerEntry)>,
) -> AuctionOutcome {
    ranked.sort_by(|a, b| a.0.rank_cmp(&b.0));
    let ranked_ledger: Vec<LedgerEntry> = ranked.into_iter().map(|(_, e)| e).collect();
    let winner = ranked_ledger.first().map(|e| e.owner_id);
    let payment = match ranked_ledger.get(1) {
        Some(runner_up) => runner_up.price,
        None => RESERVE_PRICE,
    };
    AuctionOutcome {
        mechanism,
        winner,
        payment,
        feasible_count: ranked_ledger.len(),
        ranked_ledger,
    }
}

/// Second-score auction.
///
/// The highest-scoring feasible bid wins and pays the price submitted by
/// the second-highest-scoring bid. The winner's own price does not enter
/// the payment.
pub fn run_second_score(
    bids: &[ModelBid],
    requests: &TaskRequestSet,
    capacity: &EdgeServerCapacity,
    scoring: &ScoringSystem,
) -> Result<AuctionOutcome, MechanismError> {
    check_unique(bids)?;
    let ranked = bids
        .iter()
        .filter(|bid| feasible(bid, capacity))
        .map(|bid| {
            let score = compute_score(bid, requests, scoring);
            (
                RankingKey { primary: score, tiebreak: bid.owner_id() },
                LedgerEntry { owner_id: bid.owner_id(), score: Some(score), price: bid.price },
            )
        })
        .collect();
    Ok(settle(Mechanism::SecondScore, ranked))
}

/// Sealed-bid second-price (Vickrey) auction on the bid price alone.
pub fn run_second_price(
    bids: &[ModelBid],
    capacity: &EdgeServerCapacity,
) -> Result<AuctionOutcome, MechanismError> {
    check_unique(bids)?;
    let ranked = bids
        .iter()
        .filter(|bid| feasible(bid, capacity))
        .map(|bid| {
            (
                RankingKey { primary: bid.price, tiebreak: bid.owner_id() },
                LedgerEntry { owner_id: bid.owner_id(), score: None, price: bid.price },
            )
        })
        .collect();
    Ok(settle(Mechanism::SecondPrice, ranked))
}

/// Dispatch to the named mechanism.
pub fn run_mechanism(
    mechanism: Mechanism,
    bids: &[ModelBid],
    requests: &TaskRequestSet,
    capacity: &EdgeServerCapacity,
    scoring: &ScoringSystem,
) -> Result<AuctionOutcome, MechanismError> {
    match mechanism {
        Mechanism::SecondScore => run_second_score(bids, requests, capacity, scoring),
        Mechanism::SecondPrice => run_second_price(bids, capacity),
    }
}

/// Realized allocative score: the winner's score under `scoring`, 0 without a winner.
pub fn welfare(
    outcome: &AuctionOutcome,
    bids: &[ModelBid],
    requests: &TaskRequestSet,
    scoring: &ScoringSystem,
) -> f64 {
    outcome
        .winner
        .and_then(|w| bids.iter().find(|b| b.owner_id() == w))
        .map_or(0.0, |bid| compute_score(bid, requests, scoring))
}
