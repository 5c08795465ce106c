//! Auction-based allocation of edge-server resources to generative model
//! owners.
//!
//! Model owners bid a price together with their model's attributes. The
//! auctioneer scores each bid as a weighted sum of the model's basic value
//! and its execution value on the tasks users currently request, awards the
//! server to the highest score, and charges the price bid by the runner-up
//! in score ([`mechanisms::run_second_score`]). A plain second-price auction
//! on bid prices serves as the baseline. User feedback after each round
//! adjusts per-owner score multipliers ([`feedback`]).
//!
//! [`sim`] runs Monte Carlo markets over model sizes, where a model of `s`
//! billion parameters handles `s²` tasks, and reports mean revenue and
//! welfare per size and mechanism.

pub mod cli;
pub mod feedback;
pub mod market_model;
pub mod mechanisms;
pub mod population;
pub mod sim;

pub use market_model::{
    AuctionOutcome, EdgeServerCapacity, FeedbackReport, LedgerEntry, Mechanism, ModelBid,
    ModelProfile, OwnerId, Resources, ScoringParams, ScoringSystem, TaskId, TaskRequestSet, Tier,
};
pub use mechanisms::{compute_score, feasible, run_second_price, run_second_score, welfare};
pub use sim::{derive_stream, run_round, sweep_sizes, ExperimentConfig, RevenueCurve};
