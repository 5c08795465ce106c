//! Domain types for the edge-server model market.
//!
//! A market round consists of a set of [`ModelBid`]s submitted by model
//! owners, the [`TaskRequestSet`] users demand in the current time window,
//! the capacity of the single edge server being auctioned, and the
//! auctioneer's [`ScoringSystem`]. Everything here is a plain value: the
//! scoring system evolves by producing new values, never by mutation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a model owner. Unique within one market instance.
pub type OwnerId = u32;

/// Index into the universe of downstream tasks `{0, .., U-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u32);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "task#{}", self.0)
    }
}

/// Inclusive upper bound of a model's basic value.
pub const MAX_BASIC_VALUE: f64 = 10.0;

/// Coarse latency / resource-cost class of a model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Low,
    #[default]
    Medium,
    High,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Low => "low",
            Tier::Medium => "medium",
            Tier::High => "high",
        })
    }
}

/// Memory, compute, and bandwidth in abstract units.
///
/// Used both for what a model consumes and for what an edge server offers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resources {
    pub memory_units: f64,
    pub compute_units: f64,
    pub bandwidth_units: f64,
}

/// Capacity of the edge server being auctioned.
pub type EdgeServerCapacity = Resources;

impl Resources {
    pub const fn new(memory_units: f64, compute_units: f64, bandwidth_units: f64) -> Self {
        Self { memory_units, compute_units, bandwidth_units }
    }

    /// Same amount on every dimension.
    pub const fn uniform(units: f64) -> Self {
        Self::new(units, units, units)
    }

    pub fn components(&self) -> [f64; 3] {
        [self.memory_units, self.compute_units, self.bandwidth_units]
    }

    /// True when every component is finite and non-negative.
    pub fn is_valid(&self) -> bool {
        self.components().iter().all(|c| c.is_finite() && *c >= 0.0)
    }

    /// Component-wise `self <= other`, inclusive at equality.
    pub fn fits_within(&self, other: &Resources) -> bool {
        self.components()
            .iter()
            .zip(other.components())
            .all(|(need, have)| *need <= have)
    }
}

/// Intrinsic properties of a generative model offered by one owner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub owner_id: OwnerId,
    /// Parameter count in billions.
    pub size_billions: u32,
    /// Task-independent worth, in `[0, 10]`.
    pub basic_value: f64,
    /// Execution value in `[0, 1]` for every task the model can run.
    /// Holds exactly `size_billions²` entries.
    pub capabilities: BTreeMap<TaskId, f64>,
    pub latency_tier: Tier,
    pub resource_cost: Resources,
}

impl ModelProfile {
    /// Number of tasks a model of this size can tackle.
    pub fn expected_capability_count(size_billions: u32) -> usize {
        let s = size_billions as usize;
        s * s
    }

    /// Sum of execution values over the tasks in `requests` this model covers.
    pub fn covered_execution_value(&self, requests: &TaskRequestSet) -> f64 {
        // Iterate the smaller side; both are ordered so the summation order
        // is ascending task id either way.
        if self.capabilities.len() <= requests.len() {
            self.capabilities
                .iter()
                .filter(|(task, _)| requests.contains(**task))
                .map(|(_, v)| *v)
                .sum()
        } else {
            requests
                .iter()
                .filter_map(|task| self.capabilities.get(task))
                .sum()
        }
    }

    /// Basic value plus the execution value of every capability.
    pub fn total_value(&self) -> f64 {
        self.basic_value + self.capabilities.values().sum::<f64>()
    }
}

/// Why a [`ModelProfile`] failed validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileViolation {
    #[error("size_billions must be positive")]
    ZeroSize,
    #[error("capability count mismatch: expected {expected}, found {found}")]
    CapabilityCountMismatch { expected: usize, found: usize },
    #[error("basic value {0} outside [0, 10]")]
    BasicValueOutOfRange(f64),
    #[error("execution value {value} for {task} outside [0, 1]")]
    ExecutionValueOutOfRange { task: TaskId, value: f64 },
    #[error("{task} outside task universe of size {universe_size}")]
    TaskIdOverflow { task: TaskId, universe_size: u32 },
    #[error("resource cost must be finite and non-negative")]
    InvalidResourceCost,
}

/// Check every [`ModelProfile`] invariant, reporting the first violation.
pub fn validate_profile(profile: &ModelProfile, universe_size: u32) -> Result<(), ProfileViolation> {
    if profile.size_billions == 0 {
        return Err(ProfileViolation::ZeroSize);
    }
    let expected = ModelProfile::expected_capability_count(profile.size_billions);
    if profile.capabilities.len() != expected {
        return Err(ProfileViolation::CapabilityCountMismatch {
            expected,
            found: profile.capabilities.len(),
        });
    }
    if !(0.0..=MAX_BASIC_VALUE).contains(&profile.basic_value) {
        return Err(ProfileViolation::BasicValueOutOfRange(profile.basic_value));
    }
    for (&task, &value) in &profile.capabilities {
        if !(0.0..=1.0).contains(&value) {
            return Err(ProfileViolation::ExecutionValueOutOfRange { task, value });
        }
        if task.0 >= universe_size {
            return Err(ProfileViolation::TaskIdOverflow { task, universe_size });
        }
    }
    if !profile.resource_cost.is_valid() {
        return Err(ProfileViolation::InvalidResourceCost);
    }
    Ok(())
}

/// A model owner's multidimensional bid: a price plus the model's attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBid {
    pub profile: ModelProfile,
    /// What the owner offers to pay the edge server.
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BidError {
    #[error("bid price {0} must be finite and non-negative")]
    InvalidPrice(f64),
}

impl ModelBid {
    pub fn new(profile: ModelProfile, price: f64) -> Result<Self, BidError> {
        if !price.is_finite() || price < 0.0 {
            return Err(BidError::InvalidPrice(price));
        }
        Ok(Self { profile, price })
    }

    pub fn owner_id(&self) -> OwnerId {
        self.profile.owner_id
    }
}

/// Tasks users demand in the current time window. May be empty.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskRequestSet {
    pub requested: BTreeSet<TaskId>,
}

impl TaskRequestSet {
    pub fn new(requested: impl IntoIterator<Item = TaskId>) -> Self {
        Self { requested: requested.into_iter().collect() }
    }

    pub fn len(&self) -> usize {
        self.requested.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requested.is_empty()
    }

    pub fn contains(&self, task: TaskId) -> bool {
        self.requested.contains(&task)
    }

    pub fn iter(&self) -> impl Iterator<Item = &TaskId> {
        self.requested.iter()
    }

    /// True when every requested id is below `universe_size`.
    pub fn within_universe(&self, universe_size: u32) -> bool {
        self.requested.iter().next_back().is_none_or(|t| t.0 < universe_size)
    }
}

impl FromIterator<TaskId> for TaskRequestSet {
    fn from_iter<I: IntoIterator<Item = TaskId>>(iter: I) -> Self {
        Self::new(iter)
    }
}

/// One user feedback report about the model deployed in a round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackReport {
    pub owner_id: OwnerId,
    pub round_index: u64,
    /// Subjective evaluation, in `[0, 1]`.
    pub user_acceptance: f64,
    /// Objective evaluation, in `[0, 1]`.
    pub content_quality: f64,
}

impl FeedbackReport {
    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.user_acceptance) && (0.0..=1.0).contains(&self.content_quality)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error("scoring weights must be finite and non-negative")]
    NegativeWeight,
    #[error("basic_weight + execution_weight must be positive")]
    ZeroWeights,
    #[error("feedback bounds must satisfy 0 < floor <= 1 <= ceiling (got floor {floor}, ceiling {ceiling})")]
    InvalidBounds { floor: f64, ceiling: f64 },
    #[error("ema_alpha {0} outside [0, 1]")]
    InvalidAlpha(f64),
    #[error("feedback blend weights must be non-negative and sum to 1 (got {0} and {1})")]
    InvalidBlend(f64, f64),
    #[error("multiplier {value} for owner {owner_id} outside [{floor}, {ceiling}]")]
    MultiplierOutOfBounds { owner_id: OwnerId, value: f64, floor: f64, ceiling: f64 },
}

/// Tunable parameters of a [`ScoringSystem`], without any feedback state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringParams {
    pub basic_weight: f64,
    pub execution_weight: f64,
    /// Zero reproduces the price-free score; non-zero is for sensitivity runs.
    pub price_weight: f64,
    /// Divide the covered execution value by the number of requested tasks.
    pub normalize_by_request_count: bool,
    pub feedback_floor: f64,
    pub feedback_ceiling: f64,
    pub ema_alpha: f64,
    /// Share of user acceptance in the feedback target.
    pub acceptance_blend: f64,
    /// Share of content quality in the feedback target.
    pub quality_blend: f64,
}

impl Default for ScoringParams {
    fn default() -> Self {
        Self {
            basic_weight: 1.0,
            execution_weight: 1.0,
            price_weight: 0.0,
            normalize_by_request_count: false,
            feedback_floor: 0.5,
            feedback_ceiling: 1.5,
            ema_alpha: 0.2,
            acceptance_blend: 0.5,
            quality_blend: 0.5,
        }
    }
}

impl ScoringParams {
    pub fn validate(&self) -> Result<(), ScoringError> {
        let weights = [self.basic_weight, self.execution_weight, self.price_weight];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ScoringError::NegativeWeight);
        }
        if self.basic_weight + self.execution_weight <= 0.0 {
            return Err(ScoringError::ZeroWeights);
        }
        let (floor, ceiling) = (self.feedback_floor, self.feedback_ceiling);
        if !(floor > 0.0 && floor <= 1.0 && ceiling >= 1.0 && ceiling.is_finite()) {
            return Err(ScoringError::InvalidBounds { floor, ceiling });
        }
        if !(0.0..=1.0).contains(&self.ema_alpha) {
            return Err(ScoringError::InvalidAlpha(self.ema_alpha));
        }
        let (a, q) = (self.acceptance_blend, self.quality_blend);
        if !(a >= 0.0 && q >= 0.0 && ((a + q) - 1.0).abs() < 1e-9) {
            return Err(ScoringError::InvalidBlend(a, q));
        }
        Ok(())
    }

    /// Multiply the three score weights by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        self.basic_weight *= factor;
        self.execution_weight *= factor;
        self.price_weight *= factor;
        self
    }
}

/// The auctioneer's scoring rule together with its accumulated feedback.
///
/// `feedback_multiplier` holds only owners that have received feedback;
/// everyone else scores with multiplier 1.0. `history` only ever grows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringSystem {
    pub params: ScoringParams,
    pub feedback_multiplier: BTreeMap<OwnerId, f64>,
    pub history: Vec<FeedbackReport>,
}

impl Default for ScoringSystem {
    fn default() -> Self {
        Self::new(ScoringParams::default()).expect("default scoring params are valid")
    }
}

impl ScoringSystem {
    pub fn new(params: ScoringParams) -> Result<Self, ScoringError> {
        params.validate()?;
        Ok(Self { params, feedback_multiplier: BTreeMap::new(), history: Vec::new() })
    }

    /// Weights `(basic, execution, price)` with the remaining defaults.
    pub fn with_weights(basic: f64, execution: f64, price: f64) -> Result<Self, ScoringError> {
        Self::new(ScoringParams {
            basic_weight: basic,
            execution_weight: execution,
            price_weight: price,
            ..ScoringParams::default()
        })
    }

    pub fn multiplier(&self, owner_id: OwnerId) -> f64 {
        self.feedback_multiplier.get(&owner_id).copied().unwrap_or(1.0)
    }

    /// Check params plus the multiplier bounds.
    pub fn validate(&self) -> Result<(), ScoringError> {
        self.params.validate()?;
        let (floor, ceiling) = (self.params.feedback_floor, self.params.feedback_ceiling);
        for (&owner_id, &value) in &self.feedback_multiplier {
            if !(floor..=ceiling).contains(&value) {
                return Err(ScoringError::MultiplierOutOfBounds { owner_id, value, floor, ceiling });
            }
        }
        Ok(())
    }
}

/// Which allocation-and-payment rule produced an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    SecondScore,
    SecondPrice,
}

impl Mechanism {
    pub const ALL: [Mechanism; 2] = [Mechanism::SecondScore, Mechanism::SecondPrice];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mechanism::SecondScore => "second_score",
            Mechanism::SecondPrice => "second_price",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mechanism {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "second_score" => Ok(Mechanism::SecondScore),
            "second_price" => Ok(Mechanism::SecondPrice),
            other => Err(format!("unknown mechanism `{other}` (expected second_score or second_price)")),
        }
    }
}

/// One feasible bid as ranked by a mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub owner_id: OwnerId,
    /// Score under the scoring system. Second-price ranks without a
    /// scoring system, so its entries carry `None`.
    pub score: Option<f64>,
    pub price: f64,
}

/// Result of one auction round on one edge server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    pub mechanism: Mechanism,
    pub winner: Option<OwnerId>,
    pub payment: f64,
    /// Feasible bids, best first.
    pub ranked_ledger: Vec<LedgerEntry>,
    pub feasible_count: usize,
}

impl AuctionOutcome {
    /// Revenue collected by the edge server.
    pub fn revenue(&self) -> f64 {
        self.payment
    }
}
