//! Rounds, Monte Carlo replications, and the revenue-versus-size sweep.
//!
//! Every round draws from its own stream, derived from
//! `(master_seed, size, replication, round)`, so replications can run on any
//! number of threads and still aggregate to the same bits: per-replication
//! results are collected in index order and summed sequentially.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feedback::{self, FeedbackError};
use crate::market_model::{
    AuctionOutcome, FeedbackReport, Mechanism, ModelBid, ScoringError, ScoringParams,
    ScoringSystem, TaskRequestSet,
};
use crate::mechanisms::{self, MechanismError};
use crate::population::{self, PopulationConfig, PopulationError};

/// Pseudo-random stream used for one round. ChaCha8 seeded from a 256-bit
/// key expanded out of the round coordinates.
pub type RngStream = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the stream for one round.
///
/// The coordinates are absorbed one at a time: each is offset by a
/// position-dependent multiple of the golden gamma, mixed, and xored into a
/// running SplitMix64 state, so permuting coordinates yields a different
/// stream. Four further SplitMix64 outputs form the ChaCha key.
pub fn derive_stream(master_seed: u64, size: u32, replication: u64, round: u64) -> RngStream {
    let mut state = mix64(master_seed ^ GOLDEN_GAMMA);
    for (i, coord) in [size as u64, replication, round].into_iter().enumerate() {
        let offset = GOLDEN_GAMMA.wrapping_mul(i as u64 + 2);
        state = mix64(state ^ mix64(coord.wrapping_add(offset)));
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(GOLDEN_GAMMA);
        chunk.copy_from_slice(&mix64(state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Everything needed to run the revenue sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub population: PopulationConfig,
    pub scoring: ScoringParams,
    /// Model sizes in billions of parameters.
    pub sizes: Vec<u32>,
    pub replications: u32,
    pub rounds_per_replication: u32,
    pub mechanisms: Vec<Mechanism>,
    pub master_seed: u64,
    /// Apply second-score winner feedback between rounds of a replication.
    pub feedback_enabled: bool,
    /// Task universe size; `max(sizes)²` when unset.
    pub task_universe: Option<u32>,
    /// Catalog file to load into `population.catalog`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog_path: Option<PathBuf>,
}

pub const DEFAULT_MASTER_SEED: u64 = 20_240_601;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            population: PopulationConfig::default(),
            scoring: ScoringParams::default(),
            sizes: (1..=10).collect(),
            replications: 1000,
            rounds_per_replication: 1,
            mechanisms: Mechanism::ALL.to_vec(),
            master_seed: DEFAULT_MASTER_SEED,
            feedback_enabled: false,
            task_universe: None,
            catalog_path: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Population(#[from] PopulationError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Feedback(#[from] FeedbackError),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl ExperimentConfig {
    /// Largest configured size, or 0 when `sizes` is empty.
    pub fn max_size(&self) -> u32 {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn resolved_task_universe(&self) -> u32 {
        self.task_universe
            .unwrap_or_else(|| self.max_size().saturating_mul(self.max_size()))
    }

    /// Population settings with the task universe filled in.
    pub fn population_for_run(&self) -> PopulationConfig {
        PopulationConfig { task_universe: self.resolved_task_universe(), ..self.population.clone() }
    }

    pub fn initial_scoring(&self) -> Result<ScoringSystem, SimError> {
        Ok(ScoringSystem::new(self.scoring)?)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.sizes.is_empty() {
            return Err(SimError::Config("sizes must not be empty".into()));
        }
        if self.sizes.contains(&0) {
            return Err(SimError::Config("sizes must be positive".into()));
        }
        let mut sorted = self.sizes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.sizes.len() {
            return Err(SimError::Config("sizes must not repeat".into()));
        }
        if self.replications == 0 {
            return Err(SimError::Config("replications must be at least 1".into()));
        }
        if self.rounds_per_replication == 0 {
            return Err(SimError::Config("rounds_per_replication must be at least 1".into()));
        }
        if self.mechanisms.is_empty() {
            return Err(SimError::Config("mechanisms must not be empty".into()));
        }
        let mut mechs = self.mechanisms.clone();
        mechs.sort_unstable();
        mechs.dedup();
        if mechs.len() != self.mechanisms.len() {
            return Err(SimError::Config("mechanisms must not repeat".into()));
        }
        let max = self.max_size() as u64;
        let universe = self.resolved_task_universe();
        if max * max > universe as u64 {
            return Err(SimError::Config(format!(
                "task_universe {universe} is smaller than {max}² tasks for the largest model"
            )));
        }
        self.population_for_run().validate()?;
        self.scoring.validate()?;
        Ok(())
    }
}

/// One mechanism's result within a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismRun {
    pub outcome: AuctionOutcome,
    pub welfare: f64,
}

/// Trace of one market round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult {
    pub bids: Vec<ModelBid>,
    pub requests: TaskRequestSet,
    /// In the order of `cfg.mechanisms`.
    pub runs: Vec<MechanismRun>,
    pub feedback: Option<FeedbackReport>,
    /// Scoring system after feedback (unchanged when feedback is off).
    pub scoring: ScoringSystem,
}

impl RoundResult {
    pub fn run(&self, mechanism: Mechanism) -> Option<&MechanismRun> {
        self.runs.iter().find(|r| r.outcome.mechanism == mechanism)
    }
}

/// Sample one market and run every configured mechanism on that same bid set.
///
/// With feedback enabled, the second-score winner's report is folded into
/// the returned scoring system. Welfare is measured under the scoring
/// system in force when the round started.
pub fn run_round(
    cfg: &ExperimentConfig,
    size: u32,
    round_index: u64,
    stream: &mut RngStream,
    scoring: &ScoringSystem,
) -> Result<RoundResult, SimError> {
    let population = cfg.population_for_run();
    let (bids, requests) = population::sample_market(&population, size, stream)?;
    let capacity = &population.capacity;

    let runs = cfg
        .mechanisms
        .iter()
        .map(|&m| {
            let outcome = mechanisms::run_mechanism(m, &bids, &requests, capacity, scoring)?;
            let welfare = mechanisms::welfare(&outcome, &bids, &requests, scoring);
            Ok(MechanismRun { outcome, welfare })
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    let mut next_scoring = scoring.clone();
    let mut report = None;
    if cfg.feedback_enabled {
        let second_score = match runs.iter().find(|r| r.outcome.mechanism == Mechanism::SecondScore) {
            Some(r) => r.outcome.clone(),
            None => mechanisms::run_second_score(&bids, &requests, capacity, scoring)?,
        };
        if let Some(winner) = second_score.winner {
            let profile = &bids
                .iter()
                .find(|b| b.owner_id() == winner)
                .expect("winner is one of the bidders")
                .profile;
            let r = feedback::synthesize_feedback(&second_score, profile, &requests, round_index, stream)?;
            next_scoring = feedback::update_scoring(&next_scoring, &r)?;
            report = Some(r);
        }
    }

    Ok(RoundResult { bids, requests, runs, feedback: report, scoring: next_scoring })
}

/// Mean revenue and welfare of one replication, per mechanism in config order.
fn run_replication(
    cfg: &ExperimentConfig,
    size: u32,
    replication: u64,
    initial: &ScoringSystem,
) -> Result<Vec<(f64, f64)>, SimError> {
    let mut totals = vec![(0.0, 0.0); cfg.mechanisms.len()];
    let mut scoring = initial.clone();
    for round in 0..cfg.rounds_per_replication as u64 {
        let mut stream = derive_stream(cfg.master_seed, size, replication, round);
        let result = run_round(cfg, size, round, &mut stream, &scoring)?;
        for (total, run) in totals.iter_mut().zip(&result.runs) {
            total.0 += run.outcome.payment;
            total.1 += run.welfare;
        }
        scoring = result.scoring;
    }
    let rounds = cfg.rounds_per_replication as f64;
    Ok(totals.into_iter().map(|(rev, wel)| (rev / rounds, wel / rounds)).collect())
}

/// One point of the revenue curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub size_billions: u32,
    pub mechanism: Mechanism,
    pub mean_revenue: f64,
    /// Standard error of the mean over replications.
    pub revenue_stderr: f64,
    pub mean_welfare: f64,
    pub replications: u32,
}

/// Mean revenue and welfare per (size, mechanism), sorted by size then
/// mechanism name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RevenueCurve {
    pub records: Vec<CurveRecord>,
}

impl RevenueCurve {
    pub fn get(&self, size: u32, mechanism: Mechanism) -> Option<&CurveRecord> {
        self.records
            .iter()
            .find(|r| r.size_billions == size && r.mechanism == mechanism)
    }

    /// `(size, mean_revenue)` in ascending size for one mechanism.
    pub fn revenue_series(&self, mechanism: Mechanism) -> Vec<(u32, f64)> {
        self.records
            .iter()
            .filter(|r| r.mechanism == mechanism)
            .map(|r| (r.size_billions, r.mean_revenue))
            .collect()
    }
}

fn summarize(size: u32, mechanism: Mechanism, samples: &[(f64, f64)]) -> CurveRecord {
    let n = samples.len() as f64;
    let mean_revenue = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let mean_welfare = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let revenue_stderr = if samples.len() > 1 {
        let ss: f64 = samples.iter().map(|s| (s.0 - mean_revenue).powi(2)).sum();
        (ss / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    CurveRecord {
        size_billions: size,
        mechanism,
        mean_revenue,
        revenue_stderr,
        mean_welfare,
        replications: samples.len() as u32,
    }
}

/// Run the full sweep on rayon's global pool.
pub fn sweep_sizes(cfg: &ExperimentConfig) -> Result<RevenueCurve, SimError> {
    sweep_sizes_with_workers(cfg, None)
}

/// Run the sweep on a dedicated pool of `workers` threads (global pool when
/// `None`). The result does not depend on the worker count.
pub fn sweep_sizes_with_workers(
    cfg: &ExperimentConfig,
    workers: Option<usize>,
) -> Result<RevenueCurve, SimError> {
    cfg.validate()?;
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build()?;
            pool.install(|| sweep_inner(cfg))
        }
        None => sweep_inner(cfg),
    }
}

fn sweep_inner(cfg: &ExperimentConfig) -> Result<RevenueCurve, SimError> {
    let initial = cfg.initial_scoring()?;
    let reps = cfg.replications as u64;
    let jobs = cfg.sizes.len() as u64 * reps;

    let per_job: Vec<Vec<(f64, f64)>> = (0..jobs)
        .into_par_iter()
        .map(|job| {
            let size = cfg.sizes[(job / reps) as usize];
            run_replication(cfg, size, job % reps, &initial)
        })
        .collect::<Result<_, _>>()?;

    let mut records = Vec::with_capacity(cfg.sizes.len() * cfg.mechanisms.len());
    for (size_idx, &size) in cfg.sizes.iter().enumerate() {
        let block = &per_job[size_idx * reps as usize..(size_idx + 1) * reps as usize];
        for (mech_idx, &mechanism) in cfg.mechanisms.iter().enumerate() {
            let samples: Vec<(f64, f64)> = block.iter().map(|r| r[mech_idx]).collect();
            records.push(summarize(size, mechanism, &samples));
        }
    }
    records.sort_by(|a, b| {
        a.size_billions
            .cmp(&b.size_billions)
            .then_with(|| a.mechanism.as_str().cmp(b.mechanism.as_str()))
    });
    Ok(RevenueCurve { records })
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson on average ranks). `None` when either
/// side is constant or fewer than two points are given.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
