//! User feedback and the scoring-system update it drives.
//!
//! After a round, users rate the deployed model on acceptance (subjective)
//! and content quality (objective). Each report nudges that owner's score
//! multiplier toward a target derived from the two ratings with a bounded
//! exponential moving average, and is appended to the history ledger.
//!
//! History files are newline-delimited JSON: one header line with the
//! scoring parameters and multipliers, then one line per report.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_model::{
    AuctionOutcome, FeedbackReport, ModelProfile, OwnerId, ScoringError, ScoringParams,
    ScoringSystem, TaskRequestSet,
};

/// Half-width of the uniform noise separating acceptance from quality.
pub const ACCEPTANCE_NOISE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeedbackError {
    #[error("outcome has no winner; no feedback to report")]
    NoWinner,
    #[error("profile belongs to owner {profile}, but owner {winner} won")]
    WrongProfile { winner: OwnerId, profile: OwnerId },
    #[error("feedback scores must lie in [0, 1] (acceptance {acceptance}, quality {quality})")]
    OutOfRange { acceptance: f64, quality: f64 },
}

/// Simulate what users report about the winner's service this round.
///
/// Content quality is the winner's execution value averaged over every
/// requested task, counting uncovered tasks as zero. User acceptance is that
/// quality plus uniform noise on `[-0.1, 0.1]`, clamped to `[0, 1]`.
pub fn synthesize_feedback<R: Rng + ?Sized>(
    outcome: &AuctionOutcome,
    winner_profile: &ModelProfile,
    requests: &TaskRequestSet,
    round_index: u64,
    rng: &mut R,
) -> Result<FeedbackReport, FeedbackError> {
    let winner = outcome.winner.ok_or(FeedbackError::NoWinner)?;
    if winner != winner_profile.owner_id {
        return Err(FeedbackError::WrongProfile { winner, profile: winner_profile.owner_id });
    }
    let noise = rng.random_range(-ACCEPTANCE_NOISE..=ACCEPTANCE_NOISE);
    Ok(report_with_noise(winner_profile, requests, round_index, noise))
}

/// Deterministic core of [`synthesize_feedback`] for a given noise draw.
pub fn report_with_noise(
    profile: &ModelProfile,
    requests: &TaskRequestSet,
    round_index: u64,
    noise: f64,
) -> FeedbackReport {
    let content_quality = if requests.is_empty() {
        0.0
    } else {
        (profile.covered_execution_value(requests) / requests.len() as f64).clamp(0.0, 1.0)
    };
    FeedbackReport {
        owner_id: profile.owner_id,
        round_index,
        user_acceptance: (content_quality + noise).clamp(0.0, 1.0),
        content_quality,
    }
}

/// Multiplier a report pulls its owner toward.
pub fn feedback_target(params: &ScoringParams, report: &FeedbackReport) -> f64 {
    let blended =
        params.acceptance_blend * report.user_acceptance + params.quality_blend * report.content_quality;
    params.feedback_floor + (params.feedback_ceiling - params.feedback_floor) * blended
}

/// One EMA step from `old` toward `target`, clamped to the feedback bounds.
pub fn ema_step(params: &ScoringParams, old: f64, target: f64) -> f64 {
    let alpha = params.ema_alpha;
    ((1.0 - alpha) * old + alpha * target).clamp(params.feedback_floor, params.feedback_ceiling)
}

/// Fold one report into the scoring system, returning the new system.
///
/// Only the reporting owner's multiplier moves; the report is appended to
/// the history.
pub fn update_scoring(
    scoring: &ScoringSystem,
    report: &FeedbackReport,
) -> Result<ScoringSystem, FeedbackError> {
    if !report.is_valid() {
        return Err(FeedbackError::OutOfRange {
            acceptance: report.user_acceptance,
            quality: report.content_quality,
        });
    }
    let mut next = scoring.clone();
    let target = feedback_target(&next.params, report);
    let updated = ema_step(&next.params, scoring.multiplier(report.owner_id), target);
    next.feedback_multiplier.insert(report.owner_id, updated);
    next.history.push(*report);
    Ok(next)
}

const HISTORY_FORMAT: &str = "gms-scoring-history";
const HISTORY_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HistoryHeader {
    format: String,
    version: u32,
    params: ScoringParams,
    feedback_multiplier: std::collections::BTreeMap<OwnerId, f64>,
    history_len: usize,
}

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("history file I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("history file is empty")]
    Empty,
    #[error("corrupt history at line {line}, column {column}: {message}")]
    Corrupt { line: usize, column: usize, message: String },
    #[error("unsupported history format `{format}` version {version}")]
    UnsupportedFormat { format: String, version: u32 },
    #[error("truncated history: header promises {expected} reports, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("history describes an invalid scoring system: {0}")]
    Invalid(#[from] ScoringError),
}

fn corrupt(line: usize, e: serde_json::Error) -> HistoryError {
    HistoryError::Corrupt { line, column: e.column(), message: e.to_string() }
}

/// Write the scoring system to `path`, replacing it atomically.
pub fn persist_history(scoring: &ScoringSystem, path: impl AsRef<Path>) -> Result<(), HistoryError> {
    let path = path.as_ref();
    let header = HistoryHeader {
        format: HISTORY_FORMAT.to_string(),
        version: HISTORY_VERSION,
        params: scoring.params,
        feedback_multiplier: scoring.feedback_multiplier.clone(),
        history_len: scoring.history.len(),
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut out = std::io::BufWriter::new(tmp.as_file_mut());
        serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        for report in &scoring.history {
            serde_json::to_writer(&mut out, report).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Read a scoring system written by [`persist_history`].
pub fn load_history(path: impl AsRef<Path>) -> Result<ScoringSystem, HistoryError> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines();

    let header_line = lines.next().ok_or(HistoryError::Empty)??;
    let header: HistoryHeader = serde_json::from_str(&header_line).map_err(|e| corrupt(1, e))?;
    if header.format != HISTORY_FORMAT || header.version != HISTORY_VERSION {
        return Err(HistoryError::UnsupportedFormat { format: header.format, version: header.version });
    }

    let mut history = Vec::with_capacity(header.history_len);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let report: FeedbackReport = serde_json::from_str(&line).map_err(|e| corrupt(i + 2, e))?;
        history.push(report);
    }
    if history.len() != header.history_len {
        return Err(HistoryError::Truncated { expected: header.history_len, found: history.len() });
    }

    let scoring = ScoringSystem {
        params: header.params,
        feedback_multiplier: header.feedback_multiplier,
        history,
    };
    scoring.validate()?;
    Ok(scoring)
}
