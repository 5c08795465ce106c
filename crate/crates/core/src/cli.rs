//! Command-line front end: config loading, the `sweep` and `round`
//! commands, and their output files.
//!
//! Precedence for every setting is flag, then config file, then default.
//! Output files are written to a temporary file in the target directory and
//! renamed into place, so a failed run never leaves a partial file behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::market_model::{FeedbackReport, Mechanism, OwnerId, Resources, Tier};
use crate::mechanisms;
use crate::population::{self, CatalogError};
use crate::sim::{self, ExperimentConfig, SimError};

pub const CURVE_FILE: &str = "revenue_curve.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRACE_FILE: &str = "round_trace.json";
pub const OUTPUT_DIR_ENV: &str = "GMS_OUTPUT_DIR";

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {0} not found")]
    Missing(PathBuf),
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("config at line {line}, column {column}: {message}")]
    UnknownField { line: usize, column: usize, message: String },
    #[error("config value has the wrong type at line {line}, column {column}: {message}")]
    Type { line: usize, column: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::Population(_) | SimError::Scoring(_) => {
                CliError::Config(ConfigError::Invalid(e.to_string()))
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

/// Parse a JSON config. Relative `catalog_path`s resolve against `base_dir`.
///
/// The result is fully resolved: the catalog is inlined, the task universe
/// is explicit, and every invariant has been checked.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
        let (line, column, message) = (e.line(), e.column(), e.to_string());
        match e.classify() {
            serde_json::error::Category::Data if message.starts_with("unknown field") => {
                ConfigError::UnknownField { line, column, message }
            }
            serde_json::error::Category::Data => ConfigError::Type { line, column, message },
            _ => ConfigError::Syntax { line, column, message },
        }
    })?;
    resolve(cfg, base_dir)
}

fn resolve(mut cfg: ExperimentConfig, base_dir: &Path) -> Result<ExperimentConfig, ConfigError> {
    if let Some(path) = cfg.catalog_path.take() {
        let path = if path.is_relative() { base_dir.join(path) } else { path };
        cfg.population.catalog = Some(population::load_catalog(path)?);
    }
    cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    cfg.task_universe = Some(cfg.resolved_task_universe());
    Ok(cfg)
}

/// Load and resolve the config file at `path`.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            ConfigError::Missing(path.to_path_buf())
        } else {
            ConfigError::Io { path: path.to_path_buf(), source }
        }
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base)
}

/// SHA-256 over the canonical JSON of a resolved config.
///
/// Object keys serialize in sorted order, so the digest ignores how the
/// source file ordered its fields.
pub fn config_digest(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_value(cfg).expect("config serializes");
    let bytes = serde_json::to_vec(&canonical).expect("value serializes");
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub tool_version: String,
    pub timestamp: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig, outputs: Vec<String>) -> Self {
        Self {
            config_digest: config_digest(cfg),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            outputs,
        }
    }
}

/// Write `bytes` to `path` via a temp file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Serialize)]
struct CsvRow {
    size_billions: u32,
    mechanism: &'static str,
    mean_revenue: f64,
    revenue_stderr: f64,
    mean_welfare: f64,
    replications: u32,
}

/// Render the curve as CSV with a fixed header, one row per record.
pub fn curve_to_csv(curve: &sim::RevenueCurve) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &curve.records {
        w.serialize(CsvRow {
            size_billions: r.size_billions,
            mechanism: r.mechanism.as_str(),
            mean_revenue: r.mean_revenue,
            revenue_stderr: r.revenue_stderr,
            mean_welfare: r.mean_welfare,
            replications: r.replications,
        })
        .expect("in-memory csv write");
    }
    if curve.records.is_empty() {
        w.write_record([
            "size_billions",
            "mechanism",
            "mean_revenue",
            "revenue_stderr",
            "mean_welfare",
            "replications",
        ])
        .expect("in-memory csv write");
    }
    w.into_inner().expect("in-memory csv flush")
}

#[derive(Debug, Parser)]
#[command(name = "gms", version, about = "Second-score auctions for edge-hosted generative models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep model sizes and write the revenue curve.
    Sweep(SweepArgs),
    /// Run one market round and print a JSON trace.
    Round(RoundArgs),
}

/// Flags shared by both commands.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON experiment config; defaults reproduce the revenue-vs-size preset.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", env = OUTPUT_DIR_ENV)]
    pub output: Option<PathBuf>,
    /// Restrict to one mechanism; repeat for several.
    #[arg(long = "mechanism", value_name = "NAME")]
    pub mechanisms: Vec<Mechanism>,
    /// Number of model owners.
    #[arg(long, value_name = "N")]
    pub owners: Option<u32>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Replications per size.
    #[arg(long, value_name = "N")]
    pub replications: Option<u32>,
    /// Sweep a single model size (billions).
    #[arg(long, value_name = "N")]
    pub size: Option<u32>,
    /// Worker threads (all cores when unset). Does not affect results.
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RoundArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Model size in billions.
    #[arg(long, value_name = "N", default_value_t = 5)]
    pub size: u32,
    /// Apply the winner's feedback to the scoring system.
    #[arg(long)]
    pub feedback: bool,
    /// Print only; do not write round_trace.json.
    #[arg(long)]
    pub no_write: bool,
}

fn base_config(common: &CommonArgs) -> Result<ExperimentConfig, ConfigError> {
    match &common.config {
        Some(path) => load_config(path),
        None => Ok(ExperimentConfig::default()),
    }
}

fn apply_common(cfg: &mut ExperimentConfig, common: &CommonArgs) {
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if !common.mechanisms.is_empty() {
        cfg.mechanisms = common.mechanisms.clone();
    }
    if let Some(n) = common.owners {
        cfg.population.n_owners = n;
    }
}

/// Build the effective config for a sweep from file and flags.
pub fn sweep_config(args: &SweepArgs) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = base_config(&args.common)?;
    apply_common(&mut cfg, &args.common);
    if let Some(r) = args.replications {
        cfg.replications = r;
    }
    if let Some(size) = args.size {
        cfg.sizes = vec![size];
    }
    resolve(cfg, Path::new("."))
}

fn output_dir(common: &CommonArgs) -> PathBuf {
    common.output.clone().unwrap_or_else(|| PathBuf::from("."))
}

/// What a completed sweep wrote.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub curve: sim::RevenueCurve,
    pub csv_path: PathBuf,
    pub manifest: RunManifest,
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<SweepReport, CliError> {
    let cfg = sweep_config(args)?;
    let curve = sim::sweep_sizes_with_workers(&cfg, args.workers)?;

    let dir = output_dir(&args.common);
    fs::create_dir_all(&dir)?;
    let csv_path = dir.join(CURVE_FILE);
    write_atomic(&csv_path, &curve_to_csv(&curve))?;

    let manifest = RunManifest::new(&cfg, vec![csv_path.display().to_string()]);
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_atomic(&dir.join(MANIFEST_FILE), &json)?;
    Ok(SweepReport { curve, csv_path, manifest })
}

#[derive(Debug, Clone, Serialize)]
pub struct BidTrace {
    pub owner_id: OwnerId,
    pub price: f64,
    pub score: f64,
    pub feasible: bool,
    pub basic_value: f64,
    pub capability_count: usize,
    pub covered_requests: usize,
    pub latency_tier: Tier,
    pub resource_cost: Resources,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuctionTrace {
    pub mechanism: Mechanism,
    pub ranked_ledger: Vec<crate::market_model::LedgerEntry>,
    pub winner: Option<OwnerId>,
    pub payment: f64,
    pub feasible_count: usize,
    pub welfare: f64,
    /// True when a lone feasible bid cleared at the reserve price.
    pub cleared_at_reserve: bool,
}

/// A single round, step by step: bids and their scores, requests,
/// each auction's ranking and settlement, and feedback.
#[derive(Debug, Clone, Serialize)]
pub struct RoundTrace {
    pub master_seed: u64,
    pub size_billions: u32,
    pub task_universe: u32,
    pub capacity: Resources,
    pub bids: Vec<BidTrace>,
    pub requested_tasks: Vec<u32>,
    pub auctions: Vec<AuctionTrace>,
    pub feedback: Option<FeedbackReport>,
    pub multiplier_after_feedback: Option<f64>,
}

pub fn round_config(args: &RoundArgs) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = base_config(&args.common)?;
    apply_common(&mut cfg, &args.common);
    if args.feedback {
        cfg.feedback_enabled = true;
    }
    if !cfg.sizes.contains(&args.size) {
        // keep the configured universe unless the requested size needs more
        let needed = args.size.saturating_mul(args.size);
        if cfg.resolved_task_universe() < needed {
            cfg.task_universe = Some(needed);
        }
        cfg.sizes = vec![args.size];
    }
    resolve(cfg, Path::new("."))
}

/// Run one round from `(seed, size, replication 0, round 0)`.
pub fn trace_round(cfg: &ExperimentConfig, size: u32) -> Result<RoundTrace, CliError> {
    let scoring = cfg.initial_scoring()?;
    let mut stream = sim::derive_stream(cfg.master_seed, size, 0, 0);
    let result = sim::run_round(cfg, size, 0, &mut stream, &scoring)?;
    let capacity = cfg.population.capacity;

    let bids = result
        .bids
        .iter()
        .map(|b| BidTrace {
            owner_id: b.owner_id(),
            price: b.price,
            score: mechanisms::compute_score(b, &result.requests, &scoring),
            feasible: mechanisms::feasible(b, &capacity),
            basic_value: b.profile.basic_value,
            capability_count: b.profile.capabilities.len(),
            covered_requests: b
                .profile
                .capabilities
                .keys()
                .filter(|t| result.requests.contains(**t))
                .count(),
            latency_tier: b.profile.latency_tier,
            resource_cost: b.profile.resource_cost,
        })
        .collect();

    let auctions = result
        .runs
        .iter()
        .map(|run| AuctionTrace {
            mechanism: run.outcome.mechanism,
            ranked_ledger: run.outcome.ranked_ledger.clone(),
            winner: run.outcome.winner,
            payment: run.outcome.payment,
            feasible_count: run.outcome.feasible_count,
            welfare: run.welfare,
            cleared_at_reserve: run.outcome.feasible_count == 1,
        })
        .collect();

    Ok(RoundTrace {
        master_seed: cfg.master_seed,
        size_billions: size,
        task_universe: cfg.resolved_task_universe(),
        capacity,
        bids,
        requested_tasks: result.requests.iter().map(|t| t.0).collect(),
        auctions,
        multiplier_after_feedback: result.feedback.map(|r| result.scoring.multiplier(r.owner_id)),
        feedback: result.feedback,
    })
}

pub fn cmd_round(args: &RoundArgs) -> Result<RoundTrace, CliError> {
    let cfg = round_config(args)?;
    let trace = trace_round(&cfg, args.size)?;
    if !args.no_write {
        let dir = output_dir(&args.common);
        fs::create_dir_all(&dir)?;
        let json = serde_json::to_vec_pretty(&trace).map_err(|e| CliError::Runtime(e.to_string()))?;
        write_atomic(&dir.join(TRACE_FILE), &json)?;
    }
    Ok(trace)
}
