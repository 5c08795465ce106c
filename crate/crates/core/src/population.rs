//! Random market generation.
//!
//! A model of `s` billion parameters can run `s²` downstream tasks, drawn
//! uniformly without replacement from the task universe. Basic values are
//! uniform on `[0, 10]`, execution values uniform on `[0, 1]`, and each owner
//! bids a random fraction `gamma` of the model's total value.

use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_model::{
    EdgeServerCapacity, ModelBid, ModelProfile, OwnerId, Resources, TaskId, TaskRequestSet, Tier,
    MAX_BASIC_VALUE,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelFamily {
    #[serde(rename = "GAN")]
    Gan,
    #[serde(rename = "VAE")]
    Vae,
    #[serde(rename = "diffusion")]
    Diffusion,
    #[serde(rename = "transformer")]
    Transformer,
}

/// A named model and its latency / resource-cost class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub name: String,
    pub family: ModelFamily,
    #[serde(rename = "latency")]
    pub latency_tier: Tier,
    #[serde(rename = "cost")]
    pub cost_tier: Tier,
}

/// Whether execution values are drawn per (model, task) or once per task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionValueMode {
    #[default]
    PerModel,
    GlobalPerTask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub n_owners: u32,
    pub basic_value_range: (f64, f64),
    pub execution_value_range: (f64, f64),
    /// Fraction of total model value an owner bids.
    pub gamma_range: (f64, f64),
    /// Fraction of the task universe requested per round.
    pub request_fraction: f64,
    pub capacity: EdgeServerCapacity,
    /// Size of the task universe `{0, .., U-1}`. Experiment configs set it
    /// through their own `task_universe` field.
    #[serde(skip)]
    pub task_universe: u32,
    pub execution_value_mode: ExecutionValueMode,
    pub catalog: Option<Vec<CatalogEntry>>,
}

/// Capacity large enough for every model up to 33B parameters at the high tier.
pub const DEFAULT_CAPACITY: f64 = 10.0;

impl Default for PopulationConfig {
    fn default() -> Self {
        Self {
            n_owners: 10,
            basic_value_range: (0.0, MAX_BASIC_VALUE),
            execution_value_range: (0.0, 1.0),
            gamma_range: (0.5, 1.0),
            request_fraction: 0.5,
            capacity: Resources::uniform(DEFAULT_CAPACITY),
            task_universe: 100,
            execution_value_mode: ExecutionValueMode::PerModel,
            catalog: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PopulationError {
    #[error("model size {size}B needs {needed} tasks but the universe has only {universe}")]
    SizeTooLarge { size: u32, needed: usize, universe: u32 },
    #[error("model size must be positive")]
    ZeroSize,
    #[error("invalid population config: {0}")]
    InvalidConfig(String),
}

fn well_ordered(name: &str, (lo, hi): (f64, f64), bounds: (f64, f64)) -> Result<(), PopulationError> {
    if lo.is_finite() && hi.is_finite() && bounds.0 <= lo && lo <= hi && hi <= bounds.1 {
        Ok(())
    } else {
        Err(PopulationError::InvalidConfig(format!(
            "{name} [{lo}, {hi}] must be ordered within [{}, {}]",
            bounds.0, bounds.1
        )))
    }
}

impl PopulationConfig {
    pub fn validate(&self) -> Result<(), PopulationError> {
        if self.n_owners == 0 {
            return Err(PopulationError::InvalidConfig("n_owners must be at least 1".into()));
        }
        well_ordered("basic_value_range", self.basic_value_range, (0.0, MAX_BASIC_VALUE))?;
        well_ordered("execution_value_range", self.execution_value_range, (0.0, 1.0))?;
        well_ordered("gamma_range", self.gamma_range, (0.0, f64::MAX))?;
        if !(self.request_fraction > 0.0 && self.request_fraction <= 1.0) {
            return Err(PopulationError::InvalidConfig(format!(
                "request_fraction {} outside (0, 1]",
                self.request_fraction
            )));
        }
        if !self.capacity.is_valid() {
            return Err(PopulationError::InvalidConfig(
                "capacity components must be finite and non-negative".into(),
            ));
        }
        if self.task_universe == 0 {
            return Err(PopulationError::InvalidConfig("task_universe must be positive".into()));
        }
        if matches!(&self.catalog, Some(c) if c.is_empty()) {
            return Err(PopulationError::InvalidConfig("catalog must not be empty".into()));
        }
        Ok(())
    }

    /// A server too small for the larger or costlier models, for exercising
    /// the feasibility filter.
    pub fn constrained(capacity_units: f64) -> Self {
        Self { capacity: Resources::uniform(capacity_units), ..Self::default() }
    }

    /// Number of tasks requested per round.
    pub fn request_count(&self) -> usize {
        (self.request_fraction * self.task_universe as f64).round() as usize
    }

    fn catalog_entry(&self, owner_id: OwnerId) -> Option<&CatalogEntry> {
        self.catalog
            .as_deref()
            .filter(|c| !c.is_empty())
            .map(|c| &c[owner_id as usize % c.len()])
    }
}

/// Per-component resource units for a cost tier, before size scaling.
pub fn tier_to_cost(tier: Tier) -> f64 {
    match tier {
        Tier::Low => 1.0,
        Tier::Medium => 2.0,
        Tier::High => 3.0,
    }
}

/// Resource vector of a model: tier cost scaled by `size / 10` on every component.
pub fn resource_cost(tier: Tier, size_billions: u32) -> Resources {
    Resources::uniform(tier_to_cost(tier) * size_billions as f64 / 10.0)
}

fn draw(rng: &mut (impl Rng + ?Sized), (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Draw one model profile: `size²` distinct capabilities with uniform
/// execution values, and a uniform basic value.
///
/// Owners are assigned catalog entries round-robin by owner id; without a
/// catalog every model is medium latency and medium cost.
pub fn generate_profile<R: Rng + ?Sized>(
    owner_id: OwnerId,
    size_billions: u32,
    cfg: &PopulationConfig,
    rng: &mut R,
) -> Result<ModelProfile, PopulationError> {
    if size_billions == 0 {
        return Err(PopulationError::ZeroSize);
    }
    let needed = ModelProfile::expected_capability_count(size_billions);
    if needed > cfg.task_universe as usize {
        return Err(PopulationError::SizeTooLarge {
            size: size_billions,
            needed,
            universe: cfg.task_universe,
        });
    }

    let basic_value = draw(rng, cfg.basic_value_range);
    let tasks = index::sample(rng, cfg.task_universe as usize, needed);
    let capabilities = tasks
        .iter()
        .map(|t| (TaskId(t as u32), draw(rng, cfg.execution_value_range)))
        .collect();

    let (latency_tier, cost_tier) = cfg
        .catalog_entry(owner_id)
        .map_or((Tier::Medium, Tier::Medium), |e| (e.latency_tier, e.cost_tier));

    Ok(ModelProfile {
        owner_id,
        size_billions,
        basic_value,
        capabilities,
        latency_tier,
        resource_cost: resource_cost(cost_tier, size_billions),
    })
}

/// Bid price as a fraction `gamma` of the model's total value.
pub fn price_from_value(profile: &ModelProfile, gamma: f64) -> f64 {
    gamma * profile.total_value()
}

/// Draw a full market: `n_owners` bids of the given size plus the round's
/// task requests. Deterministic given the stream state.
pub fn sample_market<R: Rng + ?Sized>(
    cfg: &PopulationConfig,
    size_billions: u32,
    rng: &mut R,
) -> Result<(Vec<ModelBid>, TaskRequestSet), PopulationError> {
    cfg.validate()?;
    let global: Option<Vec<f64>> = match cfg.execution_value_mode {
        ExecutionValueMode::PerModel => None,
        ExecutionValueMode::GlobalPerTask => Some(
            (0..cfg.task_universe)
                .map(|_| draw(rng, cfg.execution_value_range))
                .collect(),
        ),
    };

    let mut bids = Vec::with_capacity(cfg.n_owners as usize);
    for owner_id in 0..cfg.n_owners {
        let mut profile = generate_profile(owner_id, size_billions, cfg, rng)?;
        if let Some(table) = &global {
            for (task, value) in profile.capabilities.iter_mut() {
                *value = table[task.0 as usize];
            }
        }
        let gamma = draw(rng, cfg.gamma_range);
        let price = price_from_value(&profile, gamma);
        bids.push(ModelBid { profile, price });
    }

    let requests = index::sample(rng, cfg.task_universe as usize, cfg.request_count())
        .iter()
        .map(|t| TaskId(t as u32))
        .collect();
    Ok((bids, requests))
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read catalog {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed catalog at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

pub fn parse_catalog(text: &str) -> Result<Vec<CatalogEntry>, CatalogError> {
    serde_json::from_str(text).map_err(|e| CatalogError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Read a JSON list of catalog entries.
pub fn load_catalog(path: impl AsRef<Path>) -> Result<Vec<CatalogEntry>, CatalogError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| CatalogError::Io { path: path.display().to_string(), source })?;
    parse_catalog(&text)
}
