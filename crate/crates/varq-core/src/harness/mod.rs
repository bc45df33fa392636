//! Config-driven experiment harness: derived-field variation norms,
//! best-constant estimation by seeded random search with coordinate hill
//! climbing, axis sweeps, the identity suite, and deterministic report
//! emission.
//!
//! Every reported constant is an estimate from below of a quantity that is
//! itself a lower bound: finite scale grids under-approximate the
//! variation supremum and the search under-approximates the supremum over
//! functions. Reports therefore never claim a true operator constant; they
//! pin the grids, seeds and gates that produced each number.

mod estimate;
mod field;
mod identities;
mod report;
pub mod tol;

pub use estimate::{
    estimate_constant, estimate_constant_with_corpus, generate_corpus, sweep, EstimateOutcome,
    SweepAxis,
};
pub use field::{field_vq_lp, FieldValue};
pub use identities::{
    identity_suite, identity_suite_with, zero_function_residuals, Corruption, IdentitySuite,
};
pub use report::{emit_csv, emit_tsv, load_structured, write_structured, StructuredReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{KernelFamily, ScaleGridSpec};
use crate::spaces::Space;

/// Which experiment a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Variation,
    Estimate,
    Sweep,
    Identities,
    Cotype,
    Transfer,
}

/// Corpus of random step functions for the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub count: usize,
    pub max_intervals: usize,
    pub amplitude: f64,
    pub seed: u64,
    /// Generate scalar data embedded in coordinate 0 of the target space
    /// (dimension sweeps compare these bitwise).
    #[serde(default)]
    pub scalar_embed: bool,
}

/// Random-restart plus coordinate-hill-climb optimizer parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub restarts: usize,
    pub iterations: usize,
    pub step_scale: f64,
    pub seed: u64,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        OptimizerSpec {
            restarts: 16,
            iterations: 200,
            step_scale: 0.25,
            seed: 0,
        }
    }
}

/// Spatial grid for L^p norms of derived fields: a uniform grid over the
/// support enlarged by `tail_multiplier` times the largest scale, at
/// `points_per_unit` density, gated by double-grid agreement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialSpec {
    pub points_per_unit: f64,
    pub tail_multiplier: f64,
    pub richardson_gate: f64,
}

impl Default for SpatialSpec {
    fn default() -> Self {
        SpatialSpec {
            points_per_unit: 64.0,
            tail_multiplier: 4.0,
            richardson_gate: 0.01,
        }
    }
}

/// Full experiment description; the JSON field names are the config format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub space: Space,
    pub p: f64,
    pub q: f64,
    pub family: KernelFamily,
    pub scale_grid: ScaleGridSpec,
    pub corpus: CorpusSpec,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub spatial: SpatialSpec,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.space.norm.validate()?;
        if self.space.dim == 0 {
            return Err(Error::Validation("space dimension must be ≥ 1".into()));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(Error::Validation(format!("p = {} must be > 1", self.p)));
        }
        if !(self.q >= 1.0) || !self.q.is_finite() {
            return Err(Error::Validation(format!("q = {} must be ≥ 1", self.q)));
        }
        self.family
            .validate()
            .map_err(|e| Error::Validation(e.to_string()))?;
        self.scale_grid
            .build()
            .map_err(|e| Error::Validation(e.to_string()))?;
        if self.corpus.count == 0 || self.corpus.max_intervals == 0 {
            return Err(Error::Validation("corpus needs positive counts".into()));
        }
        if !(self.corpus.amplitude > 0.0) {
            return Err(Error::Validation("corpus amplitude must be positive".into()));
        }
        if !(self.spatial.points_per_unit > 0.0)
            || !(self.spatial.tail_multiplier > 0.0)
            || !(self.spatial.richardson_gate > 0.0)
        {
            return Err(Error::Validation(
                "spatial grid parameters must be positive".into(),
            ));
        }
        if !(self.optimizer.step_scale > 0.0) {
            return Err(Error::Validation("step scale must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Validation(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One emitted result: every number travels with its config echo, its
/// diagnostics and the seed that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment_id: String,
    pub kind: String,
    pub space: String,
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    pub family: String,
    pub estimate: f64,
    pub diagnostic: String,
    pub seed: u64,
}
