use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use mvalign_core::association::AssociationParams;
use mvalign_core::eval::EvalConfig;
use mvalign_core::objective::ObjectiveWeights;
use mvalign_core::solver::SolverConfig;

/// Everything a run can be configured with; loaded from TOML, every section optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub weights: ObjectiveWeights,
    pub solver: SolverConfig,
    pub association: AssociationParams,
    pub eval: EvalConfig,
    /// Worker threads; all cores when unset.
    pub jobs: Option<usize>,
    /// Frames per chunk for online solving; batch when unset.
    pub online_chunk: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.solver.validate()?;
        self.eval.thresholds.validate()?;
        if self.jobs == Some(0) {
            anyhow::bail!("jobs must be >= 1");
        }
        if self.online_chunk == Some(0) {
            anyhow::bail!("online_chunk must be >= 1");
        }
        Ok(())
    }
}
