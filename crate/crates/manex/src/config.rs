//! Pipeline-wide configuration.

use thiserror::Error;

use crate::maneuver::TurnInferenceConfig;
use crate::matching::MatchConfig;
use crate::metrics::GroupingConfig;

/// A configuration value violates its documented range.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

/// Everything the extraction/analysis/evaluation pipeline needs to run.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub matching: MatchConfig,
    pub turn_inference: TurnInferenceConfig,
    pub grouping: GroupingConfig,
    /// Number of observed (history) timesteps preceding the prediction
    /// horizon when evaluating predictions.
    pub obs_steps: usize,
    /// Prediction horizon length in timesteps.
    pub pred_steps: usize,
    /// Expected number of predicted modes per agent.
    pub modes: usize,
    /// Process every agent in a scene instead of the declared targets only.
    pub all_agents: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            matching: MatchConfig::default(),
            turn_inference: TurnInferenceConfig::default(),
            grouping: GroupingConfig::default(),
            obs_steps: 20,
            pred_steps: 30,
            modes: 6,
            all_agents: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.matching.validate()?;
        self.turn_inference.validate()?;
        self.grouping.validate()?;
        if self.pred_steps == 0 {
            return Err(ConfigError("pred_steps must be positive".into()));
        }
        if self.modes == 0 {
            return Err(ConfigError("modes must be positive".into()));
        }
        Ok(())
    }
}

/// Checks histogram/grouping bin boundaries: at least two edges, strictly
/// increasing.
pub fn validate_edges(name: &str, edges: &[f64]) -> Result<(), ConfigError> {
    if edges.len() < 2 {
        return Err(ConfigError(format!("{name}: need at least 2 bin edges")));
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConfigError(format!(
            "{name}: bin edges must be strictly increasing"
        )));
    }
    if edges.iter().any(|e| !e.is_finite()) {
        return Err(ConfigError(format!("{name}: bin edges must be finite")));
    }
    Ok(())
}
