//! Scene and prediction file formats.
//!
//! Both formats are self-describing JSON documents carrying a
//! `schema_version` field. One scene per file: sample rate, target agents,
//! agent tracks and the lane graph. Prediction files hold multi-modal
//! predicted trajectories keyed by `(scene_id, agent_id)`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Point;
use crate::lane_graph::{validate_graph, LaneGraph, LaneSegment};
use crate::matching::{AgentId, Trajectory};

/// Current scene schema version.
pub const SCENE_SCHEMA_VERSION: u32 = 1;
/// Current prediction schema version.
pub const PREDICTION_SCHEMA_VERSION: u32 = 1;

/// Loading or validating an input file failed.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed JSON; the message carries line and column.
    #[error("{path}: parse error: {message}")]
    Parse { path: PathBuf, message: String },
    /// Well-formed JSON that does not match the schema (missing fields,
    /// wrong types, unsupported version).
    #[error("{path}: schema error: {message}")]
    Schema { path: PathBuf, message: String },
    /// Structurally valid file with broken semantic invariants.
    #[error("{path}: validation failed:\n{}", problems.join("\n"))]
    Validation {
        path: PathBuf,
        problems: Vec<String>,
    },
}

/// One agent track inside a scene file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentRecord {
    pub id: AgentId,
    /// Scene timestep at which this track starts. Tracks spanning the whole
    /// scene may omit it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_timestep: Option<usize>,
    pub positions: Vec<Point>,
}

/// One recorded scene: agents plus the lane graph of the mapped area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub schema_version: u32,
    pub scene_id: String,
    /// Sampling rate of all tracks, Hz.
    pub sample_rate_hz: f64,
    /// Agents the dataset designates for evaluation.
    pub targets: Vec<AgentId>,
    /// Scene length in timesteps. Defaults to the longest track.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timesteps: Option<usize>,
    pub agents: Vec<AgentRecord>,
    pub lanes: Vec<LaneSegment>,
}

impl SceneFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, LoadError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.to_owned(),
            source,
        })?;
        let scene: SceneFile = parse_json(path, &text)?;
        if scene.schema_version != SCENE_SCHEMA_VERSION {
            return Err(LoadError::Schema {
                path: path.to_owned(),
                message: format!(
                    "unsupported schema_version {} (expected {SCENE_SCHEMA_VERSION})",
                    scene.schema_version
                ),
            });
        }
        let problems = scene.validate();
        if !problems.is_empty() {
            return Err(LoadError::Validation {
                path: path.to_owned(),
                problems,
            });
        }
        Ok(scene)
    }

    pub fn to_json_pretty(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("scene serialization");
        text.push('\n');
        text
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LoadError> {
        let path = path.as_ref();
        write_file(path, self.to_json_pretty().as_bytes())
    }

    /// All semantic problems in the scene; empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();

        if !(self.sample_rate_hz > 0.0) {
            problems.push(format!(
                "sample_rate_hz must be > 0, got {}",
                self.sample_rate_hz
            ));
        }

        let mut seen = std::collections::HashSet::new();
        for agent in &self.agents {
            if !seen.insert(&agent.id) {
                problems.push(format!("duplicate agent id `{}`", agent.id));
            }
            if agent.positions.len() < 2 {
                problems.push(format!(
                    "agent `{}`: needs at least 2 positions, got {}",
                    agent.id,
                    agent.positions.len()
                ));
            }
        }
        for target in &self.targets {
            if !self.agents.iter().any(|a| &a.id == target) {
                problems.push(format!("target agent `{target}` not present in agents"));
            }
        }

        let horizon = self.scene_timesteps();
        for agent in &self.agents {
            let first = agent.first_timestep.unwrap_or(0);
            let end = first + agent.positions.len();
            if end > horizon {
                problems.push(format!(
                    "agent `{}`: track spans timesteps {first}..{end}, beyond scene length {horizon}",
                    agent.id
                ));
            }
            if agent.positions.len() != horizon && agent.first_timestep.is_none() {
                problems.push(format!(
                    "agent `{}`: track has {} timesteps but the scene has {horizon}; declare first_timestep for partial tracks",
                    agent.id,
                    agent.positions.len()
                ));
            }
        }

        for violation in validate_graph(&self.graph()) {
            problems.push(format!("lane graph: {violation}"));
        }

        problems
    }

    /// Scene length in timesteps.
    pub fn scene_timesteps(&self) -> usize {
        self.timesteps.unwrap_or_else(|| {
            self.agents
                .iter()
                .map(|a| a.first_timestep.unwrap_or(0) + a.positions.len())
                .max()
                .unwrap_or(0)
        })
    }

    /// Builds the lane graph of this scene.
    pub fn graph(&self) -> LaneGraph {
        LaneGraph::new(self.lanes.clone())
    }

    pub fn agent(&self, id: &AgentId) -> Option<&AgentRecord> {
        self.agents.iter().find(|a| &a.id == id)
    }

    /// The track of one agent as a standalone trajectory.
    pub fn trajectory(&self, id: &AgentId) -> Option<Trajectory> {
        self.agent(id).map(|a| Trajectory {
            agent_id: a.id.clone(),
            sample_rate: self.sample_rate_hz,
            positions: a.positions.clone(),
        })
    }

    /// Ids of the agents to process: the declared targets, or every agent
    /// with `all_agents`.
    pub fn processed_agents(&self, all_agents: bool) -> Vec<AgentId> {
        if all_agents {
            self.agents.iter().map(|a| a.id.clone()).collect()
        } else {
            self.targets.clone()
        }
    }
}

/// One multi-modal prediction for one agent in one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionEntry {
    pub scene_id: String,
    pub agent_id: AgentId,
    /// K modes, each a list of future positions of identical length.
    pub modes: Vec<Vec<Point>>,
}

/// A set of predictions, typically one file per model and split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionFile {
    pub schema_version: u32,
    pub predictions: Vec<PredictionEntry>,
}

impl PredictionFile {
    pub fn new(predictions: Vec<PredictionEntry>) -> Self {
        Self {
            schema_version: PREDICTION_SCHEMA_VERSION,
            predictions,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LoadError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.to_owned(),
            source,
        })?;
        let file: PredictionFile = parse_json(path, &text)?;
        if file.schema_version != PREDICTION_SCHEMA_VERSION {
            return Err(LoadError::Schema {
                path: path.to_owned(),
                message: format!(
                    "unsupported schema_version {} (expected {PREDICTION_SCHEMA_VERSION})",
                    file.schema_version
                ),
            });
        }
        let mut problems = Vec::new();
        for entry in &file.predictions {
            let key = format!("({}, {})", entry.scene_id, entry.agent_id);
            match entry.modes.first() {
                None => problems.push(format!("prediction {key}: no modes")),
                Some(first) => {
                    if first.is_empty() {
                        problems.push(format!("prediction {key}: empty horizon"));
                    }
                    if entry.modes.iter().any(|m| m.len() != first.len()) {
                        problems.push(format!("prediction {key}: modes differ in length"));
                    }
                }
            }
        }
        if !problems.is_empty() {
            return Err(LoadError::Validation {
                path: path.to_owned(),
                problems,
            });
        }
        Ok(file)
    }

    pub fn to_json_pretty(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("prediction serialization");
        text.push('\n');
        text
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LoadError> {
        let path = path.as_ref();
        write_file(path, self.to_json_pretty().as_bytes())
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, LoadError> {
    serde_json::from_str(text).map_err(|err| {
        if err.classify() == serde_json::error::Category::Syntax {
            LoadError::Parse {
                path: path.to_owned(),
                message: err.to_string(),
            }
        } else {
            // Data errors carry the offending line/column and field.
            LoadError::Schema {
                path: path.to_owned(),
                message: err.to_string(),
            }
        }
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), LoadError> {
    let mut file = fs::File::create(path).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })?;
    file.write_all(bytes).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Expands scene inputs: files are taken as-is, directories contribute all
/// contained `.json` files in name order.
pub fn scene_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, LoadError> {
    let mut files = Vec::new();
    for input in inputs {
        let meta = fs::metadata(input).map_err(|source| LoadError::Io {
            path: input.clone(),
            source,
        })?;
        if meta.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(input)
                .map_err(|source| LoadError::Io {
                    path: input.clone(),
                    source,
                })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}

/// Loads all scenes from the given files and directories, sorted by scene
/// id; duplicate ids are rejected.
pub fn load_scenes(inputs: &[PathBuf]) -> Result<Vec<SceneFile>, LoadError> {
    let mut scenes: Vec<SceneFile> = scene_paths(inputs)?
        .iter()
        .map(SceneFile::load)
        .collect::<Result<_, _>>()?;
    scenes.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));
    if let Some(dup) = scenes.windows(2).find(|w| w[0].scene_id == w[1].scene_id) {
        return Err(LoadError::Validation {
            path: inputs[0].clone(),
            problems: vec![format!("duplicate scene id `{}`", dup[0].scene_id)],
        });
    }
    Ok(scenes)
}
