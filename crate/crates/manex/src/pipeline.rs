//! End-to-end pipelines behind the CLI commands: maneuver extraction,
//! dataset analysis and grouped prediction evaluation.
//!
//! Scenes are processed in parallel on a worker pool; per-scene results are
//! merged in scene order, so output is byte-identical regardless of the
//! worker count. Per-agent extraction failures become diagnostic rows, never
//! aborts.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig};
use crate::dynamics::{self, build_histogram, Histogram};
use crate::lane_graph::{LaneGraph, SegmentId};
use crate::maneuver::{derive_label, LaneChangeManeuver, ManeuverLabel, TurnManeuver};
use crate::matching::{assign_timesteps, build_intervals, AgentId, Trajectory};
use crate::metrics::{
    grouped_evaluate, min_ade, min_fde, GroupDimension, GroupedReport, MetricRecord, MetricsError,
    PredictionSet,
};
use crate::scene::{PredictionFile, SceneFile};
use crate::sequence::{enumerate_sequences, score_sequences, select_best};

/// Result of maneuver extraction for one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExtractionOutcome {
    /// A lane sequence was found and labeled.
    Extracted {
        label: ManeuverLabel,
        sequence: Vec<SegmentId>,
    },
    /// No assignment interval covers the first timestep.
    NoRootAssignment,
    /// Roots exist but no connectivity-valid chain reaches the last timestep.
    NoPath,
    /// The sequence search tripped the enumeration guard.
    PathExplosion,
}

impl ExtractionOutcome {
    pub fn status(&self) -> &'static str {
        match self {
            ExtractionOutcome::Extracted { .. } => "ok",
            ExtractionOutcome::NoRootAssignment => "no_root_assignment",
            ExtractionOutcome::NoPath => "no_path",
            ExtractionOutcome::PathExplosion => "path_explosion",
        }
    }

    pub fn label(&self) -> Option<&ManeuverLabel> {
        match self {
            ExtractionOutcome::Extracted { label, .. } => Some(label),
            _ => None,
        }
    }
}

/// Extraction plus dynamics for one agent of one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentReport {
    pub scene_id: String,
    pub agent_id: AgentId,
    pub avg_velocity: f64,
    /// Absent for 2-point tracks.
    pub avg_acceleration: Option<f64>,
    /// Absent when no lane sequence was found.
    pub max_curvature: Option<f64>,
    #[serde(flatten)]
    pub outcome: ExtractionOutcome,
}

/// Runs the lane-sequence extraction for one trajectory.
pub fn extract_agent(
    traj: &Trajectory,
    graph: &LaneGraph,
    cfg: &PipelineConfig,
) -> ExtractionOutcome {
    let assignments = assign_timesteps(traj, graph, &cfg.matching);
    let intervals = build_intervals(&assignments);
    if !intervals.iter().any(|iv| iv.contains(0)) {
        return ExtractionOutcome::NoRootAssignment;
    }
    match enumerate_sequences(&intervals, graph, traj.len()) {
        Err(_) => ExtractionOutcome::PathExplosion,
        Ok(sequences) if sequences.is_empty() => ExtractionOutcome::NoPath,
        Ok(mut sequences) => {
            score_sequences(&mut sequences, &assignments);
            let best = select_best(sequences).expect("nonempty sequence set");
            let label = derive_label(&best, graph, &cfg.turn_inference);
            ExtractionOutcome::Extracted {
                label,
                sequence: best.segment_ids().cloned().collect(),
            }
        }
    }
}

/// Extraction plus dynamics for one agent.
pub fn analyze_agent(
    scene_id: &str,
    traj: &Trajectory,
    graph: &LaneGraph,
    cfg: &PipelineConfig,
) -> AgentReport {
    let outcome = extract_agent(traj, graph, cfg);
    let max_curvature = match &outcome {
        ExtractionOutcome::Extracted { sequence, .. } => Some(
            sequence
                .iter()
                .filter_map(|id| graph.get(id))
                .map(crate::lane_graph::segment_max_curvature)
                .fold(0.0, f64::max),
        ),
        _ => None,
    };
    AgentReport {
        scene_id: scene_id.to_owned(),
        agent_id: traj.agent_id.clone(),
        avg_velocity: dynamics::average_velocity(traj).unwrap_or(0.0),
        avg_acceleration: dynamics::average_acceleration(traj).ok(),
        max_curvature,
        outcome,
    }
}

/// Processes the configured agents of one scene.
pub fn analyze_scene(scene: &SceneFile, cfg: &PipelineConfig) -> Vec<AgentReport> {
    let graph = scene.graph();
    scene
        .processed_agents(cfg.all_agents)
        .iter()
        .filter_map(|id| scene.trajectory(id))
        .map(|traj| analyze_agent(&scene.scene_id, &traj, &graph, cfg))
        .collect()
}

/// Runs a closure on a dedicated worker pool; `workers == 0` uses the
/// default pool size.
pub fn with_worker_pool<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    if workers == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool")
            .install(f)
    }
}

/// Extraction over many scenes, parallel per scene, merged in scene order.
/// Scenes are expected sorted by scene id (see [`crate::scene::load_scenes`]).
pub fn run_extract(scenes: &[SceneFile], cfg: &PipelineConfig, workers: usize) -> Vec<AgentReport> {
    with_worker_pool(workers, || {
        scenes
            .par_iter()
            .map(|scene| analyze_scene(scene, cfg))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Label counts of one categorical distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub label: String,
    pub count: u64,
    /// Fraction of the distribution total; 0 for an empty distribution.
    pub share: f64,
}

fn categorical(labels: Vec<String>, counts: Vec<u64>) -> Vec<CategoryCount> {
    let total: u64 = counts.iter().sum();
    labels
        .into_iter()
        .zip(counts)
        .map(|(label, count)| CategoryCount {
            label,
            count,
            share: if total == 0 {
                0.0
            } else {
                count as f64 / total as f64
            },
        })
        .collect()
}

/// Dataset-level dynamics and maneuver distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub scenes: usize,
    pub agents: usize,
    pub velocity: Histogram,
    pub acceleration: Histogram,
    /// Over agents with an extracted lane sequence only.
    pub curvature: Histogram,
    pub turn: Vec<CategoryCount>,
    pub lane_change: Vec<CategoryCount>,
    /// Per-status agent counts, including the failure diagnostics.
    pub outcomes: Vec<CategoryCount>,
}

/// Aggregates per-agent reports into the dataset analysis.
pub fn summarize(
    reports: &[AgentReport],
    scenes: usize,
    cfg: &PipelineConfig,
) -> Result<AnalysisReport, ConfigError> {
    let velocities: Vec<f64> = reports.iter().map(|r| r.avg_velocity).collect();
    let accelerations: Vec<f64> = reports.iter().filter_map(|r| r.avg_acceleration).collect();
    let curvatures: Vec<f64> = reports.iter().filter_map(|r| r.max_curvature).collect();

    let mut turn_counts = vec![0u64; TurnManeuver::ALL.len()];
    let mut change_counts = vec![0u64; LaneChangeManeuver::ALL.len()];
    let statuses = ["ok", "no_root_assignment", "no_path", "path_explosion"];
    let mut status_counts = vec![0u64; statuses.len()];
    for report in reports {
        if let Some(label) = report.outcome.label() {
            let t = TurnManeuver::ALL.iter().position(|&m| m == label.turn);
            turn_counts[t.unwrap()] += 1;
            let c = LaneChangeManeuver::ALL
                .iter()
                .position(|&m| m == label.lane_change);
            change_counts[c.unwrap()] += 1;
        }
        let s = statuses
            .iter()
            .position(|&s| s == report.outcome.status())
            .unwrap();
        status_counts[s] += 1;
    }

    Ok(AnalysisReport {
        scenes,
        agents: reports.len(),
        velocity: build_histogram(&velocities, &cfg.grouping.velocity_edges)?,
        acceleration: build_histogram(&accelerations, &cfg.grouping.acceleration_edges)?,
        curvature: build_histogram(&curvatures, &cfg.grouping.curvature_edges)?,
        turn: categorical(
            TurnManeuver::ALL.iter().map(|m| m.label().into()).collect(),
            turn_counts,
        ),
        lane_change: categorical(
            LaneChangeManeuver::ALL
                .iter()
                .map(|m| m.label().into())
                .collect(),
            change_counts,
        ),
        outcomes: categorical(statuses.iter().map(|&s| s.into()).collect(), status_counts),
    })
}

/// Evaluating predictions against scenes failed.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions do not resolve to scene target agents:\n{}", keys.join("\n"))]
    UnresolvedKeys { keys: Vec<String> },
    #[error(
        "trajectory ({scene_id}, {agent_id}) has {got} timesteps, need obs + pred = {needed}"
    )]
    TooShort {
        scene_id: String,
        agent_id: AgentId,
        needed: usize,
        got: usize,
    },
    #[error("prediction ({scene_id}, {agent_id}): {source}")]
    Shape {
        scene_id: String,
        agent_id: AgentId,
        source: MetricsError,
    },
}

/// Per-sample metric records plus one grouped report per dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationOutput {
    pub records: Vec<MetricRecord>,
    pub reports: Vec<GroupedReport>,
}

/// Evaluates a prediction file against its scenes: minADE/minFDE per
/// prediction, grouped by dynamics bins and maneuver labels.
///
/// Ground truth is the future part of each target track, split after
/// `cfg.obs_steps`. Grouping keys come from the full track.
pub fn run_evaluate(
    scenes: &[SceneFile],
    predictions: &PredictionFile,
    cfg: &PipelineConfig,
    workers: usize,
) -> Result<EvaluationOutput, EvalError> {
    let by_id: HashMap<&str, &SceneFile> =
        scenes.iter().map(|s| (s.scene_id.as_str(), s)).collect();

    let unresolved: Vec<String> = predictions
        .predictions
        .iter()
        .filter(|entry| {
            by_id
                .get(entry.scene_id.as_str())
                .is_none_or(|scene| !scene.targets.contains(&entry.agent_id))
        })
        .map(|entry| format!("({}, {})", entry.scene_id, entry.agent_id))
        .collect();
    if !unresolved.is_empty() {
        return Err(EvalError::UnresolvedKeys { keys: unresolved });
    }

    // Extraction and dynamics per referenced agent, computed once.
    let mut keys: Vec<(&str, &AgentId)> = predictions
        .predictions
        .iter()
        .map(|e| (e.scene_id.as_str(), &e.agent_id))
        .collect();
    keys.sort();
    keys.dedup();
    let analyses: HashMap<(&str, &AgentId), AgentReport> = with_worker_pool(workers, || {
        keys.par_iter()
            .map(|&(scene_id, agent_id)| {
                let scene = by_id[scene_id];
                let graph = scene.graph();
                let traj = scene.trajectory(agent_id).expect("resolved above");
                let report = analyze_agent(scene_id, &traj, &graph, cfg);
                ((scene_id, agent_id), report)
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .collect();

    let needed = cfg.obs_steps + cfg.pred_steps;
    let mut records = Vec::with_capacity(predictions.predictions.len());
    for entry in &predictions.predictions {
        let scene = by_id[entry.scene_id.as_str()];
        let traj = scene.trajectory(&entry.agent_id).expect("resolved above");
        if traj.len() < needed {
            return Err(EvalError::TooShort {
                scene_id: entry.scene_id.clone(),
                agent_id: entry.agent_id.clone(),
                needed,
                got: traj.len(),
            });
        }
        let ground_truth = &traj.positions[cfg.obs_steps..needed];
        let shape_err = |source| EvalError::Shape {
            scene_id: entry.scene_id.clone(),
            agent_id: entry.agent_id.clone(),
            source,
        };
        let pred = PredictionSet::new(
            entry.scene_id.clone(),
            entry.agent_id.clone(),
            entry.modes.clone(),
        )
        .map_err(shape_err)?;
        let ade = min_ade(&pred, ground_truth).map_err(shape_err)?;
        let fde = min_fde(&pred, ground_truth).map_err(shape_err)?;

        let analysis = &analyses[&(entry.scene_id.as_str(), &entry.agent_id)];
        let label = analysis.outcome.label();
        records.push(MetricRecord {
            scene_id: entry.scene_id.clone(),
            agent_id: entry.agent_id.clone(),
            min_ade: ade,
            min_fde: fde,
            avg_velocity: analysis.avg_velocity,
            avg_acceleration: analysis.avg_acceleration.unwrap_or(0.0),
            max_curvature: analysis.max_curvature,
            turn: label.map(|l| l.turn),
            lane_change: label.map(|l| l.lane_change),
        });
    }
    records.sort_by(|a, b| (&a.scene_id, &a.agent_id).cmp(&(&b.scene_id, &b.agent_id)));

    let reports = GroupDimension::ALL
        .iter()
        .map(|&dim| grouped_evaluate(&records, dim, &cfg.grouping))
        .collect();
    Ok(EvaluationOutput { records, reports })
}
