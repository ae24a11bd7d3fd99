//! Multi-modal trajectory prediction metrics and grouped evaluation.
//!
//! minADE and minFDE are computed per prediction set; grouped evaluation
//! aggregates them into mean and standard deviation per dynamics bin or
//! maneuver group.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{validate_edges, ConfigError};
use crate::dynamics::{bin_slot, BinSlot};
use crate::geom::Point;
use crate::maneuver::{LaneChangeManeuver, TurnManeuver};
use crate::matching::AgentId;

/// K predicted trajectory modes for one agent in one scene, all with the
/// same horizon length.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub scene_id: String,
    pub agent_id: AgentId,
    pub modes: Vec<Vec<Point>>,
}

/// A prediction set or query violates the expected shape.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("prediction set must contain at least one mode")]
    NoModes,
    #[error("modes have differing horizon lengths ({first} vs {other})")]
    RaggedModes { first: usize, other: usize },
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("ground truth has {got} points, predictions have horizon {expected}")]
    HorizonMismatch { expected: usize, got: usize },
}

impl PredictionSet {
    pub fn new(
        scene_id: impl Into<String>,
        agent_id: impl Into<AgentId>,
        modes: Vec<Vec<Point>>,
    ) -> Result<Self, MetricsError> {
        let first = modes.first().ok_or(MetricsError::NoModes)?.len();
        if first == 0 {
            return Err(MetricsError::EmptyHorizon);
        }
        if let Some(other) = modes.iter().find(|m| m.len() != first) {
            return Err(MetricsError::RaggedModes {
                first,
                other: other.len(),
            });
        }
        Ok(Self {
            scene_id: scene_id.into(),
            agent_id: agent_id.into(),
            modes,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn horizon(&self) -> usize {
        self.modes[0].len()
    }

    fn check_ground_truth(&self, gt: &[Point]) -> Result<(), MetricsError> {
        if gt.len() != self.horizon() {
            return Err(MetricsError::HorizonMismatch {
                expected: self.horizon(),
                got: gt.len(),
            });
        }
        Ok(())
    }
}

/// Minimum over modes of the mean pointwise Euclidean error.
pub fn min_ade(pred: &PredictionSet, gt: &[Point]) -> Result<f64, MetricsError> {
    pred.check_ground_truth(gt)?;
    let h = pred.horizon() as f64;
    Ok(pred
        .modes
        .iter()
        .map(|mode| {
            mode.iter()
                .zip(gt)
                .map(|(p, g)| p.distance(*g))
                .sum::<f64>()
                / h
        })
        .fold(f64::INFINITY, f64::min))
}

/// Minimum over modes of the endpoint Euclidean error.
pub fn min_fde(pred: &PredictionSet, gt: &[Point]) -> Result<f64, MetricsError> {
    pred.check_ground_truth(gt)?;
    let gt_end = *gt.last().expect("horizon >= 1");
    Ok(pred
        .modes
        .iter()
        .map(|mode| mode.last().expect("horizon >= 1").distance(gt_end))
        .fold(f64::INFINITY, f64::min))
}

/// Per-sample metric values together with the keys used for grouping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub scene_id: String,
    pub agent_id: AgentId,
    pub min_ade: f64,
    pub min_fde: f64,
    pub avg_velocity: f64,
    pub avg_acceleration: f64,
    /// Absent when no lane sequence was extracted for the agent.
    pub max_curvature: Option<f64>,
    pub turn: Option<TurnManeuver>,
    pub lane_change: Option<LaneChangeManeuver>,
}

/// The dimension a grouped report is keyed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupDimension {
    Velocity,
    Acceleration,
    Curvature,
    Turn,
    LaneChange,
}

impl GroupDimension {
    pub const ALL: [GroupDimension; 5] = [
        GroupDimension::Velocity,
        GroupDimension::Acceleration,
        GroupDimension::Curvature,
        GroupDimension::Turn,
        GroupDimension::LaneChange,
    ];

    /// Human-readable table title.
    pub fn title(self) -> &'static str {
        match self {
            GroupDimension::Velocity => "Average velocity (m/s)",
            GroupDimension::Acceleration => "Average acceleration (m/s^2)",
            GroupDimension::Curvature => "Maximum curvature (1e-2/m)",
            GroupDimension::Turn => "Turn maneuver",
            GroupDimension::LaneChange => "Lane change maneuver",
        }
    }

    /// Short identifier used in file names and CSV columns.
    pub fn key(self) -> &'static str {
        match self {
            GroupDimension::Velocity => "velocity",
            GroupDimension::Acceleration => "acceleration",
            GroupDimension::Curvature => "curvature",
            GroupDimension::Turn => "turn",
            GroupDimension::LaneChange => "lane_change",
        }
    }

    /// Multiplier applied to bin edges for display. Curvature bins are
    /// reported in 1e-2/m.
    fn display_scale(self) -> f64 {
        match self {
            GroupDimension::Curvature => 100.0,
            _ => 1.0,
        }
    }

    /// Label of the catch-all group: numeric dimensions collect samples
    /// outside the binned range, maneuver dimensions collect samples without
    /// an extracted label.
    pub fn fallback_label(self) -> &'static str {
        match self {
            GroupDimension::Velocity | GroupDimension::Acceleration | GroupDimension::Curvature => {
                "out of range"
            }
            GroupDimension::Turn | GroupDimension::LaneChange => "no label",
        }
    }
}

/// Which standard deviation estimator grouped reports use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdKind {
    #[default]
    Population,
    Sample,
}

/// Bin edges and estimator for grouped evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupingConfig {
    pub velocity_edges: Vec<f64>,
    pub acceleration_edges: Vec<f64>,
    pub curvature_edges: Vec<f64>,
    pub std_kind: StdKind,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        Self {
            velocity_edges: vec![0.0, 4.0, 8.0, 12.0, 16.0, 20.0],
            acceleration_edges: vec![-2.5, -1.5, -0.5, 0.5, 1.5, 2.5],
            curvature_edges: vec![0.0, 0.05, 0.10, 0.15, 0.20, 0.25],
            std_kind: StdKind::Population,
        }
    }
}

impl GroupingConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        validate_edges("velocity bins", &self.velocity_edges)?;
        validate_edges("acceleration bins", &self.acceleration_edges)?;
        validate_edges("curvature bins", &self.curvature_edges)?;
        Ok(())
    }

    pub fn edges_for(&self, dimension: GroupDimension) -> Option<&[f64]> {
        match dimension {
            GroupDimension::Velocity => Some(&self.velocity_edges),
            GroupDimension::Acceleration => Some(&self.acceleration_edges),
            GroupDimension::Curvature => Some(&self.curvature_edges),
            GroupDimension::Turn | GroupDimension::LaneChange => None,
        }
    }
}

/// Aggregated metrics of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub label: String,
    pub n: usize,
    pub min_ade_mean: Option<f64>,
    pub min_ade_std: Option<f64>,
    pub min_fde_mean: Option<f64>,
    pub min_fde_std: Option<f64>,
}

/// Grouped mean and standard deviation of minADE/minFDE along one dimension.
/// Groups with zero samples are reported as empty rows, never omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedReport {
    pub dimension: GroupDimension,
    pub groups: Vec<GroupStats>,
}

/// Formats a numeric value for bin labels without trailing zeros.
fn fmt_edge(value: f64) -> String {
    // Round away float noise introduced by display scaling.
    let rounded = (value * 1e9).round() / 1e9;
    format!("{rounded}")
}

/// Label of bin `i`, e.g. `[0, 4)`. The final bin is closed: `[16, 20]`.
pub fn bin_label(edges: &[f64], i: usize, scale: f64) -> String {
    let lo = fmt_edge(edges[i] * scale);
    let hi = fmt_edge(edges[i + 1] * scale);
    if i + 2 == edges.len() {
        format!("[{lo}, {hi}]")
    } else {
        format!("[{lo}, {hi})")
    }
}

/// All group labels of a dimension, in report order (catch-all last).
pub fn group_labels(dimension: GroupDimension, cfg: &GroupingConfig) -> Vec<String> {
    let mut labels = match dimension {
        GroupDimension::Turn => TurnManeuver::ALL.iter().map(|m| m.label().into()).collect(),
        GroupDimension::LaneChange => LaneChangeManeuver::ALL
            .iter()
            .map(|m| m.label().into())
            .collect(),
        _ => {
            let edges = cfg.edges_for(dimension).expect("numeric dimension");
            (0..edges.len() - 1)
                .map(|i| bin_label(edges, i, dimension.display_scale()))
                .collect::<Vec<String>>()
        }
    };
    labels.push(dimension.fallback_label().to_owned());
    labels
}

/// Index of the group a record belongs to, counted against
/// [`group_labels`]; the catch-all group is the last index.
fn group_index(record: &MetricRecord, dimension: GroupDimension, cfg: &GroupingConfig) -> usize {
    match dimension {
        GroupDimension::Velocity | GroupDimension::Acceleration => {
            let edges = cfg.edges_for(dimension).expect("numeric dimension");
            let value = match dimension {
                GroupDimension::Velocity => record.avg_velocity,
                _ => record.avg_acceleration,
            };
            match bin_slot(value, edges) {
                BinSlot::Bin(i) => i,
                _ => edges.len() - 1,
            }
        }
        GroupDimension::Curvature => {
            let edges = &cfg.curvature_edges;
            match record.max_curvature {
                Some(value) => match bin_slot(value, edges) {
                    BinSlot::Bin(i) => i,
                    _ => edges.len() - 1,
                },
                None => edges.len() - 1,
            }
        }
        GroupDimension::Turn => match record.turn {
            Some(m) => TurnManeuver::ALL.iter().position(|&x| x == m).unwrap(),
            None => TurnManeuver::ALL.len(),
        },
        GroupDimension::LaneChange => match record.lane_change {
            Some(m) => LaneChangeManeuver::ALL.iter().position(|&x| x == m).unwrap(),
            None => LaneChangeManeuver::ALL.len(),
        },
    }
}

#[derive(Default, Clone, Copy)]
struct Accumulator {
    n: usize,
    ade_sum: f64,
    ade_sq: f64,
    fde_sum: f64,
    fde_sq: f64,
}

impl Accumulator {
    fn push(&mut self, record: &MetricRecord) {
        self.n += 1;
        self.ade_sum += record.min_ade;
        self.ade_sq += record.min_ade * record.min_ade;
        self.fde_sum += record.min_fde;
        self.fde_sq += record.min_fde * record.min_fde;
    }

    fn stats(&self, sum: f64, sq: f64, kind: StdKind) -> (Option<f64>, Option<f64>) {
        if self.n == 0 {
            return (None, None);
        }
        let n = self.n as f64;
        let mean = sum / n;
        let variance = match kind {
            StdKind::Population => (sq / n - mean * mean).max(0.0),
            StdKind::Sample => {
                if self.n < 2 {
                    0.0
                } else {
                    ((sq - n * mean * mean) / (n - 1.0)).max(0.0)
                }
            }
        };
        (Some(mean), Some(variance.sqrt()))
    }
}

/// Groups records along `dimension` and reports per-group count, mean and
/// standard deviation of minADE and minFDE.
pub fn grouped_evaluate(
    records: &[MetricRecord],
    dimension: GroupDimension,
    cfg: &GroupingConfig,
) -> GroupedReport {
    let labels = group_labels(dimension, cfg);
    let mut accumulators = vec![Accumulator::default(); labels.len()];
    for record in records {
        accumulators[group_index(record, dimension, cfg)].push(record);
    }

    let groups = labels
        .into_iter()
        .zip(accumulators)
        .map(|(label, acc)| {
            let (ade_mean, ade_std) = acc.stats(acc.ade_sum, acc.ade_sq, cfg.std_kind);
            let (fde_mean, fde_std) = acc.stats(acc.fde_sum, acc.fde_sq, cfg.std_kind);
            GroupStats {
                label,
                n: acc.n,
                min_ade_mean: ade_mean,
                min_ade_std: ade_std,
                min_fde_mean: fde_mean,
                min_fde_std: fde_std,
            }
        })
        .collect();

    GroupedReport { dimension, groups }
}
