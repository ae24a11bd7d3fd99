//! Maneuver extraction and evaluation toolkit for trajectory datasets.
//!
//! The crate matches agent trajectories against the lane graph of an HD map,
//! determines the sequence of lane segments each agent traveled along, and
//! derives turn and lane-change maneuver labels from that sequence. On top of
//! the extraction it provides dataset-level dynamics analysis (velocity,
//! acceleration and lane-curvature histograms) and maneuver-conditioned
//! evaluation of multi-modal trajectory predictions (minADE / minFDE).
//!
//! The high-level entry points live in [`pipeline`]; the `manex` binary wraps
//! them behind `extract`, `analyze`, `evaluate`, `synth` and `validate`
//! subcommands.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod geom;
pub mod lane_graph;
pub mod maneuver;
pub mod matching;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod scene;
pub mod sequence;
pub mod svg;
pub mod synth;

pub use config::{ConfigError, PipelineConfig};
pub use geom::Point;
pub use lane_graph::{
    validate_graph, ConnectivityKind, GraphError, GraphViolation, LaneGraph, LaneSegment,
    SegmentId, TurnDirection,
};
pub use maneuver::{
    derive_lane_change_maneuver, derive_turn_maneuver, infer_turn_direction, LaneChangeManeuver,
    ManeuverLabel, TurnInferenceConfig, TurnManeuver,
};
pub use matching::{
    assign_timesteps, assignment_confidence, build_intervals, AgentId, AssignmentInterval,
    MatchConfig, TimestepAssignment, Trajectory,
};
pub use metrics::{
    grouped_evaluate, min_ade, min_fde, GroupDimension, GroupedReport, GroupingConfig,
    MetricRecord, MetricsError, PredictionSet, StdKind,
};
pub use scene::{LoadError, PredictionEntry, PredictionFile, SceneFile};
pub use sequence::{enumerate_sequences, maneuver_confidence, select_best, LaneSequence};
