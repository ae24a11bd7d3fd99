//! Turn and lane-change maneuver derivation from a lane sequence.
//!
//! Turn maneuvers come from the per-segment turn direction. Maps without the
//! attribute get it inferred from geometry: orientation change, centerline
//! curvature and the number of predecessors (two or more marks a junction
//! entry, which lowers the orientation bar).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::ConfigError;
use crate::lane_graph::{
    segment_max_curvature, segment_orientation_change, ConnectivityKind, LaneGraph, LaneSegment,
    TurnDirection,
};
use crate::sequence::LaneSequence;

/// Turn maneuver of one agent over its observation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TurnManeuver {
    GoingStraight,
    TurningLeft,
    TurningRight,
    /// The sequence contains both left- and right-turning segments.
    Both,
}

impl TurnManeuver {
    pub const ALL: [TurnManeuver; 4] = [
        TurnManeuver::GoingStraight,
        TurnManeuver::TurningLeft,
        TurnManeuver::TurningRight,
        TurnManeuver::Both,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TurnManeuver::GoingStraight => "Going straight",
            TurnManeuver::TurningLeft => "Turning left",
            TurnManeuver::TurningRight => "Turning right",
            TurnManeuver::Both => "Both",
        }
    }

    /// The label of the mirror-image maneuver.
    pub fn mirrored(self) -> Self {
        match self {
            TurnManeuver::TurningLeft => TurnManeuver::TurningRight,
            TurnManeuver::TurningRight => TurnManeuver::TurningLeft,
            other => other,
        }
    }
}

impl fmt::Display for TurnManeuver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Lane-change maneuver of one agent over its observation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LaneChangeManeuver {
    FollowingLane,
    ChangingLaneLeft,
    ChangingLaneRight,
    /// The sequence contains lane changes in both directions.
    Both,
}

impl LaneChangeManeuver {
    pub const ALL: [LaneChangeManeuver; 4] = [
        LaneChangeManeuver::FollowingLane,
        LaneChangeManeuver::ChangingLaneLeft,
        LaneChangeManeuver::ChangingLaneRight,
        LaneChangeManeuver::Both,
    ];

    pub fn label(self) -> &'static str {
        match self {
            LaneChangeManeuver::FollowingLane => "Following lane",
            LaneChangeManeuver::ChangingLaneLeft => "Changing lane left",
            LaneChangeManeuver::ChangingLaneRight => "Changing lane right",
            LaneChangeManeuver::Both => "Both",
        }
    }

    pub fn mirrored(self) -> Self {
        match self {
            LaneChangeManeuver::ChangingLaneLeft => LaneChangeManeuver::ChangingLaneRight,
            LaneChangeManeuver::ChangingLaneRight => LaneChangeManeuver::ChangingLaneLeft,
            other => other,
        }
    }
}

impl fmt::Display for LaneChangeManeuver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The derived maneuver pair for one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManeuverLabel {
    pub turn: TurnManeuver,
    pub lane_change: LaneChangeManeuver,
    /// Confidence of the lane sequence the label was derived from.
    pub source_sequence_confidence: f64,
}

impl ManeuverLabel {
    pub fn mirrored(self) -> Self {
        Self {
            turn: self.turn.mirrored(),
            lane_change: self.lane_change.mirrored(),
            source_sequence_confidence: self.source_sequence_confidence,
        }
    }
}

/// Thresholds for geometric turn-direction inference.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnInferenceConfig {
    /// Minimum centerline curvature for a segment to count as turning, 1/m.
    pub curvature_min: f64,
    /// Minimum absolute orientation change, radians. Segments with at least
    /// two predecessors qualify at this bar; others need twice as much.
    pub orientation_min: f64,
}

impl Default for TurnInferenceConfig {
    fn default() -> Self {
        Self {
            curvature_min: 0.02,
            orientation_min: 25f64.to_radians(),
        }
    }
}

impl TurnInferenceConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.curvature_min > 0.0) {
            return Err(ConfigError(format!(
                "curvature_min must be > 0, got {}",
                self.curvature_min
            )));
        }
        if !(self.orientation_min > 0.0) {
            return Err(ConfigError(format!(
                "orientation_min must be > 0, got {}",
                self.orientation_min
            )));
        }
        Ok(())
    }
}

/// Infers a turn direction for a segment whose map carries no attribute.
///
/// A direction is only assigned when the geometry supports it: the curvature
/// gate must pass, and the orientation change must exceed `orientation_min`
/// for junction-entry segments (two or more predecessors) or twice that
/// otherwise.
pub fn infer_turn_direction(segment: &LaneSegment, cfg: &TurnInferenceConfig) -> TurnDirection {
    let curvature = segment_max_curvature(segment);
    if curvature <= cfg.curvature_min {
        return TurnDirection::None;
    }
    let orientation = segment_orientation_change(segment);
    let junction_entry = segment.predecessors.len() >= 2;
    let bar = if junction_entry || orientation.abs() > 2.0 * cfg.orientation_min {
        cfg.orientation_min
    } else {
        return TurnDirection::None;
    };
    if orientation > bar {
        TurnDirection::Left
    } else if orientation < -bar {
        TurnDirection::Right
    } else {
        TurnDirection::None
    }
}

/// The turn direction used for maneuver derivation: the stored attribute when
/// present, otherwise the inferred one.
pub fn effective_turn_direction(
    segment: &LaneSegment,
    cfg: &TurnInferenceConfig,
) -> TurnDirection {
    segment
        .turn_direction
        .unwrap_or_else(|| infer_turn_direction(segment, cfg))
}

/// Derives the turn maneuver from the directions of all sequence segments.
pub fn derive_turn_maneuver(
    seq: &LaneSequence,
    graph: &LaneGraph,
    cfg: &TurnInferenceConfig,
) -> TurnManeuver {
    let mut left = false;
    let mut right = false;
    for id in seq.segment_ids() {
        if let Some(segment) = graph.get(id) {
            match effective_turn_direction(segment, cfg) {
                TurnDirection::Left => left = true,
                TurnDirection::Right => right = true,
                TurnDirection::None => {}
            }
        }
    }
    match (left, right) {
        (false, false) => TurnManeuver::GoingStraight,
        (true, false) => TurnManeuver::TurningLeft,
        (false, true) => TurnManeuver::TurningRight,
        (true, true) => TurnManeuver::Both,
    }
}

/// Derives the lane-change maneuver from the neighbor transitions of the
/// sequence. Multiple changes in the same direction still map to that
/// direction; `Both` means changes in both directions occurred.
pub fn derive_lane_change_maneuver(seq: &LaneSequence) -> LaneChangeManeuver {
    let left = seq
        .transitions
        .iter()
        .filter(|&&t| t == ConnectivityKind::LeftNeighbor)
        .count();
    let right = seq
        .transitions
        .iter()
        .filter(|&&t| t == ConnectivityKind::RightNeighbor)
        .count();
    match (left > 0, right > 0) {
        (false, false) => LaneChangeManeuver::FollowingLane,
        (true, false) => LaneChangeManeuver::ChangingLaneLeft,
        (false, true) => LaneChangeManeuver::ChangingLaneRight,
        (true, true) => LaneChangeManeuver::Both,
    }
}

/// Derives the full maneuver label for a scored sequence.
pub fn derive_label(
    seq: &LaneSequence,
    graph: &LaneGraph,
    cfg: &TurnInferenceConfig,
) -> ManeuverLabel {
    ManeuverLabel {
        turn: derive_turn_maneuver(seq, graph, cfg),
        lane_change: derive_lane_change_maneuver(seq),
        source_sequence_confidence: seq.confidence,
    }
}
