//! Probabilistic agent-lane assignment and assignment intervals.
//!
//! For every trajectory timestep the matcher scores all lane segments within
//! a search radius by their centerline distance, keeps the ones above the
//! confidence threshold, and condenses the per-timestep assignments into
//! maximal contiguous intervals per lane segment.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::ConfigError;
use crate::geom::Point;
use crate::lane_graph::{LaneGraph, SegmentId};

/// Opaque agent identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub String);

impl AgentId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId(s.to_owned())
    }
}

impl From<String> for AgentId {
    fn from(s: String) -> Self {
        AgentId(s)
    }
}

/// An agent's observed track: x/y positions sampled at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub agent_id: AgentId,
    /// Sampling rate in Hz; positive.
    pub sample_rate: f64,
    /// Positions in meters, indexed by timestep `0..len`.
    pub positions: Vec<Point>,
}

impl Trajectory {
    pub fn new(agent_id: impl Into<AgentId>, sample_rate: f64, positions: Vec<Point>) -> Self {
        Self {
            agent_id: agent_id.into(),
            sample_rate,
            positions,
        }
    }

    /// Number of timesteps.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Matching thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchConfig {
    /// Distance at which the assignment confidence reaches zero, in meters.
    pub d_th: f64,
    /// Confidence threshold; only assignments with confidence strictly above
    /// it are kept.
    pub p_th: f64,
    /// Spatial query radius in meters. Defaults to `d_th`: anything farther
    /// has zero confidence anyway.
    pub search_radius: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            d_th: 5.0,
            p_th: 0.5,
            search_radius: 5.0,
        }
    }
}

impl MatchConfig {
    /// Config with the given thresholds and the search radius following `d_th`.
    pub fn with_thresholds(d_th: f64, p_th: f64) -> Self {
        Self {
            d_th,
            p_th,
            search_radius: d_th,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.d_th > 0.0) {
            return Err(ConfigError(format!("d_th must be > 0, got {}", self.d_th)));
        }
        if !(0.0..1.0).contains(&self.p_th) {
            return Err(ConfigError(format!(
                "p_th must be in [0, 1), got {}",
                self.p_th
            )));
        }
        if !(self.search_radius > 0.0) {
            return Err(ConfigError(format!(
                "search_radius must be > 0, got {}",
                self.search_radius
            )));
        }
        Ok(())
    }
}

/// Assignment confidence for a centerline distance `d`:
/// `max(0, 1 - d / d_th)`.
///
/// `d_th` must be positive; [`MatchConfig::validate`] rejects other values
/// before they reach this hot path.
pub fn assignment_confidence(distance: f64, d_th: f64) -> f64 {
    debug_assert!(d_th > 0.0, "d_th must be positive");
    (1.0 - distance / d_th).max(0.0)
}

/// All lane segments an agent is plausibly on at one timestep.
///
/// Only entries with confidence strictly above `p_th` are stored; timesteps
/// where nothing passes the threshold keep an empty entry list so that
/// downstream averaging has a defined denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct TimestepAssignment {
    pub timestep: usize,
    /// `(segment id, confidence)` pairs, sorted by segment id, no duplicates.
    pub entries: Vec<(SegmentId, f64)>,
}

impl TimestepAssignment {
    pub fn confidence_for(&self, segment: &SegmentId) -> Option<f64> {
        self.entries
            .iter()
            .find(|(id, _)| id == segment)
            .map(|&(_, c)| c)
    }
}

/// Scores every timestep of `traj` against the lane graph.
pub fn assign_timesteps(
    traj: &Trajectory,
    graph: &LaneGraph,
    cfg: &MatchConfig,
) -> Vec<TimestepAssignment> {
    traj.positions
        .iter()
        .enumerate()
        .map(|(t, &p)| {
            let mut entries: Vec<(SegmentId, f64)> = graph
                .segments_within(p, cfg.search_radius)
                .into_iter()
                .filter_map(|(seg, distance)| {
                    let confidence = assignment_confidence(distance, cfg.d_th);
                    (confidence > cfg.p_th).then(|| (seg.id.clone(), confidence))
                })
                .collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            TimestepAssignment {
                timestep: t,
                entries,
            }
        })
        .collect()
}

/// One lane segment plus the maximal contiguous timestep interval an agent is
/// assigned to it. Both bounds are inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentInterval {
    pub segment: SegmentId,
    pub start: usize,
    pub end: usize,
}

impl AssignmentInterval {
    pub fn new(segment: impl Into<SegmentId>, start: usize, end: usize) -> Self {
        Self {
            segment: segment.into(),
            start,
            end,
        }
    }

    pub fn contains(&self, timestep: usize) -> bool {
        self.start <= timestep && timestep <= self.end
    }
}

/// Condenses per-timestep assignments into maximal runs per segment.
///
/// If an agent is assigned to a segment in multiple non-contiguous stretches,
/// one interval per stretch is produced. Output is sorted by
/// `(start, segment id)`.
pub fn build_intervals(assignments: &[TimestepAssignment]) -> Vec<AssignmentInterval> {
    let mut open: HashMap<&SegmentId, usize> = HashMap::new();
    let mut intervals = Vec::new();

    for (idx, assignment) in assignments.iter().enumerate() {
        debug_assert_eq!(assignment.timestep, idx, "assignments must be contiguous");
        let t = assignment.timestep;
        // Close runs that did not survive into t.
        open.retain(|segment, start| {
            if assignment.confidence_for(segment).is_some() {
                true
            } else {
                intervals.push(AssignmentInterval {
                    segment: (*segment).clone(),
                    start: *start,
                    end: t - 1,
                });
                false
            }
        });
        for (segment, _) in &assignment.entries {
            open.entry(segment).or_insert(t);
        }
    }
    if let Some(last) = assignments.last() {
        for (segment, start) in open {
            intervals.push(AssignmentInterval {
                segment: segment.clone(),
                start,
                end: last.timestep,
            });
        }
    }

    intervals.sort_by(|a, b| (a.start, &a.segment).cmp(&(b.start, &b.segment)));
    intervals
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lane_graph::LaneSegment;

    fn straight_lane(id: &str, y: f64) -> LaneSegment {
        LaneSegment::new(
            id,
            vec![Point::new(0.0, y), Point::new(50.0, y), Point::new(100.0, y)],
        )
    }

    fn assignment(t: usize, entries: &[(&str, f64)]) -> TimestepAssignment {
        TimestepAssignment {
            timestep: t,
            entries: entries
                .iter()
                .map(|&(id, c)| (SegmentId::from(id), c))
                .collect(),
        }
    }

    #[test]
    fn confidence_formula() {
        assert_eq!(assignment_confidence(0.0, 5.0), 1.0);
        assert_eq!(assignment_confidence(2.5, 5.0), 0.5);
        assert_eq!(assignment_confidence(7.0, 5.0), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(MatchConfig::default().validate().is_ok());
        assert!(MatchConfig::with_thresholds(0.0, 0.5).validate().is_err());
        assert!(MatchConfig::with_thresholds(-1.0, 0.5).validate().is_err());
        assert!(MatchConfig::with_thresholds(5.0, 1.0).validate().is_err());
        assert!(MatchConfig::with_thresholds(5.0, -0.1).validate().is_err());
    }

    #[test]
    fn agent_on_centerline_gets_full_confidence() {
        let graph = LaneGraph::new(vec![straight_lane("a", 0.0)]);
        let traj = Trajectory::new(
            "agent",
            10.0,
            (0..5).map(|i| Point::new(i as f64 * 2.0, 0.0)).collect(),
        );
        let assignments = assign_timesteps(&traj, &graph, &MatchConfig::default());
        assert_eq!(assignments.len(), 5);
        for (t, a) in assignments.iter().enumerate() {
            assert_eq!(a.timestep, t);
            assert_eq!(a.entries, vec![("a".into(), 1.0)]);
        }
    }

    #[test]
    fn threshold_comparison_is_strict() {
        // Agent exactly 2.5 m from both lanes: confidence 0.5 equals p_th and
        // is dropped, leaving the timestep empty.
        let graph = LaneGraph::new(vec![straight_lane("a", 2.5), straight_lane("b", -2.5)]);
        let traj = Trajectory::new("agent", 10.0, vec![Point::new(1.0, 0.0), Point::new(2.0, 0.0)]);
        let assignments = assign_timesteps(&traj, &graph, &MatchConfig::default());
        assert!(assignments.iter().all(|a| a.entries.is_empty()));
    }

    #[test]
    fn sub_threshold_timesteps_are_kept_empty() {
        let graph = LaneGraph::new(vec![straight_lane("a", 4.0)]);
        let traj = Trajectory::new("agent", 10.0, vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)]);
        let assignments = assign_timesteps(&traj, &graph, &MatchConfig::default());
        assert_eq!(assignments.len(), 2);
        assert!(assignments.iter().all(|a| a.entries.is_empty()));
    }

    #[test]
    fn intervals_single_run() {
        let assignments: Vec<_> = (0..5).map(|t| assignment(t, &[("a", 1.0)])).collect();
        assert_eq!(
            build_intervals(&assignments),
            vec![AssignmentInterval::new("a", 0, 4)]
        );
    }

    #[test]
    fn intervals_non_contiguous_runs_split() {
        let assignments: Vec<_> = (0..10)
            .map(|t| {
                if (0..=4).contains(&t) || (7..=9).contains(&t) {
                    assignment(t, &[("a", 1.0)])
                } else {
                    assignment(t, &[])
                }
            })
            .collect();
        assert_eq!(
            build_intervals(&assignments),
            vec![
                AssignmentInterval::new("a", 0, 4),
                AssignmentInterval::new("a", 7, 9),
            ]
        );
    }

    #[test]
    fn intervals_empty_input() {
        assert_eq!(build_intervals(&[]), vec![]);
        let empty: Vec<_> = (0..3).map(|t| assignment(t, &[])).collect();
        assert_eq!(build_intervals(&empty), vec![]);
    }

    #[test]
    fn intervals_sorted_by_start_then_segment() {
        let assignments = vec![
            assignment(0, &[("b", 0.9), ("a", 0.8)]),
            assignment(1, &[("a", 0.8)]),
        ];
        assert_eq!(
            build_intervals(&assignments),
            vec![
                AssignmentInterval::new("a", 0, 1),
                AssignmentInterval::new("b", 0, 0),
            ]
        );
    }
}
