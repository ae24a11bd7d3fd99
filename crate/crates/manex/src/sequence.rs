//! Lane-sequence search: depth-first enumeration of connectivity-valid
//! chains of assignment intervals and selection of the best-scoring one.
//!
//! A lane sequence starts at an interval covering the first observed
//! timestep, ends at an interval covering the last one, and only moves
//! between segments with a successor or neighbor connection. Consecutive
//! intervals must be temporally ordered; at most [`MAX_COVERAGE_GAP`]
//! timesteps may be left uncovered between them, which bridges a single
//! dropped assignment without admitting temporally absurd chains.

use thiserror::Error;

use crate::lane_graph::{ConnectivityKind, LaneGraph, SegmentId};
use crate::matching::{AssignmentInterval, TimestepAssignment};

/// Hard cap on enumerated sequences per scene. Real scenes stay far below;
/// hitting the cap aborts the search with [`PathExplosion`].
pub const SEQUENCE_ENUMERATION_LIMIT: usize = 10_000;

/// Maximum number of uncovered timesteps tolerated between consecutive
/// intervals of a sequence.
pub const MAX_COVERAGE_GAP: usize = 1;

/// An ordered, connectivity-valid chain of assignment intervals spanning the
/// whole observation.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneSequence {
    /// The traveled intervals, ordered by time.
    pub steps: Vec<AssignmentInterval>,
    /// Connection between consecutive steps; never `Unconnected`.
    /// `transitions.len() == steps.len() - 1`.
    pub transitions: Vec<ConnectivityKind>,
    /// Mean per-timestep assignment confidence, see [`maneuver_confidence`].
    pub confidence: f64,
}

impl LaneSequence {
    pub fn segment_ids(&self) -> impl Iterator<Item = &SegmentId> {
        self.steps.iter().map(|s| &s.segment)
    }

    /// Number of lane-change (neighbor) transitions in the sequence.
    pub fn lane_change_count(&self) -> usize {
        self.transitions
            .iter()
            .filter(|t| t.is_lane_change())
            .count()
    }
}

/// The depth-first search exceeded [`SEQUENCE_ENUMERATION_LIMIT`].
#[derive(Debug, Error, PartialEq, Eq)]
#[error("lane-sequence search aborted after enumerating {limit} sequences")]
pub struct PathExplosion {
    pub limit: usize,
}

/// Whether interval `next` may follow `cur` in a sequence: forward in time,
/// leaving at most [`MAX_COVERAGE_GAP`] uncovered timesteps.
fn temporally_admissible(cur: &AssignmentInterval, next: &AssignmentInterval) -> bool {
    next.start >= cur.start && next.start <= cur.end + 1 + MAX_COVERAGE_GAP
}

/// Enumerates every valid lane sequence over `intervals` via depth-first
/// search.
///
/// Roots are intervals containing timestep 0, leaves intervals containing
/// `timesteps - 1`; paths may pass through a leaf and keep extending. Each
/// interval appears at most once per path. An empty result is not an error;
/// it simply means no chain spans the observation.
pub fn enumerate_sequences(
    intervals: &[AssignmentInterval],
    graph: &LaneGraph,
    timesteps: usize,
) -> Result<Vec<LaneSequence>, PathExplosion> {
    if timesteps == 0 || intervals.is_empty() {
        return Ok(Vec::new());
    }
    let last_t = timesteps - 1;

    // Deterministic exploration order regardless of input order.
    let mut order: Vec<usize> = (0..intervals.len()).collect();
    order.sort_by(|&a, &b| {
        let ia = &intervals[a];
        let ib = &intervals[b];
        (ia.start, &ia.segment, ia.end).cmp(&(ib.start, &ib.segment, ib.end))
    });

    let mut search = Search {
        intervals,
        order: &order,
        graph,
        last_t,
        visited: vec![false; intervals.len()],
        path: Vec::new(),
        found: Vec::new(),
    };

    for &root in &order {
        if intervals[root].contains(0) {
            search.visit(root)?;
        }
    }

    let sequences = search
        .found
        .into_iter()
        .map(|path| materialize(&path, intervals, graph))
        .collect();
    Ok(sequences)
}

struct Search<'a> {
    intervals: &'a [AssignmentInterval],
    order: &'a [usize],
    graph: &'a LaneGraph,
    last_t: usize,
    visited: Vec<bool>,
    path: Vec<usize>,
    found: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn visit(&mut self, idx: usize) -> Result<(), PathExplosion> {
        self.visited[idx] = true;
        self.path.push(idx);

        if self.intervals[idx].contains(self.last_t) {
            if self.found.len() >= SEQUENCE_ENUMERATION_LIMIT {
                return Err(PathExplosion {
                    limit: SEQUENCE_ENUMERATION_LIMIT,
                });
            }
            self.found.push(self.path.clone());
        }

        for &next in self.order {
            if self.visited[next] {
                continue;
            }
            let cur = &self.intervals[idx];
            let cand = &self.intervals[next];
            if !temporally_admissible(cur, cand) {
                continue;
            }
            let connected = self
                .graph
                .connectivity(&cur.segment, &cand.segment)
                .map(|kind| kind != ConnectivityKind::Unconnected)
                .unwrap_or(false);
            if connected {
                self.visit(next)?;
            }
        }

        self.path.pop();
        self.visited[idx] = false;
        Ok(())
    }
}

fn materialize(
    path: &[usize],
    intervals: &[AssignmentInterval],
    graph: &LaneGraph,
) -> LaneSequence {
    let steps: Vec<AssignmentInterval> = path.iter().map(|&i| intervals[i].clone()).collect();
    let transitions = steps
        .windows(2)
        .map(|w| {
            graph
                .connectivity(&w[0].segment, &w[1].segment)
                .expect("ids were resolvable during the search")
        })
        .collect();
    LaneSequence {
        steps,
        transitions,
        confidence: 0.0,
    }
}

/// Maneuver confidence of a sequence: the mean over all timesteps of the
/// best assignment confidence among sequence segments covering that
/// timestep. Timesteps covered by no step contribute 0, penalizing coverage
/// holes.
pub fn maneuver_confidence(seq: &LaneSequence, assignments: &[TimestepAssignment]) -> f64 {
    if assignments.is_empty() {
        return 0.0;
    }
    let total: f64 = assignments
        .iter()
        .map(|assignment| {
            seq.steps
                .iter()
                .filter(|step| step.contains(assignment.timestep))
                .filter_map(|step| assignment.confidence_for(&step.segment))
                .fold(0.0, f64::max)
        })
        .sum();
    total / assignments.len() as f64
}

/// Scores every sequence in place.
pub fn score_sequences(sequences: &mut [LaneSequence], assignments: &[TimestepAssignment]) {
    for seq in sequences {
        seq.confidence = maneuver_confidence(seq, assignments);
    }
}

/// Picks the sequence with the highest confidence.
///
/// Ties are broken by fewer lane-change transitions, then fewer segments,
/// then lexicographically smaller segment-id chain, which makes the choice
/// deterministic.
pub fn select_best(sequences: Vec<LaneSequence>) -> Option<LaneSequence> {
    sequences.into_iter().reduce(|best, cand| {
        if prefer(&cand, &best) {
            cand
        } else {
            best
        }
    })
}

/// True when `a` should win over `b`.
fn prefer(a: &LaneSequence, b: &LaneSequence) -> bool {
    if a.confidence != b.confidence {
        return a.confidence > b.confidence;
    }
    let key_a = (a.lane_change_count(), a.steps.len());
    let key_b = (b.lane_change_count(), b.steps.len());
    if key_a != key_b {
        return key_a < key_b;
    }
    let ids_a: Vec<&SegmentId> = a.segment_ids().collect();
    let ids_b: Vec<&SegmentId> = b.segment_ids().collect();
    ids_a < ids_b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use crate::lane_graph::{LaneSegment, SegmentId};
    use crate::matching::TimestepAssignment;

    fn lane(id: &str, y: f64) -> LaneSegment {
        LaneSegment::new(id, vec![Point::new(0.0, y), Point::new(100.0, y)])
    }

    fn link_succ(segs: &mut [LaneSegment], from: usize, to: usize) {
        let to_id = segs[to].id.clone();
        let from_id = segs[from].id.clone();
        segs[from].successors.push(to_id);
        segs[to].predecessors.push(from_id);
    }

    fn ids(seq: &LaneSequence) -> Vec<&str> {
        seq.segment_ids().map(|s| s.as_str()).collect()
    }

    fn full_confidence_assignments(seq_ids: &[(&str, usize, usize)], t: usize) -> Vec<TimestepAssignment> {
        (0..t)
            .map(|timestep| TimestepAssignment {
                timestep,
                entries: seq_ids
                    .iter()
                    .filter(|&&(_, s, e)| s <= timestep && timestep <= e)
                    .map(|&(id, _, _)| (SegmentId::from(id), 1.0))
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn single_interval_spanning_everything() {
        let graph = LaneGraph::new(vec![lane("a", 0.0)]);
        let intervals = vec![AssignmentInterval::new("a", 0, 9)];
        let seqs = enumerate_sequences(&intervals, &graph, 10).unwrap();
        assert_eq!(seqs.len(), 1);
        assert_eq!(ids(&seqs[0]), vec!["a"]);
        assert!(seqs[0].transitions.is_empty());
    }

    #[test]
    fn successor_chain() {
        let mut segs = vec![lane("a", 0.0), lane("b", 0.0)];
        link_succ(&mut segs, 0, 1);
        let graph = LaneGraph::new(segs);
        let intervals = vec![
            AssignmentInterval::new("a", 0, 5),
            AssignmentInterval::new("b", 4, 9),
        ];
        let seqs = enumerate_sequences(&intervals, &graph, 10).unwrap();
        assert_eq!(seqs.len(), 1);
        assert_eq!(ids(&seqs[0]), vec!["a", "b"]);
        assert_eq!(seqs[0].transitions, vec![ConnectivityKind::Successor]);
    }

    #[test]
    fn neighbor_branch_yields_both_chains() {
        let mut a = lane("a", 0.0);
        let c = lane("c", 3.5);
        a.left_neighbor = Some(c.id.clone());
        let graph = LaneGraph::new(vec![a, c]);
        let intervals = vec![
            AssignmentInterval::new("a", 0, 5),
            AssignmentInterval::new("c", 0, 9),
        ];
        let seqs = enumerate_sequences(&intervals, &graph, 10).unwrap();
        let got: Vec<Vec<&str>> = seqs.iter().map(ids).collect();
        assert_eq!(got, vec![vec!["a", "c"], vec!["c"]]);
        assert_eq!(seqs[0].transitions, vec![ConnectivityKind::LeftNeighbor]);
    }

    #[test]
    fn no_root_or_no_leaf_is_empty() {
        let graph = LaneGraph::new(vec![lane("a", 0.0)]);
        // Does not contain timestep 0.
        let no_root = vec![AssignmentInterval::new("a", 1, 9)];
        assert!(enumerate_sequences(&no_root, &graph, 10).unwrap().is_empty());
        // Does not contain the last timestep.
        let no_leaf = vec![AssignmentInterval::new("a", 0, 8)];
        assert!(enumerate_sequences(&no_leaf, &graph, 10).unwrap().is_empty());
        assert!(enumerate_sequences(&[], &graph, 10).unwrap().is_empty());
    }

    #[test]
    fn temporal_ordering_is_enforced() {
        let mut segs = vec![lane("a", 0.0), lane("b", 0.0)];
        link_succ(&mut segs, 0, 1);
        let graph = LaneGraph::new(segs);
        // b starts long after a ended: more than one uncovered timestep.
        let intervals = vec![
            AssignmentInterval::new("a", 0, 2),
            AssignmentInterval::new("b", 6, 9),
        ];
        assert!(enumerate_sequences(&intervals, &graph, 10).unwrap().is_empty());
        // One uncovered timestep (t=3) is bridged.
        let intervals = vec![
            AssignmentInterval::new("a", 0, 2),
            AssignmentInterval::new("b", 4, 9),
        ];
        assert_eq!(enumerate_sequences(&intervals, &graph, 10).unwrap().len(), 1);
    }

    #[test]
    fn explosion_guard_trips_on_dense_graphs() {
        // Complete bidirectional successor graph over n lanes, every interval
        // spans everything: the number of simple root->leaf paths explodes.
        let n = 10;
        let mut segs: Vec<LaneSegment> = (0..n).map(|i| lane(&format!("l{i}"), i as f64)).collect();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let id_j = segs[j].id.clone();
                    let id_i = segs[i].id.clone();
                    segs[i].successors.push(id_j);
                    segs[j].predecessors.push(id_i);
                }
            }
        }
        let graph = LaneGraph::new(segs);
        let intervals: Vec<AssignmentInterval> = (0..n)
            .map(|i| AssignmentInterval::new(format!("l{i}"), 0, 9))
            .collect();
        let err = enumerate_sequences(&intervals, &graph, 10).unwrap_err();
        assert_eq!(err.limit, SEQUENCE_ENUMERATION_LIMIT);
    }

    #[test]
    fn confidence_full_coverage() {
        let seq = LaneSequence {
            steps: vec![AssignmentInterval::new("a", 0, 9)],
            transitions: vec![],
            confidence: 0.0,
        };
        let assignments = full_confidence_assignments(&[("a", 0, 9)], 10);
        assert_eq!(maneuver_confidence(&seq, &assignments), 1.0);
    }

    #[test]
    fn confidence_mixed_values() {
        let seq = LaneSequence {
            steps: vec![AssignmentInterval::new("a", 0, 9)],
            transitions: vec![],
            confidence: 0.0,
        };
        let assignments: Vec<TimestepAssignment> = (0..10)
            .map(|t| TimestepAssignment {
                timestep: t,
                entries: vec![(SegmentId::from("a"), if t < 5 { 1.0 } else { 0.5 })],
            })
            .collect();
        assert_eq!(maneuver_confidence(&seq, &assignments), 0.75);
    }

    #[test]
    fn confidence_uncovered_timestep_counts_zero() {
        // Coverage hole at t=5: nine timesteps at 1.0, one at 0.
        let seq = LaneSequence {
            steps: vec![
                AssignmentInterval::new("a", 0, 4),
                AssignmentInterval::new("b", 6, 9),
            ],
            transitions: vec![ConnectivityKind::Successor],
            confidence: 0.0,
        };
        let assignments = full_confidence_assignments(&[("a", 0, 4), ("b", 6, 9)], 10);
        assert_eq!(maneuver_confidence(&seq, &assignments), 0.9);
    }

    #[test]
    fn confidence_takes_max_over_covering_segments() {
        let seq = LaneSequence {
            steps: vec![
                AssignmentInterval::new("a", 0, 1),
                AssignmentInterval::new("b", 0, 1),
            ],
            transitions: vec![ConnectivityKind::LeftNeighbor],
            confidence: 0.0,
        };
        let assignments: Vec<TimestepAssignment> = (0..2)
            .map(|t| TimestepAssignment {
                timestep: t,
                entries: vec![
                    (SegmentId::from("a"), 0.6),
                    (SegmentId::from("b"), 0.8),
                ],
            })
            .collect();
        assert_eq!(maneuver_confidence(&seq, &assignments), 0.8);
    }

    fn seq_with(confidence: f64, ids: &[&str], transitions: Vec<ConnectivityKind>) -> LaneSequence {
        LaneSequence {
            steps: ids
                .iter()
                .map(|&id| AssignmentInterval::new(id, 0, 9))
                .collect(),
            transitions,
            confidence,
        }
    }

    #[test]
    fn select_best_prefers_confidence() {
        let best = select_best(vec![
            seq_with(0.7, &["a"], vec![]),
            seq_with(0.9, &["b"], vec![]),
        ])
        .unwrap();
        assert_eq!(ids(&best), vec!["b"]);
    }

    #[test]
    fn select_best_tie_breaks_on_lane_changes_then_length_then_ids() {
        let with_change = seq_with(
            0.8,
            &["a", "b"],
            vec![ConnectivityKind::LeftNeighbor],
        );
        let without_change = seq_with(0.8, &["c", "d"], vec![ConnectivityKind::Successor]);
        let best = select_best(vec![with_change.clone(), without_change.clone()]).unwrap();
        assert_eq!(ids(&best), vec!["c", "d"]);

        let shorter = seq_with(0.8, &["x"], vec![]);
        let best = select_best(vec![without_change, shorter]).unwrap();
        assert_eq!(ids(&best), vec!["x"]);

        let a = seq_with(0.8, &["a"], vec![]);
        let b = seq_with(0.8, &["b"], vec![]);
        let best = select_best(vec![b, a]).unwrap();
        assert_eq!(ids(&best), vec!["a"]);
    }

    #[test]
    fn select_best_empty_is_none() {
        assert_eq!(select_best(vec![]), None);
    }
}
