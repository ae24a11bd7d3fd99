//! Shared test oracles: independent brute-force implementations the library
//! results are compared against. Nothing in here may call the code paths it
//! checks.

#![allow(dead_code)]

use manex::lane_graph::{LaneGraph, LaneSegment};
use manex::matching::AssignmentInterval;
use manex::{Point, SegmentId};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Dense-sampling distance oracle: walks the polyline in 1 mm steps and
/// takes the minimum pointwise distance.
pub fn dense_sampling_distance(p: Point, polyline: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    for w in polyline.windows(2) {
        let len = w[0].distance(w[1]);
        let samples = (len / 0.001).ceil() as usize + 1;
        for i in 0..=samples {
            let t = i as f64 / samples as f64;
            let q = w[0] + (w[1] - w[0]) * t;
            best = best.min(p.distance(q));
        }
    }
    best
}

/// Circumradius-based curvature oracle: `1 / R` with `R` from the sine rule
/// `R = a / (2 sin A)`, a route independent of the cross-product formula.
pub fn circumradius_curvature(a: Point, b: Point, c: Point) -> f64 {
    let side_a = b.distance(c);
    let ab = b - a;
    let ac = c - a;
    let cos_angle = (ab.dot(ac) / (ab.norm() * ac.norm())).clamp(-1.0, 1.0);
    let sin_angle = (1.0 - cos_angle * cos_angle).sqrt();
    if sin_angle == 0.0 {
        0.0
    } else {
        2.0 * sin_angle / side_a
    }
}

/// Double-loop minADE oracle.
pub fn oracle_min_ade(modes: &[Vec<Point>], gt: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    for mode in modes {
        let mut sum = 0.0;
        for (p, g) in mode.iter().zip(gt) {
            sum += (p.x - g.x).hypot(p.y - g.y);
        }
        best = best.min(sum / gt.len() as f64);
    }
    best
}

/// Double-loop minFDE oracle.
pub fn oracle_min_fde(modes: &[Vec<Point>], gt: &[Point]) -> f64 {
    let g = gt[gt.len() - 1];
    let mut best = f64::INFINITY;
    for mode in modes {
        let p = mode[mode.len() - 1];
        best = best.min((p.x - g.x).hypot(p.y - g.y));
    }
    best
}

/// A sequence reduced to comparable data: `(segment id, start, end)` per
/// step.
pub type PathKey = Vec<(String, usize, usize)>;

/// Exhaustive recursive enumeration of all valid interval chains, written
/// directly against the lane-segment fields (not the graph query API).
///
/// Chains start at an interval containing timestep 0, end at one containing
/// `timesteps - 1`, repeat no interval, move forward in time and leave at
/// most one timestep uncovered between consecutive intervals.
pub fn oracle_enumerate(
    intervals: &[AssignmentInterval],
    segments: &[LaneSegment],
    timesteps: usize,
) -> Vec<PathKey> {
    fn connected(segments: &[LaneSegment], from: &SegmentId, to: &SegmentId) -> bool {
        let Some(seg) = segments.iter().find(|s| &s.id == from) else {
            return false;
        };
        if segments.iter().all(|s| &s.id != to) {
            return false;
        }
        seg.successors.contains(to)
            || seg.left_neighbor.as_ref() == Some(to)
            || seg.right_neighbor.as_ref() == Some(to)
    }

    fn recurse(
        intervals: &[AssignmentInterval],
        segments: &[LaneSegment],
        last_t: usize,
        path: &mut Vec<usize>,
        out: &mut Vec<PathKey>,
    ) {
        let cur = &intervals[*path.last().unwrap()];
        if cur.start <= last_t && last_t <= cur.end {
            out.push(
                path.iter()
                    .map(|&i| {
                        let iv = &intervals[i];
                        (iv.segment.to_string(), iv.start, iv.end)
                    })
                    .collect(),
            );
        }
        for (idx, cand) in intervals.iter().enumerate() {
            if path.contains(&idx) {
                continue;
            }
            if cand.start < cur.start || cand.start > cur.end + 2 {
                continue;
            }
            if !connected(segments, &cur.segment, &cand.segment) {
                continue;
            }
            path.push(idx);
            recurse(intervals, segments, last_t, path, out);
            path.pop();
        }
    }

    if timesteps == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (idx, interval) in intervals.iter().enumerate() {
        if interval.start == 0 {
            let mut path = vec![idx];
            recurse(intervals, segments, timesteps - 1, &mut path, &mut out);
        }
    }
    out.sort();
    out
}

/// A random lane grid (up to 5 lanes wide, up to 3 slots long) with random
/// neighbor links, plus random assignment intervals over it.
pub struct RandomIntervalCase {
    pub segments: Vec<LaneSegment>,
    pub graph: LaneGraph,
    pub intervals: Vec<AssignmentInterval>,
    pub timesteps: usize,
}

pub fn random_interval_case(rng: &mut ChaCha8Rng) -> RandomIntervalCase {
    let width = rng.random_range(1..=5usize);
    let slots = rng.random_range(1..=3usize);
    let lane_w = 3.5;
    let slot_len = 20.0;

    let mut segments = Vec::new();
    let id_of = |lane: usize, slot: usize| SegmentId::from(format!("l{lane}s{slot}"));
    for lane in 0..width {
        for slot in 0..slots {
            let y = lane as f64 * lane_w;
            let x0 = slot as f64 * slot_len;
            let mut seg = LaneSegment::new(
                id_of(lane, slot),
                vec![Point::new(x0, y), Point::new(x0 + slot_len, y)],
            );
            if slot + 1 < slots {
                seg.successors.push(id_of(lane, slot + 1));
            }
            if slot > 0 {
                seg.predecessors.push(id_of(lane, slot - 1));
            }
            if lane + 1 < width && rng.random_range(0..4) < 3 {
                seg.left_neighbor = Some(id_of(lane + 1, slot));
            }
            if lane > 0 && rng.random_range(0..4) < 3 {
                seg.right_neighbor = Some(id_of(lane - 1, slot));
            }
            segments.push(seg);
        }
    }

    let timesteps = rng.random_range(6..=14usize);
    let count = rng.random_range(1..=12usize);
    let mut intervals = Vec::new();
    for _ in 0..count {
        let seg = &segments[rng.random_range(0..segments.len())];
        let start = rng.random_range(0..timesteps);
        let end = rng.random_range(start..timesteps);
        intervals.push(AssignmentInterval::new(seg.id.clone(), start, end));
    }
    // Same-segment intervals must not overlap or touch (they would be one
    // maximal run); merge by dropping offenders.
    intervals.sort_by(|a, b| (&a.segment, a.start).cmp(&(&b.segment, b.start)));
    intervals.dedup_by(|next, prev| {
        next.segment == prev.segment && next.start <= prev.end.saturating_add(1)
    });

    let graph = LaneGraph::new(segments.clone());
    RandomIntervalCase {
        segments,
        graph,
        intervals,
        timesteps,
    }
}

/// Key form of a library sequence for set comparison.
pub fn sequence_keys(sequences: &[manex::LaneSequence]) -> Vec<PathKey> {
    let mut keys: Vec<PathKey> = sequences
        .iter()
        .map(|seq| {
            seq.steps
                .iter()
                .map(|s| (s.segment.to_string(), s.start, s.end))
                .collect()
        })
        .collect();
    keys.sort();
    keys
}

/// Random polyline with 2..=6 vertices within a 30 m box.
pub fn random_polyline(rng: &mut ChaCha8Rng) -> Vec<Point> {
    let n = rng.random_range(2..=6usize);
    let mut points = Vec::with_capacity(n);
    let mut last = Point::new(rng.random_range(-15.0..15.0), rng.random_range(-15.0..15.0));
    points.push(last);
    for _ in 1..n {
        let step = Point::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
        let next = last + step;
        if next.distance(last) < 1e-6 {
            continue;
        }
        points.push(next);
        last = next;
    }
    if points.len() < 2 {
        points.push(last + Point::new(1.0, 0.0));
    }
    points
}
