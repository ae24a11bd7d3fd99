//! Lane-graph data model and geometric queries on lane centerlines.
//!
//! A [`LaneGraph`] owns a set of [`LaneSegment`]s. Each segment carries a
//! centerline polyline plus its connectivity: successors, predecessors and
//! optional left/right neighbors. The graph is immutable after construction
//! and all queries are read-only, so it can be shared freely across threads.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{heading, menger_curvature, point_segment_distance, wrap_angle, Point};

/// Opaque lane-segment identifier, unique within one graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SegmentId(pub String);

impl SegmentId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SegmentId {
    fn from(s: &str) -> Self {
        SegmentId(s.to_owned())
    }
}

impl From<String> for SegmentId {
    fn from(s: String) -> Self {
        SegmentId(s)
    }
}

/// Stored per-segment turn direction attribute.
///
/// `None` means the map states the segment is not a turn; maps that do not
/// carry the attribute at all leave `LaneSegment::turn_direction` unset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnDirection {
    None,
    Left,
    Right,
}

/// How two lane segments are connected in the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectivityKind {
    Successor,
    LeftNeighbor,
    RightNeighbor,
    Unconnected,
}

impl ConnectivityKind {
    /// True for the neighbor kinds, i.e. transitions that encode a lane change.
    pub fn is_lane_change(self) -> bool {
        matches!(
            self,
            ConnectivityKind::LeftNeighbor | ConnectivityKind::RightNeighbor
        )
    }
}

/// One atomic stretch of drivable lane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneSegment {
    pub id: SegmentId,
    /// Ordered centerline points in meters; at least 2, no two consecutive
    /// points coincide.
    pub centerline: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_direction: Option<TurnDirection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub successors: Vec<SegmentId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub predecessors: Vec<SegmentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_neighbor: Option<SegmentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_neighbor: Option<SegmentId>,
}

impl LaneSegment {
    /// A segment with the given centerline and no connectivity.
    pub fn new(id: impl Into<SegmentId>, centerline: Vec<Point>) -> Self {
        Self {
            id: id.into(),
            centerline,
            turn_direction: None,
            successors: Vec::new(),
            predecessors: Vec::new(),
            left_neighbor: None,
            right_neighbor: None,
        }
    }

    fn bounding_box(&self) -> Option<(Point, Point)> {
        let first = *self.centerline.first()?;
        let mut min = first;
        let mut max = first;
        for p in &self.centerline[1..] {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Some((min, max))
    }
}

/// Shortest Euclidean distance between a point and a segment's centerline.
pub fn point_to_centerline_distance(p: Point, segment: &LaneSegment) -> f64 {
    let pts = &segment.centerline;
    if pts.is_empty() {
        return f64::INFINITY;
    }
    if pts.len() == 1 {
        return p.distance(pts[0]);
    }
    pts.windows(2)
        .map(|w| point_segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Maximum discrete (Menger) curvature over consecutive centerline triples,
/// in 1/m. Collinear and 2-point centerlines yield 0.
pub fn segment_max_curvature(segment: &LaneSegment) -> f64 {
    segment
        .centerline
        .windows(3)
        .map(|w| menger_curvature(w[0], w[1], w[2]))
        .fold(0.0, f64::max)
}

/// Heading of the last centerline sub-segment minus the heading of the first,
/// wrapped to `(-pi, pi]`. Positive means turning left (counterclockwise).
pub fn segment_orientation_change(segment: &LaneSegment) -> f64 {
    let pts = &segment.centerline;
    if pts.len() < 2 {
        return 0.0;
    }
    let first = heading(pts[0], pts[1]);
    let last = heading(pts[pts.len() - 2], pts[pts.len() - 1]);
    wrap_angle(last - first)
}

/// Malformed query against a [`LaneGraph`].
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown lane segment id `{0}`")]
    UnknownSegment(SegmentId),
}

/// One broken graph invariant found by [`validate_graph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphViolation {
    /// Two segments share an id; the duplicate is unreachable by lookups.
    DuplicateId(SegmentId),
    /// `segment` references `referenced` via `link`, but no such segment exists.
    DanglingId {
        segment: SegmentId,
        referenced: SegmentId,
        link: &'static str,
    },
    /// `to` is a successor of `from` but `from` is missing from `to`'s
    /// predecessors, or vice versa (`detail` says which direction is missing).
    AsymmetricLink {
        from: SegmentId,
        to: SegmentId,
        detail: &'static str,
    },
    /// Centerline has fewer than 2 points, or consecutive points coincide.
    DegenerateCenterline {
        segment: SegmentId,
        reason: &'static str,
    },
}

impl fmt::Display for GraphViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphViolation::DuplicateId(id) => write!(f, "duplicate segment id `{id}`"),
            GraphViolation::DanglingId {
                segment,
                referenced,
                link,
            } => write!(
                f,
                "segment `{segment}` references unknown {link} `{referenced}`"
            ),
            GraphViolation::AsymmetricLink { from, to, detail } => {
                write!(f, "asymmetric link between `{from}` and `{to}`: {detail}")
            }
            GraphViolation::DegenerateCenterline { segment, reason } => {
                write!(f, "degenerate centerline in segment `{segment}`: {reason}")
            }
        }
    }
}

/// Grid-bucket spatial index over centerline bounding boxes.
///
/// The index only prunes candidates; membership of a query result is always
/// decided by the exact point-to-centerline distance, so radius queries are
/// exact, not approximate.
#[derive(Debug, Clone)]
struct SpatialGrid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<u32>>,
}

impl SpatialGrid {
    fn build(segments: &[LaneSegment]) -> Self {
        // Cell size tracks the typical bounding-box extent so buckets stay
        // small for dense urban maps and sparse highway maps alike.
        let mut extent_sum = 0.0;
        let mut n = 0usize;
        for seg in segments {
            if let Some((min, max)) = seg.bounding_box() {
                extent_sum += (max.x - min.x).max(max.y - min.y);
                n += 1;
            }
        }
        let cell = if n == 0 {
            1.0
        } else {
            (extent_sum / n as f64).clamp(4.0, 256.0)
        };

        let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (idx, seg) in segments.iter().enumerate() {
            if let Some((min, max)) = seg.bounding_box() {
                let (x0, y0) = Self::cell_of(min, cell);
                let (x1, y1) = Self::cell_of(max, cell);
                for cx in x0..=x1 {
                    for cy in y0..=y1 {
                        buckets.entry((cx, cy)).or_default().push(idx as u32);
                    }
                }
            }
        }
        Self { cell, buckets }
    }

    fn cell_of(p: Point, cell: f64) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    /// Indices of all segments whose bounding box may intersect the disc of
    /// radius `r` around `p`. Sorted and deduplicated.
    fn candidates(&self, p: Point, r: f64) -> Vec<u32> {
        let (x0, y0) = Self::cell_of(Point::new(p.x - r, p.y - r), self.cell);
        let (x1, y1) = Self::cell_of(Point::new(p.x + r, p.y + r), self.cell);
        let mut out = Vec::new();
        for cx in x0..=x1 {
            for cy in y0..=y1 {
                if let Some(bucket) = self.buckets.get(&(cx, cy)) {
                    out.extend_from_slice(bucket);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Immutable collection of lane segments with id lookup and spatial queries.
#[derive(Debug, Clone)]
pub struct LaneGraph {
    segments: Vec<LaneSegment>,
    by_id: HashMap<SegmentId, usize>,
    grid: SpatialGrid,
}

impl LaneGraph {
    /// Builds the graph and its spatial index. Construction never fails;
    /// run [`validate_graph`] to check the invariants. When ids collide the
    /// first segment wins the id lookup.
    pub fn new(segments: Vec<LaneSegment>) -> Self {
        let mut by_id = HashMap::with_capacity(segments.len());
        for (idx, seg) in segments.iter().enumerate() {
            by_id.entry(seg.id.clone()).or_insert(idx);
        }
        let grid = SpatialGrid::build(&segments);
        Self {
            segments,
            by_id,
            grid,
        }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn get(&self, id: &SegmentId) -> Option<&LaneSegment> {
        self.by_id.get(id).map(|&i| &self.segments[i])
    }

    pub fn contains(&self, id: &SegmentId) -> bool {
        self.by_id.contains_key(id)
    }

    /// All segments, in insertion order.
    pub fn segments(&self) -> &[LaneSegment] {
        &self.segments
    }

    /// All segments whose centerline lies within `radius` of `p`, with their
    /// exact centerline distance. Returned in insertion order; results equal
    /// a linear scan over all segments.
    pub fn segments_within(&self, p: Point, radius: f64) -> Vec<(&LaneSegment, f64)> {
        self.grid
            .candidates(p, radius)
            .into_iter()
            .filter_map(|idx| {
                let seg = &self.segments[idx as usize];
                let d = point_to_centerline_distance(p, seg);
                (d <= radius).then_some((seg, d))
            })
            .collect()
    }

    /// Classifies the connection `from -> to`. If a segment is pathologically
    /// listed both as successor and neighbor, `Successor` wins; a successor
    /// transition carries no lane-change semantics.
    pub fn connectivity(
        &self,
        from: &SegmentId,
        to: &SegmentId,
    ) -> Result<ConnectivityKind, GraphError> {
        let seg = self
            .get(from)
            .ok_or_else(|| GraphError::UnknownSegment(from.clone()))?;
        if !self.contains(to) {
            return Err(GraphError::UnknownSegment(to.clone()));
        }
        if seg.successors.contains(to) {
            Ok(ConnectivityKind::Successor)
        } else if seg.left_neighbor.as_ref() == Some(to) {
            Ok(ConnectivityKind::LeftNeighbor)
        } else if seg.right_neighbor.as_ref() == Some(to) {
            Ok(ConnectivityKind::RightNeighbor)
        } else {
            Ok(ConnectivityKind::Unconnected)
        }
    }
}

/// Checks every graph invariant and returns one record per violation.
/// An empty result means the graph is well-formed.
///
/// Neighbor links are not required to be symmetric; only the
/// predecessor/successor relation is checked for mutual consistency.
pub fn validate_graph(graph: &LaneGraph) -> Vec<GraphViolation> {
    let mut violations = Vec::new();

    for (idx, seg) in graph.segments.iter().enumerate() {
        if graph.by_id.get(&seg.id) != Some(&idx) {
            violations.push(GraphViolation::DuplicateId(seg.id.clone()));
            continue;
        }

        if seg.centerline.len() < 2 {
            violations.push(GraphViolation::DegenerateCenterline {
                segment: seg.id.clone(),
                reason: "fewer than 2 points",
            });
        } else if seg.centerline.windows(2).any(|w| w[0] == w[1]) {
            violations.push(GraphViolation::DegenerateCenterline {
                segment: seg.id.clone(),
                reason: "consecutive points coincide",
            });
        }

        let links = seg
            .successors
            .iter()
            .map(|id| (id, "successor"))
            .chain(seg.predecessors.iter().map(|id| (id, "predecessor")))
            .chain(seg.left_neighbor.iter().map(|id| (id, "left neighbor")))
            .chain(seg.right_neighbor.iter().map(|id| (id, "right neighbor")));
        for (id, link) in links {
            if !graph.contains(id) {
                violations.push(GraphViolation::DanglingId {
                    segment: seg.id.clone(),
                    referenced: id.clone(),
                    link,
                });
            }
        }

        for succ in &seg.successors {
            if let Some(target) = graph.get(succ) {
                if !target.predecessors.contains(&seg.id) {
                    violations.push(GraphViolation::AsymmetricLink {
                        from: seg.id.clone(),
                        to: succ.clone(),
                        detail: "successor link without matching predecessor",
                    });
                }
            }
        }
        for pred in &seg.predecessors {
            if let Some(source) = graph.get(pred) {
                if !source.successors.contains(&seg.id) {
                    violations.push(GraphViolation::AsymmetricLink {
                        from: seg.id.clone(),
                        to: pred.clone(),
                        detail: "predecessor link without matching successor",
                    });
                }
            }
        }
    }

    violations
}
