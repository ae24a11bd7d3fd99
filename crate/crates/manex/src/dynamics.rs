//! Per-agent dynamic properties and dataset-level histograms.
//!
//! Velocity and acceleration are derived from finite differences of the raw
//! positions: that is the only choice that works for datasets which ship
//! positions only. Acceleration is the signed longitudinal (speed-change)
//! quantity, so braking comes out negative.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{validate_edges, ConfigError};
use crate::lane_graph::{segment_max_curvature, LaneGraph};
use crate::matching::{AgentId, Trajectory};
use crate::sequence::LaneSequence;

/// Dynamic properties of one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSummary {
    pub agent_id: AgentId,
    /// Mean speed over the trajectory, m/s.
    pub avg_velocity: f64,
    /// Mean signed speed change, m/s^2.
    pub avg_acceleration: f64,
    /// Maximum centerline curvature over the driven lane sequence, 1/m.
    /// Absent when no lane sequence was found for the agent.
    pub max_driven_curvature: Option<f64>,
}

/// The trajectory is too short for the requested quantity.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("trajectory needs at least {needed} positions, got {got}")]
pub struct TooShort {
    pub needed: usize,
    pub got: usize,
}

fn speeds(traj: &Trajectory) -> impl Iterator<Item = f64> + '_ {
    traj.positions
        .windows(2)
        .map(|w| w[0].distance(w[1]) * traj.sample_rate)
}

/// Mean speed over all consecutive position pairs, m/s.
pub fn average_velocity(traj: &Trajectory) -> Result<f64, TooShort> {
    let n = traj.positions.len();
    if n < 2 {
        return Err(TooShort { needed: 2, got: n });
    }
    Ok(speeds(traj).sum::<f64>() / (n - 1) as f64)
}

/// Mean signed speed change, m/s^2. Negative while braking.
pub fn average_acceleration(traj: &Trajectory) -> Result<f64, TooShort> {
    let n = traj.positions.len();
    if n < 3 {
        return Err(TooShort { needed: 3, got: n });
    }
    let v: Vec<f64> = speeds(traj).collect();
    let sum: f64 = v.windows(2).map(|w| (w[1] - w[0]) * traj.sample_rate).sum();
    Ok(sum / (n - 2) as f64)
}

/// Maximum centerline curvature over the segments of a lane sequence, 1/m.
pub fn max_driven_curvature(seq: &LaneSequence, graph: &LaneGraph) -> f64 {
    seq.segment_ids()
        .filter_map(|id| graph.get(id))
        .map(segment_max_curvature)
        .fold(0.0, f64::max)
}

/// Fixed-bin histogram with explicit out-of-range counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin boundaries; `counts.len() == edges.len() - 1`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

/// Where a value lands relative to a set of bin edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinSlot {
    Underflow,
    Bin(usize),
    Overflow,
}

/// Bin lookup with left-closed right-open bins `[e_i, e_{i+1})`; the final
/// bin is closed on both sides.
pub fn bin_slot(value: f64, edges: &[f64]) -> BinSlot {
    let last = edges.len() - 1;
    if value < edges[0] {
        return BinSlot::Underflow;
    }
    if value > edges[last] {
        return BinSlot::Overflow;
    }
    if value == edges[last] {
        return BinSlot::Bin(last - 1);
    }
    // edges[0] <= value < edges[last]
    let mut i = 0;
    while value >= edges[i + 1] {
        i += 1;
    }
    BinSlot::Bin(i)
}

/// Builds a histogram over `samples` with the given bin boundaries.
pub fn build_histogram(samples: &[f64], edges: &[f64]) -> Result<Histogram, ConfigError> {
    validate_edges("histogram", edges)?;
    let mut hist = Histogram {
        edges: edges.to_vec(),
        counts: vec![0; edges.len() - 1],
        underflow: 0,
        overflow: 0,
    };
    for &s in samples {
        match bin_slot(s, edges) {
            BinSlot::Underflow => hist.underflow += 1,
            BinSlot::Overflow => hist.overflow += 1,
            BinSlot::Bin(i) => hist.counts[i] += 1,
        }
    }
    Ok(hist)
}
