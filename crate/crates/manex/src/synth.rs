//! Synthetic scene generation.
//!
//! Each recipe builds a small lane graph and drives one agent along it so
//! that the intended maneuver label is known by construction. The generator
//! is deterministic per seed and doubles as the ground-truth oracle for
//! end-to-end extraction tests. Optional isotropic Gaussian noise perturbs
//! the agent positions, never the map.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::ConfigError;
use crate::geom::Point;
use crate::lane_graph::{LaneSegment, TurnDirection};
use crate::maneuver::{LaneChangeManeuver, ManeuverLabel, TurnManeuver};
use crate::scene::{AgentRecord, PredictionEntry, PredictionFile, SceneFile, SCENE_SCHEMA_VERSION};

const SAMPLE_RATE: f64 = 10.0;
const LANE_WIDTH: f64 = 3.5;
/// Arclength margins kept free at both ends of the driven path.
const START_OFFSET: f64 = 1.0;
const END_MARGIN: f64 = 2.0;
/// Every generated scene is at least this long, so the default history +
/// horizon split always fits.
const MIN_TIMESTEPS: usize = 50;

/// The maneuver a generated scene encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Recipe {
    Straight,
    TurnLeft,
    TurnRight,
    ChangeLeft,
    ChangeRight,
    ChangeBoth,
    /// Right lane change on the approach followed by a left turn.
    TurnChange,
}

impl Recipe {
    pub const ALL: [Recipe; 7] = [
        Recipe::Straight,
        Recipe::TurnLeft,
        Recipe::TurnRight,
        Recipe::ChangeLeft,
        Recipe::ChangeRight,
        Recipe::ChangeBoth,
        Recipe::TurnChange,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            Recipe::Straight => "straight",
            Recipe::TurnLeft => "turn-left",
            Recipe::TurnRight => "turn-right",
            Recipe::ChangeLeft => "change-left",
            Recipe::ChangeRight => "change-right",
            Recipe::ChangeBoth => "change-both",
            Recipe::TurnChange => "turn-change",
        }
    }

    /// The label extraction is expected to recover.
    pub fn intended_label(self) -> (TurnManeuver, LaneChangeManeuver) {
        match self {
            Recipe::Straight => (TurnManeuver::GoingStraight, LaneChangeManeuver::FollowingLane),
            Recipe::TurnLeft => (TurnManeuver::TurningLeft, LaneChangeManeuver::FollowingLane),
            Recipe::TurnRight => (TurnManeuver::TurningRight, LaneChangeManeuver::FollowingLane),
            Recipe::ChangeLeft => (
                TurnManeuver::GoingStraight,
                LaneChangeManeuver::ChangingLaneLeft,
            ),
            Recipe::ChangeRight => (
                TurnManeuver::GoingStraight,
                LaneChangeManeuver::ChangingLaneRight,
            ),
            Recipe::ChangeBoth => (TurnManeuver::GoingStraight, LaneChangeManeuver::Both),
            Recipe::TurnChange => (
                TurnManeuver::TurningLeft,
                LaneChangeManeuver::ChangingLaneRight,
            ),
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for Recipe {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Recipe::ALL
            .into_iter()
            .find(|r| r.slug() == s)
            .ok_or_else(|| {
                ConfigError(format!(
                    "unknown recipe `{s}` (expected one of: {})",
                    Recipe::ALL.map(|r| r.slug()).join(", ")
                ))
            })
    }
}

/// Parameters for one generated scene.
#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub recipe: Recipe,
    pub seed: u64,
    /// Standard deviation of isotropic position noise, meters.
    pub noise_sigma: f64,
}

/// Generates one scene together with its intended maneuver label.
pub fn synth_scene(opts: &SynthOptions) -> (SceneFile, ManeuverLabel) {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let build = match opts.recipe {
        Recipe::Straight => build_straight(&mut rng),
        Recipe::TurnLeft => build_turn(&mut rng, true),
        Recipe::TurnRight => build_turn(&mut rng, false),
        Recipe::ChangeLeft => build_change(&mut rng, true),
        Recipe::ChangeRight => build_change(&mut rng, false),
        Recipe::ChangeBoth => build_change_both(&mut rng),
        Recipe::TurnChange => build_turn_change(&mut rng),
    };

    let mut positions = build.positions;
    if opts.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, opts.noise_sigma).expect("valid sigma");
        for p in &mut positions {
            p.x += normal.sample(&mut rng);
            p.y += normal.sample(&mut rng);
        }
    }

    let (turn, lane_change) = opts.recipe.intended_label();
    let label = ManeuverLabel {
        turn,
        lane_change,
        source_sequence_confidence: 1.0,
    };

    let scene = SceneFile {
        schema_version: SCENE_SCHEMA_VERSION,
        scene_id: format!("{}-{:08}", opts.recipe.slug(), opts.seed),
        sample_rate_hz: SAMPLE_RATE,
        targets: vec!["agent-0".into()],
        timesteps: None,
        agents: vec![AgentRecord {
            id: "agent-0".into(),
            first_timestep: None,
            positions,
        }],
        lanes: build.lanes,
    };
    (scene, label)
}

/// Mirror image of a scene about the x-axis: y coordinates negate,
/// left/right neighbor links and stored turn directions swap. Extraction on
/// the mirrored scene yields the mirrored labels.
pub fn mirror_scene(scene: &SceneFile) -> SceneFile {
    let mut out = scene.clone();
    out.scene_id = format!("{}-mirror", scene.scene_id);
    for agent in &mut out.agents {
        for p in &mut agent.positions {
            p.y = -p.y;
        }
    }
    for lane in &mut out.lanes {
        for p in &mut lane.centerline {
            p.y = -p.y;
        }
        std::mem::swap(&mut lane.left_neighbor, &mut lane.right_neighbor);
        lane.turn_direction = lane.turn_direction.map(|d| match d {
            TurnDirection::Left => TurnDirection::Right,
            TurnDirection::Right => TurnDirection::Left,
            TurnDirection::None => TurnDirection::None,
        });
    }
    out
}

/// Synthetic multi-modal predictions for the targets of the given scenes:
/// each mode is the ground-truth future shifted by a per-mode offset.
pub fn synth_predictions(
    scenes: &[SceneFile],
    obs_steps: usize,
    pred_steps: usize,
    modes: usize,
    seed: u64,
) -> Result<PredictionFile, ConfigError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for scene in scenes {
        for target in &scene.targets {
            let traj = scene
                .trajectory(target)
                .ok_or_else(|| ConfigError(format!("target `{target}` missing")))?;
            let needed = obs_steps + pred_steps;
            if traj.len() < needed {
                return Err(ConfigError(format!(
                    "scene `{}` agent `{target}`: {} timesteps, need {needed} for predictions",
                    scene.scene_id,
                    traj.len()
                )));
            }
            let future = &traj.positions[obs_steps..needed];
            let horizon = future.len();
            let mode_tracks = (0..modes)
                .map(|m| {
                    let radius = (0.25 + 0.2 * m as f64) * rng.random_range(0.75..1.25);
                    let angle = rng.random_range(0.0..std::f64::consts::TAU);
                    let offset = Point::new(radius * angle.cos(), radius * angle.sin());
                    // Displacement grows along the horizon, so endpoint
                    // errors exceed the average error.
                    future
                        .iter()
                        .enumerate()
                        .map(|(h, &p)| {
                            let grow = if horizon > 1 {
                                0.4 + 0.6 * h as f64 / (horizon - 1) as f64
                            } else {
                                1.0
                            };
                            p + offset * grow
                        })
                        .collect()
                })
                .collect();
            entries.push(PredictionEntry {
                scene_id: scene.scene_id.clone(),
                agent_id: target.clone(),
                modes: mode_tracks,
            });
        }
    }
    Ok(PredictionFile::new(entries))
}

struct SceneBuild {
    lanes: Vec<LaneSegment>,
    positions: Vec<Point>,
}

fn link_successor(lanes: &mut [LaneSegment], from: usize, to: usize) {
    let to_id = lanes[to].id.clone();
    let from_id = lanes[from].id.clone();
    lanes[from].successors.push(to_id);
    lanes[to].predecessors.push(from_id);
}

/// Marks `left` as the left neighbor of `right` and vice versa.
fn link_neighbors(lanes: &mut [LaneSegment], left: usize, right: usize) {
    let left_id = lanes[left].id.clone();
    let right_id = lanes[right].id.clone();
    lanes[right].left_neighbor = Some(left_id);
    lanes[left].right_neighbor = Some(right_id);
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// Quarter-circle polyline entering at `start` heading +x, turning left or
/// right with the given radius.
fn quarter_arc(start: Point, radius: f64, left: bool, points: usize) -> Vec<Point> {
    (0..points)
        .map(|i| {
            let phi = FRAC_PI_2 * i as f64 / (points - 1) as f64;
            let dy = radius * (1.0 - phi.cos());
            Point::new(
                start.x + radius * phi.sin(),
                start.y + if left { dy } else { -dy },
            )
        })
        .collect()
}

/// Walks `path` by arclength: `count` samples starting `start` meters in,
/// advancing `step` meters per sample. Clamps at the end of the path.
fn resample_by_arclength(path: &[Point], start: f64, step: f64, count: usize) -> Vec<Point> {
    let mut cumulative = Vec::with_capacity(path.len());
    cumulative.push(0.0);
    for w in path.windows(2) {
        cumulative.push(cumulative.last().unwrap() + w[0].distance(w[1]));
    }
    let total = *cumulative.last().unwrap();

    (0..count)
        .map(|i| {
            let s = (start + i as f64 * step).min(total);
            let j = cumulative.partition_point(|&c| c <= s);
            if j >= cumulative.len() {
                return *path.last().unwrap();
            }
            let span = cumulative[j] - cumulative[j - 1];
            let t = if span > 0.0 {
                (s - cumulative[j - 1]) / span
            } else {
                0.0
            };
            path[j - 1] + (path[j] - path[j - 1]) * t
        })
        .collect()
}

/// Appends `tail` to `path`, skipping the shared joint point.
fn extend_path(path: &mut Vec<Point>, tail: &[Point]) {
    let skip = usize::from(path.last() == tail.first());
    path.extend_from_slice(&tail[skip..]);
}

/// Two-lane straight road, each lane split into two successor-linked
/// segments; the agent follows the main lane.
fn build_straight(rng: &mut ChaCha8Rng) -> SceneBuild {
    let speed = rng.random_range(6.0..11.0);
    let timesteps = rng.random_range(MIN_TIMESTEPS..=70);
    let travel = speed * (timesteps - 1) as f64 / SAMPLE_RATE;
    let x0 = -2.0;
    let x1 = travel + 3.0;
    let split = (x0 + x1) / 2.0;
    let side_is_left = rng.random_range(0..2) == 0;
    let side_y = if side_is_left { LANE_WIDTH } else { -LANE_WIDTH };

    let mut lanes = vec![
        LaneSegment::new("main-0", vec![Point::new(x0, 0.0), Point::new(split, 0.0)]),
        LaneSegment::new("main-1", vec![Point::new(split, 0.0), Point::new(x1, 0.0)]),
        LaneSegment::new(
            "side-0",
            vec![Point::new(x0, side_y), Point::new(split, side_y)],
        ),
        LaneSegment::new(
            "side-1",
            vec![Point::new(split, side_y), Point::new(x1, side_y)],
        ),
    ];
    link_successor(&mut lanes, 0, 1);
    link_successor(&mut lanes, 2, 3);
    for (main, side) in [(0, 2), (1, 3)] {
        if side_is_left {
            link_neighbors(&mut lanes, side, main);
        } else {
            link_neighbors(&mut lanes, main, side);
        }
    }

    let positions = (0..timesteps)
        .map(|t| Point::new(speed * t as f64 / SAMPLE_RATE, 0.0))
        .collect();
    SceneBuild { lanes, positions }
}

/// Single lane change between two parallel lanes.
fn build_change(rng: &mut ChaCha8Rng, to_left: bool) -> SceneBuild {
    let speed = rng.random_range(6.0..11.0);
    let timesteps = rng.random_range(MIN_TIMESTEPS..=70);
    let change_start = rng.random_range(timesteps / 5..=timesteps * 3 / 10);
    let change_steps = rng.random_range(15..=25.min(timesteps / 2));
    let target_y = if to_left { LANE_WIDTH } else { -LANE_WIDTH };

    let travel = speed * (timesteps - 1) as f64 / SAMPLE_RATE;
    let x0 = -2.0;
    let x1 = travel + 3.0;
    let mut lanes = vec![
        LaneSegment::new("origin", vec![Point::new(x0, 0.0), Point::new(x1, 0.0)]),
        LaneSegment::new(
            "target",
            vec![Point::new(x0, target_y), Point::new(x1, target_y)],
        ),
    ];
    if to_left {
        link_neighbors(&mut lanes, 1, 0);
    } else {
        link_neighbors(&mut lanes, 0, 1);
    }

    let positions = (0..timesteps)
        .map(|t| {
            let u = (t as f64 - change_start as f64) / change_steps as f64;
            Point::new(
                speed * t as f64 / SAMPLE_RATE,
                target_y * smoothstep(u),
            )
        })
        .collect();
    SceneBuild { lanes, positions }
}

/// Lane change out and back: two neighbor transitions in opposite
/// directions.
fn build_change_both(rng: &mut ChaCha8Rng) -> SceneBuild {
    let speed = rng.random_range(6.0..10.0);
    let timesteps = rng.random_range(60..=78);
    let out_start = rng.random_range(timesteps / 10..=timesteps / 6);
    let out_steps = rng.random_range(12..=18);
    let back_start = rng.random_range(timesteps / 2..=timesteps * 11 / 20);
    let back_steps = rng.random_range(12..=18);
    let to_left = rng.random_range(0..2) == 0;
    let side_y = if to_left { LANE_WIDTH } else { -LANE_WIDTH };

    let travel = speed * (timesteps - 1) as f64 / SAMPLE_RATE;
    let x0 = -2.0;
    let x1 = travel + 3.0;
    let mut lanes = vec![
        LaneSegment::new("origin", vec![Point::new(x0, 0.0), Point::new(x1, 0.0)]),
        LaneSegment::new(
            "side",
            vec![Point::new(x0, side_y), Point::new(x1, side_y)],
        ),
    ];
    if to_left {
        link_neighbors(&mut lanes, 1, 0);
    } else {
        link_neighbors(&mut lanes, 0, 1);
    }

    let positions = (0..timesteps)
        .map(|t| {
            let out = smoothstep((t as f64 - out_start as f64) / out_steps as f64);
            let back = smoothstep((t as f64 - back_start as f64) / back_steps as f64);
            Point::new(speed * t as f64 / SAMPLE_RATE, side_y * (out - back))
        })
        .collect();
    SceneBuild { lanes, positions }
}

/// Approach, quarter-circle turn and exit, plus a straight-through
/// continuation the agent does not take. Turn directions are left for the
/// geometry to prove; no segment carries the attribute.
fn build_turn(rng: &mut ChaCha8Rng, left: bool) -> SceneBuild {
    let speed = rng.random_range(5.5..9.5);
    let radius = rng.random_range(9.0..13.0);
    let approach_len = rng.random_range(10.0..18.0);
    let through_len = rng.random_range(8.0..15.0);
    let arc_len = FRAC_PI_2 * radius;
    let mut exit_len = rng.random_range(18.0..30.0);

    let steps_for = |exit: f64| {
        ((approach_len + arc_len + exit - START_OFFSET - END_MARGIN) * SAMPLE_RATE / speed) as usize
            + 1
    };
    if steps_for(exit_len) < MIN_TIMESTEPS {
        exit_len += (MIN_TIMESTEPS - steps_for(exit_len)) as f64 * speed / SAMPLE_RATE + 0.5;
    }
    let timesteps = steps_for(exit_len);

    let arc_start = Point::new(0.0, 0.0);
    let arc = quarter_arc(arc_start, radius, left, 13);
    let arc_end = *arc.last().unwrap();
    let exit_dir = if left { 1.0 } else { -1.0 };
    let exit_end = Point::new(arc_end.x, arc_end.y + exit_dir * exit_len);

    let mut lanes = vec![
        LaneSegment::new(
            "approach",
            vec![Point::new(-approach_len, 0.0), arc_start],
        ),
        LaneSegment::new("turn", arc.clone()),
        LaneSegment::new("exit", vec![arc_end, exit_end]),
        LaneSegment::new(
            "through",
            vec![arc_start, Point::new(through_len, 0.0)],
        ),
    ];
    link_successor(&mut lanes, 0, 1);
    link_successor(&mut lanes, 1, 2);
    link_successor(&mut lanes, 0, 3);

    let mut path = vec![Point::new(-approach_len, 0.0), arc_start];
    extend_path(&mut path, &arc);
    extend_path(&mut path, &[arc_end, exit_end]);
    let positions = resample_by_arclength(&path, START_OFFSET, speed / SAMPLE_RATE, timesteps);
    SceneBuild { lanes, positions }
}

/// Right lane change on a two-lane approach, then a left turn from the
/// right lane: a composite maneuver.
fn build_turn_change(rng: &mut ChaCha8Rng) -> SceneBuild {
    let speed = rng.random_range(5.5..8.5);
    let radius = rng.random_range(9.0..13.0);
    let blend_start_x = rng.random_range(4.0..7.0);
    let blend_len = rng.random_range(10.0..16.0);
    let approach_len = blend_start_x + blend_len + rng.random_range(5.0..9.0);
    let through_len = rng.random_range(8.0..15.0);
    let arc_len = FRAC_PI_2 * radius;
    let mut exit_len = rng.random_range(14.0..24.0);

    // The lateral blend lengthens the driven path a little beyond this
    // estimate, which only widens the end margin.
    let steps_for = |exit: f64| {
        ((approach_len + arc_len + exit - START_OFFSET - END_MARGIN) * SAMPLE_RATE / speed) as usize
            + 1
    };
    if steps_for(exit_len) < MIN_TIMESTEPS {
        exit_len += (MIN_TIMESTEPS - steps_for(exit_len)) as f64 * speed / SAMPLE_RATE + 0.5;
    }
    let timesteps = steps_for(exit_len);

    let right_y = -LANE_WIDTH;
    let arc_start = Point::new(approach_len, right_y);
    let arc = quarter_arc(arc_start, radius, true, 13);
    let arc_end = *arc.last().unwrap();
    let exit_end = Point::new(arc_end.x, arc_end.y + exit_len);

    let mut lanes = vec![
        LaneSegment::new(
            "approach-left",
            vec![Point::new(-2.0, 0.0), Point::new(approach_len, 0.0)],
        ),
        LaneSegment::new(
            "approach-right",
            vec![Point::new(-2.0, right_y), arc_start],
        ),
        LaneSegment::new("turn", arc.clone()),
        LaneSegment::new("exit", vec![arc_end, exit_end]),
        LaneSegment::new(
            "through",
            vec![
                Point::new(approach_len, 0.0),
                Point::new(approach_len + through_len, 0.0),
            ],
        ),
    ];
    link_neighbors(&mut lanes, 0, 1);
    link_successor(&mut lanes, 1, 2);
    link_successor(&mut lanes, 2, 3);
    link_successor(&mut lanes, 0, 4);

    // Driven path: blend from the left to the right lane, ride it to the
    // intersection, turn left, exit.
    let mut path: Vec<Point> = Vec::new();
    let blend_samples = (approach_len / 0.5).ceil() as usize;
    for i in 0..=blend_samples {
        let x = approach_len * i as f64 / blend_samples as f64;
        let u = (x - blend_start_x) / blend_len;
        path.push(Point::new(x, right_y * smoothstep(u)));
    }
    extend_path(&mut path, &arc);
    extend_path(&mut path, &[arc_end, exit_end]);
    let positions = resample_by_arclength(&path, START_OFFSET, speed / SAMPLE_RATE, timesteps);
    SceneBuild { lanes, positions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lane_graph::validate_graph;

    #[test]
    fn every_recipe_yields_a_valid_scene() {
        for recipe in Recipe::ALL {
            for seed in 0..5 {
                let (scene, _) = synth_scene(&SynthOptions {
                    recipe,
                    seed,
                    noise_sigma: 0.0,
                });
                let problems = scene.validate();
                assert!(problems.is_empty(), "{recipe}: {problems:?}");
                assert!(validate_graph(&scene.graph()).is_empty(), "{recipe}");
                assert!(
                    scene.agents[0].positions.len() >= MIN_TIMESTEPS,
                    "{recipe}: {} steps",
                    scene.agents[0].positions.len()
                );
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let opts = SynthOptions {
            recipe: Recipe::Straight,
            seed: 42,
            noise_sigma: 0.0,
        };
        let (a, _) = synth_scene(&opts);
        let (b, _) = synth_scene(&opts);
        assert_eq!(a.to_json_pretty(), b.to_json_pretty());

        let noisy = SynthOptions {
            recipe: Recipe::ChangeLeft,
            seed: 7,
            noise_sigma: 0.2,
        };
        let (a, _) = synth_scene(&noisy);
        let (b, _) = synth_scene(&noisy);
        assert_eq!(a.to_json_pretty(), b.to_json_pretty());
    }

    #[test]
    fn different_seeds_differ() {
        let (a, _) = synth_scene(&SynthOptions {
            recipe: Recipe::TurnLeft,
            seed: 0,
            noise_sigma: 0.0,
        });
        let (b, _) = synth_scene(&SynthOptions {
            recipe: Recipe::TurnLeft,
            seed: 1,
            noise_sigma: 0.0,
        });
        assert_ne!(a.agents[0].positions, b.agents[0].positions);
    }

    #[test]
    fn recipe_parsing() {
        assert_eq!("turn-left".parse::<Recipe>().unwrap(), Recipe::TurnLeft);
        assert!("u-turn".parse::<Recipe>().is_err());
    }

    #[test]
    fn mirroring_swaps_links_and_negates_y() {
        let (scene, _) = synth_scene(&SynthOptions {
            recipe: Recipe::ChangeLeft,
            seed: 3,
            noise_sigma: 0.0,
        });
        let mirrored = mirror_scene(&scene);
        assert!(validate_graph(&mirrored.graph()).is_empty());
        let origin = scene.lanes.iter().find(|l| l.id.as_str() == "origin").unwrap();
        let mirrored_origin = mirrored
            .lanes
            .iter()
            .find(|l| l.id.as_str() == "origin")
            .unwrap();
        assert_eq!(origin.left_neighbor, mirrored_origin.right_neighbor);
        assert_eq!(origin.right_neighbor, mirrored_origin.left_neighbor);
        assert_eq!(
            scene.agents[0].positions[10].y,
            -mirrored.agents[0].positions[10].y
        );
    }

    #[test]
    fn predictions_reference_targets_and_horizon() {
        let (scene, _) = synth_scene(&SynthOptions {
            recipe: Recipe::Straight,
            seed: 0,
            noise_sigma: 0.0,
        });
        let file = synth_predictions(&[scene.clone()], 20, 30, 6, 99).unwrap();
        assert_eq!(file.predictions.len(), 1);
        let entry = &file.predictions[0];
        assert_eq!(entry.scene_id, scene.scene_id);
        assert_eq!(entry.modes.len(), 6);
        assert!(entry.modes.iter().all(|m| m.len() == 30));

        // Not enough timesteps for the requested split.
        assert!(synth_predictions(&[scene], 60, 30, 6, 99).is_err());
    }
}
