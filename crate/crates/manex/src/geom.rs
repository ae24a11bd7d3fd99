//! Planar geometry primitives shared by the lane-graph and matching code.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// A 2-D point in meters. Doubles as a plain vector where convenient.
///
/// Serialized as a `[x, y]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product, treating both points as vectors.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Self { x: p[0], y: p[1] }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Distance from `p` to the line segment `a`-`b`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let dir = b - a;
    let len2 = dir.dot(dir);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(dir) / len2).clamp(0.0, 1.0);
    p.distance(a + dir * t)
}

/// Menger curvature of the point triple `(a, b, c)`:
/// `4 * Area(a,b,c) / (|ab| * |bc| * |ac|)`.
///
/// For points sampled on a circle of radius `r` this is exactly `1 / r`.
/// Degenerate triples (collinear points or a zero side length) yield 0.
pub fn menger_curvature(a: Point, b: Point, c: Point) -> f64 {
    let twice_area = (b - a).cross(c - a).abs();
    let denom = a.distance(b) * b.distance(c) * a.distance(c);
    if denom == 0.0 {
        0.0
    } else {
        2.0 * twice_area / denom
    }
}

/// Heading of the vector `a -> b` in radians, counterclockwise from +x.
pub fn heading(a: Point, b: Point) -> f64 {
    (b.y - a.y).atan2(b.x - a.x)
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle % TAU;
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    a
}
