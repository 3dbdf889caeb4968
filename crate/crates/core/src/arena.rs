//! Walled rectangular arena and a circular differential-drive robot.
//!
//! Coordinates are metres with the origin at the arena's lower-left corner;
//! headings are radians measured counter-clockwise from +x.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Angular speeds below this are integrated as straight lines.
pub const STRAIGHT_LINE_OMEGA: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallSegment {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl WallSegment {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn length(&self) -> f64 {
        (self.x2 - self.x1).hypot(self.y2 - self.y1)
    }

    /// Euclidean distance from `(px, py)` to the closest point of the segment.
    pub fn distance_to(&self, px: f64, py: f64) -> f64 {
        let (dx, dy) = (self.x2 - self.x1, self.y2 - self.y1);
        let len2 = dx * dx + dy * dy;
        let t = (((px - self.x1) * dx + (py - self.y1) * dy) / len2).clamp(0.0, 1.0);
        (px - (self.x1 + t * dx)).hypot(py - (self.y1 + t * dy))
    }

    /// Ray parameter of the intersection of `origin + t·(cos a, sin a)` with
    /// this segment, if any with `t > 0`.
    fn ray_hit(&self, ox: f64, oy: f64, dir_x: f64, dir_y: f64) -> Option<f64> {
        let (ex, ey) = (self.x2 - self.x1, self.y2 - self.y1);
        let denom = dir_x * ey - dir_y * ex;
        if denom.abs() < 1e-15 {
            // Parallel (including collinear): a collinear wall is always
            // fronted by another wall it connects to, so ignoring it is safe.
            return None;
        }
        let (wx, wy) = (self.x1 - ox, self.y1 - oy);
        let t = (wx * ey - wy * ex) / denom;
        let s = (wx * dir_y - wy * dir_x) / denom;
        (t > 0.0 && (0.0..=1.0).contains(&s)).then_some(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArenaSpec {
    pub width: f64,
    pub height: f64,
    pub extra_walls: Vec<WallSegment>,
}

impl Default for ArenaSpec {
    fn default() -> Self {
        Self {
            width: 1.0,
            height: 1.0,
            extra_walls: Vec::new(),
        }
    }
}

impl ArenaSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::config("arena.width", "must be a positive number"));
        }
        if !(self.height.is_finite() && self.height > 0.0) {
            return Err(Error::config("arena.height", "must be a positive number"));
        }
        for (i, w) in self.extra_walls.iter().enumerate() {
            let field = format!("arena.extra_walls[{i}]");
            if w.length() <= 0.0 || w.length().is_nan() {
                return Err(Error::config(field, "wall segment has zero length"));
            }
            let inside = |x: f64, y: f64| {
                (0.0..=self.width).contains(&x) && (0.0..=self.height).contains(&y)
            };
            if !inside(w.x1, w.y1) || !inside(w.x2, w.y2) {
                return Err(Error::config(field, "wall segment leaves the arena"));
            }
        }
        Ok(())
    }

    pub fn contains_strictly(&self, x: f64, y: f64) -> bool {
        x > 0.0 && x < self.width && y > 0.0 && y < self.height
    }
}

/// Immutable arena geometry shared by all evaluators.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub arena: ArenaSpec,
    /// The four boundary edges followed by `arena.extra_walls`.
    pub walls: Vec<WallSegment>,
}

impl World {
    pub fn boundary(&self) -> &[WallSegment] {
        &self.walls[..4]
    }
}

/// Builds the wall list: the rectangle (0,0)-(w,0)-(w,h)-(0,h), then extras
/// in input order.
pub fn build_world(arena: ArenaSpec) -> Result<World> {
    arena.validate()?;
    let (w, h) = (arena.width, arena.height);
    let mut walls = vec![
        WallSegment::new(0.0, 0.0, w, 0.0),
        WallSegment::new(w, 0.0, w, h),
        WallSegment::new(w, h, 0.0, h),
        WallSegment::new(0.0, h, 0.0, 0.0),
    ];
    walls.extend_from_slice(&arena.extra_walls);
    Ok(World { arena, walls })
}

/// Wraps an angle into `[-π, π)`. Angles already in range are returned unchanged.
pub fn wrap_angle(theta: f64) -> f64 {
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    let mut wrapped = (theta + PI).rem_euclid(TAU) - PI;
    if wrapped >= PI {
        wrapped -= TAU;
    }
    if wrapped < -PI {
        wrapped = -PI;
    }
    wrapped
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: wrap_angle(heading),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotSpec {
    pub body_radius: f64,
    pub axle_track: f64,
    pub max_wheel_speed: f64,
}

impl Default for RobotSpec {
    /// Khepera-scale body.
    fn default() -> Self {
        Self {
            body_radius: 0.0275,
            axle_track: 0.053,
            max_wheel_speed: 0.08,
        }
    }
}

impl RobotSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("robot.body_radius", self.body_radius),
            ("robot.axle_track", self.axle_track),
            ("robot.max_wheel_speed", self.max_wheel_speed),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, "must be a positive number"));
            }
        }
        if self.axle_track > 2.0 * self.body_radius {
            return Err(Error::config(
                "robot.axle_track",
                "must not exceed the body diameter",
            ));
        }
        Ok(())
    }
}

/// Distance along the ray from `origin` at `angle` to the nearest wall.
pub fn cast_ray(world: &World, origin: (f64, f64), angle: f64) -> Result<f64> {
    let (ox, oy) = origin;
    if !world.arena.contains_strictly(ox, oy) {
        return Err(Error::Domain(format!(
            "ray origin ({ox}, {oy}) is not strictly inside the arena"
        )));
    }
    let (dir_y, dir_x) = angle.sin_cos();
    world
        .walls
        .iter()
        .filter_map(|w| w.ray_hit(ox, oy, dir_x, dir_y))
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::Domain(format!("ray at angle {angle} hit no wall")))
}

/// Advances a differential-drive pose by exact arc integration over `dt`.
pub fn step_kinematics(
    pose: Pose,
    v_left: f64,
    v_right: f64,
    dt: f64,
    spec: &RobotSpec,
) -> Result<Pose> {
    if v_left.abs() > spec.max_wheel_speed || v_right.abs() > spec.max_wheel_speed {
        return Err(Error::Domain(format!(
            "wheel speeds ({v_left}, {v_right}) exceed limit {}",
            spec.max_wheel_speed
        )));
    }
    if dt <= 0.0 || dt.is_nan() {
        return Err(Error::Domain(format!("time step {dt} must be positive")));
    }
    let v = 0.5 * (v_left + v_right);
    let omega = (v_right - v_left) / spec.axle_track;
    if omega.abs() < STRAIGHT_LINE_OMEGA {
        let (s, c) = pose.heading.sin_cos();
        return Ok(Pose {
            x: pose.x + v * c * dt,
            y: pose.y + v * s * dt,
            heading: wrap_angle(pose.heading),
        });
    }
    let radius = v / omega;
    let turned = pose.heading + omega * dt;
    let (s0, c0) = pose.heading.sin_cos();
    let (s1, c1) = turned.sin_cos();
    Ok(Pose {
        x: pose.x + radius * (s1 - s0),
        y: pose.y - radius * (c1 - c0),
        heading: wrap_angle(turned),
    })
}

/// Gap between the robot body and the nearest wall; negative when penetrating.
pub fn clearance(world: &World, pose: &Pose, spec: &RobotSpec) -> f64 {
    world
        .walls
        .iter()
        .map(|w| w.distance_to(pose.x, pose.y))
        .fold(f64::INFINITY, f64::min)
        - spec.body_radius
}

/// The body touches or penetrates a wall.
pub fn detect_collision(world: &World, pose: &Pose, spec: &RobotSpec) -> bool {
    clearance(world, pose, spec) <= 0.0
}
