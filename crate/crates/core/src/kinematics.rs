//! Kinematic bicycle model, road-frame projection and oriented-rectangle geometry.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Continuous kinematic state of one vehicle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Position [m].
    pub x: f64,
    /// Position [m].
    pub y: f64,
    /// Heading [rad].
    pub theta: f64,
    /// Steering angle [rad].
    pub delta: f64,
    /// Longitudinal speed [m/s].
    pub v: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, theta: f64, delta: f64, v: f64) -> Self {
        Self { x, y, theta, delta, v }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.theta.is_finite()
            && self.delta.is_finite()
            && self.v.is_finite()
    }
}

/// Longitudinal acceleration and steering rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    /// [m/s²]
    pub a: f64,
    /// [rad/s]
    pub omega: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput { a: 0.0, omega: 0.0 };

    pub fn new(a: f64, omega: f64) -> Self {
        Self { a, omega }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.omega.is_finite()
    }
}

/// Heading of the lane axis an agent drives along.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadFrame {
    pub theta_road: f64,
}

impl RoadFrame {
    pub fn new(theta_road: f64) -> Self {
        Self { theta_road }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleGeometry {
    pub length: f64,
    pub width: f64,
    pub wheelbase: f64,
}

impl Default for VehicleGeometry {
    fn default() -> Self {
        Self { length: 4.85, width: 1.9, wheelbase: 2.7 }
    }
}

/// Actuation limits applied by every kinematic update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KinematicBounds {
    pub delta_max: f64,
    pub a_max: f64,
    pub omega_max: f64,
}

impl Default for KinematicBounds {
    fn default() -> Self {
        Self { delta_max: 0.6, a_max: 6.0, omega_max: 0.5 }
    }
}

impl KinematicBounds {
    pub fn clamp_control(&self, u: ControlInput) -> ControlInput {
        ControlInput {
            a: u.a.clamp(-self.a_max, self.a_max),
            omega: u.omega.clamp(-self.omega_max, self.omega_max),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("non-finite kinematic input: {0}")]
    NonFinite(&'static str),
}

/// Forward-Euler bicycle update without input validation.
///
/// Right-hand sides use the old state. Controls are clamped to `bounds`,
/// the new steering angle to `±delta_max`, and speed at zero.
#[inline]
pub fn advance(
    s: &VehicleState,
    u: ControlInput,
    dt: f64,
    wheelbase: f64,
    bounds: &KinematicBounds,
) -> VehicleState {
    let u = bounds.clamp_control(u);
    let (sin_t, cos_t) = s.theta.sin_cos();
    let yaw_rate = if s.delta == 0.0 { 0.0 } else { s.v / wheelbase * s.delta.tan() };
    VehicleState {
        x: s.x + s.v * cos_t * dt,
        y: s.y + s.v * sin_t * dt,
        theta: s.theta + yaw_rate * dt,
        delta: (s.delta + u.omega * dt).clamp(-bounds.delta_max, bounds.delta_max),
        v: (s.v + u.a * dt).max(0.0),
    }
}

/// Advances `state` by one forward-Euler bicycle step of length `dt`.
pub fn step_bicycle(
    state: &VehicleState,
    input: ControlInput,
    dt: f64,
    geom: &VehicleGeometry,
) -> Result<VehicleState, KinematicsError> {
    step_bicycle_bounded(state, input, dt, geom, &KinematicBounds::default())
}

pub fn step_bicycle_bounded(
    state: &VehicleState,
    input: ControlInput,
    dt: f64,
    geom: &VehicleGeometry,
    bounds: &KinematicBounds,
) -> Result<VehicleState, KinematicsError> {
    if !dt.is_finite() {
        return Err(KinematicsError::NonFinite("dt"));
    }
    if dt <= 0.0 {
        return Err(KinematicsError::NonPositiveStep(dt));
    }
    if !state.is_finite() {
        return Err(KinematicsError::NonFinite("state"));
    }
    if !input.is_finite() {
        return Err(KinematicsError::NonFinite("control"));
    }
    Ok(advance(state, input, dt, geom.wheelbase, bounds))
}

/// Longitudinal and lateral coordinates of the vehicle center in the lane frame.
#[inline]
pub fn to_road_frame(state: &VehicleState, frame: &RoadFrame) -> (f64, f64) {
    let (s, c) = frame.theta_road.sin_cos();
    (state.x * c + state.y * s, state.y * c - state.x * s)
}

/// Corners of the heading-oriented rectangle, counter-clockwise.
pub fn corners(state: &VehicleState, geom: &VehicleGeometry) -> [(f64, f64); 4] {
    let (s, c) = state.theta.sin_cos();
    let hl = 0.5 * geom.length;
    let hw = 0.5 * geom.width;
    let pts = [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)];
    pts.map(|(lx, ly)| (state.x + lx * c - ly * s, state.y + lx * s + ly * c))
}

fn project(pts: &[(f64, f64); 4], axis: (f64, f64)) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in pts {
        let d = p.0 * axis.0 + p.1 * axis.1;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (lo, hi)
}

/// Separating-axis test for two heading-oriented rectangles.
pub fn rect_overlap(
    state_a: &VehicleState,
    state_b: &VehicleState,
    geom_a: &VehicleGeometry,
    geom_b: &VehicleGeometry,
) -> bool {
    // cheap reject on bounding circles
    let ra = 0.5 * geom_a.length.hypot(geom_a.width);
    let rb = 0.5 * geom_b.length.hypot(geom_b.width);
    let dx = state_a.x - state_b.x;
    let dy = state_a.y - state_b.y;
    if dx * dx + dy * dy > (ra + rb) * (ra + rb) {
        return false;
    }
    let ca = corners(state_a, geom_a);
    let cb = corners(state_b, geom_b);
    let axes = [
        state_a.theta.sin_cos(),
        (state_a.theta + std::f64::consts::FRAC_PI_2).sin_cos(),
        state_b.theta.sin_cos(),
        (state_b.theta + std::f64::consts::FRAC_PI_2).sin_cos(),
    ];
    for (s, c) in axes {
        let (a0, a1) = project(&ca, (c, s));
        let (b0, b1) = project(&cb, (c, s));
        if a1 < b0 || b1 < a0 {
            return false;
        }
    }
    true
}

fn point_segment_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * abx + (p.1 - a.1) * aby) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a.0 + t * abx, a.1 + t * aby);
    (p.0 - qx).hypot(p.1 - qy)
}

/// Minimum distance between two rectangles; zero when they overlap.
pub fn rect_clearance(
    state_a: &VehicleState,
    state_b: &VehicleState,
    geom_a: &VehicleGeometry,
    geom_b: &VehicleGeometry,
) -> f64 {
    if rect_overlap(state_a, state_b, geom_a, geom_b) {
        return 0.0;
    }
    let ca = corners(state_a, geom_a);
    let cb = corners(state_b, geom_b);
    let mut best = f64::INFINITY;
    for (pts, other) in [(&ca, &cb), (&cb, &ca)] {
        for p in pts.iter() {
            for i in 0..4 {
                best = best.min(point_segment_dist(*p, other[i], other[(i + 1) % 4]));
            }
        }
    }
    best
}
