use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{point_segment_distance3, Point3, Vec3};

pub const GRAVITY: f64 = 9.81;
pub const BALL_SPEED: f64 = 12.0;
pub const BALL_RADIUS: f64 = 0.033;
pub const HEAD_RADIUS: f64 = 0.12;
/// Closest approach still counted as a dodge rather than a clean miss.
pub const DODGE_RANGE: f64 = 1.0;
/// Balls farther than this from their machine are gone.
pub const EXPIRE_DISTANCE: f64 = 60.0;

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaunchError {
    #[error("target coincides with the machine")]
    Degenerate,
    #[error("target is out of range at this launch speed")]
    Unreachable,
    #[error("launch speed must be positive")]
    BadSpeed,
}

/// Launch velocity of magnitude `speed` whose arc passes through `target`,
/// choosing the flatter of the two solutions.
pub fn solve_ball_launch(machine: Point3, target: Point3, speed: f64) -> Result<Vec3, LaunchError> {
    solve_with_time(machine, target, speed).map(|(v, _)| v)
}

/// Like [`solve_ball_launch`], also returning the time of flight to `target`.
pub fn solve_with_time(machine: Point3, target: Point3, speed: f64) -> Result<(Vec3, f64), LaunchError> {
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(LaunchError::BadSpeed);
    }
    let d = target - machine;
    if d.length() < 1e-9 {
        return Err(LaunchError::Degenerate);
    }
    let x = d.ground().length();
    let y = d.z;
    let v2 = speed * speed;
    if x < 1e-9 {
        // Straight up or straight down.
        if y < 0.0 {
            let t = (-speed + (v2 + 2.0 * GRAVITY * -y).sqrt()) / GRAVITY;
            return Ok((Vec3::new(0.0, 0.0, -speed), t));
        }
        let disc = v2 - 2.0 * GRAVITY * y;
        if disc < 0.0 {
            return Err(LaunchError::Unreachable);
        }
        return Ok((Vec3::new(0.0, 0.0, speed), (speed - disc.sqrt()) / GRAVITY));
    }
    let disc = v2 * v2 - GRAVITY * (GRAVITY * x * x + 2.0 * y * v2);
    if disc < 0.0 {
        return Err(LaunchError::Unreachable);
    }
    // Low root of g x² T² − 2v² x T + (g x² + 2 y v²) = 0 via the product
    // of roots, which avoids cancellation for short, flat shots.
    let tan = (GRAVITY * x * x + 2.0 * y * v2) / (x * (v2 + disc.sqrt()));
    let cos = 1.0 / (1.0 + tan * tan).sqrt();
    let sin = tan * cos;
    let h = d.ground().normalized();
    let v = Vec3::new(h.x * speed * cos, h.y * speed * cos, speed * sin);
    Ok((v, x / (speed * cos)))
}

/// Ball center `t` seconds after launch.
pub fn ballistic_position(p0: Point3, v0: Vec3, t: f64) -> Point3 {
    p0 + v0 * t + Vec3::new(0.0, 0.0, -0.5 * GRAVITY * t * t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallOutcome {
    Hit,
    Dodged,
    Expired,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state", content = "outcome")]
pub enum FlightState {
    InFlight,
    Resolved(BallOutcome),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallFlight {
    pub id: u64,
    pub machine: usize,
    pub launch_time: f64,
    pub initial_position: Point3,
    pub initial_velocity: Vec3,
    pub state: FlightState,
    /// Closest approach to the head seen so far.
    pub min_distance: f64,
}

impl BallFlight {
    pub fn new(id: u64, machine: usize, launch_time: f64, initial_position: Point3, initial_velocity: Vec3) -> Self {
        Self {
            id,
            machine,
            launch_time,
            initial_position,
            initial_velocity,
            state: FlightState::InFlight,
            min_distance: f64::INFINITY,
        }
    }

    pub fn position_at(&self, t: f64) -> Point3 {
        ballistic_position(self.initial_position, self.initial_velocity, t - self.launch_time)
    }
}

/// Advances the hit/dodge/expiry bookkeeping of one flight over the tick
/// ending at `t` (started at `t - dt`), with the head at `head`. Returns the
/// outcome if the flight resolved during this tick.
pub fn resolve_ball(flight: &mut BallFlight, head: Point3, t: f64, dt: f64) -> Option<BallOutcome> {
    if flight.state != FlightState::InFlight {
        return None;
    }
    let t0 = (t - dt).max(flight.launch_time);
    let (a, b) = (flight.position_at(t0), flight.position_at(t));
    flight.min_distance = flight.min_distance.min(point_segment_distance3(head, a, b));
    let outcome = if flight.min_distance < HEAD_RADIUS + BALL_RADIUS {
        Some(BallOutcome::Hit)
    } else if crossed_head_plane(flight, head, a, b) && flight.min_distance <= DODGE_RANGE {
        Some(BallOutcome::Dodged)
    } else if b.z < 0.0 || b.distance(flight.initial_position) > EXPIRE_DISTANCE {
        Some(BallOutcome::Expired)
    } else {
        None
    };
    if let Some(o) = outcome {
        flight.state = FlightState::Resolved(o);
    }
    outcome
}

/// The head plane is vertical, through the head, facing the shot's
/// horizontal direction.
fn crossed_head_plane(flight: &BallFlight, head: Point3, a: Point3, b: Point3) -> bool {
    let dir = flight.initial_velocity.ground();
    if dir.length() < 1e-12 {
        // Vertical shot: the "plane" is the head height.
        let s = |p: Point3| (p.z - head.z) * flight.initial_velocity.z.signum();
        return s(a) < 0.0 && s(b) >= 0.0;
    }
    let n = dir.normalized();
    let s = |p: Point3| (p - head).ground().dot(n);
    s(a) < 0.0 && s(b) >= 0.0
}
