//! Deterministic headless engine for balance-rehabilitation scenes.
//!
//! Four scenes (airport, subway, city, ball park) are simulated at a fixed
//! 90 Hz tick: pedestrians walking a navigation mesh and replanning around
//! each other and the player, stochastic planes, trains, cars and tennis-ball
//! launches, and listener-relative sound cues. Sessions are seeded and
//! logged so that any run can be replayed and verified bit for bit.

pub mod audio;
pub mod crowd;
pub mod events;
pub mod geom;
pub mod nav;
pub mod rng;
pub mod scenario;
pub mod session;

pub use geom::{Point2, Point3, Vec3};
