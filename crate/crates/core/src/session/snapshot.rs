use serde::{Deserialize, Serialize};

use crate::audio::{AmbianceState, SpatialCue};
use crate::crowd::Mode;
use crate::geom::{Point2, Point3};
use crate::rng::fnv1a64;
use crate::scenario::{ScenarioParams, SceneId};

use super::Metrics;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayerView {
    pub position: Point3,
    pub yaw: f64,
    pub pitch: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentView {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub group: u64,
    pub mode: Mode,
    pub waiting: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallView {
    pub id: u64,
    pub machine: usize,
    pub position: Point3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainView {
    pub rail: u32,
    pub nose: Point3,
    pub tail: Point3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarView {
    pub id: u64,
    pub lane: u32,
    pub position: Point2,
    pub speed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsView {
    #[serde(flatten)]
    pub counters: Metrics,
    pub exposure_seconds_per_sound_tier: [f64; 3],
}

/// Everything a console needs to draw one tick. Field order is fixed, so
/// the serialized form is canonical and can be hashed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tick: u64,
    pub sim_time: f64,
    pub scene: SceneId,
    pub params: ScenarioParams,
    pub player: PlayerView,
    pub agents: Vec<AgentView>,
    pub balls: Vec<BallView>,
    pub trains: Vec<TrainView>,
    pub planes: Vec<Point3>,
    pub cars: Vec<CarView>,
    pub cues: Vec<SpatialCue>,
    pub ambiance: AmbianceState,
    pub metrics: MetricsView,
}

impl Snapshot {
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("snapshots always serialize")
    }

    /// FNV-1a over the canonical serialization.
    pub fn hash(&self) -> u64 {
        fnv1a64(self.canonical_json().as_bytes())
    }
}

/// Hash as written in logs.
pub fn format_hash(h: u64) -> String {
    format!("{h:016x}")
}
