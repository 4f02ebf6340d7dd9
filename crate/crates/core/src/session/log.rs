use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::audio::ListenerPose;
use crate::events::SimEvent;
use crate::geom::Point3;
use crate::rng::fnv1a64;
use crate::scenario::SceneDefinition;

use super::{FORMAT_VERSION, TICK_HZ};

/// First line of every session log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub master_seed: u64,
    pub scene_load: u64,
    pub dt: f64,
    pub tick_rate_hz: u32,
    pub scenario: SceneDefinition,
    /// FNV-1a of this header serialized with an empty checksum.
    pub checksum: String,
}

impl Header {
    pub fn new(master_seed: u64, scene_load: u64, scenario: SceneDefinition) -> Self {
        let mut h = Self {
            format_version: FORMAT_VERSION,
            master_seed,
            scene_load,
            dt: super::DT,
            tick_rate_hz: TICK_HZ,
            scenario,
            checksum: String::new(),
        };
        h.checksum = h.compute_checksum();
        h
    }

    pub fn compute_checksum(&self) -> String {
        let blank = Header { checksum: String::new(), ..self.clone() };
        let text = serde_json::to_string(&blank).expect("headers always serialize");
        super::format_hash(fnv1a64(text.as_bytes()))
    }
}

/// One JSONL line. Input scripts use the same shapes (only `pose` and
/// `param_change` matter there).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Record {
    Header(Header),
    Pose {
        tick: u64,
        position: Point3,
        yaw: f64,
        pitch: f64,
    },
    ParamChange {
        tick: u64,
        name: String,
        value: Value,
        /// Error code if the change was rejected.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
    Event {
        tick: u64,
        #[serde(flatten)]
        event: SimEvent,
    },
    SnapshotHash {
        tick: u64,
        hash: String,
    },
}

impl Record {
    pub fn tick(&self) -> u64 {
        match self {
            Record::Header(_) => 0,
            Record::Pose { tick, .. }
            | Record::ParamChange { tick, .. }
            | Record::Event { tick, .. }
            | Record::SnapshotHash { tick, .. } => *tick,
        }
    }

    pub fn pose(tick: u64, p: &ListenerPose) -> Record {
        Record::Pose { tick, position: p.position, yaw: p.yaw, pitch: p.pitch }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }
}

/// A requested parameter change.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamChange {
    pub name: String,
    pub value: Value,
}

/// Inputs stamped for one tick, applied in order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TickInputs {
    pub poses: Vec<ListenerPose>,
    pub changes: Vec<ParamChange>,
}

impl TickInputs {
    pub fn is_empty(&self) -> bool {
        self.poses.is_empty() && self.changes.is_empty()
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

/// Input script: pose and param_change records keyed by tick. Other record
/// kinds (a whole session log works as a script) are skipped.
pub type Script = BTreeMap<u64, TickInputs>;

pub fn parse_script(text: &str) -> Result<Script, ScriptError> {
    let mut script = Script::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record =
            serde_json::from_str(line).map_err(|e| ScriptError { line: i + 1, message: e.to_string() })?;
        match rec {
            Record::Pose { tick, position, yaw, pitch } => {
                script.entry(tick).or_default().poses.push(ListenerPose { position, yaw, pitch })
            }
            Record::ParamChange { tick, name, value, .. } => {
                script.entry(tick).or_default().changes.push(ParamChange { name, value })
            }
            _ => {}
        }
    }
    if script.contains_key(&0) {
        return Err(ScriptError { line: 0, message: "inputs must be stamped for tick 1 or later".into() });
    }
    Ok(script)
}
