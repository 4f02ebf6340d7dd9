//! Wire format shared by the WebSocket and TCP transports: one JSON object
//! per frame (or per line on TCP).

use std::f64::consts::PI;

use serde_json::{json, Value};
use vsim::audio::ListenerPose;
use vsim::session::TICK_HZ;
use vsim::Point3;

pub const PROTOCOL_VERSION: u32 = 1;
/// Largest accepted pose coordinate, in meters.
pub const MAX_COORDINATE: f64 = 1e6;
/// Snapshot rate for `subscribe` without an explicit rate.
pub const DEFAULT_RATE_HZ: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub enum Request {
    SetParam { name: String, value: Value },
    LoadScene { scene: String },
    Start,
    Pause,
    Stop,
    /// `null` hands machine choice back to the difficulty level.
    LaunchBallOverride { machines: Value },
    Subscribe { rate: f64 },
    Unsubscribe,
    Pose(ListenerPose),
}

impl Request {
    pub fn type_name(&self) -> &'static str {
        match self {
            Request::SetParam { .. } => "set_param",
            Request::LoadScene { .. } => "load_scene",
            Request::Start => "start",
            Request::Pause => "pause",
            Request::Stop => "stop",
            Request::LaunchBallOverride { .. } => "launch_ball_override",
            Request::Subscribe { .. } => "subscribe",
            Request::Unsubscribe => "unsubscribe",
            Request::Pose(_) => "pose",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClientMessage {
    pub client_msg_id: i64,
    pub request: Request,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolError {
    /// Present whenever the frame carried a readable id.
    pub client_msg_id: Option<i64>,
    pub code: &'static str,
    pub message: String,
}

impl ProtocolError {
    fn new(client_msg_id: Option<i64>, code: &'static str, message: impl Into<String>) -> Self {
        Self { client_msg_id, code, message: message.into() }
    }
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, name: &str, id: i64) -> Result<&'a Value, ProtocolError> {
    obj.get(name).ok_or_else(|| ProtocolError::new(Some(id), "malformed", format!("missing field `{name}`")))
}

fn number(v: &Value, name: &str, id: i64) -> Result<f64, ProtocolError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ProtocolError::new(Some(id), "malformed", format!("`{name}` must be a finite number")))
}

pub fn parse(text: &str) -> Result<ClientMessage, ProtocolError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| ProtocolError::new(None, "malformed", format!("invalid JSON: {e}")))?;
    let obj = value.as_object().ok_or_else(|| ProtocolError::new(None, "malformed", "message must be a JSON object"))?;
    let id = match obj.get("client_msg_id") {
        Some(v) => v.as_i64().ok_or_else(|| ProtocolError::new(None, "malformed", "client_msg_id must be an integer"))?,
        None => return Err(ProtocolError::new(None, "malformed", "missing client_msg_id")),
    };
    let ty = obj
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| ProtocolError::new(Some(id), "malformed", "missing string field `type`"))?;
    let request = match ty {
        "set_param" => {
            let name = field(obj, "name", id)?
                .as_str()
                .ok_or_else(|| ProtocolError::new(Some(id), "malformed", "`name` must be a string"))?;
            Request::SetParam { name: name.to_owned(), value: field(obj, "value", id)?.clone() }
        }
        "load_scene" => {
            let scene = field(obj, "scene", id)?
                .as_str()
                .ok_or_else(|| ProtocolError::new(Some(id), "malformed", "`scene` must be a string"))?;
            Request::LoadScene { scene: scene.to_owned() }
        }
        "start" => Request::Start,
        "pause" => Request::Pause,
        "stop" => Request::Stop,
        "launch_ball_override" => Request::LaunchBallOverride { machines: field(obj, "machines", id)?.clone() },
        "subscribe" => {
            let rate = match obj.get("rate") {
                None | Some(Value::Null) => DEFAULT_RATE_HZ,
                Some(v) => number(v, "rate", id)?,
            };
            if !(rate > 0.0 && rate <= TICK_HZ as f64) {
                return Err(ProtocolError::new(Some(id), "out_of_range", format!("rate must be in (0, {TICK_HZ}] Hz")));
            }
            Request::Subscribe { rate }
        }
        "unsubscribe" => Request::Unsubscribe,
        "pose" => {
            let pos = field(obj, "position", id)?
                .as_array()
                .filter(|a| a.len() == 3)
                .ok_or_else(|| ProtocolError::new(Some(id), "malformed", "`position` must be [x, y, z]"))?;
            let c: Vec<f64> = pos.iter().map(|v| number(v, "position", id)).collect::<Result<_, _>>()?;
            let yaw = number(field(obj, "yaw", id)?, "yaw", id)?;
            let pitch = match obj.get("pitch") {
                None => 0.0,
                Some(v) => number(v, "pitch", id)?,
            };
            if c.iter().any(|x| x.abs() > MAX_COORDINATE) {
                return Err(ProtocolError::new(Some(id), "out_of_range", "position is implausibly far away"));
            }
            if yaw.abs() > PI || pitch.abs() > PI {
                return Err(ProtocolError::new(Some(id), "out_of_range", "yaw and pitch must be within [-pi, pi]"));
            }
            Request::Pose(ListenerPose { position: Point3::new(c[0], c[1], c[2]), yaw, pitch })
        }
        other => return Err(ProtocolError::new(Some(id), "unknown_type", format!("unknown message type `{other}`"))),
    };
    Ok(ClientMessage { client_msg_id: id, request })
}

/// Ticks between delivered snapshots for a subscription rate.
pub fn stride(rate_hz: f64) -> u64 {
    ((TICK_HZ as f64 / rate_hz).ceil() as u64).max(1)
}

pub fn ack(client_msg_id: i64, tick: u64, payload: Value) -> String {
    json!({"type": "ack", "client_msg_id": client_msg_id, "tick": tick, "payload": payload}).to_string()
}

pub fn error(client_msg_id: Option<i64>, tick: u64, code: &str, message: &str, field: Option<&str>) -> String {
    let mut payload = json!({"code": code, "message": message});
    if let Some(f) = field {
        payload["field"] = json!(f);
    }
    json!({"type": "error", "client_msg_id": client_msg_id, "tick": tick, "payload": payload}).to_string()
}

pub fn protocol_error(e: &ProtocolError, tick: u64) -> String {
    error(e.client_msg_id, tick, e.code, &e.message, None)
}

/// Snapshot frame built around an already serialized snapshot.
pub fn snapshot_frame(tick: u64, snapshot_json: &str) -> String {
    format!(r#"{{"type":"snapshot","tick":{tick},"payload":{snapshot_json}}}"#)
}

pub fn event_frame(tick: u64, event: &vsim::events::SimEvent) -> String {
    json!({"type": "event", "tick": tick, "payload": event}).to_string()
}
