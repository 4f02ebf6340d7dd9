use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// The four scenes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneId {
    Airport,
    Subway,
    City,
    BallPark,
}

impl SceneId {
    pub const ALL: [SceneId; 4] = [SceneId::Airport, SceneId::Subway, SceneId::City, SceneId::BallPark];

    pub fn as_str(self) -> &'static str {
        match self {
            SceneId::Airport => "airport",
            SceneId::Subway => "subway",
            SceneId::City => "city",
            SceneId::BallPark => "ball_park",
        }
    }

    pub fn parse(s: &str) -> Option<SceneId> {
        SceneId::ALL.into_iter().find(|id| id.as_str() == s)
    }

    /// Allowed player spawn labels; the first is the default.
    pub fn spawn_labels(self) -> &'static [&'static str] {
        match self {
            SceneId::Airport => &["hall", "second_floor", "stairs"],
            SceneId::Subway => &["platform", "mezzanine", "stairs"],
            SceneId::City => &["sidewalk_mid"],
            SceneId::BallPark => &["park_center"],
        }
    }

    pub fn has_cars(self) -> bool {
        matches!(self, SceneId::City | SceneId::BallPark)
    }

    pub fn has_lighting(self) -> bool {
        matches!(self, SceneId::City | SceneId::BallPark)
    }

    pub fn has_balls(self) -> bool {
        self == SceneId::BallPark
    }
}

impl fmt::Display for SceneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sun-like lighting levels for the outdoor scenes.
pub const LIGHTING_LABELS: [&str; 4] = ["noon_sun", "cloudy_morning", "dim", "dark"];

/// Inclusive ranges of the integer controls.
pub mod ranges {
    pub const SPEED: (i64, i64) = (0, 3);
    pub const WALKING_DIRECTION: (i64, i64) = (1, 4);
    pub const WALKING_AMOUNT: (i64, i64) = (1, 4);
    pub const SOUND_LEVEL: (i64, i64) = (0, 2);
    pub const CAR_AMOUNT: (i64, i64) = (0, 3);
    pub const DIFFICULTY: (i64, i64) = (0, 4);
    pub const LIGHTING: (i64, i64) = (0, 3);
    pub const MACHINE: (i64, i64) = (0, 2);
}

/// Everything a clinician can adjust in a running scene.
///
/// Integer fields are wide so that out-of-range requests can be represented
/// and reported by [`validate`] rather than rejected at parse time.
/// Scene-scoped controls are `None` outside their scenes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    pub scene: SceneId,
    pub speed: i64,
    pub walking_direction: i64,
    pub walking_amount: i64,
    pub sound_level: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub car_amount: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lighting: Option<i64>,
    pub light_flag: bool,
    pub color_flag: bool,
    pub material_flag: bool,
    #[serde(default = "enabled")]
    pub pedestrians_enabled: bool,
    pub spawn: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub machine_mask_override: Option<Vec<i64>>,
}

fn enabled() -> bool {
    true
}

/// Names accepted by [`apply_change`], in declaration order.
pub const FIELD_NAMES: [&str; 14] = [
    "scene",
    "speed",
    "walking_direction",
    "walking_amount",
    "sound_level",
    "car_amount",
    "difficulty",
    "lighting",
    "light_flag",
    "color_flag",
    "material_flag",
    "pedestrians_enabled",
    "spawn",
    "machine_mask_override",
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Range { field: String, value: i64, min: i64, max: i64 },
    Scope { field: String, scene: SceneId },
    Missing { field: String, scene: SceneId },
    Spawn { field: String, label: String, scene: SceneId },
    Mask { field: String, reason: String },
}

impl Violation {
    pub fn field(&self) -> &str {
        match self {
            Violation::Range { field, .. }
            | Violation::Scope { field, .. }
            | Violation::Missing { field, .. }
            | Violation::Spawn { field, .. }
            | Violation::Mask { field, .. } => field,
        }
    }

    /// Wire error code.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::Range { .. } | Violation::Spawn { .. } | Violation::Mask { .. } => "out_of_range",
            Violation::Scope { .. } => "wrong_scene_scope",
            Violation::Missing { .. } => "missing_value",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Range { field, value, min, max } => {
                write!(f, "`{field}` = {value} is out of range (valid {min}-{max})")
            }
            Violation::Scope { field, scene } => write!(f, "`{field}` does not apply to the {scene} scene"),
            Violation::Missing { field, scene } => write!(f, "`{field}` is required in the {scene} scene"),
            Violation::Spawn { field, label, scene } => write!(
                f,
                "`{field}` = {label:?} is not a {scene} spawn point (valid: {})",
                scene.spawn_labels().join(", ")
            ),
            Violation::Mask { field, reason } => write!(f, "`{field}`: {reason}"),
        }
    }
}

fn check_range(out: &mut Vec<Violation>, field: &str, value: i64, (min, max): (i64, i64)) {
    if value < min || value > max {
        out.push(Violation::Range { field: field.to_owned(), value, min, max });
    }
}

fn check_scoped(
    out: &mut Vec<Violation>,
    field: &str,
    value: Option<i64>,
    in_scope: bool,
    scene: SceneId,
    range: (i64, i64),
) {
    match (value, in_scope) {
        (Some(v), true) => check_range(out, field, v, range),
        (Some(_), false) => out.push(Violation::Scope { field: field.to_owned(), scene }),
        (None, true) => out.push(Violation::Missing { field: field.to_owned(), scene }),
        (None, false) => {}
    }
}

/// Every violated range or scope rule; empty means valid.
pub fn validate(p: &ScenarioParams) -> Vec<Violation> {
    let mut out = Vec::new();
    let scene = p.scene;
    check_range(&mut out, "speed", p.speed, ranges::SPEED);
    check_range(&mut out, "walking_direction", p.walking_direction, ranges::WALKING_DIRECTION);
    check_range(&mut out, "walking_amount", p.walking_amount, ranges::WALKING_AMOUNT);
    check_range(&mut out, "sound_level", p.sound_level, ranges::SOUND_LEVEL);
    check_scoped(&mut out, "car_amount", p.car_amount, scene.has_cars(), scene, ranges::CAR_AMOUNT);
    check_scoped(&mut out, "difficulty", p.difficulty, scene.has_balls(), scene, ranges::DIFFICULTY);
    check_scoped(&mut out, "lighting", p.lighting, scene.has_lighting(), scene, ranges::LIGHTING);
    if !scene.spawn_labels().contains(&p.spawn.as_str()) {
        out.push(Violation::Spawn { field: "spawn".into(), label: p.spawn.clone(), scene });
    }
    if let Some(mask) = &p.machine_mask_override {
        if !scene.has_balls() {
            out.push(Violation::Scope { field: "machine_mask_override".into(), scene });
        } else if let Some(&bad) = mask.iter().find(|&&m| !(ranges::MACHINE.0..=ranges::MACHINE.1).contains(&m)) {
            out.push(Violation::Mask {
                field: "machine_mask_override".into(),
                reason: format!("machine {bad} does not exist (valid 0-2)"),
            });
        } else if (1..mask.len()).any(|i| mask[..i].contains(&mask[i])) {
            out.push(Violation::Mask { field: "machine_mask_override".into(), reason: "duplicate machine".into() });
        }
    }
    out
}

/// Minimal-stimulus starting point for a scene.
pub fn default_params(scene: SceneId) -> ScenarioParams {
    ScenarioParams {
        scene,
        speed: 0,
        walking_direction: 1,
        walking_amount: 1,
        sound_level: 0,
        car_amount: scene.has_cars().then_some(0),
        difficulty: scene.has_balls().then_some(0),
        lighting: scene.has_lighting().then_some(0),
        light_flag: true,
        color_flag: true,
        material_flag: true,
        pedestrians_enabled: true,
        spawn: scene.spawn_labels()[0].to_owned(),
        machine_mask_override: None,
    }
}

/// `base` with every graded control of its scene at the maximum.
pub fn max_complexity(base: &ScenarioParams) -> ScenarioParams {
    let scene = base.scene;
    ScenarioParams {
        speed: ranges::SPEED.1,
        walking_direction: ranges::WALKING_DIRECTION.1,
        walking_amount: ranges::WALKING_AMOUNT.1,
        sound_level: ranges::SOUND_LEVEL.1,
        car_amount: scene.has_cars().then_some(ranges::CAR_AMOUNT.1),
        difficulty: scene.has_balls().then_some(ranges::DIFFICULTY.1),
        lighting: scene.has_lighting().then_some(ranges::LIGHTING.1),
        pedestrians_enabled: true,
        ..base.clone()
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("unknown parameter `{0}`")]
    UnknownField(String),
    #[error("scene changes go through load_scene")]
    SceneSwitch,
    #[error("`{field}`: {reason}")]
    InvalidValue { field: String, reason: String },
    #[error("{0}")]
    Violation(Violation),
}

impl ParamError {
    /// Wire error code.
    pub fn code(&self) -> &'static str {
        match self {
            ParamError::UnknownField(_) => "unknown_param",
            ParamError::SceneSwitch => "use_load_scene",
            ParamError::InvalidValue { .. } => "invalid_value",
            ParamError::Violation(v) => v.code(),
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            ParamError::UnknownField(f) => Some(f),
            ParamError::SceneSwitch => Some("scene"),
            ParamError::InvalidValue { field, .. } => Some(field),
            ParamError::Violation(v) => Some(v.field()),
        }
    }
}

fn want_int(field: &str, v: &Value) -> Result<i64, ParamError> {
    v.as_i64().ok_or_else(|| ParamError::InvalidValue { field: field.into(), reason: format!("expected an integer, got {v}") })
}

fn want_bool(field: &str, v: &Value) -> Result<bool, ParamError> {
    v.as_bool().ok_or_else(|| ParamError::InvalidValue { field: field.into(), reason: format!("expected a boolean, got {v}") })
}

fn want_opt_int(field: &str, v: &Value) -> Result<Option<i64>, ParamError> {
    if v.is_null() {
        Ok(None)
    } else {
        want_int(field, v).map(Some)
    }
}

/// Change one field. Either the whole updated parameter set is valid and
/// returned, or an error comes back and `params` is untouched.
pub fn apply_change(params: &ScenarioParams, field: &str, value: &Value) -> Result<ScenarioParams, ParamError> {
    let mut next = params.clone();
    match field {
        "scene" => return Err(ParamError::SceneSwitch),
        "speed" => next.speed = want_int(field, value)?,
        "walking_direction" => next.walking_direction = want_int(field, value)?,
        "walking_amount" => next.walking_amount = want_int(field, value)?,
        "sound_level" => next.sound_level = want_int(field, value)?,
        "car_amount" => next.car_amount = want_opt_int(field, value)?,
        "difficulty" => next.difficulty = want_opt_int(field, value)?,
        "lighting" => next.lighting = want_opt_int(field, value)?,
        "light_flag" => next.light_flag = want_bool(field, value)?,
        "color_flag" => next.color_flag = want_bool(field, value)?,
        "material_flag" => next.material_flag = want_bool(field, value)?,
        "pedestrians_enabled" => next.pedestrians_enabled = want_bool(field, value)?,
        "spawn" => {
            next.spawn = value
                .as_str()
                .ok_or_else(|| ParamError::InvalidValue { field: field.into(), reason: "expected a string".into() })?
                .to_owned()
        }
        "machine_mask_override" => {
            next.machine_mask_override = if value.is_null() {
                None
            } else {
                let items = value.as_array().ok_or_else(|| ParamError::InvalidValue {
                    field: field.into(),
                    reason: "expected an array of machine ids or null".into(),
                })?;
                Some(items.iter().map(|v| want_int(field, v)).collect::<Result<Vec<_>, _>>()?)
            }
        }
        other => return Err(ParamError::UnknownField(other.to_owned())),
    }
    // Only the changed field can introduce a violation.
    match validate(&next).into_iter().find(|v| v.field() == field) {
        Some(v) => Err(ParamError::Violation(v)),
        None => Ok(next),
    }
}

/// Machine-readable description of every control, its range and the scenes
/// it applies to. Served to consoles so their widgets track the engine.
pub fn schema() -> Value {
    use serde_json::json;
    let all: Vec<&str> = SceneId::ALL.iter().map(|s| s.as_str()).collect();
    let outdoor = vec!["city", "ball_park"];
    let int = |name: &str, (min, max): (i64, i64), scenes: &Vec<&str>, label: &str| {
        json!({"name": name, "type": "integer", "min": min, "max": max, "scenes": scenes, "label": label})
    };
    let flag = |name: &str, label: &str| json!({"name": name, "type": "boolean", "scenes": all, "label": label});
    let spawns: serde_json::Map<String, Value> = SceneId::ALL
        .iter()
        .map(|s| (s.as_str().to_owned(), json!(s.spawn_labels())))
        .collect();
    json!({
        "format_version": crate::session::FORMAT_VERSION,
        "scenes": all,
        "controls": [
            int("speed", ranges::SPEED, &all, "Speed"),
            int("walking_direction", ranges::WALKING_DIRECTION, &all, "WalkingDirection"),
            int("walking_amount", ranges::WALKING_AMOUNT, &all, "WalkingAmount"),
            int("sound_level", ranges::SOUND_LEVEL, &all, "SoundLevel"),
            int("car_amount", ranges::CAR_AMOUNT, &outdoor, "CarAmount"),
            int("difficulty", ranges::DIFFICULTY, &vec!["ball_park"], "Difficulty"),
            int("lighting", ranges::LIGHTING, &outdoor, "Lighting"),
            flag("light_flag", "Light"),
            flag("color_flag", "Color"),
            flag("material_flag", "Material"),
            flag("pedestrians_enabled", "Pedestrians"),
            {"name": "spawn", "type": "enum", "scenes": all, "label": "Spawn", "values": spawns},
            {"name": "machine_mask_override", "type": "set", "min": ranges::MACHINE.0, "max": ranges::MACHINE.1,
             "scenes": ["ball_park"], "label": "Ball machines", "nullable": true},
        ],
        "lighting_levels": LIGHTING_LABELS,
        "message_types": ["set_param", "load_scene", "start", "pause", "stop", "launch_ball_override", "subscribe",
                          "unsubscribe", "pose"],
        "server_message_types": ["ack", "error", "snapshot", "event", "session_info"],
        "error_codes": ["unknown_type", "malformed", "unknown_param", "out_of_range", "wrong_scene_scope",
                        "no_session", "invalid_value", "missing_value", "use_load_scene", "scene_load_failed"],
    })
}
