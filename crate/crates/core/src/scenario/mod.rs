//! Clinician-facing parameters and authored scene definitions.

mod params;
mod scene;

pub use params::{
    apply_change, default_params, max_complexity, ranges, schema, validate, ParamError, ScenarioParams, SceneId, Violation,
    FIELD_NAMES, LIGHTING_LABELS,
};
pub use scene::{
    builtin_json, check, parse_scene, Block, CueSource, NavMeshSpec, Scene, SceneDefinition, SceneError, SceneIssue,
    SpawnPoint,
};
