use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crowd::{member_endpoints, member_offsets, RouteFamily};
use crate::events::{BallMachine, Lane, PlanePath, Rail, MACHINE_COUNT};
use crate::geom::{Point2, Point3};
use crate::nav::{build_from_vertices, find_path, NavMesh};

use super::params::{validate, ScenarioParams, SceneId};

/// Largest walking group (WalkingAmount 4).
const MAX_GROUP: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavMeshSpec {
    pub polygons: Vec<Vec<Point2>>,
    /// Floor height of each polygon; absent means everything at 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elevations: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpawnPoint {
    pub label: String,
    /// Eye position.
    pub position: Point3,
    #[serde(default)]
    pub yaw: f64,
}

/// A sound the scene can play. Cues without a position belong to moving
/// entities (footsteps, car, train, ball, airplane).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CueSource {
    pub id: String,
    pub min_tier: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Point3>,
}

/// Axis-aligned footprint of a city block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub min: Point2,
    pub max: Point2,
}

/// Everything authored about a scene: geometry, routes, vehicles, sounds
/// and the parameters it starts with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDefinition {
    pub scene: SceneId,
    pub params: ScenarioParams,
    pub navmesh: NavMeshSpec,
    pub routes: Vec<RouteFamily>,
    #[serde(default)]
    pub lanes: Vec<Lane>,
    #[serde(default)]
    pub rails: Vec<Rail>,
    #[serde(default)]
    pub machines: Vec<BallMachine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane_path: Option<PlanePath>,
    pub spawns: Vec<SpawnPoint>,
    pub ambiance: String,
    pub cues: Vec<CueSource>,
    #[serde(default)]
    pub blocks: Vec<Block>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub car_speed: Option<f64>,
}

/// One problem found in a scenario file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SceneIssue {
    /// Dotted path to the offending field, e.g. `params.speed`.
    pub field: String,
    pub message: String,
}

impl fmt::Display for SceneIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("invalid JSON at byte {offset} (line {line}, column {column}): {message}")]
    Parse { offset: usize, line: usize, column: usize, message: String },
    #[error("{} problem(s): {}", .0.len(), .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<SceneIssue>),
}

/// Byte offset of a 1-based line/column position.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

/// Parses a scenario file without checking its contents.
pub fn parse_scene(text: &str) -> Result<SceneDefinition, SceneError> {
    serde_json::from_str(text).map_err(|e| SceneError::Parse {
        offset: byte_offset(text, e.line(), e.column()),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// A validated scene with its navmesh built.
#[derive(Clone, Debug)]
pub struct Scene {
    pub def: SceneDefinition,
    pub mesh: NavMesh,
}

impl Scene {
    pub fn from_json(text: &str) -> Result<Scene, SceneError> {
        Scene::new(parse_scene(text)?)
    }

    pub fn new(def: SceneDefinition) -> Result<Scene, SceneError> {
        let (mesh, issues) = check(&def);
        match mesh {
            Some(mesh) if issues.is_empty() => Ok(Scene { def, mesh }),
            _ => Err(SceneError::Invalid(issues)),
        }
    }

    /// One of the scenes shipped with the crate.
    pub fn builtin(id: SceneId) -> Scene {
        Scene::from_json(builtin_json(id)).expect("shipped scenes are valid")
    }

    pub fn id(&self) -> SceneId {
        self.def.scene
    }

    pub fn spawn(&self, label: &str) -> Option<&SpawnPoint> {
        self.def.spawns.iter().find(|s| s.label == label)
    }

    /// Floor height under `p`, 0 off the mesh.
    pub fn elevation_at(&self, p: Point2) -> f64 {
        match (&self.def.navmesh.elevations, self.mesh.locate(p)) {
            (Some(e), Some(i)) => e[i],
            _ => 0.0,
        }
    }
}

/// Source text of a shipped scene.
pub fn builtin_json(id: SceneId) -> &'static str {
    match id {
        SceneId::Airport => include_str!("../../../../scenes/airport.json"),
        SceneId::Subway => include_str!("../../../../scenes/subway.json"),
        SceneId::City => include_str!("../../../../scenes/city.json"),
        SceneId::BallPark => include_str!("../../../../scenes/ball_park.json"),
    }
}

/// Every problem with `def`, and the mesh if it could be built.
pub fn check(def: &SceneDefinition) -> (Option<NavMesh>, Vec<SceneIssue>) {
    let mut issues = Vec::new();
    let mut issue = |field: String, message: String| issues.push(SceneIssue { field, message });
    let scene = def.scene;

    if def.params.scene != scene {
        issue("params.scene".into(), format!("is {} but the file describes {scene}", def.params.scene));
    }
    for v in validate(&def.params) {
        issue(format!("params.{}", v.field()), v.to_string());
    }

    let mesh = match build_from_vertices(def.navmesh.polygons.clone()) {
        Ok(m) => Some(m),
        Err(e) => {
            issue("navmesh.polygons".into(), e.to_string());
            None
        }
    };
    if let Some(e) = &def.navmesh.elevations {
        if e.len() != def.navmesh.polygons.len() {
            issue(
                "navmesh.elevations".into(),
                format!("has {} entries for {} polygons", e.len(), def.navmesh.polygons.len()),
            );
        }
    }

    if def.routes.len() != 4 || def.routes.iter().enumerate().any(|(i, r)| r.id as usize != i) {
        issue("routes".into(), "must list route families 0, 1, 2, 3 in order".into());
    }
    if let Some(mesh) = &mesh {
        for (i, r) in def.routes.iter().enumerate() {
            if r.entry.distance(r.exit) < 1.0 {
                issue(format!("routes[{i}]"), "entry and exit coincide".into());
                continue;
            }
            for offset in member_offsets(MAX_GROUP) {
                let (entry, exit) = member_endpoints(r, offset);
                if let Err(e) = find_path(mesh, entry, exit, &[], 0.0) {
                    issue(format!("routes[{i}]"), format!("walker at lateral offset {offset:+.1} m: {e}"));
                    break;
                }
            }
        }
    }

    let labels: BTreeSet<&str> = def.spawns.iter().map(|s| s.label.as_str()).collect();
    let wanted: BTreeSet<&str> = scene.spawn_labels().iter().copied().collect();
    if labels != wanted || labels.len() != def.spawns.len() {
        issue("spawns".into(), format!("must be exactly {}", scene.spawn_labels().join(", ")));
    }
    if let Some(mesh) = &mesh {
        for s in &def.spawns {
            if mesh.locate(s.position.ground()).is_none() {
                issue(format!("spawns.{}", s.label), "is off the walkable area".into());
            }
        }
    }

    let expect_count = |n: usize, want: usize, field: &str, what: &str, issue: &mut dyn FnMut(String, String)| {
        if n != want {
            issue(field.into(), format!("{scene} needs {want} {what}, found {n}"));
        }
    };
    let rails_wanted = if scene == SceneId::Subway { 4 } else { 0 };
    expect_count(def.rails.len(), rails_wanted, "rails", "rails", &mut issue);
    let machines_wanted = if scene == SceneId::BallPark { MACHINE_COUNT } else { 0 };
    expect_count(def.machines.len(), machines_wanted, "machines", "ball machines", &mut issue);
    if def.machines.iter().enumerate().any(|(i, m)| m.id as usize != i) {
        issue("machines".into(), "ids must be 0, 1, 2 in order".into());
    }
    let blocks_wanted = if scene == SceneId::City { 7 } else { 0 };
    expect_count(def.blocks.len(), blocks_wanted, "blocks", "city blocks", &mut issue);
    if (scene == SceneId::Airport) != def.plane_path.is_some() {
        issue("plane_path".into(), "exactly the airport has a plane path".into());
    }
    if scene.has_cars() == def.lanes.is_empty() {
        issue("lanes".into(), "exactly the city and the ball park have car lanes".into());
    }
    for (i, l) in def.lanes.iter().enumerate() {
        if l.points.len() < 2 || l.length() <= 0.0 {
            issue(format!("lanes[{i}]"), "needs at least two distinct points".into());
        }
    }
    for (i, r) in def.rails.iter().enumerate() {
        if r.length() <= 0.0 {
            issue(format!("rails[{i}]"), "start and end coincide".into());
        }
    }
    match (scene, def.car_speed) {
        (SceneId::BallPark, Some(v)) if v >= 0.0 && v.is_finite() => {}
        (SceneId::BallPark, _) => issue("car_speed".into(), "ball park needs a non-negative car speed".into()),
        (_, Some(_)) => issue("car_speed".into(), "only the ball park has a fixed car speed".into()),
        (_, None) => {}
    }

    let mut seen = BTreeSet::new();
    for (i, c) in def.cues.iter().enumerate() {
        if c.min_tier > 2 {
            issue(format!("cues[{i}].min_tier"), format!("{} is out of range (valid 0-2)", c.min_tier));
        }
        if !seen.insert(c.id.as_str()) {
            issue(format!("cues[{i}].id"), format!("duplicate cue id {:?}", c.id));
        }
    }
    if def.ambiance.is_empty() {
        issue("ambiance".into(), "needs a bed id".into());
    }
    (mesh, issues)
}
