//! Pedestrians walking route families in groups.
//!
//! Between ticks every agent is an obstacle to the others. When one predicts
//! a collision it briefly switches to agent mode, plans around every agent
//! still in obstacle mode (and the player), then switches back. Movement
//! itself never closes a gap below contact distance: an agent whose next
//! step would do so holds position for that tick.

use serde::{Deserialize, Serialize};

use crate::geom::Point2;
use crate::nav::{find_path, NavMesh, ObstacleDisc, Path};
use crate::rng::SplitMix64;
use crate::scenario::ScenarioParams;

/// Walking speed in m/s for each Speed level.
pub const SPEED_TABLE: [f64; 4] = [0.0, 0.7, 1.3, 1.9];
pub const AGENT_RADIUS: f64 = 0.3;
pub const PLAYER_RADIUS: f64 = 0.3;
/// Extra room agents keep around the player on top of both radii.
pub const PLAYER_PERSONAL_SPACE: f64 = 0.1;
pub const CONFLICT_HORIZON: f64 = 1.5;
/// 0.5 s at 90 Hz.
pub const REPLAN_COOLDOWN_TICKS: u32 = 45;
pub const ARRIVAL_TOLERANCE: f64 = 0.05;
/// Lateral distance between members of one walking group.
pub const GROUP_SPACING: f64 = 0.8;
/// A group only enters when nobody stands this close to any member's entry.
pub const SPAWN_CLEARANCE: f64 = 1.5;
pub const AGENTS_PER_AMOUNT_LEVEL: usize = 10;

const TICK_HZ: f64 = 90.0;

/// Closest approach allowed between an agent and the player.
pub fn player_contact_distance() -> f64 {
    AGENT_RADIUS + PLAYER_RADIUS + PLAYER_PERSONAL_SPACE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteFamily {
    pub id: u32,
    pub entry: Point2,
    pub exit: Point2,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Agent,
    Obstacle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: u64,
    pub group_id: u64,
    pub route_family: u32,
    pub position: Point2,
    /// Facing, 0 toward +y, counterclockwise positive.
    pub heading: f64,
    pub radius: f64,
    pub speed_level: usize,
    pub speed: f64,
    pub exit: Point2,
    pub path: Path,
    /// Index of the next waypoint to reach.
    pub path_cursor: usize,
    pub mode: Mode,
    pub replan_cooldown_ticks: u32,
    /// Last replan found no route; standing still until the cooldown expires.
    pub waiting: bool,
}

impl Agent {
    pub fn replan_cooldown(&self) -> f64 {
        self.replan_cooldown_ticks as f64 / TICK_HZ
    }

    pub fn set_speed_level(&mut self, level: usize) {
        self.speed_level = level.min(SPEED_TABLE.len() - 1);
        self.speed = SPEED_TABLE[self.speed_level];
    }

    /// Intended velocity: along the path at full speed, or zero.
    pub fn velocity(&self) -> Point2 {
        if self.waiting || self.speed == 0.0 {
            return Point2::ZERO;
        }
        match self.path.waypoints.get(self.path_cursor) {
            Some(&w) if w.distance(self.position) > 0.0 => (w - self.position).normalized() * self.speed,
            _ => Point2::ZERO,
        }
    }

    /// Path length still to walk.
    pub fn remaining_distance(&self) -> f64 {
        let w = &self.path.waypoints;
        if self.path_cursor >= w.len() {
            return 0.0;
        }
        let mut d = self.position.distance(w[self.path_cursor]);
        for pair in w[self.path_cursor..].windows(2) {
            d += pair[0].distance(pair[1]);
        }
        d
    }

    pub fn disc(&self) -> ObstacleDisc {
        ObstacleDisc::new(self.position, self.radius)
    }

    fn set_path(&mut self, path: Path) {
        self.path = path;
        self.path_cursor = 1;
        self.waiting = false;
    }
}

/// The player's body on the ground plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlayerDisc {
    pub position: Point2,
    pub velocity: Point2,
}

impl PlayerDisc {
    pub fn at(position: Point2) -> Self {
        Self { position, velocity: Point2::ZERO }
    }
}

/// Who an agent is about to collide with. Agents order before the player.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Other {
    Agent(u64),
    Player,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConflictReport {
    pub agent_id: u64,
    pub other: Other,
    pub time_to_contact: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpawnGroup {
    pub group_id: u64,
    pub size: usize,
    pub route_family: u32,
    pub spawn_tick: u64,
}

/// First time in `[0, horizon]` at which two discs with relative position
/// `rel` and relative velocity `vel` come within `radius_sum`. Discs that
/// already touch count as contact at 0 only while still closing.
pub fn contact_time(rel: Point2, vel: Point2, radius_sum: f64, horizon: f64) -> Option<f64> {
    let c = rel.dot(rel) - radius_sum * radius_sum;
    let half_b = rel.dot(vel);
    if c <= 0.0 {
        return (half_b < 0.0).then_some(0.0);
    }
    let a = vel.dot(vel);
    if a <= 1e-18 || half_b >= 0.0 {
        return None;
    }
    let disc = half_b * half_b - a * c;
    if disc < 0.0 {
        return None;
    }
    // Smaller root, written to avoid cancellation: c / (-half_b + sqrt).
    let t = c / (-half_b + disc.sqrt());
    (t <= horizon).then_some(t)
}

/// Earliest predicted contact between `a` and anyone else within `horizon`.
pub fn predict_conflict(a: &Agent, others: &[Agent], player: Option<&PlayerDisc>, horizon: f64) -> Option<ConflictReport> {
    let va = a.velocity();
    let mut best: Option<(f64, Other)> = None;
    let mut consider = |t: Option<f64>, who: Other| {
        if let Some(t) = t {
            if best.is_none_or(|(bt, bw)| t < bt || (t == bt && who < bw)) {
                best = Some((t, who));
            }
        }
    };
    for b in others {
        if b.id == a.id {
            continue;
        }
        let t = contact_time(b.position - a.position, b.velocity() - va, a.radius + b.radius, horizon);
        consider(t, Other::Agent(b.id));
    }
    if let Some(p) = player {
        let t = contact_time(p.position - a.position, p.velocity - va, player_contact_distance(), horizon);
        consider(t, Other::Player);
    }
    best.map(|(time_to_contact, other)| ConflictReport { agent_id: a.id, other, time_to_contact })
}

/// Discs an agent in agent mode must plan around: every agent in obstacle
/// mode, plus the player widened by personal space.
pub fn replan_obstacles(agents: &[Agent], player: Option<&PlayerDisc>) -> Vec<ObstacleDisc> {
    let mut discs: Vec<ObstacleDisc> =
        agents.iter().filter(|a| a.mode == Mode::Obstacle).map(Agent::disc).collect();
    if let Some(p) = player {
        discs.push(ObstacleDisc::new(p.position, PLAYER_RADIUS + PLAYER_PERSONAL_SPACE));
    }
    discs
}

/// Shrinks (or drops) discs whose inflated area would contain `p`, so a
/// query never starts or ends inside an obstacle.
fn make_room(discs: &mut Vec<ObstacleDisc>, p: Point2, clearance: f64) {
    discs.retain_mut(|d| {
        let limit = d.center.distance(p) - clearance - 1e-6;
        if limit >= d.radius {
            return true;
        }
        d.radius = limit;
        limit > 1e-3
    });
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplanOutcome {
    Replanned,
    Waiting,
}

/// Replans agent `idx` toward its exit around everyone else.
pub fn replan(agents: &mut [Agent], idx: usize, mesh: &NavMesh, player: Option<&PlayerDisc>) -> ReplanOutcome {
    agents[idx].mode = Mode::Agent;
    let mut discs = replan_obstacles(agents, player);
    let (start, goal, clearance) = (agents[idx].position, agents[idx].exit, agents[idx].radius);
    make_room(&mut discs, start, clearance);
    make_room(&mut discs, goal, clearance);
    let a = &mut agents[idx];
    let outcome = match find_path(mesh, start, goal, &discs, clearance) {
        Ok(path) => {
            a.set_path(path);
            ReplanOutcome::Replanned
        }
        Err(_) => {
            a.waiting = true;
            ReplanOutcome::Waiting
        }
    };
    a.mode = Mode::Obstacle;
    a.replan_cooldown_ticks = REPLAN_COOLDOWN_TICKS;
    outcome
}

fn heading_of(dir: Point2) -> f64 {
    (-dir.x).atan2(dir.y)
}

/// Position and cursor after walking `dist` along the path.
fn advance(path: &Path, mut pos: Point2, mut cursor: usize, mut dist: f64) -> (Point2, usize) {
    while dist > 0.0 && cursor < path.waypoints.len() {
        let w = path.waypoints[cursor];
        let gap = pos.distance(w);
        if gap <= dist {
            pos = w;
            dist -= gap;
            cursor += 1;
        } else {
            pos = pos + (w - pos) * (dist / gap);
            dist = 0.0;
        }
    }
    (pos, cursor)
}

/// A step is refused when it ends inside contact distance of someone while
/// getting closer to them.
fn step_blocked(agents: &[Agent], i: usize, to: Point2, player: Option<&PlayerDisc>) -> bool {
    let from = agents[i].position;
    let closing = |center: Point2, limit: f64| {
        let after = to.distance(center);
        after < limit && after < from.distance(center)
    };
    if player.is_some_and(|p| closing(p.position, player_contact_distance())) {
        return true;
    }
    agents
        .iter()
        .enumerate()
        .any(|(j, b)| j != i && closing(b.position, agents[i].radius + b.radius))
}

/// Moves every agent one tick along its path in ascending id order and
/// removes those that reached their exit. Returns the removed ids.
pub fn step_agents(agents: &mut Vec<Agent>, player: Option<&PlayerDisc>, dt: f64) -> Vec<u64> {
    debug_assert!(agents.windows(2).all(|w| w[0].id < w[1].id));
    for i in 0..agents.len() {
        let a = &agents[i];
        if a.waiting || a.speed == 0.0 {
            continue;
        }
        let (to, cursor) = advance(&a.path, a.position, a.path_cursor, a.speed * dt);
        if to == a.position {
            agents[i].path_cursor = cursor;
            continue;
        }
        if step_blocked(agents, i, to, player) {
            continue;
        }
        let a = &mut agents[i];
        a.heading = heading_of(to - a.position);
        a.position = to;
        a.path_cursor = cursor;
    }
    let mut gone = Vec::new();
    agents.retain(|a| {
        let done = a.remaining_distance() <= ARRIVAL_TOLERANCE;
        if done {
            gone.push(a.id);
        }
        !done
    });
    gone
}

/// Target live population for a WalkingAmount level.
pub fn target_population(params: &ScenarioParams) -> usize {
    if params.pedestrians_enabled {
        AGENTS_PER_AMOUNT_LEVEL * params.walking_amount.max(0) as usize
    } else {
        0
    }
}

/// Lateral offsets of group members, centered on the route line.
pub fn member_offsets(size: usize) -> impl Iterator<Item = f64> {
    let mid = (size as f64 - 1.0) / 2.0;
    (0..size).map(move |i| (i as f64 - mid) * GROUP_SPACING)
}

/// Entry and exit of one group member on `route`.
pub fn member_endpoints(route: &RouteFamily, offset: f64) -> (Point2, Point2) {
    let side = (route.exit - route.entry).normalized().perp() * offset;
    (route.entry + side, route.exit + side)
}

/// All live pedestrians plus id counters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Crowd {
    pub agents: Vec<Agent>,
    pub next_agent_id: u64,
    pub next_group_id: u64,
}

impl Crowd {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_speed_level(&mut self, level: usize) {
        for a in &mut self.agents {
            a.set_speed_level(level);
        }
    }

    /// Spawns at most one group if the population is below target. A group
    /// whose entry is crowded, or whose route cannot be planned, waits.
    pub fn spawn_tick(
        &mut self,
        params: &ScenarioParams,
        routes: &[RouteFamily],
        mesh: &NavMesh,
        player: Option<&PlayerDisc>,
        rng: &mut SplitMix64,
        tick: u64,
    ) -> Option<SpawnGroup> {
        let target = target_population(params);
        if target == 0 {
            self.agents.clear();
            return None;
        }
        let families = (params.walking_direction.max(1) as usize).min(routes.len());
        if self.agents.len() >= target || families == 0 {
            return None;
        }
        let route = &routes[rng.below(families)];
        let size = params.walking_amount as usize + 1;
        let mut members = Vec::with_capacity(size);
        for offset in member_offsets(size) {
            let (entry, exit) = member_endpoints(route, offset);
            let crowded = self.agents.iter().any(|a| a.position.distance(entry) < SPAWN_CLEARANCE)
                || player.is_some_and(|p| p.position.distance(entry) < SPAWN_CLEARANCE);
            if crowded {
                return None;
            }
            let path = find_path(mesh, entry, exit, &[], 0.0).ok()?;
            members.push((entry, exit, path));
        }
        let group_id = self.next_group_id;
        self.next_group_id += 1;
        for (entry, exit, path) in members {
            let heading = path.waypoints.get(1).map_or(0.0, |&w| heading_of(w - entry));
            let mut agent = Agent {
                id: self.next_agent_id,
                group_id,
                route_family: route.id,
                position: entry,
                heading,
                radius: AGENT_RADIUS,
                speed_level: 0,
                speed: 0.0,
                exit,
                path,
                path_cursor: 1,
                mode: Mode::Obstacle,
                replan_cooldown_ticks: 0,
                waiting: false,
            };
            agent.set_speed_level(params.speed.max(0) as usize);
            self.next_agent_id += 1;
            self.agents.push(agent);
        }
        Some(SpawnGroup { group_id, size, route_family: route.id, spawn_tick: tick })
    }

    /// Conflict prediction and replanning, ascending id. Returns the
    /// conflicts that led to a replan.
    pub fn detect_and_replan(&mut self, mesh: &NavMesh, player: Option<&PlayerDisc>) -> Vec<(ConflictReport, ReplanOutcome)> {
        let mut out = Vec::new();
        for i in 0..self.agents.len() {
            let a = &mut self.agents[i];
            a.replan_cooldown_ticks = a.replan_cooldown_ticks.saturating_sub(1);
            if a.replan_cooldown_ticks > 0 || a.speed == 0.0 {
                continue;
            }
            let waiting = a.waiting;
            let report = predict_conflict(&self.agents[i], &self.agents, player, CONFLICT_HORIZON);
            if report.is_none() && !waiting {
                continue;
            }
            let outcome = replan(&mut self.agents, i, mesh, player);
            if let Some(r) = report {
                out.push((r, outcome));
            }
        }
        out
    }

    pub fn step(&mut self, player: Option<&PlayerDisc>, dt: f64) -> Vec<u64> {
        step_agents(&mut self.agents, player, dt)
    }
}
