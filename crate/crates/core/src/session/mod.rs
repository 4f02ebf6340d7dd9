//! The fixed-step tick loop, its log and replay.
//!
//! Each tick runs nine phases in a fixed order: pose, parameter changes,
//! timers and spawning, conflict replans, integration, ball resolution,
//! cues, metrics, log records. Nothing reads the wall clock, so a seed and an
//! input script fully determine the run.

mod log;
mod metrics;
mod replay;
mod snapshot;

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::audio::{active_cues, ambiance, AmbianceState, ListenerPose, SoundSource, SpatialCue};
use crate::crowd::{Crowd, PlayerDisc};
use crate::events::{EventState, SimEvent, CAR_HEIGHT};
use crate::geom::Point3;
use crate::rng::{derive_stream, SplitMix64};
use crate::scenario::{apply_change, ParamError, ScenarioParams, Scene};

pub use log::{parse_script, Header, ParamChange, Record, Script, ScriptError, TickInputs};
pub use metrics::Metrics;
pub use replay::{replay, ReplayError, ReplayReport};
pub use snapshot::{format_hash, AgentView, BallView, CarView, MetricsView, PlayerView, Snapshot, TrainView};

pub const TICK_HZ: u32 = 90;
pub const DT: f64 = 1.0 / TICK_HZ as f64;
pub const FORMAT_VERSION: u32 = 1;

pub const PHASES: [&str; 9] =
    ["pose", "params", "schedulers", "replan", "integrate", "balls", "cues", "metrics", "log"];

/// Accumulated wall time per phase.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseTimes {
    pub total: [Duration; 9],
}

/// What one tick produced.
#[derive(Clone, Debug, PartialEq)]
pub struct TickOutput {
    pub tick: u64,
    pub events: Vec<SimEvent>,
    /// One entry per requested change, in order.
    pub param_results: Vec<Result<(), ParamError>>,
    pub hash: u64,
    /// Log lines for this tick, without trailing newlines.
    pub lines: Vec<String>,
}

/// A running session. Serializing it captures the whole simulated state.
#[derive(Clone, Debug, Serialize)]
pub struct Session {
    #[serde(skip)]
    scene: Arc<Scene>,
    master_seed: u64,
    scene_load: u64,
    tick: u64,
    params: ScenarioParams,
    listener: ListenerPose,
    player: PlayerDisc,
    crowd: Crowd,
    spawn_rng: SplitMix64,
    events: EventState,
    cues: Vec<SpatialCue>,
    ambiance: AmbianceState,
    metrics: Metrics,
    #[serde(skip)]
    timing: Option<PhaseTimes>,
}

fn spawn_pose(scene: &Scene, params: &ScenarioParams) -> ListenerPose {
    let s = scene.spawn(&params.spawn).unwrap_or(&scene.def.spawns[0]);
    ListenerPose { position: s.position, yaw: s.yaw, pitch: 0.0 }
}

impl Session {
    /// Starts at tick 0 with the scene's own parameters.
    pub fn new(scene: Arc<Scene>, master_seed: u64, scene_load: u64) -> Session {
        let params = scene.def.params.clone();
        let listener = spawn_pose(&scene, &params);
        let events = EventState::new(&scene, &params, master_seed, scene_load, 0.0);
        let tier = params.sound_level.clamp(0, 2) as u8;
        let ambiance = ambiance(&scene.def.ambiance, tier, &listener);
        Session {
            master_seed,
            scene_load,
            tick: 0,
            player: PlayerDisc::at(listener.position.ground()),
            listener,
            crowd: Crowd::new(),
            spawn_rng: derive_stream(master_seed, "spawn", scene_load),
            events,
            cues: Vec::new(),
            ambiance,
            metrics: Metrics::default(),
            params,
            scene,
            timing: None,
        }
    }

    pub fn header(&self) -> Header {
        Header::new(self.master_seed, self.scene_load, self.scene.def.clone())
    }

    pub fn header_line(&self) -> String {
        Record::Header(self.header()).to_line()
    }

    pub fn scene(&self) -> &Arc<Scene> {
        &self.scene
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn sim_time(&self) -> f64 {
        self.tick as f64 * DT
    }

    pub fn params(&self) -> &ScenarioParams {
        &self.params
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn crowd(&self) -> &Crowd {
        &self.crowd
    }

    pub fn events(&self) -> &EventState {
        &self.events
    }

    pub fn listener(&self) -> &ListenerPose {
        &self.listener
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn scene_load(&self) -> u64 {
        self.scene_load
    }

    /// Full state as JSON, for comparing runs.
    pub fn state_json(&self) -> String {
        serde_json::to_string(self).expect("session state serializes")
    }

    /// Turns per-phase timing on (and resets it).
    pub fn enable_timing(&mut self) {
        self.timing = Some(PhaseTimes::default());
    }

    pub fn timing(&self) -> Option<&PhaseTimes> {
        self.timing.as_ref()
    }

    /// Advances one tick.
    pub fn tick(&mut self, inputs: &TickInputs) -> TickOutput {
        let mut clock = self.timing.is_some().then(Instant::now);
        let mut lap = |timing: &mut Option<PhaseTimes>, phase: usize| {
            if let (Some(t), Some(start)) = (timing.as_mut(), clock.as_mut()) {
                let now = Instant::now();
                t.total[phase] += now - *start;
                *start = now;
            }
        };

        self.tick += 1;
        let tick = self.tick;
        let now = self.sim_time();
        let mut lines = Vec::new();

        // 1. pose
        let before = self.player.position;
        for p in &inputs.poses {
            self.listener = *p;
            lines.push(Record::pose(tick, p).to_line());
        }
        self.player.position = self.listener.position.ground();
        self.player.velocity = (self.player.position - before) * (1.0 / DT);
        lap(&mut self.timing, 0);

        // 2. parameter changes
        let mut param_results = Vec::with_capacity(inputs.changes.len());
        for c in &inputs.changes {
            let result = apply_change(&self.params, &c.name, &c.value);
            let error = result.as_ref().err().map(|e| e.code().to_owned());
            match result {
                Ok(next) => {
                    if next.spawn != self.params.spawn {
                        self.listener = spawn_pose(&self.scene, &next);
                        self.player = PlayerDisc::at(self.listener.position.ground());
                    }
                    self.params = next;
                    self.metrics.param_change_count += 1;
                    param_results.push(Ok(()));
                }
                Err(e) => {
                    self.metrics.rejected_param_changes += 1;
                    param_results.push(Err(e));
                }
            }
            lines.push(Record::ParamChange { tick, name: c.name.clone(), value: c.value.clone(), error }.to_line());
        }
        self.crowd.set_speed_level(self.params.speed.clamp(0, 3) as usize);
        lap(&mut self.timing, 1);

        // 3. schedulers and spawning
        let mut events = Vec::new();
        let scene = Arc::clone(&self.scene);
        if let Some(g) =
            self.crowd.spawn_tick(&self.params, &scene.def.routes, &scene.mesh, Some(&self.player), &mut self.spawn_rng, tick)
        {
            events.push(SimEvent::GroupSpawned { group: g.group_id, size: g.size, route_family: g.route_family });
        }
        let launched_before = self.events.next_ball_id;
        self.events.advance(&scene, &self.params, self.listener.position, now, &mut events);
        self.metrics.balls_launched += self.events.next_ball_id - launched_before;
        lap(&mut self.timing, 2);

        // 4. conflicts and replans
        self.crowd.detect_and_replan(&scene.mesh, Some(&self.player));
        lap(&mut self.timing, 3);

        // 5. integration
        self.crowd.step(Some(&self.player), DT);
        self.events.integrate(&scene, now, DT, &mut events);
        lap(&mut self.timing, 4);

        // 6. balls
        for o in self.events.resolve(self.listener.position, now, DT, &mut events) {
            self.metrics.record_outcome(o);
        }
        lap(&mut self.timing, 5);

        // 7. cues
        let tier = self.params.sound_level.clamp(0, 2) as u8;
        self.cues = if tier == 0 { Vec::new() } else { active_cues(tier, &self.sound_sources(now), &self.listener) };
        self.ambiance = ambiance(&scene.def.ambiance, tier, &self.listener);
        lap(&mut self.timing, 6);

        // 8. metrics
        self.metrics.tier_ticks[tier as usize] += 1;
        for a in &self.crowd.agents {
            self.metrics.observe_player_distance(a.position.distance(self.player.position));
        }
        lap(&mut self.timing, 7);

        // 9. log
        for e in &events {
            lines.push(Record::Event { tick, event: e.clone() }.to_line());
        }
        let hash = self.snapshot().hash();
        lines.push(Record::SnapshotHash { tick, hash: format_hash(hash) }.to_line());
        lap(&mut self.timing, 8);

        TickOutput { tick, events, param_results, hash, lines }
    }

    /// Everything audible right now, before tier selection.
    fn sound_sources(&self, now: f64) -> Vec<SoundSource> {
        let def = &self.scene.def;
        let tier_of = |id: &str| def.cues.iter().find(|c| c.id == id && c.position.is_none()).map(|c| c.min_tier);
        let mut out: Vec<SoundSource> = def
            .cues
            .iter()
            .filter_map(|c| c.position.map(|p| SoundSource { cue: c.id.clone(), position: p, min_tier: c.min_tier }))
            .collect();
        let mut push = |id: &str, position: Point3| {
            if let Some(min_tier) = tier_of(id) {
                out.push(SoundSource { cue: id.to_owned(), position, min_tier });
            }
        };
        for a in &self.crowd.agents {
            push("footsteps", a.position.with_z(self.scene.elevation_at(a.position)));
        }
        for c in &self.events.cars {
            push("car", c.position(&def.lanes).with_z(CAR_HEIGHT));
        }
        for t in &self.events.trains {
            if let Some(r) = def.rails.iter().find(|r| r.id == t.rail) {
                push("train", t.center(r, now));
            }
        }
        if let Some(path) = &def.plane_path {
            for p in &self.events.planes {
                push("airplane", p.position(path, now));
            }
        }
        for b in &self.events.balls {
            push("ball", b.position_at(now));
        }
        out
    }

    pub fn snapshot(&self) -> Snapshot {
        let def = &self.scene.def;
        let now = self.sim_time();
        Snapshot {
            tick: self.tick,
            sim_time: now,
            scene: def.scene,
            params: self.params.clone(),
            player: PlayerView { position: self.listener.position, yaw: self.listener.yaw, pitch: self.listener.pitch },
            agents: self
                .crowd
                .agents
                .iter()
                .map(|a| AgentView {
                    id: a.id,
                    x: a.position.x,
                    y: a.position.y,
                    heading: a.heading,
                    group: a.group_id,
                    mode: a.mode,
                    waiting: a.waiting,
                })
                .collect(),
            balls: self
                .events
                .balls
                .iter()
                .map(|b| BallView { id: b.id, machine: b.machine, position: b.position_at(now) })
                .collect(),
            trains: self
                .events
                .trains
                .iter()
                .filter_map(|t| {
                    let r = def.rails.iter().find(|r| r.id == t.rail)?;
                    let (nose, tail) = t.extent(r, now);
                    Some(TrainView { rail: t.rail, nose, tail })
                })
                .collect(),
            planes: match &def.plane_path {
                Some(path) => self.events.planes.iter().map(|p| p.position(path, now)).collect(),
                None => Vec::new(),
            },
            cars: self
                .events
                .cars
                .iter()
                .map(|c| CarView { id: c.id, lane: c.lane, position: c.position(&def.lanes), speed: c.speed })
                .collect(),
            cues: self.cues.clone(),
            ambiance: self.ambiance.clone(),
            metrics: MetricsView {
                counters: self.metrics.clone(),
                exposure_seconds_per_sound_tier: self.metrics.exposure_seconds_per_sound_tier(),
            },
        }
    }
}
