//! Planes, trains, cars and tennis balls.
//!
//! Every timer draws its gaps from its own PRNG stream, so the schedule of
//! one rail or machine never depends on how often another one fired.

mod ballistics;
mod schedule;
mod vehicles;

use serde::{Deserialize, Serialize};

use crate::geom::{Point3, Vec3};
use crate::rng::{derive_stream, SplitMix64};
use crate::scenario::{ScenarioParams, Scene, SceneId};

pub use ballistics::{
    ballistic_position, resolve_ball, solve_ball_launch, solve_with_time, BallFlight, BallOutcome, FlightState,
    LaunchError, BALL_RADIUS, BALL_SPEED, DODGE_RANGE, EXPIRE_DISTANCE, GRAVITY, HEAD_RADIUS,
};
pub use schedule::{
    ball_interval, ball_schedule, next_plane_gap, next_train_gap, override_schedule, BallSchedule, ScheduleError,
    MACHINE_COUNT, PLANE_GAP, TRAIN_GAP,
};
pub use vehicles::{
    car_circulation, drive_cars, BallMachine, Car, Lane, PlaneFlyover, PlanePath, Rail, TrainPass, CAR_HEIGHT,
    CAR_TABLE, CITY_CAR_SPEEDS, PLANE_TRAVERSAL, TRAIN_LENGTH, TRAIN_SPEED,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum TimerKind {
    Plane,
    Train(u32),
    Ball(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventTimer {
    pub kind: TimerKind,
    pub next_fire: f64,
}

/// Something worth a line in the session log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SimEvent {
    PlaneStart,
    PlaneEnd,
    TrainStart { rail: u32 },
    TrainEnd { rail: u32 },
    BallSchedule { machines: Vec<usize>, interval: (f64, f64) },
    BallLaunch { ball: u64, machine: usize, velocity: Vec3 },
    BallSkipped { machine: usize, reason: LaunchError },
    BallResolved { ball: u64, outcome: BallOutcome, min_distance: f64 },
    GroupSpawned { group: u64, size: usize, route_family: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Streams {
    plane: SplitMix64,
    trains: Vec<SplitMix64>,
    balls: SplitMix64,
    machines: Vec<SplitMix64>,
    cars: SplitMix64,
}

/// What the ball timers were last built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct BallKey {
    difficulty: Option<i64>,
    mask: Option<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventState {
    streams: Streams,
    pub timers: Vec<EventTimer>,
    pub planes: Vec<PlaneFlyover>,
    pub trains: Vec<TrainPass>,
    pub ball_schedule: Option<BallSchedule>,
    ball_key: Option<BallKey>,
    pub balls: Vec<BallFlight>,
    pub next_ball_id: u64,
    pub cars: Vec<Car>,
    pub next_car_id: u64,
}

impl EventState {
    /// Fresh schedulers for `scene`, with each recurring timer primed one
    /// sampled gap after `now`.
    pub fn new(scene: &Scene, params: &ScenarioParams, master_seed: u64, scene_load: u64, now: f64) -> Self {
        let def = &scene.def;
        let mut streams = Streams {
            plane: derive_stream(master_seed, "plane", scene_load),
            trains: (0..def.rails.len()).map(|i| derive_stream(master_seed, &format!("train/{i}"), scene_load)).collect(),
            balls: derive_stream(master_seed, "balls", scene_load),
            machines: (0..def.machines.len()).map(|i| derive_stream(master_seed, &format!("ball/{i}"), scene_load)).collect(),
            cars: derive_stream(master_seed, "cars", scene_load),
        };
        let mut timers = Vec::new();
        if def.plane_path.is_some() {
            timers.push(EventTimer { kind: TimerKind::Plane, next_fire: now + next_plane_gap(&mut streams.plane) });
        }
        for (i, rail) in def.rails.iter().enumerate() {
            timers.push(EventTimer { kind: TimerKind::Train(rail.id), next_fire: now + next_train_gap(&mut streams.trains[i]) });
        }
        let mut state = Self {
            streams,
            timers,
            planes: Vec::new(),
            trains: Vec::new(),
            ball_schedule: None,
            ball_key: None,
            balls: Vec::new(),
            next_ball_id: 0,
            cars: Vec::new(),
            next_car_id: 0,
        };
        let mut sink = Vec::new();
        state.sync_ball_schedule(scene, params, now, &mut sink);
        state
    }

    fn sync_ball_schedule(&mut self, scene: &Scene, params: &ScenarioParams, now: f64, out: &mut Vec<SimEvent>) {
        if scene.id() != SceneId::BallPark || scene.def.machines.is_empty() {
            return;
        }
        let key = BallKey { difficulty: params.difficulty, mask: params.machine_mask_override.clone() };
        if self.ball_key.as_ref() == Some(&key) {
            return;
        }
        let schedule = match &key.mask {
            Some(mask) => override_schedule(mask),
            None => ball_schedule(key.difficulty.unwrap_or(0), &mut self.streams.balls),
        };
        self.ball_key = Some(key);
        self.timers.retain(|t| !matches!(t.kind, TimerKind::Ball(_)));
        let Ok(schedule) = schedule else {
            self.ball_schedule = None;
            return;
        };
        for &m in &schedule.machines {
            if let Some(rng) = self.streams.machines.get_mut(m) {
                let gap = schedule.sample_interval(rng);
                self.timers.push(EventTimer { kind: TimerKind::Ball(m), next_fire: now + gap });
            }
        }
        out.push(SimEvent::BallSchedule { machines: schedule.machines.clone(), interval: schedule.interval });
        self.ball_schedule = Some(schedule);
    }

    /// Fires due timers and brings the car population in line with the
    /// parameters. Balls are aimed at `head` as it is right now.
    pub fn advance(&mut self, scene: &Scene, params: &ScenarioParams, head: Point3, now: f64, out: &mut Vec<SimEvent>) {
        self.sync_ball_schedule(scene, params, now, out);
        let def = &scene.def;
        for ti in 0..self.timers.len() {
            while self.timers[ti].next_fire <= now {
                let kind = self.timers[ti].kind;
                let gap = match kind {
                    TimerKind::Plane => {
                        self.planes.push(PlaneFlyover::new(now));
                        out.push(SimEvent::PlaneStart);
                        next_plane_gap(&mut self.streams.plane)
                    }
                    TimerKind::Train(rail) => {
                        self.trains.push(TrainPass::new(rail, now));
                        out.push(SimEvent::TrainStart { rail });
                        let i = def.rails.iter().position(|r| r.id == rail).unwrap_or(0);
                        next_train_gap(&mut self.streams.trains[i])
                    }
                    TimerKind::Ball(m) => {
                        let muzzle = def.machines[m].position;
                        match solve_ball_launch(muzzle, head, BALL_SPEED) {
                            Ok(v) => {
                                let id = self.next_ball_id;
                                self.next_ball_id += 1;
                                self.balls.push(BallFlight::new(id, m, now, muzzle, v));
                                out.push(SimEvent::BallLaunch { ball: id, machine: m, velocity: v });
                            }
                            Err(reason) => out.push(SimEvent::BallSkipped { machine: m, reason }),
                        }
                        let schedule = self.ball_schedule.as_ref().expect("ball timers imply a schedule");
                        schedule.sample_interval(&mut self.streams.machines[m])
                    }
                };
                self.timers[ti].next_fire += gap;
            }
        }
        if scene.id().has_cars() {
            let level = params.car_amount.unwrap_or(0).clamp(0, 3) as usize;
            let speed = match scene.id() {
                SceneId::City => CITY_CAR_SPEEDS[params.speed.clamp(0, 3) as usize],
                _ => def.car_speed.unwrap_or(0.0),
            };
            car_circulation(&mut self.cars, &mut self.next_car_id, &def.lanes, CAR_TABLE[level], speed, &mut self.streams.cars);
        }
    }

    /// Moves cars and retires trains and planes that have left the scene.
    pub fn integrate(&mut self, scene: &Scene, now: f64, dt: f64, out: &mut Vec<SimEvent>) {
        let def = &scene.def;
        drive_cars(&mut self.cars, &def.lanes, dt);
        self.planes.retain(|p| {
            let done = p.finished(now);
            if done {
                out.push(SimEvent::PlaneEnd);
            }
            !done
        });
        self.trains.retain(|t| {
            let done = def.rails.iter().find(|r| r.id == t.rail).is_none_or(|r| t.finished(r, now));
            if done {
                out.push(SimEvent::TrainEnd { rail: t.rail });
            }
            !done
        });
    }

    /// Resolves balls against the head and drops resolved flights.
    pub fn resolve(&mut self, head: Point3, now: f64, dt: f64, out: &mut Vec<SimEvent>) -> Vec<BallOutcome> {
        let mut outcomes = Vec::new();
        for f in &mut self.balls {
            if let Some(o) = resolve_ball(f, head, now, dt) {
                outcomes.push(o);
                out.push(SimEvent::BallResolved { ball: f.id, outcome: o, min_distance: f.min_distance });
            }
        }
        self.balls.retain(|f| f.state == FlightState::InFlight);
        outcomes
    }
}
