use serde::{Deserialize, Serialize};

use crate::geom::{Point2, Point3};
use crate::rng::SplitMix64;

pub const TRAIN_SPEED: f64 = 15.0;
pub const TRAIN_LENGTH: f64 = 80.0;
pub const PLANE_TRAVERSAL: f64 = 8.0;
/// Cars on the road for each CarAmount level.
pub const CAR_TABLE: [usize; 4] = [0, 4, 8, 16];
/// City car speed in m/s for each Speed level.
pub const CITY_CAR_SPEEDS: [f64; 4] = [0.0, 5.0, 8.0, 11.0];
pub const CAR_HEIGHT: f64 = 0.5;

/// A closed loop cars drive around.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: u32,
    pub points: Vec<Point2>,
}

impl Lane {
    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| a.distance(b)).sum()
    }

    fn segments(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.points.len();
        (0..n).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    /// Point at arc length `s` (wrapped) and the unit travel direction.
    pub fn point_at(&self, s: f64) -> (Point2, Point2) {
        let len = self.length();
        let mut s = s.rem_euclid(len.max(f64::MIN_POSITIVE));
        let mut last = (self.points[0], Point2::new(0.0, 1.0));
        for (a, b) in self.segments() {
            let seg = a.distance(b);
            if seg == 0.0 {
                continue;
            }
            let dir = (b - a) * (1.0 / seg);
            if s <= seg {
                return (a + dir * s, dir);
            }
            s -= seg;
            last = (b, dir);
        }
        last
    }
}

/// A straight track trains run along from `start` to `end`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rail {
    pub id: u32,
    pub start: Point3,
    pub end: Point3,
}

impl Rail {
    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanePath {
    pub start: Point3,
    pub end: Point3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallMachine {
    pub id: u32,
    /// Muzzle position.
    pub position: Point3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainPass {
    pub rail: u32,
    pub entry_time: f64,
    pub speed: f64,
    pub length: f64,
}

impl TrainPass {
    pub fn new(rail: u32, entry_time: f64) -> Self {
        Self { rail, entry_time, speed: TRAIN_SPEED, length: TRAIN_LENGTH }
    }

    /// Distance the train's nose has travelled along the rail.
    pub fn nose_at(&self, t: f64) -> f64 {
        (t - self.entry_time) * self.speed
    }

    /// Nose and tail positions, each clamped to the rail.
    pub fn extent(&self, rail: &Rail, t: f64) -> (Point3, Point3) {
        let len = rail.length();
        let at = |s: f64| {
            let f = if len > 0.0 { (s / len).clamp(0.0, 1.0) } else { 0.0 };
            rail.start + (rail.end - rail.start) * f
        };
        let nose = self.nose_at(t);
        (at(nose), at(nose - self.length))
    }

    /// Sound source: the middle of the visible part of the train.
    pub fn center(&self, rail: &Rail, t: f64) -> Point3 {
        let (a, b) = self.extent(rail, t);
        (a + b) * 0.5
    }

    pub fn finished(&self, rail: &Rail, t: f64) -> bool {
        self.nose_at(t) >= rail.length() + self.length
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneFlyover {
    pub entry_time: f64,
    pub traversal: f64,
}

impl PlaneFlyover {
    pub fn new(entry_time: f64) -> Self {
        Self { entry_time, traversal: PLANE_TRAVERSAL }
    }

    pub fn position(&self, path: &PlanePath, t: f64) -> Point3 {
        let f = ((t - self.entry_time) / self.traversal).clamp(0.0, 1.0);
        path.start + (path.end - path.start) * f
    }

    pub fn finished(&self, t: f64) -> bool {
        t - self.entry_time >= self.traversal
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Car {
    pub id: u64,
    pub lane: u32,
    /// Arc length along the lane loop.
    pub s: f64,
    pub speed: f64,
}

impl Car {
    pub fn position(&self, lanes: &[Lane]) -> Point2 {
        lane_by_id(lanes, self.lane).map_or(Point2::ZERO, |l| l.point_at(self.s).0)
    }
}

fn lane_by_id(lanes: &[Lane], id: u32) -> Option<&Lane> {
    lanes.iter().find(|l| l.id == id)
}

/// Brings the car set to `target` cars at `speed`. New cars join lanes
/// round-robin at a random spot; surplus cars leave newest first.
pub fn car_circulation(cars: &mut Vec<Car>, next_id: &mut u64, lanes: &[Lane], target: usize, speed: f64, rng: &mut SplitMix64) {
    if lanes.is_empty() {
        cars.clear();
        return;
    }
    cars.truncate(target);
    while cars.len() < target {
        let lane = &lanes[cars.len() % lanes.len()];
        let s = rng.uniform(0.0, lane.length());
        cars.push(Car { id: *next_id, lane: lane.id, s, speed });
        *next_id += 1;
    }
    for c in cars.iter_mut() {
        c.speed = speed;
    }
}

/// Moves every car `dt` seconds along its loop.
pub fn drive_cars(cars: &mut [Car], lanes: &[Lane], dt: f64) {
    for c in cars {
        if let Some(l) = lane_by_id(lanes, c.lane) {
            c.s = (c.s + c.speed * dt).rem_euclid(l.length());
        }
    }
}
