use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;

pub const PLANE_GAP: (f64, f64) = (50.0, 58.0);
pub const TRAIN_GAP: (f64, f64) = (35.0, 50.0);
pub const MACHINE_COUNT: usize = 3;

/// Seconds until the next plane flyover.
pub fn next_plane_gap(rng: &mut SplitMix64) -> f64 {
    rng.uniform(PLANE_GAP.0, PLANE_GAP.1)
}

/// Seconds until the next train on one rail. Each rail owns its stream.
pub fn next_train_gap(rng: &mut SplitMix64) -> f64 {
    rng.uniform(TRAIN_GAP.0, TRAIN_GAP.1)
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("difficulty {0} is out of range (valid 0-4)")]
    Difficulty(i64),
    #[error("machine {0} does not exist")]
    Machine(i64),
}

/// Which machines fire and how far apart their shots are.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSchedule {
    /// Active machine ids, ascending.
    pub machines: Vec<usize>,
    /// Closed range of seconds between two shots of one machine.
    pub interval: (f64, f64),
}

impl BallSchedule {
    pub fn sample_interval(&self, rng: &mut SplitMix64) -> f64 {
        rng.uniform(self.interval.0, self.interval.1)
    }
}

/// Interval range for a difficulty level.
pub fn ball_interval(difficulty: i64) -> Result<(f64, f64), ScheduleError> {
    match difficulty {
        0 => Ok((2.0, 4.0)),
        1..=3 => Ok((3.0 + difficulty as f64, 5.0 + difficulty as f64)),
        4 => Ok((3.0, 5.0)),
        _ => Err(ScheduleError::Difficulty(difficulty)),
    }
}

/// Active machines and interval for a difficulty level. Machine choice
/// draws from `rng`; level 0 always uses machine 0.
pub fn ball_schedule(difficulty: i64, rng: &mut SplitMix64) -> Result<BallSchedule, ScheduleError> {
    let interval = ball_interval(difficulty)?;
    let machines = match difficulty {
        0 => vec![0],
        1..=3 => vec![rng.below(MACHINE_COUNT)],
        _ => {
            let first = rng.below(MACHINE_COUNT);
            let second = (first + 1 + rng.below(MACHINE_COUNT - 1)) % MACHINE_COUNT;
            let mut pair = vec![first, second];
            pair.sort_unstable();
            pair
        }
    };
    Ok(BallSchedule { machines, interval })
}

/// Schedule for a therapist-picked set of machines. Uses the level-0 pace.
pub fn override_schedule(mask: &[i64]) -> Result<BallSchedule, ScheduleError> {
    let mut machines = Vec::with_capacity(mask.len());
    for &m in mask {
        if !(0..MACHINE_COUNT as i64).contains(&m) {
            return Err(ScheduleError::Machine(m));
        }
        machines.push(m as usize);
    }
    machines.sort_unstable();
    machines.dedup();
    Ok(BallSchedule { machines, interval: (2.0, 4.0) })
}
