use serde::{Deserialize, Serialize};

use crate::events::BallOutcome;

use super::DT;

/// Running counters for one session.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub balls_launched: u64,
    pub hits: u64,
    pub dodges: u64,
    pub expired: u64,
    /// Closest center distance between the player and any pedestrian.
    pub min_player_agent_distance: Option<f64>,
    /// Ticks spent at each sound tier.
    pub tier_ticks: [u64; 3],
    pub param_change_count: u64,
    pub rejected_param_changes: u64,
}

impl Metrics {
    pub fn record_outcome(&mut self, o: BallOutcome) {
        match o {
            BallOutcome::Hit => self.hits += 1,
            BallOutcome::Dodged => self.dodges += 1,
            BallOutcome::Expired => self.expired += 1,
        }
    }

    pub fn exposure_seconds_per_sound_tier(&self) -> [f64; 3] {
        self.tier_ticks.map(|t| t as f64 * DT)
    }

    pub fn observe_player_distance(&mut self, d: f64) {
        if self.min_player_agent_distance.is_none_or(|m| d < m) {
            self.min_player_agent_distance = Some(d);
        }
    }
}
