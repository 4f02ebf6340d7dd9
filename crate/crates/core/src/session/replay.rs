use std::sync::Arc;

use serde_json::Value;
use thiserror::Error;

use crate::scenario::{Scene, SceneError};

use super::{Metrics, Record, Session, TickInputs, FORMAT_VERSION};
use super::log::{ParamChange, Script};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ReplayError {
    #[error("log is empty")]
    Empty,
    #[error("unsupported log format_version {0} (this build reads {FORMAT_VERSION})")]
    UnsupportedVersion(u64),
    #[error("log header is unreadable: {0}")]
    MalformedHeader(String),
    #[error("logged scenario is invalid: {0}")]
    Scene(SceneError),
    #[error("replay diverges at tick {tick} (log line {line})")]
    Divergence { tick: u64, line: usize, expected: String, found: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayReport {
    pub ticks: u64,
    /// Log lines compared against the re-simulation (0 without verification).
    pub lines_checked: usize,
    pub final_hash: Option<u64>,
    pub metrics: Metrics,
}

fn divergence(tick: u64, line: usize, expected: &str, found: &str) -> ReplayError {
    ReplayError::Divergence { tick, line, expected: expected.to_owned(), found: found.to_owned() }
}

/// Re-simulates a session log. With `verify`, every regenerated line must
/// equal the logged one byte for byte and the header checksum must hold;
/// any difference (including a damaged header) is a divergence.
pub fn replay(log: &str, verify: bool) -> Result<ReplayReport, ReplayError> {
    let lines: Vec<&str> = log.lines().collect();
    let first = *lines.first().ok_or(ReplayError::Empty)?;
    let header = match serde_json::from_str::<Record>(first) {
        Ok(Record::Header(h)) => h,
        other => {
            let version = serde_json::from_str::<Value>(first).ok().and_then(|v| v["format_version"].as_u64());
            if let Some(v) = version.filter(|&v| v != FORMAT_VERSION as u64) {
                return Err(ReplayError::UnsupportedVersion(v));
            }
            let reason = match other {
                Ok(_) => "first record is not a header".to_owned(),
                Err(e) => e.to_string(),
            };
            return Err(if verify { divergence(0, 1, first, &reason) } else { ReplayError::MalformedHeader(reason) });
        }
    };
    if header.format_version != FORMAT_VERSION {
        return Err(ReplayError::UnsupportedVersion(header.format_version as u64));
    }
    if verify {
        let regenerated = Record::Header(header.clone()).to_line();
        if header.checksum != header.compute_checksum() || regenerated != first {
            return Err(divergence(0, 1, first, &regenerated));
        }
    }
    let scene = match Scene::new(header.scenario.clone()) {
        Ok(s) => Arc::new(s),
        Err(e) if verify => return Err(divergence(0, 1, first, &e.to_string())),
        Err(e) => return Err(ReplayError::Scene(e)),
    };

    // Inputs, keyed by tick. Unreadable lines carry no inputs; verification
    // flags them when it reaches them.
    let mut script = Script::new();
    let mut last_tick = 0;
    for line in &lines[1..] {
        let Ok(rec) = serde_json::from_str::<Record>(line) else { continue };
        last_tick = last_tick.max(rec.tick());
        match rec {
            Record::Pose { tick, position, yaw, pitch } => {
                script.entry(tick).or_default().poses.push(crate::audio::ListenerPose { position, yaw, pitch })
            }
            Record::ParamChange { tick, name, value, .. } => {
                script.entry(tick).or_default().changes.push(ParamChange { name, value })
            }
            _ => {}
        }
    }

    let mut session = Session::new(scene, header.master_seed, header.scene_load);
    let empty = TickInputs::default();
    let mut cursor = 1;
    let mut final_hash = None;
    while session.tick_count() < last_tick {
        let next = session.tick_count() + 1;
        let out = session.tick(script.get(&next).unwrap_or(&empty));
        final_hash = Some(out.hash);
        if verify {
            for produced in &out.lines {
                let logged = lines.get(cursor).copied().unwrap_or("");
                if logged != produced {
                    return Err(divergence(out.tick, cursor + 1, logged, produced));
                }
                cursor += 1;
            }
        }
    }
    if verify && cursor < lines.len() {
        return Err(divergence(last_tick, cursor + 1, lines[cursor], ""));
    }
    Ok(ReplayReport {
        ticks: session.tick_count(),
        lines_checked: if verify { cursor } else { 0 },
        final_hash,
        metrics: session.metrics().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::SceneId;
    use crate::session::{ParamChange, TickInputs};
    use crate::audio::ListenerPose;
    use crate::geom::Point3;

    fn make_log(ticks: u64) -> String {
        let mut s = Session::new(Arc::new(Scene::builtin(SceneId::BallPark)), 9, 0);
        let mut out = vec![s.header_line()];
        for t in 1..=ticks {
            let mut inputs = TickInputs::default();
            if t % 30 == 0 {
                inputs.poses.push(ListenerPose { position: Point3::new(30.0 + (t as f64 * 0.01).sin(), 30.0, 1.7), yaw: 0.1, pitch: 0.0 });
            }
            if t == 50 {
                inputs.changes.push(ParamChange { name: "difficulty".into(), value: 4.into() });
                inputs.changes.push(ParamChange { name: "speed".into(), value: 9.into() });
            }
            out.extend(s.tick(&inputs).lines);
        }
        out.join("\n") + "\n"
    }

    #[test]
    fn fresh_log_replays_clean() {
        let log = make_log(900);
        let r = replay(&log, true).unwrap();
        assert_eq!(r.ticks, 900);
        assert_eq!(r.lines_checked, log.lines().count());
    }

    #[test]
    fn tampered_pose_diverges_at_its_tick() {
        let log = make_log(300);
        let at = log.find("\"kind\":\"pose\",\"tick\":120").unwrap();
        let digit = at + log[at..].find("[30.").unwrap() + 2;
        let mut bytes = log.into_bytes();
        bytes[digit] = b'1';
        let tampered = String::from_utf8(bytes).unwrap();
        match replay(&tampered, true) {
            Err(ReplayError::Divergence { tick, .. }) => assert_eq!(tick, 120),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn header_damage_is_caught() {
        let log = make_log(10);
        let tampered = log.replacen("south path eastbound", "south path eastbounD", 1);
        assert!(matches!(replay(&tampered, true), Err(ReplayError::Divergence { tick: 0, .. })));
        let v2 = log.replacen("\"format_version\":1", "\"format_version\":2", 1);
        assert_eq!(replay(&v2, true), Err(ReplayError::UnsupportedVersion(2)));
    }
}
