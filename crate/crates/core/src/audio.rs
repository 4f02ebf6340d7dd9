//! Listener-relative sound cues.
//!
//! The engine only says where each sound is and how loud it should be; a
//! renderer does the actual mixing. Azimuth is measured from the listener's
//! forward direction, positive to the left; elevation is positive upward.

use serde::{Deserialize, Serialize};

use crate::geom::{Point3, Vec3};

/// Nearest sources kept at the moderate tier.
pub const K1: usize = 8;
/// Cap on sources at the bustling tier.
pub const K2: usize = 32;

/// Head position and orientation. Yaw 0 faces +y and grows
/// counterclockwise seen from above; pitch grows looking up.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ListenerPose {
    pub position: Point3,
    pub yaw: f64,
    pub pitch: f64,
}

impl ListenerPose {
    /// Forward, left and up unit vectors of the head frame.
    pub fn basis(&self) -> (Vec3, Vec3, Vec3) {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let flat = Vec3::new(-sy, cy, 0.0);
        let left = Vec3::new(-cy, -sy, 0.0);
        let forward = Vec3::new(flat.x * cp, flat.y * cp, sp);
        let up = Vec3::new(-flat.x * sp, -flat.y * sp, cp);
        (forward, left, up)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CueGeometry {
    pub azimuth: f64,
    pub elevation: f64,
    pub distance: f64,
}

/// Direction and distance of `source` in the listener's frame, in degrees.
pub fn spatialize(source: Point3, listener: &ListenerPose) -> CueGeometry {
    let rel = source - listener.position;
    let distance = rel.length();
    if distance == 0.0 {
        return CueGeometry { azimuth: 0.0, elevation: 0.0, distance: 0.0 };
    }
    let (f, l, u) = listener.basis();
    let (x, y, z) = (rel.dot(f), rel.dot(l), rel.dot(u));
    CueGeometry {
        azimuth: y.atan2(x).to_degrees(),
        elevation: z.atan2(x.hypot(y)).to_degrees(),
        distance,
    }
}

/// World-space unit vector pointing along (`azimuth`, `elevation`) degrees
/// from `listener`.
pub fn direction_from(azimuth: f64, elevation: f64, listener: &ListenerPose) -> Vec3 {
    let (f, l, u) = listener.basis();
    let (sa, ca) = azimuth.to_radians().sin_cos();
    let (se, ce) = elevation.to_radians().sin_cos();
    f * (ce * ca) + l * (ce * sa) + u * se
}

/// Inverse-distance gain with a 1 m reference.
pub fn gain_model(distance: f64) -> f64 {
    (1.0 / distance.max(1.0)).clamp(0.0, 1.0)
}

/// One audible thing in the world this tick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoundSource {
    pub cue: String,
    pub position: Point3,
    pub min_tier: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialCue {
    pub cue: String,
    pub az: f64,
    pub el: f64,
    pub dist: f64,
    pub gain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbianceState {
    pub bed: String,
    /// Always the negated listener yaw: the bed counter-rotates.
    pub rot: f64,
    pub tier: u8,
}

pub fn ambiance(bed: &str, tier: u8, listener: &ListenerPose) -> AmbianceState {
    AmbianceState { bed: bed.to_owned(), rot: -listener.yaw, tier }
}

/// Indices of the sources audible at `tier`, nearest first. Tier 2 keeps
/// everything tier 1 picked and tops up with the nearest remaining sources.
pub fn select_sources(tier: u8, sources: &[SoundSource], listener: &ListenerPose) -> Vec<usize> {
    if tier == 0 {
        return Vec::new();
    }
    let mut order: Vec<(f64, usize)> =
        sources.iter().enumerate().map(|(i, s)| (s.position.distance(listener.position), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut chosen: Vec<(f64, usize)> =
        order.iter().copied().filter(|&(_, i)| sources[i].min_tier <= 1).take(K1).collect();
    if tier >= 2 {
        let room = K2.saturating_sub(chosen.len());
        let extra: Vec<(f64, usize)> = order
            .iter()
            .copied()
            .filter(|&(_, i)| sources[i].min_tier <= 2 && !chosen.iter().any(|&(_, j)| j == i))
            .take(room)
            .collect();
        chosen.extend(extra);
        chosen.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    }
    chosen.into_iter().map(|(_, i)| i).collect()
}

/// Cues for every audible source, nearest first.
pub fn active_cues(tier: u8, sources: &[SoundSource], listener: &ListenerPose) -> Vec<SpatialCue> {
    select_sources(tier, sources, listener)
        .into_iter()
        .map(|i| {
            let g = spatialize(sources[i].position, listener);
            SpatialCue { cue: sources[i].cue.clone(), az: g.azimuth, el: g.elevation, dist: g.distance, gain: gain_model(g.distance) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at_origin(yaw: f64) -> ListenerPose {
        ListenerPose { position: Point3::new(0.0, 0.0, 1.7), yaw, pitch: 0.0 }
    }

    #[test]
    fn forward_and_left() {
        let l = at_origin(0.0);
        let g = spatialize(Point3::new(0.0, 1.0, 1.7), &l);
        assert_eq!((g.azimuth, g.elevation, g.distance), (0.0, 0.0, 1.0));
        let g = spatialize(Point3::new(-1.0, 0.0, 1.7), &l);
        assert!((g.azimuth - 90.0).abs() < 1e-12);
        let g = spatialize(Point3::new(1.0, 0.0, 1.7), &l);
        assert!((g.azimuth + 90.0).abs() < 1e-12);
        let g = spatialize(Point3::new(0.0, 1.0, 2.7), &l);
        assert!((g.elevation - 45.0).abs() < 1e-12);
    }

    #[test]
    fn coincident_source() {
        let l = at_origin(1.0);
        assert_eq!(spatialize(l.position, &l), CueGeometry { azimuth: 0.0, elevation: 0.0, distance: 0.0 });
    }

    #[test]
    fn gains() {
        assert_eq!(gain_model(0.5), 1.0);
        assert_eq!(gain_model(1.0), 1.0);
        assert_eq!(gain_model(4.0), 0.25);
    }

    #[test]
    fn tiers() {
        let l = at_origin(0.0);
        let sources: Vec<SoundSource> = (0..20)
            .map(|i| SoundSource { cue: format!("s{i}"), position: Point3::new(i as f64 + 1.0, 0.0, 1.7), min_tier: 1 })
            .collect();
        assert!(active_cues(0, &sources, &l).is_empty());
        let t1 = active_cues(1, &sources, &l);
        assert_eq!(t1.len(), 8);
        assert_eq!(t1.iter().map(|c| c.cue.as_str()).collect::<Vec<_>>(), ["s0", "s1", "s2", "s3", "s4", "s5", "s6", "s7"]);
        assert_eq!(active_cues(2, &sources, &l).len(), 20);
    }

    #[test]
    fn ambiance_counter_rotates() {
        let l = at_origin(0.7);
        let a = ambiance("city_street", 1, &l);
        assert_eq!(a.rot + l.yaw, 0.0);
    }
}
