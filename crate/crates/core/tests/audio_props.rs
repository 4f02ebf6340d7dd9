use std::f64::consts::PI;

use proptest::prelude::*;
use vsim::audio::{active_cues, ambiance, direction_from, select_sources, spatialize, ListenerPose, SoundSource, K1, K2};
use vsim::{Point3, Vec3};

fn angle() -> impl Strategy<Value = f64> {
    -PI..PI
}

fn pitch() -> impl Strategy<Value = f64> {
    -1.4..1.4f64
}

fn point() -> impl Strategy<Value = Point3> {
    (-50.0..50.0f64, -50.0..50.0f64, -5.0..10.0f64).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn rotate_z(v: Vec3, a: f64) -> Vec3 {
    let (s, c) = a.sin_cos();
    Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}

fn wrap_deg(a: f64) -> f64 {
    (a + 540.0).rem_euclid(360.0) - 180.0
}

fn sources() -> impl Strategy<Value = Vec<SoundSource>> {
    prop::collection::vec((point(), 0u8..3), 0..60).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (position, min_tier))| SoundSource { cue: format!("s{i}"), position, min_tier })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn frame_invariance(head in point(), src in point(), yaw in angle(), pitch in pitch(), theta in angle()) {
        let l = ListenerPose { position: head, yaw, pitch };
        let turned = ListenerPose { position: head, yaw: yaw + theta, pitch };
        let moved = head + rotate_z(src - head, theta);
        let (a, b) = (spatialize(src, &l), spatialize(moved, &turned));
        prop_assert!(wrap_deg(a.azimuth - b.azimuth).abs() < 1e-9 || a.distance < 1e-6);
        prop_assert!((a.elevation - b.elevation).abs() < 1e-9);
        prop_assert!((a.distance - b.distance).abs() < 1e-9);
    }

    #[test]
    fn round_trip(head in point(), src in point(), yaw in angle(), pitch in pitch()) {
        let l = ListenerPose { position: head, yaw, pitch };
        let rel = src - head;
        prop_assume!(rel.length() > 1e-3);
        let g = spatialize(src, &l);
        let back = direction_from(g.azimuth, g.elevation, &l);
        prop_assert!(back.distance(rel.normalized()) < 1e-9);
        prop_assert!((g.distance - rel.length()).abs() < 1e-12);
    }

    #[test]
    fn moving_source_continuity(
        head in point(), yaw in angle(), pitch in pitch(),
        start in point(), heading in angle(), climb in -1.0..1.0f64, speed in 0.0..2.0f64,
    ) {
        let l = ListenerPose { position: head, yaw, pitch };
        let dir = Vec3::new(heading.cos() * (1.0 - climb * climb).sqrt(), heading.sin() * (1.0 - climb * climb).sqrt(), climb);
        let next = start + dir * (speed / 90.0);
        // Azimuth is undefined on the listener's vertical axis; require the
        // source to stay at least 1 m from it.
        let (_, _, up) = l.basis();
        let off_axis = |p: Point3| { let r = p - head; (r - up * r.dot(up)).length() };
        prop_assume!(off_axis(start) >= 1.0 && off_axis(next) >= 1.0);
        let (a, b) = (spatialize(start, &l), spatialize(next, &l));
        prop_assert!(wrap_deg(a.azimuth - b.azimuth).abs() < 5.0);
    }

    #[test]
    fn tiers_nest(srcs in sources(), head in point(), yaw in angle(), pitch in pitch()) {
        let l = ListenerPose { position: head, yaw, pitch };
        let t0 = select_sources(0, &srcs, &l);
        let t1 = select_sources(1, &srcs, &l);
        let t2 = select_sources(2, &srcs, &l);
        prop_assert!(t0.is_empty() && t1.len() <= t2.len() && t2.len() <= K2);
        prop_assert!(t1.iter().all(|i| t2.contains(i)));

        // Tier 1 is exactly the K1 nearest sources eligible at tier 1.
        let mut eligible: Vec<(f64, usize)> = srcs.iter().enumerate()
            .filter(|(_, s)| s.min_tier <= 1)
            .map(|(i, s)| (s.position.distance(head), i))
            .collect();
        eligible.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut want: Vec<usize> = eligible.iter().take(K1).map(|&(_, i)| i).collect();
        let mut got = t1.clone();
        want.sort_unstable();
        got.sort_unstable();
        prop_assert_eq!(got, want);

        let all_eligible = srcs.iter().filter(|s| s.min_tier <= 2).count();
        prop_assert_eq!(t2.len(), all_eligible.min(K2));
        prop_assert!(active_cues(0, &srcs, &l).is_empty());
        for c in active_cues(2, &srcs, &l) {
            prop_assert!(c.dist >= 0.0 && (0.0..=1.0).contains(&c.gain));
        }
    }

    #[test]
    fn ambiance_counter_rotates(yaw in angle(), pitch in pitch(), tier in 0u8..3) {
        let l = ListenerPose { position: Point3::ZERO, yaw, pitch };
        let a = ambiance("bed", tier, &l);
        prop_assert_eq!(a.rot, -yaw);
        prop_assert_eq!(a.rot + yaw, 0.0);
    }
}

#[test]
fn tier_one_with_twenty_sources_keeps_eight_nearest() {
    let srcs: Vec<SoundSource> = (0..20)
        .map(|i| SoundSource { cue: format!("s{i}"), position: Point3::new(0.0, 1.0 + i as f64, 1.7), min_tier: 1 })
        .collect();
    let l = ListenerPose { position: Point3::new(0.0, 0.0, 1.7), yaw: 0.0, pitch: 0.0 };
    assert_eq!(select_sources(1, &srcs, &l), (0..8).collect::<Vec<_>>());
}
