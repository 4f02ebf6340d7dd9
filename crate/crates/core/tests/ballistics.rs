use vsim::events::{ballistic_position, solve_ball_launch, solve_with_time, LaunchError, BALL_SPEED, GRAVITY};
use vsim::rng::SplitMix64;
use vsim::Point3;

/// Highest point reachable at horizontal range `x` with speed `v`: the
/// envelope of all trajectories, z = v²/2g − g x²/2v².
fn envelope(x: f64, v: f64) -> f64 {
    v * v / (2.0 * GRAVITY) - GRAVITY * x * x / (2.0 * v * v)
}

#[test]
fn thousand_random_launches() {
    let mut rng = SplitMix64::new(2024);
    let (mut reachable, mut unreachable) = (0, 0);
    while reachable < 1000 {
        let machine = Point3::new(rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0), rng.uniform(0.5, 1.5));
        let head = Point3::new(rng.uniform(-30.0, 30.0), rng.uniform(-30.0, 30.0), rng.uniform(1.0, 2.0));
        let d = head - machine;
        let slack = envelope(d.ground().length(), BALL_SPEED) - d.z;
        if slack.abs() < 1e-6 {
            continue;
        }
        match solve_with_time(machine, head, BALL_SPEED) {
            Ok((v, tof)) => {
                assert!(slack > 0.0, "solver accepted an unreachable target");
                assert!((v.length() - BALL_SPEED).abs() < 1e-9);
                let miss = ballistic_position(machine, v, tof).distance(head);
                assert!(miss < 1e-3, "missed by {miss}");
                // Flatter of the two arcs: the launch angle is below the
                // 45 degree split point of the envelope.
                let angle = v.z.atan2(v.ground().length());
                let split = (BALL_SPEED * BALL_SPEED / (GRAVITY * d.ground().length())).atan();
                assert!(angle <= split + 1e-9);
                reachable += 1;
            }
            Err(e) => {
                assert_eq!(e, LaunchError::Unreachable);
                assert!(slack < 0.0, "solver rejected a reachable target");
                unreachable += 1;
            }
        }
    }
    assert!(unreachable > 100, "sampling never exercised the unreachable branch");
}

#[test]
fn bad_inputs_error_cleanly() {
    let p = Point3::new(1.0, 1.0, 1.0);
    assert_eq!(solve_ball_launch(p, p, 12.0), Err(LaunchError::Degenerate));
    for speed in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert_eq!(solve_ball_launch(p, Point3::new(5.0, 1.0, 1.0), speed), Err(LaunchError::BadSpeed));
    }
    assert_eq!(solve_ball_launch(p, Point3::new(200.0, 1.0, 1.0), 12.0), Err(LaunchError::Unreachable));
}
