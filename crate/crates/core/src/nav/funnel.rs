use crate::geom::{orient, Point2};

const SAME_POINT: f64 = 1e-9;

/// Simple stupid funnel: pulls a portal corridor taut.
///
/// `portals` are `(left, right)` pairs as seen by a walker moving from
/// `start` toward `goal`. The result starts with `start`, ends with `goal`
/// and bends only at portal endpoints.
pub fn string_pull(start: Point2, portals: &[(Point2, Point2)], goal: Point2) -> Vec<Point2> {
    let mut gates = Vec::with_capacity(portals.len() + 2);
    gates.push((start, start));
    gates.extend_from_slice(portals);
    gates.push((goal, goal));

    let mut out = vec![start];
    let mut apex = start;
    let (mut left, mut right) = (start, start);
    let (mut left_i, mut right_i) = (0usize, 0usize);
    let mut i = 1;
    while i < gates.len() {
        let (pl, pr) = gates[i];

        // Right boundary.
        if orient(apex, right, pr) >= 0.0 {
            if apex.distance(right) <= SAME_POINT || orient(apex, left, pr) < 0.0 {
                right = pr;
                right_i = i;
            } else {
                // pr crossed the left boundary; the left point is a corner.
                apex = left;
                push_distinct(&mut out, apex);
                right = apex;
                right_i = left_i;
                i = left_i + 1;
                continue;
            }
        }

        // Left boundary.
        if orient(apex, left, pl) <= 0.0 {
            if apex.distance(left) <= SAME_POINT || orient(apex, right, pl) > 0.0 {
                left = pl;
                left_i = i;
            } else {
                apex = right;
                push_distinct(&mut out, apex);
                left = apex;
                left_i = right_i;
                i = right_i + 1;
                continue;
            }
        }
        i += 1;
    }
    push_distinct(&mut out, goal);
    out
}

fn push_distinct(out: &mut Vec<Point2>, p: Point2) {
    if out.last().is_none_or(|q| q.distance(p) > SAME_POINT) {
        out.push(p);
    }
}
