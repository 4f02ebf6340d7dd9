//! Independent reference computations used by tests.
//!
//! Nothing here calls into the navmesh query code: free space is rebuilt from
//! raw vertex lists with a ray-casting point-in-polygon test and searched on a
//! uniform grid.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use vsim::rng::SplitMix64;

pub type Pt = (f64, f64);

/// Ray-casting point-in-polygon (boundary counts as inside within `eps`).
pub fn point_in_polygon(p: Pt, poly: &[Pt]) -> bool {
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if dist_point_segment(p, a, b) <= 1e-9 {
            return true;
        }
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > p.1) != (yj > p.1) && p.0 < (xj - xi) * (p.1 - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

pub fn dist_point_segment(p: Pt, a: Pt, b: Pt) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Disc obstacle already inflated by the query clearance.
#[derive(Clone, Copy, Debug)]
pub struct Blocker {
    pub center: Pt,
    pub radius: f64,
}

/// 8-connected Dijkstra on a `cell`-spaced grid over free space. Diagonal
/// moves need both orthogonal neighbours free. Start and goal attach to
/// their nearest free cell centres. Returns `None` if disconnected.
pub fn grid_shortest_path(polys: &[Vec<Pt>], blockers: &[Blocker], start: Pt, goal: Pt, cell: f64) -> Option<f64> {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in polys.iter().flatten() {
        x0 = x0.min(p.0);
        y0 = y0.min(p.1);
        x1 = x1.max(p.0);
        y1 = y1.max(p.1);
    }
    let cols = ((x1 - x0) / cell).ceil() as usize;
    let rows = ((y1 - y0) / cell).ceil() as usize;
    let center = |c: usize, r: usize| (x0 + (c as f64 + 0.5) * cell, y0 + (r as f64 + 0.5) * cell);
    let mut free = vec![false; cols * rows];
    for r in 0..rows {
        for c in 0..cols {
            let p = center(c, r);
            free[r * cols + c] = polys.iter().any(|poly| point_in_polygon(p, poly))
                && blockers.iter().all(|b| ((p.0 - b.center.0).powi(2) + (p.1 - b.center.1).powi(2)).sqrt() >= b.radius);
        }
    }
    let nearest = |p: Pt| -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        let pc = (((p.0 - x0) / cell) as isize, ((p.1 - y0) / cell) as isize);
        for rad in 0..8isize {
            for dr in -rad..=rad {
                for dc in -rad..=rad {
                    let (c, r) = (pc.0 + dc, pc.1 + dr);
                    if c < 0 || r < 0 || c >= cols as isize || r >= rows as isize {
                        continue;
                    }
                    let idx = r as usize * cols + c as usize;
                    if !free[idx] {
                        continue;
                    }
                    let q = center(c as usize, r as usize);
                    let d = ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, idx));
                    }
                }
            }
            if best.is_some() {
                break;
            }
        }
        best.map(|(_, i)| i)
    };
    let s = nearest(start)?;
    let t = nearest(goal)?;
    let cpos = |i: usize| center(i % cols, i / cols);
    let mut dist = vec![f64::INFINITY; cols * rows];
    let mut heap = BinaryHeap::new();
    let key = |d: f64| Reverse((d * 1e9) as u64);
    dist[s] = 0.0;
    heap.push((key(0.0), s));
    let diag = std::f64::consts::SQRT_2 * cell;
    while let Some((_, u)) = heap.pop() {
        let du = dist[u];
        if u == t {
            break;
        }
        let (c, r) = ((u % cols) as isize, (u / cols) as isize);
        for (dc, dr) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let (nc, nr) = (c + dc, r + dr);
            if nc < 0 || nr < 0 || nc >= cols as isize || nr >= rows as isize {
                continue;
            }
            let v = nr as usize * cols + nc as usize;
            if !free[v] {
                continue;
            }
            let w = if dc != 0 && dr != 0 {
                if !free[r as usize * cols + nc as usize] || !free[nr as usize * cols + c as usize] {
                    continue;
                }
                diag
            } else {
                cell
            };
            let nd = du + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push((key(nd), v));
            }
        }
    }
    if !dist[t].is_finite() {
        return None;
    }
    let (sc, tc) = (cpos(s), cpos(t));
    let attach = ((start.0 - sc.0).powi(2) + (start.1 - sc.1).powi(2)).sqrt()
        + ((goal.0 - tc.0).powi(2) + (goal.1 - tc.1).powi(2)).sqrt();
    Some(dist[t] + attach)
}

/// A random small walkable floor: a jittered rectangular grid with some cells
/// removed (kept 4-connected) and some cells split into triangles. At most
/// 20 polygons, counterclockwise.
pub fn random_floor(rng: &mut SplitMix64) -> Vec<Vec<Pt>> {
    loop {
        let nx = 2 + rng.below(4);
        let ny = 2 + rng.below(3);
        let mut xs = vec![0.0];
        for _ in 0..nx {
            let last = *xs.last().unwrap();
            xs.push(last + rng.uniform(1.5, 4.0));
        }
        let mut ys = vec![0.0];
        for _ in 0..ny {
            let last = *ys.last().unwrap();
            ys.push(last + rng.uniform(1.5, 4.0));
        }
        let mut keep = vec![false; nx * ny];
        for k in keep.iter_mut() {
            *k = rng.next_f64() < 0.78;
        }
        // Largest 4-connected component.
        let mut comp = vec![usize::MAX; nx * ny];
        let mut best = (0, 0);
        for seed in 0..nx * ny {
            if !keep[seed] || comp[seed] != usize::MAX {
                continue;
            }
            let mut stack = vec![seed];
            comp[seed] = seed;
            let mut size = 0;
            while let Some(u) = stack.pop() {
                size += 1;
                let (i, j) = (u % nx, u / nx);
                let mut nb = Vec::new();
                if i > 0 {
                    nb.push(u - 1);
                }
                if i + 1 < nx {
                    nb.push(u + 1);
                }
                if j > 0 {
                    nb.push(u - nx);
                }
                if j + 1 < ny {
                    nb.push(u + nx);
                }
                for v in nb {
                    if keep[v] && comp[v] == usize::MAX {
                        comp[v] = seed;
                        stack.push(v);
                    }
                }
            }
            if size > best.1 {
                best = (seed, size);
            }
        }
        if best.1 < 3 {
            continue;
        }
        let mut polys = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                if comp[j * nx + i] != best.0 {
                    continue;
                }
                let (a, b, c, d) = ((xs[i], ys[j]), (xs[i + 1], ys[j]), (xs[i + 1], ys[j + 1]), (xs[i], ys[j + 1]));
                if polys.len() < 18 && rng.next_f64() < 0.3 {
                    if rng.next_f64() < 0.5 {
                        polys.push(vec![a, b, c]);
                        polys.push(vec![a, c, d]);
                    } else {
                        polys.push(vec![a, b, d]);
                        polys.push(vec![b, c, d]);
                    }
                } else {
                    polys.push(vec![a, b, c, d]);
                }
            }
        }
        if polys.len() <= 20 {
            return polys;
        }
    }
}

/// Uniform random point inside one of the polygons (polygon chosen uniformly).
pub fn random_point(rng: &mut SplitMix64, polys: &[Vec<Pt>]) -> Pt {
    let poly = &polys[rng.below(polys.len())];
    loop {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in poly {
            x0 = x0.min(p.0);
            y0 = y0.min(p.1);
            x1 = x1.max(p.0);
            y1 = y1.max(p.1);
        }
        let p = (rng.uniform(x0, x1), rng.uniform(y0, y1));
        if point_in_polygon(p, poly) {
            return p;
        }
    }
}

/// Closed-form first contact time of two constant-velocity discs, computed by
/// bisection on a fine time grid (no quadratic formula).
pub fn contact_time_scan(p: Pt, v: Pt, radius_sum: f64, horizon: f64) -> Option<f64> {
    let steps = 200_000;
    let dist = |t: f64| ((p.0 + v.0 * t).powi(2) + (p.1 + v.1 * t).powi(2)).sqrt();
    let mut prev = 0.0;
    for k in 1..=steps {
        let t = horizon * k as f64 / steps as f64;
        if dist(t) <= radius_sum {
            let (mut lo, mut hi) = (prev, t);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if dist(mid) <= radius_sum {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        prev = t;
    }
    None
}
