use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geom::{point_segment_distance, Point2};

use super::funnel::string_pull;
use super::{NavMesh, ObstacleDisc, Path, PathError};

/// Extra radius on the circumscribed octagons so that octagon edges clear
/// the inflated disc by a visible margin rather than by rounding error.
pub const OCTAGON_MARGIN: f64 = 1e-3;

const CLEAR_EPS: f64 = 1e-9;

/// True iff `a -> b` stays inside `mesh` and keeps at least `clearance`
/// from the surface of every disc.
pub fn segment_clear(mesh: &NavMesh, a: Point2, b: Point2, obstacles: &[ObstacleDisc], clearance: f64) -> bool {
    clear_of_discs(a, b, obstacles, clearance) && mesh.segment_inside(a, b)
}

fn clear_of_discs(a: Point2, b: Point2, obstacles: &[ObstacleDisc], clearance: f64) -> bool {
    obstacles
        .iter()
        .all(|d| point_segment_distance(d.center, a, b) >= d.radius + clearance - CLEAR_EPS)
}

/// Heap entry ordered so that `BinaryHeap` pops the lowest f, then lowest g,
/// then lowest node index.
#[derive(Clone, Copy, Debug)]
struct Open {
    f: f64,
    g: f64,
    node: usize,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(other.g.total_cmp(&self.g))
            .then(other.node.cmp(&self.node))
    }
}

/// A* over the portal graph from the polygon holding `start` to the one
/// holding `goal`. Cost is the length of the chain start, portal midpoints,
/// goal. Returns the polygon corridor.
pub fn portal_corridor(mesh: &NavMesh, start: Point2, goal: Point2) -> Result<Vec<usize>, PathError> {
    let s = mesh.locate(start).ok_or(PathError::StartOutside)?;
    let t = mesh.locate(goal).ok_or(PathError::GoalOutside)?;
    let n = mesh.polygons().len();
    let mut g = vec![f64::INFINITY; n];
    let mut entry = vec![start; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[s] = if s == t { start.distance(goal) } else { 0.0 };
    open.push(Open { f: start.distance(goal), g: g[s], node: s });
    while let Some(Open { g: gc, node, .. }) = open.pop() {
        if closed[node] || gc > g[node] {
            continue;
        }
        closed[node] = true;
        if node == t {
            let mut corridor = vec![t];
            let mut cur = t;
            while parent[cur] != usize::MAX {
                cur = parent[cur];
                corridor.push(cur);
            }
            corridor.reverse();
            return Ok(corridor);
        }
        for &(next, k) in mesh.neighbors(node) {
            if closed[next] {
                continue;
            }
            let m = mesh.portals()[k].midpoint();
            let mut cost = gc + entry[node].distance(m);
            let h = if next == t {
                cost += m.distance(goal);
                0.0
            } else {
                m.distance(goal)
            };
            if cost < g[next] {
                g[next] = cost;
                entry[next] = m;
                parent[next] = node;
                open.push(Open { f: cost + h, g: cost, node: next });
            }
        }
    }
    Err(PathError::Unreachable)
}

/// Portal `(left, right)` pairs for walking the corridor front to back.
fn corridor_portals(mesh: &NavMesh, corridor: &[usize]) -> Vec<(Point2, Point2)> {
    corridor
        .windows(2)
        .map(|w| {
            let (from, to) = (w[0], w[1]);
            let k = mesh
                .neighbors(from)
                .iter()
                .find(|&&(nb, _)| nb == to)
                .map(|&(_, k)| k)
                .expect("corridor steps follow portals");
            let portal = mesh.portals()[k];
            // Interior of `from` is left of its ccw edge u -> v; facing out
            // across it, u is on the right.
            let (u, v) = mesh.polygons()[from]
                .edges()
                .find(|&(u, v)| {
                    let fwd = u.distance(portal.p0) + v.distance(portal.p1);
                    let rev = u.distance(portal.p1) + v.distance(portal.p0);
                    fwd.min(rev) <= 2.0 * super::VERTEX_MATCH_EPS
                })
                .expect("portal edge belongs to its polygon");
            (v, u)
        })
        .collect()
}

/// Shortest walkable path from `start` to `goal` keeping `clearance` from
/// every obstacle disc.
pub fn find_path(
    mesh: &NavMesh,
    start: Point2,
    goal: Point2,
    obstacles: &[ObstacleDisc],
    clearance: f64,
) -> Result<Path, PathError> {
    let corridor = portal_corridor(mesh, start, goal)?;
    for d in obstacles {
        let r = d.radius + clearance;
        if d.center.distance(start) < r {
            return Err(PathError::StartObstructed);
        }
        if d.center.distance(goal) < r {
            return Err(PathError::GoalObstructed);
        }
    }
    let taut = string_pull(start, &corridor_portals(mesh, &corridor), goal);
    if taut.windows(2).all(|w| clear_of_discs(w[0], w[1], obstacles, clearance)) {
        return Ok(Path::from_waypoints(taut));
    }
    Detour::new(mesh, start, goal, obstacles, clearance).solve()
}

/// Visibility search over start, goal, reflex mesh corners and octagon
/// vertices around discs. Discs join the search only once a candidate path
/// crosses them.
struct Detour<'a> {
    mesh: &'a NavMesh,
    obstacles: &'a [ObstacleDisc],
    clearance: f64,
    active: Vec<bool>,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy, Debug)]
struct Node {
    pos: Point2,
    kind: NodeKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum NodeKind {
    Endpoint,
    Reflex(usize),
    Octagon,
}

impl<'a> Detour<'a> {
    fn new(mesh: &'a NavMesh, start: Point2, goal: Point2, obstacles: &'a [ObstacleDisc], clearance: f64) -> Self {
        let mut nodes = vec![
            Node { pos: start, kind: NodeKind::Endpoint },
            Node { pos: goal, kind: NodeKind::Endpoint },
        ];
        nodes.extend(
            mesh.reflex_vertices()
                .iter()
                .enumerate()
                .map(|(i, &pos)| Node { pos, kind: NodeKind::Reflex(i) }),
        );
        Self { mesh, obstacles, clearance, active: vec![false; obstacles.len()], nodes }
    }

    fn activate(&mut self, disc: usize) {
        self.active[disc] = true;
        let d = self.obstacles[disc];
        let r = (d.radius + self.clearance) / (std::f64::consts::PI / 8.0).cos() + OCTAGON_MARGIN;
        for k in 0..8 {
            let a = k as f64 * std::f64::consts::FRAC_PI_4;
            let pos = d.center + Point2::new(a.cos(), a.sin()) * r;
            self.nodes.push(Node { pos, kind: NodeKind::Octagon });
        }
    }

    fn node_usable(&self, i: usize) -> bool {
        let n = self.nodes[i];
        if n.kind == NodeKind::Endpoint {
            return true;
        }
        if !self.point_clear_active(n.pos) {
            return false;
        }
        n.kind != NodeKind::Octagon || self.mesh.locate(n.pos).is_some()
    }

    fn point_clear_active(&self, p: Point2) -> bool {
        self.obstacles
            .iter()
            .zip(&self.active)
            .filter(|(_, &on)| on)
            .all(|(d, _)| d.center.distance(p) >= d.radius + self.clearance - CLEAR_EPS)
    }

    fn visible(&self, i: usize, j: usize) -> bool {
        let (a, b) = (self.nodes[i], self.nodes[j]);
        let inside = match (a.kind, b.kind) {
            (NodeKind::Reflex(x), NodeKind::Reflex(y)) => self.mesh.reflex_visible(x, y),
            _ => self.mesh.segment_inside(a.pos, b.pos),
        };
        inside
            && self
                .obstacles
                .iter()
                .zip(&self.active)
                .filter(|(_, &on)| on)
                .all(|(d, _)| point_segment_distance(d.center, a.pos, b.pos) >= d.radius + self.clearance - CLEAR_EPS)
    }

    fn search(&self) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let goal = self.nodes[1].pos;
        let usable: Vec<bool> = (0..n).map(|i| self.node_usable(i)).collect();
        let mut g = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut open = BinaryHeap::new();
        g[0] = 0.0;
        open.push(Open { f: self.nodes[0].pos.distance(goal), g: 0.0, node: 0 });
        while let Some(Open { g: gc, node, .. }) = open.pop() {
            if closed[node] || gc > g[node] {
                continue;
            }
            closed[node] = true;
            if node == 1 {
                let mut chain = vec![1];
                let mut cur = 1;
                while parent[cur] != usize::MAX {
                    cur = parent[cur];
                    chain.push(cur);
                }
                chain.reverse();
                return Some(chain);
            }
            let here = self.nodes[node].pos;
            for next in 1..n {
                if closed[next] || !usable[next] {
                    continue;
                }
                let there = self.nodes[next].pos;
                let cost = gc + here.distance(there);
                if cost >= g[next] || !self.visible(node, next) {
                    continue;
                }
                g[next] = cost;
                parent[next] = node;
                open.push(Open { f: cost + there.distance(goal), g: cost, node: next });
            }
        }
        None
    }

    fn solve(mut self) -> Result<Path, PathError> {
        loop {
            let chain = self.search().ok_or(PathError::Unreachable)?;
            let points: Vec<Point2> = chain.iter().map(|&i| self.nodes[i].pos).collect();
            let mut blocked = Vec::new();
            for (k, d) in self.obstacles.iter().enumerate() {
                if self.active[k] {
                    continue;
                }
                let hit = points
                    .windows(2)
                    .any(|w| point_segment_distance(d.center, w[0], w[1]) < d.radius + self.clearance - CLEAR_EPS);
                if hit {
                    blocked.push(k);
                }
            }
            if blocked.is_empty() {
                return Ok(Path::from_waypoints(points));
            }
            for k in blocked {
                self.activate(k);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nav::build_from_vertices;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point2> {
        vec![Point2::new(x0, y0), Point2::new(x1, y0), Point2::new(x1, y1), Point2::new(x0, y1)]
    }

    fn corridor() -> NavMesh {
        build_from_vertices(vec![rect(0.0, 0.0, 10.0, 10.0), rect(10.0, 0.0, 20.0, 10.0)]).unwrap()
    }

    #[test]
    fn straight_corridor() {
        let mesh = corridor();
        let path = find_path(&mesh, Point2::new(2.0, 5.0), Point2::new(18.0, 5.0), &[], 0.3).unwrap();
        assert_eq!(path.waypoints, vec![Point2::new(2.0, 5.0), Point2::new(18.0, 5.0)]);
        assert_eq!(path.total_length, 16.0);
    }

    #[test]
    fn segment_clear_cases() {
        let mesh = corridor();
        let disc = [ObstacleDisc::new(Point2::new(10.0, 5.0), 2.0)];
        let (a, b) = (Point2::new(2.0, 5.0), Point2::new(18.0, 5.0));
        assert!(segment_clear(&mesh, a, b, &[], 0.3));
        assert!(!segment_clear(&mesh, a, b, &disc, 0.3));
        assert!(segment_clear(&mesh, Point2::new(2.0, 8.0), Point2::new(18.0, 8.0), &disc, 0.3));
        assert!(!segment_clear(&mesh, Point2::new(2.0, 5.0), Point2::new(25.0, 5.0), &[], 0.3));
    }

    #[test]
    fn detours_around_disc() {
        let mesh = corridor();
        let disc = [ObstacleDisc::new(Point2::new(10.0, 5.0), 2.0)];
        let path = find_path(&mesh, Point2::new(2.0, 5.0), Point2::new(18.0, 5.0), &disc, 0.3).unwrap();
        assert!(path.waypoints.len() > 2);
        for (a, b) in path.segments() {
            assert!(segment_clear(&mesh, a, b, &disc, 0.3));
        }
        // Exact tangent-arc-tangent length is 16.665; octagon corners add a little.
        assert!(path.total_length > 16.6 && path.total_length < 17.0, "{}", path.total_length);
    }

    #[test]
    fn ring_of_discs_is_unreachable() {
        let mesh = corridor();
        let goal = Point2::new(15.0, 5.0);
        let ring: Vec<ObstacleDisc> = (0..12)
            .map(|k| {
                let a = k as f64 * std::f64::consts::TAU / 12.0;
                ObstacleDisc::new(goal + Point2::new(a.cos(), a.sin()) * 2.0, 0.6)
            })
            .collect();
        assert_eq!(find_path(&mesh, Point2::new(2.0, 5.0), goal, &ring, 0.3), Err(PathError::Unreachable));
    }

    #[test]
    fn outside_points_error() {
        let mesh = corridor();
        assert_eq!(
            find_path(&mesh, Point2::new(-1.0, 5.0), Point2::new(5.0, 5.0), &[], 0.0),
            Err(PathError::StartOutside)
        );
        assert_eq!(
            find_path(&mesh, Point2::new(1.0, 5.0), Point2::new(5.0, 50.0), &[], 0.0),
            Err(PathError::GoalOutside)
        );
    }

    #[test]
    fn same_polygon_is_direct() {
        let mesh = corridor();
        let path = find_path(&mesh, Point2::new(1.0, 1.0), Point2::new(9.0, 9.0), &[], 0.0).unwrap();
        assert_eq!(path.waypoints.len(), 2);
    }

    #[test]
    fn detour_around_building_corner() {
        // L-shaped floor; the straight line would cut the missing quadrant.
        let mesh = build_from_vertices(vec![
            rect(0.0, 0.0, 10.0, 10.0),
            rect(10.0, 0.0, 20.0, 10.0),
            rect(0.0, 10.0, 10.0, 20.0),
        ])
        .unwrap();
        let path = find_path(&mesh, Point2::new(18.0, 5.0), Point2::new(5.0, 18.0), &[], 0.0).unwrap();
        assert_eq!(path.waypoints[1], Point2::new(10.0, 10.0));
        let disc = [ObstacleDisc::new(Point2::new(10.5, 9.0), 0.4)];
        let path = find_path(&mesh, Point2::new(18.0, 5.0), Point2::new(5.0, 18.0), &disc, 0.3).unwrap();
        for (a, b) in path.segments() {
            assert!(segment_clear(&mesh, a, b, &disc, 0.3), "{:?}", path.waypoints);
        }
    }
}
