use std::collections::BTreeMap;

use serde::Serialize;

use crate::geom::{orient, Point2};

use super::{MeshError, PolygonError};

/// Vertices closer than this are considered the same point when matching edges.
pub const VERTEX_MATCH_EPS: f64 = 1e-6;

/// Slack applied to containment and coverage tests, in meters.
pub const CONTAIN_EPS: f64 = 1e-7;

/// A strictly convex polygon with counterclockwise winding.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(into = "Vec<Point2>")]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
    min: Point2,
    max: Point2,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point2>) -> Result<Self, PolygonError> {
        let n = vertices.len();
        if n < 3 {
            return Err(PolygonError::TooFewVertices(n));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(PolygonError::NonFinite);
        }
        let (mut left, mut right) = (0usize, 0usize);
        let mut turning = 0.0;
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let e1 = b - a;
            let e2 = c - b;
            if e1.length() <= VERTEX_MATCH_EPS {
                return Err(PolygonError::Degenerate);
            }
            let turn = e1.cross(e2);
            let scale = e1.length() * e2.length();
            if turn > 1e-12 * scale {
                left += 1;
            } else if turn < -1e-12 * scale {
                right += 1;
            }
            turning += e1.cross(e2).atan2(e1.dot(e2));
        }
        if right == n {
            return Err(PolygonError::Clockwise);
        }
        // A pentagram turns left at every vertex but winds twice.
        if left != n || (turning - std::f64::consts::TAU).abs() > 1e-6 {
            return Err(PolygonError::NonConvex);
        }
        let mut min = vertices[0];
        let mut max = vertices[0];
        for v in &vertices {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        Ok(Self { vertices, min, max })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    /// Directed edges `(v[i], v[i+1])`; the interior lies on the left.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn bounds(&self) -> (Point2, Point2) {
        (self.min, self.max)
    }

    pub fn centroid(&self) -> Point2 {
        let n = self.vertices.len() as f64;
        let s = self.vertices.iter().fold(Point2::ZERO, |acc, &v| acc + v);
        s * (1.0 / n)
    }

    /// Closed containment with `eps` meters of slack.
    pub fn contains(&self, p: Point2, eps: f64) -> bool {
        if p.x < self.min.x - eps || p.x > self.max.x + eps || p.y < self.min.y - eps || p.y > self.max.y + eps {
            return false;
        }
        self.edges().all(|(a, b)| orient(a, b, p) >= -eps * (b - a).length())
    }

    /// Parameter interval of `a + t (b - a)`, `t` in `[0, 1]`, lying inside the polygon.
    pub fn clip_segment(&self, a: Point2, b: Point2, eps: f64) -> Option<(f64, f64)> {
        let d = b - a;
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for (u, v) in self.edges() {
            let e = v - u;
            let n = e.perp();
            let slack = eps * e.length();
            let f0 = n.dot(a - u) + slack;
            let fd = n.dot(d);
            if fd == 0.0 {
                if f0 < 0.0 {
                    return None;
                }
                continue;
            }
            let t = -f0 / fd;
            if fd > 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
            if t0 > t1 {
                return None;
            }
        }
        Some((t0, t1))
    }
}

impl From<ConvexPolygon> for Vec<Point2> {
    fn from(p: ConvexPolygon) -> Self {
        p.vertices
    }
}

/// Shared edge between two polygons. `a < b`; `p0 < p1` lexicographically.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Portal {
    pub a: usize,
    pub b: usize,
    pub p0: Point2,
    pub p1: Point2,
}

impl Portal {
    pub fn midpoint(&self) -> Point2 {
        self.p0.lerp(self.p1, 0.5)
    }

    pub fn other(&self, poly: usize) -> usize {
        if poly == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// Uniform bucket grid over polygon bounding boxes.
#[derive(Clone, Debug)]
struct PolygonGrid {
    origin: Point2,
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<u32>>,
}

impl PolygonGrid {
    fn build(polygons: &[ConvexPolygon], min: Point2, max: Point2) -> Self {
        let w = (max.x - min.x).max(1e-3);
        let h = (max.y - min.y).max(1e-3);
        let target = (polygons.len() as f64 * 2.0).max(1.0);
        let cell = ((w * h) / target).sqrt().max(0.25);
        let cols = ((w / cell).ceil() as usize).clamp(1, 512);
        let rows = ((h / cell).ceil() as usize).clamp(1, 512);
        let mut grid = Self { origin: min, cell, cols, rows, buckets: vec![Vec::new(); cols * rows] };
        for (i, poly) in polygons.iter().enumerate() {
            let (lo, hi) = poly.bounds();
            let (c0, r0) = grid.cell_of(lo - Point2::new(CONTAIN_EPS, CONTAIN_EPS));
            let (c1, r1) = grid.cell_of(hi + Point2::new(CONTAIN_EPS, CONTAIN_EPS));
            for r in r0..=r1 {
                for c in c0..=c1 {
                    grid.buckets[r * cols + c].push(i as u32);
                }
            }
        }
        grid
    }

    fn cell_of(&self, p: Point2) -> (usize, usize) {
        let c = ((p.x - self.origin.x) / self.cell).floor();
        let r = ((p.y - self.origin.y) / self.cell).floor();
        let c = if c.is_nan() { 0.0 } else { c.clamp(0.0, (self.cols - 1) as f64) };
        let r = if r.is_nan() { 0.0 } else { r.clamp(0.0, (self.rows - 1) as f64) };
        (c as usize, r as usize)
    }

    fn bucket(&self, p: Point2) -> &[u32] {
        let (c, r) = self.cell_of(p);
        &self.buckets[r * self.cols + c]
    }

    /// Sorted, deduplicated polygon indices whose boxes may meet the box `lo..hi`.
    fn query_box(&self, lo: Point2, hi: Point2, out: &mut Vec<u32>) {
        out.clear();
        let (c0, r0) = self.cell_of(lo);
        let (c1, r1) = self.cell_of(hi);
        for r in r0..=r1 {
            for c in c0..=c1 {
                out.extend_from_slice(&self.buckets[r * self.cols + c]);
            }
        }
        out.sort_unstable();
        out.dedup();
    }
}

/// Convex polygons joined by portals.
#[derive(Clone, Debug)]
pub struct NavMesh {
    polygons: Vec<ConvexPolygon>,
    portals: Vec<Portal>,
    /// Per polygon: `(neighbor, portal index)` sorted by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
    /// Boundary vertices where the walkable region turns inward, sorted.
    reflex: Vec<Point2>,
    /// Row-major `reflex.len()^2` mesh-only visibility between reflex vertices.
    reflex_visible: Vec<bool>,
    min: Point2,
    max: Point2,
    grid: PolygonGrid,
}

impl NavMesh {
    pub fn polygons(&self) -> &[ConvexPolygon] {
        &self.polygons
    }

    pub fn portals(&self) -> &[Portal] {
        &self.portals
    }

    pub fn neighbors(&self, poly: usize) -> &[(usize, usize)] {
        &self.adjacency[poly]
    }

    pub fn reflex_vertices(&self) -> &[Point2] {
        &self.reflex
    }

    pub(crate) fn reflex_visible(&self, i: usize, j: usize) -> bool {
        self.reflex_visible[i * self.reflex.len() + j]
    }

    pub fn bounds(&self) -> (Point2, Point2) {
        (self.min, self.max)
    }

    /// Index of the polygon containing `p`; boundary points go to the lowest index.
    pub fn locate(&self, p: Point2) -> Option<usize> {
        if !p.is_finite() {
            return None;
        }
        self.grid
            .bucket(p)
            .iter()
            .map(|&i| i as usize)
            .find(|&i| self.polygons[i].contains(p, CONTAIN_EPS))
    }

    /// True when the closed segment `ab` is covered by the union of polygons.
    pub fn segment_inside(&self, a: Point2, b: Point2) -> bool {
        let len = a.distance(b);
        if len <= CONTAIN_EPS {
            return self.locate(a).is_some();
        }
        let lo = Point2::new(a.x.min(b.x), a.y.min(b.y));
        let hi = Point2::new(a.x.max(b.x), a.y.max(b.y));
        let mut candidates = Vec::new();
        self.grid.query_box(lo, hi, &mut candidates);
        let mut spans: Vec<(f64, f64)> = candidates
            .iter()
            .filter_map(|&i| self.polygons[i as usize].clip_segment(a, b, CONTAIN_EPS))
            .collect();
        spans.sort_by(|x, y| x.0.total_cmp(&y.0));
        let tol = CONTAIN_EPS / len;
        let mut reach = 0.0f64;
        for (t0, t1) in spans {
            if t0 > reach + tol {
                return false;
            }
            reach = reach.max(t1);
            if reach >= 1.0 - tol {
                return true;
            }
        }
        reach >= 1.0 - tol
    }
}

/// Validate polygons, detect overlaps, and connect exactly-shared edges.
pub fn build_navmesh(polygons: Vec<ConvexPolygon>) -> Result<NavMesh, MeshError> {
    if polygons.is_empty() {
        return Err(MeshError::Empty);
    }
    let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &polygons {
        let (lo, hi) = p.bounds();
        min = Point2::new(min.x.min(lo.x), min.y.min(lo.y));
        max = Point2::new(max.x.max(hi.x), max.y.max(hi.y));
    }

    for i in 0..polygons.len() {
        for j in i + 1..polygons.len() {
            if interiors_overlap(&polygons[i], &polygons[j]) {
                return Err(MeshError::Overlap { first: i, second: j });
            }
        }
    }

    let mut portals = Vec::new();
    for i in 0..polygons.len() {
        for j in i + 1..polygons.len() {
            if !boxes_touch(&polygons[i], &polygons[j]) {
                continue;
            }
            for (u, v) in polygons[i].edges() {
                for (c, d) in polygons[j].edges() {
                    if u.distance(d) <= VERTEX_MATCH_EPS && v.distance(c) <= VERTEX_MATCH_EPS {
                        let (p0, p1) = if lex_less(u, v) { (u, v) } else { (v, u) };
                        portals.push(Portal { a: i, b: j, p0, p1 });
                    }
                }
            }
        }
    }
    portals.sort_by(|x, y| {
        (x.a, x.b)
            .cmp(&(y.a, y.b))
            .then(x.p0.x.total_cmp(&y.p0.x))
            .then(x.p0.y.total_cmp(&y.p0.y))
            .then(x.p1.x.total_cmp(&y.p1.x))
            .then(x.p1.y.total_cmp(&y.p1.y))
    });

    let mut adjacency = vec![Vec::new(); polygons.len()];
    for (k, portal) in portals.iter().enumerate() {
        adjacency[portal.a].push((portal.b, k));
        adjacency[portal.b].push((portal.a, k));
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }

    let grid = PolygonGrid::build(&polygons, min, max);
    let mut mesh = NavMesh {
        reflex: Vec::new(),
        reflex_visible: Vec::new(),
        polygons,
        portals,
        adjacency,
        min,
        max,
        grid,
    };
    mesh.reflex = reflex_vertices(&mesh);
    let n = mesh.reflex.len();
    let mut vis = vec![false; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = mesh.segment_inside(mesh.reflex[i], mesh.reflex[j]);
            vis[i * n + j] = v;
            vis[j * n + i] = v;
        }
    }
    mesh.reflex_visible = vis;
    Ok(mesh)
}

fn lex_less(a: Point2, b: Point2) -> bool {
    a.x < b.x || (a.x == b.x && a.y < b.y)
}

fn boxes_touch(p: &ConvexPolygon, q: &ConvexPolygon) -> bool {
    let (a0, a1) = p.bounds();
    let (b0, b1) = q.bounds();
    let e = VERTEX_MATCH_EPS;
    a0.x <= b1.x + e && b0.x <= a1.x + e && a0.y <= b1.y + e && b0.y <= a1.y + e
}

/// Separating-axis test; touching along an edge or vertex is not an overlap.
fn interiors_overlap(p: &ConvexPolygon, q: &ConvexPolygon) -> bool {
    if !boxes_touch(p, q) {
        return false;
    }
    for poly in [p, q] {
        for (u, v) in poly.edges() {
            let axis = (v - u).perp().normalized();
            let (pmin, pmax) = project(p, axis);
            let (qmin, qmax) = project(q, axis);
            if pmax <= qmin + VERTEX_MATCH_EPS || qmax <= pmin + VERTEX_MATCH_EPS {
                return false;
            }
        }
    }
    true
}

fn project(p: &ConvexPolygon, axis: Point2) -> (f64, f64) {
    p.vertices().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        let d = v.dot(axis);
        (lo.min(d), hi.max(d))
    })
}

/// Boundary vertices that are not strictly convex corners of the walkable union.
fn reflex_vertices(mesh: &NavMesh) -> Vec<Point2> {
    let key = |p: Point2| ((p.x / VERTEX_MATCH_EPS).round() as i64, (p.y / VERTEX_MATCH_EPS).round() as i64);
    let is_portal = |poly: usize, u: Point2, v: Point2| {
        mesh.neighbors(poly).iter().any(|&(_, k)| {
            let pt = &mesh.portals[k];
            (pt.p0.distance(u) <= VERTEX_MATCH_EPS && pt.p1.distance(v) <= VERTEX_MATCH_EPS)
                || (pt.p0.distance(v) <= VERTEX_MATCH_EPS && pt.p1.distance(u) <= VERTEX_MATCH_EPS)
        })
    };
    // vertex -> (position, incoming edge starts, outgoing edge ends)
    type Corner = (Point2, Vec<Point2>, Vec<Point2>);
    let mut corners: BTreeMap<(i64, i64), Corner> = BTreeMap::new();
    for (i, poly) in mesh.polygons.iter().enumerate() {
        for (u, v) in poly.edges() {
            if is_portal(i, u, v) {
                continue;
            }
            corners.entry(key(v)).or_insert_with(|| (v, Vec::new(), Vec::new())).1.push(u);
            corners.entry(key(u)).or_insert_with(|| (u, Vec::new(), Vec::new())).2.push(v);
        }
    }
    let mut out: Vec<Point2> = corners
        .into_values()
        .filter(|(v, ins, outs)| {
            if ins.len() != 1 || outs.len() != 1 {
                return true;
            }
            orient(ins[0], *v, outs[0]) < -1e-12
        })
        .map(|(v, _, _)| v)
        .collect();
    out.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    out
}
