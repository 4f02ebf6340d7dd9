//! Navigation meshes and path queries.
//!
//! A [`NavMesh`] is a set of convex, counterclockwise polygons whose shared
//! edges become portals. [`find_path`] runs A* over the portal graph, pulls
//! the corridor taut with the funnel algorithm and, when moving discs block
//! that line, detours around them through tangent points on circumscribed
//! octagons.

mod funnel;
mod mesh;
mod path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Point2;

pub use funnel::string_pull;
pub use mesh::{build_navmesh, ConvexPolygon, NavMesh, Portal, CONTAIN_EPS, VERTEX_MATCH_EPS};
pub use path::{find_path, portal_corridor, segment_clear, OCTAGON_MARGIN};

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum PolygonError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has a non-finite coordinate")]
    NonFinite,
    #[error("polygon has a zero-length edge")]
    Degenerate,
    #[error("polygon winds clockwise")]
    Clockwise,
    #[error("polygon is not strictly convex")]
    NonConvex,
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum MeshError {
    #[error("navmesh has no polygons")]
    Empty,
    #[error("polygon {index}: {source}")]
    Polygon { index: usize, source: PolygonError },
    #[error("polygons {first} and {second} overlap")]
    Overlap { first: usize, second: usize },
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum PathError {
    #[error("start point is outside the navmesh")]
    StartOutside,
    #[error("goal point is outside the navmesh")]
    GoalOutside,
    #[error("start point lies inside an inflated obstacle")]
    StartObstructed,
    #[error("goal point lies inside an inflated obstacle")]
    GoalObstructed,
    #[error("goal is unreachable")]
    Unreachable,
}

/// A circular region to keep out of, e.g. another pedestrian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstacleDisc {
    pub center: Point2,
    pub radius: f64,
}

impl ObstacleDisc {
    pub fn new(center: Point2, radius: f64) -> Self {
        debug_assert!(radius > 0.0, "obstacle radius must be positive");
        Self { center, radius }
    }
}

/// A polyline through the mesh.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub waypoints: Vec<Point2>,
    pub total_length: f64,
}

impl Path {
    /// Builds a path, dropping consecutive duplicate waypoints.
    pub fn from_waypoints(points: Vec<Point2>) -> Self {
        let mut waypoints: Vec<Point2> = Vec::with_capacity(points.len());
        for p in points {
            if waypoints.last().is_none_or(|q| q.distance(p) > 1e-9) {
                waypoints.push(p);
            }
        }
        if waypoints.len() == 1 {
            // start == goal: keep a zero-length segment so the path has an end.
            let p = waypoints[0];
            waypoints.push(p);
        }
        let total_length = waypoints.windows(2).map(|w| w[0].distance(w[1])).sum();
        Self { waypoints, total_length }
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        self.waypoints.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn goal(&self) -> Option<Point2> {
        self.waypoints.last().copied()
    }
}

/// Convenience for building a mesh straight from vertex lists.
pub fn build_from_vertices(polygons: Vec<Vec<Point2>>) -> Result<NavMesh, MeshError> {
    let polys = polygons
        .into_iter()
        .enumerate()
        .map(|(index, v)| ConvexPolygon::new(v).map_err(|source| MeshError::Polygon { index, source }))
        .collect::<Result<Vec<_>, _>>()?;
    build_navmesh(polys)
}
