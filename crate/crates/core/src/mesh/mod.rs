//! Triangular meshes of the square domain, with or without the excluded cell disk.
//!
//! Meshes are built from a structured background grid. For the punctured square a
//! block of grid squares around the cell is replaced by rings of nodes that connect
//! the block outline to a regular polygon inscribed in the cell circle; interior
//! nodes are then Laplacian-smoothed.

mod build;
mod locate;
pub mod vtk;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{orient, triangle_angles, Point2};

pub use build::{build_punctured_square_mesh, build_square_mesh, grid_divisions};
pub use locate::Location;

/// Boundary edge classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    /// The outer square boundary.
    Outer,
    /// The (polygonal) cell circle.
    Cell,
}

impl BoundaryTag {
    pub fn code(self) -> i32 {
        match self {
            BoundaryTag::Outer => 1,
            BoundaryTag::Cell => 2,
        }
    }
}

/// Geometry and exchange parameters of the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSpec {
    pub center: Point2,
    pub radius: f64,
    /// Constant secretion flux density.
    pub phi: f64,
    /// Uptake rate.
    pub uptake: f64,
}

impl CellSpec {
    pub fn new(center: Point2, radius: f64, phi: f64, uptake: f64) -> Self {
        Self {
            center,
            radius,
            phi,
            uptake,
        }
    }

    pub fn circumference(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.radius
    }

    /// Smallest distance between the cell disk and the boundary of `[0, side]²`.
    pub fn clearance(&self, side: f64) -> f64 {
        let c = self.center;
        c.x.min(c.y).min(side - c.x).min(side - c.y) - self.radius
    }

    pub fn validate(&self, side: f64) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::param(format!("cell radius must be positive, got {}", self.radius)));
        }
        if !(self.uptake >= 0.0 && self.uptake.is_finite()) {
            return Err(Error::param(format!("uptake must be non-negative, got {}", self.uptake)));
        }
        if !self.phi.is_finite() || !self.center.is_finite() {
            return Err(Error::param("cell parameters must be finite"));
        }
        if self.clearance(side) <= 0.0 {
            return Err(Error::param("cell disk must lie strictly inside the square"));
        }
        Ok(())
    }
}

/// Statistics of mesh quality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    /// Smallest interior angle, degrees.
    pub min_angle: f64,
    /// Largest ratio of longest edge to shortest altitude-based size.
    pub max_aspect: f64,
    /// Mean length over unique edges.
    pub avg_edge_length: f64,
    pub num_vertices: usize,
    pub num_cells: usize,
}

/// Conforming P1 triangulation with tagged boundary edges.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point2>,
    cells: Vec<[usize; 3]>,
    boundary_edges: Vec<([usize; 2], BoundaryTag)>,
    /// Neighbor across the edge opposite local vertex k.
    neighbors: Vec<[Option<usize>; 3]>,
    hole: Option<(Point2, f64)>,
    locator: locate::BucketGrid,
}

impl Mesh {
    /// Builds a mesh from raw parts. Boundary edges are discovered from the
    /// connectivity; when `hole` is given, boundary edges whose endpoints both lie
    /// on that circle are tagged [`BoundaryTag::Cell`].
    pub fn from_parts(
        vertices: Vec<Point2>,
        cells: Vec<[usize; 3]>,
        hole: Option<(Point2, f64)>,
    ) -> Result<Self> {
        for (k, tri) in cells.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Geometry(format!("cell {k} references a missing vertex")));
            }
        }
        let mut edge_owner: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        let mut neighbors = vec![[None; 3]; cells.len()];
        for (k, tri) in cells.iter().enumerate() {
            for local in 0..3 {
                let (a, b) = (tri[(local + 1) % 3], tri[(local + 2) % 3]);
                let key = (a.min(b), a.max(b));
                match edge_owner.remove(&key) {
                    Some((other, other_local)) => {
                        if neighbors[other][other_local].is_some() {
                            return Err(Error::Geometry(format!("edge {key:?} shared by more than two cells")));
                        }
                        neighbors[other][other_local] = Some(k);
                        neighbors[k][local] = Some(other);
                    }
                    None => {
                        if neighbors[k][local].is_some() {
                            return Err(Error::Geometry(format!("edge {key:?} shared by more than two cells")));
                        }
                        edge_owner.insert(key, (k, local));
                    }
                }
            }
        }
        let mut boundary_edges: Vec<([usize; 2], BoundaryTag)> = edge_owner
            .into_iter()
            .map(|(_, (k, local))| {
                let tri = cells[k];
                let e = [tri[(local + 1) % 3], tri[(local + 2) % 3]];
                let on_circle = |v: usize| match hole {
                    Some((c, r)) => (vertices[v].dist(c) - r).abs() <= 1e-12 * r,
                    None => false,
                };
                let tag = if on_circle(e[0]) && on_circle(e[1]) {
                    BoundaryTag::Cell
                } else {
                    BoundaryTag::Outer
                };
                (e, tag)
            })
            .collect();
        boundary_edges.sort_unstable_by_key(|(e, _)| (e[0].min(e[1]), e[0].max(e[1])));
        let locator = locate::BucketGrid::new(&vertices, &cells);
        Ok(Self {
            vertices,
            cells,
            boundary_edges,
            neighbors,
            hole,
            locator,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Boundary edges, oriented counterclockwise with respect to their owning cell.
    pub fn boundary_edges(&self) -> &[([usize; 2], BoundaryTag)] {
        &self.boundary_edges
    }

    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = [usize; 2]> + '_ {
        self.boundary_edges.iter().filter(move |(_, t)| *t == tag).map(|(e, _)| *e)
    }

    pub fn neighbors(&self) -> &[[Option<usize>; 3]] {
        &self.neighbors
    }

    /// The excluded disk (center, radius), if any.
    pub fn hole(&self) -> Option<(Point2, f64)> {
        self.hole
    }

    pub fn cell_points(&self, k: usize) -> [Point2; 3] {
        let [a, b, c] = self.cells[k];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn cell_area(&self, k: usize) -> f64 {
        let [a, b, c] = self.cell_points(k);
        0.5 * orient(a, b, c)
    }

    pub fn area(&self) -> f64 {
        (0..self.num_cells()).map(|k| self.cell_area(k)).sum()
    }

    /// Total length of the boundary edges carrying `tag`.
    pub fn boundary_length(&self, tag: BoundaryTag) -> f64 {
        self.edges_with_tag(tag)
            .map(|[a, b]| self.vertices[a].dist(self.vertices[b]))
            .sum()
    }

    /// Unique undirected edges.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut edges = Vec::with_capacity(self.cells.len() * 3 / 2 + self.boundary_edges.len());
        for (k, tri) in self.cells.iter().enumerate() {
            for local in 0..3 {
                let (a, b) = (tri[(local + 1) % 3], tri[(local + 2) % 3]);
                // interior edges are emitted once, by the lower-indexed cell
                match self.neighbors[k][local] {
                    Some(other) if other < k => {}
                    _ => edges.push([a.min(b), a.max(b)]),
                }
            }
        }
        edges
    }

    /// Checks every structural invariant and reports the first violation.
    pub fn validate(&self) -> Result<()> {
        for (k, p) in self.vertices.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::Geometry(format!("vertex {k} has non-finite coordinates")));
            }
        }
        for k in 0..self.num_cells() {
            let area = self.cell_area(k);
            if !(area > 0.0) {
                return Err(Error::DegenerateCell { cell: k, area });
            }
        }
        if let Some((c, r)) = self.hole {
            for ([a, b], tag) in &self.boundary_edges {
                if *tag == BoundaryTag::Cell {
                    for v in [*a, *b] {
                        if (self.vertices[v].dist(c) - r).abs() > 1e-12 * r {
                            return Err(Error::Geometry(format!("cell vertex {v} is off the circle")));
                        }
                    }
                }
            }
        }
        let euler = self.num_vertices() as i64 - self.edges().len() as i64 + self.num_cells() as i64;
        let expected = if self.has_cell_boundary() { 0 } else { 1 };
        if euler != expected {
            return Err(Error::Geometry(format!(
                "Euler characteristic V - E + F = {euler}, expected {expected}"
            )));
        }
        Ok(())
    }

    pub fn has_cell_boundary(&self) -> bool {
        self.boundary_edges.iter().any(|(_, t)| *t == BoundaryTag::Cell)
    }

    /// Checks that OUTER vertices lie on the boundary of `[0, side]²`.
    pub fn validate_outer(&self, side: f64) -> Result<()> {
        let tol = 1e-12 * side;
        for v in self.edges_with_tag(BoundaryTag::Outer).flatten() {
            let p = self.vertices[v];
            let d = p.x.abs().min(p.y.abs()).min((side - p.x).abs()).min((side - p.y).abs());
            if d > tol {
                return Err(Error::Geometry(format!("outer vertex {v} is off the square boundary")));
            }
        }
        Ok(())
    }

    /// Edge, angle and count statistics. Degenerate cells are reported as errors.
    pub fn quality(&self) -> Result<QualityReport> {
        let mut min_angle = f64::INFINITY;
        let mut max_aspect: f64 = 0.0;
        for k in 0..self.num_cells() {
            let area = self.cell_area(k);
            if !(area > 0.0) {
                return Err(Error::DegenerateCell { cell: k, area });
            }
            let [a, b, c] = self.cell_points(k);
            for ang in triangle_angles(a, b, c) {
                min_angle = min_angle.min(ang);
            }
            let longest = a.dist(b).max(b.dist(c)).max(c.dist(a));
            // longest edge over smallest height
            let aspect = longest * longest / (2.0 * area);
            max_aspect = max_aspect.max(aspect);
        }
        let edges = self.edges();
        let total: f64 = edges
            .iter()
            .map(|&[a, b]| self.vertices[a].dist(self.vertices[b]))
            .sum();
        Ok(QualityReport {
            min_angle,
            max_aspect,
            avg_edge_length: total / edges.len().max(1) as f64,
            num_vertices: self.num_vertices(),
            num_cells: self.num_cells(),
        })
    }
}

/// Free-function form of [`Mesh::quality`].
pub fn mesh_quality(mesh: &Mesh) -> Result<QualityReport> {
    mesh.quality()
}
