use std::f64::consts::PI;

use super::{CellSpec, Mesh};
use crate::error::{Error, Result};
use crate::geometry::{orient, Point2};

/// Mean edge length of the structured right-triangle grid is this factor times the
/// grid spacing (two axis edges and one diagonal per square).
const GRID_EDGE_FACTOR: f64 = (2.0 + std::f64::consts::SQRT_2) / 3.0;

const SMOOTHING_SWEEPS: usize = 8;

/// Number of grid squares per side so that the mean edge length is close to `h_target`.
pub fn grid_divisions(side: f64, h_target: f64) -> usize {
    ((side * GRID_EDGE_FACTOR / h_target).round() as usize).max(2)
}

fn check_size(side: f64, h_target: f64) -> Result<()> {
    if !(side > 0.0 && side.is_finite()) {
        return Err(Error::param(format!("side length must be positive, got {side}")));
    }
    if !(h_target > 0.0 && h_target < side / 2.0) {
        return Err(Error::param(format!(
            "target mesh size must lie in (0, L/2) = (0, {}), got {h_target}",
            side / 2.0
        )));
    }
    Ok(())
}

struct Grid {
    n: usize,
    spacing: f64,
}

impl Grid {
    fn node(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    fn point(&self, i: usize, j: usize) -> Point2 {
        // exact endpoints so that boundary vertices sit on the square
        let coord = |k: usize| {
            if k == self.n {
                self.spacing * self.n as f64
            } else {
                k as f64 * self.spacing
            }
        };
        Point2::new(coord(i), coord(j))
    }

    fn square_cells(&self, i: usize, j: usize) -> [[usize; 3]; 2] {
        let (a, b) = (self.node(i, j), self.node(i + 1, j));
        let (c, d) = (self.node(i + 1, j + 1), self.node(i, j + 1));
        [[a, b, c], [a, c, d]]
    }
}

/// Structured triangulation of `[0, side]²` with all boundary edges tagged outer.
pub fn build_square_mesh(side: f64, h_target: f64) -> Result<Mesh> {
    check_size(side, h_target)?;
    let n = grid_divisions(side, h_target);
    let grid = Grid {
        n,
        spacing: side / n as f64,
    };
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(grid.point(i, j));
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            cells.extend(grid.square_cells(i, j));
        }
    }
    Mesh::from_parts(vertices, cells, None)
}

/// Triangulation of `[0, side]²` minus the cell disk.
///
/// The disk boundary is a regular polygon with `max(16, round(2πR/h))` vertices
/// on the circle. Grid squares of a block around the cell are removed and the
/// gap between the block outline and the polygon is filled with node rings.
pub fn build_punctured_square_mesh(side: f64, h_target: f64, cell: &CellSpec) -> Result<Mesh> {
    check_size(side, h_target)?;
    cell.validate(side)?;
    if cell.clearance(side) < 2.0 * h_target {
        return Err(Error::param(format!(
            "cell clearance {} is below 2·h = {}",
            cell.clearance(side),
            2.0 * h_target
        )));
    }
    let n = grid_divisions(side, h_target);
    let grid = Grid {
        n,
        spacing: side / n as f64,
    };
    let s = grid.spacing;
    let (c, r) = (cell.center, cell.radius);

    // block of removed grid squares, [i0, i1) x [j0, j1)
    let margin = 0.75 * s;
    let lo = |x: f64| (((x - r - margin) / s).floor().max(0.0)) as usize;
    let hi = |x: f64| (((x + r + margin) / s).ceil() as usize).min(n);
    let (i0, i1, j0, j1) = (lo(c.x), hi(c.x), lo(c.y), hi(c.y));

    let in_block_interior = |i: usize, j: usize| i > i0 && i < i1 && j > j0 && j < j1;
    let mut vertices = Vec::new();
    let mut grid_index = vec![usize::MAX; (n + 1) * (n + 1)];
    for j in 0..=n {
        for i in 0..=n {
            if !in_block_interior(i, j) {
                grid_index[grid.node(i, j)] = vertices.len();
                vertices.push(grid.point(i, j));
            }
        }
    }
    let mut cells = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if i >= i0 && i < i1 && j >= j0 && j < j1 {
                continue;
            }
            for tri in grid.square_cells(i, j) {
                cells.push(tri.map(|v| grid_index[v]));
            }
        }
    }

    // block outline, counterclockwise from the lower-left corner
    let mut outline = Vec::new();
    for i in i0..i1 {
        outline.push((i, j0));
    }
    for j in j0..j1 {
        outline.push((i1, j));
    }
    for i in (i0 + 1..=i1).rev() {
        outline.push((i, j1));
    }
    for j in (j0 + 1..=j1).rev() {
        outline.push((i0, j));
    }
    let outer_ring: Vec<usize> = outline.iter().map(|&(i, j)| grid_index[grid.node(i, j)]).collect();

    let mean_gap = outer_ring.iter().map(|&v| vertices[v].dist(c)).sum::<f64>() / outer_ring.len() as f64 - r;
    let layers = ((mean_gap / s).round() as usize).max(1);

    // intermediate rings share the angular layout of the outline
    let mut rings: Vec<Vec<usize>> = Vec::with_capacity(layers);
    for layer in 1..layers {
        let tau = layer as f64 / layers as f64;
        let ring = outer_ring
            .iter()
            .map(|&v| {
                let p = vertices[v];
                let rho = p.dist(c);
                let dir = (1.0 / rho) * (p - c);
                vertices.push(c + ((1.0 - tau) * r + tau * rho) * dir);
                vertices.len() - 1
            })
            .collect();
        rings.push(ring);
    }
    rings.push(outer_ring);

    let segments = ((2.0 * PI * r / h_target).round() as usize).max(16);
    let start_angle = {
        let p = vertices[rings[0][0]];
        (p.y - c.y).atan2(p.x - c.x)
    };
    let circle: Vec<usize> = (0..segments)
        .map(|k| {
            let theta = start_angle + 2.0 * PI * k as f64 / segments as f64;
            vertices.push(Point2::new(c.x + r * theta.cos(), c.y + r * theta.sin()));
            vertices.len() - 1
        })
        .collect();

    zip_rings(&vertices, c, &circle, &rings[0], &mut cells);
    for pair in rings.windows(2) {
        strip_rings(&vertices, &pair[0], &pair[1], &mut cells);
    }

    let is_boundary = boundary_vertices(vertices.len(), &cells);
    laplacian_smooth(&mut vertices, &cells, &is_boundary, SMOOTHING_SWEEPS);

    let mesh = Mesh::from_parts(vertices, cells, Some((c, r)))?;
    mesh.validate()?;
    Ok(mesh)
}

fn unwrap_angles(vertices: &[Point2], center: Point2, ring: &[usize], start: usize, reference: f64) -> Vec<f64> {
    let n = ring.len();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let p = vertices[ring[(start + k) % n]];
        let mut theta = (p.y - center.y).atan2(p.x - center.x) - reference;
        if k == 0 {
            theta = (theta + PI).rem_euclid(2.0 * PI) - PI;
        } else {
            let prev = out[k - 1];
            while theta <= prev {
                theta += 2.0 * PI;
            }
            while theta - prev > 2.0 * PI {
                theta -= 2.0 * PI;
            }
        }
        out.push(theta);
    }
    out
}

/// Triangulates the annulus between two closed counterclockwise loops by merging
/// their angular orderings.
fn zip_rings(vertices: &[Point2], center: Point2, inner: &[usize], outer: &[usize], cells: &mut Vec<[usize; 3]>) {
    let reference = {
        let p = vertices[inner[0]];
        (p.y - center.y).atan2(p.x - center.x)
    };
    let outer_start = (0..outer.len())
        .min_by(|&a, &b| {
            let ang = |v: usize| {
                let p = vertices[outer[v]];
                let d = (p.y - center.y).atan2(p.x - center.x) - reference;
                ((d + PI).rem_euclid(2.0 * PI) - PI).abs()
            };
            ang(a).total_cmp(&ang(b))
        })
        .unwrap_or(0);
    let a_ang = unwrap_angles(vertices, center, inner, 0, reference);
    let b_ang = unwrap_angles(vertices, center, outer, outer_start, reference);
    let (na, nb) = (inner.len(), outer.len());
    let a_at = |k: usize| inner[k % na];
    let b_at = |k: usize| outer[(outer_start + k) % nb];
    let (mut i, mut j) = (0, 0);
    while i < na || j < nb {
        let advance_inner = if i == na {
            false
        } else if j == nb {
            true
        } else {
            a_ang[i + 1] <= b_ang[j + 1]
        };
        if advance_inner {
            cells.push([a_at(i), b_at(j), a_at(i + 1)]);
            i += 1;
        } else {
            cells.push([a_at(i), b_at(j), b_at(j + 1)]);
            j += 1;
        }
    }
}

/// Quad strip between two rings with identical node counts; each quad is split
/// along its shorter diagonal.
fn strip_rings(vertices: &[Point2], inner: &[usize], outer: &[usize], cells: &mut Vec<[usize; 3]>) {
    let n = inner.len();
    for k in 0..n {
        let (a, b) = (inner[k], inner[(k + 1) % n]);
        let (d, e) = (outer[k], outer[(k + 1) % n]);
        if vertices[a].dist(vertices[e]) <= vertices[b].dist(vertices[d]) {
            cells.push([a, d, e]);
            cells.push([a, e, b]);
        } else {
            cells.push([a, d, b]);
            cells.push([b, d, e]);
        }
    }
}

fn boundary_vertices(num_vertices: usize, cells: &[[usize; 3]]) -> Vec<bool> {
    let mut count = std::collections::HashMap::new();
    for tri in cells {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0u8) += 1;
        }
    }
    let mut flag = vec![false; num_vertices];
    for ((a, b), c) in count {
        if c == 1 {
            flag[a] = true;
            flag[b] = true;
        }
    }
    flag
}

/// Moves each free vertex towards the mean of its neighbors, rejecting moves that
/// would shrink an incident triangle below a tenth of its current area.
fn laplacian_smooth(vertices: &mut [Point2], cells: &[[usize; 3]], fixed: &[bool], sweeps: usize) {
    let nv = vertices.len();
    let mut adjacent: Vec<Vec<usize>> = vec![Vec::new(); nv];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (k, tri) in cells.iter().enumerate() {
        for l in 0..3 {
            let v = tri[l];
            incident[v].push(k);
            for m in 1..3 {
                let w = tri[(l + m) % 3];
                if !adjacent[v].contains(&w) {
                    adjacent[v].push(w);
                }
            }
        }
    }
    for _ in 0..sweeps {
        for v in 0..nv {
            if fixed[v] || adjacent[v].is_empty() {
                continue;
            }
            let mut sum = Point2::default();
            for &w in &adjacent[v] {
                sum = sum + vertices[w];
            }
            let target = (1.0 / adjacent[v].len() as f64) * sum;
            let old = vertices[v];
            let scale = adjacent[v].iter().map(|&w| old.dist(vertices[w])).fold(0.0, f64::max);
            if old.dist(target) <= 1e-13 * scale {
                continue;
            }
            let area = |pts: &[Point2], tri: &[usize; 3]| orient(pts[tri[0]], pts[tri[1]], pts[tri[2]]);
            let before: Vec<f64> = incident[v].iter().map(|&k| area(vertices, &cells[k])).collect();
            vertices[v] = target;
            let ok = incident[v]
                .iter()
                .zip(&before)
                .all(|(&k, &b)| area(vertices, &cells[k]) > 0.1 * b);
            if !ok {
                vertices[v] = old;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoundaryTag;

    fn default_cell() -> CellSpec {
        CellSpec::new(Point2::new(5.0, 5.0), 0.25, 1.0, 1.0)
    }

    #[test]
    fn unit_square_area() {
        let mesh = build_square_mesh(1.0, 0.49).unwrap();
        assert!(mesh.num_cells() >= 2);
        assert!((mesh.area() - 1.0).abs() < 1e-12);
        mesh.validate().unwrap();
        mesh.validate_outer(1.0).unwrap();
    }

    #[test]
    fn pi_square_area() {
        let side = PI;
        let mesh = build_square_mesh(side, 0.3).unwrap();
        assert!((mesh.area() - PI * PI).abs() < 1e-10);
    }

    #[test]
    fn table_square_mesh_size() {
        let mesh = build_square_mesh(10.0, 0.2495).unwrap();
        let q = mesh.quality().unwrap();
        assert!(q.avg_edge_length >= 0.187 && q.avg_edge_length <= 0.312, "{q:?}");
        assert_eq!(mesh.edges_with_tag(BoundaryTag::Cell).count(), 0);
        assert!((mesh.boundary_length(BoundaryTag::Outer) - 40.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(build_square_mesh(1.0, 0.5).is_err());
        assert!(build_square_mesh(1.0, 0.0).is_err());
        assert!(build_square_mesh(-1.0, 0.1).is_err());
    }

    #[test]
    fn default_punctured_mesh() {
        let cell = default_cell();
        let mesh = build_punctured_square_mesh(10.0, 0.2495, &cell).unwrap();
        let cell_edges = mesh.edges_with_tag(BoundaryTag::Cell).count();
        assert!(cell_edges >= 8);
        let perimeter = mesh.boundary_length(BoundaryTag::Cell);
        assert!((perimeter - cell.circumference()).abs() < 0.02 * cell.circumference());
        let polygon = 0.5 * cell_edges as f64 * 0.25f64.powi(2) * (2.0 * PI / cell_edges as f64).sin();
        assert!((mesh.area() - (100.0 - polygon)).abs() < 1e-10);
        assert!((mesh.area() - 99.8037).abs() < 0.005 * 99.8037);
        let q = mesh.quality().unwrap();
        assert!(q.min_angle > 15.0, "{q:?}");
        assert!(q.avg_edge_length >= 0.187 && q.avg_edge_length <= 0.312, "{q:?}");
        mesh.validate_outer(10.0).unwrap();
    }

    #[test]
    fn clearance_violation() {
        let cell = CellSpec::new(Point2::new(0.3, 0.3), 0.25, 1.0, 1.0);
        assert!(matches!(build_punctured_square_mesh(10.0, 0.25, &cell), Err(Error::Parameter(_))));
        let tight = CellSpec::new(Point2::new(0.6, 5.0), 0.25, 1.0, 1.0);
        assert!(build_punctured_square_mesh(10.0, 0.25, &tight).is_err());
    }

    #[test]
    fn deterministic() {
        let cell = CellSpec::new(Point2::new(4.3, 6.1), 0.8, 1.0, 1.0);
        let a = build_punctured_square_mesh(10.0, 0.3, &cell).unwrap();
        let b = build_punctured_square_mesh(10.0, 0.3, &cell).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        assert_eq!(a.cells(), b.cells());
    }

    #[test]
    fn large_off_center_cell() {
        let cell = CellSpec::new(Point2::new(3.7, 5.2), 1.6, 1.0, 0.0);
        let mesh = build_punctured_square_mesh(10.0, 0.2, &cell).unwrap();
        let n = mesh.edges_with_tag(BoundaryTag::Cell).count();
        assert_eq!(n, (2.0 * PI * 1.6 / 0.2).round() as usize);
        let q = mesh.quality().unwrap();
        assert!(q.min_angle > 10.0, "{q:?}");
    }
}
