use super::Mesh;
use crate::error::{Error, Result};
use crate::geometry::{barycentric, Point2};

const BARY_TOL: f64 = 1e-12;

/// A located point: containing cell and barycentric coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub cell: usize,
    pub bary: [f64; 3],
}

/// Coarse uniform grid of cell centroids used to seed the walk.
#[derive(Debug, Clone)]
pub(super) struct BucketGrid {
    origin: Point2,
    size: f64,
    nx: usize,
    ny: usize,
    first_cell: Vec<Option<usize>>,
}

impl BucketGrid {
    pub(super) fn new(vertices: &[Point2], cells: &[[usize; 3]]) -> Self {
        let (mut lo, mut hi) = (Point2::new(f64::MAX, f64::MAX), Point2::new(f64::MIN, f64::MIN));
        for p in vertices {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if cells.is_empty() {
            return Self {
                origin: lo,
                size: 1.0,
                nx: 0,
                ny: 0,
                first_cell: Vec::new(),
            };
        }
        let nb = ((cells.len() as f64).sqrt().ceil() as usize).max(1);
        let extent = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
        let size = extent / nb as f64;
        let nx = (((hi.x - lo.x) / size).ceil() as usize).max(1);
        let ny = (((hi.y - lo.y) / size).ceil() as usize).max(1);
        let mut grid = Self {
            origin: lo,
            size,
            nx,
            ny,
            first_cell: vec![None; nx * ny],
        };
        for (k, tri) in cells.iter().enumerate() {
            let g = (1.0 / 3.0) * (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]);
            let b = grid.bucket(g);
            grid.first_cell[b].get_or_insert(k);
        }
        grid
    }

    fn bucket(&self, p: Point2) -> usize {
        let clamp = |v: f64, n: usize| (v.max(0.0) as usize).min(n - 1);
        let i = clamp((p.x - self.origin.x) / self.size, self.nx);
        let j = clamp((p.y - self.origin.y) / self.size, self.ny);
        j * self.nx + i
    }

    /// Some cell whose centroid is near `p`.
    fn seed(&self, p: Point2) -> Option<usize> {
        if self.first_cell.is_empty() {
            return None;
        }
        let b = self.bucket(p);
        if let Some(k) = self.first_cell[b] {
            return Some(k);
        }
        let (bi, bj) = ((b % self.nx) as i64, (b / self.nx) as i64);
        for ring in 1..(self.nx.max(self.ny) as i64) {
            for dj in -ring..=ring {
                for di in -ring..=ring {
                    if di.abs() != ring && dj.abs() != ring {
                        continue;
                    }
                    let (i, j) = (bi + di, bj + dj);
                    if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
                        continue;
                    }
                    if let Some(k) = self.first_cell[j as usize * self.nx + i as usize] {
                        return Some(k);
                    }
                }
            }
        }
        None
    }
}

fn normalize(bary: [f64; 3]) -> [f64; 3] {
    let clipped = bary.map(|l| l.max(0.0));
    let sum: f64 = clipped.iter().sum();
    clipped.map(|l| l / sum)
}

impl Mesh {
    /// Finds the cell containing `p`, walking across neighbors from a bucket seed
    /// and falling back to a scan of all cells.
    pub fn locate_point(&self, p: Point2) -> Result<Location> {
        self.locate_from(p, None)
    }

    /// As [`Mesh::locate_point`], starting the walk at `hint` when given.
    pub fn locate_from(&self, p: Point2, hint: Option<usize>) -> Result<Location> {
        if !p.is_finite() {
            return Err(Error::NotFound { x: p.x, y: p.y });
        }
        if let Some(start) = hint.filter(|&k| k < self.num_cells()).or_else(|| self.locator.seed(p)) {
            if let Some(loc) = self.walk(p, start) {
                return Ok(loc);
            }
        }
        self.scan(p).ok_or(Error::NotFound { x: p.x, y: p.y })
    }

    fn walk(&self, p: Point2, start: usize) -> Option<Location> {
        let mut k = start;
        for _ in 0..self.num_cells() {
            let [a, b, c] = self.cell_points(k);
            let bary = barycentric(p, a, b, c);
            let (worst, value) = bary
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.total_cmp(y.1))
                .map(|(i, v)| (i, *v))?;
            if value >= -BARY_TOL {
                return Some(Location {
                    cell: k,
                    bary: normalize(bary),
                });
            }
            k = self.neighbors[k][worst]?;
        }
        None
    }

    fn scan(&self, p: Point2) -> Option<Location> {
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for k in 0..self.num_cells() {
            let [a, b, c] = self.cell_points(k);
            let bary = barycentric(p, a, b, c);
            let worst = bary.iter().copied().fold(f64::INFINITY, f64::min);
            if worst >= -BARY_TOL && best.is_none_or(|(_, _, w)| worst > w) {
                best = Some((k, bary, worst));
            }
        }
        best.map(|(cell, bary, _)| Location {
            cell,
            bary: normalize(bary),
        })
    }
}

#[cfg(test)]
mod tests {
    use crate::mesh::{build_punctured_square_mesh, build_square_mesh, CellSpec};
    use crate::geometry::Point2;

    #[test]
    fn vertices_and_centroids() {
        let cell = CellSpec::new(Point2::new(5.0, 5.0), 0.25, 1.0, 1.0);
        let mesh = build_punctured_square_mesh(10.0, 0.2495, &cell).unwrap();
        for (v, &p) in mesh.vertices().iter().enumerate() {
            let loc = mesh.locate_point(p).unwrap();
            let tri = mesh.cells()[loc.cell];
            let local = tri.iter().position(|&w| w == v).expect("vertex of the located cell");
            assert!((loc.bary[local] - 1.0).abs() < 1e-12);
        }
        for k in (0..mesh.num_cells()).step_by(7) {
            let [a, b, c] = mesh.cell_points(k);
            let g = (1.0 / 3.0) * (a + b + c);
            let loc = mesh.locate_point(g).unwrap();
            assert_eq!(loc.cell, k);
            for l in loc.bary {
                assert!((l - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn excluded_disk_and_outside() {
        let cell = CellSpec::new(Point2::new(5.0, 5.0), 0.25, 1.0, 1.0);
        let mesh = build_punctured_square_mesh(10.0, 0.2495, &cell).unwrap();
        assert!(mesh.locate_point(Point2::new(5.0, 5.0)).is_err());
        assert!(mesh.locate_point(Point2::new(5.1, 4.95)).is_err());
        assert!(mesh.locate_point(Point2::new(-0.1, 3.0)).is_err());
        let full = build_square_mesh(10.0, 0.2495).unwrap();
        assert!(full.locate_point(Point2::new(5.0, 5.0)).is_ok());
        assert!(full.locate_point(Point2::new(10.5, 5.0)).is_err());
    }

    #[test]
    fn reconstruction_matches() {
        let full = build_square_mesh(3.0, 0.2).unwrap();
        for k in 0..200 {
            let p = Point2::new(3.0 * ((k as f64 * 0.618).fract()), 3.0 * ((k as f64 * 0.377).fract()));
            let loc = full.locate_point(p).unwrap();
            let pts = full.cell_points(loc.cell);
            let q = loc.bary[0] * pts[0] + loc.bary[1] * pts[1] + loc.bary[2] * pts[2];
            assert!(q.dist(p) < 1e-10 * 3.0);
            assert!((loc.bary.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(loc.bary.iter().all(|&l| l >= -1e-12));
        }
    }
}
