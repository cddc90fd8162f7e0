//! P1 finite-element operators, loads, norms and point evaluation.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{barycentric, p1_gradients, Point2};
use crate::mesh::{BoundaryTag, Mesh};
use crate::quadrature::{map_point, subdivide4, triangle7};
use crate::sparse::{Pattern, SparseSymmetricMatrix};

/// Nodal coefficients of a P1 field, one per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField(Vec<f64>);

impl NodalField {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &Mesh, f: impl Fn(Point2) -> f64) -> Self {
        Self(mesh.vertices().iter().map(|&p| f(p)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn check_len(&self, mesh: &Mesh) -> Result<()> {
        if self.len() != mesh.num_vertices() {
            return Err(Error::Dimension {
                expected: mesh.num_vertices(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

impl std::ops::Deref for NodalField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Shared sparsity pattern for every operator on `mesh`.
pub fn mesh_pattern(mesh: &Mesh) -> Arc<Pattern> {
    Arc::new(Pattern::from_cells(mesh.num_vertices(), mesh.cells()))
}

fn checked_cell(mesh: &Mesh, k: usize) -> Result<[Point2; 3]> {
    let area = mesh.cell_area(k);
    if !(area > 0.0) {
        return Err(Error::DegenerateCell { cell: k, area });
    }
    Ok(mesh.cell_points(k))
}

pub fn assemble_mass_with(mesh: &Mesh, pattern: &Arc<Pattern>) -> Result<SparseSymmetricMatrix> {
    let mut m = SparseSymmetricMatrix::zeros(Arc::clone(pattern));
    for (k, tri) in mesh.cells().iter().enumerate() {
        checked_cell(mesh, k)?;
        let area = mesh.cell_area(k);
        for a in 0..3 {
            for b in 0..3 {
                let factor = if a == b { 2.0 } else { 1.0 };
                m.add(tri[a], tri[b], factor * area / 12.0);
            }
        }
    }
    Ok(m)
}

pub fn assemble_stiffness_with(mesh: &Mesh, pattern: &Arc<Pattern>) -> Result<SparseSymmetricMatrix> {
    let mut k_mat = SparseSymmetricMatrix::zeros(Arc::clone(pattern));
    for (k, tri) in mesh.cells().iter().enumerate() {
        let [p0, p1, p2] = checked_cell(mesh, k)?;
        let (grads, area) = p1_gradients(p0, p1, p2);
        for a in 0..3 {
            for b in 0..3 {
                k_mat.add(tri[a], tri[b], area * grads[a].dot(grads[b]));
            }
        }
    }
    Ok(k_mat)
}

pub fn assemble_boundary_mass_with(
    mesh: &Mesh,
    pattern: &Arc<Pattern>,
    tag: BoundaryTag,
) -> Result<SparseSymmetricMatrix> {
    let mut m = SparseSymmetricMatrix::zeros(Arc::clone(pattern));
    let mut count = 0;
    for [a, b] in mesh.edges_with_tag(tag) {
        let len = mesh.vertices()[a].dist(mesh.vertices()[b]);
        m.add(a, a, len / 3.0);
        m.add(b, b, len / 3.0);
        m.add(a, b, len / 6.0);
        m.add(b, a, len / 6.0);
        count += 1;
    }
    if count == 0 {
        return Err(Error::param(format!("no boundary edges tagged {tag:?}")));
    }
    Ok(m)
}

/// Consistent P1 mass matrix.
pub fn assemble_mass(mesh: &Mesh) -> Result<SparseSymmetricMatrix> {
    assemble_mass_with(mesh, &mesh_pattern(mesh))
}

/// P1 stiffness (Laplacian) matrix.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<SparseSymmetricMatrix> {
    assemble_stiffness_with(mesh, &mesh_pattern(mesh))
}

/// Mass matrix of the boundary edges carrying `tag`.
pub fn assemble_boundary_mass(mesh: &Mesh, tag: BoundaryTag) -> Result<SparseSymmetricMatrix> {
    assemble_boundary_mass_with(mesh, &mesh_pattern(mesh), tag)
}

/// Load vector of a constant flux density on the edges carrying `tag`.
pub fn assemble_boundary_load(mesh: &Mesh, tag: BoundaryTag, phi: f64) -> Result<Vec<f64>> {
    assemble_boundary_load_with(mesh, tag, |_| phi)
}

/// Load vector ∫ φ ψ_i dΓ of a spatially varying flux density, by 3-point Gauss
/// quadrature on each tagged edge.
pub fn assemble_boundary_load_with(mesh: &Mesh, tag: BoundaryTag, phi: impl Fn(Point2) -> f64) -> Result<Vec<f64>> {
    let gauss = [
        (0.5 - 0.5 * (0.6f64).sqrt(), 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.5 + 0.5 * (0.6f64).sqrt(), 5.0 / 18.0),
    ];
    let mut load = vec![0.0; mesh.num_vertices()];
    let mut count = 0;
    for [a, b] in mesh.edges_with_tag(tag) {
        let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
        let len = pa.dist(pb);
        for (s, w) in gauss {
            let value = phi((1.0 - s) * pa + s * pb) * w * len;
            load[a] += (1.0 - s) * value;
            load[b] += s * value;
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::param(format!("no boundary edges tagged {tag:?}")));
    }
    Ok(load)
}

/// Isotropic Gaussian density with standard deviation `sigma`.
pub fn gaussian_density(p: Point2, center: Point2, sigma: f64) -> f64 {
    let r2 = (p - center).dot(p - center);
    (-r2 / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma)
}

fn distance_to_triangle(p: Point2, t: &[Point2; 3]) -> f64 {
    let bary = barycentric(p, t[0], t[1], t[2]);
    if bary.iter().all(|&l| l >= 0.0) {
        return 0.0;
    }
    (0..3)
        .map(|k| {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let ab = b - a;
            let s = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
            p.dist(a + s * ab)
        })
        .fold(f64::INFINITY, f64::min)
}

fn diameter(t: &[Point2; 3]) -> f64 {
    t[0].dist(t[1]).max(t[1].dist(t[2])).max(t[2].dist(t[0]))
}

/// Tail radius beyond which the Gaussian is negligible (e^{-40.5} relative).
const GAUSS_CUTOFF_SIGMAS: f64 = 9.0;

/// Adds ∫_sub g ψ_a to `acc[a]` for the sub-triangle `sub` of the parent cell.
fn gaussian_on_subcell(
    parent: &[Point2; 3],
    sub: &[Point2; 3],
    center: Point2,
    sigma: f64,
    acc: &mut [f64; 3],
) {
    let near = distance_to_triangle(center, sub) < GAUSS_CUTOFF_SIGMAS * sigma;
    if near && diameter(sub) > 0.5 * sigma {
        for child in subdivide4(sub) {
            gaussian_on_subcell(parent, &child, center, sigma, acc);
        }
        return;
    }
    let area = crate::geometry::triangle_area(sub[0], sub[1], sub[2]);
    for (l, w) in triangle7() {
        let q = map_point(sub, &l);
        let g = gaussian_density(q, center, sigma) * w * area;
        let hat = barycentric(q, parent[0], parent[1], parent[2]);
        for a in 0..3 {
            acc[a] += g * hat[a];
        }
    }
}

/// Entries ∫ g_σ ψ_i dΩ by per-cell quadrature, without normalization.
///
/// Cells near the center are split recursively until sub-cells are smaller than
/// σ/2, so the 7-point rule resolves the peak.
pub fn gaussian_load_unnormalized(mesh: &Mesh, center: Point2, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("Gaussian width must be positive, got {sigma}")));
    }
    mesh.locate_point(center)
        .map_err(|_| Error::param(format!("source center ({}, {}) is outside the mesh", center.x, center.y)))?;
    let mut load = vec![0.0; mesh.num_vertices()];
    for (k, tri) in mesh.cells().iter().enumerate() {
        let t = checked_cell(mesh, k)?;
        let mut acc = [0.0; 3];
        gaussian_on_subcell(&t, &t, center, sigma, &mut acc);
        for a in 0..3 {
            load[tri[a]] += acc[a];
        }
    }
    Ok(load)
}

/// Regularized Dirac load: Gaussian entries rescaled to a unit total.
pub fn assemble_gaussian_load(mesh: &Mesh, center: Point2, sigma: f64) -> Result<Vec<f64>> {
    let mut load = gaussian_load_unnormalized(mesh, center, sigma)?;
    let total: f64 = load.iter().sum();
    if !(total > 0.0) {
        return Err(Error::param("Gaussian load has no mass on the mesh"));
    }
    load.iter_mut().for_each(|v| *v /= total);
    // fold the rounding residue into the largest entry so the total is 1 to the last bit
    let residue = 1.0 - load.iter().sum::<f64>();
    if let Some(imax) = (0..load.len()).max_by(|&a, &b| load[a].total_cmp(&load[b])) {
        load[imax] += residue;
    }
    Ok(load)
}

/// Mass matrix of Ω ∖ B(center, radius): quadrature points inside the disk are
/// dropped, and cells cut by the circle are subdivided `levels` times.
pub fn assemble_masked_mass(
    mesh: &Mesh,
    pattern: &Arc<Pattern>,
    center: Point2,
    radius: f64,
    levels: usize,
) -> Result<SparseSymmetricMatrix> {
    let mut m = SparseSymmetricMatrix::zeros(Arc::clone(pattern));
    for (k, tri) in mesh.cells().iter().enumerate() {
        let t = checked_cell(mesh, k)?;
        let far = distance_to_triangle(center, &t) > radius;
        let inside = t.iter().all(|p| p.dist(center) < radius);
        if inside {
            continue;
        }
        let area = mesh.cell_area(k);
        if far {
            for a in 0..3 {
                for b in 0..3 {
                    m.add(tri[a], tri[b], if a == b { area / 6.0 } else { area / 12.0 });
                }
            }
            continue;
        }
        let mut subs = vec![t];
        for _ in 0..levels {
            subs = subs.iter().flat_map(subdivide4).collect();
        }
        let mut local = [[0.0; 3]; 3];
        for sub in &subs {
            let sub_area = crate::geometry::triangle_area(sub[0], sub[1], sub[2]);
            for (l, w) in triangle7() {
                let q = map_point(sub, &l);
                if q.dist(center) < radius {
                    continue;
                }
                let hat = barycentric(q, t[0], t[1], t[2]);
                for a in 0..3 {
                    for b in 0..3 {
                        local[a][b] += w * sub_area * hat[a] * hat[b];
                    }
                }
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                m.add(tri[a], tri[b], local[a][b]);
            }
        }
    }
    Ok(m)
}

fn check_dims(field: &[f64], m: &SparseSymmetricMatrix) -> Result<()> {
    if field.len() != m.n() {
        return Err(Error::Dimension {
            expected: m.n(),
            got: field.len(),
        });
    }
    Ok(())
}

/// √(uᵀMu).
pub fn l2_norm(field: &[f64], mass: &SparseSymmetricMatrix) -> Result<f64> {
    check_dims(field, mass)?;
    Ok(mass.quadratic_form(field).max(0.0).sqrt())
}

/// √(uᵀKu).
pub fn h1_seminorm(field: &[f64], stiffness: &SparseSymmetricMatrix) -> Result<f64> {
    check_dims(field, stiffness)?;
    Ok(stiffness.quadratic_form(field).max(0.0).sqrt())
}

/// 1ᵀMu.
pub fn total_mass(field: &[f64], mass: &SparseSymmetricMatrix) -> Result<f64> {
    check_dims(field, mass)?;
    let ones = vec![1.0; field.len()];
    Ok(crate::sparse::dot(&mass.matvec(&ones), field))
}

/// Barycentric interpolation of the P1 field at `p`.
pub fn evaluate(field: &[f64], mesh: &Mesh, p: Point2) -> Result<f64> {
    if field.len() != mesh.num_vertices() {
        return Err(Error::Dimension {
            expected: mesh.num_vertices(),
            got: field.len(),
        });
    }
    let loc = mesh.locate_point(p)?;
    let tri = mesh.cells()[loc.cell];
    Ok((0..3).map(|a| loc.bary[a] * field[tri[a]]).sum())
}

/// Gradient of the P1 field on the triangle containing `p`.
pub fn gradient(field: &[f64], mesh: &Mesh, p: Point2) -> Result<Point2> {
    if field.len() != mesh.num_vertices() {
        return Err(Error::Dimension {
            expected: mesh.num_vertices(),
            got: field.len(),
        });
    }
    let loc = mesh.locate_point(p)?;
    let tri = mesh.cells()[loc.cell];
    let [a, b, c] = mesh.cell_points(loc.cell);
    let (g, _) = p1_gradients(a, b, c);
    Ok(field[tri[0]] * g[0] + field[tri[1]] * g[1] + field[tri[2]] * g[2])
}

/// Mass, stiffness and (optionally) cell-boundary mass on one mesh.
#[derive(Debug, Clone)]
pub struct Operators {
    pub mass: SparseSymmetricMatrix,
    pub stiffness: SparseSymmetricMatrix,
}

impl Operators {
    pub fn assemble(mesh: &Mesh) -> Result<Self> {
        let pattern = mesh_pattern(mesh);
        Ok(Self {
            mass: assemble_mass_with(mesh, &pattern)?,
            stiffness: assemble_stiffness_with(mesh, &pattern)?,
        })
    }
}
