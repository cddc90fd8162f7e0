//! Legacy ASCII VTK output for meshes, boundary edges and nodal fields.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::Mesh;
use crate::error::{Error, Result};

const VTK_LINE: u8 = 3;
const VTK_TRIANGLE: u8 = 5;

fn header(out: &mut String, title: &str) {
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str(title);
    out.push('\n');
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
}

fn points(out: &mut String, mesh: &Mesh) {
    let _ = writeln!(out, "POINTS {} double", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:.17e} {:.17e} 0", p.x, p.y);
    }
}

/// Triangles of `mesh`, with an optional point scalar named `concentration`.
pub fn triangles_to_string(mesh: &Mesh, field: Option<&[f64]>) -> Result<String> {
    let mut out = String::new();
    header(&mut out, "dirac-cell mesh");
    points(&mut out, mesh);
    let nc = mesh.num_cells();
    let _ = writeln!(out, "CELLS {} {}", nc, 4 * nc);
    for tri in mesh.cells() {
        let _ = writeln!(out, "3 {} {} {}", tri[0], tri[1], tri[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {nc}");
    for _ in 0..nc {
        let _ = writeln!(out, "{VTK_TRIANGLE}");
    }
    if let Some(values) = field {
        if values.len() != mesh.num_vertices() {
            return Err(Error::Dimension {
                expected: mesh.num_vertices(),
                got: values.len(),
            });
        }
        let _ = writeln!(out, "POINT_DATA {}", values.len());
        out.push_str("SCALARS concentration double 1\nLOOKUP_TABLE default\n");
        for v in values {
            let _ = writeln!(out, "{v:.17e}");
        }
    }
    Ok(out)
}

/// Boundary edges as line cells with an integer `boundary_tag` cell array
/// (1 = outer square, 2 = cell circle).
pub fn boundary_edges_to_string(mesh: &Mesh) -> String {
    let mut out = String::new();
    header(&mut out, "dirac-cell boundary edges");
    points(&mut out, mesh);
    let edges = mesh.boundary_edges();
    let ne = edges.len();
    let _ = writeln!(out, "CELLS {} {}", ne, 3 * ne);
    for ([a, b], _) in edges {
        let _ = writeln!(out, "2 {a} {b}");
    }
    let _ = writeln!(out, "CELL_TYPES {ne}");
    for _ in 0..ne {
        let _ = writeln!(out, "{VTK_LINE}");
    }
    let _ = writeln!(out, "CELL_DATA {ne}");
    out.push_str("SCALARS boundary_tag int 1\nLOOKUP_TABLE default\n");
    for (_, tag) in edges {
        let _ = writeln!(out, "{}", tag.code());
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Writes `<stem>.vtk` (triangles) and `<stem>_edges.vtk` (tagged boundary edges).
pub fn write_mesh(mesh: &Mesh, dir: &Path, stem: &str) -> Result<()> {
    write_file(&dir.join(format!("{stem}.vtk")), &triangles_to_string(mesh, None)?)?;
    write_file(&dir.join(format!("{stem}_edges.vtk")), &boundary_edges_to_string(mesh))
}

pub fn write_field(mesh: &Mesh, values: &[f64], path: &Path) -> Result<()> {
    write_file(path, &triangles_to_string(mesh, Some(values))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::mesh::{build_punctured_square_mesh, CellSpec};

    #[test]
    fn legacy_layout() {
        let mesh = Mesh::from_parts(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            vec![[0, 1, 2]],
            None,
        )
        .unwrap();
        let s = triangles_to_string(&mesh, Some(&[1.0, 2.0, 3.0])).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert_eq!(lines[2], "ASCII");
        assert_eq!(lines[3], "DATASET UNSTRUCTURED_GRID");
        assert_eq!(lines[4], "POINTS 3 double");
        assert!(s.contains("CELLS 1 4\n3 0 1 2\nCELL_TYPES 1\n5\n"));
        assert!(s.contains("POINT_DATA 3\nSCALARS concentration double 1\nLOOKUP_TABLE default\n"));
        assert!(triangles_to_string(&mesh, Some(&[1.0])).is_err());
    }

    #[test]
    fn edge_tags() {
        let cell = CellSpec::new(Point2::new(5.0, 5.0), 0.25, 1.0, 1.0);
        let mesh = build_punctured_square_mesh(10.0, 0.5, &cell).unwrap();
        let s = boundary_edges_to_string(&mesh);
        let tags: Vec<&str> = s.lines().skip_while(|l| !l.starts_with("LOOKUP_TABLE")).skip(1).collect();
        assert_eq!(tags.len(), mesh.boundary_edges().len());
        assert_eq!(tags.iter().filter(|t| **t == "2").count(), 16);
    }
}
