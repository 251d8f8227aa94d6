//! Wavefront OBJ export of immersions: one vertex per node, two triangles
//! per grid cell. Periodic charts get an extra row and column of vertices
//! along the seams, placed at `u(x + L) = u(x) + drift L`.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use super::ReportError;
use crate::tensor_field::ImmersionField;

/// Vertices and 0-based triangles read back from an OBJ file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObjMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

/// Vertex grid dimensions of the exported mesh, seams included.
pub fn mesh_shape(u: &ImmersionField) -> [usize; 2] {
    let (nx, ny) = (u.chart.nx(), u.chart.ny());
    if u.chart.is_periodic() {
        [nx + 1, ny + 1]
    } else {
        [nx, ny]
    }
}

/// Scientific notation with nine digits after the point.
fn fmt_coord(x: f64) -> String {
    // -0 prints as 0 so that identical positions give identical text
    format!("{:.9e}", if x == 0.0 { 0.0 } else { x })
}

/// Seam-extended vertex positions of `u`, row-major over `mesh_shape(u)`.
pub fn mesh_vertices(u: &ImmersionField) -> Vec<[f64; 3]> {
    let chart = &u.chart;
    let (nx, ny) = (chart.nx(), chart.ny());
    let [mx, my] = mesh_shape(u);
    let extent = chart.extent();
    let mut out = Vec::with_capacity(mx * my);
    for j in 0..my {
        for i in 0..mx {
            let p = u.values[chart.index(i % nx, j % ny)];
            // seam copies are shifted by whole periods
            let shift = [
                if i >= nx { extent[0] } else { 0.0 },
                if j >= ny { extent[1] } else { 0.0 },
            ];
            out.push(std::array::from_fn(|c| p[c] + u.drift[c][0] * shift[0] + u.drift[c][1] * shift[1]));
        }
    }
    out
}

/// OBJ text of an `mx` by `my` vertex grid, two triangles per cell.
pub fn write_vertex_grid<W: Write>(vertices: &[[f64; 3]], shape: [usize; 2], header: &str, w: W) -> Result<(), ReportError> {
    let [mx, my] = shape;
    if vertices.len() != mx * my {
        let msg = format!("{} vertices for a {mx}x{my} grid", vertices.len());
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, msg).into());
    }
    let mut w = BufWriter::new(w);
    writeln!(w, "# {header}")?;
    for p in vertices {
        writeln!(w, "v {} {} {}", fmt_coord(p[0]), fmt_coord(p[1]), fmt_coord(p[2]))?;
    }
    for j in 0..my.saturating_sub(1) {
        for i in 0..mx.saturating_sub(1) {
            let a = j * mx + i + 1;
            let b = a + 1;
            let c = b + mx;
            let d = a + mx;
            writeln!(w, "f {a} {b} {c}")?;
            writeln!(w, "f {a} {c} {d}")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_obj<W: Write>(u: &ImmersionField, w: W) -> Result<(), ReportError> {
    let chart = &u.chart;
    let header = format!(
        "isoembed immersion, {}x{} nodes, {}",
        chart.nx(),
        chart.ny(),
        if chart.is_periodic() { "periodic" } else { "clamped" }
    );
    write_vertex_grid(&mesh_vertices(u), mesh_shape(u), &header, w)
}

pub fn export_mesh(u: &ImmersionField, path: &Path) -> Result<(), ReportError> {
    write_obj(u, std::fs::File::create(path)?)
}

/// Reads `v` and triangular `f` lines; other records are skipped.
pub fn read_obj<R: BufRead>(r: R) -> Result<ObjMesh, ReportError> {
    let mut mesh = ObjMesh::default();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let mut it = line.split_whitespace();
        let bad = |reason: &str| ReportError::Mesh {
            line: n + 1,
            reason: reason.into(),
        };
        match it.next() {
            Some("v") => {
                let mut p = [0.0; 3];
                for c in &mut p {
                    *c = it
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("vertex needs three numbers"))?;
                }
                mesh.vertices.push(p);
            }
            Some("f") => {
                let mut f = [0; 3];
                for c in &mut f {
                    // `v/vt/vn` references keep only the vertex index
                    let idx: usize = it
                        .next()
                        .and_then(|s| s.split('/').next())
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("face needs three vertex indices"))?;
                    if idx == 0 || idx > mesh.vertices.len() {
                        return Err(bad("face index out of range"));
                    }
                    *c = idx - 1;
                }
                if it.next().is_some() {
                    return Err(bad("only triangles are supported"));
                }
                mesh.faces.push(f);
            }
            _ => {}
        }
    }
    Ok(mesh)
}
