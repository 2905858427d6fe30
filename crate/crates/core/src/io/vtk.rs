use std::fmt::Write as _;
use std::path::Path;

use super::{io_err, IoError};
use crate::fem::TemperatureField;
use crate::mesh::Mesh;

const VTK_TETRA: u8 = 10;

/// Legacy ASCII unstructured grid with nodal `temperature`.
pub fn write_vtk(
    mesh: &Mesh,
    field: &TemperatureField,
    path: impl AsRef<Path>,
) -> Result<(), IoError> {
    let path = path.as_ref();
    let text = format_vtk(mesh, field)?;
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn format_vtk(mesh: &Mesh, field: &TemperatureField) -> Result<String, IoError> {
    if field.len() != mesh.num_nodes() {
        return Err(IoError::FieldSize {
            nodes: mesh.num_nodes(),
            values: field.len(),
        });
    }
    let n = mesh.num_nodes();
    let m = mesh.num_cells();
    let mut s = String::with_capacity(80 * n + 40 * m);
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "frostsim temperature, t = {:.16e} s", field.time);
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.nodes() {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", p[0], p[1], p[2]);
    }
    let _ = writeln!(s, "CELLS {m} {}", 5 * m);
    for c in mesh.cells() {
        let _ = writeln!(s, "4 {} {} {} {}", c[0], c[1], c[2], c[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {m}");
    for _ in 0..m {
        let _ = writeln!(s, "{VTK_TETRA}");
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    s.push_str("SCALARS temperature double 1\nLOOKUP_TABLE default\n");
    for v in &field.values {
        let _ = writeln!(s, "{v:.16e}");
    }
    Ok(s)
}
