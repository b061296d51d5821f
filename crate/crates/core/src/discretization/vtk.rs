//! ASCII legacy VTK output on the full structured grid.
//!
//! Inactive nodes are written as zero; a `fluid` cell mask marks the elements
//! that belong to the fluid region.

use std::io::{self, Write};

use super::field::Field;
use super::mesh::Mesh;

/// Writes `STRUCTURED_POINTS` with one point array per field.
pub fn write_vtk<W: Write>(
    out: &mut W,
    title: &str,
    mesh: &Mesh,
    fields: &[(&str, &Field)],
) -> io::Result<()> {
    let [gx, gy, gz] = mesh.grid_dims();
    let h = mesh.spacing();
    let o = mesh.origin();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_POINTS")?;
    writeln!(out, "DIMENSIONS {gx} {gy} {gz}")?;
    writeln!(out, "ORIGIN {} {} {}", o[0], o[1], o[2])?;
    let hz = if mesh.dim() == 3 { h[2] } else { 1.0 };
    writeln!(out, "SPACING {} {} {}", h[0], h[1], hz)?;

    let points = mesh.grid_node_count();
    writeln!(out, "POINT_DATA {points}")?;
    for (name, field) in fields {
        let k = field.components();
        match k {
            1 => {
                writeln!(out, "SCALARS {name} double 1")?;
                writeln!(out, "LOOKUP_TABLE default")?;
            }
            _ => writeln!(out, "VECTORS {name} double")?,
        }
        for g in 0..points {
            let node = mesh.node_of_grid(g);
            let mut row = [0.0; 3];
            if let Some(n) = node {
                row[..k.min(3)].copy_from_slice(&field.node_values(n)[..k.min(3)]);
            }
            if k == 1 {
                writeln!(out, "{}", row[0])?;
            } else {
                writeln!(out, "{} {} {}", row[0], row[1], row[2])?;
            }
        }
    }

    let [nx, ny, nz] = mesh.cells();
    let nz = if mesh.dim() == 3 { nz } else { 1 };
    writeln!(out, "CELL_DATA {}", nx * ny * nz)?;
    writeln!(out, "SCALARS fluid int 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for _ in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                writeln!(out, "{}", u8::from(!mesh.is_solid_column(i, j)))?;
            }
        }
    }
    Ok(())
}
