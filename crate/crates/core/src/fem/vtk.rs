//! Legacy ASCII VTK export of a solved field.

use super::{CoefficientFields, FlowField, FluidMesh, MeshQuadrature};
use std::io::{self, Write};

/// Writes nodal velocity and pressure plus per-cell mean viscosity and
/// disc fraction as an unstructured grid.
pub fn write_vtk<W: Write>(
    out: &mut W,
    mesh: &FluidMesh,
    quad: &MeshQuadrature,
    field: &FlowField,
    coeffs: &CoefficientFields,
    title: &str,
) -> io::Result<()> {
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{title}")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.n_nodes())?;
    for p in mesh.nodes() {
        writeln!(out, "{:.10e} {:.10e} 0", p.x, p.y)?;
    }
    let ne = mesh.n_elements();
    writeln!(out, "CELLS {} {}", ne, 4 * ne)?;
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {ne}")?;
    for _ in 0..ne {
        writeln!(out, "5")?;
    }

    writeln!(out, "POINT_DATA {}", mesh.n_nodes())?;
    writeln!(out, "VECTORS u double")?;
    for v in &field.velocity {
        writeln!(out, "{:.10e} {:.10e} 0", v.x, v.y)?;
    }
    writeln!(out, "SCALARS p double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for p in &field.pressure {
        writeln!(out, "{p:.10e}")?;
    }

    writeln!(out, "CELL_DATA {ne}")?;
    let mut mu = vec![0.0; ne];
    let mut chi = vec![0.0; ne];
    for e in 0..ne {
        let area = mesh.area(e);
        for q in quad.range(e) {
            let w = quad.weights()[q] / area;
            mu[e] += w * coeffs.viscosity[q];
            if coeffs.indicator(q) {
                chi[e] += w;
            }
        }
    }
    writeln!(out, "SCALARS mu double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in &mu {
        writeln!(out, "{v:.10e}")?;
    }
    writeln!(out, "SCALARS chi double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in &chi {
        writeln!(out, "{v:.10e}")?;
    }
    Ok(())
}
