//! Legacy-VTK (ASCII) unstructured grid writer.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::mesh::TetMesh;

const VTK_TETRA: u8 = 10;
const VTK_LINE: u8 = 3;

/// A nodal data array attached to the mesh points.
#[derive(Debug, Clone)]
pub enum PointData {
    Scalars { name: String, values: Vec<f64> },
    Vectors { name: String, values: Vec<Vector3<f64>> },
}

impl PointData {
    fn len(&self) -> usize {
        match self {
            PointData::Scalars { values, .. } => values.len(),
            PointData::Vectors { values, .. } => values.len(),
        }
    }
}

/// Serializes a tetrahedral mesh with optional point data arrays.
pub fn vtk_to_string(mesh: &TetMesh, point_data: &[PointData]) -> Result<String> {
    for pd in point_data {
        if pd.len() != mesh.num_vertices() {
            return Err(Error::invalid(
                "point data length differs from vertex count",
            ));
        }
    }
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("overlapmesh output\n");
    out.push_str("ASCII\n");
    out.push_str("DATASET UNSTRUCTURED_GRID\n");
    writeln!(out, "POINTS {} double", mesh.num_vertices()).unwrap();
    for v in mesh.vertices() {
        writeln!(out, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z).unwrap();
    }
    writeln!(out, "CELLS {} {}", mesh.num_cells(), 5 * mesh.num_cells()).unwrap();
    for c in mesh.cells() {
        writeln!(out, "4 {} {} {} {}", c[0], c[1], c[2], c[3]).unwrap();
    }
    writeln!(out, "CELL_TYPES {}", mesh.num_cells()).unwrap();
    for _ in 0..mesh.num_cells() {
        writeln!(out, "{VTK_TETRA}").unwrap();
    }
    if !point_data.is_empty() {
        writeln!(out, "POINT_DATA {}", mesh.num_vertices()).unwrap();
        for pd in point_data {
            match pd {
                PointData::Scalars { name, values } => {
                    writeln!(out, "SCALARS {name} double 1").unwrap();
                    out.push_str("LOOKUP_TABLE default\n");
                    for v in values {
                        writeln!(out, "{v:.16e}").unwrap();
                    }
                }
                PointData::Vectors { name, values } => {
                    writeln!(out, "VECTORS {name} double").unwrap();
                    for v in values {
                        writeln!(out, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z).unwrap();
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn write_vtk(path: impl AsRef<Path>, mesh: &TetMesh, point_data: &[PointData]) -> Result<()> {
    std::fs::write(path, vtk_to_string(mesh, point_data)?)?;
    Ok(())
}

/// Boxes as VTK line cells (12 edges each), for tree-level debugging.
pub fn vtk_boxes_to_string(boxes: &[Aabb]) -> String {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("overlapmesh tree boxes\n");
    out.push_str("ASCII\n");
    out.push_str("DATASET UNSTRUCTURED_GRID\n");
    writeln!(out, "POINTS {} double", 8 * boxes.len()).unwrap();
    for b in boxes {
        for k in 0..8 {
            let x = if k & 1 == 0 { b.min.x } else { b.max.x };
            let y = if k & 2 == 0 { b.min.y } else { b.max.y };
            let z = if k & 4 == 0 { b.min.z } else { b.max.z };
            writeln!(out, "{x:.16e} {y:.16e} {z:.16e}").unwrap();
        }
    }
    const EDGES: [(usize, usize); 12] = [
        (0, 1),
        (2, 3),
        (4, 5),
        (6, 7),
        (0, 2),
        (1, 3),
        (4, 6),
        (5, 7),
        (0, 4),
        (1, 5),
        (2, 6),
        (3, 7),
    ];
    let ne = 12 * boxes.len();
    writeln!(out, "CELLS {ne} {}", 3 * ne).unwrap();
    for (bi, _) in boxes.iter().enumerate() {
        for (a, b) in EDGES {
            writeln!(out, "2 {} {}", 8 * bi + a, 8 * bi + b).unwrap();
        }
    }
    writeln!(out, "CELL_TYPES {ne}").unwrap();
    for _ in 0..ne {
        writeln!(out, "{VTK_LINE}").unwrap();
    }
    out
}
