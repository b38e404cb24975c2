//! Output formats for external inspection: legacy-VTK unstructured grids
//! (meshes plus nodal solution fields) and OFF dumps of clipped geometry.

mod off;
mod vtk;

pub use off::{polygon_to_off, polygons_to_off, polyhedron_to_off};
pub use vtk::{vtk_boxes_to_string, vtk_to_string, write_vtk, PointData};
