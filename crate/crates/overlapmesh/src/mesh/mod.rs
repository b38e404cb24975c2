//! Tetrahedral volume meshes and extracted boundary surface meshes.
//!
//! Meshes are immutable after construction and may be shared freely across
//! threads. Cell orientation is normalized at construction: every stored
//! cell has positive signed volume.

mod io;

pub use io::{parse_mesh, read_mesh, write_mesh};

use std::collections::HashMap;

use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{tet_signed_volume, Aabb};
use crate::EPS_GEOM;

/// Local facets of a tet, ordered so that their triangles face outward for
/// a positively oriented cell. Facet `f` is opposite vertex `f`.
pub const FACET_VERTICES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

/// Tetrahedral mesh: shared vertices and 4-index cells, plus an optional
/// small-integer marker per cell.
#[derive(Debug, Clone)]
pub struct TetMesh {
    vertices: Vec<Point3<f64>>,
    cells: Vec<[usize; 4]>,
    markers: Option<Vec<i32>>,
}

impl TetMesh {
    /// Builds a mesh, validating connectivity and normalizing cell
    /// orientation (two vertices of a negative cell are swapped).
    ///
    /// Rejects out-of-range vertex indices, repeated vertices within a
    /// cell, degenerate (near-zero volume) cells, and facets shared by
    /// more than two cells.
    pub fn new(vertices: Vec<Point3<f64>>, cells: Vec<[usize; 4]>) -> Result<Self> {
        Self::with_markers(vertices, cells, None)
    }

    pub fn with_markers(
        vertices: Vec<Point3<f64>>,
        mut cells: Vec<[usize; 4]>,
        markers: Option<Vec<i32>>,
    ) -> Result<Self> {
        if let Some(m) = &markers {
            if m.len() != cells.len() {
                return Err(Error::invalid("marker count differs from cell count"));
            }
        }
        for (ci, cell) in cells.iter_mut().enumerate() {
            for v in cell.iter() {
                if *v >= vertices.len() {
                    return Err(Error::invalid(format!(
                        "cell {ci} references vertex {v} out of range (num vertices {})",
                        vertices.len()
                    )));
                }
            }
            for a in 0..4 {
                for b in (a + 1)..4 {
                    if cell[a] == cell[b] {
                        return Err(Error::invalid(format!(
                            "cell {ci} repeats vertex {}",
                            cell[a]
                        )));
                    }
                }
            }
            let pts = [
                vertices[cell[0]],
                vertices[cell[1]],
                vertices[cell[2]],
                vertices[cell[3]],
            ];
            let vol = tet_signed_volume(&pts);
            let diam = Aabb::from_points(&pts).diameter();
            if vol.abs() <= EPS_GEOM * diam.powi(3).max(1e-300) {
                return Err(Error::degenerate(format!(
                    "cell {ci} has near-zero volume {vol}"
                )));
            }
            if vol < 0.0 {
                cell.swap(2, 3);
            }
        }
        let mesh = TetMesh {
            vertices,
            cells,
            markers,
        };
        mesh.check_facet_incidence()?;
        Ok(mesh)
    }

    /// Every facet must be shared by exactly one or two cells.
    fn check_facet_incidence(&self) -> Result<()> {
        let mut counts: HashMap<[usize; 3], u32> = HashMap::new();
        for cell in &self.cells {
            for fv in &FACET_VERTICES {
                let mut key = [cell[fv[0]], cell[fv[1]], cell[fv[2]]];
                key.sort_unstable();
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        for (key, count) in counts {
            if count > 2 {
                return Err(Error::invalid(format!(
                    "facet {key:?} shared by {count} cells"
                )));
            }
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn vertex(&self, i: usize) -> Point3<f64> {
        self.vertices[i]
    }

    pub fn cell(&self, i: usize) -> [usize; 4] {
        self.cells[i]
    }

    pub fn marker(&self, cell: usize) -> Option<i32> {
        self.markers.as_ref().map(|m| m[cell])
    }

    pub fn cell_points(&self, i: usize) -> [Point3<f64>; 4] {
        let c = self.cells[i];
        [
            self.vertices[c[0]],
            self.vertices[c[1]],
            self.vertices[c[2]],
            self.vertices[c[3]],
        ]
    }

    pub fn cell_volume(&self, i: usize) -> f64 {
        tet_signed_volume(&self.cell_points(i))
    }

    pub fn cell_centroid(&self, i: usize) -> Point3<f64> {
        crate::geometry::tet_centroid(&self.cell_points(i))
    }

    pub fn cell_diameter(&self, i: usize) -> f64 {
        crate::geometry::tet_diameter(&self.cell_points(i))
    }

    pub fn cell_bbox(&self, i: usize) -> Aabb {
        Aabb::from_points(&self.cell_points(i))
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.num_cells()).map(|i| self.cell_volume(i)).sum()
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    /// Largest cell diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.num_cells())
            .map(|i| self.cell_diameter(i))
            .fold(0.0, f64::max)
    }
}

/// Oriented triangle mesh extracted from the boundary of a [`TetMesh`].
///
/// Triangles are wound so their normals point out of the enclosed volume.
/// Each triangle remembers its parent cell, the local facet index within
/// that cell, and each surface vertex maps back to the volume-mesh vertex.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[usize; 3]>,
    parent_cell: Vec<usize>,
    parent_facet: Vec<u8>,
    parent_vertex: Vec<usize>,
}

impl SurfaceMesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn parent_cell(&self, tri: usize) -> usize {
        self.parent_cell[tri]
    }

    pub fn parent_facet(&self, tri: usize) -> u8 {
        self.parent_facet[tri]
    }

    /// Volume-mesh vertex index behind a surface vertex.
    pub fn parent_vertex(&self, v: usize) -> usize {
        self.parent_vertex[v]
    }

    pub fn triangle_points(&self, i: usize) -> [Point3<f64>; 3] {
        let t = self.triangles[i];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn triangle_normal_area(&self, i: usize) -> (Vector3<f64>, f64) {
        let [a, b, c] = self.triangle_points(i);
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        (n / len, 0.5 * len)
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        self.triangle_normal_area(i).1
    }

    pub fn triangle_centroid(&self, i: usize) -> Point3<f64> {
        let [a, b, c] = self.triangle_points(i);
        Point3::from((a.coords + b.coords + c.coords) / 3.0)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles())
            .map(|i| self.triangle_area(i))
            .sum()
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    /// Counts of unique edges.
    pub fn num_edges(&self) -> usize {
        let mut edges: Vec<[usize; 2]> = Vec::with_capacity(self.triangles.len() * 3);
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.push([a.min(b), a.max(b)]);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    /// `true` iff every edge is shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        let mut counts: HashMap<[usize; 2], u32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *counts.entry([a.min(b), a.max(b)]).or_insert(0) += 1;
            }
        }
        !counts.is_empty() && counts.values().all(|&c| c == 2)
    }
}

/// Conforming tetrahedralization of the axis-aligned box `lo..hi` with
/// `n = (nx, ny, nz)` cubes per axis, each cube split into six tetrahedra
/// sharing the main diagonal (Kuhn split). Produces `6·nx·ny·nz` cells.
pub fn box_mesh(lo: Point3<f64>, hi: Point3<f64>, n: (usize, usize, usize)) -> Result<TetMesh> {
    let (nx, ny, nz) = n;
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::invalid("box mesh needs at least one cell per axis"));
    }
    if !(lo.x < hi.x && lo.y < hi.y && lo.z < hi.z) {
        return Err(Error::invalid(format!(
            "degenerate box: lo {lo:?} must be componentwise below hi {hi:?}"
        )));
    }
    let idx = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Point3::new(
                    lo.x + (hi.x - lo.x) * i as f64 / nx as f64,
                    lo.y + (hi.y - lo.y) * j as f64 / ny as f64,
                    lo.z + (hi.z - lo.z) * k as f64 / nz as f64,
                ));
            }
        }
    }
    // Kuhn split: one tet per permutation of the axis walk from the low
    // corner to the high corner of the cube.
    const WALKS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut cells = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for walk in &WALKS {
                    let mut corner = [i, j, k];
                    let v0 = idx(corner[0], corner[1], corner[2]);
                    corner[walk[0]] += 1;
                    let v1 = idx(corner[0], corner[1], corner[2]);
                    corner[walk[1]] += 1;
                    let v2 = idx(corner[0], corner[1], corner[2]);
                    corner[walk[2]] += 1;
                    let v3 = idx(corner[0], corner[1], corner[2]);
                    cells.push([v0, v1, v2, v3]);
                }
            }
        }
    }
    TetMesh::new(vertices, cells)
}

/// `box_mesh` specialized to the unit cube `(0,1)^3` with `n` cubes per
/// axis: `(n+1)^3` vertices and `6·n^3` cells.
pub fn unit_cube_mesh(n: usize) -> Result<TetMesh> {
    if n == 0 {
        return Err(Error::invalid("unit cube mesh needs n >= 1"));
    }
    box_mesh(Point3::origin(), Point3::new(1.0, 1.0, 1.0), (n, n, n))
}

/// Applies the rigid motion `x -> R·x + t`. `rotation` must be orthogonal
/// with determinant +1 (checked to 1e-12); connectivity and markers are
/// preserved, and so are cell volumes.
pub fn transform(mesh: &TetMesh, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Result<TetMesh> {
    let gram = rotation.transpose() * rotation;
    let dev = (gram - Matrix3::identity()).abs().max();
    if dev > 1e-12 {
        return Err(Error::invalid(format!(
            "rotation matrix not orthogonal (deviation {dev:.3e})"
        )));
    }
    if (rotation.determinant() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("rotation matrix must have determinant +1"));
    }
    let vertices = mesh
        .vertices
        .iter()
        .map(|p| Point3::from(rotation * p.coords + translation))
        .collect();
    Ok(TetMesh {
        vertices,
        cells: mesh.cells.clone(),
        markers: mesh.markers.clone(),
    })
}

/// Mesh of the cells whose centroid satisfies `keep`, with vertices
/// renumbered compactly. Kept cells are geometrically unchanged.
pub fn extract_submesh(mesh: &TetMesh, keep: impl Fn(&Point3<f64>) -> bool) -> Result<TetMesh> {
    let mut vertex_map: Vec<Option<usize>> = vec![None; mesh.num_vertices()];
    let mut vertices = Vec::new();
    let mut cells = Vec::new();
    let mut markers = Vec::new();
    for ci in 0..mesh.num_cells() {
        if !keep(&mesh.cell_centroid(ci)) {
            continue;
        }
        let mut cell = [0usize; 4];
        for (slot, &v) in cell.iter_mut().zip(mesh.cells[ci].iter()) {
            *slot = *vertex_map[v].get_or_insert_with(|| {
                vertices.push(mesh.vertices[v]);
                vertices.len() - 1
            });
        }
        cells.push(cell);
        if let Some(m) = &mesh.markers {
            markers.push(m[ci]);
        }
    }
    if cells.is_empty() {
        return Err(Error::EmptyMesh(
            "submesh predicate rejected every cell".into(),
        ));
    }
    let markers = mesh.markers.as_ref().map(|_| markers);
    TetMesh::with_markers(vertices, cells, markers)
}

/// Extracts the boundary surface: all facets incident to exactly one cell,
/// wound outward, with parent bookkeeping.
pub fn boundary(mesh: &TetMesh) -> SurfaceMesh {
    let mut counts: HashMap<[usize; 3], u32> = HashMap::new();
    for cell in &mesh.cells {
        for fv in &FACET_VERTICES {
            let mut key = [cell[fv[0]], cell[fv[1]], cell[fv[2]]];
            key.sort_unstable();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    let mut vertex_map: Vec<Option<usize>> = vec![None; mesh.num_vertices()];
    let mut vertices = Vec::new();
    let mut parent_vertex = Vec::new();
    let mut triangles = Vec::new();
    let mut parent_cell = Vec::new();
    let mut parent_facet = Vec::new();
    for (ci, cell) in mesh.cells.iter().enumerate() {
        for (fi, fv) in FACET_VERTICES.iter().enumerate() {
            let tri = [cell[fv[0]], cell[fv[1]], cell[fv[2]]];
            let mut key = tri;
            key.sort_unstable();
            if counts[&key] != 1 {
                continue;
            }
            let mut mapped = [0usize; 3];
            for (slot, &v) in mapped.iter_mut().zip(tri.iter()) {
                *slot = *vertex_map[v].get_or_insert_with(|| {
                    vertices.push(mesh.vertices[v]);
                    parent_vertex.push(v);
                    vertices.len() - 1
                });
            }
            triangles.push(mapped);
            parent_cell.push(ci);
            parent_facet.push(fi as u8);
        }
    }
    SurfaceMesh {
        vertices,
        triangles,
        parent_cell,
        parent_facet,
        parent_vertex,
    }
}
