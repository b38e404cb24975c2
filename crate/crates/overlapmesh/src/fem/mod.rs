//! P1 finite elements on a pair of overlapping meshes.
//!
//! The discrete space is the direct sum of the background P1 space,
//! restricted to the visible part of the background domain, and the P1
//! space on the overlapping mesh. Degrees of freedom are ordered background
//! mesh first, then overlapping mesh, so splitting a solution vector back
//! into per-mesh nodal fields is a range split.

mod elasticity;
mod error_norms;
mod poisson;

pub use elasticity::{assemble_elasticity, assemble_elasticity_raw, ElasticityBcs, Material, MaterialParams};
pub use error_norms::{compute_errors, interface_jump_norm, single_mesh_errors, ErrorNorms};
pub use poisson::{
    assemble_cut_cell, assemble_interface_part, assemble_poisson, assemble_poisson_raw,
    assemble_poisson_single, assemble_poisson_single_raw, assemble_standard_cell,
    AverageSide, PoissonAssembler,
};

use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::mesh::{boundary, TetMesh};
use crate::overlap::{CellClass, OverlapData};

/// Degree-of-freedom layout over the two meshes.
///
/// A background dof is active iff at least one incident cell contributes
/// volume terms (not overlapped, or partially overlapped and not below the
/// small-cut threshold). Overlapping-mesh dofs are always active.
#[derive(Debug, Clone)]
pub struct DofMap {
    value_dim: usize,
    n_background_vertices: usize,
    n_overlapping_vertices: usize,
    active: Vec<bool>,
}

impl DofMap {
    pub fn new(
        background: &TetMesh,
        overlapping: Option<&TetMesh>,
        value_dim: usize,
        overlap: Option<&OverlapData>,
    ) -> Self {
        assert!(value_dim == 1 || value_dim == 3);
        let n_bg = background.num_vertices();
        let n_ov = overlapping.map_or(0, |m| m.num_vertices());
        let mut vertex_active = vec![overlap.is_none(); n_bg];
        if let Some(data) = overlap {
            for (cell, class) in data.classes.iter().enumerate() {
                let contributes = match class {
                    CellClass::NotOverlapped => true,
                    CellClass::CompletelyOverlapped => false,
                    CellClass::PartiallyOverlapped => {
                        data.cut_cell(cell).is_some_and(|c| !c.small)
                    }
                };
                if contributes {
                    for v in background.cell(cell) {
                        vertex_active[v] = true;
                    }
                }
            }
        }
        let mut active = Vec::with_capacity((n_bg + n_ov) * value_dim);
        for v in 0..n_bg {
            for _ in 0..value_dim {
                active.push(vertex_active[v]);
            }
        }
        active.resize((n_bg + n_ov) * value_dim, true);
        DofMap {
            value_dim,
            n_background_vertices: n_bg,
            n_overlapping_vertices: n_ov,
            active,
        }
    }

    pub fn value_dim(&self) -> usize {
        self.value_dim
    }

    pub fn total_dofs(&self) -> usize {
        (self.n_background_vertices + self.n_overlapping_vertices) * self.value_dim
    }

    pub fn num_background_dofs(&self) -> usize {
        self.n_background_vertices * self.value_dim
    }

    pub fn background_dof(&self, vertex: usize, comp: usize) -> usize {
        debug_assert!(vertex < self.n_background_vertices && comp < self.value_dim);
        vertex * self.value_dim + comp
    }

    pub fn overlapping_dof(&self, vertex: usize, comp: usize) -> usize {
        debug_assert!(vertex < self.n_overlapping_vertices && comp < self.value_dim);
        self.num_background_dofs() + vertex * self.value_dim + comp
    }

    pub fn is_active(&self, dof: usize) -> bool {
        self.active[dof]
    }

    pub fn inactive_dofs(&self) -> Vec<usize> {
        (0..self.total_dofs())
            .filter(|&d| !self.active[d])
            .collect()
    }

    /// Splits a solution vector into the two per-mesh nodal fields.
    pub fn split_solution<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.num_background_dofs())
    }
}

/// Assembled sparse system with its dof layout.
pub struct NitscheSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub gamma: f64,
    pub dofmap: DofMap,
}

impl NitscheSystem {
    /// Unit-diagonal treatment of all-zero rows (inactive dofs). Returns
    /// the modified row indices.
    pub fn ident_zeros(&mut self) -> Vec<usize> {
        self.matrix.ident_zeros(&mut self.rhs)
    }

    pub fn apply_dirichlet(&mut self, constraints: &[(usize, f64)]) -> Result<()> {
        self.matrix.apply_dirichlet(&mut self.rhs, constraints)
    }

    /// Relative symmetry defect `max|A - Aᵀ| / max|A|`.
    pub fn symmetry_defect(&self) -> f64 {
        self.matrix.asymmetry() / self.matrix.max_abs().max(1e-300)
    }
}

/// Constant-gradient data of a P1 tetrahedron.
pub(crate) struct P1Cell {
    pub points: [Point3<f64>; 4],
    pub grads: [Vector3<f64>; 4],
    pub volume: f64,
    inv_jac: Matrix3<f64>,
}

impl P1Cell {
    pub fn new(points: [Point3<f64>; 4]) -> Result<Self> {
        let jac = Matrix3::from_columns(&[
            points[1] - points[0],
            points[2] - points[0],
            points[3] - points[0],
        ]);
        let det = jac.determinant();
        if det <= 0.0 {
            return Err(Error::degenerate(
                "cell with non-positive volume in assembly",
            ));
        }
        let inv_jac = jac.try_inverse().ok_or_else(|| {
            Error::degenerate("singular cell jacobian")
        })?;
        // Row j of the inverse jacobian is the gradient of barycentric
        // coordinate j+1; the zeroth gradient closes the partition of unity.
        let g1 = inv_jac.row(0).transpose();
        let g2 = inv_jac.row(1).transpose();
        let g3 = inv_jac.row(2).transpose();
        Ok(P1Cell {
            points,
            grads: [-(g1 + g2 + g3), g1, g2, g3],
            volume: det / 6.0,
            inv_jac,
        })
    }

    /// Barycentric coordinates of a point (no containment check).
    pub fn barycentric(&self, x: &Point3<f64>) -> [f64; 4] {
        let xi = self.inv_jac * (x - self.points[0]);
        [1.0 - xi.x - xi.y - xi.z, xi.x, xi.y, xi.z]
    }

    /// P1 interpolant of nodal values at a point.
    pub fn eval(&self, nodal: &[f64; 4], x: &Point3<f64>) -> f64 {
        let lambda = self.barycentric(x);
        (0..4).map(|i| lambda[i] * nodal[i]).sum()
    }

    /// Gradient of the P1 interpolant (constant over the cell).
    pub fn eval_grad(&self, nodal: &[f64; 4]) -> Vector3<f64> {
        (0..4).map(|i| nodal[i] * self.grads[i]).sum()
    }
}

/// Triplet and right-hand side accumulator for global assembly.
pub(crate) struct Accumulator {
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
}

impl Accumulator {
    pub fn new(dim: usize) -> Self {
        Accumulator {
            triplets: Vec::new(),
            rhs: vec![0.0; dim],
        }
    }

    pub fn add_block(&mut self, dofs: &[usize], local: &nalgebra::DMatrix<f64>) {
        debug_assert_eq!(local.nrows(), dofs.len());
        debug_assert_eq!(local.ncols(), dofs.len());
        for (i, &gi) in dofs.iter().enumerate() {
            for (j, &gj) in dofs.iter().enumerate() {
                let v = local[(i, j)];
                if v != 0.0 {
                    self.triplets.push((gi, gj, v));
                }
            }
        }
    }

    pub fn add_rhs(&mut self, dofs: &[usize], local: &[f64]) {
        for (i, &gi) in dofs.iter().enumerate() {
            self.rhs[gi] += local[i];
        }
    }

    pub fn into_system(self, gamma: f64, dofmap: DofMap) -> Result<NitscheSystem> {
        let matrix = SparseMatrix::from_triplets(dofmap.total_dofs(), &self.triplets)?;
        Ok(NitscheSystem {
            matrix,
            rhs: self.rhs,
            gamma,
            dofmap,
        })
    }
}

/// Evaluates a Dirichlet predicate at every boundary vertex of a mesh and
/// returns `(global dof, value)` constraints using `to_dof` to map
/// `(parent vertex, component)` to global indices.
pub(crate) fn collect_dirichlet_scalar(
    mesh: &TetMesh,
    spec: &dyn Fn(&Point3<f64>) -> Option<f64>,
    to_dof: &dyn Fn(usize) -> usize,
) -> Vec<(usize, f64)> {
    let surf = boundary(mesh);
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for v in 0..surf.num_vertices() {
        let parent = surf.parent_vertex(v);
        if !seen.insert(parent) {
            continue;
        }
        if let Some(value) = spec(&mesh.vertex(parent)) {
            out.push((to_dof(parent), value));
        }
    }
    out.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Nodal interpolation of a scalar field on the direct-sum space.
pub fn interpolate_scalar(
    background: &TetMesh,
    overlapping: Option<&TetMesh>,
    dofmap: &DofMap,
    f: impl Fn(&Point3<f64>) -> f64,
) -> Vec<f64> {
    assert_eq!(dofmap.value_dim(), 1);
    let mut x = vec![0.0; dofmap.total_dofs()];
    for v in 0..background.num_vertices() {
        x[dofmap.background_dof(v, 0)] = f(&background.vertex(v));
    }
    if let Some(mesh) = overlapping {
        for v in 0..mesh.num_vertices() {
            x[dofmap.overlapping_dof(v, 0)] = f(&mesh.vertex(v));
        }
    }
    x
}

/// Nodal interpolation of a vector field on the direct-sum space.
pub fn interpolate_vector(
    background: &TetMesh,
    overlapping: Option<&TetMesh>,
    dofmap: &DofMap,
    f: impl Fn(&Point3<f64>) -> Vector3<f64>,
) -> Vec<f64> {
    assert_eq!(dofmap.value_dim(), 3);
    let mut x = vec![0.0; dofmap.total_dofs()];
    for v in 0..background.num_vertices() {
        let val = f(&background.vertex(v));
        for c in 0..3 {
            x[dofmap.background_dof(v, c)] = val[c];
        }
    }
    if let Some(mesh) = overlapping {
        for v in 0..mesh.num_vertices() {
            let val = f(&mesh.vertex(v));
            for c in 0..3 {
                x[dofmap.overlapping_dof(v, c)] = val[c];
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_cube_mesh;

    #[test]
    fn p1_cell_gradients_sum_to_zero() {
        let cell = P1Cell::new([
            Point3::new(0.1, 0.0, 0.0),
            Point3::new(1.2, 0.1, 0.0),
            Point3::new(0.0, 0.9, 0.3),
            Point3::new(0.2, 0.1, 1.4),
        ])
        .unwrap();
        let sum: Vector3<f64> = cell.grads.iter().sum();
        assert!(sum.norm() < 1e-13);
        // Nodal basis property through barycentric evaluation.
        for (i, p) in cell.points.iter().enumerate() {
            let lambda = cell.barycentric(p);
            for (j, l) in lambda.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((l - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dofmap_layout_and_split() {
        let t0 = unit_cube_mesh(1).unwrap();
        let t2 = unit_cube_mesh(1).unwrap();
        let dm = DofMap::new(&t0, Some(&t2), 1, None);
        assert_eq!(dm.total_dofs(), 16);
        assert_eq!(dm.background_dof(3, 0), 3);
        assert_eq!(dm.overlapping_dof(0, 0), 8);
        let x: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let (a, b) = dm.split_solution(&x);
        assert_eq!(a.len(), 8);
        assert_eq!(b[0], 8.0);
        // Vector layout interleaves components per vertex.
        let dm3 = DofMap::new(&t0, Some(&t2), 3, None);
        assert_eq!(dm3.total_dofs(), 48);
        assert_eq!(dm3.background_dof(1, 2), 5);
        assert_eq!(dm3.overlapping_dof(0, 1), 25);
    }
}
