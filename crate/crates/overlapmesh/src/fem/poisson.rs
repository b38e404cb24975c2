//! Scalar P1 assembly: standard cells, cut cells, Nitsche interface
//! coupling, and the Poisson system drivers.

use nalgebra::{DMatrix, DVector, Point3};

use super::{collect_dirichlet_scalar, Accumulator, DofMap, NitscheSystem, P1Cell};
use crate::error::Result;
use crate::mesh::TetMesh;
use crate::overlap::{CellClass, CutCellGeometry, InterfaceFacetPart, OverlapData};
use crate::quadrature::{map_rule_to_tet, tet_rule, QuadratureRule};

/// Which side supplies the one-sided average `⟨∇v·n⟩` in the interface
/// terms. Any convex combination is consistent; the two problem drivers
/// follow their respective printed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AverageSide {
    /// Gradient taken from the background (visible-domain) side.
    Background,
    /// Gradient taken from the overlapping-mesh side.
    Overlapping,
}

/// Local stiffness and load of an uncut P1 cell: the stiffness is exact
/// (constant gradients times volume), the load uses the supplied reference
/// rule mapped to the cell.
pub fn assemble_standard_cell(
    points: &[Point3<f64>; 4],
    f: &dyn Fn(&Point3<f64>) -> f64,
    load_rule: &QuadratureRule,
) -> Result<(DMatrix<f64>, [f64; 4])> {
    let cell = P1Cell::new(*points)?;
    let mut stiffness = DMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            stiffness[(i, j)] = cell.grads[i].dot(&cell.grads[j]) * cell.volume;
        }
    }
    let mapped = map_rule_to_tet(load_rule, points);
    let mut load = [0.0; 4];
    for (p, w) in mapped.points.iter().zip(&mapped.weights) {
        let lambda = cell.barycentric(p);
        let fv = f(p);
        for i in 0..4 {
            load[i] += w * fv * lambda[i];
        }
    }
    Ok((stiffness, load))
}

/// Local tensors of a partially overlapped cell: stiffness is the full-cell
/// stiffness scaled to the visible volume (exact for P1), the load is the
/// one-point barycenter rule on the visible part. Cells below the small-cut
/// threshold contribute nothing.
pub fn assemble_cut_cell(
    points: &[Point3<f64>; 4],
    cut: &CutCellGeometry,
    f: &dyn Fn(&Point3<f64>) -> f64,
) -> Result<(DMatrix<f64>, [f64; 4])> {
    if cut.small || cut.visible_volume == 0.0 {
        return Ok((DMatrix::zeros(4, 4), [0.0; 4]));
    }
    let cell = P1Cell::new(*points)?;
    let mut stiffness = DMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            stiffness[(i, j)] = cell.grads[i].dot(&cell.grads[j]) * cut.visible_volume;
        }
    }
    let lambda = cell.barycentric(&cut.visible_centroid);
    let fv = f(&cut.visible_centroid);
    let mut load = [0.0; 4];
    for i in 0..4 {
        load[i] = cut.visible_volume * fv * lambda[i];
    }
    Ok((stiffness, load))
}

/// Local 8×8 interface block of one facet part, evaluated with the part's
/// one-point centroid rule.
///
/// Dof order: the four background-cell dofs first, then the four
/// overlapping-cell dofs. With jump `[v] = v_ov - v_bg` and one-sided
/// average `⟨∇v·n⟩` from `avg_side`, the block accumulates
/// `-⟨∇u·n⟩[v] - ⟨∇v·n⟩[u] + (γ/h)[u][v]` times the part area.
pub fn assemble_interface_part(
    part: &InterfaceFacetPart,
    background_points: &[Point3<f64>; 4],
    overlapping_points: &[Point3<f64>; 4],
    gamma: f64,
    h_part: f64,
    avg_side: AverageSide,
) -> Result<DMatrix<f64>> {
    let bg = P1Cell::new(*background_points)?;
    let ov = P1Cell::new(*overlapping_points)?;
    let c = part.centroid;
    let n = part.normal;

    let lambda_bg = bg.barycentric(&c);
    let lambda_ov = ov.barycentric(&c);
    let mut jump = DVector::zeros(8);
    for i in 0..4 {
        jump[i] = -lambda_bg[i];
        jump[4 + i] = lambda_ov[i];
    }
    let mut avg = DVector::zeros(8);
    match avg_side {
        AverageSide::Background => {
            for i in 0..4 {
                avg[i] = bg.grads[i].dot(&n);
            }
        }
        AverageSide::Overlapping => {
            for i in 0..4 {
                avg[4 + i] = ov.grads[i].dot(&n);
            }
        }
    }
    let consistency = &jump * avg.transpose();
    let penalty = &jump * jump.transpose();
    let block = (-(&consistency) - consistency.transpose() + (gamma / h_part) * penalty)
        * part.area;
    Ok(block)
}

fn background_dofs(dofmap: &DofMap, cell: [usize; 4]) -> [usize; 4] {
    [
        dofmap.background_dof(cell[0], 0),
        dofmap.background_dof(cell[1], 0),
        dofmap.background_dof(cell[2], 0),
        dofmap.background_dof(cell[3], 0),
    ]
}

fn overlapping_dofs(dofmap: &DofMap, cell: [usize; 4]) -> [usize; 4] {
    [
        dofmap.overlapping_dof(cell[0], 0),
        dofmap.overlapping_dof(cell[1], 0),
        dofmap.overlapping_dof(cell[2], 0),
        dofmap.overlapping_dof(cell[3], 0),
    ]
}

/// Incremental Poisson assembly over an overlap, split into the volume and
/// interface phases so drivers can time them independently.
pub struct PoissonAssembler<'a> {
    background: &'a TetMesh,
    overlapping: &'a TetMesh,
    overlap: &'a OverlapData,
    f: &'a dyn Fn(&Point3<f64>) -> f64,
    gamma: f64,
    dofmap: DofMap,
    acc: Accumulator,
}

impl<'a> PoissonAssembler<'a> {
    pub fn new(
        background: &'a TetMesh,
        overlapping: &'a TetMesh,
        overlap: &'a OverlapData,
        f: &'a dyn Fn(&Point3<f64>) -> f64,
        gamma: f64,
    ) -> Self {
        let dofmap = DofMap::new(background, Some(overlapping), 1, Some(overlap));
        let acc = Accumulator::new(dofmap.total_dofs());
        PoissonAssembler {
            background,
            overlapping,
            overlap,
            f,
            gamma,
            dofmap,
            acc,
        }
    }

    /// Standard cells of both meshes plus the cut-cell volume terms.
    pub fn volume_terms(&mut self) -> Result<()> {
        let load_rule = tet_rule(2)?;
        for cell in 0..self.background.num_cells() {
            let points = self.background.cell_points(cell);
            let dofs = background_dofs(&self.dofmap, self.background.cell(cell));
            match self.overlap.class(cell) {
                CellClass::NotOverlapped => {
                    let (k, b) = assemble_standard_cell(&points, self.f, &load_rule)?;
                    self.acc.add_block(&dofs, &k);
                    self.acc.add_rhs(&dofs, &b);
                }
                CellClass::PartiallyOverlapped => {
                    let cut = self
                        .overlap
                        .cut_cell(cell)
                        .expect("partially overlapped cell without cut geometry");
                    let (k, b) = assemble_cut_cell(&points, cut, self.f)?;
                    self.acc.add_block(&dofs, &k);
                    self.acc.add_rhs(&dofs, &b);
                }
                CellClass::CompletelyOverlapped => {}
            }
        }
        for cell in 0..self.overlapping.num_cells() {
            let points = self.overlapping.cell_points(cell);
            let dofs = overlapping_dofs(&self.dofmap, self.overlapping.cell(cell));
            let (k, b) = assemble_standard_cell(&points, self.f, &load_rule)?;
            self.acc.add_block(&dofs, &k);
            self.acc.add_rhs(&dofs, &b);
        }
        Ok(())
    }

    /// Nitsche coupling blocks over all facet parts of non-small cut cells.
    pub fn interface_terms(&mut self) -> Result<()> {
        for (part, cell_ov, cell_bg) in self.overlap.iter_facet_parts() {
            if self.overlap.cut_cell(cell_bg).is_some_and(|c| c.small) {
                continue;
            }
            let h_part = self.background.cell_diameter(cell_bg);
            let block = assemble_interface_part(
                part,
                &self.background.cell_points(cell_bg),
                &self.overlapping.cell_points(cell_ov),
                self.gamma,
                h_part,
                AverageSide::Overlapping,
            )?;
            let bg_dofs = background_dofs(&self.dofmap, self.background.cell(cell_bg));
            let ov_dofs = overlapping_dofs(&self.dofmap, self.overlapping.cell(cell_ov));
            let mut dofs = [0usize; 8];
            dofs[..4].copy_from_slice(&bg_dofs);
            dofs[4..].copy_from_slice(&ov_dofs);
            self.acc.add_block(&dofs, &block);
        }
        Ok(())
    }

    pub fn finish(self) -> Result<NitscheSystem> {
        self.acc.into_system(self.gamma, self.dofmap)
    }
}

/// Assembles the coupled Poisson form without the boundary-condition
/// stages: volume terms over visible background cells and all overlapping
/// cells, interface terms over all facet parts of non-small cut cells.
pub fn assemble_poisson_raw(
    background: &TetMesh,
    overlapping: &TetMesh,
    overlap: &OverlapData,
    f: &dyn Fn(&Point3<f64>) -> f64,
    gamma: f64,
) -> Result<NitscheSystem> {
    let mut assembler = PoissonAssembler::new(background, overlapping, overlap, f, gamma);
    assembler.volume_terms()?;
    assembler.interface_terms()?;
    assembler.finish()
}

/// Full Poisson driver: raw assembly, then unit rows for inactive dofs,
/// then symmetric Dirichlet elimination. The Dirichlet predicate is
/// evaluated at the boundary vertices of both meshes.
pub fn assemble_poisson(
    background: &TetMesh,
    overlapping: &TetMesh,
    overlap: &OverlapData,
    f: &dyn Fn(&Point3<f64>) -> f64,
    gamma: f64,
    dirichlet: &dyn Fn(&Point3<f64>) -> Option<f64>,
) -> Result<NitscheSystem> {
    let mut system = assemble_poisson_raw(background, overlapping, overlap, f, gamma)?;
    system.ident_zeros();
    let mut constraints =
        collect_dirichlet_scalar(background, dirichlet, &|v| system.dofmap.background_dof(v, 0));
    constraints.extend(collect_dirichlet_scalar(overlapping, dirichlet, &|v| {
        system.dofmap.overlapping_dof(v, 0)
    }));
    system.apply_dirichlet(&constraints)?;
    Ok(system)
}

/// Plain single-mesh P1 Poisson assembly (no overlap machinery), used for
/// patch tests and as the standard-assembly baseline in benchmarks.
pub fn assemble_poisson_single(
    mesh: &TetMesh,
    f: &dyn Fn(&Point3<f64>) -> f64,
    dirichlet: &dyn Fn(&Point3<f64>) -> Option<f64>,
) -> Result<NitscheSystem> {
    let mut system = assemble_poisson_single_raw(mesh, f)?;
    let constraints =
        collect_dirichlet_scalar(mesh, dirichlet, &|v| system.dofmap.background_dof(v, 0));
    system.apply_dirichlet(&constraints)?;
    Ok(system)
}

/// Volume terms of the single-mesh Poisson form, no boundary conditions.
pub fn assemble_poisson_single_raw(
    mesh: &TetMesh,
    f: &dyn Fn(&Point3<f64>) -> f64,
) -> Result<NitscheSystem> {
    let dofmap = DofMap::new(mesh, None, 1, None);
    let mut acc = Accumulator::new(dofmap.total_dofs());
    let load_rule = tet_rule(2)?;
    for cell in 0..mesh.num_cells() {
        let points = mesh.cell_points(cell);
        let dofs = background_dofs(&dofmap, mesh.cell(cell));
        let (k, b) = assemble_standard_cell(&points, f, &load_rule)?;
        acc.add_block(&dofs, &k);
        acc.add_rhs(&dofs, &b);
    }
    acc.into_system(0.0, dofmap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{clip_polyhedron_halfspace, ConvexPolyhedron, Plane};
    use crate::quadrature::polyhedron_moments;
    use nalgebra::Vector3;

    fn reference_tet() -> [Point3<f64>; 4] {
        [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ]
    }

    #[test]
    fn standard_cell_examples() {
        let rule = tet_rule(2).unwrap();
        let (k, b) = assemble_standard_cell(&reference_tet(), &|_| 1.0, &rule).unwrap();
        // Constants are in the stiffness kernel.
        for i in 0..4 {
            let row_sum: f64 = (0..4).map(|j| k[(i, j)]).sum();
            assert!(row_sum.abs() < 1e-14);
        }
        // Vertex 0 has gradient (-1,-1,-1), |T| = 1/6, so K_00 = 3/6 = 1/2.
        assert!((k[(0, 0)] - 0.5).abs() < 1e-14);
        // Unit load integrates the hat functions: sums to |T|.
        let total: f64 = b.iter().sum();
        assert!((total - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn cut_cell_limits() {
        let points = reference_tet();
        let volume = 1.0 / 6.0;
        let centroid = Point3::new(0.25, 0.25, 0.25);
        let full = CutCellGeometry {
            cell: 0,
            visible_volume: volume,
            visible_centroid: centroid,
            covered_volume: 0.0,
            small: false,
        };
        let rule = tet_rule(2).unwrap();
        let (k_std, _) = assemble_standard_cell(&points, &|_| 0.0, &rule).unwrap();
        let (k_cut, _) = assemble_cut_cell(&points, &full, &|_| 0.0).unwrap();
        assert!((&k_std - &k_cut).abs().max() < 1e-14);

        let empty = CutCellGeometry {
            cell: 0,
            visible_volume: 0.0,
            visible_centroid: centroid,
            covered_volume: volume,
            small: true,
        };
        let (k_zero, b_zero) = assemble_cut_cell(&points, &empty, &|_| 1.0).unwrap();
        assert_eq!(k_zero.abs().max(), 0.0);
        assert_eq!(b_zero, [0.0; 4]);
    }

    #[test]
    fn half_cut_cell_matches_clipped_moments() {
        // Synthetic cut geometry from clipping the tet by a plane through
        // its "centroid plane" x = 0.25 keeps a computable visible part.
        let points = reference_tet();
        let poly = ConvexPolyhedron::from_tet(&points).unwrap();
        let plane = Plane::new(Vector3::x(), 0.25).unwrap();
        // Visible part: x >= 0.25 side, i.e. clip by the flipped half-space.
        let visible = clip_polyhedron_halfspace(&poly, &plane.flipped());
        let m = polyhedron_moments(&visible, 1).unwrap();
        let cut = CutCellGeometry {
            cell: 0,
            visible_volume: m.volume(),
            visible_centroid: m.centroid().unwrap(),
            covered_volume: 1.0 / 6.0 - m.volume(),
            small: false,
        };
        let (k_cut, _) = assemble_cut_cell(&points, &cut, &|_| 0.0).unwrap();
        let rule = tet_rule(2).unwrap();
        let (k_std, _) = assemble_standard_cell(&points, &|_| 0.0, &rule).unwrap();
        let ratio = m.volume() / (1.0 / 6.0);
        assert!((&k_std * ratio - &k_cut).abs().max() < 1e-10);
    }

    #[test]
    fn interface_block_is_symmetric_and_kills_continuous_linears() {
        use crate::overlap::InterfaceFacetPart;
        // A triangular part between two tets sharing the plane z = 0.
        let bg = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 0.0, -1.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let ov = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        // Wound clockwise from +z so the loop is counterclockwise when
        // viewed from the -z normal side.
        let polygon = crate::geometry::PlanarPolygon::new(
            vec![
                Point3::new(0.1, 0.1, 0.0),
                Point3::new(0.1, 0.4, 0.0),
                Point3::new(0.4, 0.1, 0.0),
            ],
            -Vector3::z(),
        )
        .unwrap();
        let (area, centroid, _) = crate::quadrature::polygon_area_centroid(&polygon).unwrap();
        let part = InterfaceFacetPart {
            facet: 0,
            cell_overlapping: 0,
            cell_background: 0,
            polygon,
            area,
            centroid,
            normal: -Vector3::z(),
        };
        let gamma = 17.0;
        let h = 1.0;
        let block =
            assemble_interface_part(&part, &bg, &ov, gamma, h, AverageSide::Overlapping).unwrap();
        assert!((&block - block.transpose()).abs().max() < 1e-13);

        // A globally linear field has zero jump, so the quadratic form and
        // the penalty/symmetrization action vanish.
        let linear = |p: &Point3<f64>| 0.3 + 1.7 * p.x - 0.9 * p.y + 0.5 * p.z;
        let mut w = DVector::zeros(8);
        for i in 0..4 {
            w[i] = linear(&bg[i]);
            w[4 + i] = linear(&ov[i]);
        }
        let energy = (w.transpose() * &block * &w)[(0, 0)];
        assert!(energy.abs() < 1e-12);
        let block0 =
            assemble_interface_part(&part, &bg, &ov, 0.0, h, AverageSide::Overlapping).unwrap();
        let penalty_action = (&block - &block0) * &w;
        assert!(penalty_action.abs().max() < 1e-12);
        // γ = 0 keeps symmetry.
        assert!((&block0 - block0.transpose()).abs().max() < 1e-13);
    }

    #[test]
    fn interface_block_matches_dense_pointwise_oracle() {
        use crate::overlap::InterfaceFacetPart;
        // Independent evaluation of the integrand at the centroid.
        let bg = [
            Point3::new(-0.2, 0.0, -0.1),
            Point3::new(1.1, 0.1, -0.2),
            Point3::new(0.1, 0.2, -1.4),
            Point3::new(0.0, 1.2, -0.3),
        ];
        let ov = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.1),
            Point3::new(0.0, 1.0, 0.1),
            Point3::new(0.1, 0.1, 1.0),
        ];
        let tri = [
            Point3::new(0.2, 0.2, 0.0),
            Point3::new(0.5, 0.2, 0.03),
            Point3::new(0.2, 0.5, 0.03),
        ];
        let normal = (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).normalize();
        let polygon =
            crate::geometry::PlanarPolygon::new(tri.to_vec(), normal).unwrap();
        let (area, centroid, _) = crate::quadrature::polygon_area_centroid(&polygon).unwrap();
        let part = InterfaceFacetPart {
            facet: 3,
            cell_overlapping: 0,
            cell_background: 0,
            polygon,
            area,
            centroid,
            normal,
        };
        let gamma = 50.0;
        let h = 0.37;
        let block =
            assemble_interface_part(&part, &bg, &ov, gamma, h, AverageSide::Overlapping).unwrap();

        // Scalar oracle: basis values and gradients computed from scratch.
        let bg_cell = P1Cell::new(bg).unwrap();
        let ov_cell = P1Cell::new(ov).unwrap();
        let phi = |side: usize, i: usize, p: &Point3<f64>| -> f64 {
            if side == 0 {
                bg_cell.barycentric(p)[i]
            } else {
                ov_cell.barycentric(p)[i]
            }
        };
        let dn = |side: usize, i: usize| -> f64 {
            if side == 0 {
                0.0 // average taken on the overlapping side
            } else {
                ov_cell.grads[i].dot(&normal)
            }
        };
        for row in 0..8 {
            for col in 0..8 {
                let (si, i) = (row / 4, row % 4);
                let (sj, j) = (col / 4, col % 4);
                let sign = |s: usize| if s == 0 { -1.0 } else { 1.0 };
                let jump_i = sign(si) * phi(si, i, &centroid);
                let jump_j = sign(sj) * phi(sj, j, &centroid);
                let avg_i = dn(si, i);
                let avg_j = dn(sj, j);
                let expect =
                    area * (-avg_j * jump_i - avg_i * jump_j + gamma / h * jump_i * jump_j);
                assert!(
                    (block[(row, col)] - expect).abs() < 1e-12,
                    "entry ({row},{col})"
                );
            }
        }
    }
}
