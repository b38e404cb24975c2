//! Vector P1 assembly for linear elasticity with per-subdomain materials
//! and Nitsche coupling across the overlap interface.

use nalgebra::{DMatrix, Point3, Vector3};

use super::poisson::AverageSide;
use super::{Accumulator, DofMap, NitscheSystem, P1Cell};
use crate::error::{Error, Result};
use crate::mesh::{boundary, TetMesh};
use crate::overlap::{CellClass, OverlapData};
use crate::quadrature::{map_rule_to_tet, tet_rule};

/// Isotropic material given by Young's modulus and Poisson ratio.
#[derive(Debug, Clone, Copy)]
pub struct Material {
    pub youngs: f64,
    pub poisson: f64,
}

impl Material {
    /// Lamé parameters `μ = E/(2+2ν)`, `λ = Eν/((1+ν)(1−2ν))`.
    pub fn lame(&self) -> Result<(f64, f64)> {
        if self.poisson >= 0.5 {
            return Err(Error::invalid(format!(
                "Poisson ratio {} must be strictly below 0.5",
                self.poisson
            )));
        }
        let mu = self.youngs / (2.0 + 2.0 * self.poisson);
        if mu <= 0.0 {
            return Err(Error::invalid("shear modulus must be positive"));
        }
        let lambda =
            self.youngs * self.poisson / ((1.0 + self.poisson) * (1.0 - 2.0 * self.poisson));
        Ok((mu, lambda))
    }
}

/// Material assignment per subdomain.
#[derive(Debug, Clone, Copy)]
pub struct MaterialParams {
    /// Material of the visible background subdomain.
    pub background: Material,
    /// Material of the overlapping subdomain.
    pub overlapping: Material,
}

/// Boundary data: a Dirichlet predicate over boundary vertices and a
/// traction predicate over boundary facet centroids (both on the outer
/// boundary of the background domain).
pub struct ElasticityBcs<'a> {
    pub dirichlet: &'a dyn Fn(&Point3<f64>) -> Option<Vector3<f64>>,
    pub traction: &'a dyn Fn(&Point3<f64>) -> Option<Vector3<f64>>,
}

/// 12×12 elastic cell stiffness for constant-gradient P1, scaled by the
/// integration volume: `∫ σ(φ_b e_d) : ε(φ_a e_c)`.
fn cell_stiffness(cell: &P1Cell, mu: f64, lambda: f64, volume: f64) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(12, 12);
    for a in 0..4 {
        for b in 0..4 {
            let gab = cell.grads[a].dot(&cell.grads[b]);
            for c in 0..3 {
                for d in 0..3 {
                    let mut v = mu * cell.grads[a][d] * cell.grads[b][c];
                    if c == d {
                        v += mu * gab;
                    }
                    v += lambda * cell.grads[a][c] * cell.grads[b][d];
                    k[(3 * a + c, 3 * b + d)] = volume * v;
                }
            }
        }
    }
    k
}

/// 24×24 Nitsche interface block (12 background dofs, then 12 overlapping
/// dofs) with the one-sided traction `σ(v)·n` taken from `avg_side`.
fn interface_block(
    part_area: f64,
    centroid: &Point3<f64>,
    normal: &Vector3<f64>,
    bg: &P1Cell,
    ov: &P1Cell,
    avg_material: (f64, f64),
    gamma: f64,
    h_part: f64,
    avg_side: AverageSide,
) -> DMatrix<f64> {
    let (mu, lambda) = avg_material;
    let lambda_bg = bg.barycentric(centroid);
    let lambda_ov = ov.barycentric(centroid);
    // Jump matrix: columns are the vector value of [φ] at the centroid.
    let mut jump = DMatrix::zeros(3, 24);
    for a in 0..4 {
        for c in 0..3 {
            jump[(c, 3 * a + c)] = -lambda_bg[a];
            jump[(c, 12 + 3 * a + c)] = lambda_ov[a];
        }
    }
    // Traction matrix: σ(φ_a e_c)·n = μ(e_c (g_a·n) + n_c g_a) + λ g_a[c] n
    // on the averaging side only.
    let mut traction = DMatrix::zeros(3, 24);
    let (cellside, offset) = match avg_side {
        AverageSide::Background => (bg, 0usize),
        AverageSide::Overlapping => (ov, 12usize),
    };
    for a in 0..4 {
        let g = cellside.grads[a];
        let gn = g.dot(normal);
        for c in 0..3 {
            let mut t = mu * normal[c] * g;
            t[c] += mu * gn;
            t += lambda * g[c] * normal;
            for r in 0..3 {
                traction[(r, offset + 3 * a + c)] = t[r];
            }
        }
    }
    let consistency = jump.transpose() * &traction;
    let penalty = jump.transpose() * &jump;
    (-(&consistency) - consistency.transpose() + (gamma / h_part) * penalty) * part_area
}

fn vector_dofs_background(dofmap: &DofMap, cell: [usize; 4], out: &mut [usize]) {
    for (a, &v) in cell.iter().enumerate() {
        for c in 0..3 {
            out[3 * a + c] = dofmap.background_dof(v, c);
        }
    }
}

fn vector_dofs_overlapping(dofmap: &DofMap, cell: [usize; 4], out: &mut [usize]) {
    for (a, &v) in cell.iter().enumerate() {
        for c in 0..3 {
            out[3 * a + c] = dofmap.overlapping_dof(v, c);
        }
    }
}

/// Volume and interface terms of the coupled elasticity form, plus the body
/// force; no boundary-condition stages.
pub fn assemble_elasticity_raw(
    background: &TetMesh,
    overlapping: &TetMesh,
    overlap: &OverlapData,
    materials: &MaterialParams,
    f: &dyn Fn(&Point3<f64>) -> Vector3<f64>,
    gamma: f64,
    avg_side: AverageSide,
) -> Result<NitscheSystem> {
    let (mu_bg, lambda_bg) = materials.background.lame()?;
    let (mu_ov, lambda_ov) = materials.overlapping.lame()?;
    let dofmap = DofMap::new(background, Some(overlapping), 3, Some(overlap));
    let mut acc = Accumulator::new(dofmap.total_dofs());
    let load_rule = tet_rule(2)?;
    let mut dofs12 = [0usize; 12];

    for ci in 0..background.num_cells() {
        let class = overlap.class(ci);
        if class == CellClass::CompletelyOverlapped {
            continue;
        }
        let cell = P1Cell::new(background.cell_points(ci))?;
        vector_dofs_background(&dofmap, background.cell(ci), &mut dofs12);
        match class {
            CellClass::NotOverlapped => {
                let k = cell_stiffness(&cell, mu_bg, lambda_bg, cell.volume);
                acc.add_block(&dofs12, &k);
                // Body force with the mapped degree-2 rule.
                let mapped = map_rule_to_tet(&load_rule, &cell.points);
                let mut b = [0.0; 12];
                for (p, w) in mapped.points.iter().zip(&mapped.weights) {
                    let lambda = cell.barycentric(p);
                    let fv = f(p);
                    for a in 0..4 {
                        for c in 0..3 {
                            b[3 * a + c] += w * fv[c] * lambda[a];
                        }
                    }
                }
                acc.add_rhs(&dofs12, &b);
            }
            CellClass::PartiallyOverlapped => {
                let cut = overlap
                    .cut_cell(ci)
                    .expect("partially overlapped cell without cut geometry");
                if cut.small || cut.visible_volume == 0.0 {
                    continue;
                }
                let k = cell_stiffness(&cell, mu_bg, lambda_bg, cut.visible_volume);
                acc.add_block(&dofs12, &k);
                let lambda = cell.barycentric(&cut.visible_centroid);
                let fv = f(&cut.visible_centroid);
                let mut b = [0.0; 12];
                for a in 0..4 {
                    for c in 0..3 {
                        b[3 * a + c] = cut.visible_volume * fv[c] * lambda[a];
                    }
                }
                acc.add_rhs(&dofs12, &b);
            }
            CellClass::CompletelyOverlapped => unreachable!(),
        }
    }

    for ci in 0..overlapping.num_cells() {
        let cell = P1Cell::new(overlapping.cell_points(ci))?;
        vector_dofs_overlapping(&dofmap, overlapping.cell(ci), &mut dofs12);
        let k = cell_stiffness(&cell, mu_ov, lambda_ov, cell.volume);
        acc.add_block(&dofs12, &k);
        let mapped = map_rule_to_tet(&load_rule, &cell.points);
        let mut b = [0.0; 12];
        for (p, w) in mapped.points.iter().zip(&mapped.weights) {
            let lambda = cell.barycentric(p);
            let fv = f(p);
            for a in 0..4 {
                for c in 0..3 {
                    b[3 * a + c] += w * fv[c] * lambda[a];
                }
            }
        }
        acc.add_rhs(&dofs12, &b);
    }

    let avg_material = match avg_side {
        AverageSide::Background => (mu_bg, lambda_bg),
        AverageSide::Overlapping => (mu_ov, lambda_ov),
    };
    let mut dofs24 = [0usize; 24];
    for (part, cell_ov, cell_bg) in overlap.iter_facet_parts() {
        if overlap.cut_cell(cell_bg).is_some_and(|c| c.small) {
            continue;
        }
        let bg = P1Cell::new(background.cell_points(cell_bg))?;
        let ov = P1Cell::new(overlapping.cell_points(cell_ov))?;
        let h_part = background.cell_diameter(cell_bg);
        let block = interface_block(
            part.area,
            &part.centroid,
            &part.normal,
            &bg,
            &ov,
            avg_material,
            gamma,
            h_part,
            avg_side,
        );
        vector_dofs_background(&dofmap, background.cell(cell_bg), &mut dofs12);
        dofs24[..12].copy_from_slice(&dofs12);
        vector_dofs_overlapping(&dofmap, overlapping.cell(cell_ov), &mut dofs12);
        dofs24[12..].copy_from_slice(&dofs12);
        acc.add_block(&dofs24, &block);
    }

    acc.into_system(gamma, dofmap)
}

/// Full elasticity driver, following the printed form: one-sided stress
/// from the background side, traction on the specified Neumann facets,
/// inactive-row treatment and symmetric Dirichlet elimination.
pub fn assemble_elasticity(
    background: &TetMesh,
    overlapping: &TetMesh,
    overlap: &OverlapData,
    materials: &MaterialParams,
    f: &dyn Fn(&Point3<f64>) -> Vector3<f64>,
    gamma: f64,
    bcs: &ElasticityBcs,
) -> Result<NitscheSystem> {
    let mut system = assemble_elasticity_raw(
        background,
        overlapping,
        overlap,
        materials,
        f,
        gamma,
        AverageSide::Background,
    )?;

    // Neumann traction on the outer boundary, one-point centroid rule.
    let surf = boundary(background);
    for t in 0..surf.num_triangles() {
        let centroid = surf.triangle_centroid(t);
        let Some(g) = (bcs.traction)(&centroid) else {
            continue;
        };
        let area = surf.triangle_area(t);
        for corner in surf.triangles()[t] {
            let parent = surf.parent_vertex(corner);
            for c in 0..3 {
                let dof = system.dofmap.background_dof(parent, c);
                system.rhs[dof] += area * g[c] / 3.0;
            }
        }
    }

    system.ident_zeros();

    let mut constraints = Vec::new();
    let mut collect = |mesh: &TetMesh, to_dof: &dyn Fn(usize, usize) -> usize| {
        let surf = boundary(mesh);
        let mut seen = std::collections::HashSet::new();
        for v in 0..surf.num_vertices() {
            let parent = surf.parent_vertex(v);
            if !seen.insert(parent) {
                continue;
            }
            if let Some(value) = (bcs.dirichlet)(&mesh.vertex(parent)) {
                for c in 0..3 {
                    constraints.push((to_dof(parent, c), value[c]));
                }
            }
        }
    };
    collect(background, &|v, c| system.dofmap.background_dof(v, c));
    collect(overlapping, &|v, c| system.dofmap.overlapping_dof(v, c));
    constraints.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    system.apply_dirichlet(&constraints)?;
    Ok(system)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lame_parameters() {
        let m = Material {
            youngs: 10.0,
            poisson: 0.3,
        };
        let (mu, lambda) = m.lame().unwrap();
        assert!((mu - 10.0 / 2.6).abs() < 1e-14);
        assert!((lambda - 10.0 * 0.3 / (1.3 * 0.4)).abs() < 1e-13);
        assert!(Material {
            youngs: 1.0,
            poisson: 0.5
        }
        .lame()
        .is_err());
    }

    #[test]
    fn cell_stiffness_is_symmetric_with_constant_kernel() {
        let cell = P1Cell::new([
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.1, 0.0, 0.1),
            Point3::new(0.0, 0.9, 0.0),
            Point3::new(0.1, 0.0, 1.2),
        ])
        .unwrap();
        let k = cell_stiffness(&cell, 3.2, 1.7, cell.volume);
        assert!((&k - k.transpose()).abs().max() < 1e-13);
        // Rigid translations are in the kernel.
        for c in 0..3 {
            let mut w = nalgebra::DVector::zeros(12);
            for a in 0..4 {
                w[3 * a + c] = 1.0;
            }
            assert!((&k * &w).abs().max() < 1e-12);
        }
    }
}
