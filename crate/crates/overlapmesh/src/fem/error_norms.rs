//! Discretization error norms against a manufactured solution.
//!
//! Volume errors use degree-4 rules on uncut cells of both meshes and the
//! one-point barycenter rule on the visible part of cut cells (matching the
//! assembly's cut-cell quadrature). The interface jump norm is the
//! `h⁻¹`-weighted L2 norm of the solution jump over the facet parts, with
//! the same per-part `h` as the penalty term.

use nalgebra::{Point3, Vector3};

use super::{DofMap, P1Cell};
use crate::error::Result;
use crate::mesh::TetMesh;
use crate::overlap::{CellClass, OverlapData};
use crate::quadrature::{map_rule_to_tet, tet_rule, CacheKey};

#[derive(Debug, Clone, Copy)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1_semi: f64,
    pub interface_jump: f64,
}

fn nodal_on_cell(solution: &[f64], dofs: [usize; 4]) -> [f64; 4] {
    [
        solution[dofs[0]],
        solution[dofs[1]],
        solution[dofs[2]],
        solution[dofs[3]],
    ]
}

/// L2 and H1-seminorm error accumulation over one cell with a mapped rule.
fn cell_errors(
    cell: &P1Cell,
    nodal: &[f64; 4],
    rule: &crate::quadrature::QuadratureRule,
    exact: &dyn Fn(&Point3<f64>) -> f64,
    exact_grad: &dyn Fn(&Point3<f64>) -> Vector3<f64>,
) -> (f64, f64) {
    let grad_h = cell.eval_grad(nodal);
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let du = exact(p) - cell.eval(nodal, p);
        l2 += w * du * du;
        let dg = exact_grad(p) - grad_h;
        h1 += w * dg.norm_squared();
    }
    (l2, h1)
}

/// Errors of a scalar coupled solution against a manufactured field.
pub fn compute_errors(
    background: &TetMesh,
    overlapping: &TetMesh,
    overlap: &OverlapData,
    dofmap: &DofMap,
    solution: &[f64],
    exact: &dyn Fn(&Point3<f64>) -> f64,
    exact_grad: &dyn Fn(&Point3<f64>) -> Vector3<f64>,
) -> Result<ErrorNorms> {
    assert_eq!(dofmap.value_dim(), 1);
    let volume_rule = tet_rule(4)?;
    let cache = overlap.quadrature_cache();
    let mut l2 = 0.0;
    let mut h1 = 0.0;

    for ci in 0..background.num_cells() {
        let dofs = background.cell(ci).map(|v| dofmap.background_dof(v, 0));
        let nodal = nodal_on_cell(solution, dofs);
        let cell = P1Cell::new(background.cell_points(ci))?;
        match overlap.class(ci) {
            CellClass::NotOverlapped => {
                let rule = map_rule_to_tet(&volume_rule, &cell.points);
                let (dl2, dh1) = cell_errors(&cell, &nodal, &rule, exact, exact_grad);
                l2 += dl2;
                h1 += dh1;
            }
            CellClass::PartiallyOverlapped => {
                if let Some(rule) = cache.get(CacheKey::CutCell(ci)) {
                    let (dl2, dh1) = cell_errors(&cell, &nodal, rule, exact, exact_grad);
                    l2 += dl2;
                    h1 += dh1;
                }
            }
            CellClass::CompletelyOverlapped => {}
        }
    }
    for ci in 0..overlapping.num_cells() {
        let dofs = overlapping.cell(ci).map(|v| dofmap.overlapping_dof(v, 0));
        let nodal = nodal_on_cell(solution, dofs);
        let cell = P1Cell::new(overlapping.cell_points(ci))?;
        let rule = map_rule_to_tet(&volume_rule, &cell.points);
        let (dl2, dh1) = cell_errors(&cell, &nodal, &rule, exact, exact_grad);
        l2 += dl2;
        h1 += dh1;
    }

    let jump = interface_jump_norm(background, overlapping, overlap, dofmap, solution)?;
    Ok(ErrorNorms {
        l2: l2.sqrt(),
        h1_semi: h1.sqrt(),
        interface_jump: jump,
    })
}

/// `(Σ_parts h⁻¹ ∫_part |[u_h]|² ds)^{1/2}` with centroid quadrature,
/// for scalar or vector solutions.
pub fn interface_jump_norm(
    background: &TetMesh,
    overlapping: &TetMesh,
    overlap: &OverlapData,
    dofmap: &DofMap,
    solution: &[f64],
) -> Result<f64> {
    let dim = dofmap.value_dim();
    let mut acc = 0.0;
    for (part, cell_ov, cell_bg) in overlap.iter_facet_parts() {
        if overlap.cut_cell(cell_bg).is_some_and(|c| c.small) {
            continue;
        }
        let bg = P1Cell::new(background.cell_points(cell_bg))?;
        let ov = P1Cell::new(overlapping.cell_points(cell_ov))?;
        let lb = bg.barycentric(&part.centroid);
        let lo = ov.barycentric(&part.centroid);
        let mut jump_sq = 0.0;
        for c in 0..dim {
            let mut u_bg = 0.0;
            let mut u_ov = 0.0;
            for a in 0..4 {
                u_bg += lb[a] * solution[dofmap.background_dof(background.cell(cell_bg)[a], c)];
                u_ov += lo[a] * solution[dofmap.overlapping_dof(overlapping.cell(cell_ov)[a], c)];
            }
            let d = u_ov - u_bg;
            jump_sq += d * d;
        }
        let h_part = background.cell_diameter(cell_bg);
        acc += part.area * jump_sq / h_part;
    }
    Ok(acc.sqrt())
}

/// Single-mesh L2/H1 errors of a nodal field (degree-4 quadrature).
pub fn single_mesh_errors(
    mesh: &TetMesh,
    nodal: &[f64],
    exact: &dyn Fn(&Point3<f64>) -> f64,
    exact_grad: &dyn Fn(&Point3<f64>) -> Vector3<f64>,
) -> Result<(f64, f64)> {
    assert_eq!(nodal.len(), mesh.num_vertices());
    let volume_rule = tet_rule(4)?;
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for ci in 0..mesh.num_cells() {
        let cell = P1Cell::new(mesh.cell_points(ci))?;
        let vals = mesh.cell(ci).map(|v| nodal[v]);
        let rule = map_rule_to_tet(&volume_rule, &cell.points);
        let (dl2, dh1) = cell_errors(&cell, &vals, &rule, exact, exact_grad);
        l2 += dl2;
        h1 += dh1;
    }
    Ok((l2.sqrt(), h1.sqrt()))
}
