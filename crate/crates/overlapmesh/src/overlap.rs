//! Overlap description of two tetrahedral meshes: which background cells
//! collide with the overlapping boundary, the classification of background
//! cells into not/completely/partially overlapped, the decomposition of the
//! overlap interface into per-cell polygon parts, and the visible-volume
//! moments of the cut cells.
//!
//! Cut-cell moments are computed additively: the covered moments of a
//! partially overlapped background cell `T` are the sum of the moments of
//! `T ∩ K` over the overlapping-mesh cells `K` (convex–convex clipping),
//! which is exact because the interiors of the `K` are pairwise disjoint.
//! The visible moments follow by subtraction from the plain tet moments.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use crate::bvh::{point_inside_surface, traverse_pair, AabbTree, CollisionRelation};
use crate::error::{Error, Result};
use crate::geometry::{
    clip_triangle_tet, tet_tet_intersection, tet_triangle_intersects, PlanarPolygon,
};
use crate::mesh::{boundary, SurfaceMesh, TetMesh};
use crate::quadrature::{
    barycenter_rule, polygon_area_centroid, polyhedron_moments, CacheKey, QuadratureCache,
    QuadratureRule,
};
use crate::SMALL_CUT_THRESHOLD;

/// Both directions of the collision relation, as sorted adjacency lists.
#[derive(Debug, Clone)]
pub struct CollisionMaps {
    cell_to_facets: Vec<Vec<usize>>,
    facet_to_cells: Vec<Vec<usize>>,
}

impl CollisionMaps {
    pub fn from_relation(
        relation: &CollisionRelation,
        num_cells: usize,
        num_facets: usize,
    ) -> Self {
        let mut cell_to_facets = vec![Vec::new(); num_cells];
        let mut facet_to_cells = vec![Vec::new(); num_facets];
        for &(i, j) in relation.pairs() {
            cell_to_facets[i].push(j);
            facet_to_cells[j].push(i);
        }
        // Relation pairs are sorted, so the lists come out sorted as well.
        CollisionMaps {
            cell_to_facets,
            facet_to_cells,
        }
    }

    pub fn cell_to_facets(&self, cell: usize) -> &[usize] {
        &self.cell_to_facets[cell]
    }

    pub fn facet_to_cells(&self, facet: usize) -> &[usize] {
        &self.facet_to_cells[facet]
    }

    /// Reconstructs the pair set from each direction; both must agree with
    /// the originating relation (transpose audit).
    pub fn pair_sets(&self) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
        let mut from_cells = Vec::new();
        for (i, facets) in self.cell_to_facets.iter().enumerate() {
            for &j in facets {
                from_cells.push((i, j));
            }
        }
        let mut from_facets = Vec::new();
        for (j, cells) in self.facet_to_cells.iter().enumerate() {
            for &i in cells {
                from_facets.push((i, j));
            }
        }
        from_cells.sort_unstable();
        from_facets.sort_unstable();
        (from_cells, from_facets)
    }
}

/// Classification of a background cell relative to the overlapping domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    NotOverlapped,
    CompletelyOverlapped,
    PartiallyOverlapped,
}

/// One polygon of the interface decomposition: the intersection of
/// boundary facet `facet` of the overlapping mesh with background cell
/// `cell_background`.
#[derive(Debug, Clone)]
pub struct InterfaceFacetPart {
    pub facet: usize,
    /// The unique overlapping-mesh cell incident to the facet.
    pub cell_overlapping: usize,
    /// The background cell this part lies in.
    pub cell_background: usize,
    pub polygon: PlanarPolygon,
    pub area: f64,
    pub centroid: Point3<f64>,
    /// Outward normal of the overlapping-mesh boundary, i.e. directed from
    /// the overlapping domain into the visible background domain.
    pub normal: Vector3<f64>,
}

/// Visible/covered volume moments of a partially overlapped cell.
#[derive(Debug, Clone, Copy)]
pub struct CutCellGeometry {
    pub cell: usize,
    pub visible_volume: f64,
    pub visible_centroid: Point3<f64>,
    pub covered_volume: f64,
    /// Below the relative-measure drop threshold; assembly skips such cells.
    pub small: bool,
}

/// Everything the assembly needs to know about the overlap of a background
/// mesh by an overlapping mesh. Immutable once built.
pub struct OverlapData {
    pub background_cell_tree: AabbTree,
    pub overlapping_boundary_tree: AabbTree,
    pub overlapping_cell_tree: AabbTree,
    /// Boundary of the overlapping mesh, oriented outward.
    pub overlapping_boundary: SurfaceMesh,
    pub relation: CollisionRelation,
    pub maps: CollisionMaps,
    pub classes: Vec<CellClass>,
    /// Sorted by (background cell, facet).
    pub facet_parts: Vec<InterfaceFacetPart>,
    /// Sorted by background cell index.
    pub cut_cells: Vec<CutCellGeometry>,
    cut_by_cell: HashMap<usize, usize>,
}

impl OverlapData {
    /// Assembles the container from individually computed phases (the
    /// counterpart of [`build_overlap`] for callers that time each phase).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        background_cell_tree: AabbTree,
        overlapping_boundary_tree: AabbTree,
        overlapping_cell_tree: AabbTree,
        overlapping_boundary: SurfaceMesh,
        relation: CollisionRelation,
        maps: CollisionMaps,
        classes: Vec<CellClass>,
        facet_parts: Vec<InterfaceFacetPart>,
        cut_cells: Vec<CutCellGeometry>,
    ) -> Self {
        let cut_by_cell = cut_cells
            .iter()
            .enumerate()
            .map(|(k, c)| (c.cell, k))
            .collect();
        OverlapData {
            background_cell_tree,
            overlapping_boundary_tree,
            overlapping_cell_tree,
            overlapping_boundary,
            relation,
            maps,
            classes,
            facet_parts,
            cut_cells,
            cut_by_cell,
        }
    }

    /// Cut-cell geometry of a background cell, if it is partially overlapped.
    pub fn cut_cell(&self, cell: usize) -> Option<&CutCellGeometry> {
        self.cut_by_cell.get(&cell).map(|&k| &self.cut_cells[k])
    }

    pub fn class(&self, cell: usize) -> CellClass {
        self.classes[cell]
    }

    /// Deterministic iteration over cut cells, ascending cell index.
    pub fn iter_cut_cells(&self) -> impl Iterator<Item = &CutCellGeometry> {
        self.cut_cells.iter()
    }

    /// Deterministic iteration over interface facet parts together with the
    /// two adjacent cells: `(part, cell in overlapping mesh, cell in
    /// background mesh)`.
    pub fn iter_facet_parts(&self) -> impl Iterator<Item = (&InterfaceFacetPart, usize, usize)> {
        self.facet_parts
            .iter()
            .map(|p| (p, p.cell_overlapping, p.cell_background))
    }

    pub fn class_counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for c in &self.classes {
            match c {
                CellClass::NotOverlapped => counts.0 += 1,
                CellClass::CompletelyOverlapped => counts.1 += 1,
                CellClass::PartiallyOverlapped => counts.2 += 1,
            }
        }
        counts
    }

    /// Total visible background volume: whole cells for not-overlapped
    /// cells plus the visible part of every cut cell.
    pub fn total_visible_volume(&self, background: &TetMesh) -> f64 {
        let mut vol = 0.0;
        for (cell, class) in self.classes.iter().enumerate() {
            if *class == CellClass::NotOverlapped {
                vol += background.cell_volume(cell);
            }
        }
        vol + self
            .cut_cells
            .iter()
            .map(|c| c.visible_volume)
            .sum::<f64>()
    }

    pub fn total_interface_area(&self) -> f64 {
        self.facet_parts.iter().map(|p| p.area).sum()
    }

    pub fn small_cell_count(&self) -> usize {
        self.cut_cells.iter().filter(|c| c.small).count()
    }

    /// One-point rules for every intersected entity: barycenter rules on
    /// the visible part of non-small cut cells, centroid rules on facet
    /// parts. Frozen before return (populate-then-freeze contract).
    pub fn quadrature_cache(&self) -> QuadratureCache {
        let mut cache = QuadratureCache::new();
        for cut in &self.cut_cells {
            if cut.small || cut.visible_volume <= 0.0 {
                continue;
            }
            let rule = barycenter_rule(cut.visible_volume, cut.visible_centroid)
                .expect("positive visible volume");
            cache.insert(CacheKey::CutCell(cut.cell), rule);
        }
        for (idx, part) in self.facet_parts.iter().enumerate() {
            cache.insert(
                CacheKey::FacetPart(idx),
                QuadratureRule {
                    points: vec![part.centroid],
                    weights: vec![part.area],
                    exact_degree: 1,
                },
            );
        }
        cache.freeze();
        cache
    }

    /// Summary row for reporting: class counts, visible volume, interface
    /// area, part count, small-cell count.
    pub fn summary(&self, background: &TetMesh) -> OverlapSummary {
        let (not, complete, partial) = self.class_counts();
        OverlapSummary {
            cells_not_overlapped: not,
            cells_completely_overlapped: complete,
            cells_partially_overlapped: partial,
            total_visible_volume: self.total_visible_volume(background),
            total_interface_area: self.total_interface_area(),
            facet_part_count: self.facet_parts.len(),
            small_cell_count: self.small_cell_count(),
        }
    }
}

/// Per-overlap report emitted by the CLI.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapSummary {
    pub cells_not_overlapped: usize,
    pub cells_completely_overlapped: usize,
    pub cells_partially_overlapped: usize,
    pub total_visible_volume: f64,
    pub total_interface_area: f64,
    pub facet_part_count: usize,
    pub small_cell_count: usize,
}

impl OverlapSummary {
    pub fn csv_header() -> &'static str {
        "cells_not_overlapped,cells_completely_overlapped,cells_partially_overlapped,visible_volume,interface_area,facet_parts,small_cells"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.12e},{:.12e},{},{}",
            self.cells_not_overlapped,
            self.cells_completely_overlapped,
            self.cells_partially_overlapped,
            self.total_visible_volume,
            self.total_interface_area,
            self.facet_part_count,
            self.small_cell_count
        )
    }
}

/// Classifies background cells: cells colliding with the overlapping
/// boundary are partially overlapped; the rest are completely overlapped
/// or not overlapped according to the crossing parity of their centroid.
pub fn classify_cells(
    background: &TetMesh,
    relation: &CollisionRelation,
    boundary_tree: &AabbTree,
    boundary_surface: &SurfaceMesh,
) -> Result<Vec<CellClass>> {
    let mut classes = vec![CellClass::NotOverlapped; background.num_cells()];
    for &(i, _) in relation.pairs() {
        classes[i] = CellClass::PartiallyOverlapped;
    }
    let bb = boundary_tree.root_bbox();
    for (cell, class) in classes.iter_mut().enumerate() {
        if *class == CellClass::PartiallyOverlapped {
            continue;
        }
        let centroid = background.cell_centroid(cell);
        // Cheap reject: outside the boundary's bounding box means outside.
        if !(bb.min.x <= centroid.x
            && centroid.x <= bb.max.x
            && bb.min.y <= centroid.y
            && centroid.y <= bb.max.y
            && bb.min.z <= centroid.z
            && centroid.z <= bb.max.z)
        {
            continue;
        }
        let inside = point_inside_surface(boundary_tree, boundary_surface, &centroid)
            .map_err(|e| {
                Error::degenerate(format!("classifying cell {cell}: {e}"))
            })?;
        if inside {
            *class = CellClass::CompletelyOverlapped;
        }
    }
    Ok(classes)
}

/// Intersects every boundary facet with each background cell it collides
/// with. Parts whose clipped polygon degenerates are dropped. The result is
/// sorted by (background cell, facet).
pub fn compute_interface_decomposition(
    background: &TetMesh,
    boundary_surface: &SurfaceMesh,
    maps: &CollisionMaps,
) -> Result<Vec<InterfaceFacetPart>> {
    let mut parts = Vec::new();
    for facet in 0..boundary_surface.num_triangles() {
        let tri = boundary_surface.triangle_points(facet);
        let cell_overlapping = boundary_surface.parent_cell(facet);
        for &cell in maps.facet_to_cells(facet) {
            let tet = background.cell_points(cell);
            let Some(polygon) = clip_triangle_tet(&tri, &tet)? else {
                continue;
            };
            let (area, centroid, rule) = polygon_area_centroid(&polygon)?;
            if rule.points.is_empty() {
                continue;
            }
            let normal = polygon.normal;
            parts.push(InterfaceFacetPart {
                facet,
                cell_overlapping,
                cell_background: cell,
                polygon,
                area,
                centroid,
                normal,
            });
        }
    }
    parts.sort_by_key(|p| (p.cell_background, p.facet));
    Ok(parts)
}

/// Computes visible-volume moments for every partially overlapped cell by
/// additive convex decomposition over the overlapping-mesh cells.
pub fn compute_cut_cells(
    background: &TetMesh,
    overlapping: &TetMesh,
    classes: &[CellClass],
    overlapping_cell_tree: &AabbTree,
) -> Result<Vec<CutCellGeometry>> {
    let mut out = Vec::new();
    for (cell, class) in classes.iter().enumerate() {
        if *class != CellClass::PartiallyOverlapped {
            continue;
        }
        let tet = background.cell_points(cell);
        let volume = background.cell_volume(cell);
        let centroid = background.cell_centroid(cell);

        let mut covered_volume = 0.0;
        let mut covered_first = Vector3::zeros();
        for k in overlapping_cell_tree.query_box(&background.cell_bbox(cell)) {
            let other = overlapping.cell_points(k);
            let piece = tet_tet_intersection(&tet, &other)?;
            if piece.is_empty() {
                continue;
            }
            let m = polyhedron_moments(&piece, 1)?;
            covered_volume += m.volume();
            covered_first += Vector3::new(
                m.get([1, 0, 0]).unwrap(),
                m.get([0, 1, 0]).unwrap(),
                m.get([0, 0, 1]).unwrap(),
            );
        }

        let visible_volume = (volume - covered_volume).clamp(0.0, volume);
        let small = visible_volume / volume < SMALL_CUT_THRESHOLD;
        let visible_centroid = if small {
            centroid
        } else {
            let first = centroid.coords * volume - covered_first;
            Point3::from(first / visible_volume)
        };
        out.push(CutCellGeometry {
            cell,
            visible_volume,
            visible_centroid,
            covered_volume,
            small,
        });
    }
    Ok(out)
}

/// Runs the full overlap pipeline: tree builds, boundary collision
/// detection, map transposition, cell classification, interface
/// decomposition and cut-cell moments.
pub fn build_overlap(background: &TetMesh, overlapping: &TetMesh) -> Result<OverlapData> {
    if background.num_cells() == 0 || overlapping.num_cells() == 0 {
        return Err(Error::EmptyMesh("overlap of an empty mesh".into()));
    }
    let overlapping_boundary = boundary(overlapping);
    if !overlapping_boundary.is_watertight() {
        return Err(Error::invalid(
            "overlapping mesh boundary is not watertight",
        ));
    }
    let background_cell_tree = AabbTree::from_mesh_cells(background)?;
    let overlapping_boundary_tree = AabbTree::from_surface_triangles(&overlapping_boundary)?;
    let overlapping_cell_tree = AabbTree::from_mesh_cells(overlapping)?;

    let relation = traverse_pair(&background_cell_tree, &overlapping_boundary_tree, |i, j| {
        tet_triangle_intersects(
            &background.cell_points(i),
            &overlapping_boundary.triangle_points(j),
        )
    });
    let maps = CollisionMaps::from_relation(
        &relation,
        background.num_cells(),
        overlapping_boundary.num_triangles(),
    );
    let classes = classify_cells(
        background,
        &relation,
        &overlapping_boundary_tree,
        &overlapping_boundary,
    )?;
    let facet_parts =
        compute_interface_decomposition(background, &overlapping_boundary, &maps)?;
    let cut_cells = compute_cut_cells(background, overlapping, &classes, &overlapping_cell_tree)?;
    Ok(OverlapData::from_parts(
        background_cell_tree,
        overlapping_boundary_tree,
        overlapping_cell_tree,
        overlapping_boundary,
        relation,
        maps,
        classes,
        facet_parts,
        cut_cells,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{box_mesh, transform, unit_cube_mesh};
    use nalgebra::Matrix3;

    fn shrunk_cube(n: usize) -> TetMesh {
        // T0 shrunk by factor 0.3 about the domain center: axis aligned.
        let lo = 0.5 - 0.15;
        let hi = 0.5 + 0.15;
        box_mesh(Point3::new(lo, lo, lo), Point3::new(hi, hi, hi), (n, n, n)).unwrap()
    }

    #[test]
    fn far_translation_gives_empty_overlap() {
        let t0 = unit_cube_mesh(3).unwrap();
        let t2 = transform(
            &unit_cube_mesh(2).unwrap(),
            &Matrix3::identity(),
            &Vector3::new(100.0, 0.0, 0.0),
        )
        .unwrap();
        let overlap = build_overlap(&t0, &t2).unwrap();
        assert!(overlap.relation.is_empty());
        let (not, complete, partial) = overlap.class_counts();
        assert_eq!(not, t0.num_cells());
        assert_eq!(complete, 0);
        assert_eq!(partial, 0);
        assert_eq!(overlap.iter_cut_cells().count(), 0);
        assert_eq!(overlap.iter_facet_parts().count(), 0);
        assert_eq!(overlap.total_interface_area(), 0.0);
    }

    #[test]
    fn shrunk_cube_every_facet_collides() {
        let t0 = unit_cube_mesh(5).unwrap();
        let t2 = shrunk_cube(2);
        let overlap = build_overlap(&t0, &t2).unwrap();
        for facet in 0..overlap.overlapping_boundary.num_triangles() {
            assert!(
                !overlap.maps.facet_to_cells(facet).is_empty(),
                "facet {facet} collides with nothing"
            );
        }
        // The classes partition the cells.
        let (not, complete, partial) = overlap.class_counts();
        assert_eq!(not + complete + partial, t0.num_cells());
        assert!(partial > 0);
        assert!(complete > 0);
    }

    #[test]
    fn transpose_property_of_maps() {
        let t0 = unit_cube_mesh(4).unwrap();
        let t2 = shrunk_cube(2);
        let overlap = build_overlap(&t0, &t2).unwrap();
        let (a, b) = overlap.maps.pair_sets();
        assert_eq!(a, b);
        assert_eq!(a, overlap.relation.pairs().to_vec());
    }

    #[test]
    fn facet_inside_single_cell_keeps_whole_triangle() {
        // One large background cell containing a tiny overlapping mesh.
        let t0 = box_mesh(
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(4.0, 4.0, 4.0),
            (1, 1, 1),
        )
        .unwrap();
        let t2 = box_mesh(
            Point3::new(1.9, 1.9, 1.9),
            Point3::new(2.1, 2.1, 2.1),
            (1, 1, 1),
        )
        .unwrap();
        let overlap = build_overlap(&t0, &t2).unwrap();
        for facet in 0..overlap.overlapping_boundary.num_triangles() {
            let parts: Vec<_> = overlap
                .facet_parts
                .iter()
                .filter(|p| p.facet == facet)
                .collect();
            assert_eq!(parts.len(), 1, "facet {facet} straddles cells");
            let full = overlap.overlapping_boundary.triangle_area(facet);
            assert!((parts[0].area - full).abs() < 1e-12 * full);
        }
    }

    #[test]
    fn per_facet_part_areas_sum_to_facet_area() {
        let t0 = unit_cube_mesh(4).unwrap();
        let t2 = shrunk_cube(2);
        let overlap = build_overlap(&t0, &t2).unwrap();
        for facet in 0..overlap.overlapping_boundary.num_triangles() {
            let sum: f64 = overlap
                .facet_parts
                .iter()
                .filter(|p| p.facet == facet)
                .map(|p| p.area)
                .sum();
            let full = overlap.overlapping_boundary.triangle_area(facet);
            assert!(
                (sum - full).abs() <= 1e-10 * full,
                "facet {facet}: {sum} vs {full}"
            );
        }
    }

    #[test]
    fn cut_cell_complementarity() {
        let t0 = unit_cube_mesh(4).unwrap();
        let t2 = shrunk_cube(2);
        let overlap = build_overlap(&t0, &t2).unwrap();
        assert!(!overlap.cut_cells.is_empty());
        for cut in overlap.iter_cut_cells() {
            let vol = t0.cell_volume(cut.cell);
            assert!(cut.visible_volume >= 0.0 && cut.visible_volume <= vol + 1e-15);
            let rel = (cut.visible_volume + cut.covered_volume - vol).abs() / vol;
            assert!(rel < 1e-8, "cell {}: {rel}", cut.cell);
        }
    }

    #[test]
    fn facet_parts_reference_partially_overlapped_cells() {
        let t0 = unit_cube_mesh(4).unwrap();
        let t2 = shrunk_cube(2);
        let overlap = build_overlap(&t0, &t2).unwrap();
        for (part, _, cell) in overlap.iter_facet_parts() {
            assert_eq!(part.cell_background, cell);
            assert_eq!(overlap.class(cell), CellClass::PartiallyOverlapped);
        }
        // Deterministic ordering.
        let keys: Vec<_> = overlap
            .facet_parts
            .iter()
            .map(|p| (p.cell_background, p.facet))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn axis_aligned_volume_conservation() {
        // Axis-aligned shrunk cube: visible volume = 1 - 0.3^3 exactly.
        let t0 = unit_cube_mesh(4).unwrap();
        let t2 = shrunk_cube(2);
        let overlap = build_overlap(&t0, &t2).unwrap();
        let visible = overlap.total_visible_volume(&t0);
        let expect = 1.0 - 0.3f64.powi(3);
        assert!(
            (visible - expect).abs() < 1e-8 * expect,
            "visible {visible} vs {expect}"
        );
        // Interface area equals the shrunk cube's surface.
        let area = overlap.total_interface_area();
        let expect_area = 6.0 * 0.3 * 0.3;
        assert!((area - expect_area).abs() < 1e-8 * expect_area);
    }

    #[test]
    fn empty_mesh_is_rejected() {
        let t0 = unit_cube_mesh(2).unwrap();
        let empty = TetMesh::new(Vec::new(), Vec::new()).unwrap();
        assert!(matches!(
            build_overlap(&t0, &empty),
            Err(Error::EmptyMesh(_))
        ));
        assert!(matches!(
            build_overlap(&empty, &t0),
            Err(Error::EmptyMesh(_))
        ));
    }
}
