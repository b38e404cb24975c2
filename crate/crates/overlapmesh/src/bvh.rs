//! Axis-aligned bounding box trees and hierarchical collision queries.
//!
//! Trees are immutable after construction; all queries are read-only.
//! Construction is a recursive median split on the longest axis of the
//! centroid bounding box, one entity per leaf. Leaf boxes are enlarged by
//! the geometric tolerance at build time so roundoff can never produce a
//! false negative during traversal.

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{ray_triangle_intersect, Aabb};
use crate::mesh::{SurfaceMesh, TetMesh};
use crate::EPS_GEOM;

/// What the leaf indices of a tree refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityKind {
    VolumeCells,
    SurfaceTriangles,
    Boxes,
}

#[derive(Debug, Clone, Copy)]
enum NodeKind {
    Leaf(usize),
    Inner(usize, usize),
}

#[derive(Debug, Clone)]
struct Node {
    bbox: Aabb,
    kind: NodeKind,
}

/// Binary AABB hierarchy over a set of entities.
#[derive(Debug, Clone)]
pub struct AabbTree {
    nodes: Vec<Node>,
    root: usize,
    num_leaves: usize,
    entity_kind: EntityKind,
}

impl AabbTree {
    /// Builds a tree over explicit boxes. Errors on empty input.
    pub fn build(boxes: &[Aabb], entity_kind: EntityKind) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::invalid("cannot build a tree over zero boxes"));
        }
        let scene = boxes[1..]
            .iter()
            .fold(boxes[0], |acc, b| acc.union(b));
        let margin = EPS_GEOM * scene.diameter().max(1e-300);
        let mut items: Vec<(usize, Aabb, Point3<f64>)> = boxes
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let e = b.enlarged(margin);
                (i, e, e.center())
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * boxes.len() - 1);
        let root = build_recursive(&mut items, &mut nodes);
        Ok(AabbTree {
            nodes,
            root,
            num_leaves: boxes.len(),
            entity_kind,
        })
    }

    /// Tree over the cells of a volume mesh.
    pub fn from_mesh_cells(mesh: &TetMesh) -> Result<Self> {
        let boxes: Vec<Aabb> = (0..mesh.num_cells()).map(|i| mesh.cell_bbox(i)).collect();
        Self::build(&boxes, EntityKind::VolumeCells)
    }

    /// Tree over the triangles of a surface mesh.
    pub fn from_surface_triangles(surface: &SurfaceMesh) -> Result<Self> {
        let boxes: Vec<Aabb> = (0..surface.num_triangles())
            .map(|i| Aabb::from_points(&surface.triangle_points(i)))
            .collect();
        Self::build(&boxes, EntityKind::SurfaceTriangles)
    }

    pub fn num_leaves(&self) -> usize {
        self.num_leaves
    }

    pub fn entity_kind(&self) -> EntityKind {
        self.entity_kind
    }

    pub fn root_bbox(&self) -> Aabb {
        self.nodes[self.root].bbox
    }

    /// Exact containment audit: every parent box contains its children and
    /// the leaf count matches the entity count.
    pub fn audit(&self) -> Result<()> {
        let mut leaves = 0;
        for node in &self.nodes {
            match node.kind {
                NodeKind::Leaf(_) => leaves += 1,
                NodeKind::Inner(l, r) => {
                    for child in [l, r] {
                        if !node.bbox.contains_box(&self.nodes[child].bbox) {
                            return Err(Error::InternalConsistency(
                                "child box escapes parent box".into(),
                            ));
                        }
                    }
                }
            }
        }
        if leaves != self.num_leaves {
            return Err(Error::InternalConsistency(format!(
                "tree has {leaves} leaves for {} entities",
                self.num_leaves
            )));
        }
        Ok(())
    }

    /// All leaf entities whose box intersects `query`.
    pub fn query_box(&self, query: &Aabb) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if !node.bbox.intersects(query) {
                continue;
            }
            match node.kind {
                NodeKind::Leaf(e) => out.push(e),
                NodeKind::Inner(l, r) => {
                    stack.push(r);
                    stack.push(l);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn build_recursive(items: &mut [(usize, Aabb, Point3<f64>)], nodes: &mut Vec<Node>) -> usize {
    debug_assert!(!items.is_empty());
    if items.len() == 1 {
        nodes.push(Node {
            bbox: items[0].1,
            kind: NodeKind::Leaf(items[0].0),
        });
        return nodes.len() - 1;
    }
    let centroid_box = items[1..].iter().fold(
        Aabb::new(items[0].2, items[0].2),
        |acc, it| acc.union(&Aabb::new(it.2, it.2)),
    );
    let axis = centroid_box.longest_axis();
    let mid = items.len() / 2;
    items.select_nth_unstable_by(mid, |a, b| a.2[axis].partial_cmp(&b.2[axis]).unwrap());
    let (left_items, right_items) = items.split_at_mut(mid);
    let left = build_recursive(left_items, nodes);
    let right = build_recursive(right_items, nodes);
    let bbox = nodes[left].bbox.union(&nodes[right].bbox);
    nodes.push(Node {
        bbox,
        kind: NodeKind::Inner(left, right),
    });
    nodes.len() - 1
}

/// Sorted, deduplicated set of colliding `(cell, facet)` index pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollisionRelation {
    pairs: Vec<(usize, usize)>,
}

impl CollisionRelation {
    pub fn from_pairs(mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        CollisionRelation { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, pair: (usize, usize)) -> bool {
        self.pairs.binary_search(&pair).is_ok()
    }
}

/// Traversal statistics for complexity audits.
#[derive(Debug, Clone, Copy, Default)]
pub struct TraversalStats {
    /// Node pairs visited (including pruned ones).
    pub visited_pairs: usize,
    /// Leaf pairs on which the exact predicate ran.
    pub leaf_tests: usize,
}

/// Simultaneous descent of two box trees.
///
/// At each step the pair is pruned if the boxes are disjoint; at leaf–leaf
/// pairs the exact `leaf_test` decides membership. The descend rule expands
/// the node with the larger box volume:
/// `descend_a(A, B) = is_leaf(B) ∨ (¬is_leaf(A) ∧ |A| ≥ |B|)`.
/// Output order is canonical (sorted), independent of traversal order.
pub fn traverse_pair(
    tree_a: &AabbTree,
    tree_b: &AabbTree,
    mut leaf_test: impl FnMut(usize, usize) -> bool,
) -> CollisionRelation {
    traverse_pair_with_stats(tree_a, tree_b, &mut leaf_test).0
}

pub fn traverse_pair_with_stats(
    tree_a: &AabbTree,
    tree_b: &AabbTree,
    leaf_test: &mut dyn FnMut(usize, usize) -> bool,
) -> (CollisionRelation, TraversalStats) {
    let mut pairs = Vec::new();
    let mut stats = TraversalStats::default();
    recurse(
        tree_a,
        tree_b,
        tree_a.root,
        tree_b.root,
        leaf_test,
        &mut pairs,
        &mut stats,
    );
    (CollisionRelation::from_pairs(pairs), stats)
}

fn recurse(
    tree_a: &AabbTree,
    tree_b: &AabbTree,
    a: usize,
    b: usize,
    leaf_test: &mut dyn FnMut(usize, usize) -> bool,
    pairs: &mut Vec<(usize, usize)>,
    stats: &mut TraversalStats,
) {
    stats.visited_pairs += 1;
    let na = &tree_a.nodes[a];
    let nb = &tree_b.nodes[b];
    if !na.bbox.intersects(&nb.bbox) {
        return;
    }
    match (na.kind, nb.kind) {
        (NodeKind::Leaf(ea), NodeKind::Leaf(eb)) => {
            stats.leaf_tests += 1;
            if leaf_test(ea, eb) {
                pairs.push((ea, eb));
            }
        }
        _ => {
            let a_leaf = matches!(na.kind, NodeKind::Leaf(_));
            let b_leaf = matches!(nb.kind, NodeKind::Leaf(_));
            let descend_a = b_leaf || (!a_leaf && na.bbox.volume() >= nb.bbox.volume());
            if descend_a {
                if let NodeKind::Inner(l, r) = na.kind {
                    recurse(tree_a, tree_b, l, b, leaf_test, pairs, stats);
                    recurse(tree_a, tree_b, r, b, leaf_test, pairs, stats);
                }
            } else if let NodeKind::Inner(l, r) = nb.kind {
                recurse(tree_a, tree_b, a, l, leaf_test, pairs, stats);
                recurse(tree_a, tree_b, a, r, leaf_test, pairs, stats);
            }
        }
    }
}

/// Result of a ray-crossing parity query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossingCount {
    pub count: usize,
    /// Some hit was near an edge/vertex or two hits coincide in `t`; the
    /// parity cannot be trusted and the caller should retry.
    pub degenerate: bool,
}

fn ray_intersects_box(origin: &Point3<f64>, direction: &Vector3<f64>, bb: &Aabb) -> bool {
    let mut tmin: f64 = 0.0;
    let mut tmax = f64::INFINITY;
    for c in 0..3 {
        let d = direction[c];
        if d == 0.0 {
            if origin[c] < bb.min[c] || origin[c] > bb.max[c] {
                return false;
            }
            continue;
        }
        let inv = 1.0 / d;
        let mut t1 = (bb.min[c] - origin[c]) * inv;
        let mut t2 = (bb.max[c] - origin[c]) * inv;
        if t1 > t2 {
            std::mem::swap(&mut t1, &mut t2);
        }
        tmin = tmin.max(t1);
        tmax = tmax.min(t2);
        if tmin > tmax {
            return false;
        }
    }
    true
}

/// Counts triangles hit by the ray `origin + t·direction` for `t > 0`,
/// descending only tree nodes whose box the ray touches.
pub fn count_ray_crossings(
    tree: &AabbTree,
    surface: &SurfaceMesh,
    origin: &Point3<f64>,
    direction: &Vector3<f64>,
) -> CrossingCount {
    debug_assert_eq!(tree.entity_kind, EntityKind::SurfaceTriangles);
    let mut hits: Vec<f64> = Vec::new();
    let mut degenerate = false;
    let mut stack = vec![tree.root];
    while let Some(ni) = stack.pop() {
        let node = &tree.nodes[ni];
        if !ray_intersects_box(origin, direction, &node.bbox) {
            continue;
        }
        match node.kind {
            NodeKind::Inner(l, r) => {
                stack.push(r);
                stack.push(l);
            }
            NodeKind::Leaf(e) => {
                let tri = surface.triangle_points(e);
                if let Some(hit) = ray_triangle_intersect(origin, direction, &tri) {
                    if hit.t > 0.0 {
                        hits.push(hit.t);
                        degenerate |= hit.degenerate;
                    } else {
                        // Grazing the surface at the origin itself.
                        degenerate |= hit.degenerate;
                    }
                }
            }
        }
    }
    hits.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let t_tol = EPS_GEOM * tree.root_bbox().diameter();
    for w in hits.windows(2) {
        if (w[1] - w[0]).abs() <= t_tol {
            degenerate = true;
        }
    }
    CrossingCount {
        count: hits.len(),
        degenerate,
    }
}

/// Deterministic, well-spread unit directions used for parity retries
/// (spherical Fibonacci lattice, deliberately avoiding the mesh axes).
fn retry_directions() -> [Vector3<f64>; 16] {
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    let mut dirs = [Vector3::zeros(); 16];
    for (k, d) in dirs.iter_mut().enumerate() {
        let z = 1.0 - 2.0 * (k as f64 + 0.5) / 16.0;
        let r = (1.0 - z * z).sqrt();
        let phi = golden * k as f64;
        *d = Vector3::new(r * phi.cos(), r * phi.sin(), z);
    }
    dirs
}

/// Point-in-volume classification by crossing parity against a watertight
/// surface. Degenerate ray configurations are retried with fresh directions
/// from a fixed table, up to 8 retries.
pub fn point_inside_surface(
    tree: &AabbTree,
    surface: &SurfaceMesh,
    point: &Point3<f64>,
) -> Result<bool> {
    let dirs = retry_directions();
    for dir in dirs.iter().take(9) {
        let crossings = count_ray_crossings(tree, surface, point, dir);
        if !crossings.degenerate {
            return Ok(crossings.count % 2 == 1);
        }
    }
    Err(Error::degenerate(format!(
        "ray parity for point {point:?} undecided after 8 retries"
    )))
}
