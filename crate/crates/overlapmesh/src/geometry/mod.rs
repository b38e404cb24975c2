//! Geometric primitives and predicates.
//!
//! Everything here works on immutable inputs and returns owned results, so
//! all operations are safe to call concurrently. Coordinates are plain `f64`;
//! tolerances are absolute after rescaling by the diameter of the object at
//! hand (see [`crate::EPS_GEOM`]).

mod clip;
mod intersect;

pub use clip::{clip_polyhedron_halfspace, clip_triangle_tet, tet_tet_intersection};
pub use intersect::{ray_triangle_intersect, tet_triangle_intersects, RayHit};

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::EPS_GEOM;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn new(min: Point3<f64>, max: Point3<f64>) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y && min.z <= max.z);
        Aabb { min, max }
    }

    /// Smallest box containing all `points`. Panics on an empty slice.
    pub fn from_points(points: &[Point3<f64>]) -> Self {
        assert!(!points.is_empty(), "bbox of empty point set");
        let mut min = points[0];
        let mut max = points[0];
        for p in &points[1..] {
            for c in 0..3 {
                min[c] = min[c].min(p[c]);
                max[c] = max[c].max(p[c]);
            }
        }
        Aabb { min, max }
    }

    /// Box grown by `eps` on every side.
    pub fn enlarged(&self, eps: f64) -> Self {
        let d = Vector3::new(eps, eps, eps);
        Aabb {
            min: self.min - d,
            max: self.max + d,
        }
    }

    /// Closed-box overlap test.
    pub fn intersects(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
            && self.min.z <= other.max.z
            && other.min.z <= self.max.z
    }

    pub fn union(&self, other: &Aabb) -> Self {
        let mut min = self.min;
        let mut max = self.max;
        for c in 0..3 {
            min[c] = min[c].min(other.min[c]);
            max[c] = max[c].max(other.max[c]);
        }
        Aabb { min, max }
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        (0..3).all(|c| self.min[c] <= other.min[c] && other.max[c] <= self.max[c])
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extents(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn volume(&self) -> f64 {
        let e = self.extents();
        e.x * e.y * e.z
    }

    /// Index of the longest axis (0, 1 or 2).
    pub fn longest_axis(&self) -> usize {
        let e = self.extents();
        let mut axis = 0;
        if e.y > e[axis] {
            axis = 1;
        }
        if e.z > e[axis] {
            axis = 2;
        }
        axis
    }

    pub fn diameter(&self) -> f64 {
        self.extents().norm()
    }
}

/// Oriented plane `{x : normal · x = offset}` with unit normal.
#[derive(Debug, Clone, Copy)]
pub struct Plane {
    pub normal: Vector3<f64>,
    pub offset: f64,
}

impl Plane {
    /// Normalizes `normal` (rescaling `offset` accordingly).
    pub fn new(normal: Vector3<f64>, offset: f64) -> Result<Self> {
        let len = normal.norm();
        if len < 1e-300 {
            return Err(Error::degenerate("plane with zero normal"));
        }
        Ok(Plane {
            normal: normal / len,
            offset: offset / len,
        })
    }

    /// Plane through `point` with the given (non-unit) normal direction.
    pub fn from_point_normal(point: Point3<f64>, normal: Vector3<f64>) -> Result<Self> {
        let len = normal.norm();
        if len < 1e-300 {
            return Err(Error::degenerate("plane with zero normal"));
        }
        let n = normal / len;
        Ok(Plane {
            normal: n,
            offset: n.dot(&point.coords),
        })
    }

    /// Signed distance of `p` from the plane (positive on the normal side).
    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }

    /// The plane with reversed orientation (same point set).
    pub fn flipped(&self) -> Plane {
        Plane {
            normal: -self.normal,
            offset: -self.offset,
        }
    }
}

/// Planar polygon given by an ordered vertex loop and a unit normal.
///
/// The loop is counterclockwise when viewed from the normal side.
#[derive(Debug, Clone)]
pub struct PlanarPolygon {
    pub vertices: Vec<Point3<f64>>,
    pub normal: Vector3<f64>,
}

impl PlanarPolygon {
    /// Validating constructor: at least 3 vertices, consecutive vertices
    /// distinct, all coplanar, loop orientation consistent with `normal`.
    pub fn new(vertices: Vec<Point3<f64>>, normal: Vector3<f64>) -> Result<Self> {
        let poly = PlanarPolygon { vertices, normal };
        poly.validate()?;
        Ok(poly)
    }

    /// Constructor for internal callers that guarantee the invariants.
    pub(crate) fn from_loop_unchecked(vertices: Vec<Point3<f64>>, normal: Vector3<f64>) -> Self {
        let poly = PlanarPolygon { vertices, normal };
        debug_assert!(poly.validate().is_ok(), "invalid polygon loop");
        poly
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices.len() < 3 {
            return Err(Error::degenerate("polygon with fewer than 3 vertices"));
        }
        if (self.normal.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::degenerate("polygon normal not unit length"));
        }
        let diam = Aabb::from_points(&self.vertices).diameter();
        let tol = EPS_GEOM * diam.max(1e-300);
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if (b - a).norm() <= tol {
                return Err(Error::degenerate("repeated consecutive polygon vertices"));
            }
        }
        // Coplanarity relative to the first vertex. The factor on the weld
        // tolerance absorbs interpolation roundoff from clipping.
        let p0 = self.vertices[0];
        for v in &self.vertices[1..] {
            if self.normal.dot(&(v - p0)).abs() > 100.0 * tol {
                return Err(Error::degenerate("polygon vertices not coplanar"));
            }
        }
        // Orientation: the Newell vector of a CCW loop points along +normal.
        if self.newell_vector().dot(&self.normal) <= 0.0 {
            return Err(Error::degenerate("polygon loop not counterclockwise"));
        }
        Ok(())
    }

    /// Sum of `v_i × v_{i+1}` over the loop; equals `2·area·normal` for a
    /// planar loop.
    fn newell_vector(&self) -> Vector3<f64> {
        let mut s = Vector3::zeros();
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i].coords;
            let b = self.vertices[(i + 1) % n].coords;
            s += a.cross(&b);
        }
        s
    }

    /// Polygon area from the Newell vector.
    pub fn area(&self) -> f64 {
        0.5 * self.newell_vector().dot(&self.normal)
    }

    /// Area centroid, by fanning signed triangles from the first vertex.
    pub fn centroid(&self) -> Point3<f64> {
        let p0 = self.vertices[0];
        let mut area2 = 0.0;
        let mut acc = Vector3::zeros();
        for w in self.vertices[1..].windows(2) {
            let a2 = (w[0] - p0).cross(&(w[1] - p0)).dot(&self.normal);
            let c = (p0.coords + w[0].coords + w[1].coords) / 3.0;
            area2 += a2;
            acc += a2 * c;
        }
        if area2.abs() < 1e-300 {
            return p0;
        }
        Point3::from(acc / area2)
    }

    pub fn diameter(&self) -> f64 {
        Aabb::from_points(&self.vertices).diameter()
    }
}

/// Closed convex polyhedron in boundary representation: a set of planar
/// faces with outward normals. The set may be empty (empty intersection).
#[derive(Debug, Clone, Default)]
pub struct ConvexPolyhedron {
    pub faces: Vec<PlanarPolygon>,
}

impl ConvexPolyhedron {
    pub fn empty() -> Self {
        ConvexPolyhedron { faces: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Boundary representation of a tetrahedron. The vertex order may have
    /// either orientation; faces always come out with outward normals.
    pub fn from_tet(points: &[Point3<f64>; 4]) -> Result<Self> {
        let mut p = *points;
        let vol6 = (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0]));
        let scale = Aabb::from_points(&p).diameter();
        if vol6.abs() / 6.0 <= EPS_GEOM.powi(3) * scale.powi(3).max(1e-300) {
            return Err(Error::degenerate("tetrahedron with near-zero volume"));
        }
        if vol6 < 0.0 {
            p.swap(2, 3);
        }
        // Outward-oriented local facets of a positively oriented tet.
        const FACETS: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];
        let faces = FACETS
            .iter()
            .map(|f| {
                let (a, b, c) = (p[f[0]], p[f[1]], p[f[2]]);
                let n = (b - a).cross(&(c - a)).normalize();
                PlanarPolygon::from_loop_unchecked(vec![a, b, c], n)
            })
            .collect();
        Ok(ConvexPolyhedron { faces })
    }

    /// Axis-aligned box as a six-face polyhedron.
    pub fn from_aabb(bb: &Aabb) -> Self {
        let (lo, hi) = (bb.min, bb.max);
        let p = |x: f64, y: f64, z: f64| Point3::new(x, y, z);
        let quads = [
            (
                [
                    p(lo.x, lo.y, lo.z),
                    p(lo.x, hi.y, lo.z),
                    p(hi.x, hi.y, lo.z),
                    p(hi.x, lo.y, lo.z),
                ],
                -Vector3::z(),
            ),
            (
                [
                    p(lo.x, lo.y, hi.z),
                    p(hi.x, lo.y, hi.z),
                    p(hi.x, hi.y, hi.z),
                    p(lo.x, hi.y, hi.z),
                ],
                Vector3::z(),
            ),
            (
                [
                    p(lo.x, lo.y, lo.z),
                    p(lo.x, lo.y, hi.z),
                    p(lo.x, hi.y, hi.z),
                    p(lo.x, hi.y, lo.z),
                ],
                -Vector3::x(),
            ),
            (
                [
                    p(hi.x, lo.y, lo.z),
                    p(hi.x, hi.y, lo.z),
                    p(hi.x, hi.y, hi.z),
                    p(hi.x, lo.y, hi.z),
                ],
                Vector3::x(),
            ),
            (
                [
                    p(lo.x, lo.y, lo.z),
                    p(hi.x, lo.y, lo.z),
                    p(hi.x, lo.y, hi.z),
                    p(lo.x, lo.y, hi.z),
                ],
                -Vector3::y(),
            ),
            (
                [
                    p(lo.x, hi.y, lo.z),
                    p(lo.x, hi.y, hi.z),
                    p(hi.x, hi.y, hi.z),
                    p(hi.x, hi.y, lo.z),
                ],
                Vector3::y(),
            ),
        ];
        ConvexPolyhedron {
            faces: quads
                .iter()
                .map(|(v, n)| PlanarPolygon::from_loop_unchecked(v.to_vec(), *n))
                .collect(),
        }
    }

    pub fn bbox(&self) -> Option<Aabb> {
        let mut it = self.faces.iter().flat_map(|f| f.vertices.iter());
        let first = *it.next()?;
        let mut bb = Aabb::new(first, first);
        for p in it {
            bb = bb.union(&Aabb::new(*p, *p));
        }
        Some(bb)
    }

    pub fn diameter(&self) -> f64 {
        self.bbox().map(|b| b.diameter()).unwrap_or(0.0)
    }

    /// Volume via the divergence theorem along one coordinate axis:
    /// `vol = Σ_F n_i · area(F) · centroid_i(F)`.
    pub fn volume_by_axis(&self, axis: usize) -> f64 {
        self.faces
            .iter()
            .map(|f| f.normal[axis] * f.area() * f.centroid()[axis])
            .sum()
    }

    /// Volume, averaged over the three axis sweeps.
    pub fn volume(&self) -> f64 {
        (self.volume_by_axis(0) + self.volume_by_axis(1) + self.volume_by_axis(2)) / 3.0
    }

    /// `true` iff `p` is on the inner side of every face plane, within
    /// `tol` in absolute distance.
    pub fn contains_point(&self, p: &Point3<f64>, tol: f64) -> bool {
        !self.is_empty()
            && self.faces.iter().all(|f| {
                let d = f.normal.dot(&(p - f.vertices[0]));
                d <= tol
            })
    }

    /// Full structural audit: per-face validity, edge pairing (every edge
    /// shared by exactly two faces with opposite traversal) and agreement
    /// of the three divergence-theorem volume sweeps.
    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Ok(());
        }
        for f in &self.faces {
            f.validate()?;
        }
        if self.faces.len() < 4 {
            return Err(Error::degenerate("closed polyhedron needs >= 4 faces"));
        }
        self.audit_edge_pairing()?;
        let v = [
            self.volume_by_axis(0),
            self.volume_by_axis(1),
            self.volume_by_axis(2),
        ];
        let vmax = v.iter().cloned().fold(f64::MIN, f64::max);
        let vmin = v.iter().cloned().fold(f64::MAX, f64::min);
        if vmax <= 0.0 {
            return Err(Error::degenerate("polyhedron volume not positive"));
        }
        let spread = (vmax - vmin) / vmax.abs().max(1e-300);
        // Relative agreement degrades on weld-scale slivers; only check
        // bodies whose volume is clearly above the weld-slab scale.
        let diam = self.diameter();
        if spread > 1e-10 && vmax > 1e3 * EPS_GEOM * diam.powi(3) {
            return Err(Error::InternalConsistency(format!(
                "divergence volume sweeps disagree: {v:?}"
            )));
        }
        Ok(())
    }

    fn audit_edge_pairing(&self) -> Result<()> {
        let tol = EPS_GEOM * self.diameter().max(1e-300) * 10.0;
        let mut edges: Vec<(Point3<f64>, Point3<f64>)> = Vec::new();
        for f in &self.faces {
            let n = f.vertices.len();
            for i in 0..n {
                edges.push((f.vertices[i], f.vertices[(i + 1) % n]));
            }
        }
        let close = |a: &Point3<f64>, b: &Point3<f64>| (a - b).norm() <= tol;
        let mut paired = vec![false; edges.len()];
        for i in 0..edges.len() {
            if paired[i] {
                continue;
            }
            let mut found = false;
            for j in (i + 1)..edges.len() {
                if paired[j] {
                    continue;
                }
                // Opposite traversal: (a,b) pairs with (b,a).
                if close(&edges[i].0, &edges[j].1) && close(&edges[i].1, &edges[j].0) {
                    paired[i] = true;
                    paired[j] = true;
                    found = true;
                    break;
                }
            }
            if !found {
                return Err(Error::InternalConsistency(format!(
                    "unpaired polyhedron edge {:?} -> {:?}",
                    edges[i].0, edges[i].1
                )));
            }
        }
        Ok(())
    }
}

/// Outward-oriented face planes of a tetrahedron. A point is inside the tet
/// iff `normal·x <= offset` for all four planes.
pub fn tet_halfspaces(tet: &[Point3<f64>; 4]) -> Result<[Plane; 4]> {
    let scale = Aabb::from_points(tet).diameter();
    let vol = tet_signed_volume(tet).abs();
    if vol <= EPS_GEOM.powi(3) * scale.powi(3).max(1e-300) {
        return Err(Error::degenerate("tetrahedron with near-zero volume"));
    }
    const FACES: [([usize; 3], usize); 4] = [
        ([1, 2, 3], 0),
        ([0, 2, 3], 1),
        ([0, 1, 3], 2),
        ([0, 1, 2], 3),
    ];
    let mut planes = [Plane {
        normal: Vector3::zeros(),
        offset: 0.0,
    }; 4];
    for (k, (f, opp)) in FACES.iter().enumerate() {
        let (a, b, c) = (tet[f[0]], tet[f[1]], tet[f[2]]);
        let mut plane = Plane::from_point_normal(a, (b - a).cross(&(c - a)))?;
        // Orient away from the opposite vertex.
        if plane.signed_distance(&tet[*opp]) > 0.0 {
            plane = plane.flipped();
        }
        planes[k] = plane;
    }
    Ok(planes)
}

/// Signed volume of the tetrahedron spanned by four points.
pub fn tet_signed_volume(tet: &[Point3<f64>; 4]) -> f64 {
    (tet[1] - tet[0])
        .cross(&(tet[2] - tet[0]))
        .dot(&(tet[3] - tet[0]))
        / 6.0
}

/// Centroid of a tetrahedron.
pub fn tet_centroid(tet: &[Point3<f64>; 4]) -> Point3<f64> {
    Point3::from((tet[0].coords + tet[1].coords + tet[2].coords + tet[3].coords) / 4.0)
}

/// Diameter (longest edge) of a tetrahedron.
pub fn tet_diameter(tet: &[Point3<f64>; 4]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            d = d.max((tet[i] - tet[j]).norm());
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_tet() -> [Point3<f64>; 4] {
        [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ]
    }

    #[test]
    fn bbox_single_point() {
        let p = Point3::new(1.0, 2.0, 3.0);
        let bb = Aabb::from_points(&[p]);
        assert_eq!(bb.min, p);
        assert_eq!(bb.max, p);
    }

    #[test]
    fn bbox_reference_tet_and_enlarge() {
        let bb = Aabb::from_points(&reference_tet());
        assert_eq!(bb.min, Point3::new(0.0, 0.0, 0.0));
        assert_eq!(bb.max, Point3::new(1.0, 1.0, 1.0));
        assert_eq!(bb.enlarged(0.0), bb);
    }

    #[test]
    fn halfspaces_of_reference_tet() {
        let tet = reference_tet();
        let planes = tet_halfspaces(&tet).unwrap();
        // Centroid strictly inside all four half-spaces.
        let c = tet_centroid(&tet);
        for p in &planes {
            assert!(p.signed_distance(&c) < 0.0);
        }
        // Each vertex lies on exactly 3 planes and strictly inside the 4th.
        for v in &tet {
            let mut on = 0;
            let mut inside = 0;
            for p in &planes {
                let d = p.signed_distance(v);
                if d.abs() < 1e-14 {
                    on += 1;
                } else {
                    assert!(d < 0.0);
                    inside += 1;
                }
            }
            assert_eq!((on, inside), (3, 1));
        }
        // The slanted face has outward normal (1,1,1)/sqrt(3); the others
        // are the coordinate planes with outward normals -e_i.
        let mut slanted = 0;
        let e = 1.0 / 3f64.sqrt();
        for p in &planes {
            if (p.normal - Vector3::new(e, e, e)).norm() < 1e-12 {
                slanted += 1;
                assert!((p.offset - e).abs() < 1e-12);
            } else {
                let is_neg_axis = (0..3).any(|i| {
                    let mut v = Vector3::zeros();
                    v[i] = -1.0;
                    (p.normal - v).norm() < 1e-12
                });
                assert!(is_neg_axis, "unexpected normal {:?}", p.normal);
                assert!(p.offset.abs() < 1e-14);
            }
        }
        assert_eq!(slanted, 1);
    }

    #[test]
    fn degenerate_tet_rejected() {
        let flat = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.5, 0.5, 0.0),
        ];
        assert!(tet_halfspaces(&flat).is_err());
        assert!(ConvexPolyhedron::from_tet(&flat).is_err());
    }

    #[test]
    fn tet_polyhedron_is_valid_and_has_right_volume() {
        let poly = ConvexPolyhedron::from_tet(&reference_tet()).unwrap();
        poly.validate().unwrap();
        assert!((poly.volume() - 1.0 / 6.0).abs() < 1e-14);
        // Negative orientation is normalized away.
        let mut t = reference_tet();
        t.swap(0, 1);
        let poly = ConvexPolyhedron::from_tet(&t).unwrap();
        poly.validate().unwrap();
        assert!((poly.volume() - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn polygon_area_and_centroid() {
        let tri = PlanarPolygon::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            Vector3::z(),
        )
        .unwrap();
        assert!((tri.area() - 0.5).abs() < 1e-15);
        let c = tri.centroid();
        assert!((c - Point3::new(1.0 / 3.0, 1.0 / 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn polygon_rejects_wrong_winding() {
        let r = PlanarPolygon::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
            ],
            Vector3::z(),
        );
        assert!(r.is_err());
    }
}
