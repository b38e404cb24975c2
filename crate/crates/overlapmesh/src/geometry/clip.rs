//! Convex clipping against half-spaces.
//!
//! The kept side of a [`Plane`] is always `normal·x <= offset`. Clipping
//! produces new vertices by exact segment–plane interpolation; vertices
//! closer than the weld tolerance are merged, and faces reduced below three
//! vertices are dropped.

use nalgebra::{Point3, Vector3};

use super::{tet_halfspaces, Aabb, ConvexPolyhedron, PlanarPolygon, Plane};
use crate::EPS_GEOM;

/// Clips a convex polyhedron by the half-space `normal·x <= offset`.
///
/// Returns the (possibly empty) intersection. When the plane cuts the
/// interior, a planar cap face with normal `plane.normal` closes the result.
pub fn clip_polyhedron_halfspace(poly: &ConvexPolyhedron, plane: &Plane) -> ConvexPolyhedron {
    if poly.is_empty() {
        return ConvexPolyhedron::empty();
    }
    let scale = poly.diameter().max(1e-300);
    let tol = EPS_GEOM * scale;

    let mut dmin = f64::MAX;
    let mut dmax = f64::MIN;
    for f in &poly.faces {
        for v in &f.vertices {
            let d = plane.signed_distance(v);
            dmin = dmin.min(d);
            dmax = dmax.max(d);
        }
    }
    if dmax <= tol {
        // Entirely on the kept side (tangency included): unchanged.
        return poly.clone();
    }
    if dmin >= -tol {
        return ConvexPolyhedron::empty();
    }

    let mut faces: Vec<PlanarPolygon> = Vec::with_capacity(poly.faces.len() + 1);
    let mut cap_points: Vec<Point3<f64>> = Vec::new();
    for face in &poly.faces {
        let clipped = clip_loop(&face.vertices, plane);
        if let Some(loop_pts) = keep_loop(clipped, tol) {
            // Vertices on the cutting plane bound the cap polygon.
            for v in &loop_pts {
                if plane.signed_distance(v).abs() <= 4.0 * tol {
                    cap_points.push(*v);
                }
            }
            faces.push(PlanarPolygon {
                vertices: loop_pts,
                normal: face.normal,
            });
        }
    }

    match build_cap(cap_points, plane, tol) {
        Some(cap) => faces.push(cap),
        None => {
            // The cut cross-section is below the weld scale. A convex body
            // can only produce this for a tangency-grade cut, so the input
            // is the closest valid answer.
            return poly.clone();
        }
    }

    if faces.len() < 4 {
        // Sliver thinner than the weld tolerance; treat as empty.
        return ConvexPolyhedron::empty();
    }
    let result = ConvexPolyhedron { faces };
    debug_assert!(
        result.validate().is_ok(),
        "clip produced an invalid polyhedron"
    );
    result
}

/// Sutherland–Hodgman pass of one face loop against the plane.
fn clip_loop(loop_pts: &[Point3<f64>], plane: &Plane) -> Vec<Point3<f64>> {
    let n = loop_pts.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let a = loop_pts[i];
        let b = loop_pts[(i + 1) % n];
        let da = plane.signed_distance(&a);
        let db = plane.signed_distance(&b);
        let a_in = da <= 0.0;
        let b_in = db <= 0.0;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = da / (da - db);
            out.push(a + (b - a) * t);
        }
    }
    out
}

/// Welds consecutive duplicates and drops loops that collapsed.
fn keep_loop(mut pts: Vec<Point3<f64>>, tol: f64) -> Option<Vec<Point3<f64>>> {
    let mut i = 0;
    while i < pts.len() && pts.len() > 1 {
        let j = (i + 1) % pts.len();
        if (pts[i] - pts[j]).norm() <= tol {
            pts.remove(j);
        } else {
            i += 1;
        }
    }
    if pts.len() < 3 {
        return None;
    }
    // Collinear slivers have vanishing Newell area.
    let mut newell = Vector3::zeros();
    for i in 0..pts.len() {
        newell += pts[i].coords.cross(&pts[(i + 1) % pts.len()].coords);
    }
    if 0.5 * newell.norm() <= tol * tol {
        return None;
    }
    Some(pts)
}

/// Assembles the cap polygon from the on-plane vertices of the clipped
/// loops: weld, then order counterclockwise around the centroid as seen
/// from the plane normal.
fn build_cap(points: Vec<Point3<f64>>, plane: &Plane, tol: f64) -> Option<PlanarPolygon> {
    let mut reps: Vec<Point3<f64>> = Vec::new();
    for p in points {
        if !reps.iter().any(|r| (r - p).norm() <= 2.0 * tol) {
            reps.push(p);
        }
    }
    if reps.len() < 3 {
        return None;
    }
    let centroid = Point3::from(reps.iter().map(|p| p.coords).sum::<Vector3<f64>>() / reps.len() as f64);
    // In-plane orthonormal frame (u, v, normal), right handed.
    let n = plane.normal;
    let mut u = n.cross(&Vector3::x());
    if u.norm() < 1e-8 {
        u = n.cross(&Vector3::y());
    }
    let u = u.normalize();
    let v = n.cross(&u);
    reps.sort_by(|a, b| {
        let pa = a - centroid;
        let pb = b - centroid;
        let ta = f64::atan2(v.dot(&pa), u.dot(&pa));
        let tb = f64::atan2(v.dot(&pb), u.dot(&pb));
        ta.partial_cmp(&tb).unwrap()
    });
    let cap = PlanarPolygon {
        vertices: reps,
        normal: n,
    };
    if cap.area() <= tol * tol {
        return None;
    }
    Some(cap)
}

/// Intersection of two tetrahedra as a convex polyhedron: `A` clipped by
/// the four half-spaces of `B`. Empty when the tetrahedra are disjoint.
pub fn tet_tet_intersection(
    a: &[Point3<f64>; 4],
    b: &[Point3<f64>; 4],
) -> crate::Result<ConvexPolyhedron> {
    let mut poly = ConvexPolyhedron::from_tet(a)?;
    for plane in tet_halfspaces(b)? {
        poly = clip_polyhedron_halfspace(&poly, &plane);
        if poly.is_empty() {
            return Ok(poly);
        }
    }
    Ok(poly)
}

/// Clips a triangle by the four half-spaces of a tetrahedron, in the plane
/// of the triangle. Returns `None` when the intersection is empty or
/// degenerates to a point/segment. The polygon inherits the triangle
/// normal and has at most 7 vertices.
pub fn clip_triangle_tet(
    tri: &[Point3<f64>; 3],
    tet: &[Point3<f64>; 4],
) -> crate::Result<Option<PlanarPolygon>> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let normal = e1.cross(&e2);
    let scale = Aabb::from_points(tri).diameter().max(1e-300);
    if normal.norm() <= (EPS_GEOM * scale).powi(2) {
        return Err(crate::Error::degenerate("triangle with near-zero area"));
    }
    let normal = normal.normalize();
    let tol = EPS_GEOM * scale.max(Aabb::from_points(tet).diameter());

    let mut pts = tri.to_vec();
    for plane in tet_halfspaces(tet)? {
        pts = clip_loop(&pts, &plane);
        if pts.len() < 3 {
            return Ok(None);
        }
    }
    Ok(keep_loop(pts, tol).map(|v| PlanarPolygon {
        vertices: v,
        normal,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    fn unit_cube() -> ConvexPolyhedron {
        ConvexPolyhedron::from_aabb(&Aabb::new(
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 1.0),
        ))
    }

    #[test]
    fn cube_fixture_is_valid() {
        let c = unit_cube();
        c.validate().unwrap();
        assert!((c.volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn clip_plane_outside_returns_input() {
        let cube = unit_cube();
        let plane = Plane::new(Vector3::x(), 5.0).unwrap();
        let out = clip_polyhedron_halfspace(&cube, &plane);
        assert!((out.volume() - cube.volume()).abs() < 1e-14);
        assert_eq!(out.faces.len(), 6);
    }

    #[test]
    fn clip_plane_rejecting_everything_returns_empty() {
        let cube = unit_cube();
        let plane = Plane::new(-Vector3::x(), -5.0).unwrap();
        let out = clip_polyhedron_halfspace(&cube, &plane);
        assert!(out.is_empty());
    }

    #[test]
    fn clip_cube_in_half() {
        let cube = unit_cube();
        let plane = Plane::new(Vector3::x(), 0.5).unwrap();
        let out = clip_polyhedron_halfspace(&cube, &plane);
        out.validate().unwrap();
        assert_eq!(out.faces.len(), 6);
        assert!((out.volume() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn clip_tangent_plane_is_identity() {
        let cube = unit_cube();
        let plane = Plane::new(Vector3::x(), 1.0).unwrap();
        let out = clip_polyhedron_halfspace(&cube, &plane);
        assert_eq!(out.faces.len(), 6);
        assert!((out.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tet_self_intersection_keeps_volume() {
        let tet = [
            Point3::new(0.2, 0.1, 0.0),
            Point3::new(0.9, 0.2, 0.1),
            Point3::new(0.3, 0.8, 0.2),
            Point3::new(0.4, 0.3, 0.9),
        ];
        let vol = super::super::tet_signed_volume(&tet).abs();
        let isec = tet_tet_intersection(&tet, &tet).unwrap();
        isec.validate().unwrap();
        assert!((isec.volume() - vol).abs() <= 1e-12 * vol.max(1.0));
    }

    #[test]
    fn disjoint_tets_give_empty() {
        let a = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        let mut b = a;
        for p in &mut b {
            p.x += 10.0;
        }
        assert!(tet_tet_intersection(&a, &b).unwrap().is_empty());
    }

    #[test]
    fn triangle_inside_tet_is_unchanged() {
        let tet = [
            Point3::new(-1.0, -1.0, -1.0),
            Point3::new(3.0, -1.0, -1.0),
            Point3::new(-1.0, 3.0, -1.0),
            Point3::new(-1.0, -1.0, 3.0),
        ];
        let tri = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(0.5, 0.0, 0.0),
            Point3::new(0.0, 0.5, 0.0),
        ];
        let poly = clip_triangle_tet(&tri, &tet).unwrap().unwrap();
        assert_eq!(poly.vertices.len(), 3);
        assert!((poly.area() - 0.125).abs() < 1e-14);
    }

    #[test]
    fn triangle_outside_tet_is_empty() {
        let tet = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        let tri = [
            Point3::new(5.0, 5.0, 5.0),
            Point3::new(6.0, 5.0, 5.0),
            Point3::new(5.0, 6.0, 5.0),
        ];
        assert!(clip_triangle_tet(&tri, &tet).unwrap().is_none());
    }
}
