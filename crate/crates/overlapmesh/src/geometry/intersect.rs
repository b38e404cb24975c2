//! Fast intersection predicates: separating-axis tetrahedron/triangle test
//! and ray–triangle intersection with degeneracy flags.

use nalgebra::{Point3, Vector3};

use super::Aabb;
use crate::EPS_GEOM;

const TET_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Separating-axis test between a closed tetrahedron and a closed triangle.
///
/// Candidate axes: the four tet face normals, the triangle normal, and the
/// 18 edge–edge cross products. Returns `true` iff no candidate axis
/// separates the projections by more than the geometric tolerance, i.e. the
/// test is conservative: shapes touching within `EPS_GEOM·scale` count as
/// intersecting.
pub fn tet_triangle_intersects(tet: &[Point3<f64>; 4], tri: &[Point3<f64>; 3]) -> bool {
    let scale = Aabb::from_points(tet)
        .diameter()
        .max(Aabb::from_points(tri).diameter());
    let tol = EPS_GEOM * scale;

    let separated_on = |axis: Vector3<f64>| -> bool {
        let len = axis.norm();
        if len < 1e-30 {
            return false; // parallel edges; axis carries no information
        }
        let inv = 1.0 / len;
        let (mut amin, mut amax) = (f64::MAX, f64::MIN);
        for p in tet {
            let d = axis.dot(&p.coords) * inv;
            amin = amin.min(d);
            amax = amax.max(d);
        }
        let (mut bmin, mut bmax) = (f64::MAX, f64::MIN);
        for p in tri {
            let d = axis.dot(&p.coords) * inv;
            bmin = bmin.min(d);
            bmax = bmax.max(d);
        }
        amin > bmax + tol || bmin > amax + tol
    };

    // Tet face normals.
    const FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];
    for f in &FACES {
        let n = (tet[f[1]] - tet[f[0]]).cross(&(tet[f[2]] - tet[f[0]]));
        if separated_on(n) {
            return false;
        }
    }
    // Triangle normal.
    let tn = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    if separated_on(tn) {
        return false;
    }
    // Edge-edge cross products.
    for (a, b) in &TET_EDGES {
        let te = tet[*b] - tet[*a];
        for k in 0..3 {
            let se = tri[(k + 1) % 3] - tri[k];
            if separated_on(te.cross(&se)) {
                return false;
            }
        }
    }
    true
}

/// Ray–triangle hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    /// Ray parameter of the hit point (`origin + t·direction`).
    pub t: f64,
    /// Set when the hit lies within tolerance of a triangle edge or vertex,
    /// or when the ray is nearly parallel to the triangle plane. Callers
    /// doing parity counts should retry with a different direction.
    pub degenerate: bool,
}

/// Möller–Trumbore ray–triangle intersection for `t >= 0`.
///
/// Returns `None` on a clean miss. Near-parallel rays passing close to the
/// triangle plane return a degenerate hit so that parity-based callers know
/// the count is unreliable.
pub fn ray_triangle_intersect(
    origin: &Point3<f64>,
    direction: &Vector3<f64>,
    tri: &[Point3<f64>; 3],
) -> Option<RayHit> {
    let scale = Aabb::from_points(tri).diameter();
    let tol = EPS_GEOM;

    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let dir_norm = direction.norm();
    debug_assert!(dir_norm > 0.0, "ray with zero direction");
    let pvec = direction.cross(&e2);
    let det = e1.dot(&pvec);
    let det_scale = dir_norm * e1.norm() * e2.norm();
    if det.abs() <= tol * det_scale.max(1e-300) {
        // Nearly parallel. Only degenerate when the ray passes close to the
        // supporting plane within the triangle's reach.
        let n = e1.cross(&e2);
        let n_len = n.norm();
        if n_len < 1e-300 {
            return Some(RayHit {
                t: 0.0,
                degenerate: true,
            });
        }
        let dist = n.dot(&(origin - tri[0])) / n_len;
        if dist.abs() <= 10.0 * EPS_GEOM * scale {
            return Some(RayHit {
                t: 0.0,
                degenerate: true,
            });
        }
        return None;
    }

    let inv_det = 1.0 / det;
    let tvec = origin - tri[0];
    let u = tvec.dot(&pvec) * inv_det;
    let qvec = tvec.cross(&e1);
    let v = direction.dot(&qvec) * inv_det;
    let w = 1.0 - u - v;

    let band = tol.max(1e-14);
    let inside = u >= -band && v >= -band && w >= -band;
    if !inside {
        return None;
    }
    let t = e2.dot(&qvec) * inv_det;
    if t < 0.0 {
        return None;
    }
    // Near an edge or vertex when any barycentric coordinate sits in the
    // tolerance band around zero.
    let near_edge = u.abs() <= band || v.abs() <= band || w.abs() <= band;
    Some(RayHit {
        t,
        degenerate: near_edge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> [Point3<f64>; 3] {
        [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(0.0, 2.0, 0.0),
        ]
    }

    #[test]
    fn ray_hits_triangle_interior() {
        let hit = ray_triangle_intersect(
            &Point3::new(0.5, 0.5, -1.0),
            &Vector3::new(0.0, 0.0, 1.0),
            &tri(),
        )
        .unwrap();
        assert!((hit.t - 1.0).abs() < 1e-14);
        assert!(!hit.degenerate);
    }

    #[test]
    fn ray_pointing_away_misses() {
        let hit = ray_triangle_intersect(
            &Point3::new(0.5, 0.5, -1.0),
            &Vector3::new(0.0, 0.0, -1.0),
            &tri(),
        );
        assert!(hit.is_none());
    }

    #[test]
    fn ray_through_vertex_is_flagged() {
        let hit = ray_triangle_intersect(
            &Point3::new(0.0, 0.0, -1.0),
            &Vector3::new(0.0, 0.0, 1.0),
            &tri(),
        )
        .unwrap();
        assert!(hit.degenerate);
    }

    #[test]
    fn sat_detects_plane_crossing() {
        // Triangle plane crossing the tet through its centroid.
        let tet = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        let tri = [
            Point3::new(-1.0, -1.0, 0.25),
            Point3::new(2.0, -1.0, 0.25),
            Point3::new(-1.0, 2.0, 0.25),
        ];
        assert!(tet_triangle_intersects(&tet, &tri));
    }

    #[test]
    fn sat_rejects_far_triangle() {
        let tet = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        let tri = [
            Point3::new(10.0, 10.0, 10.0),
            Point3::new(11.0, 10.0, 10.0),
            Point3::new(10.0, 11.0, 10.0),
        ];
        assert!(!tet_triangle_intersects(&tet, &tri));
    }

    #[test]
    fn sat_accepts_touching_contact() {
        let tet = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        // Shares exactly the tet vertex (1,0,0).
        let tri = [
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
        ];
        assert!(tet_triangle_intersects(&tet, &tri));
    }
}
