//! OFF-format dumps of clipped geometry for external viewers.

use std::fmt::Write as _;

use nalgebra::Point3;

use crate::geometry::{ConvexPolyhedron, PlanarPolygon};
use crate::EPS_GEOM;

struct VertexPool {
    points: Vec<Point3<f64>>,
    tol: f64,
}

impl VertexPool {
    fn new(tol: f64) -> Self {
        VertexPool {
            points: Vec::new(),
            tol,
        }
    }

    fn index_of(&mut self, p: &Point3<f64>) -> usize {
        if let Some(i) = self
            .points
            .iter()
            .position(|q| (q - p).norm() <= self.tol)
        {
            return i;
        }
        self.points.push(*p);
        self.points.len() - 1
    }
}

fn off_from_faces<'a>(faces: impl Iterator<Item = &'a PlanarPolygon>, tol: f64) -> String {
    let mut pool = VertexPool::new(tol);
    let mut face_indices: Vec<Vec<usize>> = Vec::new();
    for face in faces {
        face_indices.push(face.vertices.iter().map(|v| pool.index_of(v)).collect());
    }
    let mut out = String::from("OFF\n");
    writeln!(out, "{} {} 0", pool.points.len(), face_indices.len()).unwrap();
    for p in &pool.points {
        writeln!(out, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z).unwrap();
    }
    for f in &face_indices {
        write!(out, "{}", f.len()).unwrap();
        for i in f {
            write!(out, " {i}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Single polyhedron with welded shared vertices.
pub fn polyhedron_to_off(poly: &ConvexPolyhedron) -> String {
    let tol = 10.0 * EPS_GEOM * poly.diameter().max(1e-300);
    off_from_faces(poly.faces.iter(), tol)
}

/// Single polygon as a one-face OFF object.
pub fn polygon_to_off(polygon: &PlanarPolygon) -> String {
    off_from_faces(std::iter::once(polygon), 0.0)
}

/// Several polygons (e.g. all interface facet parts) in one OFF object.
pub fn polygons_to_off<'a>(polygons: impl Iterator<Item = &'a PlanarPolygon>) -> String {
    off_from_faces(polygons, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;

    #[test]
    fn cube_off_header() {
        let poly = ConvexPolyhedron::from_aabb(&Aabb::new(
            Point3::origin(),
            Point3::new(1.0, 1.0, 1.0),
        ));
        let text = polyhedron_to_off(&poly);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("OFF"));
        assert_eq!(lines.next(), Some("8 6 0"));
        assert_eq!(text.lines().count(), 2 + 8 + 6);
    }
}
