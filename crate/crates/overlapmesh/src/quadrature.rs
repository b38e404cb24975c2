//! Moment integrals over polyhedra and the quadrature rules derived from
//! them.
//!
//! The moment integral `I_α(P) = ∫_P x^α dx` is evaluated from the boundary
//! representation alone, in three steps: the divergence theorem turns the
//! volume integral into a sum of face integrals of monomials, each face is
//! parametrized over the coordinate plane with the largest normal component,
//! and Green's theorem reduces the projected polygon integral to closed-form
//! line integrals of one-dimensional polynomials over the face edges. The
//! cost per moment is linear in the number of faces.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{ConvexPolyhedron, PlanarPolygon};
use crate::EPS_GEOM;

/// Exponent triple of a monomial `x^α = x^α0 y^α1 z^α2`.
pub type MultiIndex = [usize; 3];

/// Highest supported total moment degree.
pub const MAX_MOMENT_DEGREE: usize = 4;

/// All multi-indices with `|α| <= degree`, in lexicographic order.
pub fn multi_indices(degree: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for a in 0..=degree {
        for b in 0..=(degree - a) {
            for c in 0..=(degree - a - b) {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Monomial moments `I_α(P)` of a polyhedron up to a total degree.
#[derive(Debug, Clone)]
pub struct MomentSet {
    degree: usize,
    values: BTreeMap<MultiIndex, f64>,
}

impl MomentSet {
    /// Set of all-zero moments (empty region).
    pub fn zero(degree: usize) -> Self {
        let values = multi_indices(degree).into_iter().map(|m| (m, 0.0)).collect();
        MomentSet { degree, values }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn get(&self, alpha: MultiIndex) -> Option<f64> {
        self.values.get(&alpha).copied()
    }

    /// `I_(0,0,0)`: the measure of the region.
    pub fn volume(&self) -> f64 {
        self.values[&[0, 0, 0]]
    }

    /// First moments divided by the volume; `None` for vanishing volume.
    pub fn centroid(&self) -> Option<Point3<f64>> {
        let v = self.volume();
        if v.abs() < 1e-300 {
            return None;
        }
        Some(Point3::new(
            self.values[&[1, 0, 0]] / v,
            self.values[&[0, 1, 0]] / v,
            self.values[&[0, 0, 1]] / v,
        ))
    }

    /// Componentwise sum, for additive decompositions.
    pub fn add_assign(&mut self, other: &MomentSet) {
        assert_eq!(self.degree, other.degree, "moment degree mismatch");
        for (k, v) in &other.values {
            *self.values.get_mut(k).unwrap() += v;
        }
    }

    /// Componentwise difference (`self - other`).
    pub fn sub_assign(&mut self, other: &MomentSet) {
        assert_eq!(self.degree, other.degree, "moment degree mismatch");
        for (k, v) in &other.values {
            *self.values.get_mut(k).unwrap() -= v;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &f64)> {
        self.values.iter()
    }
}

/// Moments of a closed convex polyhedron up to `degree <= 4`.
///
/// Empty polyhedra give all-zero moments.
pub fn polyhedron_moments(poly: &ConvexPolyhedron, degree: usize) -> Result<MomentSet> {
    if degree > MAX_MOMENT_DEGREE {
        return Err(Error::invalid(format!(
            "moment degree {degree} exceeds the supported maximum {MAX_MOMENT_DEGREE}"
        )));
    }
    let mut moments = MomentSet::zero(degree);
    if poly.is_empty() {
        return Ok(moments);
    }
    for face in &poly.faces {
        accumulate_face(&mut moments, face, degree)?;
    }
    Ok(moments)
}

fn accumulate_face(moments: &mut MomentSet, face: &PlanarPolygon, degree: usize) -> Result<()> {
    let n = face.normal;
    if n.norm() < 0.5 {
        return Err(Error::degenerate("face with vanishing normal"));
    }
    let axis = largest_axis(&n);
    // Face-surface integrals are shared between several (α, i) pairs.
    let mut face_cache: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    for alpha in multi_indices(degree) {
        let mut contribution = 0.0;
        for i in 0..3 {
            if n[i] == 0.0 {
                continue;
            }
            let mut beta = alpha;
            beta[i] += 1;
            let surface = match face_cache.get(&beta) {
                Some(v) => *v,
                None => {
                    let v = face_surface_moment(face, beta, axis)?;
                    face_cache.insert(beta, v);
                    v
                }
            };
            contribution += n[i] * surface / (3.0 * (alpha[i] + 1) as f64);
        }
        *moments.values.get_mut(&alpha).unwrap() += contribution;
    }
    Ok(())
}

fn largest_axis(n: &Vector3<f64>) -> usize {
    let mut axis = 0;
    for c in 1..3 {
        if n[c].abs() > n[axis].abs() {
            axis = c;
        }
    }
    axis
}

/// Surface integral `∫_F x^β ds` of a monomial over a planar face, using
/// the orientation-preserving projection with `axis` as the elimination
/// direction (`normal[axis]` must not vanish).
///
/// Exposed mainly so the projection-axis independence of the reduction can
/// be verified against all admissible axes.
pub fn face_surface_moment(face: &PlanarPolygon, beta: MultiIndex, axis: usize) -> Result<f64> {
    let n = face.normal;
    let n_z = n[axis];
    if n_z == 0.0 {
        return Err(Error::invalid(
            "projection axis with vanishing normal component",
        ));
    }
    // Cyclic (orientation-preserving) permutation putting `axis` last.
    let (ix, iy, iz) = match axis {
        2 => (0, 1, 2),
        0 => (1, 2, 0),
        1 => (2, 0, 1),
        _ => unreachable!(),
    };
    // Plane offset averaged over the loop for robustness to roundoff.
    let d = face
        .vertices
        .iter()
        .map(|v| n.dot(&v.coords))
        .sum::<f64>()
        / face.vertices.len() as f64;
    // Z = h(X, Y) on the face.
    let z0 = d / n_z;
    let zx = -n[ix] / n_z;
    let zy = -n[iy] / n_z;

    // Projected integrand q(X, Y) = X^a Y^b h(X, Y)^c.
    let (a, b, c) = (beta[ix], beta[iy], beta[iz]);
    let mut q = Poly2::monomial(a, b);
    let affine = Poly2::affine(z0, zx, zy);
    for _ in 0..c {
        q = q.mul(&affine);
    }
    // Green's theorem with M = ∫ q dX: ∫∫_R q dA = ∮ M dY.
    let m = q.antiderivative_x();
    let mut sum = 0.0;
    let k = face.vertices.len();
    for e in 0..k {
        let p0 = face.vertices[e];
        let p1 = face.vertices[(e + 1) % k];
        let (x0, y0) = (p0[ix], p0[iy]);
        let (x1, y1) = (p1[ix], p1[iy]);
        let dy = y1 - y0;
        if dy == 0.0 {
            continue;
        }
        sum += dy * m.integrate_on_segment(x0, x1 - x0, y0, dy);
    }
    // The signed division folds the projected loop orientation into the
    // 1/|n_Z| area scaling.
    Ok(sum / n_z)
}

/// Dense bivariate polynomial `Σ c[i][j] X^i Y^j`.
struct Poly2 {
    coeff: Vec<Vec<f64>>,
}

impl Poly2 {
    fn monomial(a: usize, b: usize) -> Self {
        let mut coeff = vec![vec![0.0; b + 1]; a + 1];
        coeff[a][b] = 1.0;
        Poly2 { coeff }
    }

    fn affine(c0: f64, cx: f64, cy: f64) -> Self {
        Poly2 {
            coeff: vec![vec![c0, cy], vec![cx, 0.0]],
        }
    }

    fn mul(&self, other: &Poly2) -> Self {
        let (ra, ca) = (self.coeff.len(), self.coeff[0].len());
        let (rb, cb) = (other.coeff.len(), other.coeff[0].len());
        let mut coeff = vec![vec![0.0; ca + cb - 1]; ra + rb - 1];
        for i in 0..ra {
            for j in 0..ca {
                let s = self.coeff[i][j];
                if s == 0.0 {
                    continue;
                }
                for k in 0..rb {
                    for l in 0..cb {
                        coeff[i + k][j + l] += s * other.coeff[k][l];
                    }
                }
            }
        }
        Poly2 { coeff }
    }

    /// `∫ self dX` with zero constant of integration.
    fn antiderivative_x(&self) -> Self {
        let rows = self.coeff.len();
        let cols = self.coeff[0].len();
        let mut coeff = vec![vec![0.0; cols]; rows + 1];
        for i in 0..rows {
            for j in 0..cols {
                coeff[i + 1][j] = self.coeff[i][j] / (i + 1) as f64;
            }
        }
        Poly2 { coeff }
    }

    /// Exact `∫_0^1 self(x0 + dx·t, y0 + dy·t) dt` by univariate expansion.
    fn integrate_on_segment(&self, x0: f64, dx: f64, y0: f64, dy: f64) -> f64 {
        let rows = self.coeff.len();
        let cols = self.coeff[0].len();
        // Powers of the two affine segment parametrizations as 1D polys.
        let xp = affine_powers(x0, dx, rows - 1);
        let yp = affine_powers(y0, dy, cols - 1);
        let mut t_poly = vec![0.0; rows + cols - 1];
        for i in 0..rows {
            for j in 0..cols {
                let c = self.coeff[i][j];
                if c == 0.0 {
                    continue;
                }
                for (p, xv) in xp[i].iter().enumerate() {
                    if *xv == 0.0 {
                        continue;
                    }
                    for (q, yv) in yp[j].iter().enumerate() {
                        t_poly[p + q] += c * xv * yv;
                    }
                }
            }
        }
        t_poly
            .iter()
            .enumerate()
            .map(|(k, v)| v / (k + 1) as f64)
            .sum()
    }
}

/// `(c0 + c1·t)^k` for `k = 0..=max_pow`, as coefficient vectors in `t`.
fn affine_powers(c0: f64, c1: f64, max_pow: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(max_pow + 1);
    out.push(vec![1.0]);
    for k in 1..=max_pow {
        let prev = &out[k - 1];
        let mut next = vec![0.0; k + 1];
        for (i, p) in prev.iter().enumerate() {
            next[i] += p * c0;
            next[i + 1] += p * c1;
        }
        out.push(next);
    }
    out
}

/// Point-weight quadrature rule on some integration domain.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point3<f64>>,
    pub weights: Vec<f64>,
    /// Highest polynomial degree integrated exactly.
    pub exact_degree: usize,
}

impl QuadratureRule {
    pub fn empty() -> Self {
        QuadratureRule {
            points: Vec::new(),
            weights: Vec::new(),
            exact_degree: 1,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&Point3<f64>) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }
}

/// One-point rule from the zeroth and first moments: point at the
/// barycenter, weight equal to the measure. Exact for degree-1 integrands.
pub fn barycenter_rule(volume: f64, centroid: Point3<f64>) -> Result<QuadratureRule> {
    if volume <= 0.0 {
        return Err(Error::invalid(format!(
            "barycenter rule needs positive measure, got {volume}"
        )));
    }
    Ok(QuadratureRule {
        points: vec![centroid],
        weights: vec![volume],
        exact_degree: 1,
    })
}

/// Area, centroid and one-point rule of a planar polygon, computed with the
/// same projection reduction as the volume moments (`β = 0` and `β = e_i`
/// surface integrals).
///
/// Degenerate polygons (area below the tolerance scale) yield an empty rule.
pub fn polygon_area_centroid(polygon: &PlanarPolygon) -> Result<(f64, Point3<f64>, QuadratureRule)> {
    let axis = largest_axis(&polygon.normal);
    let area = face_surface_moment(polygon, [0, 0, 0], axis)?;
    let diam = polygon.diameter();
    if area <= EPS_GEOM * diam * diam {
        return Ok((area, polygon.vertices[0], QuadratureRule::empty()));
    }
    let mut centroid = Point3::origin();
    for i in 0..3 {
        let mut beta = [0usize; 3];
        beta[i] = 1;
        centroid[i] = face_surface_moment(polygon, beta, axis)? / area;
    }
    let rule = QuadratureRule {
        points: vec![centroid],
        weights: vec![area],
        exact_degree: 1,
    };
    Ok((area, centroid, rule))
}

/// Classical symmetric rules on the reference tetrahedron
/// `(0,0,0), (1,0,0), (0,1,0), (0,0,1)` (volume 1/6).
///
/// Supported exactness degrees: 1 (one point), 2 (four points) and
/// 4 (fourteen points, all weights positive).
pub fn tet_rule(exact_degree: usize) -> Result<QuadratureRule> {
    let vol = 1.0 / 6.0;
    // Barycentric orbit -> Cartesian points on the reference tet.
    let bary = |l: [f64; 4]| Point3::new(l[1], l[2], l[3]);
    match exact_degree {
        1 => Ok(QuadratureRule {
            points: vec![Point3::new(0.25, 0.25, 0.25)],
            weights: vec![vol],
            exact_degree: 1,
        }),
        2 => {
            let a = 0.585_410_196_624_968_5;
            let b = 0.138_196_601_125_010_5;
            let points = vec![
                bary([a, b, b, b]),
                bary([b, a, b, b]),
                bary([b, b, a, b]),
                bary([b, b, b, a]),
            ];
            Ok(QuadratureRule {
                points,
                weights: vec![vol / 4.0; 4],
                exact_degree: 2,
            })
        }
        4 => {
            let mut points = Vec::with_capacity(14);
            let mut weights = Vec::with_capacity(14);
            let mut orbit4 = |a: f64, w: f64| {
                let b = (1.0 - a) / 3.0;
                for k in 0..4 {
                    let mut l = [b; 4];
                    l[k] = a;
                    points.push(bary(l));
                    weights.push(w * vol);
                }
            };
            orbit4(0.067_342_242_210_098_3, 0.112_687_925_718_015_9);
            orbit4(0.721_794_249_067_326_4, 0.073_493_043_116_361_9);
            let c = 0.454_496_295_874_350_6;
            let d = 0.5 - c;
            let w6 = 0.042_546_020_777_081_2;
            for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
                let mut l = [d; 4];
                l[i] = c;
                l[j] = c;
                points.push(bary(l));
                weights.push(w6 * vol);
            }
            Ok(QuadratureRule {
                points,
                weights,
                exact_degree: 4,
            })
        }
        other => Err(Error::invalid(format!(
            "unsupported tetrahedron rule degree {other} (supported: 1, 2, 4)"
        ))),
    }
}

/// Maps a reference-tetrahedron rule to a physical tetrahedron.
pub fn map_rule_to_tet(rule: &QuadratureRule, tet: &[Point3<f64>; 4]) -> QuadratureRule {
    let b = nalgebra::Matrix3::from_columns(&[tet[1] - tet[0], tet[2] - tet[0], tet[3] - tet[0]]);
    let det = b.determinant().abs();
    QuadratureRule {
        points: rule
            .points
            .iter()
            .map(|p| tet[0] + b * p.coords)
            .collect(),
        weights: rule.weights.iter().map(|w| w * det).collect(),
        exact_degree: rule.exact_degree,
    }
}

/// Integrates a polynomial given by monomial coefficients against a moment
/// set: `∫_P Σ f_α x^α dx = Σ f_α I_α(P)`.
pub fn moment_integrate(coeffs: &BTreeMap<MultiIndex, f64>, moments: &MomentSet) -> Result<f64> {
    let mut acc = 0.0;
    for (alpha, f_alpha) in coeffs {
        let m = moments
            .get(*alpha)
            .ok_or_else(|| Error::invalid(format!("moment {alpha:?} not available")))?;
        acc += f_alpha * m;
    }
    Ok(acc)
}

/// Key of a cached rule: either a cut cell of the background mesh or an
/// interface facet part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CacheKey {
    CutCell(usize),
    FacetPart(usize),
}

/// Per-entity quadrature rule cache with a populate-then-freeze contract:
/// single-writer population, then read-only sharing.
#[derive(Debug, Default)]
pub struct QuadratureCache {
    rules: HashMap<CacheKey, QuadratureRule>,
    frozen: bool,
}

impl QuadratureCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: CacheKey, rule: QuadratureRule) {
        assert!(!self.frozen, "quadrature cache is frozen");
        self.rules.insert(key, rule);
    }

    pub fn get_or_insert_with(
        &mut self,
        key: CacheKey,
        make: impl FnOnce() -> QuadratureRule,
    ) -> &QuadratureRule {
        assert!(!self.frozen, "quadrature cache is frozen");
        self.rules.entry(key).or_insert_with(make)
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn get(&self, key: CacheKey) -> Option<&QuadratureRule> {
        self.rules.get(&key)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}
