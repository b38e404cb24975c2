//! Nitsche's method on overlapping tetrahedral meshes in 3D.
//!
//! A background tetrahedral mesh of a domain is overlapped by an independent
//! tetrahedral mesh of a subdomain; the two discretizations are coupled
//! weakly across the overlap boundary with Nitsche-type interface terms.
//! The crate provides the full pipeline:
//!
//! * [`mesh`] — tetrahedral meshes, structured generators, rigid transforms,
//!   boundary extraction and a plain-text file format;
//! * [`geometry`] — convex clipping, tetrahedron/triangle predicates and
//!   ray casting primitives;
//! * [`bvh`] — axis-aligned bounding box trees, pairwise tree traversal and
//!   ray-crossing queries;
//! * [`overlap`] — the collision relation between the two meshes, cell
//!   classification, interface decomposition and cut-cell moments;
//! * [`quadrature`] — exact moment integrals on polyhedra via boundary
//!   reduction, and the quadrature rules derived from them;
//! * [`fem`] — P1 scalar (Poisson) and vector (linear elasticity) assembly of
//!   the coupled system, boundary conditions and error norms;
//! * [`linalg`] — CSR matrices and a Jacobi-preconditioned conjugate
//!   gradient solver;
//! * [`io`] — legacy-VTK and OFF output for external inspection.

pub mod bvh;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod overlap;
pub mod quadrature;

pub use error::{Error, Result};

/// Absolute geometric tolerance, applied to coordinates pre-scaled to unit
/// diameter. Coplanarity checks, vertex welding and degeneracy flags all
/// derive their working tolerance as `EPS_GEOM * scale`.
pub const EPS_GEOM: f64 = 1e-10;

/// Relative cut-volume threshold below which a cut cell is considered empty
/// and skipped during assembly.
pub const SMALL_CUT_THRESHOLD: f64 = 1e-15;
