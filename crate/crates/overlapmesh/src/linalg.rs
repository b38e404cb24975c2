//! Sparse symmetric matrices in compressed-row storage and a
//! Jacobi-preconditioned conjugate gradient solver.

use crate::error::{Error, Result};

/// Square sparse matrix, CSR layout with both triangles stored explicitly.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    dim: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// columns are sorted within each row.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::invalid(format!(
                    "triplet index ({r}, {c}) out of range for dimension {dim}"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_unstable_by_key(|t| (t.0, t.1));
        let mut row_counts = vec![0usize; dim + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut prev: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if prev == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_counts[r + 1] += 1;
                prev = Some((r, c));
            }
        }
        for r in 0..dim {
            row_counts[r + 1] += row_counts[r];
        }
        Ok(SparseMatrix {
            dim,
            row_offsets: row_counts,
            col_indices,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        (&self.col_indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// `y = A·x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[r] = acc;
        }
        y
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A_ij - A_ji|`, for symmetry audits.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(*c, r)).abs());
            }
        }
        worst
    }

    /// Rows whose stored entries are all zero get a unit diagonal; the
    /// matching right-hand side entry is zeroed. Returns the modified rows.
    pub fn ident_zeros(&mut self, rhs: &mut [f64]) -> Vec<usize> {
        assert_eq!(rhs.len(), self.dim);
        let mut modified = Vec::new();
        for r in 0..self.dim {
            let span = self.row_offsets[r]..self.row_offsets[r + 1];
            if self.values[span.clone()].iter().all(|&v| v == 0.0) {
                modified.push(r);
            }
        }
        if modified.is_empty() {
            return modified;
        }
        // Rebuild with unit diagonals on the empty rows.
        let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz() + modified.len());
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                triplets.push((r, *c, *v));
            }
        }
        for &r in &modified {
            triplets.push((r, r, 1.0));
            rhs[r] = 0.0;
        }
        *self = SparseMatrix::from_triplets(self.dim, &triplets).expect("indices already valid");
        modified
    }

    /// Symmetric Dirichlet elimination: for each constrained dof `d` with
    /// value `g`, the rhs absorbs `-g·column_d`, row and column `d` are
    /// zeroed, the diagonal becomes 1 and `rhs[d] = g`.
    pub fn apply_dirichlet(&mut self, rhs: &mut [f64], constraints: &[(usize, f64)]) -> Result<()> {
        assert_eq!(rhs.len(), self.dim);
        let mut value = vec![f64::NAN; self.dim];
        for &(d, g) in constraints {
            if d >= self.dim {
                return Err(Error::invalid(format!("constrained dof {d} out of range")));
            }
            if !value[d].is_nan() && value[d] != g {
                return Err(Error::invalid(format!(
                    "dof {d} constrained to both {} and {g}",
                    value[d]
                )));
            }
            value[d] = g;
        }
        let constrained = |d: usize| !value[d].is_nan();
        for r in 0..self.dim {
            if constrained(r) {
                continue;
            }
            let span = self.row_offsets[r]..self.row_offsets[r + 1];
            for k in span {
                let c = self.col_indices[k];
                if constrained(c) {
                    rhs[r] -= self.values[k] * value[c];
                    self.values[k] = 0.0;
                }
            }
        }
        for r in 0..self.dim {
            if !constrained(r) {
                continue;
            }
            let span = self.row_offsets[r]..self.row_offsets[r + 1];
            let mut saw_diagonal = false;
            for k in span {
                let c = self.col_indices[k];
                self.values[k] = if c == r {
                    saw_diagonal = true;
                    1.0
                } else {
                    0.0
                };
            }
            if !saw_diagonal {
                return Err(Error::InternalConsistency(format!(
                    "constrained dof {r} has no stored diagonal"
                )));
            }
            rhs[r] = value[r];
        }
        Ok(())
    }

    /// Coordinate-format text dump (`row col value` per line).
    pub fn to_coordinate_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                writeln!(out, "{r} {c} {v:.16e}").unwrap();
            }
        }
        out
    }
}

/// Preconditioner selection for [`cg_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
}

/// Convergence report of a CG solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradients for symmetric positive definite
/// systems. Returns when `‖b - Ax‖/‖b‖ <= tol` or after `max_iter`
/// iterations. Breakdown (`pᵀAp <= 0`) reports an indefinite matrix.
pub fn cg_solve(
    a: &SparseMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    preconditioner: Preconditioner,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    debug_assert!(
        a.asymmetry() <= 1e-10 * a.max_abs().max(1e-300),
        "cg_solve needs a symmetric matrix"
    );

    let inv_diag = match preconditioner {
        Preconditioner::None => None,
        Preconditioner::Jacobi => {
            let mut d = vec![0.0; n];
            for (r, slot) in d.iter_mut().enumerate() {
                let diag = a.get(r, r);
                if diag == 0.0 {
                    return Err(Error::invalid(format!(
                        "Jacobi preconditioner with zero diagonal in row {r}"
                    )));
                }
                *slot = 1.0 / diag;
            }
            Some(d)
        }
    };
    let apply_m = |r: &[f64]| -> Vec<f64> {
        match &inv_diag {
            None => r.to_vec(),
            Some(d) => r.iter().zip(d).map(|(ri, di)| ri * di).collect(),
        }
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();

    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                final_relative_residual: 0.0,
                converged: true,
            },
        ));
    }
    let mut r = b.to_vec();
    let mut z = apply_m(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = norm(&r) / b_norm;
    let mut iterations = 0;
    while rel > tol && iterations < max_iter {
        let ap = a.matvec(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::IndefiniteMatrix(format!(
                "pᵀAp = {pap} at iteration {iterations}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        rel = norm(&r) / b_norm;
        if rel <= tol {
            break;
        }
        z = apply_m(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok((
        x,
        SolveReport {
            iterations,
            final_relative_residual: rel,
            converged: rel <= tol,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_duplicates() {
        let m = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn empty_triplets_make_zero_matrix() {
        let m = SparseMatrix::from_triplets(3, &[]).unwrap();
        assert_eq!(m.nnz(), 0);
        assert_eq!(m.matvec(&[1.0, 2.0, 3.0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn out_of_range_triplet_is_rejected() {
        assert!(SparseMatrix::from_triplets(2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn identity_matvec() {
        let triplets: Vec<(usize, usize, f64)> = (0..5).map(|i| (i, i, 1.0)).collect();
        let m = SparseMatrix::from_triplets(5, &triplets).unwrap();
        let x = [0.3, -1.2, 4.5, 0.0, 2.25];
        assert_eq!(m.matvec(&x), x.to_vec());
    }

    #[test]
    fn cg_identity_converges_in_one_iteration() {
        let triplets: Vec<(usize, usize, f64)> = (0..4).map(|i| (i, i, 1.0)).collect();
        let a = SparseMatrix::from_triplets(4, &triplets).unwrap();
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let (x, report) = cg_solve(&a, &b, 1e-12, 100, Preconditioner::None).unwrap();
        assert_eq!(report.iterations, 1);
        assert!(report.converged);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn cg_two_by_two_hand_solved() {
        // A = [[4,1],[1,3]], b = (1,2); x = (1/11, 7/11).
        let a = SparseMatrix::from_triplets(
            2,
            &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)],
        )
        .unwrap();
        let (x, report) = cg_solve(&a, &[1.0, 2.0], 1e-12, 100, Preconditioner::Jacobi).unwrap();
        assert!(report.converged);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-11);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-11);
    }

    #[test]
    fn cg_recovers_constructed_solution() {
        // 1D Laplacian, b = A·1 so the solution is all ones.
        let n = 100;
        let mut triplets = Vec::new();
        for i in 0..n {
            triplets.push((i, i, 2.0));
            if i > 0 {
                triplets.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                triplets.push((i, i + 1, -1.0));
            }
        }
        let a = SparseMatrix::from_triplets(n, &triplets).unwrap();
        let b = a.matvec(&vec![1.0; n]);
        let (x, report) = cg_solve(&a, &b, 1e-12, 10 * n, Preconditioner::Jacobi).unwrap();
        assert!(report.converged);
        for xi in x {
            assert!((xi - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn cg_restart_is_a_fixed_point() {
        let a = SparseMatrix::from_triplets(
            2,
            &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)],
        )
        .unwrap();
        let b = [1.0, 2.0];
        let tol = 1e-10;
        let (x, _) = cg_solve(&a, &b, tol, 100, Preconditioner::Jacobi).unwrap();
        // Residual of the restarted problem b - A x is already below tol.
        let ax = a.matvec(&x);
        let res: f64 = b
            .iter()
            .zip(&ax)
            .map(|(bi, ai)| (bi - ai) * (bi - ai))
            .sum::<f64>()
            .sqrt();
        let bnorm = (b[0] * b[0] + b[1] * b[1]).sqrt();
        assert!(res / bnorm <= tol);
    }

    #[test]
    fn jacobi_zero_diagonal_is_rejected() {
        let a = SparseMatrix::from_triplets(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(matches!(
            cg_solve(&a, &[1.0, 1.0], 1e-10, 10, Preconditioner::Jacobi),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let a = SparseMatrix::from_triplets(2, &[(0, 0, -1.0), (1, 1, -1.0)]).unwrap();
        assert!(matches!(
            cg_solve(&a, &[1.0, 1.0], 1e-10, 10, Preconditioner::None),
            Err(Error::IndefiniteMatrix(_))
        ));
    }

    #[test]
    fn ident_zeros_examples() {
        let mut m = SparseMatrix::from_triplets(
            3,
            &[(0, 0, 2.0), (0, 2, 1.0), (2, 0, 1.0), (2, 2, 2.0), (1, 1, 0.0)],
        )
        .unwrap();
        let mut rhs = vec![5.0, 7.0, 9.0];
        let modified = m.ident_zeros(&mut rhs);
        assert_eq!(modified, vec![1]);
        assert_eq!(m.get(1, 1), 1.0);
        assert_eq!(rhs, vec![5.0, 0.0, 9.0]);

        // No empty rows: unchanged.
        let mut m = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let mut rhs = vec![1.0, 2.0];
        assert!(m.ident_zeros(&mut rhs).is_empty());
        assert_eq!(rhs, vec![1.0, 2.0]);
    }

    #[test]
    fn dirichlet_elimination_examples() {
        // 2x2 SPD system; constrain dof 0 to 2.0. Remaining equation:
        // 3 x1 = b1 - A10 * 2 = 2 - 2 => x1 = 0.
        let mut m = SparseMatrix::from_triplets(
            2,
            &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)],
        )
        .unwrap();
        let mut rhs = vec![1.0, 2.0];
        m.apply_dirichlet(&mut rhs, &[(0, 2.0)]).unwrap();
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(rhs, vec![2.0, 0.0]);
        assert!(m.asymmetry() < 1e-12);

        // Conflicting constraint values are rejected.
        let mut m2 = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let mut rhs2 = vec![0.0, 0.0];
        assert!(m2
            .apply_dirichlet(&mut rhs2, &[(0, 1.0), (0, 2.0)])
            .is_err());
    }

    #[test]
    fn constrain_everything_gives_exact_values() {
        let mut m = SparseMatrix::from_triplets(
            2,
            &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)],
        )
        .unwrap();
        let mut rhs = vec![1.0, 2.0];
        m.apply_dirichlet(&mut rhs, &[(0, 0.0), (1, 0.0)]).unwrap();
        let (x, _) = cg_solve(&m, &rhs, 1e-12, 10, Preconditioner::None).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
    }

    #[test]
    fn matvec_linearity() {
        let a = SparseMatrix::from_triplets(
            3,
            &[
                (0, 0, 2.0),
                (0, 2, -1.0),
                (1, 1, 3.0),
                (2, 0, -1.0),
                (2, 2, 5.0),
            ],
        )
        .unwrap();
        let u = [0.3, -0.7, 1.9];
        let v = [2.0, 0.1, -0.4];
        let alpha = 1.7;
        let lhs = a.matvec(
            &u.iter()
                .zip(&v)
                .map(|(ui, vi)| alpha * ui + vi)
                .collect::<Vec<_>>(),
        );
        let au = a.matvec(&u);
        let av = a.matvec(&v);
        for i in 0..3 {
            assert!((lhs[i] - (alpha * au[i] + av[i])).abs() < 1e-13);
        }
    }
}
