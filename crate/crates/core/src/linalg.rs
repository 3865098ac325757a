//! Small dense linear-algebra helpers shared by the other modules.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is rank deficient (pivot {pivot} has magnitude {magnitude:e})")]
    RankDeficient { pivot: usize, magnitude: f64 },
    #[error("symmetric matrix is numerically singular (eigenvalue ratio {ratio:e})")]
    Singular { ratio: f64 },
}

/// Householder QR of a tall matrix `M` (n x k, n >= k), kept in factored form.
///
/// `Q = H_0 H_1 ... H_{k-1}` with `H_i = I - beta_i v_i v_iᵗ`, where `v_i` is
/// supported on rows `i..n`.
#[derive(Debug, Clone)]
pub struct Householder {
    rows: usize,
    vectors: Vec<Vec<f64>>,
    betas: Vec<f64>,
    r: DMatrix<f64>,
}

impl Householder {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        assert!(rows >= cols, "Householder QR expects a tall matrix");
        let mut work = m.clone();
        let mut vectors = Vec::with_capacity(cols);
        let mut betas = Vec::with_capacity(cols);
        for k in 0..cols {
            let norm = (k..rows).map(|i| work[(i, k)].powi(2)).sum::<f64>().sqrt();
            let x0 = work[(k, k)];
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            let mut v: Vec<f64> = (k..rows).map(|i| work[(i, k)]).collect();
            v[0] -= alpha;
            let vv: f64 = v.iter().map(|t| t * t).sum();
            let beta = if vv > 0.0 { 2.0 / vv } else { 0.0 };
            for c in k..cols {
                let dot: f64 = v.iter().enumerate().map(|(i, vi)| vi * work[(k + i, c)]).sum();
                let s = beta * dot;
                for (i, vi) in v.iter().enumerate() {
                    work[(k + i, c)] -= s * vi;
                }
            }
            vectors.push(v);
            betas.push(beta);
        }
        let r = work.rows(0, cols).upper_triangle();
        Householder { rows, vectors, betas, r }
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Overwrites `x` with `Q x`.
    pub fn apply_q(&self, x: &mut [f64]) {
        for k in (0..self.vectors.len()).rev() {
            self.reflect(k, x);
        }
    }

    /// Overwrites `x` with `Qᵗ x`.
    pub fn apply_qt(&self, x: &mut [f64]) {
        for k in 0..self.vectors.len() {
            self.reflect(k, x);
        }
    }

    fn reflect(&self, k: usize, x: &mut [f64]) {
        let v = &self.vectors[k];
        let dot: f64 = v.iter().zip(&x[k..]).map(|(a, b)| a * b).sum();
        let s = self.betas[k] * dot;
        for (xi, vi) in x[k..].iter_mut().zip(v) {
            *xi -= s * vi;
        }
    }

    /// Columns `from..rows` of the full orthogonal factor.
    pub fn q_columns(&self, from: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, self.rows - from);
        let mut e = vec![0.0; self.rows];
        for (c, j) in (from..self.rows).enumerate() {
            e.iter_mut().for_each(|t| *t = 0.0);
            e[j] = 1.0;
            self.apply_q(&mut e);
            out.column_mut(c).copy_from_slice(&e);
        }
        out
    }

    /// Index and magnitude of the smallest diagonal entry of `R`.
    pub fn weakest_pivot(&self) -> (usize, f64) {
        (0..self.r.nrows())
            .map(|i| (i, self.r[(i, i)].abs()))
            .fold((0, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc })
    }
}

/// Orthonormal frame for the row space of `a` (m x n, rank m): returns `(Q, R)`
/// with `Aᵗ = Q R`, `Q` of size n x m.
pub fn row_space_frame(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>), LinalgError> {
    let qr = Householder::new(&a.transpose());
    check_full_rank(&qr, a)?;
    let m = a.nrows();
    let mut q = DMatrix::zeros(a.ncols(), m);
    let mut e = vec![0.0; a.ncols()];
    for j in 0..m {
        e.iter_mut().for_each(|t| *t = 0.0);
        e[j] = 1.0;
        qr.apply_q(&mut e);
        q.column_mut(j).copy_from_slice(&e);
    }
    Ok((q, qr.r().clone()))
}

/// Orthonormal basis (n x (n - m)) of the kernel of a full-row-rank `a`.
pub fn null_space(a: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    let qr = Householder::new(&a.transpose());
    check_full_rank(&qr, a)?;
    Ok(qr.q_columns(a.nrows()))
}

fn check_full_rank(qr: &Householder, a: &DMatrix<f64>) -> Result<(), LinalgError> {
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let (pivot, magnitude) = qr.weakest_pivot();
    if magnitude <= 1e-12 * scale {
        return Err(LinalgError::RankDeficient { pivot, magnitude });
    }
    Ok(())
}

/// Numerical rank from singular values, relative tolerance `1e-10`.
pub fn rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > 1e-10 * top).count()
}

/// Symmetric inverse square root of a symmetric positive definite matrix.
///
/// Fails when the smallest eigenvalue is `<= rel_floor` times the largest.
pub fn sym_inv_sqrt(g: &DMatrix<f64>, rel_floor: f64) -> Result<DMatrix<f64>, LinalgError> {
    let eig = g.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= rel_floor * max {
        return Err(LinalgError::Singular { ratio: min / max });
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let v = &eig.eigenvectors;
    let out = v * d * v.transpose();
    // symmetrize away roundoff
    Ok((&out + out.transpose()) * 0.5)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(g: &DMatrix<f64>) -> f64 {
    g.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Cosines of the principal angles between the column spans of two
/// orthonormal frames, in decreasing order.
pub fn principal_cosines(q1: &DMatrix<f64>, q2: &DMatrix<f64>) -> DVector<f64> {
    let c = q1.transpose() * q2;
    let mut sv = c.svd(false, false).singular_values;
    sv.as_mut_slice().sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Largest principal angle (radians) between the row spans of `a` and `b`.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64, LinalgError> {
    let (qa, _) = row_space_frame(a)?;
    let (qb, _) = row_space_frame(b)?;
    // the sine comes from the residual of projecting one frame on the other;
    // going through the cosines would lose half the digits near zero
    let residual = &qb - &qa * (qa.transpose() * &qb);
    let sin = residual.svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max);
    Ok(sin.min(1.0).asin())
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn householder_reconstructs_and_is_orthogonal() {
        let m = DMatrix::from_row_slice(5, 2, &[1.0, 2.0, 3.0, -1.0, 0.5, 4.0, 2.0, 2.0, -3.0, 1.0]);
        let qr = Householder::new(&m);
        let q = qr.q_columns(0);
        let qtq = q.transpose() * &q;
        assert!((qtq - DMatrix::identity(5, 5)).abs().max() < 1e-13);
        let mut r_full = DMatrix::zeros(5, 2);
        r_full.rows_mut(0, 2).copy_from(qr.r());
        assert!((q * r_full - m).abs().max() < 1e-13);
    }

    #[test]
    fn null_space_detects_rank_deficiency() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert!(matches!(null_space(&a), Err(LinalgError::RankDeficient { .. })));
    }

    #[test]
    fn inverse_sqrt_of_diagonal() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 0.25]));
        let s = sym_inv_sqrt(&g, 1e-14).unwrap();
        assert!((s[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((s[(1, 1)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn principal_angle_of_equal_spans_is_zero() {
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0, -1.0, -1.0]);
        assert!(max_principal_angle(&a, &b).unwrap() < 1e-12);
    }
}
