//! The constraint system `(A, b)` describing `K_n = {x >= 0 : Ax = b}`,
//! its validation, and the change to a representation with positive entries.

mod lp;

pub use lp::{lp_solve, LpError, LpResult, LpStatus, Sense};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::linalg;

/// Margin below which a strictly positive feasible point is not accepted.
pub const INTERIOR_MARGIN: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("A is {rows}x{cols} but b has {b_len} entries")]
    DimensionMismatch { rows: usize, cols: usize, b_len: usize },
    #[error("need more variables than constraints (m = {m}, n = {n})")]
    TooFewVariables { m: usize, n: usize },
    #[error("constraint data contains a non-finite value")]
    NonFinite,
    #[error("polytope is not compact (recession direction exists)")]
    NotCompact,
    #[error("polytope has no strictly positive point")]
    EmptyInterior,
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintSystem {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl ConstraintSystem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self, ModelError> {
        let (m, n) = a.shape();
        if b.len() != m {
            return Err(ModelError::DimensionMismatch { rows: m, cols: n, b_len: b.len() });
        }
        if m == 0 || m >= n {
            return Err(ModelError::TooFewVariables { m, n });
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite);
        }
        Ok(ConstraintSystem { a, b })
    }

    pub fn from_rows(rows: &[Vec<f64>], b: &[f64]) -> Result<Self, ModelError> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(ModelError::DimensionMismatch { rows: m, cols: n, b_len: b.len() });
        }
        let a = DMatrix::from_row_iterator(m, n, rows.iter().flatten().cloned());
        Self::new(a, DVector::from_row_slice(b))
    }

    /// `c (x_1 + ... + x_n) = b`, the symmetric simplex.
    pub fn simplex(n: usize, c: f64, b: f64) -> Result<Self, ModelError> {
        Self::new(DMatrix::from_element(1, n, c), DVector::from_element(1, b))
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// All entries of `A` and `b` strictly positive.
    pub fn is_positive(&self) -> bool {
        self.a.iter().chain(self.b.iter()).all(|v| *v > 0.0)
    }

    /// `‖Ax − b‖∞`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        (&self.a * x - &self.b).amax()
    }

    /// The equivalent representation `(M A, M b)`.
    pub fn transformed(&self, mix: &DMatrix<f64>) -> Result<Self, ModelError> {
        Self::new(mix * &self.a, mix * &self.b)
    }

    /// `Some(c)` when the system is a single row with all entries equal to `c`.
    pub fn symmetric_simplex_coefficient(&self) -> Option<f64> {
        if self.m() != 1 {
            return None;
        }
        let c = self.a[(0, 0)];
        let equal = self.a.iter().all(|v| (v - c).abs() <= 1e-14 * c.abs());
        (equal && c > 0.0 && self.b[0] > 0.0).then_some(c)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnNote {
    pub column: usize,
    pub rank_without: usize,
    pub removal_safe: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub rank_ok: bool,
    pub feasible: bool,
    pub compact: bool,
    pub interior_nonempty: bool,
    pub column_removal_safe: bool,
    /// Optimal `t` in `max t s.t. Ax = b, x_j >= t` (capped at 1).
    pub interior_margin: f64,
    pub interior_tolerance: f64,
    pub columns: Vec<ColumnNote>,
}

impl ValidationReport {
    pub fn all_ok(&self) -> bool {
        self.rank_ok && self.feasible && self.compact && self.interior_nonempty && self.column_removal_safe
    }
}

/// Runs the rank, compactness, interiority and column-removal checks.
pub fn validate(cs: &ConstraintSystem) -> Result<ValidationReport, ModelError> {
    let (m, n) = (cs.m(), cs.n());
    let rank = linalg::rank(cs.a());
    let ones = DVector::from_element(n, 1.0);
    let total = lp_solve(&ones, cs.a(), cs.b(), Sense::Maximize)?;
    let feasible = total.status != LpStatus::Infeasible;
    let compact = total.status != LpStatus::Unbounded;
    let interior_margin = if feasible { interior_margin(cs)? } else { f64::NEG_INFINITY };
    let columns: Vec<ColumnNote> = (0..n)
        .map(|j| {
            let rank_without = linalg::rank(&cs.a().clone().remove_column(j));
            ColumnNote { column: j, rank_without, removal_safe: rank_without == rank }
        })
        .collect();
    Ok(ValidationReport {
        rank_ok: rank == m,
        feasible,
        compact,
        interior_nonempty: interior_margin > INTERIOR_MARGIN,
        column_removal_safe: columns.iter().all(|c| c.removal_safe),
        interior_margin,
        interior_tolerance: INTERIOR_MARGIN,
        columns,
    })
}

/// `max t` subject to `A z + (A 1) t = b`, `t + s = 1`, `z, t, s >= 0`.
fn interior_margin(cs: &ConstraintSystem) -> Result<f64, ModelError> {
    let (m, n) = (cs.m(), cs.n());
    let mut a = DMatrix::zeros(m + 1, n + 2);
    a.view_mut((0, 0), (m, n)).copy_from(cs.a());
    let row_sums = cs.a().column_sum();
    a.view_mut((0, n), (m, 1)).copy_from(&row_sums);
    a[(m, n)] = 1.0;
    a[(m, n + 1)] = 1.0;
    let mut b = DVector::zeros(m + 1);
    b.rows_mut(0, m).copy_from(cs.b());
    b[m] = 1.0;
    let mut c = DVector::zeros(n + 2);
    c[n] = 1.0;
    let r = lp_solve(&c, &a, &b, Sense::Maximize)?;
    Ok(match r.status {
        LpStatus::Optimal => r.objective,
        LpStatus::Infeasible => f64::NEG_INFINITY,
        LpStatus::Unbounded => 1.0,
    })
}

/// Range `[min x_j, max x_j]` of coordinate `j` over `K_n`.
pub fn coordinate_range(cs: &ConstraintSystem, j: usize) -> Result<(f64, f64), ModelError> {
    let mut c = DVector::zeros(cs.n());
    c[j] = 1.0;
    let hi = lp_solve(&c, cs.a(), cs.b(), Sense::Maximize)?;
    let lo = lp_solve(&c, cs.a(), cs.b(), Sense::Minimize)?;
    match (hi.status, lo.status) {
        (LpStatus::Optimal, LpStatus::Optimal) => Ok((lo.objective, hi.objective)),
        (LpStatus::Infeasible, _) | (_, LpStatus::Infeasible) => Err(ModelError::EmptyInterior),
        _ => Err(ModelError::NotCompact),
    }
}

/// Rewrites `(A, b)` into an equivalent representation with strictly
/// positive entries.
///
/// One row is replaced by `yᵗA, yᵗb` where `y` solves the dual of
/// `max 1ᵗx`, so `yᵗA >= 1`; the other rows then receive the smallest integer
/// multiple of it that makes them positive.
pub fn positivize(cs: &ConstraintSystem) -> Result<ConstraintSystem, ModelError> {
    let report = validate(cs)?;
    if !report.compact {
        return Err(ModelError::NotCompact);
    }
    if !report.feasible || !report.interior_nonempty {
        return Err(ModelError::EmptyInterior);
    }
    if cs.is_positive() {
        return Ok(cs.clone());
    }
    let ones = DVector::from_element(cs.n(), 1.0);
    let lp = lp_solve(&ones, cs.a(), cs.b(), Sense::Maximize)?;
    let y = &lp.duals;
    let pivot_row = y
        .iter()
        .position(|v| v.abs() > 1e-9 * y.amax())
        .ok_or(ModelError::NotCompact)?;
    let lead: DVector<f64> = cs.a().transpose() * y;
    let lead_rhs = y.dot(cs.b());
    if lead.min() <= 0.0 || lead_rhs <= 0.0 {
        return Err(ModelError::EmptyInterior);
    }

    let mut a = cs.a().clone();
    let mut b = cs.b().clone();
    a.row_mut(pivot_row).copy_from(&lead.transpose());
    b[pivot_row] = lead_rhs;
    const FLOOR: f64 = 1e-12;
    for i in (0..cs.m()).filter(|&i| i != pivot_row) {
        let mut k = 0.0f64;
        for j in 0..cs.n() {
            if a[(i, j)] <= FLOOR {
                k = k.max(((FLOOR - a[(i, j)]) / lead[j]).floor() + 1.0);
            }
        }
        if b[i] <= FLOOR {
            k = k.max(((FLOOR - b[i]) / lead_rhs).floor() + 1.0);
        }
        if k > 0.0 {
            let shifted = a.row(i) + lead.transpose() * k;
            a.row_mut(i).copy_from(&shifted);
            b[i] += k * lead_rhs;
        }
    }
    ConstraintSystem::new(a, b)
}
