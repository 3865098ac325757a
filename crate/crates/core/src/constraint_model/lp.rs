//! Dense two-phase revised simplex with Bland's anti-cycling rule.
//!
//! Solves `max / min cᵗx  s.t.  A x = b, x >= 0` for small dense problems.
//! The basis matrix is refactorized from scratch at every pivot; problems
//! here have a handful of rows, so clarity wins over update formulas.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpResult {
    pub status: LpStatus,
    /// Primal point. For `Unbounded` this is the last basic feasible point,
    /// for `Infeasible` it is empty.
    pub x: DVector<f64>,
    pub objective: f64,
    /// Row multipliers with `bᵗy = objective` at optimality; `Aᵗy >= c` when
    /// maximizing and `Aᵗy <= c` when minimizing.
    pub duals: DVector<f64>,
    /// Recession direction (`A d = 0`, `d >= 0`, `cᵗd` improving) when unbounded.
    pub ray: Option<DVector<f64>>,
    pub iterations: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: A is {rows}x{cols}, b has {b_len} entries, c has {c_len}")]
    DimensionMismatch { rows: usize, cols: usize, b_len: usize, c_len: usize },
    #[error("basis matrix became numerically singular at iteration {iteration}")]
    SingularBasis { iteration: usize },
    #[error("simplex exceeded {0} iterations")]
    IterationLimit(usize),
}

const PIVOT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;

enum Outcome {
    Optimal,
    Unbounded { entering: usize, direction: DVector<f64> },
}

struct Tableau {
    cols: DMatrix<f64>,
    rhs: DVector<f64>,
    basis: Vec<usize>,
    iterations: usize,
    limit: usize,
}

impl Tableau {
    fn basis_matrix(&self) -> DMatrix<f64> {
        self.cols.select_columns(self.basis.iter())
    }

    fn solve(&self, bm: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>, LpError> {
        bm.clone()
            .lu()
            .solve(rhs)
            .filter(|v| v.iter().all(|t| t.is_finite()))
            .ok_or(LpError::SingularBasis { iteration: self.iterations })
    }

    fn basic_values(&self) -> Result<DVector<f64>, LpError> {
        self.solve(&self.basis_matrix(), &self.rhs)
    }

    fn duals(&self, cost: &[f64]) -> Result<DVector<f64>, LpError> {
        let cb = DVector::from_iterator(self.basis.len(), self.basis.iter().map(|&j| cost[j]));
        self.solve(&self.basis_matrix().transpose(), &cb)
    }

    /// Runs primal simplex iterations on `cost` (minimization) letting only
    /// columns with `allowed[j]` enter the basis.
    fn run(&mut self, cost: &[f64], allowed: &[bool]) -> Result<Outcome, LpError> {
        let scale = cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        loop {
            if self.iterations >= self.limit {
                return Err(LpError::IterationLimit(self.limit));
            }
            let bm = self.basis_matrix();
            let xb = self.solve(&bm, &self.rhs)?;
            let y = self.duals(cost)?;
            // Bland: smallest eligible index with negative reduced cost
            let entering = (0..self.cols.ncols()).find(|&j| {
                allowed[j]
                    && !self.basis.contains(&j)
                    && cost[j] - self.cols.column(j).dot(&y) < -PIVOT_TOL * scale
            });
            let Some(j) = entering else {
                return Ok(Outcome::Optimal);
            };
            let u = self.solve(&bm, &self.cols.column(j).into_owned())?;
            let mut leave: Option<(usize, f64)> = None;
            for (r, &ur) in u.iter().enumerate() {
                if ur <= PIVOT_TOL {
                    continue;
                }
                let ratio = xb[r].max(0.0) / ur;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((best, best_ratio)) => {
                        let tie = (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio.abs());
                        if ratio < best_ratio && !tie
                            || tie && self.basis[r] < self.basis[best]
                        {
                            Some((r, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Ok(Outcome::Unbounded { entering: j, direction: u });
            };
            self.basis[r] = j;
            self.iterations += 1;
        }
    }
}

pub fn lp_solve(
    c: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    sense: Sense,
) -> Result<LpResult, LpError> {
    let (m, n) = a.shape();
    if b.len() != m || c.len() != n {
        return Err(LpError::DimensionMismatch { rows: m, cols: n, b_len: b.len(), c_len: c.len() });
    }
    let signs: Vec<f64> = b.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut cols = DMatrix::zeros(m, n + m);
    for i in 0..m {
        for j in 0..n {
            cols[(i, j)] = signs[i] * a[(i, j)];
        }
        cols[(i, n + i)] = 1.0;
    }
    let rhs = DVector::from_iterator(m, (0..m).map(|i| signs[i] * b[i]));
    let mut tab = Tableau {
        cols,
        rhs,
        basis: (n..n + m).collect(),
        iterations: 0,
        limit: 50 * (n + m) + 1000,
    };

    // phase I: minimize the sum of artificials
    let phase1: Vec<f64> = (0..n + m).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    let originals: Vec<bool> = (0..n + m).map(|j| j < n).collect();
    tab.run(&phase1, &originals)?;
    let xb = tab.basic_values()?;
    let infeasibility: f64 = tab
        .basis
        .iter()
        .zip(xb.iter())
        .filter(|(j, _)| **j >= n)
        .map(|(_, v)| v.max(0.0))
        .sum();
    let b_scale = 1.0 + b.amax();
    if infeasibility > FEAS_TOL * b_scale {
        return Ok(LpResult {
            status: LpStatus::Infeasible,
            x: DVector::zeros(0),
            objective: f64::NAN,
            duals: DVector::zeros(m),
            ray: None,
            iterations: tab.iterations,
        });
    }
    drive_out_artificials(&mut tab, n)?;

    // phase II
    let flip = if sense == Sense::Maximize { -1.0 } else { 1.0 };
    let cost: Vec<f64> = (0..n + m).map(|j| if j < n { flip * c[j] } else { 0.0 }).collect();
    let outcome = tab.run(&cost, &originals)?;
    let xb = tab.basic_values()?;
    let mut x = DVector::zeros(n);
    for (r, &j) in tab.basis.iter().enumerate() {
        if j < n {
            x[j] = xb[r].max(0.0);
        }
    }
    match outcome {
        Outcome::Optimal => {
            let y = tab.duals(&cost)?;
            let duals = DVector::from_iterator(m, (0..m).map(|i| flip * signs[i] * y[i]));
            Ok(LpResult {
                status: LpStatus::Optimal,
                objective: c.dot(&x),
                x,
                duals,
                ray: None,
                iterations: tab.iterations,
            })
        }
        Outcome::Unbounded { entering, direction } => {
            let mut ray = DVector::zeros(n);
            ray[entering] = 1.0;
            for (r, &j) in tab.basis.iter().enumerate() {
                if j < n {
                    ray[j] = -direction[r];
                }
            }
            Ok(LpResult {
                status: LpStatus::Unbounded,
                objective: if sense == Sense::Maximize { f64::INFINITY } else { f64::NEG_INFINITY },
                x,
                duals: DVector::zeros(m),
                ray: Some(ray),
                iterations: tab.iterations,
            })
        }
    }
}

/// Pivots zero-valued artificials out of the basis where possible. An
/// artificial that cannot leave marks a redundant row; it stays basic at zero.
fn drive_out_artificials(tab: &mut Tableau, n: usize) -> Result<(), LpError> {
    for r in 0..tab.basis.len() {
        if tab.basis[r] < n {
            continue;
        }
        let bm = tab.basis_matrix();
        let mut e = DVector::zeros(tab.basis.len());
        e[r] = 1.0;
        // row r of B^{-1}
        let row = tab.solve(&bm.transpose(), &e)?;
        let candidate = (0..n)
            .filter(|j| !tab.basis.contains(j))
            .map(|j| (j, tab.cols.column(j).dot(&row)))
            .filter(|(_, v)| v.abs() > 1e-9)
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap());
        if let Some((j, _)) = candidate {
            tab.basis[r] = j;
            tab.iterations += 1;
        }
    }
    Ok(())
}
