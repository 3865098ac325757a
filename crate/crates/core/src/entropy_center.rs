//! The entropy barycenter `1/w` of `K_n`.
//!
//! `w = AᵗΛ₀` where `Λ₀` minimizes the convex dual
//!
//! ```text
//! H(Λ) = -Σ_j log (AᵗΛ)_j + ⟨Λ, b⟩        (+∞ once some (AᵗΛ)_j <= 0)
//! ```
//!
//! Stationarity of `H` is exactly the centering condition `A (1/w) = b`, so
//! the product exponential law with rates `w` has mean in `K_n`.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::constraint_model::{lp_solve, ConstraintSystem, LpStatus, ModelError, Sense};

#[derive(Debug, Error, Clone)]
pub enum CenterError {
    #[error("(AᵗΛ)_{column} = {value:e} is not positive")]
    DomainViolation { column: usize, value: f64 },
    #[error("no dual point with AᵗΛ > 0 was found; positivize the system first")]
    NotPositivized,
    #[error("Newton iteration stopped after {} steps with gradient {:e}", .0.iterations, .0.gradient_norm)]
    MaxIterationsExceeded(Box<Barycenter>),
    #[error("line search made no progress at gradient {:e}", .0.gradient_norm)]
    Stalled(Box<Barycenter>),
    #[error("dual Hessian is not positive definite")]
    IndefiniteHessian,
    #[error("point {index} is not in the interior of K_n (residual {residual:e}, min coordinate {min:e})")]
    InfeasiblePoint { index: usize, residual: f64, min: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone)]
pub struct BarycenterOptions {
    /// Stop once `‖∇H‖∞ <= tol · max(1, ‖b‖∞)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting dual point; must satisfy `AᵗΛ > 0`.
    pub start: Option<DVector<f64>>,
}

impl Default for BarycenterOptions {
    fn default() -> Self {
        BarycenterOptions { tol: 1e-10, max_iter: 200, start: None }
    }
}

impl BarycenterOptions {
    pub fn with_tol(tol: f64) -> Self {
        BarycenterOptions { tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Barycenter {
    /// Exponential rates; the barycenter itself is `1/w`.
    pub w: DVector<f64>,
    pub lambda0: DVector<f64>,
    pub dual_value: f64,
    /// `‖A (1/w) − b‖∞`, which equals the final gradient norm.
    pub centering_residual: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    /// Dual objective after each accepted step, starting point first.
    pub trace: Vec<f64>,
}

impl Barycenter {
    pub fn center(&self) -> DVector<f64> {
        self.w.map(|v| 1.0 / v)
    }
}

/// `AᵗΛ`, or the first column where it leaves the domain.
fn slacks(a: &DMatrix<f64>, lambda: &DVector<f64>) -> Result<DVector<f64>, CenterError> {
    let s = a.tr_mul(lambda);
    match s.iter().position(|v| !(*v > 0.0)) {
        Some(column) => Err(CenterError::DomainViolation { column, value: s[column] }),
        None => Ok(s),
    }
}

fn value_at(a: &DMatrix<f64>, b: &DVector<f64>, lambda: &DVector<f64>) -> f64 {
    match slacks(a, lambda) {
        Ok(s) => -s.iter().map(|v| v.ln()).sum::<f64>() + lambda.dot(b),
        Err(_) => f64::INFINITY,
    }
}

fn gradient_at(a: &DMatrix<f64>, b: &DVector<f64>, s: &DVector<f64>) -> DVector<f64> {
    b - a * s.map(|v| 1.0 / v)
}

fn hessian_at(a: &DMatrix<f64>, s: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = a.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col /= s[j];
    }
    &scaled * scaled.transpose()
}

/// `H(Λ)`; `f64::INFINITY` outside the domain.
pub fn dual_value(cs: &ConstraintSystem, lambda: &DVector<f64>) -> f64 {
    value_at(cs.a(), cs.b(), lambda)
}

/// `b − Σ_j A_j / (AᵗΛ)_j`.
pub fn dual_gradient(cs: &ConstraintSystem, lambda: &DVector<f64>) -> Result<DVector<f64>, CenterError> {
    let s = slacks(cs.a(), lambda)?;
    Ok(gradient_at(cs.a(), cs.b(), &s))
}

/// `Σ_j A_j A_jᵗ / (AᵗΛ)_j²`.
pub fn dual_hessian(cs: &ConstraintSystem, lambda: &DVector<f64>) -> Result<DMatrix<f64>, CenterError> {
    let s = slacks(cs.a(), lambda)?;
    Ok(hessian_at(cs.a(), &s))
}

/// A dual point with `AᵗΛ > 0`: all ones when that works, otherwise the
/// multipliers of `max 1ᵗx`, which satisfy `AᵗΛ >= 1`.
pub fn feasible_dual_start(cs: &ConstraintSystem) -> Result<DVector<f64>, CenterError> {
    let ones = DVector::from_element(cs.m(), 1.0);
    if cs.a().tr_mul(&ones).iter().all(|v| *v > 0.0) {
        return Ok(ones);
    }
    let lp = lp_solve(&DVector::from_element(cs.n(), 1.0), cs.a(), cs.b(), Sense::Maximize)
        .map_err(ModelError::from)?;
    if lp.status == LpStatus::Optimal && cs.a().tr_mul(&lp.duals).iter().all(|v| *v > 0.0) {
        Ok(lp.duals)
    } else {
        Err(CenterError::NotPositivized)
    }
}

/// Row scaling applied when the entries of `A` span more than six decades.
fn row_scaling(a: &DMatrix<f64>) -> Option<DVector<f64>> {
    let nonzero = a.iter().map(|v| v.abs()).filter(|v| *v > 0.0);
    let (lo, hi) = nonzero.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi <= 1e6 * lo {
        return None;
    }
    Some(DVector::from_iterator(a.nrows(), a.row_iter().map(|r| 1.0 / r.amax())))
}

/// Damped Newton minimization of the dual objective.
pub fn solve_barycenter(cs: &ConstraintSystem, opts: &BarycenterOptions) -> Result<Barycenter, CenterError> {
    let start = match &opts.start {
        Some(s) => {
            slacks(cs.a(), s)?;
            s.clone()
        }
        None => feasible_dual_start(cs)?,
    };
    let b_scale = cs.b().amax().max(1.0);
    let Some(d) = row_scaling(cs.a()) else {
        return newton(cs.a(), cs.b(), start, opts.tol * b_scale, opts.max_iter);
    };
    debug!("rescaling rows of A by {d:?}");
    let a = DMatrix::from_diagonal(&d) * cs.a();
    let b = cs.b().component_mul(&d);
    // AᵗΛ = (DA)ᵗ D^{-1} Λ
    let unscale = |mut bc: Barycenter| {
        bc.lambda0 = bc.lambda0.component_mul(&d);
        bc.centering_residual = cs.residual(bc.center().as_slice());
        bc
    };
    let tol = opts.tol * b.amax().max(f64::MIN_POSITIVE);
    match newton(&a, &b, start.component_div(&d), tol, opts.max_iter) {
        Ok(bc) => Ok(unscale(bc)),
        Err(CenterError::MaxIterationsExceeded(bc)) => Err(CenterError::MaxIterationsExceeded(Box::new(unscale(*bc)))),
        Err(CenterError::Stalled(bc)) => Err(CenterError::Stalled(Box::new(unscale(*bc)))),
        Err(e) => Err(e),
    }
}

fn newton(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    mut lambda: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Barycenter, CenterError> {
    let mut s = slacks(a, &lambda)?;
    let mut f = value_at(a, b, &lambda);
    let mut trace = vec![f];
    let finish = |lambda: DVector<f64>, s: DVector<f64>, f: f64, g: f64, iterations, trace| Barycenter {
        w: s,
        lambda0: lambda,
        dual_value: f,
        centering_residual: g,
        gradient_norm: g,
        iterations,
        trace,
    };

    for iter in 0..max_iter {
        let g = gradient_at(a, b, &s);
        let gnorm = g.amax();
        if gnorm <= tol {
            let (lambda, s, f, gnorm) = polish(a, b, lambda, s, f, g);
            return Ok(finish(lambda, s, f, gnorm, iter, trace));
        }
        let h = hessian_at(a, &s);
        let chol = h.cholesky().ok_or(CenterError::IndefiniteHessian)?;
        let step = -chol.solve(&g);
        let slope = g.dot(&step);
        let ds = a.tr_mul(&step);
        let boundary = ds
            .iter()
            .zip(s.iter())
            .filter(|(d, _)| **d < 0.0)
            .map(|(d, s)| -s / d)
            .fold(f64::INFINITY, f64::min);
        let mut alpha = (0.99 * boundary).min(1.0);
        // the objective is self-concordant: with Newton decrement below 1/4
        // the full step stays feasible and decreases it, while the Armijo
        // test would only compare roundoff
        if -slope < 0.0625 && boundary > 1.0 {
            lambda += &step;
            s = a.tr_mul(&lambda);
            f = value_at(a, b, &lambda);
            trace.push(f);
            continue;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let trial = &lambda + &step * alpha;
            let f_trial = value_at(a, b, &trial);
            // allow a few ulps of slack: near the optimum f barely moves
            if f_trial <= f + 1e-4 * alpha * slope + 4.0 * f64::EPSILON * f.abs() {
                lambda = trial;
                s = a.tr_mul(&lambda);
                f = f_trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        trace.push(f);
        if !accepted {
            warn!("line search stalled at iteration {iter} with gradient {gnorm:e}");
            return Err(CenterError::Stalled(Box::new(finish(lambda, s, f, gnorm, iter, trace))));
        }
    }
    let gnorm = gradient_at(a, b, &s).amax();
    if gnorm <= tol {
        return Ok(finish(lambda, s, f, gnorm, max_iter, trace));
    }
    Err(CenterError::MaxIterationsExceeded(Box::new(finish(lambda, s, f, gnorm, max_iter, trace))))
}

/// One extra full Newton step once converged; kept only if the gradient
/// does not grow. Inside the quadratic region this takes `w` to roundoff level.
fn polish(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    lambda: DVector<f64>,
    s: DVector<f64>,
    f: f64,
    g: DVector<f64>,
) -> (DVector<f64>, DVector<f64>, f64, f64) {
    let gnorm = g.amax();
    let Some(chol) = hessian_at(a, &s).cholesky() else {
        return (lambda, s, f, gnorm);
    };
    let trial = &lambda - chol.solve(&g);
    match slacks(a, &trial) {
        Ok(st) => {
            let gt = gradient_at(a, b, &st).amax();
            if gt <= gnorm {
                let ft = value_at(a, b, &trial);
                return (trial, st, ft, gt);
            }
            (lambda, s, f, gnorm)
        }
        Err(_) => (lambda, s, f, gnorm),
    }
}

/// Maximum relative difference in `w` between Newton runs started at `1` and `2·1`.
pub fn uniqueness_probe(cs: &ConstraintSystem, tol: f64) -> Result<f64, CenterError> {
    let run = |scale: f64| {
        let start = DVector::from_element(cs.m(), scale);
        solve_barycenter(cs, &BarycenterOptions { tol, max_iter: 200, start: Some(start) })
    };
    let (one, two) = (run(1.0)?, run(2.0)?);
    Ok(one.w.iter().zip(two.w.iter()).map(|(x, y)| (x - y).abs() / x.abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyCertificate {
    /// `−Σ log x_j − Σ log w_j` for each point; nonnegative up to roundoff.
    pub margins: Vec<f64>,
    pub min_margin: f64,
    pub holds: bool,
}

/// Checks that `1/w` minimizes `−Σ log x_j` against the supplied points of `K_n`.
pub fn entropy_certificate(
    cs: &ConstraintSystem,
    bc: &Barycenter,
    points: &[Vec<f64>],
) -> Result<EntropyCertificate, CenterError> {
    let feas_tol = 1e-8 * cs.b().amax().max(1.0);
    let reference: f64 = bc.w.iter().map(|w| w.ln()).sum();
    let mut margins = Vec::with_capacity(points.len());
    for (index, x) in points.iter().enumerate() {
        let residual = cs.residual(x);
        let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
        if x.len() != cs.n() || residual > feas_tol || !(min > 0.0) {
            return Err(CenterError::InfeasiblePoint { index, residual, min });
        }
        margins.push(-x.iter().map(|v| v.ln()).sum::<f64>() - reference);
    }
    let min_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(EntropyCertificate { holds: margins.iter().all(|m| *m >= -1e-9), min_margin, margins })
}
