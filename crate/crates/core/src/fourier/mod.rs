//! Characteristic functions of linear statistics of the uniform law on `K_n`.
//!
//! With `Y_j = w_j X_j − 1` i.i.d. centered `Exp(1)` under the product law,
//! the uniform law on `K_n` is the law of `Y` conditioned on `ÂY = 0`.
//! Fourier inversion of that conditioning gives the ratio formula
//!
//! ```text
//! E exp(i t S) = ∫ φ(tλ̂ + Âᵗη) dη / ∫ φ(Âᵗη) dη,    φ(c) = Π_j e^{-ic_j} / (1 − ic_j)
//! ```
//!
//! for `S = Σ λ_j (X_j − 1/w_j)`, and the same construction with truncated
//! exponential factors gives probabilities of boxes. Both integrals are over
//! `R^m`; they are truncated to a cube whose radius comes from a certified
//! bound on the tail of `|φ|`, and the tail bound is added to the error.

pub mod cubature;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::constraint_model::ConstraintSystem;
use crate::entropy_center::Barycenter;
use crate::linalg;
use crate::standardization::{standardize, StandardizeError, StandardizedSystem, WeightSpec};
pub use cubature::{gauss_legendre, integrate, CubatureError, CubatureOptions, CubatureResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FourierError {
    #[error("quadrature budget exceeded: {0}")]
    QuadratureBudgetExceeded(CubatureError),
    #[error("denominator {value:e} is below ten times its error estimate {error:e}")]
    DenominatorTooSmall { value: f64, error: f64 },
    #[error("coordinate {coordinate} has a factor that does not decay")]
    BoxUnboundedWithoutDecay { coordinate: usize },
    #[error("box is malformed: {0}")]
    InvalidBox(String),
    #[error("dimension {dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("removing column {column} lowers the rank of A")]
    ColumnRemovalUnsafe { column: usize },
    #[error("no column grouping yields an integrable tail bound")]
    TruncationUnavailable,
    #[error("the γ-approximation needs a constraint matrix with positive entries")]
    NotPositive,
    #[error(transparent)]
    Standardize(#[from] StandardizeError),
}

impl From<CubatureError> for FourierError {
    fn from(e: CubatureError) -> Self {
        FourierError::QuadratureBudgetExceeded(e)
    }
}

/// `log E e^{i c_j Y}` for centered `Exp(1)` `Y`: `−ic − log(1 − ic)`.
#[inline]
fn log_centered_exp(c: f64) -> (f64, f64) {
    (-0.5 * (c * c).ln_1p(), c.atan() - c)
}

/// `log Π_j e^{-ic_j}/(1 − ic_j)`, summed term by term.
pub fn log_product_cf(c: &[f64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for &cj in c {
        let (r, i) = log_centered_exp(cj);
        re += r;
        im += i;
    }
    Complex64::new(re, im)
}

/// Characteristic function of `Σ c_j (X_j − 1)` for i.i.d. `Exp(1)` variables.
pub fn product_cf(c: &[f64]) -> Complex64 {
    log_product_cf(c).exp()
}

/// `κ_k = (k − 1)! Σ c_j^k`; zero for `k <= 1` since the variable is centered.
pub fn cumulant_sum(c: &[f64], k: u32) -> f64 {
    if k <= 1 {
        return 0.0;
    }
    let factorial: f64 = (1..k).map(f64::from).product();
    factorial * c.iter().map(|v| v.powi(k as i32)).sum::<f64>()
}

pub fn gaussian_limit(t: f64, sigma: f64) -> f64 {
    (-0.5 * t * t * sigma * sigma).exp()
}

#[derive(Debug, Clone)]
pub struct QuadOptions {
    /// Target for both the cubature error and the truncated tail of each integral.
    pub tol: f64,
    pub max_panels: usize,
    pub order: usize,
    /// The truncation radius is capped here; the remaining tail bound is
    /// added to the error estimate.
    pub r_max: f64,
    /// Column groups for the tail bound, e.g. a Property-A partition.
    pub partition: Option<Vec<Vec<usize>>>,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { tol: 1e-8, max_panels: 200_000, order: 8, r_max: 1e4, partition: None }
    }
}

impl QuadOptions {
    fn cubature(&self) -> CubatureOptions {
        CubatureOptions {
            abs_tol: self.tol,
            rel_tol: self.tol,
            max_panels: self.max_panels,
            order: self.order,
            initial_divisions: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CfEvaluation {
    pub re: f64,
    pub im: f64,
    pub abs_error_estimate: f64,
    pub quad_points: usize,
    pub truncation_radius: f64,
    pub numerator: [f64; 2],
    pub denominator: [f64; 2],
}

impl CfEvaluation {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Surface area of the unit sphere in `R^m`.
fn sphere_area(m: usize) -> f64 {
    let h = m as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

/// Tail bound for `|integrand| <= C Π_l (1 + μ_l ‖η‖²)^{-1/2}` outside the
/// ball of radius `r`, using `(1 + μ r²)^{-1/2} <= (μ r²)^{-1/2}`.
#[derive(Debug, Clone)]
struct TailBound {
    m: usize,
    log_constant: f64,
    /// `Σ_l log μ_l`.
    log_mu: f64,
    groups: usize,
    /// Radius from which the bound is valid.
    r_min: f64,
}

impl TailBound {
    fn at(&self, r: f64) -> f64 {
        let k = self.groups as f64;
        let m = self.m as f64;
        let log = self.log_constant + sphere_area(self.m).ln() - 0.5 * self.log_mu + (m - k) * r.ln() - (k - m).ln();
        log.exp()
    }

    fn radius(&self, tol: f64) -> f64 {
        let k = self.groups as f64;
        let m = self.m as f64;
        let log = self.log_constant + sphere_area(self.m).ln() - 0.5 * self.log_mu - (k - m).ln() - tol.ln();
        (log / (k - m)).exp().max(self.r_min)
    }
}

fn round_robin(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); k];
    for j in 0..n {
        groups[j % k].push(j);
    }
    groups
}

/// Picks the column grouping with the smallest certified radius.
///
/// `shift` holds `tλ̂` for a shifted numerator (then each `μ_l` is quartered and
/// the bound only holds beyond `2‖tλ̂_I‖/√μ_l`); `log_weight[j]` bounds the log
/// of the extra constant attached to column `j`.
fn choose_tail(
    a_hat: &DMatrix<f64>,
    shift: Option<&DVector<f64>>,
    log_weight: &[f64],
    quad: &QuadOptions,
) -> Result<(TailBound, f64), FourierError> {
    let (m, n) = a_hat.shape();
    let mut candidates: Vec<Vec<Vec<usize>>> = Vec::new();
    if let Some(p) = &quad.partition {
        candidates.push(p.clone());
    }
    let mut k = m + 1;
    while k * m <= n {
        candidates.push(round_robin(n, k));
        k *= 2;
    }
    if n / m > m {
        candidates.push(round_robin(n, n / m));
    }
    let mut best: Option<(TailBound, f64)> = None;
    for groups in candidates {
        if groups.len() <= m {
            continue;
        }
        let mut log_mu = 0.0;
        let mut r_min = 0.0f64;
        let mut log_constant = 0.0;
        let mut ok = true;
        for g in &groups {
            let cols = a_hat.select_columns(g.iter());
            let mut mu = linalg::min_eigenvalue(&(&cols * cols.transpose()));
            if !(mu > 1e-14) {
                ok = false;
                break;
            }
            if let Some(s) = shift {
                let norm = g.iter().map(|&j| s[j] * s[j]).sum::<f64>().sqrt();
                r_min = r_min.max(2.0 * norm / mu.sqrt());
                mu /= 4.0;
            }
            log_mu += mu.ln();
            log_constant += g.iter().map(|&j| log_weight[j]).sum::<f64>();
        }
        if !ok {
            continue;
        }
        let tail = TailBound { m, log_constant, log_mu, groups: groups.len(), r_min };
        let r = tail.radius(quad.tol);
        if best.as_ref().is_none_or(|(_, rb)| r < *rb) {
            best = Some((tail, r));
        }
    }
    let (tail, r) = best.ok_or(FourierError::TruncationUnavailable)?;
    Ok((tail, r.min(quad.r_max)))
}

fn check_dimension(m: usize) -> Result<(), FourierError> {
    if m > 3 {
        return Err(FourierError::DimensionTooLarge { dim: m, max: 3 });
    }
    Ok(())
}

/// `N / Re D` with the imaginary part of `D` and both tails folded into the error.
fn ratio(
    result: &CubatureResult<4>,
    tail: f64,
    radius: f64,
) -> Result<CfEvaluation, FourierError> {
    let num = Complex64::new(result.value[0], result.value[1]);
    let den_re = result.value[2];
    let err_num = result.error[0].hypot(result.error[1]) + tail;
    let err_den = result.error[2].hypot(result.error[3]) + tail + result.value[3].abs();
    if den_re.abs() < 10.0 * err_den {
        return Err(FourierError::DenominatorTooSmall { value: den_re, error: err_den });
    }
    let value = num / den_re;
    Ok(CfEvaluation {
        re: value.re,
        im: value.im,
        abs_error_estimate: (err_num + value.norm() * err_den) / den_re.abs(),
        quad_points: result.evaluations,
        truncation_radius: radius,
        numerator: [num.re, num.im],
        denominator: [den_re, result.value[3]],
    })
}

/// `E exp(i t Σ λ_j (X_j − 1/w_j))` under the uniform law on `K_n`.
pub fn bartlett_cf(
    ss: &StandardizedSystem,
    spec: &WeightSpec,
    t: f64,
    quad: &QuadOptions,
) -> Result<CfEvaluation, FourierError> {
    let (m, n) = (ss.m(), ss.n());
    check_dimension(m)?;
    let shift = &spec.lambda_hat * t;
    let (tail, radius) = choose_tail(&ss.a_hat, (t != 0.0).then_some(&shift), &vec![0.0; n], quad)?;
    let a_hat = &ss.a_hat;
    let integrand = |eta: &[f64]| {
        let (mut nr, mut ni, mut dr, mut di) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..n {
            let mut c = 0.0;
            for (i, e) in eta.iter().enumerate() {
                c += e * a_hat[(i, j)];
            }
            let (r, im) = log_centered_exp(c);
            dr += r;
            di += im;
            let (r, im) = log_centered_exp(shift[j] + c);
            nr += r;
            ni += im;
        }
        let (num, den) = (Complex64::new(nr, ni).exp(), Complex64::new(dr, di).exp());
        [num.re, num.im, den.re, den.im]
    };
    let lo = vec![-radius; m];
    let hi = vec![radius; m];
    let result = integrate(&integrand, &lo, &hi, &quad.cubature())?;
    ratio(&result, tail.at(radius.max(tail.r_min)), radius)
}

/// An axis-aligned box `Π_j [lo_j, hi_j]`; `hi_j` may be `+∞`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoxSet {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxSet {
    pub fn orthant(n: usize) -> Self {
        BoxSet { lo: vec![0.0; n], hi: vec![f64::INFINITY; n] }
    }

    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        BoxSet { lo: vec![lo; n], hi: vec![hi; n] }
    }

    fn check(&self, n: usize) -> Result<(), FourierError> {
        if self.lo.len() != n || self.hi.len() != n {
            return Err(FourierError::InvalidBox(format!("expected {n} intervals")));
        }
        for (j, (a, b)) in self.lo.iter().zip(&self.hi).enumerate() {
            if a.is_nan() || b.is_nan() || a > b || *a == f64::INFINITY {
                return Err(FourierError::InvalidBox(format!("interval {j} is [{a}, {b}]")));
            }
        }
        Ok(())
    }
}

/// `log ∫_α^β e^{-(1 − ic) v} dv − ic`, the standardized factor of one
/// coordinate restricted to `w_j x_j ∈ [α, β]`.
#[inline]
fn log_box_factor(alpha: f64, beta: f64, c: f64) -> (f64, f64) {
    if alpha == 0.0 && beta == f64::INFINITY {
        return log_centered_exp(c);
    }
    // −ic − α(1 − ic) − log(1 − ic)
    let mut re = -alpha - 0.5 * (c * c).ln_1p();
    let mut im = -c + alpha * c + c.atan();
    if beta < f64::INFINITY {
        // log(1 − e^{-δ(1 − ic)}), real part written to avoid cancellation
        let delta = beta - alpha;
        let decay = (-delta).exp();
        let half = (0.5 * delta * c).sin();
        let x = -(-delta).exp_m1() + decay * 2.0 * half * half;
        let y = -decay * (delta * c).sin();
        re += 0.5 * (x * x + y * y).ln();
        im += y.atan2(x);
    }
    (re, im)
}

fn column_removal_check(a: &DMatrix<f64>) -> Result<(), FourierError> {
    let rank = linalg::rank(a);
    for j in 0..a.ncols() {
        if linalg::rank(&a.clone().remove_column(j)) < rank {
            return Err(FourierError::ColumnRemovalUnsafe { column: j });
        }
    }
    Ok(())
}

/// `P_n(E)` for a box `E` as a ratio of two `η`-integrals of products of
/// closed-form one-dimensional factors.
pub fn mixture_box_probability(
    cs: &ConstraintSystem,
    bc: &Barycenter,
    set: &BoxSet,
    quad: &QuadOptions,
) -> Result<CfEvaluation, FourierError> {
    let n = cs.n();
    check_dimension(cs.m())?;
    set.check(n)?;
    column_removal_check(cs.a())?;
    if let Some(j) = bc.w.iter().position(|w| !(*w > 0.0)) {
        return Err(FourierError::BoxUnboundedWithoutDecay { coordinate: j });
    }
    let ss = standardize(cs, bc)?;
    let alpha: Vec<f64> = (0..n).map(|j| set.lo[j].max(0.0) * bc.w[j]).collect();
    let beta: Vec<f64> = (0..n).map(|j| if set.hi[j] <= 0.0 { 0.0 } else { set.hi[j] * bc.w[j] }).collect();
    if alpha.iter().zip(&beta).any(|(a, b)| a >= b) {
        // the box misses the interior of the orthant
        return Ok(CfEvaluation {
            re: 0.0,
            im: 0.0,
            abs_error_estimate: 0.0,
            quad_points: 0,
            truncation_radius: 0.0,
            numerator: [0.0, 0.0],
            denominator: [1.0, 0.0],
        });
    }
    // |factor_j| <= (e^{-α} + e^{-β}) (1 + c²)^{-1/2}
    let log_weight: Vec<f64> = alpha.iter().zip(&beta).map(|(a, b)| ((-a).exp() + (-b).exp()).ln().max(0.0)).collect();
    let (tail, radius) = choose_tail(&ss.a_hat, None, &log_weight, quad)?;
    let a_hat = &ss.a_hat;
    let integrand = |eta: &[f64]| {
        let (mut nr, mut ni, mut dr, mut di) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..n {
            let mut c = 0.0;
            for (i, e) in eta.iter().enumerate() {
                c += e * a_hat[(i, j)];
            }
            let (r, im) = log_centered_exp(c);
            dr += r;
            di += im;
            let (r, im) = log_box_factor(alpha[j], beta[j], c);
            nr += r;
            ni += im;
        }
        let (num, den) = (Complex64::new(nr, ni).exp(), Complex64::new(dr, di).exp());
        [num.re, num.im, den.re, den.im]
    };
    let m = ss.m();
    let result = integrate(&integrand, &vec![-radius; m], &vec![radius; m], &quad.cubature())?;
    let mut eval = ratio(&result, tail.at(radius.max(tail.r_min)), radius)?;
    eval.abs_error_estimate += eval.im.abs();
    Ok(eval)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GammaEvaluation {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub gamma: f64,
    pub evaluations: usize,
}

pub const GAMMA_MAX_DIM: usize = 4;

/// Probability of a box under the density proportional to
/// `exp(−Σ w_j x_j − γ ‖Ax − b‖²)` on the orthant.
///
/// The orthant is cut to `x_j <= min_l (b_l + sqrt(50/γ)) / A_lj`, beyond
/// which the Gaussian penalty is below `e^{-50}`.
pub fn gamma_box_probability(
    cs: &ConstraintSystem,
    bc: &Barycenter,
    gamma: f64,
    set: &BoxSet,
    quad: &QuadOptions,
) -> Result<GammaEvaluation, FourierError> {
    let (m, n) = (cs.m(), cs.n());
    if n > GAMMA_MAX_DIM {
        return Err(FourierError::DimensionTooLarge { dim: n, max: GAMMA_MAX_DIM });
    }
    if !cs.a().iter().all(|v| *v > 0.0) {
        return Err(FourierError::NotPositive);
    }
    if !(gamma > 0.0) {
        return Err(FourierError::InvalidBox(format!("γ must be positive, got {gamma}")));
    }
    set.check(n)?;
    let slack = (50.0 / gamma).sqrt();
    let upper: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|l| (cs.b()[l] + slack) / cs.a()[(l, j)]).fold(f64::INFINITY, f64::min))
        .collect();
    let (a, b, w) = (cs.a(), cs.b(), &bc.w);
    let density = |x: &[f64]| {
        let mut e = 0.0;
        for j in 0..n {
            e -= w[j] * x[j];
        }
        for l in 0..m {
            let mut r = -b[l];
            for j in 0..n {
                r += a[(l, j)] * x[j];
            }
            e -= gamma * r * r;
        }
        [e.exp()]
    };
    let opts = CubatureOptions {
        abs_tol: 0.0,
        rel_tol: quad.tol,
        max_panels: quad.max_panels,
        order: quad.order,
        initial_divisions: None,
    };
    let whole = integrate(&density, &vec![0.0; n], &upper, &opts)?;
    let lo: Vec<f64> = (0..n).map(|j| set.lo[j].max(0.0).min(upper[j])).collect();
    let hi: Vec<f64> = (0..n).map(|j| set.hi[j].min(upper[j]).max(lo[j])).collect();
    let full = lo.iter().all(|v| *v == 0.0) && hi.iter().zip(&upper).all(|(h, u)| h == u);
    let part = if full { whole.clone() } else { integrate(&density, &lo, &hi, &opts)? };
    let value = part.value[0] / whole.value[0];
    Ok(GammaEvaluation {
        value,
        abs_error_estimate: (part.error[0] + value * whole.error[0]) / whole.value[0],
        gamma,
        evaluations: whole.evaluations + if full { 0 } else { part.evaluations },
    })
}

/// Checks `e^{−γa²} = (4πγ)^{-1/2} ∫ e^{iηa} e^{−η²/(4γ)} dη` by quadrature;
/// returns `(quadrature value, closed form)`.
pub fn gaussian_kernel_identity(gamma: f64, a: f64) -> Result<(f64, f64), FourierError> {
    let radius = 2.0 * gamma.sqrt() * 7.0;
    let norm = 1.0 / (4.0 * std::f64::consts::PI * gamma).sqrt();
    let f = |eta: &[f64]| [norm * (eta[0] * a).cos() * (-eta[0] * eta[0] / (4.0 * gamma)).exp()];
    let r = integrate(&f, &[-radius], &[radius], &CubatureOptions { abs_tol: 1e-13, rel_tol: 1e-13, ..Default::default() })?;
    Ok((r.value[0], (-gamma * a * a).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy_center::solve_barycenter;
    use crate::standardization::weight_spec;

    #[test]
    fn product_cf_examples() {
        assert_eq!(product_cf(&[0.0; 5]), Complex64::new(1.0, 0.0));
        let v = product_cf(&[1.0]);
        assert!((v.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((v.arg() - (-1.0 + 1f64.atan())).abs() < 1e-15);
        let c = [0.3, -2.0, 7.5, 1e-3];
        let modulus: f64 = c.iter().map(|x: &f64| (1.0 + x * x).powf(-0.5)).product();
        assert!((product_cf(&c).norm() / modulus - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_products_stay_finite() {
        let c = vec![0.5; 5000];
        let v = product_cf(&c);
        assert!(v.is_finite() && v.norm() > 0.0);
    }

    #[test]
    fn cumulant_examples() {
        assert_eq!(cumulant_sum(&[1.0, 1.0], 2), 2.0);
        assert!((cumulant_sum(&[0.1, 0.2], 3) - 0.018).abs() < 1e-15);
        assert_eq!(cumulant_sum(&[0.1, 0.2], 1), 0.0);
    }

    #[test]
    fn cumulant_series_matches_log_cf() {
        let c = [0.3, -0.7, 1.1, 0.2];
        let s = 0.01;
        let scaled: Vec<f64> = c.iter().map(|v| v * s).collect();
        let direct = log_product_cf(&scaled);
        let mut series = Complex64::new(0.0, 0.0);
        let mut ik = Complex64::new(-1.0, 0.0);
        let mut fact = 2.0;
        for k in 2..=5u32 {
            series += ik * s.powi(k as i32) * cumulant_sum(&c, k) / fact;
            ik *= Complex64::i();
            fact *= f64::from(k + 1);
        }
        assert!((direct - series).norm() < 1e-10);
    }

    #[test]
    fn kernel_identity() {
        for (g, a) in [(1.0, 0.3), (100.0, 0.05), (1e4, 0.01)] {
            let (q, exact) = gaussian_kernel_identity(g, a).unwrap();
            assert!((q - exact).abs() < 1e-8, "{g} {a}: {q} vs {exact}");
        }
    }

    fn simplex(n: usize) -> (ConstraintSystem, Barycenter) {
        let cs = ConstraintSystem::simplex(n, 1.0, 1.0).unwrap();
        let bc = solve_barycenter(&cs, &Default::default()).unwrap();
        (cs, bc)
    }

    #[test]
    fn box_factor_matches_direct_integral() {
        let (alpha, beta, c) = (0.2, 1.7, 0.9);
        let (re, im) = log_box_factor(alpha, beta, c);
        let z = Complex64::new(1.0, -c);
        let direct = Complex64::new(0.0, -c).exp() * ((-alpha * z).exp() - (-beta * z).exp()) / z;
        assert!((Complex64::new(re, im).exp() - direct).norm() < 1e-14);
    }

    #[test]
    fn mixture_on_small_simplex() {
        let (cs, bc) = simplex(3);
        let quad = QuadOptions::default();
        let full = mixture_box_probability(&cs, &bc, &BoxSet::orthant(3), &quad).unwrap();
        assert_eq!(full.re, 1.0);
        let half = mixture_box_probability(&cs, &bc, &BoxSet::cube(3, 0.0, 0.5), &quad).unwrap();
        assert!((half.re - 0.25).abs() < 1e-4, "{half:?}");
        let third = mixture_box_probability(&cs, &bc, &BoxSet::cube(3, 0.0, 1.0 / 3.0), &quad).unwrap();
        assert!(third.re.abs() < 1e-4, "{third:?}");
    }

    #[test]
    fn bartlett_at_zero_is_one() {
        let (cs, bc) = simplex(20);
        let ss = standardize(&cs, &bc).unwrap();
        let lambda = DVector::from_fn(20, |j, _| if j % 2 == 0 { 1.0 } else { -0.5 });
        let spec = weight_spec(&ss, &lambda);
        let e = bartlett_cf(&ss, &spec, 0.0, &QuadOptions::default()).unwrap();
        assert!((e.re - 1.0).abs() < 1e-12 && e.im.abs() < 1e-12);
        let plus = bartlett_cf(&ss, &spec, 0.7, &QuadOptions::default()).unwrap();
        let minus = bartlett_cf(&ss, &spec, -0.7, &QuadOptions::default()).unwrap();
        assert!((plus.value().conj() - minus.value()).norm() <= 2.0 * (plus.abs_error_estimate + minus.abs_error_estimate));
        assert!(plus.value().norm() <= 1.0 + 2.0 * plus.abs_error_estimate);
    }

    #[test]
    fn gamma_full_orthant_and_limits() {
        let (cs, bc) = simplex(2);
        let quad = QuadOptions { tol: 1e-7, ..Default::default() };
        assert_eq!(gamma_box_probability(&cs, &bc, 100.0, &BoxSet::orthant(2), &quad).unwrap().value, 1.0);
        let half = BoxSet { lo: vec![0.0, 0.0], hi: vec![0.5, f64::INFINITY] };
        let v = gamma_box_probability(&cs, &bc, 1e4, &half, &quad).unwrap();
        assert!((v.value - 0.5).abs() < 0.01);
        let big = ConstraintSystem::simplex(5, 1.0, 1.0).unwrap();
        let bcb = solve_barycenter(&big, &Default::default()).unwrap();
        assert!(matches!(
            gamma_box_probability(&big, &bcb, 1.0, &BoxSet::orthant(5), &quad),
            Err(FourierError::DimensionTooLarge { .. })
        ));
    }
}
