//! Kolmogorov–Smirnov tests, CLT and marginal experiments, moment summaries,
//! and random instances whose dual optimum is known in closed form.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::constraint_model::{ConstraintSystem, ModelError};
use crate::entropy_center::Barycenter;
use crate::linalg;
use crate::samplers::{map_points, SamplerConfig, SamplerError};
use crate::standardization::{standardize, weight_spec, StandardizeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("σ = {0:e} is zero; the statistic is degenerate")]
    SigmaZero(f64),
    #[error("column law violates its support condition: {0}")]
    SupportViolation(String),
    #[error("coordinate list is empty or out of range")]
    BadCoordinates,
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Standardize(#[from] StandardizeError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Reference laws for one-sample KS tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Reference {
    StdNormal,
    Exp1,
    Uniform01,
    /// `Beta(1, k)`.
    Beta1 { k: f64 },
    /// `scale · Beta(1, k)`; `n · Beta(1, n − 1)` is the law of `w_1 X_1` on the simplex.
    ScaledBeta1 { scale: f64, k: f64 },
    /// `(E − 1) / σ` for `E ~ Exp(1)`.
    Exp1Centered { sigma: f64 },
}

impl Reference {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Reference::StdNormal => 0.5 * erfc(-x / std::f64::consts::SQRT_2),
            Reference::Exp1 => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x).exp_m1()
                }
            }
            Reference::Uniform01 => x.clamp(0.0, 1.0),
            Reference::Beta1 { k } => 1.0 - (1.0 - x.clamp(0.0, 1.0)).powf(k),
            Reference::ScaledBeta1 { scale, k } => 1.0 - (1.0 - (x / scale).clamp(0.0, 1.0)).powf(k),
            Reference::Exp1Centered { sigma } => Reference::Exp1.cdf(sigma * x + 1.0),
        }
    }

    /// Parses `std_normal`, `exp1`, `uniform01` or `beta:k`.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "std_normal" | "normal" => Some(Reference::StdNormal),
            "exp1" => Some(Reference::Exp1),
            "uniform01" => Some(Reference::Uniform01),
            _ => s.strip_prefix("beta:").and_then(|k| k.parse().ok()).map(|k| Reference::Beta1 { k }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub sample_size: usize,
}

/// `P(K > x)` for the Kolmogorov distribution, 20 terms of the alternating series.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let s: f64 = (1..=20)
        .map(|k| {
            let k = k as f64;
            let sign = if k as u32 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * x * x).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>, DiagnosticsError> {
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(DiagnosticsError::NonFinite);
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Sup-distance between the empirical CDF of `samples` and `reference`.
pub fn ks_statistic(samples: &[f64], reference: &Reference) -> Result<f64, DiagnosticsError> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    Ok(v.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = reference.cdf(*x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max))
}

pub const KS_MIN_SAMPLES: usize = 10;

pub fn ks_test(samples: &[f64], reference: &Reference) -> Result<KsResult, DiagnosticsError> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(DiagnosticsError::TooFewSamples { needed: KS_MIN_SAMPLES, got: samples.len() });
    }
    let statistic = ks_statistic(samples, reference)?;
    let n = samples.len();
    Ok(KsResult { statistic, p_value: kolmogorov_survival((n as f64).sqrt() * statistic), sample_size: n })
}

/// Two-sample KS test; the p-value uses the effective size `nm/(n+m)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, DiagnosticsError> {
    for s in [a, b] {
        if s.len() < KS_MIN_SAMPLES {
            return Err(DiagnosticsError::TooFewSamples { needed: KS_MIN_SAMPLES, got: s.len() });
        }
    }
    let (x, y) = (sorted(a)?, sorted(b)?);
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / nx - j as f64 / ny).abs());
    }
    let effective = nx * ny / (nx + ny);
    Ok(KsResult { statistic: d, p_value: kolmogorov_survival(effective.sqrt() * d), sample_size: x.len() + y.len() })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MomentReport {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Batch-means standard errors of the four entries above.
    pub stderr: [f64; 4],
}

fn moments(values: &[f64]) -> [f64; 4] {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    [mean, m2 * n / (n - 1.0), m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0]
}

/// Mean, variance, skewness and excess kurtosis with standard errors from
/// 20 batch means, which stay honest for correlated chain output.
pub fn moment_report(values: &[f64]) -> MomentReport {
    let all = moments(values);
    let batches = 20.min(values.len() / 4);
    let stderr = if batches < 2 {
        [f64::INFINITY; 4]
    } else {
        let size = values.len() / batches;
        let per: Vec<[f64; 4]> = (0..batches).map(|b| moments(&values[b * size..(b + 1) * size])).collect();
        let mut se = [0.0; 4];
        for (k, s) in se.iter_mut().enumerate() {
            let mean = per.iter().map(|p| p[k]).sum::<f64>() / batches as f64;
            let var = per.iter().map(|p| (p[k] - mean).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
            *s = (var / batches as f64).sqrt();
        }
        se
    };
    MomentReport { count: values.len(), mean: all[0], variance: all[1], skewness: all[2], excess_kurtosis: all[3], stderr }
}

#[derive(Debug, Clone, Serialize)]
pub struct CltReport {
    pub ks: KsResult,
    pub sigma: f64,
    /// Empirical mean of `S*/σ`.
    pub mean_shift: f64,
    pub moments: MomentReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

/// `S*/σ` for each point, with `S* = Σ λ_j (x_j − 1/w_j)`.
pub fn clt_values_from_points<'a, I>(bc: &Barycenter, lambda: &DVector<f64>, sigma: f64, points: I) -> Vec<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    points.into_iter().map(|x| centered_statistic(bc, lambda, x) / sigma).collect()
}

fn centered_statistic(bc: &Barycenter, lambda: &DVector<f64>, x: &[f64]) -> f64 {
    x.iter().zip(lambda.iter()).zip(bc.w.iter()).map(|((x, l), w)| l * (x - 1.0 / w)).sum()
}

/// The CLT standard deviation for weights `lambda`.
pub fn clt_sigma(cs: &ConstraintSystem, bc: &Barycenter, lambda: &DVector<f64>) -> Result<f64, DiagnosticsError> {
    let ss = standardize(cs, bc)?;
    let sigma = weight_spec(&ss, lambda).sigma;
    if !(sigma > 1e-12) {
        return Err(DiagnosticsError::SigmaZero(sigma));
    }
    Ok(sigma)
}

pub fn clt_report(values: Vec<f64>, sigma: f64, keep_values: bool) -> Result<CltReport, DiagnosticsError> {
    let ks = ks_test(&values, &Reference::StdNormal)?;
    let moments = moment_report(&values);
    Ok(CltReport { ks, sigma, mean_shift: moments.mean, moments, values: keep_values.then_some(values) })
}

/// Draws points per `cfg`, standardizes `Σ λ_j (X_j − 1/w_j)` by `σ`, and
/// tests the result against `N(0, 1)`.
pub fn clt_experiment(
    cs: &ConstraintSystem,
    bc: &Barycenter,
    lambda: &DVector<f64>,
    cfg: &SamplerConfig,
    keep_values: bool,
) -> Result<CltReport, DiagnosticsError> {
    let sigma = clt_sigma(cs, bc, lambda)?;
    let start = bc.center();
    let values = map_points(cs, start.as_slice(), bc.w.as_slice(), cfg, |x| centered_statistic(bc, lambda, x) / sigma)?;
    clt_report(values, sigma, keep_values)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoordinateKs {
    pub coordinate: usize,
    pub ks: KsResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct Correlation {
    pub i: usize,
    pub j: usize,
    pub correlation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginalReport {
    pub per_coordinate: Vec<CoordinateKs>,
    pub correlations: Vec<Correlation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Vec<f64>>>,
}

fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// KS of `w_j X_j` against `Exp(1)` for each requested coordinate plus
/// pairwise correlations. `values[k]` holds the draws of `coords[k]`.
pub fn marginal_report(coords: &[usize], values: Vec<Vec<f64>>, keep_values: bool) -> Result<MarginalReport, DiagnosticsError> {
    let per_coordinate = coords
        .iter()
        .zip(&values)
        .map(|(&coordinate, v)| Ok(CoordinateKs { coordinate, ks: ks_test(v, &Reference::Exp1)? }))
        .collect::<Result<Vec<_>, DiagnosticsError>>()?;
    let mut correlations = Vec::new();
    for a in 0..coords.len() {
        for b in a + 1..coords.len() {
            correlations.push(Correlation { i: coords[a], j: coords[b], correlation: correlation(&values[a], &values[b]) });
        }
    }
    Ok(MarginalReport { per_coordinate, correlations, values: keep_values.then_some(values) })
}

pub fn marginal_experiment(
    cs: &ConstraintSystem,
    bc: &Barycenter,
    coords: &[usize],
    cfg: &SamplerConfig,
    keep_values: bool,
) -> Result<MarginalReport, DiagnosticsError> {
    if coords.is_empty() || coords.iter().any(|&j| j >= cs.n()) {
        return Err(DiagnosticsError::BadCoordinates);
    }
    let start = bc.center();
    let rows = map_points(cs, start.as_slice(), bc.w.as_slice(), cfg, |x| {
        coords.iter().map(|&j| bc.w[j] * x[j]).collect::<Vec<f64>>()
    })?;
    let values: Vec<Vec<f64>> = (0..coords.len()).map(|k| rows.iter().map(|r| r[k]).collect()).collect();
    marginal_report(coords, values, keep_values)
}

/// Law of the i.i.d. columns of a random instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnLaw {
    /// Each entry uniform on `[lo, hi]`, independently.
    UniformBox { lo: f64, hi: f64 },
    /// Uniform choice among the listed points of `R^m_{>=0}`.
    FiniteSupport { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecipe {
    pub m: usize,
    pub n: usize,
    pub law: ColumnLaw,
    pub v: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub cs: ConstraintSystem,
    pub exact_lambda0: DVector<f64>,
}

impl InstanceRecipe {
    fn check(&self) -> Result<(), DiagnosticsError> {
        let bad = |msg: String| Err(DiagnosticsError::SupportViolation(msg));
        if self.v.len() != self.m {
            return bad(format!("v has {} entries, expected {}", self.v.len(), self.m));
        }
        match &self.law {
            ColumnLaw::UniformBox { lo, hi } => {
                if !(*lo > 0.0 && hi > lo && hi.is_finite()) {
                    return bad(format!("box [{lo}, {hi}] must satisfy 0 < lo < hi < ∞"));
                }
                // ⟨v, u⟩ is linear, so its minimum over the box is at a corner
                let min: f64 = self.v.iter().map(|vi| (vi * lo).min(vi * hi)).sum();
                if !(min > 0.0) {
                    return bad(format!("⟨v, u⟩ reaches {min} on the box"));
                }
            }
            ColumnLaw::FiniteSupport { points } => {
                if points.is_empty() || points.iter().any(|p| p.len() != self.m) {
                    return bad("support points must be nonempty m-vectors".into());
                }
                for p in points {
                    if p.iter().any(|x| *x < 0.0 || !x.is_finite()) || p.iter().all(|x| *x == 0.0) {
                        return bad(format!("support point {p:?} is not a nonzero point of the orthant"));
                    }
                    let vp: f64 = p.iter().zip(&self.v).map(|(a, b)| a * b).sum();
                    if !(vp > 0.0) {
                        return bad(format!("⟨v, {p:?}⟩ = {vp} is not positive"));
                    }
                }
                let table = DMatrix::from_fn(self.m, points.len(), |i, j| points[j][i]);
                if linalg::rank(&table) < self.m {
                    return bad("support points do not span R^m".into());
                }
            }
        }
        Ok(())
    }
}

/// Draws `n` i.i.d. columns and sets `b = (1/n) Σ_j A_j / ⟨v, A_j⟩`, which
/// makes `Λ₀ = n v` the exact dual optimum.
pub fn random_instance(recipe: &InstanceRecipe) -> Result<GeneratedInstance, DiagnosticsError> {
    recipe.check()?;
    let (m, n) = (recipe.m, recipe.n);
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    let mut a = DMatrix::zeros(m, n);
    for j in 0..n {
        match &recipe.law {
            ColumnLaw::UniformBox { lo, hi } => {
                for i in 0..m {
                    a[(i, j)] = rng.random_range(*lo..*hi);
                }
            }
            ColumnLaw::FiniteSupport { points } => {
                let p = &points[rng.random_range(0..points.len())];
                for i in 0..m {
                    a[(i, j)] = p[i];
                }
            }
        }
    }
    let v = DVector::from_column_slice(&recipe.v);
    let mut b = DVector::zeros(m);
    for j in 0..n {
        let col = a.column(j);
        b += col / col.dot(&v);
    }
    b /= n as f64;
    Ok(GeneratedInstance { cs: ConstraintSystem::new(a, b)?, exact_lambda0: v * n as f64 })
}
