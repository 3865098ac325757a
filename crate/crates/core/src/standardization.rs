//! Standardized constraints `Â = (ÃÃᵗ)^{-1/2} Ã`, `Ã_ij = A_ij / w_j`.
//!
//! `Â` has orthonormal rows spanning the same space as `A`, and `b̂ = Â 1`.
//! The CLT variance of `Σ λ_j X_j` is the squared norm of the projection of
//! `λ̂ = λ / w` on `ker Â`.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::constraint_model::ConstraintSystem;
use crate::entropy_center::Barycenter;
use crate::linalg::{self, Householder, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StandardizeError {
    #[error("ÃÃᵗ is numerically singular (eigenvalue ratio {ratio:e})")]
    GramSingular { ratio: f64 },
    #[error("barycenter has centering residual {residual:e}, above {limit:e}")]
    CenteringResidual { residual: f64, limit: f64 },
    #[error("barycenter has {got} weights but the system has {expected} columns")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct StandardizedSystem {
    pub w: DVector<f64>,
    pub a_tilde: DMatrix<f64>,
    pub a_hat: DMatrix<f64>,
    pub b_hat: DVector<f64>,
    /// `ÃÃᵗ`.
    pub gram: DMatrix<f64>,
    /// `(ÃÃᵗ)^{-1/2}`.
    pub whitening: DMatrix<f64>,
    /// `‖Â‖_max`.
    pub max_entry: f64,
}

impl StandardizedSystem {
    pub fn m(&self) -> usize {
        self.a_hat.nrows()
    }

    pub fn n(&self) -> usize {
        self.a_hat.ncols()
    }

    /// `‖ÂÂᵗ − I‖_max`.
    pub fn orthonormality_defect(&self) -> f64 {
        let m = self.m();
        linalg::max_abs(&(&self.a_hat * self.a_hat.transpose() - DMatrix::identity(m, m)))
    }

    /// `‖Â 1 − b̂‖∞`.
    pub fn b_identity_defect(&self) -> f64 {
        (&self.a_hat * DVector::from_element(self.n(), 1.0) - &self.b_hat).amax()
    }

    /// Euclidean norm of each column of `Â`.
    pub fn column_scores(&self) -> Vec<f64> {
        self.a_hat.column_iter().map(|c| c.norm()).collect()
    }
}

/// Builds `Ã`, `Â` and `b̂` from a barycenter of `cs`.
pub fn standardize(cs: &ConstraintSystem, bc: &Barycenter) -> Result<StandardizedSystem, StandardizeError> {
    if bc.w.len() != cs.n() {
        return Err(StandardizeError::DimensionMismatch { expected: cs.n(), got: bc.w.len() });
    }
    let limit = 1e-8 * cs.b().amax().max(1.0);
    let residual = cs.residual(bc.center().as_slice());
    if residual > limit {
        return Err(StandardizeError::CenteringResidual { residual, limit });
    }
    let mut a_tilde = cs.a().clone();
    for (j, mut col) in a_tilde.column_iter_mut().enumerate() {
        col /= bc.w[j];
    }
    let gram = &a_tilde * a_tilde.transpose();
    let whitening = linalg::sym_inv_sqrt(&gram, 1e-14).map_err(|e| match e {
        LinalgError::Singular { ratio } => StandardizeError::GramSingular { ratio },
        LinalgError::RankDeficient { .. } => StandardizeError::GramSingular { ratio: 0.0 },
    })?;
    let a_hat = &whitening * &a_tilde;
    let b_hat = &whitening * cs.b();
    let max_entry = linalg::max_abs(&a_hat);
    Ok(StandardizedSystem { w: bc.w.clone(), a_tilde, a_hat, b_hat, gram, whitening, max_entry })
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightSpec {
    pub lambda: DVector<f64>,
    /// `λ_j / w_j`.
    pub lambda_hat: DVector<f64>,
    /// `sqrt(‖λ̂‖² − ‖Âλ̂‖²)`, clamped at zero.
    pub sigma: f64,
    /// The same quantity as the norm of the coordinates of `λ̂` in an
    /// orthonormal basis of `ker Â`.
    pub sigma_kernel: f64,
    pub max_lambda_hat: f64,
}

/// The weights `λ` whose standardized version is `lambda_hat`.
pub fn lambda_from_hat(ss: &StandardizedSystem, lambda_hat: &DVector<f64>) -> DVector<f64> {
    lambda_hat.component_mul(&ss.w)
}

pub fn weight_spec(ss: &StandardizedSystem, lambda: &DVector<f64>) -> WeightSpec {
    let lambda_hat = lambda.component_div(&ss.w);
    let projected = &ss.a_hat * &lambda_hat;
    let sigma_sq = lambda_hat.norm_squared() - projected.norm_squared();
    if sigma_sq < -1e-12 * lambda_hat.norm_squared().max(1.0) {
        warn!("σ² = {sigma_sq:e} is negative beyond roundoff");
    }
    // Âᵗ = Q R, so coordinates m.. of Qᵗλ̂ are the kernel coordinates
    let qr = Householder::new(&ss.a_hat.transpose());
    let mut coords = lambda_hat.as_slice().to_vec();
    qr.apply_qt(&mut coords);
    let sigma_kernel = coords[ss.m()..].iter().map(|c| c * c).sum::<f64>().sqrt();
    WeightSpec {
        max_lambda_hat: lambda_hat.amax(),
        sigma: sigma_sq.max(0.0).sqrt(),
        sigma_kernel,
        lambda_hat,
        lambda: lambda.clone(),
    }
}

pub const DEFAULT_COLUMN_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub max_entry: f64,
    pub threshold: f64,
    pub column_scores: Vec<f64>,
    /// Columns whose score exceeds the threshold, in increasing order.
    pub flagged: Vec<usize>,
    pub max_lambda_hat: Option<f64>,
    pub lambda_hat_norm: Option<f64>,
    pub sigma: Option<f64>,
}

pub fn assumption_report(ss: &StandardizedSystem, spec: Option<&WeightSpec>, threshold: f64) -> AssumptionReport {
    let column_scores = ss.column_scores();
    let flagged = column_scores.iter().enumerate().filter(|(_, s)| **s > threshold).map(|(j, _)| j).collect();
    AssumptionReport {
        max_entry: ss.max_entry,
        threshold,
        column_scores,
        flagged,
        max_lambda_hat: spec.map(|s| s.max_lambda_hat),
        lambda_hat_norm: spec.map(|s| s.lambda_hat.norm()),
        sigma: spec.map(|s| s.sigma),
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("K must be at least 1")]
    ZeroSubsets,
    #[error("no certified partition into {k} subsets (best off-diagonal size {best_epsilon:e})")]
    PartitionNotFound { k: usize, best_epsilon: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyAPartition {
    pub k: usize,
    pub subsets: Vec<Vec<usize>>,
    /// `g^m` with `g` the Gershgorin lower bound on the spectrum of `Â_I Â_Iᵗ`.
    pub det_lower_bounds: Vec<f64>,
    pub determinants: Vec<f64>,
    pub gershgorin: Vec<f64>,
    /// Largest off-diagonal entry of any `Â_I Â_Iᵗ`.
    pub epsilon_achieved: f64,
    /// Smallest diagonal entry of any `Â_I Â_Iᵗ`.
    pub min_diagonal: f64,
    pub unassigned: Vec<usize>,
    pub restart: usize,
}

#[derive(Debug, Clone)]
pub struct PartitionOptions {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        PartitionOptions { restarts: 32, seed: 0 }
    }
}

fn subset_gram(a_hat: &DMatrix<f64>, subset: &[usize]) -> DMatrix<f64> {
    let m = a_hat.nrows();
    let mut g = DMatrix::zeros(m, m);
    for &j in subset {
        let c = a_hat.column(j);
        g.ger(1.0, &c, &c, 1.0);
    }
    g
}

fn gershgorin(g: &DMatrix<f64>) -> f64 {
    let m = g.nrows();
    let lo = (0..m)
        .map(|i| g[(i, i)] - (0..m).filter(|&k| k != i).map(|k| g[(i, k)].abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    lo.max(0.0)
}

fn off_diagonal(g: &DMatrix<f64>) -> f64 {
    let m = g.nrows();
    (0..m).flat_map(|i| (0..m).filter(move |&k| k != i).map(move |k| (i, k))).map(|p| g[p].abs()).fold(0.0, f64::max)
}

/// One greedy pass: each subset grows towards `t·I`, `t = 1/(K+1)`, by adding
/// the unused column that brings the partial sum closest; leftover columns
/// then go to the subset with the weakest certificate when that does not
/// weaken it further.
fn greedy_pass(a_hat: &DMatrix<f64>, k: usize, order: &[usize]) -> (Vec<Vec<usize>>, Vec<usize>) {
    let m = a_hat.nrows();
    let t = 1.0 / (k as f64 + 1.0);
    let mut used = vec![false; a_hat.ncols()];
    let mut subsets = Vec::with_capacity(k);
    for _ in 0..k {
        let mut d = DMatrix::identity(m, m) * -t;
        let mut members = Vec::new();
        loop {
            let current = d.norm_squared();
            let mut best: Option<(usize, f64)> = None;
            for &j in order.iter().filter(|&&j| !used[j]) {
                let c = a_hat.column(j);
                let dist = current + 2.0 * c.dot(&(&d * c)) + c.norm_squared().powi(2);
                if best.is_none_or(|(_, b)| dist < b) {
                    best = Some((j, dist));
                }
            }
            match best {
                Some((j, dist)) if dist < current => {
                    used[j] = true;
                    members.push(j);
                    let c = a_hat.column(j);
                    d.ger(1.0, &c, &c, 1.0);
                }
                _ => break,
            }
        }
        subsets.push(members);
    }
    let mut grams: Vec<DMatrix<f64>> = subsets.iter().map(|s| subset_gram(a_hat, s)).collect();
    let mut unassigned = Vec::new();
    for &j in order.iter().filter(|&&j| !used[j]) {
        let c = a_hat.column(j);
        let mut choice: Option<(usize, f64)> = None;
        for (l, g) in grams.iter().enumerate() {
            let before = gershgorin(g);
            let mut after = g.clone();
            after.ger(1.0, &c, &c, 1.0);
            if gershgorin(&after) >= before && choice.is_none_or(|(_, b)| before < b) {
                choice = Some((l, before));
            }
        }
        match choice {
            Some((l, _)) => {
                grams[l].ger(1.0, &c, &c, 1.0);
                subsets[l].push(j);
            }
            None => unassigned.push(j),
        }
    }
    for s in subsets.iter_mut() {
        s.sort_unstable();
    }
    (subsets, unassigned)
}

fn certify(a_hat: &DMatrix<f64>, k: usize, restart: usize, subsets: Vec<Vec<usize>>, unassigned: Vec<usize>) -> PropertyAPartition {
    let m = a_hat.nrows();
    let grams: Vec<DMatrix<f64>> = subsets.iter().map(|s| subset_gram(a_hat, s)).collect();
    let gershgorin: Vec<f64> = grams.iter().map(gershgorin).collect();
    PropertyAPartition {
        k,
        det_lower_bounds: gershgorin.iter().map(|g| g.powi(m as i32)).collect(),
        determinants: grams.iter().map(|g| g.determinant()).collect(),
        epsilon_achieved: grams.iter().map(off_diagonal).fold(0.0, f64::max),
        min_diagonal: grams.iter().flat_map(|g| g.diagonal().iter().cloned().collect::<Vec<_>>()).fold(f64::INFINITY, f64::min),
        gershgorin,
        subsets,
        unassigned,
        restart,
    }
}

impl PropertyAPartition {
    /// Nonempty subsets, diagonal at least `1/(2K)`, off-diagonal at most
    /// `epsilon`, and a positive Gershgorin bound for every subset.
    pub fn is_certified(&self, epsilon: f64) -> bool {
        self.subsets.iter().all(|s| !s.is_empty())
            && self.min_diagonal >= 1.0 / (2.0 * self.k as f64)
            && self.epsilon_achieved <= epsilon
            && self.det_lower_bounds.iter().all(|d| *d > 0.0)
    }

    fn weakest_bound(&self) -> f64 {
        self.det_lower_bounds.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Searches for `K` disjoint column subsets whose Gram matrices are close to
/// diagonal with diagonal entries at least `1/(2K)`.
///
/// The first attempt scans columns in their natural order; further attempts
/// use seeded random orders and run in parallel. Among certified attempts the
/// one with the largest weakest determinant bound wins, ties going to the
/// lowest attempt index, so the result does not depend on thread scheduling.
pub fn property_a_partition(
    ss: &StandardizedSystem,
    k: usize,
    epsilon: f64,
    opts: &PartitionOptions,
) -> Result<PropertyAPartition, PartitionError> {
    if k == 0 {
        return Err(PartitionError::ZeroSubsets);
    }
    let (m, n) = (ss.m(), ss.n());
    if n < k * m {
        return Err(PartitionError::PartitionNotFound { k, best_epsilon: f64::INFINITY });
    }
    let attempt = |restart: usize| {
        let mut order: Vec<usize> = (0..n).collect();
        if restart > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(restart as u64);
            order.shuffle(&mut rng);
        }
        let (subsets, unassigned) = greedy_pass(&ss.a_hat, k, &order);
        certify(&ss.a_hat, k, restart, subsets, unassigned)
    };
    let first = attempt(0);
    if first.is_certified(epsilon) {
        return Ok(first);
    }
    let mut candidates: Vec<PropertyAPartition> = (1..=opts.restarts).into_par_iter().map(attempt).collect();
    candidates.push(first);
    let best_epsilon = candidates.iter().map(|c| c.epsilon_achieved).fold(f64::INFINITY, f64::min);
    candidates
        .into_iter()
        .filter(|c| c.is_certified(epsilon))
        .min_by(|a, b| b.weakest_bound().total_cmp(&a.weakest_bound()).then(a.restart.cmp(&b.restart)))
        .ok_or(PartitionError::PartitionNotFound { k, best_epsilon })
}
