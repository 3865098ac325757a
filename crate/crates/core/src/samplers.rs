//! Point samplers: hit-and-run for the uniform law on `K_n`, an exact
//! Dirichlet sampler for the symmetric simplex, and the product exponential
//! law with rates `w`.
//!
//! Every generator is `ChaCha8Rng::seed_from_u64(seed)` on stream
//! `chain_index`, so a chain is reproduced bit for bit by `(seed, chain_index)`
//! no matter how many chains run side by side.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraint_model::ConstraintSystem;
use crate::linalg::{self, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error(transparent)]
    RankDeficient(#[from] LinalgError),
    #[error("start point is not interior (min coordinate {min:e}, residual {residual:e})")]
    StartNotInterior { min: f64, residual: f64 },
    #[error("{attempts} consecutive directions produced a chord shorter than 1e-14")]
    DegenerateChord { attempts: usize },
    #[error("the exact sampler needs a single constraint c·Σx = b with c, b > 0")]
    NotSymmetricSimplex,
    #[error("invalid sampler parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    HitAndRun,
    DirichletExact,
    ExpProduct,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleChain {
    pub points: Vec<Vec<f64>>,
    pub seed: u64,
    pub chain_index: u64,
    pub burn_in: usize,
    pub thin: usize,
    pub sampler_kind: SamplerKind,
}

fn rng_for(seed: u64, chain_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain_index);
    rng
}

/// Orthonormal basis of `ker A` as the columns of an `n × (n − m)` matrix.
pub fn kernel_basis(a: &DMatrix<f64>) -> Result<DMatrix<f64>, SamplerError> {
    Ok(linalg::null_space(a)?)
}

/// The interval `{t : x + t d >= 0}`, coordinates of `x` clipped at zero.
pub fn chord(x: &[f64], d: &[f64]) -> (f64, f64) {
    // branch-free so the loop vectorizes; d_j = 0 gives ±inf or NaN, which
    // the selects and max/min drop
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (xj, dj) in x.iter().zip(d) {
        let t = -xj.max(0.0) / dj;
        lo = lo.max(if *dj > 0.0 { t } else { f64::NEG_INFINITY });
        hi = hi.min(if *dj < 0.0 { t } else { f64::INFINITY });
    }
    (lo, hi)
}

/// A stream of points of some law on `R^n`.
pub trait PointSource {
    fn dim(&self) -> usize;
    fn next_point(&mut self, out: &mut [f64]) -> Result<(), SamplerError>;
}

pub const REPROJECT_EVERY: usize = 1000;
const MAX_CHORD_RETRIES: usize = 1000;

/// Hit-and-run chain on `K_n`. Directions are uniform on the unit sphere of
/// `ker A`, obtained by projecting a standard Gaussian with the row-space
/// frame, so one step costs `O(nm)`.
pub struct HitAndRun {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    x: Vec<f64>,
    dir: Vec<f64>,
    rng: ChaCha8Rng,
    steps: usize,
    thin: usize,
}

impl HitAndRun {
    pub fn new(cs: &ConstraintSystem, x0: &[f64], seed: u64, chain_index: u64) -> Result<Self, SamplerError> {
        let (q, r) = linalg::row_space_frame(cs.a())?;
        let min = x0.iter().cloned().fold(f64::INFINITY, f64::min);
        let residual = if x0.len() == cs.n() { cs.residual(x0) } else { f64::INFINITY };
        if !(min > 0.0) || residual > 1e-9 * cs.b().amax().max(1.0) {
            return Err(SamplerError::StartNotInterior { min, residual });
        }
        Ok(HitAndRun {
            q,
            r,
            a: cs.a().clone(),
            b: cs.b().clone(),
            x: x0.to_vec(),
            dir: vec![0.0; cs.n()],
            rng: rng_for(seed, chain_index),
            steps: 0,
            thin: 1,
        })
    }

    /// Number of steps taken between two emitted points.
    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin.max(1);
        self
    }

    pub fn current(&self) -> &[f64] {
        &self.x
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn draw_direction(&mut self) {
        for d in self.dir.iter_mut() {
            *d = self.rng.sample(StandardNormal);
        }
        let g = DVector::from_column_slice(&self.dir);
        let projected = &self.q * self.q.tr_mul(&g);
        for (d, p) in self.dir.iter_mut().zip(projected.iter()) {
            *d -= p;
        }
        let norm = self.dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.dir.iter_mut().for_each(|v| *v /= norm);
    }

    pub fn step(&mut self) -> Result<(), SamplerError> {
        for _ in 0..MAX_CHORD_RETRIES {
            self.draw_direction();
            let (lo, hi) = chord(&self.x, &self.dir);
            if !(hi - lo >= 1e-14) || !lo.is_finite() || !hi.is_finite() {
                continue;
            }
            let t = lo + (hi - lo) * self.rng.random::<f64>();
            for (x, d) in self.x.iter_mut().zip(&self.dir) {
                *x += t * d;
            }
            self.steps += 1;
            if self.steps.is_multiple_of(REPROJECT_EVERY) {
                self.reproject();
            }
            return Ok(());
        }
        Err(SamplerError::DegenerateChord { attempts: MAX_CHORD_RETRIES })
    }

    /// `x ← x − Q R^{-ᵗ} (A x − b)`, the least-norm correction back onto `Ax = b`.
    fn reproject(&mut self) {
        let x = DVector::from_column_slice(&self.x);
        let residual = &self.a * &x - &self.b;
        if let Some(y) = self.r.transpose().solve_lower_triangular(&residual) {
            let fix = &self.q * y;
            for (xi, fi) in self.x.iter_mut().zip(fix.iter()) {
                *xi -= fi;
            }
        }
    }

    pub fn burn(&mut self, steps: usize) -> Result<(), SamplerError> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }
}

impl PointSource for HitAndRun {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn next_point(&mut self, out: &mut [f64]) -> Result<(), SamplerError> {
        self.burn(self.thin)?;
        out.copy_from_slice(&self.x);
        Ok(())
    }
}

/// Uniform points of `{x >= 0 : c Σx = b}` as `(b/c) E / ΣE`, `E_j ~ Exp(1)`.
pub struct DirichletSource {
    n: usize,
    scale: f64,
    rng: ChaCha8Rng,
}

impl DirichletSource {
    pub fn new(n: usize, c: f64, b: f64, seed: u64, chain_index: u64) -> Result<Self, SamplerError> {
        if !(c > 0.0 && b > 0.0) || n == 0 {
            return Err(SamplerError::NotSymmetricSimplex);
        }
        Ok(DirichletSource { n, scale: b / c, rng: rng_for(seed, chain_index) })
    }
}

impl PointSource for DirichletSource {
    fn dim(&self) -> usize {
        self.n
    }

    fn next_point(&mut self, out: &mut [f64]) -> Result<(), SamplerError> {
        let mut total = 0.0;
        for o in out.iter_mut() {
            *o = self.rng.sample(Exp1);
            total += *o;
        }
        let k = self.scale / total;
        out.iter_mut().for_each(|o| *o *= k);
        Ok(())
    }
}

/// Independent coordinates `X_j ~ Exp(w_j)`.
pub struct ExpProductSource {
    w: Vec<f64>,
    rng: ChaCha8Rng,
}

impl ExpProductSource {
    pub fn new(w: &[f64], seed: u64, chain_index: u64) -> Result<Self, SamplerError> {
        if w.iter().any(|v| !(*v > 0.0)) {
            return Err(SamplerError::InvalidParameter("rates must be positive".into()));
        }
        Ok(ExpProductSource { w: w.to_vec(), rng: rng_for(seed, chain_index) })
    }
}

impl PointSource for ExpProductSource {
    fn dim(&self) -> usize {
        self.w.len()
    }

    fn next_point(&mut self, out: &mut [f64]) -> Result<(), SamplerError> {
        for (o, w) in out.iter_mut().zip(&self.w) {
            let e: f64 = self.rng.sample(Exp1);
            *o = e / w;
        }
        Ok(())
    }
}

fn collect(source: &mut impl PointSource, count: usize) -> Result<Vec<Vec<f64>>, SamplerError> {
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let mut x = vec![0.0; source.dim()];
        source.next_point(&mut x)?;
        points.push(x);
    }
    Ok(points)
}

pub fn default_burn_in(cs: &ConstraintSystem) -> usize {
    10 * (cs.n() - cs.m())
}

pub fn default_thin(cs: &ConstraintSystem) -> usize {
    cs.n() - cs.m()
}

/// `count` hit-and-run points after `burn_in` steps, one every `thin` steps.
pub fn hit_and_run(
    cs: &ConstraintSystem,
    x0: &[f64],
    count: usize,
    seed: u64,
    burn_in: Option<usize>,
    thin: Option<usize>,
) -> Result<SampleChain, SamplerError> {
    let burn_in = burn_in.unwrap_or_else(|| default_burn_in(cs));
    let thin = thin.unwrap_or_else(|| default_thin(cs)).max(1);
    let mut chain = HitAndRun::new(cs, x0, seed, 0)?.with_thin(thin);
    chain.burn(burn_in)?;
    Ok(SampleChain {
        points: collect(&mut chain, count)?,
        seed,
        chain_index: 0,
        burn_in,
        thin,
        sampler_kind: SamplerKind::HitAndRun,
    })
}

pub fn dirichlet_exact(n: usize, c: f64, b: f64, count: usize, seed: u64) -> Result<SampleChain, SamplerError> {
    let mut source = DirichletSource::new(n, c, b, seed, 0)?;
    Ok(SampleChain {
        points: collect(&mut source, count)?,
        seed,
        chain_index: 0,
        burn_in: 0,
        thin: 1,
        sampler_kind: SamplerKind::DirichletExact,
    })
}

pub fn exp_product(w: &[f64], count: usize, seed: u64) -> Result<SampleChain, SamplerError> {
    let mut source = ExpProductSource::new(w, seed, 0)?;
    Ok(SampleChain {
        points: collect(&mut source, count)?,
        seed,
        chain_index: 0,
        burn_in: 0,
        thin: 1,
        sampler_kind: SamplerKind::ExpProduct,
    })
}

/// How an experiment draws its points.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub count: usize,
    pub seed: u64,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    /// Independent chains; chain `i` uses stream `i` and contributes a
    /// contiguous block of the output.
    pub chains: usize,
}

impl SamplerConfig {
    pub fn new(kind: SamplerKind, count: usize, seed: u64) -> Self {
        SamplerConfig { kind, count, seed, burn_in: None, thin: None, chains: 1 }
    }

    fn chain_sizes(&self) -> Vec<usize> {
        let chains = self.chains.max(1);
        (0..chains).map(|i| self.count / chains + usize::from(i < self.count % chains)).collect()
    }
}

/// Draws points per `cfg` and maps each through `f` without storing them.
/// `start` is the hit-and-run start (usually `1/w`); `rates` are needed for
/// the exponential product law.
pub fn map_points<T, F>(
    cs: &ConstraintSystem,
    start: &[f64],
    rates: &[f64],
    cfg: &SamplerConfig,
    f: F,
) -> Result<Vec<T>, SamplerError>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
{
    let blocks: Vec<Result<Vec<T>, SamplerError>> = cfg
        .chain_sizes()
        .into_par_iter()
        .enumerate()
        .map(|(i, size)| {
            let mut source: Box<dyn PointSource> = match cfg.kind {
                SamplerKind::HitAndRun => {
                    let thin = cfg.thin.unwrap_or_else(|| default_thin(cs));
                    let mut h = HitAndRun::new(cs, start, cfg.seed, i as u64)?.with_thin(thin);
                    h.burn(cfg.burn_in.unwrap_or_else(|| default_burn_in(cs)))?;
                    Box::new(h)
                }
                SamplerKind::DirichletExact => {
                    let c = cs.symmetric_simplex_coefficient().ok_or(SamplerError::NotSymmetricSimplex)?;
                    Box::new(DirichletSource::new(cs.n(), c, cs.b()[0], cfg.seed, i as u64)?)
                }
                SamplerKind::ExpProduct => Box::new(ExpProductSource::new(rates, cfg.seed, i as u64)?),
            };
            let mut x = vec![0.0; source.dim()];
            let mut out = Vec::with_capacity(size);
            for _ in 0..size {
                source.next_point(&mut x)?;
                out.push(f(&x));
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(cfg.count);
    for block in blocks {
        all.extend(block?);
    }
    Ok(all)
}
