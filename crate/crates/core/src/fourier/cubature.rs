//! Adaptive tensor Gauss–Legendre cubature on boxes.
//!
//! Each panel carries two estimates: the rule on the panel itself and the sum
//! of the rule over its `2^d` halves. Their difference is the panel's error
//! estimate; the panel with the largest error is split next. Panels are
//! created and summed in a fixed order, so results do not depend on how many
//! threads evaluate them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CubatureError {
    #[error("cubature hit its budget of {panels} panels with error {error:e} (value {value:?})")]
    BudgetExceeded { panels: usize, value: Vec<f64>, error: f64 },
    #[error("integration box has mismatched or invalid bounds")]
    InvalidBox,
}

#[derive(Debug, Clone)]
pub struct CubatureOptions {
    pub abs_tol: f64,
    /// Relative to the largest component of the running estimate.
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Gauss–Legendre nodes per dimension.
    pub order: usize,
    /// Divisions per dimension of the initial grid; `None` picks 16, 8, 4, 2
    /// for dimensions 1, 2, 3 and higher.
    pub initial_divisions: Option<usize>,
}

impl Default for CubatureOptions {
    fn default() -> Self {
        CubatureOptions { abs_tol: 1e-10, rel_tol: 1e-10, max_panels: 200_000, order: 8, initial_divisions: None }
    }
}

#[derive(Debug, Clone)]
pub struct CubatureResult<const K: usize> {
    pub value: [f64; K],
    /// Per-component sum of panel error estimates.
    pub error: [f64; K],
    pub panels: usize,
    pub evaluations: usize,
}

impl<const K: usize> CubatureResult<K> {
    pub fn max_error(&self) -> f64 {
        self.error.iter().cloned().fold(0.0, f64::max)
    }
}

/// Nodes and weights of the `order`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let nf = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    fn apply<const K: usize, F>(&self, f: &F, lo: &[f64], hi: &[f64]) -> [f64; K]
    where
        F: Fn(&[f64]) -> [f64; K] + Sync,
    {
        let d = lo.len();
        let p = self.nodes.len();
        let total = p.pow(d as u32);
        let half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
        let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let jac: f64 = half.iter().product();
        let point = |mut idx: usize, x: &mut [f64]| {
            let mut w = jac;
            for k in 0..d {
                let i = idx % p;
                idx /= p;
                x[k] = mid[k] + half[k] * self.nodes[i];
                w *= self.weights[i];
            }
            w
        };
        let eval = |idx: usize| {
            let mut x = vec![0.0; d];
            let w = point(idx, &mut x);
            let v = f(&x);
            let mut out = [0.0; K];
            for k in 0..K {
                out[k] = w * v[k];
            }
            out
        };
        // fixed-order reduction so the sum is the same with any thread count
        let terms: Vec<[f64; K]> = if total >= 256 {
            (0..total).into_par_iter().map(eval).collect()
        } else {
            (0..total).map(eval).collect()
        };
        let mut acc = [0.0; K];
        for t in terms {
            for k in 0..K {
                acc[k] += t[k];
            }
        }
        acc
    }
}

struct Panel<const K: usize> {
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Rule applied to each half, in child order.
    halves: Vec<[f64; K]>,
    fine: [f64; K],
    error: [f64; K],
}

fn children(lo: &[f64], hi: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let d = lo.len();
    (0..1usize << d)
        .map(|mask| {
            let mut clo = lo.to_vec();
            let mut chi = hi.to_vec();
            for k in 0..d {
                let mid = 0.5 * (lo[k] + hi[k]);
                if mask >> k & 1 == 1 {
                    clo[k] = mid;
                } else {
                    chi[k] = mid;
                }
            }
            (clo, chi)
        })
        .collect()
}

fn make_panel<const K: usize, F>(rule: &Rule, f: &F, lo: Vec<f64>, hi: Vec<f64>, coarse: [f64; K]) -> Panel<K>
where
    F: Fn(&[f64]) -> [f64; K] + Sync,
{
    let halves: Vec<[f64; K]> = children(&lo, &hi).iter().map(|(a, b)| rule.apply(f, a, b)).collect();
    let mut fine = [0.0; K];
    for h in &halves {
        for k in 0..K {
            fine[k] += h[k];
        }
    }
    let mut error = [0.0; K];
    for k in 0..K {
        error[k] = (fine[k] - coarse[k]).abs();
    }
    Panel { lo, hi, halves, fine, error }
}

struct Queued {
    error: f64,
    id: usize,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then(other.id.cmp(&self.id))
    }
}

/// Integrates the `K`-component function `f` over the box `[lo, hi]`.
pub fn integrate<const K: usize, F>(
    f: &F,
    lo: &[f64],
    hi: &[f64],
    opts: &CubatureOptions,
) -> Result<CubatureResult<K>, CubatureError>
where
    F: Fn(&[f64]) -> [f64; K] + Sync,
{
    let d = lo.len();
    if d == 0 || hi.len() != d || lo.iter().zip(hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
        return Err(CubatureError::InvalidBox);
    }
    let (nodes, weights) = gauss_legendre(opts.order.max(1));
    let rule = Rule { nodes, weights };
    let per_panel = opts.order.pow(d as u32) * (1 + (1 << d));
    let divisions = opts.initial_divisions.unwrap_or(match d {
        1 => 16,
        2 => 8,
        3 => 4,
        _ => 2,
    });

    // initial grid, panel order fixed by the grid index
    let cells: Vec<(Vec<f64>, Vec<f64>)> = (0..divisions.pow(d as u32))
        .map(|mut idx| {
            let mut a = vec![0.0; d];
            let mut b = vec![0.0; d];
            for k in 0..d {
                let i = idx % divisions;
                idx /= divisions;
                let step = (hi[k] - lo[k]) / divisions as f64;
                a[k] = lo[k] + step * i as f64;
                b[k] = if i + 1 == divisions { hi[k] } else { lo[k] + step * (i + 1) as f64 };
            }
            (a, b)
        })
        .collect();
    let mut panels: Vec<Option<Panel<K>>> = cells
        .into_par_iter()
        .map(|(a, b)| {
            let coarse = rule.apply(f, &a, &b);
            Some(make_panel(&rule, f, a, b, coarse))
        })
        .collect();
    let mut evaluations = panels.len() * per_panel;
    let mut heap: BinaryHeap<Queued> = panels
        .iter()
        .enumerate()
        .map(|(id, p)| Queued { error: p.as_ref().unwrap().error.iter().cloned().fold(0.0, f64::max), id })
        .collect();

    let mut active = panels.len();
    loop {
        let (value, error) = totals(&panels);
        let scale = value.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let max_err = error.iter().cloned().fold(0.0, f64::max);
        if max_err <= opts.abs_tol.max(opts.rel_tol * scale) {
            return Ok(CubatureResult { value, error, panels: active, evaluations });
        }
        if active + (1 << d) - 1 > opts.max_panels {
            return Err(CubatureError::BudgetExceeded { panels: active, value: value.to_vec(), error: max_err });
        }
        let Some(Queued { id, .. }) = heap.pop() else {
            return Ok(CubatureResult { value, error, panels: active, evaluations });
        };
        let parent = panels[id].take().unwrap();
        let split: Vec<Panel<K>> = children(&parent.lo, &parent.hi)
            .into_par_iter()
            .zip(parent.halves.into_par_iter())
            .map(|((a, b), coarse)| make_panel(&rule, f, a, b, coarse))
            .collect();
        evaluations += split.len() * opts.order.pow(d as u32) * (1 << d);
        for p in split {
            let error = p.error.iter().cloned().fold(0.0, f64::max);
            heap.push(Queued { error, id: panels.len() });
            panels.push(Some(p));
        }
        active += (1 << d) - 1;
    }
}

fn totals<const K: usize>(panels: &[Option<Panel<K>>]) -> ([f64; K], [f64; K]) {
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    for p in panels.iter().flatten() {
        for k in 0..K {
            value[k] += p.fine[k];
            error[k] += p.error[k];
        }
    }
    (value, error)
}
