//! Gaussian limit of a linear statistic under the uniform law on a simplex.
//!
//! `cargo run --release --example clt`

use nalgebra::DVector;
use polyclt::constraint_model::ConstraintSystem;
use polyclt::diagnostics::clt_experiment;
use polyclt::entropy_center::{solve_barycenter, BarycenterOptions};
use polyclt::samplers::{SamplerConfig, SamplerKind};
use polyclt::standardization::{lambda_from_hat, standardize, weight_spec};

fn main() {
    let n = 500;
    let cs = ConstraintSystem::simplex(n, 1.0, 1.0).unwrap();
    let bc = solve_barycenter(&cs, &BarycenterOptions::default()).unwrap();
    let ss = standardize(&cs, &bc).unwrap();

    // spread-out weights: λ̂_j ∝ cos(j), so no single coordinate dominates
    let raw = DVector::from_fn(n, |j, _| (j as f64).cos());
    let lambda = lambda_from_hat(&ss, &(&raw / raw.norm()));
    let spec = weight_spec(&ss, &lambda);
    println!("σ = {:.4}, max |λ̂_j| = {:.4}", spec.sigma, spec.max_lambda_hat);

    let cfg = SamplerConfig { chains: 4, ..SamplerConfig::new(SamplerKind::DirichletExact, 10_000, 1) };
    let report = clt_experiment(&cs, &bc, &lambda, &cfg, false).unwrap();
    let m = &report.moments;
    println!("KS against N(0, 1): {:.4} (p = {:.3})", report.ks.statistic, report.ks.p_value);
    println!(
        "mean {:.3} ± {:.3}, variance {:.3} ± {:.3}, skewness {:.3}, excess kurtosis {:.3}",
        m.mean, m.stderr[0], m.variance, m.stderr[1], m.skewness, m.excess_kurtosis
    );

    // a statistic carried by one coordinate stays exponential, not Gaussian
    let spike = lambda_from_hat(&ss, &DVector::from_fn(n, |j, _| if j == 0 { 1.0 } else { 0.0 }));
    let report = clt_experiment(&cs, &bc, &spike, &cfg, false).unwrap();
    println!("single-coordinate statistic: KS {:.4}, skewness {:.3}", report.ks.statistic, report.moments.skewness);
}
