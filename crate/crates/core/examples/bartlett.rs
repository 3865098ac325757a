//! Characteristic function of a linear statistic as a ratio of Fourier integrals,
//! compared with its Gaussian limit.
//!
//! `cargo run --release --example bartlett`

use nalgebra::DVector;
use polyclt::constraint_model::ConstraintSystem;
use polyclt::entropy_center::{solve_barycenter, BarycenterOptions};
use polyclt::fourier::{bartlett_cf, gaussian_limit, QuadOptions};
use polyclt::standardization::{lambda_from_hat, standardize, weight_spec};

fn main() {
    for n in [10, 100, 1000] {
        let cs = ConstraintSystem::simplex(n, 1.0, 1.0).unwrap();
        let bc = solve_barycenter(&cs, &BarycenterOptions::default()).unwrap();
        let ss = standardize(&cs, &bc).unwrap();
        // alternating signs are orthogonal to the constraint row, so σ = 1
        let raw = DVector::from_fn(n, |j, _| if j % 2 == 0 { 1.0 } else { -1.0 });
        let spec = weight_spec(&ss, &lambda_from_hat(&ss, &(&raw / raw.norm())));
        print!("n = {n:>4}:");
        for t in [0.5, 1.0, 2.0] {
            let cf = bartlett_cf(&ss, &spec, t, &QuadOptions::default()).unwrap();
            print!("  t={t}: {:.5} (limit {:.5}, err {:.0e})", cf.re, gaussian_limit(t, spec.sigma), cf.abs_error_estimate);
        }
        println!();
    }
}
