//! Standardized constraint matrix, `b̂` and the variance `σ²` of a linear statistic.
//!
//! `cargo run --example standardize`

use nalgebra::DVector;
use polyclt::constraint_model::ConstraintSystem;
use polyclt::entropy_center::{solve_barycenter, BarycenterOptions};
use polyclt::standardization::{assumption_report, standardize, weight_spec, DEFAULT_COLUMN_THRESHOLD};

fn main() {
    let n = 40;
    let rows = vec![vec![1.0; n], (0..n).map(|j| 1.0 + (j % 4) as f64).collect()];
    let cs = ConstraintSystem::from_rows(&rows, &[1.0, 2.0]).unwrap();
    let bc = solve_barycenter(&cs, &BarycenterOptions::default()).unwrap();
    let ss = standardize(&cs, &bc).unwrap();

    println!("‖ÂÂᵗ − I‖ = {:.1e}", ss.orthonormality_defect());
    println!("‖b̂ − Â1‖ = {:.1e}", ss.b_identity_defect());
    println!("‖b̂‖² = {:.6} (always n = {n})", ss.b_hat.norm_squared());
    println!("max |Â_ij| = {:.4}", ss.max_entry);

    // S = Σ λ_j x_j with λ_j = w_j (−1)^j
    let lambda = DVector::from_fn(n, |j, _| bc.w[j] * if j % 2 == 0 { 1.0 } else { -1.0 });
    let spec = weight_spec(&ss, &lambda);
    println!("σ = {:.6}, from a kernel basis {:.6}", spec.sigma, spec.sigma_kernel);

    let report = assumption_report(&ss, Some(&spec), DEFAULT_COLUMN_THRESHOLD);
    println!("columns above {}: {:?}", report.threshold, report.flagged);
}
