//! Entropy barycenter of a two-row polytope and its dual certificate.
//!
//! `cargo run --example barycenter`

use polyclt::constraint_model::ConstraintSystem;
use polyclt::entropy_center::{entropy_certificate, solve_barycenter, BarycenterOptions};
use polyclt::samplers::hit_and_run;

fn main() {
    // x_1 + ... + x_8 = 2 and x_1 + x_2 + x_3 = 1
    let n = 8;
    let rows = vec![vec![1.0; n], (0..n).map(|j| if j < 3 { 1.0 } else { 0.0 }).collect()];
    let cs = ConstraintSystem::from_rows(&rows, &[2.0, 1.0]).unwrap();

    let bc = solve_barycenter(&cs, &BarycenterOptions::default()).unwrap();
    println!("Λ₀ = {:?}", bc.lambda0.as_slice());
    println!("w  = {:?}", bc.w.as_slice());
    println!("first three rates are 3, the others n − 3 = {}", n - 3);
    println!(
        "{} Newton steps, residual {:.1e}, dual value {:.6}",
        bc.iterations, bc.centering_residual, bc.dual_value
    );

    // every point of the polytope has Σ log x_j ≤ −Σ log w_j
    let chain = hit_and_run(&cs, bc.center().as_slice(), 200, 1, None, None).unwrap();
    let cert = entropy_certificate(&cs, &bc, &chain.points).unwrap();
    println!("entropy certificate on 200 points: holds {}, min margin {:.3}", cert.holds, cert.min_margin);
}
