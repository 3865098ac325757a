//! Splitting the columns of `Â` into `K` groups whose Gram matrices are near `I/K`,
//! with determinant certificates.
//!
//! `cargo run --example property_a`

use polyclt::constraint_model::ConstraintSystem;
use polyclt::entropy_center::{solve_barycenter, BarycenterOptions};
use polyclt::standardization::{property_a_partition, standardize, PartitionOptions};

fn main() {
    let n = 120;
    let rows = vec![vec![1.0; n], (0..n).map(|j| 1.0 + (j % 5) as f64 * 0.25).collect()];
    let cs = ConstraintSystem::from_rows(&rows, &[1.0, 1.4]).unwrap();
    let bc = solve_barycenter(&cs, &BarycenterOptions::default()).unwrap();
    let ss = standardize(&cs, &bc).unwrap();

    let (k, epsilon) = (4, 0.05);
    let p = property_a_partition(&ss, k, epsilon, &PartitionOptions::default()).unwrap();
    println!("{k} groups of sizes {:?}", p.subsets.iter().map(Vec::len).collect::<Vec<_>>());
    println!("largest off-diagonal entry {:.4}, smallest diagonal {:.4}", p.epsilon_achieved, p.min_diagonal);
    for (i, (det, bound)) in p.determinants.iter().zip(&p.det_lower_bounds).enumerate() {
        println!("  group {i}: det {det:.5} >= Gershgorin bound {bound:.5}");
    }
    println!("certified for epsilon = {epsilon}: {}", p.is_certified(epsilon));

    // too many groups leaves too little mass on each diagonal
    match property_a_partition(&ss, 60, epsilon, &PartitionOptions::default()) {
        Ok(p) => println!("K = 60 certified: {}", p.is_certified(epsilon)),
        Err(e) => println!("K = 60: {e}"),
    }
}
