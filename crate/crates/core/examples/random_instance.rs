//! Random instances whose dual optimum is known in advance, used as a
//! self-check of the barycenter solver.
//!
//! `cargo run --release --example random_instance`

use polyclt::diagnostics::{random_instance, ColumnLaw, InstanceRecipe};
use polyclt::entropy_center::{solve_barycenter, BarycenterOptions};
use polyclt::standardization::standardize;

fn main() {
    let law = ColumnLaw::FiniteSupport { points: vec![vec![1.0, 0.5], vec![0.5, 2.0], vec![2.0, 1.0]] };
    for n in [100, 400, 1600] {
        let recipe = InstanceRecipe { m: 2, n, law: law.clone(), v: vec![1.0, 0.5], seed: 17 };
        let inst = random_instance(&recipe).unwrap();
        let bc = solve_barycenter(&inst.cs, &BarycenterOptions::default()).unwrap();
        let err = (&bc.lambda0 - &inst.exact_lambda0).amax() / inst.exact_lambda0.amax();
        let ss = standardize(&inst.cs, &bc).unwrap();
        println!(
            "n = {n:>4}: Λ₀ = {:.6?}, expected n·v = {:?}, rel err {err:.1e}, max |Â_ij| = {:.4}",
            bc.lambda0.as_slice(),
            inst.exact_lambda0.as_slice(),
            ss.max_entry
        );
    }
}
