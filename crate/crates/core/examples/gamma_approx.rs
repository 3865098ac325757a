//! Replacing the constraint by a Gaussian penalty of strength `γ`: the box
//! probability converges to the uniform one at rate `1/γ`.
//!
//! `cargo run --example gamma_approx`

use polyclt::constraint_model::ConstraintSystem;
use polyclt::entropy_center::{solve_barycenter, BarycenterOptions};
use polyclt::fourier::{gamma_box_probability, BoxSet, QuadOptions};

fn main() {
    // on the segment x_1 + x_2 = 1, P(x_1 <= a) = a
    let cs = ConstraintSystem::simplex(2, 1.0, 1.0).unwrap();
    let bc = solve_barycenter(&cs, &BarycenterOptions::default()).unwrap();
    for a in [0.25, 0.5] {
        let set = BoxSet { lo: vec![0.0, 0.0], hi: vec![a, f64::INFINITY] };
        for gamma in [1e1, 1e2, 1e3, 1e4] {
            let p = gamma_box_probability(&cs, &bc, gamma, &set, &QuadOptions::default()).unwrap();
            println!("a = {a}, γ = {gamma:>7}: {:.6}, error {:+.2e}", p.value, p.value - a);
        }
    }
}
