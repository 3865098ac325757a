//! Box probabilities under the uniform law from a mixture of exponentials,
//! checked against the closed form on the triangle.
//!
//! `cargo run --release --example mixture`

use polyclt::constraint_model::ConstraintSystem;
use polyclt::entropy_center::{solve_barycenter, BarycenterOptions};
use polyclt::fourier::{mixture_box_probability, BoxSet, QuadOptions};

fn main() {
    let cs = ConstraintSystem::simplex(3, 1.0, 1.0).unwrap();
    let bc = solve_barycenter(&cs, &BarycenterOptions::default()).unwrap();
    let plus = |v: f64| v.max(0.0).powi(2);
    for a in [0.4, 0.5, 0.75, 1.0] {
        // inclusion-exclusion over the corners cut off the triangle
        let exact = 1.0 - 3.0 * plus(1.0 - a) + 3.0 * plus(1.0 - 2.0 * a) - plus(1.0 - 3.0 * a);
        let p = mixture_box_probability(&cs, &bc, &BoxSet::cube(3, 0.0, a), &QuadOptions::default()).unwrap();
        println!("P(max x_j <= {a}) = {:.6}, exact {exact:.6}, error estimate {:.1e}", p.re, p.abs_error_estimate);
    }

    let band = BoxSet { lo: vec![0.2, 0.0, 0.0], hi: vec![0.6, f64::INFINITY, f64::INFINITY] };
    let p = mixture_box_probability(&cs, &bc, &band, &QuadOptions::default()).unwrap();
    println!("P(0.2 <= x_1 <= 0.6) = {:.6}, exact {:.6}", p.re, plus(0.8) - plus(0.4));
}
