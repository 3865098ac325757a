//! Validating a signed constraint system and rewriting it with positive entries.
//!
//! `cargo run --example positivize`

use polyclt::constraint_model::{coordinate_range, positivize, validate, ConstraintSystem};

fn main() {
    // x_1 − x_2 + x_3 = 0.5, x_1 + x_2 + x_3 + x_4 = 2
    let cs = ConstraintSystem::from_rows(&[vec![1.0, -1.0, 1.0, 0.0], vec![1.0, 1.0, 1.0, 1.0]], &[0.5, 2.0]).unwrap();
    let report = validate(&cs).unwrap();
    println!(
        "rank {}, feasible {}, compact {}, interior {} (margin {:.3}), column removal safe {}",
        report.rank_ok,
        report.feasible,
        report.compact,
        report.interior_nonempty,
        report.interior_margin,
        report.column_removal_safe
    );
    for j in 0..cs.n() {
        let (lo, hi) = coordinate_range(&cs, j).unwrap();
        println!("  x_{} ranges over [{lo:.3}, {hi:.3}]", j + 1);
    }

    let pos = positivize(&cs).unwrap();
    println!("positive form, all entries > 0: {}", pos.is_positive());
    println!("A' = {}", pos.a());
    println!("b' = {:?}", pos.b().as_slice());

    // the two systems describe the same polytope
    let x = [0.5, 0.5, 0.5, 0.5];
    println!("residuals at (1/2, 1/2, 1/2, 1/2): {:.1e} and {:.1e}", cs.residual(&x), pos.residual(&x));

    // a system with a recession direction is rejected
    let open = ConstraintSystem::from_rows(&[vec![1.0, -1.0]], &[0.0]).unwrap();
    println!("x_1 = x_2 is compact: {}", validate(&open).unwrap().compact);
}
