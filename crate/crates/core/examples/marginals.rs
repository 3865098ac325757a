//! Scaled coordinates of a uniform point are nearly independent `Exp(1)`.
//!
//! `cargo run --release --example marginals`

use polyclt::constraint_model::ConstraintSystem;
use polyclt::diagnostics::marginal_experiment;
use polyclt::entropy_center::{solve_barycenter, BarycenterOptions};
use polyclt::samplers::{SamplerConfig, SamplerKind};

fn main() {
    for n in [5, 50, 500] {
        let cs = ConstraintSystem::simplex(n, 1.0, 1.0).unwrap();
        let bc = solve_barycenter(&cs, &BarycenterOptions::default()).unwrap();
        let cfg = SamplerConfig { chains: 4, ..SamplerConfig::new(SamplerKind::DirichletExact, 10_000, 2) };
        let r = marginal_experiment(&cs, &bc, &[0, 1], &cfg, false).unwrap();
        let first = &r.per_coordinate[0].ks;
        println!(
            "n = {n:>3}: KS(w_1 X_1, Exp(1)) = {:.4} (p = {:.3}), corr(X_1, X_2) = {:+.4}",
            first.statistic, first.p_value, r.correlations[0].correlation
        );
    }
}
