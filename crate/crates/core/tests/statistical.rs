//! Monte Carlo checks against laws that are known in closed form.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use polyclt::constraint_model::ConstraintSystem;
use polyclt::diagnostics::{
    clt_experiment, ks_test, ks_two_sample, marginal_experiment, moment_report, random_instance, ColumnLaw,
    InstanceRecipe, Reference,
};
use polyclt::entropy_center::{entropy_certificate, solve_barycenter, Barycenter, BarycenterOptions};
use polyclt::fourier::{bartlett_cf, mixture_box_probability, BoxSet, QuadOptions};
use polyclt::samplers::{dirichlet_exact, exp_product, hit_and_run, SamplerConfig, SamplerKind};
use polyclt::standardization::{standardize, weight_spec};

fn solve(cs: &ConstraintSystem) -> Barycenter {
    solve_barycenter(cs, &BarycenterOptions::default()).unwrap()
}

fn column(points: &[Vec<f64>], j: usize) -> Vec<f64> {
    points.iter().map(|p| p[j]).collect()
}

#[test]
fn segment_marginal_is_uniform() {
    let cs = ConstraintSystem::simplex(2, 1.0, 1.0).unwrap();
    let chain = hit_and_run(&cs, &[0.5, 0.5], 10_000, 1, None, Some(5)).unwrap();
    assert!(chain.points.iter().all(|p| (p[0] + p[1] - 1.0).abs() <= 1e-9 && p[0] >= -1e-12));
    let ks = ks_test(&column(&chain.points, 0), &Reference::Uniform01).unwrap();
    assert!(ks.statistic <= 0.02, "{ks:?}");
}

#[test]
fn hit_and_run_on_triangle_matches_beta() {
    let cs = ConstraintSystem::simplex(3, 1.0, 1.0).unwrap();
    let chain = hit_and_run(&cs, &[1.0 / 3.0; 3], 10_000, 2, None, Some(6)).unwrap();
    let ks = ks_test(&column(&chain.points, 0), &Reference::Beta1 { k: 2.0 }).unwrap();
    assert!(ks.statistic <= 0.02, "{ks:?}");
}

#[test]
fn hit_and_run_agrees_with_exact_sampler() {
    let cs = ConstraintSystem::simplex(5, 1.0, 1.0).unwrap();
    let walk = hit_and_run(&cs, &[0.2; 5], 10_000, 3, None, Some(20)).unwrap();
    let exact = dirichlet_exact(5, 1.0, 1.0, 10_000, 3).unwrap();
    let ks = ks_two_sample(&column(&walk.points, 0), &column(&exact.points, 0)).unwrap();
    assert!(ks.statistic <= 0.03, "{ks:?}");
}

#[test]
fn dirichlet_box_frequency_and_exchangeability() {
    let n = 40_000;
    let chain = dirichlet_exact(3, 1.0, 1.0, n, 4).unwrap();
    let mean: Vec<f64> = (0..3).map(|j| column(&chain.points, j).iter().sum::<f64>() / n as f64).collect();
    let se = (2.0 / 36.0 / n as f64).sqrt(); // Var Beta(1,2) = 1/18
    assert!(mean.iter().all(|m| (m - 1.0 / 3.0).abs() <= 3.0 * se), "{mean:?}");

    let hits = chain.points.iter().filter(|p| p.iter().all(|x| *x <= 0.5)).count() as f64 / n as f64;
    assert!((hits - 0.25).abs() <= 3.0 * (0.25f64 * 0.75 / n as f64).sqrt(), "{hits}");

    let swapped = ks_two_sample(&column(&chain.points[..n / 2], 0), &column(&chain.points[n / 2..], 1)).unwrap();
    assert!(swapped.p_value > 0.01, "{swapped:?}");
}

#[test]
fn product_law_moments_and_centering() {
    let cs = ConstraintSystem::from_rows(&[vec![1.0, 1.0, 1.0, 1.0, 1.0], vec![1.0, 2.0, 3.0, 1.0, 2.0]], &[1.0, 1.8]).unwrap();
    let bc = solve(&cs);
    let n = 50_000;
    let chain = exp_product(bc.w.as_slice(), n, 5).unwrap();
    let mut mean = DVector::zeros(5);
    for j in 0..5 {
        let xs = column(&chain.points, j);
        let r = moment_report(&xs);
        let w = bc.w[j];
        assert!((r.mean - 1.0 / w).abs() <= 3.0 * r.stderr[0], "mean {j}");
        assert!((r.variance - 1.0 / (w * w)).abs() <= 3.0 * r.stderr[1], "variance {j}");
        mean[j] = r.mean;
    }
    // A·(sample mean) = b up to sampling error; each row sum has sd <= ‖A_l/w‖/√n
    let residual = cs.a() * &mean - cs.b();
    for l in 0..2 {
        let sd = (0..5).map(|j| (cs.a()[(l, j)] / bc.w[j]).powi(2)).sum::<f64>().sqrt() / (n as f64).sqrt();
        assert!(residual[l].abs() <= 3.0 * sd, "row {l}: {}", residual[l]);
    }
}

#[test]
fn entropy_margin_examples() {
    let cs = ConstraintSystem::simplex(3, 1.0, 1.0).unwrap();
    let bc = solve(&cs);
    let cert = entropy_certificate(&cs, &bc, &[vec![1.0 / 3.0; 3], vec![0.5, 0.3, 0.2]]).unwrap();
    assert!(cert.margins[0].abs() < 1e-12);
    let expected = -(0.5f64.ln() + 0.3f64.ln() + 0.2f64.ln()) - 3.0 * 3.0f64.ln();
    assert!((cert.margins[1] - expected).abs() < 1e-12 && (expected - 0.2099).abs() < 1e-3);

    let inst = random_instance(&InstanceRecipe {
        m: 2,
        n: 12,
        law: ColumnLaw::UniformBox { lo: 1.0, hi: 3.0 },
        v: vec![1.0, 0.5],
        seed: 17,
    })
    .unwrap();
    let bc = solve(&inst.cs);
    let chain = hit_and_run(&inst.cs, bc.center().as_slice(), 100, 6, None, None).unwrap();
    let cert = entropy_certificate(&inst.cs, &bc, &chain.points).unwrap();
    assert!(cert.holds && cert.min_margin >= -1e-9);
}

#[test]
fn single_coordinate_weight_stays_exponential() {
    let n = 1000;
    let cs = ConstraintSystem::simplex(n, 1.0, 1.0).unwrap();
    let bc = solve(&cs);
    let mut lambda = DVector::zeros(n);
    lambda[0] = bc.w[0];
    let cfg = SamplerConfig { chains: 4, ..SamplerConfig::new(SamplerKind::DirichletExact, 20_000, 8) };
    let report = clt_experiment(&cs, &bc, &lambda, &cfg, true).unwrap();
    assert!(report.ks.statistic >= 0.05, "{:?}", report.ks);
    let exp = ks_test(report.values.as_ref().unwrap(), &Reference::Exp1Centered { sigma: report.sigma }).unwrap();
    assert!(exp.statistic <= 0.02, "{exp:?}");
}

#[test]
fn clt_skewness_and_stability_under_doubling() {
    let n = 1000;
    let cs = ConstraintSystem::simplex(n, 1.0, 1.0).unwrap();
    let bc = solve(&cs);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let lambda = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let run = |count| {
        let cfg = SamplerConfig::new(SamplerKind::DirichletExact, count, 9);
        clt_experiment(&cs, &bc, &lambda, &cfg, false).unwrap()
    };
    let (half, full) = (run(10_000), run(20_000));
    assert!(full.moments.skewness.abs() <= 0.1, "{:?}", full.moments);
    assert!(half.ks.statistic <= 0.02);
    assert!(full.ks.statistic <= 1.5 * half.ks.statistic, "{} then {}", half.ks.statistic, full.ks.statistic);
}

#[test]
fn simplex_marginal_matches_scaled_beta() {
    let n = 1000;
    let cs = ConstraintSystem::simplex(n, 1.0, 1.0).unwrap();
    let bc = solve(&cs);
    let cfg = SamplerConfig { chains: 4, ..SamplerConfig::new(SamplerKind::DirichletExact, 20_000, 10) };
    let report = marginal_experiment(&cs, &bc, &[0], &cfg, true).unwrap();
    let values = &report.values.as_ref().unwrap()[0];
    let beta = ks_test(values, &Reference::ScaledBeta1 { scale: n as f64, k: (n - 1) as f64 }).unwrap();
    assert!(beta.statistic <= 0.02, "{beta:?}");
}

#[test]
fn three_point_simplex_marginal_is_far_from_exponential() {
    // exact sup-distance between 3·Beta(1,2) and Exp(1)
    let exact = (0..=300_000)
        .map(|k| {
            let y = 3.0 * k as f64 / 300_000.0;
            ((-y).exp() - (1.0 - y / 3.0).powi(2)).abs()
        })
        .fold(0.0, f64::max);
    assert!((exact - 0.091565).abs() < 1e-5);

    let cs = ConstraintSystem::simplex(3, 1.0, 1.0).unwrap();
    let bc = solve(&cs);
    let cfg = SamplerConfig::new(SamplerKind::DirichletExact, 20_000, 11);
    let report = marginal_experiment(&cs, &bc, &[0, 1], &cfg, false).unwrap();
    for c in &report.per_coordinate {
        assert!((c.ks.statistic - exact).abs() <= 0.02, "{c:?}");
        assert!(c.ks.p_value < 1e-6);
    }
    // Dirichlet(1,1,1) coordinates have correlation −1/2
    assert!((report.correlations[0].correlation + 0.5).abs() < 0.03);
}

#[test]
fn moment_reports_on_synthetic_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let normal: Vec<f64> = (0..200_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let r = moment_report(&normal);
    for (got, want, se) in [(r.mean, 0.0, r.stderr[0]), (r.variance, 1.0, r.stderr[1]), (r.skewness, 0.0, r.stderr[2]), (r.excess_kurtosis, 0.0, r.stderr[3])] {
        assert!((got - want).abs() <= 3.0 * se, "{got} vs {want} (se {se})");
    }
    let exp: Vec<f64> = (0..200_000).map(|_| Exp1.sample(&mut rng)).collect();
    let r = moment_report(&exp);
    assert!((r.skewness - 2.0).abs() <= 3.0 * r.stderr[2], "{r:?}");
    assert!((r.excess_kurtosis - 6.0).abs() <= 3.0 * r.stderr[3], "{r:?}");
}

#[test]
fn bartlett_ratio_is_a_characteristic_function() {
    let n = 40;
    let cs = ConstraintSystem::simplex(n, 1.0, 1.0).unwrap();
    let bc = solve(&cs);
    let ss = standardize(&cs, &bc).unwrap();
    let lambda = DVector::from_fn(n, |j, _| ((j * 7) % 5) as f64 - 2.0);
    let spec = weight_spec(&ss, &lambda);
    let q = QuadOptions::default();
    for t in [0.3, 1.0, 2.5] {
        let plus = bartlett_cf(&ss, &spec, t, &q).unwrap();
        let minus = bartlett_cf(&ss, &spec, -t, &q).unwrap();
        let err = plus.abs_error_estimate + minus.abs_error_estimate;
        assert!((plus.value().conj() - minus.value()).norm() <= 2.0 * err.max(1e-14), "t = {t}");
        assert!(plus.value().norm() <= 1.0 + 2.0 * plus.abs_error_estimate);
    }
}

#[test]
fn box_meeting_the_simplex_in_a_point_has_probability_zero() {
    let cs = ConstraintSystem::simplex(3, 1.0, 1.0).unwrap();
    let bc = solve(&cs);
    let p = mixture_box_probability(&cs, &bc, &BoxSet::cube(3, 0.0, 1.0 / 3.0), &QuadOptions::default()).unwrap();
    assert!(p.re.abs() <= 1e-6 + 2.0 * p.abs_error_estimate, "{p:?}");
}

#[test]
fn single_point_column_law_gives_simplex() {
    let u = vec![2.0];
    let inst = random_instance(&InstanceRecipe {
        m: 1,
        n: 50,
        law: ColumnLaw::FiniteSupport { points: vec![u.clone()] },
        v: vec![1.5],
        seed: 0,
    })
    .unwrap();
    let bc = solve(&inst.cs);
    assert!(bc.w.iter().all(|w| (w - 50.0 * 1.5 * u[0]).abs() < 1e-8 * w));
}
