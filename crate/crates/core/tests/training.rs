use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use transport_filter::map::{Rectifier, TriangularTransportMap};
use transport_filter::optim::{minimize, LbfgsSettings};
use transport_filter::oracles::empirical_moments;
use transport_filter::training::{fit_map, objective, objective_gradient, InitialCoefficients, OptimizerConfig};

fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn tight() -> OptimizerConfig {
    OptimizerConfig {
        max_iterations: 500,
        gradient_tolerance: 1e-10,
        ..OptimizerConfig::default()
    }
}

fn banana(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let z = normals(2 * n, seed);
    z.chunks(2).map(|p| vec![p[0], 0.5 * p[0] * p[0] + 0.7 * p[1]]).collect()
}

#[test]
fn affine_fit_matches_maximum_likelihood_standardization() {
    // x ~ N(3, 2²); the order-1 component a0 + exp(a1) x is fit exactly by
    // exp(a1) = 1 / σ̂ and a0 = -μ̂ / σ̂ with the 1/N variance.
    let samples: Vec<Vec<f64>> = normals(4000, 1).into_iter().map(|z| vec![3.0 + 2.0 * z]).collect();
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s[0]).sum::<f64>() / n;
    let sd = (samples.iter().map(|s| (s[0] - mean).powi(2)).sum::<f64>() / n).sqrt();

    let start = TriangularTransportMap::total_order(1, 0, 1, Rectifier::Exponential, 32).unwrap();
    let (map, diag) = fit_map(&start, &samples, &tight()).unwrap();
    let a = map.coefficients();
    assert!(diag.final_gradient_norm < 1e-7, "gradient {}", diag.final_gradient_norm);
    assert!((a[1].exp() - 1.0 / sd).abs() < 1e-7, "slope {} vs {}", a[1].exp(), 1.0 / sd);
    assert!((a[0] + mean / sd).abs() < 1e-7, "offset {} vs {}", a[0], -mean / sd);
    let expected = 0.5 + sd.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln();
    assert!((diag.final_objective - expected).abs() < 1e-9);
}

#[test]
fn standard_normal_sample_stays_near_identity() {
    let samples: Vec<Vec<f64>> = normals(5000, 2).into_iter().map(|z| vec![z]).collect();
    let start = TriangularTransportMap::total_order(1, 0, 2, Rectifier::Exponential, 32).unwrap();
    let (map, _) = fit_map(&start, &samples, &tight()).unwrap();
    for x in [-2.0, -0.5, 0.0, 1.0, 2.0] {
        let y = map.evaluate(&[x]).unwrap()[0];
        assert!((y - x).abs() < 0.1, "S({x}) = {y}");
    }
}

#[test]
fn shifted_scaled_gaussian_is_standardized() {
    let samples: Vec<Vec<f64>> = normals(5000, 3).into_iter().map(|z| vec![3.0 + 2.0 * z]).collect();
    let start = TriangularTransportMap::total_order(1, 0, 2, Rectifier::Softplus, 32).unwrap();
    let (map, _) = fit_map(&start, &samples, &tight()).unwrap();
    let (m, c) = empirical_moments(&map.evaluate_rows(&samples).unwrap()).unwrap();
    assert!(m[0].abs() < 1e-6);
    assert!((c[(0, 0)] - 1.0).abs() < 0.01, "{}", c[(0, 0)]);
    assert!((map.evaluate(&[3.0]).unwrap()[0]).abs() < 0.05);
}

#[test]
fn order_two_push_forward_is_standard_normal_in_moments() {
    let samples = banana(5000, 4);
    let start = TriangularTransportMap::total_order(2, 0, 2, Rectifier::Exponential, 32).unwrap();
    let (map, _) = fit_map(&start, &samples, &tight()).unwrap();
    let (m, c) = empirical_moments(&map.evaluate_rows(&samples).unwrap()).unwrap();
    for k in 0..2 {
        assert!(m[k].abs() < 1e-6, "mean {m}");
        assert!((c[(k, k)] - 1.0).abs() < 0.05, "covariance {c}");
    }
    assert!(c[(0, 1)].abs() < 0.05, "covariance {c}");
}

#[test]
fn gradient_blocks_are_separable() {
    let samples = banana(200, 5);
    let mut map = TriangularTransportMap::total_order(2, 0, 2, Rectifier::Exponential, 32).unwrap();
    let split = map.component(0).num_coefficients();
    let base: Vec<f64> = (0..map.num_coefficients()).map(|k| 0.05 * k as f64 - 0.2).collect();
    map.set_coefficients(&base).unwrap();
    let g = objective_gradient(&map, &samples).unwrap();

    let mut moved = base.clone();
    for v in &mut moved[split..] {
        *v += 0.3;
    }
    map.set_coefficients(&moved).unwrap();
    let g_moved = objective_gradient(&map, &samples).unwrap();
    assert_eq!(g[..split], g_moved[..split]);
    assert_ne!(g[split..], g_moved[split..]);
}

#[test]
fn fitting_never_increases_the_objective() {
    let samples = banana(300, 6);
    let start = TriangularTransportMap::total_order(2, 0, 3, Rectifier::Softplus, 32).unwrap();
    let before = objective(&start, &samples).unwrap();
    let (map, diag) = fit_map(&start, &samples, &OptimizerConfig::default()).unwrap();
    let after = objective(&map, &samples).unwrap();
    assert!(after <= before);
    assert!((after - diag.final_objective).abs() < 1e-12);

    // A second fit warm-started at the optimum has nothing left to do.
    let (again, diag2) = fit_map(&map, &samples, &OptimizerConfig::default()).unwrap();
    assert!(objective(&again, &samples).unwrap() <= after);
    assert!(diag2.iterations <= 2, "{} iterations", diag2.iterations);

    let zeros = OptimizerConfig {
        initial_coefficients: InitialCoefficients::Zeros,
        ..OptimizerConfig::default()
    };
    let (from_zero, _) = fit_map(&map, &samples, &zeros).unwrap();
    assert!((objective(&from_zero, &samples).unwrap() - after).abs() < 1e-6);
}

#[test]
fn lbfgs_accepted_iterates_descend_on_rosenbrock() {
    let f = |x: &[f64]| {
        let (a, b) = (x[0], x[1]);
        let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        Some((v, g))
    };
    let settings = LbfgsSettings {
        max_iterations: 500,
        gradient_tolerance: 1e-10,
        ..LbfgsSettings::default()
    };
    let out = minimize(f, vec![-1.2, 1.0], &settings).unwrap();
    assert!(out.converged);
    assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6);
    assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
}
