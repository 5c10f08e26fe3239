use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use transport_filter::filter::{
    assimilate, normalize_ensemble, run_filter, run_filter_with, simulate_likelihood, FilterConfig,
};
use transport_filter::models::{DuffingModel, DuffingParams, LinearModel, Measurement, NoiseDistribution};
use transport_filter::oracles::{empirical_moments, kalman_update, GaussianSpec};
use transport_filter::rng::SeedStreams;
use transport_filter::Error;

fn gaussian_rows(n: usize, mean: &[f64], scale: &[f64], seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            mean.iter()
                .zip(scale)
                .map(|(m, s)| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m + s * z
                })
                .collect()
        })
        .collect()
}

fn planar_model(noise_std: f64) -> LinearModel {
    LinearModel {
        transition: DMatrix::identity(2, 2),
        observation: DMatrix::from_row_slice(1, 2, &[1.0, 0.5]),
        noise: NoiseDistribution::Gaussian { std: noise_std },
    }
}

fn config(n: usize, order: u32) -> FilterConfig {
    FilterConfig {
        ensemble_size: n,
        map_order: order,
        seed: 21,
        ..FilterConfig::default()
    }
}

#[test]
fn linear_gaussian_step_matches_kalman_update() {
    let model = planar_model(0.4);
    let prior = gaussian_rows(500, &[2.0, -1.0], &[1.0, 0.6], 1);
    let y = [2.9];
    let cfg = config(500, 1);
    let out = assimilate(&prior, &Measurement { t: 1.0, y: y.to_vec() }, &model, &cfg, &SeedStreams::new(cfg.seed), 1, None)
        .unwrap();

    let (m0, c0) = empirical_moments(&prior).unwrap();
    let r = DMatrix::from_element(1, 1, 0.16);
    let kalman = kalman_update(&GaussianSpec::new(m0, c0).unwrap(), &model.observation, &r, &y).unwrap();
    let (m, c) = empirical_moments(&out.posterior_states).unwrap();
    for k in 0..2 {
        let rel = ((m[k] - kalman.mean[k]) / kalman.mean[k]).abs();
        assert!(rel < 0.10, "mean {k}: {} vs {}", m[k], kalman.mean[k]);
    }
    let rel_cov = (&c - &kalman.covariance).norm() / kalman.covariance.norm();
    assert!(rel_cov < 0.10, "covariance {c} vs {}", kalman.covariance);
}

#[test]
fn uninformative_measurement_leaves_prior_in_place() {
    let prior = gaussian_rows(200, &[2.0, -1.0], &[1.0, 0.6], 2);
    let model = planar_model(1e6);
    let out = assimilate(
        &prior,
        &Measurement { t: 1.0, y: vec![40.0] },
        &model,
        &config(200, 1),
        &SeedStreams::new(3),
        1,
        None,
    )
    .unwrap();
    let (m0, c0) = empirical_moments(&prior).unwrap();
    let (m1, _) = empirical_moments(&out.posterior_states).unwrap();
    for k in 0..2 {
        let shift = (m1[k] - m0[k]).abs() / c0[(k, k)].sqrt();
        assert!(shift <= 0.01, "coordinate {k} moved {shift} prior stds");
    }
}

#[test]
fn repeated_step_is_bitwise_identical() {
    let prior = gaussian_rows(40, &[0.5, 0.1], &[1.0, 0.3], 4);
    let model = planar_model(0.3);
    let cfg = FilterConfig {
        oversampling_factor: 3,
        ..config(40, 2)
    };
    let run = || {
        assimilate(&prior, &Measurement { t: 0.5, y: vec![1.0] }, &model, &cfg, &SeedStreams::new(9), 4, None)
            .unwrap()
            .posterior_states
    };
    assert_eq!(run(), run());
}

#[test]
fn oversampled_posterior_keeps_one_row_per_member() {
    let prior = gaussian_rows(20, &[0.5, 0.1], &[1.0, 0.3], 5);
    let model = planar_model(0.3);
    let cfg = FilterConfig {
        oversampling_factor: 3,
        ..config(20, 1)
    };
    let out = assimilate(&prior, &Measurement { t: 0.5, y: vec![1.0] }, &model, &cfg, &SeedStreams::new(1), 1, None)
        .unwrap();
    assert_eq!(out.posterior_states.len(), 20);
    assert_eq!(out.record.simulated_measurements.len(), 60);
}

#[test]
fn empty_measurement_sequence_returns_initial_ensemble() {
    let prior = gaussian_rows(10, &[0.0, 0.0], &[1.0, 1.0], 6);
    let model = planar_model(0.3);
    let records = run_filter(&model, &[], &prior, 0.0, &config(10, 1)).unwrap();
    assert!(records.is_empty());
    let last = run_filter_with(&model, &[], &prior, 0.0, &config(10, 1), |_| Ok(())).unwrap();
    assert_eq!(last, prior);
}

#[test]
fn measurement_times_must_increase() {
    let prior = gaussian_rows(10, &[0.0, 0.0], &[1.0, 1.0], 7);
    let meas = [
        Measurement { t: 1.0, y: vec![0.0] },
        Measurement { t: 1.0, y: vec![0.1] },
    ];
    let err = run_filter(&planar_model(0.3), &meas, &prior, 0.0, &config(10, 1)).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)), "{err}");
}

#[test]
fn normalized_prior_is_already_normalized() {
    let prior = gaussian_rows(300, &[3.0, -2.0], &[2.0, 0.5], 8);
    let model = planar_model(0.5);
    let streams = SeedStreams::new(2);
    let joint = simulate_likelihood(&prior, &model, 1, &streams, 1).unwrap();
    let first = normalize_ensemble(&joint, &[1.0], 0.0).unwrap();
    let (m, c) = empirical_moments(&first.prior).unwrap();
    assert!(m.amax() < 1e-10);
    assert!((c - DMatrix::<f64>::identity(3, 3)).amax() < 1e-10);

    // Normalizing the whitened rows again is the identity up to rounding.
    let t = transport_filter::filter::NormalizationTransform::fit(&first.prior, 0.0).unwrap();
    for row in &first.prior {
        let again = t.apply(row).unwrap();
        let diff = DVector::from_column_slice(&again) - DVector::from_column_slice(row);
        assert!(diff.amax() < 1e-8);
    }
}

#[test]
fn integrator_blow_up_reports_step() {
    let params = DuffingParams::default();
    let model = DuffingModel::new(&params, NoiseDistribution::Laplace { scale: 0.09 });
    let mut initial = gaussian_rows(5, &[1.0, 0.0, -1.0, 0.3, 2.0], &[0.1, 0.1, 0.1, 0.1, 0.1], 9);
    initial[2][4] = 1e300;
    let meas = [Measurement { t: 0.1, y: vec![1.0] }];
    let err = run_filter(&model, &meas, &initial, 0.0, &config(5, 1)).unwrap_err();
    match err {
        Error::StepFailed { step, source } => {
            assert_eq!(step, 1);
            assert!(matches!(*source, Error::NonFiniteState { .. }), "{source}");
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn identical_prior_members_are_degenerate() {
    let prior = vec![vec![1.0, 2.0]; 6];
    let err = assimilate(
        &prior,
        &Measurement { t: 1.0, y: vec![0.0] },
        &planar_model(0.3),
        &config(6, 1),
        &SeedStreams::new(1),
        1,
        None,
    )
    .unwrap_err();
    assert!(matches!(err, Error::DegenerateEnsemble(_)), "{err}");
}
