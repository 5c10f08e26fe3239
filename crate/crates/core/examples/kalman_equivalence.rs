//! Track a scalar linear system with the coupling filter and a Kalman
//! filter side by side.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use transport_filter::filter::{run_filter, FilterConfig};
use transport_filter::models::{LinearModel, Measurement, NoiseDistribution};
use transport_filter::oracles::{empirical_moments, kalman_update, GaussianSpec};

fn main() -> transport_filter::Result<()> {
    let a = 1.2;
    let noise_std = 0.5;
    let model = LinearModel {
        transition: DMatrix::from_element(1, 1, a),
        observation: DMatrix::from_element(1, 1, 1.0),
        noise: NoiseDistribution::Gaussian { std: noise_std },
    };

    let n = 500;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let prior: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![1.0 + normal()])
        .collect();
    let mut truth = 0.3;
    let measurements: Vec<Measurement> = (1..=20)
        .map(|k| {
            truth *= a;
            Measurement {
                t: k as f64,
                y: vec![truth + noise_std * normal()],
            }
        })
        .collect();

    let config = FilterConfig {
        ensemble_size: n,
        map_order: 1,
        ..FilterConfig::default()
    };
    let records = run_filter(&model, &measurements, &prior, 0.0, &config)?;

    let (m0, c0) = empirical_moments(&prior)?;
    let mut kalman = GaussianSpec::new(m0, c0)?;
    let f = DMatrix::from_element(1, 1, a);
    let h = DMatrix::from_element(1, 1, 1.0);
    let r = DMatrix::from_element(1, 1, noise_std * noise_std);
    println!("{:>4} {:>12} {:>12} {:>10} {:>10}", "step", "filter mean", "kalman mean", "filter sd", "kalman sd");
    for (rec, meas) in records.iter().zip(&measurements) {
        let predicted = GaussianSpec::new(&f * &kalman.mean, &f * &kalman.covariance * f.transpose())?;
        kalman = kalman_update(&predicted, &h, &r, &meas.y)?;
        let (m, c): (DVector<f64>, _) = empirical_moments(&rec.posterior_states)?;
        println!(
            "{:>4} {:>12.5} {:>12.5} {:>10.5} {:>10.5}",
            rec.step,
            m[0],
            kalman.mean[0],
            c[(0, 0)].sqrt(),
            kalman.covariance[(0, 0)].sqrt()
        );
    }
    Ok(())
}
