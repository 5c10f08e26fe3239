//! Fit a map that pushes a banana-shaped sample to a standard normal and
//! report the moments of the pushed-forward sample.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use transport_filter::map::{Rectifier, TriangularTransportMap};
use transport_filter::oracles::empirical_moments;
use transport_filter::training::{fit_map, OptimizerConfig};

fn main() -> transport_filter::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let samples: Vec<Vec<f64>> = (0..2000)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            vec![a, a * a + 0.5 * b]
        })
        .collect();

    let start = TriangularTransportMap::total_order(2, 0, 2, Rectifier::Exponential, 32)?;
    let (map, diag) = fit_map(&start, &samples, &OptimizerConfig::default())?;
    println!(
        "objective {:.5} after {} iterations (converged: {}, {:.3} s)",
        diag.final_objective, diag.iterations, diag.converged, diag.wall_time
    );

    let pushed = map.evaluate_rows(&samples)?;
    let (mean, cov) = empirical_moments(&pushed)?;
    println!("pushed mean {:.4?}", mean.as_slice());
    println!("pushed covariance {:.4?}", cov.as_slice());
    Ok(())
}
