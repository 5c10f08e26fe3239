use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Additive, zero-mean, independent-per-coordinate measurement noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseDistribution {
    Gaussian { std: f64 },
    /// Density `exp(-|w| / scale) / (2 scale)`; variance `2 scale²`.
    Laplace { scale: f64 },
}

impl NoiseDistribution {
    pub fn sample_scalar<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseDistribution::Gaussian { std } => {
                let z: f64 = rng.sample(StandardNormal);
                std * z
            }
            NoiseDistribution::Laplace { scale } => {
                // Inverse CDF on u in (-1/2, 1/2).
                let u: f64 = rng.random::<f64>() - 0.5;
                -scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Vec<f64> {
        (0..dim).map(|_| self.sample_scalar(rng)).collect()
    }

    pub fn log_pdf_scalar(&self, w: f64) -> f64 {
        match *self {
            NoiseDistribution::Gaussian { std } => {
                -0.5 * (w / std).powi(2) - std.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            NoiseDistribution::Laplace { scale } => -(2.0 * scale).ln() - w.abs() / scale,
        }
    }

    pub fn log_pdf(&self, w: &[f64]) -> f64 {
        w.iter().map(|&v| self.log_pdf_scalar(v)).sum()
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseDistribution::Gaussian { std } => std * std,
            NoiseDistribution::Laplace { scale } => 2.0 * scale * scale,
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            NoiseDistribution::Gaussian { std } => std,
            NoiseDistribution::Laplace { scale } => scale,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn empirical_variance(noise: NoiseDistribution, n: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws: Vec<f64> = (0..n).map(|_| noise.sample_scalar(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    }

    #[test]
    fn laplace_variance_is_twice_scale_squared() {
        let noise = NoiseDistribution::Laplace { scale: 0.09 };
        let v = empirical_variance(noise, 200_000);
        assert!((v / 0.0162 - 1.0).abs() < 0.03, "{v}");
    }

    #[test]
    fn gaussian_variance() {
        let v = empirical_variance(NoiseDistribution::Gaussian { std: 0.5 }, 200_000);
        assert!((v / 0.25 - 1.0).abs() < 0.02);
    }

    #[test]
    fn laplace_log_pdf_closed_form_and_normalization() {
        let b = 0.09;
        let noise = NoiseDistribution::Laplace { scale: b };
        assert!((noise.log_pdf_scalar(0.05) - (-(2.0 * b).ln() - 0.05 / b)).abs() < 1e-14);
        // Trapezoid over [-20b, 20b]; the kink at 0 is a grid node.
        let n = 400_000;
        let h = 40.0 * b / n as f64;
        let integral: f64 = (0..=n)
            .map(|k| {
                let x = -20.0 * b + k as f64 * h;
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                w * noise.log_pdf_scalar(x).exp()
            })
            .sum::<f64>()
            * h;
        assert!((integral - 1.0).abs() < 1e-6, "{integral}");
    }

    #[test]
    fn zero_scale_is_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for noise in [NoiseDistribution::Laplace { scale: 0.0 }, NoiseDistribution::Gaussian { std: 0.0 }] {
            assert!(noise.sample(5, &mut rng).iter().all(|w| *w == 0.0));
        }
    }
}
