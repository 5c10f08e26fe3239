//! Closed-form Gaussian references: conditioning, the Kalman update, and sample moments.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSpec {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianSpec {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if covariance.nrows() != n || covariance.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: covariance.nrows(),
            });
        }
        let asym = (&covariance - covariance.transpose()).amax();
        if asym > 1e-12 * covariance.amax().max(1.0) {
            return Err(Error::InvalidArgument(format!("covariance not symmetric (|C - Cᵀ| = {asym:e})")));
        }
        if covariance.clone().cholesky().is_none() {
            return Err(Error::Singular("covariance is not positive definite".into()));
        }
        Ok(GaussianSpec { mean, covariance })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Law of the trailing coordinates given the leading `observed.len()` ones.
pub fn gaussian_conditional(joint: &GaussianSpec, observed: &[f64]) -> Result<GaussianSpec> {
    let m = observed.len();
    let n = joint.dim();
    if m >= n {
        return Err(Error::InvalidArgument(format!(
            "cannot condition a {n}-dimensional Gaussian on {m} coordinates"
        )));
    }
    let d = n - m;
    let syy = joint.covariance.view((0, 0), (m, m)).into_owned();
    let sxy = joint.covariance.view((m, 0), (d, m)).into_owned();
    let sxx = joint.covariance.view((m, m), (d, d)).into_owned();
    let chol = syy
        .cholesky()
        .ok_or_else(|| Error::Singular("observed-block covariance".into()))?;
    let innovation = DVector::from_column_slice(observed) - joint.mean.rows(0, m);
    let mean = joint.mean.rows(m, d) + &sxy * chol.solve(&innovation);
    let covariance = &sxx - &sxy * chol.solve(&sxy.transpose());
    Ok(GaussianSpec {
        mean,
        covariance: symmetrize(covariance),
    })
}

/// Standard Kalman measurement update of `prior` given `y = H x + w`, `w ~ N(0, R)`.
pub fn kalman_update(
    prior: &GaussianSpec,
    measurement_matrix: &DMatrix<f64>,
    noise_cov: &DMatrix<f64>,
    y: &[f64],
) -> Result<GaussianSpec> {
    let h = measurement_matrix;
    if h.ncols() != prior.dim() || noise_cov.nrows() != h.nrows() || y.len() != h.nrows() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            actual: y.len(),
        });
    }
    let p = &prior.covariance;
    let s = h * p * h.transpose() + noise_cov;
    let chol = s
        .cholesky()
        .ok_or_else(|| Error::Singular("innovation covariance".into()))?;
    let pht = p * h.transpose();
    let innovation = DVector::from_column_slice(y) - h * &prior.mean;
    // K = P Hᵀ S⁻¹, computed as (S⁻¹ H P)ᵀ since S and P are symmetric.
    let gain = chol.solve(&pht.transpose()).transpose();
    let mean = &prior.mean + &gain * innovation;
    let covariance = p - &gain * h * p;
    Ok(GaussianSpec {
        mean,
        covariance: symmetrize(covariance),
    })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Sample mean and unbiased (`N - 1`) covariance of row samples.
pub fn empirical_moments(samples: &[Vec<f64>]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("empirical moments need at least two rows".into()));
    }
    let dim = samples[0].len();
    let n = samples.len() as f64;
    let mut mean = DVector::zeros(dim);
    for row in samples {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: row.len(),
            });
        }
        mean += DVector::from_column_slice(row);
    }
    mean /= n;
    let mut cov = DMatrix::zeros(dim, dim);
    for row in samples {
        let c = DVector::from_column_slice(row) - &mean;
        cov += &c * c.transpose();
    }
    cov /= n - 1.0;
    Ok((mean, cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::NoiseDistribution;
    use crate::rng::{SeedStreams, StreamPurpose};

    fn spec(mean: &[f64], cov: &[f64]) -> GaussianSpec {
        let n = mean.len();
        GaussianSpec::new(DVector::from_column_slice(mean), DMatrix::from_row_slice(n, n, cov)).unwrap()
    }

    #[test]
    fn independent_blocks_give_marginal() {
        let j = spec(&[1.0, 2.0, 3.0], &[2.0, 0.0, 0.0, 0.0, 1.0, 0.3, 0.0, 0.3, 0.5]);
        let c = gaussian_conditional(&j, &[10.0]).unwrap();
        assert_eq!(c.mean.as_slice(), &[2.0, 3.0]);
        assert!((c.covariance[(0, 1)] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn correlated_pair() {
        let j = spec(&[0.0, 0.0], &[1.0, 0.8, 0.8, 1.0]);
        let c = gaussian_conditional(&j, &[1.0]).unwrap();
        assert!((c.mean[0] - 0.8).abs() < 1e-14);
        assert!((c.covariance[(0, 0)] - 0.36).abs() < 1e-14);
    }

    #[test]
    fn conditioning_errors() {
        let j = spec(&[0.0, 0.0], &[1.0, 0.8, 0.8, 1.0]);
        assert!(gaussian_conditional(&j, &[1.0, 2.0]).is_err());
        assert!(GaussianSpec::new(DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])).is_err());
        assert!(GaussianSpec::new(DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0])).is_err());
    }

    #[test]
    fn conditional_matches_monte_carlo_regression() {
        // Sample the joint, fit the affine conditional by least squares, compare moments.
        let j = spec(&[0.5, -1.0, 2.0], &[2.0, 0.6, -0.4, 0.6, 1.5, 0.3, -0.4, 0.3, 1.0]);
        let l = j.covariance.clone().cholesky().unwrap().l();
        let streams = SeedStreams::new(5);
        let mut rng = streams.stream(StreamPurpose::Oracle, 0, 0, 0);
        let unit = NoiseDistribution::Gaussian { std: 1.0 };
        let n = 1_000_000;
        // Conditional law of (x1, x2) | y: residuals of regressing on y.
        let (mut sy, mut syy) = (0.0, 0.0);
        let mut sx = [0.0; 2];
        let mut sxy = [0.0; 2];
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let z = DVector::from_vec(unit.sample(3, &mut rng));
            let v = &j.mean + &l * z;
            sy += v[0];
            syy += v[0] * v[0];
            for k in 0..2 {
                sx[k] += v[k + 1];
                sxy[k] += v[k + 1] * v[0];
            }
            rows.push([v[0], v[1], v[2]]);
        }
        let nf = n as f64;
        let my = sy / nf;
        let vy = syy / nf - my * my;
        let slope: Vec<f64> = (0..2).map(|k| (sxy[k] / nf - my * sx[k] / nf) / vy).collect();
        let y_obs = 1.3;
        let cond = gaussian_conditional(&j, &[y_obs]).unwrap();
        let mut resid_var = [0.0; 2];
        for k in 0..2 {
            let intercept = sx[k] / nf - slope[k] * my;
            let predicted = intercept + slope[k] * y_obs;
            assert!((predicted - cond.mean[k]).abs() < 0.01 * cond.mean[k].abs().max(1.0));
            resid_var[k] = rows
                .iter()
                .map(|r| (r[k + 1] - intercept - slope[k] * r[0]).powi(2))
                .sum::<f64>()
                / nf;
            assert!((resid_var[k] / cond.covariance[(k, k)] - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn kalman_textbook() {
        let prior = spec(&[0.0], &[1.0]);
        let post = kalman_update(&prior, &DMatrix::from_element(1, 1, 1.0), &DMatrix::from_element(1, 1, 1.0), &[2.0])
            .unwrap();
        assert!((post.mean[0] - 1.0).abs() < 1e-15);
        assert!((post.covariance[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kalman_limits() {
        let prior = spec(&[1.0, -1.0], &[2.0, 0.5, 0.5, 1.0]);
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.3, 1.0]);
        let loose = kalman_update(&prior, &h, &(DMatrix::identity(2, 2) * 1e12), &[5.0, 5.0]).unwrap();
        assert!((&loose.mean - &prior.mean).amax() < 1e-6);
        assert!((&loose.covariance - &prior.covariance).amax() < 1e-6 * 2.0);
        let tight = kalman_update(&prior, &h, &(DMatrix::identity(2, 2) * 1e-12), &[2.0, 0.6]).unwrap();
        let exact = h.clone().lu().solve(&DVector::from_vec(vec![2.0, 0.6])).unwrap();
        assert!((&tight.mean - exact).amax() < 1e-6);
        assert!(tight.covariance.amax() < 1e-6);
    }

    #[test]
    fn kalman_is_conditioning_of_the_joint() {
        let prior = spec(&[0.4, -0.2], &[1.5, 0.3, 0.3, 0.8]);
        let h = DMatrix::from_row_slice(1, 2, &[1.0, 0.5]);
        let r = DMatrix::from_element(1, 1, 0.7);
        let y = [1.1];
        let post = kalman_update(&prior, &h, &r, &y).unwrap();
        // Joint of (y, x): mean (Hμ, μ), covariance [[HPHᵀ + R, HP], [PHᵀ, P]].
        let p = &prior.covariance;
        let mut cov = DMatrix::zeros(3, 3);
        cov.view_mut((0, 0), (1, 1)).copy_from(&(&h * p * h.transpose() + &r));
        cov.view_mut((0, 1), (1, 2)).copy_from(&(&h * p));
        cov.view_mut((1, 0), (2, 1)).copy_from(&(p * h.transpose()));
        cov.view_mut((1, 1), (2, 2)).copy_from(p);
        let mean = DVector::from_vec(vec![(&h * &prior.mean)[0], prior.mean[0], prior.mean[1]]);
        let cond = gaussian_conditional(&GaussianSpec::new(mean, cov).unwrap(), &y).unwrap();
        assert!((&cond.mean - &post.mean).amax() < 1e-10);
        assert!((&cond.covariance - &post.covariance).amax() < 1e-10);
    }

    #[test]
    fn moments() {
        let (m, c) = empirical_moments(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(m[0], 1.0);
        assert_eq!(c[(0, 0)], 2.0);
        let (_, c) = empirical_moments(&vec![vec![3.0, 1.0]; 4]).unwrap();
        assert_eq!(c.amax(), 0.0);
        assert!(empirical_moments(&[vec![1.0]]).is_err());

        let mut rng = SeedStreams::new(9).stream(StreamPurpose::Oracle, 1, 0, 0);
        let unit = NoiseDistribution::Gaussian { std: 1.0 };
        let rows: Vec<Vec<f64>> = (0..100_000).map(|_| unit.sample(2, &mut rng)).collect();
        let (m, c) = empirical_moments(&rows).unwrap();
        for k in 0..2 {
            assert!(m[k].abs() <= 0.02);
            assert!((c[(k, k)] - 1.0).abs() <= 0.03);
        }
    }
}
