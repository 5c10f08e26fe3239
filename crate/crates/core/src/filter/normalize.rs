use nalgebra::{DMatrix, DVector};

use super::ensemble::JointEnsemble;
use crate::error::{Error, Result};
use crate::oracles::empirical_moments;

/// Affine whitening `χ = L⁻¹ (γ - mean)` with `L Lᵀ` the prior-pair covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationTransform {
    pub mean: DVector<f64>,
    /// Lower-triangular Cholesky factor.
    pub cholesky_factor: DMatrix<f64>,
    pub inverse_factor: DMatrix<f64>,
}

impl NormalizationTransform {
    /// Fits mean and factor to row samples; `jitter` is added to the covariance
    /// diagonal as a multiple of `trace / dim`.
    pub fn fit(rows: &[Vec<f64>], jitter: f64) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::DegenerateEnsemble(format!("{} rows, need at least 2", rows.len())));
        }
        let (mean, mut cov) = empirical_moments(rows)?;
        let dim = mean.len();
        for k in 0..dim {
            if !(cov[(k, k)] > 0.0) {
                return Err(Error::DegenerateEnsemble(format!("coordinate {k} has no spread")));
            }
        }
        let bump = jitter * cov.trace() / dim as f64;
        for k in 0..dim {
            cov[(k, k)] += bump;
        }
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::DegenerateEnsemble("covariance is not positive definite".into()))?;
        let l = chol.l();
        let inverse_factor = l
            .solve_lower_triangular(&DMatrix::identity(dim, dim))
            .ok_or_else(|| Error::DegenerateEnsemble("singular Cholesky factor".into()))?;
        if inverse_factor.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateEnsemble("non-finite inverse factor".into()));
        }
        Ok(NormalizationTransform {
            mean,
            cholesky_factor: l,
            inverse_factor,
        })
    }

    pub fn identity(dim: usize) -> Self {
        NormalizationTransform {
            mean: DVector::zeros(dim),
            cholesky_factor: DMatrix::identity(dim, dim),
            inverse_factor: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check(row.len())?;
        let centred = DVector::from_column_slice(row) - &self.mean;
        Ok((&self.inverse_factor * centred).as_slice().to_vec())
    }

    pub fn invert(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check(row.len())?;
        let v = &self.cholesky_factor * DVector::from_column_slice(row) + &self.mean;
        Ok(v.as_slice().to_vec())
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }
}

/// Whitened prior pairs `(ŷ, x̂)` and actual pairs `(y, x̂)`, sharing one transform.
#[derive(Clone, Debug)]
pub struct NormalizedEnsemble {
    pub prior: Vec<Vec<f64>>,
    pub actual: Vec<Vec<f64>>,
    pub transform: NormalizationTransform,
}

pub fn normalize_ensemble(joint: &JointEnsemble, actual_measurement: &[f64], jitter: f64) -> Result<NormalizedEnsemble> {
    if actual_measurement.len() != joint.measurement_dim() {
        return Err(Error::DimensionMismatch {
            expected: joint.measurement_dim(),
            actual: actual_measurement.len(),
        });
    }
    let prior_rows = joint.joint_rows();
    let transform = NormalizationTransform::fit(&prior_rows, jitter)?;
    let prior = prior_rows
        .iter()
        .map(|r| transform.apply(r))
        .collect::<Result<Vec<_>>>()?;
    let actual = joint
        .rows_with_measurement(actual_measurement)
        .iter()
        .map(|r| transform.apply(r))
        .collect::<Result<Vec<_>>>()?;
    Ok(NormalizedEnsemble { prior, actual, transform })
}

/// Prepends the whitened measurement to each conditioned state row and maps back.
pub fn denormalize(
    transform: &NormalizationTransform,
    normalized_measurement: &[f64],
    conditioned_states: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    conditioned_states
        .iter()
        .map(|x| {
            let row: Vec<f64> = normalized_measurement.iter().chain(x).copied().collect();
            transform.invert(&row)
        })
        .collect()
}
