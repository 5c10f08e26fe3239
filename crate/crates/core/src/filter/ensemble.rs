use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::StateSpaceModel;
use crate::rng::{SeedStreams, StreamPurpose};

/// Paired `(simulated measurement, state)` samples from the joint law.
///
/// Rows are grouped by prior member, then by likelihood replicate: row
/// `j * L + l` holds replicate `l` of member `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointEnsemble {
    measurements: Vec<Vec<f64>>,
    states: Vec<Vec<f64>>,
    provenance: Vec<usize>,
    oversampling: usize,
}

impl JointEnsemble {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn measurement_block(&self) -> &[Vec<f64>] {
        &self.measurements
    }

    pub fn state_block(&self) -> &[Vec<f64>] {
        &self.states
    }

    /// Index of the prior member each row was generated from.
    pub fn provenance(&self) -> &[usize] {
        &self.provenance
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    pub fn measurement_dim(&self) -> usize {
        self.measurements.first().map_or(0, Vec::len)
    }

    pub fn state_dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    /// Concatenated `(y, x)` rows.
    pub fn joint_rows(&self) -> Vec<Vec<f64>> {
        self.measurements
            .iter()
            .zip(&self.states)
            .map(|(y, x)| y.iter().chain(x).copied().collect())
            .collect()
    }

    /// Pairs the given measurement with every state row.
    pub fn rows_with_measurement(&self, y: &[f64]) -> Vec<Vec<f64>> {
        self.states
            .iter()
            .map(|x| y.iter().chain(x).copied().collect())
            .collect()
    }
}

/// Draws `oversampling` noisy measurements for every prior state.
pub fn simulate_likelihood(
    states: &[Vec<f64>],
    model: &dyn StateSpaceModel,
    oversampling: usize,
    streams: &SeedStreams,
    step: u64,
) -> Result<JointEnsemble> {
    if oversampling < 1 {
        return Err(Error::InvalidArgument("oversampling factor must be >= 1".into()));
    }
    let m = model.measurement_dim();
    let noise = *model.noise();
    // (simulated measurement, state, source member) per replicate.
    type Replicates = Vec<(Vec<f64>, Vec<f64>, usize)>;
    let per_member: Vec<Replicates> = states
        .par_iter()
        .enumerate()
        .map(|(j, x)| {
            if x.len() != model.state_dim() {
                return Err(Error::DimensionMismatch {
                    expected: model.state_dim(),
                    actual: x.len(),
                });
            }
            let mean = model.observe(x);
            Ok((0..oversampling)
                .map(|l| {
                    let mut rng = streams.stream(StreamPurpose::Likelihood, step, j as u64, l as u64);
                    let w = noise.sample(m, &mut rng);
                    let y = mean.iter().zip(&w).map(|(a, b)| a + b).collect();
                    (y, x.clone(), j)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut measurements = Vec::with_capacity(states.len() * oversampling);
    let mut joint_states = Vec::with_capacity(states.len() * oversampling);
    let mut provenance = Vec::with_capacity(states.len() * oversampling);
    for (y, x, j) in per_member.into_iter().flatten() {
        measurements.push(y);
        joint_states.push(x);
        provenance.push(j);
    }
    Ok(JointEnsemble {
        measurements,
        states: joint_states,
        provenance,
        oversampling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LinearModel, NoiseDistribution};
    use nalgebra::DMatrix;

    fn model(noise: NoiseDistribution) -> LinearModel {
        LinearModel {
            transition: DMatrix::identity(2, 2),
            observation: DMatrix::from_row_slice(1, 2, &[1.0, 0.5]),
            noise,
        }
    }

    fn states(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|j| vec![j as f64, -(j as f64) * 0.5]).collect()
    }

    #[test]
    fn oversampled_layout() {
        let m = model(NoiseDistribution::Laplace { scale: 0.09 });
        let joint = simulate_likelihood(&states(20), &m, 3, &SeedStreams::new(1), 4).unwrap();
        assert_eq!(joint.len(), 60);
        for (r, &j) in joint.provenance().iter().enumerate() {
            assert_eq!(j, r / 3);
            assert_eq!(joint.state_block()[r], states(20)[j]);
        }
        let replicate_measurements: Vec<f64> = (0..3).map(|l| joint.measurement_block()[l][0]).collect();
        assert!(replicate_measurements[0] != replicate_measurements[1]);
    }

    #[test]
    fn single_sample_per_state() {
        let m = model(NoiseDistribution::Gaussian { std: 1.0 });
        let joint = simulate_likelihood(&states(5), &m, 1, &SeedStreams::new(1), 0).unwrap();
        assert_eq!(joint.len(), 5);
        assert_eq!(joint.joint_rows()[2].len(), 3);
    }

    #[test]
    fn zero_noise_reproduces_observation() {
        let m = model(NoiseDistribution::Gaussian { std: 0.0 });
        let joint = simulate_likelihood(&states(6), &m, 2, &SeedStreams::new(1), 0).unwrap();
        for (y, x) in joint.measurement_block().iter().zip(joint.state_block()) {
            assert_eq!(y, &m.observe(x));
        }
    }

    #[test]
    fn rejects_zero_oversampling() {
        let m = model(NoiseDistribution::Gaussian { std: 1.0 });
        assert!(simulate_likelihood(&states(3), &m, 0, &SeedStreams::new(1), 0).is_err());
    }
}
