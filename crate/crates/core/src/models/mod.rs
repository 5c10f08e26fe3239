//! State-space models, time integration, and measurement noise.

mod duffing;
mod integrator;
mod noise;

use nalgebra::{DMatrix, DVector};

pub use duffing::{
    duffing_rhs, generate_truth_and_measurements, make_initial_ensemble, step_count, DuffingModel, DuffingParams,
    Measurement, TruthTrajectory, DUFFING_COORDINATES,
};
pub use integrator::rk4_step;
pub use noise::NoiseDistribution;

use crate::error::Result;

/// A (possibly parameter-augmented) system observed through additive noise.
///
/// `propagate` must leave any parameter block of the state untouched.
pub trait StateSpaceModel: Sync {
    fn state_dim(&self) -> usize;
    fn measurement_dim(&self) -> usize;
    fn propagate(&self, state: &[f64], t: f64, dt: f64) -> Result<Vec<f64>>;
    /// Noise-free measurement of a state.
    fn observe(&self, state: &[f64]) -> Vec<f64>;
    fn noise(&self) -> &NoiseDistribution;
}

/// Discrete linear system `x ← F x`, `y = H x + w`; one transition per `propagate` call.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub transition: DMatrix<f64>,
    pub observation: DMatrix<f64>,
    pub noise: NoiseDistribution,
}

impl StateSpaceModel for LinearModel {
    fn state_dim(&self) -> usize {
        self.transition.nrows()
    }

    fn measurement_dim(&self) -> usize {
        self.observation.nrows()
    }

    fn propagate(&self, state: &[f64], _t: f64, _dt: f64) -> Result<Vec<f64>> {
        Ok((&self.transition * DVector::from_column_slice(state)).as_slice().to_vec())
    }

    fn observe(&self, state: &[f64]) -> Vec<f64> {
        (&self.observation * DVector::from_column_slice(state)).as_slice().to_vec()
    }

    fn noise(&self) -> &NoiseDistribution {
        &self.noise
    }
}
