//! Forced Duffing oscillator `ẍ + δẋ + αx + βx³ = κ cos(ω₀ t)` with
//! the augmented state `(x, v, α, δ, β)`.

use serde::{Deserialize, Serialize};

use super::integrator::rk4_step;
use super::noise::NoiseDistribution;
use super::StateSpaceModel;
use crate::error::{Error, Result};
use crate::rng::{SeedStreams, StreamPurpose};

/// Names of the augmented-state coordinates, in order.
pub const DUFFING_COORDINATES: [&str; 5] = ["x", "v", "alpha", "delta", "beta"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuffingParams {
    /// Linear stiffness.
    pub alpha: f64,
    /// Linear damping.
    pub delta: f64,
    /// Cubic stiffness.
    pub beta: f64,
    /// Forcing amplitude.
    pub kappa: f64,
    /// Forcing frequency in rad per unit time.
    pub omega0: f64,
}

impl Default for DuffingParams {
    fn default() -> Self {
        DuffingParams {
            alpha: -1.0,
            delta: 0.3,
            beta: 2.0,
            kappa: 0.5,
            omega0: 1.2,
        }
    }
}

impl DuffingParams {
    /// The identified parameters `(α, δ, β)`.
    pub fn identified(&self) -> [f64; 3] {
        [self.alpha, self.delta, self.beta]
    }

    pub fn is_finite(&self) -> bool {
        [self.alpha, self.delta, self.beta, self.kappa, self.omega0]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Time derivative of the augmented state; parameter rates are zero.
pub fn duffing_rhs(state: &[f64], t: f64, kappa: f64, omega0: f64) -> Vec<f64> {
    let (x, v, alpha, delta, beta) = (state[0], state[1], state[2], state[3], state[4]);
    let accel = -delta * v - alpha * x - beta * x * x * x + kappa * (omega0 * t).cos();
    vec![v, accel, 0.0, 0.0, 0.0]
}

/// Duffing oscillator with unknown `(α, δ, β)` carried in the state, position measured.
#[derive(Clone, Debug, PartialEq)]
pub struct DuffingModel {
    pub kappa: f64,
    pub omega0: f64,
    pub noise: NoiseDistribution,
}

impl DuffingModel {
    pub fn new(params: &DuffingParams, noise: NoiseDistribution) -> Self {
        DuffingModel {
            kappa: params.kappa,
            omega0: params.omega0,
            noise,
        }
    }
}

impl StateSpaceModel for DuffingModel {
    fn state_dim(&self) -> usize {
        5
    }

    fn measurement_dim(&self) -> usize {
        1
    }

    fn propagate(&self, state: &[f64], t: f64, dt: f64) -> Result<Vec<f64>> {
        let mut next = rk4_step(|s, tau| duffing_rhs(s, tau, self.kappa, self.omega0), state, t, dt)?;
        // Parameter rates are exactly zero, but pin them anyway so no rounding creeps in.
        next[2..].copy_from_slice(&state[2..]);
        Ok(next)
    }

    fn observe(&self, state: &[f64]) -> Vec<f64> {
        vec![state[0]]
    }

    fn noise(&self) -> &NoiseDistribution {
        &self.noise
    }
}

/// A measurement `y` taken at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub t: f64,
    pub y: Vec<f64>,
}

/// Noise-free reference trajectory sampled at the measurement times.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TruthTrajectory {
    pub times: Vec<f64>,
    /// `(x, v)` per time.
    pub states: Vec<[f64; 2]>,
}

/// Number of `dt` steps covering `[t0, t1]`.
pub fn step_count(t_span: (f64, f64), dt: f64) -> usize {
    ((t_span.1 - t_span.0) / dt).round() as usize
}

/// Integrates the true system and emits position measurements at every step after `t0`.
pub fn generate_truth_and_measurements(
    params: &DuffingParams,
    noise: &NoiseDistribution,
    t_span: (f64, f64),
    dt: f64,
    initial_state: [f64; 2],
    seed: u64,
) -> Result<(TruthTrajectory, Vec<Measurement>)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let streams = SeedStreams::new(seed);
    let model = DuffingModel::new(params, *noise);
    let steps = step_count(t_span, dt);
    let mut state = vec![
        initial_state[0],
        initial_state[1],
        params.alpha,
        params.delta,
        params.beta,
    ];
    let mut truth = TruthTrajectory::default();
    let mut measurements = Vec::with_capacity(steps);
    for k in 1..=steps {
        let t_prev = t_span.0 + (k - 1) as f64 * dt;
        state = model.propagate(&state, t_prev, dt)?;
        let t = t_span.0 + k as f64 * dt;
        let mut rng = streams.stream(StreamPurpose::Measurements, k as u64, 0, 0);
        let y = state[0] + noise.sample_scalar(&mut rng);
        truth.times.push(t);
        truth.states.push([state[0], state[1]]);
        measurements.push(Measurement { t, y: vec![y] });
    }
    Ok((truth, measurements))
}

/// Members start at rest; parameters are Gaussian around `multiplier · truth`
/// with relative standard deviation `spread`.
pub fn make_initial_ensemble(
    true_params: &DuffingParams,
    n: usize,
    spread: f64,
    multiplier: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("ensemble needs at least 2 members, got {n}")));
    }
    if !(spread > 0.0) {
        return Err(Error::InvalidArgument(format!("spread must be positive, got {spread}")));
    }
    let streams = SeedStreams::new(seed);
    let centres = true_params.identified().map(|p| multiplier * p);
    let gaussian = NoiseDistribution::Gaussian { std: 1.0 };
    Ok((0..n)
        .map(|j| {
            let mut rng = streams.stream(StreamPurpose::InitialEnsemble, 0, j as u64, 0);
            let mut row = vec![0.0, 0.0];
            row.extend(
                centres
                    .iter()
                    .map(|&c| c + spread * c.abs() * gaussian.sample_scalar(&mut rng)),
            );
            row
        })
        .collect())
}
