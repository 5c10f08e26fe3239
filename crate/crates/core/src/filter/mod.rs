//! The coupling filter: one assimilation step fits a triangular map to joint
//! `(measurement, state)` samples and conditions it on the observed measurement.
//!
//! A step runs, in order:
//!
//! 1. draw `L` simulated measurements per propagated prior member;
//! 2. whiten the joint samples with their mean and Cholesky factor;
//! 3. fit a map whose first `m` inputs are the measurement block;
//! 4. push every prior pair through the map and invert it with the measurement
//!    input replaced by the (whitened) observed value;
//! 5. undo the whitening and keep replicate 0 of every member.

mod ensemble;
mod normalize;

use std::time::Instant;

use rayon::prelude::*;

pub use ensemble::{simulate_likelihood, JointEnsemble};
pub use normalize::{denormalize, normalize_ensemble, NormalizationTransform, NormalizedEnsemble};

use crate::error::{Error, Result};
use crate::map::{InversionOptions, Rectifier, TriangularTransportMap, DEFAULT_QUADRATURE_POINTS};
use crate::models::{Measurement, StateSpaceModel};
use crate::rng::SeedStreams;
use crate::training::{fit_map, FitDiagnostics, InitialCoefficients, OptimizerConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct FilterConfig {
    pub ensemble_size: usize,
    /// Simulated measurements per prior member.
    pub oversampling_factor: usize,
    pub map_order: u32,
    pub rectifier: Rectifier,
    pub quadrature_points: usize,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    /// Diagonal load on the joint covariance, relative to `trace / dim`.
    pub covariance_jitter: f64,
    pub inversion: InversionOptions,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            ensemble_size: 20,
            oversampling_factor: 1,
            map_order: 2,
            rectifier: Rectifier::Exponential,
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
            optimizer: OptimizerConfig::default(),
            seed: 0,
            covariance_jitter: 1e-10,
            inversion: InversionOptions::default(),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ensemble_size < 2 {
            return Err(Error::InvalidConfig("ensemble_size must be >= 2".into()));
        }
        if self.oversampling_factor < 1 {
            return Err(Error::InvalidConfig("oversampling_factor must be >= 1".into()));
        }
        if self.quadrature_points < crate::map::MIN_QUADRATURE_POINTS {
            return Err(Error::InvalidConfig(format!(
                "quadrature_points must be >= {}",
                crate::map::MIN_QUADRATURE_POINTS
            )));
        }
        if !(self.covariance_jitter >= 0.0) {
            return Err(Error::InvalidConfig("covariance_jitter must be >= 0".into()));
        }
        self.optimizer.validate()
    }
}

/// Outcome of one assimilation step.
#[derive(Clone, Debug, PartialEq)]
pub struct AssimilationRecord {
    /// 1-based step index.
    pub step: usize,
    /// Model time of the measurement.
    pub time: f64,
    pub posterior_states: Vec<Vec<f64>>,
    /// Simulated measurements of the joint ensemble, replicate-major per member.
    pub simulated_measurements: Vec<Vec<f64>>,
    pub map_fit: FitDiagnostics,
    /// Seconds spent fitting the map.
    pub map_wall_time: f64,
    /// Seconds for the full step, propagation included when run by [`run_filter`].
    pub total_wall_time: f64,
}

/// Result of [`assimilate`]; the fitted map is returned for warm starting.
#[derive(Clone, Debug)]
pub struct AssimilationOutput {
    pub posterior_states: Vec<Vec<f64>>,
    pub record: AssimilationRecord,
    pub map: TriangularTransportMap,
}

/// Conditions already-propagated prior states on one measurement.
pub fn assimilate(
    prior_states: &[Vec<f64>],
    measurement: &Measurement,
    model: &dyn StateSpaceModel,
    config: &FilterConfig,
    streams: &SeedStreams,
    step: usize,
    warm_start_map: Option<&TriangularTransportMap>,
) -> Result<AssimilationOutput> {
    let started = Instant::now();
    let m = model.measurement_dim();
    let d = model.state_dim();
    if measurement.y.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: measurement.y.len(),
        });
    }
    if prior_states.len() < 2 {
        return Err(Error::DegenerateEnsemble(format!("{} prior members", prior_states.len())));
    }
    if prior_states.iter().all(|s| s == &prior_states[0]) {
        return Err(Error::DegenerateEnsemble("all prior states identical".into()));
    }

    let l = config.oversampling_factor;
    let joint = simulate_likelihood(prior_states, model, l, streams, step as u64)?;
    let normalized = normalize_ensemble(&joint, &measurement.y, config.covariance_jitter)?;

    let start_map = match (config.optimizer.initial_coefficients, warm_start_map) {
        (InitialCoefficients::WarmStart, Some(prev))
            if prev.total_dim() == m + d
                && prev.fixed_prefix_dim() == m
                && prev.component(0).order() == config.map_order =>
        {
            prev.clone()
        }
        _ => TriangularTransportMap::total_order(m + d, m, config.map_order, config.rectifier, config.quadrature_points)?,
    };
    let mut optimizer = config.optimizer;
    optimizer.initial_coefficients = InitialCoefficients::WarmStart;
    let (map, map_fit) = fit_map(&start_map, &normalized.prior, &optimizer)?;
    let map_wall_time = map_fit.wall_time;

    let y_white = &normalized.actual[0][..m];
    let conditioned = normalized
        .prior
        .par_iter()
        .map(|row| {
            let z = map.evaluate(row)?;
            map.condition_inverse(y_white, &z, &config.inversion)
        })
        .collect::<Result<Vec<_>>>()?;
    let full = denormalize(&normalized.transform, y_white, &conditioned)?;
    let posterior_states: Vec<Vec<f64>> = full.iter().step_by(l).map(|row| row[m..].to_vec()).collect();
    if posterior_states.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState { t: measurement.t });
    }

    let record = AssimilationRecord {
        step,
        time: measurement.t,
        posterior_states: posterior_states.clone(),
        simulated_measurements: joint.measurement_block().to_vec(),
        map_fit,
        map_wall_time,
        total_wall_time: started.elapsed().as_secs_f64(),
    };
    Ok(AssimilationOutput {
        posterior_states,
        record,
        map,
    })
}

/// Propagates and assimilates through a measurement sequence, starting at `t0`.
pub fn run_filter(
    model: &dyn StateSpaceModel,
    measurements: &[Measurement],
    initial_ensemble: &[Vec<f64>],
    t0: f64,
    config: &FilterConfig,
) -> Result<Vec<AssimilationRecord>> {
    let mut records = Vec::with_capacity(measurements.len());
    run_filter_with(model, measurements, initial_ensemble, t0, config, |r| {
        records.push(r);
        Ok(())
    })?;
    Ok(records)
}

/// Like [`run_filter`], handing each record to `sink` as soon as it is produced.
pub fn run_filter_with<F>(
    model: &dyn StateSpaceModel,
    measurements: &[Measurement],
    initial_ensemble: &[Vec<f64>],
    t0: f64,
    config: &FilterConfig,
    mut sink: F,
) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(AssimilationRecord) -> Result<()>,
{
    config.validate()?;
    if initial_ensemble.len() != config.ensemble_size {
        return Err(Error::InvalidConfig(format!(
            "initial ensemble has {} members, ensemble_size is {}",
            initial_ensemble.len(),
            config.ensemble_size
        )));
    }
    if let Some(w) = measurements.windows(2).find(|w| !(w[1].t > w[0].t)) {
        return Err(Error::InvalidArgument(format!(
            "measurement times must increase strictly ({} then {})",
            w[0].t, w[1].t
        )));
    }
    if let Some(first) = measurements.first() {
        if !(first.t > t0) {
            return Err(Error::InvalidArgument(format!(
                "first measurement at {} is not after the start time {t0}",
                first.t
            )));
        }
    }

    let streams = SeedStreams::new(config.seed);
    let mut states = initial_ensemble.to_vec();
    let mut t_prev = t0;
    let mut map: Option<TriangularTransportMap> = None;
    for (k, meas) in measurements.iter().enumerate() {
        let step = k + 1;
        let started = Instant::now();
        let dt = meas.t - t_prev;
        let prior = states
            .par_iter()
            .map(|s| model.propagate(s, t_prev, dt))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.at_step(step))?;
        let out = assimilate(&prior, meas, model, config, &streams, step, map.as_ref()).map_err(|e| e.at_step(step))?;
        let mut record = out.record;
        record.total_wall_time = started.elapsed().as_secs_f64();
        states = out.posterior_states;
        map = Some(out.map);
        t_prev = meas.t;
        sink(record)?;
    }
    Ok(states)
}
