use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterConfig;
use crate::map::{InversionOptions, Rectifier, MIN_QUADRATURE_POINTS};
use crate::models::{DuffingParams, NoiseDistribution};
use crate::training::{InitialCoefficients, LineSearch, OptimizerConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Gaussian,
    Laplace,
}

/// One Duffing experiment, stored as a flat JSON object.
///
/// Missing keys take the defaults below; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub delta: f64,
    pub beta: f64,
    pub kappa: f64,
    pub omega0: f64,
    pub noise_kind: NoiseKind,
    /// Laplace scale `b`, or the Gaussian standard deviation.
    pub noise_scale: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub ensemble_size: usize,
    pub oversampling_factor: usize,
    pub map_order: u32,
    pub quadrature_points: usize,
    pub rectifier: Rectifier,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub warm_start: bool,
    /// Initial parameter guesses are centred on this multiple of the truth.
    pub initial_parameter_multiplier: f64,
    /// Relative standard deviation of the initial parameter guesses.
    pub spread: f64,
    pub seed: u64,
    pub covariance_jitter: f64,
    pub output_dir: Option<PathBuf>,
    /// Write the full posterior ensemble every this many steps; 0 disables.
    pub snapshot_stride: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = DuffingParams::default();
        ExperimentConfig {
            alpha: p.alpha,
            delta: p.delta,
            beta: p.beta,
            kappa: p.kappa,
            omega0: p.omega0,
            noise_kind: NoiseKind::Laplace,
            noise_scale: 0.09,
            t_start: 0.0,
            t_end: 100.0,
            dt: 0.1,
            ensemble_size: 20,
            oversampling_factor: 1,
            map_order: 2,
            quadrature_points: 32,
            rectifier: Rectifier::Exponential,
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            warm_start: true,
            initial_parameter_multiplier: 2.0,
            spread: 0.25,
            seed: 1,
            covariance_jitter: 1e-10,
            output_dir: None,
            snapshot_stride: 100,
        }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Parses and validates; messages carry the line (and column when known).
    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        if let Err((key, msg)) = config.check() {
            return Err(Error::InvalidConfig(match key_line(text, key) {
                Some(line) => format!("line {line}: {key}: {msg}"),
                None => format!("{key}: {msg}"),
            }));
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.check()
            .map_err(|(key, msg)| Error::InvalidConfig(format!("{key}: {msg}")))
    }

    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let finite = [
            ("alpha", self.alpha),
            ("delta", self.delta),
            ("beta", self.beta),
            ("kappa", self.kappa),
            ("omega0", self.omega0),
            ("t_start", self.t_start),
            ("t_end", self.t_end),
            ("initial_parameter_multiplier", self.initial_parameter_multiplier),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err((key, "must be finite".into()));
            }
        }
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return Err(("noise_scale", format!("must be finite and >= 0, got {}", self.noise_scale)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.t_end > self.t_start) {
            return Err(("t_end", format!("must exceed t_start ({} <= {})", self.t_end, self.t_start)));
        }
        let span = (self.t_end - self.t_start) / self.dt;
        if (span - span.round()).abs() > 1e-6 * span.max(1.0) {
            return Err(("dt", format!("must divide t_end - t_start evenly, got {span} steps")));
        }
        if self.ensemble_size < 2 {
            return Err(("ensemble_size", format!("must be >= 2, got {}", self.ensemble_size)));
        }
        if self.oversampling_factor < 1 {
            return Err(("oversampling_factor", "must be >= 1".into()));
        }
        if self.quadrature_points < MIN_QUADRATURE_POINTS {
            return Err((
                "quadrature_points",
                format!("must be >= {MIN_QUADRATURE_POINTS}, got {}", self.quadrature_points),
            ));
        }
        if self.max_iterations < 1 {
            return Err(("max_iterations", "must be >= 1".into()));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(("gradient_tolerance", format!("must be > 0, got {}", self.gradient_tolerance)));
        }
        if !(self.spread > 0.0) || !self.spread.is_finite() {
            return Err(("spread", format!("must be > 0, got {}", self.spread)));
        }
        if !(self.covariance_jitter >= 0.0) || !self.covariance_jitter.is_finite() {
            return Err(("covariance_jitter", format!("must be >= 0, got {}", self.covariance_jitter)));
        }
        Ok(())
    }

    pub fn params(&self) -> DuffingParams {
        DuffingParams {
            alpha: self.alpha,
            delta: self.delta,
            beta: self.beta,
            kappa: self.kappa,
            omega0: self.omega0,
        }
    }

    pub fn noise(&self) -> NoiseDistribution {
        match self.noise_kind {
            NoiseKind::Gaussian => NoiseDistribution::Gaussian { std: self.noise_scale },
            NoiseKind::Laplace => NoiseDistribution::Laplace { scale: self.noise_scale },
        }
    }

    pub fn filter_config(&self) -> FilterConfig {
        FilterConfig {
            ensemble_size: self.ensemble_size,
            oversampling_factor: self.oversampling_factor,
            map_order: self.map_order,
            rectifier: self.rectifier,
            quadrature_points: self.quadrature_points,
            optimizer: OptimizerConfig {
                max_iterations: self.max_iterations,
                gradient_tolerance: self.gradient_tolerance,
                initial_coefficients: if self.warm_start {
                    InitialCoefficients::WarmStart
                } else {
                    InitialCoefficients::Zeros
                },
                line_search: LineSearch::Backtracking,
            },
            seed: self.seed,
            covariance_jitter: self.covariance_jitter,
            inversion: InversionOptions::default(),
        }
    }

    /// Pretty JSON that [`ExperimentConfig::from_json_str`] reads back unchanged.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// 1-based line of the first `"key":` in the document.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|line| {
        line.find(&quoted)
            .is_some_and(|i| line[i + quoted.len()..].trim_start().starts_with(':'))
    })
    .map(|i| i + 1)
}
