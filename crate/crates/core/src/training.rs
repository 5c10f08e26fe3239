//! Sample-based KL fitting of map coefficients.
//!
//! For samples `x_1..x_N` the objective is
//! `(1/N) Σ_s [ -log ρ(M(x_s)) - log |det ∇M(x_s)| ]` with `ρ` the standard
//! normal density over the map outputs. It splits into one independent term per
//! component, so every component is fitted on its own.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::map::{hermite_derivative, MapComponent, TriangularTransportMap};
use crate::optim::{self, LbfgsSettings};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InitialCoefficients {
    /// Start from the identity map.
    Zeros,
    /// Start from the coefficients already held by the map.
    #[default]
    WarmStart,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LineSearch {
    #[default]
    Backtracking,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Sup-norm of the gradient at which a fit counts as converged.
    pub gradient_tolerance: f64,
    pub initial_coefficients: InitialCoefficients,
    pub line_search: LineSearch,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            initial_coefficients: InitialCoefficients::WarmStart,
            line_search: LineSearch::Backtracking,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::InvalidConfig("gradient_tolerance must be > 0".into()));
        }
        Ok(())
    }

    fn lbfgs(&self) -> LbfgsSettings {
        let LineSearch::Backtracking = self.line_search;
        LbfgsSettings {
            max_iterations: self.max_iterations,
            gradient_tolerance: self.gradient_tolerance,
            ..LbfgsSettings::default()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitDiagnostics {
    /// Largest iteration count over the component fits.
    pub iterations: usize,
    pub final_objective: f64,
    /// Sup-norm of the full coefficient gradient.
    pub final_gradient_norm: f64,
    pub converged: bool,
    /// Seconds.
    pub wall_time: f64,
    pub component_iterations: Vec<usize>,
}

fn check_samples(map: &TriangularTransportMap, samples: &[Vec<f64>]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("objective needs at least one sample".into()));
    }
    for row in samples {
        if row.len() != map.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: map.total_dim(),
                actual: row.len(),
            });
        }
    }
    Ok(())
}

/// Evaluates the objective directly through map evaluation and log-determinant.
pub fn objective(map: &TriangularTransportMap, samples: &[Vec<f64>]) -> Result<f64> {
    check_samples(map, samples)?;
    let d = map.output_dim() as f64;
    let mut total = 0.0;
    for (i, x) in samples.iter().enumerate() {
        let z = map.evaluate(x).map_err(|_| Error::NonFiniteObjective { sample: i })?;
        let log_det = map.log_det_jacobian(x)?;
        let term = 0.5 * z.iter().map(|v| v * v).sum::<f64>() + d * HALF_LN_2PI - log_det;
        if !term.is_finite() {
            return Err(Error::NonFiniteObjective { sample: i });
        }
        total += term;
    }
    Ok(total / samples.len() as f64)
}

/// Analytic gradient with respect to all coefficients, component blocks concatenated.
pub fn objective_gradient(map: &TriangularTransportMap, samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_samples(map, samples)?;
    let blocks = (0..map.output_dim())
        .into_par_iter()
        .map(|k| {
            let problem = ComponentProblem::new(map, k, samples);
            let a = map.component(k).coefficients();
            problem.value_and_gradient(a).map(|(_, g)| g)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.concat())
}

/// Fits every component by L-BFGS on its share of the objective.
pub fn fit_map(
    map: &TriangularTransportMap,
    samples: &[Vec<f64>],
    config: &OptimizerConfig,
) -> Result<(TriangularTransportMap, FitDiagnostics)> {
    config.validate()?;
    check_samples(map, samples)?;
    let started = Instant::now();
    let settings = config.lbfgs();
    let results = (0..map.output_dim())
        .into_par_iter()
        .map(|k| {
            let problem = ComponentProblem::new(map, k, samples);
            let x0 = match config.initial_coefficients {
                InitialCoefficients::Zeros => vec![0.0; problem.num_coefficients()],
                InitialCoefficients::WarmStart => map.component(k).coefficients().to_vec(),
            };
            problem.value_and_gradient(&x0)?;
            let outcome = optim::minimize(|a| problem.value_and_gradient(a).ok(), x0, &settings)
                .ok_or(Error::NonFiniteObjective { sample: 0 })?;
            Ok(outcome)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut fitted = map.clone();
    let mut diagnostics = FitDiagnostics {
        converged: true,
        ..FitDiagnostics::default()
    };
    for (k, outcome) in results.into_iter().enumerate() {
        fitted.component_mut(k).set_coefficients(&outcome.x)?;
        diagnostics.iterations = diagnostics.iterations.max(outcome.iterations);
        diagnostics.final_objective += outcome.value;
        diagnostics.final_gradient_norm = diagnostics.final_gradient_norm.max(outcome.gradient_norm);
        diagnostics.converged &= outcome.converged;
        diagnostics.component_iterations.push(outcome.iterations);
    }
    diagnostics.wall_time = started.elapsed().as_secs_f64();
    Ok((fitted, diagnostics))
}

/// Precomputed basis values for one component over a fixed sample set.
///
/// Everything that depends only on the samples is tabulated once, so each
/// objective evaluation reduces to dot products against the coefficients.
pub(crate) struct ComponentProblem<'a> {
    component: &'a MapComponent,
    n: usize,
    n_off: usize,
    n_diag: usize,
    n_quad: usize,
    /// `n × n_off`.
    off_features: Vec<f64>,
    /// `n × n_quad × n_diag`: diagonal basis derivative at each quadrature node.
    quad_features: Vec<f64>,
    /// `n × n_quad`: quadrature weights scaled to `[0, x_i]`.
    quad_weights: Vec<f64>,
    /// `n × n_diag`: diagonal basis derivative at the sample itself.
    end_features: Vec<f64>,
}

impl<'a> ComponentProblem<'a> {
    pub(crate) fn new(map: &'a TriangularTransportMap, k: usize, samples: &[Vec<f64>]) -> Self {
        let component = map.component(k);
        let inputs = map.fixed_prefix_dim() + k + 1;
        let n = samples.len();
        let n_off = component.off_terms().len();
        let n_diag = component.diag_terms().len();
        let rule = component.quadrature();
        let n_quad = rule.len();
        let degrees: Vec<u32> = component.diag_degrees().collect();

        let mut off_features = vec![0.0; n * n_off];
        let mut quad_features = vec![0.0; n * n_quad * n_diag];
        let mut quad_weights = vec![0.0; n * n_quad];
        let mut end_features = vec![0.0; n * n_diag];
        let mut prefix_diag = vec![0.0; n_diag];

        for (s, row) in samples.iter().enumerate() {
            let (prefix, last) = row[..inputs].split_at(inputs - 1);
            let t_end = last[0];
            component.prefix_products(prefix, &mut off_features[s * n_off..(s + 1) * n_off], &mut prefix_diag);
            for (j, (&p, &deg)) in prefix_diag.iter().zip(&degrees).enumerate() {
                end_features[s * n_diag + j] = p * hermite_derivative(deg, t_end);
            }
            let half = 0.5 * t_end;
            for (q, (node, w)) in rule.nodes().iter().zip(rule.weights()).enumerate() {
                let t = half * (1.0 + node);
                quad_weights[s * n_quad + q] = half * w;
                let base = (s * n_quad + q) * n_diag;
                for (j, (&p, &deg)) in prefix_diag.iter().zip(&degrees).enumerate() {
                    quad_features[base + j] = p * hermite_derivative(deg, t);
                }
            }
        }
        ComponentProblem {
            component,
            n,
            n_off,
            n_diag,
            n_quad,
            off_features,
            quad_features,
            quad_weights,
            end_features,
        }
    }

    pub(crate) fn num_coefficients(&self) -> usize {
        self.n_off + self.n_diag
    }

    /// Objective share of this component and its gradient, in index-set order.
    pub(crate) fn value_and_gradient(&self, coefficients: &[f64]) -> Result<(f64, Vec<f64>)> {
        debug_assert_eq!(coefficients.len(), self.num_coefficients());
        let rect = self.component.rectifier();
        let a_off: Vec<f64> = self.component.off_terms().iter().map(|&j| coefficients[j]).collect();
        let a_diag: Vec<f64> = self.component.diag_terms().iter().map(|&j| coefficients[j]).collect();

        let mut value = 0.0;
        let mut grad_off = vec![0.0; self.n_off];
        let mut grad_diag = vec![0.0; self.n_diag];
        let mut d_integral = vec![0.0; self.n_diag];

        for s in 0..self.n {
            let off_row = &self.off_features[s * self.n_off..(s + 1) * self.n_off];
            let mut m = dot(off_row, &a_off);
            d_integral.iter_mut().for_each(|v| *v = 0.0);
            for q in 0..self.n_quad {
                let base = (s * self.n_quad + q) * self.n_diag;
                let feat = &self.quad_features[base..base + self.n_diag];
                let h = dot(feat, &a_diag);
                let w = self.quad_weights[s * self.n_quad + q];
                m += w * rect.eval(h);
                let scale = w * rect.derivative(h);
                for (acc, f) in d_integral.iter_mut().zip(feat) {
                    *acc += scale * f;
                }
            }
            let end = &self.end_features[s * self.n_diag..(s + 1) * self.n_diag];
            let h_end = dot(end, &a_diag);
            let term = 0.5 * m * m - rect.ln_eval(h_end);
            if !term.is_finite() || !m.is_finite() {
                return Err(Error::NonFiniteObjective { sample: s });
            }
            value += term;
            for (g, f) in grad_off.iter_mut().zip(off_row) {
                *g += m * f;
            }
            let dlog = rect.ln_derivative(h_end);
            for ((g, di), e) in grad_diag.iter_mut().zip(&d_integral).zip(end) {
                *g += m * di - dlog * e;
            }
        }

        let inv_n = 1.0 / self.n as f64;
        let mut gradient = vec![0.0; self.num_coefficients()];
        for (g, &j) in grad_off.iter().zip(self.component.off_terms()) {
            gradient[j] = g * inv_n;
        }
        for (g, &j) in grad_diag.iter().zip(self.component.diag_terms()) {
            gradient[j] = g * inv_n;
        }
        if gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteObjective { sample: 0 });
        }
        Ok((value * inv_n + HALF_LN_2PI, gradient))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
