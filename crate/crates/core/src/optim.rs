//! Limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbfgsSettings {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub memory: usize,
    /// Sufficient-decrease constant.
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        LbfgsSettings {
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            memory: 10,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at every accepted iterate, starting point first.
    pub trace: Vec<f64>,
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes a smooth function given `(value, gradient)` evaluations.
///
/// `eval` returns `None` where the objective is not finite; the line search
/// treats that as a failed trial and shrinks the step. `x0` must be finite.
pub fn minimize<F>(mut eval: F, x0: Vec<f64>, settings: &LbfgsSettings) -> Option<LbfgsOutcome>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let mut x = x0;
    let (mut value, mut grad) = eval(&x)?;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(settings.memory);
    let mut trace = vec![value];
    let mut iterations = 0;

    loop {
        let gnorm = sup_norm(&grad);
        if gnorm <= settings.gradient_tolerance {
            return Some(LbfgsOutcome {
                x,
                value,
                gradient_norm: gnorm,
                iterations,
                converged: true,
                trace,
            });
        }
        if iterations >= settings.max_iterations {
            return Some(LbfgsOutcome {
                x,
                value,
                gradient_norm: gnorm,
                iterations,
                converged: false,
                trace,
            });
        }

        let mut direction = two_loop(&grad, &history);
        let mut slope = dot(&direction, &grad);
        if !(slope < 0.0) || !slope.is_finite() {
            history.clear();
            direction = grad.iter().map(|g| -g).collect();
            slope = -dot(&grad, &grad);
        }
        let mut step = if history.is_empty() {
            (1.0 / sup_norm(&direction)).min(1.0)
        } else {
            1.0
        };

        // Below this predicted decrease the Armijo test only compares rounding noise.
        let resolvable = 16.0 * f64::EPSILON * value.abs();
        let mut accepted = None;
        for _ in 0..=settings.max_backtracks {
            if step * slope.abs() < resolvable {
                break;
            }
            let trial: Vec<f64> = x.iter().zip(&direction).map(|(xi, di)| xi + step * di).collect();
            if let Some((v, g)) = eval(&trial) {
                if v <= value + settings.armijo_c * step * slope {
                    accepted = Some((trial, v, g));
                    break;
                }
            }
            step *= settings.backtrack_factor;
        }
        iterations += 1;

        let Some((x_new, v_new, g_new)) = accepted else {
            // No resolvable decrease along a descent direction: stationary to working precision.
            return Some(LbfgsOutcome {
                x,
                value,
                gradient_norm: gnorm,
                iterations,
                converged: false,
                trace,
            });
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == settings.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = x_new;
        value = v_new;
        grad = g_new;
        trace.push(value);
    }
}

fn two_loop(grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}
