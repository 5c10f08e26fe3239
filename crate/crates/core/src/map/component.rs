use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::hermite::{hermite_table, hermite_eval};
use super::multi_index::{build_total_order_set, MultiIndexSet};
use super::quadrature::GaussLegendre;
use crate::error::{Error, Result};

/// Minimum number of Gauss-Legendre points a component accepts.
pub const MIN_QUADRATURE_POINTS: usize = 4;
pub const DEFAULT_QUADRATURE_POINTS: usize = 32;

/// Strictly positive function applied to the diagonal derivative.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rectifier {
    #[default]
    Exponential,
    Softplus,
}

impl Rectifier {
    #[inline]
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Rectifier::Exponential => t.exp(),
            Rectifier::Softplus => t.max(0.0) + (-t.abs()).exp().ln_1p(),
        }
    }

    #[inline]
    pub fn ln_eval(self, t: f64) -> f64 {
        match self {
            Rectifier::Exponential => t,
            Rectifier::Softplus => self.eval(t).ln(),
        }
    }

    #[inline]
    pub fn derivative(self, t: f64) -> f64 {
        match self {
            Rectifier::Exponential => t.exp(),
            Rectifier::Softplus => sigmoid(t),
        }
    }

    /// d/dt log g(t).
    #[inline]
    pub fn ln_derivative(self, t: f64) -> f64 {
        match self {
            Rectifier::Exponential => 1.0,
            Rectifier::Softplus => sigmoid(t) / self.eval(t),
        }
    }
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Root-finding controls for [`MapComponent::invert_last`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InversionOptions {
    /// Target `|M(x) - z|`.
    pub tolerance: f64,
    /// Bracket expansion gives up beyond this magnitude.
    pub bracket_bound: f64,
    /// Bisection stops at this bracket width before Newton polishing.
    pub bisection_width: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions {
            tolerance: 1e-10,
            bracket_bound: 1e8,
            bisection_width: 1e-3,
        }
    }
}

/// One scalar component `M(x_1..x_i) = f_off(x_1..x_{i-1}) + ∫_0^{x_i} g(∂_i f) dt`.
///
/// `f` is a Hermite expansion over a total-order multi-index set. Terms whose
/// last degree is zero form the off-diagonal part; the remaining terms only
/// enter through `∂_i f` inside the integral.
#[derive(Clone, Debug)]
pub struct MapComponent {
    index_set: MultiIndexSet,
    coefficients: Vec<f64>,
    rectifier: Rectifier,
    quadrature: Arc<GaussLegendre>,
    off_terms: Vec<usize>,
    diag_terms: Vec<usize>,
}

impl PartialEq for MapComponent {
    fn eq(&self, other: &Self) -> bool {
        self.index_set == other.index_set
            && self.coefficients == other.coefficients
            && self.rectifier == other.rectifier
            && self.quadrature.len() == other.quadrature.len()
    }
}

impl MapComponent {
    /// Zero-coefficient component over `input_dim` inputs; it is the identity in the last input.
    pub fn new(input_dim: usize, order: u32, rectifier: Rectifier, quadrature_points: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidArgument("component needs at least one input".into()));
        }
        if quadrature_points < MIN_QUADRATURE_POINTS {
            return Err(Error::InvalidArgument(format!(
                "quadrature_points must be >= {MIN_QUADRATURE_POINTS}, got {quadrature_points}"
            )));
        }
        Ok(Self::with_rule(
            input_dim,
            order,
            rectifier,
            Arc::new(GaussLegendre::new(quadrature_points)),
        ))
    }

    pub(crate) fn with_rule(input_dim: usize, order: u32, rectifier: Rectifier, quadrature: Arc<GaussLegendre>) -> Self {
        let index_set = build_total_order_set(input_dim, order);
        let (diag_terms, off_terms): (Vec<usize>, Vec<usize>) =
            (0..index_set.len()).partition(|&j| index_set.indices()[j].last() > 0);
        MapComponent {
            coefficients: vec![0.0; index_set.len()],
            index_set,
            rectifier,
            quadrature,
            off_terms,
            diag_terms,
        }
    }

    pub fn with_coefficients(mut self, coefficients: Vec<f64>) -> Result<Self> {
        self.set_coefficients(&coefficients)?;
        Ok(self)
    }

    pub fn input_dim(&self) -> usize {
        self.index_set.dim()
    }

    pub fn order(&self) -> u32 {
        self.index_set.max_total_order()
    }

    pub fn index_set(&self) -> &MultiIndexSet {
        &self.index_set
    }

    pub fn num_coefficients(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn set_coefficients(&mut self, coefficients: &[f64]) -> Result<()> {
        if coefficients.len() != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coefficients.len(),
                actual: coefficients.len(),
            });
        }
        self.coefficients.copy_from_slice(coefficients);
        Ok(())
    }

    pub fn rectifier(&self) -> Rectifier {
        self.rectifier
    }

    pub fn quadrature_points(&self) -> usize {
        self.quadrature.len()
    }

    pub fn quadrature(&self) -> &GaussLegendre {
        &self.quadrature
    }

    pub(crate) fn off_terms(&self) -> &[usize] {
        &self.off_terms
    }

    pub(crate) fn diag_terms(&self) -> &[usize] {
        &self.diag_terms
    }

    fn check_len(&self, actual: usize, expected: usize) -> Result<()> {
        if actual != expected {
            return Err(Error::DimensionMismatch { expected, actual });
        }
        Ok(())
    }

    /// The full expansion `Σ_j a_j Π_k He_{α_k}(x_k)`, last coordinate included.
    pub fn evaluate_f(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x.len(), self.input_dim())?;
        let tables = self.hermite_tables(x);
        Ok(self
            .index_set
            .iter()
            .zip(&self.coefficients)
            .map(|(alpha, a)| {
                a * alpha
                    .degrees()
                    .iter()
                    .enumerate()
                    .map(|(k, &d)| tables[k][d as usize])
                    .product::<f64>()
            })
            .sum())
    }

    fn hermite_tables(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let width = self.order() as usize + 1;
        x.iter()
            .map(|&xk| {
                let mut t = vec![0.0; width];
                hermite_table(xk, &mut t);
                t
            })
            .collect()
    }

    /// Products `Π_{k<i} He_{α_k}(x_k)` for the off-diagonal and diagonal terms.
    pub(crate) fn prefix_products(&self, prefix: &[f64], off: &mut [f64], diag: &mut [f64]) {
        debug_assert_eq!(prefix.len() + 1, self.input_dim());
        debug_assert_eq!(off.len(), self.off_terms.len());
        debug_assert_eq!(diag.len(), self.diag_terms.len());
        let tables = self.hermite_tables(prefix);
        let product = |j: usize| -> f64 {
            let degrees = self.index_set.indices()[j].degrees();
            degrees[..degrees.len() - 1]
                .iter()
                .enumerate()
                .map(|(k, &d)| tables[k][d as usize])
                .product()
        };
        for (slot, &j) in off.iter_mut().zip(&self.off_terms) {
            *slot = product(j);
        }
        for (slot, &j) in diag.iter_mut().zip(&self.diag_terms) {
            *slot = product(j);
        }
    }

    /// Degree in the last coordinate of each diagonal term.
    pub(crate) fn diag_degrees(&self) -> impl Iterator<Item = u32> + '_ {
        self.diag_terms.iter().map(|&j| self.index_set.indices()[j].last())
    }

    /// Restricts the component to a fixed prefix, leaving a scalar monotone function.
    pub fn slice(&self, prefix: &[f64]) -> Result<ComponentSlice> {
        self.check_len(prefix.len() + 1, self.input_dim())?;
        let mut off = vec![0.0; self.off_terms.len()];
        let mut diag = vec![0.0; self.diag_terms.len()];
        self.prefix_products(prefix, &mut off, &mut diag);
        let offset = off
            .iter()
            .zip(&self.off_terms)
            .map(|(p, &j)| p * self.coefficients[j])
            .sum();
        let order = self.order() as usize;
        let mut derivative_coeffs = vec![0.0; order];
        for ((p, &j), degree) in diag.iter().zip(&self.diag_terms).zip(self.diag_degrees()) {
            derivative_coeffs[degree as usize - 1] += p * self.coefficients[j];
        }
        Ok(ComponentSlice {
            offset,
            derivative_coeffs,
            rectifier: self.rectifier,
            quadrature: Arc::clone(&self.quadrature),
        })
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x.len(), self.input_dim())?;
        let (prefix, last) = x.split_at(x.len() - 1);
        let slice = self.slice(prefix)?;
        let value = slice.value(last[0]);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(self.overflow(&slice, last[0]))
        }
    }

    fn overflow(&self, slice: &ComponentSlice, at: f64) -> Error {
        Error::RectifierOverflow {
            argument: slice.diagonal_argument(at),
            coefficient_magnitude: self.coefficients.iter().fold(0.0, |m, a| m.max(a.abs())),
        }
    }

    /// `∂M/∂x_i = g(∂_i f(x))`.
    pub fn diagonal_derivative(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x.len(), self.input_dim())?;
        let (prefix, last) = x.split_at(x.len() - 1);
        Ok(self.slice(prefix)?.derivative(last[0]))
    }

    /// `log ∂M/∂x_i`, computed without forming `g` when the rectifier allows.
    pub fn log_diagonal_derivative(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x.len(), self.input_dim())?;
        let (prefix, last) = x.split_at(x.len() - 1);
        let slice = self.slice(prefix)?;
        Ok(self.rectifier.ln_eval(slice.diagonal_argument(last[0])))
    }

    /// Solves `M(prefix, x) = z` for the last input.
    pub fn invert_last(&self, prefix: &[f64], z: f64, options: &InversionOptions) -> Result<f64> {
        self.slice(prefix)?.invert(z, options)
    }
}

/// A component with its prefix inputs frozen: `t ↦ offset + ∫_0^t g(h(s)) ds`.
#[derive(Clone, Debug)]
pub struct ComponentSlice {
    offset: f64,
    /// `h(t) = Σ_r c_r He_r'(t)`, stored at index `r - 1`.
    derivative_coeffs: Vec<f64>,
    rectifier: Rectifier,
    quadrature: Arc<GaussLegendre>,
}

impl ComponentSlice {
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `h(t) = ∂_i f` at last coordinate `t`.
    pub fn diagonal_argument(&self, t: f64) -> f64 {
        self.derivative_coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if *c == 0.0 {
                    0.0
                } else {
                    c * (k + 1) as f64 * hermite_eval(k as u32, t)
                }
            })
            .sum()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.rectifier.eval(self.diagonal_argument(t))
    }

    pub fn value(&self, t: f64) -> f64 {
        let g = self.rectifier;
        if self.derivative_coeffs.iter().all(|c| *c == 0.0) {
            return self.offset + g.eval(0.0) * t;
        }
        self.offset
            + self
                .quadrature
                .integrate_from_zero(t, |s| g.eval(self.diagonal_argument(s)))
    }

    /// Bracket expansion from `t = z`, bisection, then safeguarded Newton.
    pub fn invert(&self, z: f64, options: &InversionOptions) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::InversionBracket {
                target: z,
                bound: options.bracket_bound,
            });
        }
        let residual = |t: f64| self.value(t) - z;
        let start = z;
        let r0 = residual(start);
        if r0 == 0.0 {
            return Ok(start);
        }
        // Residual is increasing in t: find lo with r < 0 and hi with r > 0.
        let direction = if r0 < 0.0 { 1.0 } else { -1.0 };
        let mut step = start.abs().max(1.0);
        let mut inner = start;
        let mut outer;
        loop {
            outer = start + direction * step;
            if outer.abs() > options.bracket_bound {
                return Err(Error::InversionBracket {
                    target: z,
                    bound: options.bracket_bound,
                });
            }
            let r = residual(outer);
            if r.is_nan() {
                return Err(Error::InversionBracket {
                    target: z,
                    bound: options.bracket_bound,
                });
            }
            if (r > 0.0) == (direction > 0.0) || r == 0.0 {
                break;
            }
            inner = outer;
            step *= 2.0;
        }
        let (mut lo, mut hi) = if direction > 0.0 { (inner, outer) } else { (outer, inner) };

        while hi - lo > options.bisection_width {
            let mid = 0.5 * (lo + hi);
            let r = residual(mid);
            if r == 0.0 {
                return Ok(mid);
            }
            if r < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }

        let mut t = 0.5 * (lo + hi);
        let mut r = residual(t);
        for _ in 0..200 {
            if r.abs() <= options.tolerance {
                // One more Newton step is nearly free and usually lands at machine precision.
                let polished = t - r / self.derivative(t);
                if polished > lo && polished < hi {
                    let rp = residual(polished);
                    if rp.abs() < r.abs() {
                        return Ok(polished);
                    }
                }
                return Ok(t);
            }
            if r < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let d = self.derivative(t);
            let mut next = t - r / d;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if next == t {
                break;
            }
            t = next;
            r = residual(t);
        }
        Ok(t)
    }
}
