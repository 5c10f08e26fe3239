//! Lower-triangular monotone transport maps built from Hermite expansions.

mod component;
mod hermite;
mod multi_index;
mod quadrature;

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Deserialize;

pub use component::{
    ComponentSlice, InversionOptions, MapComponent, Rectifier, DEFAULT_QUADRATURE_POINTS, MIN_QUADRATURE_POINTS,
};
pub use hermite::{hermite_derivative, hermite_eval, hermite_table};
pub use multi_index::{build_total_order_set, MultiIndex, MultiIndexSet};
pub use quadrature::GaussLegendre;

use crate::error::{Error, Result};

/// Knothe-Rosenblatt map whose first `fixed_prefix_dim` inputs are conditioning-only.
///
/// Component `k` (0-based) reads the first `fixed_prefix_dim + k + 1` inputs and
/// emits output `k`; the prefix block has no components of its own.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangularTransportMap {
    components: Vec<MapComponent>,
    total_dim: usize,
    fixed_prefix_dim: usize,
}

impl TriangularTransportMap {
    /// Identity map on the state block with total-order Hermite components.
    pub fn total_order(
        total_dim: usize,
        fixed_prefix_dim: usize,
        order: u32,
        rectifier: Rectifier,
        quadrature_points: usize,
    ) -> Result<Self> {
        if fixed_prefix_dim >= total_dim {
            return Err(Error::InvalidArgument(format!(
                "fixed_prefix_dim {fixed_prefix_dim} must be below total_dim {total_dim}"
            )));
        }
        if quadrature_points < MIN_QUADRATURE_POINTS {
            return Err(Error::InvalidArgument(format!(
                "quadrature_points must be >= {MIN_QUADRATURE_POINTS}, got {quadrature_points}"
            )));
        }
        let rule = Arc::new(GaussLegendre::new(quadrature_points));
        let components = (fixed_prefix_dim + 1..=total_dim)
            .map(|inputs| MapComponent::with_rule(inputs, order, rectifier, Arc::clone(&rule)))
            .collect();
        Ok(TriangularTransportMap {
            components,
            total_dim,
            fixed_prefix_dim,
        })
    }

    pub fn from_components(components: Vec<MapComponent>, fixed_prefix_dim: usize) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("map needs at least one component".into()));
        }
        for (k, c) in components.iter().enumerate() {
            if c.input_dim() != fixed_prefix_dim + k + 1 {
                return Err(Error::DimensionMismatch {
                    expected: fixed_prefix_dim + k + 1,
                    actual: c.input_dim(),
                });
            }
        }
        Ok(TriangularTransportMap {
            total_dim: fixed_prefix_dim + components.len(),
            components,
            fixed_prefix_dim,
        })
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn fixed_prefix_dim(&self) -> usize {
        self.fixed_prefix_dim
    }

    /// Number of outputs, i.e. components.
    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[MapComponent] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &MapComponent {
        &self.components[k]
    }

    pub fn component_mut(&mut self, k: usize) -> &mut MapComponent {
        &mut self.components[k]
    }

    pub fn num_coefficients(&self) -> usize {
        self.components.iter().map(MapComponent::num_coefficients).sum()
    }

    /// All coefficients, component blocks concatenated in order.
    pub fn coefficients(&self) -> Vec<f64> {
        self.components
            .iter()
            .flat_map(|c| c.coefficients().iter().copied())
            .collect()
    }

    pub fn set_coefficients(&mut self, coefficients: &[f64]) -> Result<()> {
        if coefficients.len() != self.num_coefficients() {
            return Err(Error::DimensionMismatch {
                expected: self.num_coefficients(),
                actual: coefficients.len(),
            });
        }
        let mut rest = coefficients;
        for c in &mut self.components {
            let (head, tail) = rest.split_at(c.num_coefficients());
            c.set_coefficients(head)?;
            rest = tail;
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.total_dim {
            return Err(Error::DimensionMismatch {
                expected: self.total_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        self.components
            .iter()
            .enumerate()
            .map(|(k, c)| c.evaluate(&x[..self.fixed_prefix_dim + k + 1]))
            .collect()
    }

    /// Evaluates every row of a row-major sample block in parallel.
    pub fn evaluate_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.par_iter().map(|r| self.evaluate(r)).collect()
    }

    /// `Σ_k log ∂_k M^k`; the Jacobian is triangular so this is `log |det ∇M|`.
    pub fn log_det_jacobian(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        self.components
            .iter()
            .enumerate()
            .map(|(k, c)| c.log_diagonal_derivative(&x[..self.fixed_prefix_dim + k + 1]))
            .sum()
    }

    /// Solves `M(y_fixed, x) = z` for `x`, one component at a time.
    pub fn condition_inverse(&self, y_fixed: &[f64], z: &[f64], options: &InversionOptions) -> Result<Vec<f64>> {
        if y_fixed.len() != self.fixed_prefix_dim {
            return Err(Error::DimensionMismatch {
                expected: self.fixed_prefix_dim,
                actual: y_fixed.len(),
            });
        }
        if z.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                actual: z.len(),
            });
        }
        let mut inputs = Vec::with_capacity(self.total_dim);
        inputs.extend_from_slice(y_fixed);
        for (c, &zk) in self.components.iter().zip(z) {
            let xk = c.invert_last(&inputs, zk, options)?;
            inputs.push(xk);
        }
        Ok(inputs.split_off(self.fixed_prefix_dim))
    }

    /// Structured text form; coefficients carry 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        s.push_str("{\n");
        let _ = writeln!(s, "  \"total_dim\": {},", self.total_dim);
        let _ = writeln!(s, "  \"fixed_prefix_dim\": {},", self.fixed_prefix_dim);
        s.push_str("  \"components\": [\n");
        for (k, c) in self.components.iter().enumerate() {
            s.push_str("    {\n");
            let _ = writeln!(s, "      \"input_dim\": {},", c.input_dim());
            let _ = writeln!(s, "      \"order\": {},", c.order());
            let rect = match c.rectifier() {
                Rectifier::Exponential => "exponential",
                Rectifier::Softplus => "softplus",
            };
            let _ = writeln!(s, "      \"rectifier\": \"{rect}\",");
            let _ = writeln!(s, "      \"quadrature_points\": {},", c.quadrature_points());
            s.push_str("      \"coefficients\": [");
            for (j, a) in c.coefficients().iter().enumerate() {
                if j > 0 {
                    s.push_str(", ");
                }
                let _ = write!(s, "{a:.16e}");
            }
            s.push_str("]\n");
            s.push_str(if k + 1 == self.components.len() { "    }\n" } else { "    },\n" });
        }
        s.push_str("  ]\n}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MapDocument = serde_json::from_str(text)?;
        if doc.components.len() + doc.fixed_prefix_dim != doc.total_dim {
            return Err(Error::InvalidArgument(format!(
                "map document has {} components for total_dim {} and fixed_prefix_dim {}",
                doc.components.len(),
                doc.total_dim,
                doc.fixed_prefix_dim
            )));
        }
        let components = doc
            .components
            .into_iter()
            .map(|c| {
                MapComponent::new(c.input_dim, c.order, c.rectifier, c.quadrature_points)?
                    .with_coefficients(c.coefficients)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_components(components, doc.fixed_prefix_dim)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDocument {
    total_dim: usize,
    fixed_prefix_dim: usize,
    components: Vec<ComponentDocument>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDocument {
    input_dim: usize,
    order: u32,
    rectifier: Rectifier,
    quadrature_points: usize,
    coefficients: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(total: usize, prefix: usize) -> TriangularTransportMap {
        TriangularTransportMap::total_order(total, prefix, 2, Rectifier::Exponential, 32).unwrap()
    }

    #[test]
    fn zero_map_is_identity() {
        let m = identity(2, 0);
        assert_eq!(m.evaluate(&[1.0, -2.0]).unwrap(), vec![1.0, -2.0]);
        assert_eq!(m.log_det_jacobian(&[1.0, -2.0]).unwrap(), 0.0);
    }

    #[test]
    fn prefix_is_consumed() {
        let m = identity(2, 1);
        assert_eq!(m.output_dim(), 1);
        assert_eq!(m.evaluate(&[5.0, 3.0]).unwrap(), vec![3.0]);
        let x = m.condition_inverse(&[9.0], &[3.0], &InversionOptions::default()).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn structure_is_validated() {
        assert!(TriangularTransportMap::total_order(2, 2, 1, Rectifier::Exponential, 32).is_err());
        let m = identity(3, 1);
        assert!(matches!(m.evaluate(&[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(m.condition_inverse(&[], &[0.0, 0.0], &InversionOptions::default()).is_err());
        let bad = vec![MapComponent::new(3, 1, Rectifier::Exponential, 8).unwrap()];
        assert!(TriangularTransportMap::from_components(bad, 1).is_err());
    }

    #[test]
    fn coefficient_blocks_round_trip() {
        let mut m = identity(3, 1);
        let a: Vec<f64> = (0..m.num_coefficients()).map(|k| k as f64 * 0.01).collect();
        m.set_coefficients(&a).unwrap();
        assert_eq!(m.coefficients(), a);
        assert!(m.set_coefficients(&a[1..]).is_err());
    }

    #[test]
    fn json_document_preserves_coefficients_exactly() {
        let mut m = TriangularTransportMap::total_order(3, 1, 2, Rectifier::Softplus, 12).unwrap();
        let a: Vec<f64> = (0..m.num_coefficients())
            .map(|k| (k as f64 * 0.7311).sin() / 3.0 + 1e-17 * k as f64)
            .collect();
        m.set_coefficients(&a).unwrap();
        let text = m.to_json();
        assert!(text.contains("\"rectifier\": \"softplus\""));
        let back = TriangularTransportMap::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert!(TriangularTransportMap::from_json("{\"total_dim\": 2}").is_err());
    }
}
