//! Probabilists' Hermite polynomials, orthogonal under the standard normal weight.

/// `He_degree(x)` by the three-term recurrence.
pub fn hermite_eval(degree: u32, x: f64) -> f64 {
    match degree {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for n in 1..degree {
                let next = x * cur - f64::from(n) * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Fills `out[n] = He_n(x)` for `n = 0..out.len()`.
pub fn hermite_table(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for n in 2..out.len() {
        out[n] = x * out[n - 1] - (n - 1) as f64 * out[n - 2];
    }
}

/// Derivative `He_n'(x) = n He_{n-1}(x)`.
pub fn hermite_derivative(degree: u32, x: f64) -> f64 {
    if degree == 0 {
        0.0
    } else {
        f64::from(degree) * hermite_eval(degree - 1, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(hermite_eval(2, 0.0), -1.0);
        assert_eq!(hermite_eval(0, 7.3), 1.0);
        assert_eq!(hermite_eval(3, 2.0), 2.0);
        let x = 0.37;
        assert!((hermite_eval(4, x) - (x.powi(4) - 6.0 * x * x + 3.0)).abs() < 1e-14);
    }

    #[test]
    fn table_matches_scalar() {
        let mut t = [0.0; 7];
        hermite_table(-1.3, &mut t);
        for (n, v) in t.iter().enumerate() {
            assert!((v - hermite_eval(n as u32, -1.3)).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-6;
        for n in 0..6 {
            let x = 0.8;
            let fd = (hermite_eval(n, x + h) - hermite_eval(n, x - h)) / (2.0 * h);
            assert!((hermite_derivative(n, x) - fd).abs() < 1e-6);
        }
    }
}
