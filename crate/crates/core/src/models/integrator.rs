use crate::error::{Error, Result};

/// One classical fourth-order Runge-Kutta step of `ẋ = rhs(x, t)`.
pub fn rk4_step<F>(rhs: F, state: &[f64], t: f64, dt: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64], f64) -> Vec<f64>,
{
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("rk4 step size must be positive, got {dt}")));
    }
    let axpy = |base: &[f64], k: &[f64], h: f64| -> Vec<f64> { base.iter().zip(k).map(|(b, k)| b + h * k).collect() };
    let k1 = rhs(state, t);
    let k2 = rhs(&axpy(state, &k1, 0.5 * dt), t + 0.5 * dt);
    let k3 = rhs(&axpy(state, &k2, 0.5 * dt), t + 0.5 * dt);
    let k4 = rhs(&axpy(state, &k3, dt), t + dt);
    let next: Vec<f64> = (0..state.len())
        .map(|i| state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::NonFiniteState { t: t + dt })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rhs_keeps_state() {
        let s = rk4_step(|x, _| vec![0.0; x.len()], &[1.0, -2.0], 0.0, 0.3).unwrap();
        assert_eq!(s, vec![1.0, -2.0]);
    }

    #[test]
    fn exponential_growth() {
        let s = rk4_step(|x, _| vec![x[0]], &[1.0], 0.0, 0.1).unwrap();
        assert!((s[0] - 1.105_170_91).abs() < 1e-7);
        assert!((s[0] - 0.1f64.exp()).abs() < 1e-7);
    }

    #[test]
    fn local_error_is_fifth_order() {
        let err = |dt: f64| (rk4_step(|x, _| vec![x[0]], &[1.0], 0.0, dt).unwrap()[0] - dt.exp()).abs();
        let ratio = err(0.2) / err(0.1);
        assert!((ratio / 32.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn undamped_oscillator_energy() {
        let mut s = vec![1.0, 0.0];
        let e0 = 0.5;
        for k in 0..1000 {
            s = rk4_step(|x, _| vec![x[1], -x[0]], &s, k as f64 * 0.01, 0.01).unwrap();
        }
        let e = 0.5 * (s[0] * s[0] + s[1] * s[1]);
        assert!(((e - e0) / e0).abs() <= 1e-5);
    }

    #[test]
    fn rejects_bad_step_and_blowup() {
        assert!(rk4_step(|x, _| x.to_vec(), &[1.0], 0.0, 0.0).is_err());
        let r = rk4_step(|x, _| vec![x[0] * 1e308], &[1e10], 0.0, 1.0);
        assert!(matches!(r, Err(Error::NonFiniteState { .. })));
    }
}
