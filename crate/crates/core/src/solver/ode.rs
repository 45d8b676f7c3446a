//! Constant-coefficient backward ODE `v'(t) = -f(v(t))`, `v(T) = 0`.
//!
//! This is the classical single-crash reference problem: with the factor
//! pinned, the exposure equation loses its space derivatives and reduces
//! to an autonomous scalar ODE, integrated here backward from the
//! terminal condition with classical fourth-order Runge-Kutta.

use crate::error::{Error, Result};
use crate::market::ModelSpec;

/// RK4 for `v' = -f(v)`, `v(T) = 0` on a uniform grid; returns
/// `v(t_i)` for `i = 0..=n_t` with `t_0 = 0` and `t_nt = T`.
///
/// Steps reject when `|f|` exceeds 1e6 (degenerate parameterizations).
pub fn solve_ode_generator(
    f: &dyn Fn(f64) -> Result<f64>,
    horizon: f64,
    n_t: usize,
) -> Result<Vec<f64>> {
    if n_t < 1 {
        return Err(Error::InvalidModel("n_t must be >= 1".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidModel(format!("horizon must be > 0, got {horizon}")));
    }
    let h = horizon / n_t as f64;
    let eval = |y: f64| -> Result<f64> {
        let v = f(y)?;
        if !v.is_finite() || v.abs() > 1e6 {
            return Err(Error::Solver(format!("generator value {v} out of range at y={y}")));
        }
        Ok(v)
    };
    // integrate w(s) = v(T - s) forward: w' = f(w), w(0) = 0
    let mut w = 0.0;
    let mut vals = vec![0.0; n_t + 1];
    for i in (0..n_t).rev() {
        let k1 = eval(w)?;
        let k2 = eval(w + 0.5 * h * k1)?;
        let k3 = eval(w + 0.5 * h * k2)?;
        let k4 = eval(w + h * k3)?;
        w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        vals[i] = w;
    }
    Ok(vals)
}

/// Reference exposure for `model` with coefficients frozen at `x0`.
pub fn solve_ode_constant(model: &ModelSpec, x0: f64, n_t: usize) -> Result<Vec<f64>> {
    let frozen = model.frozen_at(x0);
    frozen.validate()?;
    solve_ode_generator(&|y| frozen.generator(x0, y), model.horizon, n_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{preset, PresetId};
    use approx::assert_abs_diff_eq;

    #[test]
    fn terminal_condition_and_first_step() {
        let c = preset(PresetId::C);
        let n_t = 1000;
        let v = solve_ode_constant(&c, 0.014, n_t).unwrap();
        assert_eq!(v[n_t], 0.0);
        // one-step expansion: v(T - h) = f(0) h + O(h²) with f(0) = 0.04375
        let h = 5.0 / n_t as f64;
        assert_abs_diff_eq!(v[n_t - 1], 0.04375 * h, epsilon = 1e-7);
        // nonnegative and nonincreasing in t
        for w in v.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
            assert!(w[1] >= 0.0);
        }
    }

    #[test]
    fn refinement_oracle() {
        // halving h moves v(0) by less than 1e-8 (fourth-order scheme)
        let c = preset(PresetId::C);
        let v1 = solve_ode_constant(&c, 0.014, 1000).unwrap();
        let v2 = solve_ode_constant(&c, 0.014, 2000).unwrap();
        assert!((v1[0] - v2[0]).abs() < 1e-8, "got {}", (v1[0] - v2[0]).abs());
    }

    #[test]
    fn step_rejection_on_degenerate_generator() {
        let err = solve_ode_generator(&|_| Ok(1e7), 1.0, 10);
        assert!(matches!(err, Err(crate::error::Error::Solver(_))));
    }

    #[test]
    fn linear_generator_closed_form() {
        // f(y) = a - b y has v(t) = a/b (1 - e^{-b (T-t)})
        let (a, b) = (0.04, 0.3);
        let v = solve_ode_generator(&|y| Ok(a - b * y), 5.0, 1000).unwrap();
        let exact = |t: f64| a / b * (1.0 - (-b * (5.0 - t)).exp());
        for (i, &vi) in v.iter().enumerate() {
            let t = 5.0 * i as f64 / 1000.0;
            assert_abs_diff_eq!(vi, exact(t), epsilon = 1e-10);
        }
    }
}
