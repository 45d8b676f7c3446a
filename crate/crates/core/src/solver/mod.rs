//! Backward solvers for the utility-crash-exposure surface and the
//! derived policy surface.
//!
//! [`ode::solve_ode_constant`] integrates the constant-coefficient
//! reference problem `v'(t) = -f(v(t))`, `v(T) = 0` with classical RK4;
//! [`pde::solve_pde`] sweeps the Markovian semilinear PDE backward in
//! time with an IMEX theta scheme. Both produce exposures `v >= 0` that
//! convert to allocations through `pi = (1 - e^{-(v v 0)}) / l_woc`.

pub mod ode;
pub mod pde;

pub use ode::{solve_ode_constant, solve_ode_generator};
pub use pde::solve_pde;

use crate::error::{Error, Result};
use crate::market::{exposure_to_strategy, FactorKind, ModelSpec};
use std::io::Write;

/// Uniform space grid with `n_x + 1` nodes on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
}

impl SpaceGrid {
    pub fn new(x_min: f64, x_max: f64, n_x: usize) -> Result<Self> {
        if !(x_min < x_max) || n_x < 2 {
            return Err(Error::InvalidModel(format!(
                "space grid requires x_min < x_max and n_x >= 2, got [{x_min}, {x_max}] with {n_x}"
            )));
        }
        Ok(SpaceGrid { x_min, x_max, n_x })
    }

    /// Truncated domain sized from the factor's stationary law: CIR on
    /// `[0, θ + 8 sd]` rounded up to a 0.02 step, OU on `θ ± 6 sd`.
    pub fn default_for(model: &ModelSpec, n_x: usize) -> Result<Self> {
        let f = &model.factor;
        match f.kind {
            FactorKind::Cir => {
                let hi = f.theta + 8.0 * f.stationary_sd();
                let x_max = (hi / 0.02).ceil() * 0.02;
                SpaceGrid::new(0.0, x_max, n_x)
            }
            FactorKind::Ou => {
                let half = 6.0 * f.stationary_sd();
                SpaceGrid::new(f.theta - half, f.theta + half, n_x)
            }
            FactorKind::Frozen => SpaceGrid::new(f.z0 - 0.06, f.z0 + 0.06, n_x),
        }
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_x as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_x).map(|j| self.node(j)).collect()
    }
}

/// Numerical scheme parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub n_t: usize,
    pub n_x: usize,
    /// Implicit weight of the linear operator (0.5 = Crank-Nicolson).
    pub theta_weight: f64,
    /// Fixed-point passes on the nonlinear source per time step.
    pub picard_iters: usize,
    /// Reporting threshold for the worst Picard residual.
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { n_t: 1000, n_x: 200, theta_weight: 0.5, picard_iters: 3, tol: 1e-7 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_t < 2 || self.n_x < 2 {
            return Err(Error::InvalidModel("n_t and n_x must be >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.theta_weight) {
            return Err(Error::InvalidModel(format!(
                "theta_weight must lie in [0, 1], got {}",
                self.theta_weight
            )));
        }
        if self.picard_iters == 0 {
            return Err(Error::InvalidModel("picard_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Exposure surface `v(t_i, x_j)` on the time grid `0 = t_0 < ... < t_nt = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSurface {
    pub times: Vec<f64>,
    pub grid: SpaceGrid,
    /// Time-major: `v[i][j] = v(t_i, x_j)`.
    pub v: Vec<Vec<f64>>,
    /// Worst last-pass Picard residual over all steps.
    pub max_picard_residual: f64,
}

impl ValueSurface {
    pub fn n_t(&self) -> usize {
        self.times.len() - 1
    }

    /// Bilinear interpolation; `x` clamps to the grid, `t` to `[0, T]`.
    /// The flag reports whether `x` needed clamping.
    pub fn value_at(&self, t: f64, x: f64) -> (f64, bool) {
        interp_surface(&self.times, &self.grid, &self.v, t, x)
    }

    /// Long-format CSV `t,x,v`, time-major.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,v")?;
        for (i, t) in self.times.iter().enumerate() {
            for j in 0..=self.grid.n_x {
                writeln!(w, "{t:.10},{:.10},{:.12e}", self.grid.node(j), self.v[i][j])?;
            }
        }
        Ok(())
    }
}

/// Allocation surface `pi(t_i, x_j)`, in `[0, 1/l_woc)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySurface {
    pub times: Vec<f64>,
    pub grid: SpaceGrid,
    pub pi: Vec<Vec<f64>>,
}

impl PolicySurface {
    /// Bilinear interpolation with clamp reporting, as for exposures.
    pub fn eval(&self, t: f64, x: f64) -> (f64, bool) {
        interp_surface(&self.times, &self.grid, &self.pi, t, x)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,v")?;
        for (i, t) in self.times.iter().enumerate() {
            for j in 0..=self.grid.n_x {
                writeln!(w, "{t:.10},{:.10},{:.12e}", self.grid.node(j), self.pi[i][j])?;
            }
        }
        Ok(())
    }
}

/// Elementwise exposure-to-allocation transform of a surface.
pub fn policy_surface(vs: &ValueSurface, l_woc: f64) -> PolicySurface {
    PolicySurface {
        times: vs.times.clone(),
        grid: vs.grid,
        pi: vs
            .v
            .iter()
            .map(|row| row.iter().map(|&y| exposure_to_strategy(y, l_woc)).collect())
            .collect(),
    }
}

/// Central-difference `∂v/∂x` (one-sided at the edges): the diffusion
/// loading of the exposure process along a factor path.
pub fn dx_surface(vs: &ValueSurface) -> Vec<Vec<f64>> {
    let n_x = vs.grid.n_x;
    let dx = vs.grid.dx();
    vs.v.iter()
        .map(|row| {
            (0..=n_x)
                .map(|j| {
                    if j == 0 {
                        (row[1] - row[0]) / dx
                    } else if j == n_x {
                        (row[n_x] - row[n_x - 1]) / dx
                    } else {
                        (row[j + 1] - row[j - 1]) / (2.0 * dx)
                    }
                })
                .collect()
        })
        .collect()
}

fn interp_surface(
    times: &[f64],
    grid: &SpaceGrid,
    data: &[Vec<f64>],
    t: f64,
    x: f64,
) -> (f64, bool) {
    let t_max = *times.last().expect("nonempty time grid");
    let tc = t.clamp(0.0, t_max);
    let xc = x.clamp(grid.x_min, grid.x_max);
    let clamped = (x - xc).abs() > 0.0;

    let n_t = times.len() - 1;
    let dt = t_max / n_t as f64;
    let fi = (tc / dt).min(n_t as f64);
    let i0 = (fi.floor() as usize).min(n_t - 1);
    let wt = (fi - i0 as f64).clamp(0.0, 1.0);

    let dx = grid.dx();
    let fj = ((xc - grid.x_min) / dx).min(grid.n_x as f64);
    let j0 = (fj.floor() as usize).min(grid.n_x - 1);
    let wx = (fj - j0 as f64).clamp(0.0, 1.0);

    let v00 = data[i0][j0];
    let v01 = data[i0][j0 + 1];
    let v10 = data[i0 + 1][j0];
    let v11 = data[i0 + 1][j0 + 1];
    let val = (1.0 - wt) * ((1.0 - wx) * v00 + wx * v01) + wt * ((1.0 - wx) * v10 + wx * v11);
    (val, clamped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn toy_surface() -> ValueSurface {
        let grid = SpaceGrid::new(0.0, 1.0, 2).unwrap();
        ValueSurface {
            times: vec![0.0, 0.5, 1.0],
            grid,
            // v(t, x) = x at every time level
            v: vec![vec![0.0, 0.5, 1.0]; 3],
            max_picard_residual: 0.0,
        }
    }

    #[test]
    fn interpolation_identities() {
        let s = toy_surface();
        // exact node query
        assert_eq!(s.value_at(0.5, 0.5), (0.5, false));
        // midpoint of a bilinear patch is the average of its corners
        let (v, clamped) = s.value_at(0.25, 0.25);
        assert_abs_diff_eq!(v, 0.25, epsilon = 1e-15);
        assert!(!clamped);
        // out-of-range x returns the edge value and reports the clamp
        let (v, clamped) = s.value_at(0.1, 2.0);
        assert_eq!(v, 1.0);
        assert!(clamped);
    }

    #[test]
    fn dx_surface_ramps() {
        let s = toy_surface();
        for row in dx_surface(&s) {
            for d in row {
                assert_abs_diff_eq!(d, 1.0, epsilon = 1e-12);
            }
        }
        let mut flat = toy_surface();
        flat.v = vec![vec![3.0; 3]; 3];
        for row in dx_surface(&flat) {
            for d in row {
                assert_eq!(d, 0.0);
            }
        }
        // quadratic: interior node error O(dx²) (exact for a parabola)
        let grid = SpaceGrid::new(0.0, 1.0, 10).unwrap();
        let quad = ValueSurface {
            times: vec![0.0, 1.0],
            grid,
            v: vec![(0..=10).map(|j| grid.node(j) * grid.node(j)).collect(); 2],
            max_picard_residual: 0.0,
        };
        let d = dx_surface(&quad);
        for j in 1..10 {
            assert_abs_diff_eq!(d[0][j], 2.0 * grid.node(j), epsilon = 1e-12);
        }
    }

    #[test]
    fn policy_transform_monotone_and_bounded() {
        let mut s = toy_surface();
        s.v = vec![vec![0.0, 1.0, 30.0]; 3];
        let p = policy_surface(&s, 0.5);
        assert_eq!(p.pi[0][0], 0.0);
        assert!(p.pi[0][1] < p.pi[0][2]);
        assert!(p.pi[0][2] < 2.0);
    }

    #[test]
    fn default_grids() {
        let a = crate::presets::preset(crate::presets::PresetId::A);
        let g = SpaceGrid::default_for(&a, 200).unwrap();
        assert_eq!(g.x_min, 0.0);
        assert_abs_diff_eq!(g.x_max, 0.12, epsilon = 1e-12);
        let ko = crate::presets::preset(crate::presets::PresetId::Ko);
        let g = SpaceGrid::default_for(&ko, 200).unwrap();
        assert!(g.x_min < 0.014 && 0.014 < g.x_max);
    }
}
