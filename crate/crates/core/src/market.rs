//! Model specification and the core pre-crash quantities.
//!
//! A [`ModelSpec`] bundles the factor dynamics, the coefficient maps
//! `x -> σ²(x)` and `x -> λ(x)`, the crash sizes, the jump measure and the
//! horizon. On top of it live:
//!
//! - the growth rate `Phi(x, y) = r + λ(x) y - σ²(x) y²/2 + log_moment(y)`,
//! - the backward-equation generator
//!   `f(x, y) = [Phi(x, π^M(x)) - r] - [Phi(x, p(y)) - r]` with
//!   `p(y) = (1 - exp(-(y v 0))) / l_woc` — the riskless rate cancels, so
//!   it never enters the solver,
//! - the exposure/strategy transforms `y <-> pi`,
//! - report-only assumption checks (Feller index, exponential-moment
//!   threshold, crash-size ordering).

use crate::error::{Error, Result};
use crate::jump::JumpMeasure;
use crate::post_crash;

/// Crash sizes: the substantial worst-case crash and the largest ordinary
/// jump, with `0 < l_levy_max < l_woc < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrashSpec {
    pub l_woc: f64,
    pub l_levy_max: f64,
}

impl CrashSpec {
    pub fn new(l_woc: f64, l_levy_max: f64) -> Result<Self> {
        let s = CrashSpec { l_woc, l_levy_max };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.l_levy_max && self.l_levy_max < self.l_woc && self.l_woc < 1.0) {
            return Err(Error::InvalidModel(format!(
                "crash sizes must satisfy 0 < l_levy_max < l_woc < 1, got l_levy_max={}, l_woc={}",
                self.l_levy_max, self.l_woc
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    /// Square-root diffusion `dz = κ(θ - z) dt + ς √z dW`.
    Cir,
    /// Ornstein-Uhlenbeck `dz = κ(θ - z) dt + ς dW`.
    Ou,
    /// Factor pinned at `z0` (constant-coefficient reference models).
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorDynamics {
    pub kind: FactorKind,
    pub kappa: f64,
    pub theta: f64,
    pub varsigma: f64,
    pub z0: f64,
}

impl FactorDynamics {
    pub fn cir(kappa: f64, theta: f64, varsigma: f64, z0: f64) -> Result<Self> {
        let d = FactorDynamics { kind: FactorKind::Cir, kappa, theta, varsigma, z0 };
        d.validate()?;
        Ok(d)
    }

    pub fn ou(kappa: f64, theta: f64, varsigma: f64, z0: f64) -> Result<Self> {
        let d = FactorDynamics { kind: FactorKind::Ou, kappa, theta, varsigma, z0 };
        d.validate()?;
        Ok(d)
    }

    pub fn frozen(z0: f64) -> Self {
        FactorDynamics { kind: FactorKind::Frozen, kappa: 0.0, theta: z0, varsigma: 0.0, z0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            FactorKind::Frozen => Ok(()),
            FactorKind::Cir => {
                if !(self.kappa > 0.0) {
                    Err(Error::InvalidModel("kappa must be > 0".into()))
                } else if !(self.theta > 0.0) {
                    Err(Error::InvalidModel("theta must be > 0".into()))
                } else if !(self.varsigma > 0.0) {
                    Err(Error::InvalidModel("varsigma must be > 0".into()))
                } else if !(self.z0 >= 0.0) {
                    Err(Error::InvalidModel("z0 must be >= 0 for the CIR factor".into()))
                } else {
                    Ok(())
                }
            }
            FactorKind::Ou => {
                if !(self.kappa > 0.0) {
                    Err(Error::InvalidModel("kappa must be > 0".into()))
                } else if !(self.varsigma > 0.0) {
                    Err(Error::InvalidModel("varsigma must be > 0".into()))
                } else if !self.z0.is_finite() || !self.theta.is_finite() {
                    Err(Error::InvalidModel("theta and z0 must be finite".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// `2κθ/ς²`; paths stay strictly positive when it exceeds 1.
    pub fn feller_index(&self) -> Option<f64> {
        match self.kind {
            FactorKind::Cir => Some(2.0 * self.kappa * self.theta / (self.varsigma * self.varsigma)),
            _ => None,
        }
    }

    /// Drift `μ(x)` of the factor SDE.
    pub fn mu(&self, x: f64) -> f64 {
        match self.kind {
            FactorKind::Frozen => 0.0,
            _ => self.kappa * (self.theta - x),
        }
    }

    /// Diffusion coefficient `ς(x)` of the factor SDE.
    pub fn varsigma_at(&self, x: f64) -> f64 {
        match self.kind {
            FactorKind::Cir => self.varsigma * x.max(0.0).sqrt(),
            FactorKind::Ou => self.varsigma,
            FactorKind::Frozen => 0.0,
        }
    }

    /// Standard deviation of the stationary law.
    pub fn stationary_sd(&self) -> f64 {
        match self.kind {
            FactorKind::Cir => self.varsigma * (self.theta / (2.0 * self.kappa)).sqrt(),
            FactorKind::Ou => self.varsigma / (2.0 * self.kappa).sqrt(),
            FactorKind::Frozen => 0.0,
        }
    }
}

/// Map `x -> σ²(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaSqMap {
    /// `σ²(x) = x` (square-root volatility factor).
    Identity,
    /// `σ²(x) = const`.
    Constant(f64),
}

impl SigmaSqMap {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            SigmaSqMap::Identity => x,
            SigmaSqMap::Constant(v) => v,
        }
    }
}

/// Map `x -> λ(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMap {
    /// `λ(x) = σ²(x) α + ∫ l/(1-αl) ϑ(dl)`: makes the post-crash optimal
    /// allocation identically `α`.
    Appropriate { alpha: f64 },
    Constant(f64),
    /// `λ(x) = x` (stochastic excess-return models).
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientMap {
    pub sigma_sq: SigmaSqMap,
    pub lambda: LambdaMap,
}

/// Full market model specification.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub factor: FactorDynamics,
    pub coeffs: CoefficientMap,
    pub crash: CrashSpec,
    pub measure: JumpMeasure,
    /// Riskless rate; constant, defaults to 0, cancels in the generator.
    pub r: f64,
    /// Correlation between the asset and factor Brownian motions.
    pub rho: f64,
    pub horizon: f64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        self.factor.validate()?;
        self.crash.validate()?;
        if let Some(l_max) = self.measure.l_max() {
            if (l_max - self.crash.l_levy_max).abs() > 1e-12 {
                return Err(Error::InvalidModel(format!(
                    "jump measure support {l_max} must equal l_levy_max {}",
                    self.crash.l_levy_max
                )));
            }
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidModel(format!("rho must lie in [-1, 1], got {}", self.rho)));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidModel(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if let SigmaSqMap::Constant(v) = self.coeffs.sigma_sq {
            if !(v > 0.0) {
                return Err(Error::InvalidModel(format!("constant sigma_sq must be > 0, got {v}")));
            }
        }
        if let LambdaMap::Appropriate { alpha } = self.coeffs.lambda {
            if !(alpha > 0.0) || alpha >= self.measure.allocation_cap() {
                return Err(Error::InvalidModel(format!(
                    "appropriate-lambda alpha must lie in (0, 1/l_max), got {alpha}"
                )));
            }
        }
        Ok(())
    }

    pub fn sigma_sq(&self, x: f64) -> f64 {
        self.coeffs.sigma_sq.eval(x)
    }

    pub fn lambda(&self, x: f64) -> f64 {
        match self.coeffs.lambda {
            LambdaMap::Constant(v) => v,
            LambdaMap::Identity => x,
            LambdaMap::Appropriate { alpha } => {
                // validated at construction; the hazard at alpha is finite
                self.sigma_sq(x) * alpha
                    + self.measure.hazard_moment(alpha).expect("validated alpha")
            }
        }
    }

    /// Growth rate `Phi(x, y) = r + λ(x) y - σ²(x) y²/2 + ∫ log(1-yl) ϑ(dl)`.
    pub fn phi(&self, x: f64, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Domain(format!("phi: allocation y must be >= 0, got {y}")));
        }
        let jump = self.measure.log_moment(y)?;
        Ok(self.r + self.lambda(x) * y - 0.5 * self.sigma_sq(x) * y * y + jump)
    }

    /// Post-crash optimal allocation `π^M(x) = psi(λ(x), σ²(x))`.
    ///
    /// Constant for appropriate-λ models by construction; degenerate
    /// `σ²(x) <= 0` propagates as a domain error.
    pub fn merton(&self, x: f64) -> Result<f64> {
        if let LambdaMap::Appropriate { alpha } = self.coeffs.lambda {
            return Ok(alpha);
        }
        Ok(post_crash::psi_numeric(self.lambda(x), self.sigma_sq(x), &self.measure)?.value)
    }

    /// `π^M` when it does not depend on the factor value.
    pub fn constant_merton(&self) -> Option<f64> {
        match (self.coeffs.lambda, self.coeffs.sigma_sq) {
            (LambdaMap::Appropriate { alpha }, _) => Some(alpha),
            (LambdaMap::Constant(l), SigmaSqMap::Constant(s)) => {
                post_crash::psi_numeric(l, s, &self.measure).ok().map(|r| r.value)
            }
            _ => None,
        }
    }

    /// Generator of the backward equation for the utility crash exposure:
    ///
    /// ```text
    /// f(x, y) = [Phi(x, π^M(x)) - r] - λ(x) p + σ²(x) p²/2 - ∫ log(1-pl) ϑ(dl)
    /// ```
    ///
    /// with `p = (1 - exp(-(y v 0))) / l_woc`. Nonnegative because `π^M`
    /// maximizes `Phi` and `p` stays inside the admissible range.
    pub fn generator(&self, x: f64, y: f64) -> Result<f64> {
        self.generator_with_floor(x, y, x)
    }

    /// [`ModelSpec::generator`] with the factor value floored at `x_floor`
    /// when computing `π^M` only. Grid solvers pass their first interior
    /// node so that models with unbounded `π^M` near a degenerate boundary
    /// (constant λ with σ²(x) = x) keep finite coefficients there.
    pub fn generator_with_floor(&self, x: f64, y: f64, x_floor: f64) -> Result<f64> {
        let x_m = x.max(x_floor);
        let merton = self.merton(x_m)?;
        let phi_m = self.phi_with_lambda_sigma(self.lambda(x), self.sigma_sq(x), merton)?;
        let p = exposure_to_strategy(y, self.crash.l_woc);
        let phi_p = self.phi_with_lambda_sigma(self.lambda(x), self.sigma_sq(x), p)?;
        Ok(phi_m - phi_p)
    }

    fn phi_with_lambda_sigma(&self, lambda: f64, sigma_sq: f64, y: f64) -> Result<f64> {
        // r excluded: the generator is the difference of two Phi values
        Ok(lambda * y - 0.5 * sigma_sq * y * y + self.measure.log_moment(y)?)
    }

    /// Report-only checks of the standing assumptions.
    pub fn check_conditions(&self) -> ConditionsReport {
        let feller_index = self.factor.feller_index();
        let exp_moment_threshold = match self.factor.kind {
            FactorKind::Frozen => None,
            _ => Some(2.0 * self.factor.kappa / (self.factor.varsigma * self.factor.varsigma)),
        };
        let admissible_cap = 1.0 / self.crash.l_woc;
        let preset_alpha = match self.coeffs.lambda {
            LambdaMap::Appropriate { alpha } => Some(alpha),
            _ => None,
        };
        ConditionsReport {
            feller_index,
            exp_moment_threshold,
            admissible_cap,
            alpha_exceeds_cap: preset_alpha.map(|a| a > admissible_cap),
            levy_below_woc: self.crash.l_levy_max < self.crash.l_woc,
            infinite_activity: self.measure.infinite_activity(),
        }
    }

    /// Constant-coefficient copy with the factor pinned at `x0`.
    pub fn frozen_at(&self, x0: f64) -> ModelSpec {
        let mut m = self.clone();
        m.coeffs = CoefficientMap {
            sigma_sq: SigmaSqMap::Constant(self.sigma_sq(x0)),
            lambda: LambdaMap::Constant(self.lambda(x0)),
        };
        m.factor = FactorDynamics::frozen(x0);
        m
    }
}

/// Diagnostic summary of the model assumptions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionsReport {
    /// `2κθ/ς²` for the CIR factor.
    pub feller_index: Option<f64>,
    /// Exponential moments `E[exp(ε z_t)]` stay finite for `ε` below `2κ/ς²`.
    pub exp_moment_threshold: Option<f64>,
    /// Pre-crash admissibility cap `1/l_woc`.
    pub admissible_cap: f64,
    /// Whether a preset target allocation exceeds the cap.
    pub alpha_exceeds_cap: Option<bool>,
    /// `l_levy_max < l_woc` ordering.
    pub levy_below_woc: bool,
    pub infinite_activity: bool,
}

/// Allocation from exposure: `pi = (1 - exp(-(y v 0))) / l_woc`.
///
/// Maps all of `R` into `[0, 1/l_woc)`, monotone, zero for `y <= 0`.
/// The cap itself is kept strictly unattained even where rounding would
/// otherwise saturate the exponential.
pub fn exposure_to_strategy(y: f64, l_woc: f64) -> f64 {
    ((-(-y.max(0.0)).exp_m1()) / l_woc).min((1.0 - f64::EPSILON) / l_woc)
}

/// Exposure from allocation: `y = -log(1 - pi l_woc)`, the inverse of
/// [`exposure_to_strategy`] on `[0, inf)`.
pub fn strategy_to_exposure(pi: f64, l_woc: f64) -> Result<f64> {
    if !(0.0..).contains(&pi) || pi * l_woc >= 1.0 {
        return Err(Error::Domain(format!(
            "strategy_to_exposure: pi must lie in [0, 1/l_woc), got {pi}"
        )));
    }
    Ok(-(-pi * l_woc).ln_1p())
}
