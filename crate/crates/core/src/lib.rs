//! Worst-case (crash-robust) optimal investment for a log-utility investor
//! facing stochastic market coefficients.
//!
//! The investor maximizes worst-case log wealth against an adversarially
//! timed crash of fixed relative size `l_woc`, in a market whose excess
//! return and volatility are driven by a one-dimensional factor (CIR or
//! Ornstein-Uhlenbeck) and whose asset may additionally carry small Lévy
//! jumps. The crash-indifferent strategy is characterized through the
//! utility crash exposure `v(t, x)`, the solution of a semilinear backward
//! PDE with terminal value zero; the optimal allocation is recovered as
//! `pi = (1 - exp(-(v v 0))) / l_woc`.
//!
//! Module map:
//! - [`jump`]: jump-measure integrals (log moment, hazard moment) and the
//!   dilogarithm they need in closed form.
//! - [`post_crash`]: the post-crash optimal (Merton-type) allocation `psi`
//!   and appropriate market-price-of-risk construction.
//! - [`market`]: model specification, the growth-rate function `Phi`, the
//!   PDE generator, exposure/strategy transforms, assumption checks.
//! - [`presets`]: the five built-in model parameterizations.
//! - [`factor`]: exact-in-distribution simulation of the factor process.
//! - [`solver`]: backward ODE/PDE solvers for the exposure surface.
//! - [`verify`]: Monte-Carlo and oracle checks of the defining properties.
//! - [`cli`]: command-line front end (config, subcommands, CSV/SVG output).

pub mod cli;
pub mod error;
pub mod factor;
pub mod jump;
pub mod market;
pub mod post_crash;
pub mod presets;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use jump::{dilog, JumpMeasure};
pub use market::{
    exposure_to_strategy, strategy_to_exposure, CoefficientMap, ConditionsReport, CrashSpec,
    FactorDynamics, FactorKind, LambdaMap, ModelSpec, SigmaSqMap,
};
pub use post_crash::{appropriate_lambda, merton_no_jump, psi_closed_atom, psi_numeric, PsiResult};
