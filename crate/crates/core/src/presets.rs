//! Built-in model parameterizations.
//!
//! Five models share the crash sizes `l_woc = 0.5`, `l_levy_max = 0.2`,
//! the horizon `T = 5` and a factor started at its mean-reversion level:
//!
//! | id | factor                         | σ²(x) | λ(x)                    | jumps            |
//! |----|--------------------------------|-------|-------------------------|------------------|
//! | a  | CIR κ=3.99, θ=0.014, ς=0.27    | x     | appropriate, α=2.5      | reciprocal, 0.2  |
//! | b  | same CIR                       | x     | appropriate, α=2.5      | atom at 0.2      |
//! | c  | same CIR                       | x     | 2.5·x                   | none             |
//! | d  | same CIR                       | x     | constant 0.035          | none             |
//! | ko | OU κ=3.5, θ=0.014, ς=0.3       | 0.014 | x                       | none             |
//!
//! The appropriate λ makes the post-crash optimal allocation identically
//! 2.5; for the atom measure it is `λ(z) = 2.5 z + q/(1 - 2.5 q)` (the
//! sign of the loading follows from the first-order condition
//! `∂Phi(α) = 0`), and for the reciprocal measure
//! `λ(z) = 2.5 z - log(1 - 2.5 l_max)/2.5`.

use crate::error::{Error, Result};
use crate::jump::JumpMeasure;
use crate::market::{
    CoefficientMap, CrashSpec, FactorDynamics, LambdaMap, ModelSpec, SigmaSqMap,
};

pub const ALPHA: f64 = 2.5;
pub const L_WOC: f64 = 0.5;
pub const L_LEVY_MAX: f64 = 0.2;
pub const HORIZON: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetId {
    A,
    B,
    C,
    D,
    Ko,
}

impl PresetId {
    pub const ALL: [PresetId; 5] = [PresetId::A, PresetId::B, PresetId::C, PresetId::D, PresetId::Ko];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(PresetId::A),
            "b" => Ok(PresetId::B),
            "c" => Ok(PresetId::C),
            "d" => Ok(PresetId::D),
            "ko" => Ok(PresetId::Ko),
            other => Err(Error::InvalidModel(format!(
                "unknown model preset '{other}' (expected a, b, c, d or ko)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PresetId::A => "a",
            PresetId::B => "b",
            PresetId::C => "c",
            PresetId::D => "d",
            PresetId::Ko => "ko",
        }
    }
}

impl std::fmt::Display for PresetId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn cir_factor() -> FactorDynamics {
    FactorDynamics::cir(3.99, 0.014, 0.27, 0.014).expect("valid CIR parameters")
}

pub fn preset(id: PresetId) -> ModelSpec {
    let crash = CrashSpec { l_woc: L_WOC, l_levy_max: L_LEVY_MAX };
    let spec = match id {
        PresetId::A => ModelSpec {
            factor: cir_factor(),
            coeffs: CoefficientMap {
                sigma_sq: SigmaSqMap::Identity,
                lambda: LambdaMap::Appropriate { alpha: ALPHA },
            },
            crash,
            measure: JumpMeasure::reciprocal(L_LEVY_MAX).expect("valid measure"),
            r: 0.0,
            rho: 0.0,
            horizon: HORIZON,
        },
        PresetId::B => ModelSpec {
            factor: cir_factor(),
            coeffs: CoefficientMap {
                sigma_sq: SigmaSqMap::Identity,
                lambda: LambdaMap::Appropriate { alpha: ALPHA },
            },
            crash,
            measure: JumpMeasure::atom(L_LEVY_MAX).expect("valid measure"),
            r: 0.0,
            rho: 0.0,
            horizon: HORIZON,
        },
        PresetId::C => ModelSpec {
            factor: cir_factor(),
            coeffs: CoefficientMap {
                sigma_sq: SigmaSqMap::Identity,
                lambda: LambdaMap::Appropriate { alpha: ALPHA },
            },
            crash,
            measure: JumpMeasure::none(),
            r: 0.0,
            rho: 0.0,
            horizon: HORIZON,
        },
        PresetId::D => ModelSpec {
            factor: cir_factor(),
            coeffs: CoefficientMap {
                sigma_sq: SigmaSqMap::Identity,
                lambda: LambdaMap::Constant(ALPHA * 0.014),
            },
            crash,
            measure: JumpMeasure::none(),
            r: 0.0,
            rho: 0.0,
            horizon: HORIZON,
        },
        PresetId::Ko => ModelSpec {
            factor: FactorDynamics::ou(3.5, 0.014, 0.3, 0.014).expect("valid OU parameters"),
            coeffs: CoefficientMap {
                sigma_sq: SigmaSqMap::Constant(0.014),
                lambda: LambdaMap::Identity,
            },
            crash,
            measure: JumpMeasure::none(),
            r: 0.0,
            rho: 0.0,
            horizon: HORIZON,
        },
    };
    debug_assert!(spec.validate().is_ok());
    spec
}
