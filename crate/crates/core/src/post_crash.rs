//! Post-crash optimal (Merton-type) allocation.
//!
//! Once the threat of the substantial crash is gone, the optimal
//! allocation maximizes the instantaneous growth rate
//!
//! ```text
//! Phi(y) = r + λ y - σ²/2 y² + ∫ log(1 - y l) ϑ(dl)
//! ```
//!
//! over admissible `y`. `Phi` is strictly concave, so the maximizer
//! `psi(λ, σ²)` is unique: interior where `∂Phi = 0`, zero when the
//! derivative already starts nonpositive, and at the cap `1/l_max` only
//! when the hazard integral stays finite there (an atom strictly inside
//! its support). Without jumps this reduces to `max(λ/σ², 0)`.

use crate::error::{Error, Result};
use crate::jump::JumpMeasure;

/// Where the maximizer of `Phi` sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCase {
    Interior,
    AtZero,
    AtCap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiResult {
    pub value: f64,
    pub boundary_case: BoundaryCase,
}

const DERIV_TOL: f64 = 1e-12;
const MAX_BISECT: usize = 200;

fn check_sigma_sq(sigma_sq: f64) -> Result<()> {
    if !(sigma_sq > 0.0) || !sigma_sq.is_finite() {
        return Err(Error::Domain(format!("sigma_sq must be > 0, got {sigma_sq}")));
    }
    Ok(())
}

/// Classical Merton allocation `max(λ/σ², 0)` for the jump-free model.
pub fn merton_no_jump(lambda: f64, sigma_sq: f64) -> Result<f64> {
    check_sigma_sq(sigma_sq)?;
    Ok((lambda / sigma_sq).max(0.0))
}

/// Closed-form maximizer for the point measure `δ_L`, clamped to `[0, 1/L]`.
///
/// Root of `λ - σ² y - L/(1 - y L) = 0` picked by the quadratic formula:
///
/// ```text
/// psi = (λ L + σ² - sqrt(L²(λ² + 4σ²) - 2 L λ σ² + σ⁴)) / (2 L σ²)
/// ```
pub fn psi_closed_atom(lambda: f64, sigma_sq: f64, l: f64) -> Result<f64> {
    check_sigma_sq(sigma_sq)?;
    if !(l > 0.0 && l < 1.0) {
        return Err(Error::Domain(format!("atom size must lie in (0, 1), got {l}")));
    }
    let disc = l * l * (lambda * lambda + 4.0 * sigma_sq) - 2.0 * l * lambda * sigma_sq
        + sigma_sq * sigma_sq;
    let root = (lambda * l + sigma_sq - disc.sqrt()) / (2.0 * l * sigma_sq);
    Ok(root.clamp(0.0, 1.0 / l))
}

/// Maximizer of `Phi` for an arbitrary supported measure.
///
/// Delegates to [`merton_no_jump`] without jumps; otherwise classifies the
/// boundary cases from `∂Phi` and bisects the strictly decreasing
/// derivative down to `|∂Phi| <= 1e-12` (at most 200 iterations — the
/// bracket is monotone, so this cannot fail to tighten).
pub fn psi_numeric(lambda: f64, sigma_sq: f64, m: &JumpMeasure) -> Result<PsiResult> {
    check_sigma_sq(sigma_sq)?;
    if m.is_none() {
        let value = merton_no_jump(lambda, sigma_sq)?;
        let case = if value > 0.0 { BoundaryCase::Interior } else { BoundaryCase::AtZero };
        return Ok(PsiResult { value, boundary_case: case });
    }
    let cap = m.allocation_cap();
    let deriv = |y: f64| -> Result<f64> { Ok(lambda - sigma_sq * y - m.hazard_moment(y)?) };

    if deriv(0.0)? <= 0.0 {
        return Ok(PsiResult { value: 0.0, boundary_case: BoundaryCase::AtZero });
    }
    // The cap is only reachable when the hazard integral is finite there,
    // i.e. for an atom strictly inside its support. The paper-style choice
    // q = l_max has a pole at the cap, making the maximum interior.
    if m.hazard_moment(cap).is_ok() && deriv(cap)? >= 0.0 {
        return Ok(PsiResult { value: cap, boundary_case: BoundaryCase::AtCap });
    }

    // bracket: walk toward the cap until the derivative turns negative.
    // y_lim keeps the integrals strictly inside their domain; if even
    // there the derivative is positive, the pole sits closer to the cap
    // than f64 can resolve and y_lim is the best representable answer.
    let y_lim = cap * (1.0 - 1e-12);
    let mut lo = 0.0;
    let mut hi = y_lim;
    let mut bracketed = false;
    for k in 1..=60 {
        let y = (cap * (1.0 - 0.5f64.powi(k))).min(y_lim);
        if deriv(y)? < 0.0 {
            hi = y;
            bracketed = true;
            break;
        }
        lo = y;
        if y >= y_lim {
            break;
        }
    }
    if !bracketed && deriv(y_lim)? >= 0.0 {
        return Ok(PsiResult { value: y_lim, boundary_case: BoundaryCase::Interior });
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECT {
        mid = 0.5 * (lo + hi);
        let d = deriv(mid)?;
        if d.abs() <= DERIV_TOL {
            return Ok(PsiResult { value: mid, boundary_case: BoundaryCase::Interior });
        }
        if d > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(PsiResult { value: mid, boundary_case: BoundaryCase::Interior })
}

/// Market price of risk that makes `psi` equal a prescribed `alpha`:
///
/// ```text
/// λ = σ² α + ∫ l / (1 - α l) ϑ(dl)
/// ```
///
/// (the volatility-linear price plus a safety loading for the jump term).
pub fn appropriate_lambda(alpha: f64, sigma_sq: f64, m: &JumpMeasure) -> Result<f64> {
    if !(alpha > 0.0) || alpha >= m.allocation_cap() {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1/l_max), got {alpha} with cap {}",
            m.allocation_cap()
        )));
    }
    Ok(sigma_sq * alpha + m.hazard_moment(alpha)?)
}
