//! Jump-measure integrals.
//!
//! The asset may jump downward by relative sizes `l` in `(0, l_max]`,
//! governed by a Lévy measure. Three families are supported:
//!
//! - `None`: no jumps,
//! - `Atom { q }`: unit-mass point measure at `q` (constant jump size),
//! - `Reciprocal { l_max }`: density `dl / l` on `(0, l_max]` (infinite
//!   activity, finite mean).
//!
//! Two integrals of the measure enter the growth rate and its derivative:
//!
//! ```text
//! log_moment(y)    = ∫ log(1 - y l) ϑ(dl)
//! hazard_moment(y) = ∫ l / (1 - y l) ϑ(dl)
//! ```
//!
//! with `d/dy log_moment(y) = -hazard_moment(y)`. For the reciprocal
//! density the log moment is `-Li2(y·l_max)`, hence the dilogarithm here.

use crate::error::{Error, Result};

/// A Lévy measure for ordinary (non-crash) downward jumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpMeasure {
    /// No jump component (purely Brownian asset).
    None,
    /// Point mass `δ_q` with support bound `l_max >= q`.
    Atom { q: f64, l_max: f64 },
    /// Density `dl / l` on `(0, l_max]`.
    Reciprocal { l_max: f64 },
}

impl JumpMeasure {
    pub fn none() -> Self {
        JumpMeasure::None
    }

    /// Point mass at `q`, with the support bound equal to the jump size.
    pub fn atom(q: f64) -> Result<Self> {
        Self::atom_in(q, q)
    }

    /// Point mass at `q` inside a larger support `[0, l_max]`.
    ///
    /// With `q < l_max` the integrals stay finite up to `y = 1/l_max`,
    /// which is the one case where the allocation cap is attainable.
    pub fn atom_in(q: f64, l_max: f64) -> Result<Self> {
        if !(q > 0.0 && q <= l_max && l_max < 1.0) {
            return Err(Error::InvalidModel(format!(
                "atom measure requires 0 < q <= l_max < 1, got q={q}, l_max={l_max}"
            )));
        }
        Ok(JumpMeasure::Atom { q, l_max })
    }

    pub fn reciprocal(l_max: f64) -> Result<Self> {
        if !(l_max > 0.0 && l_max < 1.0) {
            return Err(Error::InvalidModel(format!(
                "reciprocal measure requires 0 < l_max < 1, got l_max={l_max}"
            )));
        }
        Ok(JumpMeasure::Reciprocal { l_max })
    }

    /// Upper bound of the jump support; `None` for the empty measure.
    pub fn l_max(&self) -> Option<f64> {
        match *self {
            JumpMeasure::None => None,
            JumpMeasure::Atom { l_max, .. } | JumpMeasure::Reciprocal { l_max } => Some(l_max),
        }
    }

    /// Total mass is infinite (only the reciprocal density).
    pub fn infinite_activity(&self) -> bool {
        matches!(self, JumpMeasure::Reciprocal { .. })
    }

    pub fn is_none(&self) -> bool {
        matches!(self, JumpMeasure::None)
    }

    /// Largest admissible allocation `1/l_max` (`+inf` without jumps).
    pub fn allocation_cap(&self) -> f64 {
        self.l_max().map_or(f64::INFINITY, |l| 1.0 / l)
    }

    fn check_y(&self, y: f64, op: &str) -> Result<()> {
        if !y.is_finite() || y < 0.0 {
            return Err(Error::Domain(format!("{op}: y must be finite and >= 0, got {y}")));
        }
        Ok(())
    }

    /// `∫ log(1 - y l) ϑ(dl)` for `y ∈ [0, 1/l_max)`.
    ///
    /// `y = 1/l_max` is accepted only where the limit is finite (empty
    /// measure, or an atom strictly inside its support).
    pub fn log_moment(&self, y: f64) -> Result<f64> {
        self.check_y(y, "log_moment")?;
        match *self {
            JumpMeasure::None => Ok(0.0),
            JumpMeasure::Atom { q, l_max } => {
                if y * l_max > 1.0 || y * q >= 1.0 {
                    return Err(Error::Domain(format!(
                        "log_moment: y={y} at or beyond the divergence point of the atom measure"
                    )));
                }
                Ok((-y * q).ln_1p())
            }
            JumpMeasure::Reciprocal { l_max } => {
                if y * l_max >= 1.0 {
                    return Err(Error::Domain(format!(
                        "log_moment: y={y} reaches the reciprocal-measure bound 1/l_max"
                    )));
                }
                Ok(-dilog(y * l_max)?)
            }
        }
    }

    /// `∫ l / (1 - y l) ϑ(dl)` for `y ∈ [0, 1/l_max)`.
    pub fn hazard_moment(&self, y: f64) -> Result<f64> {
        self.check_y(y, "hazard_moment")?;
        match *self {
            JumpMeasure::None => Ok(0.0),
            JumpMeasure::Atom { q, l_max } => {
                if y * l_max > 1.0 || y * q >= 1.0 {
                    return Err(Error::Domain(format!(
                        "hazard_moment: y={y} at or beyond the pole of the atom measure"
                    )));
                }
                Ok(q / (1.0 - y * q))
            }
            JumpMeasure::Reciprocal { l_max } => {
                if y * l_max >= 1.0 {
                    return Err(Error::Domain(format!(
                        "hazard_moment: y={y} at or beyond the pole of the reciprocal measure"
                    )));
                }
                if y == 0.0 {
                    // analytic y -> 0 limit of -log(1 - y l_max) / y
                    Ok(l_max)
                } else {
                    Ok(-(-y * l_max).ln_1p() / y)
                }
            }
        }
    }

    /// `∫ l ϑ(dl)`, the mean jump size (finite for all three families).
    pub fn mean_jump(&self) -> f64 {
        match *self {
            JumpMeasure::None => 0.0,
            JumpMeasure::Atom { q, .. } => q,
            JumpMeasure::Reciprocal { l_max } => l_max,
        }
    }
}

/// Dilogarithm `Li2(x) = Σ_{k>=1} x^k / k²` on `[0, 1]`.
///
/// Series for `x <= 1/2`, Euler reflection
/// `Li2(x) + Li2(1-x) = π²/6 - ln(x) ln(1-x)` above; absolute accuracy
/// better than 1e-10 over the whole interval.
pub fn dilog(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("dilog: x must lie in [0, 1], got {x}")));
    }
    const PI2_6: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(PI2_6);
    }
    if x <= 0.5 {
        Ok(dilog_series(x))
    } else {
        Ok(PI2_6 - x.ln() * (1.0 - x).ln() - dilog_series(1.0 - x))
    }
}

fn dilog_series(x: f64) -> f64 {
    debug_assert!((0.0..=0.5).contains(&x));
    let mut sum = 0.0;
    let mut pow = x;
    let mut k = 1u32;
    loop {
        let term = pow / ((k as f64) * (k as f64));
        sum += term;
        if term < 1e-18 * sum.max(1e-300) || k > 200 {
            break;
        }
        pow *= x;
        k += 1;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Adaptive Simpson quadrature, used as the independent oracle for the
    /// closed-form jump integrals. Recursion splits until the classic
    /// Richardson estimate meets `tol`.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth > 50 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, left, tol / 2.0, depth + 1) + rec(f, m, b, right, tol / 2.0, depth + 1)
            }
        }
        rec(f, a, b, simpson(f, a, b), tol, 0)
    }

    /// Quadrature oracle for the reciprocal-measure log moment. The
    /// integrand log(1 - y l)/l is bounded near l = 0 (limit -y), so a
    /// small left offset with a series patch suffices.
    fn log_moment_oracle(l_max: f64, y: f64) -> f64 {
        let eps = 1e-9;
        // on [0, eps): log(1 - y l)/l = -y - y^2 l/2 + O(l^2)
        let head = -y * eps - y * y * eps * eps / 4.0;
        let f = |l: f64| (-y * l).ln_1p() / l;
        head + adaptive_simpson(&f, eps, l_max, 1e-12)
    }

    fn hazard_oracle(l_max: f64, y: f64) -> f64 {
        adaptive_simpson(&|l: f64| 1.0 / (1.0 - y * l), 0.0, l_max, 1e-12)
    }

    #[test]
    fn dilog_endpoints_and_half() {
        // series summation oracle at x = 1: sum_{k<=2e6} 1/k^2 plus the
        // integral tail bound 1/k; agrees with pi^2/6 to ~5e-13
        let mut s = 0.0;
        for k in (1..=2_000_000u64).rev() {
            s += 1.0 / ((k * k) as f64);
        }
        s += 1.0 / 2_000_000.5;
        assert_abs_diff_eq!(dilog(1.0).unwrap(), s, epsilon = 1e-10);
        assert_abs_diff_eq!(
            dilog(1.0).unwrap(),
            std::f64::consts::PI * std::f64::consts::PI / 6.0,
            epsilon = 1e-12
        );
        assert_eq!(dilog(0.0).unwrap(), 0.0);
        // closed form pi^2/12 - ln(2)^2/2
        let half = std::f64::consts::PI * std::f64::consts::PI / 12.0
            - 0.5 * std::f64::consts::LN_2 * std::f64::consts::LN_2;
        assert_abs_diff_eq!(dilog(0.5).unwrap(), half, epsilon = 1e-13);
        assert_abs_diff_eq!(dilog(0.5).unwrap(), 0.5822405264650125, epsilon = 1e-10);
        assert!(dilog(-0.1).is_err());
        assert!(dilog(1.1).is_err());
    }

    #[test]
    fn log_moment_per_family() {
        let none = JumpMeasure::none();
        assert_eq!(none.log_moment(2.5).unwrap(), 0.0);

        let atom = JumpMeasure::atom(0.2).unwrap();
        assert_abs_diff_eq!(atom.log_moment(2.5).unwrap(), 0.5f64.ln(), epsilon = 1e-15);

        // frozen from the quadrature oracle below (= -Li2(0.5))
        let recip = JumpMeasure::reciprocal(0.2).unwrap();
        assert_abs_diff_eq!(recip.log_moment(2.5).unwrap(), -0.5822405264650125, epsilon = 1e-10);
        assert_abs_diff_eq!(
            recip.log_moment(2.5).unwrap(),
            log_moment_oracle(0.2, 2.5),
            epsilon = 1e-8
        );
    }

    #[test]
    fn hazard_moment_per_family() {
        assert_eq!(JumpMeasure::none().hazard_moment(1.0).unwrap(), 0.0);
        let atom = JumpMeasure::atom(0.2).unwrap();
        assert_abs_diff_eq!(atom.hazard_moment(2.5).unwrap(), 0.4, epsilon = 1e-15);
        let recip = JumpMeasure::reciprocal(0.2).unwrap();
        // -log(0.5)/2.5, and the quadrature oracle
        assert_abs_diff_eq!(recip.hazard_moment(2.5).unwrap(), 0.2772588722239781, epsilon = 1e-12);
        assert_abs_diff_eq!(recip.hazard_moment(2.5).unwrap(), hazard_oracle(0.2, 2.5), epsilon = 1e-10);
        // y -> 0 limit is l_max
        assert_abs_diff_eq!(recip.hazard_moment(0.0).unwrap(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(recip.hazard_moment(1e-14).unwrap(), 0.2, epsilon = 1e-10);
    }

    #[test]
    fn mean_jump_per_family() {
        assert_eq!(JumpMeasure::none().mean_jump(), 0.0);
        assert_eq!(JumpMeasure::atom(0.2).unwrap().mean_jump(), 0.2);
        // direct integration: ∫_0^0.2 (l/l) dl = 0.2
        let recip = JumpMeasure::reciprocal(0.2).unwrap();
        assert_abs_diff_eq!(recip.mean_jump(), adaptive_simpson(&|_| 1.0, 0.0, 0.2, 1e-14), epsilon = 1e-12);
    }

    #[test]
    fn domain_errors() {
        let atom = JumpMeasure::atom(0.2).unwrap();
        assert!(atom.log_moment(5.0).is_err()); // y q = 1 diverges
        assert!(atom.hazard_moment(5.0).is_err());
        assert!(atom.log_moment(-0.1).is_err());
        let recip = JumpMeasure::reciprocal(0.2).unwrap();
        assert!(recip.log_moment(5.0).is_err());
        assert!(recip.hazard_moment(5.0).is_err());
        // atom strictly inside its support stays finite at the cap
        let inner = JumpMeasure::atom_in(0.1, 0.2).unwrap();
        assert!(inner.log_moment(5.0).is_ok());
        assert!(inner.hazard_moment(5.0).is_ok());
        assert!(inner.hazard_moment(10.0).is_err()); // but not at its own pole
    }

    #[test]
    fn closed_forms_match_quadrature_on_random_pairs() {
        // deterministic linear-congruential scan over (measure, y) pairs
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let l_max = 0.05 + 0.9 * next();
            let y = 0.999 / l_max * next();
            let recip = JumpMeasure::reciprocal(l_max).unwrap();
            assert_abs_diff_eq!(recip.log_moment(y).unwrap(), log_moment_oracle(l_max, y), epsilon = 1e-8);
            assert_abs_diff_eq!(recip.hazard_moment(y).unwrap(), hazard_oracle(l_max, y), epsilon = 1e-8);
            let atom = JumpMeasure::atom(l_max).unwrap();
            assert_abs_diff_eq!(atom.log_moment(y).unwrap(), (1.0 - y * l_max).ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn monotonicity_and_derivative_consistency() {
        let measures = [
            JumpMeasure::none(),
            JumpMeasure::atom(0.2).unwrap(),
            JumpMeasure::reciprocal(0.2).unwrap(),
        ];
        for m in measures {
            // stay half a percent off the pole: the central-difference
            // remainder grows like (1 - y l)^{-2} there
            let cap = m.allocation_cap().min(10.0);
            let ys: Vec<f64> = (0..60).map(|i| cap * 0.995 * i as f64 / 59.0).collect();
            let mut prev_log = f64::INFINITY;
            let mut prev_haz = f64::NEG_INFINITY;
            for &y in &ys {
                let lm = m.log_moment(y).unwrap();
                let hz = m.hazard_moment(y).unwrap();
                assert!(lm <= 1e-15, "log moment must be <= 0");
                assert!(hz >= -1e-15, "hazard moment must be >= 0");
                assert!(lm <= prev_log + 1e-12, "log moment nonincreasing");
                assert!(hz >= prev_haz - 1e-12, "hazard moment nondecreasing");
                prev_log = lm;
                prev_haz = hz;
                // central difference of log_moment vs -hazard_moment
                let h = 1e-5;
                if y > h && y + h < cap {
                    let d = (m.log_moment(y + h).unwrap() - m.log_moment(y - h).unwrap()) / (2.0 * h);
                    let scale = hz.abs().max(1.0);
                    assert!(
                        (d + hz).abs() <= 1e-6 * scale,
                        "derivative mismatch at y={y}: {d} vs {}",
                        -hz
                    );
                }
            }
        }
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn log_moment_nonpositive_hazard_nonnegative(
                l_max in 0.01..0.95f64,
                frac in 0.0..0.999f64,
                kind in 0..3usize,
            ) {
                let m = match kind {
                    0 => JumpMeasure::none(),
                    1 => JumpMeasure::atom(l_max).unwrap(),
                    _ => JumpMeasure::reciprocal(l_max).unwrap(),
                };
                let y = frac / l_max;
                prop_assert!(m.log_moment(y).unwrap() <= 1e-15);
                prop_assert!(m.hazard_moment(y).unwrap() >= -1e-15);
            }
        }
    }
}
