//! The three right-hand sides of the third-order angle equation.

use super::OdeError;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Selects the right-hand side of `w''' = F(w)`.
///
/// * `Original` — `F(θ) = -cos θ`, the translator equation itself.
/// * `ModifiedF` — the monotone modification: `-cos u` on `[0, π]`, saturated
///   at `-1` below and `+1` above. Monotone nondecreasing and C¹.
/// * `ShiftedG` — the same function shifted to be odd about the origin:
///   `sin v` on `[-π/2, π/2]`, saturated at `∓1` outside.
///
/// `ModifiedF(u) = ShiftedG(u - π/2)` holds exactly, bit for bit: the
/// modified function is implemented as that composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RhsKind {
    Original,
    ModifiedF,
    ShiftedG,
}

#[inline]
fn g(v: f64) -> f64 {
    if v <= -FRAC_PI_2 {
        -1.0
    } else if v >= FRAC_PI_2 {
        1.0
    } else {
        v.sin()
    }
}

#[inline]
fn g_d1(v: f64) -> f64 {
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&v) {
        0.0
    } else {
        v.cos()
    }
}

#[inline]
fn g_d2(v: f64) -> f64 {
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&v) {
        0.0
    } else {
        -v.sin()
    }
}

impl RhsKind {
    /// `F(x)`.
    #[inline]
    pub fn f(self, x: f64) -> f64 {
        match self {
            RhsKind::Original => -x.cos(),
            RhsKind::ModifiedF => g(x - FRAC_PI_2),
            RhsKind::ShiftedG => g(x),
        }
    }

    /// `F'(x)`. For the piecewise kinds this is the one-sided interior value
    /// on the closed band and zero outside; both agree at the junctions, so
    /// `F` is C¹.
    #[inline]
    pub fn f_d1(self, x: f64) -> f64 {
        match self {
            RhsKind::Original => x.sin(),
            RhsKind::ModifiedF => g_d1(x - FRAC_PI_2),
            RhsKind::ShiftedG => g_d1(x),
        }
    }

    /// `F''(x)`, taking the interior value on the closed band. Discontinuous
    /// at the junctions for the piecewise kinds; used only to extend dense
    /// output, where the isolated mismatch costs a few digits on the single
    /// step that straddles a junction.
    #[inline]
    pub fn f_d2(self, x: f64) -> f64 {
        match self {
            RhsKind::Original => x.cos(),
            RhsKind::ModifiedF => g_d2(x - FRAC_PI_2),
            RhsKind::ShiftedG => g_d2(x),
        }
    }

    /// True for the kinds covered by the runaway-derivative guard.
    #[inline]
    pub(crate) fn guard_derivatives(self) -> bool {
        matches!(self, RhsKind::Original | RhsKind::ModifiedF)
    }
}

/// Evaluate one right-hand side, rejecting non-finite input.
pub fn eval_rhs(kind: RhsKind, x: f64) -> Result<f64, OdeError> {
    if !x.is_finite() {
        return Err(OdeError::NonFinite(format!("eval_rhs argument {x}")));
    }
    Ok(kind.f(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn saturated_and_band_values() {
        assert_eq!(eval_rhs(RhsKind::ModifiedF, 0.0).unwrap(), -1.0);
        assert_eq!(eval_rhs(RhsKind::ShiftedG, 0.0).unwrap(), 0.0);
        assert_eq!(eval_rhs(RhsKind::ModifiedF, 3.0 * FRAC_PI_2).unwrap(), 1.0);
        assert!(eval_rhs(RhsKind::Original, FRAC_PI_2).unwrap().abs() <= 1e-16);
        assert_eq!(eval_rhs(RhsKind::ModifiedF, -5.0).unwrap(), -1.0);
        assert_eq!(eval_rhs(RhsKind::ModifiedF, PI + 4.0).unwrap(), 1.0);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        assert!(eval_rhs(RhsKind::Original, f64::NAN).is_err());
        assert!(eval_rhs(RhsKind::ShiftedG, f64::INFINITY).is_err());
    }

    /// The modified and shifted functions are the same function up to the
    /// π/2 shift, exactly.
    #[test]
    fn piecewise_identity_exact_on_a_million_samples() {
        let mut rng = StdRng::seed_from_u64(0x5eed);
        for _ in 0..1_000_000 {
            let x: f64 = rng.random_range(-10.0..10.0);
            let lhs = RhsKind::ModifiedF.f(x);
            let rhs = RhsKind::ShiftedG.f(x - FRAC_PI_2);
            assert_eq!(lhs.to_bits(), rhs.to_bits(), "mismatch at x = {x}");
        }
    }

    #[test]
    fn shifted_is_odd() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..100_000 {
            let x: f64 = rng.random_range(-8.0..8.0);
            let a = RhsKind::ShiftedG.f(-x);
            let b = -RhsKind::ShiftedG.f(x);
            assert_eq!(a.to_bits(), b.to_bits(), "oddness failed at x = {x}");
        }
        // junction points
        assert_eq!(RhsKind::ShiftedG.f(FRAC_PI_2), 1.0);
        assert_eq!(RhsKind::ShiftedG.f(-FRAC_PI_2), -1.0);
    }

    #[test]
    fn modified_is_monotone_nondecreasing() {
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..100_000 {
            let x: f64 = rng.random_range(-10.0..10.0);
            let y: f64 = rng.random_range(-10.0..10.0);
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            assert!(
                RhsKind::ModifiedF.f(lo) <= RhsKind::ModifiedF.f(hi),
                "monotonicity failed on ({lo}, {hi})"
            );
        }
    }

    #[test]
    fn derivatives_match_finite_differences_inside_branches() {
        // Sample points away from the junctions so central differences see a
        // smooth function.
        let pts = [-2.0, -0.9, 0.3, 1.0, 2.5, 4.0, 6.0];
        let h = 1e-5;
        for kind in [RhsKind::Original, RhsKind::ModifiedF, RhsKind::ShiftedG] {
            for &x in &pts {
                let fd1 = (kind.f(x + h) - kind.f(x - h)) / (2.0 * h);
                let fd2 = (kind.f(x + h) - 2.0 * kind.f(x) + kind.f(x - h)) / (h * h);
                assert!((kind.f_d1(x) - fd1).abs() < 1e-8, "{kind:?} f' at {x}");
                assert!((kind.f_d2(x) - fd2).abs() < 1e-5, "{kind:?} f'' at {x}");
            }
        }
    }
}
