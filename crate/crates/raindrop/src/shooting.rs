//! Shooting on the initial slope of the monotone-modified equation.
//!
//! For `u''' = f(u)` with `u(0) = 0`, `u'(0) = a`, `u''(0) = 0`, a solution
//! that touches 0 or π at some `s > 0` escapes for good, so each slope can
//! be classified by its first boundary touch. Order preservation in `a`
//! makes the set of slopes surviving to a given horizon an interval, and
//! bisection over a horizon schedule produces a nested family of brackets
//! pinching the critical slope whose solution stays in `(0, π)`.
//!
//! Finite precision puts a ceiling on how far boundedness can be certified:
//! the unstable mode of the linearization grows like `e^s`, so a slope
//! uncertainty of width `w` contaminates the trajectory by `~w·e^s/3`. With
//! the default bracket width `1e-13` the certified horizon tops out around
//! `s ≈ 30`; the report records what was actually verified.

use crate::ode::{
    integrate, integrate_until_exit, BandSide, IntegratorSettings, OdeError, PhaseState, RhsKind,
    Trajectory,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Per-stage bisection runs until the bracket is this tight (or the
/// iteration cap is hit).
pub const BISECT_TOL: f64 = 1e-13;
/// Iteration cap per schedule stage.
pub const MAX_STAGE_ITERS: usize = 60;
/// How far past a stage horizon a midpoint is integrated to force an escape
/// when it is still inside the band at the stage horizon. In 64-bit
/// arithmetic every slope escapes by `s ≈ 37` (`1e-16·e^s` reaches O(1)),
/// so this margin resolves every bracket the tolerance can produce.
pub const RESOLVE_MARGIN: f64 = 15.0;

/// Default horizon schedule.
pub const DEFAULT_SCHEDULE: [f64; 5] = [5.0, 10.0, 15.0, 20.0, 25.0];
/// Default seed bracket: the low seed collapses under the constant forcing
/// before climbing anywhere, the high seed clears π before `s = 0.4`.
pub const DEFAULT_SEEDS: (f64, f64) = (1e-3, 10.0);

/// Outcome of integrating one slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShootClassification {
    /// Reached 0 at `s_exit > 0`.
    EscapedLow { s_exit: f64 },
    /// Reached π at `s_exit > 0`.
    EscapedHigh { s_exit: f64 },
    /// Stayed inside `(0, π)` through the horizon.
    Undecided { horizon: f64 },
}

impl ShootClassification {
    pub fn is_low(&self) -> bool {
        matches!(self, ShootClassification::EscapedLow { .. })
    }
    pub fn is_high(&self) -> bool {
        matches!(self, ShootClassification::EscapedHigh { .. })
    }
    pub fn is_undecided(&self) -> bool {
        matches!(self, ShootClassification::Undecided { .. })
    }
}

/// One bracket `[lo, hi]` recorded after a schedule stage.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub horizon: f64,
    pub lo: f64,
    pub hi: f64,
}

/// The evolving slope bracket: `a_lo` classifies low, `a_hi` high, and the
/// recorded per-stage intervals are nested by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShootBracket {
    pub a_lo: f64,
    pub a_hi: f64,
    pub history: Vec<IntervalRecord>,
}

/// Result of nested-interval refinement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShootReport {
    /// Midpoint of the final bracket.
    pub a_star: f64,
    /// Width of the final bracket.
    pub bracket_width: f64,
    /// Largest schedule horizon at which `a_star` classifies as undecided.
    pub bounded_horizon: f64,
    pub bracket: ShootBracket,
    /// Trajectory of `a_star` over `[0, bounded_horizon]`.
    pub trajectory: Trajectory,
}

#[derive(Debug, thiserror::Error)]
pub enum ShootError {
    #[error("seed bracket invalid: {0}")]
    SeedNotBracketing(String),
    #[error("bracket monotonicity violated at stage {horizon}: {detail}")]
    MonotonicityViolation { horizon: f64, detail: String },
    #[error("critical-slope certification failed: {0}")]
    Certification(String),
    #[error("integration failed: {0}")]
    Integration(#[from] OdeError),
}

/// Classify one initial slope by the first boundary touch of its solution.
///
/// Escape detection is an exact boundary touch (strict level exceedance on
/// dense output, no epsilon margin): a solution that reaches 0 or π never
/// returns to the band, so classification at first touch is final.
pub fn classify(a: f64, settings: &IntegratorSettings) -> Result<ShootClassification, ShootError> {
    if !a.is_finite() {
        return Err(ShootError::SeedNotBracketing(format!(
            "slope must be finite, got {a}"
        )));
    }
    let initial = PhaseState::new(0.0, 0.0, a, 0.0);
    let (_, exit) = integrate_until_exit(initial, RhsKind::ModifiedF, settings, (0.0, PI))?;
    Ok(match exit {
        Some(e) => match e.side {
            BandSide::Low => ShootClassification::EscapedLow { s_exit: e.s },
            BandSide::High => ShootClassification::EscapedHigh { s_exit: e.s },
        },
        None => ShootClassification::Undecided {
            horizon: settings.horizon,
        },
    })
}

/// Classify at the stage horizon; when undecided there, integrate further
/// (to the resolve horizon) to force a Low/High answer if one exists.
fn classify_resolved(
    a: f64,
    stage_horizon: f64,
    resolve_horizon: f64,
    settings: &IntegratorSettings,
) -> Result<ShootClassification, ShootError> {
    let at_stage = classify(a, &settings.with_horizon(stage_horizon))?;
    if !at_stage.is_undecided() || resolve_horizon <= stage_horizon {
        return Ok(at_stage);
    }
    classify(a, &settings.with_horizon(resolve_horizon))
}

/// Nested-interval refinement of the critical slope.
///
/// Per schedule stage, the bracket is bisected at that stage's horizon until
/// it is tighter than [`BISECT_TOL`] (or [`MAX_STAGE_ITERS`] is hit).
/// Midpoints still inside the band at the stage horizon are integrated
/// further to resolve them; escape finality keeps the endpoints' meanings
/// valid as the horizon grows, so each stage's bracket is contained in the
/// previous one.
pub fn refine_interval(
    seed_lo: f64,
    seed_hi: f64,
    horizon_schedule: &[f64],
    settings: &IntegratorSettings,
) -> Result<ShootReport, ShootError> {
    if horizon_schedule.is_empty() {
        return Err(ShootError::SeedNotBracketing(
            "horizon schedule must not be empty".into(),
        ));
    }
    if !horizon_schedule.windows(2).all(|w| w[0] < w[1]) {
        return Err(ShootError::SeedNotBracketing(
            "horizon schedule must be strictly increasing".into(),
        ));
    }
    if !(seed_lo.is_finite() && seed_hi.is_finite() && seed_lo < seed_hi) {
        return Err(ShootError::SeedNotBracketing(format!(
            "need seed_lo < seed_hi, got ({seed_lo}, {seed_hi})"
        )));
    }

    let first = horizon_schedule[0];

    let lo_class = classify(seed_lo, &settings.with_horizon(first))?;
    if !lo_class.is_low() {
        return Err(ShootError::SeedNotBracketing(format!(
            "seed_lo = {seed_lo} classifies as {lo_class:?} at horizon {first}, need an escape through 0"
        )));
    }
    let hi_class = classify(seed_hi, &settings.with_horizon(first))?;
    if !hi_class.is_high() {
        return Err(ShootError::SeedNotBracketing(format!(
            "seed_hi = {seed_hi} classifies as {hi_class:?} at horizon {first}, need an escape through π"
        )));
    }

    let mut lo = seed_lo;
    let mut hi = seed_hi;
    let mut history = Vec::with_capacity(horizon_schedule.len());

    for &stage in horizon_schedule {
        // Each stage resolves undecided midpoints a fixed margin past its
        // own horizon, so the recorded brackets shrink stage by stage at
        // the pace the growing horizon allows.
        let resolve = stage + RESOLVE_MARGIN;
        for _ in 0..MAX_STAGE_ITERS {
            if hi - lo < BISECT_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break; // resolution floor of the arithmetic
            }
            match classify_resolved(mid, stage, resolve, settings)? {
                ShootClassification::EscapedLow { .. } => lo = mid,
                ShootClassification::EscapedHigh { .. } => hi = mid,
                ShootClassification::Undecided { .. } => {
                    // inside the band even past the resolve horizon; the
                    // bracket cannot be narrowed further at this stage
                    break;
                }
            }
        }
        history.push(IntervalRecord {
            horizon: stage,
            lo,
            hi,
        });
    }

    // nesting holds by construction; violation indicates a broken invariant
    for w in history.windows(2) {
        if w[1].lo < w[0].lo || w[1].hi > w[0].hi {
            return Err(ShootError::MonotonicityViolation {
                horizon: w[1].horizon,
                detail: format!(
                    "stage bracket [{}, {}] not inside previous [{}, {}]",
                    w[1].lo, w[1].hi, w[0].lo, w[0].hi
                ),
            });
        }
    }

    let a_star = 0.5 * (lo + hi);
    let bracket_width = hi - lo;

    // certify the midpoint: largest schedule horizon it survives
    let mut bounded_horizon = None;
    for &stage in horizon_schedule.iter().rev() {
        if classify(a_star, &settings.with_horizon(stage))?.is_undecided() {
            bounded_horizon = Some(stage);
            break;
        }
    }
    let bounded_horizon = bounded_horizon.ok_or_else(|| {
        ShootError::Certification(format!(
            "midpoint {a_star} escapes before every schedule horizon; bracket width {bracket_width:e}"
        ))
    })?;

    let trajectory = integrate(
        PhaseState::new(0.0, 0.0, a_star, 0.0),
        RhsKind::ModifiedF,
        &settings.with_horizon(bounded_horizon),
    )?;

    Ok(ShootReport {
        a_star,
        bracket_width,
        bounded_horizon,
        bracket: ShootBracket {
            a_lo: lo,
            a_hi: hi,
            history,
        },
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> IntegratorSettings {
        IntegratorSettings::default()
    }

    #[test]
    fn zero_slope_escapes_low_immediately() {
        let c = classify(0.0, &settings().with_horizon(5.0)).unwrap();
        match c {
            ShootClassification::EscapedLow { s_exit } => {
                assert!(s_exit > 0.0 && s_exit < 1e-2, "s_exit = {s_exit}");
            }
            other => panic!("expected low escape, got {other:?}"),
        }
    }

    #[test]
    fn steep_slope_escapes_high_quickly() {
        let c = classify(10.0, &settings().with_horizon(5.0)).unwrap();
        match c {
            ShootClassification::EscapedHigh { s_exit } => {
                assert!(s_exit <= 0.4, "s_exit = {s_exit}");
            }
            other => panic!("expected high escape, got {other:?}"),
        }
    }

    #[test]
    fn small_slope_escapes_low() {
        let c = classify(1e-3, &settings().with_horizon(5.0)).unwrap();
        assert!(c.is_low(), "{c:?}");
    }

    #[test]
    fn seed_precondition_is_checked() {
        // both seeds escape high
        let err = refine_interval(5.0, 10.0, &[5.0], &settings()).unwrap_err();
        assert!(matches!(err, ShootError::SeedNotBracketing(_)), "{err}");
    }

    #[test]
    fn refinement_produces_a_tight_nested_bracket() {
        let report = refine_interval(
            DEFAULT_SEEDS.0,
            DEFAULT_SEEDS.1,
            &DEFAULT_SCHEDULE,
            &settings(),
        )
        .unwrap();
        assert!(report.bracket_width <= 2.0 * BISECT_TOL);
        assert_eq!(report.bracket.history.len(), DEFAULT_SCHEDULE.len());
        for w in report.bracket.history.windows(2) {
            assert!(w[1].lo >= w[0].lo && w[1].hi <= w[0].hi, "nesting violated");
        }
        assert_eq!(report.bounded_horizon, 25.0);
        // the critical trajectory stays strictly inside the band
        let (_, end) = report.trajectory.span();
        assert!(end >= 25.0);
        let mut s = 0.025;
        while s < 25.0 {
            let u = report.trajectory.eval_value(s).unwrap();
            assert!(u > 0.0 && u < PI, "u({s}) = {u}");
            s += 0.025;
        }
    }

    #[test]
    fn perturbed_critical_slope_escapes_both_ways() {
        let report = refine_interval(
            DEFAULT_SEEDS.0,
            DEFAULT_SEEDS.1,
            &DEFAULT_SCHEDULE,
            &settings(),
        )
        .unwrap();
        let lo = classify(report.a_star - 1e-6, &settings().with_horizon(25.0)).unwrap();
        let hi = classify(report.a_star + 1e-6, &settings().with_horizon(25.0)).unwrap();
        assert!(lo.is_low(), "{lo:?}");
        assert!(hi.is_high(), "{hi:?}");
    }
}
