//! Executable forms of the analytic estimates behind the construction.
//!
//! Each check integrates trajectories and asserts the corresponding
//! inequality on a dense grid, reporting named witnesses and the worst
//! margin. All checks are deterministic: same settings, same report.
//!
//! The amplitude checks run on the odd-shifted formulation (`v = u - π/2`);
//! the shift is applied internally where a modified-equation trajectory is
//! supplied.

use crate::ode::{
    find_events, integrate, EventKind, IntegratorSettings, OdeError, PhaseState, RhsKind,
    Trajectory,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error)]
pub enum LemmaError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// A named numeric quantity backing a pass/fail verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub s: f64,
    pub value: f64,
}

/// Outcome of one lemma check. On failure the witnesses pinpoint the
/// violating arc length.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaReport {
    pub id: String,
    pub pass: bool,
    /// Worst slack observed; negative exactly when the check fails.
    pub margin: f64,
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
}

impl LemmaReport {
    fn new(id: &str) -> Self {
        Self {
            id: id.to_string(),
            pass: true,
            margin: f64::INFINITY,
            witnesses: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn observe(&mut self, margin: f64, label: &str, s: f64, value: f64) {
        if margin < self.margin {
            self.margin = margin;
            self.witnesses = vec![Witness {
                label: label.to_string(),
                s,
                value,
            }];
        }
        if margin < 0.0 {
            self.pass = false;
        }
    }
}

/// A localized critical point of a trajectory.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Extremum {
    pub s: f64,
    pub value: f64,
    pub kind: ExtremumKind,
    /// Second derivative at the critical point; classification is by its
    /// sign, and magnitudes below the event tolerance mark the extremum
    /// degenerate.
    pub second_deriv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtremumKind {
    Max,
    Min,
}

/// Order preservation in the initial slope: for `0 < a < b` the solutions
/// of the monotone-modified equation satisfy `u_a(s) < u_b(s)` for `s > 0`.
pub fn check_order_preservation(
    a: f64,
    b: f64,
    settings: &IntegratorSettings,
) -> Result<LemmaReport, LemmaError> {
    if !(a.is_finite() && b.is_finite() && 0.0 < a && a < b) {
        return Err(LemmaError::Domain(format!(
            "need 0 < a < b strictly, got ({a}, {b})"
        )));
    }
    let ua = integrate(
        PhaseState::new(0.0, 0.0, a, 0.0),
        RhsKind::ModifiedF,
        settings,
    )?;
    let ub = integrate(
        PhaseState::new(0.0, 0.0, b, 0.0),
        RhsKind::ModifiedF,
        settings,
    )?;
    let mut report = LemmaReport::new("order_preservation");
    let step = settings.max_step / 4.0;
    let end = settings.horizon;
    let mut k = 1usize;
    loop {
        let s = (k as f64 * step).min(end);
        let diff = ub.eval_value(s)? - ua.eval_value(s)?;
        report.observe(diff, "u_b - u_a", s, diff);
        if s >= end {
            break;
        }
        k += 1;
    }
    report.notes.push(format!("slopes a = {a}, b = {b}"));
    Ok(report)
}

/// The monotone lockout: if `g(v)`, `v'`, and `v''` are all nonnegative at a
/// point, with at least one strictly positive, the solution increases
/// forever with no further critical point.
pub fn check_trifecta(
    initial: PhaseState,
    settings: &IntegratorSettings,
) -> Result<LemmaReport, LemmaError> {
    if !initial.is_finite() {
        return Err(LemmaError::Domain(format!("non-finite state {initial:?}")));
    }
    let g0 = RhsKind::ShiftedG.f(initial.value);
    if g0 < 0.0 || initial.d1 < 0.0 || initial.d2 < 0.0 {
        return Err(LemmaError::Domain(format!(
            "lockout requires g(v), v', v'' ≥ 0; got ({g0}, {}, {})",
            initial.d1, initial.d2
        )));
    }
    if g0 == 0.0 && initial.d1 == 0.0 && initial.d2 == 0.0 {
        return Err(LemmaError::Domain(
            "lockout requires at least one strictly positive of g(v), v', v''".into(),
        ));
    }
    let traj = integrate(initial, RhsKind::ShiftedG, settings)?;
    let mut report = LemmaReport::new("trifecta_lockout");

    // no critical point past the start
    let events = find_events(&traj, &[EventKind::D1Zero], settings);
    for e in events {
        if e.s > initial.s {
            report.observe(-1.0, "unexpected critical point", e.s, 0.0);
        }
    }

    // strictly increasing on the sample grid
    let step = settings.max_step / 4.0;
    let end = settings.horizon;
    let mut prev = traj.eval_value(initial.s)?;
    let mut k = 1usize;
    loop {
        let s = (initial.s + k as f64 * step).min(end);
        let v = traj.eval_value(s)?;
        report.observe(v - prev, "increase over one grid step", s, v - prev);
        prev = v;
        if s >= end {
            break;
        }
        k += 1;
    }
    Ok(report)
}

/// Ordered critical points of an odd-shifted trajectory, classified by the
/// sign of the second derivative.
pub fn extrema_sequence(
    trajectory: &Trajectory,
    settings: &IntegratorSettings,
) -> Result<Vec<Extremum>, LemmaError> {
    if trajectory.rhs != RhsKind::ShiftedG {
        return Err(LemmaError::Domain(format!(
            "extrema are read off the odd-shifted formulation, got {:?}",
            trajectory.rhs
        )));
    }
    let (start, _) = trajectory.span();
    let mut out = Vec::new();
    for e in find_events(trajectory, &[EventKind::D1Zero], settings) {
        if e.s <= start {
            continue;
        }
        let p = trajectory.eval(e.s)?;
        let kind = if p.d2 < 0.0 {
            ExtremumKind::Max
        } else {
            ExtremumKind::Min
        };
        out.push(Extremum {
            s: e.s,
            value: p.value,
            kind,
            second_deriv: p.d2,
        });
    }
    Ok(out)
}

/// Alternation and sign structure of the critical points of a bounded
/// solution: maxima positive, minima negative, kinds alternating. Extrema
/// with amplitude under the certification floor are excluded (and noted).
pub fn check_extrema_signs(
    extrema: &[Extremum],
    slope_uncertainty: f64,
    settings: &IntegratorSettings,
) -> Result<LemmaReport, LemmaError> {
    let mut report = LemmaReport::new("extrema_alternation");
    let certified = truncate_at_floor(extrema, slope_uncertainty, &mut report);
    for pair in certified.windows(2) {
        if pair[0].kind == pair[1].kind {
            report.observe(-1.0, "kinds fail to alternate", pair[1].s, pair[1].value);
        }
    }
    for e in certified {
        if e.second_deriv.abs() < settings.event_tol {
            report.observe(
                -1.0,
                "degenerate extremum (|d2| under event_tol)",
                e.s,
                e.second_deriv,
            );
            continue;
        }
        let margin = match e.kind {
            ExtremumKind::Max => e.value,
            ExtremumKind::Min => -e.value,
        };
        report.observe(
            margin,
            match e.kind {
                ExtremumKind::Max => "max value (must be positive)",
                ExtremumKind::Min => "-min value (must be positive)",
            },
            e.s,
            e.value,
        );
    }
    if certified.len() < extrema.len() {
        report.notes.push(format!(
            "{} of {} extrema under the certification floor were excluded",
            extrema.len() - certified.len(),
            extrema.len()
        ));
    }
    Ok(report)
}

/// Amplitude decay of consecutive extrema of the odd-shifted equation.
///
/// For a positive maximum `k` followed by a negative minimum `m`:
/// `|m| < k`, sharpened to `|m| < (1 - k²/192)·k` when `k ≤ π` and to
/// `|m| < k - π³/192` when `k > π`; mirrored for minimum-then-maximum
/// pairs. The chain stops at the certification floor
/// `max(1e-10, slope_uncertainty·e^s)`: below it the computed tail is
/// dominated by the exponential growth of the slope-bracket uncertainty,
/// and the truncation is reported rather than hidden.
pub fn check_amplitude_decay(
    extrema: &[Extremum],
    slope_uncertainty: f64,
) -> Result<LemmaReport, LemmaError> {
    let mut report = LemmaReport::new("amplitude_decay");
    let certified = truncate_at_floor(extrema, slope_uncertainty, &mut report);
    for pair in certified.windows(2) {
        let (first, second) = (&pair[0], &pair[1]);
        if first.kind == second.kind {
            return Err(LemmaError::Domain(format!(
                "extrema must alternate; {:?} at s = {} follows {:?}",
                second.kind, second.s, first.kind
            )));
        }
        let k = first.value.abs();
        let m = second.value.abs();
        report.observe(k - m, "amplitude drop k - |m|", second.s, m);
        let bound = if k <= PI {
            (1.0 - k * k / 192.0) * k
        } else {
            k - PI * PI * PI / 192.0
        };
        report.observe(bound - m, "decay bound minus |m|", second.s, bound - m);
    }
    if certified.len() >= 2 {
        report
            .notes
            .push(format!("{} consecutive pairs checked", certified.len() - 1));
    }
    Ok(report)
}

fn truncate_at_floor<'a>(
    extrema: &'a [Extremum],
    slope_uncertainty: f64,
    report: &mut LemmaReport,
) -> &'a [Extremum] {
    let floor = |s: f64| (slope_uncertainty * s.exp()).max(1e-10);
    let cut = extrema
        .iter()
        .position(|e| e.value.abs() < floor(e.s))
        .unwrap_or(extrema.len());
    if cut < extrema.len() {
        report.notes.push(format!(
            "chain truncated at s = {:.6}: amplitude {:e} under the certification floor {:e}",
            extrema[cut].s,
            extrema[cut].value.abs(),
            floor(extrema[cut].s)
        ));
    }
    &extrema[..cut]
}

/// Linear curvature growth of non-proper solutions of the original
/// equation: for `θ'(0) = a > 0` and `θ''(0) = b0 > 2/a`, the second
/// derivative never drops below `b0 - 2/a` and the curvature gain
/// `κ(s) - κ(0)` is pinched between `(b0 - 2/a)·s` and `(b0 + 2/a)·s`.
pub fn check_nonproper_criterion(
    a: f64,
    b0: f64,
    settings: &IntegratorSettings,
) -> Result<LemmaReport, LemmaError> {
    if !(a.is_finite() && a > 0.0) {
        return Err(LemmaError::Domain(format!("need a > 0, got {a}")));
    }
    let eps = b0 - 2.0 / a;
    if !(b0.is_finite() && eps > 0.0) {
        return Err(LemmaError::Domain(format!(
            "need b0 > 2/a strictly, got b0 = {b0}, 2/a = {}",
            2.0 / a
        )));
    }
    let traj = integrate(
        PhaseState::new(0.0, 0.0, a, b0),
        RhsKind::Original,
        settings,
    )?;
    let mut report = LemmaReport::new("nonproper_criterion");
    // numeric slack for inequalities the analysis makes non-strict
    let tol = 1e-9 * (1.0 + b0.abs() + a.abs());
    let step = settings.max_step / 4.0;
    let end = settings.horizon;
    let mut k = 1usize;
    loop {
        let s = (k as f64 * step).min(end);
        let p = traj.eval(s)?;
        report.observe(p.d2 - eps + tol, "θ'' minus lower bound", s, p.d2);
        let gain = p.d1 - a;
        report.observe(gain - eps * s + tol, "κ gain minus lower line", s, gain);
        report.observe(
            (b0 + 2.0 / a) * s - gain + tol,
            "upper line minus κ gain",
            s,
            gain,
        );
        if s >= end {
            break;
        }
        k += 1;
    }
    report
        .notes
        .push(format!("a = {a}, b0 = {b0}, lower slope = {eps}"));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(horizon: f64) -> IntegratorSettings {
        IntegratorSettings::default().with_horizon(horizon)
    }

    #[test]
    fn order_preservation_on_reference_pairs() {
        let r = check_order_preservation(0.5, 1.0, &settings(10.0)).unwrap();
        assert!(r.pass, "{r:?}");
        let r = check_order_preservation(1e-3, 10.0, &settings(5.0)).unwrap();
        assert!(r.pass);
        assert!(r.margin > 0.0);
    }

    #[test]
    fn order_preservation_needs_strict_slopes() {
        assert!(check_order_preservation(1.0, 1.0, &settings(5.0)).is_err());
        assert!(check_order_preservation(2.0, 1.0, &settings(5.0)).is_err());
        assert!(check_order_preservation(0.0, 1.0, &settings(5.0)).is_err());
    }

    #[test]
    fn separation_grows_with_arc_length() {
        let st = settings(5.0);
        let ua = integrate(
            PhaseState::new(0.0, 0.0, 1e-3, 0.0),
            RhsKind::ModifiedF,
            &st,
        )
        .unwrap();
        let ub = integrate(
            PhaseState::new(0.0, 0.0, 10.0, 0.0),
            RhsKind::ModifiedF,
            &st,
        )
        .unwrap();
        let d1 = ub.eval_value(1.0).unwrap() - ua.eval_value(1.0).unwrap();
        let d4 = ub.eval_value(4.0).unwrap() - ua.eval_value(4.0).unwrap();
        assert!(d4 > d1 && d1 > 0.0);
    }

    #[test]
    fn lockout_states_increase_without_critical_points() {
        for initial in [
            PhaseState::new(0.0, 0.1, 0.0, 0.1),
            PhaseState::new(0.0, 0.0, 1.0, 0.0),
            PhaseState::new(0.0, std::f64::consts::FRAC_PI_2 + 1.0, 0.0, 0.0),
        ] {
            let r = check_trifecta(initial, &settings(20.0)).unwrap();
            assert!(r.pass, "{initial:?}: {r:?}");
        }
    }

    #[test]
    fn lockout_precondition_is_strict() {
        // all zero: the equilibrium, no strict positivity
        assert!(check_trifecta(PhaseState::new(0.0, 0.0, 0.0, 0.0), &settings(5.0)).is_err());
        // negative first derivative
        assert!(check_trifecta(PhaseState::new(0.0, 0.1, -0.1, 0.0), &settings(5.0)).is_err());
        // negative g(v)
        assert!(check_trifecta(PhaseState::new(0.0, -0.1, 0.1, 0.1), &settings(5.0)).is_err());
    }

    #[test]
    fn equilibrium_has_no_extrema() {
        let st = settings(15.0);
        let traj = integrate(PhaseState::new(0.0, 0.0, 0.0, 0.0), RhsKind::ShiftedG, &st).unwrap();
        let ext = extrema_sequence(&traj, &st).unwrap();
        assert!(ext.is_empty());
    }

    #[test]
    fn lockout_region_reports_no_extrema() {
        let st = settings(20.0);
        let initial = PhaseState::new(0.0, 0.1, 0.0, 0.1);
        let r = check_trifecta(initial, &st).unwrap();
        assert!(r.pass);
        let traj = integrate(initial, RhsKind::ShiftedG, &st).unwrap();
        let ext = extrema_sequence(&traj, &st).unwrap();
        assert!(ext.is_empty(), "{ext:?}");
    }

    #[test]
    fn extrema_require_the_shifted_form() {
        let st = settings(5.0);
        let traj = integrate(PhaseState::new(0.0, 0.0, 1.0, 0.0), RhsKind::ModifiedF, &st).unwrap();
        assert!(extrema_sequence(&traj, &st).is_err());
    }

    #[test]
    fn decay_bound_value_at_pi() {
        // δ(π)·π with δ(z) = 1 - z²/192
        let delta = 1.0 - PI * PI / 192.0;
        assert!((delta - 0.94860).abs() < 5e-6);
    }

    #[test]
    fn synthetic_equal_amplitudes_fail_with_witness() {
        let ext = [
            Extremum {
                s: 1.0,
                value: 1.0,
                kind: ExtremumKind::Max,
                second_deriv: -0.5,
            },
            Extremum {
                s: 2.0,
                value: -1.0,
                kind: ExtremumKind::Min,
                second_deriv: 0.5,
            },
        ];
        let r = check_amplitude_decay(&ext, 0.0).unwrap();
        assert!(!r.pass);
        assert!(r.margin < 0.0);
        assert_eq!(r.witnesses.len(), 1);
        assert_eq!(r.witnesses[0].s, 2.0);
    }

    #[test]
    fn non_alternating_input_is_rejected() {
        let e = Extremum {
            s: 1.0,
            value: 1.0,
            kind: ExtremumKind::Max,
            second_deriv: -0.5,
        };
        let ext = [e, Extremum { s: 2.0, ..e }];
        assert!(check_amplitude_decay(&ext, 0.0).is_err());
    }

    #[test]
    fn nonproper_criterion_reference_case() {
        let r = check_nonproper_criterion(1.0, 3.0, &settings(15.0)).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn nonproper_criterion_marginal_case() {
        // b0 just above 2/a: the lower bound 0.01 must survive
        let r = check_nonproper_criterion(2.0, 1.01, &settings(15.0)).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn nonproper_criterion_rejects_non_strict_data() {
        assert!(check_nonproper_criterion(1.0, 2.0, &settings(5.0)).is_err());
        assert!(check_nonproper_criterion(-1.0, 3.0, &settings(5.0)).is_err());
    }
}
