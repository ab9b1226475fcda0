//! Property tests over randomized inputs.

use proptest::prelude::*;
use raindrop::ode::{find_events, integrate, EventKind, IntegratorSettings, PhaseState, RhsKind};
use std::f64::consts::FRAC_PI_2;

proptest! {
    /// The monotone-modified function is the odd-shifted one composed with
    /// the shift, bit for bit.
    #[test]
    fn modified_equals_shifted_composition(x in -10.0f64..10.0) {
        let lhs = raindrop::ode::eval_rhs(RhsKind::ModifiedF, x).unwrap();
        let rhs = raindrop::ode::eval_rhs(RhsKind::ShiftedG, x - FRAC_PI_2).unwrap();
        prop_assert_eq!(lhs.to_bits(), rhs.to_bits());
    }

    /// The shifted function is odd, bit for bit.
    #[test]
    fn shifted_function_is_odd(x in -10.0f64..10.0) {
        let plus = raindrop::ode::eval_rhs(RhsKind::ShiftedG, x).unwrap();
        let minus = raindrop::ode::eval_rhs(RhsKind::ShiftedG, -x).unwrap();
        prop_assert_eq!(minus.to_bits(), (-plus).to_bits());
    }

    /// The modified function never decreases.
    #[test]
    fn modified_function_is_monotone(x in -10.0f64..10.0, y in -10.0f64..10.0) {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        prop_assert!(
            raindrop::ode::eval_rhs(RhsKind::ModifiedF, lo).unwrap()
                <= raindrop::ode::eval_rhs(RhsKind::ModifiedF, hi).unwrap()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Dense output of random trajectories satisfies the equation: the
    /// reconstructed third derivative matches -cos of the value to a few
    /// ulps of the tolerance, and samples are reproduced exactly.
    #[test]
    fn dense_output_is_consistent(
        v0 in -3.0f64..3.0,
        d1 in -2.0f64..2.0,
        d2 in -2.0f64..2.0,
    ) {
        let st = IntegratorSettings::default().with_horizon(3.0);
        let traj = integrate(PhaseState::new(0.0, v0, d1, d2), RhsKind::Original, &st).unwrap();
        for p in &traj.samples {
            let q = traj.eval(p.s).unwrap();
            prop_assert_eq!(q.value.to_bits(), p.value.to_bits());
        }
        for i in 0..=150 {
            let s = 3.0 * i as f64 / 150.0;
            let value = traj.eval_value(s).unwrap();
            let d3 = traj.eval_d3(s).unwrap();
            prop_assert!(
                (d3 + value.cos()).abs() < 10.0 * st.rel_tol,
                "defect {:e} at s = {}", (d3 + value.cos()).abs(), s
            );
        }
    }

    /// Every reported event has a dense-output residual under the event
    /// tolerance.
    #[test]
    fn event_residuals_stay_under_tolerance(
        v0 in -2.0f64..2.0,
        d1 in -1.5f64..1.5,
        level in -1.0f64..1.0,
    ) {
        let st = IntegratorSettings::default().with_horizon(6.0);
        let traj = integrate(PhaseState::new(0.0, v0, d1, 0.3), RhsKind::Original, &st).unwrap();
        let events = find_events(
            &traj,
            &[EventKind::ValueCross(level), EventKind::D1Zero],
            &st,
        );
        for e in &events {
            prop_assert!(e.residual < st.event_tol, "{:?}", e);
        }
        // events come back ordered
        for w in events.windows(2) {
            prop_assert!(w[0].s <= w[1].s);
        }
    }

    /// Initial data held inside the saturated region evolves as the exact
    /// cubic with third derivative -1 until it approaches the junction.
    #[test]
    fn saturated_region_matches_the_cubic(
        v0 in -5.0f64..-1.0,
        d1 in -1.0f64..0.0,
        d2 in -1.0f64..0.0,
    ) {
        let st = IntegratorSettings::default().with_horizon(1.5);
        let traj = integrate(PhaseState::new(0.0, v0, d1, d2), RhsKind::ModifiedF, &st).unwrap();
        for i in 0..=60 {
            let s = 1.5 * i as f64 / 60.0;
            let truth = v0 + d1 * s + 0.5 * d2 * s * s - s * s * s / 6.0;
            let got = traj.eval_value(s).unwrap();
            prop_assert!(
                (got - truth).abs() <= 10.0 * st.abs_tol,
                "u({}) = {} vs cubic {}", s, got, truth
            );
        }
    }
}
