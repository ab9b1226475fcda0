//! Event localization on dense output.
//!
//! Events are zeros of an event function along the trajectory: a value-level
//! crossing, or a zero of the first or second derivative. Dense output is
//! scanned on a grid of step `max_step / 4` per segment (finer on short
//! steps); sign changes are bisected down to the event tolerance. A node
//! where the event function sits inside the tolerance band starts a
//! degenerate run: a run flanked by nonzero values is reported as one
//! tangential event at its most central zero, while a run covering an entire
//! segment sequence (an equilibrium) produces no isolated events.

use super::{IntegratorSettings, Trajectory};
use serde::{Deserialize, Serialize};

/// What the event function is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    /// `value - level`
    ValueCross(f64),
    /// `d1`
    D1Zero,
    /// `d2`
    D2Zero,
}

impl EventKind {
    #[inline]
    fn apply(&self, p: &super::PhaseState) -> f64 {
        match self {
            EventKind::ValueCross(level) => p.value - level,
            EventKind::D1Zero => p.d1,
            EventKind::D2Zero => p.d2,
        }
    }
}

/// A localized event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub s: f64,
    pub kind: EventKind,
    /// |event function| at the reported `s`, evaluated on dense output.
    pub residual: f64,
}

/// Localize every zero of each requested event function over the covered
/// span. Events are returned in increasing `s` (stably ordered by the request
/// order for coincident locations).
pub fn find_events(
    trajectory: &Trajectory,
    specs: &[EventKind],
    settings: &IntegratorSettings,
) -> Vec<Event> {
    let mut out = Vec::new();
    for &kind in specs {
        scan_one(trajectory, kind, settings, &mut out);
    }
    out.sort_by(|a, b| a.s.total_cmp(&b.s));
    out
}

fn scan_one(
    traj: &Trajectory,
    kind: EventKind,
    settings: &IntegratorSettings,
    out: &mut Vec<Event>,
) {
    let (start, end) = traj.span();
    if end <= start {
        return;
    }
    let tol = settings.event_tol;
    let grid = build_grid(traj, settings);
    let phi: Vec<f64> = grid
        .iter()
        .map(|&s| kind.apply(&traj.eval(s).expect("grid point inside span")))
        .collect();
    let sgn = |v: f64| -> i8 {
        if v > tol {
            1
        } else if v < -tol {
            -1
        } else {
            0
        }
    };

    let n = grid.len();
    let mut i = 0;
    while i + 1 < n {
        let si = sgn(phi[i]);
        let sj = sgn(phi[i + 1]);
        if si != 0 && sj != 0 {
            if si != sj {
                // transversal crossing inside (grid[i], grid[i+1])
                out.push(bisect_crossing(
                    traj,
                    kind,
                    (grid[i], phi[i]),
                    (grid[i + 1], phi[i + 1]),
                    tol,
                ));
            }
            i += 1;
            continue;
        }
        if si != 0 && sj == 0 {
            // entering a zero run; find its extent
            let run_start = i + 1;
            let mut j = run_start;
            while j + 1 < n && sgn(phi[j + 1]) == 0 {
                j += 1;
            }
            // run is grid[run_start ..= j]
            if j + 1 < n {
                // flanked on both sides
                report_run(traj, kind, &grid, &phi, run_start, j, out);
                i = j; // continue from the run end; the flank pair (j, j+1)
                       // is handled on the next iteration if it is a crossing
            } else {
                // run extends to the end of the span: tangential touch at the tail
                report_run(traj, kind, &grid, &phi, run_start, j, out);
                break;
            }
            continue;
        }
        if si == 0 {
            // run starting at or before i (possibly the very start of the span)
            let mut j = i;
            while j + 1 < n && sgn(phi[j + 1]) == 0 {
                j += 1;
            }
            if i == 0 && j + 1 >= n {
                // the event function never leaves the tolerance band:
                // identically-zero trajectory, no isolated events
                return;
            }
            report_run(traj, kind, &grid, &phi, i, j, out);
            i = j + 1;
            continue;
        }
        i += 1;
    }
}

/// Scan grid: within each dense segment, points no farther apart than
/// `max_step / 4`.
fn build_grid(traj: &Trajectory, settings: &IntegratorSettings) -> Vec<f64> {
    let coarse = settings.max_step / 4.0;
    let mut grid = Vec::new();
    let (start, end) = traj.span();
    grid.push(start);
    for seg in traj.segments() {
        let s1 = seg.s1.min(end);
        let len = s1 - seg.s0;
        if len <= 0.0 {
            continue;
        }
        let pieces = (len / coarse).ceil().max(1.0) as usize;
        for k in 1..=pieces {
            grid.push(seg.s0 + len * k as f64 / pieces as f64);
        }
    }
    grid
}

fn bisect_crossing(
    traj: &Trajectory,
    kind: EventKind,
    (mut a, mut fa): (f64, f64),
    (mut b, mut fb): (f64, f64),
    tol: f64,
) -> Event {
    debug_assert!(fa * fb < 0.0);
    for _ in 0..200 {
        if b - a <= tol.min(f64::EPSILON * b.abs().max(1.0)) {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = kind.apply(&traj.eval(m).expect("bisection point inside span"));
        if fm == 0.0 {
            return Event {
                s: m,
                kind,
                residual: 0.0,
            };
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    // report the endpoint with the smaller magnitude
    let (s, r) = if fa.abs() <= fb.abs() {
        (a, fa)
    } else {
        (b, fb)
    };
    Event {
        s,
        kind,
        residual: r.abs(),
    }
}

/// Report one tangential event for a maximal in-band run: the node of
/// smallest |φ| inside the run.
fn report_run(
    traj: &Trajectory,
    kind: EventKind,
    grid: &[f64],
    phi: &[f64],
    run_start: usize,
    run_end: usize,
    out: &mut Vec<Event>,
) {
    let _ = traj;
    let mut best = run_start;
    for j in run_start..=run_end {
        if phi[j].abs() < phi[best].abs() {
            best = j;
        }
    }
    out.push(Event {
        s: grid[best],
        kind,
        residual: phi[best].abs(),
    });
}
