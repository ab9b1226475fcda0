//! Discrete curve diffusion flow on polylines.
//!
//! Vertices move with normal velocity `-κ_ss`. Geometry is discrete:
//! curvature is turning angle per arc length at each vertex, and its two
//! arc-length derivatives come from centered differences aware of
//! non-uniform spacing. Closed curves wrap cyclically; open curves only
//! move vertices with full stencils, which pins a three-vertex collar at
//! each end.
//!
//! Explicit time stepping under the fourth-order parabolic stability rule
//! `dt ≤ c·(min spacing)⁴` with `c = 0.1`. A step whose displacement
//! exceeds half the local spacing is rejected with a suggested `dt`.

use crate::profile::Curve;
use serde::{Deserialize, Serialize};

/// Stability constant of the explicit scheme.
pub const STABILITY_FACTOR: f64 = 0.1;

#[derive(Debug, thiserror::Error)]
pub enum FlowError {
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("step rejected (displacement beyond half the local spacing); suggested dt = {suggested_dt:e}")]
    StepRejected { suggested_dt: f64 },
    #[error("domain error: {0}")]
    Domain(String),
}

/// A discrete curve evolving under the flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowState {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Cyclic vertex list without a duplicated endpoint when true.
    pub closed: bool,
    /// Simulated time.
    pub t: f64,
    /// Step size used by [`step_flow`].
    pub dt: f64,
}

impl FlowState {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, closed: bool, dt: f64) -> Result<Self, FlowError> {
        if xs.len() != ys.len() {
            return Err(FlowError::Domain(format!(
                "coordinate lengths differ: {} vs {}",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 8 {
            return Err(FlowError::Domain(format!(
                "need at least 8 vertices, got {}",
                xs.len()
            )));
        }
        let state = Self {
            xs,
            ys,
            closed,
            t: 0.0,
            dt,
        };
        state.check_distinct()?;
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    fn check_distinct(&self) -> Result<(), FlowError> {
        let n = self.len();
        let edges = if self.closed { n } else { n - 1 };
        for e in 0..edges {
            let j = (e + 1) % n;
            if self.xs[e] == self.xs[j] && self.ys[e] == self.ys[j] {
                return Err(FlowError::Degenerate(format!(
                    "coincident consecutive vertices at index {e}"
                )));
            }
        }
        Ok(())
    }

    /// Polyline length (chord sum).
    pub fn length(&self) -> f64 {
        let n = self.len();
        let edges = if self.closed { n } else { n - 1 };
        let mut sum = 0.0;
        for e in 0..edges {
            let j = (e + 1) % n;
            let dx = self.xs[j] - self.xs[e];
            let dy = self.ys[j] - self.ys[e];
            sum += (dx * dx + dy * dy).sqrt();
        }
        sum
    }

    /// Shoelace signed area; closed curves only.
    pub fn signed_area(&self) -> Option<f64> {
        if !self.closed {
            return None;
        }
        let n = self.len();
        let mut acc = 0.0;
        for i in 0..n {
            let j = (i + 1) % n;
            acc += self.xs[i] * self.ys[j] - self.xs[j] * self.ys[i];
        }
        Some(0.5 * acc)
    }

    /// Largest stable explicit step for the current spacing.
    pub fn stable_dt(&self) -> f64 {
        let n = self.len();
        let edges = if self.closed { n } else { n - 1 };
        let mut min_sq = f64::INFINITY;
        for e in 0..edges {
            let j = (e + 1) % n;
            let dx = self.xs[j] - self.xs[e];
            let dy = self.ys[j] - self.ys[e];
            min_sq = min_sq.min(dx * dx + dy * dy);
        }
        let h = min_sq.sqrt();
        STABILITY_FACTOR * h * h * h * h
    }
}

/// Per-vertex discrete geometry.
#[derive(Debug, Clone)]
pub struct VertexGeometry {
    /// Cumulative arc length at each vertex (chord sums, from vertex 0).
    pub s: Vec<f64>,
    /// Unit tangent from centered vertex differences.
    pub tangent: Vec<(f64, f64)>,
    /// Unit normal: the tangent rotated by +π/2.
    pub normal: Vec<(f64, f64)>,
    /// Unwrapped tangent angle.
    pub theta: Vec<f64>,
    pub kappa: Vec<f64>,
    pub kappa_s: Vec<f64>,
    pub kappa_ss: Vec<f64>,
    /// Index range with full centered stencils; entries outside it use
    /// one-sided fills and are low accuracy. Covers everything when closed.
    pub full_accuracy: (usize, usize),
}

/// Discrete geometry of a polyline: tangents from centered differences of
/// vertices, θ unwrapped, κ as turning angle per arc length, κ_s and κ_ss
/// by non-uniform centered differences. Open ends fall back to one-sided
/// values, flagged through `full_accuracy`.
pub fn discrete_geometry(state: &FlowState) -> Result<VertexGeometry, FlowError> {
    state.check_distinct()?;
    let n = state.len();
    let xs = &state.xs;
    let ys = &state.ys;

    // edge vectors and lengths; edge e joins vertex e to e+1 (mod n)
    let edges = if state.closed { n } else { n - 1 };
    let mut ex = vec![0.0; edges];
    let mut ey = vec![0.0; edges];
    let mut el = vec![0.0; edges];
    for e in 0..edges {
        let j = (e + 1) % n;
        ex[e] = xs[j] - xs[e];
        ey[e] = ys[j] - ys[e];
        el[e] = (ex[e] * ex[e] + ey[e] * ey[e]).sqrt();
    }

    let mut s = vec![0.0; n];
    for i in 1..n {
        s[i] = s[i - 1] + el[i - 1];
    }

    // tangents and normals from centered differences (one-sided at open ends)
    let mut tangent = vec![(0.0, 0.0); n];
    let mut normal = vec![(0.0, 0.0); n];
    let mut theta = vec![0.0; n];
    let mut prev_angle: Option<f64> = None;
    for i in 0..n {
        let (dx, dy) = if state.closed {
            let im = (i + n - 1) % n;
            (ex[im] + ex[i % n], ey[im] + ey[i % n])
        } else if i == 0 {
            (ex[0], ey[0])
        } else if i == n - 1 {
            (ex[n - 2], ey[n - 2])
        } else {
            (ex[i - 1] + ex[i], ey[i - 1] + ey[i])
        };
        let len = (dx * dx + dy * dy).sqrt();
        if len == 0.0 {
            return Err(FlowError::Degenerate(format!(
                "vanishing centered tangent at vertex {i}"
            )));
        }
        let t = (dx / len, dy / len);
        tangent[i] = t;
        normal[i] = (-t.1, t.0);
        let mut a = dy.atan2(dx);
        if let Some(p) = prev_angle {
            while a - p > std::f64::consts::PI {
                a -= 2.0 * std::f64::consts::PI;
            }
            while a - p < -std::f64::consts::PI {
                a += 2.0 * std::f64::consts::PI;
            }
        }
        prev_angle = Some(a);
        theta[i] = a;
    }

    // curvature: turning angle between adjacent edges over the mean spacing
    let mut kappa = vec![0.0; n];
    let vertex_range = if state.closed { 0..n } else { 1..n - 1 };
    for i in vertex_range {
        let em = if state.closed { (i + n - 1) % n } else { i - 1 };
        let e = i % n;
        kappa[i] = turning(ex[em], ey[em], el[em], ex[e], ey[e], el[e]) / (0.5 * (el[em] + el[e]));
    }
    if !state.closed {
        kappa[0] = kappa[1];
        kappa[n - 1] = kappa[n - 2];
    }

    let kappa_s = centered_derivative(&kappa, &el, state.closed);
    let kappa_ss = centered_derivative(&kappa_s, &el, state.closed);

    let full_accuracy = if state.closed { (0, n - 1) } else { (3, n - 4) };
    Ok(VertexGeometry {
        s,
        tangent,
        normal,
        theta,
        kappa,
        kappa_s,
        kappa_ss,
        full_accuracy,
    })
}

/// Signed turning angle from edge `a` to edge `b`, given their lengths.
/// Series evaluation of asin for the generic small-angle case, exact
/// arctangent when the edges fold back.
#[inline]
fn turning(ax: f64, ay: f64, al: f64, bx: f64, by: f64, bl: f64) -> f64 {
    let cross = ax * by - ay * bx;
    let dot = ax * bx + ay * by;
    if dot <= 0.0 {
        return cross.atan2(dot);
    }
    let z = cross / (al * bl);
    if z.abs() >= 0.2 {
        return cross.atan2(dot);
    }
    // asin series through z^7: error below 1e-7·z, well under stencil error
    let z2 = z * z;
    z * (1.0 + z2 * (1.0 / 6.0 + z2 * (3.0 / 40.0 + z2 * (15.0 / 336.0))))
}

/// Non-uniform second-order centered first derivative of per-vertex data
/// with respect to arc length; one-sided copies at open ends.
fn centered_derivative(f: &[f64], el: &[f64], closed: bool) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    let range = if closed { 0..n } else { 1..n - 1 };
    for i in range {
        let hm = if closed {
            el[(i + n - 1) % n]
        } else {
            el[i - 1]
        };
        let hp = el[i % el.len().max(1)];
        let (fm, fp) = if closed {
            (f[(i + n - 1) % n], f[(i + 1) % n])
        } else {
            (f[i - 1], f[i + 1])
        };
        out[i] = (fp * hm * hm - fm * hp * hp + f[i] * (hp * hp - hm * hm)) / (hm * hp * (hm + hp));
    }
    if !closed {
        out[0] = out[1];
        out[n - 1] = out[n - 2];
    }
    out
}

/// One explicit step: each movable vertex advances by `dt·(-κ_ss)·N`.
///
/// Closed curves move every vertex; open curves move only the full-stencil
/// interior, leaving a three-vertex collar fixed at each end. Fails if any
/// displacement exceeds half the local spacing.
pub fn step_flow(state: &FlowState) -> Result<FlowState, FlowError> {
    let mut next = state.clone();
    step_flow_in_place(&mut next)?;
    Ok(next)
}

/// In-place variant of [`step_flow`] for long runs; uses scratch buffers.
pub fn step_flow_in_place(state: &mut FlowState) -> Result<(), FlowError> {
    let mut scratch = FlowScratch::default();
    step_flow_with_scratch(state, &mut scratch)
}

/// Reusable buffers for the stepping hot loop.
#[derive(Default)]
pub struct FlowScratch {
    ex: Vec<f64>,
    ey: Vec<f64>,
    el: Vec<f64>,
    inv_el: Vec<f64>,
    inv_pair: Vec<f64>,
    kappa: Vec<f64>,
    ks: Vec<f64>,
    kss: Vec<f64>,
}

pub fn step_flow_with_scratch(
    state: &mut FlowState,
    scratch: &mut FlowScratch,
) -> Result<(), FlowError> {
    let n = state.len();
    if n < 8 {
        return Err(FlowError::Domain(format!(
            "need at least 8 vertices, got {n}"
        )));
    }
    let dt = state.dt;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(FlowError::Domain(format!("dt must be positive, got {dt}")));
    }
    if state.closed {
        step_closed(state, scratch, dt)
    } else {
        step_open(state, scratch, dt)
    }
}

fn step_open(state: &mut FlowState, sc: &mut FlowScratch, dt: f64) -> Result<(), FlowError> {
    let n = state.len();
    let ne = n - 1;
    sc.ex.resize(ne, 0.0);
    sc.ey.resize(ne, 0.0);
    sc.el.resize(ne, 0.0);
    sc.inv_el.resize(ne, 0.0);
    sc.inv_pair.resize(n, 0.0);
    sc.kappa.resize(n, 0.0);
    sc.ks.resize(n, 0.0);
    sc.kss.resize(n, 0.0);
    assert!(n >= 8 && state.xs.len() == n && state.ys.len() == n);

    // Open-curve stepping is the long-run path (the translation test takes
    // ~1e7 steps), so the passes below use unchecked indexing. Safety: all
    // buffers are sized above; every index stays in [0, ne) for edge data
    // and [0, n) for vertex data by the loop bounds.
    let mut min_el_sq = f64::INFINITY;
    let mut max_z2: f64 = 0.0;
    let mut min_dot: f64 = f64::INFINITY;
    let half_min_sq;
    let mut max_disp_sq: f64 = 0.0;
    unsafe {
        let xs = state.xs.as_mut_ptr();
        let ys = state.ys.as_mut_ptr();
        let ex = sc.ex.as_mut_ptr();
        let ey = sc.ey.as_mut_ptr();
        let el = sc.el.as_mut_ptr();
        let inv_el = sc.inv_el.as_mut_ptr();
        let inv_pair = sc.inv_pair.as_mut_ptr();
        let kappa = sc.kappa.as_mut_ptr();
        let ks = sc.ks.as_mut_ptr();
        let kss = sc.kss.as_mut_ptr();

        for e in 0..ne {
            let dx = *xs.add(e + 1) - *xs.add(e);
            let dy = *ys.add(e + 1) - *ys.add(e);
            let lsq = dx * dx + dy * dy;
            min_el_sq = min_el_sq.min(lsq);
            let l = lsq.sqrt();
            *ex.add(e) = dx;
            *ey.add(e) = dy;
            *el.add(e) = l;
            *inv_el.add(e) = 1.0 / l;
        }
        if min_el_sq == 0.0 {
            return Err(FlowError::Degenerate(
                "coincident consecutive vertices".into(),
            ));
        }

        // branch-free small-angle turning; fold-backs are re-done exactly
        for i in 1..n - 1 {
            let (em, e) = (i - 1, i);
            let cross = *ex.add(em) * *ey.add(e) - *ey.add(em) * *ex.add(e);
            let dot = *ex.add(em) * *ex.add(e) + *ey.add(em) * *ey.add(e);
            let z = cross * *inv_el.add(em) * *inv_el.add(e);
            let z2 = z * z;
            max_z2 = max_z2.max(z2);
            min_dot = min_dot.min(dot);
            let dth = z * (1.0 + z2 * (ASIN3 + z2 * (ASIN5 + z2 * ASIN7)));
            let ip = 1.0 / (*el.add(em) + *el.add(e));
            *inv_pair.add(i) = ip;
            *kappa.add(i) = 2.0 * dth * ip;
        }
        if max_z2 > 0.04 || min_dot <= 0.0 {
            // large turning angles: recompute the curvature pass exactly
            for i in 1..n - 1 {
                let (em, e) = (i - 1, i);
                *kappa.add(i) =
                    2.0 * turning(
                        *ex.add(em),
                        *ey.add(em),
                        *el.add(em),
                        *ex.add(e),
                        *ey.add(e),
                        *el.add(e),
                    ) * *inv_pair.add(i);
            }
        }
        *kappa.add(0) = *kappa.add(1);
        *kappa.add(n - 1) = *kappa.add(n - 2);

        for i in 2..n - 2 {
            let hm = *el.add(i - 1);
            let hp = *el.add(i);
            let w = *inv_el.add(i - 1) * *inv_el.add(i) * *inv_pair.add(i);
            *ks.add(i) = (*kappa.add(i + 1) * hm * hm - *kappa.add(i - 1) * hp * hp
                + *kappa.add(i) * (hp * hp - hm * hm))
                * w;
        }
        for i in 3..n - 3 {
            let hm = *el.add(i - 1);
            let hp = *el.add(i);
            let w = *inv_el.add(i - 1) * *inv_el.add(i) * *inv_pair.add(i);
            *kss.add(i) = (*ks.add(i + 1) * hm * hm - *ks.add(i - 1) * hp * hp
                + *ks.add(i) * (hp * hp - hm * hm))
                * w;
        }

        // Move the full-stencil interior; the 3-vertex collars stay fixed.
        // |e_{i-1} + e_i| = (el_{i-1} + el_i)·(1 + O(turn²)), an error far
        // below the stencil truncation, so inv_pair doubles as the inverse
        // tangent norm.
        half_min_sq = 0.25 * min_el_sq;
        for i in 3..n - 3 {
            let tx = *ex.add(i - 1) + *ex.add(i);
            let ty = *ey.add(i - 1) + *ey.add(i);
            let v = -*kss.add(i) * dt * *inv_pair.add(i);
            let dx = -v * ty;
            let dy = v * tx;
            max_disp_sq = max_disp_sq.max(dx * dx + dy * dy);
            *xs.add(i) += dx;
            *ys.add(i) += dy;
        }
    }
    if max_disp_sq > half_min_sq {
        return Err(FlowError::StepRejected {
            suggested_dt: STABILITY_FACTOR * min_el_sq * min_el_sq,
        });
    }
    state.t += dt;
    Ok(())
}

const ASIN3: f64 = 1.0 / 6.0;
const ASIN5: f64 = 3.0 / 40.0;
const ASIN7: f64 = 15.0 / 336.0;

/// Two-lane stepping for long open-curve runs.
///
/// The vertex range splits at the midpoint; each lane computes the full
/// geometry chain on its half plus a four-vertex halo into private buffers,
/// so the only synchronization is a spin barrier before the move pass (all
/// reads of vertex positions are done) and one after it (all writes are
/// done). Every vertex is computed from the same inputs with the same
/// arithmetic as the sequential path, and reductions are combined in a
/// fixed order, so results are bit-identical.
mod parallel {
    use super::{FlowError, FlowState, ASIN3, ASIN5, ASIN7, STABILITY_FACTOR};
    use std::cell::UnsafeCell;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct SpinBarrier {
        count: AtomicUsize,
        generation: AtomicUsize,
    }

    impl SpinBarrier {
        fn new() -> Self {
            Self {
                count: AtomicUsize::new(0),
                generation: AtomicUsize::new(0),
            }
        }

        /// Two-party sense-reversing barrier. Expected waits are a few
        /// microseconds, so spin well past them before yielding.
        fn wait(&self) {
            let gen = self.generation.load(Ordering::Acquire);
            if self.count.fetch_add(1, Ordering::AcqRel) == 1 {
                self.count.store(0, Ordering::Relaxed);
                self.generation.store(gen + 1, Ordering::Release);
            } else {
                let mut spins = 0u32;
                while self.generation.load(Ordering::Acquire) == gen {
                    spins += 1;
                    if spins > 3_000_000 {
                        std::thread::yield_now();
                    } else {
                        std::hint::spin_loop();
                    }
                }
            }
        }
    }

    #[derive(Clone, Copy, Default)]
    struct Partial {
        min_el_sq: f64,
        max_z2: f64,
        min_dot: f64,
        max_disp_sq: f64,
    }

    struct SharedSlots([UnsafeCell<Partial>; 2]);
    unsafe impl Sync for SharedSlots {}

    struct SharedXY {
        xs: *mut f64,
        ys: *mut f64,
    }
    unsafe impl Send for SharedXY {}
    unsafe impl Sync for SharedXY {}

    #[derive(Clone, Copy, PartialEq)]
    enum Outcome {
        Done,
        Degenerate,
        /// Turning angles left the series' domain; redo sequentially.
        Slow,
        Rejected {
            suggested_dt: f64,
        },
    }

    struct LaneBufs {
        ex: Vec<f64>,
        ey: Vec<f64>,
        el: Vec<f64>,
        inv_el: Vec<f64>,
        inv_pair: Vec<f64>,
        kappa: Vec<f64>,
        ks: Vec<f64>,
        kss: Vec<f64>,
    }

    impl LaneBufs {
        fn new(n: usize) -> Self {
            Self {
                ex: vec![0.0; n],
                ey: vec![0.0; n],
                el: vec![0.0; n],
                inv_el: vec![0.0; n],
                inv_pair: vec![0.0; n],
                kappa: vec![0.0; n],
                ks: vec![0.0; n],
                kss: vec![0.0; n],
            }
        }
    }

    /// Run `steps` explicit steps (the last one with `dt_last`) on an open
    /// curve. Falls back to the caller on `Slow`.
    pub(super) fn run_open_steps(
        state: &mut FlowState,
        steps: usize,
        dt: f64,
        dt_last: f64,
    ) -> Result<(), FlowError> {
        let n = state.len();
        let mid = n / 2;
        if n < 64 || mid < 16 || n - mid < 16 {
            return run_serial(state, steps, dt, dt_last);
        }
        let t0 = state.t;
        let backup_xs = state.xs.clone();
        let backup_ys = state.ys.clone();

        let shared = SharedXY {
            xs: state.xs.as_mut_ptr(),
            ys: state.ys.as_mut_ptr(),
        };
        let barrier = SpinBarrier::new();
        let slots = SharedSlots([
            UnsafeCell::new(Partial::default()),
            UnsafeCell::new(Partial::default()),
        ]);

        // lane 0 moves [3, mid), lane 1 moves [mid, n-3)
        let outcome = std::thread::scope(|scope| {
            let worker = scope.spawn(|| {
                lane_loop(
                    &shared,
                    n,
                    (mid, n - 3),
                    1,
                    steps,
                    dt,
                    dt_last,
                    &barrier,
                    &slots,
                )
            });
            let main = lane_loop(
                &shared,
                n,
                (3, mid),
                0,
                steps,
                dt,
                dt_last,
                &barrier,
                &slots,
            );
            let other = worker.join().expect("flow lane panicked");
            debug_assert!(main == other);
            main
        });

        match outcome {
            Outcome::Done => {
                state.t = t0 + (steps.saturating_sub(1)) as f64 * dt + dt_last;
                Ok(())
            }
            Outcome::Slow => {
                state.xs.copy_from_slice(&backup_xs);
                state.ys.copy_from_slice(&backup_ys);
                state.t = t0;
                run_serial(state, steps, dt, dt_last)
            }
            Outcome::Degenerate => Err(FlowError::Degenerate(
                "coincident consecutive vertices".into(),
            )),
            Outcome::Rejected { suggested_dt } => Err(FlowError::StepRejected { suggested_dt }),
        }
    }

    fn run_serial(
        state: &mut FlowState,
        steps: usize,
        dt: f64,
        dt_last: f64,
    ) -> Result<(), FlowError> {
        let mut scratch = super::FlowScratch::default();
        for k in 0..steps {
            state.dt = if k + 1 == steps { dt_last } else { dt };
            super::step_flow_with_scratch(state, &mut scratch)?;
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn lane_loop(
        shared: &SharedXY,
        n: usize,
        move_range: (usize, usize),
        lane: usize,
        steps: usize,
        dt: f64,
        dt_last: f64,
        barrier: &SpinBarrier,
        slots: &SharedSlots,
    ) -> Outcome {
        let (a, b) = move_range;
        // halo extents: edges [a-3, b+2), κ and inv_pair [a-2, b+2),
        // κ_s [a-1, b+1), κ_ss [a, b)
        let e_lo = a - 3;
        let e_hi = (b + 2).min(n - 1);
        let k_lo = a - 2;
        let k_hi = (b + 2).min(n - 1);
        let s_lo = a - 1;
        let s_hi = (b + 1).min(n - 2);

        let mut bufs = LaneBufs::new(n);
        let xs = shared.xs;
        let ys = shared.ys;

        for step in 0..steps {
            let step_dt = if step + 1 == steps { dt_last } else { dt };
            let mut part = Partial {
                min_el_sq: f64::INFINITY,
                max_z2: 0.0,
                min_dot: f64::INFINITY,
                max_disp_sq: 0.0,
            };

            // Safety: geometry reads xs/ys only (stable between barriers)
            // and writes this lane's private buffers.
            unsafe {
                let ex = bufs.ex.as_mut_ptr();
                let ey = bufs.ey.as_mut_ptr();
                let el = bufs.el.as_mut_ptr();
                let inv_el = bufs.inv_el.as_mut_ptr();
                let inv_pair = bufs.inv_pair.as_mut_ptr();
                let kappa = bufs.kappa.as_mut_ptr();
                let ks = bufs.ks.as_mut_ptr();
                let kss = bufs.kss.as_mut_ptr();

                for e in e_lo..e_hi {
                    let dx = *xs.add(e + 1) - *xs.add(e);
                    let dy = *ys.add(e + 1) - *ys.add(e);
                    let lsq = dx * dx + dy * dy;
                    part.min_el_sq = part.min_el_sq.min(lsq);
                    let l = lsq.sqrt();
                    *ex.add(e) = dx;
                    *ey.add(e) = dy;
                    *el.add(e) = l;
                    *inv_el.add(e) = 1.0 / l;
                }
                for i in k_lo..k_hi {
                    let (em, e) = (i - 1, i);
                    let cross = *ex.add(em) * *ey.add(e) - *ey.add(em) * *ex.add(e);
                    let dot = *ex.add(em) * *ex.add(e) + *ey.add(em) * *ey.add(e);
                    let z = cross * *inv_el.add(em) * *inv_el.add(e);
                    let z2 = z * z;
                    part.max_z2 = part.max_z2.max(z2);
                    part.min_dot = part.min_dot.min(dot);
                    let dth = z * (1.0 + z2 * (ASIN3 + z2 * (ASIN5 + z2 * ASIN7)));
                    let ip = 1.0 / (*el.add(em) + *el.add(e));
                    *inv_pair.add(i) = ip;
                    *kappa.add(i) = 2.0 * dth * ip;
                }
                for i in s_lo..s_hi {
                    let hm = *el.add(i - 1);
                    let hp = *el.add(i);
                    let w = *inv_el.add(i - 1) * *inv_el.add(i) * *inv_pair.add(i);
                    *ks.add(i) = (*kappa.add(i + 1) * hm * hm - *kappa.add(i - 1) * hp * hp
                        + *kappa.add(i) * (hp * hp - hm * hm))
                        * w;
                }
                for i in a..b {
                    let hm = *el.add(i - 1);
                    let hp = *el.add(i);
                    let w = *inv_el.add(i - 1) * *inv_el.add(i) * *inv_pair.add(i);
                    *kss.add(i) = (*ks.add(i + 1) * hm * hm - *ks.add(i - 1) * hp * hp
                        + *ks.add(i) * (hp * hp - hm * hm))
                        * w;
                }
                // publish pre-move partials
                (*slots.0[lane].get()).min_el_sq = part.min_el_sq;
                (*slots.0[lane].get()).max_z2 = part.max_z2;
                (*slots.0[lane].get()).min_dot = part.min_dot;
            }

            barrier.wait();

            // combined decision, identical on both lanes (fixed order)
            let (g_min_el, g_max_z2, g_min_dot) = unsafe {
                let p0 = &*slots.0[0].get();
                let p1 = &*slots.0[1].get();
                (
                    p0.min_el_sq.min(p1.min_el_sq),
                    p0.max_z2.max(p1.max_z2),
                    p0.min_dot.min(p1.min_dot),
                )
            };
            if g_min_el == 0.0 {
                return Outcome::Degenerate;
            }
            if g_max_z2 > 0.04 || g_min_dot <= 0.0 {
                return Outcome::Slow;
            }

            // Safety: this lane writes xs/ys only in [a, b), disjoint from
            // the other lane's range; geometry reads finished at the barrier.
            unsafe {
                let ex = bufs.ex.as_ptr();
                let ey = bufs.ey.as_ptr();
                let inv_pair = bufs.inv_pair.as_ptr();
                let kss = bufs.kss.as_ptr();
                for i in a..b {
                    let tx = *ex.add(i - 1) + *ex.add(i);
                    let ty = *ey.add(i - 1) + *ey.add(i);
                    let v = -*kss.add(i) * step_dt * *inv_pair.add(i);
                    let dx = -v * ty;
                    let dy = v * tx;
                    part.max_disp_sq = part.max_disp_sq.max(dx * dx + dy * dy);
                    *xs.add(i) += dx;
                    *ys.add(i) += dy;
                }
                (*slots.0[lane].get()).max_disp_sq = part.max_disp_sq;
            }

            barrier.wait();

            let g_disp = unsafe {
                let p0 = &*slots.0[0].get();
                let p1 = &*slots.0[1].get();
                p0.max_disp_sq.max(p1.max_disp_sq)
            };
            if g_disp > 0.25 * g_min_el {
                return Outcome::Rejected {
                    suggested_dt: STABILITY_FACTOR * g_min_el * g_min_el,
                };
            }
        }
        Outcome::Done
    }
}

fn step_closed(state: &mut FlowState, sc: &mut FlowScratch, dt: f64) -> Result<(), FlowError> {
    let n = state.len();
    let xs = &mut state.xs;
    let ys = &mut state.ys;
    sc.ex.resize(n, 0.0);
    sc.ey.resize(n, 0.0);
    sc.el.resize(n, 0.0);
    sc.inv_el.resize(n, 0.0);
    sc.inv_pair.resize(n, 0.0);
    sc.kappa.resize(n, 0.0);
    sc.ks.resize(n, 0.0);
    sc.kss.resize(n, 0.0);

    let mut min_el_sq = f64::INFINITY;
    for e in 0..n {
        let j = (e + 1) % n;
        let dx = xs[j] - xs[e];
        let dy = ys[j] - ys[e];
        let lsq = dx * dx + dy * dy;
        min_el_sq = min_el_sq.min(lsq);
        let l = lsq.sqrt();
        sc.ex[e] = dx;
        sc.ey[e] = dy;
        sc.el[e] = l;
        sc.inv_el[e] = 1.0 / l;
    }
    if min_el_sq == 0.0 {
        return Err(FlowError::Degenerate(
            "coincident consecutive vertices".into(),
        ));
    }

    let mut max_z2: f64 = 0.0;
    let mut min_dot: f64 = f64::INFINITY;
    for i in 0..n {
        let em = (i + n - 1) % n;
        let cross = sc.ex[em] * sc.ey[i] - sc.ey[em] * sc.ex[i];
        let dot = sc.ex[em] * sc.ex[i] + sc.ey[em] * sc.ey[i];
        let z = cross * sc.inv_el[em] * sc.inv_el[i];
        let z2 = z * z;
        max_z2 = max_z2.max(z2);
        min_dot = min_dot.min(dot);
        let dth = z * (1.0 + z2 * (ASIN3 + z2 * (ASIN5 + z2 * ASIN7)));
        let inv_pair = 1.0 / (sc.el[em] + sc.el[i]);
        sc.inv_pair[i] = inv_pair;
        sc.kappa[i] = 2.0 * dth * inv_pair;
    }
    if max_z2 > 0.04 || min_dot <= 0.0 {
        for i in 0..n {
            let em = (i + n - 1) % n;
            sc.kappa[i] =
                2.0 * turning(
                    sc.ex[em], sc.ey[em], sc.el[em], sc.ex[i], sc.ey[i], sc.el[i],
                ) * sc.inv_pair[i];
        }
    }

    for i in 0..n {
        let em = (i + n - 1) % n;
        let ip = (i + 1) % n;
        let hm = sc.el[em];
        let hp = sc.el[i];
        let w = sc.inv_el[em] * sc.inv_el[i] * sc.inv_pair[i];
        sc.ks[i] = (sc.kappa[ip] * hm * hm - sc.kappa[em] * hp * hp
            + sc.kappa[i] * (hp * hp - hm * hm))
            * w;
    }
    for i in 0..n {
        let em = (i + n - 1) % n;
        let ip = (i + 1) % n;
        let hm = sc.el[em];
        let hp = sc.el[i];
        let w = sc.inv_el[em] * sc.inv_el[i] * sc.inv_pair[i];
        sc.kss[i] =
            (sc.ks[ip] * hm * hm - sc.ks[em] * hp * hp + sc.ks[i] * (hp * hp - hm * hm)) * w;
    }

    let half_min_sq = 0.25 * min_el_sq;
    let mut max_disp_sq: f64 = 0.0;
    for i in 0..n {
        let em = (i + n - 1) % n;
        let tx = sc.ex[em] + sc.ex[i];
        let ty = sc.ey[em] + sc.ey[i];
        let v = -sc.kss[i] * dt * sc.inv_pair[i];
        let dx = -v * ty;
        let dy = v * tx;
        max_disp_sq = max_disp_sq.max(dx * dx + dy * dy);
        xs[i] += dx;
        ys[i] += dy;
    }
    if max_disp_sq > half_min_sq {
        return Err(FlowError::StepRejected {
            suggested_dt: STABILITY_FACTOR * min_el_sq * min_el_sq,
        });
    }
    state.t += dt;
    Ok(())
}

/// Resample a closed curve to uniform arc length (same vertex count) by
/// cubic interpolation through the four surrounding vertices. Changes the
/// parameterization only.
pub fn resample_uniform(state: &FlowState) -> Result<FlowState, FlowError> {
    if !state.closed {
        return Err(FlowError::Domain(
            "uniform resampling is defined for closed curves".into(),
        ));
    }
    let n = state.len();
    let mut s = vec![0.0; n + 1];
    for i in 0..n {
        let j = (i + 1) % n;
        let dx = state.xs[j] - state.xs[i];
        let dy = state.ys[j] - state.ys[i];
        s[i + 1] = s[i] + (dx * dx + dy * dy).sqrt();
    }
    let total = s[n];
    let target = total / n as f64;
    let mut xs = vec![0.0; n];
    let mut ys = vec![0.0; n];
    let at = |idx: i64| -> (f64, f64, f64) {
        // vertex position and arc parameter, cyclically extended
        let m = idx.rem_euclid(n as i64) as usize;
        let wrap = (idx - m as i64) / n as i64;
        (state.xs[m], state.ys[m], s[m] + wrap as f64 * total)
    };
    let mut seg = 0usize;
    for k in 0..n {
        let tk = k as f64 * target;
        while seg + 1 <= n && s[seg + 1] < tk {
            seg += 1;
        }
        // cubic Lagrange through vertices seg-1 .. seg+2 in arc parameter
        let pts: Vec<(f64, f64, f64)> = (-1..3).map(|o| at(seg as i64 + o)).collect();
        let (mut x, mut y) = (0.0, 0.0);
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (tk - pts[b].2) / (pts[a].2 - pts[b].2);
                }
            }
            x += w * pts[a].0;
            y += w * pts[a].1;
        }
        xs[k] = x;
        ys[k] = y;
    }
    let out = FlowState {
        xs,
        ys,
        closed: true,
        t: state.t,
        dt: state.dt,
    };
    out.check_distinct()?;
    Ok(out)
}

/// Summary of one flow run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowDiagnostics {
    pub length: f64,
    /// Shoelace signed area; closed inputs only.
    pub signed_area: Option<f64>,
    /// Max over measured vertices of the distance to the same-index
    /// reference vertex (the reference is the translated input for
    /// translation tests, the initial state for stationarity tests).
    pub max_displacement_from_reference: f64,
    /// Max over measured vertices of the distance to the reference
    /// polyline as a point set; separates shape deviation from
    /// parameterization drift.
    pub max_distance_to_reference_curve: Option<f64>,
    pub steps: usize,
    pub dt: f64,
}

/// Evolve the (open) profile curve for time `t_total` with pinned collars,
/// then compare against the input translated one unit of time upward.
///
/// Both deviation metrics are measured over the interior, excluding 10% of
/// the vertices at each end: the same-index displacement (which a curve
/// sliding along itself does not null out) and the distance to the
/// translated polyline as a set (the shape-level translator error).
///
/// Long runs split the per-vertex work over two lanes; results are
/// bit-identical to the sequential path.
pub fn run_translation_test(
    curve: &Curve,
    t_total: f64,
    dt: f64,
) -> Result<FlowDiagnostics, FlowError> {
    if !(t_total.is_finite() && t_total >= 0.0) {
        return Err(FlowError::Domain(format!(
            "t_total must be nonnegative, got {t_total}"
        )));
    }
    let xs: Vec<f64> = curve.vertices.iter().map(|v| v.x).collect();
    let ys: Vec<f64> = curve.vertices.iter().map(|v| v.y).collect();
    let mut state = FlowState::new(xs.clone(), ys.clone(), false, dt)?;

    let steps = if t_total == 0.0 {
        0
    } else {
        (t_total / dt - 1e-9).ceil().max(1.0) as usize
    };
    let dt_last = t_total - (steps.saturating_sub(1)) as f64 * dt;
    if steps > 50_000 && state.len() >= 384 {
        parallel::run_open_steps(&mut state, steps, dt, dt_last)?;
    } else {
        let mut scratch = FlowScratch::default();
        for k in 0..steps {
            // last step closes the gap to t_total exactly
            if k + 1 == steps {
                state.dt = dt_last;
            }
            step_flow_with_scratch(&mut state, &mut scratch)?;
        }
    }

    let n = state.len();
    let buffer = ((n as f64) * 0.1).ceil() as usize;
    let lo = buffer;
    let hi = n - buffer;
    let mut max_disp: f64 = 0.0;
    let mut max_set: f64 = 0.0;
    // candidate reference segments for the set distance live within the
    // translated arc window around the same index
    let window = (t_total / curve.ds).ceil() as usize + 8;
    for i in lo..hi {
        let px = state.xs[i];
        let py = state.ys[i];
        let rx = xs[i];
        let ry = ys[i] + t_total;
        let d = ((px - rx).powi(2) + (py - ry).powi(2)).sqrt();
        max_disp = max_disp.max(d);

        let j0 = i.saturating_sub(window);
        let j1 = (i + window).min(n - 2);
        let mut best = f64::INFINITY;
        for j in j0..=j1 {
            let (ax, ay) = (xs[j], ys[j] + t_total);
            let (bx, by) = (xs[j + 1], ys[j + 1] + t_total);
            best = best.min(point_segment_distance(px, py, ax, ay, bx, by));
        }
        max_set = max_set.max(best);
    }

    Ok(FlowDiagnostics {
        length: state.length(),
        signed_area: None,
        max_displacement_from_reference: max_disp,
        max_distance_to_reference_curve: Some(max_set),
        steps,
        dt,
    })
}

fn point_segment_distance(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let abx = bx - ax;
    let aby = by - ay;
    let denom = abx * abx + aby * aby;
    let t = if denom == 0.0 {
        0.0
    } else {
        (((px - ax) * abx + (py - ay) * aby) / denom).clamp(0.0, 1.0)
    };
    let cx = ax + t * abx;
    let cy = ay + t * aby;
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

/// Regular n-gon on a circle of radius `r` (closed).
pub fn make_circle(n: usize, r: f64) -> Result<FlowState, FlowError> {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for k in 0..n {
        let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        xs.push(r * t.cos());
        ys.push(r * t.sin());
    }
    FlowState::new(xs, ys, true, 0.0)
}

/// Ellipse with semi-axes `a`, `b`, sampled uniformly in parameter (closed).
pub fn make_ellipse(n: usize, a: f64, b: f64) -> Result<FlowState, FlowError> {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for k in 0..n {
        let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        xs.push(a * t.cos());
        ys.push(b * t.sin());
    }
    FlowState::new(xs, ys, true, 0.0)
}

/// Vertical segment of given length centered at the origin (open).
pub fn make_vertical_line(n: usize, length: f64) -> Result<FlowState, FlowError> {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for k in 0..n {
        xs.push(0.0);
        ys.push(length * (k as f64 / (n - 1) as f64 - 0.5));
    }
    FlowState::new(xs, ys, false, 0.0)
}

/// Open flow state from a profile curve.
pub fn state_from_curve(curve: &Curve, dt: f64) -> Result<FlowState, FlowError> {
    FlowState::new(
        curve.vertices.iter().map(|v| v.x).collect(),
        curve.vertices.iter().map(|v| v.y).collect(),
        false,
        dt,
    )
}
