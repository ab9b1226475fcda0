//! From the bounded angle solution to the planar profile curve.
//!
//! The shooting stage produces θ on `[0, S]` with odd initial data; the
//! equation is even, so `θ(-s) = -θ(s)` extends it to the whole line. The
//! curve is the arc-length integral of `(cos θ, sin θ)` from the origin,
//! its curvature data reads straight off the trajectory, and an independent
//! finite-difference residual checks the translator property from the curve
//! vertices alone.

use crate::ode::{IntegratorSettings, OdeError, PhaseState, RhsKind, Trajectory};
use crate::shooting::ShootReport;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// Anything that can answer θ and its derivatives at a signed arc length.
pub trait AngleSource {
    fn eval_angle(&self, s: f64) -> Result<PhaseState, ProfileError>;
    /// Covered span `[-S, S]`.
    fn half_span(&self) -> f64;
}

/// The odd-reflected angle function of the bounded solution.
///
/// Querying `s < 0` returns `(-θ(-s), θ'(-s), -θ''(-s))`: value and second
/// derivative are odd, the first derivative (the curvature) is even. At the
/// origin `θ(0) = 0` and `θ''(0) = 0` hold exactly by the initial data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AngleProfile {
    pub a_star: f64,
    /// Half-span `S`: the certified horizon of the underlying trajectory.
    pub s_max: f64,
    half: Trajectory,
}

impl AngleProfile {
    pub fn half(&self) -> &Trajectory {
        &self.half
    }

    pub fn theta(&self, s: f64) -> Result<f64, ProfileError> {
        Ok(self.eval_angle(s)?.value)
    }
}

impl AngleSource for AngleProfile {
    fn eval_angle(&self, s: f64) -> Result<PhaseState, ProfileError> {
        if s >= 0.0 {
            Ok(self.half.eval(s)?)
        } else {
            let p = self.half.eval(-s)?;
            Ok(PhaseState {
                s,
                value: -p.value,
                d1: p.d1,
                d2: -p.d2,
            })
        }
    }

    fn half_span(&self) -> f64 {
        self.s_max
    }
}

/// Arc-length-tagged planar polyline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Curve {
    pub vertices: Vec<Vertex>,
    /// Sample step the curve was built with.
    pub ds: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Vertex {
    pub s: f64,
    pub x: f64,
    pub y: f64,
}

/// Per-sample curvature data of an angle profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureProfile {
    pub samples: Vec<CurvatureSample>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub s: f64,
    pub kappa: f64,
    pub kappa_s: f64,
    pub kappa_ss: f64,
}

/// Certify a shooting report's trajectory as an angle solution of the
/// original equation and wrap it for odd-reflected evaluation.
///
/// The monotone-modified and original right-hand sides agree on `[0, π]`,
/// so a trajectory confined there solves the original equation; the
/// confinement is re-checked here on a dense grid.
pub fn assemble_theta(
    report: &ShootReport,
    settings: &IntegratorSettings,
) -> Result<AngleProfile, ProfileError> {
    if report.bounded_horizon <= 0.0 {
        return Err(ProfileError::Domain(format!(
            "bounded horizon must be positive, got {}",
            report.bounded_horizon
        )));
    }
    let (lo, hi) = report.trajectory.span();
    if hi < report.bounded_horizon || lo > 0.0 {
        return Err(ProfileError::Domain(format!(
            "trajectory span [{lo}, {hi}] does not cover [0, {}]",
            report.bounded_horizon
        )));
    }
    let tol = settings.event_tol;
    let step = settings.max_step / 4.0;
    let n = (report.bounded_horizon / step).ceil() as usize;
    for k in 0..=n {
        let s = (k as f64 * step).min(report.bounded_horizon);
        let u = report.trajectory.eval_value(s)?;
        if !(-tol..=PI + tol).contains(&u) {
            return Err(ProfileError::Certification(format!(
                "trajectory leaves [0, π] at s = {s}: u = {u}"
            )));
        }
    }
    Ok(AngleProfile {
        a_star: report.a_star,
        s_max: report.bounded_horizon,
        half: report.trajectory.clone(),
    })
}

/// Rebuild a certified angle profile from a stored critical slope:
/// re-integrate the monotone-modified equation and certify confinement the
/// same way [`assemble_theta`] does.
pub fn profile_from_slope(
    a_star: f64,
    horizon: f64,
    settings: &IntegratorSettings,
) -> Result<AngleProfile, ProfileError> {
    if !(a_star.is_finite() && a_star > 0.0) {
        return Err(ProfileError::Domain(format!(
            "critical slope must be positive, got {a_star}"
        )));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(ProfileError::Domain(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let trajectory = crate::ode::integrate(
        PhaseState::new(0.0, 0.0, a_star, 0.0),
        RhsKind::ModifiedF,
        &settings.with_horizon(horizon),
    )?;
    let tol = settings.event_tol;
    let step = settings.max_step / 4.0;
    let n = (horizon / step).ceil() as usize;
    for k in 0..=n {
        let s = (k as f64 * step).min(horizon);
        let u = trajectory.eval_value(s)?;
        if !(-tol..=PI + tol).contains(&u) {
            return Err(ProfileError::Certification(format!(
                "trajectory from slope {a_star} leaves [0, π] at s = {s}: u = {u}"
            )));
        }
    }
    Ok(AngleProfile {
        a_star,
        s_max: horizon,
        half: trajectory,
    })
}

/// Integrate the tangent field into the profile curve over `[-S, S]`.
///
/// Composite Simpson per sample step, with the midpoint from dense output;
/// the local error is O(Δs⁵), matching the dense accuracy without
/// re-solving. `γ(0) = (0, 0)` exactly.
pub fn build_profile<A: AngleSource + ?Sized>(profile: &A, ds: f64) -> Result<Curve, ProfileError> {
    build_profile_to(profile, ds, profile.half_span())
}

/// [`build_profile`] over the truncated span `[-half_span, half_span]`.
pub fn build_profile_to<A: AngleSource + ?Sized>(
    profile: &A,
    ds: f64,
    half_span: f64,
) -> Result<Curve, ProfileError> {
    if !(ds.is_finite() && ds > 0.0) {
        return Err(ProfileError::Domain(format!(
            "ds must be positive, got {ds}"
        )));
    }
    if !(half_span.is_finite() && half_span > 0.0 && half_span <= profile.half_span()) {
        return Err(ProfileError::Domain(format!(
            "half_span must lie in (0, {}], got {half_span}",
            profile.half_span()
        )));
    }
    let s_max = half_span;
    let n = (s_max / ds + 1e-9).floor() as usize;
    if n == 0 {
        return Err(ProfileError::Domain(format!(
            "ds = {ds} exceeds the half-span {s_max}"
        )));
    }
    let mut vertices = vec![
        Vertex {
            s: 0.0,
            x: 0.0,
            y: 0.0
        };
        2 * n + 1
    ];
    let tangent = |s: f64| -> Result<(f64, f64), ProfileError> {
        let th = profile.eval_angle(s)?.value;
        Ok((th.cos(), th.sin()))
    };
    // positive side, then negative side with its own evaluations
    let (mut x, mut y) = (0.0f64, 0.0f64);
    for k in 0..n {
        let s0 = k as f64 * ds;
        let s1 = (k + 1) as f64 * ds;
        let (c0, sn0) = tangent(s0)?;
        let (cm, snm) = tangent(s0 + 0.5 * ds)?;
        let (c1, sn1) = tangent(s1)?;
        x += ds / 6.0 * (c0 + 4.0 * cm + c1);
        y += ds / 6.0 * (sn0 + 4.0 * snm + sn1);
        vertices[n + k + 1] = Vertex { s: s1, x, y };
    }
    let (mut x, mut y) = (0.0f64, 0.0f64);
    for k in 0..n {
        let s0 = -(k as f64) * ds;
        let s1 = -((k + 1) as f64) * ds;
        let (c0, sn0) = tangent(s0)?;
        let (cm, snm) = tangent(s0 - 0.5 * ds)?;
        let (c1, sn1) = tangent(s1)?;
        x -= ds / 6.0 * (c0 + 4.0 * cm + c1);
        y -= ds / 6.0 * (sn0 + 4.0 * snm + sn1);
        vertices[n - k - 1] = Vertex { s: s1, x, y };
    }
    Ok(Curve { vertices, ds })
}

/// Curvature data along the reflected profile: `κ = θ'`, `κ_s = θ''`, and
/// `κ_ss = -cos θ`, which holds exactly along solutions.
pub fn curvature_profile(
    profile: &AngleProfile,
    ds: f64,
) -> Result<CurvatureProfile, ProfileError> {
    if !(ds.is_finite() && ds > 0.0) {
        return Err(ProfileError::Domain(format!(
            "ds must be positive, got {ds}"
        )));
    }
    let n = (profile.s_max / ds + 1e-9).floor() as i64;
    let mut samples = Vec::with_capacity((2 * n + 1) as usize);
    for k in -n..=n {
        let s = k as f64 * ds;
        let p = profile.eval_angle(s)?;
        samples.push(CurvatureSample {
            s,
            kappa: p.d1,
            kappa_s: p.d2,
            kappa_ss: RhsKind::Original.f(p.value),
        });
    }
    Ok(CurvatureProfile { samples })
}

/// Independent translator check from curve geometry alone.
///
/// Reconstructs the tangent angle from centered vertex differences, takes a
/// five-point centered stencil for the third arc-length derivative, and
/// returns the maximum of `|θ''' + cos θ|` over interior vertices. Both
/// stencils are second order, so the residual of a true translator decays
/// like Δs² until position rounding noise (amplified by 1/Δs³) takes over.
pub fn translator_residual(curve: &Curve) -> Result<f64, ProfileError> {
    let v = &curve.vertices;
    let n = v.len();
    if n < 7 {
        return Err(ProfileError::Domain(format!(
            "need at least 7 vertices, got {n}"
        )));
    }
    let h = curve.ds;
    // tangent angles at interior vertices, unwrapped
    let mut theta = Vec::with_capacity(n - 2);
    let mut prev: Option<f64> = None;
    for i in 1..n - 1 {
        let dx = v[i + 1].x - v[i - 1].x;
        let dy = v[i + 1].y - v[i - 1].y;
        let mut t = dy.atan2(dx);
        if let Some(p) = prev {
            while t - p > PI {
                t -= 2.0 * PI;
            }
            while t - p < -PI {
                t += 2.0 * PI;
            }
        }
        prev = Some(t);
        theta.push(t);
    }
    // θ'''(s_i) ≈ (θ[i+2] - 2θ[i+1] + 2θ[i-1] - θ[i-2]) / (2h³)
    let m = theta.len();
    let mut worst: f64 = 0.0;
    for i in 2..m - 2 {
        let d3 = (theta[i + 2] - 2.0 * theta[i + 1] + 2.0 * theta[i - 1] - theta[i - 2])
            / (2.0 * h * h * h);
        let r = (d3 + theta[i].cos()).abs();
        if r > worst {
            worst = r;
        }
    }
    Ok(worst)
}

/// First arc length at or past `s_min` where the tangent is exactly
/// vertical (θ crosses π/2), localized by bisection on a coarse scan.
///
/// Useful as a truncation point: where the tangent is vertical the flow's
/// normal velocity vanishes, so holding the curve fixed there introduces no
/// first-order boundary forcing.
pub fn vertical_tangent_after(
    profile: &AngleProfile,
    s_min: f64,
) -> Result<Option<f64>, ProfileError> {
    let step = 0.01;
    let end = profile.s_max;
    if s_min >= end {
        return Ok(None);
    }
    let phi = |s: f64| -> Result<f64, ProfileError> { Ok(profile.theta(s)? - FRAC_PI_2) };
    let mut prev_s = s_min.max(0.0);
    let mut prev = phi(prev_s)?;
    let mut s = prev_s + step;
    while s <= end {
        let v = phi(s)?;
        if prev != 0.0 && v != 0.0 && (prev > 0.0) != (v > 0.0) {
            let (mut a, mut b) = (prev_s, s);
            let mut fa = prev;
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let fm = phi(m)?;
                if fm == 0.0 || (fm > 0.0) == (fa > 0.0) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            return Ok(Some(0.5 * (a + b)));
        }
        prev = v;
        prev_s = s;
        s += step;
    }
    Ok(None)
}

/// Witness of proper immersion: past `σ₀` the tangent stays within π/4 of
/// vertical, so height grows at least like `(√2/2)·(s - σ₀)` on both tails.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PropernessWitness {
    pub sigma0: f64,
    /// Minimum of `y(s) - y(σ₀) - (√2/2)(|s| - σ₀)` over tail samples;
    /// nonnegative means the bound holds everywhere.
    pub min_margin: f64,
    pub holds: bool,
}

/// Select `σ₀` (smallest sampled `s ≥ 0` with `|θ - π/2| < π/4` sustained
/// to the end of the span) and check the height bound on both tails.
pub fn properness_witness(
    profile: &AngleProfile,
    curve: &Curve,
) -> Result<PropernessWitness, ProfileError> {
    let v = &curve.vertices;
    let origin = v
        .iter()
        .position(|p| p.s == 0.0)
        .ok_or_else(|| ProfileError::Domain("curve lacks the s = 0 vertex".into()))?;
    // smallest sampled s with the angle condition sustained to the end
    let mut sigma_idx = None;
    for i in (origin..v.len()).rev() {
        let th = profile.theta(v[i].s)?;
        if (th - FRAC_PI_2).abs() < FRAC_PI_4 {
            sigma_idx = Some(i);
        } else {
            break;
        }
    }
    let sigma_idx = sigma_idx.ok_or_else(|| {
        ProfileError::Certification("no sampled s keeps the tangent within π/4 of vertical".into())
    })?;
    let sigma0 = v[sigma_idx].s;
    let y_sigma = v[sigma_idx].y;
    let slope = std::f64::consts::SQRT_2 / 2.0;
    let mut min_margin = f64::INFINITY;
    for p in &v[sigma_idx..] {
        let margin = p.y - y_sigma - slope * (p.s - sigma0);
        min_margin = min_margin.min(margin);
    }
    // mirrored tail, checked on its own samples
    let mirror_idx = origin - (sigma_idx - origin);
    let y_sigma_neg = v[mirror_idx].y;
    for p in &v[..=mirror_idx] {
        let margin = p.y - y_sigma_neg - slope * (-p.s - sigma0);
        min_margin = min_margin.min(margin);
    }
    Ok(PropernessWitness {
        sigma0,
        min_margin,
        holds: min_margin >= 0.0,
    })
}
