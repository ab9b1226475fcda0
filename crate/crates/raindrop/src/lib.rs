//! Construction and verification of a translating solution to curve diffusion flow.
//!
//! The profile curve of a vertical translator is governed by the third-order
//! equation `θ''' = -cos θ` for the tangent angle `θ(s)` in arc length. This
//! crate builds the bounded solution of that equation by shooting on the
//! initial slope, assembles the planar profile curve, runs numerical checks of
//! the analytic estimates that underpin the construction, and evolves discrete
//! curves under the flow itself as an independent confirmation.
//!
//! Modules:
//!
//! * [`ode`] — right-hand sides, a high-accuracy adaptive integrator with
//!   dense output, and event localization.
//! * [`shooting`] — classification of initial slopes and nested-interval
//!   refinement of the critical slope.
//! * [`profile`] — odd reflection of the angle solution, curve integration,
//!   curvature data, and the independent translator residual.
//! * [`lemmas`] — executable forms of the order-preservation, monotone
//!   lockout, amplitude-decay, and non-properness estimates.
//! * [`flow`] — discrete curve diffusion flow on polylines.

pub mod flow;
pub mod lemmas;
pub mod ode;
pub mod profile;
pub mod shooting;
