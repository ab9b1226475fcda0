//! Run configuration: defaults, JSON file, and flag overrides.
//!
//! Precedence is flags > file > defaults. The full resolved configuration
//! is echoed into every JSON output so a run can be reproduced from its
//! artifact alone.

use raindrop::ode::IntegratorSettings;
use serde::{Deserialize, Serialize};

/// Flat, fully-resolved run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub event_tol: f64,
    /// Horizon for single-trajectory operations (trace, verify).
    pub horizon: f64,
    pub horizon_schedule: Vec<f64>,
    pub seed_lo: f64,
    pub seed_hi: f64,
    /// Sample step for trace output.
    pub ds_trace: f64,
    /// Sample step for plot-oriented output and the flow harness.
    pub ds_plot: f64,
    /// Vertex count for generated flow curves.
    pub flow_n: usize,
    /// Explicit step size; when absent the stability rule decides.
    pub flow_dt: Option<f64>,
    /// Duration of the translation test.
    pub flow_t: f64,
    /// Half-span for the truncated translator; when absent, the first
    /// vertical-tangent point past s = 4 is used.
    pub flow_span: Option<f64>,
    /// Steps for closed-curve flow runs.
    pub flow_steps: usize,
    /// Resample closed curves to uniform arc length this often (steps).
    pub flow_resample_every: usize,
    pub format: OutputFormat,
    /// Test hook: append one deliberately failing check to the verify
    /// suite.
    pub inject_synthetic_violation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = IntegratorSettings::default();
        Self {
            rel_tol: s.rel_tol,
            abs_tol: s.abs_tol,
            max_step: s.max_step,
            event_tol: s.event_tol,
            horizon: 25.0,
            horizon_schedule: raindrop::shooting::DEFAULT_SCHEDULE.to_vec(),
            seed_lo: raindrop::shooting::DEFAULT_SEEDS.0,
            seed_hi: raindrop::shooting::DEFAULT_SEEDS.1,
            ds_trace: 1e-3,
            ds_plot: 1e-2,
            flow_n: 256,
            flow_dt: None,
            flow_t: 0.01,
            flow_span: None,
            flow_steps: 100,
            flow_resample_every: 10,
            format: OutputFormat::Json,
            inject_synthetic_violation: false,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn integrator_settings(&self) -> IntegratorSettings {
        IntegratorSettings {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            event_tol: self.event_tol,
            horizon: self.horizon,
        }
    }

    /// Field-level validation against the module preconditions.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("event_tol", self.event_tol),
            ("horizon", self.horizon),
            ("ds_trace", self.ds_trace),
            ("ds_plot", self.ds_plot),
            ("flow_t", self.flow_t),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError(format!(
                    "field `{name}` must be positive and finite, got {v}"
                )));
            }
        }
        if self.event_tol > self.rel_tol {
            return Err(ConfigError(format!(
                "field `event_tol` ({}) must not exceed `rel_tol` ({})",
                self.event_tol, self.rel_tol
            )));
        }
        if self.horizon_schedule.is_empty() {
            return Err(ConfigError(
                "field `horizon_schedule` must not be empty".into(),
            ));
        }
        if !self
            .horizon_schedule
            .windows(2)
            .all(|w| w[0] < w[1] && w[0] > 0.0)
        {
            return Err(ConfigError(
                "field `horizon_schedule` must be positive and strictly increasing".into(),
            ));
        }
        if !(self.seed_lo.is_finite() && self.seed_hi.is_finite() && self.seed_lo < self.seed_hi) {
            return Err(ConfigError(format!(
                "fields `seed_lo` < `seed_hi` required, got ({}, {})",
                self.seed_lo, self.seed_hi
            )));
        }
        if self.flow_n < 8 {
            return Err(ConfigError(format!(
                "field `flow_n` must be at least 8, got {}",
                self.flow_n
            )));
        }
        if let Some(dt) = self.flow_dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(ConfigError(format!(
                    "field `flow_dt` must be positive when given, got {dt}"
                )));
            }
        }
        if let Some(span) = self.flow_span {
            if !(span.is_finite() && span > 0.0) {
                return Err(ConfigError(format!(
                    "field `flow_span` must be positive when given, got {span}"
                )));
            }
        }
        if self.flow_steps == 0 || self.flow_resample_every == 0 {
            return Err(ConfigError(
                "fields `flow_steps` and `flow_resample_every` must be positive".into(),
            ));
        }
        Ok(())
    }
}
