//! `raindrop` — construct, verify, and exercise the curve-diffusion
//! translator from the command line.
//!
//! Subcommands: `shoot` (critical-slope refinement), `trace` (profile curve
//! and curvature tables), `verify` (numerical checks of the analytic
//! estimates), `flow` (discrete curve diffusion flow), `plot` (SVG
//! rendering of a trace). Exit codes: 0 success, 1 run or check failure,
//! 2 usage or configuration error.

mod config;
mod output;
mod svg;

use clap::{Parser, Subcommand};
use config::{OutputFormat, RunConfig};
use output::{fmt_f64, to_json_bytes, write_file, TraceTable};
use raindrop::flow::{
    discrete_geometry, make_circle, make_ellipse, make_vertical_line, resample_uniform,
    run_translation_test, step_flow_with_scratch, FlowError, FlowScratch, FlowState,
};
use raindrop::lemmas::{
    check_amplitude_decay, check_extrema_signs, check_nonproper_criterion,
    check_order_preservation, check_trifecta, extrema_sequence, Extremum, ExtremumKind,
    LemmaReport,
};
use raindrop::ode::{PhaseState, RhsKind};
use raindrop::profile::{
    assemble_theta, build_profile_to, curvature_profile, profile_from_slope,
    vertical_tangent_after, AngleProfile, AngleSource, Curve,
};
use raindrop::shooting::refine_interval;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "raindrop", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path (per-command default otherwise).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format for trace data.
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Integration horizon for trace and verify runs.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Sets rel_tol and abs_tol together.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Sample step (overrides ds_trace and ds_plot).
    #[arg(long, global = true)]
    ds: Option<f64>,
    /// Low shooting seed.
    #[arg(long, global = true)]
    seed_lo: Option<f64>,
    /// High shooting seed.
    #[arg(long, global = true)]
    seed_hi: Option<f64>,
    /// Flow step size (stability rule decides otherwise).
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Flow duration for the translation test.
    #[arg(long = "T", global = true)]
    t_total: Option<f64>,
    /// Vertex count for generated flow curves.
    #[arg(long, global = true)]
    n_vertices: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Refine the critical slope by nested-interval shooting.
    Shoot,
    /// Build the profile curve and curvature table from a shoot report.
    Trace {
        /// Shoot report to read the slope from.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Inline critical slope (skips the report).
        #[arg(long)]
        a_star: Option<f64>,
    },
    /// Run the numerical checks and write a machine-readable report.
    Verify {
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evolve a curve under the flow and write diagnostics.
    Flow {
        /// Built-in input: line | circle | ellipse | raindrop.
        #[arg(long, value_parser = ["line", "circle", "ellipse", "raindrop"])]
        generator: Option<String>,
        /// Curve file (csv with s,x,y columns) instead of a generator.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Treat the input curve as closed.
        #[arg(long, default_value_t = false)]
        closed: bool,
        /// Shoot report for the raindrop generator.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Half-span of the truncated translator.
        #[arg(long)]
        span: Option<f64>,
        /// Write a curve snapshot every this many steps (closed runs).
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Render a traced curve to SVG.
    Plot {
        /// Trace file (csv or json).
        #[arg(long)]
        input: PathBuf,
        /// Draw the curvature inset.
        #[arg(long, default_value_t = true)]
        inset: bool,
    },
}

enum CmdError {
    /// Exit 2: bad usage or configuration.
    Usage(String),
    /// Exit 1: the run or a check failed.
    Run(String),
}

impl CmdError {
    fn code(&self) -> u8 {
        match self {
            CmdError::Usage(_) => 2,
            CmdError::Run(_) => 1,
        }
    }
    fn message(&self) -> &str {
        match self {
            CmdError::Usage(m) | CmdError::Run(m) => m,
        }
    }
}

fn log_enabled() -> bool {
    static ON: std::sync::OnceLock<bool> = std::sync::OnceLock::new();
    *ON.get_or_init(|| {
        matches!(
            std::env::var("RAINDROP_LOG").as_deref(),
            Ok("info") | Ok("debug") | Ok("trace")
        )
    })
}

macro_rules! log_info {
    ($($arg:tt)*) => {
        if log_enabled() {
            eprintln!($($arg)*);
        }
    };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("raindrop: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, CmdError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path).map_err(|e| CmdError::Usage(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(tol) = cli.tol {
        cfg.rel_tol = tol;
        cfg.abs_tol = tol;
        cfg.event_tol = cfg.event_tol.min(tol);
    }
    if let Some(h) = cli.horizon {
        cfg.horizon = h;
    }
    if let Some(ds) = cli.ds {
        cfg.ds_trace = ds;
        cfg.ds_plot = ds;
    }
    if let Some(v) = cli.seed_lo {
        cfg.seed_lo = v;
    }
    if let Some(v) = cli.seed_hi {
        cfg.seed_hi = v;
    }
    if let Some(v) = cli.dt {
        cfg.flow_dt = Some(v);
    }
    if let Some(v) = cli.t_total {
        cfg.flow_t = v;
    }
    if let Some(v) = cli.n_vertices {
        cfg.flow_n = v;
    }
    if let Some(f) = &cli.format {
        cfg.format = match f.as_str() {
            "csv" => OutputFormat::Csv,
            _ => OutputFormat::Json,
        };
    }
    cfg.validate().map_err(|e| CmdError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CmdError> {
    let cfg = resolve_config(&cli)?;
    match &cli.cmd {
        Cmd::Shoot => cmd_shoot(&cfg, cli.out.as_deref()),
        Cmd::Trace { report, a_star } => {
            cmd_trace(&cfg, cli.out.as_deref(), report.as_deref(), *a_star)
        }
        Cmd::Verify { report } => cmd_verify(&cfg, cli.out.as_deref(), report.as_deref()),
        Cmd::Flow {
            generator,
            input,
            closed,
            report,
            span,
            snapshot_every,
        } => cmd_flow(
            &cfg,
            cli.out.as_deref(),
            generator.as_deref(),
            input.as_deref(),
            *closed,
            report.as_deref(),
            *span,
            *snapshot_every,
        ),
        Cmd::Plot { input, inset } => cmd_plot(cli.out.as_deref(), input, *inset),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct IntervalOut {
    horizon: f64,
    lo: f64,
    hi: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ShootOutput {
    config: RunConfig,
    a_star: f64,
    bracket_width: f64,
    bounded_horizon: f64,
    interval_history: Vec<IntervalOut>,
}

fn cmd_shoot(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CmdError> {
    let settings = cfg.integrator_settings();
    log_info!("shooting over schedule {:?}", cfg.horizon_schedule);
    let report = refine_interval(cfg.seed_lo, cfg.seed_hi, &cfg.horizon_schedule, &settings)
        .map_err(|e| CmdError::Run(e.to_string()))?;
    let out_path = out.unwrap_or(Path::new("shoot.json"));
    let payload = ShootOutput {
        config: cfg.clone(),
        a_star: report.a_star,
        bracket_width: report.bracket_width,
        bounded_horizon: report.bounded_horizon,
        interval_history: report
            .bracket
            .history
            .iter()
            .map(|r| IntervalOut {
                horizon: r.horizon,
                lo: r.lo,
                hi: r.hi,
            })
            .collect(),
    };
    write_file(out_path, &to_json_bytes(&payload))
        .map_err(|e| CmdError::Run(format!("cannot write {}: {e}", out_path.display())))?;
    log_info!(
        "a* = {} (width {:e}, horizon {})",
        report.a_star,
        report.bracket_width,
        report.bounded_horizon
    );
    Ok(())
}

fn read_shoot_report(path: &Path) -> Result<ShootOutput, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::Run(format!("cannot read report {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CmdError::Run(format!("malformed report {}: {e}", path.display())))
}

fn profile_for(
    cfg: &RunConfig,
    report_path: Option<&Path>,
    a_star_inline: Option<f64>,
) -> Result<AngleProfile, CmdError> {
    let settings = cfg.integrator_settings();
    if let Some(a) = a_star_inline {
        return profile_from_slope(a, cfg.horizon, &settings)
            .map_err(|e| CmdError::Run(e.to_string()));
    }
    if let Some(path) = report_path {
        let rep = read_shoot_report(path)?;
        let horizon = rep.bounded_horizon.min(cfg.horizon);
        return profile_from_slope(rep.a_star, horizon, &settings)
            .map_err(|e| CmdError::Run(e.to_string()));
    }
    // no report given: run the shooting stage in place
    log_info!("no report given; running the shooting stage");
    let report = refine_interval(cfg.seed_lo, cfg.seed_hi, &cfg.horizon_schedule, &settings)
        .map_err(|e| CmdError::Run(e.to_string()))?;
    assemble_theta(&report, &settings).map_err(|e| CmdError::Run(e.to_string()))
}

#[derive(Serialize)]
struct TraceJson {
    config: RunConfig,
    a_star: f64,
    s: Vec<f64>,
    theta: Vec<f64>,
    kappa: Vec<f64>,
    kappa_s: Vec<f64>,
    kappa_ss: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
}

fn cmd_trace(
    cfg: &RunConfig,
    out: Option<&Path>,
    report: Option<&Path>,
    a_star: Option<f64>,
) -> Result<(), CmdError> {
    let profile = profile_for(cfg, report, a_star)?;
    let ds = cfg.ds_trace;
    let curve =
        build_profile_to(&profile, ds, profile.s_max).map_err(|e| CmdError::Run(e.to_string()))?;
    let curv = curvature_profile(&profile, ds).map_err(|e| CmdError::Run(e.to_string()))?;
    assert_eq!(curve.vertices.len(), curv.samples.len());
    let n = curve.vertices.len();
    let mut table = TraceTable {
        s: Vec::with_capacity(n),
        theta: Vec::with_capacity(n),
        kappa: Vec::with_capacity(n),
        kappa_s: Vec::with_capacity(n),
        kappa_ss: Vec::with_capacity(n),
        x: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
    };
    for (v, c) in curve.vertices.iter().zip(&curv.samples) {
        let th = profile
            .eval_angle(v.s)
            .map_err(|e| CmdError::Run(e.to_string()))?
            .value;
        table.s.push(v.s);
        table.theta.push(th);
        table.kappa.push(c.kappa);
        table.kappa_s.push(c.kappa_s);
        table.kappa_ss.push(c.kappa_ss);
        table.x.push(v.x);
        table.y.push(v.y);
    }
    match cfg.format {
        OutputFormat::Csv => {
            let out_path = out.unwrap_or(Path::new("trace.csv"));
            write_file(out_path, table.to_csv().as_bytes())
                .map_err(|e| CmdError::Run(format!("cannot write {}: {e}", out_path.display())))?;
        }
        OutputFormat::Json => {
            let out_path = out.unwrap_or(Path::new("trace.json"));
            let payload = TraceJson {
                config: cfg.clone(),
                a_star: profile.a_star,
                s: table.s,
                theta: table.theta,
                kappa: table.kappa,
                kappa_s: table.kappa_s,
                kappa_ss: table.kappa_ss,
                x: table.x,
                y: table.y,
            };
            write_file(out_path, &to_json_bytes(&payload))
                .map_err(|e| CmdError::Run(format!("cannot write {}: {e}", out_path.display())))?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutput {
    config: RunConfig,
    checks: Vec<LemmaReport>,
    all_pass: bool,
}

fn merge_reports(id: &str, parts: Vec<LemmaReport>) -> LemmaReport {
    let mut merged = LemmaReport {
        id: id.to_string(),
        pass: true,
        margin: f64::INFINITY,
        witnesses: Vec::new(),
        notes: Vec::new(),
    };
    for p in parts {
        if p.margin < merged.margin {
            merged.margin = p.margin;
            merged.witnesses = p.witnesses;
        }
        merged.pass &= p.pass;
        merged.notes.extend(p.notes);
    }
    merged
}

fn cmd_verify(
    cfg: &RunConfig,
    out: Option<&Path>,
    report_path: Option<&Path>,
) -> Result<(), CmdError> {
    let settings = cfg.integrator_settings();
    let map_err = |e: raindrop::lemmas::LemmaError| CmdError::Run(e.to_string());

    // the bounded solution: from a report or recomputed
    let (a_star, bracket_width, bounded_horizon) = match report_path {
        Some(p) => {
            let rep = read_shoot_report(p)?;
            (rep.a_star, rep.bracket_width, rep.bounded_horizon)
        }
        None => {
            log_info!("no report given; running the shooting stage");
            let rep = refine_interval(cfg.seed_lo, cfg.seed_hi, &cfg.horizon_schedule, &settings)
                .map_err(|e| CmdError::Run(e.to_string()))?;
            (rep.a_star, rep.bracket_width, rep.bounded_horizon)
        }
    };
    let profile = profile_from_slope(a_star, bounded_horizon, &settings)
        .map_err(|e| CmdError::Run(e.to_string()))?;

    let mut checks = Vec::new();

    // 1. order preservation in the initial slope
    let order = merge_reports(
        "order_preservation",
        vec![
            check_order_preservation(0.5, 1.0, &settings.with_horizon(10.0)).map_err(map_err)?,
            check_order_preservation(1e-3, 10.0, &settings.with_horizon(5.0)).map_err(map_err)?,
        ],
    );
    checks.push(order);

    // 2. monotone lockout
    let lockout = merge_reports(
        "trifecta_lockout",
        vec![
            check_trifecta(
                PhaseState::new(0.0, 0.1, 0.0, 0.1),
                &settings.with_horizon(20.0),
            )
            .map_err(map_err)?,
            check_trifecta(
                PhaseState::new(0.0, 0.0, 1.0, 0.0),
                &settings.with_horizon(20.0),
            )
            .map_err(map_err)?,
            check_trifecta(
                PhaseState::new(0.0, std::f64::consts::FRAC_PI_2 + 1.0, 0.0, 0.0),
                &settings.with_horizon(20.0),
            )
            .map_err(map_err)?,
        ],
    );
    checks.push(lockout);

    // 3 & 4. extremum structure and amplitude decay of the bounded solution
    let shifted = profile
        .half()
        .value_shifted(-std::f64::consts::FRAC_PI_2, RhsKind::ShiftedG);
    let extrema = extrema_sequence(&shifted, &settings).map_err(map_err)?;
    let slope_uncertainty = bracket_width / 2.0;
    checks.push(check_extrema_signs(&extrema, slope_uncertainty, &settings).map_err(map_err)?);
    checks.push(check_amplitude_decay(&extrema, slope_uncertainty).map_err(map_err)?);

    // 5. non-properness criterion
    let nonproper = merge_reports(
        "nonproper_criterion",
        vec![
            check_nonproper_criterion(1.0, 3.0, &settings.with_horizon(15.0)).map_err(map_err)?,
            check_nonproper_criterion(2.0, 1.01, &settings.with_horizon(15.0)).map_err(map_err)?,
        ],
    );
    checks.push(nonproper);

    if cfg.inject_synthetic_violation {
        let synthetic = [
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
        let mut r = check_amplitude_decay(&synthetic, 0.0).map_err(map_err)?;
        r.id = "synthetic_violation".into();
        checks.push(r);
    }

    let all_pass = checks.iter().all(|c| c.pass);
    let out_path = out.unwrap_or(Path::new("verify.json"));
    let payload = VerifyOutput {
        config: cfg.clone(),
        checks,
        all_pass,
    };
    write_file(out_path, &to_json_bytes(&payload))
        .map_err(|e| CmdError::Run(format!("cannot write {}: {e}", out_path.display())))?;
    if all_pass {
        Ok(())
    } else {
        Err(CmdError::Run(format!(
            "one or more checks failed; see {}",
            out_path.display()
        )))
    }
}

#[derive(Serialize)]
struct FlowOutput {
    config: RunConfig,
    kind: String,
    n: usize,
    dt: f64,
    steps: usize,
    length_initial: f64,
    length_final: f64,
    length_monotone: Option<bool>,
    signed_area_initial: Option<f64>,
    signed_area_final: Option<f64>,
    area_relative_drift: Option<f64>,
    max_displacement_from_reference: f64,
    max_distance_to_reference_curve: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_flow(
    cfg: &RunConfig,
    out: Option<&Path>,
    generator: Option<&str>,
    input: Option<&Path>,
    closed: bool,
    report: Option<&Path>,
    span: Option<f64>,
    snapshot_every: Option<usize>,
) -> Result<(), CmdError> {
    let out_path = out.unwrap_or(Path::new("flow.json"));
    let kind = generator.unwrap_or(if input.is_some() { "input" } else { "raindrop" });

    let payload = if kind == "raindrop" {
        let profile = profile_for(cfg, report, None)?;
        let half_span = match span.or(cfg.flow_span) {
            Some(s) => s.min(profile.s_max),
            None => vertical_tangent_after(&profile, 4.0)
                .map_err(|e| CmdError::Run(e.to_string()))?
                .unwrap_or(profile.s_max.min(5.0)),
        };
        log_info!("translation test over [-{half_span}, {half_span}]");
        let curve = build_profile_to(&profile, cfg.ds_plot, half_span)
            .map_err(|e| CmdError::Run(e.to_string()))?;
        let state = raindrop::flow::state_from_curve(&curve, 0.0)
            .map_err(|e| CmdError::Run(e.to_string()))?;
        let dt = cfg.flow_dt.unwrap_or_else(|| state.stable_dt());
        let d = run_translation_test(&curve, cfg.flow_t, dt)
            .map_err(|e| CmdError::Run(e.to_string()))?;
        FlowOutput {
            config: cfg.clone(),
            kind: kind.to_string(),
            n: curve.vertices.len(),
            dt,
            steps: d.steps,
            length_initial: curve_length(&curve),
            length_final: d.length,
            length_monotone: None,
            signed_area_initial: None,
            signed_area_final: None,
            area_relative_drift: None,
            max_displacement_from_reference: d.max_displacement_from_reference,
            max_distance_to_reference_curve: d.max_distance_to_reference_curve,
        }
    } else {
        let mut state = match (kind, input) {
            ("circle", _) => make_circle(cfg.flow_n, 1.0),
            ("ellipse", _) => make_ellipse(cfg.flow_n, 2.0, 1.0),
            ("line", _) => make_vertical_line(cfg.flow_n, 4.0),
            ("input", Some(path)) => read_curve_file(path, closed)?,
            _ => return Err(CmdError::Usage("flow needs --generator or --input".into())),
        }
        .map_err(|e| CmdError::Run(e.to_string()))?;
        let dt = cfg.flow_dt.unwrap_or_else(|| state.stable_dt());
        state.dt = dt;
        let initial = state.clone();
        let length_initial = state.length();
        let area_initial = state.signed_area();
        let mut length_prev = length_initial;
        let mut monotone = true;
        let mut scratch = FlowScratch::default();
        for k in 1..=cfg.flow_steps {
            step_flow_with_scratch(&mut state, &mut scratch)
                .map_err(|e| CmdError::Run(e.to_string()))?;
            let l = state.length();
            if l >= length_prev {
                monotone = false;
            }
            length_prev = l;
            if state.closed && k % cfg.flow_resample_every == 0 {
                state = resample_uniform(&state).map_err(|e| CmdError::Run(e.to_string()))?;
            }
            if let Some(every) = snapshot_every {
                if every > 0 && k % every == 0 {
                    write_snapshot(out_path, k, &state)?;
                }
            }
        }
        let area_final = state.signed_area();
        let mut max_disp: f64 = 0.0;
        for i in 0..state.len() {
            let d = ((state.xs[i] - initial.xs[i]).powi(2) + (state.ys[i] - initial.ys[i]).powi(2))
                .sqrt();
            max_disp = max_disp.max(d);
        }
        FlowOutput {
            config: cfg.clone(),
            kind: kind.to_string(),
            n: state.len(),
            dt,
            steps: cfg.flow_steps,
            length_initial,
            length_final: state.length(),
            length_monotone: Some(monotone),
            signed_area_initial: area_initial,
            signed_area_final: area_final,
            area_relative_drift: match (area_initial, area_final) {
                (Some(a0), Some(a1)) if a0 != 0.0 => Some(((a1 - a0) / a0).abs()),
                _ => None,
            },
            max_displacement_from_reference: max_disp,
            max_distance_to_reference_curve: None,
        }
    };

    write_file(out_path, &to_json_bytes(&payload))
        .map_err(|e| CmdError::Run(format!("cannot write {}: {e}", out_path.display())))?;
    Ok(())
}

fn curve_length(curve: &Curve) -> f64 {
    curve
        .vertices
        .windows(2)
        .map(|w| ((w[1].x - w[0].x).powi(2) + (w[1].y - w[0].y).powi(2)).sqrt())
        .sum()
}

fn write_snapshot(out_path: &Path, step: usize, state: &FlowState) -> Result<(), CmdError> {
    let stem = out_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("flow");
    let snap = out_path.with_file_name(format!("{stem}.snap{step}.csv"));
    let geom = discrete_geometry(state).map_err(|e| CmdError::Run(e.to_string()))?;
    let mut text = String::from("s,x,y\n");
    for i in 0..state.len() {
        text.push_str(&fmt_f64(geom.s[i]));
        text.push(',');
        text.push_str(&fmt_f64(state.xs[i]));
        text.push(',');
        text.push_str(&fmt_f64(state.ys[i]));
        text.push('\n');
    }
    write_file(&snap, text.as_bytes())
        .map_err(|e| CmdError::Run(format!("cannot write {}: {e}", snap.display())))
}

fn read_curve_file(path: &Path, closed: bool) -> Result<Result<FlowState, FlowError>, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::Run(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CmdError::Run(format!("{}: empty file", path.display())))?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let find = |name: &str| cols.iter().position(|c| *c == name);
    let (xi, yi) = match (find("x"), find("y")) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(CmdError::Run(format!(
                "{}: header must contain x and y columns",
                path.display()
            )))
        }
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() <= xi.max(yi) {
            return Err(CmdError::Run(format!(
                "{}: row {} is short",
                path.display(),
                ln + 2
            )));
        }
        let parse = |s: &str| -> Result<f64, CmdError> {
            s.parse()
                .map_err(|e| CmdError::Run(format!("{}: row {}: {e}", path.display(), ln + 2)))
        };
        xs.push(parse(fields[xi])?);
        ys.push(parse(fields[yi])?);
    }
    Ok(FlowState::new(xs, ys, closed, 0.0))
}

fn cmd_plot(out: Option<&Path>, input: &Path, inset: bool) -> Result<(), CmdError> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| CmdError::Run(format!("cannot read {}: {e}", input.display())))?;
    let table = if input.extension().and_then(|e| e.to_str()) == Some("json") {
        let v: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CmdError::Run(format!("{}: {e}", input.display())))?;
        let col = |name: &str| -> Result<Vec<f64>, CmdError> {
            v.get(name)
                .and_then(|c| c.as_array())
                .map(|a| a.iter().filter_map(|x| x.as_f64()).collect())
                .ok_or_else(|| CmdError::Run(format!("{}: missing column {name}", input.display())))
        };
        TraceTable {
            s: col("s")?,
            theta: col("theta")?,
            kappa: col("kappa")?,
            kappa_s: col("kappa_s")?,
            kappa_ss: col("kappa_ss")?,
            x: col("x")?,
            y: col("y")?,
        }
    } else {
        TraceTable::from_csv(&text)
            .map_err(|e| CmdError::Run(format!("{}: {e}", input.display())))?
    };
    let svg = svg::render(&table, inset).map_err(CmdError::Run)?;
    let out_path = out.unwrap_or(Path::new("plot.svg"));
    write_file(out_path, svg.as_bytes())
        .map_err(|e| CmdError::Run(format!("cannot write {}: {e}", out_path.display())))?;
    Ok(())
}
