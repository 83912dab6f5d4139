//! Argument parsing and subcommand dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use escapeflow::escape::{self, EscapeError, RubelConfig};
use escapeflow::flow::{self, FlowError, FlowKind, FlowSpec, IntegratorConfig, Termination};
use escapeflow::funcs::{parse_expr, FuncError, FuncExpr};
use escapeflow::level::{self, LevelConfig, LevelError};
use escapeflow::demos;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::report::{self, OutputError};
use crate::svg::{render_svg, Layer, Marker, MarkerKind, Polyline, SvgScene, Window};

/// Most trajectories drawn in a measure scene.
const MAX_SCENE_TRAJECTORIES: usize = 200;

#[derive(Debug, Parser)]
#[command(name = "escapeflow", version, about = "Escape to infinity in holomorphic and antiholomorphic plane flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Holomorphic field f in `ż = f(z)`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub f: Option<String>,
    /// Antiholomorphic field g in `ż = conj(g(z))`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub g: Option<String>,
    /// Potential G whose level curves `Im G = const` are traced.
    #[arg(long = "G", global = true, allow_hyphen_values = true)]
    pub big_g: Option<String>,
    /// Start point as `re,im` or `re`.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_point)]
    pub z0: Option<Complex64>,
    #[arg(long, global = true, value_enum)]
    pub kind: Option<KindArg>,
    /// Relative tolerance; the absolute tolerance is 1% of it.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub tmax: Option<f64>,
    /// Escape radius R (radii R, 2R, 4R, ... are monitored).
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value = "escapeflow-out")]
    pub out: PathBuf,
    /// Also write an SVG portrait.
    #[arg(long, global = true)]
    pub svg: bool,
    /// Write the JSON report and print it instead of the summary line.
    #[arg(long, global = true)]
    pub json: bool,
    /// Plot window centre `re,im`.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_point)]
    pub center: Option<Complex64>,
    /// Plot window half-width.
    #[arg(long, global = true)]
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Holo,
    Antiholo,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a trajectory, write it as CSV and print its classification.
    Simulate,
    /// Integrate and write the classification with its blowup estimate.
    Classify,
    /// Trace a level curve of Im G.
    LevelTrace(LevelArgs),
    /// Transit time along a level curve, by quadrature and by integration.
    Transit(LevelArgs),
    /// Monte Carlo of finite-time escape over a transverse segment.
    Measure(MeasureArgs),
    /// Path on which f - iD is real and increasing, with growth diagnostics.
    Rubel(RubelArgs),
    /// Predicted escape structure of a polynomial flow.
    PolySummary,
    /// Built-in worked examples.
    Demo {
        #[arg(value_enum)]
        which: DemoSet,
    },
}

#[derive(Debug, Clone, Args)]
pub struct LevelArgs {
    #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
    pub start: Option<Complex64>,
    /// Target value of X = Re G.
    #[arg(long = "Xmax")]
    pub x_max: f64,
}

#[derive(Debug, Clone, Args)]
pub struct MeasureArgs {
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Number of samples.
    #[arg(long = "N", default_value_t = 1000)]
    pub n: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RubelArgs {
    #[arg(long = "D", default_value_t = 0.0, allow_hyphen_values = true)]
    pub d: f64,
    /// Final value of t = Re f.
    #[arg(long)]
    pub tend: f64,
    #[arg(long, default_value_t = 3)]
    pub m_max: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1")]
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoSet {
    /// Every built-in worked example.
    #[value(name = "paper")]
    All,
}

fn parse_point(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re,im`, got `{s}`")),
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{module}: {message}")]
    Numerical { module: &'static str, message: String },
    #[error("OutputError: {0}")]
    Output(#[from] OutputError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Output(_) => 1,
        }
    }
}

impl From<FuncError> for CliError {
    fn from(e: FuncError) -> Self {
        match e {
            FuncError::Syntax { .. } | FuncError::EntiretyViolation { .. } => CliError::Usage(format!("FuncError: {e}")),
            _ => CliError::Numerical { module: "FuncError", message: e.to_string() },
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Func(f) => f.into(),
            FlowError::Config(_) | FlowError::ConstantFunction | FlowError::WrongKind(_) => CliError::Usage(format!("FlowError: {e}")),
        }
    }
}

impl From<LevelError> for CliError {
    fn from(e: LevelError) -> Self {
        match e {
            LevelError::Func(f) => f.into(),
            _ => CliError::Numerical { module: "LevelError", message: e.to_string() },
        }
    }
}

impl From<EscapeError> for CliError {
    fn from(e: EscapeError) -> Self {
        match e {
            EscapeError::Func(f) => f.into(),
            EscapeError::Flow(f) => f.into(),
            EscapeError::Invalid(_) | EscapeError::SeedOutsideTract { .. } => CliError::Usage(format!("EscapeError: {e}")),
            _ => CliError::Numerical { module: "EscapeError", message: e.to_string() },
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn expr(text: Option<&String>, flag: &str) -> Result<FuncExpr, CliError> {
    let text = text.ok_or_else(|| usage(format!("missing --{flag} <expr>")))?;
    Ok(parse_expr(text)?)
}

impl Common {
    fn config(&self) -> Result<IntegratorConfig, CliError> {
        let mut cfg = IntegratorConfig::default();
        if let Some(tol) = self.tol {
            cfg.rel_tol = tol;
            cfg.abs_tol = tol * 1e-2;
        }
        if let Some(t) = self.tmax {
            cfg.t_max = t;
        }
        if let Some(r) = self.radius {
            cfg.escape_radius = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn flow_spec(&self) -> Result<FlowSpec, CliError> {
        let kind = match (self.kind, &self.f, &self.g) {
            (Some(KindArg::Holo), _, _) => FlowKind::Holomorphic,
            (Some(KindArg::Antiholo), _, _) => FlowKind::Antiholomorphic,
            (None, Some(_), _) => FlowKind::Holomorphic,
            (None, None, Some(_)) => FlowKind::Antiholomorphic,
            (None, None, None) => return Err(usage("missing --f or --g <expr>")),
        };
        let func = match kind {
            FlowKind::Holomorphic => expr(self.f.as_ref(), "f")?,
            FlowKind::Antiholomorphic => expr(self.g.as_ref(), "g")?,
        };
        Ok(FlowSpec::new(kind, func)?)
    }

    fn z0(&self) -> Result<Complex64, CliError> {
        self.z0.ok_or_else(|| usage("missing --z0 <re,im>"))
    }

    fn window(&self, default_center: Complex64, default_half: f64) -> Result<Window, CliError> {
        let half_width = self.half_width.unwrap_or(default_half);
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(usage("plot window half-width must be positive"));
        }
        Ok(Window { center: self.center.unwrap_or(default_center), half_width })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Writes the JSON report; with `--json` it is also the printed output.
    fn emit<T: Serialize>(&self, name: &str, report: &T, summary: String) -> Result<String, CliError> {
        let path = self.path(name);
        report::write_report(report, &path)?;
        Ok(if self.json { report::to_json(report).trim_end().to_string() } else { summary })
    }

    fn write_svg(&self, name: &str, scene: &SvgScene) -> Result<(), CliError> {
        if self.svg {
            report::write_text(&self.path(name), &render_svg(scene))?;
        }
        Ok(())
    }
}

/// One-line description of a termination.
pub fn describe(t: &Termination) -> String {
    match t {
        Termination::FiniteTimeBlowup { t_est, .. } => format!("FiniteTimeBlowup T≈{t_est:.4}"),
        Termination::ReachedRadius { t_exit } => format!("ReachedRadius t≈{t_exit:.4}"),
        Termination::FixedPointApproach { z_star } => format!("FixedPointApproach z*≈{:.4}{:+.4}i", z_star.re, z_star.im),
        Termination::Periodic { period } => format!("Periodic period≈{period:.4}"),
        Termination::TimeBudgetExhausted => "TimeBudgetExhausted".into(),
        Termination::StepUnderflow => "StepUnderflow".into(),
    }
}

/// Roots of a polynomial (ascending coefficients) by Durand–Kerner iteration.
fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = coeffs[n];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |z: Complex64| monic.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let denom = (0..n).filter(|&j| j != i).fold(Complex64::new(1.0, 0.0), |acc, j| acc * (roots[i] - roots[j]));
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-14 {
            break;
        }
    }
    roots
}

fn zero_markers(func: &FuncExpr) -> Vec<Marker> {
    func.polynomial_coeffs()
        .map(|c| poly_roots(&c))
        .unwrap_or_default()
        .into_iter()
        .map(|z| Marker { z, kind: MarkerKind::Zero })
        .collect()
}

fn trajectory_scene(common: &Common, traj: &flow::Trajectory) -> Result<SvgScene, CliError> {
    let mut scene = SvgScene::new(common.window(Complex64::new(0.0, 0.0), (2.0 * traj.z0.norm()).max(4.0))?);
    scene.polylines.push(Polyline {
        layer: Layer::Trajectory,
        points: traj.samples.iter().map(|s| s.z).collect(),
        highlight: matches!(traj.termination, Termination::FiniteTimeBlowup { .. }),
    });
    scene.markers.extend(zero_markers(&traj.spec.func));
    scene.markers.push(Marker { z: traj.z0, kind: MarkerKind::Seed });
    scene.legend.push(format!("{:?} flow of {}", traj.spec.kind, traj.spec.func));
    scene.legend.push(describe(&traj.termination));
    Ok(scene)
}

#[derive(Serialize)]
struct Classification {
    termination: Termination,
    blowup_estimate: Option<BlowupEstimate>,
    crossings: Vec<flow::RadiusCrossing>,
    span: f64,
    samples: usize,
}

#[derive(Serialize)]
struct BlowupEstimate {
    t_est: f64,
    t_err: f64,
}

fn simulate(common: &Common, write_csv: bool) -> Result<String, CliError> {
    let spec = common.flow_spec()?;
    let cfg = common.config()?;
    let traj = flow::simulate(&spec, common.z0()?, &cfg)?;
    common.write_svg("trajectory.svg", &trajectory_scene(common, &traj)?)?;
    if write_csv {
        report::write_trajectory_csv(&traj, &common.path("trajectory.csv"))?;
        if common.json {
            report::write_report(&traj, &common.path("trajectory.json"))?;
        }
        return Ok(describe(&traj.termination));
    }
    let blowup_estimate = match traj.termination {
        Termination::FiniteTimeBlowup { t_est, t_err } => Some(BlowupEstimate { t_est, t_err }),
        _ => None,
    };
    let c = Classification {
        termination: traj.termination,
        blowup_estimate,
        crossings: traj.crossings.clone(),
        span: traj.span(),
        samples: traj.samples.len(),
    };
    common.emit("classification.json", &c, describe(&traj.termination))
}

fn level_curve(common: &Common, args: &LevelArgs) -> Result<level::LevelCurve, CliError> {
    let potential = expr(common.big_g.as_ref(), "G")?;
    let start = args.start.or(common.z0).ok_or_else(|| usage("missing --start <re,im>"))?;
    let mut cfg = LevelConfig::default();
    if let Some(r) = common.radius {
        cfg.radius = r;
    }
    Ok(level::trace_level(&potential, start, args.x_max, &cfg)?)
}

fn level_scene(common: &Common, curve: &level::LevelCurve) -> Result<SvgScene, CliError> {
    let start = curve.samples[0].1;
    let mut scene = SvgScene::new(common.window(start, (2.0 * (curve.end() - start).norm()).max(2.0))?);
    scene.polylines.push(Polyline { layer: Layer::LevelCurve, points: curve.samples.iter().map(|s| s.1).collect(), highlight: false });
    scene.markers.push(Marker { z: start, kind: MarkerKind::Seed });
    scene.legend.push(format!("Im G = {} for G = {}", curve.beta, curve.potential));
    Ok(scene)
}

fn level_trace(common: &Common, args: &LevelArgs) -> Result<String, CliError> {
    let curve = level_curve(common, args)?;
    report::write_level_csv(&curve, &common.path("level.csv"))?;
    if common.json {
        report::write_report(&curve, &common.path("level.json"))?;
    }
    common.write_svg("level.svg", &level_scene(common, &curve)?)?;
    let (a, b) = curve.x_range();
    Ok(format!("LevelCurve {:?} samples={} X in [{a:e}, {b:e}]", curve.stop, curve.samples.len()))
}

fn transit(common: &Common, args: &LevelArgs) -> Result<String, CliError> {
    let curve = level_curve(common, args)?;
    let r = level::transit_time(&curve, &common.config()?)?;
    common.write_svg("transit.svg", &level_scene(common, &curve)?)?;
    let summary = format!(
        "TransitReport quadrature_time={:?} ode_time={:?} relative_gap={:?}",
        r.quadrature_time, r.ode_time, r.relative_gap
    );
    common.emit("transit.json", &r, summary)
}

fn measure(common: &Common, args: &MeasureArgs) -> Result<String, CliError> {
    let f = expr(common.f.as_ref(), "f")?;
    let z0 = common.z0.unwrap_or_default();
    let cfg = common.config()?;
    let samples = escape::escape_samples(&f, z0, args.delta, args.n, &cfg, common.seed)?;
    let r = escape::EscapeMeasureReport::from_samples(args.delta, common.seed, &samples);
    if common.svg {
        let mut scene = SvgScene::new(common.window(z0, (4.0 * args.delta).max(2.0))?);
        let seg = escape::transverse_segment(&f, z0, args.delta, 200)?;
        scene.polylines.push(Polyline { layer: Layer::Segment, points: seg.samples.iter().map(|s| s.1).collect(), highlight: false });
        let spec = FlowSpec::holomorphic(f.clone())?;
        for s in samples.iter().filter(|s| s.termination.is_some()).take(MAX_SCENE_TRAJECTORIES) {
            let traj = flow::integrate(&spec, s.z_start, &cfg)?;
            scene.polylines.push(Polyline {
                layer: Layer::Trajectory,
                points: traj.samples.iter().map(|p| p.z).collect(),
                highlight: matches!(s.termination, Some(Termination::FiniteTimeBlowup { .. })),
            });
        }
        scene.markers.extend(zero_markers(&f));
        scene.markers.push(Marker { z: z0, kind: MarkerKind::Seed });
        scene.legend.push(format!("finite-time fraction {}", r.finite_time_fraction));
        common.write_svg("measure.svg", &scene)?;
    }
    let summary = format!("EscapeMeasureReport N={} finite_time_fraction={} counts={:?}", r.n, r.finite_time_fraction, r.counts);
    common.emit("measure.json", &r, summary)
}

fn rubel(common: &Common, args: &RubelArgs) -> Result<String, CliError> {
    let f = expr(common.f.as_ref(), "f")?;
    let cfg = RubelConfig { m_max: args.m_max, c_values: args.c.clone(), ..Default::default() };
    let r = escape::rubel_path(&f, args.d, common.z0()?, args.tend, &cfg)?;
    if common.svg {
        let seed = r.samples[0].1;
        let end = r.samples[r.samples.len() - 1].1;
        let mut scene = SvgScene::new(common.window(seed, (2.0 * (end - seed).norm()).max(2.0))?);
        scene.polylines.push(Polyline { layer: Layer::Trajectory, points: r.samples.iter().map(|s| s.1).collect(), highlight: false });
        scene.markers.push(Marker { z: seed, kind: MarkerKind::Seed });
        scene.legend.push(format!("f = {}, D = {}", r.f, r.d));
        common.write_svg("rubel.svg", &scene)?;
    }
    let finite = r.tail_integrals.iter().filter(|t| t.finite).count();
    let summary = format!(
        "RubelPathReport samples={} monotone={} finite_tails={finite}/{}",
        r.samples.len(),
        r.monotone,
        r.tail_integrals.len()
    );
    common.emit("rubel.json", &r, summary)
}

fn poly_summary(common: &Common) -> Result<String, CliError> {
    let spec = common.flow_spec()?;
    let coeffs = spec.func.polynomial_coeffs().ok_or_else(|| usage(format!("`{}` is not a polynomial", spec.func)))?;
    let s = escape::poly_flow_summary(&coeffs, spec.kind)?;
    let summary = format!("PolyFlowSummary degree={} finite_time={} directions={:?}", s.degree, s.finite_time, s.directions);
    common.emit("poly_summary.json", &s, summary)
}

fn demo(common: &Common) -> Result<String, CliError> {
    let rows = demos::run_all();
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("{} {:<20} \"{}\" | {}", if r.passed { "PASS" } else { "FAIL" }, r.id, r.claim, r.detail))
        .collect();
    let failed = rows.iter().filter(|r| !r.passed).count();
    let out = common.emit("demo.json", &rows, table.join("\n"))?;
    if failed > 0 {
        print_line(&out);
        return Err(CliError::Numerical { module: "demos", message: format!("{failed} of {} checks failed", rows.len()) });
    }
    Ok(out)
}

/// Prints to stdout, ignoring a closed pipe.
fn print_line(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{text}");
}

/// Runs a parsed command line and returns the text to print.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let c = &cli.common;
    match &cli.command {
        Command::Simulate => simulate(c, true),
        Command::Classify => simulate(c, false),
        Command::LevelTrace(a) => level_trace(c, a),
        Command::Transit(a) => transit(c, a),
        Command::Measure(a) => measure(c, a),
        Command::Rubel(a) => rubel(c, a),
        Command::PolySummary => poly_summary(c),
        Command::Demo { which: DemoSet::All } => demo(c),
    }
}

/// Full entry point: parse, run, print, and return the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(text) => {
            print_line(&text);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
