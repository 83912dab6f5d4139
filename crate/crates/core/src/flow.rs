//! Holomorphic (`ż = f(z)`) and antiholomorphic (`ż = conj(g(z))`) flows.
//!
//! [`integrate`] advances a trajectory with Dormand–Prince error control and
//! stops on the first of: the outermost escape radius, a return to the start
//! point, the time budget, or step-size underflow. [`classify`] then refines
//! the raw stop reason into finite-time blowup or fixed-point evidence.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::funcs::{antiderivative, FuncError, FuncExpr};
use crate::ode::{Advance, Segment, Solver, Tolerances};
use crate::quad::GaussLegendre;

/// Successive exit-time increments must shrink at least this fast to count
/// as a geometric (finite-limit) series.
pub const GEOMETRIC_RATIO_MAX: f64 = 0.75;

/// `|func(z)|` below this multiple of `1 + |z|` is treated as a zero.
pub const ZERO_THRESHOLD: f64 = 1e-12;

/// Cosine between return velocity and initial velocity required for a periodic orbit.
const PERIODIC_ALIGNMENT: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    Holomorphic,
    Antiholomorphic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeDirection {
    Forward,
    Reversed,
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error(transparent)]
    Func(#[from] FuncError),
    #[error("flow function must be nonconstant")]
    ConstantFunction,
    #[error("invalid integrator configuration: {0}")]
    Config(String),
    #[error("operation requires a {0:?} flow")]
    WrongKind(FlowKind),
}

pub type Result<T> = std::result::Result<T, FlowError>;

/// Which vector field to integrate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub kind: FlowKind,
    /// `f` for the holomorphic kind, `g` for the antiholomorphic kind.
    pub func: FuncExpr,
    pub direction: TimeDirection,
}

impl FlowSpec {
    pub fn new(kind: FlowKind, func: FuncExpr) -> Result<Self> {
        if func.is_constant() {
            return Err(FlowError::ConstantFunction);
        }
        Ok(FlowSpec { kind, func, direction: TimeDirection::Forward })
    }

    pub fn holomorphic(f: FuncExpr) -> Result<Self> {
        Self::new(FlowKind::Holomorphic, f)
    }

    pub fn antiholomorphic(g: FuncExpr) -> Result<Self> {
        Self::new(FlowKind::Antiholomorphic, g)
    }

    pub fn reversed(mut self) -> Self {
        self.direction = match self.direction {
            TimeDirection::Forward => TimeDirection::Reversed,
            TimeDirection::Reversed => TimeDirection::Forward,
        };
        self
    }

    fn sign(&self) -> f64 {
        match self.direction {
            TimeDirection::Forward => 1.0,
            TimeDirection::Reversed => -1.0,
        }
    }

    /// Velocity `ż` at `z`.
    pub fn velocity(&self, z: Complex64) -> std::result::Result<Complex64, FuncError> {
        let v = self.func.eval(z)?;
        let v = match self.kind {
            FlowKind::Holomorphic => v,
            FlowKind::Antiholomorphic => v.conj(),
        };
        Ok(v * self.sign())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_max: f64,
    /// Innermost of the dyadic escape radii `R, 2R, 4R, ...`.
    pub escape_radius: f64,
    pub t_max: f64,
    /// Number of dyadic radii recorded; the last one stops the integration.
    pub blowup_extrapolation_window: usize,
    pub fixed_point_radius: f64,
    pub periodic_return_tol: f64,
    pub max_steps: usize,
    /// Use the `w = 1/z` chart for polynomial right-hand sides of degree ≥ 2.
    pub chart_switch: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            h_max: 10.0,
            escape_radius: 2.0,
            t_max: 1e3,
            blowup_extrapolation_window: 4,
            fixed_point_radius: 1e-2,
            periodic_return_tol: 1e-3,
            max_steps: 2_000_000,
            chart_switch: true,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("h_max", self.h_max),
            ("escape_radius", self.escape_radius),
            ("t_max", self.t_max),
            ("fixed_point_radius", self.fixed_point_radius),
            ("periodic_return_tol", self.periodic_return_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || v.is_nan() {
                return Err(FlowError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.rel_tol < 1e-14 {
            return Err(FlowError::Config(format!("rel_tol must be at least 1e-14, got {}", self.rel_tol)));
        }
        if self.blowup_extrapolation_window < 3 {
            return Err(FlowError::Config("blowup_extrapolation_window must be at least 3".into()));
        }
        Ok(())
    }

    /// The dyadic radii `R·2^k`.
    pub fn radii(&self) -> Vec<f64> {
        (0..self.blowup_extrapolation_window)
            .map(|k| self.escape_radius * 2f64.powi(k as i32))
            .collect()
    }

    pub fn outer_radius(&self) -> f64 {
        self.escape_radius * 2f64.powi(self.blowup_extrapolation_window as i32 - 1)
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances { rel: self.rel_tol, abs: self.abs_tol, h_max: self.h_max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    #[serde(with = "crate::json::complex")]
    pub z: Complex64,
    /// Embedded error estimate of the step ending here (0 for the initial point).
    pub step_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum Termination {
    ReachedRadius { t_exit: f64 },
    FiniteTimeBlowup { t_est: f64, t_err: f64 },
    FixedPointApproach {
        #[serde(with = "crate::json::complex")]
        z_star: Complex64,
    },
    Periodic { period: f64 },
    TimeBudgetExhausted,
    StepUnderflow,
}

impl Termination {
    /// Short class name, used as a tally key.
    pub fn name(&self) -> &'static str {
        match self {
            Termination::ReachedRadius { .. } => "ReachedRadius",
            Termination::FiniteTimeBlowup { .. } => "FiniteTimeBlowup",
            Termination::FixedPointApproach { .. } => "FixedPointApproach",
            Termination::Periodic { .. } => "Periodic",
            Termination::TimeBudgetExhausted => "TimeBudgetExhausted",
            Termination::StepUnderflow => "StepUnderflow",
        }
    }
}

/// Exit time through one escape radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusCrossing {
    pub radius: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub spec: FlowSpec,
    #[serde(with = "crate::json::complex")]
    pub z0: Complex64,
    pub samples: Vec<Sample>,
    pub crossings: Vec<RadiusCrossing>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn end(&self) -> Sample {
        *self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn span(&self) -> f64 {
        self.end().t - self.samples[0].t
    }
}

/// Integrates `spec` from `z0` until the first termination condition.
///
/// A start at a zero of the vector field yields the constant trajectory over
/// `[0, t_max]`, classified as a fixed point.
pub fn integrate(spec: &FlowSpec, z0: Complex64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    run(spec, z0, cfg, &cfg.radii(), true)
}

/// Integrates and then applies [`classify`].
pub fn simulate(spec: &FlowSpec, z0: Complex64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let mut traj = integrate(spec, z0, cfg)?;
    traj.termination = classify(&traj, cfg);
    Ok(traj)
}

/// First time the trajectory reaches `|z| = radius`, or `None` if another
/// stop condition fires first.
pub fn exit_time(spec: &FlowSpec, z0: Complex64, radius: f64, cfg: &IntegratorConfig) -> Result<Option<f64>> {
    cfg.validate()?;
    let traj = run(spec, z0, cfg, &[radius], false)?;
    Ok(match traj.termination {
        Termination::ReachedRadius { t_exit } => Some(t_exit),
        _ => None,
    })
}

fn run(
    spec: &FlowSpec,
    z0: Complex64,
    cfg: &IntegratorConfig,
    radii: &[f64],
    detect_return: bool,
) -> Result<Trajectory> {
    let v0 = spec.velocity(z0)?;
    let mut samples = vec![Sample { t: 0.0, z: z0, step_error: 0.0 }];
    let mut crossings = Vec::new();
    let finish = |samples, crossings, termination| {
        Ok(Trajectory { spec: spec.clone(), z0, samples, crossings, termination })
    };

    if v0.norm() <= ZERO_THRESHOLD * (1.0 + z0.norm()) {
        samples.push(Sample { t: cfg.t_max, z: z0, step_error: 0.0 });
        return finish(samples, crossings, Termination::FixedPointApproach { z_star: z0 });
    }

    let mut next_radius = 0;
    while next_radius < radii.len() && z0.norm() >= radii[next_radius] {
        crossings.push(RadiusCrossing { radius: radii[next_radius], t: 0.0 });
        next_radius += 1;
    }
    if next_radius == radii.len() {
        return finish(samples, crossings, Termination::ReachedRadius { t_exit: 0.0 });
    }

    let signed_offset = |z: Complex64| ((z - z0) * v0.conj()).re;
    let mut solver = Solver::new(|z| spec.velocity(z), 0.0, z0, cfg.tolerances())?;
    for _ in 0..cfg.max_steps {
        let seg = match solver.advance(cfg.t_max)? {
            Advance::Accepted(seg) => seg,
            Advance::Underflow => return finish(samples, crossings, Termination::StepUnderflow),
        };

        if detect_return && signed_offset(seg.z0) < 0.0 && signed_offset(seg.z1) >= 0.0 {
            let tc = seg.locate(signed_offset);
            let zc = seg.at(tc);
            let vc = spec.velocity(zc)?;
            let cosine = (vc * v0.conj()).re / (vc.norm() * v0.norm());
            if (zc - z0).norm() <= cfg.periodic_return_tol && cosine >= PERIODIC_ALIGNMENT {
                samples.push(Sample { t: tc, z: zc, step_error: seg.error });
                return finish(samples, crossings, Termination::Periodic { period: tc });
            }
        }

        samples.push(Sample { t: seg.t1, z: seg.z1, step_error: seg.error });
        while next_radius < radii.len() && seg.z1.norm() >= radii[next_radius] {
            let r = radii[next_radius];
            let t = crossing_time(&seg, r);
            crossings.push(RadiusCrossing { radius: r, t });
            next_radius += 1;
        }
        if next_radius == radii.len() {
            let t_exit = crossings.last().map_or(seg.t1, |c| c.t);
            return finish(samples, crossings, Termination::ReachedRadius { t_exit });
        }
        if seg.t1 >= cfg.t_max {
            break;
        }
    }
    finish(samples, crossings, Termination::TimeBudgetExhausted)
}

fn crossing_time(seg: &Segment, r: f64) -> f64 {
    if seg.z0.norm() >= r {
        return seg.t0;
    }
    seg.locate(|z| z.norm() - r)
}

/// Refines the stop reason of [`integrate`]. Total: never fails.
///
/// * `ReachedRadius` becomes `FiniteTimeBlowup` when the escape is finite:
///   for polynomial holomorphic flows of degree ≥ 2 via the remaining time in
///   the `w = 1/z` chart, otherwise via [`blowup_time_estimate`].
/// * `TimeBudgetExhausted` becomes `FixedPointApproach` when the trajectory
///   has settled near a zero of the field.
pub fn classify(traj: &Trajectory, cfg: &IntegratorConfig) -> Termination {
    match traj.termination {
        Termination::ReachedRadius { .. } => {
            if cfg.chart_switch && traj.spec.kind == FlowKind::Holomorphic {
                if let Some(poly) = traj.spec.func.polynomial_coeffs().filter(|p| p.len() >= 3) {
                    return match chart_blowup(traj, &poly) {
                        Some((t_est, t_err)) => Termination::FiniteTimeBlowup { t_est, t_err },
                        None => traj.termination,
                    };
                }
            }
            match blowup_time_estimate(traj) {
                Ok((t_est, t_err)) => Termination::FiniteTimeBlowup { t_est, t_err },
                Err(_) => traj.termination,
            }
        }
        Termination::TimeBudgetExhausted => fixed_point(traj, cfg).unwrap_or(traj.termination),
        other => other,
    }
}

/// The exit-time series did not contract geometrically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("inconclusive: exit times do not converge (infinite-time evidence)")]
pub struct Inconclusive;

/// Extrapolated blowup time from the dyadic exit times.
///
/// With increments `d_k = t_{k+1} - t_k` and ratios `r_k = d_k / d_{k-1}`,
/// each window gives the geometric-tail limit `t_{k+1} + d_k r_k / (1 - r_k)`.
/// The estimate is the last limit; the error is its change from the previous
/// one (or the last tail correction when only one limit exists).
pub fn blowup_time_estimate(traj: &Trajectory) -> std::result::Result<(f64, f64), Inconclusive> {
    let times: Vec<f64> = traj.crossings.iter().map(|c| c.t).collect();
    if times.len() < 3 {
        return Err(Inconclusive);
    }
    let d: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let mut limits = Vec::new();
    let mut tail = 0.0;
    for k in 1..d.len() {
        if !(d[k] > 0.0 && d[k - 1] > 0.0) {
            return Err(Inconclusive);
        }
        let r = d[k] / d[k - 1];
        if r > GEOMETRIC_RATIO_MAX {
            return Err(Inconclusive);
        }
        tail = d[k] * r / (1.0 - r);
        limits.push(times[k + 1] + tail);
    }
    let t_est = *limits.last().ok_or(Inconclusive)?;
    let t_err = match limits.len() {
        1 => tail,
        n => (limits[n - 1] - limits[n - 2]).abs(),
    };
    if t_est.is_finite() {
        Ok((t_est, t_err))
    } else {
        Err(Inconclusive)
    }
}

/// Remaining time to `z = ∞` in the chart `w = 1/z`.
///
/// With `P(w) = w^n f(1/w)` the time element is `dt = -w^{n-2} dw / P(w)`,
/// analytic at `w = 0`; the trajectory escapes iff the integral from the last
/// sample to `w = 0` is real and positive.
fn chart_blowup(traj: &Trajectory, poly: &[Complex64]) -> Option<(f64, f64)> {
    let n = poly.len() - 1;
    let end = traj.end();
    let ws = end.z.inv();
    let sign = traj.spec.sign();
    let integrand = |w: Complex64| -> std::result::Result<Complex64, ()> {
        let p = poly.iter().fold(Complex64::new(0.0, 0.0), |acc, a| acc * w + a);
        if p.norm() == 0.0 {
            return Err(());
        }
        Ok(-w.powu(n as u32 - 2) / (p * sign))
    };
    let coarse = GaussLegendre::new(20).segment(ws, Complex64::new(0.0, 0.0), integrand).ok()?;
    let fine = GaussLegendre::new(30).segment(ws, Complex64::new(0.0, 0.0), integrand).ok()?;
    let err = (fine - coarse).norm();
    let reality = 1e-6 * fine.norm().max(1e-3);
    if fine.re > 0.0 && fine.im.abs() <= reality && err <= reality {
        Some((end.t + fine.re, err + fine.im.abs()))
    } else {
        None
    }
}

fn fixed_point(traj: &Trajectory, cfg: &IntegratorConfig) -> Option<Termination> {
    let end = traj.end();
    let window: Vec<&Sample> = traj.samples.iter().filter(|s| s.t >= 0.5 * end.t).collect();
    let first = window.first()?;
    let drift = window.iter().map(|s| (s.z - end.z).norm()).fold(0.0, f64::max);
    let f = &traj.spec.func;
    let speed_start = f.eval(first.z).ok()?.norm();
    let speed_end = f.eval(end.z).ok()?.norm();
    if drift >= cfg.fixed_point_radius || speed_end > speed_start {
        return None;
    }
    let z_star = newton_root(f, end.z)
        .filter(|r| (r - end.z).norm() <= 10.0 * cfg.fixed_point_radius)
        .unwrap_or(end.z);
    Some(Termination::FixedPointApproach { z_star })
}

fn newton_root(f: &FuncExpr, mut z: Complex64) -> Option<Complex64> {
    for _ in 0..100 {
        let (v, d) = f.eval_d1(z).ok()?;
        if v.norm() == 0.0 {
            return Some(z);
        }
        if d.norm() == 0.0 {
            break;
        }
        let step = v / d;
        z -= step;
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    (f.eval(z).ok()?.norm() <= ZERO_THRESHOLD * (1.0 + z.norm())).then_some(z)
}

/// Largest `|Q(t_k) - t_k|` where `Q` integrates `du / f(u)` along the
/// polyline through the samples, measured from the first sample.
///
/// Each chord is integrated with the 8-point Gauss rule on both halves; the
/// result is infinite when `f` vanishes at a chord end or the halves disagree
/// with the whole-chord rule (a zero of `f` inside the panel).
pub fn conformal_clock_residual(traj: &Trajectory, f: &FuncExpr) -> Result<f64> {
    if traj.spec.kind != FlowKind::Holomorphic {
        return Err(FlowError::WrongKind(FlowKind::Holomorphic));
    }
    let rule = GaussLegendre::eight();
    let recip = |u: Complex64| match f.eval(u) {
        Ok(v) if v.norm() > ZERO_THRESHOLD * (1.0 + u.norm()) => Ok(v.inv()),
        _ => Err(()),
    };
    let sign = traj.spec.sign();
    let mut q = Complex64::new(0.0, 0.0);
    let mut worst = 0.0f64;
    for pair in traj.samples.windows(2) {
        let (a, b) = (pair[0].z, pair[1].z);
        let mid = 0.5 * (a + b);
        let panel = (|| {
            recip(a)?;
            recip(b)?;
            let whole = rule.segment(a, b, recip)?;
            let halves = rule.segment(a, mid, recip)? + rule.segment(mid, b, recip)?;
            if (whole - halves).norm() > 1e-6 * halves.norm().max(1e-12) {
                return Err(());
            }
            Ok(halves)
        })();
        match panel {
            Ok(p) => q += p * sign,
            Err(()) => return Ok(f64::INFINITY),
        }
        let t = pair[1].t - traj.samples[0].t;
        worst = worst.max((q - t).norm());
    }
    Ok(worst)
}

/// Diagnostics of the antiholomorphic level-curve structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntiholoInvariants {
    /// `max |Im G(z(t)) - Im G(z0)|`.
    pub im_drift: f64,
    /// `Re G` strictly increasing along the samples (in the flow's time direction).
    pub monotone: bool,
    /// `max |ΔRe G / Δt - |g|²|`, `g` at chord midpoints.
    pub speed_residual: f64,
    #[serde(with = "crate::json::complex")]
    pub g0: Complex64,
}

pub fn antiholo_invariants(traj: &Trajectory, g: &FuncExpr) -> Result<AntiholoInvariants> {
    if traj.spec.kind != FlowKind::Antiholomorphic {
        return Err(FlowError::WrongKind(FlowKind::Antiholomorphic));
    }
    let big_g = antiderivative(g)?;
    let sign = traj.spec.sign();
    let values = traj
        .samples
        .iter()
        .map(|s| big_g.eval(s.z))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let g0 = values[0];
    let im_drift = values.iter().map(|v| (v.im - g0.im).abs()).fold(0.0, f64::max);
    let monotone = values.windows(2).all(|w| sign * (w[1].re - w[0].re) > 0.0);
    let mut speed_residual = 0.0f64;
    for (pair, vals) in traj.samples.windows(2).zip(values.windows(2)) {
        let dt = pair[1].t - pair[0].t;
        if dt <= 0.0 {
            continue;
        }
        let mid = 0.5 * (pair[0].z + pair[1].z);
        let speed = g.eval(mid)?.norm_sqr();
        let rate = sign * (vals[1].re - vals[0].re) / dt;
        speed_residual = speed_residual.max((rate - speed).abs());
    }
    Ok(AntiholoInvariants { im_drift, monotone, speed_residual, g0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcs::parse_expr;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn holo(text: &str) -> FlowSpec {
        FlowSpec::holomorphic(parse_expr(text).unwrap()).unwrap()
    }

    fn anti(text: &str) -> FlowSpec {
        FlowSpec::antiholomorphic(parse_expr(text).unwrap()).unwrap()
    }

    fn budget(t_max: f64) -> IntegratorConfig {
        IntegratorConfig { t_max, escape_radius: 1e6, ..Default::default() }
    }

    #[test]
    fn linear_flow_reaches_e() {
        let traj = integrate(&holo("z"), c(1.0, 0.0), &budget(1.0)).unwrap();
        assert_eq!(traj.termination, Termination::TimeBudgetExhausted);
        assert_eq!(traj.end().t, 1.0);
        assert!((traj.end().z - std::f64::consts::E).norm() < 1e-8);
    }

    #[test]
    fn minus_exp_minus_z_closed_form() {
        let traj = integrate(&holo("-exp(-z)"), c(0.0, 0.0), &budget(0.5)).unwrap();
        assert!((traj.end().z - c(0.5f64.ln(), 0.0)).norm() < 1e-6);
    }

    #[test]
    fn square_from_i_settles_at_origin() {
        let traj = simulate(&holo("z^2"), c(0.0, 1.0), &IntegratorConfig::default()).unwrap();
        match traj.termination {
            Termination::FixedPointApproach { z_star } => assert!(z_star.norm() < 1e-6, "{z_star}"),
            other => panic!("{other:?}"),
        }
        assert_eq!(traj.end().t, IntegratorConfig::default().t_max);
    }

    #[test]
    fn constant_trajectory_at_zero() {
        let cfg = IntegratorConfig::default();
        let traj = integrate(&holo("z^2 - 1"), c(1.0, 0.0), &cfg).unwrap();
        assert_eq!(traj.termination, Termination::FixedPointApproach { z_star: c(1.0, 0.0) });
        assert_eq!(traj.samples.len(), 2);
        assert_eq!(traj.end().t, cfg.t_max);
    }

    #[test]
    fn square_blows_up_at_one() {
        let traj = simulate(&holo("z^2"), c(1.0, 0.0), &IntegratorConfig::default()).unwrap();
        match traj.termination {
            Termination::FiniteTimeBlowup { t_est, .. } => assert!((t_est - 1.0).abs() < 1e-4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rotation_is_periodic() {
        let traj = simulate(&holo("i*z"), c(1.0, 0.0), &IntegratorConfig::default()).unwrap();
        match traj.termination {
            Termination::Periodic { period } => {
                assert!((period - 2.0 * std::f64::consts::PI).abs() < 1e-4, "{period}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn linear_growth_is_not_blowup() {
        let cfg = IntegratorConfig::default();
        let traj = simulate(&holo("z"), c(1.0, 0.0), &cfg).unwrap();
        match traj.termination {
            Termination::ReachedRadius { t_exit } => {
                assert!((t_exit - cfg.outer_radius().ln()).abs() < 1e-7)
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(blowup_time_estimate(&traj), Err(Inconclusive));
    }

    #[test]
    fn estimate_for_square_from_two() {
        let cfg = IntegratorConfig { chart_switch: false, ..Default::default() };
        let traj = integrate(&holo("z^2"), c(2.0, 0.0), &cfg).unwrap();
        let (t, _) = blowup_time_estimate(&traj).unwrap();
        assert!((t - 0.5).abs() < 1e-4, "{t}");
    }

    #[test]
    fn estimate_for_minus_exp_minus_z() {
        let traj = integrate(&holo("-exp(-z)"), c(0.0, 0.0), &IntegratorConfig::default()).unwrap();
        let (t, err) = blowup_time_estimate(&traj).unwrap();
        assert!((t - 1.0).abs() < 1e-4, "{t} ± {err}");
    }

    #[test]
    fn chart_rejects_near_miss() {
        // z(t) = 1/(1/z0 - t) stays bounded (|z| <= ~100) for z0 = 1 + 0.01i
        let traj = simulate(&holo("z^2"), c(1.0, 0.01), &IntegratorConfig::default()).unwrap();
        assert!(matches!(traj.termination, Termination::ReachedRadius { .. }), "{:?}", traj.termination);
    }

    #[test]
    fn chart_handles_cubic() {
        // ż = z³ from 1: 1/z² = 1 - 2t, T = 1/2
        let traj = simulate(&holo("z^3"), c(1.0, 0.0), &IntegratorConfig::default()).unwrap();
        match traj.termination {
            Termination::FiniteTimeBlowup { t_est, .. } => assert!((t_est - 0.5).abs() < 1e-8, "{t_est}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn clock_residual_small_on_linear_flow() {
        let traj = integrate(&holo("z"), c(1.0, 0.0), &budget(1.0)).unwrap();
        assert!(conformal_clock_residual(&traj, &parse_expr("z").unwrap()).unwrap() <= 1e-7);
    }

    #[test]
    fn clock_residual_on_closed_form_example() {
        let traj = integrate(&holo("-exp(-z)"), c(0.0, 0.0), &budget(0.9)).unwrap();
        assert!(conformal_clock_residual(&traj, &parse_expr("-exp(-z)").unwrap()).unwrap() <= 1e-6);
    }

    #[test]
    fn clock_residual_of_empty_span_is_zero() {
        let f = parse_expr("z").unwrap();
        let traj = Trajectory {
            spec: holo("z"),
            z0: c(1.0, 0.0),
            samples: vec![Sample { t: 0.0, z: c(1.0, 0.0), step_error: 0.0 }],
            crossings: vec![],
            termination: Termination::TimeBudgetExhausted,
        };
        assert_eq!(conformal_clock_residual(&traj, &f).unwrap(), 0.0);
    }

    #[test]
    fn clock_residual_infinite_through_zero() {
        let f = parse_expr("z").unwrap();
        let traj = Trajectory {
            spec: holo("z"),
            z0: c(-1.0, 0.0),
            samples: vec![
                Sample { t: 0.0, z: c(-1.0, 0.0), step_error: 0.0 },
                Sample { t: 1.0, z: c(1.0, 0.0), step_error: 0.0 },
            ],
            crossings: vec![],
            termination: Termination::TimeBudgetExhausted,
        };
        // zero of f in the middle of the chord
        assert!(conformal_clock_residual(&traj, &f).unwrap().is_infinite());
        let mut ends_on_zero = traj.clone();
        ends_on_zero.samples[1].z = c(0.0, 0.0);
        assert!(conformal_clock_residual(&ends_on_zero, &f).unwrap().is_infinite());
    }

    #[test]
    fn antiholo_linear_stays_real() {
        let g = parse_expr("z").unwrap();
        let traj = integrate(&anti("z"), c(1.0, 0.0), &budget(3.0)).unwrap();
        let inv = antiholo_invariants(&traj, &g).unwrap();
        assert!(inv.im_drift <= 1e-8 && inv.monotone, "{inv:?}");
    }

    #[test]
    fn antiholo_square_keeps_level() {
        let g = parse_expr("z^2").unwrap();
        let traj = integrate(&anti("z^2"), c(1.0, 1.0), &IntegratorConfig::default()).unwrap();
        let inv = antiholo_invariants(&traj, &g).unwrap();
        assert!(inv.im_drift <= 1e-6 && inv.monotone, "{inv:?}");
    }

    #[test]
    fn antiholo_tract_line() {
        let g = parse_expr("exp(-z) + 1").unwrap();
        let z0 = c(-1.0, std::f64::consts::PI);
        let traj = integrate(&anti("exp(-z) + 1"), z0, &IntegratorConfig::default()).unwrap();
        let inv = antiholo_invariants(&traj, &g).unwrap();
        assert!(inv.im_drift <= 1e-6 && inv.monotone, "{inv:?}");
        let big_g = antiderivative(&g).unwrap().eval(z0).unwrap();
        assert!((big_g.im - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn invariants_check_kind() {
        let traj = integrate(&holo("z"), c(1.0, 0.0), &budget(0.1)).unwrap();
        assert!(antiholo_invariants(&traj, &parse_expr("z").unwrap()).is_err());
        let traj = integrate(&anti("z"), c(1.0, 0.0), &budget(0.1)).unwrap();
        assert!(conformal_clock_residual(&traj, &parse_expr("z").unwrap()).is_err());
    }

    #[test]
    fn rejects_bad_config_and_constant_field() {
        assert!(matches!(
            FlowSpec::holomorphic(parse_expr("3+i").unwrap()),
            Err(FlowError::ConstantFunction)
        ));
        let cfg = IntegratorConfig { rel_tol: 1e-16, ..Default::default() };
        assert!(integrate(&holo("z"), c(1.0, 0.0), &cfg).is_err());
        let cfg = IntegratorConfig { blowup_extrapolation_window: 2, ..Default::default() };
        assert!(integrate(&holo("z"), c(1.0, 0.0), &cfg).is_err());
    }

    #[test]
    fn accepted_steps_respect_tolerance() {
        let cfg = IntegratorConfig::default();
        let traj = integrate(&holo("z^2 - 1"), c(0.3, 0.8), &IntegratorConfig { t_max: 20.0, ..cfg }).unwrap();
        for pair in traj.samples.windows(2) {
            let bound = cfg.abs_tol + cfg.rel_tol * pair[0].z.norm().max(pair[1].z.norm());
            assert!(pair[1].step_error <= bound);
            assert!(pair[1].t > pair[0].t);
        }
    }
}
