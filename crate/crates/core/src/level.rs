//! Level curves `Im G = β` traversed with `X = Re G` increasing.
//!
//! Along such a curve `dG = g dz` is real, so `dz/dX = 1/g(z)`. The tracer
//! predicts with RK4 in `X` and corrects with Newton on `G(z) = X + iβ`,
//! which pins both the level and the parameter value of every sample.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::IntegratorConfig;
use crate::funcs::{FuncError, FuncExpr};
use crate::ode::{Advance, Solver, Tolerances};
use crate::quad::adaptive_simpson;

/// Witness ratios `|G(z_n)| / |z_n|²` must fall below this for the
/// infinite-transit criterion to fire.
pub const CRITERION_THRESHOLD: f64 = 0.01;
/// Consecutive dyadic witnesses required by the criterion.
pub const CRITERION_RUN: usize = 3;

const MAX_NEWTON: usize = 8;

#[derive(Debug, Error)]
pub enum LevelError {
    #[error(transparent)]
    Func(#[from] FuncError),
    #[error("start point {z} is within g_min of a critical point (|g| = {g_abs:e})")]
    CriticalStart { z: Complex64, g_abs: f64 },
    #[error("corrector diverged at X = {x}: step fell below the minimum")]
    CorrectorDivergence { x: f64, z: Complex64 },
}

pub type Result<T> = std::result::Result<T, LevelError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelConfig {
    /// Newton stops once `|G(z) - (X + iβ)|` is below this relative tolerance.
    pub corrector_tol: f64,
    /// Tracing stops when `|g|` drops below this.
    pub g_min: f64,
    /// Absolute cap on the arc step; uncapped by default.
    pub max_arc_step: f64,
    /// Arc step as a fraction of `max(|z|, 1)`.
    pub rel_arc_step: f64,
    /// Arc step as a fraction of the distance estimate `|g| / |g'|` to a critical point.
    pub critical_step_fraction: f64,
    pub radius: f64,
    /// Smallest admissible `ΔX` relative to `max(|X|, 1)`.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for LevelConfig {
    fn default() -> Self {
        LevelConfig {
            corrector_tol: 1e-13,
            g_min: 1e-8,
            max_arc_step: f64::MAX,
            rel_arc_step: 0.05,
            critical_step_fraction: 0.25,
            radius: 1e12,
            h_min: 1e-15,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LevelStop {
    ReachedTarget,
    ReachedRadius,
    /// `|g|` fell below `g_min`; the last sample is the closest approach.
    CriticalPoint,
    StepBudget,
}

/// Samples `(X, z)` of `{Im G = β}` with `X = Re G(z)` strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCurve {
    #[serde(rename = "G")]
    pub potential: FuncExpr,
    pub beta: f64,
    #[serde(with = "crate::json::level_path")]
    pub samples: Vec<(f64, Complex64)>,
    pub stop: LevelStop,
    pub corrector_tol: f64,
}

impl LevelCurve {
    pub fn x_range(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    pub fn end(&self) -> Complex64 {
        self.samples[self.samples.len() - 1].1
    }

    /// Arclength along the sample polyline.
    pub fn arclength(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1].1 - w[0].1).norm()).sum()
    }

    /// Largest `|Im G(z_i) - β|` relative to `1 + |G(z_i)|`.
    pub fn level_residual(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for &(_, z) in &self.samples {
            let v = self.potential.eval(z)?;
            worst = worst.max((v.im - self.beta).abs() / (1.0 + v.norm()));
        }
        Ok(worst)
    }
}

fn g_and_dg(potential: &FuncExpr, z: Complex64) -> Result<(Complex64, Complex64, Complex64)> {
    let j = potential.eval_jet(z, 2)?;
    Ok((j.coeffs[0], j.coeffs[1], j.coeffs[2] * 2.0))
}

/// Newton on `G(z) = target`, returning the converged point.
fn correct(potential: &FuncExpr, mut z: Complex64, target: Complex64, tol: f64) -> Result<Option<Complex64>> {
    for _ in 0..MAX_NEWTON {
        let (v, g) = potential.eval_d1(z)?;
        let scale = target.re.abs() + target.im.abs() + g.norm() * z.norm() + f64::MIN_POSITIVE;
        if (v - target).norm() <= tol * scale {
            return Ok(Some(z));
        }
        if g.norm() == 0.0 {
            return Ok(None);
        }
        z -= (v - target) / g;
    }
    let v = potential.eval(z)?;
    let g = potential.eval_d1(z)?.1;
    let scale = target.re.abs() + target.im.abs() + g.norm() * z.norm() + f64::MIN_POSITIVE;
    Ok(((v - target).norm() <= tol * scale).then_some(z))
}

/// Traces `{Im G = Im G(z_start)}` from `z_start` in the direction of
/// increasing `Re G`, up to `x_target`.
pub fn trace_level(potential: &FuncExpr, z_start: Complex64, x_target: f64, cfg: &LevelConfig) -> Result<LevelCurve> {
    let (v0, g0, _) = g_and_dg(potential, z_start)?;
    if g0.norm() < cfg.g_min {
        return Err(LevelError::CriticalStart { z: z_start, g_abs: g0.norm() });
    }
    let beta = v0.im;
    let mut samples = vec![(v0.re, z_start)];
    let mut z = z_start;
    let mut x = v0.re;
    let mut stop = LevelStop::StepBudget;
    let inv_g = |w: Complex64| -> Result<Complex64> { Ok(potential.eval_d1(w)?.1.inv()) };

    for _ in 0..cfg.max_steps {
        if x >= x_target {
            stop = LevelStop::ReachedTarget;
            break;
        }
        let (_, g, dg) = g_and_dg(potential, z)?;
        let mut ds = cfg.max_arc_step.min(cfg.rel_arc_step * z.norm().max(1.0));
        if dg.norm() > 0.0 {
            ds = ds.min(cfg.critical_step_fraction * g.norm() / dg.norm());
        }
        let mut dx = (ds * g.norm()).min(x_target - x);
        let (z_new, x_new) = loop {
            let x_new = if dx >= x_target - x { x_target } else { x + dx };
            let h = x_new - x;
            let k1 = inv_g(z)?;
            let k2 = inv_g(z + k1 * (0.5 * h))?;
            let k3 = inv_g(z + k2 * (0.5 * h))?;
            let k4 = inv_g(z + k3 * h)?;
            let predicted = z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            let target = Complex64::new(x_new, beta);
            let corrected = if predicted.re.is_finite() && predicted.im.is_finite() {
                correct(potential, predicted, target, cfg.corrector_tol)?
            } else {
                None
            };
            // a corrector that moves far from the prediction has jumped branches
            if let Some(zc) = corrected.filter(|zc| (zc - predicted).norm() <= 0.1 * (predicted - z).norm().max(1e-300)) {
                break (zc, x_new);
            }
            dx *= 0.5;
            if dx < cfg.h_min * x.abs().max(1.0) {
                return Err(LevelError::CorrectorDivergence { x, z });
            }
        };
        z = z_new;
        x = x_new;
        samples.push((x, z));
        let g_new = potential.eval_d1(z)?.1;
        if g_new.norm() < cfg.g_min {
            stop = LevelStop::CriticalPoint;
            break;
        }
        if z.norm() > cfg.radius {
            stop = LevelStop::ReachedRadius;
            break;
        }
    }
    if x >= x_target {
        stop = LevelStop::ReachedTarget;
    }
    Ok(LevelCurve { potential: potential.clone(), beta, samples, stop, corrector_tol: cfg.corrector_tol })
}

/// Transit time along a level curve, by quadrature and by direct integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitReport {
    pub x_range: (f64, f64),
    /// `∫ |dz/dX|² dX`; `None` when the integral diverges.
    pub quadrature_time: Option<f64>,
    /// `X` near which the integrand blows up, when `quadrature_time` is `None`.
    pub divergence_witness: Option<f64>,
    /// Time for `ż = conj(g(z))` to carry the first sample to `Re G = X₂`.
    pub ode_time: Option<f64>,
    /// `|quad - ode| / max(ode, ε)` when both are finite.
    pub relative_gap: Option<f64>,
}

/// Compares the transit integral with a direct antiholomorphic integration.
pub fn transit_time(curve: &LevelCurve, cfg: &IntegratorConfig) -> Result<TransitReport> {
    let (x1, x2) = curve.x_range();
    if x1 == x2 {
        return Ok(TransitReport {
            x_range: (x1, x2),
            quadrature_time: Some(0.0),
            divergence_witness: None,
            ode_time: Some(0.0),
            relative_gap: Some(0.0),
        });
    }
    let (quadrature_time, divergence_witness) = match curve.stop {
        LevelStop::CriticalPoint => (None, Some(x2)),
        _ => match transit_quadrature(curve)? {
            Some(q) => (Some(q), None),
            None => (None, Some(x2)),
        },
    };
    let ode_time = ode_transit(&curve.potential, curve.samples[0].1, x2, cfg)?;
    let relative_gap = match (quadrature_time, ode_time) {
        (Some(q), Some(o)) => Some((q - o).abs() / o.max(f64::EPSILON)),
        _ => None,
    };
    Ok(TransitReport { x_range: (x1, x2), quadrature_time, divergence_witness, ode_time, relative_gap })
}

/// Adaptive Simpson of `1/|g(z(X))|²` on each sample interval; interior
/// points are put back on the curve by the corrector.
fn transit_quadrature(curve: &LevelCurve) -> Result<Option<f64>> {
    let g_of = |z: Complex64| -> Result<Complex64> { Ok(curve.potential.eval_d1(z)?.1) };
    let mut total = 0.0;
    for w in curve.samples.windows(2) {
        let ((xa, za), (xb, _)) = (w[0], w[1]);
        let ga = g_of(za)?;
        let rough = (xb - xa) / ga.norm_sqr();
        let mut integrand = |x: f64| -> Result<f64> {
            let guess = za + (x - xa) / ga;
            let target = Complex64::new(x, curve.beta);
            let z = correct(&curve.potential, guess, target, curve.corrector_tol)?.unwrap_or(guess);
            Ok(1.0 / g_of(z)?.norm_sqr())
        };
        let r = adaptive_simpson(xa, xb, 1e-11 * rough.abs(), 30, &mut integrand)?;
        if !r.converged || !r.value.is_finite() {
            return Ok(None);
        }
        total += r.value;
    }
    Ok(Some(total))
}

/// Elapsed time for `ż = conj(G'(z))` from `z_from` until `Re G = x_to`.
pub fn ode_transit(potential: &FuncExpr, z_from: Complex64, x_to: f64, cfg: &IntegratorConfig) -> Result<Option<f64>> {
    let velocity = |z: Complex64| Ok(potential.eval_d1(z)?.1.conj());
    let re_g = |z: Complex64| potential.eval(z).map_or(f64::INFINITY, |v| v.re) - x_to;
    if re_g(z_from) >= 0.0 {
        return Ok(Some(0.0));
    }
    let tol = Tolerances { rel: cfg.rel_tol, abs: cfg.abs_tol, h_max: cfg.h_max };
    let mut solver = Solver::new(velocity, 0.0, z_from, tol)?;
    for _ in 0..cfg.max_steps {
        match solver.advance(f64::MAX)? {
            Advance::Accepted(seg) => {
                if re_g(seg.z1) >= 0.0 {
                    return Ok(Some(seg.locate(re_g)));
                }
            }
            Advance::Underflow => return Ok(None),
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(with = "crate::json::complex")]
    pub z: Complex64,
    /// `|G(z)| / |z|²`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub fires: bool,
    /// The curve was too short (tail radius under 10× head radius).
    pub inconclusive: bool,
    pub witnesses: Vec<Witness>,
}

/// Sufficient test for infinite transit time: along an unbounded level curve,
/// `G(z_n) = o(|z_n|²)` on a sequence `z_n → ∞` forces the transit to diverge.
///
/// Witnesses are the first samples beyond the dyadic radii `r₀ 2^k`; the
/// test fires when [`CRITERION_RUN`] consecutive witness ratios decrease
/// strictly and all lie below [`CRITERION_THRESHOLD`].
pub fn infinite_time_criterion(curve: &LevelCurve) -> Result<CriterionReport> {
    let head = curve.samples[0].1.norm();
    let tail = curve.end().norm();
    let base = if head > 0.0 {
        head
    } else {
        curve.samples.iter().map(|s| s.1.norm()).find(|r| *r > 0.0).unwrap_or(0.0)
    };
    if base == 0.0 || tail < 10.0 * head || tail < 10.0 * base {
        return Ok(CriterionReport { fires: false, inconclusive: true, witnesses: vec![] });
    }
    let mut witnesses = Vec::new();
    let mut radius = base;
    for &(_, z) in &curve.samples {
        if z.norm() >= radius {
            let ratio = curve.potential.eval(z)?.norm() / z.norm_sqr();
            witnesses.push(Witness { z, ratio });
            while radius <= z.norm() {
                radius *= 2.0;
            }
        }
    }
    let mut run = 0usize;
    let mut fires = false;
    for (i, w) in witnesses.iter().enumerate() {
        let below = w.ratio < CRITERION_THRESHOLD;
        let decreasing = i > 0 && w.ratio < witnesses[i - 1].ratio;
        run = match (below, decreasing && run > 0) {
            (true, true) => run + 1,
            (true, false) => 1,
            (false, _) => 0,
        };
        if run >= CRITERION_RUN {
            fires = true;
        }
    }
    Ok(CriterionReport { fires, inconclusive: false, witnesses })
}
