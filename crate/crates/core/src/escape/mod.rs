//! Escape experiments: transverse segments and the escape-set Monte Carlo,
//! the polynomial escape summary, Rubel paths and the `e^{-z} + 1` tract demo.

mod rubel;
mod tract;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{self, FlowError, FlowKind, FlowSpec, IntegratorConfig, Termination, ZERO_THRESHOLD};
use crate::funcs::{FuncError, FuncExpr};
use crate::ode::{Advance, Solver, Tolerances};
use crate::quad::GaussLegendre;

pub use rubel::{rubel_path, GrowthPoint, RubelConfig, RubelPathReport, TailIntegral};
pub use tract::{demo_antiholo_tract, TractDemo, TractRun, TRACT_RADII};

/// Key under which per-sample failures are tallied.
pub const ERROR_BUCKET: &str = "Error";

#[derive(Debug, Error)]
pub enum EscapeError {
    #[error(transparent)]
    Func(#[from] FuncError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("transverse segment truncated at |y| = {achieved_delta:e}")]
    SegmentTruncated { achieved_delta: f64 },
    #[error("f vanishes at the base point {0}")]
    ZeroBase(Complex64),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("f' vanishes on the path near {z} (tract violation)")]
    TractViolation { z: Complex64 },
    #[error("corrector failed to hold Im f = D near {z}")]
    Corrector { z: Complex64 },
    #[error("seed {z} is not in a tract: f(z) - iD has argument {arg:.3}")]
    SeedOutsideTract { z: Complex64, arg: f64 },
}

pub type Result<T> = std::result::Result<T, EscapeError>;

const SEGMENT_TOL: Tolerances = Tolerances { rel: 1e-12, abs: 1e-14, h_max: 0.05 };

/// Grid samples of `L_δ(z₀) = {z : F(z) = iy, |y| ≤ δ}` with `F(z₀) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransverseSegment {
    pub f: FuncExpr,
    pub z0: Complex64,
    pub delta: f64,
    /// `(y, z(y))` with `y` ascending.
    pub samples: Vec<(f64, Complex64)>,
}

impl TransverseSegment {
    /// Largest `|F(z(y)) - iy|`, with `F` integrated chord by chord outward from `z₀`.
    pub fn clock_residual(&self) -> Result<f64> {
        let rule = GaussLegendre::eight();
        let recip = |u: Complex64| -> Result<Complex64> { Ok(self.f.eval(u)?.inv()) };
        let centre = self
            .samples
            .iter()
            .position(|s| s.0 >= 0.0)
            .unwrap_or(self.samples.len() - 1);
        let mut worst = 0.0f64;
        let mut walk = |indices: &mut dyn Iterator<Item = usize>| -> Result<()> {
            let mut z_prev = self.z0;
            let mut acc = Complex64::new(0.0, 0.0);
            for i in indices {
                let (y, z) = self.samples[i];
                acc += rule.segment(z_prev, z, recip)?;
                worst = worst.max((acc - Complex64::new(0.0, y)).norm());
                z_prev = z;
            }
            Ok(())
        };
        walk(&mut (centre..self.samples.len()))?;
        walk(&mut (0..centre).rev())?;
        Ok(worst)
    }
}

/// `dz/dy = i f(z)`, so `dF = dz/f = i dy`.
fn segment_solver(f: &FuncExpr, z0: Complex64, sign: f64) -> Result<Solver<impl Fn(Complex64) -> std::result::Result<Complex64, FuncError> + '_>> {
    let rot = Complex64::new(0.0, sign);
    Ok(Solver::new(move |z| Ok(rot * f.eval(z)?), 0.0, z0, SEGMENT_TOL)?)
}

fn near_zero(f: &FuncExpr, z: Complex64) -> Result<bool> {
    Ok(f.eval(z)?.norm() <= ZERO_THRESHOLD * (1.0 + z.norm()))
}

/// Marches from `z0` along one half of the segment, returning `z` at each of `ys` (ascending in `|y|`).
fn march(f: &FuncExpr, z0: Complex64, ys: &[f64]) -> Result<Vec<Complex64>> {
    let sign = if ys.iter().any(|y| *y < 0.0) { -1.0 } else { 1.0 };
    let mut solver = segment_solver(f, z0, sign)?;
    let mut out = Vec::with_capacity(ys.len());
    for &y in ys {
        let target = y.abs();
        while solver.t < target {
            match solver.advance(target)? {
                Advance::Accepted(_) if !near_zero(f, solver.z)? => {}
                _ => return Err(EscapeError::SegmentTruncated { achieved_delta: solver.t }),
            }
        }
        out.push(solver.z);
    }
    Ok(out)
}

/// The point `z(y)` of the transverse segment through `z0`.
pub fn transverse_point(f: &FuncExpr, z0: Complex64, y: f64) -> Result<Complex64> {
    if y == 0.0 {
        return Ok(z0);
    }
    Ok(march(f, z0, &[y])?[0])
}

/// Traces `L_δ(z₀)` and samples it at `n + 1` equispaced `y ∈ [-δ, δ]`.
pub fn transverse_segment(f: &FuncExpr, z0: Complex64, delta: f64, n: usize) -> Result<TransverseSegment> {
    if !(delta > 0.0) || n == 0 {
        return Err(EscapeError::Invalid(format!("need delta > 0 and n >= 1, got delta={delta}, n={n}")));
    }
    if near_zero(f, z0)? {
        return Err(EscapeError::ZeroBase(z0));
    }
    let ys: Vec<f64> = (0..=n).map(|k| -delta + 2.0 * delta * k as f64 / n as f64).collect();
    let (neg, pos): (Vec<f64>, Vec<f64>) = ys.iter().partition(|y| **y < 0.0);
    let neg_desc: Vec<f64> = neg.iter().rev().copied().collect();
    let pos_nonzero: Vec<f64> = pos.iter().copied().filter(|y| *y > 0.0).collect();
    let mut zn = march(f, z0, &neg_desc)?;
    zn.reverse();
    let zp = march(f, z0, &pos_nonzero)?;
    let mut samples: Vec<(f64, Complex64)> = neg.into_iter().zip(zn).collect();
    if pos.first() == Some(&0.0) {
        samples.push((0.0, z0));
    }
    samples.extend(pos_nonzero.into_iter().zip(zp));
    Ok(TransverseSegment { f: f.clone(), z0, delta, samples })
}

/// One Monte Carlo draw of [`escape_measure`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSample {
    pub y: f64,
    #[serde(with = "crate::json::complex")]
    pub z_start: Complex64,
    /// `None` when the sample failed.
    pub termination: Option<Termination>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeMeasureReport {
    pub delta: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    /// Termination class name to count; failures go under [`ERROR_BUCKET`].
    pub counts: BTreeMap<String, usize>,
    pub finite_time_fraction: f64,
}

impl EscapeMeasureReport {
    pub fn from_samples(delta: f64, seed: u64, samples: &[MeasureSample]) -> Self {
        let mut counts = BTreeMap::new();
        for s in samples {
            let key = s.termination.map_or(ERROR_BUCKET, |t| t.name());
            *counts.entry(key.to_string()).or_insert(0) += 1;
        }
        let finite = counts.get("FiniteTimeBlowup").copied().unwrap_or(0);
        let n = samples.len();
        let finite_time_fraction = if n == 0 { 0.0 } else { finite as f64 / n as f64 };
        EscapeMeasureReport { delta, n, seed, counts, finite_time_fraction }
    }
}

/// Draws `n` uniform `y ∈ (-δ, δ)` (sample `i` uses ChaCha8 stream `i` of
/// `seed`) and classifies the holomorphic trajectory from each `z(y)`.
pub fn escape_samples(f: &FuncExpr, z0: Complex64, delta: f64, n: usize, cfg: &IntegratorConfig, seed: u64) -> Result<Vec<MeasureSample>> {
    transverse_segment(f, z0, delta, 2)?;
    let spec = FlowSpec::holomorphic(f.clone())?;
    cfg.validate()?;
    let samples = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let y = loop {
                let y: f64 = rng.gen_range(-delta..delta);
                if y != -delta {
                    break y;
                }
            };
            match transverse_point(f, z0, y) {
                Ok(z) => MeasureSample { y, z_start: z, termination: flow::simulate(&spec, z, cfg).ok().map(|t| t.termination) },
                Err(_) => MeasureSample { y, z_start: z0, termination: None },
            }
        })
        .collect();
    Ok(samples)
}

/// Escape-set Monte Carlo on the transverse segment through `z0`.
pub fn escape_measure(f: &FuncExpr, z0: Complex64, delta: f64, n: usize, cfg: &IntegratorConfig, seed: u64) -> Result<EscapeMeasureReport> {
    let samples = escape_samples(f, z0, delta, n, cfg, seed)?;
    Ok(EscapeMeasureReport::from_samples(delta, seed, &samples))
}

/// Predicted escape structure of a polynomial flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFlowSummary {
    pub degree: usize,
    pub kind: FlowKind,
    /// Holomorphic: some trajectories escape in finite time. Antiholomorphic:
    /// transit to infinity takes finite time.
    pub finite_time: bool,
    /// Holomorphic only: the `n - 1` asymptotic escape directions `arg z ∈ [0, 2π)`.
    pub directions: Vec<f64>,
}

/// Escape structure from the coefficients `a_0..a_n` (ascending).
///
/// For `ż = a_n z^n` the escaping rays are those with `a_n e^{i(n-1)θ} > 0`.
pub fn poly_flow_summary(coeffs: &[Complex64], kind: FlowKind) -> Result<PolyFlowSummary> {
    let degree = coeffs
        .iter()
        .rposition(|c| *c != Complex64::new(0.0, 0.0))
        .filter(|d| *d >= 1)
        .ok_or_else(|| EscapeError::Invalid("polynomial degree must be at least 1".into()))?;
    let lead = coeffs[degree];
    let tau = std::f64::consts::TAU;
    let (finite_time, directions) = match kind {
        FlowKind::Holomorphic => {
            let k = (degree - 1) as f64;
            let dirs = (0..degree - 1).map(|j| ((-lead.arg() + tau * j as f64) / k).rem_euclid(tau)).collect();
            (degree >= 2, dirs)
        }
        FlowKind::Antiholomorphic => (degree >= 2, Vec::new()),
    };
    Ok(PolyFlowSummary { degree, kind, finite_time, directions })
}
