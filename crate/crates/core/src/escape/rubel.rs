//! Paths on which `f(z) - iD` is real, positive and increasing.
//!
//! The path is parametrized by `s = ln t` where `f(z) = t + iD`, so that
//! `dz/ds = (f - iD) / f'`. Logs of derivatives use the quotients
//! `f⁽ᵏ⁾/f` from the Taylor jet, which stay finite where `f⁽ᵏ⁾` alone would not.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{EscapeError, Result};
use crate::funcs::FuncExpr;

const MAX_NEWTON: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RubelConfig {
    pub m_max: usize,
    pub c_values: Vec<f64>,
    /// Step in `s = ln t`.
    pub ds: f64,
    /// Newton tolerance on `|ln(f - iD) - s|`.
    pub corrector_tol: f64,
    /// Number of trailing unit-`s` blocks whose ratios decide finiteness.
    pub window: usize,
}

impl Default for RubelConfig {
    fn default() -> Self {
        RubelConfig { m_max: 3, c_values: vec![0.5, 1.0], ds: 0.05, corrector_tol: 1e-12, window: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub radius: f64,
    /// `ln|f⁽ᵐ⁾(z)| / ln|z|`.
    pub ratio: f64,
}

/// `∫_γ |f⁽ᵐ⁾|^{-c} |dz|` evidence: trapezoid sum plus a geometric tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailIntegral {
    pub m: usize,
    pub c: f64,
    pub partial_sum: f64,
    /// Largest ratio of consecutive unit-`s` block contributions over the
    /// window; `None` with fewer than two complete blocks.
    pub decay_ratio: Option<f64>,
    /// `b_last ρ / (1 - ρ)`, present only when finite.
    pub tail_bound: Option<f64>,
    pub finite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RubelPathReport {
    pub f: FuncExpr,
    #[serde(rename = "D")]
    pub d: f64,
    /// `(t, z)` with `f(z) = t + iD`.
    #[serde(with = "crate::json::path")]
    pub samples: Vec<(f64, Complex64)>,
    /// `Re f` strictly increasing along the samples.
    pub monotone: bool,
    /// `max |Im f - D| / |f|` over the samples.
    pub im_residual: f64,
    /// Indexed by `m = 0..=m_max`; only samples with `|z| > 1`.
    pub growth_ratios: Vec<Vec<GrowthPoint>>,
    pub tail_integrals: Vec<TailIntegral>,
}

struct Tracer<'a> {
    f: &'a FuncExpr,
    shift: Complex64,
    tol: f64,
}

impl Tracer<'_> {
    /// `dz/ds = (f - iD) / f'`.
    fn velocity(&self, z: Complex64) -> Result<Complex64> {
        let (v, d) = self.f.eval_d1(z)?;
        let w = (v - self.shift) / d;
        if d.norm() == 0.0 || !w.re.is_finite() || !w.im.is_finite() {
            return Err(EscapeError::TractViolation { z });
        }
        Ok(w)
    }

    /// Newton on `ln(f(z) - iD) = s`.
    fn correct(&self, mut z: Complex64, s: f64) -> Result<Option<Complex64>> {
        for _ in 0..MAX_NEWTON {
            let (v, d) = self.f.eval_d1(z)?;
            let phi = (v - self.shift).ln() - s;
            if phi.norm() <= self.tol {
                return Ok(Some(z));
            }
            if d.norm() == 0.0 {
                return Err(EscapeError::TractViolation { z });
            }
            z -= phi * (v - self.shift) / d;
        }
        let v = self.f.eval(z)?;
        Ok((((v - self.shift).ln() - s).norm() <= self.tol).then_some(z))
    }
}

/// Traces the path from `z_seed` until `t = Re f` reaches `t_end`.
pub fn rubel_path(f: &FuncExpr, d: f64, z_seed: Complex64, t_end: f64, cfg: &RubelConfig) -> Result<RubelPathReport> {
    let shift = Complex64::new(0.0, d);
    let tracer = Tracer { f, shift, tol: cfg.corrector_tol };
    let w0 = f.eval(z_seed)? - shift;
    if !(w0.arg().abs() < std::f64::consts::FRAC_PI_4) || w0.norm() == 0.0 {
        return Err(EscapeError::SeedOutsideTract { z: z_seed, arg: w0.arg() });
    }
    tracer.velocity(z_seed)?;
    let s0 = w0.norm().ln();
    let s_end = t_end.ln();
    if !(s_end > s0) || !(cfg.ds > 0.0) {
        return Err(EscapeError::Invalid(format!("t_end = {t_end} must exceed Re f at the seed ({:e})", s0.exp())));
    }
    let mut z = tracer.correct(z_seed, s0)?.ok_or(EscapeError::Corrector { z: z_seed })?;
    let mut s = s0;
    let mut path = vec![(s, z)];
    while s < s_end {
        let mut h = cfg.ds.min(s_end - s);
        let (z_new, s_new) = loop {
            let s_new = if h >= s_end - s { s_end } else { s + h };
            let step = s_new - s;
            let k1 = tracer.velocity(z)?;
            let k2 = tracer.velocity(z + k1 * (0.5 * step))?;
            let k3 = tracer.velocity(z + k2 * (0.5 * step))?;
            let k4 = tracer.velocity(z + k3 * step)?;
            let predicted = z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (step / 6.0);
            if let Some(zc) = tracer.correct(predicted, s_new)? {
                break (zc, s_new);
            }
            h *= 0.5;
            if h < 1e-12 {
                return Err(EscapeError::Corrector { z });
            }
        };
        z = z_new;
        s = s_new;
        path.push((s, z));
    }
    report(f, d, &path, cfg)
}

fn report(f: &FuncExpr, d: f64, path: &[(f64, Complex64)], cfg: &RubelConfig) -> Result<RubelPathReport> {
    let order = cfg.m_max.max(1);
    let mut re_f = Vec::with_capacity(path.len());
    let mut im_residual = 0.0f64;
    // ln|f⁽ᵐ⁾| for each m, and ln|dz/ds| = ln|f - iD| - ln|f'|
    let mut log_deriv = vec![Vec::with_capacity(path.len()); cfg.m_max + 1];
    let mut log_speed = Vec::with_capacity(path.len());
    for &(s, z) in path {
        let jet = f.eval_jet(z, order)?;
        let v = jet.value();
        re_f.push(v.re);
        im_residual = im_residual.max((v.im - d).abs() / v.norm());
        let log_f = v.norm().ln();
        for (m, logs) in log_deriv.iter_mut().enumerate() {
            let q = if m == 0 { 1.0 } else { (jet.derivative(m) / v).norm() };
            logs.push(log_f + q.ln());
        }
        let q1 = (jet.derivative(1) / v).norm();
        log_speed.push(s - log_f - q1.ln());
    }
    let monotone = re_f.windows(2).all(|w| w[1] > w[0]);
    let growth_ratios = log_deriv
        .iter()
        .map(|logs| {
            path.iter()
                .zip(logs)
                .filter(|((_, z), _)| z.norm() > 1.0)
                .map(|((_, z), l)| GrowthPoint { radius: z.norm(), ratio: l / z.norm().ln() })
                .collect()
        })
        .collect();
    let mut tail_integrals = Vec::new();
    for (m, logs) in log_deriv.iter().enumerate() {
        for &c in &cfg.c_values {
            let values: Vec<f64> = logs.iter().zip(&log_speed).map(|(l, sp)| (sp - c * l).exp()).collect();
            tail_integrals.push(tail(m, c, path, &values, cfg.window));
        }
    }
    Ok(RubelPathReport {
        f: f.clone(),
        d,
        samples: path.iter().map(|&(s, z)| (s.exp(), z)).collect(),
        monotone,
        im_residual,
        growth_ratios,
        tail_integrals,
    })
}

/// Trapezoid sum in `s`, with contributions grouped into unit-`s` blocks.
fn tail(m: usize, c: f64, path: &[(f64, Complex64)], values: &[f64], window: usize) -> TailIntegral {
    let s0 = path[0].0;
    let mut blocks: Vec<f64> = Vec::new();
    let mut partial_sum = 0.0;
    for (pair, val) in path.windows(2).zip(values.windows(2)) {
        let piece = 0.5 * (val[0] + val[1]) * (pair[1].0 - pair[0].0);
        partial_sum += piece;
        let k = (0.5 * (pair[0].0 + pair[1].0) - s0).floor() as usize;
        if blocks.len() <= k {
            blocks.resize(k + 1, 0.0);
        }
        blocks[k] += piece;
    }
    // the last block is usually partial
    let full = if path[path.len() - 1].0 - s0 >= blocks.len() as f64 { blocks.len() } else { blocks.len().saturating_sub(1) };
    let blocks = &blocks[..full];
    let tail_blocks = &blocks[blocks.len().saturating_sub(window + 1)..];
    let decay_ratio = (tail_blocks.len() >= 2).then(|| tail_blocks.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max));
    let finite = decay_ratio.is_some_and(|r| r < 1.0);
    let tail_bound = decay_ratio.filter(|_| finite).map(|r| tail_blocks[tail_blocks.len() - 1] * r / (1.0 - r));
    TailIntegral { m, c, partial_sum, decay_ratio, tail_bound, finite }
}
