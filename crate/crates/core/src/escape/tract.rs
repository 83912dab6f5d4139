//! The antiholomorphic flow of `g(z) = e^{-z} + 1`.
//!
//! On `Im z = π` the field is real, `ẋ = 1 - e^{-x}`, so a start at `x < 0`
//! runs off to `-∞` in finite time. On `Im z = 0`, `ẋ = 1 + e^{-x} ∈ (1, 2)`
//! for `x > 0` and escape takes infinite time.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Result;
use crate::flow::{self, FlowSpec, IntegratorConfig, RadiusCrossing, Termination};
use crate::funcs::{parse_expr, FuncExpr};

/// Radii at which the right-half-plane run reports exit times.
pub const TRACT_RADII: [f64; 3] = [10.0, 100.0, 1000.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TractRun {
    #[serde(with = "crate::json::complex")]
    pub z0: Complex64,
    pub termination: Termination,
    /// `max |Im G - Im G(z0)|` with `G = z - e^{-z}`.
    pub im_drift: f64,
    pub exit_times: Vec<RadiusCrossing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TractDemo {
    pub g: FuncExpr,
    /// From `-1 + iπ`: finite-time escape to the left.
    pub left: TractRun,
    /// From `1`: escape to the right in infinite time.
    pub right: TractRun,
    /// From `iπ`, a zero of `g`.
    pub at_zero: TractRun,
}

fn run(spec: &FlowSpec, g: &FuncExpr, z0: Complex64, radii: &[f64], cfg: &IntegratorConfig) -> Result<TractRun> {
    let traj = flow::simulate(spec, z0, cfg)?;
    let im_drift = flow::antiholo_invariants(&traj, g)?.im_drift;
    let mut exit_times = Vec::new();
    for &radius in radii {
        if let Some(t) = flow::exit_time(spec, z0, radius, cfg)? {
            exit_times.push(RadiusCrossing { radius, t });
        }
    }
    Ok(TractRun { z0, termination: traj.termination, im_drift, exit_times })
}

pub fn demo_antiholo_tract(cfg: &IntegratorConfig) -> Result<TractDemo> {
    let g = parse_expr("exp(-z) + 1")?;
    let spec = FlowSpec::antiholomorphic(g.clone())?;
    let pi = std::f64::consts::PI;
    // reaching |z| = 1000 at unit speed needs a budget beyond 1000
    let long = IntegratorConfig { t_max: cfg.t_max.max(1e4), ..*cfg };
    Ok(TractDemo {
        left: run(&spec, &g, Complex64::new(-1.0, pi), &[], cfg)?,
        right: run(&spec, &g, Complex64::new(1.0, 0.0), &TRACT_RADII, &long)?,
        at_zero: run(&spec, &g, Complex64::new(0.0, pi), &[], cfg)?,
        g,
    })
}
