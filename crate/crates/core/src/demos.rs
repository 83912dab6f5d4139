//! Built-in worked examples, each checked against a closed form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::escape::{self, RubelConfig};
use crate::flow::{self, FlowSpec, IntegratorConfig, Termination};
use crate::funcs::{parse_expr, FuncExpr};
use crate::level::{self, LevelConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoRow {
    pub id: String,
    /// The claim being checked, quoted.
    pub claim: String,
    pub passed: bool,
    pub detail: String,
}

type Check = fn() -> Result<(bool, String), String>;

const DEMOS: [(&str, &str, Check); 10] = [
    ("closed-form", "exp(z(t)) = exp(z(0)) - t", closed_form),
    ("square-blowup", "z(t) = 1/(1/z0 - t) blows up at t = 1/z0", square_blowup),
    ("conformal-clock", "F(z) is real and increasing as z follows the trajectory", conformal_clock),
    ("antiholo-dichotomy", "finite for n >= 2 and infinite for n = 1", antiholo_dichotomy),
    ("transit", "the transit time is the integral of dX/|g|^2 along the level curve", transit),
    ("tract", "g(z) = e^{-z} + 1 has trajectories escaping in finite and in infinite time", tract),
    ("measure-zero", "Y_delta has Lebesgue measure 0", measure_zero),
    ("rubel-path", "f(z) - iD is real, positive and increasing on the path", rubel),
    ("infinite-criterion", "v_n = o(|z_n|^2) forces infinite transit time", criterion),
    ("rotation", "z' = iz has period 2 pi", rotation),
];

/// Runs every built-in example; a check that errors is reported as failed.
pub fn run_all() -> Vec<DemoRow> {
    DEMOS
        .iter()
        .map(|(id, claim, check)| {
            let (passed, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
            DemoRow { id: id.to_string(), claim: claim.to_string(), passed, detail }
        })
        .collect()
}

fn expr(text: &str) -> Result<FuncExpr, String> {
    parse_expr(text).map_err(|e| e.to_string())
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn blowup_time(t: &Termination) -> Option<f64> {
    match t {
        Termination::FiniteTimeBlowup { t_est, .. } => Some(*t_est),
        _ => None,
    }
}

fn closed_form() -> Result<(bool, String), String> {
    let cfg = IntegratorConfig::default();
    let spec = FlowSpec::holomorphic(expr("-exp(-z)")?).map_err(|e| e.to_string())?;
    let traj = flow::simulate(&spec, c(0.0, 0.0), &cfg).map_err(|e| e.to_string())?;
    let sup = traj
        .samples
        .iter()
        .filter(|s| s.t <= 0.99)
        .map(|s| (s.z.exp() - (1.0 - s.t)).norm())
        .fold(0.0, f64::max);
    let t = blowup_time(&traj.termination);
    let ok = sup <= 1e-6 && t.is_some_and(|t| (t - 1.0).abs() <= 1e-4);
    Ok((ok, format!("sup residual {sup:.2e}, T {t:?}")))
}

fn square_blowup() -> Result<(bool, String), String> {
    let cfg = IntegratorConfig::default();
    let spec = FlowSpec::holomorphic(expr("z^2")?).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut detail = Vec::new();
    for z0 in [1.0, 2.0] {
        let traj = flow::simulate(&spec, c(z0, 0.0), &cfg).map_err(|e| e.to_string())?;
        let t = blowup_time(&traj.termination);
        ok &= t.is_some_and(|t| (t - 1.0 / z0).abs() <= 1e-4);
        detail.push(format!("z0={z0}: T {t:?}"));
    }
    Ok((ok, detail.join("; ")))
}

fn conformal_clock() -> Result<(bool, String), String> {
    let cfg = IntegratorConfig { t_max: 4.0, ..Default::default() };
    let mut worst = 0.0f64;
    for text in ["z", "z^2 - 1", "exp(z)"] {
        let f = expr(text)?;
        let spec = FlowSpec::holomorphic(f.clone()).map_err(|e| e.to_string())?;
        let traj = flow::integrate(&spec, c(0.3, 0.4), &cfg).map_err(|e| e.to_string())?;
        worst = worst.max(flow::conformal_clock_residual(&traj, &f).map_err(|e| e.to_string())?);
    }
    Ok((worst <= 1e-5, format!("max residual {worst:.2e}")))
}

fn antiholo_dichotomy() -> Result<(bool, String), String> {
    let cfg = IntegratorConfig::default();
    let lin = FlowSpec::antiholomorphic(expr("z")?).map_err(|e| e.to_string())?;
    let t_lin = flow::exit_time(&lin, c(1.0, 0.0), 1e4, &cfg).map_err(|e| e.to_string())?;
    let sq = FlowSpec::antiholomorphic(expr("z^2")?).map_err(|e| e.to_string())?;
    let t_sq = flow::exit_time(&sq, c(1.0, 0.0), 1e6, &cfg).map_err(|e| e.to_string())?;
    let ok = t_lin.is_some_and(|t| (t - 1e4f64.ln()).abs() <= 1e-4) && t_sq.is_some_and(|t| (0.99..=1.0).contains(&t));
    Ok((ok, format!("g=z to 1e4: {t_lin:?}; g=z^2 to 1e6: {t_sq:?}")))
}

fn transit() -> Result<(bool, String), String> {
    let cfg = IntegratorConfig::default();
    let mut ok = true;
    let mut detail = Vec::new();
    for (text, x_end) in [("z^2 * (1/2)", 0.5e12), ("z^3 * (1/3)", 1e18 / 3.0)] {
        let curve = level::trace_level(&expr(text)?, c(1.0, 0.0), x_end, &LevelConfig::default()).map_err(|e| e.to_string())?;
        let r = level::transit_time(&curve, &cfg).map_err(|e| e.to_string())?;
        ok &= r.relative_gap.is_some_and(|g| g <= 1e-3);
        detail.push(format!("{text}: quad {:?} gap {:?}", r.quadrature_time, r.relative_gap));
    }
    Ok((ok, detail.join("; ")))
}

fn tract() -> Result<(bool, String), String> {
    let demo = escape::demo_antiholo_tract(&IntegratorConfig::default()).map_err(|e| e.to_string())?;
    let expected = -(1.0 - (-1f64).exp()).ln();
    let t = blowup_time(&demo.left.termination);
    let ok = t.is_some_and(|t| (t - expected).abs() <= 1e-3)
        && blowup_time(&demo.right.termination).is_none()
        && demo.right.exit_times.len() == escape::TRACT_RADII.len()
        && demo.right.exit_times.iter().all(|e| e.t >= e.radius - 2.0);
    Ok((ok, format!("left T {t:?}; right {}", demo.right.termination.name())))
}

fn measure_zero() -> Result<(bool, String), String> {
    let r = escape::escape_measure(&expr("-exp(-z)")?, c(0.0, 0.0), 1.0, 10_000, &IntegratorConfig::default(), 1)
        .map_err(|e| e.to_string())?;
    Ok((r.finite_time_fraction <= 0.01, format!("finite-time fraction {}", r.finite_time_fraction)))
}

fn rubel() -> Result<(bool, String), String> {
    let f = expr("exp(z)")?;
    let mut ok = true;
    let mut detail = Vec::new();
    for (d, seed) in [(0.0, c(2.0, 0.0)), (5.0, c(3.0, 0.1))] {
        let r = escape::rubel_path(&f, d, seed, 101f64.exp(), &RubelConfig::default()).map_err(|e| e.to_string())?;
        let at_100 = r.growth_ratios.iter().filter_map(|g| g.iter().find(|p| p.radius >= 100.0)).map(|p| p.ratio).fold(f64::INFINITY, f64::min);
        ok &= r.monotone && at_100 > 20.0 && r.tail_integrals.iter().all(|t| t.finite);
        detail.push(format!("D={d}: min ratio at |z|=100 {at_100:.2}"));
    }
    Ok((ok, detail.join("; ")))
}

fn criterion() -> Result<(bool, String), String> {
    let mut fires = Vec::new();
    for (text, x_end) in [("z", 1e4), ("z^2 * (1/2)", 5e7), ("z^3 * (1/3)", 3e11)] {
        let curve = level::trace_level(&expr(text)?, c(1.0, 0.0), x_end, &LevelConfig::default()).map_err(|e| e.to_string())?;
        fires.push(level::infinite_time_criterion(&curve).map_err(|e| e.to_string())?.fires);
    }
    Ok((fires == [true, false, false], format!("fires for z, z^2/2, z^3/3: {fires:?}")))
}

fn rotation() -> Result<(bool, String), String> {
    let spec = FlowSpec::holomorphic(expr("1i*z")?).map_err(|e| e.to_string())?;
    let traj = flow::simulate(&spec, c(1.0, 0.0), &IntegratorConfig::default()).map_err(|e| e.to_string())?;
    let ok = matches!(traj.termination, Termination::Periodic { period } if (period - std::f64::consts::TAU).abs() <= 1e-4);
    Ok((ok, format!("{:?}", traj.termination)))
}
