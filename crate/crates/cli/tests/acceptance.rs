//! Acceptance checks 1 to 10. Each prints one `PASS`/`FAIL` line; the
//! process exits non-zero if any fails.

use std::f64::consts::TAU;
use std::path::Path;
use std::process::Command;

use escapeflow::escape::{self, RubelConfig};
use escapeflow::flow::{self, FlowSpec, IntegratorConfig, Termination};
use escapeflow::level::{self, LevelConfig};
use escapeflow::{parse_expr, Complex64, FuncExpr};

type Outcome = Result<(bool, String), String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn expr(text: &str) -> Result<FuncExpr, String> {
    parse_expr(text).map_err(|e| e.to_string())
}

fn holo(text: &str) -> Result<FlowSpec, String> {
    FlowSpec::holomorphic(expr(text)?).map_err(|e| e.to_string())
}

fn antiholo(text: &str) -> Result<FlowSpec, String> {
    FlowSpec::antiholomorphic(expr(text)?).map_err(|e| e.to_string())
}

fn s<E: ToString>(e: E) -> String {
    e.to_string()
}

fn blowup(t: &Termination) -> Option<f64> {
    match *t {
        Termination::FiniteTimeBlowup { t_est, .. } => Some(t_est),
        _ => None,
    }
}

fn closed_form_example() -> Outcome {
    let traj = flow::simulate(&holo("-exp(-z)")?, c(0.0, 0.0), &IntegratorConfig::default()).map_err(s)?;
    // exp(z(t)) = 1 - t
    let sup = traj
        .samples
        .iter()
        .filter(|p| p.t <= 0.99)
        .map(|p| (p.z.exp() - (1.0 - p.t)).norm())
        .fold(0.0, f64::max);
    let covered = traj.samples.iter().any(|p| p.t >= 0.99);
    let (t, err) = flow::blowup_time_estimate(&traj).map_err(|_| "blowup estimate inconclusive".to_string())?;
    let ok = covered && sup <= 1e-6 && (t - 1.0).abs() <= 1e-4;
    Ok((ok, format!("sup|e^z - (1-t)| = {sup:.2e}, T = {t:.8} ± {err:.1e}")))
}

fn polynomial_blowup() -> Outcome {
    let spec = holo("z^2")?;
    let mut ok = true;
    let mut detail = Vec::new();
    for z0 in [1.0, 2.0] {
        let traj = flow::simulate(&spec, c(z0, 0.0), &IntegratorConfig::default()).map_err(s)?;
        // z(t) = 1/(1/z0 - t)
        let path_err = traj
            .samples
            .iter()
            .map(|p| {
                let exact = 1.0 / (1.0 / z0 - p.t);
                (p.z - exact).norm() / exact.abs()
            })
            .fold(0.0, f64::max);
        let t = blowup(&traj.termination);
        ok &= path_err <= 1e-8 && t.is_some_and(|t| (t - 1.0 / z0).abs() <= 1e-4);
        detail.push(format!("z0={z0}: T = {t:?}, path rel err {path_err:.1e}"));
    }
    Ok((ok, detail.join("; ")))
}

fn conformal_clock() -> Outcome {
    let seeds = [c(0.3, 0.4), c(-0.7, 0.2), c(0.5, -1.1), c(1.5, 0.5), c(-0.2, -0.6)];
    let cfg = IntegratorConfig { t_max: 4.0, ..Default::default() };
    // Closed forms of the flow maps: z e^{-t}, (z-1)/(z+1) e^{-2t}, e^{-z} + t.
    let cases: [(&str, fn(Complex64, f64) -> Complex64); 3] = [
        ("z", |z, t| z * (-t).exp()),
        ("z^2 - 1", |z, t| (z - 1.0) / (z + 1.0) * (-2.0 * t).exp()),
        ("exp(z)", |z, t| (-z).exp() + t),
    ];
    let mut worst = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for (text, invariant) in cases {
        let f = expr(text)?;
        let spec = FlowSpec::holomorphic(f.clone()).map_err(s)?;
        for z0 in seeds {
            let traj = flow::integrate(&spec, z0, &cfg).map_err(s)?;
            worst = worst.max(flow::conformal_clock_residual(&traj, &f).map_err(s)?);
            let start = invariant(z0, 0.0);
            for p in &traj.samples {
                let drift = (invariant(p.z, p.t) - start).norm() / start.norm().max(1.0);
                worst_oracle = worst_oracle.max(drift);
            }
        }
    }
    let ok = worst <= 1e-5 && worst_oracle <= 1e-6;
    Ok((ok, format!("max clock residual {worst:.2e}, max closed-form drift {worst_oracle:.2e}")))
}

fn antiholo_dichotomy() -> Outcome {
    let cfg = IntegratorConfig::default();
    let lin = antiholo("z")?;
    let radii = [1e1, 1e2, 1e3, 1e4];
    let mut points = Vec::new();
    for r in radii {
        let t = flow::exit_time(&lin, c(1.0, 0.0), r, &cfg).map_err(s)?.ok_or(format!("g=z never reached {r}"))?;
        // X = x²/2 and the transit is ½ ln(X₂/X₁) = ln R
        if (t - r.ln()).abs() > 1e-6 {
            return Ok((false, format!("g=z: time to {r} is {t}, expected {}", r.ln())));
        }
        points.push((r.ln(), t));
    }
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();

    let sq = antiholo("z^2")?;
    let t_sq = flow::exit_time(&sq, c(1.0, 0.0), 1e6, &cfg).map_err(s)?.ok_or("g=z^2 never reached 1e6")?;
    let curve = level::trace_level(&expr("z^3 * (1/3)")?, c(1.0, 0.0), 1e18 / 3.0, &LevelConfig::default()).map_err(s)?;
    let gap = level::transit_time(&curve, &cfg).map_err(s)?.relative_gap;
    // ẋ = x² from 1: t = 1 - 1/R
    let oracle = 1.0 - 1e-6;
    let ok = (slope - 1.0).abs() <= 0.05
        && (0.99..=1.0).contains(&t_sq)
        && (t_sq - oracle).abs() <= 1e-6
        && gap.is_some_and(|g| g <= 1e-3);
    Ok((ok, format!("g=z slope {slope:.6}; g=z^2 time to 1e6 {t_sq:.9} (exact {oracle}); gap {gap:?}")))
}

fn transit_vs_ode() -> Outcome {
    let cfg = IntegratorConfig::default();
    let mut ok = true;
    let mut detail = Vec::new();
    // Level Im G = 0 from x = 1 to x = 1e6; exact transits ln 1e6 and 1 - 1e-6.
    let cases = [("z^2 * (1/2)", 0.5e12, 1e6f64.ln()), ("z^3 * (1/3)", 1e18 / 3.0, 1.0 - 1e-6)];
    for (text, x_end, exact) in cases {
        let curve = level::trace_level(&expr(text)?, c(1.0, 0.0), x_end, &LevelConfig::default()).map_err(s)?;
        let r = level::transit_time(&curve, &cfg).map_err(s)?;
        let quad = r.quadrature_time.ok_or("no quadrature time")?;
        ok &= r.relative_gap.is_some_and(|g| g <= 1e-3) && (quad - exact).abs() <= 1e-6 * exact;
        detail.push(format!("{text}: quad {quad:.9} exact {exact:.9} gap {:?}", r.relative_gap));
    }
    Ok((ok, detail.join("; ")))
}

fn tract() -> Outcome {
    let demo = escape::demo_antiholo_tract(&IntegratorConfig::default()).map_err(s)?;
    let exact = -(1.0 - (-1f64).exp()).ln();
    let t = blowup(&demo.left.termination);
    let radii_ok = demo.right.exit_times.len() == escape::TRACT_RADII.len()
        && demo.right.exit_times.iter().all(|e| e.t >= e.radius - 2.0);
    let ok = t.is_some_and(|t| (t - exact).abs() <= 1e-3) && blowup(&demo.right.termination).is_none() && radii_ok;
    let times: Vec<String> = demo.right.exit_times.iter().map(|e| format!("R={}: {:.3}", e.radius, e.t)).collect();
    Ok((ok, format!("left T {t:?} (exact {exact:.6}); right {} [{}]", demo.right.termination.name(), times.join(", "))))
}

fn measure_zero() -> Outcome {
    let r = escape::escape_measure(&expr("-exp(-z)")?, c(0.0, 0.0), 1.0, 10_000, &IntegratorConfig::default(), 2024).map_err(s)?;
    let total: usize = r.counts.values().sum();
    Ok((total == 10_000 && r.finite_time_fraction <= 0.01, format!("finite-time fraction {} over {total}", r.finite_time_fraction)))
}

fn rubel() -> Outcome {
    let f = expr("exp(z)")?;
    let mut ok = true;
    let mut detail = Vec::new();
    for (d, seed) in [(0.0, c(2.0, 0.0)), (5.0, c(3.0, 0.1))] {
        let r = escape::rubel_path(&f, d, seed, 101f64.exp(), &RubelConfig::default()).map_err(s)?;
        // On the path e^z = t + iD, so z = ln(t + iD) up to 2πi.
        let path_err = r
            .samples
            .iter()
            .map(|&(t, z)| {
                let w = c(t, d).ln();
                let k = ((z.im - w.im) / TAU).round();
                (z - w - c(0.0, k * TAU)).norm()
            })
            .fold(0.0, f64::max);
        let r_max = r.samples.iter().map(|p| p.1.norm()).fold(0.0, f64::max);
        let mut at_100 = f64::INFINITY;
        let mut increasing = true;
        for series in &r.growth_ratios {
            at_100 = at_100.min(series.iter().find(|p| p.radius >= 100.0).map_or(f64::NEG_INFINITY, |p| p.ratio));
            let last: Vec<f64> = series.iter().filter(|p| p.radius >= r_max / 10.0).map(|p| p.ratio).collect();
            increasing &= last.len() >= 2 && last.windows(2).all(|w| w[1] > w[0]);
        }
        let finite = r.tail_integrals.len() == 8 && r.tail_integrals.iter().all(|t| t.finite);
        ok &= r.monotone && path_err <= 1e-8 && at_100 > 20.0 && increasing && finite && r.growth_ratios.len() == 4;
        detail.push(format!(
            "D={d}: monotone {}, path err {path_err:.1e}, min ratio at |z|=100 {at_100:.2}, increasing {increasing}, finite {finite}",
            r.monotone
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn criterion() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (text, x_end, expect) in [("z", 1e4, true), ("z^2 * (1/2)", 5e7, false), ("z^3 * (1/3)", 3e11, false)] {
        let curve = level::trace_level(&expr(text)?, c(1.0, 0.0), x_end, &LevelConfig::default()).map_err(s)?;
        let report = level::infinite_time_criterion(&curve).map_err(s)?;
        ok &= report.fires == expect && !report.inconclusive;
        let ratios: Vec<String> = report.witnesses.iter().rev().take(3).rev().map(|w| format!("{:.2e}", w.ratio)).collect();
        detail.push(format!("{text}: fires {} (last ratios {})", report.fires, ratios.join(" ")));
    }
    Ok((ok, detail.join("; ")))
}

fn reversal_error(spec: &FlowSpec, z0: Complex64, t: f64) -> Result<f64, String> {
    let cfg = IntegratorConfig { t_max: t, ..Default::default() };
    let fwd = flow::integrate(spec, z0, &cfg).map_err(s)?;
    if fwd.termination != Termination::TimeBudgetExhausted {
        return Err(format!("forward run ended with {:?}", fwd.termination));
    }
    let back = flow::integrate(&spec.clone().reversed(), fwd.end().z, &cfg).map_err(s)?;
    Ok((back.end().z - z0).norm())
}

fn properties() -> Outcome {
    let mut reversal = 0.0f64;
    for (spec, z0, t) in [
        (holo("z^2 - 1")?, c(0.3, 0.4), 1.0),
        (holo("exp(z)")?, c(-0.5, 1.0), 1.0),
        (antiholo("z^2")?, c(0.2, 0.5), 0.5),
        (antiholo("exp(-z) + 1")?, c(0.5, 0.3), 1.0),
    ] {
        reversal = reversal.max(reversal_error(&spec, z0, t)?);
    }

    let cfg = IntegratorConfig::default();
    let mut drift = 0.0f64;
    for (g, z0) in [("z", c(1.0, 0.3)), ("z^2", c(1.0, 0.0)), ("z^2", c(-0.4, 0.7)), ("z^3", c(0.5, 0.5)), ("exp(-z) + 1", c(-1.0, std::f64::consts::PI))] {
        let g = expr(g)?;
        let spec = FlowSpec::antiholomorphic(g.clone()).map_err(s)?;
        let traj = flow::simulate(&spec, z0, &cfg).map_err(s)?;
        drift = drift.max(flow::antiholo_invariants(&traj, &g).map_err(s)?.im_drift);
    }
    let tract = escape::demo_antiholo_tract(&cfg).map_err(s)?;
    drift = [&tract.left, &tract.right, &tract.at_zero].iter().fold(drift, |d, r| d.max(r.im_drift));

    let rotation = flow::simulate(&holo("1i*z")?, c(1.0, 0.0), &cfg).map_err(s)?;
    let period = match rotation.termination {
        Termination::Periodic { period } => period,
        other => return Ok((false, format!("f=iz classified {other:?}"))),
    };

    let identical = identical_outputs()?;
    let ok = reversal <= 1e-5 && drift <= 1e-6 && (period - TAU).abs() <= 1e-4 && identical;
    Ok((ok, format!("reversal {reversal:.1e}, Im G drift {drift:.1e}, period {period:.8}, identical outputs {identical}")))
}

/// Runs the seeded measure command twice and compares every written file.
fn identical_outputs() -> Result<bool, String> {
    let dirs = [tempfile::tempdir().map_err(s)?, tempfile::tempdir().map_err(s)?];
    for dir in &dirs {
        let status = Command::new(env!("CARGO_BIN_EXE_escapeflow"))
            .args(["measure", "--f", "-exp(-z)", "--z0", "0", "--N", "200", "--seed", "7", "--tmax", "20", "--svg", "--out"])
            .arg(dir.path())
            .output()
            .map_err(s)?
            .status;
        if !status.success() {
            return Err(format!("measure exited with {status}"));
        }
    }
    let read = |p: &Path| -> Result<Vec<(std::ffi::OsString, Vec<u8>)>, String> {
        let mut files: Vec<_> = std::fs::read_dir(p)
            .map_err(s)?
            .map(|e| {
                let e = e.map_err(s)?;
                Ok((e.file_name(), std::fs::read(e.path()).map_err(s)?))
            })
            .collect::<Result<_, String>>()?;
        files.sort();
        Ok(files)
    };
    let a = read(dirs[0].path())?;
    Ok(a.len() >= 2 && a == read(dirs[1].path())?)
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("closed-form example", closed_form_example),
        ("polynomial blowup", polynomial_blowup),
        ("conformal clock", conformal_clock),
        ("antiholomorphic dichotomy", antiholo_dichotomy),
        ("transit quadrature vs ODE", transit_vs_ode),
        ("tract", tract),
        ("measure zero", measure_zero),
        ("rubel path", rubel),
        ("infinite-time criterion", criterion),
        ("property suites", properties),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (passed, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        failures += usize::from(!passed);
        println!("{} {:>2} {name}: {detail}", if passed { "PASS" } else { "FAIL" }, i + 1);
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
