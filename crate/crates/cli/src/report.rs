//! JSON reports and CSV tables.

use std::fs;
use std::path::{Path, PathBuf};

use escapeflow::flow::Trajectory;
use escapeflow::level::LevelCurve;
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid JSON in {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("CSV error for {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize to JSON");
    s.push('\n');
    s
}

/// Writes `report` as pretty JSON. Floats use the shortest round-trip form.
pub fn write_report<T: Serialize>(report: &T, path: &Path) -> Result<(), OutputError> {
    write_text(path, &to_json(report))
}

pub fn read_report<T: DeserializeOwned>(path: &Path) -> Result<T, OutputError> {
    let text = fs::read_to_string(path).map_err(|source| OutputError::Read { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| OutputError::Json { path: path.into(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), OutputError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| OutputError::Write { path: dir.into(), source })?;
    }
    fs::write(path, text).map_err(|source| OutputError::Write { path: path.into(), source })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv { path: path.into(), source }
}

/// Columns `t, re_z, im_z, abs_z, step_error`, one row per sample.
pub fn trajectory_csv(traj: &Trajectory) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "re_z", "im_z", "abs_z", "step_error"])?;
    for s in &traj.samples {
        w.serialize((s.t, s.z.re, s.z.im, s.z.norm(), s.step_error))?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV is UTF-8"))
}

/// Columns `X, re_z, im_z, abs_z`.
pub fn level_csv(curve: &LevelCurve) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["X", "re_z", "im_z", "abs_z"])?;
    for (x, z) in &curve.samples {
        w.serialize((x, z.re, z.im, z.norm()))?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV is UTF-8"))
}

pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<(), OutputError> {
    let text = trajectory_csv(traj).map_err(csv_err(path))?;
    write_text(path, &text)
}

pub fn write_level_csv(curve: &LevelCurve, path: &Path) -> Result<(), OutputError> {
    let text = level_csv(curve).map_err(csv_err(path))?;
    write_text(path, &text)
}
