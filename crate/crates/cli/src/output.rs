//! Subcommand bodies: run an experiment and write its files under `out`.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::experiments::{
    compare_controllers, comparison_csv, comparison_daily_csv, impulse_csv, impulse_test, run_sweep, sweep_argmin,
    sweep_csv, vpm_validate, ComparisonReport, SweepPoint, VpmValidateReport,
};
use crate::scenario::Scenario;
use crate::sim::{run_scenario, summarize, RunSummary};

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    write_file(path, &text)
}

/// `run`: `run.csv` and `summary.json`.
pub fn run_command(sc: &Scenario, out: &Path) -> Result<RunSummary> {
    let record = run_scenario(sc)?;
    let summary = summarize(sc, &record)?;
    write_file(&out.join("run.csv"), &record.to_csv())?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// `sweep`: `sweep.csv`.
pub fn sweep_command(sc: &Scenario, speeds: &[f64], jobs: usize, out: &Path) -> Result<Vec<SweepPoint>> {
    let points = run_sweep(sc, speeds, jobs)?;
    write_file(&out.join("sweep.csv"), &sweep_csv(&points))?;
    Ok(points)
}

pub fn sweep_report(points: &[SweepPoint]) -> String {
    let best = sweep_argmin(points).expect("non-empty sweep");
    format!(
        "{} speeds, minimum {:.2} kWh at {} %",
        points.len(),
        best.energy.total_kwh,
        best.speed_pct
    )
}

/// `compare`: per-controller totals, daily energy, the report and each run.
pub fn compare_command(sc: &Scenario, jobs: usize, out: &Path) -> Result<ComparisonReport> {
    let cmp = compare_controllers(sc, jobs)?;
    write_file(&out.join("compare.csv"), &comparison_csv(&cmp.report))?;
    write_file(&out.join("compare_daily.csv"), &comparison_daily_csv(&cmp.report))?;
    write_json(&out.join("compare.json"), &cmp.report)?;
    for (name, rec) in ["esc", "fixed100", "pid"].iter().zip(&cmp.records) {
        write_file(&out.join(format!("compare_{name}.csv")), &rec.to_csv())?;
    }
    Ok(cmp.report)
}

/// `impulse`: `impulse.csv`; returns the time-constant estimate.
pub fn impulse_command(sc: &Scenario, out: &Path) -> Result<f64> {
    let result = impulse_test(sc)?;
    write_file(&out.join("impulse.csv"), &impulse_csv(&result))?;
    Ok(result.tau_est)
}

/// `vpm-validate`: report, difference histogram and sweep ranking.
pub fn vpm_validate_command(sc: &Scenario, jobs: usize, out: &Path) -> Result<VpmValidateReport> {
    let v = vpm_validate(sc, jobs)?;
    write_json(&out.join("vpm_validate.json"), &v.report)?;
    write_file(&out.join("vpm_histogram.csv"), &v.histogram_csv)?;
    write_file(&out.join("vpm_sweep.csv"), &v.sweep_csv)?;
    Ok(v.report)
}

pub fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
