//! Post-hoc checks on a run CSV.

use std::path::Path;

use serde::Deserialize;
use towerfan_core::plant::PowerBreakdown;

use crate::error::{HarnessError, Result};
use crate::sim::RUN_COLUMNS;

#[derive(Debug, Deserialize)]
struct Row {
    timestamp_s: f64,
    t_db_c: f64,
    t_wb_c: f64,
    fan_cmd_pct: f64,
    p_chiller_kw: f64,
    p_tower_kw: f64,
    p_cw_pump_kw: f64,
    p_chw_pump_kw: f64,
    p_ahu_kw: f64,
    p_total_kw: f64,
    relay_sign: Option<i8>,
    j_filtered: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub rows: usize,
    pub switches: usize,
    /// Shortest time between relay switches, counting the first switch
    /// from the start of the run.
    pub min_switch_interval_s: Option<f64>,
    pub dwell_checked: bool,
}

/// Dwell limit recorded in a `summary.json` next to the run file, if any.
pub fn dwell_limit_from_summary(run_csv: &Path) -> Option<f64> {
    let summary = run_csv.parent()?.join("summary.json");
    let text = std::fs::read_to_string(summary).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v.get("esc")?.get("dwell_limit_s")?.as_f64()
}

pub fn validate_run_file(path: &Path, dwell_limit: Option<f64>) -> Result<ValidationReport> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    validate_run(file, path, dwell_limit)
}

/// Checks the power breakdown sums, physical ranges, time grid and, when a
/// dwell limit is given, the relay hold time.
pub fn validate_run<R: std::io::Read>(reader: R, path: &Path, dwell_limit: Option<f64>) -> Result<ValidationReport> {
    let fail = |row: u64, message: String| HarnessError::Validation {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(|e| fail(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != RUN_COLUMNS {
        return Err(fail(1, format!("expected columns {}", RUN_COLUMNS.join(","))));
    }

    let mut n = 0usize;
    let mut first_t = None;
    let mut prev: Option<Row> = None;
    let mut step = None;
    let mut last_switch: Option<f64> = None;
    let mut switches = 0;
    let mut min_interval: Option<f64> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| fail(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: Row = rec.deserialize(Some(&header)).map_err(|e| fail(line, e.to_string()))?;

        let total = PowerBreakdown::sum(
            row.p_chiller_kw,
            row.p_tower_kw,
            row.p_cw_pump_kw,
            row.p_chw_pump_kw,
            row.p_ahu_kw,
        );
        if total != row.p_total_kw {
            return Err(fail(
                line,
                format!("p_total_kw {} != component sum {total}", row.p_total_kw),
            ));
        }
        let powers = [
            row.p_chiller_kw,
            row.p_tower_kw,
            row.p_cw_pump_kw,
            row.p_chw_pump_kw,
            row.p_ahu_kw,
        ];
        if powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(fail(line, "negative or non-finite power".into()));
        }
        if !(0.0..=100.0).contains(&row.fan_cmd_pct) {
            return Err(fail(line, format!("fan command {} outside [0, 100]", row.fan_cmd_pct)));
        }
        if row.t_wb_c > row.t_db_c {
            return Err(fail(line, "wet bulb above dry bulb".into()));
        }
        match row.relay_sign {
            None | Some(-1) | Some(1) => {}
            Some(s) => return Err(fail(line, format!("relay_sign {s} not in {{-1, 1}}"))),
        }
        if row.relay_sign.is_some() != row.j_filtered.is_some() {
            return Err(fail(
                line,
                "relay_sign and j_filtered must be both present or both blank".into(),
            ));
        }

        let t0 = *first_t.get_or_insert(row.timestamp_s);
        if let Some(p) = &prev {
            let dt = row.timestamp_s - p.timestamp_s;
            if !(dt > 0.0) {
                return Err(fail(line, "timestamps not increasing".into()));
            }
            let expected = *step.get_or_insert(dt);
            if (dt - expected).abs() > 1e-9 * expected {
                return Err(fail(line, format!("step {dt} s differs from {expected} s")));
            }
            if p.relay_sign.is_some() != row.relay_sign.is_some() {
                return Err(fail(line, "controller columns change mid-run".into()));
            }
            if row.relay_sign != p.relay_sign {
                switches += 1;
                // the hold timer starts at zero one step before the first row
                let since = match last_switch {
                    Some(s) => row.timestamp_s - s,
                    None => row.timestamp_s - t0 + expected,
                };
                min_interval = Some(min_interval.map_or(since, |m: f64| m.min(since)));
                if let Some(limit) = dwell_limit {
                    if since < limit {
                        return Err(fail(
                            line,
                            format!("relay switched after {since} s, dwell limit {limit} s"),
                        ));
                    }
                }
                last_switch = Some(row.timestamp_s);
            }
        }
        prev = Some(row);
        n += 1;
    }
    if n == 0 {
        return Err(fail(2, "no rows".into()));
    }
    Ok(ValidationReport {
        rows: n,
        switches,
        min_switch_interval_s: min_interval,
        dwell_checked: dwell_limit.is_some(),
    })
}
