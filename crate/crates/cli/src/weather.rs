//! Weather files: CSV with header `timestamp_s,t_db_c,t_wb_c`.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use towerfan_core::plant::WeatherSample;

use crate::error::{HarnessError, Result};

pub const WEATHER_HEADER: [&str; 3] = ["timestamp_s", "t_db_c", "t_wb_c"];

#[derive(Debug, Deserialize)]
struct Row {
    timestamp_s: f64,
    t_db_c: f64,
    t_wb_c: f64,
}

/// Weather samples with strictly increasing timestamps, linearly
/// interpolated between rows.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSeries {
    samples: Vec<WeatherSample<f64>>,
}

impl WeatherSeries {
    pub fn new(samples: Vec<WeatherSample<f64>>) -> std::result::Result<Self, String> {
        if samples.is_empty() {
            return Err("weather series is empty".into());
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].timestamp <= w[0].timestamp) {
            return Err(format!("timestamps not strictly increasing at sample {}", i + 1));
        }
        Ok(Self { samples })
    }

    /// A single sample held for all time.
    pub fn constant(t_db: f64, t_wb: f64) -> std::result::Result<Self, String> {
        let s = WeatherSample::new(0.0, t_db, t_wb).map_err(|e| e.to_string())?;
        Ok(Self { samples: vec![s] })
    }

    pub fn samples(&self) -> &[WeatherSample<f64>] {
        &self.samples
    }

    /// Checks that `[start, end]` lies inside the file's time span.
    pub fn check_covers(&self, start: f64, end: f64) -> std::result::Result<(), String> {
        if self.samples.len() == 1 {
            return Ok(());
        }
        let first = self.samples[0].timestamp;
        let last = self.samples[self.samples.len() - 1].timestamp;
        if first > start || last < end {
            return Err(format!(
                "weather covers [{first}, {last}] s but the run needs [{start}, {end}] s"
            ));
        }
        Ok(())
    }

    /// Interpolated sample at `t`; values are held beyond either end.
    pub fn at(&self, t: f64) -> WeatherSample<f64> {
        let s = &self.samples;
        let idx = s.partition_point(|w| w.timestamp <= t);
        let sample = if idx == 0 {
            s[0]
        } else if idx == s.len() {
            s[s.len() - 1]
        } else {
            let (a, b) = (s[idx - 1], s[idx]);
            let f = (t - a.timestamp) / (b.timestamp - a.timestamp);
            WeatherSample {
                timestamp: t,
                t_db: a.t_db + f * (b.t_db - a.t_db),
                t_wb: a.t_wb + f * (b.t_wb - a.t_wb),
            }
        };
        WeatherSample { timestamp: t, ..sample }
    }
}

pub fn load_weather(path: &Path) -> Result<WeatherSeries> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::Weather {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    read_weather(file, path)
}

/// Parses weather CSV from any reader. `path` is only used in messages.
pub fn read_weather<R: std::io::Read>(reader: R, path: &Path) -> Result<WeatherSeries> {
    let fail = |line: u64, message: String| HarnessError::Weather {
        path: PathBuf::from(path),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| fail(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != WEATHER_HEADER {
        return Err(fail(1, format!("expected header {}", WEATHER_HEADER.join(","))));
    }
    let mut samples: Vec<WeatherSample<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            fail(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row: Row = record
            .deserialize(Some(&header))
            .map_err(|e| fail(line, format!("malformed row: {e}")))?;
        let sample =
            WeatherSample::new(row.timestamp_s, row.t_db_c, row.t_wb_c).map_err(|e| fail(line, e.to_string()))?;
        if let Some(prev) = samples.last() {
            if sample.timestamp <= prev.timestamp {
                return Err(fail(line, format!("timestamp {} does not increase", sample.timestamp)));
            }
        }
        samples.push(sample);
    }
    WeatherSeries::new(samples).map_err(|m| fail(0, m))
}
