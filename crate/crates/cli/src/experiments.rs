//! Multi-run experiments: fixed-speed sweeps, controller comparison,
//! impulse test and degraded-meter validation.

use rayon::prelude::*;
use serde::Serialize;
use towerfan_core::metrics::{compute_metrics, daily_savings_stats, integrate_energy, SavingsStats};
use towerfan_core::plant::PlantConfig;
use towerfan_core::sysid::{run_plant_impulse_test, ImpulseResult, ImpulseTestSpec};
use towerfan_core::vpm::{
    calibrate_correction_factor, inject_noise, vpm_chiller_power, vpm_fan_power, FlowReading, SensorFrame, VpmConfig,
};

use crate::error::{HarnessError, ModelError, Result};
use crate::scenario::Scenario;
use crate::sim::{run_with, ControllerSpec, EnergyTotals, MetricsJson, RunRecord, RunRow};

/// Runs `f` on a pool of `jobs` threads (`0` = one per core).
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Argument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Parses `a,b,c` or `start:stop:step` (inclusive) into sorted, deduplicated speeds.
pub fn parse_speeds(spec: &str) -> Result<Vec<f64>> {
    let bad = |m: &str| HarnessError::Argument(format!("--speeds {spec:?}: {m}"));
    let mut speeds: Vec<f64> = if spec.contains(':') {
        let parts: Vec<f64> = spec
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("expected start:stop:step"))?;
        let [start, stop, step] = parts[..] else {
            return Err(bad("expected start:stop:step"));
        };
        if !(step > 0.0) || stop < start {
            return Err(bad("need step > 0 and stop >= start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| start + step * i as f64).collect()
    } else {
        spec.split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("expected comma-separated numbers"))?
    };
    if speeds.is_empty() {
        return Err(bad("empty speed list"));
    }
    if let Some(s) = speeds.iter().find(|s| !(**s >= 0.0 && **s <= 100.0)) {
        return Err(bad(&format!("speed {s} outside [0, 100]")));
    }
    speeds.sort_by(f64::total_cmp);
    speeds.dedup();
    Ok(speeds)
}

/// The 5 % grid used by the convexity experiments.
pub fn default_speeds() -> Vec<f64> {
    (0..=20).map(|i| 5.0 * i as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub speed_pct: f64,
    pub energy: EnergyTotals,
}

/// One fixed-speed run per speed, sorted by speed.
pub fn run_sweep(sc: &Scenario, speeds: &[f64], jobs: usize) -> Result<Vec<SweepPoint>> {
    sweep_records(sc, speeds, jobs)?
        .into_iter()
        .map(|(speed_pct, rec)| rec.energy().map(|energy| SweepPoint { speed_pct, energy }))
        .collect()
}

fn sweep_records(sc: &Scenario, speeds: &[f64], jobs: usize) -> Result<Vec<(f64, RunRecord)>> {
    if speeds.is_empty() {
        return Err(HarnessError::Argument("empty speed list".into()));
    }
    let mut sorted = speeds.to_vec();
    sorted.sort_by(f64::total_cmp);
    with_jobs(jobs, || {
        sorted
            .par_iter()
            .map(|&s| run_with(sc, ControllerSpec::Fixed(s)).map(|r| (s, r)))
            .collect::<Result<Vec<_>>>()
    })?
}

pub fn sweep_argmin(points: &[SweepPoint]) -> Option<SweepPoint> {
    points
        .iter()
        .copied()
        .min_by(|a, b| a.energy.total_kwh.total_cmp(&b.energy.total_kwh))
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("speed_pct,total_kwh,chiller_kwh,tower_kwh,cw_pump_kwh,chw_pump_kwh,ahu_kwh\n");
    for p in points {
        let e = p.energy;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.speed_pct, e.total_kwh, e.chiller_kwh, e.tower_kwh, e.cw_pump_kwh, e.chw_pump_kwh, e.ahu_kwh
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SavingsJson {
    pub mean_pct: f64,
    pub std_pct: f64,
    pub ci95_low_pct: f64,
    pub ci95_high_pct: f64,
    pub n_days: usize,
}

impl From<SavingsStats<f64>> for SavingsJson {
    fn from(s: SavingsStats<f64>) -> Self {
        Self {
            mean_pct: s.mean_pct,
            std_pct: s.std_pct,
            ci95_low_pct: s.ci95_low_pct,
            ci95_high_pct: s.ci95_high_pct,
            n_days: s.n_days,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ControllerEnergy {
    pub controller: String,
    pub energy: EnergyTotals,
    pub daily_kwh: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub seed: u64,
    pub controllers: Vec<ControllerEnergy>,
    /// ESC savings over the whole run, percent of the baseline's energy.
    pub savings_vs_fixed100_pct: f64,
    pub savings_vs_pid_pct: f64,
    pub daily_vs_fixed100: Option<SavingsJson>,
    pub daily_vs_pid: Option<SavingsJson>,
}

pub struct Comparison {
    pub report: ComparisonReport,
    /// Run records in the order esc, fixed-100, pid.
    pub records: Vec<RunRecord>,
}

/// ESC, fixed 100 % and ideal PID on identical weather and seed.
pub fn compare_controllers(sc: &Scenario, jobs: usize) -> Result<Comparison> {
    let specs = [ControllerSpec::Esc, ControllerSpec::Fixed(100.0), ControllerSpec::Pid];
    let records = with_jobs(jobs, || {
        specs.par_iter().map(|&s| run_with(sc, s)).collect::<Result<Vec<_>>>()
    })??;
    let spd = sc.steps_per_day();
    let mut controllers = Vec::with_capacity(3);
    for rec in &records {
        controllers.push(ControllerEnergy {
            controller: rec.controller.label(),
            energy: rec.energy()?,
            daily_kwh: rec.daily_energy(spd)?,
        });
    }
    let pct = |base: f64, treat: f64| 100.0 * (base - treat) / base;
    let esc = &controllers[0];
    let stats = |base: &ControllerEnergy| {
        daily_savings_stats(&base.daily_kwh, &esc.daily_kwh)
            .ok()
            .map(Into::into)
    };
    let report = ComparisonReport {
        scenario: sc.name.clone(),
        seed: sc.seed,
        savings_vs_fixed100_pct: pct(controllers[1].energy.total_kwh, esc.energy.total_kwh),
        savings_vs_pid_pct: pct(controllers[2].energy.total_kwh, esc.energy.total_kwh),
        daily_vs_fixed100: stats(&controllers[1]),
        daily_vs_pid: stats(&controllers[2]),
        controllers,
    };
    Ok(Comparison { report, records })
}

pub fn comparison_csv(report: &ComparisonReport) -> String {
    let mut out = String::from("controller,total_kwh,chiller_kwh,tower_kwh,cw_pump_kwh,chw_pump_kwh,ahu_kwh\n");
    for c in &report.controllers {
        let e = c.energy;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.controller, e.total_kwh, e.chiller_kwh, e.tower_kwh, e.cw_pump_kwh, e.chw_pump_kwh, e.ahu_kwh
        ));
    }
    out
}

pub fn comparison_daily_csv(report: &ComparisonReport) -> String {
    let mut out = String::from("day,esc_kwh,fixed100_kwh,pid_kwh\n");
    let c = &report.controllers;
    for (day, ((e, f), p)) in c[0]
        .daily_kwh
        .iter()
        .zip(&c[1].daily_kwh)
        .zip(&c[2].daily_kwh)
        .enumerate()
    {
        out.push_str(&format!("{},{},{},{}\n", day + 1, e, f, p));
    }
    out
}

/// Impulse test on the scenario's plant at its initial weather.
pub fn impulse_test(sc: &Scenario) -> Result<ImpulseResult<f64>> {
    let spec = ImpulseTestSpec {
        dt: sc.dt,
        ..ImpulseTestSpec::default()
    };
    run_plant_impulse_test(&spec, &sc.plant, &sc.weather.at(0.0)).map_err(|e| HarnessError::from(ModelError::from(e)))
}

pub fn impulse_csv(result: &ImpulseResult<f64>) -> String {
    let mut out = String::from("t_s,fan_speed_pct,p_total_kw\n");
    for s in &result.trace {
        out.push_str(&format!("{},{},{}\n", s.t, s.fan_speed, s.p_total));
    }
    out
}

/// Sensor frame the meters would see for a recorded step.
pub fn sensor_frame(row: &RunRow, plant: &PlantConfig<f64>, flow: FlowReading<f64>) -> SensorFrame<f64> {
    SensorFrame {
        t_evap_e: row.t_chwr_c,
        t_evap_l: plant.t_chws_setpoint,
        t_cond_e: row.t_cws_c,
        m_chw: flow,
        fan_speed: row.fan_cmd_pct,
        timestamp: row.timestamp_s,
    }
}

/// Uncorrected chiller estimates from flow-less, optionally noisy frames.
fn degraded_estimates(sc: &Scenario, rows: &[RunRow], meter: &VpmConfig<f64>) -> Result<Vec<f64>> {
    rows.iter()
        .enumerate()
        .map(|(k, row)| {
            let mut frame = sensor_frame(row, &sc.plant, FlowReading::Absent);
            if let Some(noise) = &sc.noise {
                frame = inject_noise(&frame, noise, &mut noise.rng_for_stream(k as u64));
            }
            vpm_chiller_power(&frame, meter).map_err(|e| HarnessError::at_step(k, e))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BiasResult {
    pub flow_bias: f64,
    pub correction_factor: f64,
    pub metrics: MetricsJson,
    pub true_argmin_pct: f64,
    pub vpm_argmin_pct: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VpmValidateReport {
    pub scenario: String,
    pub controller: String,
    pub seed: u64,
    /// Exact sensors, true flow, no correction: estimate equals plant power on every step.
    pub exact_sensor_bit_identical: bool,
    pub resample_s: f64,
    /// Averaged samples used for fitting and for scoring.
    pub training_rows: usize,
    pub evaluation_rows: usize,
    pub results: Vec<BiasResult>,
}

pub struct VpmValidation {
    pub report: VpmValidateReport,
    pub histogram_csv: String,
    pub sweep_csv: String,
}

/// Degraded-meter experiment: flow sensor removed, assumed flow off by each
/// configured bias, noise from the scenario, readings averaged over
/// `resample_s`. The correction factor is fitted on the first
/// `training_days` and scored on the rest, then reused to rank a fixed-speed
/// sweep.
pub fn vpm_validate(sc: &Scenario, jobs: usize) -> Result<VpmValidation> {
    let spec = ControllerSpec::from_scenario(sc);
    let run = run_with(sc, spec)?;
    let rows = &run.rows;
    let block = (sc.vpm.resample_s / sc.dt).round() as usize;
    let n_blocks = rows.len() / block;
    let split = (sc.vpm.training_days * sc.steps_per_day() / block).min(n_blocks);
    let (train, eval) = if split == 0 || split == n_blocks {
        (n_blocks, 0..n_blocks)
    } else {
        (split, split..n_blocks)
    };

    let exact_meter = VpmConfig::matched(&sc.plant);
    let exact = rows.iter().all(|row| {
        let frame = sensor_frame(row, &sc.plant, FlowReading::Measured(sc.plant.m_chw));
        matches!(vpm_chiller_power(&frame, &exact_meter), Ok(p) if p == row.p_chiller_kw)
    });

    let sweep = sweep_records(sc, &default_speeds(), jobs)?;
    let truth = block_means(&rows.iter().map(|r| r.p_chiller_kw).collect::<Vec<_>>(), block);

    let mut results = Vec::new();
    let mut histogram_csv = String::from("flow_bias,bin_low_kw,bin_high_kw,count\n");
    let mut sweep_out = String::from("flow_bias,speed_pct,true_total_kwh,vpm_total_kwh\n");
    for &bias in &sc.vpm.flow_biases {
        let meter = VpmConfig {
            assumed_flow: sc.plant.m_chw * bias,
            ..VpmConfig::matched(&sc.plant)
        };
        let est = block_means(&degraded_estimates(sc, rows, &meter)?, block);
        let k = calibrate_correction_factor(&est[..train], &truth[..train])
            .map_err(|e| HarnessError::from(ModelError::from(e)))?;
        let corrected: Vec<f64> = est[eval.clone()].iter().map(|e| k * e).collect();
        let metrics =
            compute_metrics(&truth[eval.clone()], &corrected).map_err(|e| HarnessError::from(ModelError::from(e)))?;

        let diffs: Vec<f64> = truth[eval.clone()].iter().zip(&corrected).map(|(t, c)| t - c).collect();
        for (lo, hi, count) in histogram(&diffs, sc.vpm.histogram_bins) {
            histogram_csv.push_str(&format!("{bias},{lo},{hi},{count}\n"));
        }

        let mut true_best = (f64::NAN, f64::INFINITY);
        let mut vpm_best = (f64::NAN, f64::INFINITY);
        for (speed, rec) in &sweep {
            let true_kwh = rec.energy()?.total_kwh;
            let est = degraded_estimates(sc, &rec.rows, &meter)?;
            let power: Vec<f64> = rec
                .rows
                .iter()
                .zip(&est)
                .enumerate()
                .map(|(i, (r, e))| {
                    let fan = vpm_fan_power(&sensor_frame(r, &sc.plant, FlowReading::Absent), &meter)
                        .map_err(|err| HarnessError::at_step(i, err))?;
                    Ok(k * e + fan + r.p_cw_pump_kw + r.p_chw_pump_kw + r.p_ahu_kw)
                })
                .collect::<Result<_>>()?;
            let vpm_kwh = integrate_energy(&power, sc.dt).map_err(|e| HarnessError::from(ModelError::from(e)))?;
            sweep_out.push_str(&format!("{bias},{speed},{true_kwh},{vpm_kwh}\n"));
            if true_kwh < true_best.1 {
                true_best = (*speed, true_kwh);
            }
            if vpm_kwh < vpm_best.1 {
                vpm_best = (*speed, vpm_kwh);
            }
        }
        results.push(BiasResult {
            flow_bias: bias,
            correction_factor: k,
            metrics: metrics.into(),
            true_argmin_pct: true_best.0,
            vpm_argmin_pct: vpm_best.0,
        });
    }

    Ok(VpmValidation {
        report: VpmValidateReport {
            scenario: sc.name.clone(),
            controller: spec.label(),
            seed: sc.seed,
            exact_sensor_bit_identical: exact,
            resample_s: sc.vpm.resample_s,
            training_rows: train,
            evaluation_rows: eval.len(),
            results,
        },
        histogram_csv,
        sweep_csv: sweep_out,
    })
}

/// Means of consecutive non-overlapping blocks; a partial tail is dropped.
pub fn block_means(values: &[f64], block: usize) -> Vec<f64> {
    values
        .chunks_exact(block)
        .map(|c| c.iter().sum::<f64>() / block as f64)
        .collect()
}

/// Equal-width bins over the data range: `(low, high, count)`.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + width * i as f64, lo + width * (i + 1) as f64, c))
        .collect()
}
