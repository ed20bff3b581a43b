//! Closed-loop driver: weather → plant → meters → cost → controller.

use serde::Serialize;
use towerfan_core::baseline::{fixed_step, ideal_pid_step, FixedSpeedConfig};
use towerfan_core::esc::EscController;
use towerfan_core::metrics::{compute_metrics, integrate_energy, MetricsReport};
use towerfan_core::plant::{plant_step, PlantState};
use towerfan_core::vpm::{inject_noise, vpm_chiller_power, vpm_fan_power, SensorFrame};

use crate::error::{HarnessError, ModelError, Result};
use crate::scenario::{ControllerKind, CostSource, Scenario};

/// Which controller drives a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerSpec {
    Esc,
    Fixed(f64),
    Pid,
}

impl ControllerSpec {
    pub fn from_scenario(sc: &Scenario) -> Self {
        match sc.controller {
            ControllerKind::Esc => ControllerSpec::Esc,
            ControllerKind::Fixed => ControllerSpec::Fixed(sc.fixed.speed()),
            ControllerKind::Pid => ControllerSpec::Pid,
        }
    }

    pub fn label(&self) -> String {
        match self {
            ControllerSpec::Esc => "esc".into(),
            ControllerSpec::Fixed(s) => format!("fixed-{s}"),
            ControllerSpec::Pid => "pid".into(),
        }
    }
}

enum Controller {
    Esc(EscController<f64>),
    Fixed(FixedSpeedConfig<f64>),
    Pid,
}

/// One simulation step as written to the run CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRow {
    pub timestamp_s: f64,
    pub t_db_c: f64,
    pub t_wb_c: f64,
    /// Command applied during this step.
    pub fan_cmd_pct: f64,
    pub t_cws_c: f64,
    pub t_cwr_c: f64,
    pub t_chwr_c: f64,
    pub plr: f64,
    pub q_load_kw: f64,
    pub p_chiller_kw: f64,
    pub p_tower_kw: f64,
    pub p_cw_pump_kw: f64,
    pub p_chw_pump_kw: f64,
    pub p_ahu_kw: f64,
    pub p_total_kw: f64,
    /// Relay direction after the controller update (ESC only).
    pub relay_sign: Option<i8>,
    pub j_filtered: Option<f64>,
    pub p_chiller_vpm_kw: f64,
    pub p_fan_vpm_kw: f64,
}

pub const RUN_COLUMNS: [&str; 19] = [
    "timestamp_s",
    "t_db_c",
    "t_wb_c",
    "fan_cmd_pct",
    "t_cws_c",
    "t_cwr_c",
    "t_chwr_c",
    "plr",
    "q_load_kw",
    "p_chiller_kw",
    "p_tower_kw",
    "p_cw_pump_kw",
    "p_chw_pump_kw",
    "p_ahu_kw",
    "p_total_kw",
    "relay_sign",
    "j_filtered",
    "p_chiller_vpm_kw",
    "p_fan_vpm_kw",
];

impl RunRow {
    /// Cost seen by the controller under `source`. Pumps and air handler
    /// have no meter model, so they always come from the plant.
    pub fn cost(&self, source: CostSource) -> f64 {
        match source {
            CostSource::True => self.p_total_kw,
            CostSource::Vpm => {
                self.p_chiller_vpm_kw + self.p_fan_vpm_kw + self.p_cw_pump_kw + self.p_chw_pump_kw + self.p_ahu_kw
            }
        }
    }

    pub fn write_csv_line(&self, out: &mut String) {
        use std::fmt::Write;
        let opt = |v: Option<String>| v.unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.timestamp_s,
            self.t_db_c,
            self.t_wb_c,
            self.fan_cmd_pct,
            self.t_cws_c,
            self.t_cwr_c,
            self.t_chwr_c,
            self.plr,
            self.q_load_kw,
            self.p_chiller_kw,
            self.p_tower_kw,
            self.p_cw_pump_kw,
            self.p_chw_pump_kw,
            self.p_ahu_kw,
            self.p_total_kw,
            opt(self.relay_sign.map(|s| s.to_string())),
            opt(self.j_filtered.map(|j| j.to_string())),
            self.p_chiller_vpm_kw,
            self.p_fan_vpm_kw,
        );
    }
}

/// Energy per component over a run, kWh.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyTotals {
    pub chiller_kwh: f64,
    pub tower_kwh: f64,
    pub cw_pump_kwh: f64,
    pub chw_pump_kwh: f64,
    pub ahu_kwh: f64,
    pub total_kwh: f64,
}

impl EnergyTotals {
    pub fn of(rows: &[RunRow], dt: f64) -> Result<Self> {
        let e = |f: fn(&RunRow) -> f64| -> Result<f64> {
            let series: Vec<f64> = rows.iter().map(f).collect();
            integrate_energy(&series, dt).map_err(|e| HarnessError::from(ModelError::from(e)))
        };
        Ok(Self {
            chiller_kwh: e(|r| r.p_chiller_kw)?,
            tower_kwh: e(|r| r.p_tower_kw)?,
            cw_pump_kwh: e(|r| r.p_cw_pump_kw)?,
            chw_pump_kwh: e(|r| r.p_chw_pump_kw)?,
            ahu_kwh: e(|r| r.p_ahu_kw)?,
            total_kwh: e(|r| r.p_total_kw)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub controller: ControllerSpec,
    pub dt: f64,
    pub rows: Vec<RunRow>,
}

impl RunRecord {
    pub fn energy(&self) -> Result<EnergyTotals> {
        EnergyTotals::of(&self.rows, self.dt)
    }

    /// Total energy per day (kWh), whole days only.
    pub fn daily_energy(&self, steps_per_day: usize) -> Result<Vec<f64>> {
        self.rows
            .chunks_exact(steps_per_day)
            .map(|day| EnergyTotals::of(day, self.dt).map(|e| e.total_kwh))
            .collect()
    }

    /// Times (s) at which the relay changed direction.
    pub fn switch_times(&self) -> Vec<f64> {
        self.rows
            .windows(2)
            .filter(|w| w[0].relay_sign != w[1].relay_sign)
            .map(|w| w[1].timestamp_s)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 256);
        out.push_str(&RUN_COLUMNS.join(","));
        out.push('\n');
        for row in &self.rows {
            row.write_csv_line(&mut out);
        }
        out
    }

    /// Chiller meter agreement with the plant over the run.
    pub fn vpm_metrics(&self) -> Option<MetricsReport<f64>> {
        let truth: Vec<f64> = self.rows.iter().map(|r| r.p_chiller_kw).collect();
        let est: Vec<f64> = self.rows.iter().map(|r| r.p_chiller_vpm_kw).collect();
        compute_metrics(&truth, &est).ok()
    }
}

/// Runs the scenario with its configured controller.
pub fn run_scenario(sc: &Scenario) -> Result<RunRecord> {
    run_with(sc, ControllerSpec::from_scenario(sc))
}

/// Runs the scenario with `spec` in place of its configured controller.
pub fn run_with(sc: &Scenario, spec: ControllerSpec) -> Result<RunRecord> {
    let dt = sc.dt;
    let n = sc.steps();
    let mut controller = match spec {
        ControllerSpec::Esc => Controller::Esc(EscController::new(sc.esc)),
        ControllerSpec::Fixed(s) => {
            Controller::Fixed(FixedSpeedConfig::new(s).map_err(|e| HarnessError::Argument(e.to_string()))?)
        }
        ControllerSpec::Pid => Controller::Pid,
    };
    let mut command = match &controller {
        Controller::Esc(c) => c.command(),
        Controller::Fixed(f) => fixed_step(f),
        // start flat out until the first measurement arrives
        Controller::Pid => 100.0,
    };
    let meter = sc.vpm.meter(&sc.plant);
    let flow = sc.vpm.flow_reading(&sc.plant);

    let mut state =
        PlantState::settled(&sc.plant, command, &sc.weather.at(0.0), dt).map_err(|e| HarnessError::at_step(0, e))?;
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt;
        let weather = sc.weather.at(t);
        state = plant_step(&state, command, &weather, dt, &sc.plant).map_err(|e| HarnessError::at_step(k, e))?;

        let mut frame = SensorFrame::from_plant(&state, &sc.plant);
        frame.m_chw = flow;
        if let Some(noise) = &sc.noise {
            frame = inject_noise(&frame, noise, &mut noise.rng_for_stream(k as u64));
        }
        let p_chiller_vpm = vpm_chiller_power(&frame, &meter).map_err(|e| HarnessError::at_step(k, e))?;
        let p_fan_vpm = vpm_fan_power(&frame, &meter).map_err(|e| HarnessError::at_step(k, e))?;

        let p = state.powers;
        let mut row = RunRow {
            timestamp_s: t,
            t_db_c: weather.t_db,
            t_wb_c: weather.t_wb,
            fan_cmd_pct: state.fan_speed,
            t_cws_c: state.t_cws,
            t_cwr_c: state.t_cwr,
            t_chwr_c: state.t_chwr,
            plr: state.plr,
            q_load_kw: state.q_load,
            p_chiller_kw: p.p_chiller,
            p_tower_kw: p.p_tower,
            p_cw_pump_kw: p.p_cw_pump,
            p_chw_pump_kw: p.p_chw_pump,
            p_ahu_kw: p.p_ahu,
            p_total_kw: p.p_total,
            relay_sign: None,
            j_filtered: None,
            p_chiller_vpm_kw: p_chiller_vpm,
            p_fan_vpm_kw: p_fan_vpm,
        };

        command = match &mut controller {
            Controller::Esc(esc) => {
                let j = row.cost(sc.cost_source);
                let next = esc.step(j).map_err(|e| HarnessError::at_step(k, e))?;
                row.relay_sign = Some(esc.state().relay.sign());
                row.j_filtered = Some(esc.state().j_filtered);
                next
            }
            Controller::Fixed(f) => fixed_step(f),
            Controller::Pid => ideal_pid_step(&sc.pid, &state, &weather, &sc.plant),
        };
        rows.push(row);
    }
    Ok(RunRecord {
        controller: spec,
        dt,
        rows,
    })
}

/// Contents of `summary.json` for a single run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub controller: String,
    pub cost_source: &'static str,
    pub seed: u64,
    pub dt_s: f64,
    pub steps: usize,
    pub energy: EnergyTotals,
    pub mean_fan_pct: f64,
    pub esc: Option<EscSummary>,
    pub vpm_chiller: Option<MetricsJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EscSummary {
    pub k_gain: f64,
    pub dwell_limit_s: f64,
    pub switches: usize,
    pub min_switch_interval_s: Option<f64>,
}

/// `MetricsReport` in serialisable form.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricsJson {
    pub r2: f64,
    pub rmse: f64,
    pub nrmse: f64,
    pub n: usize,
}

impl From<MetricsReport<f64>> for MetricsJson {
    fn from(m: MetricsReport<f64>) -> Self {
        Self {
            r2: m.r2,
            rmse: m.rmse,
            nrmse: m.nrmse,
            n: m.n,
        }
    }
}

pub fn summarize(sc: &Scenario, record: &RunRecord) -> Result<RunSummary> {
    let n = record.rows.len();
    let esc = matches!(record.controller, ControllerSpec::Esc).then(|| {
        let switches = record.switch_times();
        EscSummary {
            k_gain: sc.esc.k_gain(),
            dwell_limit_s: sc.esc.dwell_limit(),
            switches: switches.len(),
            min_switch_interval_s: switches.windows(2).map(|w| w[1] - w[0]).reduce(f64::min),
        }
    });
    Ok(RunSummary {
        scenario: sc.name.clone(),
        controller: record.controller.label(),
        cost_source: match sc.cost_source {
            CostSource::True => "true",
            CostSource::Vpm => "vpm",
        },
        seed: sc.seed,
        dt_s: sc.dt,
        steps: n,
        energy: record.energy()?,
        mean_fan_pct: record.rows.iter().map(|r| r.fan_cmd_pct).sum::<f64>() / n as f64,
        esc,
        vpm_chiller: record.vpm_metrics().map(Into::into),
    })
}
