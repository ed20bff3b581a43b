//! Scenario files: TOML, `schema = 1`, unknown keys rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use towerfan_core::baseline::{FixedSpeedConfig, IdealPidConfig};
use towerfan_core::esc::EscConfig;
use towerfan_core::plant::{load_chiller_curves, ChillerCurves, PlantConfig};
use towerfan_core::vpm::{FlowReading, NoiseSpec, NoiseTargets, VpmConfig};

use crate::error::{HarnessError, Result};
use crate::weather::{load_weather, WeatherSeries};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Esc,
    Fixed,
    Pid,
}

impl ControllerKind {
    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Esc => "esc",
            ControllerKind::Fixed => "fixed",
            ControllerKind::Pid => "pid",
        }
    }
}

/// What the extremum seeker minimises: metered plant power or the
/// virtual meters' estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
pub enum CostSource {
    #[serde(rename = "true")]
    #[value(name = "true")]
    True,
    #[serde(rename = "vpm")]
    Vpm,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema: u32,
    name: String,
    weather: PathBuf,
    controller: ControllerKind,
    #[serde(default = "default_cost_source")]
    cost_source: CostSource,
    #[serde(default = "default_dt")]
    dt: f64,
    duration: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    esc: RawEsc,
    #[serde(default)]
    fixed: RawFixed,
    #[serde(default)]
    pid: RawPid,
    #[serde(default)]
    plant: RawPlant,
    noise: Option<RawNoise>,
    #[serde(default)]
    vpm: RawVpm,
}

fn default_cost_source() -> CostSource {
    CostSource::True
}

fn default_dt() -> f64 {
    60.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEsc {
    tau: f64,
    /// Defaults to `tau / 2`.
    tau_f: Option<f64>,
    x_min: f64,
    x_max: f64,
    gradient_epsilon: Option<f64>,
}

impl Default for RawEsc {
    fn default() -> Self {
        Self {
            tau: 183.0,
            tau_f: None,
            x_min: 0.0,
            x_max: 100.0,
            gradient_epsilon: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFixed {
    speed: f64,
}

impl Default for RawFixed {
    fn default() -> Self {
        Self { speed: 100.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPid {
    t_cws_setpoint: f64,
}

impl Default for RawPid {
    fn default() -> Self {
        Self { t_cws_setpoint: 25.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawPlant {
    /// Curve file, relative to the scenario file. Reference curves when absent.
    curves: Option<PathBuf>,
    m_chw: f64,
    cp_water: f64,
    m_cond: f64,
    t_chws_setpoint: f64,
    p_cw_pump: f64,
    p_chw_pump: f64,
    p_ahu: f64,
    fan_hp: f64,
    tower_eps0: f64,
    tower_eps1: f64,
    tower_exp: f64,
    tau_plant: f64,
    q_load_kw: f64,
    load_temp_coeff: f64,
    load_ref_temp: f64,
    plr_min: f64,
    plr_max: f64,
}

impl Default for RawPlant {
    fn default() -> Self {
        let r = PlantConfig::<f64>::reference();
        Self {
            curves: None,
            m_chw: r.m_chw,
            cp_water: r.cp_water,
            m_cond: r.m_cond,
            t_chws_setpoint: r.t_chws_setpoint,
            p_cw_pump: r.p_cw_pump,
            p_chw_pump: r.p_chw_pump,
            p_ahu: r.p_ahu,
            fan_hp: r.fan_hp,
            tower_eps0: r.tower_eps0,
            tower_eps1: r.tower_eps1,
            tower_exp: r.tower_exp,
            tau_plant: r.tau_plant,
            q_load_kw: r.q_load_kw,
            load_temp_coeff: r.load_temp_coeff,
            load_ref_temp: r.load_ref_temp,
            plr_min: r.plr_min,
            plr_max: r.plr_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum NoiseChannel {
    EvapEntering,
    EvapLeaving,
    CondEntering,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    #[serde(default)]
    mean: f64,
    std_dev: f64,
    channels: Vec<NoiseChannel>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawVpm {
    flow_sensor: bool,
    assumed_flow_factor: f64,
    correction_factor: f64,
    flow_biases: Vec<f64>,
    training_days: usize,
    histogram_bins: usize,
    resample_s: f64,
}

impl Default for RawVpm {
    fn default() -> Self {
        Self {
            flow_sensor: true,
            assumed_flow_factor: 1.0,
            correction_factor: 1.0,
            flow_biases: vec![0.8, 1.2],
            training_days: 1,
            histogram_bins: 20,
            resample_s: 900.0,
        }
    }
}

/// Meter settings for the run record and the degraded-sensor experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct VpmSettings {
    pub flow_sensor: bool,
    pub assumed_flow_factor: f64,
    pub correction_factor: f64,
    /// Assumed-flow multipliers tried by `vpm-validate`.
    pub flow_biases: Vec<f64>,
    pub training_days: usize,
    pub histogram_bins: usize,
    /// Averaging interval for the degraded-meter study, seconds.
    pub resample_s: f64,
}

impl VpmSettings {
    /// Meter used for the `p_*_vpm` columns of a run.
    pub fn meter(&self, plant: &PlantConfig<f64>) -> VpmConfig<f64> {
        VpmConfig {
            assumed_flow: plant.m_chw * self.assumed_flow_factor,
            correction_factor: self.correction_factor,
            ..VpmConfig::matched(plant)
        }
    }

    pub fn flow_reading(&self, plant: &PlantConfig<f64>) -> FlowReading<f64> {
        if self.flow_sensor {
            FlowReading::Measured(plant.m_chw)
        } else {
            FlowReading::Absent
        }
    }
}

/// A validated scenario with its weather loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub weather_path: PathBuf,
    pub weather: WeatherSeries,
    pub controller: ControllerKind,
    pub cost_source: CostSource,
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    pub esc: EscConfig<f64>,
    pub fixed: FixedSpeedConfig<f64>,
    pub pid: IdealPidConfig<f64>,
    pub plant: PlantConfig<f64>,
    pub noise: Option<NoiseSpec<f64>>,
    pub vpm: VpmSettings,
}

impl Scenario {
    /// Number of simulation steps (`duration / dt`).
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn steps_per_day(&self) -> usize {
        (86_400.0 / self.dt).round() as usize
    }

    /// Replaces the seed everywhere it is used.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        if let Some(noise) = self.noise.as_mut() {
            noise.seed = seed;
        }
        self
    }
}

fn invalid(path: &Path, message: impl Into<String>) -> HarnessError {
    HarnessError::Scenario {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(path, e.to_string()))?;
    parse_scenario(&text, path)
}

/// Parses scenario text; relative paths resolve against `path`'s directory.
pub fn parse_scenario(text: &str, path: &Path) -> Result<Scenario> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| invalid(path, e.to_string()))?;
    if raw.schema != SCHEMA_VERSION {
        return Err(invalid(
            path,
            format!("unsupported schema {} (expected {SCHEMA_VERSION})", raw.schema),
        ));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let err = |m: String| invalid(path, m);

    if !(raw.dt.is_finite() && raw.dt > 0.0) {
        return Err(err(format!("dt must be > 0 (got {})", raw.dt)));
    }
    if !(raw.duration.is_finite() && raw.duration >= raw.dt) {
        return Err(err(format!("duration must be >= dt (got {})", raw.duration)));
    }
    let ratio = raw.duration / raw.dt;
    if (ratio - ratio.round()).abs() > 1e-9 * ratio {
        return Err(err(format!(
            "duration {} is not a multiple of dt {}",
            raw.duration, raw.dt
        )));
    }

    let plant = build_plant(&raw.plant, base, path)?;

    let tau_f = raw.esc.tau_f.unwrap_or(raw.esc.tau / 2.0);
    let mut esc = EscConfig::new(raw.esc.tau, tau_f, raw.dt, raw.esc.x_min, raw.esc.x_max)
        .map_err(|e| err(format!("[esc] {e}")))?;
    if let Some(eps) = raw.esc.gradient_epsilon {
        esc = esc.with_gradient_epsilon(eps).map_err(|e| err(format!("[esc] {e}")))?;
    }
    if esc.x_min() < 0.0 || esc.x_max() > 100.0 {
        return Err(err("[esc] fan speed bounds must lie within [0, 100]".into()));
    }
    let fixed = FixedSpeedConfig::new(raw.fixed.speed).map_err(|e| err(format!("[fixed] {e}")))?;
    let pid = IdealPidConfig::new(raw.pid.t_cws_setpoint).map_err(|e| err(format!("[pid] {e}")))?;

    let noise = match raw.noise {
        None => None,
        Some(n) => {
            let mut targets = NoiseTargets::default();
            for ch in n.channels {
                match ch {
                    NoiseChannel::EvapEntering => targets.evap_entering = true,
                    NoiseChannel::EvapLeaving => targets.evap_leaving = true,
                    NoiseChannel::CondEntering => targets.cond_entering = true,
                }
            }
            Some(NoiseSpec::new(n.mean, n.std_dev, raw.seed, targets).map_err(|e| err(format!("[noise] {e}")))?)
        }
    };

    let v = raw.vpm;
    for (name, value) in [
        ("assumed_flow_factor", v.assumed_flow_factor),
        ("correction_factor", v.correction_factor),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(err(format!("[vpm] {name} must be > 0 (got {value})")));
        }
    }
    if let Some(b) = v.flow_biases.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
        return Err(err(format!("[vpm] flow bias must be > 0 (got {b})")));
    }
    let block = v.resample_s / raw.dt;
    if !(block >= 1.0 && (block - block.round()).abs() < 1e-9 * block) {
        return Err(err(format!(
            "[vpm] resample_s {} must be a positive multiple of dt",
            v.resample_s
        )));
    }
    if v.histogram_bins == 0 {
        return Err(err("[vpm] histogram_bins must be >= 1".into()));
    }
    let vpm = VpmSettings {
        flow_sensor: v.flow_sensor,
        assumed_flow_factor: v.assumed_flow_factor,
        correction_factor: v.correction_factor,
        flow_biases: v.flow_biases,
        training_days: v.training_days,
        histogram_bins: v.histogram_bins,
        resample_s: v.resample_s,
    };

    let weather_path = base.join(&raw.weather);
    let weather = load_weather(&weather_path)?;
    weather.check_covers(0.0, raw.duration).map_err(err)?;

    Ok(Scenario {
        name: raw.name,
        weather_path,
        weather,
        controller: raw.controller,
        cost_source: raw.cost_source,
        dt: raw.dt,
        duration: raw.duration,
        seed: raw.seed,
        esc,
        fixed,
        pid,
        plant,
        noise,
        vpm,
    })
}

fn build_plant(p: &RawPlant, base: &Path, path: &Path) -> Result<PlantConfig<f64>> {
    let curves = match &p.curves {
        None => ChillerCurves::electric_eir_reference(),
        Some(rel) => {
            let curve_path = base.join(rel);
            let text = std::fs::read_to_string(&curve_path).map_err(|e| invalid(&curve_path, e.to_string()))?;
            let table: BTreeMap<String, f64> =
                toml::from_str(&text).map_err(|e| invalid(&curve_path, e.to_string()))?;
            load_chiller_curves(&table, p.plr_min).map_err(|e| invalid(&curve_path, e.to_string()))?
        }
    };
    let cfg = PlantConfig {
        curves,
        m_chw: p.m_chw,
        cp_water: p.cp_water,
        m_cond: p.m_cond,
        t_chws_setpoint: p.t_chws_setpoint,
        p_cw_pump: p.p_cw_pump,
        p_chw_pump: p.p_chw_pump,
        p_ahu: p.p_ahu,
        fan_hp: p.fan_hp,
        tower_eps0: p.tower_eps0,
        tower_eps1: p.tower_eps1,
        tower_exp: p.tower_exp,
        tau_plant: p.tau_plant,
        q_load_kw: p.q_load_kw,
        load_temp_coeff: p.load_temp_coeff,
        load_ref_temp: p.load_ref_temp,
        plr_min: p.plr_min,
        plr_max: p.plr_max,
    };
    cfg.validate().map_err(|e| invalid(path, format!("[plant] {e}")))?;
    Ok(cfg)
}
