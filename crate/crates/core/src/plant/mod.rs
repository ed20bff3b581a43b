//! Simplified dynamic chilled-water plant.
//!
//! One chiller serves a constant (optionally weather-modulated) cooling load.
//! Its condenser heat goes to a cooling tower whose effectiveness rises with
//! fan speed. The tower supply temperature follows its steady-state value
//! through a first-order lag of time constant `tau_plant`. Pumps and the air
//! handler draw constant power.
//!
//! Heat rejection uses the chiller power from the previous step, so each step
//! is explicit.

mod chiller;
mod tower;

use thiserror::Error;

use crate::scalar::Scalar;

pub use chiller::{
    chiller_capacity_psi1, chiller_power, load_chiller_curves, ChillerCurves, ChillerOperatingPoint,
    CAPACITY_FACTOR_FLOOR,
};
pub use tower::{fan_power, supply_equilibrium, tower_effectiveness, HP_TO_KW};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("invalid plant parameter `{field}` = {value}: {reason}")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("missing chiller curve coefficient `{0}`")]
    MissingCoefficient(String),
    #[error("unknown chiller curve coefficient `{0}`")]
    UnknownCoefficient(String),
    #[error("chiller curve coefficient `{0}` is not finite")]
    NonFiniteCoefficient(String),
    #[error("part-load curve is non-positive ({value}) at PLR = {plr}")]
    PartLoadCurveNonPositive { plr: f64, value: f64 },
    #[error("evaporator entering temperature {t_evap_e} °C is below leaving temperature {t_evap_l} °C")]
    HeatingDirection { t_evap_e: f64, t_evap_l: f64 },
    #[error("fan speed {0} % is outside [0, 100]")]
    SpeedOutOfRange(f64),
    #[error("wet-bulb temperature {t_wb} °C exceeds dry-bulb {t_db} °C")]
    WetBulbAboveDryBulb { t_db: f64, t_wb: f64 },
}

impl PlantError {
    pub(crate) fn invalid<T: Scalar>(field: &'static str, value: T, reason: &'static str) -> Self {
        PlantError::InvalidParameter {
            field,
            value: value.as_f64(),
            reason,
        }
    }
}

/// Plant parameters. Powers in kW, flows in kg/s, temperatures in °C.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantConfig<T> {
    pub curves: ChillerCurves<T>,
    /// Chilled-water mass flow.
    pub m_chw: T,
    /// Water specific heat, kJ/(kg·K).
    pub cp_water: T,
    /// Condenser-water mass flow.
    pub m_cond: T,
    /// Chilled-water supply (evaporator leaving) setpoint.
    pub t_chws_setpoint: T,
    pub p_cw_pump: T,
    pub p_chw_pump: T,
    pub p_ahu: T,
    /// Tower fan motor rating, horsepower.
    pub fan_hp: T,
    pub tower_eps0: T,
    pub tower_eps1: T,
    pub tower_exp: T,
    /// Condenser loop time constant, seconds.
    pub tau_plant: T,
    /// Cooling load at `load_ref_temp`.
    pub q_load_kw: T,
    /// Fractional load change per kelvin of dry-bulb above `load_ref_temp`.
    pub load_temp_coeff: T,
    pub load_ref_temp: T,
    pub plr_min: T,
    pub plr_max: T,
}

impl<T: Scalar> PlantConfig<T> {
    /// Default testbed: a 155 ton chiller on a data-centre load.
    pub fn reference() -> Self {
        let l = T::lit;
        Self {
            curves: ChillerCurves::electric_eir_reference(),
            m_chw: l(17.0),
            cp_water: l(4.186),
            m_cond: l(30.0),
            t_chws_setpoint: l(6.67),
            p_cw_pump: l(15.0),
            p_chw_pump: l(11.0),
            p_ahu: l(20.0),
            fan_hp: l(60.0),
            tower_eps0: l(0.3),
            tower_eps1: l(0.85),
            tower_exp: l(0.4),
            tau_plant: l(183.0),
            q_load_kw: l(380.0),
            load_temp_coeff: l(0.01),
            load_ref_temp: l(25.0),
            plr_min: l(0.1),
            plr_max: l(1.0),
        }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let zero = T::zero();
        let non_negative = [
            ("p_cw_pump", self.p_cw_pump),
            ("p_chw_pump", self.p_chw_pump),
            ("p_ahu", self.p_ahu),
            ("fan_hp", self.fan_hp),
            ("q_load_kw", self.q_load_kw),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= zero) {
                return Err(PlantError::invalid(name, v, "must be finite and >= 0"));
            }
        }
        let positive = [
            ("m_chw", self.m_chw),
            ("m_cond", self.m_cond),
            ("cp_water", self.cp_water),
            ("tau_plant", self.tau_plant),
            ("tower_eps0", self.tower_eps0),
            ("tower_exp", self.tower_exp),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > zero) {
                return Err(PlantError::invalid(name, v, "must be finite and > 0"));
            }
        }
        if !(self.tower_eps1.is_finite() && self.tower_eps1 >= self.tower_eps0 && self.tower_eps1 <= T::one()) {
            return Err(PlantError::invalid(
                "tower_eps1",
                self.tower_eps1,
                "must lie in [tower_eps0, 1]",
            ));
        }
        for (name, v) in [
            ("t_chws_setpoint", self.t_chws_setpoint),
            ("load_temp_coeff", self.load_temp_coeff),
            ("load_ref_temp", self.load_ref_temp),
        ] {
            if !v.is_finite() {
                return Err(PlantError::invalid(name, v, "must be finite"));
            }
        }
        if !(self.plr_min.is_finite() && self.plr_min >= zero) {
            return Err(PlantError::invalid("plr_min", self.plr_min, "must be >= 0"));
        }
        if !(self.plr_max.is_finite() && self.plr_max > self.plr_min) {
            return Err(PlantError::invalid("plr_max", self.plr_max, "must be > plr_min"));
        }
        self.curves.validate(self.plr_min)
    }

    /// Cooling load at the given outdoor dry-bulb, never negative.
    pub fn cooling_load(&self, t_db: T) -> T {
        let factor = T::one() + self.load_temp_coeff * (t_db - self.load_ref_temp);
        (self.q_load_kw * factor).max(T::zero())
    }

    /// Chilled-water return temperature that carries `q_load` at the setpoint.
    pub fn chilled_water_return(&self, q_load: T) -> T {
        self.t_chws_setpoint + q_load / (self.m_chw * self.cp_water)
    }
}

/// Electrical power per component, kW.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerBreakdown<T> {
    pub p_chiller: T,
    pub p_tower: T,
    pub p_cw_pump: T,
    pub p_chw_pump: T,
    pub p_ahu: T,
    pub p_total: T,
}

impl<T: Scalar> PowerBreakdown<T> {
    pub fn new(p_chiller: T, p_tower: T, p_cw_pump: T, p_chw_pump: T, p_ahu: T) -> Self {
        Self {
            p_chiller,
            p_tower,
            p_cw_pump,
            p_chw_pump,
            p_ahu,
            p_total: Self::sum(p_chiller, p_tower, p_cw_pump, p_chw_pump, p_ahu),
        }
    }

    /// The fixed summation order used for `p_total`.
    #[inline]
    pub fn sum(p_chiller: T, p_tower: T, p_cw_pump: T, p_chw_pump: T, p_ahu: T) -> T {
        p_chiller + p_tower + p_cw_pump + p_chw_pump + p_ahu
    }

    /// Power that does not respond directly to the fan command.
    pub fn lagging(&self) -> T {
        self.p_total - self.p_tower
    }
}

/// Outdoor conditions at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherSample<T> {
    /// Seconds since the start of the run.
    pub timestamp: T,
    pub t_db: T,
    pub t_wb: T,
}

impl<T: Scalar> WeatherSample<T> {
    pub fn new(timestamp: T, t_db: T, t_wb: T) -> Result<Self, PlantError> {
        for (name, v) in [("timestamp", timestamp), ("t_db", t_db), ("t_wb", t_wb)] {
            if !v.is_finite() {
                return Err(PlantError::invalid(name, v, "must be finite"));
            }
        }
        if t_wb > t_db {
            return Err(PlantError::WetBulbAboveDryBulb {
                t_db: t_db.as_f64(),
                t_wb: t_wb.as_f64(),
            });
        }
        Ok(Self { timestamp, t_db, t_wb })
    }
}

/// Plant condition at the end of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState<T> {
    /// Seconds since the start of the run.
    pub t: T,
    /// Condenser water supply (tower leaving, chiller condenser entering).
    pub t_cws: T,
    /// Condenser water return (tower entering).
    pub t_cwr: T,
    /// Chilled-water return (evaporator entering).
    pub t_chwr: T,
    /// Fan speed applied over the step, percent.
    pub fan_speed: T,
    pub plr: T,
    pub q_load: T,
    pub powers: PowerBreakdown<T>,
}

impl<T: Scalar> PlantState<T> {
    /// Runs the plant at a fixed fan speed and constant weather until the
    /// condenser loop has settled (twenty time constants, at least twenty
    /// steps), then rewinds the clock to zero.
    pub fn settled(cfg: &PlantConfig<T>, fan_speed: T, weather: &WeatherSample<T>, dt: T) -> Result<Self, PlantError> {
        cfg.validate()?;
        let q_load = cfg.cooling_load(weather.t_db);
        let range = q_load / (cfg.m_cond * cfg.cp_water);
        let eps = tower_effectiveness(fan_speed, cfg);
        let t_cws = supply_equilibrium(range, eps, weather.t_wb);
        let mut state = Self {
            t: T::zero(),
            t_cws,
            t_cwr: t_cws + range,
            t_chwr: cfg.chilled_water_return(q_load),
            fan_speed,
            plr: cfg.plr_min,
            q_load,
            powers: PowerBreakdown::default(),
        };
        let steps = (T::lit(20.0) * cfg.tau_plant / dt)
            .ceil()
            .to_usize()
            .unwrap_or(20)
            .max(20);
        for _ in 0..steps {
            state = plant_step(&state, fan_speed, weather, dt, cfg)?;
        }
        state.t = T::zero();
        Ok(state)
    }
}

/// Advances the plant by `dt` seconds with the fan held at `fan_cmd`.
pub fn plant_step<T: Scalar>(
    state: &PlantState<T>,
    fan_cmd: T,
    weather: &WeatherSample<T>,
    dt: T,
    cfg: &PlantConfig<T>,
) -> Result<PlantState<T>, PlantError> {
    if !(dt.is_finite() && dt > T::zero()) {
        return Err(PlantError::invalid("dt", dt, "must be finite and > 0"));
    }
    let p_tower = fan_power(cfg.fan_hp, fan_cmd)?;

    let q_load = cfg.cooling_load(weather.t_db);
    let q_rejected = q_load + state.powers.p_chiller;
    let range = q_rejected / (cfg.m_cond * cfg.cp_water);

    let eps = tower_effectiveness(fan_cmd, cfg);
    let t_cws_eq = supply_equilibrium(range, eps, weather.t_wb).max(weather.t_wb);
    let decay = (-dt / cfg.tau_plant).exp();
    let t_cws = (t_cws_eq + (state.t_cws - t_cws_eq) * decay).max(weather.t_wb);

    let t_chwr = cfg.chilled_water_return(q_load);
    let chiller = chiller_power(t_chwr, cfg.t_chws_setpoint, t_cws, cfg.m_chw, cfg)?;

    Ok(PlantState {
        t: state.t + dt,
        t_cws,
        t_cwr: t_cws + range,
        t_chwr,
        fan_speed: fan_cmd,
        plr: chiller.plr,
        q_load,
        powers: PowerBreakdown::new(chiller.p_chiller, p_tower, cfg.p_cw_pump, cfg.p_chw_pump, cfg.p_ahu),
    })
}
