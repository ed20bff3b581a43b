//! Impulse (bump) test for the plant time constant.
//!
//! The fan is held at a base speed until the plant settles, stepped to a
//! pulse speed, held, and returned. The time constant is the time the
//! response takes after the rising edge to cover 1 − e⁻¹ (63.2 %) of the gap
//! between its pre-pulse value and its extremum during the pulse.
//!
//! The estimate uses the part of the cost that lags the command. The tower
//! fan term moves instantaneously with speed and is excluded; the recorded
//! trace still carries total power.

use thiserror::Error;

use crate::plant::{plant_step, PlantConfig, PlantError, PlantState, WeatherSample};
use crate::scalar::Scalar;

/// Responses smaller than this (kW) are treated as no response.
pub const RESPONSE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SysIdError {
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error("invalid impulse test parameter `{field}` = {value}: {reason}")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("no measurable response (gap {gap} kW)")]
    NoMeasurableResponse { gap: f64 },
    #[error("response never crossed the 63.2 % level")]
    NoCrossing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulseTestSpec<T> {
    pub base_speed: T,
    pub pulse_speed: T,
    /// Seconds at the pulse speed.
    pub pulse_duration: T,
    /// Seconds back at the base speed after the pulse.
    pub settle_duration: T,
    pub dt: T,
}

impl<T: Scalar> Default for ImpulseTestSpec<T> {
    /// 25 % → 100 %, one hour each way, one-minute steps.
    fn default() -> Self {
        Self {
            base_speed: T::lit(25.0),
            pulse_speed: T::lit(100.0),
            pulse_duration: T::lit(3600.0),
            settle_duration: T::lit(3600.0),
            dt: T::lit(60.0),
        }
    }
}

impl<T: Scalar> ImpulseTestSpec<T> {
    pub fn validate(&self) -> Result<(), SysIdError> {
        let invalid = |field, value: T, reason| SysIdError::InvalidParameter {
            field,
            value: value.as_f64(),
            reason,
        };
        let hundred = T::lit(100.0);
        for (name, s) in [("base_speed", self.base_speed), ("pulse_speed", self.pulse_speed)] {
            if !(s >= T::zero() && s <= hundred) {
                return Err(invalid(name, s, "must lie in [0, 100]"));
            }
        }
        if self.pulse_speed == self.base_speed {
            return Err(invalid("pulse_speed", self.pulse_speed, "must differ from base_speed"));
        }
        for (name, v) in [
            ("pulse_duration", self.pulse_duration),
            ("settle_duration", self.settle_duration),
            ("dt", self.dt),
        ] {
            if !(v.is_finite() && v > T::zero()) {
                return Err(invalid(name, v, "must be finite and > 0"));
            }
        }
        if self.pulse_duration < self.dt {
            return Err(invalid(
                "pulse_duration",
                self.pulse_duration,
                "must cover at least one step",
            ));
        }
        Ok(())
    }
}

/// One observation from a system under test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response<T> {
    /// Total cost, kW.
    pub total: T,
    /// Portion of the cost that lags the command, kW.
    pub lagging: T,
}

/// Something a fan-speed impulse can be applied to.
pub trait ImpulseSubject<T: Scalar> {
    /// Brings the system to steady state at `speed`.
    fn settle(&mut self, speed: T, dt: T) -> Result<(), SysIdError>;
    /// Holds `speed` for `dt` seconds and reports the response at the end.
    fn advance(&mut self, speed: T, dt: T) -> Result<Response<T>, SysIdError>;
}

/// The simulated plant under constant weather.
#[derive(Debug, Clone)]
pub struct SimulatedPlant<T> {
    cfg: PlantConfig<T>,
    weather: WeatherSample<T>,
    state: Option<PlantState<T>>,
}

impl<T: Scalar> SimulatedPlant<T> {
    pub fn new(cfg: PlantConfig<T>, weather: WeatherSample<T>) -> Self {
        Self {
            cfg,
            weather,
            state: None,
        }
    }
}

impl<T: Scalar> ImpulseSubject<T> for SimulatedPlant<T> {
    fn settle(&mut self, speed: T, dt: T) -> Result<(), SysIdError> {
        // `settled` runs twenty time constants, well past the ten needed.
        self.state = Some(PlantState::settled(&self.cfg, speed, &self.weather, dt)?);
        Ok(())
    }

    fn advance(&mut self, speed: T, dt: T) -> Result<Response<T>, SysIdError> {
        let current = match self.state {
            Some(s) => s,
            None => PlantState::settled(&self.cfg, speed, &self.weather, dt)?,
        };
        let next = plant_step(&current, speed, &self.weather, dt, &self.cfg)?;
        self.state = Some(next);
        Ok(Response {
            total: next.powers.p_total,
            lagging: next.powers.lagging(),
        })
    }
}

/// Exact first-order system `y = offset + gain·u` seen through a lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderSystem<T> {
    pub tau: T,
    /// Output change per percent of fan speed.
    pub gain: T,
    pub offset: T,
    y: T,
}

impl<T: Scalar> FirstOrderSystem<T> {
    pub fn new(tau: T, gain: T, offset: T) -> Self {
        Self {
            tau,
            gain,
            offset,
            y: offset,
        }
    }
}

impl<T: Scalar> ImpulseSubject<T> for FirstOrderSystem<T> {
    fn settle(&mut self, speed: T, _dt: T) -> Result<(), SysIdError> {
        self.y = self.offset + self.gain * speed;
        Ok(())
    }

    fn advance(&mut self, speed: T, dt: T) -> Result<Response<T>, SysIdError> {
        let target = self.offset + self.gain * speed;
        self.y = target + (self.y - target) * (-dt / self.tau).exp();
        Ok(Response {
            total: self.y,
            lagging: self.y,
        })
    }
}

/// One row of the impulse trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulseSample<T> {
    pub t: T,
    pub fan_speed: T,
    pub p_total: T,
    pub p_lagging: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResult<T> {
    pub trace: Vec<ImpulseSample<T>>,
    /// Time of the rising edge, seconds.
    pub edge_time: T,
    pub tau_est: T,
}

/// Time for `series` to cover 1 − e⁻¹ of the way from its value at
/// `edge_time` to its extremum over `(edge_time, end_time]`.
///
/// `series` is `(t, y)` sorted by time and must contain a sample at
/// `edge_time`. The crossing is located by linear interpolation.
pub fn estimate_time_constant<T: Scalar>(series: &[(T, T)], edge_time: T, end_time: T) -> Result<T, SysIdError> {
    let start = series
        .iter()
        .position(|&(t, _)| t >= edge_time)
        .ok_or(SysIdError::NoCrossing)?;
    let y0 = series[start].1;
    let window: Vec<(T, T)> = series[start..]
        .iter()
        .copied()
        .take_while(|&(t, _)| t <= end_time)
        .collect();
    let extremum = window
        .iter()
        .map(|&(_, y)| y)
        .fold(y0, |best, y| if (y - y0).abs() > (best - y0).abs() { y } else { best });
    let gap = extremum - y0;
    if !(gap.abs() >= T::lit(RESPONSE_FLOOR)) {
        return Err(SysIdError::NoMeasurableResponse { gap: gap.as_f64() });
    }
    let level = T::one() - (-T::one()).exp();
    let progress = |y: T| (y - y0) / gap;
    for pair in window.windows(2) {
        let ((t0, a), (t1, b)) = (pair[0], pair[1]);
        let (pa, pb) = (progress(a), progress(b));
        if pb >= level {
            let frac = if pb == pa { T::zero() } else { (level - pa) / (pb - pa) };
            return Ok(t0 + frac * (t1 - t0) - edge_time);
        }
    }
    Err(SysIdError::NoCrossing)
}

/// Runs the impulse test on `subject`.
pub fn run_impulse_test<T: Scalar, S: ImpulseSubject<T>>(
    spec: &ImpulseTestSpec<T>,
    subject: &mut S,
) -> Result<ImpulseResult<T>, SysIdError> {
    spec.validate()?;
    subject.settle(spec.base_speed, spec.dt)?;

    let steps = |d: T| (d / spec.dt).round().to_usize().unwrap_or(0).max(1);
    let pre_steps = 5;
    let pulse_steps = steps(spec.pulse_duration);
    let settle_steps = steps(spec.settle_duration);

    let mut trace = Vec::with_capacity(pre_steps + pulse_steps + settle_steps);
    let mut t = T::zero();
    let mut record = |speed: T, subject: &mut S, t: &mut T| -> Result<(), SysIdError> {
        let r = subject.advance(speed, spec.dt)?;
        *t = *t + spec.dt;
        trace.push(ImpulseSample {
            t: *t,
            fan_speed: speed,
            p_total: r.total,
            p_lagging: r.lagging,
        });
        Ok(())
    };
    for _ in 0..pre_steps {
        record(spec.base_speed, subject, &mut t)?;
    }
    let edge_time = t;
    for _ in 0..pulse_steps {
        record(spec.pulse_speed, subject, &mut t)?;
    }
    let pulse_end = t;
    for _ in 0..settle_steps {
        record(spec.base_speed, subject, &mut t)?;
    }

    let series: Vec<(T, T)> = trace.iter().map(|s| (s.t, s.p_lagging)).collect();
    let tau_est = estimate_time_constant(&series, edge_time, pulse_end)?;
    Ok(ImpulseResult {
        trace,
        edge_time,
        tau_est,
    })
}

/// Impulse test on the simulated plant under constant weather.
pub fn run_plant_impulse_test<T: Scalar>(
    spec: &ImpulseTestSpec<T>,
    plant_cfg: &PlantConfig<T>,
    weather: &WeatherSample<T>,
) -> Result<ImpulseResult<T>, SysIdError> {
    let mut plant = SimulatedPlant::new(*plant_cfg, *weather);
    run_impulse_test(spec, &mut plant)
}
