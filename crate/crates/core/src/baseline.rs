//! Comparison controllers: a fixed fan speed, and an idealized setpoint
//! tracker that picks the fan speed by inverting the tower model.

use thiserror::Error;

use crate::plant::{PlantConfig, PlantState, WeatherSample};
use crate::scalar::{clamp, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("fixed fan speed {0} % is outside [0, 100]")]
    SpeedOutOfRange(f64),
    #[error("condenser water setpoint {0} °C is not finite")]
    NonFiniteSetpoint(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedSpeedConfig<T> {
    speed: T,
}

impl<T: Scalar> FixedSpeedConfig<T> {
    pub fn new(speed: T) -> Result<Self, BaselineError> {
        if !(speed >= T::zero() && speed <= T::lit(100.0)) {
            return Err(BaselineError::SpeedOutOfRange(speed.as_f64()));
        }
        Ok(Self { speed })
    }

    pub fn speed(&self) -> T {
        self.speed
    }
}

pub fn fixed_step<T: Scalar>(cfg: &FixedSpeedConfig<T>) -> T {
    cfg.speed
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealPidConfig<T> {
    t_cws_setpoint: T,
}

impl<T: Scalar> IdealPidConfig<T> {
    pub fn new(t_cws_setpoint: T) -> Result<Self, BaselineError> {
        if !t_cws_setpoint.is_finite() {
            return Err(BaselineError::NonFiniteSetpoint(t_cws_setpoint.as_f64()));
        }
        Ok(Self { t_cws_setpoint })
    }

    pub fn t_cws_setpoint(&self) -> T {
        self.t_cws_setpoint
    }
}

impl<T: Scalar> Default for IdealPidConfig<T> {
    /// 25 °C condenser water supply.
    fn default() -> Self {
        Self {
            t_cws_setpoint: T::lit(25.0),
        }
    }
}

/// Effectiveness needed to bring `t_cwr` down to the setpoint at wet bulb
/// `t_wb`, or `None` when no cooling is needed (`t_cwr <= setpoint`).
pub fn required_effectiveness<T: Scalar>(t_cwr: T, t_wb: T, setpoint: T) -> Option<T> {
    if t_cwr <= setpoint {
        return None;
    }
    if t_cwr <= t_wb {
        // Return water already at the wet bulb: the setpoint is out of reach.
        return Some(T::infinity());
    }
    Some((t_cwr - setpoint) / (t_cwr - t_wb))
}

/// Fan speed that makes the tower deliver exactly the setpoint, saturating
/// at 100 % when the setpoint is unreachable and at 0 % when the tower's
/// natural effectiveness already suffices.
pub fn ideal_pid_step<T: Scalar>(
    cfg: &IdealPidConfig<T>,
    state: &PlantState<T>,
    weather: &WeatherSample<T>,
    plant_cfg: &PlantConfig<T>,
) -> T {
    let hundred = T::lit(100.0);
    let Some(eps_req) = required_effectiveness(state.t_cwr, weather.t_wb, cfg.t_cws_setpoint) else {
        return T::zero();
    };
    let (eps0, eps1) = (plant_cfg.tower_eps0, plant_cfg.tower_eps1);
    if eps_req > eps1 {
        return hundred;
    }
    if eps_req <= eps0 {
        return T::zero();
    }
    let fraction = (eps_req - eps0) / (eps1 - eps0);
    clamp(
        hundred * fraction.powf(T::one() / plant_cfg.tower_exp),
        T::zero(),
        hundred,
    )
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::plant::{tower_effectiveness, PowerBreakdown};

    fn state_with_return(t_cwr: f64) -> PlantState<f64> {
        PlantState {
            t: 0.0,
            t_cws: t_cwr - 5.0,
            t_cwr,
            t_chwr: 12.0,
            fan_speed: 50.0,
            plr: 0.5,
            q_load: 300.0,
            powers: PowerBreakdown::default(),
        }
    }

    fn tower(exp: f64) -> PlantConfig<f64> {
        PlantConfig {
            tower_eps0: 0.3,
            tower_eps1: 0.85,
            tower_exp: exp,
            ..PlantConfig::reference()
        }
    }

    #[test]
    fn fixed_speed_is_constant() {
        let cfg = FixedSpeedConfig::new(100.0).unwrap();
        for _ in 0..5 {
            assert_eq!(fixed_step(&cfg), 100.0);
        }
        assert_eq!(fixed_step(&FixedSpeedConfig::new(40.0).unwrap()), 40.0);
        for s in (0..=100).step_by(5) {
            assert_eq!(fixed_step(&FixedSpeedConfig::new(s as f64).unwrap()), s as f64);
        }
        assert!(FixedSpeedConfig::new(101.0).is_err());
        assert!(FixedSpeedConfig::new(f64::NAN).is_err());
    }

    #[test]
    fn no_rejection_needed() {
        let w = WeatherSample::new(0.0, 30.0, 20.0).unwrap();
        let speed = ideal_pid_step(&IdealPidConfig::default(), &state_with_return(25.0), &w, &tower(1.0));
        assert_eq!(speed, 0.0);
    }

    #[test]
    fn unreachable_setpoint_saturates() {
        let w = WeatherSample::new(0.0, 30.0, 26.0).unwrap();
        let speed = ideal_pid_step(&IdealPidConfig::default(), &state_with_return(31.0), &w, &tower(1.0));
        assert_eq!(speed, 100.0);
        let w = WeatherSample::new(0.0, 35.0, 32.0).unwrap();
        let speed = ideal_pid_step(&IdealPidConfig::default(), &state_with_return(31.0), &w, &tower(1.0));
        assert_eq!(speed, 100.0);
    }

    #[test]
    fn linear_tower_inversion() {
        let w = WeatherSample::new(0.0, 30.0, 20.0).unwrap();
        let cfg = tower(1.0);
        let speed = ideal_pid_step(&IdealPidConfig::default(), &state_with_return(30.0), &w, &cfg);
        assert_relative_eq!(speed, 0.2 / 0.55 * 100.0, max_relative = 1e-12);
        assert_relative_eq!(speed, 36.36, epsilon = 5e-3);
        assert_relative_eq!(tower_effectiveness(speed, &cfg), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn natural_draft_suffices() {
        // eps_req = 1/6 < eps0
        let w = WeatherSample::new(0.0, 30.0, 20.0).unwrap();
        let speed = ideal_pid_step(&IdealPidConfig::default(), &state_with_return(26.0), &w, &tower(1.0));
        assert_eq!(speed, 0.0);
    }
}
