//! Cooling tower fan: cube-law motor power and speed-dependent effectiveness.

use crate::scalar::{clamp, Scalar};

use super::{PlantConfig, PlantError};

/// Horsepower to kilowatts.
pub const HP_TO_KW: f64 = 0.7457;

/// Fan motor power at `speed` percent of full speed.
pub fn fan_power<T: Scalar>(fan_hp: T, speed: T) -> Result<T, PlantError> {
    if !(fan_hp.is_finite() && fan_hp >= T::zero()) {
        return Err(PlantError::invalid("fan_hp", fan_hp, "must be >= 0"));
    }
    if !(speed >= T::zero() && speed <= T::lit(100.0)) {
        return Err(PlantError::SpeedOutOfRange(speed.as_f64()));
    }
    let s = speed / T::lit(100.0);
    Ok(fan_hp * T::lit(HP_TO_KW) * s * s * s)
}

/// Tower effectiveness `eps0 + (eps1 − eps0)·(speed/100)^exp`.
///
/// Speeds outside `[0, 100]` are clamped.
pub fn tower_effectiveness<T: Scalar>(speed: T, cfg: &PlantConfig<T>) -> T {
    let s = clamp(speed, T::zero(), T::lit(100.0)) / T::lit(100.0);
    let f = s.powf(cfg.tower_exp);
    // convex-combination form keeps both endpoints exact
    let eps = cfg.tower_eps0 * (T::one() - f) + cfg.tower_eps1 * f;
    clamp(eps, cfg.tower_eps0, cfg.tower_eps1)
}

/// Steady-state tower supply temperature for a given cooling range
/// (return − supply, K) and effectiveness.
///
/// Solves `T_sup = T_ret − ε·(T_ret − T_wb)` with `T_ret = T_sup + range`.
pub fn supply_equilibrium<T: Scalar>(range: T, effectiveness: T, t_wb: T) -> T {
    t_wb + range * (T::one() - effectiveness) / effectiveness
}
