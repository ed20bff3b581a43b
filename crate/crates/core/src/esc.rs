//! Relay-based single-input single-output extremum-seeking controller.
//!
//! The controller low-pass filters the measured cost, estimates the sign of
//! its gradient with respect to the manipulated variable from successive
//! filtered values, and drives a ±1 relay. The relay output is scaled by a
//! gain and integrated into the command `x`, which is saturated to
//! `[x_min, x_max]`. A dwell timer keeps the relay from switching faster than
//! the plant can respond.
//!
//! Every tuning quantity follows from the plant time constant `tau`:
//!
//! ```text
//! dwell_limit = tau + tau_f
//! k_gain      = dt * (x_max - x_min) / (5 * (tau + tau_f))
//! ```

use thiserror::Error;

use crate::scalar::{clamp, Scalar};

/// Default threshold below which a filtered-cost change counts as zero, in kW.
pub const DEFAULT_GRADIENT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EscError {
    #[error("invalid ESC parameter `{field}` = {value}: {reason}")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("cost measurement is not finite ({0})")]
    NonFiniteCost(f64),
}

/// Relay output ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relay {
    Negative,
    Positive,
}

impl Relay {
    pub fn flipped(self) -> Self {
        match self {
            Relay::Negative => Relay::Positive,
            Relay::Positive => Relay::Negative,
        }
    }

    /// −1 or +1.
    pub fn sign(self) -> i8 {
        match self {
            Relay::Negative => -1,
            Relay::Positive => 1,
        }
    }

    pub fn as_scalar<T: Scalar>(self) -> T {
        match self {
            Relay::Negative => -T::one(),
            Relay::Positive => T::one(),
        }
    }
}

/// Controller tuning. The derived gain and dwell limit are fixed at
/// construction and cannot drift from the inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscConfig<T> {
    tau: T,
    tau_f: T,
    dt: T,
    x_min: T,
    x_max: T,
    k_gain: T,
    dwell_limit: T,
    gradient_epsilon: T,
}

impl<T: Scalar> EscConfig<T> {
    pub fn new(tau: T, tau_f: T, dt: T, x_min: T, x_max: T) -> Result<Self, EscError> {
        fn invalid(field: &'static str, value: f64, reason: &'static str) -> EscError {
            EscError::InvalidParameter { field, value, reason }
        }
        if !(tau.is_finite() && tau > T::zero()) {
            return Err(invalid("tau", tau.as_f64(), "must be finite and > 0"));
        }
        if !(tau_f.is_finite() && tau_f >= T::zero()) {
            return Err(invalid("tau_f", tau_f.as_f64(), "must be finite and >= 0"));
        }
        if !(dt.is_finite() && dt > T::zero()) {
            return Err(invalid("dt", dt.as_f64(), "must be finite and > 0"));
        }
        if !x_min.is_finite() {
            return Err(invalid("x_min", x_min.as_f64(), "must be finite"));
        }
        if !(x_max.is_finite() && x_min < x_max) {
            return Err(invalid("x_max", x_max.as_f64(), "must be finite and > x_min"));
        }
        let dwell_limit = tau + tau_f;
        let k_gain = dt * (x_max - x_min) / (T::lit(5.0) * dwell_limit);
        Ok(Self {
            tau,
            tau_f,
            dt,
            x_min,
            x_max,
            k_gain,
            dwell_limit,
            gradient_epsilon: T::lit(DEFAULT_GRADIENT_EPSILON),
        })
    }

    /// Tuning from the plant time constant alone, with `tau_f = tau / 2`.
    pub fn from_time_constant(tau: T, dt: T, x_min: T, x_max: T) -> Result<Self, EscError> {
        Self::new(tau, tau / T::lit(2.0), dt, x_min, x_max)
    }

    pub fn with_gradient_epsilon(mut self, epsilon: T) -> Result<Self, EscError> {
        if !(epsilon.is_finite() && epsilon >= T::zero()) {
            return Err(EscError::InvalidParameter {
                field: "gradient_epsilon",
                value: epsilon.as_f64(),
                reason: "must be finite and >= 0",
            });
        }
        self.gradient_epsilon = epsilon;
        Ok(self)
    }

    pub fn tau(&self) -> T {
        self.tau
    }
    pub fn tau_f(&self) -> T {
        self.tau_f
    }
    pub fn dt(&self) -> T {
        self.dt
    }
    pub fn x_min(&self) -> T {
        self.x_min
    }
    pub fn x_max(&self) -> T {
        self.x_max
    }
    /// Integrator gain K, in units of x per step.
    pub fn k_gain(&self) -> T {
        self.k_gain
    }
    /// Minimum hold time of the relay, seconds.
    pub fn dwell_limit(&self) -> T {
        self.dwell_limit
    }
    pub fn gradient_epsilon(&self) -> T {
        self.gradient_epsilon
    }

    /// Exponential smoothing factor of the cost filter, `dt / (tau_f + dt)`.
    pub fn filter_alpha(&self) -> T {
        self.dt / (self.tau_f + self.dt)
    }

    /// Peak-to-peak excursion of x over one minimum relay hold.
    pub fn sawtooth_amplitude(&self) -> T {
        self.k_gain * self.dwell_limit / self.dt
    }
}

/// Shorthand for [`EscConfig::new`].
pub fn configure_esc<T: Scalar>(tau: T, tau_f: T, dt: T, x_min: T, x_max: T) -> Result<EscConfig<T>, EscError> {
    EscConfig::new(tau, tau_f, dt, x_min, x_max)
}

/// Mutable controller state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscState<T> {
    pub relay: Relay,
    /// Seconds since the last relay switch.
    pub dwell_elapsed: T,
    /// Manipulated variable (fan speed command).
    pub x: T,
    pub j_filtered: T,
    pub j_filtered_prev: T,
    pub initialized: bool,
}

impl<T: Scalar> EscState<T> {
    /// Relay at +1, x at the midpoint of its range, filter unseeded.
    pub fn initial(config: &EscConfig<T>) -> Self {
        Self {
            relay: Relay::Positive,
            dwell_elapsed: T::zero(),
            x: (config.x_min + config.x_max) / T::lit(2.0),
            j_filtered: T::zero(),
            j_filtered_prev: T::zero(),
            initialized: false,
        }
    }

    /// Change of the filtered cost over the last step.
    pub fn filtered_delta(&self) -> T {
        self.j_filtered - self.j_filtered_prev
    }
}

/// Advances the controller by one step given the measured cost.
///
/// Returns the new state and the command to apply over the next step. A
/// non-finite cost is rejected and the caller's state is left untouched.
pub fn esc_step<T: Scalar>(
    config: &EscConfig<T>,
    state: &EscState<T>,
    j_measured: T,
) -> Result<(EscState<T>, T), EscError> {
    if !j_measured.is_finite() {
        return Err(EscError::NonFiniteCost(j_measured.as_f64()));
    }
    let mut next = *state;

    if next.initialized {
        next.j_filtered_prev = next.j_filtered;
        next.j_filtered = next.j_filtered + config.filter_alpha() * (j_measured - next.j_filtered);
    } else {
        next.j_filtered = j_measured;
        next.j_filtered_prev = j_measured;
        next.initialized = true;
    }

    // x last moved in the relay's direction, so the filtered change times the
    // relay sign estimates the gradient along x.
    let delta = next.filtered_delta();
    let relay = next.relay.as_scalar::<T>();
    let gradient = if delta.abs() < config.gradient_epsilon {
        T::zero()
    } else {
        delta * relay
    };

    next.dwell_elapsed = next.dwell_elapsed + config.dt;
    if gradient * relay > T::zero() && next.dwell_elapsed >= config.dwell_limit {
        next.relay = next.relay.flipped();
        next.dwell_elapsed = T::zero();
    }

    next.x = clamp(
        next.x + config.k_gain * next.relay.as_scalar::<T>(),
        config.x_min,
        config.x_max,
    );
    Ok((next, next.x))
}

/// Owns a configuration and state for sequential use.
#[derive(Debug, Clone)]
pub struct EscController<T> {
    config: EscConfig<T>,
    state: EscState<T>,
}

impl<T: Scalar> EscController<T> {
    pub fn new(config: EscConfig<T>) -> Self {
        Self {
            state: EscState::initial(&config),
            config,
        }
    }

    pub fn config(&self) -> &EscConfig<T> {
        &self.config
    }

    pub fn state(&self) -> &EscState<T> {
        &self.state
    }

    /// Command currently held by the integrator.
    pub fn command(&self) -> T {
        self.state.x
    }

    pub fn step(&mut self, j_measured: T) -> Result<T, EscError> {
        let (state, x) = esc_step(&self.config, &self.state, j_measured)?;
        self.state = state;
        Ok(x)
    }
}
