//! Relay extremum-seeking control for cooling-tower fan speed.
//!
//! The crate bundles everything needed to study the controller at desk scale:
//!
//! - [`esc`]: the relay-based extremum-seeking controller, tuned from a single
//!   plant time constant.
//! - [`plant`]: a simplified dynamic chilled-water plant (DOE-2 electric chiller,
//!   fan-speed dependent cooling tower with first-order loop lag, constant pumps
//!   and air handler) whose total power is the controller's cost.
//! - [`baseline`]: fixed-speed and idealized setpoint-tracking fan controllers.
//! - [`vpm`]: virtual power meters for the chiller and tower fan, with sensor
//!   degradation and correction-factor calibration.
//! - [`sysid`]: impulse test that estimates the plant time constant.
//! - [`metrics`]: R², RMSE, NRMSE, energy integration and daily-savings statistics.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`). The `*F64` aliases
//! below name the double-precision instantiations used by the harness.

// `!(x > 0)` forms are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod esc;
pub mod metrics;
pub mod plant;
pub mod scalar;
pub mod sysid;
pub mod vpm;

pub use scalar::Scalar;

pub type EscConfigF64 = esc::EscConfig<f64>;
pub type EscStateF64 = esc::EscState<f64>;
pub type ChillerCurvesF64 = plant::ChillerCurves<f64>;
pub type PlantConfigF64 = plant::PlantConfig<f64>;
pub type PlantStateF64 = plant::PlantState<f64>;
pub type PowerBreakdownF64 = plant::PowerBreakdown<f64>;
pub type WeatherSampleF64 = plant::WeatherSample<f64>;
pub type FixedSpeedConfigF64 = baseline::FixedSpeedConfig<f64>;
pub type IdealPidConfigF64 = baseline::IdealPidConfig<f64>;
pub type SensorFrameF64 = vpm::SensorFrame<f64>;
pub type VpmConfigF64 = vpm::VpmConfig<f64>;
pub type NoiseSpecF64 = vpm::NoiseSpec<f64>;
pub type ImpulseTestSpecF64 = sysid::ImpulseTestSpec<f64>;
pub type MetricsReportF64 = metrics::MetricsReport<f64>;
pub type SavingsStatsF64 = metrics::SavingsStats<f64>;
