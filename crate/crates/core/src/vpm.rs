//! Virtual power meters for the chiller and the tower fan.
//!
//! The chiller meter evaluates the same performance curves as the simulated
//! plant, fed from sensor readings instead of plant state. Real-world error is
//! reproduced by degrading those readings: Gaussian temperature noise, a
//! missing flow sensor replaced by an assumed constant, and coarse sampling.
//! A multiplicative correction factor fitted by least squares against a
//! metered series absorbs the resulting scale error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::plant::{fan_power, ChillerCurves, PlantConfig, PlantError, PlantState};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VpmError {
    #[error(transparent)]
    Model(#[from] PlantError),
    #[error("invalid VPM parameter `{field}` = {value}: {reason}")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("calibration needs equal-length, non-empty series (got {estimates} and {metered})")]
    CalibrationLength { estimates: usize, metered: usize },
    #[error("calibration estimates are all zero")]
    CalibrationDegenerate,
    #[error("smoothing window must be odd and >= 1 (got {0})")]
    InvalidWindow(usize),
}

/// Chilled-water flow as seen by the meter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowReading<T> {
    Measured(T),
    /// No flow sensor: the meter substitutes its assumed flow.
    Absent,
}

/// One set of sensor readings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFrame<T> {
    pub t_evap_e: T,
    pub t_evap_l: T,
    pub t_cond_e: T,
    pub m_chw: FlowReading<T>,
    pub fan_speed: T,
    pub timestamp: T,
}

impl<T: Scalar> SensorFrame<T> {
    /// Exact readings of a simulated plant state.
    pub fn from_plant(state: &PlantState<T>, plant: &PlantConfig<T>) -> Self {
        Self {
            t_evap_e: state.t_chwr,
            t_evap_l: plant.t_chws_setpoint,
            t_cond_e: state.t_cws,
            m_chw: FlowReading::Measured(plant.m_chw),
            fan_speed: state.fan_speed,
            timestamp: state.t,
        }
    }

    pub fn without_flow(mut self) -> Self {
        self.m_chw = FlowReading::Absent;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VpmConfig<T> {
    pub curves: ChillerCurves<T>,
    pub fan_hp: T,
    pub correction_factor: T,
    /// Flow used when the frame carries no flow reading, kg/s.
    pub assumed_flow: T,
    pub cp_water: T,
    pub plr_min: T,
    pub plr_max: T,
}

impl<T: Scalar> VpmConfig<T> {
    /// A meter configured with the plant's own curves, fan rating and design
    /// flow, and no correction.
    pub fn matched(plant: &PlantConfig<T>) -> Self {
        Self {
            curves: plant.curves,
            fan_hp: plant.fan_hp,
            correction_factor: T::one(),
            assumed_flow: plant.m_chw,
            cp_water: plant.cp_water,
            plr_min: plant.plr_min,
            plr_max: plant.plr_max,
        }
    }

    pub fn validate(&self) -> Result<(), VpmError> {
        if !(self.correction_factor.is_finite() && self.correction_factor > T::zero()) {
            return Err(VpmError::InvalidParameter {
                field: "correction_factor",
                value: self.correction_factor.as_f64(),
                reason: "must be > 0",
            });
        }
        if !(self.assumed_flow.is_finite() && self.assumed_flow > T::zero()) {
            return Err(VpmError::InvalidParameter {
                field: "assumed_flow",
                value: self.assumed_flow.as_f64(),
                reason: "must be > 0",
            });
        }
        self.curves.validate(self.plr_min)?;
        Ok(())
    }
}

/// Estimated chiller power, kW.
pub fn vpm_chiller_power<T: Scalar>(frame: &SensorFrame<T>, cfg: &VpmConfig<T>) -> Result<T, VpmError> {
    let flow = match frame.m_chw {
        FlowReading::Measured(m) => m,
        FlowReading::Absent => cfg.assumed_flow,
    };
    let op = cfg.curves.operating_point(
        frame.t_evap_e,
        frame.t_evap_l,
        frame.t_cond_e,
        flow,
        cfg.cp_water,
        cfg.plr_min,
        cfg.plr_max,
    )?;
    Ok(cfg.correction_factor * op.p_chiller)
}

/// Estimated tower fan power, kW.
pub fn vpm_fan_power<T: Scalar>(frame: &SensorFrame<T>, cfg: &VpmConfig<T>) -> Result<T, VpmError> {
    Ok(fan_power(cfg.fan_hp, frame.fan_speed)?)
}

/// Which temperature channels receive noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NoiseTargets {
    pub evap_entering: bool,
    pub evap_leaving: bool,
    pub cond_entering: bool,
}

impl NoiseTargets {
    pub fn all() -> Self {
        Self {
            evap_entering: true,
            evap_leaving: true,
            cond_entering: true,
        }
    }
}

/// Gaussian sensor noise, °C.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec<T> {
    pub mean: T,
    pub std_dev: T,
    pub seed: u64,
    pub targets: NoiseTargets,
}

impl<T: Scalar> NoiseSpec<T> {
    pub fn new(mean: T, std_dev: T, seed: u64, targets: NoiseTargets) -> Result<Self, VpmError> {
        if !mean.is_finite() {
            return Err(VpmError::InvalidParameter {
                field: "mean",
                value: mean.as_f64(),
                reason: "must be finite",
            });
        }
        if !(std_dev.is_finite() && std_dev >= T::zero()) {
            return Err(VpmError::InvalidParameter {
                field: "std_dev",
                value: std_dev.as_f64(),
                reason: "must be finite and >= 0",
            });
        }
        Ok(Self {
            mean,
            std_dev,
            seed,
            targets,
        })
    }

    /// Generator for this spec's seed.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Independent generator for sub-stream `stream` (e.g. a frame index),
    /// so frames can be perturbed in any order or in parallel.
    pub fn rng_for_stream(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = self.rng();
        rng.set_stream(stream);
        rng
    }
}

/// Adds independent Gaussian draws to the targeted temperature channels.
///
/// Draws happen in the fixed order evaporator entering, evaporator leaving,
/// condenser entering, and only for targeted channels.
pub fn inject_noise<T: Scalar, R: Rng + ?Sized>(
    frame: &SensorFrame<T>,
    spec: &NoiseSpec<T>,
    rng: &mut R,
) -> SensorFrame<T> {
    let mut out = *frame;
    if spec.std_dev == T::zero() && spec.mean == T::zero() {
        return out;
    }
    let normal = Normal::new(spec.mean.as_f64(), spec.std_dev.as_f64()).expect("validated noise parameters");
    let mut draw = |v: &mut T| *v = *v + T::lit(normal.sample(rng));
    if spec.targets.evap_entering {
        draw(&mut out.t_evap_e);
    }
    if spec.targets.evap_leaving {
        draw(&mut out.t_evap_l);
    }
    if spec.targets.cond_entering {
        draw(&mut out.t_cond_e);
    }
    out
}

/// Least-squares scale `k` minimising `Σ(k·e − m)²`.
pub fn calibrate_correction_factor<T: Scalar>(estimates: &[T], metered: &[T]) -> Result<T, VpmError> {
    if estimates.is_empty() || estimates.len() != metered.len() {
        return Err(VpmError::CalibrationLength {
            estimates: estimates.len(),
            metered: metered.len(),
        });
    }
    let (num, den) = estimates
        .iter()
        .zip(metered)
        .fold((T::zero(), T::zero()), |(n, d), (&e, &m)| (n + e * m, d + e * e));
    if !(den > T::zero()) {
        return Err(VpmError::CalibrationDegenerate);
    }
    Ok(num / den)
}

/// Centered moving average; windows shrink symmetrically at the edges.
pub fn smooth_series<T: Scalar>(values: &[T], window: usize) -> Result<Vec<T>, VpmError> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(VpmError::InvalidWindow(window));
    }
    let half = window / 2;
    let n = values.len();
    Ok((0..n)
        .map(|i| {
            let reach = half.min(i).min(n - 1 - i);
            let slice = &values[i - reach..=i + reach];
            let sum = slice.iter().fold(T::zero(), |acc, &v| acc + v);
            sum / T::from_usize(slice.len()).unwrap()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::plant::{PlantState, WeatherSample};

    fn plant_frame() -> (PlantConfig<f64>, PlantState<f64>) {
        let cfg = PlantConfig::reference();
        let w = WeatherSample::new(0.0, 31.0, 25.0).unwrap();
        let s = PlantState::settled(&cfg, 40.0, &w, 60.0).unwrap();
        (cfg, s)
    }

    #[test]
    fn exact_sensors_reproduce_plant_power() {
        let (cfg, s) = plant_frame();
        let frame = SensorFrame::from_plant(&s, &cfg);
        let vpm = VpmConfig::matched(&cfg);
        assert_eq!(vpm_chiller_power(&frame, &vpm).unwrap(), s.powers.p_chiller);
        assert_eq!(vpm_fan_power(&frame, &vpm).unwrap(), s.powers.p_tower);
    }

    #[test]
    fn correction_factor_scales_exactly() {
        let (cfg, s) = plant_frame();
        let frame = SensorFrame::from_plant(&s, &cfg);
        let base = vpm_chiller_power(&frame, &VpmConfig::matched(&cfg)).unwrap();
        let corrected = VpmConfig {
            correction_factor: 0.9,
            ..VpmConfig::matched(&cfg)
        };
        assert_eq!(vpm_chiller_power(&frame, &corrected).unwrap(), 0.9 * base);
    }

    #[test]
    fn assumed_flow_bias_direction() {
        let (cfg, s) = plant_frame();
        let frame = SensorFrame::from_plant(&s, &cfg).without_flow();
        let truth = s.powers.p_chiller;
        for (factor, sign) in [(0.8, -1.0), (1.2, 1.0)] {
            let vpm = VpmConfig {
                assumed_flow: cfg.m_chw * factor,
                ..VpmConfig::matched(&cfg)
            };
            let est = vpm_chiller_power(&frame, &vpm).unwrap();
            assert_eq!((est - truth).signum(), sign);
        }
    }

    #[test]
    fn fan_meter_mirrors_cube_law() {
        let vpm = VpmConfig {
            fan_hp: 10.0,
            ..VpmConfig::matched(&PlantConfig::reference())
        };
        let at = |speed| SensorFrame {
            t_evap_e: 12.0,
            t_evap_l: 7.0,
            t_cond_e: 29.0,
            m_chw: FlowReading::Measured(10.0),
            fan_speed: speed,
            timestamp: 0.0,
        };
        assert_relative_eq!(vpm_fan_power(&at(100.0), &vpm).unwrap(), 7.457, max_relative = 1e-15);
        assert_relative_eq!(vpm_fan_power(&at(50.0), &vpm).unwrap(), 0.932_125, max_relative = 1e-12);
        assert_eq!(vpm_fan_power(&at(0.0), &vpm).unwrap(), 0.0);
        assert!(vpm_fan_power(&at(130.0), &vpm).is_err());
    }

    #[test]
    fn invalid_vpm_config() {
        let cfg = PlantConfig::<f64>::reference();
        assert!(VpmConfig {
            correction_factor: 0.0,
            ..VpmConfig::matched(&cfg)
        }
        .validate()
        .is_err());
        assert!(VpmConfig {
            assumed_flow: -1.0,
            ..VpmConfig::matched(&cfg)
        }
        .validate()
        .is_err());
        VpmConfig::matched(&cfg).validate().unwrap();
    }

    #[test]
    fn zero_noise_is_identity_and_seeds_repeat() {
        let (cfg, s) = plant_frame();
        let frame = SensorFrame::from_plant(&s, &cfg);
        let silent = NoiseSpec::new(0.0, 0.0, 7, NoiseTargets::all()).unwrap();
        assert_eq!(inject_noise(&frame, &silent, &mut silent.rng()), frame);

        let loud = NoiseSpec::new(0.0, 5.0, 7, NoiseTargets::all()).unwrap();
        let a = inject_noise(&frame, &loud, &mut loud.rng());
        let b = inject_noise(&frame, &loud, &mut loud.rng());
        assert_eq!(a, b);
        assert_ne!(a, frame);
        assert_eq!(a.fan_speed, frame.fan_speed);
        assert_eq!(a.m_chw, frame.m_chw);
    }

    #[test]
    fn untargeted_channels_untouched() {
        let (cfg, s) = plant_frame();
        let frame = SensorFrame::from_plant(&s, &cfg);
        let spec = NoiseSpec::new(
            0.0,
            5.0,
            3,
            NoiseTargets {
                cond_entering: true,
                ..Default::default()
            },
        )
        .unwrap();
        let noisy = inject_noise(&frame, &spec, &mut spec.rng_for_stream(11));
        assert_eq!(noisy.t_evap_e, frame.t_evap_e);
        assert_eq!(noisy.t_evap_l, frame.t_evap_l);
        assert_ne!(noisy.t_cond_e, frame.t_cond_e);
    }

    #[test]
    fn noise_statistics() {
        // Law of large numbers on 1e5 draws.
        let spec = NoiseSpec::new(
            0.0,
            5.0,
            2024,
            NoiseTargets {
                cond_entering: true,
                ..Default::default()
            },
        )
        .unwrap();
        let frame = SensorFrame {
            t_evap_e: 12.0,
            t_evap_l: 7.0,
            t_cond_e: 0.0,
            m_chw: FlowReading::Absent,
            fan_speed: 50.0,
            timestamp: 0.0,
        };
        let mut rng = spec.rng();
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| inject_noise(&frame, &spec, &mut rng).t_cond_e).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var.sqrt() - 5.0).abs() < 0.1, "std {}", var.sqrt());
    }

    #[test]
    fn invalid_noise_spec() {
        assert!(NoiseSpec::new(0.0, -1.0, 0, NoiseTargets::all()).is_err());
        assert!(NoiseSpec::new(f64::NAN, 1.0, 0, NoiseTargets::all()).is_err());
    }

    #[test]
    fn calibration_exact_cases() {
        let e = [1.0, 2.0, 3.0, 4.5];
        let doubled: Vec<f64> = e.iter().map(|v| 2.0 * v).collect();
        assert_relative_eq!(
            calibrate_correction_factor(&e, &doubled).unwrap(),
            2.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(calibrate_correction_factor(&e, &e).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn calibration_errors() {
        assert!(matches!(
            calibrate_correction_factor::<f64>(&[], &[]),
            Err(VpmError::CalibrationLength { .. })
        ));
        assert!(matches!(
            calibrate_correction_factor(&[1.0], &[1.0, 2.0]),
            Err(VpmError::CalibrationLength { .. })
        ));
        assert_eq!(
            calibrate_correction_factor(&[0.0, 0.0], &[1.0, 2.0]),
            Err(VpmError::CalibrationDegenerate)
        );
    }

    #[test]
    fn smoothing() {
        let v = [0.0, 0.0, 3.0, 0.0, 0.0];
        assert_eq!(smooth_series(&v, 1).unwrap(), v.to_vec());
        assert_eq!(smooth_series(&v, 3).unwrap(), vec![0.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(smooth_series(&[4.0; 9], 5).unwrap(), vec![4.0; 9]);
        assert!(smooth_series::<f64>(&[], 3).unwrap().is_empty());
        assert_eq!(smooth_series(&v, 2), Err(VpmError::InvalidWindow(2)));
        assert_eq!(smooth_series(&v, 0), Err(VpmError::InvalidWindow(0)));
    }
}
