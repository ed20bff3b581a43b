//! Estimation accuracy, energy totals and savings statistics.

use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("series lengths differ or are empty ({measured} measured, {estimated} estimated)")]
    Length { measured: usize, estimated: usize },
    #[error("NRMSE undefined: measured series has zero range")]
    ZeroRange,
    #[error("R² undefined: measured series has zero variance")]
    ZeroVariance,
    #[error("need at least two days for savings statistics (got {0})")]
    InsufficientData(usize),
    #[error("baseline energy on day {day} is not positive ({value})")]
    NonPositiveBaseline { day: usize, value: f64 },
    #[error("time step must be > 0 (got {0})")]
    InvalidStep(f64),
}

/// Agreement between a measured and an estimated series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport<T> {
    pub r2: T,
    pub rmse: T,
    /// RMSE over the measured range.
    pub nrmse: T,
    pub n: usize,
}

/// R², RMSE and range-normalised RMSE of `estimated` against `measured`.
pub fn compute_metrics<T: Scalar>(measured: &[T], estimated: &[T]) -> Result<MetricsReport<T>, MetricsError> {
    let n = measured.len();
    if n == 0 || n != estimated.len() {
        return Err(MetricsError::Length {
            measured: n,
            estimated: estimated.len(),
        });
    }
    let count = T::from_usize(n).unwrap();
    let (lo, hi) = measured
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &y| {
            (lo.min(y), hi.max(y))
        });
    let range = hi - lo;
    if !(range > T::zero()) {
        return Err(MetricsError::ZeroRange);
    }
    let mean = measured.iter().fold(T::zero(), |a, &y| a + y) / count;
    let (sse, sst) = measured
        .iter()
        .zip(estimated)
        .fold((T::zero(), T::zero()), |(sse, sst), (&y, &yh)| {
            (sse + (y - yh) * (y - yh), sst + (y - mean) * (y - mean))
        });
    if !(sst > T::zero()) {
        return Err(MetricsError::ZeroVariance);
    }
    let rmse = (sse / count).sqrt();
    Ok(MetricsReport {
        r2: T::one() - sse / sst,
        rmse,
        nrmse: rmse / range,
        n,
    })
}

/// Energy in kWh from a power series in kW sampled every `dt` seconds
/// (left rectangle rule).
pub fn integrate_energy<T: Scalar>(power: &[T], dt: T) -> Result<T, MetricsError> {
    if !(dt.is_finite() && dt > T::zero()) {
        return Err(MetricsError::InvalidStep(dt.as_f64()));
    }
    let sum = power.iter().fold(T::zero(), |a, &p| a + p);
    Ok(sum * dt / T::lit(3600.0))
}

/// Per-day percentage savings of a treatment against a baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SavingsStats<T> {
    pub mean_pct: T,
    /// Sample standard deviation (n − 1).
    pub std_pct: T,
    pub ci95_low_pct: T,
    pub ci95_high_pct: T,
    pub n_days: usize,
}

/// Two-sided 95 % Student-t critical value for `df` degrees of freedom.
pub fn t_critical_95(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1").inverse_cdf(0.975)
}

/// Mean daily savings `100·(b − t)/b` with a Student-t 95 % interval.
pub fn daily_savings_stats<T: Scalar>(
    baseline_daily: &[T],
    treatment_daily: &[T],
) -> Result<SavingsStats<T>, MetricsError> {
    let n = baseline_daily.len();
    if n != treatment_daily.len() {
        return Err(MetricsError::Length {
            measured: n,
            estimated: treatment_daily.len(),
        });
    }
    if n < 2 {
        return Err(MetricsError::InsufficientData(n));
    }
    let hundred = T::lit(100.0);
    let mut savings = Vec::with_capacity(n);
    for (day, (&b, &t)) in baseline_daily.iter().zip(treatment_daily).enumerate() {
        if !(b > T::zero()) {
            return Err(MetricsError::NonPositiveBaseline { day, value: b.as_f64() });
        }
        savings.push(hundred * (b - t) / b);
    }
    let count = T::from_usize(n).unwrap();
    let mean = savings.iter().fold(T::zero(), |a, &s| a + s) / count;
    let var = savings.iter().fold(T::zero(), |a, &s| a + (s - mean) * (s - mean)) / (count - T::one());
    let std = var.sqrt();
    let half_width = T::lit(t_critical_95(n - 1)) * std / count.sqrt();
    Ok(SavingsStats {
        mean_pct: mean,
        std_pct: std,
        ci95_low_pct: mean - half_width,
        ci95_high_pct: mean + half_width,
        n_days: n,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    #[test]
    fn perfect_estimate() {
        let y = [3.0, 1.0, 4.0, 1.5, 9.0];
        let m = compute_metrics(&y, &y).unwrap();
        assert_eq!((m.r2, m.rmse, m.nrmse, m.n), (1.0, 0.0, 0.0, 5));
    }

    #[test]
    fn mean_predictor_has_zero_r2() {
        let y = [1.0, 2.0, 3.0, 4.0];
        let m = compute_metrics(&y, &[2.5; 4]).unwrap();
        assert_relative_eq!(m.r2, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn hand_computed_errors() {
        let m = compute_metrics(&[1.0, 2.0, 3.0, 4.0], &[1.1, 1.9, 3.2, 3.8]).unwrap();
        assert_relative_eq!(m.rmse, (0.1f64 / 4.0).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(m.rmse, 0.1581, epsilon = 5e-5);
        assert_relative_eq!(m.nrmse, 0.0527, epsilon = 5e-5);
        assert_relative_eq!(m.r2, 1.0 - 0.1 / 5.0, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_series() {
        assert_eq!(compute_metrics(&[2.0, 2.0], &[1.0, 3.0]), Err(MetricsError::ZeroRange));
        assert!(matches!(
            compute_metrics(&[1.0, 2.0], &[1.0]),
            Err(MetricsError::Length { .. })
        ));
        assert!(matches!(
            compute_metrics::<f64>(&[], &[]),
            Err(MetricsError::Length { .. })
        ));
    }

    #[test]
    fn energy_integration() {
        assert_relative_eq!(integrate_energy(&[1.0; 60], 60.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_eq!(integrate_energy::<f64>(&[], 60.0).unwrap(), 0.0);
        let ramp: Vec<f64> = (0..10).map(|k| k as f64 * 10.0 / 9.0).collect();
        // (0 + 10)/2 kW average over one hour
        assert_relative_eq!(integrate_energy(&ramp, 360.0).unwrap(), 5.0, max_relative = 1e-12);
        let ramp: Vec<f64> = (0..10).map(|k| k as f64).collect();
        assert_relative_eq!(integrate_energy(&ramp, 360.0).unwrap(), 4.5, max_relative = 1e-12);
        assert!(integrate_energy(&[1.0], 0.0).is_err());
    }

    #[test]
    fn savings_statistics() {
        let s = daily_savings_stats(&[100.0, 100.0, 100.0], &[100.0, 100.0, 100.0]).unwrap();
        assert_eq!(
            (s.mean_pct, s.std_pct, s.ci95_low_pct, s.ci95_high_pct),
            (0.0, 0.0, 0.0, 0.0)
        );

        let s = daily_savings_stats(&[100.0, 100.0], &[85.0, 85.0]).unwrap();
        assert_relative_eq!(s.mean_pct, 15.0);
        assert_eq!(s.std_pct, 0.0);

        let s = daily_savings_stats(&[100.0; 3], &[84.0, 85.0, 86.0]).unwrap();
        assert_relative_eq!(s.mean_pct, 15.0, max_relative = 1e-12);
        assert_relative_eq!(s.std_pct, 1.0, max_relative = 1e-12);
        assert_relative_eq!(s.ci95_low_pct, 12.52, epsilon = 5e-3);
        assert_relative_eq!(s.ci95_high_pct, 17.48, epsilon = 5e-3);
        assert_eq!(s.n_days, 3);
    }

    #[test]
    fn t_table_values() {
        assert_relative_eq!(t_critical_95(2), 4.303, epsilon = 5e-4);
        assert_relative_eq!(t_critical_95(6), 2.447, epsilon = 5e-4);
    }

    #[test]
    fn savings_errors() {
        assert_eq!(
            daily_savings_stats(&[1.0], &[1.0]),
            Err(MetricsError::InsufficientData(1))
        );
        assert!(matches!(
            daily_savings_stats(&[1.0, 0.0], &[1.0, 1.0]),
            Err(MetricsError::NonPositiveBaseline { day: 1, .. })
        ));
    }
}
