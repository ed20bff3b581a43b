//! DOE-2 style electric chiller: capacity and energy-input-ratio curves.

use std::collections::BTreeMap;

use crate::scalar::{clamp, Scalar};

use super::{PlantConfig, PlantError};

/// Floor applied to the capacity curve so the part-load ratio stays finite.
pub const CAPACITY_FACTOR_FLOOR: f64 = 0.1;

const A_KEYS: [&str; 6] = ["a0", "a1", "a2", "a3", "a4", "a5"];
const B_KEYS: [&str; 6] = ["b0", "b1", "b2", "b3", "b4", "b5"];
const C_KEYS: [&str; 3] = ["c0", "c1", "c2"];

/// Performance-curve coefficients plus reference capacity and COP.
///
/// `a` and `b` are biquadratics in (leaving chilled water, entering condenser
/// water) temperature, ordered `[1, Tel, Tel², Tce, Tce², Tel·Tce]`. `c` is
/// the quadratic part-load curve `[1, PLR, PLR²]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChillerCurves<T> {
    pub a: [T; 6],
    pub b: [T; 6],
    pub c: [T; 3],
    /// Reference capacity, kW.
    pub c_ref: T,
    pub cop_ref: T,
}

/// Result of one chiller evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChillerOperatingPoint<T> {
    pub p_chiller: T,
    pub plr: T,
    pub q_load: T,
    pub q_available: T,
}

#[inline]
fn biquadratic<T: Scalar>(k: &[T; 6], x: T, y: T) -> T {
    k[0] + k[1] * x + k[2] * x * x + k[3] * y + k[4] * y * y + k[5] * x * y
}

impl<T: Scalar> ChillerCurves<T> {
    /// All three curves identically 1.
    pub fn identity(c_ref: T, cop_ref: T) -> Self {
        let (z, o) = (T::zero(), T::one());
        Self {
            a: [o, z, z, z, z, z],
            b: [o, z, z, z, z, z],
            c: [o, z, z],
            c_ref,
            cop_ref,
        }
    }

    /// EnergyPlus reference electric EIR chiller curves (rated at 6.67 °C
    /// leaving chilled water, 29.44 °C entering condenser water) on a
    /// 155 ton (545.1 kW), COP 3.05 machine.
    pub fn electric_eir_reference() -> Self {
        let l = T::lit;
        Self {
            a: [
                l(0.257896),
                l(0.0389016),
                l(-0.000217080),
                l(0.0468684),
                l(-0.000942840),
                l(-0.000343440),
            ],
            b: [
                l(0.933884),
                l(-0.0582120),
                l(0.00450036),
                l(0.00243000),
                l(0.000486000),
                l(-0.00121500),
            ],
            c: [l(0.222903), l(0.313387), l(0.463710)],
            c_ref: l(545.1),
            cop_ref: l(3.05),
        }
    }

    /// Capacity factor ψ₁, floored at [`CAPACITY_FACTOR_FLOOR`].
    pub fn capacity_factor(&self, t_evap_l: T, t_cond_e: T) -> T {
        biquadratic(&self.a, t_evap_l, t_cond_e).max(T::lit(CAPACITY_FACTOR_FLOOR))
    }

    /// Energy-input ratio temperature modifier ψ₂.
    pub fn eir_temperature(&self, t_evap_l: T, t_cond_e: T) -> T {
        biquadratic(&self.b, t_evap_l, t_cond_e)
    }

    /// Energy-input ratio part-load modifier ψ₃.
    pub fn eir_part_load(&self, plr: T) -> T {
        self.c[0] + self.c[1] * plr + self.c[2] * plr * plr
    }

    /// Checks reference values and that ψ₃ stays positive on `[plr_min, 1]`.
    pub fn validate(&self, plr_min: T) -> Result<(), PlantError> {
        let named = A_KEYS
            .iter()
            .zip(self.a.iter())
            .chain(B_KEYS.iter().zip(self.b.iter()))
            .chain(C_KEYS.iter().zip(self.c.iter()));
        for (name, v) in named {
            if !v.is_finite() {
                return Err(PlantError::NonFiniteCoefficient(name.to_string()));
            }
        }
        if !(self.c_ref.is_finite() && self.c_ref > T::zero()) {
            return Err(PlantError::invalid("c_ref", self.c_ref, "must be > 0"));
        }
        if !(self.cop_ref.is_finite() && self.cop_ref > T::zero()) {
            return Err(PlantError::invalid("cop_ref", self.cop_ref, "must be > 0"));
        }
        // A quadratic attains its minimum over an interval at an endpoint or
        // at the vertex.
        let (lo, hi) = (plr_min.max(T::zero()), T::one());
        let mut candidates = vec![lo, hi];
        if self.c[2] != T::zero() {
            let vertex = -self.c[1] / (T::lit(2.0) * self.c[2]);
            if vertex > lo && vertex < hi {
                candidates.push(vertex);
            }
        }
        for plr in candidates {
            let value = self.eir_part_load(plr);
            if !(value > T::zero()) {
                return Err(PlantError::PartLoadCurveNonPositive {
                    plr: plr.as_f64(),
                    value: value.as_f64(),
                });
            }
        }
        Ok(())
    }

    /// Chiller power at the given operating temperatures and flow.
    ///
    /// This is the single implementation shared by the plant simulator and
    /// the virtual power meter.
    #[allow(clippy::too_many_arguments)]
    pub fn operating_point(
        &self,
        t_evap_e: T,
        t_evap_l: T,
        t_cond_e: T,
        m_chw: T,
        cp_water: T,
        plr_min: T,
        plr_max: T,
    ) -> Result<ChillerOperatingPoint<T>, PlantError> {
        for (name, v) in [("t_evap_e", t_evap_e), ("t_evap_l", t_evap_l), ("t_cond_e", t_cond_e)] {
            if !v.is_finite() {
                return Err(PlantError::invalid(name, v, "must be finite"));
            }
        }
        if !(m_chw.is_finite() && m_chw > T::zero()) {
            return Err(PlantError::invalid("m_chw", m_chw, "must be > 0"));
        }
        if t_evap_e < t_evap_l {
            return Err(PlantError::HeatingDirection {
                t_evap_e: t_evap_e.as_f64(),
                t_evap_l: t_evap_l.as_f64(),
            });
        }
        let q_load = m_chw * cp_water * (t_evap_e - t_evap_l);
        let q_available = self.c_ref * self.capacity_factor(t_evap_l, t_cond_e);
        let plr = clamp(q_load / q_available, plr_min, plr_max);
        let p_chiller = q_available * self.eir_temperature(t_evap_l, t_cond_e) * self.eir_part_load(plr) / self.cop_ref;
        Ok(ChillerOperatingPoint {
            p_chiller,
            plr,
            q_load,
            q_available,
        })
    }
}

/// ψ₁ as a free function.
pub fn chiller_capacity_psi1<T: Scalar>(t_evap_l: T, t_cond_e: T, curves: &ChillerCurves<T>) -> T {
    curves.capacity_factor(t_evap_l, t_cond_e)
}

/// Chiller power, part-load ratio and load for the plant's chiller.
pub fn chiller_power<T: Scalar>(
    t_evap_e: T,
    t_evap_l: T,
    t_cond_e: T,
    m_chw: T,
    cfg: &PlantConfig<T>,
) -> Result<ChillerOperatingPoint<T>, PlantError> {
    cfg.curves.operating_point(
        t_evap_e,
        t_evap_l,
        t_cond_e,
        m_chw,
        cfg.cp_water,
        cfg.plr_min,
        cfg.plr_max,
    )
}

/// Builds curves from a flat name → value section (`a0`..`a5`, `b0`..`b5`,
/// `c0`..`c2`, `c_ref`, `cop_ref`). Unknown names are rejected.
pub fn load_chiller_curves<T: Scalar>(
    source: &BTreeMap<String, f64>,
    plr_min: T,
) -> Result<ChillerCurves<T>, PlantError> {
    let known =
        |k: &str| A_KEYS.contains(&k) || B_KEYS.contains(&k) || C_KEYS.contains(&k) || k == "c_ref" || k == "cop_ref";
    if let Some(unknown) = source.keys().find(|k| !known(k)) {
        return Err(PlantError::UnknownCoefficient(unknown.clone()));
    }
    let get = |key: &str| -> Result<T, PlantError> {
        let v = *source
            .get(key)
            .ok_or_else(|| PlantError::MissingCoefficient(key.to_string()))?;
        if !v.is_finite() {
            return Err(PlantError::NonFiniteCoefficient(key.to_string()));
        }
        Ok(T::lit(v))
    };
    let mut a = [T::zero(); 6];
    let mut b = [T::zero(); 6];
    let mut c = [T::zero(); 3];
    for (slot, key) in a.iter_mut().zip(A_KEYS) {
        *slot = get(key)?;
    }
    for (slot, key) in b.iter_mut().zip(B_KEYS) {
        *slot = get(key)?;
    }
    for (slot, key) in c.iter_mut().zip(C_KEYS) {
        *slot = get(key)?;
    }
    let curves = ChillerCurves {
        a,
        b,
        c,
        c_ref: get("c_ref")?,
        cop_ref: get("cop_ref")?,
    };
    curves.validate(plr_min)?;
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn identity_section() -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        for k in A_KEYS.iter().chain(B_KEYS.iter()).chain(C_KEYS.iter()) {
            m.insert(k.to_string(), 0.0);
        }
        m.insert("a0".into(), 1.0);
        m.insert("b0".into(), 1.0);
        m.insert("c0".into(), 1.0);
        m.insert("c_ref".into(), 545.1);
        m.insert("cop_ref".into(), 3.05);
        m
    }

    #[test]
    fn identity_capacity_curve_is_one() {
        let curves = ChillerCurves::<f64>::identity(545.1, 3.05);
        for (tel, tce) in [(0.0, 0.0), (6.7, 29.0), (-3.0, 40.0)] {
            assert_eq!(chiller_capacity_psi1(tel, tce, &curves), 1.0);
        }
    }

    #[test]
    fn linear_term_isolated() {
        let mut curves = ChillerCurves::<f64>::identity(1.0, 1.0);
        curves.a = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(chiller_capacity_psi1(6.7, 29.0, &curves), 6.7);
    }

    #[test]
    fn capacity_factor_is_floored() {
        let mut curves = ChillerCurves::<f64>::identity(1.0, 1.0);
        curves.a = [-5.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(curves.capacity_factor(7.0, 30.0), CAPACITY_FACTOR_FLOOR);
    }

    #[test]
    fn unit_curves_give_rated_power() {
        let cfg = PlantConfig {
            curves: ChillerCurves::identity(545.1, 3.05),
            ..PlantConfig::reference()
        };
        // PLR clamps don't matter with a flat part-load curve.
        let op = chiller_power(12.0, 7.0, 29.0, 10.0, &cfg).unwrap();
        assert_relative_eq!(op.p_chiller, 545.1 / 3.05, max_relative = 1e-15);
        assert_relative_eq!(op.p_chiller, 178.72, epsilon = 5e-3);
    }

    #[test]
    fn evaporator_load_from_flow_and_delta_t() {
        let cfg = PlantConfig::<f64>::reference();
        let op = chiller_power(12.0, 7.0, 29.0, 10.0, &cfg).unwrap();
        assert_relative_eq!(op.q_load, 209.3, max_relative = 1e-12);
    }

    #[test]
    fn zero_load_clamps_to_min_plr() {
        let cfg = PlantConfig::<f64>::reference();
        let op = chiller_power(7.0, 7.0, 29.0, 10.0, &cfg).unwrap();
        assert_eq!(op.q_load, 0.0);
        assert_eq!(op.plr, cfg.plr_min);
    }

    #[test]
    fn heating_direction_is_rejected() {
        let cfg = PlantConfig::<f64>::reference();
        assert!(matches!(
            chiller_power(6.0, 7.0, 29.0, 10.0, &cfg),
            Err(PlantError::HeatingDirection { .. })
        ));
        assert!(chiller_power(12.0, 7.0, 29.0, 0.0, &cfg).is_err());
    }

    #[test]
    fn loads_identity_section() {
        let curves: ChillerCurves<f64> = load_chiller_curves(&identity_section(), 0.1).unwrap();
        assert_eq!(curves, ChillerCurves::identity(545.1, 3.05));
        assert_eq!(curves.eir_temperature(3.0, 40.0), 1.0);
        assert_eq!(curves.eir_part_load(0.37), 1.0);
    }

    #[test]
    fn missing_coefficient_is_named() {
        let mut section = identity_section();
        section.remove("b3");
        let err = load_chiller_curves::<f64>(&section, 0.1).unwrap_err();
        assert_eq!(err, PlantError::MissingCoefficient("b3".into()));
        assert!(err.to_string().contains("b3"));
    }

    #[test]
    fn bad_sections_are_rejected() {
        let mut section = identity_section();
        section.insert("c3".into(), 1.0);
        assert!(matches!(
            load_chiller_curves::<f64>(&section, 0.1),
            Err(PlantError::UnknownCoefficient(k)) if k == "c3"
        ));

        let mut section = identity_section();
        section.insert("a2".into(), f64::NAN);
        assert!(matches!(
            load_chiller_curves::<f64>(&section, 0.1),
            Err(PlantError::NonFiniteCoefficient(k)) if k == "a2"
        ));

        // ψ₃(PLR) = 1 − 2·PLR turns negative inside [0.1, 1].
        let mut section = identity_section();
        section.insert("c1".into(), -2.0);
        assert!(matches!(
            load_chiller_curves::<f64>(&section, 0.1),
            Err(PlantError::PartLoadCurveNonPositive { .. })
        ));

        // Dips below zero only at the vertex PLR = 0.5.
        let mut section = identity_section();
        section.insert("c0".into(), 0.2);
        section.insert("c1".into(), -2.0);
        section.insert("c2".into(), 2.0);
        assert!(matches!(
            load_chiller_curves::<f64>(&section, 0.1),
            Err(PlantError::PartLoadCurveNonPositive { .. })
        ));
    }

    #[test]
    fn reference_curves_are_normalised_at_rating_point() {
        let curves = ChillerCurves::<f64>::electric_eir_reference();
        curves.validate(0.1).unwrap();
        assert_relative_eq!(curves.capacity_factor(6.67, 29.44), 1.0, epsilon = 0.01);
        assert_relative_eq!(curves.eir_temperature(6.67, 29.44), 1.0, epsilon = 0.01);
        assert_relative_eq!(curves.eir_part_load(1.0), 1.0, epsilon = 1e-12);
    }
}
