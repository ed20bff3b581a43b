//! Independent re-implementations of the chiller, fan and metric equations,
//! checked against the library on random inputs.

use proptest::prelude::*;
use towerfan_core::metrics::compute_metrics;
use towerfan_core::plant::{chiller_capacity_psi1, chiller_power, fan_power, ChillerCurves, PlantConfig};

/// Relative agreement to 12 significant digits.
fn agree12(a: f64, b: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(1e-300);
    (a - b).abs() <= 1e-12 * scale
}

/// Evaluates Σ kᵢⱼ·xⁱ·yʲ from an explicit exponent table.
fn poly2(terms: &[(f64, i32, i32)], x: f64, y: f64) -> f64 {
    terms.iter().map(|&(k, i, j)| k * x.powi(i) * y.powi(j)).sum()
}

fn biquad_terms(k: &[f64; 6]) -> [(f64, i32, i32); 6] {
    [
        (k[0], 0, 0),
        (k[1], 1, 0),
        (k[2], 2, 0),
        (k[3], 0, 1),
        (k[4], 0, 2),
        (k[5], 1, 1),
    ]
}

/// Chiller power written out step by step from the DOE-2 definitions.
fn oracle_chiller(
    curves: &ChillerCurves<f64>,
    cfg: &PlantConfig<f64>,
    tee: f64,
    tel: f64,
    tce: f64,
    m: f64,
) -> (f64, f64, f64) {
    let psi1 = poly2(&biquad_terms(&curves.a), tel, tce).max(0.1);
    let q_avail = curves.c_ref * psi1;
    let q_load = m * cfg.cp_water * (tee - tel);
    let plr = (q_load / q_avail).max(cfg.plr_min).min(cfg.plr_max);
    let psi2 = poly2(&biquad_terms(&curves.b), tel, tce);
    let psi3 = curves.c[2] * plr.powi(2) + curves.c[1] * plr + curves.c[0];
    (q_avail * psi2 * psi3 / curves.cop_ref, plr, q_load)
}

fn oracle_metrics(y: &[f64], yh: &[f64]) -> (f64, f64, f64) {
    let n = y.len() as f64;
    let ybar = y.iter().sum::<f64>() / n;
    let ss_res: f64 = y.iter().zip(yh).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|a| (a - ybar).powi(2)).sum();
    let rmse = (ss_res / n).sqrt();
    let ymax = y.iter().cloned().fold(f64::MIN, f64::max);
    let ymin = y.iter().cloned().fold(f64::MAX, f64::min);
    (1.0 - ss_res / ss_tot, rmse, rmse / (ymax - ymin))
}

#[test]
fn reference_biquadratic_at_rating_point() {
    let curves = ChillerCurves::<f64>::electric_eir_reference();
    let (tel, tce) = (6.67, 29.44);
    let expected = poly2(&biquad_terms(&curves.a), tel, tce);
    assert!(agree12(chiller_capacity_psi1(tel, tce, &curves), expected));
}

fn curves_strategy() -> impl Strategy<Value = ChillerCurves<f64>> {
    let base = ChillerCurves::<f64>::electric_eir_reference();
    (
        prop::array::uniform6(-0.5f64..0.5),
        prop::array::uniform6(-0.5f64..0.5),
        prop::array::uniform3(-0.5f64..0.5),
        100.0f64..2000.0,
        2.0f64..7.0,
    )
        .prop_map(move |(da, db, dc, c_ref, cop)| {
            let mut c = base;
            for i in 0..6 {
                c.a[i] *= 1.0 + da[i];
                c.b[i] *= 1.0 + db[i];
            }
            for (ci, d) in c.c.iter_mut().zip(dc) {
                *ci *= 1.0 + d;
            }
            c.c_ref = c_ref;
            c.cop_ref = cop;
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn chiller_power_matches_oracle(
        curves in curves_strategy(),
        tel in 4.0f64..10.0,
        dt_evap in 0.0f64..8.0,
        tce in 12.0f64..40.0,
        m in 1.0f64..60.0,
    ) {
        let cfg = PlantConfig { curves, ..PlantConfig::reference() };
        let tee = tel + dt_evap;
        let got = chiller_power(tee, tel, tce, m, &cfg).unwrap();
        let (p, plr, q) = oracle_chiller(&curves, &cfg, tee, tel, tce, m);
        prop_assert!(agree12(got.p_chiller, p), "{} vs {}", got.p_chiller, p);
        prop_assert!(agree12(got.plr, plr));
        prop_assert!(agree12(got.q_load, q));
    }

    #[test]
    fn fan_power_matches_oracle(hp in 0.0f64..500.0, speed in 0.0f64..=100.0) {
        let expected = hp * 0.7457 * (speed / 100.0).powi(3);
        prop_assert!(agree12(fan_power(hp, speed).unwrap(), expected));
    }

    #[test]
    fn metrics_match_oracle(
        pairs in prop::collection::vec((0.0f64..500.0, -20.0f64..20.0), 2..200),
    ) {
        let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let yh: Vec<f64> = pairs.iter().map(|p| p.0 + p.1).collect();
        prop_assume!(y.iter().cloned().fold(f64::MIN, f64::max) - y.iter().cloned().fold(f64::MAX, f64::min) > 1e-6);
        let got = compute_metrics(&y, &yh).unwrap();
        let (r2, rmse, nrmse) = oracle_metrics(&y, &yh);
        prop_assert!((got.r2 - r2).abs() <= 1e-12 * r2.abs().max(1.0));
        prop_assert!(agree12(got.rmse, rmse));
        prop_assert!(agree12(got.nrmse, nrmse));
        prop_assert!(got.r2 <= 1.0 && got.rmse >= 0.0 && got.nrmse >= 0.0);
    }
}
