use proptest::prelude::*;
use towerfan_core::metrics::{daily_savings_stats, integrate_energy};
use towerfan_core::vpm::calibrate_correction_factor;

/// Brute-force minimiser of Σ(k·e − m)² over a 1-D grid refined twice.
fn grid_search(estimates: &[f64], metered: &[f64]) -> f64 {
    let sse = |k: f64| -> f64 { estimates.iter().zip(metered).map(|(e, m)| (k * e - m).powi(2)).sum() };
    let (mut lo, mut hi) = (0.0, 5.0);
    let mut best = lo;
    for _ in 0..3 {
        let step = (hi - lo) / 1000.0;
        best = (0..=1000)
            .map(|i| lo + step * i as f64)
            .min_by(|a, b| sse(*a).total_cmp(&sse(*b)))
            .unwrap();
        lo = best - step;
        hi = best + step;
    }
    best
}

proptest! {
    #[test]
    fn least_squares_factor_matches_grid_search(
        pairs in prop::collection::vec((50.0f64..300.0, 0.5f64..2.5, -10.0f64..10.0), 5..100),
    ) {
        let estimates: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let metered: Vec<f64> = pairs.iter().map(|p| p.0 * p.1 + p.2).collect();
        let k = calibrate_correction_factor(&estimates, &metered).unwrap();
        prop_assert!((k - grid_search(&estimates, &metered)).abs() < 5e-5);
    }

    #[test]
    fn energy_is_additive_over_concatenation(
        a in prop::collection::vec(0.0f64..500.0, 0..100),
        b in prop::collection::vec(0.0f64..500.0, 0..100),
        dt in 1.0f64..900.0,
    ) {
        let joined: Vec<f64> = a.iter().chain(&b).copied().collect();
        let whole = integrate_energy(&joined, dt).unwrap();
        let parts = integrate_energy(&a, dt).unwrap() + integrate_energy(&b, dt).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-9 * whole.max(1.0));
    }

    #[test]
    fn savings_invariant_under_common_scaling(
        days in prop::collection::vec((100.0f64..1000.0, 0.6f64..1.1), 2..15),
        scale in 1e-2f64..1e2,
    ) {
        let b: Vec<f64> = days.iter().map(|d| d.0).collect();
        let t: Vec<f64> = days.iter().map(|d| d.0 * d.1).collect();
        let bs: Vec<f64> = b.iter().map(|v| v * scale).collect();
        let ts: Vec<f64> = t.iter().map(|v| v * scale).collect();
        let s1 = daily_savings_stats(&b, &t).unwrap();
        let s2 = daily_savings_stats(&bs, &ts).unwrap();
        prop_assert!((s1.mean_pct - s2.mean_pct).abs() < 1e-9);
        prop_assert!((s1.std_pct - s2.std_pct).abs() < 1e-9);
        prop_assert!(s1.ci95_low_pct <= s1.mean_pct && s1.mean_pct <= s1.ci95_high_pct);
    }
}
