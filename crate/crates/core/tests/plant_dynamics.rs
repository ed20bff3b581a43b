use towerfan_core::baseline::{ideal_pid_step, required_effectiveness, IdealPidConfig};
use towerfan_core::plant::{plant_step, tower_effectiveness, PlantConfig, PlantState, WeatherSample};

fn humid() -> WeatherSample<f64> {
    WeatherSample::new(0.0, 31.0, 25.5).unwrap()
}

fn steady_total(cfg: &PlantConfig<f64>, speed: f64, w: &WeatherSample<f64>) -> PlantState<f64> {
    PlantState::settled(cfg, speed, w, 60.0).unwrap()
}

#[test]
fn supply_temperature_step_is_first_order() {
    let cfg = PlantConfig::<f64>::reference();
    let w = humid();
    for (from, to) in [(25.0, 100.0), (0.0, 100.0), (60.0, 30.0)] {
        let start = steady_total(&cfg, from, &w);
        let mut s = start;
        let mut trace = Vec::new();
        for _ in 0..120 {
            s = plant_step(&s, to, &w, 60.0, &cfg).unwrap();
            trace.push(s.t_cws);
        }
        let end = *trace.last().unwrap();
        let sq: f64 = trace
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let model = 1.0 - (-(k as f64 + 1.0) * 60.0 / cfg.tau_plant).exp();
                ((t - start.t_cws) / (end - start.t_cws) - model).powi(2)
            })
            .sum();
        let rms = (sq / trace.len() as f64).sqrt();
        assert!(rms < 0.01, "{from}->{to}: rms {rms}");
    }
}

#[test]
fn tower_and_chiller_trade_off() {
    let cfg = PlantConfig::<f64>::reference();
    let w = humid();
    let sweep: Vec<PlantState<f64>> = (0..=20).map(|k| steady_total(&cfg, 5.0 * k as f64, &w)).collect();
    for pair in sweep.windows(2) {
        assert!(pair[1].powers.p_tower > pair[0].powers.p_tower);
        assert!(pair[1].powers.p_chiller <= pair[0].powers.p_chiller);
        assert!(pair[1].t_cws <= pair[0].t_cws);
    }
}

#[test]
fn humid_static_map_is_unimodal_with_interior_minimum() {
    let cfg = PlantConfig::<f64>::reference();
    let totals: Vec<f64> = (0..=20)
        .map(|k| steady_total(&cfg, 5.0 * k as f64, &humid()).powers.p_total)
        .collect();
    let argmin = totals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!(argmin > 0 && argmin < 20, "argmin at {}", argmin * 5);
    for i in 0..totals.len() {
        for j in i + 1..totals.len() {
            // strictly decreasing before the minimum, increasing after
            if j <= argmin {
                assert!(totals[i] > totals[j]);
            }
            if i >= argmin {
                assert!(totals[i] < totals[j]);
            }
        }
    }
}

#[test]
fn ideal_pid_round_trip_reaches_required_effectiveness() {
    let cfg = PlantConfig::<f64>::reference();
    let pid = IdealPidConfig::default();
    for (t_db, t_wb, fan) in [(30.0, 16.0, 0.0), (33.0, 19.0, 50.0), (28.0, 14.0, 100.0)] {
        let w = WeatherSample::new(0.0, t_db, t_wb).unwrap();
        let state = steady_total(&cfg, fan, &w);
        let speed = ideal_pid_step(&pid, &state, &w, &cfg);
        if let Some(eps) = required_effectiveness(state.t_cwr, t_wb, pid.t_cws_setpoint()) {
            if eps > cfg.tower_eps0 && eps <= cfg.tower_eps1 {
                assert!((tower_effectiveness(speed, &cfg) - eps).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn ideal_pid_holds_setpoint_in_dry_weather() {
    let cfg = PlantConfig::<f64>::reference();
    let pid = IdealPidConfig::default();
    let w = WeatherSample::new(0.0, 33.0, 19.0).unwrap();
    let mut s = steady_total(&cfg, 100.0, &w);
    for _ in 0..120 {
        let speed = ideal_pid_step(&pid, &s, &w, &cfg);
        s = plant_step(&s, speed, &w, 60.0, &cfg).unwrap();
    }
    assert!((s.t_cws - 25.0).abs() < 0.05, "{}", s.t_cws);
    assert!(s.fan_speed > 0.0 && s.fan_speed < 100.0);
}
