use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use towerfan::experiments::{default_speeds, parse_speeds};
use towerfan::output::{
    compare_command, default_out_dir, impulse_command, run_command, sweep_command, sweep_report, vpm_validate_command,
};
use towerfan::validate::{dwell_limit_from_summary, validate_run_file};
use towerfan::{load_scenario, ControllerKind, CostSource, HarnessError, Scenario};

#[derive(Parser)]
#[command(
    name = "towerfan",
    version,
    about = "Relay extremum-seeking control of cooling-tower fans"
)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value_os_t = default_out_dir())]
    out: PathBuf,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps and comparisons (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Override the cost the controller minimises.
    #[arg(long, global = true, value_enum)]
    cost_source: Option<CostSource>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-loop run with the scenario's controller.
    Run {
        scenario: PathBuf,
        /// Override the scenario's controller.
        #[arg(long, value_enum)]
        controller: Option<ControllerKind>,
    },
    /// Fixed-speed runs over a list of speeds.
    Sweep {
        scenario: PathBuf,
        /// `a,b,c` or `start:stop:step` in percent (default 0:100:5).
        #[arg(long)]
        speeds: Option<String>,
    },
    /// ESC against fixed 100 % and the ideal setpoint controller.
    Compare { scenario: PathBuf },
    /// Fan impulse test estimating the plant time constant.
    Impulse { scenario: PathBuf },
    /// Degraded-sensor virtual meter against plant truth.
    VpmValidate { scenario: PathBuf },
    /// Check a run CSV for internal consistency.
    Validate {
        run_csv: PathBuf,
        /// Relay hold time to enforce, seconds. Read from a sibling
        /// summary.json when omitted.
        #[arg(long)]
        dwell_limit: Option<f64>,
    },
}

fn scenario(cli: &Cli, path: &Path) -> Result<Scenario, HarnessError> {
    let mut sc = load_scenario(path)?;
    if let Some(seed) = cli.seed {
        sc = sc.with_seed(seed);
    }
    if let Some(src) = cli.cost_source {
        sc.cost_source = src;
    }
    Ok(sc)
}

fn execute(cli: &Cli) -> Result<(), HarnessError> {
    match &cli.command {
        Command::Run {
            scenario: path,
            controller,
        } => {
            let mut sc = scenario(cli, path)?;
            if let Some(c) = controller {
                sc.controller = *c;
            }
            let s = run_command(&sc, &cli.out)?;
            println!(
                "{} {}: {} steps, {:.3} kWh total, mean fan {:.2} %",
                s.scenario, s.controller, s.steps, s.energy.total_kwh, s.mean_fan_pct
            );
        }
        Command::Sweep { scenario: path, speeds } => {
            let sc = scenario(cli, path)?;
            let speeds = match speeds {
                Some(spec) => parse_speeds(spec)?,
                None => default_speeds(),
            };
            let points = sweep_command(&sc, &speeds, cli.jobs, &cli.out)?;
            println!("{}: {}", sc.name, sweep_report(&points));
        }
        Command::Compare { scenario: path } => {
            let sc = scenario(cli, path)?;
            let r = compare_command(&sc, cli.jobs, &cli.out)?;
            for c in &r.controllers {
                println!("{:>10}: {:.3} kWh", c.controller, c.energy.total_kwh);
            }
            println!("ESC savings vs fixed-100: {:.2} %", r.savings_vs_fixed100_pct);
            println!("ESC savings vs pid:       {:.2} %", r.savings_vs_pid_pct);
        }
        Command::Impulse { scenario: path } => {
            let sc = scenario(cli, path)?;
            let tau = impulse_command(&sc, &cli.out)?;
            println!("tau_est = {tau:.1} s");
        }
        Command::VpmValidate { scenario: path } => {
            let sc = scenario(cli, path)?;
            let r = vpm_validate_command(&sc, cli.jobs, &cli.out)?;
            println!("exact sensors bit-identical: {}", r.exact_sensor_bit_identical);
            for b in &r.results {
                println!(
                    "flow bias {}: k = {:.4}, R2 = {:.4}, NRMSE = {:.4}, argmin true {} % vpm {} %",
                    b.flow_bias,
                    b.correction_factor,
                    b.metrics.r2,
                    b.metrics.nrmse,
                    b.true_argmin_pct,
                    b.vpm_argmin_pct
                );
            }
        }
        Command::Validate { run_csv, dwell_limit } => {
            let limit = dwell_limit.or_else(|| dwell_limit_from_summary(run_csv));
            let r = validate_run_file(run_csv, limit)?;
            println!(
                "{} rows ok, {} relay switches, dwell {}",
                r.rows,
                r.switches,
                if r.dwell_checked { "checked" } else { "not checked" }
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
