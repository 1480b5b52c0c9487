use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uio_beam::sim::config::RunConfig;
use uio_beam::sim::{cmd_compare_baseline, cmd_design, cmd_simulate, cmd_sweep_dt, parse_config};
use uio_beam::Result;

#[derive(Parser)]
#[command(version, about = "Observer-driven beamforming experiments for a UAV network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config; defaults apply to every missing field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of simulated steps.
    #[arg(long, global = true)]
    horizon: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Design observer gains for each mu bound.
    Design,
    /// Track the UAVs and write trajectories, inputs, SE and beam patterns.
    Simulate,
    /// Critical update interval per mu bound.
    SweepDt,
    /// Observer-driven versus echo-based steering under blockage.
    CompareBaseline,
}

fn load(cli: &Cli) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = match &cli.config {
        Some(p) => parse_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(h) = cli.horizon {
        cfg.horizon = h;
    }
    if cli.horizon.is_some() && cfg.pattern.snapshots.is_some() {
        // Snapshots beyond a shortened horizon would fail validation.
        if let Some(s) = cfg.pattern.snapshots.as_mut() {
            s.retain(|&k| k < cfg.horizon);
        }
    }
    cfg.validate()?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    Ok((cfg, out))
}

fn run(cli: &Cli) -> Result<()> {
    let (cfg, out) = load(cli)?;
    match cli.command {
        Command::Design => {
            let records = cmd_design(&cfg, &out);
            if let Ok(records) = &records {
                println!("{:<16} {:>10} {:>10} {:>10}", "design", "gamma", "L_11", "Q_11");
                for r in records {
                    println!("{:<16} {:>10.5} {:>10.5} {:>10.5}", r.label, r.gamma, r.l_diag[0], r.q_diag[0]);
                }
            }
            records?;
        }
        Command::Simulate => {
            let report = cmd_simulate(&cfg, &out)?;
            for b in &report.bounds {
                println!(
                    "{}: gamma {:.4}, state err {:.4e} <= {:.4e}: {}, input err {:.4e} <= {:.4e}: {}",
                    b.label,
                    b.gamma,
                    b.worst_state_err,
                    b.state_threshold,
                    b.state_bound_holds,
                    b.worst_input_err,
                    b.input_threshold,
                    b.input_bound_holds
                );
            }
        }
        Command::SweepDt => {
            println!("{:>8} {:>14}", "mu_max", "critical_dt_s");
            for r in cmd_sweep_dt(&cfg, &out)? {
                println!("{:>8} {:>14.4}", r.mu_max, r.critical_dt);
            }
        }
        Command::CompareBaseline => {
            for s in cmd_compare_baseline(&cfg, &out)? {
                println!(
                    "{}: in-window SE uio {:.4} vs baseline {:.4} bit/s/Hz, gap {:+.4}",
                    s.label, s.window_mean_uio, s.window_mean_baseline, s.window_gap
                );
            }
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
