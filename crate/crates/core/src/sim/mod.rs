//! Experiment harness behind the `uio-beam` binary: config, orchestration
//! and CSV/JSON output.
//!
//! Every command writes into an output directory and finishes with a
//! `manifest.json` holding the config hash, seed, wall-clock time and the
//! row count of every CSV written. CSV bodies depend only on the config and
//! seed.

pub mod config;
pub mod output;
pub mod pipeline;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use config::RunConfig;
use output::{num, write_json, CsvWriter, RunManifest};
use pipeline::{
    all_designs, compare_modes, design_observers, pattern_at, run_track, uio_link, CompareSummary,
    DesignRecord, LinkContext,
};

pub use config::{parse_config, parse_config_str};

struct Run<'a> {
    cfg: &'a RunConfig,
    out: &'a Path,
    command: &'static str,
    started: Instant,
    rows: BTreeMap<String, usize>,
}

impl<'a> Run<'a> {
    fn start(cfg: &'a RunConfig, out: &'a Path, command: &'static str) -> Result<Self> {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        Ok(Self {
            cfg,
            out,
            command,
            started: Instant::now(),
            rows: BTreeMap::new(),
        })
    }

    fn csv(&self, rel: &str, header: &[&str]) -> Result<CsvWriter> {
        CsvWriter::create(&self.out.join(rel), header)
    }

    fn record(&mut self, rel: &str, w: CsvWriter) -> Result<()> {
        let n = w.finish()?;
        self.rows.insert(rel.to_string(), n);
        Ok(())
    }

    fn finish(self) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: self.cfg.hash(),
            seed: self.cfg.seed,
            horizon: self.cfg.horizon,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
            rows: self.rows,
        };
        manifest.write(self.out)?;
        Ok(manifest)
    }
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum DesignEntry<'a> {
    Ok(&'a DesignRecord),
    Failed { label: &'a str, error: String },
}

/// Designs every configured observer and writes `designs.json`. Fails with
/// the first solver error after recording all outcomes.
pub fn cmd_design(cfg: &RunConfig, out: &Path) -> Result<Vec<DesignRecord>> {
    let run = Run::start(cfg, out, "design")?;
    let outcomes = design_observers(cfg);
    let entries: Vec<DesignEntry> = outcomes
        .iter()
        .map(|(label, r)| match r {
            Ok(d) => DesignEntry::Ok(&d.record),
            Err(e) => DesignEntry::Failed {
                label,
                error: e.to_string(),
            },
        })
        .collect();
    write_json(&out.join("designs.json"), &entries)?;
    run.finish()?;
    outcomes.into_iter().map(|(_, r)| r.map(|d| d.record)).collect()
}

/// Steady-state bound check for one design.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSummary {
    pub label: String,
    pub gamma: f64,
    pub gamma_w: f64,
    pub worst_state_err: f64,
    pub state_threshold: f64,
    pub state_bound_holds: bool,
    pub worst_input_err: f64,
    pub input_threshold: f64,
    pub input_bound_holds: bool,
    /// Steps where zero forcing was ill-conditioned and the loaded precoder was used.
    pub fallback_steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub designs: Vec<DesignRecord>,
    pub bounds: Vec<BoundSummary>,
    pub manifest: RunManifest,
}

/// Tracks the network with every design and writes per-design
/// trajectories, inputs, spectral efficiency and beam patterns.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<SimulateReport> {
    let mut run = Run::start(cfg, out, "simulate")?;
    let designs = all_designs(cfg)?;
    let ctx = LinkContext::new(cfg);
    let dt = cfg.time_step();
    let n = cfg.scenario.radii.len();
    let snapshots = cfg.snapshots();
    let mut bounds = Vec::new();
    for d in &designs {
        let label = &d.record.label;
        let track = run_track(cfg, &d.gains, d.record.gamma)?;
        let traj_rel = format!("{label}/trajectories.csv");
        let inp_rel = format!("{label}/inputs.csv");
        let se_rel = format!("{label}/se.csv");
        let mut traj = run.csv(
            &traj_rel,
            &["k", "t", "uav_id", "x_true", "y_true", "x_pred", "y_pred", "err_norm"],
        )?;
        let mut inp = run.csv(
            &inp_rel,
            &["k", "uav_id", "wx_true", "wy_true", "wx_est", "wy_est", "err_norm"],
        )?;
        let mut se = run.csv(&se_rel, &["k", "uav_id", "mode", "sinr_db", "se_bpshz"])?;
        let mut fallback_steps = 0;
        for step in &track.steps {
            let k = step.k;
            let t = k as f64 * dt;
            let link = uio_link(&ctx, step)?;
            fallback_steps += link.fallback as usize;
            for i in 0..n {
                let id = (i + 1).to_string();
                traj.row(&[
                    k.to_string(),
                    num(t),
                    id.clone(),
                    num(step.x_true[2 * i]),
                    num(step.x_true[2 * i + 1]),
                    num(step.x_pred[2 * i]),
                    num(step.x_pred[2 * i + 1]),
                    num(step.position_error(i)),
                ])?;
                inp.row(&[
                    k.to_string(),
                    id.clone(),
                    num(step.w_true[2 * i]),
                    num(step.w_true[2 * i + 1]),
                    num(step.w_hat[2 * i]),
                    num(step.w_hat[2 * i + 1]),
                    num(step.input_error(i)),
                ])?;
                se.row(&[
                    k.to_string(),
                    id,
                    "uio".into(),
                    num(link.report.sinr_db[i]),
                    num(link.report.se[i]),
                ])?;
            }
            if snapshots.binary_search(&k).is_ok() {
                let rel = format!("{label}/pattern_k{k:05}.csv");
                let mut pat = run.csv(&rel, &["theta_deg", "beam_id", "gain_db"])?;
                let pattern = pattern_at(&ctx, &link);
                for beam in 0..n {
                    for (theta, g) in pattern.theta.iter().zip(pattern.gain_db(beam)) {
                        pat.row(&[num(theta.to_degrees()), (beam + 1).to_string(), num(g)])?;
                    }
                }
                run.record(&rel, pat)?;
            }
        }
        run.record(&traj_rel, traj)?;
        run.record(&inp_rel, inp)?;
        run.record(&se_rel, se)?;
        let m = &track.monitor;
        bounds.push(BoundSummary {
            label: label.clone(),
            gamma: m.gamma,
            gamma_w: m.gamma_w,
            worst_state_err: m.worst_state_err,
            state_threshold: m.state_threshold(),
            state_bound_holds: m.state_bound_holds(),
            worst_input_err: m.worst_input_err,
            input_threshold: m.input_threshold(),
            input_bound_holds: m.input_bound_holds(),
            fallback_steps,
        });
    }
    let records: Vec<DesignRecord> = designs.into_iter().map(|d| d.record).collect();
    write_json(&out.join("designs.json"), &records)?;
    write_json(&out.join("bounds.json"), &bounds)?;
    let manifest = run.finish()?;
    Ok(SimulateReport {
        designs: records,
        bounds,
        manifest,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub mu_max: f64,
    pub critical_dt: f64,
}

/// Largest feasible common update interval for each `mu_max`.
pub fn cmd_sweep_dt(cfg: &RunConfig, out: &Path) -> Result<Vec<SweepRow>> {
    let mut run = Run::start(cfg, out, "sweep-dt")?;
    let bracket = (cfg.sweep.dt_low, cfg.sweep.dt_high);
    let rows = cfg
        .observer
        .mu_max
        .iter()
        .map(|&mu_max| {
            let dt = crate::design::critical_dt(&cfg.lmi_problem(mu_max), mu_max, bracket)?;
            Ok(SweepRow {
                mu_max,
                critical_dt: dt,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut w = run.csv("sweep_dt.csv", &["mu_max", "critical_dt_s"])?;
    for r in &rows {
        w.row(&[num(r.mu_max), num(r.critical_dt)])?;
    }
    run.record("sweep_dt.csv", w)?;
    run.finish()?;
    Ok(rows)
}

/// Observer-driven versus echo-based beam steering under blockage, per design.
pub fn cmd_compare_baseline(cfg: &RunConfig, out: &Path) -> Result<Vec<CompareSummary>> {
    if cfg.windows().is_empty() {
        return Err(Error::validation(
            "blockage.windows",
            "compare-baseline needs at least one window",
        ));
    }
    let mut run = Run::start(cfg, out, "compare-baseline")?;
    let mut summaries = Vec::new();
    for d in all_designs(cfg)? {
        let (rows, summary) = compare_modes(cfg, &d, false)?;
        let rel = format!("{}/se_compare.csv", d.record.label);
        let mut w = run.csv(&rel, &["k", "t", "in_window", "se_uio", "se_echo_baseline", "gap"])?;
        for r in &rows {
            w.row(&[
                r.k.to_string(),
                num(r.t),
                (r.in_window as u8).to_string(),
                num(r.se_uio),
                num(r.se_baseline),
                num(r.se_uio - r.se_baseline),
            ])?;
        }
        run.record(&rel, w)?;
        summaries.push(summary);
    }
    write_json(&out.join("summary.json"), &summaries)?;
    run.finish()?;
    Ok(summaries)
}
