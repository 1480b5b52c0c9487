use std::f64::consts::PI;

use nalgebra::{DVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::beam::{
    beam_pattern, beamformer, link_report, measured_link_report, regularized_beamformer, AngleMode,
    AngleProvider, BeamPattern, BeamformerMatrix, ChannelRealization, LinkReport, PowerAllocation,
};
use crate::design::{certify_gain_point, critical_dt, design, ObserverGains};
use crate::dynamics::{measure, step_truth};
use crate::error::{Error, Result};
use crate::numkernel::RealMatrix;
use crate::runtime::{BoundMonitor, Observer};

use super::config::{PhaseMode, RunConfig};

/// Diagonal loading used when two UAVs are too close in `sin(theta)` for zero forcing.
pub const FALLBACK_LOADING: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignRecord {
    pub label: String,
    pub alpha: f64,
    /// Bound handed to the solver; absent for fixed gain points.
    pub mu_max: Option<f64>,
    pub gamma: f64,
    pub mu: f64,
    #[serde(rename = "L_diag")]
    pub l_diag: Vec<f64>,
    #[serde(rename = "Q_diag")]
    pub q_diag: Vec<f64>,
    pub certified: bool,
    pub critical_dt: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ObserverDesign {
    pub record: DesignRecord,
    pub gains: ObserverGains,
}

/// One design per `mu_max`, or one per configured gain point.
pub fn design_observers(cfg: &RunConfig) -> Vec<(String, Result<ObserverDesign>)> {
    match &cfg.observer.gain_points {
        Some(points) => points
            .iter()
            .map(|p| {
                let label = format!("gain_{}", p.l);
                (label.clone(), gain_point_design(cfg, label, p.l, p.gamma))
            })
            .collect(),
        None => cfg
            .observer
            .mu_max
            .iter()
            .map(|&mu_max| {
                let label = format!("mu_max_{mu_max}");
                (label.clone(), solver_design(cfg, label, mu_max))
            })
            .collect(),
    }
}

/// Like [`design_observers`] but stops at the first failure.
pub fn all_designs(cfg: &RunConfig) -> Result<Vec<ObserverDesign>> {
    design_observers(cfg).into_iter().map(|(_, d)| d).collect()
}

fn solver_design(cfg: &RunConfig, label: String, mu_max: f64) -> Result<ObserverDesign> {
    let prob = cfg.lmi_problem(mu_max);
    let (sol, gains) = design(&prob)?;
    let critical = critical_dt(&prob, mu_max, (cfg.sweep.dt_low, cfg.sweep.dt_high)).ok();
    Ok(ObserverDesign {
        record: DesignRecord {
            label,
            alpha: prob.alpha,
            mu_max: Some(mu_max),
            gamma: sol.gamma,
            mu: sol.mu,
            l_diag: gains.l_diag(),
            q_diag: gains.q_diag(),
            certified: sol.certified,
            critical_dt: critical,
        },
        gains,
    })
}

fn gain_point_design(cfg: &RunConfig, label: String, l: f64, gamma: f64) -> Result<ObserverDesign> {
    let mu = gamma * gamma;
    let prob = cfg.lmi_problem(mu);
    let sol = certify_gain_point(&prob, l, mu)?.ok_or_else(|| Error::Infeasible {
        mu_attempted: mu,
        reason: format!("gain L = {l} I is not certified at gamma = {gamma}"),
    })?;
    let dim = prob.dim();
    let gains = ObserverGains {
        l: RealMatrix::identity(dim, dim) * l,
        q: RealMatrix::identity(dim, dim) * (1.0 - l),
        h: prob.h.clone(),
    };
    Ok(ObserverDesign {
        record: DesignRecord {
            label,
            alpha: prob.alpha,
            mu_max: None,
            gamma,
            mu,
            l_diag: gains.l_diag(),
            q_diag: gains.q_diag(),
            certified: sol.certified,
            critical_dt: None,
        },
        gains,
    })
}

/// Truth and observer output at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackStep {
    pub k: usize,
    pub x_true: DVector<f64>,
    /// `Xhat_k`, the prediction made at step `k - 1`.
    pub x_pred: DVector<f64>,
    pub w_true: DVector<f64>,
    pub w_hat: DVector<f64>,
}

impl TrackStep {
    pub fn position_error(&self, i: usize) -> f64 {
        pair_dist(&self.x_pred, &self.x_true, i)
    }

    pub fn input_error(&self, i: usize) -> f64 {
        pair_dist(&self.w_hat, &self.w_true, i)
    }
}

fn pair_dist(a: &DVector<f64>, b: &DVector<f64>, i: usize) -> f64 {
    (a.fixed_rows::<2>(2 * i) - b.fixed_rows::<2>(2 * i)).norm()
}

pub fn positions(x: &DVector<f64>) -> Vec<Vector2<f64>> {
    (0..x.len() / 2).map(|i| Vector2::new(x[2 * i], x[2 * i + 1])).collect()
}

#[derive(Debug, Clone)]
pub struct Track {
    pub steps: Vec<TrackStep>,
    pub monitor: BoundMonitor,
}

/// Runs truth, measurement and observer for `cfg.horizon` steps.
pub fn run_track(cfg: &RunConfig, gains: &ObserverGains, gamma: f64) -> Result<Track> {
    let scenario = cfg.scenario();
    let model = cfg.measurement_model();
    let mut observer = Observer::new(gains.clone(), &scenario.sampling_matrix(), cfg.observer_init())?;
    let mut monitor = BoundMonitor::new(gamma, cfg.observer.transient_cutoff);
    let mut state = scenario.initial_state();
    let mut steps = Vec::with_capacity(cfg.horizon);
    for k in 0..cfg.horizon {
        let (next, input) = step_truth(&state, &scenario)?;
        let y = measure(&state, &input, &model)?;
        let rec = observer.step(&y, &state.x)?;
        monitor.observe(&rec.perf, &input.w, &rec.w_hat, k);
        steps.push(TrackStep {
            k,
            x_true: state.x,
            x_pred: rec.xhat,
            w_true: input.w,
            w_hat: rec.w_hat,
        });
        state = next;
    }
    Ok(Track { steps, monitor })
}

/// Zero-forcing precoder, or the diagonally loaded one when zero forcing is
/// ill-conditioned. The flag reports the fallback.
pub fn robust_beamformer(cfg: &RunConfig, angles: &[f64]) -> Result<(BeamformerMatrix, bool)> {
    let arr = cfg.array_config();
    match beamformer(&arr, angles) {
        Ok(bf) => Ok((bf, false)),
        Err(Error::Conditioning { .. }) => Ok((regularized_beamformer(&arr, angles, FALLBACK_LOADING)?, true)),
        Err(e) => Err(e),
    }
}

/// Per-UAV channel phases for the run.
pub fn channel_phases(cfg: &RunConfig) -> Vec<f64> {
    let n = cfg.scenario.radii.len();
    match cfg.channel.phase_mode {
        PhaseMode::Deterministic => (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect(),
        PhaseMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(u64::MAX);
            (0..n).map(|_| rng.random::<f64>() * 2.0 * PI).collect()
        }
    }
}

/// Noise and pilot stream for step `k`, shared by every mode.
pub fn step_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

/// Link context fixed for a run.
#[derive(Debug, Clone)]
pub struct LinkContext {
    pub cfg: RunConfig,
    pub center: Vector2<f64>,
    pub phases: Vec<f64>,
    pub noise_power: f64,
}

impl LinkContext {
    pub fn new(cfg: &RunConfig) -> Self {
        Self {
            cfg: cfg.clone(),
            center: Vector2::new(cfg.scenario.center[0], cfg.scenario.center[1]),
            phases: channel_phases(cfg),
            noise_power: cfg.noise_power(),
        }
    }

    pub fn channel(&self, x_true: &DVector<f64>) -> Result<ChannelRealization> {
        ChannelRealization::line_of_sight(
            &self.cfg.array_config(),
            &positions(x_true),
            &self.center,
            &self.phases,
            self.noise_power,
        )
    }

    /// Observer-derived azimuths in the configured angle form.
    pub fn predicted_angles(&self, x_pred: &DVector<f64>) -> Result<Vec<f64>> {
        let form = self.cfg.angle_form();
        positions(x_pred).iter().map(|u| form.angle(u, &self.center)).collect()
    }
}

/// Link evaluation of one mode at one step.
#[derive(Debug, Clone)]
pub struct LinkStep {
    pub report: LinkReport,
    pub beamformer: BeamformerMatrix,
    pub fallback: bool,
}

fn evaluate(
    ctx: &LinkContext,
    chan: &ChannelRealization,
    angles: &[f64],
    rng: Option<&mut ChaCha8Rng>,
) -> Result<LinkStep> {
    let arr = ctx.cfg.array_config();
    let (bf, fallback) = robust_beamformer(&ctx.cfg, angles)?;
    let power = PowerAllocation::equal(&bf, ctx.cfg.channel.tx_power);
    let report = match rng {
        None => link_report(&arr, chan, &bf, &power)?,
        Some(rng) => measured_link_report(&arr, chan, &bf, &power, ctx.cfg.channel.pilot_symbols, rng)?,
    };
    Ok(LinkStep {
        report,
        beamformer: bf,
        fallback,
    })
}

/// Analytic link quality when beamforming toward the observer's predictions.
pub fn uio_link(ctx: &LinkContext, step: &TrackStep) -> Result<LinkStep> {
    let chan = ctx.channel(&step.x_true)?;
    let angles = ctx.predicted_angles(&step.x_pred)?;
    evaluate(ctx, &chan, &angles, None)
}

pub fn pattern_at(ctx: &LinkContext, link: &LinkStep) -> BeamPattern {
    let grid = crate::beam::azimuth_grid(ctx.cfg.pattern.grid_points);
    beam_pattern(&ctx.cfg.array_config(), &link.beamformer, &grid)
}

/// Mean SE across UAVs for both modes at one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareStep {
    pub k: usize,
    pub t: f64,
    pub in_window: bool,
    pub se_uio: f64,
    pub se_baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummary {
    pub label: String,
    pub window_steps: usize,
    pub window_mean_uio: f64,
    pub window_mean_baseline: f64,
    /// `window_mean_uio - window_mean_baseline`.
    pub window_gap: f64,
    pub outside_mean_uio: f64,
    pub outside_mean_baseline: f64,
    pub fallback_steps_uio: usize,
    pub fallback_steps_baseline: usize,
}

/// Runs the observer-driven and the echo-based beam steering on identical
/// noise. With `force_truth`, the observer angles are replaced by the true
/// ones, so both modes must agree outside the blockage windows.
pub fn compare_modes(
    cfg: &RunConfig,
    design: &ObserverDesign,
    force_truth: bool,
) -> Result<(Vec<CompareStep>, CompareSummary)> {
    let windows = cfg.windows();
    if windows.is_empty() {
        return Err(Error::validation(
            "blockage.windows",
            "compare-baseline needs at least one window",
        ));
    }
    let track = run_track(cfg, &design.gains, design.record.gamma)?;
    let ctx = LinkContext::new(cfg);
    let dt = cfg.time_step();
    let mut uio = AngleProvider::new(AngleMode::Uio, windows.clone());
    let mut echo = AngleProvider::new(AngleMode::EchoBaseline, windows.clone());
    let mut rows = Vec::with_capacity(track.steps.len());
    let (mut fb_uio, mut fb_echo) = (0, 0);
    for step in &track.steps {
        let t = step.k as f64 * dt;
        let chan = ctx.channel(&step.x_true)?;
        let predicted = if force_truth {
            chan.theta.clone()
        } else {
            ctx.predicted_angles(&step.x_pred)?
        };
        let a_uio = uio.angles(t, &chan.theta, &predicted);
        let a_echo = echo.angles(t, &chan.theta, &predicted);
        let l_uio = evaluate(&ctx, &chan, &a_uio, Some(&mut step_rng(cfg.seed, step.k)))?;
        let l_echo = evaluate(&ctx, &chan, &a_echo, Some(&mut step_rng(cfg.seed, step.k)))?;
        fb_uio += l_uio.fallback as usize;
        fb_echo += l_echo.fallback as usize;
        rows.push(CompareStep {
            k: step.k,
            t,
            in_window: windows.contains(t),
            se_uio: l_uio.report.mean_se(),
            se_baseline: l_echo.report.mean_se(),
        });
    }
    let mean = |inside: bool, pick: fn(&CompareStep) -> f64| {
        let sel: Vec<f64> = rows.iter().filter(|r| r.in_window == inside).map(pick).collect();
        if sel.is_empty() {
            f64::NAN
        } else {
            sel.iter().sum::<f64>() / sel.len() as f64
        }
    };
    let window_mean_uio = mean(true, |r| r.se_uio);
    let window_mean_baseline = mean(true, |r| r.se_baseline);
    let summary = CompareSummary {
        label: design.record.label.clone(),
        window_steps: rows.iter().filter(|r| r.in_window).count(),
        window_mean_uio,
        window_mean_baseline,
        window_gap: window_mean_uio - window_mean_baseline,
        outside_mean_uio: mean(false, |r| r.se_uio),
        outside_mean_baseline: mean(false, |r| r.se_baseline),
        fallback_steps_uio: fb_uio,
        fallback_steps_baseline: fb_echo,
    };
    Ok((rows, summary))
}
