//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain binary
//! (`harness = false`) so the lines always reach the terminal.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uio_beam::beam::{
    beamformer, main_lobe_width_3db, steering_vector, ArrayConfig, SIN_SEPARATION_MIN,
};
use uio_beam::design::{
    certify_gain_point, critical_dt, design, feasible_at_mu, LmiProblem, ObserverGains,
};
use uio_beam::dynamics::Measurement;
use uio_beam::numkernel::{pinv_full_col_rank, RealMatrix};
use uio_beam::runtime::{predict, ObserverState};
use uio_beam::sim::cmd_simulate;
use uio_beam::sim::config::{GainPoint, RunConfig};
use uio_beam::sim::pipeline::{all_designs, compare_modes, run_track};

type Check = Result<String, String>;

const ALPHA: f64 = 0.5;
const DT: f64 = 0.15;
const D_SCALE: f64 = 0.5;
const MU_BOUNDS: [f64; 3] = [0.05, 0.25, 1.0];
/// Reported performance levels and the gains achieving them.
const REPORTED_GAMMA: [f64; 3] = [0.21, 0.47, 0.96];
const REPORTED_GAIN: [f64; 3] = [0.39, 0.60, 0.76];
/// Reported critical update intervals, seconds.
const REPORTED_CRITICAL_DT: [f64; 3] = [0.89, 1.01, 1.3];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: uio_beam::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn lmi_reproduction() -> Check {
    let started = Instant::now();
    let mut notes = Vec::new();
    for (i, &mu_max) in MU_BOUNDS.iter().enumerate() {
        let prob = LmiProblem::uniform(4, ALPHA, DT, D_SCALE, mu_max);
        let (sol, gains) = lib(design(&prob))?;
        ensure(sol.certified, || format!("mu <= {mu_max}: not certified"))?;
        ensure(sol.gamma <= REPORTED_GAMMA[i] + 0.01, || {
            format!("mu <= {mu_max}: gamma {} above {}", sol.gamma, REPORTED_GAMMA[i] + 0.01)
        })?;
        // Independent check of the returned gain through the Schur form.
        let l = gains.l[(0, 0)];
        let oracle_mu = common::mu_for_gain(ALPHA, DT, D_SCALE, 1.0, l);
        ensure(oracle_mu <= sol.mu * (1.0 + 1e-6), || {
            format!("returned L = {l} needs mu {oracle_mu}, solver claims {}", sol.mu)
        })?;
        notes.push(format!("gamma*={:.4}", sol.gamma));
    }
    for (&l, &gamma) in REPORTED_GAIN.iter().zip(&REPORTED_GAMMA) {
        let mu = gamma * gamma;
        let p = common::certify_gain_by_search(ALPHA, DT, D_SCALE, 1.0, l, mu, 1e-8)
            .ok_or_else(|| format!("oracle: L = {l} I does not certify gamma = {gamma}"))?;
        let prob = LmiProblem::uniform(4, ALPHA, DT, D_SCALE, mu);
        let sol = lib(certify_gain_point(&prob, l, mu))?
            .ok_or_else(|| format!("solver: L = {l} I does not certify gamma = {gamma}"))?;
        ensure(sol.certified, || format!("L = {l}: dense check failed"))?;
        notes.push(format!("L={l}: p={p:.3}"));
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.1} s"))?;
    Ok(notes.join(", "))
}

fn critical_dt_frontier() -> Check {
    let mut frontier = Vec::new();
    for (i, &mu_max) in MU_BOUNDS.iter().enumerate() {
        let template = LmiProblem::uniform(4, ALPHA, DT, D_SCALE, mu_max);
        let computed = lib(critical_dt(&template, mu_max, (0.15, 3.0)))?;
        let oracle = common::critical_t(ALPHA, D_SCALE, 1.0, mu_max, 0.15, 3.0);
        ensure((computed - oracle).abs() <= 2e-3, || {
            format!("mu <= {mu_max}: solver {computed:.4} vs oracle {oracle:.4}")
        })?;
        let reported = REPORTED_CRITICAL_DT[i];
        ensure((reported - computed).abs() <= 0.25 * computed, || {
            format!("mu <= {mu_max}: reported {reported} outside 25% of {computed:.4}")
        })?;
        frontier.push(computed);
    }
    ensure(frontier.windows(2).all(|w| w[0] < w[1]), || format!("not increasing: {frontier:?}"))?;

    let mus: Vec<f64> = (0..25).map(|i| 1e-4 * 10f64.powf(i as f64 / 6.0)).collect();
    for j in 0..=30 {
        let dt = 0.15 + 0.05 * j as f64;
        let prob = LmiProblem::uniform(4, ALPHA, dt, D_SCALE, 1.0);
        let row: Vec<bool> = mus
            .iter()
            .map(|&mu| lib(feasible_at_mu(&prob, mu)))
            .collect::<Result<_, _>>()?;
        ensure(row.windows(2).all(|w| !w[0] || w[1]), || format!("non-monotone in mu at dt = {dt}"))?;
    }
    Ok(format!(
        "critical dt = {:.3} / {:.3} / {:.3} s",
        frontier[0], frontier[1], frontier[2]
    ))
}

fn exponential_convergence() -> Check {
    let gains = ObserverGains::scalar(8, 0.39);
    let rate: f64 = 1.0 - 0.39;
    // W = 0 with the truth held at the origin, so Y = X = 0 and Xhat = E.
    let e0 = DVector::from_vec(vec![3.0, -1.5, 120.0, 0.25, -80.0, 7.0, 1e-3, 42.0]);
    let n0 = e0.norm();
    let mut obs = ObserverState { xhat: e0, k: 0 };
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let y = Measurement {
            y: DVector::zeros(8),
            k,
        };
        obs = lib(predict(&obs, &gains, &y))?;
        let expected = rate.powi(k as i32 + 1) * n0;
        worst = worst.max((obs.xhat.norm() - expected).abs() / expected);
    }
    ensure(worst <= 1e-10, || format!("relative deviation {worst:e}"))?;
    Ok(format!("max relative deviation {worst:.1e} over 100 steps"))
}

fn linf_bounds() -> Check {
    let mut cfg = RunConfig::default();
    let mut designs = lib(all_designs(&cfg))?;
    cfg.observer.gain_points = Some(
        REPORTED_GAIN
            .iter()
            .zip(&REPORTED_GAMMA)
            .map(|(&l, &gamma)| GainPoint { l, gamma })
            .collect(),
    );
    designs.extend(lib(all_designs(&cfg))?);
    let mut notes = Vec::new();
    for d in &designs {
        let track = lib(run_track(&cfg, &d.gains, d.record.gamma))?;
        let m = &track.monitor;
        // Recompute from the raw trajectory rather than trusting the monitor.
        let mut gamma_w: f64 = 0.0;
        let (mut state_ok, mut input_ok) = (true, true);
        for s in &track.steps {
            gamma_w = gamma_w.max(s.w_true.norm());
            if s.k >= 50 {
                state_ok &= (&s.x_pred - &s.x_true).norm() <= d.record.gamma * gamma_w;
                input_ok &= (&s.w_hat - &s.w_true).norm() <= 3.0 * d.record.gamma * gamma_w;
            }
        }
        ensure(state_ok && m.state_bound_holds(), || {
            format!("{}: state error {:.4} exceeds {:.4}", d.record.label, m.worst_state_err, m.state_threshold())
        })?;
        ensure(input_ok && m.input_bound_holds(), || {
            format!("{}: input error {:.4} exceeds {:.4}", d.record.label, m.worst_input_err, m.input_threshold())
        })?;
        notes.push(format!("{} {:.2}/{:.2}", d.record.label, m.worst_state_err / m.state_threshold(), m.worst_input_err / m.input_threshold()));
    }
    Ok(format!("worst error / bound (state/input): {}", notes.join(", ")))
}

fn pseudo_inverse_closed_form() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let diag: Vec<f64> = (0..8).map(|_| 10f64.powf(rng.random_range(-2.0..=1.0))).collect();
        let g = {
            let mut g = RealMatrix::zeros(16, 8);
            for (i, &t) in diag.iter().enumerate() {
                g[(i, i)] = t;
            }
            g
        };
        let pinv = lib(pinv_full_col_rank(&g))?;
        let mut expected = RealMatrix::zeros(8, 16);
        for (i, &t) in diag.iter().enumerate() {
            expected[(i, i)] = 1.0 / t;
        }
        worst = worst.max((pinv - expected).abs().max());
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;

    // What = B_T^{-1} (Xhat_{k+1} - Xhat_k) along a full run.
    let cfg = RunConfig::default();
    let d = lib(all_designs(&cfg))?.remove(0);
    let track = lib(run_track(&cfg, &d.gains, d.record.gamma))?;
    let mut worst_w: f64 = 0.0;
    for pair in track.steps.windows(2) {
        let direct = (&pair[1].x_pred - &pair[0].x_pred) / DT;
        worst_w = worst_w.max((&pair[0].w_hat - direct).abs().max());
    }
    ensure(worst_w <= 1e-9, || format!("What differs from the finite difference by {worst_w:e}"))?;
    Ok(format!("max |G+ - [B^-1 0]| = {worst:.1e}, max |What - dX/dt| = {worst_w:.1e}"))
}

fn zero_forcing_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst_id, mut worst_null): (f64, f64) = (0.0, 0.0);
    for m in [64, 128] {
        let cfg = ArrayConfig::from_carrier(m, 4, 30e9, 0.5);
        let mut sets = 0;
        while sets < 100 {
            let angles: Vec<f64> = (0..4).map(|_| rng.random_range(-1.4..1.4)).collect();
            let separated = (0..4).all(|i| (i + 1..4).all(|j| (angles[i].sin() - angles[j].sin()).abs() >= 0.05));
            if !separated {
                continue;
            }
            sets += 1;
            let bf = lib(beamformer(&cfg, &angles))?;
            // Infinity norm: largest absolute row sum.
            let resid = bf.a.transpose() * &bf.f - DMatrix::identity(4, 4);
            let inf_norm = resid
                .row_iter()
                .map(|r| r.iter().map(|v| v.norm()).sum::<f64>())
                .fold(0.0, f64::max);
            worst_id = worst_id.max(inf_norm);
            for j in 0..4 {
                let row = steering_vector(&cfg, angles[j], m).transpose();
                for i in (0..4).filter(|&i| i != j) {
                    worst_null = worst_null.max((&row * bf.f.column(i))[(0, 0)].norm());
                }
            }
        }
    }
    ensure(worst_id <= 1e-9, || format!("||A^T F - I||_inf = {worst_id:e}"))?;
    ensure(worst_null <= 1e-8, || format!("null depth {worst_null:e}"))?;
    ensure(SIN_SEPARATION_MIN <= 0.05, || "separation threshold above test spacing".into())?;
    Ok(format!("||A^T F - I||_inf <= {worst_id:.1e}, nulls <= {worst_null:.1e}"))
}

fn blockage_resilience() -> Check {
    let mut cfg = RunConfig::default();
    cfg.observer.mu_max = vec![0.25];
    cfg.blockage.windows = vec![[20.0, 23.0]];
    let d = lib(all_designs(&cfg))?.remove(0);
    let mut gaps = Vec::new();
    for seed in 0..10 {
        cfg.seed = seed;
        let (_, s) = lib(compare_modes(&cfg, &d, false))?;
        ensure(s.window_mean_uio > s.window_mean_baseline, || {
            format!("seed {seed}: uio {} <= baseline {}", s.window_mean_uio, s.window_mean_baseline)
        })?;
        gaps.push(s.window_gap);

        let (rows, _) = lib(compare_modes(&cfg, &d, true))?;
        let worst = rows
            .iter()
            .filter(|r| !r.in_window)
            .map(|r| (r.se_uio - r.se_baseline).abs())
            .fold(0.0, f64::max);
        ensure(worst <= 1e-9, || format!("seed {seed}: paired traces differ by {worst:e} outside windows"))?;
    }
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!("min in-window gap {min_gap:.3} bit/s/Hz over 10 seeds; paired traces identical outside"))
}

fn main_lobe_scaling() -> Check {
    let mut notes = Vec::new();
    for center in [0.0_f64, 0.3, -0.6] {
        let width = |m: usize| -> Result<f64, String> {
            let cfg = ArrayConfig::from_carrier(m, 4, 30e9, 0.5);
            let bf = lib(beamformer(&cfg, &[center]))?;
            Ok(main_lobe_width_3db(&cfg, &bf.f.column(0).into_owned(), center))
        };
        let ratio = width(64)? / width(128)?;
        ensure((ratio - 2.0).abs() <= 0.2, || format!("theta {center}: ratio {ratio:.3}"))?;
        notes.push(format!("{ratio:.3}"));
    }
    Ok(format!("width(64)/width(128) = {}", notes.join(", ")))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::default();
    cfg.seed = 42;
    cfg.horizon = 120;
    cfg.channel.phase_mode = uio_beam::sim::config::PhaseMode::Random;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ra = lib(cmd_simulate(&cfg, &a))?;
    lib(cmd_simulate(&cfg, &b))?;
    for rel in ra.manifest.rows.keys() {
        let x = std::fs::read(a.join(rel)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(rel)).map_err(|e| e.to_string())?;
        ensure(x == y, || format!("{rel} differs"))?;
    }
    Ok(format!("{} CSV files byte-identical", ra.manifest.rows.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("LMI reproduction", lmi_reproduction),
        ("critical update-interval frontier", critical_dt_frontier),
        ("exponential convergence", exponential_convergence),
        ("l-infinity error bounds", linf_bounds),
        ("pseudo-inverse closed form", pseudo_inverse_closed_form),
        ("zero-forcing identity", zero_forcing_identity),
        ("blockage resilience", blockage_resilience),
        ("main-lobe scaling", main_lobe_scaling),
        ("determinism", determinism),
    ];
    let started = Instant::now();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {}: {name}: {detail} [{secs:.2} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {}: {name}: {why} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        criteria.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
