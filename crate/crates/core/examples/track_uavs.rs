//! Tracks the four UAVs with three fixed observer gains and reports the
//! prediction and input-reconstruction errors against their steady-state bounds.
//!
//! Usage: cargo run --example track_uavs

use uio_beam::sim::config::{GainPoint, RunConfig};
use uio_beam::sim::pipeline::{all_designs, run_track};

fn main() -> uio_beam::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.observer.gain_points = Some(vec![
        GainPoint { l: 0.39, gamma: 0.21 },
        GainPoint { l: 0.60, gamma: 0.47 },
        GainPoint { l: 0.76, gamma: 0.96 },
    ]);

    for d in all_designs(&cfg)? {
        let track = run_track(&cfg, &d.gains, d.record.gamma)?;
        let m = &track.monitor;
        println!(
            "L = {:.2} I  gamma = {:.2}  gamma_W = {:.1} m/s",
            d.record.l_diag[0], d.record.gamma, m.gamma_w
        );
        println!(
            "  max ||Zhat|| after step {}: {:.3} m (bound {:.1})",
            m.transient_cutoff, m.worst_state_err, m.state_threshold()
        );
        println!(
            "  max ||What - W||:        {:.3} m/s (bound {:.1})",
            m.worst_input_err,
            m.input_threshold()
        );
        let last = track.steps.last().expect("non-empty horizon");
        for i in 0..4 {
            println!(
                "  UAV {}: true ({:8.2}, {:8.2})  predicted ({:8.2}, {:8.2})  error {:.3} m",
                i + 1,
                last.x_true[2 * i],
                last.x_true[2 * i + 1],
                last.x_pred[2 * i],
                last.x_pred[2 * i + 1],
                last.position_error(i)
            );
        }
    }
    Ok(())
}
