//! Zero-forcing toward four UAVs: checks `A^T F = I`, then compares link
//! quality with exact angles and with a 1 degree pointing error.
//!
//! Usage: cargo run --example zero_forcing

use nalgebra::Vector2;
use uio_beam::beam::{
    beamformer, link_report, steering_vector, ArrayConfig, ChannelRealization, PowerAllocation,
};

fn main() -> uio_beam::Result<()> {
    let cfg = ArrayConfig::reference();
    let center = Vector2::zeros();
    let positions = [
        Vector2::new(0.0, 100.0),
        Vector2::new(150.0, 10.0),
        Vector2::new(-20.0, -200.0),
        Vector2::new(-250.0, 40.0),
    ];
    let h_ref = uio_beam::beam::free_space_amplitude(&cfg, 250.0);
    let noise = h_ref * h_ref / (4.0 * 10.0);
    let chan = ChannelRealization::line_of_sight(&cfg, &positions, &center, &[0.0; 4], noise)?;
    println!(
        "azimuths (deg): {:?}",
        chan.theta.iter().map(|t| (t.to_degrees() * 100.0).round() / 100.0).collect::<Vec<_>>()
    );

    let bf = beamformer(&cfg, &chan.theta)?;
    println!("max |A^T F - I| = {:.2e}", bf.zf_residual());
    for i in 0..4 {
        let row = steering_vector(&cfg, chan.theta[i], cfg.m_ce).transpose();
        let leak: Vec<String> = (0..4)
            .map(|j| format!("{:.1e}", (&row * bf.f.column(j))[(0, 0)].norm()))
            .collect();
        println!("  toward UAV {}: |a^T f_j| = [{}]", i + 1, leak.join(", "));
    }

    let power = PowerAllocation::equal(&bf, 1.0);
    let exact = link_report(&cfg, &chan, &bf, &power)?;
    let off: Vec<f64> = chan.theta.iter().map(|t| t + 1f64.to_radians()).collect();
    let bf_off = beamformer(&cfg, &off)?;
    let stale = link_report(&cfg, &chan, &bf_off, &PowerAllocation::equal(&bf_off, 1.0))?;
    println!("\n        SINR exact   SE exact   SINR +1deg   SE +1deg");
    for i in 0..4 {
        println!(
            "UAV {}  {:8.2} dB  {:6.3}    {:8.2} dB  {:6.3}",
            i + 1,
            exact.sinr_db[i],
            exact.se[i],
            stale.sinr_db[i],
            stale.se[i]
        );
    }
    Ok(())
}
