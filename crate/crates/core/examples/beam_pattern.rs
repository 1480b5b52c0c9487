//! Beam patterns of a four-stream zero-forcing precoder and the main-lobe
//! width of a single beam at 64 and 128 antennas.
//!
//! Usage: cargo run --example beam_pattern

use uio_beam::beam::{azimuth_grid, beam_pattern, beamformer, main_lobe_width_3db, ArrayConfig};

fn main() -> uio_beam::Result<()> {
    let angles = [-0.9_f64, -0.2, 0.35, 1.1];
    let grid = azimuth_grid(1440);
    for m in [64, 128] {
        let cfg = ArrayConfig::from_carrier(m, 4, 30e9, 0.5);
        let bf = beamformer(&cfg, &angles)?;
        let pattern = beam_pattern(&cfg, &bf, &grid);
        println!("M_CE = {m}");
        for (i, &target) in angles.iter().enumerate() {
            let db = pattern.gain_db(i);
            let peak = db
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (g, &v)| if v > best.1 { (g, v) } else { best })
                .0;
            let nulls: Vec<String> = angles
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, &t)| {
                    let g = grid.iter().position(|&x| x >= t).unwrap_or(grid.len() - 1);
                    format!("{:.0}", db[g])
                })
                .collect();
            println!(
                "  beam {}: target {:6.2} deg, peak {:6.2} deg, 3 dB width {:.3} deg, gain toward others [{}] dB",
                i + 1,
                target.to_degrees(),
                grid[peak].to_degrees(),
                main_lobe_width_3db(&cfg, &bf.f.column(i).into_owned(), target).to_degrees(),
                nulls.join(", ")
            );
        }
    }

    let single = |m: usize| -> uio_beam::Result<f64> {
        let cfg = ArrayConfig::from_carrier(m, 4, 30e9, 0.5);
        let bf = beamformer(&cfg, &[0.0])?;
        Ok(main_lobe_width_3db(&cfg, &bf.f.column(0).into_owned(), 0.0))
    };
    let (w64, w128) = (single(64)?, single(128)?);
    println!(
        "\nbroadside single beam: {:.3} deg at 64, {:.3} deg at 128 (ratio {:.3})",
        w64.to_degrees(),
        w128.to_degrees(),
        w64 / w128
    );
    Ok(())
}
