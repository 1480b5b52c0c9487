//! Observer design for the four-UAV network.
//!
//! Minimises the certified performance level under three `mu` bounds, checks
//! the reference gain points `L = 0.39 I, 0.60 I, 0.76 I`, and repeats the
//! design for several values of `alpha`.
//!
//! Usage: cargo run --example design_observer

use uio_beam::design::{certify_gain_point, design, design_alpha_sweep, LmiProblem};

fn main() -> uio_beam::Result<()> {
    println!("mu_max    gamma      mu          L_diag    rho(Q)");
    for mu_max in [0.05, 0.25, 1.0] {
        let prob = LmiProblem::uniform(4, 0.5, 0.15, 0.5, mu_max);
        let (sol, gains) = design(&prob)?;
        println!(
            "{mu_max:<8}  {:<9.5}  {:<10.3e}  {:<8.5}  {:.5}",
            sol.gamma,
            sol.mu,
            gains.l[(0, 0)],
            gains.q_spectral_radius()
        );
    }

    println!("\nreference gain points");
    let prob = LmiProblem::uniform(4, 0.5, 0.15, 0.5, 1.0);
    for (l, gamma) in [(0.39, 0.21), (0.60, 0.47), (0.76, 0.96)] {
        match certify_gain_point(&prob, l, gamma * gamma)? {
            Some(sol) => println!("  L = {l:.2} I, gamma = {gamma}: certified with p = {:.4}", sol.p[(0, 0)]),
            None => println!("  L = {l:.2} I, gamma = {gamma}: not certified"),
        }
    }

    println!("\nalpha sweep at mu <= 0.25");
    let prob = LmiProblem::uniform(4, 0.5, 0.15, 0.5, 0.25);
    for entry in design_alpha_sweep(&prob, &[0.5, 0.1, 0.01, 0.9]) {
        match entry.outcome {
            Ok((sol, gains)) => println!(
                "  alpha = {:<5} gamma = {:.5}  L = {:.5} I",
                entry.alpha,
                sol.gamma,
                gains.l[(0, 0)]
            ),
            Err(e) => println!("  alpha = {:<5} {e}", entry.alpha),
        }
    }
    Ok(())
}
