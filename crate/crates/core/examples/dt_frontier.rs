//! Feasibility of the observer design as the position update interval grows.
//!
//! Usage: cargo run --example dt_frontier

use uio_beam::design::{critical_dt, feasible_at_mu, LmiProblem};

fn main() -> uio_beam::Result<()> {
    let bounds = [0.05, 0.25, 1.0];
    println!("critical update interval");
    for mu_max in bounds {
        let template = LmiProblem::uniform(4, 0.5, 0.15, 0.5, mu_max);
        println!("  mu <= {mu_max:<5} dt* = {:.3} s", critical_dt(&template, mu_max, (0.15, 3.0))?);
    }

    println!("\nfeasibility grid (x = feasible)");
    print!("  dt    ");
    for mu_max in bounds {
        print!(" {mu_max:>5}");
    }
    println!();
    for step in 0..=14 {
        let dt = 0.2 + 0.1 * step as f64;
        print!("  {dt:.1}   ");
        for mu_max in bounds {
            let prob = LmiProblem::uniform(4, 0.5, dt, 0.5, mu_max);
            let mark = if feasible_at_mu(&prob, mu_max)? { "x" } else { "." };
            print!(" {mark:>5}");
        }
        println!();
    }
    Ok(())
}
