//! Reference computations shared by the integration tests. None of these call
//! into the design solver.

#![allow(dead_code)]

use nalgebra::Matrix3;

/// Per-coordinate `M1` for `P = p`, `Z = l p`.
#[rustfmt::skip]
pub fn scalar_m1(alpha: f64, t: f64, d: f64, p: f64, l: f64) -> Matrix3<f64> {
    let z = l * p;
    let c = z * d - p * t;
    Matrix3::new(
        (alpha - 1.0) * p, 0.0, p - z,
        0.0, -alpha, c,
        p - z, c, -p,
    )
}

pub fn max_eig(m: Matrix3<f64>) -> f64 {
    m.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// 1-D search over `p` for the fixed gain `l`: returns a certifying `p`, if any.
/// `M1 <= 0` is checked by eigenvalues, `M2 >= 0` through `p mu >= h^2`.
pub fn certify_gain_by_search(alpha: f64, t: f64, d: f64, h: f64, l: f64, mu: f64, tol: f64) -> Option<f64> {
    let floor = (h * h / mu).max(1e-9);
    (0..4000)
        .map(|i| floor * 10f64.powf(i as f64 * 8.0 / 3999.0))
        .find(|&p| max_eig(scalar_m1(alpha, t, d, p, l)) <= tol && p * mu - h * h >= -tol)
}

/// Smallest `mu` that the gain `l` certifies, from the Schur complement of the
/// `-P` block: `(1-l)^2/(1-alpha) + p (t - l d)^2 / alpha <= 1` and `p mu >= h^2`.
pub fn mu_for_gain(alpha: f64, t: f64, d: f64, h: f64, l: f64) -> f64 {
    let slack = 1.0 - (1.0 - l).powi(2) / (1.0 - alpha);
    if slack <= 0.0 {
        return f64::INFINITY;
    }
    h * h * (t - l * d).powi(2) / (alpha * slack)
}

/// Infimum of `mu` over all scalar gains.
pub fn min_mu(alpha: f64, t: f64, d: f64, h: f64) -> f64 {
    let n = 20_000;
    let (mut best_l, mut best) = (1.0, f64::INFINITY);
    for i in 1..n {
        let l = 2.0 * i as f64 / n as f64;
        let m = mu_for_gain(alpha, t, d, h, l);
        if m < best {
            best = m;
            best_l = l;
        }
    }
    // Golden-section refinement around the grid minimum.
    let (mut a, mut b) = (best_l - 2.0 / n as f64, best_l + 2.0 / n as f64);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if mu_for_gain(alpha, t, d, h, x1) < mu_for_gain(alpha, t, d, h, x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    best.min(mu_for_gain(alpha, t, d, h, 0.5 * (a + b)))
}

/// Largest `t` with `min_mu <= mu_max`, by bisection on `[lo, hi]`.
pub fn critical_t(alpha: f64, d: f64, h: f64, mu_max: f64, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    assert!(min_mu(alpha, lo, d, h) <= mu_max && min_mu(alpha, hi, d, h) > mu_max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if min_mu(alpha, mid, d, h) <= mu_max {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
