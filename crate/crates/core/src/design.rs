//! Observer design by LMI feasibility.
//!
//! For the UAV network the system matrices are identities, so the observer
//! error obeys `E_{k+1} = Q E_k + (L D - B_T) W_k` with `Q = I - L`. A pair
//! `(P, Z)` certifies performance level `gamma = sqrt(mu)` when
//!
//! ```text
//! M1 = [ (a-1)P      0           (P-Z)^T      ]
//!      [ 0           -a I        (Z D - P B)^T ]  <= 0
//!      [ P - Z       Z D - P B   -P           ]
//!
//! M2 = [ P   H^T ]
//!      [ H   mu I ]  >= 0
//! ```
//!
//! and the gains follow as `L = P^{-1} Z`, `Q = I - L`.
//!
//! When `B_T`, `D` and `H` are diagonal, every block of `M1` and `M2` is
//! diagonal too, so after a permutation both split into independent 3x3 and
//! 2x2 problems, one per state coordinate. The solver works on those scalar
//! problems and re-verifies every answer on the full dense blocks.

use std::collections::BTreeMap;

use nalgebra::{DVector, Matrix3};

use crate::error::{Error, Result};
use crate::numkernel::{check_definiteness, eig_sym_bounds, Definiteness, RealMatrix, LMI_TOL};

/// Search floor and ceiling for `mu`.
pub const MU_BRACKET: (f64, f64) = (1e-6, 10.0);
/// Number of log-spaced `p` samples per coordinate.
pub const P_GRID_POINTS: usize = 200;
/// The `p` grid spans `[h^2/mu, P_GRID_SPAN * h^2/mu]`.
pub const P_GRID_SPAN: f64 = 1e6;
/// Relative width at which the `mu` bisection stops.
pub const MU_REL_TOL: f64 = 1e-4;
/// Resolution of the critical sampling-interval search, seconds.
pub const DT_TOL: f64 = 1e-3;

const GOLDEN_ITERS: usize = 90;
const Z_BISECT_ITERS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct LmiProblem {
    pub alpha: f64,
    /// `B_T`, diagonal sampling-interval matrix.
    pub sampling: RealMatrix,
    pub d: RealMatrix,
    /// Performance output matrix.
    pub h: RealMatrix,
    pub mu_max: f64,
}

impl LmiProblem {
    /// `N` UAVs with a common interval, `D = d_scale I`, `H = I`.
    pub fn uniform(n_uav: usize, alpha: f64, dt: f64, d_scale: f64, mu_max: f64) -> Self {
        let dim = 2 * n_uav;
        Self {
            alpha,
            sampling: RealMatrix::identity(dim, dim) * dt,
            d: RealMatrix::identity(dim, dim) * d_scale,
            h: RealMatrix::identity(dim, dim),
            mu_max,
        }
    }

    pub fn dim(&self) -> usize {
        self.sampling.nrows()
    }

    /// Same problem with every sampling interval set to `dt`.
    pub fn with_uniform_dt(&self, dt: f64) -> Self {
        let dim = self.dim();
        Self {
            sampling: RealMatrix::identity(dim, dim) * dt,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::validation("observer.alpha", format!("{} not in (0, 1)", self.alpha)));
        }
        if !(self.mu_max.is_finite() && self.mu_max > 0.0) {
            return Err(Error::validation("observer.mu_max", format!("{} must be > 0", self.mu_max)));
        }
        let dim = self.dim();
        for (name, m) in [("B_T", &self.sampling), ("D", &self.d), ("H", &self.h)] {
            if m.shape() != (dim, dim) {
                return Err(Error::shape(
                    "LMI problem",
                    format!("{name} is {}x{}, expected {dim}x{dim}", m.nrows(), m.ncols()),
                ));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::shape("LMI problem", format!("{name} has non-finite entries")));
            }
        }
        if (0..dim).any(|i| self.sampling[(i, i)] <= 0.0) {
            return Err(Error::validation("scenario.dt", "sampling intervals must be > 0"));
        }
        Ok(())
    }

    fn coordinates(&self) -> Result<Vec<ScalarLmi>> {
        for (name, m) in [("B_T", &self.sampling), ("D", &self.d), ("H", &self.h)] {
            if !is_diagonal(m) {
                return Err(Error::UnsupportedStructure(format!(
                    "{name} must be diagonal for the structured solver"
                )));
            }
        }
        Ok((0..self.dim())
            .map(|i| ScalarLmi {
                alpha: self.alpha,
                t: self.sampling[(i, i)],
                d: self.d[(i, i)],
                h: self.h[(i, i)],
            })
            .collect())
    }
}

fn is_diagonal(m: &RealMatrix) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmiSolution {
    pub p: RealMatrix,
    pub z: RealMatrix,
    pub mu: f64,
    pub gamma: f64,
    /// Both dense blocks passed the definiteness check at [`LMI_TOL`].
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverGains {
    pub l: RealMatrix,
    pub q: RealMatrix,
    pub h: RealMatrix,
}

impl ObserverGains {
    /// `L = P^{-1} Z`, `Q = I - L`.
    pub fn from_solution(solution: &LmiSolution, h: RealMatrix) -> Result<Self> {
        let dim = solution.p.nrows();
        let chol = solution.p.clone().cholesky().ok_or(Error::Singular {
            context: "observer gains: P not positive definite",
            condition: f64::INFINITY,
        })?;
        let l = chol.solve(&solution.z);
        let q = RealMatrix::identity(dim, dim) - &l;
        Ok(Self { l, q, h })
    }

    /// `L = l I`, `Q = (1 - l) I`, `H = I`.
    pub fn scalar(dim: usize, l: f64) -> Self {
        let id = RealMatrix::identity(dim, dim);
        Self {
            l: &id * l,
            q: &id * (1.0 - l),
            h: id,
        }
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Spectral radius of `Q` (exact for the diagonal gains this crate produces).
    pub fn q_spectral_radius(&self) -> f64 {
        if is_diagonal(&self.q) {
            self.q.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
        } else {
            self.q
                .clone()
                .complex_eigenvalues()
                .iter()
                .fold(0.0_f64, |m, v| m.max(v.norm()))
        }
    }

    pub fn l_diag(&self) -> Vec<f64> {
        self.l.diagonal().iter().copied().collect()
    }

    pub fn q_diag(&self) -> Vec<f64> {
        self.q.diagonal().iter().copied().collect()
    }
}

/// Dense `(M1, M2)` for decision variables `(P, Z, mu)`.
pub fn assemble_lmi_blocks(
    prob: &LmiProblem,
    p: &RealMatrix,
    z: &RealMatrix,
    mu: f64,
) -> Result<(RealMatrix, RealMatrix)> {
    let n = prob.dim();
    if p.shape() != (n, n) || z.shape() != (n, n) {
        return Err(Error::shape(
            "LMI assembly",
            format!("P {:?}, Z {:?}, expected {n}x{n}", p.shape(), z.shape()),
        ));
    }
    let id = RealMatrix::identity(n, n);
    let p_minus_z = p - z;
    let coupling = z * &prob.d - p * &prob.sampling;

    let mut m1 = RealMatrix::zeros(3 * n, 3 * n);
    m1.view_mut((0, 0), (n, n)).copy_from(&(p * (prob.alpha - 1.0)));
    m1.view_mut((n, n), (n, n)).copy_from(&(&id * -prob.alpha));
    m1.view_mut((2 * n, 2 * n), (n, n)).copy_from(&(-p));
    m1.view_mut((2 * n, 0), (n, n)).copy_from(&p_minus_z);
    m1.view_mut((0, 2 * n), (n, n)).copy_from(&p_minus_z.transpose());
    m1.view_mut((2 * n, n), (n, n)).copy_from(&coupling);
    m1.view_mut((n, 2 * n), (n, n)).copy_from(&coupling.transpose());

    let mut m2 = RealMatrix::zeros(2 * n, 2 * n);
    m2.view_mut((0, 0), (n, n)).copy_from(p);
    m2.view_mut((0, n), (n, n)).copy_from(&prob.h.transpose());
    m2.view_mut((n, 0), (n, n)).copy_from(&prob.h);
    m2.view_mut((n, n), (n, n)).copy_from(&(&id * mu));
    Ok((m1, m2))
}

/// `M1 <= 0` and `M2 >= 0` at [`LMI_TOL`].
pub fn feasible(prob: &LmiProblem, p: &RealMatrix, z: &RealMatrix, mu: f64) -> Result<bool> {
    let (m1, m2) = assemble_lmi_blocks(prob, p, z, mu)?;
    let r1 = check_definiteness(&m1, Definiteness::Nsd, LMI_TOL)?;
    let r2 = check_definiteness(&m2, Definiteness::Psd, LMI_TOL)?;
    Ok(r1.is_nsd() && r2.is_psd())
}

fn certify(prob: &LmiProblem, p: RealMatrix, z: RealMatrix, mu: f64) -> Result<LmiSolution> {
    let (p_min, _) = eig_sym_bounds(&p)?;
    let certified = p_min > 1e-10 && feasible(prob, &p, &z, mu)?;
    Ok(LmiSolution {
        p,
        z,
        mu,
        gamma: mu.sqrt(),
        certified,
    })
}

/// The per-coordinate reduction of `M1` and `M2`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ScalarLmi {
    alpha: f64,
    t: f64,
    d: f64,
    h: f64,
}

impl ScalarLmi {
    fn key(&self) -> [u64; 4] {
        [self.alpha, self.t, self.d, self.h].map(f64::to_bits)
    }

    #[rustfmt::skip]
    fn m1(&self, p: f64, z: f64) -> Matrix3<f64> {
        let a = self.alpha;
        let c = z * self.d - p * self.t;
        Matrix3::new(
            (a - 1.0) * p, 0.0, p - z,
            0.0, -a, c,
            p - z, c, -p,
        )
    }

    fn m1_max_eig(&self, p: f64, z: f64) -> f64 {
        self.m1(p, z)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smaller eigenvalue of `[[p, h], [h, mu]]`.
    fn m2_min_eig(&self, p: f64, mu: f64) -> f64 {
        let mid = 0.5 * (p + mu);
        let rad = (0.25 * (p - mu).powi(2) + self.h * self.h).sqrt();
        mid - rad
    }

    fn p_floor(&self, mu: f64) -> f64 {
        let h2 = self.h * self.h;
        if h2 > 0.0 {
            h2 / mu
        } else {
            1e-6
        }
    }

    fn p_grid(&self, mu: f64) -> impl Iterator<Item = f64> {
        let lo = self.p_floor(mu);
        let step = P_GRID_SPAN.ln() / (P_GRID_POINTS - 1) as f64;
        (0..P_GRID_POINTS).map(move |i| {
            if i == 0 {
                lo
            } else {
                lo * (step * i as f64).exp()
            }
        })
    }

    /// Golden-section minimisation of `lambda_max(M1)` over `z in [0, 2p]`
    /// (feasibility forces `0 < z/p < 2`). `lambda_max` is convex in `z`.
    /// Returns early once a non-positive value is found when `stop_at_zero`.
    fn best_z(&self, p: f64, stop_at_zero: bool) -> (f64, f64) {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let (mut a, mut b) = (0.0, 2.0 * p);
        let mut x1 = b - INV_PHI * (b - a);
        let mut x2 = a + INV_PHI * (b - a);
        let mut f1 = self.m1_max_eig(p, x1);
        let mut f2 = self.m1_max_eig(p, x2);
        for _ in 0..GOLDEN_ITERS {
            if stop_at_zero && f1.min(f2) <= 0.0 {
                break;
            }
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - INV_PHI * (b - a);
                f1 = self.m1_max_eig(p, x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + INV_PHI * (b - a);
                f2 = self.m1_max_eig(p, x2);
            }
        }
        if f1 <= f2 {
            (x1, f1)
        } else {
            (x2, f2)
        }
    }

    fn m2_ok(&self, p: f64, mu: f64) -> bool {
        self.m2_min_eig(p, mu) >= -LMI_TOL
    }

    /// Any `(p, z)` certifying `mu` for this coordinate.
    fn find_feasible(&self, mu: f64) -> Option<(f64, f64)> {
        self.p_grid(mu).find_map(|p| {
            if !self.m2_ok(p, mu) {
                return None;
            }
            let (z, f) = self.best_z(p, true);
            (f <= 0.0).then_some((p, z))
        })
    }

    /// The certifying `(p, z)` with the smallest `|z / p|`.
    fn least_gain(&self, mu: f64) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for p in self.p_grid(mu) {
            if !self.m2_ok(p, mu) {
                continue;
            }
            let (z_opt, f) = self.best_z(p, false);
            if f > 0.0 {
                continue;
            }
            // lambda_max is convex in z, so its sublevel set is an interval
            // ending at z_opt; find its left end.
            let (mut lo, mut hi) = (0.0, z_opt);
            if self.m1_max_eig(p, lo) <= 0.0 {
                hi = lo;
            } else {
                for _ in 0..Z_BISECT_ITERS {
                    let mid = 0.5 * (lo + hi);
                    if self.m1_max_eig(p, mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
            }
            let gain = (hi / p).abs();
            if best.is_none_or(|(bp, bz)| gain < (bz / bp).abs()) {
                best = Some((p, hi));
            }
        }
        best
    }

    /// 1-D search over `p` with `z = l p` held on the given gain.
    fn certify_gain(&self, l: f64, mu: f64) -> Option<f64> {
        self.p_grid(mu)
            .find(|&p| self.m2_ok(p, mu) && self.m1_max_eig(p, l * p) <= 0.0)
    }
}

struct StructuredSolver {
    coords: Vec<ScalarLmi>,
    unique: Vec<ScalarLmi>,
}

impl StructuredSolver {
    fn new(prob: &LmiProblem) -> Result<Self> {
        prob.validate()?;
        let coords = prob.coordinates()?;
        let mut seen = BTreeMap::new();
        for c in &coords {
            seen.entry(c.key()).or_insert(*c);
        }
        Ok(Self {
            coords,
            unique: seen.into_values().collect(),
        })
    }

    fn feasible_at(&self, mu: f64) -> bool {
        self.unique.iter().all(|c| c.find_feasible(mu).is_some())
    }

    fn assemble(&self, pick: impl Fn(&ScalarLmi) -> Option<(f64, f64)>) -> Option<(RealMatrix, RealMatrix)> {
        let mut cache: BTreeMap<[u64; 4], (f64, f64)> = BTreeMap::new();
        for c in &self.unique {
            cache.insert(c.key(), pick(c)?);
        }
        let (p, z): (Vec<f64>, Vec<f64>) = self.coords.iter().map(|c| cache[&c.key()]).unzip();
        Some((
            RealMatrix::from_diagonal(&DVector::from_vec(p)),
            RealMatrix::from_diagonal(&DVector::from_vec(z)),
        ))
    }
}

/// Smallest certified `mu <= mu_max` and the least-gain `(P, Z)` achieving it.
pub fn design(prob: &LmiProblem) -> Result<(LmiSolution, ObserverGains)> {
    let solver = StructuredSolver::new(prob)?;
    let (floor, ceiling) = MU_BRACKET;
    if prob.mu_max < floor {
        return Err(Error::Infeasible {
            mu_attempted: prob.mu_max,
            reason: format!("mu bound below the search floor {floor:e}"),
        });
    }
    let mut hi = prob.mu_max.min(ceiling);
    if !solver.feasible_at(hi) {
        return Err(Error::Infeasible {
            mu_attempted: hi,
            reason: "no (P, Z) certifies the bound".into(),
        });
    }
    let mu = if solver.feasible_at(floor) {
        floor
    } else {
        let mut lo = floor;
        while hi / lo > 1.0 + MU_REL_TOL {
            let mid = (lo * hi).sqrt();
            if solver.feasible_at(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let (p, z) = solver.assemble(|c| c.least_gain(mu)).ok_or_else(|| Error::Infeasible {
        mu_attempted: mu,
        reason: "least-gain refinement lost feasibility".into(),
    })?;
    let solution = certify(prob, p, z, mu)?;
    if !solution.certified {
        return Err(Error::Infeasible {
            mu_attempted: mu,
            reason: "dense re-verification failed".into(),
        });
    }
    let gains = ObserverGains::from_solution(&solution, prob.h.clone())?;
    Ok((solution, gains))
}

/// Checks whether the fixed gain `L = l I` certifies `gamma = sqrt(mu)` for
/// some `P = diag(p_i)`, found by a 1-D search over each `p_i`.
pub fn certify_gain_point(prob: &LmiProblem, l: f64, mu: f64) -> Result<Option<LmiSolution>> {
    let solver = StructuredSolver::new(prob)?;
    let Some((p, z)) = solver.assemble(|c| c.certify_gain(l, mu).map(|p| (p, l * p))) else {
        return Ok(None);
    };
    let solution = certify(prob, p, z, mu)?;
    Ok(solution.certified.then_some(solution))
}

/// Whether some `(P, Z)` certifies `mu` (structured search, no dense check).
pub fn feasible_at_mu(prob: &LmiProblem, mu: f64) -> Result<bool> {
    Ok(StructuredSolver::new(prob)?.feasible_at(mu))
}

/// Largest common sampling interval for which `mu <= mu_max` stays feasible,
/// by bisection on `dt` to [`DT_TOL`].
pub fn critical_dt(template: &LmiProblem, mu_max: f64, dt_bracket: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = dt_bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Bracket(format!("invalid dt bracket [{lo}, {hi}]")));
    }
    let ok = |dt: f64| feasible_at_mu(&template.with_uniform_dt(dt), mu_max);
    if !ok(lo)? {
        return Err(Error::Bracket(format!(
            "mu <= {mu_max} already infeasible at dt = {lo} s; lower the bracket start"
        )));
    }
    if ok(hi)? {
        return Err(Error::Bracket(format!(
            "mu <= {mu_max} still feasible at dt = {hi} s; raise the bracket end"
        )));
    }
    while hi - lo > DT_TOL {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Debug)]
pub struct AlphaDesign {
    pub alpha: f64,
    pub outcome: Result<(LmiSolution, ObserverGains)>,
}

/// One design per `alpha` at the problem's shared `mu` bound.
pub fn design_alpha_sweep(prob: &LmiProblem, alphas: &[f64]) -> Vec<AlphaDesign> {
    alphas
        .iter()
        .map(|&alpha| AlphaDesign {
            alpha,
            outcome: design(&LmiProblem {
                alpha,
                ..prob.clone()
            }),
        })
        .collect()
}
