//! Small dense linear algebra shared by the observer design, the observer
//! runtime and the beamformer.
//!
//! Matrices are plain `nalgebra` dynamic matrices. Everything here is a pure
//! function of its inputs.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub type RealMatrix = DMatrix<f64>;
pub type ComplexMatrix = DMatrix<Complex<f64>>;

/// Largest tolerated `|m_ij - m_ji|`, relative to `max(1, max|m_ij|)`.
/// Inputs inside the tolerance are symmetrized by averaging.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Largest tolerated Hermitian defect for [`solve_hermitian`], relative as above.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// A full-column-rank `G` must have `lambda_min(G^T G)` above this.
pub const RANK_TOL: f64 = 1e-12;

/// Eigenvalue tolerance used when certifying the observer LMIs.
pub const LMI_TOL: f64 = 1e-8;

/// Tolerance for `G^+ G = I` and the closed-form input estimate.
pub const PINV_IDENTITY_TOL: f64 = 1e-10;

/// Tolerance for the zero-forcing identity `A^T F = I`.
pub const ZF_IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    /// Positive semidefinite.
    Psd,
    /// Negative semidefinite.
    Nsd,
    Indefinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefinitenessReport {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub verdict: Definiteness,
    pub tol: f64,
}

impl DefinitenessReport {
    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue >= -self.tol
    }

    pub fn is_nsd(&self) -> bool {
        self.max_eigenvalue <= self.tol
    }

    pub fn satisfies(&self, sense: Definiteness) -> bool {
        match sense {
            Definiteness::Psd => self.is_psd(),
            Definiteness::Nsd => self.is_nsd(),
            Definiteness::Indefinite => !self.is_psd() && !self.is_nsd(),
        }
    }
}

fn max_abs(m: &RealMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Checks squareness and symmetry, returning the averaged `(m + m^T) / 2`.
pub fn symmetrized(m: &RealMatrix) -> Result<RealMatrix> {
    if !m.is_square() {
        return Err(Error::shape(
            "symmetric eigenvalues",
            format!("expected square matrix, got {}x{}", m.nrows(), m.ncols()),
        ));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::shape("symmetric eigenvalues", "non-finite entry"));
    }
    let n = m.nrows();
    let scale = max_abs(m).max(1.0);
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if worst > SYMMETRY_TOL * scale {
        return Err(Error::Asymmetric {
            max_asymmetry: worst,
        });
    }
    Ok((m + m.transpose()) * 0.5)
}

/// Extreme eigenvalues `(min, max)` of a symmetric matrix.
pub fn eig_sym_bounds(m: &RealMatrix) -> Result<(f64, f64)> {
    let sym = symmetrized(m)?;
    if sym.nrows() == 0 {
        return Err(Error::shape("symmetric eigenvalues", "empty matrix"));
    }
    let eig = sym.symmetric_eigenvalues();
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Classifies `m` against the requested `sense`.
///
/// The verdict is `sense` itself when `m` satisfies it at `tol`; otherwise the
/// opposite sense if that one holds, else [`Definiteness::Indefinite`].
pub fn check_definiteness(
    m: &RealMatrix,
    sense: Definiteness,
    tol: f64,
) -> Result<DefinitenessReport> {
    assert!(tol > 0.0, "definiteness tolerance must be positive");
    let (min_eigenvalue, max_eigenvalue) = eig_sym_bounds(m)?;
    let mut report = DefinitenessReport {
        min_eigenvalue,
        max_eigenvalue,
        verdict: Definiteness::Indefinite,
        tol,
    };
    report.verdict = match sense {
        Definiteness::Psd if report.is_psd() => Definiteness::Psd,
        Definiteness::Nsd if report.is_nsd() => Definiteness::Nsd,
        _ if report.is_psd() => Definiteness::Psd,
        _ if report.is_nsd() => Definiteness::Nsd,
        _ => Definiteness::Indefinite,
    };
    Ok(report)
}

/// Moore-Penrose pseudo-inverse `(G^T G)^{-1} G^T` of a full-column-rank matrix.
///
/// Uses the normal equations. The matrices this crate feeds in are block
/// matrices built from diagonal sampling-time matrices, so `G^T G` is well
/// conditioned; rank deficiency is reported when `lambda_min(G^T G) <= RANK_TOL`.
pub fn pinv_full_col_rank(g: &RealMatrix) -> Result<RealMatrix> {
    if g.ncols() == 0 || g.nrows() < g.ncols() {
        return Err(Error::shape(
            "pseudo-inverse",
            format!(
                "{}x{} cannot have full column rank",
                g.nrows(),
                g.ncols()
            ),
        ));
    }
    let gram = g.transpose() * g;
    let (lo, hi) = eig_sym_bounds(&gram)?;
    if lo <= RANK_TOL {
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        return Err(Error::Singular {
            context: "pseudo-inverse: G^T G",
            condition,
        });
    }
    let chol = gram.cholesky().ok_or(Error::Singular {
        context: "pseudo-inverse: G^T G",
        condition: hi / lo,
    })?;
    Ok(chol.solve(&g.transpose()))
}

/// Solves `m x = rhs` for Hermitian positive definite `m` by Cholesky.
pub fn solve_hermitian(m: &ComplexMatrix, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() || m.nrows() != rhs.nrows() {
        return Err(Error::shape(
            "hermitian solve",
            format!(
                "m is {}x{}, rhs is {}x{}",
                m.nrows(),
                m.ncols(),
                rhs.nrows(),
                rhs.ncols()
            ),
        ));
    }
    let n = m.nrows();
    let scale = m.iter().fold(1.0_f64, |acc, v| acc.max(v.norm()));
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    if worst > HERMITIAN_TOL * scale {
        return Err(Error::Asymmetric {
            max_asymmetry: worst,
        });
    }
    let herm = (m + m.adjoint()) * Complex::new(0.5, 0.0);
    let lower = hermitian_cholesky(&herm)?;

    // forward: L y = rhs, backward: L^H x = y
    let mut x = rhs.clone();
    for col in 0..x.ncols() {
        for i in 0..n {
            let mut acc = x[(i, col)];
            for k in 0..i {
                acc -= lower[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = acc / lower[(i, i)];
        }
        for i in (0..n).rev() {
            let mut acc = x[(i, col)];
            for k in (i + 1)..n {
                acc -= lower[(k, i)].conj() * x[(k, col)];
            }
            x[(i, col)] = acc / lower[(i, i)];
        }
    }
    Ok(x)
}

/// Lower factor `L` with `m = L L^H`; fails on a non-positive pivot.
fn hermitian_cholesky(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.nrows();
    let mut lower = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = m[(j, j)].re;
        for k in 0..j {
            diag -= lower[(j, k)].norm_sqr();
        }
        if !(diag > 0.0) {
            return Err(Error::Singular {
                context: "hermitian solve: matrix not positive definite",
                condition: f64::INFINITY,
            });
        }
        let root = diag.sqrt();
        lower[(j, j)] = Complex::new(root, 0.0);
        for i in (j + 1)..n {
            let mut acc = m[(i, j)];
            for k in 0..j {
                acc -= lower[(i, k)] * lower[(j, k)].conj();
            }
            lower[(i, j)] = acc / root;
        }
    }
    Ok(lower)
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff_real(a: &RealMatrix, b: &RealMatrix) -> f64 {
    max_abs(&(a - b))
}

/// Largest entry modulus of `a - b`.
pub fn max_abs_diff_complex(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).iter().fold(0.0_f64, |acc, v| acc.max(v.norm()))
}
