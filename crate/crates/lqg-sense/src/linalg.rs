//! Small dense symmetric-matrix helpers shared by the recursions.
//!
//! Everything here works on `DMatrix<f64>` and treats inputs as symmetric up
//! to rounding; callers symmetrize before storing results of long recursions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative asymmetry threshold above which a matrix is rejected instead of
/// silently symmetrized.
pub const ASYMMETRY_TOL: f64 = 1e-8;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Relative Frobenius asymmetry ||M - M^T|| / max(||M||, 1e-300).
pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

/// Eigenvalues of the symmetrized input.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    if m.nrows() == 0 {
        return DVector::zeros(0);
    }
    symmetrize(m).symmetric_eigen().eigenvalues
}

pub fn lambda_min(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).min()
}

pub fn lambda_max(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).max()
}

/// Scale-relative positive-definiteness tolerance: 1e-10 * (1 + lambda_max).
pub fn pd_tolerance(lambda_max: f64) -> f64 {
    1e-10 * (1.0 + lambda_max.abs())
}

/// Validates that `m` is symmetric (within [`ASYMMETRY_TOL`]) and returns the
/// symmetrized copy together with its extremal eigenvalues.
fn checked_symmetric(m: &DMatrix<f64>, what: &str) -> Result<(DMatrix<f64>, f64, f64)> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            what: what.to_string(),
            expected: "square matrix".to_string(),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let asym = relative_asymmetry(m);
    if asym > ASYMMETRY_TOL {
        return Err(Error::NotSymmetric {
            what: what.to_string(),
            asymmetry: asym,
        });
    }
    let sym = symmetrize(m);
    let eigs = sym_eigenvalues(&sym);
    let (lo, hi) = if eigs.is_empty() {
        (0.0, 0.0)
    } else {
        (eigs.min(), eigs.max())
    };
    Ok((sym, lo, hi))
}

/// Symmetrize and require lambda_min > tol_pd.
pub fn check_pd(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let (sym, lo, hi) = checked_symmetric(m, what)?;
    if lo <= pd_tolerance(hi) {
        return Err(Error::NotPositiveDefinite {
            what: what.to_string(),
            lambda_min: lo,
        });
    }
    Ok(sym)
}

/// Symmetrize and require lambda_min >= -tol_pd.
pub fn check_psd(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let (sym, lo, hi) = checked_symmetric(m, what)?;
    if lo < -pd_tolerance(hi) {
        return Err(Error::NotPositiveSemidefinite {
            what: what.to_string(),
            lambda_min: lo,
        });
    }
    Ok(sym)
}

/// Inverse symmetric square root V^{-1/2} of a positive definite matrix,
/// via eigendecomposition.
pub fn inv_sqrt_pd(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let (sym, lo, hi) = checked_symmetric(m, what)?;
    if lo <= pd_tolerance(hi) {
        return Err(Error::NotPositiveDefinite {
            what: what.to_string(),
            lambda_min: lo,
        });
    }
    let eig = sym.symmetric_eigen();
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok(&eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose())
}

/// Symmetric factor F with F F^T = M for a PSD matrix; eigenvalues in
/// [-1e-12 * lambda_max, 0) are clipped to zero so sampling accepts PSD inputs.
pub fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return m.clone();
    }
    let eig = symmetrize(m).symmetric_eigen();
    let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    &eig.eigenvectors * sqrt
}

/// Clips eigenvalues in [-1e-12 * lambda_max, 0) to zero and errors on larger
/// negativity, so covariance drift stays bounded without masking bugs.
pub fn psd_clip(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    let eig = symmetrize(m).symmetric_eigen();
    let hi = eig.eigenvalues.max().max(0.0);
    let floor = -1e-12 * hi.max(1e-300);
    let lo = eig.eigenvalues.min();
    if lo < floor {
        return Err(Error::NotPositiveSemidefinite {
            what: what.to_string(),
            lambda_min: lo,
        });
    }
    if lo >= 0.0 {
        return Ok(symmetrize(m));
    }
    let clipped = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0)));
    Ok(symmetrize(
        &(&eig.eigenvectors * clipped * eig.eigenvectors.transpose()),
    ))
}

/// Solves M X = RHS for symmetric positive definite M via Cholesky.
pub fn solve_spd(m: &DMatrix<f64>, rhs: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    symmetrize(m)
        .cholesky()
        .map(|chol| chol.solve(rhs))
        .ok_or_else(|| Error::Numerical(format!("{what}: Cholesky factorization failed")))
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn inv_spd(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    symmetrize(m)
        .cholesky()
        .map(|chol| chol.inverse())
        .ok_or_else(|| Error::Numerical(format!("{what}: Cholesky factorization failed")))
}

/// log det of a symmetric positive definite matrix; falls back to clipped
/// eigenvalues (yielding -inf on singularity) when Cholesky fails.
pub fn logdet_spd(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    match symmetrize(m).cholesky() {
        Some(chol) => 2.0 * chol.l().diagonal().map(f64::ln).sum(),
        None => sym_eigenvalues(m).map(|l| l.max(0.0).ln()).sum(),
    }
}

/// tr(A B) without forming the product.
pub fn trace_prod(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Relative Frobenius residual ||A - B|| / max(||A||, ||B||); zero when both
/// sides vanish.
pub fn relative_residual(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let denom = a.norm().max(b.norm());
    if denom == 0.0 {
        return 0.0;
    }
    (a - b).norm() / denom
}
