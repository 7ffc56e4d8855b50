//! Dense complex linear algebra shared by every estimator: loaded Hermitian
//! inversion, Hermitian eigendecomposition and a least-squares solve.
//!
//! Backed by nalgebra; all routines are deterministic for a given input.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{DoaError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Largest relative deviation of `m` from its conjugate transpose.
pub fn hermitian_asymmetry(m: &CMat) -> f64 {
    let scale = m.camax().max(1e-300);
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(d / scale);
        }
    }
    worst
}

fn require_hermitian(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(DoaError::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let asym = hermitian_asymmetry(m);
    if asym > 1e-8 {
        return Err(DoaError::NotHermitian { max_asym: asym });
    }
    Ok(())
}

/// Reciprocal condition estimate from the eigenvalue spread of a Hermitian
/// matrix. Used only on failure paths for diagnostics.
fn rcond_estimate(m: &CMat) -> f64 {
    match nalgebra::SymmetricEigen::try_new(m.clone(), 1e-12, 4096) {
        Some(eig) => {
            let max = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            let min = eig
                .eigenvalues
                .iter()
                .fold(f64::INFINITY, |a, &v| a.min(v.abs()));
            if max == 0.0 {
                0.0
            } else {
                min / max
            }
        }
        None => 0.0,
    }
}

/// Inverse of `m + delta * I` for Hermitian `m`.
///
/// The result is explicitly re-symmetrized so round-off cannot leak a
/// non-Hermitian inverse into downstream quadratic forms.
pub fn hermitian_inverse_loaded(m: &CMat, delta: f64) -> Result<CMat> {
    require_hermitian(m)?;
    assert!(delta >= 0.0, "loading must be nonnegative");
    let p = m.nrows();
    let mut loaded = m.clone();
    for i in 0..p {
        loaded[(i, i)] += Complex64::new(delta, 0.0);
    }
    let inv = loaded
        .clone()
        .try_inverse()
        .filter(|inv| inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or_else(|| DoaError::Singular {
            rcond: rcond_estimate(&loaded),
        })?;
    // symmetrize: (B + B^H) / 2
    let half = Complex64::new(0.5, 0.0);
    Ok((&inv + inv.adjoint()) * half)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns real eigenvalues sorted descending and the matching orthonormal
/// eigenvectors as columns.
pub fn hermitian_eig(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    require_hermitian(m)?;
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), 1e-14, 8192)
        .ok_or(DoaError::EigNonConvergence)?;
    let p = m.nrows();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(p, p);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Least-squares solution `argmin_X ||A X - B||_F` via the normal equations.
pub fn least_squares_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() != b.nrows() {
        return Err(DoaError::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    let gram = a.adjoint() * a;
    let rhs = a.adjoint() * b;
    let chol = nalgebra::Cholesky::new(gram).ok_or(DoaError::RankDeficient {
        rows: a.nrows(),
        cols: a.ncols(),
    })?;
    Ok(chol.solve(&rhs))
}

/// Real part of the quadratic form `v^H M v`; exact for Hermitian `M`.
pub fn quad_form(m: &CMat, v: &CVec) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}
