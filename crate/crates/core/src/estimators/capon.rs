//! Minimum-variance (Capon) spectrum: P(theta) = 1 / (a^H (R + dI)^-1 a).

use super::Spectrum;
use crate::array_model::steering_vector;
use crate::covariance::CovarianceEstimate;
use crate::linalg::{hermitian_inverse_loaded, CVec};
use crate::{DoaError, Result};

/// Distortionless weight w = R^-1 a / (a^H R^-1 a) for one look direction,
/// with the estimate's loading applied to the inverse.
pub fn capon_weight(est: &CovarianceEstimate, a: &CVec) -> Result<CVec> {
    let inv = hermitian_inverse_loaded(&est.matrix, est.delta)?;
    let v = &inv * a;
    let denom = (a.adjoint() * &v)[(0, 0)];
    if !(denom.re.is_finite() && denom.re > 0.0) {
        return Err(DoaError::Singular { rcond: 0.0 });
    }
    Ok(v / denom)
}

/// Capon pseudo-spectrum over the scanning grid. The steering length follows
/// the estimate's dimension, so smoothed (subarray) covariances work
/// unchanged.
pub fn capon_spectrum(
    est: &CovarianceEstimate,
    grid: &[f64],
    d_over_lambda: f64,
) -> Result<Spectrum> {
    let p = est.dim();
    let inv = hermitian_inverse_loaded(&est.matrix, est.delta)?;
    let mut power = Vec::with_capacity(grid.len());
    for &theta in grid {
        let a = steering_vector(theta, p, d_over_lambda).entries;
        let denom = (a.adjoint() * &inv * &a)[(0, 0)].re;
        if !(denom.is_finite() && denom > 0.0) {
            return Err(DoaError::ConstraintInfeasible { theta_deg: theta });
        }
        power.push(1.0 / denom);
    }
    Ok(Spectrum::new(grid.to_vec(), power))
}
