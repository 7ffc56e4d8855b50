//! LS-ESPRIT with maximally overlapping one-element-shift subarrays.

use std::f64::consts::PI;

use crate::covariance::CovarianceEstimate;
use crate::linalg::{hermitian_eig, least_squares_solve};
use crate::{DoaError, Result};

/// Point DOA estimates from the rotational invariance of the signal
/// subspace. Returns `q_w` angles in degrees sorted ascending.
pub fn esprit_doas(
    est: &CovarianceEstimate,
    q_w: usize,
    d_over_lambda: f64,
) -> Result<Vec<f64>> {
    let p = est.dim();
    if q_w < 1 || q_w >= p {
        return Err(DoaError::InvalidConfig(format!(
            "assumed source count {q_w} outside 1..{p}"
        )));
    }
    let (_, vectors) = hermitian_eig(&est.matrix)?;
    let signal = vectors.columns(0, q_w).into_owned();
    let upper = signal.rows(0, p - 1).into_owned();
    let lower = signal.rows(1, p - 1).into_owned();
    let psi = least_squares_solve(&upper, &lower)?;
    let eigenvalues = psi
        .eigenvalues()
        .ok_or(DoaError::EigNonConvergence)?;
    let mut angles: Vec<f64> = eigenvalues
        .iter()
        .map(|mu| {
            let cos_theta = (-mu.arg() / (2.0 * PI * d_over_lambda)).clamp(-1.0, 1.0);
            cos_theta.acos() * 180.0 / PI
        })
        .collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(angles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_model::analytic_covariance;
    use crate::covariance::CovKind;
    use crate::linalg::CMat;

    fn wrap(matrix: CMat) -> CovarianceEstimate {
        CovarianceEstimate {
            matrix,
            kind: CovKind::Full,
            snapshots_absorbed: 1,
            alpha: 1.0,
            delta: 0.0,
        }
    }

    #[test]
    fn exact_covariance_recovers_close_pair() {
        let mut cfg = crate::array_model::test_config();
        cfg.m = 10;
        cfg.snr_db = 300.0; // effectively noiseless
        let est = wrap(analytic_covariance(&cfg));
        let doas = esprit_doas(&est, 2, 0.5).unwrap();
        assert!((doas[0] - 50.0).abs() < 1e-6, "got {doas:?}");
        assert!((doas[1] - 53.0).abs() < 1e-6);
    }

    #[test]
    fn single_source_allowed() {
        let mut cfg = crate::array_model::test_config();
        cfg.m = 8;
        cfg.q = 1;
        cfg.doas_deg = vec![90.0];
        cfg.snr_db = 300.0;
        let est = wrap(analytic_covariance(&cfg));
        let doas = esprit_doas(&est, 1, 0.5).unwrap();
        assert!((doas[0] - 90.0).abs() < 1e-6);
    }

    #[test]
    fn underestimated_source_count_degrades_without_error() {
        let mut cfg = crate::array_model::test_config();
        cfg.m = 10;
        cfg.snr_db = 20.0;
        let est = wrap(analytic_covariance(&cfg));
        let doas = esprit_doas(&est, 1, 0.5).unwrap();
        assert_eq!(doas.len(), 1);
        assert!(doas[0].is_finite());
    }
}
