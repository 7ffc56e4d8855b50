//! MUSIC pseudo-spectrum from the noise subspace of the sample covariance.

use super::Spectrum;
use crate::array_model::steering_vector;
use crate::covariance::CovarianceEstimate;
use crate::linalg::hermitian_eig;
use crate::{DoaError, Result};

/// P(theta) = 1 / ||E_n^H a(theta)||^2 where E_n spans the m - q_w smallest
/// eigenvectors of the covariance estimate.
pub fn music_spectrum(
    est: &CovarianceEstimate,
    q_w: usize,
    grid: &[f64],
    d_over_lambda: f64,
) -> Result<Spectrum> {
    let p = est.dim();
    if q_w < 1 || q_w >= p {
        return Err(DoaError::InvalidConfig(format!(
            "assumed source count {q_w} outside 1..{p}"
        )));
    }
    let (_, vectors) = hermitian_eig(&est.matrix)?;
    // eigenvalues come back descending, so the noise subspace is the tail
    let noise = vectors.columns(q_w, p - q_w).into_owned();
    let mut power = Vec::with_capacity(grid.len());
    for &theta in grid {
        let a = steering_vector(theta, p, d_over_lambda).entries;
        let proj = noise.adjoint() * &a;
        let denom = proj.norm_squared().max(1e-300);
        power.push(1.0 / denom);
    }
    Ok(Spectrum::new(grid.to_vec(), power))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_model::analytic_covariance;
    use crate::covariance::CovKind;
    use crate::linalg::CMat;
    use crate::spectrum_search::find_peaks;
    use num_complex::Complex64;

    fn grid_1deg() -> Vec<f64> {
        (1..180).map(|n| n as f64).collect()
    }

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
    fn white_covariance_stays_bounded() {
        let est = wrap(CMat::identity(5, 5) * Complex64::new(2.0, 0.0));
        let spec = music_spectrum(&est, 1, &grid_1deg(), 0.5).unwrap();
        for p in &spec.power {
            assert!(p.is_finite() && *p > 0.0);
        }
    }

    #[test]
    fn exact_covariance_peaks_at_true_angles() {
        let mut cfg = crate::array_model::test_config();
        cfg.m = 10;
        cfg.snr_db = 10.0;
        let est = wrap(analytic_covariance(&cfg));
        let spec = music_spectrum(&est, 2, &grid_1deg(), 0.5).unwrap();
        let peaks = find_peaks(&spec);
        let mut top: Vec<f64> = peaks.peaks.iter().take(2).map(|p| p.0).collect();
        top.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(top, vec![50.0, 53.0]);
    }

    #[test]
    fn noise_subspace_dimension_one_is_valid() {
        let mut cfg = crate::array_model::test_config();
        cfg.m = 6;
        let est = wrap(analytic_covariance(&cfg));
        let spec = music_spectrum(&est, 5, &grid_1deg(), 0.5).unwrap();
        assert_eq!(spec.len(), 179);
    }

    #[test]
    fn invalid_assumed_count_rejected() {
        let est = wrap(CMat::identity(4, 4));
        assert!(music_spectrum(&est, 0, &grid_1deg(), 0.5).is_err());
        assert!(music_spectrum(&est, 4, &grid_1deg(), 0.5).is_err());
    }
}
