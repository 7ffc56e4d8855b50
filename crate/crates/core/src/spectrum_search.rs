//! Peak detection on the scanning grid and the per-trial resolution verdict.

use crate::estimators::Spectrum;

/// Strict interior local maxima, sorted by descending power.
#[derive(Debug, Clone)]
pub struct PeakSet {
    pub peaks: Vec<(f64, f64)>,
}

/// Verdict of one trial: every true DOA matched within tolerance or not.
#[derive(Debug, Clone)]
pub struct ResolutionResult {
    pub resolved: bool,
    /// Matched |estimate - truth| per source, `None` for unmatched sources.
    pub per_source_error_deg: Vec<Option<f64>>,
}

/// All strict interior local maxima; grid endpoints never qualify.
pub fn find_peaks(spectrum: &Spectrum) -> PeakSet {
    assert!(spectrum.len() >= 3, "peak search needs at least 3 grid points");
    let mut peaks = Vec::new();
    for i in 1..spectrum.len() - 1 {
        let p = spectrum.power[i];
        if p > spectrum.power[i - 1] && p > spectrum.power[i + 1] {
            peaks.push((spectrum.grid[i], p));
        }
    }
    peaks.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    PeakSet { peaks }
}

/// Greedy matching from the strongest peak down; each peak consumes at most
/// one true source strictly within `tol_deg`. Optionally restricted to the
/// `top_k` strongest peaks.
pub fn resolution_check_top_k(
    peaks: &PeakSet,
    true_doas: &[f64],
    tol_deg: f64,
    top_k: Option<usize>,
) -> ResolutionResult {
    assert!(!true_doas.is_empty(), "need at least one true DOA");
    let limit = top_k.unwrap_or(usize::MAX).min(peaks.peaks.len());
    let mut errors: Vec<Option<f64>> = vec![None; true_doas.len()];
    for (theta, _) in peaks.peaks.iter().take(limit) {
        // nearest still-unmatched source within tolerance
        let mut best: Option<(usize, f64)> = None;
        for (k, &truth) in true_doas.iter().enumerate() {
            if errors[k].is_some() {
                continue;
            }
            let err = (theta - truth).abs();
            if err < tol_deg && best.map_or(true, |(_, b)| err < b) {
                best = Some((k, err));
            }
        }
        if let Some((k, err)) = best {
            errors[k] = Some(err);
        }
    }
    ResolutionResult {
        resolved: errors.iter().all(|e| e.is_some()),
        per_source_error_deg: errors,
    }
}

pub fn resolution_check(peaks: &PeakSet, true_doas: &[f64], tol_deg: f64) -> ResolutionResult {
    resolution_check_top_k(peaks, true_doas, tol_deg, None)
}

/// Same greedy matching applied to point estimates (ESPRIT output).
pub fn esprit_resolution_check(
    estimates: &[f64],
    true_doas: &[f64],
    tol_deg: f64,
) -> ResolutionResult {
    let pseudo = PeakSet {
        peaks: estimates.iter().map(|&t| (t, 1.0)).collect(),
    };
    let mut errors: Vec<Option<f64>> = vec![None; true_doas.len()];
    for (theta, _) in &pseudo.peaks {
        let mut best: Option<(usize, f64)> = None;
        for (k, &truth) in true_doas.iter().enumerate() {
            if errors[k].is_some() {
                continue;
            }
            let err = (theta - truth).abs();
            if err < tol_deg && best.map_or(true, |(_, b)| err < b) {
                best = Some((k, err));
            }
        }
        if let Some((k, err)) = best {
            errors[k] = Some(err);
        }
    }
    ResolutionResult {
        resolved: errors.iter().all(|e| e.is_some()),
        per_source_error_deg: errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_model::analytic_covariance;
    use crate::covariance::{CovKind, CovarianceEstimate};
    use crate::estimators::capon_spectrum;

    fn spectrum(power: Vec<f64>) -> Spectrum {
        let grid = (1..=power.len()).map(|n| n as f64).collect();
        Spectrum::new(grid, power)
    }

    #[test]
    fn monotone_spectrum_has_no_peaks() {
        let s = spectrum(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(find_peaks(&s).peaks.is_empty());
    }

    #[test]
    fn single_bump_yields_single_peak() {
        let s = spectrum(vec![1.0, 2.0, 5.0, 2.0, 1.0]);
        let peaks = find_peaks(&s);
        assert_eq!(peaks.peaks.len(), 1);
        assert_eq!(peaks.peaks[0].0, 3.0);
    }

    #[test]
    fn plateau_is_not_a_strict_peak() {
        let s = spectrum(vec![1.0, 3.0, 3.0, 1.0, 0.5]);
        assert!(find_peaks(&s).peaks.is_empty());
    }

    #[test]
    fn exact_capon_peaks_at_separated_sources() {
        let mut cfg = crate::array_model::test_config();
        cfg.m = 12;
        cfg.doas_deg = vec![60.0, 120.0];
        cfg.snr_db = 20.0;
        let est = CovarianceEstimate {
            matrix: analytic_covariance(&cfg),
            kind: CovKind::Full,
            snapshots_absorbed: 1,
            alpha: 1.0,
            delta: 0.0,
        };
        let grid: Vec<f64> = (1..180).map(|n| n as f64).collect();
        let spec = capon_spectrum(&est, &grid, 0.5).unwrap();
        let peaks = find_peaks(&spec);
        let mut top: Vec<f64> = peaks.peaks.iter().take(2).map(|p| p.0).collect();
        top.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(top, vec![60.0, 120.0]);
    }

    #[test]
    fn within_tolerance_resolves() {
        let peaks = PeakSet {
            peaks: vec![(50.4, 1.0)],
        };
        let res = resolution_check(&peaks, &[50.0], 1.0);
        assert!(res.resolved);
        assert!((res.per_source_error_deg[0].unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn boundary_is_strict() {
        let peaks = PeakSet {
            peaks: vec![(51.0, 1.0)],
        };
        let res = resolution_check(&peaks, &[50.0], 1.0);
        assert!(!res.resolved);
        assert!(res.per_source_error_deg[0].is_none());
    }

    #[test]
    fn too_few_peaks_leave_unmatched_source() {
        let peaks = PeakSet {
            peaks: vec![(50.0, 1.0)],
        };
        let res = resolution_check(&peaks, &[50.0, 53.0], 1.0);
        assert!(!res.resolved);
        assert_eq!(
            res.per_source_error_deg.iter().filter(|e| e.is_none()).count(),
            1
        );
    }

    #[test]
    fn extra_far_peak_never_unresolves() {
        let near = PeakSet {
            peaks: vec![(50.2, 5.0)],
        };
        let with_far = PeakSet {
            peaks: vec![(130.0, 9.0), (50.2, 5.0)],
        };
        assert!(resolution_check(&near, &[50.0], 1.0).resolved);
        assert!(resolution_check(&with_far, &[50.0], 1.0).resolved);
    }

    #[test]
    fn matching_ignores_power_rescaling() {
        let a = PeakSet {
            peaks: vec![(80.0, 10.0), (50.2, 5.0)],
        };
        let b = PeakSet {
            peaks: vec![(80.0, 1000.0), (50.2, 500.0)],
        };
        let ra = resolution_check(&a, &[50.0, 80.0], 1.0);
        let rb = resolution_check(&b, &[50.0, 80.0], 1.0);
        assert_eq!(ra.resolved, rb.resolved);
    }

    #[test]
    fn esprit_estimates_match_order_free() {
        let res = esprit_resolution_check(&[53.1, 49.9], &[50.0, 53.0], 1.0);
        assert!(res.resolved);
        assert!(!esprit_resolution_check(&[], &[50.0], 1.0).resolved);
        assert!(esprit_resolution_check(&[50.0, 53.0], &[50.0, 53.0], 1.0).resolved);
    }
}
