//! Sample, recursive (forgetting-factor) and spatially smoothed covariance
//! estimation.

use num_complex::Complex64;

use crate::array_model::SnapshotMatrix;
use crate::linalg::{CMat, CVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovKind {
    Full,
    Reduced,
    Smoothed,
}

/// Hermitian covariance estimate plus the bookkeeping needed to invert it.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub matrix: CMat,
    pub kind: CovKind,
    pub snapshots_absorbed: usize,
    /// Forgetting factor used by recursive updates.
    pub alpha: f64,
    /// Loading to apply at inversion time.
    pub delta: f64,
}

impl CovarianceEstimate {
    /// Recursion state initialized to delta * I so the first-instant inverse
    /// exists.
    pub fn init(p: usize, kind: CovKind, alpha: f64, delta: f64) -> Self {
        Self {
            matrix: CMat::identity(p, p) * Complex64::new(delta, 0.0),
            kind,
            snapshots_absorbed: 0,
            alpha,
            delta,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// matrix <- alpha * matrix + x x^H
    pub fn recursive_update(&mut self, x: &CVec, alpha: f64) {
        assert_eq!(x.len(), self.dim(), "snapshot dimension mismatch");
        assert!(alpha > 0.0 && alpha <= 1.0, "alpha outside (0, 1]");
        self.matrix *= Complex64::new(alpha, 0.0);
        self.matrix += x * x.adjoint();
        self.snapshots_absorbed += 1;
        self.alpha = alpha;
    }
}

/// Plain sample covariance (1/N) sum x(i) x(i)^H.
pub fn sample_covariance(x: &SnapshotMatrix) -> CovarianceEstimate {
    let n = x.snapshots();
    assert!(n >= 1, "sample covariance needs at least one snapshot");
    let matrix = &x.data * x.data.adjoint() / Complex64::new(n as f64, 0.0);
    CovarianceEstimate {
        matrix,
        kind: CovKind::Full,
        snapshots_absorbed: n,
        alpha: 1.0,
        delta: 0.0,
    }
}

/// Length-n subarray slices of a snapshot: slice j covers sensors
/// j .. j+n-1 for j = 0 .. J-1 with J = m - n + 1.
pub fn subarray_slices(x: &CVec, n: usize) -> Vec<CVec> {
    let m = x.len();
    assert!(n >= 1 && n <= m, "subarray size outside 1..=m");
    let j_count = m - n + 1;
    (0..j_count).map(|j| x.rows(j, n).into_owned()).collect()
}

/// One spatial-smoothing accumulation instant: both the full n x n and the
/// reduced r x r estimates absorb the subarray average under forgetting.
pub fn spatial_smooth_accumulate(
    full: &mut CovarianceEstimate,
    reduced: &mut CovarianceEstimate,
    x: &CVec,
    t_ss: &CMat,
    n: usize,
    alpha: f64,
) {
    let slices = subarray_slices(x, n);
    let j_count = slices.len();
    let w = Complex64::new(1.0 / j_count as f64, 0.0);
    let a = Complex64::new(alpha, 0.0);
    full.matrix *= a;
    reduced.matrix *= a;
    for xj in &slices {
        full.matrix += (xj * xj.adjoint()) * w;
        let xbar = t_ss.adjoint() * xj;
        reduced.matrix += (&xbar * xbar.adjoint()) * w;
    }
    full.snapshots_absorbed += 1;
    reduced.snapshots_absorbed += 1;
    full.alpha = alpha;
    reduced.alpha = alpha;
}

/// Spatially smoothed sample covariance for the SS baselines: the average
/// of the J subarray sample covariances, no forgetting.
pub fn smoothed_sample_covariance(x: &SnapshotMatrix, n: usize) -> CovarianceEstimate {
    let m = x.sensors();
    let total = x.snapshots();
    assert!(total >= 1);
    assert!(n >= 1 && n <= m);
    let j_count = m - n + 1;
    let mut acc = CMat::zeros(n, n);
    for i in 0..total {
        let xi = x.snapshot(i);
        for xj in subarray_slices(&xi, n) {
            acc += &xj * xj.adjoint();
        }
    }
    CovarianceEstimate {
        matrix: acc / Complex64::new((total * j_count) as f64, 0.0),
        kind: CovKind::Smoothed,
        snapshots_absorbed: total,
        alpha: 1.0,
        delta: 0.0,
    }
}
