//! ULA geometry, steering vectors, source and snapshot generation, and the
//! scenario configuration shared by every experiment.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;
use std::f64::consts::PI;
use std::path::Path;

use crate::linalg::{CMat, CVec};
use crate::{DoaError, Result};

/// Amplitude model of the emitted sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceModel {
    /// i.i.d. +/- sigma_s symbols.
    Bpsk,
    /// Real zero-mean Gaussian amplitudes; `correlation` couples the first
    /// source pair.
    Gaussian,
}

/// Full description of one simulated scenario.
///
/// Loadable from a TOML file whose keys match the field names exactly;
/// unknown keys are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Number of sensors in the ULA.
    pub m: usize,
    /// True source count.
    pub q: usize,
    /// True DOAs in degrees, strictly inside (0, 180).
    pub doas_deg: Vec<f64>,
    /// Per-source SNR in dB with unit signal power.
    pub snr_db: f64,
    /// Snapshot count N.
    pub num_snapshots: usize,
    pub source_model: SourceModel,
    /// Correlation of the first source pair (gaussian model only).
    #[serde(default)]
    pub correlation: f64,
    /// Reduced rank r, 1 <= r <= m.
    pub rank: usize,
    /// Forgetting factor in (0, 1].
    pub alpha: f64,
    /// Diagonal loading applied before every covariance inversion.
    pub delta: f64,
    /// Scanning grid step in degrees; 180 / step must be an integer.
    pub grid_step_deg: f64,
    /// Subarray size for spatial-smoothing variants.
    #[serde(default)]
    pub subarray_n: Option<usize>,
    /// Source count assumed by the eigendecomposition baselines.
    pub assumed_q: usize,
    pub rng_seed: u64,
    #[serde(default = "default_d_over_lambda")]
    pub d_over_lambda: f64,
    /// Restrict peak matching to the k strongest peaks; unlimited if unset.
    #[serde(default)]
    pub top_k_peaks: Option<usize>,
}

fn default_d_over_lambda() -> f64 {
    0.5
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(DoaError::InvalidConfig(msg));
        if self.m == 0 {
            return err("m must be positive".into());
        }
        if self.q != self.doas_deg.len() {
            return err(format!(
                "q = {} does not match {} listed DOAs",
                self.q,
                self.doas_deg.len()
            ));
        }
        if self.q > self.m {
            return err(format!("q = {} exceeds m = {}", self.q, self.m));
        }
        for &theta in &self.doas_deg {
            if !(theta > 0.0 && theta < 180.0) {
                return err(format!("DOA {theta} deg outside open interval (0, 180)"));
            }
        }
        for (i, &a) in self.doas_deg.iter().enumerate() {
            for &b in &self.doas_deg[i + 1..] {
                if a == b {
                    return err(format!("duplicate DOA {a} deg"));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return err(format!("correlation {} outside [0, 1]", self.correlation));
        }
        if self.rank < 1 || self.rank > self.m {
            return err(format!("rank {} outside 1..={}", self.rank, self.m));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return err(format!("alpha {} outside (0, 1]", self.alpha));
        }
        if self.delta < 0.0 {
            return err(format!("loading delta {} is negative", self.delta));
        }
        if self.grid_step_deg <= 0.0 {
            return err(format!("grid step {} not positive", self.grid_step_deg));
        }
        let ratio = 180.0 / self.grid_step_deg;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return err(format!(
                "180 / grid_step_deg = {ratio} is not an integer"
            ));
        }
        if let Some(n) = self.subarray_n {
            let j = self.m as i64 - n as i64 + 1;
            if n < self.q.max(1) || n > self.m {
                return err(format!("subarray_n = {n} violates q <= n <= m"));
            }
            if j < self.q.max(1) as i64 {
                return err(format!(
                    "J = m - n + 1 = {j} smaller than q = {}",
                    self.q
                ));
            }
        }
        if self.num_snapshots == 0 {
            return err("num_snapshots must be positive".into());
        }
        if self.d_over_lambda <= 0.0 {
            return err("d_over_lambda must be positive".into());
        }
        Ok(())
    }

    /// Scanning grid theta_n = n * step for n = 1 .. 180/step - 1; both
    /// endpoints are excluded.
    pub fn grid(&self) -> Vec<f64> {
        let count = (180.0 / self.grid_step_deg).round() as usize;
        (1..count).map(|n| n as f64 * self.grid_step_deg).collect()
    }

    /// Noise variance implied by the SNR convention sigma_s^2 = 1.
    pub fn noise_variance(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)
            .map_err(|e| DoaError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| DoaError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

/// Array phase response to a unit plane wave; first entry is exactly 1.
#[derive(Debug, Clone)]
pub struct SteeringVector {
    pub theta_deg: f64,
    pub entries: CVec,
}

/// Steering vector of an m-element ULA: entry k is
/// exp(-2 pi j k (d/lambda) cos theta).
pub fn steering_vector(theta_deg: f64, m: usize, d_over_lambda: f64) -> SteeringVector {
    assert!(m >= 1, "array must have at least one sensor");
    assert!(
        theta_deg > 0.0 && theta_deg < 180.0,
        "steering angle {theta_deg} outside open interval (0, 180)"
    );
    let phase_step = -2.0 * PI * d_over_lambda * (theta_deg * PI / 180.0).cos();
    let entries = CVec::from_iterator(
        m,
        (0..m).map(|k| Complex64::from_polar(1.0, phase_step * k as f64)),
    );
    SteeringVector { theta_deg, entries }
}

/// Received array data: one complex m-vector per snapshot, stored columnwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    pub data: CMat,
}

impl SnapshotMatrix {
    pub fn sensors(&self) -> usize {
        self.data.nrows()
    }

    pub fn snapshots(&self) -> usize {
        self.data.ncols()
    }

    pub fn snapshot(&self, i: usize) -> CVec {
        self.data.column(i).into_owned()
    }
}

/// Source amplitude matrix (q x N, real-valued entries).
///
/// Under the gaussian model the second source is c * s1 + sqrt(1 - c^2) * s3
/// so the first pair carries sample correlation c.
pub fn generate_sources<R: Rng>(config: &ScenarioConfig, rng: &mut R) -> CMat {
    let q = config.q;
    let n = config.num_snapshots;
    match config.source_model {
        SourceModel::Bpsk => CMat::from_fn(q, n, |_, _| {
            let bit: bool = rng.gen();
            Complex64::new(if bit { 1.0 } else { -1.0 }, 0.0)
        }),
        SourceModel::Gaussian => {
            let mut s = CMat::from_fn(q, n, |_, _| {
                Complex64::new(rng.sample::<f64, _>(StandardNormal), 0.0)
            });
            if q >= 2 {
                let c = config.correlation;
                let mix = (1.0 - c * c).sqrt();
                for i in 0..n {
                    let s1 = s[(0, i)];
                    let s3 = s[(1, i)];
                    s[(1, i)] = s1 * c + s3 * mix;
                }
            }
            s
        }
    }
}

/// Array output X = A(theta) S + noise with circular complex Gaussian noise
/// of variance `config.noise_variance()` per sensor.
pub fn generate_snapshots<R: Rng>(config: &ScenarioConfig, rng: &mut R) -> SnapshotMatrix {
    let m = config.m;
    let n = config.num_snapshots;
    let mut a = CMat::zeros(m, config.q);
    for (k, &theta) in config.doas_deg.iter().enumerate() {
        a.set_column(k, &steering_vector(theta, m, config.d_over_lambda).entries);
    }
    let sources = generate_sources(config, rng);
    let mut data = a * sources;
    let sigma = (config.noise_variance() / 2.0).sqrt();
    for j in 0..n {
        for i in 0..m {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            data[(i, j)] += Complex64::new(sigma * re, sigma * im);
        }
    }
    SnapshotMatrix { data }
}

/// Analytic covariance R = A R_s A^H + sigma_n^2 I for a scenario, with the
/// source covariance implied by the correlation model. Test and oracle use.
pub fn analytic_covariance(config: &ScenarioConfig) -> CMat {
    let m = config.m;
    let q = config.q;
    let mut a = CMat::zeros(m, q);
    for (k, &theta) in config.doas_deg.iter().enumerate() {
        a.set_column(k, &steering_vector(theta, m, config.d_over_lambda).entries);
    }
    let mut rs = CMat::identity(q, q);
    if q >= 2 && config.source_model == SourceModel::Gaussian {
        let c = Complex64::new(config.correlation, 0.0);
        rs[(0, 1)] = c;
        rs[(1, 0)] = c;
    }
    let sigma_n2 = config.noise_variance();
    &a * rs * a.adjoint() + CMat::identity(m, m) * Complex64::new(sigma_n2, 0.0)
}

/// Small baseline scenario shared by unit tests across the crate.
#[cfg(test)]
pub(crate) fn test_config() -> ScenarioConfig {
    ScenarioConfig {
        m: 4,
        q: 2,
        doas_deg: vec![50.0, 53.0],
        snr_db: 0.0,
        num_snapshots: 100,
        source_model: SourceModel::Gaussian,
        correlation: 0.0,
        rank: 2,
        alpha: 0.998,
        delta: 5e-4,
        grid_step_deg: 1.0,
        subarray_n: None,
        assumed_q: 2,
        rng_seed: 1,
        d_over_lambda: 0.5,
        top_k_peaks: None,
    }
}
