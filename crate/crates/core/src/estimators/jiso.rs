//! Joint iterative subspace optimization: per scanning direction, alternating
//! closed-form updates of a projection matrix and a reduced-rank weight under
//! a unit-gain constraint, with the output power read off the reduced
//! covariance.
//!
//! The loop is snapshot-major: the full covariance is updated once per time
//! instant and its loaded inverse is shared by every scanning direction.

use num_complex::Complex64;

use super::Spectrum;
use crate::array_model::{steering_vector, ScenarioConfig, SnapshotMatrix, SteeringVector};
use crate::covariance::{subarray_slices, CovKind, CovarianceEstimate};
use crate::linalg::{hermitian_inverse_loaded, CMat, CVec};
use crate::{DoaError, Result};

/// Per-scanning-direction state of the joint iteration.
#[derive(Debug, Clone)]
pub struct JisoDirectionState {
    pub theta_deg: f64,
    /// Projection matrix, p x r (p = m, or the subarray size for SS).
    pub t_r: CMat,
    /// Reduced-rank weight vector.
    pub f_bar: CVec,
    /// Recursive reduced covariance estimate.
    pub reduced_cov: CovarianceEstimate,
    /// Projected steering vector from the latest step.
    pub a_bar: CVec,
    /// Quadratic form a_bar^H (R_bar + dI)^-1 a_bar from the latest step;
    /// the reciprocal is the output power.
    last_denom: f64,
}

impl JisoDirectionState {
    /// Output power 1 / (a_bar^H (R_bar + dI)^-1 a_bar).
    pub fn output_power(&self) -> Result<f64> {
        if !(self.last_denom.is_finite() && self.last_denom > 0.0) {
            return Err(DoaError::ConstraintInfeasible {
                theta_deg: self.theta_deg,
            });
        }
        Ok(1.0 / self.last_denom)
    }
}

/// Initialization: T(0) = [I_r; 0], f(0) = T^H a / ||T^H a||^2, reduced
/// covariance = delta * I_r. The pair satisfies the unit-gain constraint
/// exactly.
pub fn jiso_init(
    p: usize,
    r: usize,
    a_theta: &SteeringVector,
    alpha: f64,
    delta: f64,
) -> JisoDirectionState {
    assert!(r >= 1 && r <= p, "rank outside 1..=p");
    assert_eq!(a_theta.entries.len(), p);
    let mut t_r = CMat::zeros(p, r);
    for k in 0..r {
        t_r[(k, k)] = Complex64::new(1.0, 0.0);
    }
    let projected = t_r.adjoint() * &a_theta.entries;
    let norm_sq = projected.norm_squared();
    assert!(norm_sq > 0.0, "projected steering vector vanished at init");
    let f_bar = &projected / Complex64::new(norm_sq, 0.0);
    JisoDirectionState {
        theta_deg: a_theta.theta_deg,
        t_r,
        f_bar,
        reduced_cov: CovarianceEstimate::init(r, CovKind::Reduced, alpha, delta),
        a_bar: projected,
        last_denom: f64::NAN,
    }
}

/// One joint update for a single time instant and scanning direction.
///
/// `r_hat_inv_a` is the precomputed (R_hat + dI)^-1 a(theta) for the current
/// instant; the caller computes the full inverse once and reuses it across
/// the whole grid.
pub fn jiso_step(
    state: &mut JisoDirectionState,
    x: &CVec,
    r_hat_inv_a: &CVec,
    a_theta: &SteeringVector,
    alpha: f64,
    delta: f64,
) -> Result<()> {
    let x_bar = state.t_r.adjoint() * x;
    let a_bar = state.t_r.adjoint() * &a_theta.entries;
    if a_bar.norm_squared() == 0.0 {
        return Err(DoaError::ConstraintInfeasible {
            theta_deg: state.theta_deg,
        });
    }
    state.reduced_cov.recursive_update(&x_bar, alpha);
    let reduced_inv = hermitian_inverse_loaded(&state.reduced_cov.matrix, delta)?;
    let v = &reduced_inv * &a_bar;
    let denom = (a_bar.adjoint() * &v)[(0, 0)].re;
    if !(denom.is_finite() && denom > 0.0) {
        return Err(DoaError::ConstraintInfeasible {
            theta_deg: state.theta_deg,
        });
    }
    let f_bar = v / Complex64::new(denom, 0.0);

    // Capon-form direction vector w = R^-1 a / (a^H R^-1 a), then the
    // min-norm row solution T = w f^H / ||f||^2
    let gain = (a_theta.entries.adjoint() * r_hat_inv_a)[(0, 0)];
    if gain.norm() == 0.0 {
        return Err(DoaError::ConstraintInfeasible {
            theta_deg: state.theta_deg,
        });
    }
    let w = r_hat_inv_a / gain;
    let f_norm_sq = f_bar.norm_squared();
    state.t_r = &w * (f_bar.adjoint() / Complex64::new(f_norm_sq, 0.0));
    state.f_bar = f_bar;
    state.a_bar = a_bar;
    state.last_denom = denom;
    Ok(())
}

fn steering_grid(grid: &[f64], p: usize, d_over_lambda: f64) -> Vec<SteeringVector> {
    grid.iter()
        .map(|&theta| steering_vector(theta, p, d_over_lambda))
        .collect()
}

/// JISO power spectrum over the scanning grid after absorbing all snapshots.
pub fn jiso_spectrum(x: &SnapshotMatrix, config: &ScenarioConfig) -> Result<Spectrum> {
    let m = x.sensors();
    let grid = config.grid();
    let steering = steering_grid(&grid, m, config.d_over_lambda);
    let mut states: Vec<JisoDirectionState> = steering
        .iter()
        .map(|a| jiso_init(m, config.rank, a, config.alpha, config.delta))
        .collect();

    let mut full = CovarianceEstimate::init(m, CovKind::Full, config.alpha, config.delta);
    for i in 0..x.snapshots() {
        let xi = x.snapshot(i);
        full.recursive_update(&xi, config.alpha);
        let inv = hermitian_inverse_loaded(&full.matrix, config.delta)?;
        for (state, a) in states.iter_mut().zip(steering.iter()) {
            let r_inv_a = &inv * &a.entries;
            jiso_step(state, &xi, &r_inv_a, a, config.alpha, config.delta)?;
        }
    }

    let power: Result<Vec<f64>> = states.iter().map(|s| s.output_power()).collect();
    Ok(Spectrum::new(grid, power?))
}

/// Spatial-smoothing variant: length-n subarray slices feed smoothed full and
/// reduced covariances, everything else follows the plain JISO loop.
pub fn jiso_ss_spectrum(x: &SnapshotMatrix, config: &ScenarioConfig) -> Result<Spectrum> {
    let m = x.sensors();
    let n = config.subarray_n.ok_or_else(|| {
        DoaError::InvalidConfig("subarray_n required for the SS variant".into())
    })?;
    if n < 1 || n > m {
        return Err(DoaError::InvalidConfig(format!(
            "subarray size {n} outside 1..={m}"
        )));
    }
    let j_count = m - n + 1;
    let j_weight = Complex64::new(1.0 / j_count as f64, 0.0);
    let a_scale = Complex64::new(config.alpha, 0.0);

    let grid = config.grid();
    let steering = steering_grid(&grid, n, config.d_over_lambda);
    let mut states: Vec<JisoDirectionState> = steering
        .iter()
        .map(|a| jiso_init(n, config.rank, a, config.alpha, config.delta))
        .collect();

    let mut full = CovarianceEstimate::init(n, CovKind::Smoothed, config.alpha, config.delta);
    for i in 0..x.snapshots() {
        let xi = x.snapshot(i);
        let slices = subarray_slices(&xi, n);

        full.matrix *= a_scale;
        for xj in &slices {
            full.matrix += (xj * xj.adjoint()) * j_weight;
        }
        full.snapshots_absorbed += 1;
        let inv = hermitian_inverse_loaded(&full.matrix, config.delta)?;

        for (state, a) in states.iter_mut().zip(steering.iter()) {
            // reduced smoothed accumulation with the previous projection
            let a_bar = state.t_r.adjoint() * &a.entries;
            if a_bar.norm_squared() == 0.0 {
                return Err(DoaError::ConstraintInfeasible {
                    theta_deg: state.theta_deg,
                });
            }
            state.reduced_cov.matrix *= a_scale;
            for xj in &slices {
                let x_bar = state.t_r.adjoint() * xj;
                state.reduced_cov.matrix += (&x_bar * x_bar.adjoint()) * j_weight;
            }
            state.reduced_cov.snapshots_absorbed += 1;

            let reduced_inv =
                hermitian_inverse_loaded(&state.reduced_cov.matrix, config.delta)?;
            let v = &reduced_inv * &a_bar;
            let denom = (a_bar.adjoint() * &v)[(0, 0)].re;
            if !(denom.is_finite() && denom > 0.0) {
                return Err(DoaError::ConstraintInfeasible {
                    theta_deg: state.theta_deg,
                });
            }
            let f_bar = v / Complex64::new(denom, 0.0);
            // grouped exactly as in jiso_step so n = m reproduces plain JISO
            let r_inv_a = &inv * &a.entries;
            let gain = (a.entries.adjoint() * &r_inv_a)[(0, 0)];
            let w = &r_inv_a / gain;
            let f_norm_sq = f_bar.norm_squared();
            state.t_r = &w * (f_bar.adjoint() / Complex64::new(f_norm_sq, 0.0));
            state.f_bar = f_bar;
            state.a_bar = a_bar;
            state.last_denom = denom;
        }
    }

    let power: Result<Vec<f64>> = states.iter().map(|s| s.output_power()).collect();
    Ok(Spectrum::new(grid, power?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::capon_spectrum;
    use crate::covariance::sample_covariance;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pd(p: usize, rng: &mut StdRng) -> CMat {
        let raw = CMat::from_fn(p, p, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        &raw * raw.adjoint() + CMat::identity(p, p) * Complex64::new(0.05, 0.0)
    }

    fn random_cvec(p: usize, rng: &mut StdRng) -> CVec {
        CVec::from_fn(p, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn init_identity_projection_at_full_rank() {
        let a = steering_vector(70.0, 5, 0.5);
        let state = jiso_init(5, 5, &a, 0.998, 5e-4);
        assert!((state.t_r.clone() - CMat::identity(5, 5)).norm() < 1e-15);
        let expected = &a.entries / Complex64::new(5.0, 0.0);
        assert!((state.f_bar.clone() - expected).norm() < 1e-12);
    }

    #[test]
    fn init_rank_one_weight_is_unity() {
        let a = steering_vector(33.0, 6, 0.5);
        let state = jiso_init(6, 1, &a, 0.998, 5e-4);
        assert!((state.f_bar[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn init_satisfies_constraint_exactly() {
        for r in [1, 2, 4] {
            let a = steering_vector(121.0, 4, 0.5);
            let state = jiso_init(4, r, &a, 0.998, 5e-4);
            let gain = (state.f_bar.adjoint() * state.t_r.adjoint() * &a.entries)[(0, 0)];
            assert!((gain - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn step_maintains_constraint_and_composite_weight() {
        let mut rng = StdRng::seed_from_u64(99);
        for trial in 0..50 {
            let m = rng.gen_range(4..=12);
            let r = rng.gen_range(1..=m);
            let theta = rng.gen_range(1.0..179.0);
            let a = steering_vector(theta, m, 0.5);
            let mut state = jiso_init(m, r, &a, 0.998, 5e-4);
            let r_hat = random_pd(m, &mut rng);
            let inv = hermitian_inverse_loaded(&r_hat, 5e-4).unwrap();
            for _ in 0..3 {
                let x = random_cvec(m, &mut rng);
                let r_inv_a = &inv * &a.entries;
                jiso_step(&mut state, &x, &r_inv_a, &a, 0.998, 5e-4).unwrap();

                let gain =
                    (state.f_bar.adjoint() * state.t_r.adjoint() * &a.entries)[(0, 0)];
                assert!(
                    (gain - Complex64::new(1.0, 0.0)).norm() < 1e-8,
                    "constraint violated in trial {trial}"
                );

                // composite weight equals the Capon weight for the same inverse
                let capon = {
                    let g = (a.entries.adjoint() * &inv * &a.entries)[(0, 0)];
                    (&inv * &a.entries) / g
                };
                let composite = &state.t_r * &state.f_bar;
                let rel = (&composite - &capon).norm() / capon.norm();
                assert!(rel < 1e-10, "composite-weight deviation {rel}");
            }
        }
    }

    #[test]
    fn projection_is_rank_one_after_first_step() {
        let mut rng = StdRng::seed_from_u64(5);
        let m = 8;
        let a = steering_vector(88.0, m, 0.5);
        let mut state = jiso_init(m, 4, &a, 0.998, 5e-4);
        let inv = hermitian_inverse_loaded(&random_pd(m, &mut rng), 5e-4).unwrap();
        let r_inv_a = &inv * &a.entries;
        jiso_step(&mut state, &random_cvec(m, &mut rng), &r_inv_a, &a, 0.998, 5e-4).unwrap();
        let svd = state.t_r.clone().svd(false, false);
        let s = &svd.singular_values;
        assert!(s[0] > 1e-8);
        for k in 1..s.len() {
            assert!(s[k] < 1e-10 * s[0]);
        }
    }

    #[test]
    fn single_source_spectrum_peaks_at_truth() {
        let mut cfg = crate::array_model::test_config();
        cfg.m = 10;
        cfg.q = 1;
        cfg.doas_deg = vec![90.0];
        cfg.snr_db = 20.0;
        cfg.rank = 3;
        cfg.num_snapshots = 200;
        let mut hits = 0;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = crate::array_model::generate_snapshots(&cfg, &mut rng);
            let spec = jiso_spectrum(&x, &cfg).unwrap();
            let argmax = spec
                .power
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            if spec.grid[argmax] == 90.0 {
                hits += 1;
            }
        }
        assert!(hits >= 19, "peak at truth in only {hits}/20 runs");
    }

    #[test]
    fn full_rank_high_snr_matches_capon_peaks() {
        let mut cfg = crate::array_model::test_config();
        cfg.m = 8;
        cfg.q = 2;
        cfg.doas_deg = vec![60.0, 100.0];
        cfg.snr_db = 20.0;
        cfg.rank = 8;
        cfg.num_snapshots = 300;
        cfg.alpha = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let x = crate::array_model::generate_snapshots(&cfg, &mut rng);
        let jiso = jiso_spectrum(&x, &cfg).unwrap();
        let mut cap_est = sample_covariance(&x);
        cap_est.delta = cfg.delta;
        let capon = capon_spectrum(&cap_est, &cfg.grid(), cfg.d_over_lambda).unwrap();
        let top = |s: &Spectrum| {
            let peaks = crate::spectrum_search::find_peaks(s);
            let mut t: Vec<f64> = peaks.peaks.iter().take(2).map(|p| p.0).collect();
            t.sort_by(|a, b| a.partial_cmp(b).unwrap());
            t
        };
        assert_eq!(top(&jiso), top(&capon));
    }

    #[test]
    fn ss_with_full_subarray_matches_plain_jiso() {
        let mut cfg = crate::array_model::test_config();
        cfg.m = 8;
        cfg.q = 2;
        cfg.doas_deg = vec![70.0, 110.0];
        cfg.rank = 3;
        cfg.num_snapshots = 40;
        cfg.subarray_n = Some(8);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = crate::array_model::generate_snapshots(&cfg, &mut rng);
        let plain = jiso_spectrum(&x, &cfg).unwrap();
        let ss = jiso_ss_spectrum(&x, &cfg).unwrap();
        for (a, b) in plain.power.iter().zip(ss.power.iter()) {
            assert!((a - b).abs() <= 1e-10 * a.abs());
        }
    }

    #[test]
    fn ss_single_source_peaks_at_truth() {
        let mut cfg = crate::array_model::test_config();
        cfg.m = 10;
        cfg.q = 1;
        cfg.doas_deg = vec![75.0];
        cfg.snr_db = 15.0;
        cfg.rank = 3;
        cfg.num_snapshots = 150;
        cfg.subarray_n = Some(8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = crate::array_model::generate_snapshots(&cfg, &mut rng);
        let spec = jiso_ss_spectrum(&x, &cfg).unwrap();
        let argmax = spec
            .power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(spec.grid[argmax], 75.0);
    }
}
