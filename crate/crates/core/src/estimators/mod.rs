//! Spectrum and DOA estimators: Capon, MUSIC and LS-ESPRIT baselines plus
//! the reduced-rank joint iterative subspace optimization (JISO) estimator
//! and its spatial-smoothing variant.

mod capon;
mod esprit;
mod jiso;
mod music;

pub use capon::{capon_spectrum, capon_weight};
pub use esprit::esprit_doas;
pub use jiso::{jiso_init, jiso_spectrum, jiso_ss_spectrum, jiso_step, JisoDirectionState};
pub use music::music_spectrum;

/// Power-versus-angle grid produced by the scanning estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: Vec<f64>,
    pub power: Vec<f64>,
}

impl Spectrum {
    pub fn new(grid: Vec<f64>, power: Vec<f64>) -> Self {
        assert_eq!(grid.len(), power.len());
        debug_assert!(power.iter().all(|p| p.is_finite() && *p > 0.0));
        Self { grid, power }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}
