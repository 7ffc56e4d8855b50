//! Monte Carlo harness: paired trials over a snapshot sweep, aggregated into
//! probability-of-resolution curves with CSV output.
//!
//! Per-trial seeds are derived from (master_seed, sweep index, trial index)
//! with a counter-based mix, so the schedule of a parallel run can never
//! change the numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::array_model::{generate_snapshots, ScenarioConfig};
use crate::covariance::{sample_covariance, smoothed_sample_covariance};
use crate::estimators::{
    capon_spectrum, esprit_doas, jiso_spectrum, jiso_ss_spectrum, music_spectrum, Spectrum,
};
use crate::spectrum_search::{
    esprit_resolution_check, find_peaks, resolution_check_top_k, ResolutionResult,
};
use crate::{DoaError, Result};

/// Resolution tolerance in degrees.
pub const RESOLUTION_TOL_DEG: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EstimatorKind {
    Capon,
    Music,
    Esprit,
    Jiso,
    CaponSs,
    MusicSs,
    EspritSs,
    JisoSs,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 8] = [
        EstimatorKind::Capon,
        EstimatorKind::Music,
        EstimatorKind::Esprit,
        EstimatorKind::Jiso,
        EstimatorKind::CaponSs,
        EstimatorKind::MusicSs,
        EstimatorKind::EspritSs,
        EstimatorKind::JisoSs,
    ];

    pub fn is_ss(self) -> bool {
        matches!(
            self,
            EstimatorKind::CaponSs
                | EstimatorKind::MusicSs
                | EstimatorKind::EspritSs
                | EstimatorKind::JisoSs
        )
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            EstimatorKind::Capon => "capon",
            EstimatorKind::Music => "music",
            EstimatorKind::Esprit => "esprit",
            EstimatorKind::Jiso => "jiso",
            EstimatorKind::CaponSs => "capon_ss",
            EstimatorKind::MusicSs => "music_ss",
            EstimatorKind::EspritSs => "esprit_ss",
            EstimatorKind::JisoSs => "jiso_ss",
        };
        f.write_str(name)
    }
}

impl FromStr for EstimatorKind {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "capon" => Ok(EstimatorKind::Capon),
            "music" => Ok(EstimatorKind::Music),
            "esprit" => Ok(EstimatorKind::Esprit),
            "jiso" => Ok(EstimatorKind::Jiso),
            "capon_ss" => Ok(EstimatorKind::CaponSs),
            "music_ss" => Ok(EstimatorKind::MusicSs),
            "esprit_ss" => Ok(EstimatorKind::EspritSs),
            "jiso_ss" => Ok(EstimatorKind::JisoSs),
            other => Err(DoaError::InvalidConfig(format!(
                "unknown estimator '{other}'"
            ))),
        }
    }
}

/// One full experiment: scenario, estimators, snapshot sweep, trial count.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub scenario: ScenarioConfig,
    pub estimators: Vec<EstimatorKind>,
    pub snapshot_sweep: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub parallelism: usize,
}

pub fn default_snapshot_sweep() -> Vec<usize> {
    vec![10, 20, 30, 50, 70, 100, 150, 200, 300]
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.trials == 0 {
            return Err(DoaError::InvalidConfig("trials must be >= 1".into()));
        }
        if self.snapshot_sweep.is_empty() {
            return Err(DoaError::InvalidConfig("empty snapshot sweep".into()));
        }
        if !self.snapshot_sweep.windows(2).all(|w| w[0] < w[1]) {
            return Err(DoaError::InvalidConfig(
                "snapshot sweep must be positive ascending".into(),
            ));
        }
        if self.snapshot_sweep[0] == 0 {
            return Err(DoaError::InvalidConfig("snapshot counts must be positive".into()));
        }
        if self.estimators.is_empty() && self.trials > 0 {
            // allowed: produces a header-only curves.csv
        }
        if self.estimators.iter().any(|e| e.is_ss()) && self.scenario.subarray_n.is_none() {
            return Err(DoaError::InvalidConfig(
                "SS estimators requested but subarray_n is unset".into(),
            ));
        }
        Ok(())
    }
}

/// Probability-of-resolution table, one row per (estimator, N).
#[derive(Debug, Clone)]
pub struct CurveTable {
    pub rows: Vec<CurveRow>,
}

#[derive(Debug, Clone)]
pub struct CurveRow {
    pub estimator: EstimatorKind,
    pub n_snapshots: usize,
    pub resolved: usize,
    pub trials: usize,
}

impl CurveRow {
    pub fn p_res(&self) -> f64 {
        self.resolved as f64 / self.trials as f64
    }
}

impl CurveTable {
    pub fn p_res(&self, estimator: EstimatorKind, n: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.n_snapshots == n)
            .map(|r| r.p_res())
    }
}

/// splitmix64 finalizer; the counter-based seed derivation below relies on
/// its bijectivity.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministic per-trial seed from (master, sweep index, trial index).
pub fn derive_trial_seed(master_seed: u64, n_index: usize, trial_index: usize) -> u64 {
    let counter = (n_index as u64) << 32 | trial_index as u64;
    mix64(master_seed ^ mix64(counter))
}

/// Verdict of one estimator on one trial.
#[derive(Debug, Clone)]
pub struct TrialVerdict {
    pub resolved: bool,
    pub result: Option<ResolutionResult>,
    pub diagnostic: Option<String>,
}

fn verdict_from(result: ResolutionResult) -> TrialVerdict {
    TrialVerdict {
        resolved: result.resolved,
        result: Some(result),
        diagnostic: None,
    }
}

fn verdict_failure(err: DoaError) -> TrialVerdict {
    TrialVerdict {
        resolved: false,
        result: None,
        diagnostic: Some(err.to_string()),
    }
}

/// Spectrum or point estimates of one estimator on one snapshot matrix.
pub fn estimator_spectrum(
    kind: EstimatorKind,
    x: &crate::array_model::SnapshotMatrix,
    scenario: &ScenarioConfig,
) -> Result<Spectrum> {
    let grid = scenario.grid();
    match kind {
        EstimatorKind::Capon => {
            let mut est = sample_covariance(x);
            est.delta = scenario.delta;
            capon_spectrum(&est, &grid, scenario.d_over_lambda)
        }
        EstimatorKind::Music => {
            let est = sample_covariance(x);
            music_spectrum(&est, scenario.assumed_q, &grid, scenario.d_over_lambda)
        }
        EstimatorKind::Jiso => jiso_spectrum(x, scenario),
        EstimatorKind::CaponSs => {
            let n = require_subarray(scenario)?;
            let mut est = smoothed_sample_covariance(x, n);
            est.delta = scenario.delta;
            capon_spectrum(&est, &grid, scenario.d_over_lambda)
        }
        EstimatorKind::MusicSs => {
            let n = require_subarray(scenario)?;
            let est = smoothed_sample_covariance(x, n);
            music_spectrum(&est, scenario.assumed_q, &grid, scenario.d_over_lambda)
        }
        EstimatorKind::JisoSs => jiso_ss_spectrum(x, scenario),
        EstimatorKind::Esprit | EstimatorKind::EspritSs => Err(DoaError::InvalidConfig(
            "ESPRIT yields point estimates, not a spectrum".into(),
        )),
    }
}

fn require_subarray(scenario: &ScenarioConfig) -> Result<usize> {
    scenario
        .subarray_n
        .ok_or_else(|| DoaError::InvalidConfig("subarray_n required for SS estimator".into()))
}

fn run_estimator(
    kind: EstimatorKind,
    x: &crate::array_model::SnapshotMatrix,
    scenario: &ScenarioConfig,
) -> Result<ResolutionResult> {
    match kind {
        EstimatorKind::Esprit => {
            let est = sample_covariance(x);
            let doas = esprit_doas(&est, scenario.assumed_q, scenario.d_over_lambda)?;
            Ok(esprit_resolution_check(
                &doas,
                &scenario.doas_deg,
                RESOLUTION_TOL_DEG,
            ))
        }
        EstimatorKind::EspritSs => {
            let n = require_subarray(scenario)?;
            let est = smoothed_sample_covariance(x, n);
            let doas = esprit_doas(&est, scenario.assumed_q, scenario.d_over_lambda)?;
            Ok(esprit_resolution_check(
                &doas,
                &scenario.doas_deg,
                RESOLUTION_TOL_DEG,
            ))
        }
        _ => {
            let spectrum = estimator_spectrum(kind, x, scenario)?;
            let peaks = find_peaks(&spectrum);
            Ok(resolution_check_top_k(
                &peaks,
                &scenario.doas_deg,
                RESOLUTION_TOL_DEG,
                scenario.top_k_peaks,
            ))
        }
    }
}

/// One Monte Carlo trial: a single snapshot matrix shared by every requested
/// estimator. Estimator failures become unresolved verdicts, not aborts.
pub fn run_trial(
    scenario: &ScenarioConfig,
    estimators: &[EstimatorKind],
    trial_seed: u64,
) -> BTreeMap<EstimatorKind, TrialVerdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let x = generate_snapshots(scenario, &mut rng);
    estimators
        .iter()
        .map(|&kind| {
            let verdict = match run_estimator(kind, &x, scenario) {
                Ok(result) => verdict_from(result),
                Err(err) => verdict_failure(err),
            };
            (kind, verdict)
        })
        .collect()
}

/// Full sweep: for every snapshot count and estimator, the fraction of
/// resolved trials. Byte-identical output regardless of worker count.
pub fn run_sweep(plan: &ExperimentPlan) -> Result<CurveTable> {
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.parallelism.max(1))
        .build()
        .map_err(|e| DoaError::InvalidConfig(format!("thread pool: {e}")))?;

    let mut rows = Vec::new();
    for (n_index, &n) in plan.snapshot_sweep.iter().enumerate() {
        let mut scenario = plan.scenario.clone();
        scenario.num_snapshots = n;
        let outcomes: Vec<BTreeMap<EstimatorKind, TrialVerdict>> = pool.install(|| {
            use rayon::prelude::*;
            (0..plan.trials)
                .into_par_iter()
                .map(|trial| {
                    let seed = derive_trial_seed(plan.master_seed, n_index, trial);
                    run_trial(&scenario, &plan.estimators, seed)
                })
                .collect()
        });
        // estimator failures count as unresolved; surface a few diagnostics
        let mut reported = std::collections::BTreeSet::new();
        for outcome in &outcomes {
            for (kind, verdict) in outcome {
                if let Some(diag) = &verdict.diagnostic {
                    if reported.len() < 5 && reported.insert(format!("{kind}: {diag}")) {
                        eprintln!("warning: N={n} {kind} failed: {diag}");
                    }
                }
            }
        }
        let counts: Vec<BTreeMap<EstimatorKind, bool>> = outcomes
            .into_iter()
            .map(|o| o.into_iter().map(|(k, v)| (k, v.resolved)).collect())
            .collect();
        for &estimator in &plan.estimators {
            let resolved = counts.iter().filter(|c| c[&estimator]).count();
            rows.push(CurveRow {
                estimator,
                n_snapshots: n,
                resolved,
                trials: plan.trials,
            });
        }
    }
    // rows grouped per estimator, N ascending, matching the plan order
    let order: Vec<EstimatorKind> = plan.estimators.clone();
    rows.sort_by_key(|r| {
        (
            order.iter().position(|&e| e == r.estimator).unwrap(),
            r.n_snapshots,
        )
    });
    Ok(CurveTable { rows })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DoaError + '_ {
    move |source| DoaError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write `curves.csv`, optional per-estimator spectrum CSVs (power in dB
/// normalized to a 0 dB maximum) and a gnuplot script referencing them.
pub fn emit_outputs(
    table: &CurveTable,
    spectra: Option<&[(String, Spectrum)]>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();

    let curves_path = out_dir.join("curves.csv");
    {
        let mut text = String::from("estimator,n_snapshots,resolved,trials,p_res\n");
        for row in &table.rows {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                row.estimator,
                row.n_snapshots,
                row.resolved,
                row.trials,
                row.p_res()
            ));
        }
        let mut f = std::fs::File::create(&curves_path).map_err(io_err(&curves_path))?;
        f.write_all(text.as_bytes()).map_err(io_err(&curves_path))?;
    }
    written.push(curves_path);

    if let Some(spectra) = spectra {
        for (name, spectrum) in spectra {
            let path = out_dir.join(format!("spectrum_{name}.csv"));
            let max = spectrum.power.iter().cloned().fold(f64::MIN, f64::max);
            let mut text = String::from("theta_deg,power_db\n");
            for (theta, p) in spectrum.grid.iter().zip(spectrum.power.iter()) {
                text.push_str(&format!("{},{}\n", theta, 10.0 * (p / max).log10()));
            }
            let mut f = std::fs::File::create(&path).map_err(io_err(&path))?;
            f.write_all(text.as_bytes()).map_err(io_err(&path))?;
            written.push(path);
        }
    }

    let plot_path = out_dir.join("plot.gp");
    {
        let mut text = String::new();
        text.push_str("# gnuplot script for the emitted CSVs\n");
        text.push_str("set datafile separator ','\n");
        text.push_str("set key bottom right\n");
        text.push_str("set xlabel 'number of snapshots'\n");
        text.push_str("set ylabel 'probability of resolution'\n");
        text.push_str("set yrange [0:1.05]\n");
        let estimators: Vec<String> = {
            let mut seen = Vec::new();
            for row in &table.rows {
                let name = row.estimator.to_string();
                if !seen.contains(&name) {
                    seen.push(name);
                }
            }
            seen
        };
        if !estimators.is_empty() {
            text.push_str("plot ");
            let parts: Vec<String> = estimators
                .iter()
                .map(|name| {
                    format!(
                        "'curves.csv' using 2:(strcol(1) eq '{name}' ? $5 : 1/0) with linespoints title '{name}'"
                    )
                })
                .collect();
            text.push_str(&parts.join(", \\\n     "));
            text.push('\n');
        }
        let mut f = std::fs::File::create(&plot_path).map_err(io_err(&plot_path))?;
        f.write_all(text.as_bytes()).map_err(io_err(&plot_path))?;
    }
    written.push(plot_path);
    Ok(written)
}

/// Parse a benchmark config file: the scenario keys plus optional
/// `snapshot_sweep`, `trials` and `estimators` lists.
pub fn plan_from_toml_str(text: &str) -> Result<ExperimentPlan> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| DoaError::InvalidConfig(e.to_string()))?;

    let snapshot_sweep = match table.remove("snapshot_sweep") {
        Some(v) => v
            .try_into::<Vec<usize>>()
            .map_err(|e| DoaError::InvalidConfig(format!("snapshot_sweep: {e}")))?,
        None => default_snapshot_sweep(),
    };
    let trials = match table.remove("trials") {
        Some(v) => v
            .try_into::<usize>()
            .map_err(|e| DoaError::InvalidConfig(format!("trials: {e}")))?,
        None => 200,
    };
    let estimators = match table.remove("estimators") {
        Some(v) => {
            let names: Vec<String> = v
                .try_into()
                .map_err(|e| DoaError::InvalidConfig(format!("estimators: {e}")))?;
            names
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<_>>>()?
        }
        None => vec![
            EstimatorKind::Capon,
            EstimatorKind::Music,
            EstimatorKind::Esprit,
            EstimatorKind::Jiso,
        ],
    };

    let scenario_text =
        toml::to_string(&toml::Value::Table(table)).expect("re-serialize scenario keys");
    let scenario = ScenarioConfig::from_toml_str(&scenario_text)?;
    let master_seed = scenario.rng_seed;
    Ok(ExperimentPlan {
        scenario,
        estimators,
        snapshot_sweep,
        trials,
        master_seed,
        parallelism: 1,
    })
}

pub fn plan_from_toml_file(path: &Path) -> Result<ExperimentPlan> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    plan_from_toml_str(&text)
}
