//! Command-line front end: `spectrum` writes per-estimator spectrum CSVs for
//! one dataset, `sweep` runs the Monte Carlo resolution benchmark, `selftest`
//! checks the core algebraic invariants.

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::process::ExitCode;

use doa::array_model::{generate_snapshots, steering_vector};
use doa::bench::{
    emit_outputs, estimator_spectrum, plan_from_toml_file, run_sweep, CurveTable, EstimatorKind,
};
use doa::estimators::{jiso_init, jiso_spectrum, jiso_ss_spectrum, jiso_step};
use doa::linalg::{hermitian_inverse_loaded, CMat, CVec};

#[derive(Parser)]
#[command(name = "doa-bench", about = "DOA estimation spectra and resolution benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML config file with the scenario (plus optional sweep keys)
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSVs
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config's rng_seed / master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the trial count per sweep point
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated estimator subset
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one dataset and write a spectrum CSV per estimator
    Spectrum(CommonArgs),
    /// Run the probability-of-resolution sweep and write curves.csv
    Sweep(CommonArgs),
    /// Run the built-in invariant checks
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn apply_overrides(args: &CommonArgs, plan: &mut doa::bench::ExperimentPlan) -> doa::Result<()> {
    if let Some(seed) = args.seed {
        plan.master_seed = seed;
        plan.scenario.rng_seed = seed;
    }
    if let Some(trials) = args.trials {
        plan.trials = trials;
    }
    if let Some(names) = &args.estimators {
        plan.estimators = names
            .iter()
            .map(|s| s.parse())
            .collect::<doa::Result<Vec<EstimatorKind>>>()?;
    }
    plan.parallelism = args.workers.max(1);
    Ok(())
}

fn cmd_spectrum(args: CommonArgs) -> doa::Result<()> {
    let mut plan = plan_from_toml_file(&args.config)?;
    apply_overrides(&args, &mut plan)?;
    plan.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(plan.master_seed);
    let x = generate_snapshots(&plan.scenario, &mut rng);
    let mut spectra = Vec::new();
    for &kind in &plan.estimators {
        if matches!(kind, EstimatorKind::Esprit | EstimatorKind::EspritSs) {
            eprintln!("note: {kind} yields point estimates, skipping spectrum output");
            continue;
        }
        let spectrum = estimator_spectrum(kind, &x, &plan.scenario)?;
        spectra.push((kind.to_string(), spectrum));
    }
    let files = emit_outputs(&CurveTable { rows: vec![] }, Some(&spectra), &args.out)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_sweep(args: CommonArgs) -> doa::Result<()> {
    let mut plan = plan_from_toml_file(&args.config)?;
    apply_overrides(&args, &mut plan)?;
    let table = run_sweep(&plan)?;
    for row in &table.rows {
        println!(
            "{:>10}  N={:<5} p_res={:.3} ({}/{})",
            row.estimator.to_string(),
            row.n_snapshots,
            row.p_res(),
            row.resolved,
            row.trials
        );
    }
    let files = emit_outputs(&table, None, &args.out)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_selftest(seed: u64) -> doa::Result<()> {
    use num_complex::Complex64;
    use rand::Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta = 5e-4;
    let alpha = 0.998;
    let mut failures = 0;

    // constraint + composite-weight identities over random steps
    let mut worst_constraint = 0.0f64;
    let mut worst_composite = 0.0f64;
    for _ in 0..200 {
        let m = rng.gen_range(4..=16);
        let r = rng.gen_range(1..=m);
        let theta = rng.gen_range(1.0..179.0);
        let a = steering_vector(theta, m, 0.5);
        let raw = CMat::from_fn(m, m, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let r_hat = &raw * raw.adjoint() + CMat::identity(m, m) * Complex64::new(0.05, 0.0);
        let inv = hermitian_inverse_loaded(&r_hat, delta)?;
        let mut state = jiso_init(m, r, &a, alpha, delta);
        let x = CVec::from_fn(m, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let r_inv_a = &inv * &a.entries;
        jiso_step(&mut state, &x, &r_inv_a, &a, alpha, delta)?;

        let gain = (state.f_bar.adjoint() * state.t_r.adjoint() * &a.entries)[(0, 0)];
        worst_constraint = worst_constraint.max((gain - Complex64::new(1.0, 0.0)).norm());
        let capon = {
            let g = (a.entries.adjoint() * &r_inv_a)[(0, 0)];
            &r_inv_a / g
        };
        let composite = &state.t_r * &state.f_bar;
        worst_composite = worst_composite.max((&composite - &capon).norm() / capon.norm());
    }
    report("constraint identity (|f^H T^H a - 1| < 1e-8)", worst_constraint < 1e-8, &mut failures);
    report("composite weight equals Capon weight (1e-10)", worst_composite < 1e-10, &mut failures);

    // SS degeneracy: n = m must reproduce plain JISO
    let mut cfg = toy_scenario();
    cfg.subarray_n = Some(cfg.m);
    let mut rng2 = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let x = generate_snapshots(&cfg, &mut rng2);
    let plain = jiso_spectrum(&x, &cfg)?;
    let ss = jiso_ss_spectrum(&x, &cfg)?;
    let max_rel = plain
        .power
        .iter()
        .zip(ss.power.iter())
        .map(|(a, b)| (a - b).abs() / a.abs())
        .fold(0.0f64, f64::max);
    report("JISO-SS with n = m matches JISO (1e-10)", max_rel < 1e-10, &mut failures);

    if failures == 0 {
        println!("selftest: all checks passed");
        Ok(())
    } else {
        Err(doa::DoaError::InvalidConfig(format!(
            "selftest: {failures} check(s) failed"
        )))
    }
}

fn toy_scenario() -> doa::ScenarioConfig {
    doa::ScenarioConfig {
        m: 8,
        q: 2,
        doas_deg: vec![70.0, 110.0],
        snr_db: 10.0,
        num_snapshots: 40,
        source_model: doa::SourceModel::Gaussian,
        correlation: 0.0,
        rank: 3,
        alpha: 0.998,
        delta: 5e-4,
        grid_step_deg: 1.0,
        subarray_n: None,
        assumed_q: 2,
        rng_seed: 0,
        d_over_lambda: 0.5,
        top_k_peaks: None,
    }
}

fn report(name: &str, ok: bool, failures: &mut usize) {
    println!("{} ... {}", name, if ok { "PASS" } else { "FAIL" });
    if !ok {
        *failures += 1;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Selftest { seed } => cmd_selftest(seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
