//! The `run` subcommand: problem assembly, reference solve, optimizer
//! dispatch and artifact emission.

use std::path::{Path, PathBuf};

use unixgrad::baselines::{run_baseline, BaselineConfig, BaselineKind};
use unixgrad::data::{generate_l1_planted, generate_ls, read_libsvm_path, split, SparseDataset};
use unixgrad::geometry::{diameter, BregmanGeometry, Diameter};
use unixgrad::oracles::{solve_reference, Problem};
use unixgrad::solver::{run as run_solver, RunTrace, SolverConfig};

use crate::artifacts::{
    config_hash, csv_file_name, trace_to_csv, write_manifest, Manifest, ManifestMeta,
};
use crate::config::{
    ExperimentConfig, ProblemSpec, ResolvedOptimizer, TunedKind,
};

pub const RNG_NAME: &str = "chacha8";
pub const OUTPUT_DIR_ENV: &str = "UNIXGRAD_OUT_DIR";

/// A config assembled into runnable pieces.
pub struct PreparedExperiment {
    pub problem: Problem,
    pub geometry: BregmanGeometry,
    pub diameter: Diameter,
    /// Present when the reference solve failed; runs proceed without
    /// suboptimality columns and the command exits with code 3.
    pub reference_error: Option<String>,
    /// Held-out rows for dataset problems.
    pub test_data: Option<SparseDataset>,
    pub column_scaling: Option<bool>,
}

pub fn prepare(config: &ExperimentConfig) -> anyhow::Result<PreparedExperiment> {
    let geometry = config.geometry.kind.to_core();
    let mut test_data = None;
    let mut column_scaling = None;

    let problem = match &config.problem {
        ProblemSpec::SyntheticLs(spec) => {
            let (instance, generated) = generate_ls(&spec.to_params())?;
            match &config.set {
                Some(set_spec) => {
                    let set = set_spec.build(spec.d)?;
                    Problem::least_squares(instance.a, instance.b, set)?
                }
                None => generated,
            }
        }
        ProblemSpec::PlantedL1(spec) => generate_l1_planted(&spec.to_params())?.0,
        ProblemSpec::Libsvm(spec) => {
            let mut dataset = read_libsvm_path(&spec.path)?;
            if spec.scale_features {
                dataset.scale_columns();
            }
            column_scaling = Some(spec.scale_features);
            let (train, test) = split(&dataset, spec.train_fraction, spec.split_seed)?;
            test_data = Some(test);
            let set_spec = config
                .set
                .as_ref()
                .ok_or_else(|| anyhow::anyhow!("libsvm problems need a [set] table"))?;
            let set = set_spec.build(dataset.dim)?;
            Problem::squared_hinge_svm(train, spec.lambda, set)?
        }
    };
    let mut problem = problem.with_mode(config.oracle.to_core())?;

    let diameter = match config.geometry.diameter_override {
        Some(value) => Diameter::from_value(value)?,
        None => diameter(geometry, &problem.set)?,
    };

    let mut reference_error = None;
    if problem.reference.is_none() {
        match solve_reference(&problem) {
            Ok(reference) => problem.reference = Some(reference),
            Err(e) => reference_error = Some(e.to_string()),
        }
    }

    Ok(PreparedExperiment {
        problem,
        geometry,
        diameter,
        reference_error,
        test_data,
        column_scaling,
    })
}

/// Runs one optimizer cell.
pub fn run_cell(
    prepared: &PreparedExperiment,
    resolved: &ResolvedOptimizer,
    horizon: usize,
    seed: u64,
) -> anyhow::Result<RunTrace> {
    let trace = match resolved {
        ResolvedOptimizer::Solver(variant) => {
            let mut solver_config = SolverConfig::new(
                horizon,
                prepared.geometry,
                prepared.problem.set.clone(),
                *variant,
            );
            solver_config.diameter_override = Some(prepared.diameter.value());
            solver_config.seed = seed;
            run_solver(&prepared.problem, &solver_config)?
        }
        ResolvedOptimizer::Baseline(kind) => {
            let mut baseline_config = BaselineConfig::new(*kind, horizon);
            baseline_config.seed = seed;
            run_baseline(&prepared.problem, &baseline_config)?
        }
        ResolvedOptimizer::TunedBaseline(_) => {
            anyhow::bail!("tuned baselines must be resolved before running")
        }
    };
    Ok(trace)
}

/// Grid-tunes the step of a baseline by final training objective, using the
/// first seed of the run.
pub fn tune_baseline(
    prepared: &PreparedExperiment,
    tuned: TunedKind,
    horizon: usize,
    seed: u64,
) -> anyhow::Result<BaselineKind> {
    let make = |step: f64| match tuned {
        TunedKind::Sgd => BaselineKind::Sgd { step_scale: step },
        TunedKind::AmsGrad => BaselineKind::amsgrad(step),
    };
    let step = unixgrad::baselines::tune_step(make, &prepared.problem, horizon, seed)?;
    Ok(make(step))
}

pub fn resolve_output_dir(config: &ExperimentConfig) -> PathBuf {
    config
        .run
        .output_dir
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Executes a whole experiment into `dir`. Returns true when the reference
/// solve failed (exit code 3).
pub fn execute(config: &ExperimentConfig, dir: &Path) -> anyhow::Result<bool> {
    let prepared = prepare(config)?;
    std::fs::create_dir_all(dir)?;

    let f_star = prepared.problem.reference.as_ref().map(|r| r.objective);
    for spec in &config.optimizers {
        let mut resolved = spec.resolve(prepared.diameter.value())?;
        if let ResolvedOptimizer::TunedBaseline(tuned) = resolved {
            let kind = tune_baseline(&prepared, tuned, config.run.horizon, config.run.seeds[0])?;
            println!(
                "tuned {} step by grid search: {:?}",
                spec.kind, kind
            );
            resolved = ResolvedOptimizer::Baseline(kind);
        }
        for &seed in &config.run.seeds {
            let trace = run_cell(&prepared, &resolved, config.run.horizon, seed)?;
            let csv = trace_to_csv(&trace, f_star);
            let name = csv_file_name(trace.optimizer.name(), seed);
            std::fs::write(dir.join(&name), csv)?;
            println!("wrote {}", dir.join(&name).display());
        }
    }

    let manifest = Manifest {
        meta: ManifestMeta {
            config_hash: config_hash(config)?,
            rng: RNG_NAME.to_string(),
            diameter: prepared.diameter.value(),
            smoothness: prepared.problem.constants.smoothness,
            grad_bound: prepared.problem.constants.grad_bound,
            noise: prepared.problem.constants.noise,
            f_star,
            reference_error: prepared.reference_error.clone(),
            column_scaling: prepared.column_scaling,
        },
        config: config.clone(),
    };
    write_manifest(dir, &manifest)?;
    println!("wrote {}", dir.join(crate::artifacts::MANIFEST_NAME).display());

    if let Some(reason) = &prepared.reference_error {
        eprintln!("reference solve failed: {reason}");
        return Ok(true);
    }
    Ok(false)
}
