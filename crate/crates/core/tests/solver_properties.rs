//! Run-level property suites: structural invariants, the regret-to-rate
//! conversion, the adaptive-sequence identity and variant semantics.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unixgrad::diagnostics::{check_structural_invariants, lemma1_check, lemma2_check};
use unixgrad::geometry::{BregmanGeometry, FeasibleSet};
use unixgrad::oracles::{OracleMode, Problem};
use unixgrad::solver::{run, SolverConfig, SolverVariant};

fn normal_vec(rng: &mut ChaCha8Rng, len: usize, sigma: f64) -> Array1<f64> {
    use rand_distr::Distribution;
    Array1::from_iter((0..len).map(|_| {
        let z: f64 = rand_distr::StandardNormal.sample(rng);
        sigma * z
    }))
}

fn random_ls(rng: &mut ChaCha8Rng, n: usize, d: usize, radius: f64) -> Problem {
    let entries = normal_vec(rng, n * d, 1.0);
    let a = Array2::from_shape_vec((n, d), entries.to_vec()).unwrap();
    let b = normal_vec(rng, n, 1.0);
    let set = FeasibleSet::centered_ball(d, radius).unwrap();
    Problem::least_squares(a, b, set).unwrap()
}

#[test]
fn structural_invariants_across_variants_and_geometries() {
    let mut rng = ChaCha8Rng::seed_from_u64(301);

    // Euclidean ball, all variants, deterministic and stochastic
    for (i, variant) in [
        SolverVariant::UniXGrad,
        SolverVariant::MirrorProx,
        SolverVariant::OptimisticMD,
    ]
    .into_iter()
    .enumerate()
    {
        let problem = random_ls(&mut rng, 30, 6, 1.5);
        let config = SolverConfig::new(
            128,
            BregmanGeometry::Euclidean,
            problem.set.clone(),
            variant,
        );
        let trace = run(&problem, &config).unwrap();
        check_structural_invariants(&trace, &problem.set).unwrap();

        let stochastic = problem
            .clone()
            .with_mode(OracleMode::MiniBatch { batch_size: 5 })
            .unwrap();
        let mut config = config;
        config.seed = 77 + i as u64;
        let trace = run(&stochastic, &config).unwrap();
        check_structural_invariants(&trace, &stochastic.set).unwrap();
    }

    // entropic geometry over the floored simplex
    let d = 8;
    let entries = normal_vec(&mut rng, 20 * d, 1.0);
    let a = Array2::from_shape_vec((20, d), entries.to_vec()).unwrap();
    let b = normal_vec(&mut rng, 20, 1.0);
    let set = FeasibleSet::simplex(d, 1e-6).unwrap();
    let problem = Problem::least_squares(a, b, set.clone()).unwrap();
    let config = SolverConfig::new(
        200,
        BregmanGeometry::NegativeEntropy,
        set.clone(),
        SolverVariant::UniXGrad,
    );
    let trace = run(&problem, &config).unwrap();
    check_structural_invariants(&trace, &set).unwrap();
}

#[test]
fn weight_sum_is_triangular_for_unixgrad() {
    let mut rng = ChaCha8Rng::seed_from_u64(302);
    let problem = random_ls(&mut rng, 10, 3, 1.0);
    let config = SolverConfig::new(
        64,
        BregmanGeometry::Euclidean,
        problem.set.clone(),
        SolverVariant::UniXGrad,
    );
    let trace = run(&problem, &config).unwrap();
    // alpha_t = t, so the prefix weight sums are exactly t (t + 1) / 2;
    // replay them from the recorded alphas
    let mut acc = 0.0;
    for r in &trace.records {
        assert_eq!(r.alpha, r.t as f64);
        acc += r.alpha;
        assert_eq!(acc, (r.t * (r.t + 1)) as f64 / 2.0);
    }
}

#[test]
fn grad_diff_accumulator_is_nondecreasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let problem = random_ls(&mut rng, 20, 4, 1.0);
    let config = SolverConfig::new(
        100,
        BregmanGeometry::Euclidean,
        problem.set.clone(),
        SolverVariant::UniXGrad,
    );
    let trace = run(&problem, &config).unwrap();
    let mut prev = 0.0;
    for t in 1..=trace.horizon {
        let g2 = trace.grad_diff_sq_prefix(t);
        assert!(g2 >= prev);
        prev = g2;
    }
}

#[test]
fn regret_conversion_on_random_problems_and_references() {
    // the conversion inequality must hold for arbitrary feasible reference
    // points, not just the minimizer
    let mut rng = ChaCha8Rng::seed_from_u64(304);
    for trial in 0..10 {
        let d = rng.random_range(2..12);
        let radius = 1.0 + rng.random::<f64>();
        let problem = random_ls(&mut rng, 25, d, radius);
        let mut config = SolverConfig::new(
            50,
            BregmanGeometry::Euclidean,
            problem.set.clone(),
            SolverVariant::UniXGrad,
        );
        config.seed = trial;
        let trace = run(&problem, &config).unwrap();
        for _ in 0..50 {
            let x_ref = problem.set.sample(&mut rng);
            let (ok, margin) = lemma1_check(&trace, &x_ref, &problem).unwrap();
            assert!(ok, "conversion violated by {margin:e} on trial {trial}");
        }
    }
}

#[test]
fn adaptive_sequence_identity_random_and_adversarial() {
    let mut rng = ChaCha8Rng::seed_from_u64(305);
    // 10^3 random nonnegative sequences
    for _ in 0..1_000 {
        let len = rng.random_range(1..=100);
        let seq: Vec<f64> = (0..len).map(|_| 10.0 * rng.random::<f64>()).collect();
        assert!(lemma2_check(&seq).unwrap());
    }
    // adversarial families
    assert!(lemma2_check(&vec![0.0; 50]).unwrap());
    let mut spike = vec![0.0; 20];
    spike[7] = 1e8;
    assert!(lemma2_check(&spike).unwrap());
    let geometric: Vec<f64> = (0..40).map(|i| 2.0f64.powi(i)).collect();
    assert!(lemma2_check(&geometric).unwrap());
    // weighted gradient-difference style growth: alpha_t^2 * bounded norms
    let weighted: Vec<f64> = (1..=100)
        .map(|t| (t * t) as f64 * (1.0 + (t as f64).sin()).powi(2))
        .collect();
    assert!(lemma2_check(&weighted).unwrap());
}

#[test]
fn horizon_does_not_change_the_trajectory() {
    // iterates have no horizon dependence, so a prefix of a long run equals
    // a short run
    let mut rng = ChaCha8Rng::seed_from_u64(306);
    let problem = random_ls(&mut rng, 15, 4, 1.0);
    let mk = |t| {
        SolverConfig::new(
            t,
            BregmanGeometry::Euclidean,
            problem.set.clone(),
            SolverVariant::UniXGrad,
        )
    };
    let short = run(&problem, &mk(10)).unwrap();
    let long = run(&problem, &mk(40)).unwrap();
    for (s, l) in short.records.iter().zip(long.records.iter()) {
        assert_eq!(s.x[0].to_bits(), l.x[0].to_bits());
        assert_eq!(s.eta.to_bits(), l.eta.to_bits());
    }
}

#[test]
fn unixgrad_converges_on_boundary_constrained_quadratic() {
    let mut rng = ChaCha8Rng::seed_from_u64(307);
    let d = 6;
    let entries = normal_vec(&mut rng, 40 * d, 1.0);
    let a = Array2::from_shape_vec((40, d), entries.to_vec()).unwrap();
    let x_far = Array1::from_elem(d, 2.0);
    let b = a.dot(&x_far); // optimum far outside the unit ball
    let set = FeasibleSet::centered_ball(d, 1.0).unwrap();
    let problem = Problem::least_squares(a, b, set.clone()).unwrap();
    let reference = unixgrad::oracles::solve_reference(&problem).unwrap();
    let problem = problem.with_reference(reference.clone());

    let config = SolverConfig::new(
        2000,
        BregmanGeometry::Euclidean,
        set,
        SolverVariant::UniXGrad,
    );
    let trace = run(&problem, &config).unwrap();
    let gap = trace.records.last().unwrap().objective - reference.objective;
    assert!(gap >= -1e-9, "beat the reference solver: gap {gap:e}");
    assert!(gap < 1e-6, "insufficient convergence: gap {gap:e}");
}

#[test]
fn stochastic_gradients_are_fresh_between_prox_calls() {
    let mut rng = ChaCha8Rng::seed_from_u64(308);
    let problem = random_ls(&mut rng, 30, 5, 1.0)
        .with_mode(OracleMode::MiniBatch { batch_size: 2 })
        .unwrap();
    let config = SolverConfig::new(
        20,
        BregmanGeometry::Euclidean,
        problem.set.clone(),
        SolverVariant::UniXGrad,
    );
    let trace = run(&problem, &config).unwrap();
    // with batch 2 of 30 rows, guess and observation almost surely differ
    let distinct = trace
        .records
        .iter()
        .filter(|r| r.grad_diff_norm > 0.0)
        .count();
    assert!(distinct >= 15);
}
