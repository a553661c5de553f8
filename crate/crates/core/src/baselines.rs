//! Comparison optimizers: projected SGD, scalar-step AdaGrad and AMSGrad.
//!
//! All three share the problem/set interfaces of the solver and emit the
//! same trace type; their traces are evaluated at the last iterate.

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::euclidean_project;
use crate::linalg::all_finite;
use crate::oracles::Problem;
use crate::solver::{EvaluatedIterate, IterationRecord, OptimizerKind, RunTrace};
use crate::{Error, Result};

/// Baseline update rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineKind {
    /// `x_{t+1} = project(x_t - (c / sqrt(t)) g_t)`
    Sgd { step_scale: f64 },
    /// `x_{t+1} = project(x_t - (D / sqrt(max(1, sum_{i<=t} ||g_i||^2))) g_t)`
    AdaGradScalar { diameter: f64 },
    /// First/second-moment recursion with the max-accumulated second moment
    /// and a Euclidean projection of the preconditioned step.
    AmsGrad {
        step: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl BaselineKind {
    /// AMSGrad with the customary defaults `beta1 = 0.9`, `beta2 = 0.999`,
    /// `epsilon = 1e-8`.
    pub fn amsgrad(step: f64) -> Self {
        Self::AmsGrad {
            step,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn optimizer_kind(&self) -> OptimizerKind {
        match self {
            Self::Sgd { .. } => OptimizerKind::Sgd,
            Self::AdaGradScalar { .. } => OptimizerKind::AdaGradScalar,
            Self::AmsGrad { .. } => OptimizerKind::AmsGrad,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Sgd { step_scale } => *step_scale > 0.0,
            Self::AdaGradScalar { diameter } => *diameter > 0.0,
            Self::AmsGrad {
                step,
                beta1,
                beta2,
                epsilon,
            } => {
                *step > 0.0
                    && (0.0..1.0).contains(beta1)
                    && (0.0..1.0).contains(beta2)
                    && *epsilon > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid baseline hyperparameters: {self:?}")))
        }
    }
}

/// Configuration of a baseline run.
#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub horizon: usize,
    pub seed: u64,
    /// Start override; defaults to the projection of the origin.
    pub start: Option<Array1<f64>>,
}

impl BaselineConfig {
    pub fn new(kind: BaselineKind, horizon: usize) -> Self {
        Self {
            kind,
            horizon,
            seed: 0,
            start: None,
        }
    }
}

/// Runs a baseline; the trace records the last iterate of every step.
pub fn run_baseline(problem: &Problem, config: &BaselineConfig) -> Result<RunTrace> {
    if config.horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    config.kind.validate()?;
    let dim = problem.dim();
    let mut x = match &config.start {
        Some(x0) => {
            if !problem.set.contains(x0) {
                return Err(Error::Config("start point lies outside the feasible set".into()));
            }
            x0.clone()
        }
        None => euclidean_project(&problem.set, &Array1::zeros(dim)),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut sq_grad_sum = 0.0f64;
    let mut first_moment = Array1::<f64>::zeros(dim);
    let mut second_moment = Array1::<f64>::zeros(dim);
    let mut second_moment_max = Array1::<f64>::zeros(dim);

    let mut records = Vec::with_capacity(config.horizon);
    for t in 1..=config.horizon {
        let grad = problem.oracle_gradient(&mut rng, &x)?;
        if !all_finite(&grad) {
            return Err(Error::Numeric(format!("non-finite gradient at iteration {t}")));
        }
        let previous = x.clone();
        let eta = match config.kind {
            BaselineKind::Sgd { step_scale } => step_scale / (t as f64).sqrt(),
            BaselineKind::AdaGradScalar { diameter } => {
                sq_grad_sum += grad.dot(&grad);
                diameter / sq_grad_sum.max(1.0).sqrt()
            }
            BaselineKind::AmsGrad { step, .. } => step,
        };
        let update = match config.kind {
            BaselineKind::Sgd { .. } | BaselineKind::AdaGradScalar { .. } => &grad * eta,
            BaselineKind::AmsGrad {
                beta1,
                beta2,
                epsilon,
                step,
            } => {
                first_moment = &first_moment * beta1 + &(&grad * (1.0 - beta1));
                second_moment = &second_moment * beta2 + &grad.mapv(|g| (1.0 - beta2) * g * g);
                second_moment_max = ndarray::Zip::from(&second_moment_max)
                    .and(&second_moment)
                    .map_collect(|a, b| a.max(*b));
                ndarray::Zip::from(&first_moment)
                    .and(&second_moment_max)
                    .map_collect(|m, v| step * m / (v.sqrt() + epsilon))
            }
        };
        x = euclidean_project(&problem.set, &(&previous - &update));
        let objective = problem.evaluate(&x)?;
        let regret_increment = problem
            .reference
            .as_ref()
            .map(|r| (&previous - &r.x).dot(&grad));
        records.push(IterationRecord {
            t,
            alpha: 1.0,
            eta,
            x: x.clone(),
            y: x.clone(),
            x_bar: x.clone(),
            z_tilde: x.clone(),
            grad_pred: grad.clone(),
            grad,
            grad_diff_norm: 0.0,
            objective,
            regret_increment,
        });
    }

    Ok(RunTrace {
        optimizer: config.kind.optimizer_kind(),
        evaluated: EvaluatedIterate::Last,
        final_point: x,
        records,
        diameter: 0.0,
        horizon: config.horizon,
        seed: config.seed,
        valid: true,
    })
}

/// Grid used when tuning baseline step scales by final training objective.
pub const STEP_GRID: [f64; 5] = [1e-3, 1e-2, 1e-1, 1.0, 10.0];

/// Picks the grid step with the best final objective. Ties go to the
/// smaller step.
pub fn tune_step<F>(make_kind: F, problem: &Problem, horizon: usize, seed: u64) -> Result<f64>
where
    F: Fn(f64) -> BaselineKind,
{
    let mut best = (f64::INFINITY, STEP_GRID[0]);
    for &step in STEP_GRID.iter() {
        let config = BaselineConfig {
            kind: make_kind(step),
            horizon,
            seed,
            start: None,
        };
        let trace = run_baseline(problem, &config)?;
        let value = trace.final_objective().unwrap_or(f64::INFINITY);
        if value.is_finite() && value < best.0 {
            best = (value, step);
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FeasibleSet;
    use ndarray::{array, Array2};

    fn flat_problem() -> Problem {
        // f = 1/(2n) || 0 x - 0 ||^2: gradients vanish everywhere
        let a = Array2::zeros((2, 2));
        let b = Array1::zeros(2);
        let set = FeasibleSet::centered_ball(2, 1.0).unwrap();
        Problem::least_squares(a, b, set).unwrap()
    }

    fn quadratic_ball() -> Problem {
        let a = array![[1.0, 0.0], [0.0, 1.0]];
        let b = array![2.0, 0.0];
        let set = FeasibleSet::centered_ball(2, 1.0).unwrap();
        Problem::least_squares(a, b, set).unwrap()
    }

    #[test]
    fn zero_gradients_freeze_all_methods() {
        let problem = flat_problem();
        for kind in [
            BaselineKind::Sgd { step_scale: 1.0 },
            BaselineKind::AdaGradScalar { diameter: 1.0 },
            BaselineKind::amsgrad(0.1),
        ] {
            let mut config = BaselineConfig::new(kind, 10);
            config.start = Some(array![0.5, -0.25]);
            let trace = run_baseline(&problem, &config).unwrap();
            for record in &trace.records {
                assert_eq!(record.x, array![0.5, -0.25]);
            }
        }
    }

    #[test]
    fn adagrad_hand_trace_single_step() {
        // g_1 = (1, 0) at the origin: x_1 = project(-(1/sqrt(1)) (1, 0))
        let a = array![[2.0f64.sqrt(), 0.0], [0.0, 0.0]];
        let b = array![2.0f64.sqrt(), 0.0]; // gradient at origin: (-1, 0)
        let set = FeasibleSet::centered_ball(2, 1.0).unwrap();
        let problem = Problem::least_squares(a, b, set).unwrap();
        let g0 = problem.gradient(&array![0.0, 0.0]).unwrap();
        assert!((g0[0] + 1.0).abs() < 1e-15);

        let config = BaselineConfig::new(BaselineKind::AdaGradScalar { diameter: 1.0 }, 1);
        let trace = run_baseline(&problem, &config).unwrap();
        assert!((trace.records[0].x[0] - 1.0).abs() < 1e-15);
        assert_eq!(trace.records[0].x[1], 0.0);
    }

    #[test]
    fn amsgrad_with_zero_betas_is_normalized_step() {
        let problem = quadratic_ball();
        let kind = BaselineKind::AmsGrad {
            step: 0.05,
            beta1: 0.0,
            beta2: 0.0,
            epsilon: 1e-8,
        };
        let config = BaselineConfig::new(kind, 3);
        let trace = run_baseline(&problem, &config).unwrap();
        // replay: x_{t+1} = project(x_t - step * g / (|g| + eps)), elementwise,
        // with the max rule keeping the largest |g| seen per coordinate
        let mut x = euclidean_project(&problem.set, &Array1::zeros(2));
        let mut vmax: Array1<f64> = Array1::zeros(2);
        for record in &trace.records {
            let g = problem.gradient(&x).unwrap();
            vmax = ndarray::Zip::from(&vmax).and(&g).map_collect(|a, b| a.max(b * b));
            let step = ndarray::Zip::from(&g)
                .and(&vmax)
                .map_collect(|gi, vi| 0.05 * gi / (vi.sqrt() + 1e-8));
            x = euclidean_project(&problem.set, &(&x - &step));
            assert!((&x - &record.x).iter().all(|d| d.abs() < 1e-12));
        }
    }

    #[test]
    fn amsgrad_second_moment_is_monotone() {
        let problem = quadratic_ball();
        let config = BaselineConfig::new(BaselineKind::amsgrad(0.1), 50);
        let trace = run_baseline(&problem, &config).unwrap();
        // replay the recursion to observe the max accumulator directly
        let mut x = euclidean_project(&problem.set, &Array1::zeros(2));
        let mut m = Array1::<f64>::zeros(2);
        let mut v = Array1::<f64>::zeros(2);
        let mut vmax = Array1::<f64>::zeros(2);
        for record in &trace.records {
            let g = problem.gradient(&x).unwrap();
            m = &m * 0.9 + &(&g * 0.1);
            v = &v * 0.999 + &g.mapv(|gi| 0.001 * gi * gi);
            let prev = vmax.clone();
            vmax = ndarray::Zip::from(&vmax).and(&v).map_collect(|a, b| a.max(*b));
            assert!(vmax.iter().zip(prev.iter()).all(|(now, was)| now >= was));
            let step = ndarray::Zip::from(&m)
                .and(&vmax)
                .map_collect(|mi, vi| 0.1 * mi / (vi.sqrt() + 1e-8));
            x = euclidean_project(&problem.set, &(&x - &step));
            assert!((&x - &record.x).iter().all(|d| d.abs() < 1e-12));
        }
    }

    #[test]
    fn iterates_stay_feasible() {
        let problem = quadratic_ball();
        for kind in [
            BaselineKind::Sgd { step_scale: 10.0 },
            BaselineKind::AdaGradScalar { diameter: 5.0 },
            BaselineKind::amsgrad(1.0),
        ] {
            let trace = run_baseline(&problem, &BaselineConfig::new(kind, 100)).unwrap();
            for record in &trace.records {
                assert!(problem.set.contains(&record.x));
            }
        }
    }

    #[test]
    fn traces_are_reproducible() {
        let problem = quadratic_ball()
            .with_mode(crate::oracles::OracleMode::AdditiveNoise { sigma: 0.5 })
            .unwrap();
        let mut config = BaselineConfig::new(BaselineKind::amsgrad(0.1), 64);
        config.seed = 9;
        let a = run_baseline(&problem, &config).unwrap();
        let b = run_baseline(&problem, &config).unwrap();
        for (ra, rb) in a.records.iter().zip(b.records.iter()) {
            assert_eq!(ra.x[0].to_bits(), rb.x[0].to_bits());
            assert_eq!(ra.x[1].to_bits(), rb.x[1].to_bits());
        }
    }

    #[test]
    fn hyperparameter_validation() {
        let problem = quadratic_ball();
        for kind in [
            BaselineKind::Sgd { step_scale: 0.0 },
            BaselineKind::AdaGradScalar { diameter: -1.0 },
            BaselineKind::AmsGrad {
                step: 0.1,
                beta1: 1.0,
                beta2: 0.999,
                epsilon: 1e-8,
            },
        ] {
            assert!(run_baseline(&problem, &BaselineConfig::new(kind, 4)).is_err());
        }
    }

    #[test]
    fn tuning_prefers_a_converging_step() {
        let problem = quadratic_ball();
        let step = tune_step(
            |s| BaselineKind::Sgd { step_scale: s },
            &problem,
            200,
            0,
        )
        .unwrap();
        assert!(STEP_GRID.contains(&step));
        // the chosen step must beat the worst grid entry
        let chosen = run_baseline(
            &problem,
            &BaselineConfig::new(BaselineKind::Sgd { step_scale: step }, 200),
        )
        .unwrap()
        .final_objective()
        .unwrap();
        let tiny = run_baseline(
            &problem,
            &BaselineConfig::new(BaselineKind::Sgd { step_scale: 1e-3 }, 200),
        )
        .unwrap()
        .final_objective()
        .unwrap();
        assert!(chosen <= tiny);
    }
}
