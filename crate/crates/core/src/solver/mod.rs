//! The two-prox-per-iteration solver template and its instantiations.
//!
//! Each iteration anchors two generalized projections at the previous
//! `y`-iterate: the first uses a gradient guess `M_t`, the second the
//! gradient `g_t` observed after the first step. The variants differ in
//! where gradients are queried and how iterations are weighted:
//!
//! - `UniXGrad`: `M_t` and `g_t` at the weighted running averages
//!   (extrapolation point and average iterate), weights `alpha_t = t`, and
//!   the adaptive lag-one-behind step size.
//! - `MirrorProx`: `M_t` at `y_{t-1}`, `g_t` at `x_t`, unit weights.
//! - `OptimisticMD`: `M_t` is the previous `g`, `g_t` at `x_t`, unit
//!   weights.

use ndarray::Array1;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{diameter, euclidean_project, prox_step, BregmanGeometry, Diameter, FeasibleSet};
use crate::linalg::{all_finite, KahanSum};
use crate::oracles::Problem;
use crate::{Error, Result};

mod trace;
pub use trace::{EvaluatedIterate, IterationRecord, OptimizerKind, RunTrace};

/// Solver template instantiations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverVariant {
    UniXGrad,
    MirrorProx,
    OptimisticMD,
}

impl SolverVariant {
    pub fn optimizer_kind(&self) -> OptimizerKind {
        match self {
            Self::UniXGrad => OptimizerKind::UniXGrad,
            Self::MirrorProx => OptimizerKind::MirrorProx,
            Self::OptimisticMD => OptimizerKind::OptimisticMd,
        }
    }
}

/// Configuration of a solver run.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Number of iterations `T >= 1`.
    pub horizon: usize,
    pub geometry: BregmanGeometry,
    pub set: FeasibleSet,
    /// Explicit Bregman diameter, required when no closed form exists.
    pub diameter_override: Option<f64>,
    pub variant: SolverVariant,
    /// Seed of the per-run oracle randomness stream.
    pub seed: u64,
    /// Start point override; defaults to the Euclidean projection of the
    /// origin onto the set.
    pub start: Option<Array1<f64>>,
}

impl SolverConfig {
    pub fn new(
        horizon: usize,
        geometry: BregmanGeometry,
        set: FeasibleSet,
        variant: SolverVariant,
    ) -> Self {
        Self {
            horizon,
            geometry,
            set,
            diameter_override: None,
            variant,
            seed: 0,
            start: None,
        }
    }

    /// Diameter from the override or the closed form.
    pub fn resolve_diameter(&self) -> Result<Diameter> {
        match self.diameter_override {
            Some(d) => {
                if !(d > 0.0) {
                    return Err(Error::Config(format!(
                        "diameter override must be positive, got {d}"
                    )));
                }
                Diameter::from_value(d)
            }
            None => diameter(self.geometry, &self.set),
        }
    }

    fn start_point(&self) -> Result<Array1<f64>> {
        match &self.start {
            Some(y0) => {
                if !self.set.contains(y0) {
                    return Err(Error::Config("start point lies outside the feasible set".into()));
                }
                Ok(y0.clone())
            }
            None => Ok(euclidean_project(&self.set, &Array1::zeros(self.set.dim()))),
        }
    }
}

/// Iteration weight `alpha_t = t` (with `alpha_0 = 0`).
pub fn weight(t: usize) -> f64 {
    t as f64
}

/// Lag-one-behind adaptive step size
/// `eta_t = 2 D / sqrt(1 + sum_{i<t} alpha_i^2 ||g_i - M_i||_*^2)`.
///
/// The prefix excludes the current iteration, so `eta_t` is known before the
/// iteration begins; it is nonincreasing as the accumulator grows.
pub fn learning_rate(diameter: f64, grad_diff_sq_prefix: f64) -> f64 {
    2.0 * diameter / (1.0 + grad_diff_sq_prefix).sqrt()
}

/// Running state of a solver: everything iteration `t + 1` needs after
/// iterations `1..=t` have completed.
#[derive(Debug, Clone)]
pub struct SolverState {
    /// Completed iterations.
    t: usize,
    /// `y_{t-1}`, the anchor of both prox steps.
    y_prev: Array1<f64>,
    /// `A_t = sum_{i<=t} alpha_i`.
    weight_sum: f64,
    /// `S_t = sum_{i<=t} alpha_i x_i`.
    weighted_iterate_sum: Array1<f64>,
    /// `sum_{i<=t} alpha_i^2 ||g_i - M_i||_*^2`, compensated.
    grad_diff_sq: KahanSum,
    /// Average iterate `xbar_t`.
    x_bar: Array1<f64>,
    /// Step size used by the most recent iteration.
    eta: f64,
    /// Most recent `g_t` (the optimistic variant predicts with it).
    last_grad: Option<Array1<f64>>,
}

impl SolverState {
    pub fn new(y0: Array1<f64>, diameter: f64) -> Self {
        let dim = y0.len();
        Self {
            t: 0,
            x_bar: y0.clone(),
            y_prev: y0,
            weight_sum: 0.0,
            weighted_iterate_sum: Array1::zeros(dim),
            grad_diff_sq: KahanSum::default(),
            eta: learning_rate(diameter, 0.0),
            last_grad: None,
        }
    }

    pub fn iterations(&self) -> usize {
        self.t
    }

    pub fn anchor(&self) -> &Array1<f64> {
        &self.y_prev
    }

    pub fn average(&self) -> &Array1<f64> {
        &self.x_bar
    }

    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    pub fn grad_diff_sq_sum(&self) -> f64 {
        self.grad_diff_sq.value()
    }

    pub fn step_size(&self) -> f64 {
        self.eta
    }

    /// Extrapolation point
    /// `ztilde_t = (alpha_t y_{t-1} + sum_{i<t} alpha_i x_i) / sum_{i<=t} alpha_i`.
    pub fn extrapolation_point(&self, alpha: f64) -> Array1<f64> {
        let total = self.weight_sum + alpha;
        (&self.y_prev * alpha + &self.weighted_iterate_sum) / total
    }

    /// Folds `x_t` into the running average and returns
    /// `xbar_t = (alpha_t x_t + sum_{i<t} alpha_i x_i) / sum_{i<=t} alpha_i`.
    pub fn update_average(&mut self, x: &Array1<f64>, alpha: f64) -> Array1<f64> {
        let total = self.weight_sum + alpha;
        let x_bar = (x * alpha + &self.weighted_iterate_sum) / total;
        self.weighted_iterate_sum += &(x * alpha);
        self.weight_sum = total;
        self.x_bar = x_bar.clone();
        x_bar
    }
}

/// Runs one iteration of the template, mutating `state` and returning the
/// iteration record.
///
/// Order of operations: extrapolation point, gradient guess `M_t`, step size
/// from the lag-one accumulator, first prox to `x_t`, average update,
/// gradient `g_t`, second prox to `y_t` (same step size and anchor), then
/// the accumulator update. The caller premultiplies nothing; both prox
/// linear terms are weighted here.
pub fn step<R: Rng>(
    state: &mut SolverState,
    problem: &Problem,
    config: &SolverConfig,
    diameter: f64,
    rng: &mut R,
) -> Result<IterationRecord> {
    let t = state.t + 1;
    let alpha = match config.variant {
        SolverVariant::UniXGrad => weight(t),
        SolverVariant::MirrorProx | SolverVariant::OptimisticMD => 1.0,
    };

    let z_tilde = state.extrapolation_point(alpha);
    let grad_pred = match config.variant {
        SolverVariant::UniXGrad => problem.oracle_gradient(rng, &z_tilde)?,
        SolverVariant::MirrorProx => problem.oracle_gradient(rng, &state.y_prev)?,
        SolverVariant::OptimisticMD => match &state.last_grad {
            Some(g) => g.clone(),
            None => problem.oracle_gradient(rng, &state.y_prev)?,
        },
    };
    if !all_finite(&grad_pred) {
        return Err(Error::Numeric(format!("non-finite gradient guess at iteration {t}")));
    }

    let eta = learning_rate(diameter, state.grad_diff_sq.value());
    let x = prox_step(
        config.geometry,
        &config.set,
        &state.y_prev,
        &(&grad_pred * alpha),
        eta,
    )?;
    let x_bar = state.update_average(&x, alpha);

    let grad_point = match config.variant {
        SolverVariant::UniXGrad => &x_bar,
        SolverVariant::MirrorProx | SolverVariant::OptimisticMD => &x,
    };
    let grad = problem.oracle_gradient(rng, grad_point)?;
    if !all_finite(&grad) {
        return Err(Error::Numeric(format!("non-finite gradient at iteration {t}")));
    }

    let y = prox_step(
        config.geometry,
        &config.set,
        &state.y_prev,
        &(&grad * alpha),
        eta,
    )?;

    let grad_diff_norm = config.geometry.dual_norm(&(&grad - &grad_pred));
    state.grad_diff_sq.add(alpha * alpha * grad_diff_norm * grad_diff_norm);
    if !state.grad_diff_sq.value().is_finite() {
        return Err(Error::Numeric(format!(
            "gradient-difference accumulator overflowed at iteration {t}"
        )));
    }

    let objective = problem.evaluate(&x_bar)?;
    let regret_increment = problem
        .reference
        .as_ref()
        .map(|r| alpha * (&x - &r.x).dot(&grad));

    state.t = t;
    state.eta = eta;
    state.y_prev = y.clone();
    state.last_grad = Some(grad.clone());

    Ok(IterationRecord {
        t,
        alpha,
        eta,
        x,
        y,
        x_bar,
        z_tilde,
        grad,
        grad_pred,
        grad_diff_norm,
        objective,
        regret_increment,
    })
}

/// Executes `horizon` iterations from the start point and returns the full
/// trace. Any step failure aborts the run; the error carries the partial
/// trace flagged invalid.
pub fn run(problem: &Problem, config: &SolverConfig) -> Result<RunTrace> {
    if config.horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    if problem.set != config.set {
        return Err(Error::Config("problem and solver disagree on the feasible set".into()));
    }
    let diameter = config.resolve_diameter()?;
    let y0 = config.start_point()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = SolverState::new(y0, diameter.value());
    let mut records = Vec::with_capacity(config.horizon);
    for t in 1..=config.horizon {
        match step(&mut state, problem, config, diameter.value(), &mut rng) {
            Ok(record) => records.push(record),
            Err(source) => {
                let reason = source.to_string();
                let partial = RunTrace {
                    optimizer: config.variant.optimizer_kind(),
                    evaluated: EvaluatedIterate::Average,
                    final_point: state.average().clone(),
                    records,
                    diameter: diameter.value(),
                    horizon: config.horizon,
                    seed: config.seed,
                    valid: false,
                };
                return Err(Error::Aborted {
                    iteration: t,
                    reason,
                    partial: Box::new(partial),
                });
            }
        }
    }
    Ok(RunTrace {
        optimizer: config.variant.optimizer_kind(),
        evaluated: EvaluatedIterate::Average,
        final_point: state.average().clone(),
        records,
        diameter: diameter.value(),
        horizon: config.horizon,
        seed: config.seed,
        valid: true,
    })
}
