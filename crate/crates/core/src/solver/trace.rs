//! Per-iteration run records and trace-level bookkeeping.

use ndarray::Array1;

use crate::{Error, Result};

/// Every optimizer the workbench can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    UniXGrad,
    MirrorProx,
    OptimisticMd,
    Sgd,
    AdaGradScalar,
    AmsGrad,
}

impl OptimizerKind {
    /// Stable identifier used in file names and reports.
    pub fn name(&self) -> &'static str {
        match self {
            Self::UniXGrad => "unixgrad",
            Self::MirrorProx => "mirror-prox",
            Self::OptimisticMd => "optimistic-md",
            Self::Sgd => "sgd",
            Self::AdaGradScalar => "adagrad",
            Self::AmsGrad => "amsgrad",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "unixgrad" => Some(Self::UniXGrad),
            "mirror-prox" => Some(Self::MirrorProx),
            "optimistic-md" => Some(Self::OptimisticMd),
            "sgd" => Some(Self::Sgd),
            "adagrad" => Some(Self::AdaGradScalar),
            "amsgrad" => Some(Self::AmsGrad),
            _ => None,
        }
    }

    /// Solver variants report the weighted average iterate; the baselines
    /// report their last iterate.
    pub fn evaluated_iterate(&self) -> EvaluatedIterate {
        match self {
            Self::UniXGrad | Self::MirrorProx | Self::OptimisticMd => EvaluatedIterate::Average,
            Self::Sgd | Self::AdaGradScalar | Self::AmsGrad => EvaluatedIterate::Last,
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which iterate the `objective` column of a trace refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluatedIterate {
    /// Weighted running average.
    Average,
    /// Most recent iterate.
    Last,
}

/// One iteration of any optimizer. Baseline runs store their single iterate
/// in all point slots so downstream consumers can stay uniform.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub t: usize,
    pub alpha: f64,
    /// Step size used by this iteration.
    pub eta: f64,
    pub x: Array1<f64>,
    pub y: Array1<f64>,
    pub x_bar: Array1<f64>,
    pub z_tilde: Array1<f64>,
    /// Gradient actually queried for the second prox step (stochastic in
    /// stochastic runs).
    pub grad: Array1<f64>,
    /// Gradient guess used by the first prox step.
    pub grad_pred: Array1<f64>,
    /// `||grad - grad_pred||_*`.
    pub grad_diff_norm: f64,
    /// Exact objective at the evaluated iterate.
    pub objective: f64,
    /// `alpha_t <x_t - x_ref, g_t>` against the problem reference, when one
    /// is attached.
    pub regret_increment: Option<f64>,
}

/// Complete record of one optimizer run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub optimizer: OptimizerKind,
    pub evaluated: EvaluatedIterate,
    pub records: Vec<IterationRecord>,
    /// The point the run returns: final average for solver variants, final
    /// iterate for baselines.
    pub final_point: Array1<f64>,
    /// Bregman diameter the run used.
    pub diameter: f64,
    pub horizon: usize,
    pub seed: u64,
    /// False when the run aborted; consumers must not trust partial traces.
    pub valid: bool,
}

impl RunTrace {
    /// Weighted regret `sum_t alpha_t <x_t - x_ref, g_t>` using the
    /// gradients that were actually queried.
    pub fn weighted_regret(&self, x_ref: &Array1<f64>) -> Result<f64> {
        if !self.valid {
            return Err(Error::InvalidTrace("weighted regret over a partial trace".into()));
        }
        let dim = self.final_point.len();
        if x_ref.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x_ref.len(),
            });
        }
        Ok(self
            .records
            .iter()
            .map(|r| r.alpha * (&r.x - x_ref).dot(&r.grad))
            .sum())
    }

    /// Recomputes the final weighted average from the stored iterates,
    /// independently of the incremental accumulator.
    pub fn recomputed_average(&self) -> Array1<f64> {
        let dim = self.final_point.len();
        let mut sum = Array1::<f64>::zeros(dim);
        let mut weights = 0.0;
        for r in &self.records {
            sum += &(&r.x * r.alpha);
            weights += r.alpha;
        }
        if weights > 0.0 {
            sum / weights
        } else {
            sum
        }
    }

    /// `sum_{i<=t} alpha_i^2 ||g_i - M_i||_*^2` for a prefix of the run.
    pub fn grad_diff_sq_prefix(&self, upto: usize) -> f64 {
        self.records
            .iter()
            .take_while(|r| r.t <= upto)
            .map(|r| r.alpha * r.alpha * r.grad_diff_norm * r.grad_diff_norm)
            .sum()
    }

    /// `(t, objective)` sampled at the given checkpoints (`t` values beyond
    /// the horizon are skipped).
    pub fn objective_curve(&self, checkpoints: &[usize]) -> Vec<(usize, f64)> {
        checkpoints
            .iter()
            .filter(|&&t| t >= 1 && t <= self.records.len())
            .map(|&t| (t, self.records[t - 1].objective))
            .collect()
    }

    /// Objective value at the end of the run.
    pub fn final_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.objective)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tiny_trace() -> RunTrace {
        let records = (1..=3)
            .map(|t| {
                let tf = t as f64;
                IterationRecord {
                    t,
                    alpha: tf,
                    eta: 1.0 / tf,
                    x: array![tf, -tf],
                    y: array![0.0, 0.0],
                    x_bar: array![0.0, 0.0],
                    z_tilde: array![0.0, 0.0],
                    grad: array![1.0, 1.0],
                    grad_pred: array![0.0, 0.0],
                    grad_diff_norm: 2.0f64.sqrt(),
                    objective: 1.0 / tf,
                    regret_increment: None,
                }
            })
            .collect();
        RunTrace {
            optimizer: OptimizerKind::UniXGrad,
            evaluated: EvaluatedIterate::Average,
            records,
            final_point: array![0.0, 0.0],
            diameter: 1.0,
            horizon: 3,
            seed: 0,
            valid: true,
        }
    }

    #[test]
    fn weighted_regret_zero_cases() {
        let mut trace = tiny_trace();
        // x_t == x_ref for all t
        for r in &mut trace.records {
            r.x = array![0.5, 0.5];
        }
        assert_eq!(trace.weighted_regret(&array![0.5, 0.5]).unwrap(), 0.0);
        // zero gradients
        for r in &mut trace.records {
            r.x = array![1.0, 2.0];
            r.grad = array![0.0, 0.0];
        }
        assert_eq!(trace.weighted_regret(&array![0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn weighted_regret_checks_dims_and_validity() {
        let trace = tiny_trace();
        assert!(trace.weighted_regret(&array![0.0]).is_err());
        let mut bad = tiny_trace();
        bad.valid = false;
        assert!(bad.weighted_regret(&array![0.0, 0.0]).is_err());
    }

    #[test]
    fn recomputed_average_weights_alphas() {
        let trace = tiny_trace();
        // (1*(1,-1) + 2*(2,-2) + 3*(3,-3)) / 6 = (14/6, -14/6)
        let avg = trace.recomputed_average();
        assert!((avg[0] - 14.0 / 6.0).abs() < 1e-15);
        assert!((avg[1] + 14.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn curve_sampling_clips_to_horizon() {
        let trace = tiny_trace();
        let curve = trace.objective_curve(&[1, 2, 8]);
        assert_eq!(curve, vec![(1, 1.0), (2, 0.5)]);
    }

    #[test]
    fn optimizer_names_round_trip() {
        for kind in [
            OptimizerKind::UniXGrad,
            OptimizerKind::MirrorProx,
            OptimizerKind::OptimisticMd,
            OptimizerKind::Sgd,
            OptimizerKind::AdaGradScalar,
            OptimizerKind::AmsGrad,
        ] {
            assert_eq!(OptimizerKind::from_name(kind.name()), Some(kind));
        }
        assert_eq!(OptimizerKind::from_name("unknown"), None);
    }
}
