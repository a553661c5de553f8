//! Objective definitions with exact and stochastic first-order oracles,
//! certified problem constants and high-accuracy reference solutions.
//!
//! A [`Problem`] bundles an objective, its feasible set, an oracle mode and
//! the constants the convergence bounds need:
//!
//! - `smoothness`: a gradient Lipschitz constant `L` (absent for the
//!   nonsmooth L1 objective),
//! - `grad_bound`: a bound `G` on oracle (sub)gradient norms over the set,
//! - `noise`: a bound `sigma` on the root mean squared oracle deviation
//!   (present only for stochastic modes).
//!
//! All bounds are stated in the Euclidean norm, which dominates the max
//! norm, so they are valid dual-norm bounds for every supported geometry.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::data::SparseDataset;
use crate::geometry::FeasibleSet;
use crate::linalg::{all_finite, l2_norm, largest_eigenvalue_matvec, largest_eigenvalue_sym};
use crate::{Error, Result};

mod reference;
pub use reference::solve_reference;

/// Objective function variants.
#[derive(Debug, Clone)]
pub enum ObjectiveKind {
    /// `f(x) = 1/(2n) ||A x - b||_2^2`
    LeastSquares { a: Array2<f64>, b: Array1<f64> },
    /// `f(x) = 1/n sum_i max(0, 1 - y_i <a_i, x>)^2 + lambda/2 ||x||_2^2`
    SquaredHingeSvm { data: SparseDataset, lambda: f64 },
    /// `f(x) = 1/n ||A x - b||_1`
    L1Regression { a: Array2<f64>, b: Array1<f64> },
}

/// How gradient queries are answered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleMode {
    /// Exact (sub)gradients.
    Deterministic,
    /// Mean loss gradient over a uniform sample of rows drawn without
    /// replacement, plus the full regularizer gradient; fresh draw per call.
    MiniBatch { batch_size: usize },
    /// Exact gradient plus Gaussian noise with per-coordinate variance
    /// `sigma^2 / d`.
    AdditiveNoise { sigma: f64 },
}

/// Certified constants attached to a problem.
#[derive(Debug, Clone, Copy)]
pub struct ProblemConstants {
    /// Gradient Lipschitz constant `L`; `None` for nonsmooth objectives.
    pub smoothness: Option<f64>,
    /// Bound `G` on oracle (sub)gradient Euclidean norms over the set.
    pub grad_bound: f64,
    /// Bound `sigma` with `E ||grad - oracle||^2 <= sigma^2`; stochastic
    /// modes only.
    pub noise: Option<f64>,
}

/// A high-accuracy feasible minimizer and its objective value.
#[derive(Debug, Clone)]
pub struct Reference {
    pub x: Array1<f64>,
    pub objective: f64,
}

/// An objective over a feasible set with an oracle mode and constants.
#[derive(Debug, Clone)]
pub struct Problem {
    pub kind: ObjectiveKind,
    pub set: FeasibleSet,
    pub mode: OracleMode,
    pub constants: ProblemConstants,
    pub reference: Option<Reference>,
}

impl Problem {
    pub fn least_squares(a: Array2<f64>, b: Array1<f64>, set: FeasibleSet) -> Result<Self> {
        if a.ncols() != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                got: a.ncols(),
            });
        }
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if a.nrows() == 0 {
            return Err(Error::Config("least squares needs at least one row".into()));
        }
        let kind = ObjectiveKind::LeastSquares { a, b };
        let constants = certified_constants(&kind, &set);
        Ok(Self {
            kind,
            set,
            mode: OracleMode::Deterministic,
            constants,
            reference: None,
        })
    }

    pub fn squared_hinge_svm(data: SparseDataset, lambda: f64, set: FeasibleSet) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Config("SVM needs a nonempty dataset".into()));
        }
        if data.dim > set.dim() {
            return Err(Error::DimensionMismatch {
                expected: data.dim,
                got: set.dim(),
            });
        }
        if !(lambda >= 0.0) {
            return Err(Error::Config(format!("regularizer must be nonnegative, got {lambda}")));
        }
        if data.rows.iter().any(|r| r.label != 1.0 && r.label != -1.0) {
            return Err(Error::Config("SVM labels must be -1/+1".into()));
        }
        let kind = ObjectiveKind::SquaredHingeSvm { data, lambda };
        let constants = certified_constants(&kind, &set);
        Ok(Self {
            kind,
            set,
            mode: OracleMode::Deterministic,
            constants,
            reference: None,
        })
    }

    pub fn l1_regression(a: Array2<f64>, b: Array1<f64>, set: FeasibleSet) -> Result<Self> {
        if a.ncols() != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                got: a.ncols(),
            });
        }
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        let kind = ObjectiveKind::L1Regression { a, b };
        let constants = certified_constants(&kind, &set);
        Ok(Self {
            kind,
            set,
            mode: OracleMode::Deterministic,
            constants,
            reference: None,
        })
    }

    /// Switches the oracle mode, recomputing the noise constant.
    pub fn with_mode(mut self, mode: OracleMode) -> Result<Self> {
        match mode {
            OracleMode::MiniBatch { batch_size } => {
                if batch_size == 0 || batch_size > self.n() {
                    return Err(Error::Config(format!(
                        "batch size must lie in [1, {}], got {batch_size}",
                        self.n()
                    )));
                }
            }
            OracleMode::AdditiveNoise { sigma } => {
                if !(sigma > 0.0) {
                    return Err(Error::Config(format!(
                        "additive noise level must be positive, got {sigma}"
                    )));
                }
            }
            OracleMode::Deterministic => {}
        }
        self.mode = mode;
        self.constants.noise = noise_constant(&self.kind, &self.set, mode);
        Ok(self)
    }

    pub fn with_reference(mut self, reference: Reference) -> Self {
        self.reference = Some(reference);
        self
    }

    /// Number of data rows.
    pub fn n(&self) -> usize {
        match &self.kind {
            ObjectiveKind::LeastSquares { a, .. } | ObjectiveKind::L1Regression { a, .. } => {
                a.nrows()
            }
            ObjectiveKind::SquaredHingeSvm { data, .. } => data.len(),
        }
    }

    /// Decision-variable dimension.
    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    fn check_point(&self, x: &Array1<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !all_finite(x) {
            return Err(Error::Numeric("query point contains NaN/Inf".into()));
        }
        Ok(())
    }

    /// Objective value at `x`.
    pub fn evaluate(&self, x: &Array1<f64>) -> Result<f64> {
        self.check_point(x)?;
        Ok(match &self.kind {
            ObjectiveKind::LeastSquares { a, b } => {
                let r = a.dot(x) - b;
                r.dot(&r) / (2.0 * a.nrows() as f64)
            }
            ObjectiveKind::SquaredHingeSvm { data, lambda } => {
                let n = data.len() as f64;
                let mut loss = 0.0;
                for row in &data.rows {
                    let margin = row.label * row.dot(x);
                    let h = (1.0 - margin).max(0.0);
                    loss += h * h;
                }
                loss / n + 0.5 * lambda * x.dot(x)
            }
            ObjectiveKind::L1Regression { a, b } => {
                let r = a.dot(x) - b;
                r.iter().map(|v| v.abs()).sum::<f64>() / a.nrows() as f64
            }
        })
    }

    /// Exact gradient (or a deterministic subgradient for L1 regression,
    /// with `sign(0) = 0`).
    pub fn gradient(&self, x: &Array1<f64>) -> Result<Array1<f64>> {
        self.check_point(x)?;
        Ok(match &self.kind {
            ObjectiveKind::LeastSquares { a, b } => {
                let r = a.dot(x) - b;
                a.t().dot(&r) / a.nrows() as f64
            }
            ObjectiveKind::SquaredHingeSvm { data, lambda } => {
                let n = data.len() as f64;
                let mut g = x.mapv(|xi| lambda * xi);
                for row in &data.rows {
                    let margin = row.label * row.dot(x);
                    if margin < 1.0 {
                        row.add_scaled_into(&mut g, -2.0 * (1.0 - margin) * row.label / n);
                    }
                }
                g
            }
            ObjectiveKind::L1Regression { a, b } => {
                let r = a.dot(x) - b;
                let s = r.mapv(|v| {
                    if v > 0.0 {
                        1.0
                    } else if v < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                });
                a.t().dot(&s) / a.nrows() as f64
            }
        })
    }

    /// Loss-part (sub)gradient of a single row; regularizers excluded.
    pub fn row_loss_gradient(&self, i: usize, x: &Array1<f64>) -> Array1<f64> {
        match &self.kind {
            ObjectiveKind::LeastSquares { a, b } => {
                let row = a.row(i);
                let r = row.dot(x) - b[i];
                row.to_owned() * r
            }
            ObjectiveKind::SquaredHingeSvm { data, .. } => {
                let row = &data.rows[i];
                let margin = row.label * row.dot(x);
                let mut g = Array1::zeros(x.len());
                if margin < 1.0 {
                    row.add_scaled_into(&mut g, -2.0 * (1.0 - margin) * row.label);
                }
                g
            }
            ObjectiveKind::L1Regression { a, b } => {
                let row = a.row(i);
                let r = row.dot(x) - b[i];
                let s = if r > 0.0 {
                    1.0
                } else if r < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                row.to_owned() * s
            }
        }
    }

    fn regularizer_gradient(&self, x: &Array1<f64>) -> Array1<f64> {
        match &self.kind {
            ObjectiveKind::SquaredHingeSvm { lambda, .. } => x.mapv(|xi| lambda * xi),
            _ => Array1::zeros(x.len()),
        }
    }

    /// Unbiased stochastic (sub)gradient estimate; consumes fresh
    /// randomness on every call.
    pub fn stochastic_gradient<R: Rng>(&self, rng: &mut R, x: &Array1<f64>) -> Result<Array1<f64>> {
        self.check_point(x)?;
        match self.mode {
            OracleMode::Deterministic => self.gradient(x),
            OracleMode::MiniBatch { batch_size } => {
                let n = self.n();
                if batch_size > n {
                    return Err(Error::Config(format!(
                        "batch size {batch_size} exceeds row count {n}"
                    )));
                }
                if batch_size == n {
                    return self.gradient(x);
                }
                let picks = rand::seq::index::sample(rng, n, batch_size);
                let mut g = Array1::zeros(x.len());
                for i in picks {
                    g += &self.row_loss_gradient(i, x);
                }
                g /= batch_size as f64;
                g += &self.regularizer_gradient(x);
                Ok(g)
            }
            OracleMode::AdditiveNoise { sigma } => {
                let mut g = self.gradient(x)?;
                if sigma > 0.0 {
                    let std = sigma / (self.dim() as f64).sqrt();
                    let normal = rand_distr::Normal::new(0.0, std)
                        .map_err(|e| Error::Numeric(format!("noise setup: {e}")))?;
                    use rand_distr::Distribution;
                    for gi in g.iter_mut() {
                        *gi += normal.sample(rng);
                    }
                }
                Ok(g)
            }
        }
    }

    /// Gradient as seen by a running algorithm: exact under the
    /// deterministic mode, stochastic otherwise.
    pub fn oracle_gradient<R: Rng>(&self, rng: &mut R, x: &Array1<f64>) -> Result<Array1<f64>> {
        match self.mode {
            OracleMode::Deterministic => self.gradient(x),
            _ => self.stochastic_gradient(rng, x),
        }
    }
}

/// Largest value of `||x||_2` over the set.
fn set_norm_bound(set: &FeasibleSet) -> f64 {
    match set {
        FeasibleSet::L2Ball { center, radius } => l2_norm(center) + radius,
        FeasibleSet::Box { lower, upper } => lower
            .iter()
            .zip(upper.iter())
            .map(|(l, u)| l.abs().max(u.abs()).powi(2))
            .sum::<f64>()
            .sqrt(),
        FeasibleSet::Simplex { .. } => 1.0,
    }
}

fn certified_constants(kind: &ObjectiveKind, set: &FeasibleSet) -> ProblemConstants {
    let norm_bound = set_norm_bound(set);
    match kind {
        ObjectiveKind::LeastSquares { a, b } => {
            let n = a.nrows() as f64;
            let gram = a.t().dot(a);
            let lam_max = largest_eigenvalue_sym(&gram);
            let op_norm = lam_max.sqrt();
            let grad_bound = op_norm * (op_norm * norm_bound + l2_norm(b)) / n;
            ProblemConstants {
                smoothness: Some(lam_max / n),
                grad_bound,
                noise: None,
            }
        }
        ObjectiveKind::SquaredHingeSvm { data, lambda } => {
            let n = data.len() as f64;
            let dim = set.dim();
            let lam_max = largest_eigenvalue_matvec(dim, |v| {
                let mut out = Array1::zeros(dim);
                for row in &data.rows {
                    row.add_scaled_into(&mut out, row.dot(v));
                }
                out
            });
            let mut grad_bound = lambda * norm_bound;
            for row in &data.rows {
                let rn = row.norm();
                grad_bound += 2.0 * (1.0 + rn * norm_bound) * rn / n;
            }
            ProblemConstants {
                smoothness: Some(2.0 * lam_max / n + lambda),
                grad_bound,
                noise: None,
            }
        }
        ObjectiveKind::L1Regression { a, .. } => {
            let n = a.nrows() as f64;
            let gram = a.t().dot(a);
            let lam_max = largest_eigenvalue_sym(&gram);
            ProblemConstants {
                smoothness: None,
                grad_bound: (lam_max / n).sqrt(),
                noise: None,
            }
        }
    }
}

/// Certified bound on the root mean squared oracle deviation over the set.
fn noise_constant(kind: &ObjectiveKind, set: &FeasibleSet, mode: OracleMode) -> Option<f64> {
    match mode {
        OracleMode::Deterministic => None,
        OracleMode::AdditiveNoise { sigma } => Some(sigma),
        OracleMode::MiniBatch { batch_size } => {
            let norm_bound = set_norm_bound(set);
            let (n, mean_sq) = match kind {
                ObjectiveKind::LeastSquares { a, b } => {
                    let n = a.nrows();
                    let sum: f64 = (0..n)
                        .map(|i| {
                            let rn = l2_norm(&a.row(i).to_owned());
                            let bound = rn * (rn * norm_bound + b[i].abs());
                            bound * bound
                        })
                        .sum();
                    (n, sum / n as f64)
                }
                ObjectiveKind::SquaredHingeSvm { data, .. } => {
                    let n = data.len();
                    let sum: f64 = data
                        .rows
                        .iter()
                        .map(|row| {
                            let rn = row.norm();
                            let bound = 2.0 * (1.0 + rn * norm_bound) * rn;
                            bound * bound
                        })
                        .sum();
                    (n, sum / n as f64)
                }
                ObjectiveKind::L1Regression { a, .. } => {
                    let n = a.nrows();
                    let sum: f64 = (0..n)
                        .map(|i| {
                            let rn = l2_norm(&a.row(i).to_owned());
                            rn * rn
                        })
                        .sum();
                    (n, sum / n as f64)
                }
            };
            if batch_size >= n || n <= 1 {
                return Some(0.0);
            }
            // variance factor of the mean of a without-replacement sample
            let m = batch_size as f64;
            let n = n as f64;
            let factor = (n - m) / (m * (n - 1.0));
            Some((factor * mean_sq).sqrt())
        }
    }
}
