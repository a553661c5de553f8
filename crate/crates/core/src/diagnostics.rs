//! Convergence measurement over completed traces: suboptimality curves,
//! empirical rate fitting, convergence-bound verification, sequence
//! identities and test accuracy.

use ndarray::Array1;

use crate::data::SparseDataset;
use crate::geometry::{euclidean_project, FeasibleSet};
use crate::oracles::Problem;
use crate::solver::RunTrace;
use crate::{Error, Result};

/// Convergence guarantees that can be checked against a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremBound {
    /// `6 D / T^2 + 14 G D / sqrt(T)` (convex, G-Lipschitz, exact oracle).
    NonsmoothDet,
    /// `20 sqrt(7) D^2 L / T^2` (convex, L-smooth, exact oracle).
    SmoothDet,
    /// Same expression as `NonsmoothDet`, holding in expectation.
    NonsmoothStoch,
    /// `224 sqrt(14) D^2 L / T^2 + 14 sqrt(2) sigma D / sqrt(T)`, in
    /// expectation.
    SmoothStoch,
}

impl TheoremBound {
    pub fn name(&self) -> &'static str {
        match self {
            Self::NonsmoothDet => "nonsmooth-deterministic",
            Self::SmoothDet => "smooth-deterministic",
            Self::NonsmoothStoch => "nonsmooth-stochastic",
            Self::SmoothStoch => "smooth-stochastic",
        }
    }

    /// Whether the guarantee holds per run or only for the mean over seeds.
    pub fn in_expectation(&self) -> bool {
        matches!(self, Self::NonsmoothStoch | Self::SmoothStoch)
    }
}

/// Bound value at horizon `t` given the constants the theorem needs.
pub fn theorem_bound_value(
    theorem: TheoremBound,
    diameter: f64,
    smoothness: Option<f64>,
    grad_bound: Option<f64>,
    noise: Option<f64>,
    t: usize,
) -> Result<f64> {
    let tf = t as f64;
    if t == 0 {
        return Err(Error::Config("bound evaluation needs t >= 1".into()));
    }
    match theorem {
        TheoremBound::NonsmoothDet | TheoremBound::NonsmoothStoch => {
            let g = grad_bound
                .ok_or_else(|| Error::Config("gradient bound G required".into()))?;
            Ok(6.0 * diameter / (tf * tf) + 14.0 * g * diameter / tf.sqrt())
        }
        TheoremBound::SmoothDet => {
            let l = smoothness
                .ok_or_else(|| Error::Config("smoothness constant L required".into()))?;
            Ok(20.0 * 7.0f64.sqrt() * diameter * diameter * l / (tf * tf))
        }
        TheoremBound::SmoothStoch => {
            let l = smoothness
                .ok_or_else(|| Error::Config("smoothness constant L required".into()))?;
            let sigma =
                noise.ok_or_else(|| Error::Config("noise constant sigma required".into()))?;
            Ok(224.0 * 14.0f64.sqrt() * diameter * diameter * l / (tf * tf)
                + 14.0 * 2.0f64.sqrt() * sigma * diameter / tf.sqrt())
        }
    }
}

/// One checkpoint of a bound comparison.
#[derive(Debug, Clone, Copy)]
pub struct CheckpointMargin {
    pub t: usize,
    pub observed: f64,
    pub bound: f64,
    /// `bound - observed`; nonnegative when the guarantee holds.
    pub margin: f64,
}

/// Result of comparing a suboptimality curve against a guarantee.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub theorem: TheoremBound,
    pub points: Vec<CheckpointMargin>,
    /// Log-log slope over the checkpoints, when enough of them are positive.
    pub slope: Option<f64>,
    pub all_nonnegative: bool,
    /// Present when the check could not run (missing constants/reference).
    pub skipped: Option<String>,
}

impl RateReport {
    fn skipped(theorem: TheoremBound, reason: String) -> Self {
        Self {
            theorem,
            points: Vec::new(),
            slope: None,
            all_nonnegative: false,
            skipped: Some(reason),
        }
    }

    pub fn passed(&self) -> bool {
        self.skipped.is_none() && self.all_nonnegative
    }
}

/// Checkpoint schedule: powers of two up to the horizon, plus the horizon.
pub fn checkpoint_schedule(horizon: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 1usize;
    while p <= horizon {
        out.push(p);
        match p.checked_mul(2) {
            Some(next) => p = next,
            None => break,
        }
    }
    if out.last() != Some(&horizon) {
        out.push(horizon);
    }
    out
}

/// `(t, f(x_t) - f_star)` sampled at the checkpoints.
pub fn suboptimality_curve(
    trace: &RunTrace,
    f_star: f64,
    checkpoints: &[usize],
) -> Vec<(usize, f64)> {
    trace
        .objective_curve(checkpoints)
        .into_iter()
        .map(|(t, f)| (t, f - f_star))
        .collect()
}

/// Pointwise mean of curves sharing one checkpoint grid.
pub fn mean_curve(curves: &[Vec<(usize, f64)>]) -> Result<Vec<(usize, f64)>> {
    let first = curves
        .first()
        .ok_or_else(|| Error::Config("mean of zero curves".into()))?;
    for c in curves {
        if c.len() != first.len() || c.iter().zip(first.iter()).any(|(a, b)| a.0 != b.0) {
            return Err(Error::Config("mismatched checkpoint grids".into()));
        }
    }
    Ok(first
        .iter()
        .enumerate()
        .map(|(i, &(t, _))| {
            let sum: f64 = curves.iter().map(|c| c[i].1).sum();
            (t, sum / curves.len() as f64)
        })
        .collect())
}

/// Least-squares slope of `log(value)` against `log(t)`.
pub fn rate_fit(curve: &[(usize, f64)]) -> Result<f64> {
    if curve.len() < 5 {
        return Err(Error::Config(format!(
            "rate fit needs at least 5 checkpoints, got {}",
            curve.len()
        )));
    }
    if curve.iter().any(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Numeric("rate fit needs strictly positive values".into()));
    }
    let n = curve.len() as f64;
    let xs: Vec<f64> = curve.iter().map(|(t, _)| (*t as f64).ln()).collect();
    let ys: Vec<f64> = curve.iter().map(|(_, v)| v.ln()).collect();
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    if den == 0.0 {
        return Err(Error::Config("rate fit needs at least two distinct t values".into()));
    }
    Ok(num / den)
}

/// Rate fit restricted to checkpoints with `t_min <= t <= t_max`.
pub fn slope_in_window(curve: &[(usize, f64)], t_min: usize, t_max: usize) -> Result<f64> {
    let window: Vec<(usize, f64)> = curve
        .iter()
        .copied()
        .filter(|(t, _)| *t >= t_min && *t <= t_max)
        .collect();
    rate_fit(&window)
}

/// Compares a suboptimality curve against a bound built from explicit
/// constants.
pub fn check_curve(
    theorem: TheoremBound,
    curve: &[(usize, f64)],
    diameter: f64,
    smoothness: Option<f64>,
    grad_bound: Option<f64>,
    noise: Option<f64>,
) -> Result<RateReport> {
    let mut points = Vec::with_capacity(curve.len());
    for &(t, observed) in curve {
        let bound = theorem_bound_value(theorem, diameter, smoothness, grad_bound, noise, t)?;
        points.push(CheckpointMargin {
            t,
            observed,
            bound,
            margin: bound - observed,
        });
    }
    let all_nonnegative = points.iter().all(|p| p.margin >= 0.0);
    let slope = rate_fit(curve).ok();
    Ok(RateReport {
        theorem,
        points,
        slope,
        all_nonnegative,
        skipped: None,
    })
}

/// Evaluates a guarantee on a completed run at the powers-of-two schedule.
/// Missing constants or a missing reference produce a skipped report rather
/// than an error.
pub fn check_theorem_bound(
    trace: &RunTrace,
    problem: &Problem,
    theorem: TheoremBound,
) -> RateReport {
    let f_star = match &problem.reference {
        Some(r) => r.objective,
        None => return RateReport::skipped(theorem, "no reference objective".into()),
    };
    let needs = match theorem {
        TheoremBound::NonsmoothDet | TheoremBound::NonsmoothStoch => {
            problem.constants.grad_bound.is_finite()
        }
        TheoremBound::SmoothDet => problem.constants.smoothness.is_some(),
        TheoremBound::SmoothStoch => {
            problem.constants.smoothness.is_some() && problem.constants.noise.is_some()
        }
    };
    if !needs {
        return RateReport::skipped(theorem, "missing problem constants".into());
    }
    let schedule = checkpoint_schedule(trace.horizon);
    let curve = suboptimality_curve(trace, f_star, &schedule);
    match check_curve(
        theorem,
        &curve,
        trace.diameter,
        problem.constants.smoothness,
        Some(problem.constants.grad_bound),
        problem.constants.noise,
    ) {
        Ok(report) => report,
        Err(e) => RateReport::skipped(theorem, e.to_string()),
    }
}

/// The data-dependent form of the nonsmooth deterministic guarantee,
/// `(7 D sqrt(1 + sum_{i<=t} alpha_i^2 ||g_i - M_i||_*^2) - D) / t^2`,
/// replayed from the trace accumulator.
pub fn adaptive_nonsmooth_bound(trace: &RunTrace, t: usize) -> f64 {
    let prefix = trace.grad_diff_sq_prefix(t);
    let d = trace.diameter;
    let tf = t as f64;
    2.0 * (7.0 * d * (1.0 + prefix).sqrt() - d) / (tf * tf)
}

/// Structural invariants every solver trace must satisfy: a nonincreasing
/// step size, feasibility of all recorded points (tolerance 1e-9) and
/// agreement of the incremental average with a recomputation from the trace
/// (1e-12 relative).
pub fn check_structural_invariants(trace: &RunTrace, set: &FeasibleSet) -> Result<()> {
    let mut previous_eta = f64::INFINITY;
    for r in &trace.records {
        if r.eta > previous_eta {
            return Err(Error::InvalidTrace(format!(
                "step size increased at iteration {}: {} -> {}",
                r.t, previous_eta, r.eta
            )));
        }
        previous_eta = r.eta;
        for (label, point) in [
            ("x", &r.x),
            ("y", &r.y),
            ("x_bar", &r.x_bar),
            ("z_tilde", &r.z_tilde),
        ] {
            if !set.contains(point) {
                return Err(Error::InvalidTrace(format!(
                    "{label} infeasible at iteration {}",
                    r.t
                )));
            }
        }
    }
    let recomputed = trace.recomputed_average();
    let diff = (&recomputed - &trace.final_point)
        .iter()
        .map(|v| v.abs())
        .fold(0.0f64, f64::max);
    let scale = trace
        .final_point
        .iter()
        .map(|v| v.abs())
        .fold(0.0f64, f64::max)
        .max(1.0);
    if diff > 1e-12 * scale {
        return Err(Error::InvalidTrace(format!(
            "average reconstruction off by {diff:e} (scale {scale:e})"
        )));
    }
    Ok(())
}

/// Regret-to-rate conversion check:
/// `f(xbar_T) - f(x_ref) <= 2 R_T(x_ref) / T^2 + 1e-9`.
///
/// Valid on deterministic average-iterate traces (the conversion needs
/// `g_t` to be the exact gradient at the average iterate).
pub fn lemma1_check(
    trace: &RunTrace,
    x_ref: &Array1<f64>,
    problem: &Problem,
) -> Result<(bool, f64)> {
    if !trace.valid {
        return Err(Error::InvalidTrace("regret conversion over a partial trace".into()));
    }
    let t = trace.records.len() as f64;
    let lhs = problem.evaluate(&trace.final_point)? - problem.evaluate(x_ref)?;
    let rhs = 2.0 * trace.weighted_regret(x_ref)? / (t * t) + 1e-9;
    Ok((lhs <= rhs, rhs - lhs))
}

/// Double inequality for nonnegative sequences with square-root prefix
/// denominators and the convention `0/0 = 0`:
/// `sqrt(sum a) <= sum_i a_i / sqrt(sum_{j<=i} a_j) <= 2 sqrt(sum a)`.
pub fn lemma2_check(a: &[f64]) -> Result<bool> {
    if a.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::Numeric("sequence entries must be nonnegative and finite".into()));
    }
    let total: f64 = a.iter().sum();
    let mut prefix = 0.0;
    let mut middle = 0.0;
    for &ai in a {
        prefix += ai;
        if prefix > 0.0 {
            middle += ai / prefix.sqrt();
        }
        // prefix == 0 implies ai == 0: contributes 0/0 := 0
    }
    let root = total.sqrt();
    let rel = 1e-12;
    Ok(root <= middle * (1.0 + rel) + f64::MIN_POSITIVE
        && middle <= 2.0 * root * (1.0 + rel) + f64::MIN_POSITIVE)
}

/// Fraction of rows with `sign(<a_i, model>) == label`; a zero score counts
/// as incorrect.
pub fn test_accuracy(model: &Array1<f64>, test: &SparseDataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Config("accuracy over an empty test set".into()));
    }
    if model.len() < test.dim {
        return Err(Error::DimensionMismatch {
            expected: test.dim,
            got: model.len(),
        });
    }
    let correct = test
        .rows
        .iter()
        .filter(|row| {
            let score = row.dot(model);
            (score > 0.0 && row.label > 0.0) || (score < 0.0 && row.label < 0.0)
        })
        .count();
    Ok(correct as f64 / test.len() as f64)
}

/// Central finite-difference gradient, independent of any analytic oracle.
pub fn finite_difference_gradient<F>(f: F, x: &Array1<f64>, h: f64) -> Array1<f64>
where
    F: Fn(&Array1<f64>) -> f64,
{
    let mut g = Array1::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let xi = x[i];
        probe[i] = xi + h;
        let plus = f(&probe);
        probe[i] = xi - h;
        let minus = f(&probe);
        probe[i] = xi;
        g[i] = (plus - minus) / (2.0 * h);
    }
    g
}

/// Brute-force minimization over a set in dimension <= 3: evaluates `f` on
/// a lattice of the given pitch projected onto the set.
pub fn grid_search_minimum<F>(set: &FeasibleSet, pitch: f64, f: F) -> Result<(Array1<f64>, f64)>
where
    F: Fn(&Array1<f64>) -> f64,
{
    let d = set.dim();
    if d > 3 {
        return Err(Error::Config("grid search limited to dimension <= 3".into()));
    }
    if !(pitch > 0.0) {
        return Err(Error::Config("grid pitch must be positive".into()));
    }
    if let FeasibleSet::Simplex { dim, .. } = set {
        // grid the free coordinates on the unit-sum face
        return simplex_face_grid(set, *dim, pitch, f);
    }
    let (lo, hi) = match set {
        FeasibleSet::L2Ball { center, radius } => (
            center.iter().map(|c| c - radius).collect::<Vec<f64>>(),
            center.iter().map(|c| c + radius).collect::<Vec<f64>>(),
        ),
        FeasibleSet::Box { lower, upper } => (lower.to_vec(), upper.to_vec()),
        FeasibleSet::Simplex { .. } => unreachable!(),
    };
    let steps: Vec<usize> = (0..d)
        .map(|k| ((hi[k] - lo[k]) / pitch).ceil() as usize + 1)
        .collect();
    let mut best_x = euclidean_project(set, &Array1::zeros(d));
    let mut best_f = f(&best_x);
    let mut idx = vec![0usize; d];
    loop {
        let p = Array1::from_iter(
            idx.iter()
                .enumerate()
                .map(|(k, &i)| (lo[k] + i as f64 * pitch).min(hi[k])),
        );
        let candidate = euclidean_project(set, &p);
        let value = f(&candidate);
        if value < best_f {
            best_f = value;
            best_x = candidate;
        }
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < steps[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == d {
                break;
            }
        }
        if k == d {
            break;
        }
    }
    Ok((best_x, best_f))
}

fn simplex_face_grid<F>(
    set: &FeasibleSet,
    dim: usize,
    pitch: f64,
    f: F,
) -> Result<(Array1<f64>, f64)>
where
    F: Fn(&Array1<f64>) -> f64,
{
    let free = dim - 1;
    let steps = (1.0 / pitch).ceil() as usize + 1;
    let mut best_x = euclidean_project(set, &Array1::zeros(dim));
    let mut best_f = f(&best_x);
    let mut idx = vec![0usize; free.max(1)];
    if free == 0 {
        return Ok((best_x, best_f));
    }
    loop {
        let mut p = Array1::zeros(dim);
        let mut sum = 0.0;
        for k in 0..free {
            let v = (idx[k] as f64 * pitch).min(1.0);
            p[k] = v;
            sum += v;
        }
        if sum <= 1.0 + pitch {
            p[dim - 1] = (1.0 - sum).max(0.0);
            let candidate = euclidean_project(set, &p);
            let value = f(&candidate);
            if value < best_f {
                best_f = value;
                best_x = candidate;
            }
        }
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < steps {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == free {
                break;
            }
        }
        if k == free {
            break;
        }
    }
    Ok((best_x, best_f))
}
