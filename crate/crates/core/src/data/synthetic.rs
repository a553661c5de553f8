//! Seeded synthetic problem generators.
//!
//! All generators draw from a named portable RNG (ChaCha8) so that a fixed
//! seed reproduces outputs bit-for-bit across platforms.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::FeasibleSet;
use crate::linalg::{cholesky_solve, l2_norm, lu_solve};
use crate::oracles::{Problem, Reference};
use crate::{Error, Result};

use super::{SparseDataset, SparseRow};

/// Parameters for the constrained least-squares generator.
#[derive(Debug, Clone)]
pub struct SyntheticLsParams {
    pub n: usize,
    pub d: usize,
    /// Standard deviation of the i.i.d. Gaussian design entries.
    pub entry_sigma: f64,
    /// Variance of the additive observation noise.
    pub noise_variance: f64,
    /// Ball radius when `boundary` is false.
    pub radius: Option<f64>,
    /// Place the constrained solution on the ball boundary by shrinking the
    /// radius below the unconstrained optimum's norm.
    pub boundary: bool,
    /// Shrink factor applied to the unconstrained optimum norm.
    pub boundary_shrink: f64,
    pub seed: u64,
}

impl Default for SyntheticLsParams {
    fn default() -> Self {
        Self {
            n: 500,
            d: 100,
            entry_sigma: 1.0,
            noise_variance: 1e-3,
            radius: None,
            boundary: true,
            boundary_shrink: 0.8,
            seed: 0,
        }
    }
}

/// Generated least-squares instance: `b = A x_nat + eps`.
#[derive(Debug, Clone)]
pub struct SyntheticLs {
    pub a: Array2<f64>,
    pub b: Array1<f64>,
    pub x_nat: Array1<f64>,
    pub seed: u64,
    /// Radius of the feasible ball actually used.
    pub radius: f64,
}

fn normal_vec(rng: &mut ChaCha8Rng, len: usize, sigma: f64) -> Array1<f64> {
    Array1::from_iter((0..len).map(|_| {
        let z: f64 = StandardNormal.sample(rng);
        sigma * z
    }))
}

/// Draws `A` (i.i.d. Gaussian entries), a standard Gaussian planted vector
/// and observation noise, then wraps the instance as a ball-constrained
/// least-squares problem with certified constants.
pub fn generate_ls(params: &SyntheticLsParams) -> Result<(SyntheticLs, Problem)> {
    if params.n == 0 || params.d == 0 {
        return Err(Error::Config("generator needs n >= 1 and d >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let entries = normal_vec(&mut rng, params.n * params.d, params.entry_sigma);
    let a = Array2::from_shape_vec((params.n, params.d), entries.to_vec())
        .expect("shape matches draw count");
    let x_nat = normal_vec(&mut rng, params.d, 1.0);
    let eps = normal_vec(&mut rng, params.n, params.noise_variance.sqrt());
    let b = a.dot(&x_nat) + &eps;

    let radius = if params.boundary {
        let unconstrained = unconstrained_ls_solution(&a, &b).unwrap_or_else(|_| x_nat.clone());
        let norm = l2_norm(&unconstrained);
        if norm == 0.0 {
            return Err(Error::Numeric(
                "unconstrained optimum at the origin; cannot place it outside the ball".into(),
            ));
        }
        params.boundary_shrink * norm
    } else {
        match params.radius {
            Some(r) => r,
            None => {
                let unconstrained =
                    unconstrained_ls_solution(&a, &b).unwrap_or_else(|_| x_nat.clone());
                1.25 * l2_norm(&unconstrained).max(1.0)
            }
        }
    };

    let set = FeasibleSet::centered_ball(params.d, radius)?;
    let problem = Problem::least_squares(a.clone(), b.clone(), set)?;
    Ok((
        SyntheticLs {
            a,
            b,
            x_nat,
            seed: params.seed,
            radius,
        },
        problem,
    ))
}

fn unconstrained_ls_solution(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows() as f64;
    let gram = a.t().dot(a) / n;
    let rhs = a.t().dot(b) / n;
    cholesky_solve(&gram, &rhs)
}

/// Parameters for the planted-optimum L1 regression generator.
#[derive(Debug, Clone)]
pub struct PlantedL1Params {
    pub n: usize,
    pub d: usize,
    pub radius: f64,
    /// Scale of the residual magnitudes at the optimum; small values keep
    /// the kinks of the piecewise-linear objective close to the solution.
    pub kink_scale: f64,
    /// Number of rows whose hyperplanes pass through the optimum.
    pub kink_rows: usize,
    /// Place the optimum on the ball boundary (constraint active); when
    /// false the optimum is an interior vertex and `kink_rows` must equal
    /// `d`.
    pub boundary: bool,
    pub seed: u64,
}

impl Default for PlantedL1Params {
    fn default() -> Self {
        Self {
            n: 60,
            d: 20,
            radius: 1.0,
            kink_scale: 0.1,
            kink_rows: 3,
            boundary: true,
            seed: 0,
        }
    }
}

/// Builds an L1 regression problem whose constrained minimizer is known in
/// closed form and sits at a genuine kink of the objective.
///
/// The first `kink_rows` rows have zero residual at the planted point `x*`,
/// so their hyperplanes pass exactly through it; the remaining rows get
/// strictly nonzero residuals with a chosen sign pattern `s`.
///
/// Boundary variant: interior coefficients `|w_i| <= 0.4` are drawn for the
/// kink rows and `x*` is placed at `-r c / ||c||` for the resulting
/// subgradient selection `c = (sum_i w_i a_i + sum_j s_j a_j) / n`. Then
/// `c` points along `-x*`, which is first-order optimality on the ball
/// boundary, so `x*` is the exact global constrained minimizer while the
/// objective stays nonsmooth there.
///
/// Interior variant (`boundary = false`, `kink_rows = d`): `x*` sits at
/// half radius and the coefficients solving
/// `A_kink^T w = -A_rest^T s` are made interior by shrinking the smooth
/// rows, placing zero inside the subdifferential at `x*` (a sharp interior
/// minimum).
pub fn generate_l1_planted(params: &PlantedL1Params) -> Result<(Problem, Array1<f64>)> {
    if params.d == 0 || !(params.radius > 0.0) || !(params.kink_scale > 0.0) {
        return Err(Error::Config("invalid planted-L1 parameters".into()));
    }
    if params.n <= params.kink_rows {
        return Err(Error::Config(format!(
            "planted L1 needs n > kink_rows (got n = {}, kink_rows = {})",
            params.n, params.kink_rows
        )));
    }
    if !params.boundary && params.kink_rows != params.d {
        return Err(Error::Config(
            "an interior planted optimum needs kink_rows = d".into(),
        ));
    }
    let (n, d, k) = (params.n, params.d, params.kink_rows);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let entries = normal_vec(&mut rng, n * d, 1.0);
    let mut a = Array2::from_shape_vec((n, d), entries.to_vec())
        .expect("shape matches draw count");
    let signs = Array1::from_iter(
        (0..n - k).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }),
    );

    let x_star = if params.boundary {
        let weights =
            Array1::from_iter((0..k).map(|_| 0.4 * (2.0 * rng.random::<f64>() - 1.0)));
        let mut c = Array1::<f64>::zeros(d);
        for i in 0..k {
            for j in 0..d {
                c[j] += weights[i] * a[[i, j]];
            }
        }
        for i in k..n {
            for j in 0..d {
                c[j] += signs[i - k] * a[[i, j]];
            }
        }
        c /= n as f64;
        let c_norm = l2_norm(&c);
        if c_norm == 0.0 {
            return Err(Error::Numeric("degenerate subgradient draw".into()));
        }
        c.mapv(|v| -params.radius * v / c_norm)
    } else {
        let direction = normal_vec(&mut rng, d, 1.0);
        let norm = l2_norm(&direction);
        if norm == 0.0 {
            return Err(Error::Numeric("degenerate direction draw".into()));
        }
        let x_star = direction.mapv(|v| 0.5 * params.radius * v / norm);
        // interior coefficients for the kink rows solving
        // A_kink^T w = -A_rest^T s; shrink the smooth rows until they are
        let kink_block = a.slice(ndarray::s![..k, ..]).t().to_owned();
        let rest_block = a.slice(ndarray::s![k.., ..]).t().to_owned();
        let rhs = rest_block.dot(&signs).mapv(|v| -v);
        let w = lu_solve(&kink_block, &rhs)?;
        let w_max = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gamma = if w_max > 0.5 { 0.5 / w_max } else { 1.0 };
        for i in k..n {
            for j in 0..d {
                a[[i, j]] *= gamma;
            }
        }
        x_star
    };

    let mut b = a.dot(&x_star);
    for i in k..n {
        let magnitude = params.kink_scale * (0.1 + 0.9 * rng.random::<f64>());
        b[i] -= signs[i - k] * magnitude;
    }

    let set = FeasibleSet::centered_ball(d, params.radius)?;
    let mut problem = Problem::l1_regression(a, b, set)?;
    let f_star = problem.evaluate(&x_star)?;
    problem.reference = Some(Reference {
        x: x_star.clone(),
        objective: f_star,
    });
    Ok((problem, x_star))
}

/// Parameters for the two-class LIBSVM-style classification generator.
#[derive(Debug, Clone)]
pub struct TwoClassParams {
    pub n: usize,
    pub d: usize,
    /// Class separation in feature units; larger is easier.
    pub separation: f64,
    /// Raw labels written to the dataset (remapped to -1/+1 by the parser).
    pub raw_labels: (f64, f64),
    pub seed: u64,
}

impl Default for TwoClassParams {
    fn default() -> Self {
        Self {
            n: 683,
            d: 10,
            separation: 1.8,
            raw_labels: (2.0, 4.0),
            seed: 0,
        }
    }
}

/// Generates a two-class dataset with integer feature values in `[1, 10]`,
/// mimicking the layout of small LIBSVM classification sets.
pub fn generate_two_class(params: &TwoClassParams) -> Result<SparseDataset> {
    if params.n == 0 || params.d == 0 {
        return Err(Error::Config("generator needs n >= 1 and d >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let weights: Vec<f64> = (0..params.d).map(|_| 0.5 + rng.random::<f64>()).collect();
    let mut rows = Vec::with_capacity(params.n);
    for _ in 0..params.n {
        let class: f64 = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let raw_label = if class < 0.0 { params.raw_labels.0 } else { params.raw_labels.1 };
        let features = (0..params.d)
            .map(|j| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                let value = 5.5 + class * params.separation * weights[j] + 1.5 * noise;
                ((j + 1) as u32, value.round().clamp(1.0, 10.0))
            })
            .collect();
        rows.push(SparseRow {
            label: raw_label,
            features,
        });
    }
    Ok(SparseDataset {
        rows,
        dim: params.d,
    })
}
