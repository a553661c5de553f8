//! Bregman geometries, feasible sets, generalized projections and diameters.
//!
//! A geometry is a 1-strongly convex distance-generating function `R`; the
//! induced divergence `D_R(x, y) = R(x) - R(y) - <grad R(y), x - y>` drives
//! the prox steps of the solver. Feasible sets are compact convex constraint
//! sets with closed-form Euclidean projections; prox steps are supported for
//! the (geometry, set) pairs that admit a closed form.

use ndarray::Array1;

use crate::linalg::{all_finite, l1_norm, l2_norm, linf_norm};
use crate::{Error, Result};

/// Absolute tolerance for set-membership checks.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Compact convex constraint set.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    /// `{ x : ||x - center||_2 <= radius }`, radius > 0.
    L2Ball { center: Array1<f64>, radius: f64 },
    /// `{ x : lower <= x <= upper }` coordinatewise.
    Box {
        lower: Array1<f64>,
        upper: Array1<f64>,
    },
    /// `{ x : x_i >= floor, sum x_i = 1 }` with `0 <= floor < 1/dim`.
    Simplex { dim: usize, floor: f64 },
}

impl FeasibleSet {
    pub fn l2_ball(center: Array1<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Config(format!("ball radius must be positive, got {radius}")));
        }
        if !all_finite(&center) {
            return Err(Error::Numeric("ball center must be finite".into()));
        }
        Ok(Self::L2Ball { center, radius })
    }

    pub fn centered_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::l2_ball(Array1::zeros(dim), radius)
    }

    pub fn box_set(lower: Array1<f64>, upper: Array1<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::Config("box lower bound exceeds upper bound".into()));
        }
        Ok(Self::Box { lower, upper })
    }

    pub fn simplex(dim: usize, floor: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("simplex dimension must be positive".into()));
        }
        if !(0.0..1.0 / dim as f64).contains(&floor) {
            return Err(Error::Config(format!(
                "simplex floor must satisfy 0 <= floor < 1/dim, got {floor} with dim {dim}"
            )));
        }
        Ok(Self::Simplex { dim, floor })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::L2Ball { center, .. } => center.len(),
            Self::Box { lower, .. } => lower.len(),
            Self::Simplex { dim, .. } => *dim,
        }
    }

    /// Draws a point uniformly-ish from the set (exact for balls and boxes;
    /// Dirichlet over the floored simplex).
    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> Array1<f64> {
        use rand_distr::Distribution;
        match self {
            Self::L2Ball { center, radius } => {
                let normal = rand_distr::StandardNormal;
                let dir =
                    Array1::from_iter((0..center.len()).map(|_| normal.sample(rng)));
                let norm = l2_norm(&dir).max(f64::MIN_POSITIVE);
                let u: f64 = rng.random();
                let scale = radius * u.powf(1.0 / center.len() as f64) / norm;
                center + &(dir * scale)
            }
            Self::Box { lower, upper } => Array1::from_iter(
                lower
                    .iter()
                    .zip(upper.iter())
                    .map(|(l, u)| l + (u - l) * rng.random::<f64>()),
            ),
            Self::Simplex { dim, floor } => {
                let exp = rand_distr::Exp1;
                let mut draws: Array1<f64> =
                    Array1::from_iter((0..*dim).map(|_| exp.sample(rng)));
                let total = draws.sum();
                draws /= total;
                let mass = 1.0 - *dim as f64 * floor;
                draws.mapv(|v| floor + mass * v)
            }
        }
    }

    /// Membership test with the crate-wide absolute tolerance.
    pub fn contains(&self, x: &Array1<f64>) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Self::L2Ball { center, radius } => {
                let diff = x - center;
                l2_norm(&diff) <= radius + MEMBERSHIP_TOL
            }
            Self::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(xi, (l, u))| *xi >= l - MEMBERSHIP_TOL && *xi <= u + MEMBERSHIP_TOL),
            Self::Simplex { floor, .. } => {
                let sum: f64 = x.sum();
                (sum - 1.0).abs() <= MEMBERSHIP_TOL
                    && x.iter().all(|xi| *xi >= floor - MEMBERSHIP_TOL)
            }
        }
    }
}

/// Distance-generating function variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BregmanGeometry {
    /// `R(x) = 1/2 ||x||_2^2`; divergence is half squared Euclidean distance.
    Euclidean,
    /// `R(x) = sum x_i ln x_i`; divergence is the generalized KL divergence.
    NegativeEntropy,
}

impl BregmanGeometry {
    /// Value of the distance-generating function.
    pub fn potential(&self, x: &Array1<f64>) -> Result<f64> {
        match self {
            Self::Euclidean => Ok(0.5 * x.dot(x)),
            Self::NegativeEntropy => {
                let mut s = 0.0;
                for &xi in x {
                    if xi < 0.0 {
                        return Err(Error::Domain(format!(
                            "negative entropy requires nonnegative coordinates, got {xi}"
                        )));
                    }
                    if xi > 0.0 {
                        s += xi * xi.ln();
                    }
                }
                Ok(s)
            }
        }
    }

    /// Gradient of the distance-generating function.
    pub fn potential_gradient(&self, x: &Array1<f64>) -> Result<Array1<f64>> {
        match self {
            Self::Euclidean => Ok(x.clone()),
            Self::NegativeEntropy => {
                if x.iter().any(|xi| *xi <= 0.0) {
                    return Err(Error::Domain(
                        "entropy gradient needs strictly positive coordinates".into(),
                    ));
                }
                Ok(x.mapv(|xi| 1.0 + xi.ln()))
            }
        }
    }

    /// Norm in which `R` is 1-strongly convex.
    pub fn primal_norm(&self, v: &Array1<f64>) -> f64 {
        match self {
            Self::Euclidean => l2_norm(v),
            Self::NegativeEntropy => l1_norm(v),
        }
    }

    /// Dual norm paired with [`Self::primal_norm`].
    pub fn dual_norm(&self, v: &Array1<f64>) -> f64 {
        match self {
            Self::Euclidean => l2_norm(v),
            Self::NegativeEntropy => linf_norm(v),
        }
    }
}

/// `D_R(x, y) = R(x) - R(y) - <grad R(y), x - y>`.
///
/// For `Euclidean` this is half the squared Euclidean distance; for
/// `NegativeEntropy` it is the generalized KL divergence
/// `sum x_i ln(x_i / y_i) - x_i + y_i`, which reduces to `KL(x || y)` when
/// both arguments lie on the probability simplex.
pub fn bregman_divergence(
    geom: BregmanGeometry,
    x: &Array1<f64>,
    y: &Array1<f64>,
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    match geom {
        BregmanGeometry::Euclidean => {
            let diff = x - y;
            Ok(0.5 * diff.dot(&diff))
        }
        BregmanGeometry::NegativeEntropy => {
            let mut s = 0.0;
            for (&xi, &yi) in x.iter().zip(y.iter()) {
                if yi <= 0.0 {
                    return Err(Error::Domain(format!(
                        "KL divergence needs strictly positive second argument, got {yi}"
                    )));
                }
                if xi < 0.0 {
                    return Err(Error::Domain(format!(
                        "KL divergence needs nonnegative first argument, got {xi}"
                    )));
                }
                if xi > 0.0 {
                    s += xi * (xi / yi).ln() - xi + yi;
                } else {
                    s += yi;
                }
            }
            // rounding can leave a tiny negative value at x == y
            Ok(s.max(0.0))
        }
    }
}

/// Euclidean (l2-nearest-point) projection onto a feasible set.
pub fn euclidean_project(set: &FeasibleSet, p: &Array1<f64>) -> Array1<f64> {
    match set {
        FeasibleSet::L2Ball { center, radius } => {
            let diff = p - center;
            let norm = l2_norm(&diff);
            if norm <= *radius {
                p.clone()
            } else {
                center + &(diff * (*radius / norm))
            }
        }
        FeasibleSet::Box { lower, upper } => {
            let mut out = p.clone();
            for (o, (l, u)) in out.iter_mut().zip(lower.iter().zip(upper.iter())) {
                *o = o.max(*l).min(*u);
            }
            out
        }
        FeasibleSet::Simplex { dim, floor } => {
            // Shift by the floor and project onto the simplex of the
            // remaining mass, then shift back.
            let mass = 1.0 - *dim as f64 * floor;
            let shifted = p.mapv(|v| v - floor);
            let z = project_unit_simplex(&shifted, mass);
            z.mapv(|v| v + floor)
        }
    }
}

/// Projection of `p` onto `{ z >= 0, sum z = mass }` (sort-based pivot).
fn project_unit_simplex(p: &Array1<f64>, mass: f64) -> Array1<f64> {
    let d = p.len();
    if mass <= 0.0 {
        return Array1::zeros(d);
    }
    let mut sorted: Vec<f64> = p.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in sorted.iter().enumerate() {
        cumulative += uj;
        let candidate = (cumulative - mass) / (j as f64 + 1.0);
        if uj - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    p.mapv(|v| (v - theta).max(0.0))
}

/// Generalized projection: `argmin_{x in set} <x, v> + (1/eta) D_R(x, y)`.
///
/// Closed forms only: `Euclidean` pairs with `L2Ball`/`Box` (projection of
/// `y - eta v`), `NegativeEntropy` pairs with `Simplex` (multiplicative
/// update, normalization and floor water-filling). The caller premultiplies
/// `v` by its iteration weight.
pub fn prox_step(
    geom: BregmanGeometry,
    set: &FeasibleSet,
    y: &Array1<f64>,
    v: &Array1<f64>,
    eta: f64,
) -> Result<Array1<f64>> {
    if y.len() != set.dim() || v.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: if y.len() != set.dim() { y.len() } else { v.len() },
        });
    }
    if !all_finite(v) {
        return Err(Error::Numeric("prox linear term contains NaN/Inf".into()));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::Numeric(format!("prox step size must be positive, got {eta}")));
    }
    match (geom, set) {
        (BregmanGeometry::Euclidean, FeasibleSet::L2Ball { .. })
        | (BregmanGeometry::Euclidean, FeasibleSet::Box { .. }) => {
            let target = y - &(v * eta);
            Ok(euclidean_project(set, &target))
        }
        (BregmanGeometry::NegativeEntropy, FeasibleSet::Simplex { floor, .. }) => {
            if y.iter().any(|yi| *yi <= 0.0) {
                return Err(Error::Domain(
                    "entropic prox anchor must be strictly positive".into(),
                ));
            }
            // Multiplicative update in log space to dodge overflow.
            let exponents = y
                .iter()
                .zip(v.iter())
                .map(|(yi, vi)| yi.ln() - eta * vi)
                .collect::<Array1<f64>>();
            let shift = exponents.iter().fold(f64::NEG_INFINITY, |m, e| m.max(*e));
            let mut w = exponents.mapv(|e| (e - shift).exp());
            let total = w.sum();
            w /= total;
            Ok(floor_simplex(&w, *floor))
        }
        (geom, set) => Err(Error::UnsupportedCombination(format!(
            "no closed-form prox for {:?} over {}",
            geom,
            match set {
                FeasibleSet::L2Ball { .. } => "an L2 ball",
                FeasibleSet::Box { .. } => "a box",
                FeasibleSet::Simplex { .. } => "a simplex",
            }
        ))),
    }
}

/// Exact KL projection of a probability vector `w` onto the floored simplex
/// `{ x >= floor, sum x = 1 }`: the minimizer has the form
/// `x_i = max(floor, c * w_i)` with `c` chosen so the coordinates sum to 1.
fn floor_simplex(w: &Array1<f64>, floor: f64) -> Array1<f64> {
    if floor == 0.0 {
        return w.clone();
    }
    let d = w.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
    // Try flooring the k smallest coordinates.
    let mut suffix_sum: Vec<f64> = vec![0.0; d + 1];
    for k in (0..d).rev() {
        suffix_sum[k] = suffix_sum[k + 1] + w[order[k]];
    }
    for k in 0..d {
        let c = (1.0 - k as f64 * floor) / suffix_sum[k];
        let smallest_kept = c * w[order[k]];
        let largest_floored = if k == 0 { f64::NEG_INFINITY } else { c * w[order[k - 1]] };
        if smallest_kept >= floor && largest_floored <= floor {
            let mut x = w.mapv(|wi| c * wi);
            for &i in order.iter().take(k) {
                x[i] = floor;
            }
            return x;
        }
    }
    // Unreachable for floor < 1/d; fall back to the uniform-feasible point.
    Array1::from_elem(d, 1.0 / d as f64)
}

/// Bregman diameter `D` of a set: `D^2 = sup_{x,y in set} D_R(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diameter {
    value: f64,
    squared: f64,
}

impl Diameter {
    pub fn from_value(d: f64) -> Result<Self> {
        if !(d >= 0.0) || !d.is_finite() {
            return Err(Error::Config(format!("diameter must be nonnegative, got {d}")));
        }
        Ok(Self { value: d, squared: d * d })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn squared(&self) -> f64 {
        self.squared
    }
}

/// Closed-form Bregman diameter for the supported (geometry, set) pairs.
///
/// - `Euclidean` + `L2Ball(r)`: `D^2 = 2 r^2`
/// - `Euclidean` + `Box`: `D^2 = 1/2 sum (upper_i - lower_i)^2`
/// - `NegativeEntropy` + `Simplex(d, floor > 0)`: `D^2 = ln(1/floor)`
///   (an upper bound on the KL divergence over the floored simplex)
///
/// The entropy diameter over the unfloored simplex is infinite; that case
/// and all other pairs require an explicit override.
pub fn diameter(geom: BregmanGeometry, set: &FeasibleSet) -> Result<Diameter> {
    match (geom, set) {
        (BregmanGeometry::Euclidean, FeasibleSet::L2Ball { radius, .. }) => {
            Diameter::from_value((2.0 * radius * radius).sqrt())
        }
        (BregmanGeometry::Euclidean, FeasibleSet::Box { lower, upper }) => {
            let sq: f64 = lower
                .iter()
                .zip(upper.iter())
                .map(|(l, u)| (u - l) * (u - l))
                .sum();
            Diameter::from_value((0.5 * sq).sqrt())
        }
        (BregmanGeometry::NegativeEntropy, FeasibleSet::Simplex { floor, .. }) => {
            if *floor > 0.0 {
                Diameter::from_value((1.0 / floor).ln().sqrt())
            } else {
                Err(Error::UnsupportedCombination(
                    "entropy diameter over the unfloored simplex is infinite; \
                     supply a diameter override or a positive floor"
                        .into(),
                ))
            }
        }
        (geom, _) => Err(Error::UnsupportedCombination(format!(
            "no closed-form diameter for {geom:?} over this set; supply an override"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn bregman_euclidean_identical_points() {
        let x = array![3.0, 4.0];
        assert_eq!(bregman_divergence(BregmanGeometry::Euclidean, &x, &x).unwrap(), 0.0);
    }

    #[test]
    fn bregman_euclidean_half_squared_distance() {
        let x = array![1.0, 0.0];
        let y = array![0.0, 0.0];
        let d = bregman_divergence(BregmanGeometry::Euclidean, &x, &y).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bregman_entropy_is_kl_on_simplex() {
        let x = array![0.5, 0.5];
        let y = array![0.25, 0.75];
        let d = bregman_divergence(BregmanGeometry::NegativeEntropy, &x, &y).unwrap();
        let expected = 0.5 * 2.0f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((d - expected).abs() < 1e-12);
        assert!((expected - 0.14384).abs() < 1e-5);
    }

    #[test]
    fn bregman_entropy_rejects_zero_anchor() {
        let x = array![0.5, 0.5];
        let y = array![0.0, 1.0];
        assert!(matches!(
            bregman_divergence(BregmanGeometry::NegativeEntropy, &x, &y),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn prox_euclidean_ball_scales_to_radius() {
        let set = FeasibleSet::centered_ball(2, 0.5).unwrap();
        let y = array![0.0, 0.0];
        let v = array![1.0, 0.0];
        let x = prox_step(BregmanGeometry::Euclidean, &set, &y, &v, 1.0).unwrap();
        assert!((x[0] - (-0.5)).abs() < 1e-15);
        assert!(x[1].abs() < 1e-15);
    }

    #[test]
    fn prox_zero_linear_term_returns_anchor() {
        let set = FeasibleSet::centered_ball(3, 1.0).unwrap();
        let y = array![0.1, -0.2, 0.3];
        let v = Array1::zeros(3);
        let x = prox_step(BregmanGeometry::Euclidean, &set, &y, &v, 2.5).unwrap();
        assert_eq!(x, y);

        let set = FeasibleSet::simplex(3, 0.0).unwrap();
        let y = array![0.2, 0.3, 0.5];
        let v = Array1::zeros(3);
        let x = prox_step(BregmanGeometry::NegativeEntropy, &set, &y, &v, 2.5).unwrap();
        for i in 0..3 {
            assert!((x[i] - y[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn prox_entropy_multiplicative_update() {
        let set = FeasibleSet::simplex(2, 0.0).unwrap();
        let y = array![0.5, 0.5];
        let v = array![2.0f64.ln(), 0.0];
        let x = prox_step(BregmanGeometry::NegativeEntropy, &set, &y, &v, 1.0).unwrap();
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-14);
        assert!((x[1] - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn prox_rejects_nan_and_unsupported_pairs() {
        let ball = FeasibleSet::centered_ball(2, 1.0).unwrap();
        let y = array![0.0, 0.0];
        assert!(matches!(
            prox_step(BregmanGeometry::Euclidean, &ball, &y, &array![f64::NAN, 0.0], 1.0),
            Err(Error::Numeric(_))
        ));
        assert!(matches!(
            prox_step(BregmanGeometry::NegativeEntropy, &ball, &y, &array![1.0, 0.0], 1.0),
            Err(Error::UnsupportedCombination(_))
        ));
    }

    #[test]
    fn prox_entropy_respects_floor() {
        let set = FeasibleSet::simplex(3, 0.05).unwrap();
        let y = array![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        let v = array![10.0, 0.0, -1.0];
        let x = prox_step(BregmanGeometry::NegativeEntropy, &set, &y, &v, 1.0).unwrap();
        assert!(set.contains(&x));
        assert!(x.iter().all(|xi| *xi >= 0.05 - 1e-12));
        assert!((x.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn project_interior_point_unchanged() {
        let set = FeasibleSet::centered_ball(2, 1.0).unwrap();
        let p = array![0.3, 0.4];
        assert_eq!(euclidean_project(&set, &p), p);
    }

    #[test]
    fn project_ball_radial_scaling() {
        let set = FeasibleSet::centered_ball(2, 1.0).unwrap();
        let p = array![3.0, 4.0];
        let x = euclidean_project(&set, &p);
        assert!((x[0] - 0.6).abs() < 1e-15);
        assert!((x[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn project_box_clamps() {
        let set = FeasibleSet::box_set(array![0.0, 0.0], array![1.0, 1.0]).unwrap();
        let p = array![-2.0, 0.5];
        let x = euclidean_project(&set, &p);
        assert_eq!(x, array![0.0, 0.5]);
    }

    #[test]
    fn project_simplex_uniform_from_origin() {
        let set = FeasibleSet::simplex(4, 0.0).unwrap();
        let x = euclidean_project(&set, &Array1::zeros(4));
        for xi in x.iter() {
            assert!((xi - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn diameter_closed_forms() {
        let ball = FeasibleSet::centered_ball(2, 1.0).unwrap();
        let d = diameter(BregmanGeometry::Euclidean, &ball).unwrap();
        assert!((d.value() - 2.0f64.sqrt()).abs() < 1e-15);

        let singleton = FeasibleSet::box_set(array![0.0, 0.0], array![0.0, 0.0]).unwrap();
        let d = diameter(BregmanGeometry::Euclidean, &singleton).unwrap();
        assert_eq!(d.value(), 0.0);

        let cube = FeasibleSet::box_set(Array1::zeros(4), Array1::ones(4)).unwrap();
        let d = diameter(BregmanGeometry::Euclidean, &cube).unwrap();
        assert!((d.value() - 2.0f64.sqrt()).abs() < 1e-15);

        let simplex = FeasibleSet::simplex(5, 1e-6).unwrap();
        let d = diameter(BregmanGeometry::NegativeEntropy, &simplex).unwrap();
        assert!((d.squared() - 1e6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn diameter_unfloored_simplex_requires_override() {
        let simplex = FeasibleSet::simplex(3, 0.0).unwrap();
        assert!(matches!(
            diameter(BregmanGeometry::NegativeEntropy, &simplex),
            Err(Error::UnsupportedCombination(_))
        ));
    }

    #[test]
    fn set_validation() {
        assert!(FeasibleSet::centered_ball(2, 0.0).is_err());
        assert!(FeasibleSet::box_set(array![1.0], array![0.0]).is_err());
        assert!(FeasibleSet::simplex(4, 0.25).is_err());
        assert!(FeasibleSet::simplex(4, 0.2).is_ok());
    }
}
