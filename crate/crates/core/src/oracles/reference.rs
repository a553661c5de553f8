//! High-accuracy reference solutions for measuring suboptimality.

use ndarray::{Array1, Array2};

use crate::geometry::{euclidean_project, FeasibleSet};
use crate::linalg::{cholesky_solve, l2_norm};
use crate::{Error, Result};

use super::{ObjectiveKind, Problem, Reference};

/// Computes a feasible minimizer to high accuracy.
///
/// Routes:
/// - least squares on an L2 ball: bisection on the ridge multiplier `mu` in
///   `x(mu) = (A^T A / n + mu I)^{-1} A^T b / n` until the solution norm
///   meets the radius (`mu = 0` when the unconstrained solution is interior);
/// - smooth objectives (least squares, squared hinge) on balls and boxes:
///   accelerated projected gradient with adaptive restarts;
/// - any objective in dimension <= 3: nested grid refinement.
pub fn solve_reference(problem: &Problem) -> Result<Reference> {
    let reference = match (&problem.kind, &problem.set) {
        (ObjectiveKind::LeastSquares { a, b }, FeasibleSet::L2Ball { center, radius }) => {
            ball_constrained_least_squares(a, b, center, *radius)?
        }
        (ObjectiveKind::LeastSquares { .. }, FeasibleSet::Box { .. })
        | (ObjectiveKind::SquaredHingeSvm { .. }, FeasibleSet::L2Ball { .. })
        | (ObjectiveKind::SquaredHingeSvm { .. }, FeasibleSet::Box { .. }) => {
            accelerated_projected_gradient(problem)?
        }
        _ if problem.dim() <= 3 => nested_grid(problem)?,
        _ => {
            return Err(Error::ReferenceFailure(
                "no reference route for this problem/set pair".into(),
            ))
        }
    };
    let objective = problem.evaluate(&reference)?;
    Ok(Reference {
        x: reference,
        objective,
    })
}

fn ball_constrained_least_squares(
    a: &Array2<f64>,
    b: &Array1<f64>,
    center: &Array1<f64>,
    radius: f64,
) -> Result<Array1<f64>> {
    let n = a.nrows() as f64;
    // shift to a centered ball: minimize over ||z|| <= r with b' = b - A c
    let b_shift = b - &a.dot(center);
    let gram = a.t().dot(a) / n;
    let rhs = a.t().dot(&b_shift) / n;

    let solve_at = |mu: f64| -> Result<Array1<f64>> {
        let mut m = gram.clone();
        for i in 0..m.nrows() {
            m[[i, i]] += mu;
        }
        cholesky_solve(&m, &rhs)
    };

    // interior branch
    if let Ok(z0) = solve_at(0.0) {
        if l2_norm(&z0) <= radius {
            return Ok(&z0 + center);
        }
    } else {
        // singular Gram matrix: a vanishing ridge recovers the minimal-norm
        // solution; accept it when it is interior
        let z = solve_at(1e-12)?;
        if l2_norm(&z) <= radius {
            return Ok(&z + center);
        }
    }

    // ||z(mu)|| decreases in mu and ||z(mu)|| <= ||rhs|| / mu, so this upper
    // end is guaranteed feasible
    let mut lo = 0.0;
    let mut hi = (l2_norm(&rhs) / radius).max(1e-12);
    while l2_norm(&solve_at(hi)?) > radius {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::ReferenceFailure("ridge bisection bracket diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let feasible = match solve_at(mid) {
            Ok(z) => l2_norm(&z) <= radius,
            Err(_) => false, // Gram + mu I singular only near mu = 0
        };
        if feasible {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(&solve_at(hi)? + center)
}

/// FISTA with function-value restarts; the step uses the certified
/// smoothness constant.
fn accelerated_projected_gradient(problem: &Problem) -> Result<Array1<f64>> {
    let l = problem
        .constants
        .smoothness
        .ok_or_else(|| Error::ReferenceFailure("smoothness constant required".into()))?;
    if !(l > 0.0) {
        // zero-smooth objective is constant: every feasible point minimizes
        return Ok(euclidean_project(&problem.set, &Array1::zeros(problem.dim())));
    }
    let step = 1.0 / l;
    let mut x = euclidean_project(&problem.set, &Array1::zeros(problem.dim()));
    let mut momentum = x.clone();
    let mut theta = 1.0f64;
    let mut best = problem.evaluate(&x)?;
    let mut stall = 0usize;
    for _ in 0..400_000 {
        let g = problem.gradient(&momentum)?;
        let next = euclidean_project(&problem.set, &(&momentum - &(g * step)));
        let f_next = problem.evaluate(&next)?;
        if f_next > best {
            // restart the momentum sequence
            theta = 1.0;
            momentum = x.clone();
            let g = problem.gradient(&momentum)?;
            let restarted = euclidean_project(&problem.set, &(&momentum - &(g * step)));
            let f_restarted = problem.evaluate(&restarted)?;
            if f_restarted >= best - best.abs().max(1e-300) * 1e-16 {
                stall += 1;
                if stall > 32 {
                    return Ok(x);
                }
            } else {
                stall = 0;
            }
            if f_restarted < best {
                best = f_restarted;
                x = restarted.clone();
            }
            momentum = restarted;
            continue;
        }
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let beta = (theta - 1.0) / theta_next;
        momentum = &next + &((&next - &x) * beta);
        theta = theta_next;
        if best - f_next <= best.abs().max(1e-300) * 1e-16 {
            stall += 1;
            if stall > 256 {
                x = next;
                return Ok(x);
            }
        } else {
            stall = 0;
        }
        best = f_next;
        x = next;
    }
    Err(Error::ReferenceFailure(
        "projected gradient did not converge within its iteration cap".into(),
    ))
}

/// Nested grid refinement for dimensions <= 3: evaluate the objective on a
/// lattice projected onto the set, then shrink the lattice window around the
/// incumbent. Convexity makes the incumbent converge to the global minimum.
fn nested_grid(problem: &Problem) -> Result<Array1<f64>> {
    let d = problem.dim();
    if d > 3 {
        return Err(Error::ReferenceFailure("grid refinement limited to dimension <= 3".into()));
    }
    let (mut lo, mut hi) = bounding_box(&problem.set);
    let per_axis = 33usize;
    let mut best_x = euclidean_project(&problem.set, &Array1::zeros(d));
    let mut best_f = problem.evaluate(&best_x)?;
    for _level in 0..24 {
        let mut idx = vec![0usize; d];
        loop {
            let p = Array1::from_iter(idx.iter().enumerate().map(|(k, &i)| {
                if per_axis == 1 {
                    0.5 * (lo[k] + hi[k])
                } else {
                    lo[k] + (hi[k] - lo[k]) * i as f64 / (per_axis - 1) as f64
                }
            }));
            let candidate = euclidean_project(&problem.set, &p);
            let f = problem.evaluate(&candidate)?;
            if f < best_f {
                best_f = f;
                best_x = candidate;
            }
            // odometer increment
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < per_axis {
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
        // shrink the window around the incumbent
        let mut done = true;
        for k in 0..d {
            let pitch = (hi[k] - lo[k]) / (per_axis - 1) as f64;
            let half = 2.0 * pitch;
            lo[k] = best_x[k] - half;
            hi[k] = best_x[k] + half;
            if half > 1e-12 {
                done = false;
            }
        }
        if done {
            break;
        }
    }
    Ok(best_x)
}

fn bounding_box(set: &FeasibleSet) -> (Vec<f64>, Vec<f64>) {
    match set {
        FeasibleSet::L2Ball { center, radius } => (
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        ),
        FeasibleSet::Box { lower, upper } => (lower.to_vec(), upper.to_vec()),
        FeasibleSet::Simplex { dim, .. } => (vec![0.0; *dim], vec![1.0; *dim]),
    }
}
