//! Scratch harness for probing suboptimality slopes on nonsmooth variants.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use unixgrad::geometry::{BregmanGeometry, FeasibleSet};
use unixgrad::linalg::{l2_norm, lu_solve};
use unixgrad::oracles::{Problem, Reference};
use unixgrad::solver::{run, SolverConfig, SolverVariant};

fn normal_vec(rng: &mut ChaCha8Rng, len: usize, sigma: f64) -> Array1<f64> {
    Array1::from_iter((0..len).map(|_| {
        let z: f64 = rand_distr::StandardNormal.sample(rng);
        sigma * z
    }))
}

fn slope(curve: &[(usize, f64)]) -> f64 {
    let xs: Vec<f64> = curve.iter().map(|(t, _)| (*t as f64).ln()).collect();
    let ys: Vec<f64> = curve.iter().map(|(_, v)| v.max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

fn measure(problem: &Problem, label: &str, horizon: usize) {
    let config = SolverConfig::new(
        horizon,
        BregmanGeometry::Euclidean,
        problem.set.clone(),
        SolverVariant::UniXGrad,
    );
    let trace = run(problem, &config).unwrap();
    let f_star = problem.reference.as_ref().unwrap().objective;
    let cps: Vec<usize> = (7..)
        .map(|k| 1usize << k)
        .take_while(|t| *t <= horizon)
        .collect();
    let curve: Vec<(usize, f64)> = cps
        .iter()
        .map(|&t| (t, trace.records[t - 1].objective - f_star))
        .collect();
    println!(
        "{label}: slope={:+.3} last={:.2e}",
        slope(&curve),
        curve.last().unwrap().1
    );
}

/// Narrow-valley variant: kink rows nearly parallel to a common direction.
fn valley(seed: u64, d: usize, n: usize, parallelism: f64) -> (Problem, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = {
        let v = normal_vec(&mut rng, d, 1.0);
        &v / l2_norm(&v)
    };
    let mut a = Array2::<f64>::zeros((n, d));
    for i in 0..d {
        let v = normal_vec(&mut rng, d, 1.0);
        for j in 0..d {
            a[[i, j]] = u[j] + parallelism * v[j];
        }
    }
    for i in d..n {
        let v = normal_vec(&mut rng, d, 1.0);
        for j in 0..d {
            a[[i, j]] = v[j];
        }
    }
    let dir = normal_vec(&mut rng, d, 1.0);
    let x_star = dir.mapv(|v| 0.5 * v / l2_norm(&dir));
    let signs = Array1::from_iter((0..n - d).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }));
    let kink_block = a.slice(ndarray::s![..d, ..]).t().to_owned();
    let rest_block = a.slice(ndarray::s![d.., ..]).t().to_owned();
    let rhs = rest_block.dot(&signs).mapv(|v| -v);
    let w = lu_solve(&kink_block, &rhs).unwrap();
    let w_max = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gamma = if w_max > 0.5 { 0.5 / w_max } else { 1.0 };
    for i in d..n {
        for j in 0..d {
            a[[i, j]] *= gamma;
        }
    }
    let mut b = a.dot(&x_star);
    for i in d..n {
        b[i] -= signs[i - d] * 0.1 * (0.1 + 0.9 * rng.random::<f64>());
    }
    let set = FeasibleSet::centered_ball(d, 1.0).unwrap();
    let mut problem = Problem::l1_regression(a, b, set).unwrap();
    let f_star = problem.evaluate(&x_star).unwrap();
    problem.reference = Some(Reference {
        x: x_star.clone(),
        objective: f_star,
    });
    (problem, x_star)
}

/// Boundary + kink variant: optimum on the sphere with k active rows and the
/// outward-pointing KKT combination.
fn boundary_kinks(seed: u64, d: usize, n: usize, k: usize) -> (Problem, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Array2::<f64>::zeros((n, d));
    for i in 0..n {
        let v = normal_vec(&mut rng, d, 1.0);
        for j in 0..d {
            a[[i, j]] = v[j];
        }
    }
    let signs = Array1::from_iter((0..n - k).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }));
    // choose interior weights for the k active rows, then read off x* from
    // the resulting subgradient direction
    let w = Array1::from_iter((0..k).map(|_| 0.4 * (2.0 * rng.random::<f64>() - 1.0)));
    let mut c = Array1::<f64>::zeros(d);
    for i in 0..k {
        for j in 0..d {
            c[j] += w[i] * a[[i, j]];
        }
    }
    for i in k..n {
        for j in 0..d {
            c[j] += signs[i - k] * a[[i, j]];
        }
    }
    let c = c / n as f64;
    let c_norm = l2_norm(&c);
    let x_star = c.mapv(|v| -v / c_norm); // radius 1 ball, boundary point
    // active rows must pass through x*: adjust b; inactive rows keep signs
    let mut b = a.dot(&x_star);
    for i in k..n {
        b[i] -= signs[i - k] * 0.1 * (0.1 + 0.9 * rng.random::<f64>());
    }
    let set = FeasibleSet::centered_ball(d, 1.0).unwrap();
    let mut problem = Problem::l1_regression(a, b, set).unwrap();
    let f_star = problem.evaluate(&x_star).unwrap();
    problem.reference = Some(Reference {
        x: x_star.clone(),
        objective: f_star,
    });
    (problem, x_star)
}

fn main() {
    for parallelism in [0.3, 0.05, 0.01] {
        let (problem, _) = valley(5, 10, 40, parallelism);
        measure(&problem, &format!("valley p={parallelism}"), 16384);
    }
    for k in [1, 3, 9] {
        let (problem, x_star) = boundary_kinks(5, 10, 40, k);
        // sanity: x* must actually be optimal; spot check with random probes
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let f_star = problem.reference.as_ref().unwrap().objective;
        let mut violated = false;
        for _ in 0..2000 {
            let p = unixgrad::geometry::euclidean_project(
                &problem.set,
                &(&x_star + &(normal_vec(&mut rng, 10, 1.0) * 1e-3)),
            );
            if problem.evaluate(&p).unwrap() < f_star - 1e-12 {
                violated = true;
                break;
            }
        }
        println!("boundary k={k}: certificate {}", if violated { "VIOLATED" } else { "ok" });
        if !violated {
            measure(&problem, &format!("boundary k={k}"), 16384);
        }
    }
}
