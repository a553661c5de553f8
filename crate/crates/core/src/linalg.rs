//! Small dense numeric helpers shared across modules.

use ndarray::{Array1, Array2};

use crate::{Error, Result};

/// Euclidean norm.
pub fn l2_norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Sum of absolute values.
pub fn l1_norm(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Largest absolute coordinate.
pub fn linf_norm(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn all_finite(v: &Array1<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Compensated (Kahan) accumulator for long nonnegative sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Cholesky factorization of a symmetric positive-definite matrix.
/// Returns the lower factor, or `Numeric` if a pivot is not positive.
pub fn cholesky(m: &Array2<f64>) -> Result<Array2<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.ncols(),
        });
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::Numeric(format!(
                        "cholesky pivot {s:e} at row {i}; matrix not positive definite"
                    )));
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solves `m x = rhs` for symmetric positive-definite `m`.
pub fn cholesky_solve(m: &Array2<f64>, rhs: &Array1<f64>) -> Result<Array1<f64>> {
    let l = cholesky(m)?;
    let n = rhs.len();
    // forward substitution: L z = rhs
    let mut z = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= l[[i, k]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    // back substitution: L^T x = z
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    Ok(x)
}

/// Solves a general square system by Gaussian elimination with partial
/// pivoting.
pub fn lu_solve(m: &Array2<f64>, rhs: &Array1<f64>) -> Result<Array1<f64>> {
    let n = m.nrows();
    if m.ncols() != n || rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if m.ncols() != n { m.ncols() } else { rhs.len() },
        });
    }
    let mut a = m.clone();
    let mut b = rhs.clone();
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[[row, col]].abs() > a[[pivot, col]].abs() {
                pivot = row;
            }
        }
        if a[[pivot, col]].abs() < 1e-300 {
            return Err(Error::Numeric(format!("singular matrix at column {col}")));
        }
        if pivot != col {
            for k in 0..n {
                let tmp = a[[col, k]];
                a[[col, k]] = a[[pivot, k]];
                a[[pivot, k]] = tmp;
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let factor = a[[row, col]] / a[[col, col]];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[[row, k]] -= factor * a[[col, k]];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = Array1::<f64>::zeros(n);
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[[row, k]] * x[k];
        }
        x[row] = s / a[[row, row]];
    }
    Ok(x)
}

/// Largest eigenvalue of a symmetric positive-semidefinite matrix by power
/// iteration with a deterministic start vector.
pub fn largest_eigenvalue_sym(m: &Array2<f64>) -> f64 {
    largest_eigenvalue_matvec(m.nrows(), |v| m.dot(v))
}

/// Power iteration on an abstract symmetric PSD operator `v -> M v`.
pub fn largest_eigenvalue_matvec<F>(dim: usize, matvec: F) -> f64
where
    F: Fn(&Array1<f64>) -> Array1<f64>,
{
    if dim == 0 {
        return 0.0;
    }
    // Deterministic, non-degenerate start: varying coordinates avoid
    // starting orthogonal to the top eigenvector for structured matrices.
    let mut v = Array1::from_iter((0..dim).map(|i| 1.0 + ((i % 7) as f64) * 0.125));
    let mut norm = l2_norm(&v);
    v /= norm;
    let mut lambda = 0.0f64;
    for _ in 0..2000 {
        let w = matvec(&v);
        norm = l2_norm(&w);
        if norm == 0.0 {
            return 0.0;
        }
        let next = w.dot(&v);
        v = w / norm;
        if (next - lambda).abs() <= 1e-14 * next.abs().max(1.0) {
            return next;
        }
        lambda = next;
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cholesky_solve_recovers_solution() {
        let m = array![[4.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 2.0]];
        let x_true = array![1.0, -2.0, 0.5];
        let rhs = m.dot(&x_true);
        let x = cholesky_solve(&m, &rhs).unwrap();
        for i in 0..3 {
            assert!((x[i] - x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(cholesky(&m).is_err());
    }

    #[test]
    fn lu_solve_general_system() {
        let m = array![[0.0, 2.0, 1.0], [1.0, -1.0, 0.5], [3.0, 0.0, -1.0]];
        let x_true = array![0.5, -1.5, 2.0];
        let rhs = m.dot(&x_true);
        let x = lu_solve(&m, &rhs).unwrap();
        for i in 0..3 {
            assert!((x[i] - x_true[i]).abs() < 1e-12);
        }
        let singular = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(lu_solve(&singular, &array![1.0, 2.0]).is_err());
    }

    #[test]
    fn power_iteration_diagonal() {
        let m = array![[3.0, 0.0], [0.0, 7.0]];
        let lambda = largest_eigenvalue_sym(&m);
        assert!((lambda - 7.0).abs() < 1e-10);
    }

    #[test]
    fn kahan_tracks_long_sum() {
        let mut k = KahanSum::default();
        for _ in 0..1_000_000 {
            k.add(0.1);
        }
        assert!((k.value() - 100_000.0).abs() < 1e-9);
    }
}
