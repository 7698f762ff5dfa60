//! Small dense symmetric-matrix helpers (Cholesky factor, solve, log-det).
//! Model dimensions here are tiny (p ≤ 30), so a hand-rolled factorization
//! beats pulling in a linear-algebra crate.

/// Lower Cholesky factor of a symmetric positive-definite matrix stored
/// row-major. Returns `None` when the matrix is not positive definite.
pub(crate) fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solve `A x = b` given the lower Cholesky factor of `A`.
pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// log det(A) from the lower Cholesky factor of `A`.
pub(crate) fn cholesky_log_det(l: &[f64], n: usize) -> f64 {
    (0..n).map(|i| l[i * n + i].ln()).sum::<f64>() * 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn factor_solve_round_trip() {
        // A = [[4,2,0.6],[2,5,1],[0.6,1,3]]
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let l = cholesky(&a, 3).unwrap();
        let x = cholesky_solve(&l, 3, &[1.0, 2.0, 3.0]);
        // check A x = b
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert_abs_diff_eq!(row, (i + 1) as f64, epsilon = 1e-12);
        }
        // det(A) by cofactor expansion: 4*14 - 2*5.4 + 0.6*(-1) = 44.6
        assert_abs_diff_eq!(cholesky_log_det(&l, 3), 44.6f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = [1.0, 2.0, 2.0, 1.0];
        assert!(cholesky(&a, 2).is_none());
    }
}
