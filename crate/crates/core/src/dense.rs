//! Tiny dense helpers for d <= 3 matrices (row-major `Vec<Vec<T>>`).

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

pub type Matrix<T> = Vec<Vec<T>>;

pub fn zeros<T: Scalar>(rows: usize, cols: usize) -> Matrix<T> {
    vec![vec![T::zero(); cols]; rows]
}

pub fn identity<T: Scalar>(n: usize) -> Matrix<T> {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn matmul<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).fold(T::zero(), |acc, k| acc + row[k] * b[k][j]))
                .collect()
        })
        .collect()
}

pub fn transpose<T: Scalar>(a: &Matrix<T>) -> Matrix<T> {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

/// `a * a^T`.
pub fn gram<T: Scalar>(a: &Matrix<T>) -> Matrix<T> {
    matmul(a, &transpose(a))
}

pub fn is_square<T>(a: &Matrix<T>, n: usize) -> bool {
    a.len() == n && a.iter().all(|row| row.len() == n)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.len();
    if !is_square(a, n) {
        return Err(Error::DimensionMismatch("cholesky needs a square matrix".into()));
    }
    let mut l = zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = (0..j).fold(a[i][j], |acc, k| acc - l[i][k] * l[j][k]);
            if i == j {
                if !(s > T::zero()) {
                    return Err(Error::InvalidParameter {
                        field: "rho",
                        reason: "must yield a positive definite correlation matrix".into(),
                    });
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Solves `a x = b` for symmetric positive definite `a`.
pub fn spd_solve<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let l = cholesky(a)?;
    let n = b.len();
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        y[i] = (0..i).fold(b[i], |acc, k| acc - l[i][k] * y[k]) / l[i][i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        x[i] = ((i + 1)..n).fold(y[i], |acc, k| acc - l[k][i] * x[k]) / l[i][i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let a: Matrix<f64> = vec![vec![4.0, 2.0], vec![2.0, 3.0]];
        let l = cholesky(&a).unwrap();
        let back = gram(&l);
        for i in 0..2 {
            for j in 0..2 {
                assert!((back[i][j] - a[i][j]).abs() < 1e-15);
            }
        }
        let x = spd_solve(&a, &[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 1.0).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(cholesky(&a).is_err());
    }
}
