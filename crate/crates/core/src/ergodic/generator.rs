use serde::Serialize;

use super::{GridSpec, Policy, ProblemData};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Transition-rate matrix on the grid in compressed rows. Each row stores its
/// off-diagonal entries first and the diagonal last.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGenerator<T = f64> {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

/// Worst entries found by [`DiscreteGenerator::check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorCheck<T = f64> {
    pub min_off_diagonal: T,
    pub max_abs_row_sum: T,
}

impl<T: Scalar> DiscreteGenerator<T> {
    pub fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Columns and values of row `r`; the last entry is the diagonal.
    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn diagonal(&self, r: usize) -> T {
        self.vals[self.row_ptr[r + 1] - 1]
    }

    /// Lower and upper bandwidth.
    pub fn bandwidth(&self) -> (usize, usize) {
        let (mut lo, mut up) = (0, 0);
        for r in 0..self.rows() {
            for &c in self.row(r).0 {
                if c < r {
                    lo = lo.max(r - c);
                } else {
                    up = up.max(c - r);
                }
            }
        }
        (lo, up)
    }

    /// `y = L x`.
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *yr = cols.iter().zip(vals).fold(T::zero(), |acc, (&c, &v)| acc + v * x[c]);
        }
    }

    /// Row sums accumulated in storage order.
    pub fn row_sum(&self, r: usize) -> T {
        self.row(r).1.iter().fold(T::zero(), |acc, &v| acc + v)
    }

    pub fn check(&self) -> GeneratorCheck<T> {
        let mut min_off: Option<T> = None;
        let mut max_sum = T::zero();
        for r in 0..self.rows() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if c != r {
                    min_off = Some(min_off.map_or(v, |m: T| m.min_of(v)));
                }
            }
            max_sum = max_sum.max_of(self.row_sum(r).abs());
        }
        GeneratorCheck { min_off_diagonal: min_off.unwrap_or_else(T::zero), max_abs_row_sum: max_sum }
    }

    /// Off-diagonals nonnegative and every row sum within `tol` of zero.
    pub fn is_valid(&self, tol: T) -> bool {
        let c = self.check();
        c.min_off_diagonal >= T::zero() && c.max_abs_row_sum <= tol
    }
}

/// Assembles the monotone stencil for the given policy:
///
/// * axis neighbours `1/2 (A_ii/h_i^2 - sum_{j != i} |A_ij|/(h_i h_j))` plus the
///   upwind drift `max(0, +-nu^i)/h_i`;
/// * diagonal neighbours `|A_ij|/(2 h_i h_j)`, on `(+,+)` and `(-,-)` when
///   `A_ij > 0` and on `(+,-)` and `(-,+)` when `A_ij < 0`;
/// * diagonal entry minus the sum of the off-diagonals that stay inside the
///   grid, so mass leaving the domain is reflected.
pub fn discretize_generator<T: Scalar>(
    data: &ProblemData<T>,
    policy: &Policy<T>,
    grid: &GridSpec<T>,
) -> Result<DiscreteGenerator<T>> {
    data.check_monotone(grid)?;
    let d = grid.dim();
    let n = grid.len();
    if policy.dim() != d || policy.points() != n {
        return Err(Error::DimensionMismatch("policy does not match the grid".into()));
    }
    let half = T::lit(0.5);
    let axis: Vec<T> = (0..d)
        .map(|i| {
            let hi = grid.h(i);
            let mut c = data.a[i][i] / (hi * hi);
            for j in (0..d).filter(|&j| j != i) {
                c -= data.a[i][j].abs() / (hi * grid.h(j));
            }
            half * c
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            let a = data.a[i][j];
            if a != T::zero() {
                let dj: isize = if a > T::zero() { 1 } else { -1 };
                pairs.push((i, j, dj, a.abs() / (T::lit(2.0) * grid.h(i) * grid.h(j))));
            }
        }
    }

    let per_row = 2 * d + 2 * pairs.len() + 1;
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(n * per_row);
    let mut vals = Vec::with_capacity(n * per_row);
    row_ptr.push(0);
    for p in 0..n {
        let mut total = T::zero();
        let mut push = |c: usize, v: T, total: &mut T| {
            if v != T::zero() {
                cols.push(c);
                vals.push(v);
                *total += v;
            }
        };
        for i in 0..d {
            let nu = policy.nu(p, i);
            let hi = grid.h(i);
            if let Some(q) = grid.shift(p, i, 1) {
                push(q, axis[i] + nu.max_of(T::zero()) / hi, &mut total);
            }
            if let Some(q) = grid.shift(p, i, -1) {
                push(q, axis[i] + (-nu).max_of(T::zero()) / hi, &mut total);
            }
        }
        for &(i, j, dj, v) in &pairs {
            for s in [1isize, -1] {
                if let Some(q) = grid.shift(p, i, s).and_then(|q| grid.shift(q, j, s * dj)) {
                    push(q, v, &mut total);
                }
            }
        }
        cols.push(p);
        vals.push(-total);
        row_ptr.push(cols.len());
    }
    Ok(DiscreteGenerator { row_ptr, cols, vals })
}
