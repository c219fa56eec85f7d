use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Rectangular grid `prod_i {-below_i h_i, ..., above_i h_i}` containing the
/// origin exactly. Dimension 0 varies fastest in the flat index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec<T = f64> {
    h: Vec<T>,
    below: Vec<usize>,
    above: Vec<usize>,
    strides: Vec<usize>,
}

impl<T: Scalar> GridSpec<T> {
    /// Grid over `[lo_i, hi_i]` with step `h_i`; the bounds must be integer
    /// multiples of the step (up to rounding for floats).
    pub fn new(lo: &[T], hi: &[T], h: &[T]) -> Result<Self> {
        let d = h.len();
        if d == 0 || lo.len() != d || hi.len() != d {
            return Err(Error::InvalidGrid("lo, hi and h must have the same nonzero length".into()));
        }
        let mut below = Vec::with_capacity(d);
        let mut above = Vec::with_capacity(d);
        for i in 0..d {
            if !(h[i] > T::zero()) {
                return Err(Error::InvalidGrid(format!("h[{i}] must be positive")));
            }
            if !(lo[i] < T::zero() && hi[i] > T::zero()) {
                return Err(Error::InvalidGrid(format!("dimension {i} must satisfy lo < 0 < hi")));
            }
            below.push(steps(-lo[i], h[i], i)?);
            above.push(steps(hi[i], h[i], i)?);
        }
        Ok(Self::from_counts(h.to_vec(), below, above))
    }

    /// Symmetric grid `[-e_i, e_i]` with an odd number of points per dimension.
    pub fn symmetric(half_extent: &[T], points: &[usize]) -> Result<Self> {
        if half_extent.len() != points.len() || points.is_empty() {
            return Err(Error::InvalidGrid("half_extent and points must have the same nonzero length".into()));
        }
        let mut h = Vec::with_capacity(points.len());
        for (i, (&e, &n)) in half_extent.iter().zip(points).enumerate() {
            if n < 3 || n % 2 == 0 {
                return Err(Error::InvalidGrid(format!("points[{i}] must be odd and at least 3")));
            }
            if !(e > T::zero()) {
                return Err(Error::InvalidGrid(format!("half_extent[{i}] must be positive")));
            }
            h.push(e / T::from_usize(n / 2).expect("small integer"));
        }
        let half: Vec<usize> = points.iter().map(|&n| n / 2).collect();
        Ok(Self::from_counts(h, half.clone(), half))
    }

    fn from_counts(h: Vec<T>, below: Vec<usize>, above: Vec<usize>) -> Self {
        let mut strides = Vec::with_capacity(h.len());
        let mut s = 1;
        for i in 0..h.len() {
            strides.push(s);
            s *= below[i] + above[i] + 1;
        }
        Self { h, below, above, strides }
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self, i: usize) -> T {
        self.h[i]
    }

    pub fn steps(&self) -> &[T] {
        &self.h
    }

    /// Number of nodes along dimension `i`.
    pub fn count(&self, i: usize) -> usize {
        self.below[i] + self.above[i] + 1
    }

    pub fn len(&self) -> usize {
        (0..self.dim()).map(|i| self.count(i)).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, i: usize) -> usize {
        self.strides[i]
    }

    pub fn lo(&self, i: usize) -> T {
        self.coord(i, 0)
    }

    pub fn hi(&self, i: usize) -> T {
        self.coord(i, self.count(i) - 1)
    }

    /// Index of the origin along dimension `i`.
    pub fn origin_index(&self, i: usize) -> usize {
        self.below[i]
    }

    pub fn origin(&self) -> usize {
        (0..self.dim()).map(|i| self.below[i] * self.strides[i]).sum()
    }

    /// Coordinate of node `k` along dimension `i`.
    pub fn coord(&self, i: usize, k: usize) -> T {
        let n = T::from_usize(k).expect("small integer") - T::from_usize(self.below[i]).expect("small integer");
        n * self.h[i]
    }

    /// Node index along dimension `i` of flat index `p`.
    pub fn index_along(&self, p: usize, i: usize) -> usize {
        (p / self.strides[i]) % self.count(i)
    }

    pub fn point(&self, p: usize) -> Vec<T> {
        (0..self.dim()).map(|i| self.coord(i, self.index_along(p, i))).collect()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    /// Neighbour of `p` shifted by `dir` in dimension `i`, if inside the grid.
    pub fn shift(&self, p: usize, i: usize, dir: isize) -> Option<usize> {
        let k = self.index_along(p, i) as isize + dir;
        if k < 0 || k >= self.count(i) as isize {
            None
        } else {
            Some((p as isize + dir * self.strides[i] as isize) as usize)
        }
    }

    /// Flat index of the mirror image `xi -> -xi`, if the grid is symmetric.
    pub fn mirror(&self, p: usize) -> Option<usize> {
        if self.below != self.above {
            return None;
        }
        Some((0..self.dim()).map(|i| (self.count(i) - 1 - self.index_along(p, i)) * self.strides[i]).sum())
    }
}

fn steps<T: Scalar>(extent: T, h: T, dim: usize) -> Result<usize> {
    let n = (extent / h).to_f64_lossy().round();
    let nt = T::from_f64(n).ok_or_else(|| Error::InvalidGrid("too many grid points".into()))?;
    let gap = (nt * h - extent).abs();
    if !(gap <= T::lit(1e-9) * h) || n < 1.0 {
        return Err(Error::InvalidGrid(format!("bounds of dimension {dim} are not multiples of h")));
    }
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn indexing() {
        let g = GridSpec::<f64>::new(&[-0.2, -0.1], &[0.1, 0.2], &[0.1, 0.1]).unwrap();
        assert_eq!((g.count(0), g.count(1), g.len()), (4, 4, 16));
        let o = g.origin();
        assert_eq!(g.point(o), vec![0.0, 0.0]);
        assert_eq!(g.shift(o, 1, 1), Some(o + 4));
        assert_eq!(g.shift(0, 0, -1), None);
        assert!(g.mirror(0).is_none());
    }

    #[test]
    fn symmetric_rational_grid_is_exact() {
        let e = Rational::new(1, 2);
        let g = GridSpec::symmetric(&[e, e], &[5, 5]).unwrap();
        assert_eq!(g.h(0), Rational::new(1, 4));
        assert_eq!(g.lo(0), -e);
        assert_eq!(g.mirror(g.origin()), Some(g.origin()));
        assert_eq!(g.mirror(0), Some(24));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::<f64>::new(&[0.0], &[1.0], &[0.1]).is_err());
        assert!(GridSpec::<f64>::new(&[-0.25], &[1.0], &[0.1]).is_err());
        assert!(GridSpec::<f64>::symmetric(&[1.0], &[4]).is_err());
    }
}
