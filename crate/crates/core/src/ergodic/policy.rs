use rayon::prelude::*;
use serde::Serialize;

use super::{GridSpec, ProblemData};
use crate::scalar::Scalar;

/// Buy rates `l^i` and sell rates `m^i` per grid point, flat with stride `d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Policy<T = f64> {
    d: usize,
    buy: Vec<T>,
    sell: Vec<T>,
}

impl<T: Scalar> Policy<T> {
    pub fn zero(points: usize, d: usize) -> Self {
        Self { d, buy: vec![T::zero(); points * d], sell: vec![T::zero(); points * d] }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn points(&self) -> usize {
        self.buy.len() / self.d.max(1)
    }

    pub fn buy(&self, p: usize, i: usize) -> T {
        self.buy[p * self.d + i]
    }

    pub fn sell(&self, p: usize, i: usize) -> T {
        self.sell[p * self.d + i]
    }

    pub fn set(&mut self, p: usize, i: usize, buy: T, sell: T) {
        self.buy[p * self.d + i] = buy;
        self.sell[p * self.d + i] = sell;
    }

    /// Net drift `nu^i = l^i - m^i`.
    pub fn nu(&self, p: usize, i: usize) -> T {
        self.buy(p, i) - self.sell(p, i)
    }

    /// Total trading rate `sum_i (l^i + m^i)` at `p`.
    pub fn total_rate(&self, p: usize) -> T {
        (0..self.d).fold(T::zero(), |acc, i| acc + self.buy(p, i) + self.sell(p, i))
    }

    pub fn is_idle(&self, p: usize) -> bool {
        (0..self.d).all(|i| self.buy(p, i) == T::zero() && self.sell(p, i) == T::zero())
    }

    /// Rates in `[0, k_cap]` and never buying and selling the same asset.
    pub fn is_admissible(&self, k_cap: T) -> bool {
        self.buy.iter().zip(&self.sell).all(|(&b, &s)| {
            b >= T::zero() && s >= T::zero() && b <= k_cap && s <= k_cap && (b == T::zero() || s == T::zero())
        })
    }
}

/// Pointwise minimization of `nu^T D w + v_z sum (l + m)` over rates in
/// `[0, K]`, with `D` the upwind difference selected by the sign of `nu`.
/// The objective is affine in each rate, so the minimizer is bang-bang:
/// buy at rate `K` if `v_z + D+ w < 0`, sell if `v_z - D- w < 0`, the more
/// negative of the two if both; exact ties and the grid edges (no neighbour
/// to move to) give no trade.
pub fn policy_improvement<T: Scalar>(w: &[T], data: &ProblemData<T>, grid: &GridSpec<T>) -> Policy<T> {
    let d = grid.dim();
    let n = grid.len();
    let mut policy = Policy::zero(n, d);
    let k = data.k_cap;
    let zero = T::zero();
    policy
        .buy
        .par_chunks_mut(d)
        .zip(policy.sell.par_chunks_mut(d))
        .enumerate()
        .for_each(|(p, (buy, sell))| {
            for i in 0..d {
                let h = grid.h(i);
                let up = grid.shift(p, i, 1).map(|q| data.v_z + (w[q] - w[p]) / h);
                let down = grid.shift(p, i, -1).map(|q| data.v_z - (w[p] - w[q]) / h);
                match (up, down) {
                    (Some(u), Some(dn)) if u < zero && u < dn => buy[i] = k,
                    (Some(u), Some(dn)) if dn < zero && dn < u => sell[i] = k,
                    (Some(u), None) if u < zero => buy[i] = k,
                    (None, Some(dn)) if dn < zero => sell[i] = k,
                    _ => {}
                }
            }
        });
    policy
}
