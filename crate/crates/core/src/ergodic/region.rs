use std::collections::VecDeque;

use serde::Serialize;

use super::{GridSpec, Policy, ProblemData};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Trading action at a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MaskCode {
    NoTrade,
    Buy(usize),
    Sell(usize),
    /// Trading in more than one asset.
    Corner,
}

impl MaskCode {
    pub fn of<T: Scalar>(policy: &Policy<T>, p: usize) -> Self {
        let mut code = MaskCode::NoTrade;
        for i in 0..policy.dim() {
            let this = if policy.buy(p, i) > T::zero() {
                MaskCode::Buy(i)
            } else if policy.sell(p, i) > T::zero() {
                MaskCode::Sell(i)
            } else {
                continue;
            };
            code = if code == MaskCode::NoTrade { this } else { MaskCode::Corner };
        }
        code
    }

    /// CSV code: 0 none, `+-(i+1)` buy or sell asset `i`, `d+1` several assets
    /// (3 in two dimensions).
    pub fn code(self, d: usize) -> i32 {
        match self {
            MaskCode::NoTrade => 0,
            MaskCode::Buy(i) => i as i32 + 1,
            MaskCode::Sell(i) => -(i as i32 + 1),
            MaskCode::Corner => d as i32 + 1,
        }
    }
}

/// Zero-policy set around the origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicRegion<T = f64> {
    /// Per-point codes, see [`MaskCode::code`].
    pub codes: Vec<i32>,
    /// Connected zero-policy component containing the origin.
    pub no_trade: Vec<bool>,
    /// Boundary along each coordinate axis through the origin, located by
    /// linear interpolation of the switching function between the last
    /// no-trade node and the first trading node.
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub halfwidth: Vec<T>,
    /// True in dimension `i` if the component reaches the grid edge.
    pub truncated: Vec<bool>,
    /// Two dimensions only: for each dimension `i` and each node of the other
    /// coordinate, `(other, min, max)` of the component's `xi^i` (node values).
    pub sections: Vec<Vec<(T, T, T)>>,
}

/// Extracts the no-trade component, axis boundaries and cross-sections.
pub fn extract_no_trade_region<T: Scalar>(
    w: &[T],
    policy: &Policy<T>,
    data: &ProblemData<T>,
    grid: &GridSpec<T>,
) -> Result<ErgodicRegion<T>> {
    let n = grid.len();
    let d = grid.dim();
    let o = grid.origin();
    if !policy.is_idle(o) {
        return Err(Error::EmptyRegion);
    }
    let codes: Vec<i32> = (0..n).map(|p| MaskCode::of(policy, p).code(d)).collect();
    let mut no_trade = vec![false; n];
    let mut queue = VecDeque::from([o]);
    no_trade[o] = true;
    while let Some(p) = queue.pop_front() {
        for i in 0..d {
            for s in [1isize, -1] {
                if let Some(q) = grid.shift(p, i, s) {
                    if !no_trade[q] && policy.is_idle(q) {
                        no_trade[q] = true;
                        queue.push_back(q);
                    }
                }
            }
        }
    }

    let mut lower = Vec::with_capacity(d);
    let mut upper = Vec::with_capacity(d);
    let mut truncated = vec![false; d];
    for i in 0..d {
        let h = grid.h(i);
        // Sell switch v_z - D- w on the upper side, buy switch v_z + D+ w below.
        let switch = |q: usize, dir: isize| {
            if dir > 0 {
                grid.shift(q, i, -1).map(|r| data.v_z - (w[q] - w[r]) / h)
            } else {
                grid.shift(q, i, 1).map(|r| data.v_z + (w[r] - w[q]) / h)
            }
        };
        let mut bounds = [T::zero(); 2];
        for (slot, dir) in [(1usize, 1isize), (0, -1)] {
            let mut p = o;
            loop {
                match grid.shift(p, i, dir) {
                    Some(q) if no_trade[q] => p = q,
                    Some(q) => {
                        let xa = grid.coord(i, grid.index_along(p, i));
                        let xb = grid.coord(i, grid.index_along(q, i));
                        bounds[slot] = match (switch(p, dir), switch(q, dir)) {
                            (Some(ga), Some(gb)) if ga >= T::zero() && gb < T::zero() => {
                                xa + (xb - xa) * ga / (ga - gb)
                            }
                            _ => (xa + xb) / T::lit(2.0),
                        };
                        break;
                    }
                    None => {
                        truncated[i] = true;
                        bounds[slot] = grid.coord(i, grid.index_along(p, i));
                        break;
                    }
                }
            }
        }
        lower.push(bounds[0]);
        upper.push(bounds[1]);
    }
    let halfwidth = lower.iter().zip(&upper).map(|(&l, &u)| (u - l) / T::lit(2.0)).collect();

    let mut sections = Vec::new();
    if d == 2 {
        for i in 0..2 {
            let j = 1 - i;
            let mut rows = Vec::new();
            for kj in 0..grid.count(j) {
                let mut extent: Option<(T, T)> = None;
                for ki in 0..grid.count(i) {
                    let mut idx = [0usize; 2];
                    idx[i] = ki;
                    idx[j] = kj;
                    if no_trade[grid.flat(&idx)] {
                        let x = grid.coord(i, ki);
                        extent = Some(extent.map_or((x, x), |(lo, hi)| (lo.min_of(x), hi.max_of(x))));
                    }
                }
                if let Some((lo, hi)) = extent {
                    rows.push((grid.coord(j, kj), lo, hi));
                }
            }
            sections.push(rows);
        }
    }
    Ok(ErgodicRegion { codes, no_trade, lower, upper, halfwidth, truncated, sections })
}
