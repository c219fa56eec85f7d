use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    discretize_generator, extract_no_trade_region, policy_improvement, BandMatrix, DiscreteGenerator, ErgodicRegion,
    GridSpec, Policy, ProblemData,
};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Stop when `|a_j - a_{j-1}| < tol_rel |a_1|`.
    pub tol_rel: f64,
    pub max_iter: usize,
    /// Largest grid solved by banded LU; larger grids use BiCGSTAB.
    pub direct_limit: usize,
    pub iterative_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol_rel: 1e-9, max_iter: 200, direct_limit: 40401, iterative_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicSolution<T = f64> {
    /// Potential with `w(0) = 0`.
    pub w: Vec<T>,
    /// Ergodic constant.
    pub a: T,
    pub policy: Policy<T>,
    pub iterations: usize,
    pub a_history: Vec<T>,
    /// Wall time per iteration in milliseconds.
    pub timings_ms: Vec<f64>,
    pub region: ErgodicRegion<T>,
}

fn running_cost<T: Real>(policy: &Policy<T>, data: &ProblemData<T>, grid: &GridSpec<T>) -> Vec<T> {
    (0..grid.len()).map(|p| data.deviation_cost(&grid.point(p)) + data.v_z * policy.total_rate(p)).collect()
}

/// Solves `L w + a = -f` with `w(0) = 0`.
///
/// The unknown `a` takes the place of `w(0)`, giving the matrix `L` with the
/// origin column replaced by ones. That matrix is `B + u e_o^T`, where `B` has
/// the origin column replaced by `e_o` and `u = 1 - e_o`; `B` is banded and
/// factorized without pivoting, and the rank-one term is handled by
/// Sherman–Morrison. Grids above `cfg.direct_limit` points use BiCGSTAB.
pub fn policy_evaluation<T: Real>(
    gen: &DiscreteGenerator<T>,
    policy: &Policy<T>,
    data: &ProblemData<T>,
    grid: &GridSpec<T>,
    cfg: &SolverConfig,
) -> Result<(Vec<T>, T)> {
    let n = grid.len();
    if gen.rows() != n {
        return Err(Error::DimensionMismatch("generator does not match the grid".into()));
    }
    let o = grid.origin();
    let b: Vec<T> = running_cost(policy, data, grid).into_iter().map(|f| -f).collect();
    let mut x = if n <= cfg.direct_limit {
        let (kl, ku) = gen.bandwidth();
        let mut band = BandMatrix::zeros(n, kl, ku);
        for r in 0..n {
            let (cols, vals) = gen.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if c != o {
                    band.set(r, c, v);
                }
            }
        }
        band.set(o, o, T::one());
        band.factorize()?;
        let mut y = b;
        band.solve_in_place(&mut y);
        let mut z = vec![T::one(); n];
        z[o] = T::zero();
        band.solve_in_place(&mut z);
        let denom = T::one() + z[o];
        if denom == T::zero() {
            return Err(Error::SingularSystem("rank-one update is singular".into()));
        }
        let scale = y[o] / denom;
        y.iter().zip(&z).map(|(&yi, &zi)| yi - zi * scale).collect::<Vec<T>>()
    } else {
        let diag: Vec<T> = (0..n).map(|r| if r == o { T::one() } else { gen.diagonal(r) }).collect();
        super::bicgstab(
            |x, y| {
                for (r, yr) in y.iter_mut().enumerate() {
                    let (cols, vals) = gen.row(r);
                    let mut s = x[o];
                    for (&c, &v) in cols.iter().zip(vals) {
                        if c != o {
                            s += v * x[c];
                        }
                    }
                    *yr = s;
                }
            },
            &diag,
            &b,
            T::lit(cfg.iterative_tol),
            20 * n.max(100),
        )?
    };
    let a = x[o];
    x[o] = T::zero();
    if !a.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("non-finite solution".into()));
    }
    Ok((x, a))
}

/// Policy iteration from the zero policy until the ergodic constant settles
/// or the policy stops changing.
pub fn policy_iteration<T: Real>(
    data: &ProblemData<T>,
    grid: &GridSpec<T>,
    cfg: &SolverConfig,
) -> Result<ErgodicSolution<T>> {
    data.check_monotone(grid)?;
    let mut policy = Policy::zero(grid.len(), grid.dim());
    let mut history: Vec<T> = Vec::new();
    let mut timings = Vec::new();
    for j in 1..=cfg.max_iter.max(1) {
        let start = Instant::now();
        let gen = discretize_generator(data, &policy, grid)?;
        let (w, a) = policy_evaluation(&gen, &policy, data, grid, cfg)?;
        let next = policy_improvement(&w, data, grid);
        timings.push(start.elapsed().as_secs_f64() * 1e3);
        let settled = match history.last() {
            Some(&prev) => (a - prev).abs() < T::lit(cfg.tol_rel) * history[0].abs(),
            None => false,
        };
        history.push(a);
        if settled || next == policy {
            let region = extract_no_trade_region(&w, &policy, data, grid)?;
            return Ok(ErgodicSolution {
                w,
                a,
                policy,
                iterations: j,
                a_history: history,
                timings_ms: timings,
                region,
            });
        }
        policy = next;
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        a_history: history.iter().map(|a| a.to_f64().unwrap_or(f64::NAN)).collect(),
    })
}
