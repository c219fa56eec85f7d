//! Multi-asset first corrector as an ergodic control problem.
//!
//! Trading is approximated by rates `l, m` in `[0, K]`, the generator is
//! discretized with a monotone upwind stencil, and policy iteration alternates
//! a linear solve for `(w, a)` with a pointwise bang-bang improvement. The
//! no-trade region is the zero-policy component containing the origin.

mod generator;
mod grid;
mod linalg;
mod policy;
mod region;
mod solver;

pub use generator::{discretize_generator, DiscreteGenerator, GeneratorCheck};
pub use grid::GridSpec;
pub use linalg::{bicgstab, BandMatrix};
pub use policy::{policy_improvement, Policy};
pub use region::{extract_no_trade_region, ErgodicRegion, MaskCode};
pub use solver::{policy_evaluation, policy_iteration, ErgodicSolution, SolverConfig};

use serde::Serialize;

use crate::dense::{self, Matrix};
use crate::error::{invalid, Error, Result};
use crate::models::{MultiAssetParams, Validate};
use crate::scalar::{Real, Scalar};

/// `alpha = (I - theta_z 1^T) diag(theta) sigma_S`.
pub fn build_alpha_matrix<T: Scalar>(theta: &[T], theta_z: &[T], sigma_s: &Matrix<T>) -> Result<Matrix<T>> {
    let d = theta.len();
    if theta_z.len() != d || !dense::is_square(sigma_s, d) {
        return Err(Error::DimensionMismatch(format!(
            "theta has {d} entries, theta_z {}, sigma_S must be {d}x{d}",
            theta_z.len()
        )));
    }
    let left: Matrix<T> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { T::one() - theta_z[i] } else { -theta_z[i] }).collect())
        .collect();
    let scaled: Matrix<T> = (0..d).map(|i| sigma_s[i].iter().map(|&x| theta[i] * x).collect()).collect();
    Ok(dense::matmul(&left, &scaled))
}

/// Frozen data of the ergodic problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemData<T = f64> {
    pub alpha: Matrix<T>,
    /// `alpha alpha^T`.
    pub a: Matrix<T>,
    pub v_z: T,
    pub v_zz: T,
    pub sigma_s: Matrix<T>,
    /// Cap on trading rates.
    pub k_cap: T,
    /// `sigma_S sigma_S^T`.
    pub cov: Matrix<T>,
}

impl<T: Scalar> ProblemData<T> {
    pub fn new(alpha: Matrix<T>, v_z: T, v_zz: T, sigma_s: Matrix<T>, k_cap: T) -> Result<Self> {
        let d = alpha.len();
        if d == 0 || !dense::is_square(&alpha, d) || !dense::is_square(&sigma_s, d) {
            return Err(Error::DimensionMismatch("alpha and sigma_S must be square of the same size".into()));
        }
        if !(v_z > T::zero()) {
            return Err(invalid("v_z", "must be positive"));
        }
        if !(v_zz < T::zero()) {
            return Err(invalid("v_zz", "must be negative"));
        }
        if !(k_cap > T::zero()) {
            return Err(invalid("K", "must be positive"));
        }
        let a = dense::gram(&alpha);
        let cov = dense::gram(&sigma_s);
        Ok(Self { alpha, a, v_z, v_zz, sigma_s, k_cap, cov })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// Checks `A_ii / h_i^2 - sum_{j != i} |A_ij| / (h_i h_j) >= 0` for every `i`.
    pub fn check_monotone(&self, grid: &GridSpec<T>) -> Result<()> {
        let d = self.dim();
        if grid.dim() != d {
            return Err(Error::DimensionMismatch(format!("grid has dimension {}, problem {d}", grid.dim())));
        }
        for i in 0..d {
            let hi = grid.h(i);
            let mut margin = self.a[i][i] / (hi * hi);
            for j in (0..d).filter(|&j| j != i) {
                margin -= self.a[i][j].abs() / (hi * grid.h(j));
            }
            if margin < T::zero() {
                return Err(Error::NonMonotoneStencil { dim: i, margin: margin.to_f64_lossy() });
            }
        }
        Ok(())
    }

    /// Running cost `-1/2 |sigma_S^T xi|^2 v_zz` without the trading part.
    pub fn deviation_cost(&self, xi: &[T]) -> T {
        let d = self.dim();
        let mut q = T::zero();
        for i in 0..d {
            for j in 0..d {
                q += xi[i] * self.cov[i][j] * xi[j];
            }
        }
        -q * self.v_zz / T::lit(2.0)
    }
}

/// Homothetic power-utility problem in weight-deviation units at unit cost:
/// wealth 1, `v_z = 1`, `v_zz = -gamma`, `theta = theta_z = pi` (the Merton
/// weights). Half-widths in weights are `lambda^{1/3}` times the solver's.
pub fn homothetic_problem<T: Real>(market: &MultiAssetParams<T>, gamma: T, k_cap: T) -> Result<ProblemData<T>> {
    let market = market.clone().validate()?;
    if !(gamma > T::zero()) || gamma == T::one() {
        return Err(invalid("gamma", "must be positive and differ from 1"));
    }
    let pi = market.merton_weights(gamma)?;
    let sigma_s = market.volatility_matrix()?;
    let alpha = build_alpha_matrix(&pi, &pi, &sigma_s)?;
    ProblemData::new(alpha, T::one(), -gamma, sigma_s, k_cap)
}

/// Per-dimension closed-form half-width `((-v_z/v_zz) 3 A_ii / (2 Sigma_ii))^{1/3}`
/// of the decoupled one-dimensional problems; used to size the domain.
pub fn one_dimensional_estimates<T: Real>(data: &ProblemData<T>) -> Vec<T> {
    (0..data.dim())
        .map(|i| (-data.v_z / data.v_zz * T::lit(1.5) * data.a[i][i] / data.cov[i][i]).cbrt())
        .collect()
}
