//! Parameter records for the market models, preferences and costs.
//!
//! Every record deserializes from a flat JSON object and rejects unknown
//! keys. Records are plain immutable values; call [`Validate::validate`]
//! before handing them to the numerical modules.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::dense::{self, Matrix};
use crate::error::{invalid, Result};
use crate::scalar::{Real, Scalar};

fn zero<T: Zero>() -> T {
    T::zero()
}

/// Checks the invariants of a parameter record.
pub trait Validate: Sized {
    /// Returns the record unchanged if every invariant holds, otherwise the
    /// first violated invariant by field name.
    fn validate(self) -> Result<Self>;
}

/// Constant-coefficient market: safe rate, excess return and volatility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlackScholesParams<T = f64> {
    pub r: T,
    /// Expected excess return per year.
    pub mu: T,
    pub sigma: T,
}

impl<T: Scalar> Validate for BlackScholesParams<T> {
    fn validate(self) -> Result<Self> {
        if !(self.sigma > T::zero()) {
            return Err(invalid("sigma", "must be positive"));
        }
        if self.r != self.r || self.mu != self.mu {
            return Err(invalid("mu", "must be a number"));
        }
        Ok(self)
    }
}

/// Mean-reverting expected excess return: `dF = kappa (F_bar - F) dt + sigma_F dW^F`,
/// with `corr(dW^S, dW^F) = rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Deserialize<'de> + Zero"))]
pub struct KimOmbergParams<T = f64> {
    pub r: T,
    #[serde(rename = "sigma_S")]
    pub sigma_s: T,
    pub kappa: T,
    #[serde(rename = "F_bar")]
    pub f_bar: T,
    #[serde(rename = "sigma_F")]
    pub sigma_f: T,
    /// Defaults to 0 (uncorrelated factor) when omitted.
    #[serde(default = "zero")]
    pub rho: T,
}

impl<T: Scalar> Validate for KimOmbergParams<T> {
    fn validate(self) -> Result<Self> {
        if !(self.sigma_s > T::zero()) {
            return Err(invalid("sigma_S", "must be positive"));
        }
        if !(self.sigma_f > T::zero()) {
            return Err(invalid("sigma_F", "must be positive"));
        }
        if !(self.kappa > T::zero()) {
            return Err(invalid("kappa", "must be positive"));
        }
        if !(self.rho.abs() <= T::one()) {
            return Err(invalid("rho", "must lie in [-1, 1]"));
        }
        if self.r != self.r || self.f_bar != self.f_bar {
            return Err(invalid("F_bar", "must be a number"));
        }
        Ok(self)
    }
}

impl<T: Scalar> KimOmbergParams<T> {
    /// The Black–Scholes market obtained by freezing the factor at its mean.
    pub fn frozen_at_mean(&self) -> BlackScholesParams<T> {
        BlackScholesParams { r: self.r, mu: self.f_bar, sigma: self.sigma_s }
    }
}

/// Power-utility preferences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preferences<T = f64> {
    /// Relative risk aversion; log utility (`gamma = 1`) is not supported.
    pub gamma: T,
    #[serde(rename = "horizon_T", default)]
    pub horizon: Option<T>,
    /// Impatience rate, only used by consumption settings.
    #[serde(default)]
    pub delta: Option<T>,
}

impl<T: Scalar> Preferences<T> {
    pub fn new(gamma: T) -> Self {
        Self { gamma, horizon: None, delta: None }
    }

    pub fn with_horizon(mut self, horizon: T) -> Self {
        self.horizon = Some(horizon);
        self
    }
}

impl<T: Scalar> Validate for Preferences<T> {
    fn validate(self) -> Result<Self> {
        if !(self.gamma > T::zero()) {
            return Err(invalid("gamma", "must be positive"));
        }
        if self.gamma == T::one() {
            return Err(invalid("gamma", "must differ from 1"));
        }
        if let Some(h) = self.horizon {
            if !(h > T::zero()) {
                return Err(invalid("horizon_T", "must be positive"));
            }
        }
        if let Some(d) = self.delta {
            if !(d > T::zero()) {
                return Err(invalid("delta", "must be positive"));
            }
        }
        Ok(self)
    }
}

/// Proportional cost (fraction of traded value) plus optional fixed cost per trade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Deserialize<'de> + Zero"))]
pub struct CostSpec<T = f64> {
    pub lambda_p: T,
    #[serde(default = "zero")]
    pub lambda_f: T,
}

impl<T: Scalar> CostSpec<T> {
    pub fn proportional(lambda_p: T) -> Self {
        Self { lambda_p, lambda_f: T::zero() }
    }
}

impl<T: Scalar> Validate for CostSpec<T> {
    fn validate(self) -> Result<Self> {
        if !(self.lambda_p > T::zero() && self.lambda_p < T::one()) {
            return Err(invalid("lambda_p", "must lie in (0, 1)"));
        }
        if !(self.lambda_f >= T::zero()) {
            return Err(invalid("lambda_f", "must be nonnegative"));
        }
        Ok(self)
    }
}

/// Constant-coefficient market with `d` risky assets sharing one pairwise
/// correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Deserialize<'de> + Zero"))]
pub struct MultiAssetParams<T = f64> {
    pub r: T,
    /// Expected (total) returns; the excess return of asset `i` is `mu[i] - r`.
    pub mu: Vec<T>,
    pub sigma: Vec<T>,
    #[serde(default = "zero")]
    pub rho: T,
}

impl<T: Real> MultiAssetParams<T> {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn excess_returns(&self) -> Vec<T> {
        self.mu.iter().map(|&m| m - self.r).collect()
    }

    pub fn correlation(&self) -> Matrix<T> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| if i == j { T::one() } else { self.rho }).collect())
            .collect()
    }

    /// Volatility matrix `sigma_S` with `sigma_S sigma_S^T` the return covariance;
    /// row `i` holds the loadings of asset `i` on independent Brownian motions.
    pub fn volatility_matrix(&self) -> Result<Matrix<T>> {
        let l = dense::cholesky(&self.correlation())?;
        Ok(l.into_iter()
            .zip(&self.sigma)
            .map(|(row, &s)| row.into_iter().map(|x| x * s).collect())
            .collect())
    }

    pub fn covariance(&self) -> Result<Matrix<T>> {
        Ok(dense::gram(&self.volatility_matrix()?))
    }

    /// Frictionless optimal weights `(gamma Sigma)^{-1} (mu - r)`.
    pub fn merton_weights(&self, gamma: T) -> Result<Vec<T>> {
        let cov = self.covariance()?;
        let scaled: Matrix<T> =
            cov.into_iter().map(|row| row.into_iter().map(|x| x * gamma).collect()).collect();
        dense::spd_solve(&scaled, &self.excess_returns())
    }
}

impl<T: Real> Validate for MultiAssetParams<T> {
    fn validate(self) -> Result<Self> {
        let d = self.mu.len();
        if d == 0 || d > 3 {
            return Err(invalid("mu", "must have between 1 and 3 entries"));
        }
        if self.sigma.len() != d {
            return Err(invalid("sigma", "must have as many entries as mu"));
        }
        if self.sigma.iter().any(|&s| !(s > T::zero())) {
            return Err(invalid("sigma", "must be positive"));
        }
        if !(self.rho.abs() <= T::one()) {
            return Err(invalid("rho", "must lie in [-1, 1]"));
        }
        if d > 1 {
            dense::cholesky(&self.correlation())?;
        }
        Ok(self)
    }
}
