//! Seeding and estimators shared by the Monte Carlo code.
//!
//! Path `i` draws from a ChaCha8 generator seeded with the master seed and
//! switched to stream `i`, so results do not depend on scheduling. Parallel
//! per-path results are collected in index order before any reduction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Master seed, time step and number of independent paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub seed: u64,
    pub dt: f64,
    pub n_paths: usize,
}

impl McConfig {
    pub fn validate(self) -> Result<Self> {
        if !(self.dt > 0.0) {
            return Err(invalid("dt", "must be positive"));
        }
        if self.n_paths == 0 {
            return Err(invalid("n_paths", "must be at least 1"));
        }
        Ok(self)
    }
}

pub fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

pub fn normal<T: Real, R: Rng>(rng: &mut R) -> T {
    let x: f64 = rng.sample(StandardNormal);
    T::lit(x)
}

/// Runs `f(path_index, rng)` for every path in parallel and returns the
/// results in path order.
pub fn per_path<U: Send, F>(seed: u64, n_paths: usize, f: F) -> Vec<U>
where
    F: Fn(usize, &mut ChaCha8Rng) -> U + Sync + Send,
{
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            f(i, &mut rng)
        })
        .collect()
}

/// One step of `dF = k (m - F) dt + sigma dW` driven by the standard normal `z`:
/// the exact Gaussian transition for `k > 0`, Euler otherwise.
pub fn ou_step<T: Real>(f: T, k: T, m: T, sigma: T, dt: T, z: T) -> T {
    if k > T::zero() {
        let e = (-k * dt).exp();
        let var = sigma * sigma * (T::one() - e * e) / (T::lit(2.0) * k);
        m + (f - m) * e + var.sqrt() * z
    } else {
        f + k * (m - f) * dt + sigma * dt.sqrt() * z
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate<T = f64> {
    pub mean: T,
    pub standard_error: T,
    pub n: usize,
}

/// Mean and standard error of independent samples.
pub fn mean_se<T: Real>(xs: &[T]) -> Estimate<T> {
    let n = xs.len();
    let nt = T::from_usize(n).unwrap_or_else(T::one);
    let mean = xs.iter().copied().sum::<T>() / nt;
    let se = if n > 1 {
        let ss: T = xs.iter().map(|&x| (x - mean) * (x - mean)).sum();
        (ss / (nt - T::one()) / nt).sqrt()
    } else {
        T::zero()
    };
    Estimate { mean, standard_error: se, n }
}

/// Mean of a correlated series with a batch-means standard error.
pub fn batch_means<T: Real>(series: &[T], n_batches: usize) -> Estimate<T> {
    let n_batches = n_batches.clamp(1, series.len().max(1));
    let len = series.len() / n_batches;
    if len == 0 {
        return mean_se(series);
    }
    let lt = T::from_usize(len).unwrap_or_else(T::one);
    let means: Vec<T> =
        series.chunks_exact(len).take(n_batches).map(|c| c.iter().copied().sum::<T>() / lt).collect();
    let est = mean_se(&means);
    Estimate { n: series.len(), ..est }
}
