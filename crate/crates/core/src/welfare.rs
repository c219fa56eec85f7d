//! Leading-order welfare losses.
//!
//! All losses carry the factor `lambda^{2/3}` and are computed at unit cost
//! first, so the cost scaling is exact. The Kim–Omberg equivalent-safe-rate
//! loss integrates the stationary half-width against the stationary law of
//! the factor under the tilted measure; the certainty-equivalent loss and the
//! second corrector are Monte Carlo averages along simulated paths.

use serde::Serialize;

use crate::corrector::unit_halfwidth;
use crate::error::{invalid, Error, Result};
use crate::frictionless::{merton_weight, FactorMarket, KimOmbergModel, StationaryPolicy};
use crate::models::{BlackScholesParams, KimOmbergParams, Validate};
use crate::montecarlo::{self, mean_se, normal, ou_step, per_path, Estimate, McConfig};
use crate::quadrature::{integrate, QuadratureConfig};
use crate::scalar::Real;

/// Long-run factor dynamics under the tilted measure, `dF = kappa_tilde (F_tilde - F) dt + sigma_F dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TiltedOUParams<T = f64> {
    pub kappa_tilde: T,
    pub f_tilde: T,
    pub sigma_f: T,
}

impl<T: Real> TiltedOUParams<T> {
    pub fn stationary_variance(&self) -> T {
        self.sigma_f * self.sigma_f / (T::lit(2.0) * self.kappa_tilde)
    }
}

/// Matches the affine drift `kappa (F_bar - F) + sigma_F (1-gamma) pi_bar(F) sigma_S rho + (B_bar + C_bar F) sigma_F^2`
/// to `kappa_tilde (F_tilde - F)`.
pub fn tilted_ou<T: Real>(
    ko: &KimOmbergParams<T>,
    gamma: T,
    st: &StationaryPolicy<T>,
) -> Result<TiltedOUParams<T>> {
    let (speed, level) = tilted_affine(ko, gamma, st.pi_bar_intercept, st.pi_bar_slope, st.b_bar, st.c_bar);
    if !(speed > T::zero()) {
        return Err(Error::NonpositiveTiltedSpeed { kappa_tilde: speed.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(TiltedOUParams { kappa_tilde: speed, f_tilde: level / speed, sigma_f: ko.sigma_f })
}

// Returns (k, k m) for the drift k (m - F) given pi = pi0 + pi1 F and (B, C).
fn tilted_affine<T: Real>(ko: &KimOmbergParams<T>, gamma: T, pi0: T, pi1: T, b: T, c: T) -> (T, T) {
    let hedge = ko.sigma_f * (T::one() - gamma) * ko.sigma_s * ko.rho;
    let s2 = ko.sigma_f * ko.sigma_f;
    (ko.kappa - hedge * pi1 - c * s2, ko.kappa * ko.f_bar + hedge * pi0 + b * s2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ESRLossResult<T = f64> {
    /// Loss in equivalent safe rate, per year.
    pub delta_esr: T,
    pub lambda_p: T,
    pub quadrature_error_estimate: T,
}

fn check_lambda<T: Real>(lambda_p: T) -> Result<T> {
    if !(lambda_p >= T::zero() && lambda_p < T::one()) {
        return Err(invalid("lambda_p", "must lie in [0, 1)"));
    }
    Ok(lambda_p)
}

fn two_thirds<T: Real>(lambda_p: T) -> T {
    let c = lambda_p.cbrt();
    c * c
}

/// `(gamma sigma^2 / 2) (3 lambda / (2 gamma) pi^2 (1-pi)^2)^{2/3}` with the Merton weight `pi`.
pub fn esr_loss_bs<T: Real>(bs: &BlackScholesParams<T>, gamma: T, lambda_p: T) -> Result<ESRLossResult<T>> {
    let bs = bs.validate()?;
    let lambda_p = check_lambda(lambda_p)?;
    let pi = merton_weight(&bs, gamma);
    let dpi = unit_halfwidth(pi, T::zero(), gamma, bs.sigma, T::zero(), T::zero());
    let unit = gamma * bs.sigma * bs.sigma / T::lit(2.0) * dpi * dpi;
    Ok(ESRLossResult { delta_esr: two_thirds(lambda_p) * unit, lambda_p, quadrature_error_estimate: T::zero() })
}

/// Stationary unit-cost loss integrand `(gamma/2) sigma_S^2 dpi_bar(f)^2`.
fn stationary_integrand<T: Real>(ko: &KimOmbergParams<T>, gamma: T, st: &StationaryPolicy<T>, f: T) -> T {
    let dpi = unit_halfwidth(st.pi_bar(f), st.pi_bar_slope, gamma, ko.sigma_s, ko.sigma_f, ko.rho);
    gamma / T::lit(2.0) * ko.sigma_s * ko.sigma_s * dpi * dpi
}

/// Kim–Omberg equivalent-safe-rate loss by quadrature against
/// `N(F_tilde, sigma_F^2 / (2 kappa_tilde))` over eight standard deviations.
pub fn esr_loss_ko<T: Real>(
    ko: &KimOmbergParams<T>,
    gamma: T,
    lambda_p: T,
    cfg: &QuadratureConfig,
) -> Result<ESRLossResult<T>> {
    let lambda_p = check_lambda(lambda_p)?;
    let model = KimOmbergModel::new(*ko, gamma, T::zero())?;
    let st = model.stationary()?;
    let tilt = tilted_ou(&model.params, gamma, &st)?;
    let var = tilt.stationary_variance();
    let sd = var.sqrt();
    let norm = T::one() / (T::lit(2.0) * T::PI() * var).sqrt();
    let density = |f: T| norm * (-(f - tilt.f_tilde) * (f - tilt.f_tilde) / (T::lit(2.0) * var)).exp();
    let width = T::lit(8.0) * sd;
    let q = integrate(
        |f| stationary_integrand(&model.params, gamma, &st, f) * density(f),
        tilt.f_tilde - width,
        tilt.f_tilde + width,
        cfg,
    )?;
    let scale = two_thirds(lambda_p);
    Ok(ESRLossResult { delta_esr: scale * q.value, lambda_p, quadrature_error_estimate: scale * q.error })
}

/// Initial factor value for tilted-measure paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactorStart<T> {
    Fixed(T),
    /// Draw from the long-run tilted law.
    TiltedStationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CELResult<T = f64> {
    /// Relative certainty-equivalent loss (fraction of current wealth).
    pub cel: T,
    pub standard_error: T,
    pub n_paths: usize,
    pub n_steps: usize,
    /// `T - t`.
    pub remaining: T,
}

impl<T: Real> CELResult<T> {
    /// Loss per year, comparable with the equivalent-safe-rate loss.
    pub fn rate(&self) -> Estimate<T> {
        Estimate { mean: self.cel / self.remaining, standard_error: self.standard_error / self.remaining, n: self.n_paths }
    }
}

fn time_grid<T: Real>(t: T, horizon: T, dt: f64) -> Result<(usize, T)> {
    if !(horizon > t) {
        return Err(invalid("horizon_T", "must exceed the start time"));
    }
    let n = ((horizon - t).to_f64().unwrap_or(0.0) / dt).ceil().max(1.0) as usize;
    Ok((n, (horizon - t) / T::from_usize(n).unwrap_or_else(T::one)))
}

/// Relative certainty-equivalent loss
/// `lambda^{2/3} E~[ int_t^T (gamma/2) sigma_S^2 dpi(s, F_s)^2 ds ]`, with `F`
/// simulated under the tilted measure using the time-dependent Riccati
/// coefficients. The time integral uses the trapezoidal rule.
pub fn cel_monte_carlo<T: Real>(
    ko: &KimOmbergParams<T>,
    gamma: T,
    horizon: T,
    t: T,
    start: FactorStart<T>,
    lambda_p: T,
    mc: &McConfig,
) -> Result<CELResult<T>> {
    let lambda_p = check_lambda(lambda_p)?;
    let mc = mc.validate()?;
    let model = KimOmbergModel::new(*ko, gamma, horizon)?;
    let p = model.params;
    let (n_steps, dt) = time_grid(t, horizon, mc.dt)?;
    let half = T::lit(0.5);

    // Per grid time: (speed, speed * level, integrand coefficients via pi = pi0 + pi1 f).
    let grid: Vec<(T, T, T, T)> = (0..=n_steps)
        .map(|k| {
            let s = t + dt * T::from_usize(k).unwrap_or_else(T::zero);
            let rc = model.riccati_at((horizon - s).max(T::zero()));
            let pi0 = model.weight_with(&rc, T::zero());
            let pi1 = model.sensitivity_with(&rc);
            let (speed, level) = tilted_affine(&p, gamma, pi0, pi1, rc.b, rc.c);
            (speed, level, pi0, pi1)
        })
        .collect();
    let integrand = |k: usize, f: T| {
        let (_, _, pi0, pi1) = grid[k];
        let dpi = unit_halfwidth(pi0 + pi1 * f, pi1, gamma, p.sigma_s, p.sigma_f, p.rho);
        gamma * half * p.sigma_s * p.sigma_s * dpi * dpi
    };
    let stationary = match start {
        FactorStart::TiltedStationary => Some(tilted_ou(&p, gamma, &model.stationary()?)?),
        FactorStart::Fixed(_) => None,
    };

    let totals: Vec<T> = per_path(mc.seed, mc.n_paths, |_, rng| {
        let mut f = match (start, stationary) {
            (FactorStart::Fixed(f0), _) => f0,
            (_, Some(tilt)) => tilt.f_tilde + tilt.stationary_variance().sqrt() * normal::<T, _>(rng),
            _ => unreachable!(),
        };
        let mut g_prev = integrand(0, f);
        let mut acc = T::zero();
        for k in 0..n_steps {
            let (speed, level, _, _) = grid[k];
            let m = if speed == T::zero() { f } else { level / speed };
            let z = normal::<T, _>(rng);
            f = if speed > T::zero() {
                ou_step(f, speed, m, p.sigma_f, dt, z)
            } else {
                f + (level - speed * f) * dt + p.sigma_f * dt.sqrt() * z
            };
            let g = integrand(k + 1, f);
            acc += half * (g_prev + g) * dt;
            g_prev = g;
        }
        acc
    });
    let est = mean_se(&totals);
    let scale = two_thirds(lambda_p);
    Ok(CELResult {
        cel: scale * est.mean,
        standard_error: scale * est.standard_error,
        n_paths: mc.n_paths,
        n_steps,
        remaining: horizon - t,
    })
}

/// Simulates `n_steps` exact transitions of the tilted long-run factor.
pub fn simulate_tilted<T: Real>(tilt: &TiltedOUParams<T>, f0: T, dt: T, n_steps: usize, seed: u64) -> Vec<T> {
    let mut rng = montecarlo::path_rng(seed, 0);
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut f = f0;
    out.push(f);
    for _ in 0..n_steps {
        f = ou_step(f, tilt.kappa_tilde, tilt.f_tilde, tilt.sigma_f, dt, normal::<T, _>(&mut rng));
        out.push(f);
    }
    out
}

/// Long-run loss rate by simulation: each path starts in the stationary
/// tilted law, follows `n_steps` exact transitions, and contributes the time
/// average of the stationary loss integrand.
pub fn stationary_loss_rate_mc<T: Real>(
    ko: &KimOmbergParams<T>,
    gamma: T,
    lambda_p: T,
    n_steps: usize,
    mc: &McConfig,
) -> Result<Estimate<T>> {
    let lambda_p = check_lambda(lambda_p)?;
    let mc = mc.validate()?;
    let model = KimOmbergModel::new(*ko, gamma, T::zero())?;
    let st = model.stationary()?;
    let tilt = tilted_ou(&model.params, gamma, &st)?;
    let p = model.params;
    let dt = T::lit(mc.dt);
    let sd = tilt.stationary_variance().sqrt();
    let n_steps = n_steps.max(1);
    let averages: Vec<T> = per_path(mc.seed, mc.n_paths, |_, rng| {
        let mut f = tilt.f_tilde + sd * normal::<T, _>(rng);
        let mut acc = T::zero();
        for _ in 0..n_steps {
            f = ou_step(f, tilt.kappa_tilde, tilt.f_tilde, tilt.sigma_f, dt, normal::<T, _>(rng));
            acc += stationary_integrand(&p, gamma, &st, f);
        }
        acc / T::from_usize(n_steps).unwrap_or_else(T::one)
    });
    let est = mean_se(&averages);
    let scale = two_thirds(lambda_p);
    Ok(Estimate { mean: scale * est.mean, standard_error: scale * est.standard_error, n: est.n })
}

/// Second corrector `u(t, z, f) = E_t[ int_t^T -a(s, Z_s, F_s) ds ]` along
/// frictionless optimal wealth, with `-a = (gamma/2) sigma_S^2 z^{1-gamma} e^{g} dpi^2`
/// for power utility and `v = z^{1-gamma}/(1-gamma) e^{g}`.
pub fn second_corrector_u<T: Real>(
    market: &FactorMarket<T>,
    gamma: T,
    horizon: T,
    t: T,
    z: T,
    f: T,
    mc: &McConfig,
) -> Result<Estimate<T>> {
    let mc = mc.validate()?;
    if !(z > T::zero()) {
        return Err(invalid("z", "must be positive"));
    }
    if !(gamma > T::zero()) || gamma == T::one() {
        return Err(invalid("gamma", "must be positive and differ from 1"));
    }
    if t >= horizon {
        return Ok(Estimate { mean: T::zero(), standard_error: T::zero(), n: mc.n_paths });
    }
    let (n_steps, dt) = time_grid(t, horizon, mc.dt)?;
    let one = T::one();
    let half = T::lit(0.5);
    let (sigma_s, sigma_f, rho, r) = (market.sigma_s(), market.sigma_f(), market.rho(), market.r());

    // Per grid time: pi = pi0 + pi1 f and g = ga + gb f + gc f^2 / 2.
    let grid: Vec<(T, T, T, T, T)> = match *market {
        FactorMarket::BlackScholes(bs) => {
            let bs = bs.validate()?;
            let pi = merton_weight(&bs, gamma);
            let rate = (one - gamma) * (bs.r + bs.mu * bs.mu / (T::lit(2.0) * gamma * bs.sigma * bs.sigma));
            (0..=n_steps)
                .map(|k| {
                    let s = t + dt * T::from_usize(k).unwrap_or_else(T::zero);
                    (pi, T::zero(), rate * (horizon - s), T::zero(), T::zero())
                })
                .collect()
        }
        FactorMarket::KimOmberg(ko) => {
            let model = KimOmbergModel::new(ko, gamma, horizon)?;
            (0..=n_steps)
                .map(|k| {
                    let s = t + dt * T::from_usize(k).unwrap_or_else(T::zero);
                    let rc = model.riccati_at((horizon - s).max(T::zero()));
                    (model.weight_with(&rc, T::zero()), model.sensitivity_with(&rc), rc.a, rc.b, rc.c)
                })
                .collect()
        }
    };
    let (kappa, f_bar) = match *market {
        FactorMarket::KimOmberg(ko) => (ko.kappa, ko.f_bar),
        FactorMarket::BlackScholes(_) => (T::zero(), T::zero()),
    };
    let minus_a = |k: usize, log_z: T, f: T| {
        let (pi0, pi1, ga, gb, gc) = grid[k];
        let dpi = unit_halfwidth(pi0 + pi1 * f, pi1, gamma, sigma_s, sigma_f, rho);
        let g = ga + gb * f + half * gc * f * f;
        gamma * half * sigma_s * sigma_s * ((one - gamma) * log_z + g).exp() * dpi * dpi
    };
    let rho_c = (one - rho * rho).max(T::zero()).sqrt();
    let sq_dt = dt.sqrt();

    let totals: Vec<T> = per_path(mc.seed, mc.n_paths, |_, rng| {
        let (mut log_z, mut fv) = (z.ln(), f);
        let mut prev = minus_a(0, log_z, fv);
        let mut acc = T::zero();
        for k in 0..n_steps {
            let (pi0, pi1, ..) = grid[k];
            let pi = pi0 + pi1 * fv;
            let z1 = normal::<T, _>(rng);
            let z2 = normal::<T, _>(rng);
            log_z += (r + pi * market.mu_s(fv) - half * pi * pi * sigma_s * sigma_s) * dt + pi * sigma_s * sq_dt * z1;
            if sigma_f > T::zero() {
                fv = ou_step(fv, kappa, f_bar, sigma_f, dt, rho * z1 + rho_c * z2);
            }
            let cur = minus_a(k + 1, log_z, fv);
            acc += half * (prev + cur) * dt;
            prev = cur;
        }
        acc
    });
    Ok(mean_se(&totals))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig() -> KimOmbergParams {
        KimOmbergParams { r: 0.0168, sigma_s: 0.151, kappa: 0.271, f_bar: 0.041, sigma_f: 0.0343, rho: 0.0 }
    }

    #[test]
    fn bs_loss_vanishes_at_anchors() {
        for mu in [0.0_f64, 3.0 * 0.04] {
            let bs = BlackScholesParams { r: 0.0, mu, sigma: 0.2 };
            assert!(esr_loss_bs(&bs, 3.0, 0.01).unwrap().delta_esr.abs() < 1e-18);
        }
    }

    #[test]
    fn tilted_speed_is_positive_at_figure_params() {
        let st = crate::frictionless::ko_stationary(&fig(), 3.0).unwrap();
        let tilt = tilted_ou(&fig(), 3.0, &st).unwrap();
        assert!(tilt.kappa_tilde > 0.271);
    }

    #[test]
    fn ko_exceeds_bs() {
        let cfg = QuadratureConfig::default();
        for lambda in [1e-4, 1e-3, 1e-2] {
            let ko = esr_loss_ko(&fig(), 3.0, lambda, &cfg).unwrap();
            let bs = esr_loss_bs(&fig().frozen_at_mean(), 3.0, lambda).unwrap();
            assert!(ko.delta_esr > bs.delta_esr);
        }
    }

    #[test]
    fn zero_cost_zero_loss() {
        let mc = McConfig { seed: 1, dt: 0.1, n_paths: 4 };
        let cel = cel_monte_carlo(&fig(), 3.0, 5.0, 0.0, FactorStart::Fixed(0.041), 0.0, &mc).unwrap();
        assert_eq!(cel.cel, 0.0);
        let u = second_corrector_u(&FactorMarket::KimOmberg(fig()), 3.0, 5.0, 5.0, 1.0, 0.04, &mc).unwrap();
        assert_eq!(u.mean, 0.0);
    }
}
