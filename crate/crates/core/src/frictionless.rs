//! Frictionless value functions and optimal risky weights.
//!
//! Black–Scholes is the constant Merton fraction. For Kim–Omberg the value
//! function is `z^{1-gamma}/(1-gamma) * exp(A + B f + C f^2 / 2)` where
//! `(A, B, C)` solve a Riccati system in the time to horizon `tau = T - u`:
//!
//! ```text
//! C' = a2 C^2 + b C + c0          c0 = (1-gamma)/(gamma sigma_S^2)
//! B' = kappa F_bar C + (b/2 + a2 C) B
//! A' = kappa F_bar B + sigma_F^2 C / 2 + a2 B^2 / 2 + (1-gamma) r
//! ```
//!
//! with `a2 = sigma_F^2 (1 + (1-gamma) rho^2 / gamma)` and
//! `b = 2((1-gamma)/gamma * rho sigma_F/sigma_S - kappa)`. Only the branch with
//! real `eta = sqrt(b^2 - 4 a2 c0)` and `gamma > 1` is implemented.

use crate::error::{invalid, Error, Result};
use crate::models::{BlackScholesParams, KimOmbergParams, Validate};
use crate::scalar::Real;

/// Constant Merton fraction `mu / (gamma sigma^2)`.
pub fn merton_weight<T: Real>(bs: &BlackScholesParams<T>, gamma: T) -> T {
    bs.mu / (gamma * bs.sigma * bs.sigma)
}

/// Black–Scholes power-utility value `z^{1-gamma}/(1-gamma) exp((1-gamma)(r + mu^2/(2 gamma sigma^2))(T-t))`.
pub fn bs_value<T: Real>(bs: &BlackScholesParams<T>, gamma: T, horizon: T, t: T, z: T) -> T {
    let one = T::one();
    let rate = bs.r + bs.mu * bs.mu / (T::lit(2.0) * gamma * bs.sigma * bs.sigma);
    z.powf(one - gamma) / (one - gamma) * ((one - gamma) * rate * (horizon - t)).exp()
}

/// Risky weight and its factor sensitivity as functions of `(t, f)`.
pub trait FrictionlessPolicy<T: Real>: Sync {
    fn weight(&self, t: T, f: T) -> T;
    /// `d pi / d f`.
    fn weight_sensitivity(&self, t: T, f: T) -> T;
}

/// Constant weight, no factor dependence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MertonPolicy<T> {
    pub pi: T,
}

impl<T: Real> FrictionlessPolicy<T> for MertonPolicy<T> {
    fn weight(&self, _t: T, _f: T) -> T {
        self.pi
    }

    fn weight_sensitivity(&self, _t: T, _f: T) -> T {
        T::zero()
    }
}

/// `(A, B, C)` at a given time to horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiCoefficients<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub time_to_horizon: T,
}

/// Long-run limits of the Riccati coefficients and the affine stationary weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryPolicy<T> {
    pub b_bar: T,
    pub c_bar: T,
    pub pi_bar_intercept: T,
    pub pi_bar_slope: T,
}

impl<T: Real> StationaryPolicy<T> {
    pub fn pi_bar(&self, f: T) -> T {
        self.pi_bar_intercept + self.pi_bar_slope * f
    }
}

impl<T: Real> FrictionlessPolicy<T> for StationaryPolicy<T> {
    fn weight(&self, _t: T, f: T) -> T {
        self.pi_bar(f)
    }

    fn weight_sensitivity(&self, _t: T, _f: T) -> T {
        self.pi_bar_slope
    }
}

/// Kim–Omberg frictionless solution for fixed preferences and horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KimOmbergModel<T> {
    pub params: KimOmbergParams<T>,
    pub gamma: T,
    pub horizon: T,
    // (1 - gamma) / gamma
    q: T,
    b: T,
    eta: T,
}

impl<T: Real> KimOmbergModel<T> {
    pub fn new(params: KimOmbergParams<T>, gamma: T, horizon: T) -> Result<Self> {
        let params = params.validate()?;
        if !(gamma > T::one()) {
            return Err(Error::Unsupported(
                "the Kim–Omberg normal solution requires gamma > 1".into(),
            ));
        }
        if !(horizon >= T::zero()) {
            return Err(invalid("horizon_T", "must be nonnegative"));
        }
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let q = (T::one() - gamma) / gamma;
        let ratio = params.sigma_f / params.sigma_s;
        let b = two * (q * ratio * params.rho - params.kappa);
        let eta_sq = b * b - four * q * ratio * ratio * (T::one() + q * params.rho * params.rho);
        if !(eta_sq > T::zero()) {
            return Err(Error::ComplexDiscriminant { eta_sq: eta_sq.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(Self { params, gamma, horizon, q, b, eta: eta_sq.sqrt() })
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn b(&self) -> T {
        self.b
    }

    /// Coefficients at calendar time `u <= T`.
    pub fn riccati(&self, u: T) -> Result<RiccatiCoefficients<T>> {
        if u > self.horizon {
            return Err(invalid("u", "must not exceed the horizon"));
        }
        Ok(self.riccati_at(self.horizon - u))
    }

    /// Coefficients keyed on the time to horizon `tau = T - u`.
    pub fn riccati_at(&self, tau: T) -> RiccatiCoefficients<T> {
        let p = &self.params;
        let (one, two, four) = (T::one(), T::lit(2.0), T::lit(4.0));
        let (q, b, eta) = (self.q, self.b, self.eta);
        let s2 = p.sigma_s * p.sigma_s;
        let e = (-eta * tau).exp();
        let e_half = (-eta * tau / two).exp();
        let den = two * eta - (b + eta) * (one - e);

        let c = q * two / s2 * (one - e) / den;
        let b_coef =
            four * q * p.kappa * p.f_bar / s2 * (one - e_half) * (one - e_half) / (eta * den);

        let kf2 = p.kappa * p.kappa * p.f_bar * p.f_bar;
        let linear = q
            * (self.gamma * p.r + two * kf2 / (s2 * eta * eta) + p.sigma_f * p.sigma_f / (s2 * (eta - b)))
            * tau;
        let transient = q * four * kf2 / s2
            * ((two * b + eta) * e - four * b * e_half + two * b - eta)
            / (eta * eta * eta * den);
        let log_term = q * two * p.sigma_f * p.sigma_f / s2 * (den / (two * eta)).abs().ln()
            / (eta * eta - b * b);
        RiccatiCoefficients { a: linear + transient + log_term, b: b_coef, c, time_to_horizon: tau }
    }

    fn hedge_coefficient(&self) -> T {
        self.params.rho * self.params.sigma_f / (self.gamma * self.params.sigma_s)
    }

    /// `pi(t, f) = f/(gamma sigma_S^2) + rho sigma_F/(gamma sigma_S) (B + C f)`.
    pub fn weight(&self, t: T, f: T) -> Result<T> {
        let rc = self.riccati(t)?;
        Ok(self.weight_with(&rc, f))
    }

    pub fn weight_with(&self, rc: &RiccatiCoefficients<T>, f: T) -> T {
        let s2 = self.params.sigma_s * self.params.sigma_s;
        f / (self.gamma * s2) + self.hedge_coefficient() * (rc.b + rc.c * f)
    }

    pub fn sensitivity_with(&self, rc: &RiccatiCoefficients<T>) -> T {
        let s2 = self.params.sigma_s * self.params.sigma_s;
        T::one() / (self.gamma * s2) + self.hedge_coefficient() * rc.c
    }

    /// `z^{1-gamma}/(1-gamma) * exp(A + B f + C f^2/2)`.
    pub fn value(&self, t: T, z: T, f: T) -> Result<T> {
        if !(z > T::zero()) {
            return Err(invalid("z", "must be positive"));
        }
        let rc = self.riccati(t)?;
        Ok(self.value_with(&rc, z, f))
    }

    fn value_with(&self, rc: &RiccatiCoefficients<T>, z: T, f: T) -> T {
        let one = T::one();
        let expo = rc.a + rc.b * f + T::lit(0.5) * rc.c * f * f;
        z.powf(one - self.gamma) / (one - self.gamma) * expo.exp()
    }

    pub fn stationary(&self) -> Result<StationaryPolicy<T>> {
        let p = &self.params;
        let (two, four) = (T::lit(2.0), T::lit(4.0));
        let gap = self.eta - self.b;
        if gap == T::zero() {
            return Err(Error::EtaEqualsB);
        }
        let s2 = p.sigma_s * p.sigma_s;
        let c_bar = self.q * two / (s2 * gap);
        let b_bar = four * self.q * p.kappa * p.f_bar / (s2 * self.eta * gap);
        let h = self.hedge_coefficient();
        Ok(StationaryPolicy {
            b_bar,
            c_bar,
            pi_bar_intercept: h * b_bar,
            pi_bar_slope: T::one() / (self.gamma * s2) + h * c_bar,
        })
    }
}

impl<T: Real> FrictionlessPolicy<T> for KimOmbergModel<T> {
    fn weight(&self, t: T, f: T) -> T {
        self.weight_with(&self.riccati_at(self.horizon - t), f)
    }

    fn weight_sensitivity(&self, t: T, _f: T) -> T {
        self.sensitivity_with(&self.riccati_at(self.horizon - t))
    }
}

pub fn ko_riccati<T: Real>(
    ko: &KimOmbergParams<T>,
    gamma: T,
    horizon: T,
    u: T,
) -> Result<RiccatiCoefficients<T>> {
    KimOmbergModel::new(*ko, gamma, horizon)?.riccati(u)
}

/// Risky weight and its `f`-sensitivity `(pi, pi_f)`.
pub fn ko_weight<T: Real>(
    ko: &KimOmbergParams<T>,
    gamma: T,
    horizon: T,
    t: T,
    f: T,
) -> Result<(T, T)> {
    let model = KimOmbergModel::new(*ko, gamma, horizon)?;
    let rc = model.riccati(t)?;
    Ok((model.weight_with(&rc, f), model.sensitivity_with(&rc)))
}

pub fn ko_value<T: Real>(
    ko: &KimOmbergParams<T>,
    gamma: T,
    horizon: T,
    t: T,
    z: T,
    f: T,
) -> Result<T> {
    KimOmbergModel::new(*ko, gamma, horizon)?.value(t, z, f)
}

pub fn ko_stationary<T: Real>(ko: &KimOmbergParams<T>, gamma: T) -> Result<StationaryPolicy<T>> {
    KimOmbergModel::new(*ko, gamma, T::zero())?.stationary()
}

/// Market coefficients entering the frictionless operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactorMarket<T> {
    BlackScholes(BlackScholesParams<T>),
    KimOmberg(KimOmbergParams<T>),
}

impl<T: Real> FactorMarket<T> {
    pub fn r(&self) -> T {
        match self {
            Self::BlackScholes(p) => p.r,
            Self::KimOmberg(p) => p.r,
        }
    }

    pub fn mu_s(&self, f: T) -> T {
        match self {
            Self::BlackScholes(p) => p.mu,
            Self::KimOmberg(_) => f,
        }
    }

    pub fn sigma_s(&self) -> T {
        match self {
            Self::BlackScholes(p) => p.sigma,
            Self::KimOmberg(p) => p.sigma_s,
        }
    }

    pub fn mu_f(&self, f: T) -> T {
        match self {
            Self::BlackScholes(_) => T::zero(),
            Self::KimOmberg(p) => p.kappa * (p.f_bar - f),
        }
    }

    pub fn sigma_f(&self) -> T {
        match self {
            Self::BlackScholes(_) => T::zero(),
            Self::KimOmberg(p) => p.sigma_f,
        }
    }

    pub fn rho(&self) -> T {
        match self {
            Self::BlackScholes(_) => T::zero(),
            Self::KimOmberg(p) => p.rho,
        }
    }

    /// Closed-form frictionless value `(t, z, f) -> v`.
    pub fn closed_form_value(
        &self,
        gamma: T,
        horizon: T,
    ) -> Result<Box<dyn Fn(T, T, T) -> T + Send + Sync>> {
        match *self {
            Self::BlackScholes(bs) => {
                let bs = bs.validate()?;
                Ok(Box::new(move |t, z, _f| bs_value(&bs, gamma, horizon, t, z)))
            }
            Self::KimOmberg(ko) => {
                let model = KimOmbergModel::new(ko, gamma, horizon)?;
                Ok(Box::new(move |t, z, f| model.value_with(&model.riccati_at(horizon - t), z, f)))
            }
        }
    }
}

/// Central finite-difference steps for `t`, relative `z`, and `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSteps<T> {
    pub dt: T,
    pub dz: T,
    pub df: T,
}

impl<T: Real> FdSteps<T> {
    pub fn uniform(h: T) -> Self {
        Self { dt: h, dz: h, df: h }
    }
}

/// Maximum of `|A v| / (1 + |v|)` over `points`, with every derivative of `v`
/// taken by central differences and the feedback position recomputed from them.
pub fn hjb_residual_of<T: Real, V: Fn(T, T, T) -> T>(
    market: &FactorMarket<T>,
    value: V,
    points: &[(T, T, T)],
    steps: FdSteps<T>,
) -> T {
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let (r, sigma_s, sigma_f, rho) = (market.r(), market.sigma_s(), market.sigma_f(), market.rho());
    points
        .iter()
        .map(|&(t, z, f)| {
            let (ht, hz, hf) = (steps.dt, steps.dz * z, steps.df);
            let v = value(t, z, f);
            let v_t = (value(t + ht, z, f) - value(t - ht, z, f)) / (two * ht);
            let (vzp, vzm) = (value(t, z + hz, f), value(t, z - hz, f));
            let (vfp, vfm) = (value(t, z, f + hf), value(t, z, f - hf));
            let v_z = (vzp - vzm) / (two * hz);
            let v_zz = (vzp - two * v + vzm) / (hz * hz);
            let v_f = (vfp - vfm) / (two * hf);
            let v_ff = (vfp - two * v + vfm) / (hf * hf);
            let v_zf = (value(t, z + hz, f + hf) - value(t, z + hz, f - hf) - value(t, z - hz, f + hf)
                + value(t, z - hz, f - hf))
                / (T::lit(4.0) * hz * hf);
            let mu_s = market.mu_s(f);
            let num = mu_s * v_z + rho * sigma_s * sigma_f * v_zf;
            let den = -sigma_s * sigma_s * v_zz;
            let theta = if den == T::zero() { T::zero() } else { num / den };
            let op = v_t
                + market.mu_f(f) * v_f
                + half * sigma_f * sigma_f * v_ff
                + r * z * v_z
                + mu_s * theta * v_z
                + half * sigma_s * sigma_s * theta * theta * v_zz
                + theta * sigma_s * sigma_f * rho * v_zf;
            op.abs() / (T::one() + v.abs())
        })
        .fold(T::zero(), |m, x| if x > m || x != x { x } else { m })
}

/// [`hjb_residual_of`] applied to the closed-form value of `market`.
pub fn hjb_residual<T: Real>(
    market: &FactorMarket<T>,
    gamma: T,
    horizon: T,
    points: &[(T, T, T)],
    steps: FdSteps<T>,
) -> Result<T> {
    let v = market.closed_form_value(gamma, horizon)?;
    Ok(hjb_residual_of(market, v, points, steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn fig() -> KimOmbergParams {
        KimOmbergParams { r: 0.0168, sigma_s: 0.151, kappa: 0.271, f_bar: 0.041, sigma_f: 0.0343, rho: 0.0 }
    }

    #[test]
    fn terminal_coefficients_vanish() {
        let rc = ko_riccati(&fig(), 3.0, 40.0, 40.0).unwrap();
        assert_eq!(rc.b, 0.0);
        assert_eq!(rc.c, 0.0);
        assert!(rc.a.abs() < 1e-15);
        let mut p = fig();
        p.rho = -0.6;
        let rc = ko_riccati(&p, 3.0, 10.0, 10.0).unwrap();
        assert!(rc.a.abs() < 1e-15 && rc.b == 0.0 && rc.c == 0.0);
    }

    #[test]
    fn long_horizon_c_is_negative() {
        let rc = ko_riccati(&fig(), 3.0, 40.0, 0.0).unwrap();
        assert!(rc.c < 0.0 && rc.a.is_finite() && rc.b.is_finite());
    }

    #[test]
    fn merton_identities() {
        let bs = BlackScholesParams { r: 0.0, mu: 0.0, sigma: 0.2 };
        assert_eq!(merton_weight(&bs, 3.0), 0.0);
        let bs = BlackScholesParams { r: 0.0_f64, mu: 3.0 * 0.04, sigma: 0.2 };
        assert!((merton_weight(&bs, 3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weight_at_horizon_without_hedging() {
        let (pi, pi_f) = ko_weight(&fig(), 3.0, 40.0, 40.0, 0.041).unwrap();
        assert!((pi - 0.041 / (3.0 * 0.151 * 0.151)).abs() < 1e-15);
        assert!((pi_f - 1.0 / (3.0 * 0.151 * 0.151)).abs() < 1e-12);
        assert_eq!(ko_weight(&fig(), 3.0, 40.0, 5.0, 0.0).unwrap().0, 0.0);
    }

    #[test]
    fn value_terminal_and_homothetic() {
        let v = ko_value(&fig(), 3.0, 40.0, 40.0, 2.0, 0.07).unwrap();
        assert!((v - 2f64.powf(-2.0) / -2.0).abs() < 1e-15);
        let v1 = ko_value(&fig(), 3.0, 40.0, 3.0, 1.0, 0.07).unwrap();
        let v2 = ko_value(&fig(), 3.0, 40.0, 3.0, 2.0, 0.07).unwrap();
        assert!((v2 - 2f64.powf(-2.0) * v1).abs() < 1e-14 * v1.abs());
        assert!(ko_value(&fig(), 3.0, 40.0, 0.0, 1.0, 0.041).unwrap() < 0.0);
        assert!(ko_value(&fig(), 3.0, 40.0, 0.0, 0.0, 0.041).is_err());
    }

    #[test]
    fn rejects_unsupported_regimes() {
        assert!(matches!(
            KimOmbergModel::new(fig(), 0.5, 1.0),
            Err(Error::Unsupported(_))
        ));
        assert!(ko_riccati(&fig(), 3.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn stationary_with_zero_mean_level() {
        let mut p = fig();
        p.f_bar = 0.0;
        assert_eq!(ko_stationary(&p, 3.0).unwrap().b_bar, 0.0);
    }

    #[test]
    fn constant_value_has_zero_residual() {
        let market = FactorMarket::BlackScholes(BlackScholesParams { r: 0.0, mu: 0.0, sigma: 0.2 });
        let pts = [(0.5, 1.0, 0.0), (0.1, 2.0, 0.3)];
        let res = hjb_residual_of(&market, |_, _, _| 7.0, &pts, FdSteps::uniform(1e-4));
        assert_eq!(res, 0.0);
    }
}
