//! Explicit first-corrector solution and asymptotic no-trade regions.
//!
//! At a frozen frictionless state the corrector `w(xi)` is the even quartic
//! `c4 xi^4 + c2 xi^2` on `|xi| <= delta_xi` and linear with slope `+-v_z`
//! outside. The no-trade region has half-width `lambda^{1/3} delta_xi` in
//! monetary units, or the equivalent expression in risky weights for power
//! utility.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::frictionless::KimOmbergModel;
use crate::models::KimOmbergParams;
use crate::scalar::Real;

/// Diffusion coefficient of the deviation process,
/// `sigma_S^2 theta^2 (1-theta_z)^2 - 2 sigma_S sigma_F rho theta (1-theta_z) theta_f + sigma_F^2 theta_f^2`.
pub fn alpha_squared<T: Real>(theta: T, theta_z: T, theta_f: T, sigma_s: T, sigma_f: T, rho: T) -> T {
    let x = sigma_s * theta * (T::one() - theta_z);
    let y = sigma_f * theta_f;
    x * x - T::lit(2.0) * rho * x * y + y * y
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorSolution<T = f64> {
    pub c2: T,
    pub c4: T,
    /// Ergodic constant.
    pub a: T,
    pub delta_xi: T,
    pub alpha_sq: T,
    pub v_z: T,
    pub v_zz: T,
}

impl<T: Real> CorrectorSolution<T> {
    /// True when `alpha_sq = 0`: no deviation diffusion, empty region.
    pub fn is_degenerate(&self) -> bool {
        self.alpha_sq == T::zero()
    }
}

/// Solves the one-dimensional corrector equation in closed form.
///
/// `alpha_sq = 0` is a legitimate limit and yields the degenerate solution
/// `delta_xi = a = 0`, `w = 0` inside.
pub fn solve_corrector_1d<T: Real>(v_z: T, v_zz: T, sigma_s: T, alpha_sq: T) -> Result<CorrectorSolution<T>> {
    if !(v_z > T::zero()) {
        return Err(invalid("v_z", "must be positive"));
    }
    if !(v_zz < T::zero()) {
        return Err(invalid("v_zz", "must be negative"));
    }
    if !(sigma_s > T::zero()) {
        return Err(invalid("sigma_S", "must be positive"));
    }
    if !(alpha_sq >= T::zero()) {
        return Err(invalid("alpha_sq", "must be nonnegative"));
    }
    let zero = T::zero();
    if alpha_sq == zero {
        return Ok(CorrectorSolution { c2: zero, c4: zero, a: zero, delta_xi: zero, alpha_sq, v_z, v_zz });
    }
    let s2 = sigma_s * sigma_s;
    let delta_xi = (-v_z / v_zz * T::lit(3.0) * alpha_sq / (T::lit(2.0) * s2)).cbrt();
    let a = s2 * v_zz * delta_xi * delta_xi / T::lit(2.0);
    Ok(CorrectorSolution {
        c2: -a / alpha_sq,
        c4: s2 * v_zz / (T::lit(12.0) * alpha_sq),
        a,
        delta_xi,
        alpha_sq,
        v_z,
        v_zz,
    })
}

/// Corrector value at deviation `xi`, normalized so that `w(0) = 0`.
pub fn w_eval<T: Real>(sol: &CorrectorSolution<T>, xi: T) -> T {
    let d = sol.delta_xi;
    let quartic = |x: T| {
        let x2 = x * x;
        sol.c4 * x2 * x2 + sol.c2 * x2
    };
    if xi.abs() <= d {
        quartic(xi)
    } else {
        quartic(d) + sol.v_z * (xi.abs() - d)
    }
}

/// First derivative of [`w_eval`].
pub fn w_derivative<T: Real>(sol: &CorrectorSolution<T>, xi: T) -> T {
    if xi.abs() <= sol.delta_xi {
        T::lit(4.0) * sol.c4 * xi * xi * xi + T::lit(2.0) * sol.c2 * xi
    } else {
        sol.v_z * xi.signum()
    }
}

/// Second derivative of [`w_eval`].
pub fn w_second_derivative<T: Real>(sol: &CorrectorSolution<T>, xi: T) -> T {
    if xi.abs() <= sol.delta_xi {
        T::lit(12.0) * sol.c4 * xi * xi + T::lit(2.0) * sol.c2
    } else {
        T::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    /// Risky weight (fraction of wealth).
    Weight,
    /// Monetary position.
    Monetary,
}

impl Units {
    fn name(self) -> &'static str {
        match self {
            Units::Weight => "weight",
            Units::Monetary => "monetary",
        }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Symmetric interval `center +- halfwidth` in tagged units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoTradeRegion<T = f64> {
    pub center: T,
    pub halfwidth: T,
    pub cost_lambda: T,
    pub units: Units,
}

impl<T: Real> NoTradeRegion<T> {
    pub fn lower(&self) -> T {
        self.center - self.halfwidth
    }

    pub fn upper(&self) -> T {
        self.center + self.halfwidth
    }

    pub fn contains(&self, x: T, units: Units) -> Result<bool> {
        self.check_units(units)?;
        Ok(x >= self.lower() && x <= self.upper())
    }

    /// Compares the widths of two regions; fails when the units differ.
    pub fn wider_than(&self, other: &Self) -> Result<bool> {
        self.check_units(other.units)?;
        Ok(self.halfwidth > other.halfwidth)
    }

    fn check_units(&self, units: Units) -> Result<()> {
        if self.units != units {
            return Err(Error::UnitMismatch { left: self.units.name(), right: units.name() });
        }
        Ok(())
    }
}

/// Weight half-width at unit cost:
/// `(3/(2 gamma) (pi^2(1-pi)^2 - 2 rho pi(1-pi) pi_f s + pi_f^2 s^2))^{1/3}`
/// with `s = sigma_F / sigma_S`.
pub fn unit_halfwidth<T: Real>(pi: T, pi_f: T, gamma: T, sigma_s: T, sigma_f: T, rho: T) -> T {
    let s = sigma_f / sigma_s;
    let x = pi * (T::one() - pi);
    let y = pi_f * s;
    let bracket = (x * x - T::lit(2.0) * rho * x * y + y * y).max(T::zero());
    (T::lit(1.5) / gamma * bracket).cbrt()
}

/// Asymptotic no-trade region for power utility, in risky weights.
pub fn ntregion_power<T: Real>(
    pi: T,
    pi_f: T,
    gamma: T,
    sigma_s: T,
    sigma_f: T,
    rho: T,
    lambda_p: T,
) -> Result<NoTradeRegion<T>> {
    if !(gamma > T::zero()) {
        return Err(invalid("gamma", "must be positive"));
    }
    if !(sigma_s > T::zero()) {
        return Err(invalid("sigma_S", "must be positive"));
    }
    if !(lambda_p > T::zero() && lambda_p < T::one()) {
        return Err(invalid("lambda_p", "must lie in (0, 1)"));
    }
    Ok(NoTradeRegion {
        center: pi,
        halfwidth: lambda_p.cbrt() * unit_halfwidth(pi, pi_f, gamma, sigma_s, sigma_f, rho),
        cost_lambda: lambda_p,
        units: Units::Weight,
    })
}

/// Monetary region `theta +- lambda^{1/3} delta_xi`.
pub fn ntregion_monetary<T: Real>(theta: T, sol: &CorrectorSolution<T>, lambda_p: T) -> NoTradeRegion<T> {
    NoTradeRegion {
        center: theta,
        halfwidth: lambda_p.cbrt() * sol.delta_xi,
        cost_lambda: lambda_p,
        units: Units::Monetary,
    }
}

/// Kim–Omberg weight region at `(t, f)`.
pub fn ko_ntregion<T: Real>(
    ko: &KimOmbergParams<T>,
    gamma: T,
    horizon: T,
    t: T,
    f: T,
    lambda_p: T,
) -> Result<NoTradeRegion<T>> {
    let model = KimOmbergModel::new(*ko, gamma, horizon)?;
    ko_ntregion_with(&model, t, f, lambda_p)
}

/// [`ko_ntregion`] for a prebuilt model.
pub fn ko_ntregion_with<T: Real>(model: &KimOmbergModel<T>, t: T, f: T, lambda_p: T) -> Result<NoTradeRegion<T>> {
    let rc = model.riccati(t)?;
    let p = &model.params;
    ntregion_power(
        model.weight_with(&rc, f),
        model.sensitivity_with(&rc),
        model.gamma,
        p.sigma_s,
        p.sigma_f,
        p.rho,
        lambda_p,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_solution() {
        let sol: CorrectorSolution = solve_corrector_1d(1.0, -1.0, 1.0, 2.0 / 3.0).unwrap();
        assert!((sol.delta_xi - 1.0).abs() < 1e-15);
        assert!((sol.a + 0.5).abs() < 1e-15);
        assert!((sol.c4 + 0.125).abs() < 1e-15);
        assert!((sol.c2 - 0.75).abs() < 1e-15);
        assert_eq!(w_eval(&sol, 0.0), 0.0);
        assert!((w_derivative(&sol, 1.0) - 1.0).abs() < 1e-15);
        assert!((w_derivative(&sol, -1.0) + 1.0).abs() < 1e-15);
        assert!(w_second_derivative(&sol, 1.0).abs() < 1e-15);
        assert!((w_eval(&sol, 3.0) - (w_eval(&sol, 1.0) + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_alpha() {
        let sol = solve_corrector_1d(1.0, -1.0, 1.0, 0.0).unwrap();
        assert!(sol.is_degenerate());
        assert_eq!((sol.delta_xi, sol.a), (0.0, 0.0));
        assert_eq!(w_eval(&sol, 0.0), 0.0);
    }

    #[test]
    fn bad_inputs() {
        assert!(solve_corrector_1d(-1.0, -1.0, 1.0, 1.0).is_err());
        assert!(solve_corrector_1d(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(solve_corrector_1d(1.0, -1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn power_region_anchors() {
        for pi in [0.0, 1.0] {
            let r = ntregion_power(pi, 0.0, 3.0, 0.151, 0.0343, 0.0, 0.01).unwrap();
            assert_eq!(r.halfwidth, 0.0);
        }
        let pi = 0.041 / (3.0 * 0.151 * 0.151);
        let r: NoTradeRegion = ntregion_power(pi, 0.0, 3.0, 0.151, 0.0343, 0.0, 0.01).unwrap();
        assert!((r.halfwidth - 0.0660).abs() < 1e-4, "{}", r.halfwidth);
        assert!((r.halfwidth / 0.01f64.cbrt() - 0.3066).abs() < 5e-4);
    }

    #[test]
    fn units_are_checked() {
        let w = ntregion_power(0.5, 0.0, 3.0, 0.2, 0.0, 0.0, 0.01).unwrap();
        let sol = solve_corrector_1d(1.0, -3.0, 0.2, 0.01).unwrap();
        let m = ntregion_monetary(0.5, &sol, 0.01);
        assert!(matches!(w.wider_than(&m), Err(Error::UnitMismatch { .. })));
        assert!(w.contains(0.5, Units::Weight).unwrap());
        assert!(w.contains(0.5, Units::Monetary).is_err());
    }

    #[test]
    fn ko_region_nonzero_at_zero_weight() {
        let ko = KimOmbergParams { r: 0.0168, sigma_s: 0.151, kappa: 0.271, f_bar: 0.041, sigma_f: 0.0343, rho: 0.0 };
        let r = ko_ntregion(&ko, 3.0, 40.0, 0.0, 0.0, 0.01).unwrap();
        assert_eq!(r.center, 0.0);
        assert!(r.halfwidth > 0.0);
    }
}
