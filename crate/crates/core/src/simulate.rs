//! Path simulation of the factor, the frictionless weight and the frictional
//! policies.
//!
//! The frictional portfolio is tracked as a safe position `x` and a risky
//! position `y`. Between grid times both grow with their returns (risky
//! return lognormal with the factor frozen over the step, factor by its exact
//! Ornstein–Uhlenbeck transition). After each step the policy trades:
//!
//! * proportional: sell down to the upper or buy up to the lower boundary of
//!   the asymptotic no-trade region (minimal trading);
//! * fixed: if the weight leaves `pi +- h`, rebalance all the way back to `pi`.
//!
//! Costs are deducted from the safe account unless disabled.

use serde::{Deserialize, Serialize};

use crate::corrector::ko_ntregion_with;
use crate::error::{invalid, Result};
use crate::frictionless::KimOmbergModel;
use crate::models::{CostSpec, KimOmbergParams, Validate};
use crate::montecarlo::{normal, ou_step, per_path};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub seed: u64,
    /// Step in years.
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default = "one_path")]
    pub n_paths: usize,
    /// Initial factor value; the long-run mean when omitted.
    #[serde(default)]
    pub f0: Option<f64>,
    /// Initial wealth in currency units.
    #[serde(default = "unit_wealth")]
    pub wealth0: f64,
    /// Deduct trading costs from the safe account.
    #[serde(default = "yes")]
    pub deduct_costs: bool,
}

fn one_path() -> usize {
    1
}

fn unit_wealth() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl PathConfig {
    pub fn new(seed: u64, dt: f64, horizon: f64, n_paths: usize) -> Self {
        Self { seed, dt, horizon, n_paths, f0: None, wealth0: 1.0, deduct_costs: true }
    }

    pub fn validate(self) -> Result<Self> {
        if !(self.dt > 0.0) {
            return Err(invalid("dt", "must be positive"));
        }
        if !(self.horizon > 0.0) {
            return Err(invalid("T", "must be positive"));
        }
        if self.n_paths == 0 {
            return Err(invalid("n_paths", "must be at least 1"));
        }
        if !(self.wealth0 > 0.0) {
            return Err(invalid("wealth0", "must be positive"));
        }
        Ok(self)
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round().max(1.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PathStatus<T> {
    Completed,
    /// Wealth became nonpositive at this time; the path is truncated there.
    Bankrupt(T),
}

/// One simulated path. `l` and `m` are cumulative purchases and sales, each
/// trade measured relative to pre-trade wealth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrictionalPath<T = f64> {
    pub times: Vec<T>,
    pub factor: Vec<T>,
    pub pi: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub weight: Vec<T>,
    pub l: Vec<T>,
    pub m: Vec<T>,
    pub trades: Vec<usize>,
    pub status: PathStatus<T>,
}

impl<T: Real> FrictionalPath<T> {
    fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            factor: Vec::with_capacity(n),
            pi: Vec::with_capacity(n),
            lower: Vec::with_capacity(n),
            upper: Vec::with_capacity(n),
            weight: Vec::with_capacity(n),
            l: Vec::with_capacity(n),
            m: Vec::with_capacity(n),
            trades: Vec::with_capacity(n),
            status: PathStatus::Completed,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Factor paths by exact Ornstein–Uhlenbeck transitions, one vector per path.
pub fn simulate_factor<T: Real>(ko: &KimOmbergParams<T>, cfg: &PathConfig) -> Result<Vec<Vec<T>>> {
    let ko = ko.validate()?;
    let cfg = cfg.validate()?;
    let n = cfg.n_steps();
    let dt = T::lit(cfg.horizon) / T::from_usize(n).unwrap_or_else(T::one);
    let f0 = cfg.f0.map(T::lit).unwrap_or(ko.f_bar);
    Ok(per_path(cfg.seed, cfg.n_paths, |_, rng| {
        let mut f = f0;
        let mut out = Vec::with_capacity(n + 1);
        out.push(f);
        for _ in 0..n {
            f = ou_step(f, ko.kappa, ko.f_bar, ko.sigma_f, dt, normal::<T, _>(rng));
            out.push(f);
        }
        out
    }))
}

/// Trading rule applied after each step: target interval `[lower, upper]`
/// and the point traded to when it is left.
enum Rule {
    Boundary,
    Center,
}

struct Market<T> {
    model: KimOmbergModel<T>,
    lambda_p: T,
    lambda_f: T,
}

fn run<T: Real, H>(mk: &Market<T>, cfg: &PathConfig, rule: Rule, band: H) -> Vec<FrictionalPath<T>>
where
    H: Fn(T, T, T) -> Result<(T, T)> + Sync,
{
    let n = cfg.n_steps();
    let dt = T::lit(cfg.horizon) / T::from_usize(n).unwrap_or_else(T::one);
    let p = mk.model.params;
    let (lp, lf) = if cfg.deduct_costs { (mk.lambda_p, mk.lambda_f) } else { (T::zero(), T::zero()) };
    let f0 = cfg.f0.map(T::lit).unwrap_or(p.f_bar);
    let z0 = T::lit(cfg.wealth0);
    let half = T::lit(0.5);
    let rho_c = (T::one() - p.rho * p.rho).max(T::zero()).sqrt();
    let sq_dt = dt.sqrt();
    let growth_safe = (p.r * dt).exp();

    per_path(cfg.seed, cfg.n_paths, |_, rng| {
        let mut path = FrictionalPath::with_capacity(n + 1);
        let mut f = f0;
        let pi0 = mk.model.weight_with(&mk.model.riccati_at(mk.model.horizon), f);
        let (mut x, mut y) = (z0 * (T::one() - pi0), z0 * pi0);
        let (mut cum_l, mut cum_m, mut trades) = (T::zero(), T::zero(), 0usize);
        let mut weight = pi0;
        for k in 0..=n {
            let t = dt * T::from_usize(k).unwrap_or_else(T::zero);
            if k > 0 {
                let z1 = normal::<T, _>(rng);
                let z2 = normal::<T, _>(rng);
                let ret = (p.r + f - half * p.sigma_s * p.sigma_s) * dt + p.sigma_s * sq_dt * z1;
                y *= ret.exp();
                x *= growth_safe;
                f = ou_step(f, p.kappa, p.f_bar, p.sigma_f, dt, p.rho * z1 + rho_c * z2);
                weight = y / (x + y);
            }
            let pi = mk.model.weight_with(&mk.model.riccati_at((mk.model.horizon - t).max(T::zero())), f);
            let (lower, upper) = match band(t, f, pi) {
                Ok(b) => b,
                Err(_) => (pi, pi),
            };
            let z = x + y;
            if !(z > T::zero()) {
                path.status = PathStatus::Bankrupt(t);
                break;
            }
            let target = if weight > upper {
                Some(match rule {
                    Rule::Boundary => upper,
                    Rule::Center => pi,
                })
            } else if weight < lower {
                Some(match rule {
                    Rule::Boundary => lower,
                    Rule::Center => pi,
                })
            } else {
                None
            };
            if let Some(u) = target {
                let fixed = match rule {
                    Rule::Center => lf,
                    Rule::Boundary => T::zero(),
                };
                let net = z - fixed;
                let (amount, z_new) = if weight > u {
                    let d = (y - u * net) / (T::one() - u * lp);
                    cum_m += d / z;
                    (d, net - lp * d)
                } else {
                    let d = (u * net - y) / (T::one() + u * lp);
                    cum_l += d / z;
                    (d, net - lp * d)
                };
                if !(z_new > T::zero()) || !amount.is_finite() {
                    path.status = PathStatus::Bankrupt(t);
                    break;
                }
                y = u * z_new;
                x = z_new - y;
                weight = u;
                trades += 1;
            }
            path.times.push(t);
            path.factor.push(f);
            path.pi.push(pi);
            path.lower.push(lower);
            path.upper.push(upper);
            path.weight.push(weight);
            path.l.push(cum_l);
            path.m.push(cum_m);
            path.trades.push(trades);
        }
        path
    })
}

/// Minimal trading to stay inside the asymptotic Kim–Omberg no-trade region.
pub fn simulate_proportional<T: Real>(
    ko: &KimOmbergParams<T>,
    gamma: T,
    horizon: T,
    lambda_p: T,
    cfg: &PathConfig,
) -> Result<Vec<FrictionalPath<T>>> {
    let cfg = cfg.validate()?;
    let costs = CostSpec::proportional(lambda_p).validate()?;
    let model = KimOmbergModel::new(*ko, gamma, horizon)?;
    if T::lit(cfg.horizon) > horizon {
        return Err(invalid("T", "simulation horizon exceeds the planning horizon"));
    }
    let mk = Market { model, lambda_p: costs.lambda_p, lambda_f: T::zero() };
    Ok(run(&mk, &cfg, Rule::Boundary, |t, f, _pi| {
        let r = ko_ntregion_with(&model, t, f, costs.lambda_p)?;
        Ok((r.lower(), r.upper()))
    }))
}

/// Rebalancing to the frictionless target whenever the weight leaves
/// `pi +- h(t, f, pi)`. Both the fixed and the proportional part of `costs`
/// are charged per trade.
pub fn simulate_fixed<T: Real, H>(
    ko: &KimOmbergParams<T>,
    gamma: T,
    horizon: T,
    costs: &CostSpec<T>,
    halfwidth: H,
    cfg: &PathConfig,
) -> Result<Vec<FrictionalPath<T>>>
where
    H: Fn(T, T, T) -> T + Sync,
{
    let cfg = cfg.validate()?;
    let model = KimOmbergModel::new(*ko, gamma, horizon)?;
    if !(costs.lambda_p >= T::zero() && costs.lambda_p < T::one() && costs.lambda_f >= T::zero()) {
        return Err(invalid("lambda_p", "costs must be nonnegative with lambda_p < 1"));
    }
    if T::lit(cfg.horizon) > horizon {
        return Err(invalid("T", "simulation horizon exceeds the planning horizon"));
    }
    let mk = Market { model, lambda_p: costs.lambda_p, lambda_f: costs.lambda_f };
    Ok(run(&mk, &cfg, Rule::Center, |t, f, pi| {
        let h = halfwidth(t, f, pi);
        if !(h >= T::zero()) {
            return Err(invalid("halfwidth", "must be nonnegative"));
        }
        Ok((pi - h, pi + h))
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradingStats<T = f64> {
    /// `L_T + M_T`.
    pub turnover: T,
    pub trades: usize,
    pub max_deviation: T,
    /// Fraction of steps ending with a trade, i.e. at a boundary or reset.
    pub boundary_fraction: T,
}

pub fn trading_stats<T: Real>(path: &FrictionalPath<T>) -> TradingStats<T> {
    let n = path.len();
    if n == 0 {
        return TradingStats { turnover: T::zero(), trades: 0, max_deviation: T::zero(), boundary_fraction: T::zero() };
    }
    let max_deviation = path
        .weight
        .iter()
        .zip(&path.pi)
        .map(|(&w, &p)| (w - p).abs())
        .fold(T::zero(), |a, b| a.max(b));
    let trading_steps = (1..n).filter(|&i| path.trades[i] > path.trades[i - 1]).count()
        + usize::from(path.trades[0] > 0);
    TradingStats {
        turnover: path.l[n - 1] + path.m[n - 1],
        trades: path.trades[n - 1],
        max_deviation,
        boundary_fraction: T::from_usize(trading_steps).unwrap_or_else(T::zero)
            / T::from_usize(n).unwrap_or_else(T::one),
    }
}
