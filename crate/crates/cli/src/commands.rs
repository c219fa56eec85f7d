use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use smallcost::corrector::{ntregion_power, solve_corrector_1d, CorrectorSolution};
use smallcost::ergodic::{
    homothetic_problem, one_dimensional_estimates, policy_iteration, GridSpec, ProblemData,
};
use smallcost::frictionless::KimOmbergModel;
use smallcost::montecarlo::McConfig;
use smallcost::simulate::{simulate_fixed, simulate_proportional, trading_stats, PathStatus};
use smallcost::welfare::{cel_monte_carlo, esr_loss_bs, esr_loss_ko, tilted_ou, FactorStart, TiltedOUParams};

use crate::config::{CommandName, LoadedConfig, ModelBlock, PolicyKind};
use crate::output::{Csv, Outputs};

/// Runs the configured command, writing into `dir`. A `seed` overrides
/// `numerics.paths.seed`.
pub fn run(loaded: &LoadedConfig, dir: &Path, seed: Option<u64>) -> Result<Outputs> {
    let mut loaded = loaded.clone();
    if let (Some(s), Some(p)) = (seed, loaded.config.numerics.paths.as_mut()) {
        p.seed = s;
    }
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut out = Outputs::default();
    match loaded.config.command {
        CommandName::Ntregion => ntregion(&loaded, dir, &mut out)?,
        CommandName::Simulate => simulate(&loaded, dir, &mut out)?,
        CommandName::Welfare => welfare(&loaded, dir, &mut out)?,
        CommandName::Solve => solve(&loaded, dir, &mut out)?,
        CommandName::Convergence => convergence(&loaded, dir, &mut out)?,
    }
    Ok(out)
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn two_thirds(lambda: f64) -> f64 {
    lambda.cbrt().powi(2)
}

fn ntregion(lc: &LoadedConfig, dir: &Path, out: &mut Outputs) -> Result<()> {
    let cfg = &lc.config;
    let n = &cfg.numerics;
    let gamma = cfg.gamma()?;
    let lambdas = cfg.lambdas()?;
    if lambdas.iter().any(|&l| l <= 0.0) {
        bail!("ntregion needs positive cost levels");
    }
    let csv = match &cfg.model {
        ModelBlock::KimOmberg(p) => {
            let model = KimOmbergModel::new(*p, gamma, cfg.horizon()?)?;
            let rc = model.riccati(n.t)?;
            let pi_f = model.sensitivity_with(&rc);
            let mut csv = Csv::new(&lc.sha256, None, &["lambda", "f", "pi", "pi_f", "halfwidth", "lower", "upper"]);
            for &lambda in &lambdas {
                for f in linspace(n.f_range[0], n.f_range[1], n.points) {
                    let pi = model.weight_with(&rc, f);
                    let r = ntregion_power(pi, pi_f, gamma, p.sigma_s, p.sigma_f, p.rho, lambda)?;
                    csv.floats(&[lambda, f, pi, pi_f, r.halfwidth, r.lower(), r.upper()]);
                }
            }
            out.say(format!("Kim-Omberg halfwidth at t = {}: pi_f = {pi_f}", n.t));
            csv
        }
        ModelBlock::BlackScholes(p) => {
            let mut csv = Csv::new(&lc.sha256, None, &["lambda", "pi", "halfwidth", "lower", "upper"]);
            for &lambda in &lambdas {
                for pi in linspace(n.pi_range[0], n.pi_range[1], n.points) {
                    let r = ntregion_power(pi, 0.0, gamma, p.sigma, 0.0, 0.0, lambda)?;
                    csv.floats(&[lambda, pi, r.halfwidth, r.lower(), r.upper()]);
                }
            }
            csv
        }
        _ => unreachable!("checked at load"),
    };
    out.csv(dir, &format!("{}.csv", lc.stem), &csv)
}

#[derive(Serialize)]
struct PathSummary {
    path: usize,
    status: PathStatus<f64>,
    turnover: f64,
    trades: usize,
    max_deviation: f64,
    boundary_fraction: f64,
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    config_sha256: &'a str,
    seed: u64,
    policy: PolicyKind,
    paths: Vec<PathSummary>,
}

fn simulate(lc: &LoadedConfig, dir: &Path, out: &mut Outputs) -> Result<()> {
    let cfg = &lc.config;
    let ModelBlock::KimOmberg(p) = cfg.model else { unreachable!("checked at load") };
    let gamma = cfg.gamma()?;
    let horizon = cfg.horizon()?;
    let pc = cfg.paths()?;
    let paths = match cfg.numerics.policy {
        PolicyKind::Proportional => simulate_proportional(&p, gamma, horizon, cfg.lambda_p()?, &pc)?,
        PolicyKind::Fixed => {
            let h = cfg.numerics.fixed_halfwidth.context("numerics.fixed_halfwidth is required for policy fixed")?;
            let costs = cfg.costs.context("costs are required")?;
            simulate_fixed(&p, gamma, horizon, &costs, |_, _, _| h, &pc)?
        }
    };
    let header = ["path", "time", "factor", "pi", "lower", "upper", "weight", "L", "M", "trades"];
    let mut csv = Csv::new(&lc.sha256, Some(pc.seed), &header);
    let mut summaries = Vec::new();
    for (k, path) in paths.iter().enumerate() {
        for i in 0..path.len() {
            csv.row(&[
                k.to_string(),
                path.times[i].to_string(),
                path.factor[i].to_string(),
                path.pi[i].to_string(),
                path.lower[i].to_string(),
                path.upper[i].to_string(),
                path.weight[i].to_string(),
                path.l[i].to_string(),
                path.m[i].to_string(),
                path.trades[i].to_string(),
            ]);
        }
        let st = trading_stats(path);
        summaries.push(PathSummary {
            path: k,
            status: path.status,
            turnover: st.turnover,
            trades: st.trades,
            max_deviation: st.max_deviation,
            boundary_fraction: st.boundary_fraction,
        });
    }
    out.say(format!("simulated {} path(s) of {} steps", paths.len(), pc.n_steps()));
    out.csv(dir, &format!("{}.csv", lc.stem), &csv)?;
    let report = SimulateReport { config_sha256: &lc.sha256, seed: pc.seed, policy: cfg.numerics.policy, paths: summaries };
    out.json(dir, &format!("{}_stats.json", lc.stem), &report)
}

#[derive(Serialize)]
struct WelfareRow {
    lambda_p: f64,
    ko_delta_esr: Option<f64>,
    ko_quadrature_error: Option<f64>,
    bs_delta_esr: f64,
    ko_per_lambda_two_thirds: Option<f64>,
    bs_per_lambda_two_thirds: Option<f64>,
    cel: Option<f64>,
    cel_standard_error: Option<f64>,
}

#[derive(Serialize)]
struct WelfareReport<'a> {
    config_sha256: &'a str,
    note: Option<&'a str>,
    gamma: f64,
    #[serde(rename = "horizon_T")]
    horizon: Option<f64>,
    tilted: Option<TiltedOUParams>,
    cel_paths: Option<usize>,
    rows: Vec<WelfareRow>,
}

fn welfare(lc: &LoadedConfig, dir: &Path, out: &mut Outputs) -> Result<()> {
    let cfg = &lc.config;
    let gamma = cfg.gamma()?;
    let lambdas = cfg.lambdas()?;
    let horizon = cfg.preferences.and_then(|p| p.horizon);
    let (ko, bs) = match &cfg.model {
        ModelBlock::KimOmberg(p) => (Some(*p), p.frozen_at_mean()),
        ModelBlock::BlackScholes(p) => (None, *p),
        _ => unreachable!("checked at load"),
    };
    let tilted = match ko {
        Some(p) => Some(tilted_ou(&p, gamma, &KimOmbergModel::new(p, gamma, 0.0)?.stationary()?)?),
        None => None,
    };
    let mc = match (ko, horizon, cfg.numerics.paths) {
        (Some(_), Some(_), Some(pc)) => Some((McConfig { seed: pc.seed, dt: pc.dt, n_paths: pc.n_paths }, pc.f0)),
        _ => None,
    };
    let mut rows = Vec::new();
    for &lambda in &lambdas {
        let b = esr_loss_bs(&bs, gamma, lambda)?;
        let k = match ko {
            Some(p) => Some(esr_loss_ko(&p, gamma, lambda, &cfg.numerics.quadrature)?),
            None => None,
        };
        let cel = match (ko, horizon, mc) {
            (Some(p), Some(h), Some((m, f0))) => {
                Some(cel_monte_carlo(&p, gamma, h, 0.0, FactorStart::Fixed(f0.unwrap_or(p.f_bar)), lambda, &m)?)
            }
            _ => None,
        };
        let per = |x: f64| (lambda > 0.0).then(|| x / two_thirds(lambda));
        rows.push(WelfareRow {
            lambda_p: lambda,
            ko_delta_esr: k.map(|k| k.delta_esr),
            ko_quadrature_error: k.map(|k| k.quadrature_error_estimate),
            bs_delta_esr: b.delta_esr,
            ko_per_lambda_two_thirds: k.and_then(|k| per(k.delta_esr)),
            bs_per_lambda_two_thirds: per(b.delta_esr),
            cel: cel.map(|c| c.cel),
            cel_standard_error: cel.map(|c| c.standard_error),
        });
    }
    out.say(format!("welfare losses for {} cost level(s)", rows.len()));
    let report = WelfareReport {
        config_sha256: &lc.sha256,
        note: cfg.note.as_deref(),
        gamma,
        horizon,
        tilted,
        cel_paths: mc.map(|(m, _)| m.n_paths),
        rows,
    };
    out.json(dir, &format!("{}.json", lc.stem), &report)
}

#[derive(Serialize)]
struct ClosedFormComparison {
    delta_xi: f64,
    a: f64,
    halfwidth_relative_deviation: f64,
    a_relative_deviation: f64,
}

#[derive(Serialize)]
struct SolveReport<'a> {
    config_sha256: &'a str,
    note: Option<&'a str>,
    dim: usize,
    points: Vec<usize>,
    half_extent: Vec<f64>,
    h: Vec<f64>,
    #[serde(rename = "K")]
    k_cap: f64,
    iterations: usize,
    a: f64,
    a_history: Vec<f64>,
    timings_ms: Vec<f64>,
    /// Solver (unit-cost) units.
    halfwidth: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    truncated: Vec<bool>,
    lambda_p: Option<f64>,
    /// `lambda_p^{1/3}`; multiplies every coordinate in the CSV outputs.
    scale: f64,
    halfwidth_scaled: Vec<f64>,
    closed_form: Option<ClosedFormComparison>,
}

/// Problem data and the closed-form one-dimensional solution when `d = 1`.
pub fn solve_problem(lc: &LoadedConfig) -> Result<(ProblemData, Option<CorrectorSolution>)> {
    let cfg = &lc.config;
    let k = cfg.numerics.k_cap;
    match &cfg.model {
        ModelBlock::MultiAsset(m) => {
            let gamma = cfg.gamma()?;
            let data = homothetic_problem(m, gamma, k)?;
            let closed = if data.dim() == 1 {
                Some(solve_corrector_1d(data.v_z, data.v_zz, data.cov[0][0].sqrt(), data.a[0][0])?)
            } else {
                None
            };
            Ok((data, closed))
        }
        ModelBlock::Corrector(c) => {
            let data = ProblemData::new(vec![vec![c.alpha_sq.sqrt()]], c.v_z, c.v_zz, vec![vec![c.sigma_s]], k)?;
            Ok((data, Some(solve_corrector_1d(c.v_z, c.v_zz, c.sigma_s, c.alpha_sq)?)))
        }
        _ => unreachable!("checked at load"),
    }
}

/// Grid of the `solve` command.
pub fn solve_grid(lc: &LoadedConfig, data: &ProblemData) -> Result<GridSpec> {
    let gb = lc.config.numerics.grid.as_ref().context("numerics.grid is required for solve")?;
    let d = data.dim();
    if !(1..=2).contains(&d) {
        bail!("solve supports one or two assets, got {d}");
    }
    if gb.points.len() != d {
        bail!("numerics.grid.points has {} entries for a {d}-dimensional problem", gb.points.len());
    }
    let half = match &gb.half_extent {
        Some(h) => h.clone(),
        None => one_dimensional_estimates(data).iter().map(|e| gb.extent_factor * e).collect(),
    };
    Ok(GridSpec::symmetric(&half, &gb.points)?)
}

fn solve(lc: &LoadedConfig, dir: &Path, out: &mut Outputs) -> Result<()> {
    let cfg = &lc.config;
    let (data, closed) = solve_problem(lc)?;
    let grid = solve_grid(lc, &data)?;
    let sol = policy_iteration(&data, &grid, &cfg.numerics.solver)?;
    let d = data.dim();
    let lambda = cfg.costs.map(|c| c.lambda_p);
    let scale = lambda.map_or(1.0, f64::cbrt);

    let header: Vec<&str> = if d == 1 { vec!["xi_1", "policy_code"] } else { vec!["xi_1", "xi_2", "policy_code"] };
    let mut mask = Csv::new(&lc.sha256, None, &header);
    for p in 0..grid.len() {
        let mut row: Vec<String> = grid.point(p).iter().map(|x| (scale * x).to_string()).collect();
        row.push(sol.region.codes[p].to_string());
        mask.row(&row);
    }
    out.csv(dir, &format!("{}_mask.csv", lc.stem), &mask)?;
    if d == 2 {
        let mut b = Csv::new(&lc.sha256, None, &["dim", "other", "lo", "hi"]);
        for (i, sec) in sol.region.sections.iter().enumerate() {
            for &(other, lo, hi) in sec {
                b.row(&[(i + 1).to_string(), (scale * other).to_string(), (scale * lo).to_string(), (scale * hi).to_string()]);
            }
        }
        out.csv(dir, &format!("{}_boundary.csv", lc.stem), &b)?;
    }

    let comparison = closed.map(|c| ClosedFormComparison {
        delta_xi: c.delta_xi,
        a: c.a,
        halfwidth_relative_deviation: sol.region.halfwidth[0] / c.delta_xi - 1.0,
        a_relative_deviation: sol.a / c.a - 1.0,
    });
    out.say(format!("policy iteration: {} iterations, a = {}", sol.iterations, sol.a));
    for i in 0..d {
        out.say(format!(
            "asset {}: halfwidth {} (scaled {}){}",
            i + 1,
            sol.region.halfwidth[i],
            scale * sol.region.halfwidth[i],
            if sol.region.truncated[i] { ", truncated by the grid" } else { "" }
        ));
    }
    if let Some(c) = &comparison {
        out.say(format!(
            "closed form: delta_xi = {}, a = {}; solver deviation: halfwidth {:+.3}%, a {:+.3}%",
            c.delta_xi,
            c.a,
            100.0 * c.halfwidth_relative_deviation,
            100.0 * c.a_relative_deviation
        ));
    }
    let report = SolveReport {
        config_sha256: &lc.sha256,
        note: cfg.note.as_deref(),
        dim: d,
        points: (0..d).map(|i| grid.count(i)).collect(),
        half_extent: (0..d).map(|i| grid.hi(i)).collect(),
        h: grid.steps().to_vec(),
        k_cap: data.k_cap,
        iterations: sol.iterations,
        a: sol.a,
        a_history: sol.a_history.clone(),
        timings_ms: sol.timings_ms.clone(),
        halfwidth: sol.region.halfwidth.clone(),
        lower: sol.region.lower.clone(),
        upper: sol.region.upper.clone(),
        truncated: sol.region.truncated.clone(),
        lambda_p: lambda,
        scale,
        halfwidth_scaled: sol.region.halfwidth.iter().map(|h| scale * h).collect(),
        closed_form: comparison,
    };
    out.json(dir, &format!("{}.json", lc.stem), &report)
}

fn convergence(lc: &LoadedConfig, dir: &Path, out: &mut Outputs) -> Result<()> {
    let cfg = &lc.config;
    let ModelBlock::KimOmberg(p) = cfg.model else { unreachable!("checked at load") };
    let gamma = cfg.gamma()?;
    let horizon = cfg.horizon()?;
    let lambda = cfg.lambda_p()?;
    let f = cfg.numerics.f.unwrap_or(p.f_bar);
    let model = KimOmbergModel::new(p, gamma, horizon)?;
    let st = model.stationary()?;
    let pi_bar = st.pi_bar(f);
    let bar = ntregion_power(pi_bar, st.pi_bar_slope, gamma, p.sigma_s, p.sigma_f, p.rho, lambda)?;
    let header = [
        "t", "pi", "pi_f", "lower", "upper", "halfwidth", "pi_bar", "lower_bar", "upper_bar", "halfwidth_bar",
    ];
    let mut csv = Csv::new(&lc.sha256, None, &header);
    let steps = (horizon / cfg.numerics.t_step).ceil() as usize;
    for k in 0..=steps {
        let t = (k as f64 * cfg.numerics.t_step).min(horizon);
        let rc = model.riccati(t)?;
        let pi = model.weight_with(&rc, f);
        let pi_f = model.sensitivity_with(&rc);
        let r = ntregion_power(pi, pi_f, gamma, p.sigma_s, p.sigma_f, p.rho, lambda)?;
        csv.floats(&[t, pi, pi_f, r.lower(), r.upper(), r.halfwidth, pi_bar, bar.lower(), bar.upper(), bar.halfwidth]);
    }
    out.say(format!("stationary weight {pi_bar}, halfwidth {}", bar.halfwidth));
    out.csv(dir, &format!("{}.csv", lc.stem), &csv)
}
