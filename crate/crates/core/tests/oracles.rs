//! Independent oracles: brute-force ODE integration, finite-difference HJB
//! residuals, closed-form Black–Scholes expectations, dense stationary laws.

use smallcost::corrector::{ntregion_power, solve_corrector_1d, unit_halfwidth, w_derivative, w_second_derivative};
use smallcost::ergodic::{
    discretize_generator, policy_evaluation, policy_iteration, GridSpec, Policy, ProblemData, SolverConfig,
};
use smallcost::frictionless::{
    hjb_residual, ko_riccati, ko_stationary, ko_weight, merton_weight, FactorMarket, FdSteps,
};
use smallcost::{BlackScholes as BlackScholesParams, KimOmberg as KimOmbergParams};
use smallcost::montecarlo::{batch_means, McConfig};
use smallcost::quadrature::QuadratureConfig;
use smallcost::simulate::{simulate_factor, simulate_proportional, trading_stats, PathConfig};
use smallcost::welfare::{
    cel_monte_carlo, esr_loss_bs, esr_loss_ko, second_corrector_u, simulate_tilted, tilted_ou, FactorStart,
};

fn fig() -> KimOmbergParams {
    KimOmbergParams { r: 0.0168, sigma_s: 0.151, kappa: 0.271, f_bar: 0.041, sigma_f: 0.0343, rho: 0.0 }
}

fn with_rho(rho: f64) -> KimOmbergParams {
    KimOmbergParams { rho, ..fig() }
}

// Riccati system in tau = T - t for g = A + B f + C f^2 / 2.
fn riccati_rhs(p: &KimOmbergParams, gamma: f64, y: [f64; 3]) -> [f64; 3] {
    let [_, b, c] = y;
    let q = (1.0 - gamma) / gamma;
    let s2 = p.sigma_f * p.sigma_f;
    let lin = 1.0 / p.sigma_s + p.rho * p.sigma_f * c;
    let dc = q * lin * lin - 2.0 * p.kappa * c + s2 * c * c;
    let db = q * p.rho * p.sigma_f * b * lin + p.kappa * p.f_bar * c - p.kappa * b + s2 * b * c;
    let da = (1.0 - gamma) * p.r + 0.5 * q * p.rho * p.rho * s2 * b * b + p.kappa * p.f_bar * b + 0.5 * s2 * (c + b * b);
    [da, db, dc]
}

fn rk4(p: &KimOmbergParams, gamma: f64, tau: f64, steps: usize) -> [f64; 3] {
    let h = tau / steps as f64;
    let mut y = [0.0; 3];
    let add = |y: [f64; 3], k: [f64; 3], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]];
    for _ in 0..steps {
        let k1 = riccati_rhs(p, gamma, y);
        let k2 = riccati_rhs(p, gamma, add(y, k1, h / 2.0));
        let k3 = riccati_rhs(p, gamma, add(y, k2, h / 2.0));
        let k4 = riccati_rhs(p, gamma, add(y, k3, h));
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

#[test]
fn riccati_closed_form_matches_ode_integration() {
    for rho in [0.0, -0.5, 0.3] {
        let p = with_rho(rho);
        for tau in [0.5, 5.0, 40.0] {
            let [a, b, c] = rk4(&p, 3.0, tau, (tau * 2000.0) as usize);
            let rc = ko_riccati(&p, 3.0, 40.0, 40.0 - tau).unwrap();
            let scale = |x: f64| 1.0 + x.abs();
            assert!((rc.a - a).abs() / scale(a) < 1e-8, "rho {rho} tau {tau}: A {} vs {a}", rc.a);
            assert!((rc.b - b).abs() / scale(b) < 1e-8, "rho {rho} tau {tau}: B {} vs {b}", rc.b);
            assert!((rc.c - c).abs() / scale(c) < 1e-8, "rho {rho} tau {tau}: C {} vs {c}", rc.c);
        }
    }
}

#[test]
fn riccati_reference_values() {
    let rc = ko_riccati(&fig(), 3.0, 40.0, 0.0).unwrap();
    assert!((rc.a + 3.0415104317).abs() < 1e-9, "{}", rc.a);
    assert!((rc.b + 1.65046954).abs() < 1e-7, "{}", rc.b);
    assert!((rc.c + 48.78042539).abs() < 1e-7, "{}", rc.c);
}

#[test]
fn long_horizon_coefficients_reach_stationary_values() {
    for rho in [0.0, -0.4] {
        let p = with_rho(rho);
        let st = ko_stationary(&p, 3.0).unwrap();
        let rc = ko_riccati(&p, 3.0, 200.0, 0.0).unwrap();
        assert!((rc.b - st.b_bar).abs() < 1e-6);
        assert!((rc.c - st.c_bar).abs() < 1e-6);
    }
}

#[test]
fn terminal_weight_is_myopic() {
    let (pi, pi_f) = ko_weight(&fig(), 3.0, 40.0, 40.0, 0.041).unwrap();
    assert!((pi - 0.041 / (3.0 * 0.151 * 0.151)).abs() < 1e-15);
    assert!((pi - 0.5994).abs() < 1e-4);
    assert!(pi_f > 0.0);
    let bs = BlackScholesParams { r: 0.0168, mu: 0.041, sigma: 0.151 };
    assert!((merton_weight(&bs, 3.0) - 0.59939).abs() < 1e-5);
}

fn residual_points(horizon: f64) -> Vec<(f64, f64, f64)> {
    let mut pts = Vec::new();
    for i in 0..50 {
        for j in 0..50 {
            let t = (horizon - 1.0) * i as f64 / 49.0;
            let f = -0.05 + 0.2 * j as f64 / 49.0;
            pts.push((t, 1.0, f));
        }
    }
    pts
}

#[test]
fn black_scholes_value_solves_hjb() {
    let bs = FactorMarket::BlackScholes(BlackScholesParams { r: 0.0168, mu: 0.041, sigma: 0.151 });
    let pts: Vec<_> = (0..20).map(|i| (i as f64, 0.5 + 0.1 * i as f64, 0.0)).collect();
    let res = hjb_residual(&bs, 3.0, 40.0, &pts, FdSteps::uniform(1e-4)).unwrap();
    assert!(res < 1e-6, "{res}");
}

#[test]
fn kim_omberg_value_solves_hjb() {
    for rho in [0.0, -0.5] {
        let market = FactorMarket::KimOmberg(with_rho(rho));
        let res = hjb_residual(&market, 3.0, 40.0, &residual_points(40.0), FdSteps::uniform(1e-4)).unwrap();
        assert!(res < 1e-4, "rho {rho}: {res}");
    }
}

#[test]
fn hjb_residual_is_second_order_in_the_step() {
    // Truncation-dominated steps: halving the step divides the residual by four.
    let market = FactorMarket::KimOmberg(fig());
    let pts = [(10.0, 1.0, 0.08), (30.0, 1.0, -0.02)];
    let coarse = hjb_residual(&market, 3.0, 40.0, &pts, FdSteps::uniform(0.04)).unwrap();
    let fine = hjb_residual(&market, 3.0, 40.0, &pts, FdSteps::uniform(0.02)).unwrap();
    let ratio = coarse / fine;
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio} ({coarse} / {fine})");
}

#[test]
fn perturbed_value_fails_hjb() {
    let market = FactorMarket::KimOmberg(fig());
    let v = market.closed_form_value(3.0, 40.0).unwrap();
    let res = smallcost::frictionless::hjb_residual_of(
        &market,
        |t, z, f| v(t, z, f) * (1.0 + 0.1 * f),
        &residual_points(40.0),
        FdSteps::uniform(1e-4),
    );
    assert!(res > 1e-4, "{res}");
}

#[test]
fn corrector_example_and_smooth_pasting() {
    let sol = solve_corrector_1d(1.0_f64, -1.0, 1.0, 2.0 / 3.0).unwrap();
    assert!((sol.delta_xi - 1.0).abs() < 1e-14);
    assert!((sol.a + 0.5).abs() < 1e-14);
    let d = sol.delta_xi;
    assert!((w_derivative(&sol, d) - 1.0).abs() < 1e-13);
    assert!((w_derivative(&sol, -d) + 1.0).abs() < 1e-13);
    assert!(w_second_derivative(&sol, d).abs() < 1e-13);
}

#[test]
fn figure_one_region_width() {
    let pi: f64 = 0.041 / (3.0 * 0.151 * 0.151);
    let r = ntregion_power(pi, 0.0, 3.0, 0.151, 0.0343, 0.0, 0.01).unwrap();
    assert!((r.halfwidth - 0.0660).abs() < 1e-4, "{}", r.halfwidth);
    assert!((unit_halfwidth(pi, 0.0, 3.0, 0.151, 0.0343, 0.0) - 0.3066).abs() < 1e-3);
}

#[test]
fn esr_small_factor_volatility_limit() {
    let p = KimOmbergParams { sigma_f: 1e-7, ..fig() };
    let ko = esr_loss_ko(&p, 3.0, 0.01, &QuadratureConfig::default()).unwrap();
    let bs = esr_loss_bs(&p.frozen_at_mean(), 3.0, 0.01).unwrap();
    assert!((ko.delta_esr / bs.delta_esr - 1.0).abs() < 1e-4, "{} vs {}", ko.delta_esr, bs.delta_esr);
}

#[test]
fn tilted_drift_matches_brute_force() {
    for rho in [0.0, -0.6, 0.4] {
        let p = with_rho(rho);
        let st = ko_stationary(&p, 3.0).unwrap();
        let tilt = tilted_ou(&p, 3.0, &st).unwrap();
        for f in [-0.1, 0.0, 0.05, 0.2] {
            let pi = st.pi_bar(f);
            let drift = p.kappa * (p.f_bar - f)
                + p.sigma_f * (1.0 - 3.0) * pi * p.sigma_s * p.rho
                + (st.b_bar + st.c_bar * f) * p.sigma_f * p.sigma_f;
            assert!((drift - tilt.kappa_tilde * (tilt.f_tilde - f)).abs() < 1e-14);
        }
    }
}

#[test]
fn tilted_path_has_stationary_moments() {
    let st = ko_stationary(&fig(), 3.0).unwrap();
    let tilt = tilted_ou(&fig(), 3.0, &st).unwrap();
    let path = simulate_tilted(&tilt, tilt.f_tilde, 0.05, 200_000, 11);
    let mean = batch_means(&path, 100);
    assert!((mean.mean - tilt.f_tilde).abs() < 3.0 * mean.standard_error, "{mean:?} vs {}", tilt.f_tilde);
}

#[test]
fn factor_long_run_mean() {
    let cfg = PathConfig { f0: Some(0.2), ..PathConfig::new(5, 0.05, 2000.0, 1) };
    let path = &simulate_factor(&fig(), &cfg).unwrap()[0];
    let tail = &path[path.len() / 10..];
    let est = batch_means(tail, 50);
    assert!((est.mean - 0.041).abs() < 3.0 * est.standard_error, "{est:?}");
}

#[test]
fn black_scholes_second_corrector_closed_form() {
    let bs = BlackScholesParams { r: 0.0168, mu: 0.041, sigma: 0.151 };
    let gamma = 3.0;
    let (horizon, t, z) = (10.0_f64, 2.0_f64, 1.5_f64);
    let pi = merton_weight(&bs, gamma);
    let dpi = unit_halfwidth(pi, 0.0, gamma, bs.sigma, 0.0, 0.0);
    let rate = (1.0 - gamma) * (bs.r + bs.mu * bs.mu / (2.0 * gamma * bs.sigma * bs.sigma));
    let exact = (horizon - t) * gamma / 2.0 * bs.sigma * bs.sigma * dpi * dpi
        * z.powf(1.0 - gamma)
        * (rate * (horizon - t)).exp();
    let mc = McConfig { seed: 3, dt: 0.05, n_paths: 4000 };
    let est = second_corrector_u(&FactorMarket::BlackScholes(bs), gamma, horizon, t, z, 0.0, &mc).unwrap();
    assert!((est.mean - exact).abs() < 3.0 * est.standard_error + 1e-12 * exact, "{est:?} vs {exact}");
}

#[test]
fn long_horizon_cel_rate_approaches_esr_loss() {
    let lambda = 0.01;
    let esr = esr_loss_ko(&fig(), 3.0, lambda, &QuadratureConfig::default()).unwrap();
    let mc = McConfig { seed: 9, dt: 0.05, n_paths: 400 };
    let cel = cel_monte_carlo(&fig(), 3.0, 100.0, 0.0, FactorStart::TiltedStationary, lambda, &mc).unwrap();
    let rate = cel.rate();
    assert!(
        (rate.mean - esr.delta_esr).abs() < 3.0 * rate.standard_error,
        "{rate:?} vs {}",
        esr.delta_esr
    );
}

#[test]
fn turnover_scales_like_inverse_cube_root_of_cost() {
    let cfg = PathConfig::new(21, 1.0 / 2520.0, 20.0, 8);
    let turnover = |lambda: f64| {
        let paths = simulate_proportional(&fig(), 3.0, 40.0, lambda, &cfg).unwrap();
        paths.iter().map(|p| trading_stats(p).turnover).sum::<f64>() / paths.len() as f64
    };
    let (lo, hi) = (turnover(1e-3), turnover(1e-2));
    let ratio = lo / hi;
    let expected = 10f64.powf(1.0 / 3.0);
    assert!((ratio / expected - 1.0).abs() < 0.2, "ratio {ratio}, expected {expected}");
}

#[test]
fn turnover_converges_as_the_step_shrinks() {
    let turnover = |dt: f64| {
        let cfg = PathConfig::new(4, dt, 10.0, 64);
        let paths = simulate_proportional(&fig(), 3.0, 40.0, 0.01, &cfg).unwrap();
        paths.iter().map(|p| trading_stats(p).turnover).sum::<f64>() / paths.len() as f64
    };
    let (a, b) = (turnover(1.0 / 2520.0), turnover(1.0 / 10080.0));
    assert!((a - b).abs() / b < 0.1, "{a} vs {b}");
}

// Dense stationary law of a small generator, by Gaussian elimination on
// pi^T L = 0 with one equation replaced by sum(pi) = 1.
fn stationary_law(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut m: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| rows[i][j]).collect()).collect();
    let mut rhs = vec![0.0; n];
    m[n - 1] = vec![1.0; n];
    rhs[n - 1] = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in 0..n {
            if r != col {
                let factor = m[r][col] / m[col][col];
                for c in col..n {
                    m[r][c] -= factor * m[col][c];
                }
                rhs[r] -= factor * rhs[col];
            }
        }
    }
    (0..n).map(|i| rhs[i] / m[i][i]).collect()
}

#[test]
fn zero_policy_constant_is_minus_stationary_cost() {
    let data = ProblemData::new(vec![vec![0.8]], 1.0, -1.0, vec![vec![1.0]], 50.0).unwrap();
    let grid = GridSpec::symmetric(&[1.0], &[21]).unwrap();
    let policy = Policy::zero(grid.len(), 1);
    let gen = discretize_generator(&data, &policy, &grid).unwrap();
    let dense: Vec<Vec<f64>> = (0..grid.len())
        .map(|r| {
            let mut row = vec![0.0; grid.len()];
            let (cols, vals) = gen.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] += v;
            }
            row
        })
        .collect();
    let law = stationary_law(&dense);
    let mean_cost: f64 = (0..grid.len()).map(|p| law[p] * data.deviation_cost(&grid.point(p))).sum();
    let (_, a) = policy_evaluation(&gen, &policy, &data, &grid, &SolverConfig::default()).unwrap();
    assert!((a + mean_cost).abs() < 1e-10 * mean_cost.abs(), "{a} vs {}", -mean_cost);
}

#[test]
fn one_dimensional_solver_recovers_closed_form() {
    for (v_zz, alpha_sq) in [(-1.0_f64, 2.0 / 3.0_f64), (-2.0, 0.3)] {
        let exact = solve_corrector_1d(1.0, v_zz, 1.0, alpha_sq).unwrap();
        let h = exact.delta_xi / 100.0;
        let half = 2.5 * exact.delta_xi;
        let points = 2 * (half / h).round() as usize + 1;
        let grid = GridSpec::symmetric(&[half], &[points]).unwrap();
        let data = ProblemData::new(vec![vec![alpha_sq.sqrt()]], 1.0, v_zz, vec![vec![1.0]], 100.0 / exact.delta_xi)
            .unwrap();
        let sol = policy_iteration(&data, &grid, &SolverConfig::default()).unwrap();
        assert!((sol.region.halfwidth[0] / exact.delta_xi - 1.0).abs() < 0.02, "{:?}", sol.region.halfwidth);
        assert!((sol.a / exact.a - 1.0).abs() < 0.02, "{} vs {}", sol.a, exact.a);
    }
}
