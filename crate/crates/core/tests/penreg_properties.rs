use aipw_oal::data::zscore_columns;
use aipw_oal::penreg::{
    cross_validate, expit, fit_adaptive_lasso, fit_lasso, fit_lsp, fit_path, lambda_grid, Family, FitConfig,
    LambdaGrid, PenaltyKind, PenaltySpec, LSP_DELTA, LSP_MAX_ITER,
};
use aipw_oal::simulation::{make_replication, Confounding, CovariateType, Misspec, ScenarioConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn design(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
    (x, rng)
}

fn linear_data(n: usize, p: usize, seed: u64, signal: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
    let (x, mut rng) = design(n, p, seed);
    let y = (0..n)
        .map(|i| {
            let mean: f64 = signal.iter().enumerate().map(|(j, b)| b * x[(i, j)]).sum();
            let e: f64 = StandardNormal.sample(&mut rng);
            1.0 + mean + e
        })
        .collect();
    (x, y)
}

fn logistic_data(n: usize, p: usize, seed: u64, signal: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
    let (x, mut rng) = design(n, p, seed);
    let y = (0..n)
        .map(|i| {
            let eta: f64 = -0.2 + signal.iter().enumerate().map(|(j, b)| b * x[(i, j)]).sum::<f64>();
            f64::from(u8::from(rng.gen::<f64>() < expit(eta)))
        })
        .collect();
    (x, y)
}

fn tight() -> FitConfig {
    FitConfig { tol: 1e-16, ..FitConfig::default() }
}

/// Largest KKT violation of the l1 problem on the z-score scale.
fn kkt_violation(xs: &DMatrix<f64>, y: &[f64], family: Family, std_coef: &[f64], lambda: f64, factors: &[f64]) -> f64 {
    let n = y.len();
    let p = xs.ncols();
    let mut eta: Vec<f64> = (0..n).map(|i| (0..p).map(|j| std_coef[j] * xs[(i, j)]).sum()).collect();
    // intercept solves its own stationarity condition
    let resid = |eta: &[f64], b0: f64| -> Vec<f64> {
        match family {
            Family::Linear => y.iter().zip(eta).map(|(y, e)| y - b0 - e).collect(),
            Family::Logistic => y.iter().zip(eta).map(|(y, e)| y - expit(b0 + e)).collect(),
        }
    };
    let b0 = match family {
        Family::Linear => y.iter().zip(&eta).map(|(y, e)| y - e).sum::<f64>() / n as f64,
        Family::Logistic => {
            let mut b0 = 0.0;
            for _ in 0..100 {
                let g: f64 = y.iter().zip(&eta).map(|(y, e)| y - expit(b0 + e)).sum();
                let h: f64 = eta.iter().map(|e| {
                    let q = expit(b0 + e);
                    q * (1.0 - q)
                }).sum();
                b0 += g / h;
            }
            b0
        }
    };
    let r = resid(&eta, b0);
    eta.clear();
    (0..p)
        .map(|j| {
            let g = xs.column(j).iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            let t = lambda * factors[j];
            if std_coef[j] != 0.0 {
                (g - t * std_coef[j].signum()).abs()
            } else {
                (g.abs() - t).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

#[test]
fn kkt_holds_along_linear_and_logistic_paths() {
    let signal = [1.0, -0.8, 0.5, 0.0, 0.0, 0.3];
    let factors = vec![1.0, 0.5, 2.0, 1.0, 1.0, 1.0, 0.7, 1.0];
    for (family, (x, y)) in [
        (Family::Linear, linear_data(120, 8, 1, &signal)),
        (Family::Logistic, logistic_data(300, 8, 2, &signal)),
    ] {
        let spec = PenaltySpec::with_factors(PenaltyKind::L1, factors.clone());
        let path = fit_path(&x, &y, family, &spec, &tight()).unwrap();
        let (xs, _) = zscore_columns(&x);
        for m in &path {
            let v = kkt_violation(&xs, &y, family, &m.std_coef, m.lambda_used, &factors);
            assert!(v < 1e-4, "{family:?} λ={} violation {v}", m.lambda_used);
        }
    }
}

#[test]
fn objective_never_increases_between_sweeps() {
    let (x, y) = linear_data(80, 10, 3, &[1.0, 1.0, -1.0, 0.5]);
    for kind in [PenaltyKind::L1, PenaltyKind::ElasticNet { mix: 0.4 }, PenaltyKind::Mcp { gamma: 3.0 }, PenaltyKind::Scad { a: 3.7 }] {
        let cfg = FitConfig { record_objective: true, tol: 1e-14, ..FitConfig::default() };
        let path = fit_path(&x, &y, Family::Linear, &PenaltySpec::uniform(kind, 10), &cfg).unwrap();
        for m in &path {
            for w in m.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{kind:?}: {} then {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn column_rescaling_leaves_predictions_unchanged() {
    let (x, y) = linear_data(100, 6, 4, &[1.0, 0.0, -0.5]);
    let mut scaled = x.clone();
    scaled.column_mut(0).scale_mut(1000.0);
    scaled.column_mut(3).scale_mut(0.01);
    scaled.column_mut(4).add_scalar_mut(50.0);
    let spec = PenaltySpec::uniform(PenaltyKind::L1, 6);
    let a = cross_validate(&x, &y, Family::Linear, &spec, &tight()).unwrap();
    let b = cross_validate(&scaled, &y, Family::Linear, &spec, &tight()).unwrap();
    assert_eq!(a.selected_index, b.selected_index);
    assert_eq!(a.model.selected, b.model.selected);
    for (p, q) in a.model.predict(&x).iter().zip(b.model.predict(&scaled)) {
        assert!((p - q).abs() < 1e-8);
    }
    assert!((a.model.coef[0] - 1000.0 * b.model.coef[0]).abs() < 1e-6);
}

#[test]
fn column_permutation_leaves_fit_unchanged() {
    let (x, y) = logistic_data(250, 6, 5, &[1.0, -1.0, 0.0, 0.5]);
    let perm = [3, 0, 5, 1, 4, 2];
    let xp = DMatrix::from_fn(250, 6, |i, j| x[(i, perm[j])]);
    let spec = PenaltySpec::uniform(PenaltyKind::L1, 6);
    let a = cross_validate(&x, &y, Family::Logistic, &spec, &tight()).unwrap();
    let b = cross_validate(&xp, &y, Family::Logistic, &spec, &tight()).unwrap();
    assert_eq!(a.selected_index, b.selected_index);
    for (j, &src) in perm.iter().enumerate() {
        assert!((b.model.coef[j] - a.model.coef[src]).abs() < 1e-7);
    }
    for (p, q) in a.model.predict(&x).iter().zip(b.model.predict(&xp)) {
        assert!((p - q).abs() < 1e-9);
    }
}

/// Penalized least-squares objective on the z-score scale, minimized by
/// nested golden-section search over two coefficients.
fn golden<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (hi - g * (hi - lo), lo + g * (hi - lo));
    for _ in 0..200 {
        if f(c) < f(d) {
            hi = d;
        } else {
            lo = c;
        }
        c = hi - g * (hi - lo);
        d = lo + g * (hi - lo);
    }
    (lo + hi) / 2.0
}

#[test]
fn weighted_elastic_net_matches_brute_force_minimizer() {
    let (x, y) = linear_data(60, 2, 6, &[0.8, -0.4]);
    let (xs, _) = zscore_columns(&x);
    let n = 60.0;
    let ybar = y.iter().sum::<f64>() / n;
    let (mix, lam, f) = (0.6, 0.15, [0.7, 1.8]);
    let obj = |b1: f64, b2: f64| {
        let rss: f64 = (0..60).map(|i| (y[i] - ybar - b1 * xs[(i, 0)] - b2 * xs[(i, 1)]).powi(2)).sum();
        let pen = |b: f64, w: f64| lam * w * (mix * b.abs() + 0.5 * (1.0 - mix) * b * b);
        rss / (2.0 * n) + pen(b1, f[0]) + pen(b2, f[1])
    };
    let best_b2 = |b1: f64| golden(|b2| obj(b1, b2), -3.0, 3.0);
    let b1 = golden(|b1| obj(b1, best_b2(b1)), -3.0, 3.0);
    let b2 = best_b2(b1);
    let cfg = FitConfig { lambda_grid: LambdaGrid::Explicit(vec![lam]), tol: 1e-20, ..FitConfig::default() };
    let spec = PenaltySpec::with_factors(PenaltyKind::ElasticNet { mix }, f.to_vec());
    let m = &fit_path(&x, &y, Family::Linear, &spec, &cfg).unwrap()[0];
    assert!((m.std_coef[0] - b1).abs() < 1e-6, "{} vs {b1}", m.std_coef[0]);
    assert!((m.std_coef[1] - b2).abs() < 1e-6, "{} vs {b2}", m.std_coef[1]);
}

fn scenario_one(rep: usize) -> (DMatrix<f64>, Vec<f64>) {
    let cfg = ScenarioConfig::new(200, 80, 0.0, Confounding::Strong, CovariateType::Continuous, Misspec::None, 100, 77);
    let d = make_replication(&cfg, rep, cfg.seed).unwrap();
    (d.x, d.y)
}

#[test]
fn adaptive_lasso_keeps_outcome_covariates() {
    let runs = 100;
    let cfg = FitConfig::default();
    let hits = (0..runs)
        .filter(|&rep| {
            let (x, y) = scenario_one(rep);
            let m = fit_adaptive_lasso(&x, &y, Family::Linear, &cfg).unwrap();
            (0..4).all(|j| m.selected.contains(&j))
        })
        .count();
    assert!(hits >= 90, "superset of the outcome covariates in {hits}/{runs}");
}

#[test]
fn log_sum_penalty_is_no_denser_than_lasso() {
    let runs = 100;
    let cfg = FitConfig::default();
    let hits = (0..runs)
        .filter(|&rep| {
            let (x, y) = scenario_one(rep);
            let lsp = fit_lsp(&x, &y, Family::Linear, &cfg, LSP_DELTA, LSP_MAX_ITER).unwrap();
            let lasso = fit_lasso(&x, &y, Family::Linear, &cfg).unwrap();
            lsp.selected.len() <= lasso.selected.len()
        })
        .count();
    assert!(hits >= 90, "log-sum support no larger than lasso in {hits}/{runs}");
}

#[test]
fn automatic_grid_starts_at_lambda_max() {
    let (x, y) = logistic_data(200, 5, 7, &[1.5, 0.0, -1.0]);
    let spec = PenaltySpec::uniform(PenaltyKind::L1, 5);
    let grid = lambda_grid(&x, &y, Family::Logistic, &spec, &FitConfig::default()).unwrap();
    assert_eq!(grid.len(), 100);
    assert!((grid[99] / grid[0] - 1e-4).abs() < 1e-12);
    let path = fit_path(&x, &y, Family::Logistic, &spec, &FitConfig::default()).unwrap();
    assert!(path[0].selected.is_empty());
    assert!(!path[1].selected.is_empty());
}
