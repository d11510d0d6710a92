use nalgebra::DMatrix;

use super::threshold::{coordinate_update, penalty_value};
use super::{check_response, expit, Family, FitConfig, FittedModel, LambdaGrid, PenaltyKind, PenaltySpec};
use crate::data::{zscore_columns, StandardizationParams};
use crate::error::Result;

const WEIGHT_FLOOR: f64 = 1e-5;
const SATURATION: f64 = 0.999;
/// Minimum gain in explained deviance between consecutive λ before a
/// logistic path is cut short.
const MIN_DEV_GAIN: f64 = 1e-5;
/// Path points always fitted before the early-stopping rules apply.
const MIN_PATH_POINTS: usize = 5;

/// Internally standardized design. Zero-variance columns are zeroed and
/// treated as excluded.
pub(crate) struct Design {
    pub xs: DMatrix<f64>,
    pub params: StandardizationParams,
    pub usable: Vec<bool>,
}

impl Design {
    pub fn new(x: &DMatrix<f64>) -> Self {
        let params = StandardizationParams::compute(x);
        let (xs, usable) = zscore_columns(x);
        Self { xs, params, usable }
    }

    fn effective_factors(&self, factors: &[f64]) -> Vec<f64> {
        factors.iter().zip(&self.usable).map(|(&f, &u)| if u { f } else { f64::INFINITY }).collect()
    }

    fn model(&self, family: Family, b0_std: f64, beta: &[f64], lambda: f64) -> FittedModel {
        let (b0, coef) = self.params.coef_to_original(b0_std, beta);
        let std_coef = beta.iter().zip(&coef).map(|(b, c)| if *c == 0.0 { 0.0 } else { *b }).collect();
        FittedModel::from_parts(family, b0, coef, std_coef, lambda)
    }
}

#[inline]
fn lam_for(lam: f64, factor: f64) -> f64 {
    if factor == 0.0 {
        0.0
    } else {
        lam * factor
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct SolveOutcome {
    converged: bool,
    sweeps: usize,
    trace: Vec<f64>,
}

/// Least squares with covariance updates: the gradient `<x_j, r>/n` is kept
/// current through cached Gram columns of coordinates that have moved.
struct LinearState<'a> {
    xs: &'a DMatrix<f64>,
    ys: Vec<f64>,
    n: f64,
    kind: PenaltyKind,
    factors: &'a [f64],
    beta: Vec<f64>,
    grad: Vec<f64>,
    /// `<x_j, y - ȳ>/n`, for the residual sum of squares.
    xty: Vec<f64>,
    yy: f64,
    diag: Vec<f64>,
    gram: Vec<Option<Vec<f64>>>,
    eligible: Vec<usize>,
}

impl<'a> LinearState<'a> {
    fn new(xs: &'a DMatrix<f64>, y: &[f64], kind: PenaltyKind, factors: &'a [f64]) -> (Self, f64) {
        let n = y.len() as f64;
        let ybar = y.iter().sum::<f64>() / n;
        let ys: Vec<f64> = y.iter().map(|v| v - ybar).collect();
        let p = xs.ncols();
        let grad: Vec<f64> = (0..p).map(|j| dot(xs.column(j).as_slice(), &ys) / n).collect();
        let yy = dot(&ys, &ys) / n;
        let diag: Vec<f64> = (0..p).map(|j| xs.column(j).norm_squared() / n).collect();
        let eligible = (0..p).filter(|&j| factors[j].is_finite() && diag[j] > 0.0).collect();
        let state = Self {
            xs,
            ys,
            n,
            kind,
            factors,
            beta: vec![0.0; p],
            xty: grad.clone(),
            grad,
            yy,
            diag,
            gram: vec![None; p],
            eligible,
        };
        (state, ybar)
    }

    fn ensure_gram_column(&mut self, j: usize) {
        if self.gram[j].is_none() {
            let xj = self.xs.column(j);
            let col = (0..self.xs.ncols())
                .map(|k| self.xs.column(k).dot(&xj) / self.n)
                .collect();
            self.gram[j] = Some(col);
        }
    }

    fn update(&mut self, j: usize, lam: f64) -> f64 {
        let z = self.grad[j] + self.diag[j] * self.beta[j];
        let new = coordinate_update(self.kind, z, self.diag[j], lam_for(lam, self.factors[j]));
        let delta = new - self.beta[j];
        if delta != 0.0 {
            self.beta[j] = new;
            self.ensure_gram_column(j);
            let col = self.gram[j].as_deref().unwrap();
            for (g, c) in self.grad.iter_mut().zip(col) {
                *g -= delta * c;
            }
        }
        self.diag[j] * delta * delta
    }

    /// Fraction of the centered sum of squares explained by the current fit.
    fn rsq(&self) -> f64 {
        if self.yy <= 0.0 {
            return 0.0;
        }
        let rss = self.yy - dot(&self.beta, &self.xty) - dot(&self.beta, &self.grad);
        1.0 - rss / self.yy
    }

    /// One pass over the coordinates; returns the largest `x_jᵀx_j/n · Δ_j²`.
    fn sweep(&mut self, lam: f64, active_only: bool) -> f64 {
        let mut max_delta = 0.0f64;
        for idx in 0..self.eligible.len() {
            let j = self.eligible[idx];
            if active_only && self.beta[j] == 0.0 {
                continue;
            }
            max_delta = max_delta.max(self.update(j, lam));
        }
        max_delta
    }

    fn objective(&self, lam: f64) -> f64 {
        let mut r = self.ys.clone();
        for (j, &b) in self.beta.iter().enumerate() {
            if b != 0.0 {
                for (ri, xv) in r.iter_mut().zip(self.xs.column(j).iter()) {
                    *ri -= b * xv;
                }
            }
        }
        let loss = r.iter().map(|v| v * v).sum::<f64>() / (2.0 * self.n);
        loss + penalty_total(self.kind, &self.beta, self.factors, lam)
    }

    /// Converged when the largest weighted squared change falls below
    /// `tol` times the variance of y (glmnet's criterion).
    fn solve(&mut self, lam: f64, cfg: &FitConfig) -> SolveOutcome {
        let shr = cfg.tol * self.yy.max(f64::MIN_POSITIVE);
        let mut sweeps = 0usize;
        let mut trace = Vec::new();
        let record = |s: &Self, trace: &mut Vec<f64>| {
            if cfg.record_objective {
                trace.push(s.objective(lam));
            }
        };
        loop {
            let full = self.sweep(lam, false);
            sweeps += 1;
            record(self, &mut trace);
            if full < shr {
                return SolveOutcome { converged: true, sweeps, trace };
            }
            loop {
                if sweeps >= cfg.max_sweeps {
                    return SolveOutcome { converged: false, sweeps, trace };
                }
                let d = self.sweep(lam, true);
                sweeps += 1;
                record(self, &mut trace);
                if d < shr {
                    break;
                }
            }
            if sweeps >= cfg.max_sweeps {
                return SolveOutcome { converged: false, sweeps, trace };
            }
        }
    }
}

fn penalty_total(kind: PenaltyKind, beta: &[f64], factors: &[f64], lam: f64) -> f64 {
    beta.iter()
        .zip(factors)
        .filter(|(b, _)| **b != 0.0)
        .map(|(&b, &f)| penalty_value(kind, b, lam_for(lam, f)))
        .sum()
}

/// Logistic regression by penalized iteratively reweighted least squares:
/// an outer quadratic approximation around a weighted coordinate descent.
struct LogisticState<'a> {
    xs: &'a DMatrix<f64>,
    y: &'a [f64],
    n: f64,
    kind: PenaltyKind,
    factors: &'a [f64],
    b0: f64,
    beta: Vec<f64>,
    eta: Vec<f64>,
    eligible: Vec<usize>,
    null_deviance: f64,
}

impl<'a> LogisticState<'a> {
    fn new(xs: &'a DMatrix<f64>, y: &'a [f64], kind: PenaltyKind, factors: &'a [f64]) -> Self {
        let n = y.len() as f64;
        let ybar = y.iter().sum::<f64>() / n;
        let b0 = if ybar > 0.0 && ybar < 1.0 { (ybar / (1.0 - ybar)).ln() } else { 0.0 };
        let p = xs.ncols();
        let eligible =
            (0..p).filter(|&j| factors[j].is_finite() && xs.column(j).norm_squared() > 0.0).collect();
        let mut s = Self {
            xs,
            y,
            n,
            kind,
            factors,
            b0,
            beta: vec![0.0; p],
            eta: vec![b0; y.len()],
            eligible,
            null_deviance: 0.0,
        };
        s.null_deviance = s.deviance();
        s
    }

    fn refresh_eta(&mut self) {
        let n_obs = self.y.len();
        self.eta.iter_mut().for_each(|e| *e = self.b0);
        for (j, &b) in self.beta.iter().enumerate() {
            if b != 0.0 {
                let col = &self.xs.as_slice()[j * n_obs..(j + 1) * n_obs];
                for (e, x) in self.eta.iter_mut().zip(col) {
                    *e += b * x;
                }
            }
        }
    }

    fn deviance(&self) -> f64 {
        self.y
            .iter()
            .zip(&self.eta)
            .map(|(&y, &e)| {
                // -2 log-likelihood, stable in eta
                let log1pexp = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
                2.0 * (log1pexp - y * e)
            })
            .sum()
    }

    fn objective(&self, lam: f64) -> f64 {
        self.deviance() / (2.0 * self.n) + penalty_total(self.kind, &self.beta, self.factors, lam)
    }

    fn gradient(&self, j: usize) -> f64 {
        let col = self.xs.column(j);
        self.y
            .iter()
            .zip(&self.eta)
            .zip(col.iter())
            .map(|((&y, &e), &x)| x * (y - expit(e)))
            .sum::<f64>()
            / self.n
    }

    /// Convergence is measured as in glmnet: the largest curvature-weighted
    /// squared coefficient change, relative to the null deviance per observation.
    fn solve(&mut self, lam: f64, cfg: &FitConfig) -> SolveOutcome {
        let n_obs = self.y.len();
        let shr = cfg.tol * (self.null_deviance / (2.0 * self.n)).max(f64::MIN_POSITIVE);
        let mut sweeps = 0usize;
        let mut trace = Vec::new();
        let nc = self.xs.ncols();
        let mut w = vec![0.0; n_obs];
        // weighted working residual w_i (u_i - η_i)
        let mut wr = vec![0.0; n_obs];
        // weighted columns w_i x_ij, refreshed per quadratic approximation
        let mut wx = vec![0.0; n_obs * nc];
        let mut curv = vec![0.0; nc];
        for _outer in 0..cfg.max_outer.max(1) {
            for i in 0..n_obs {
                let p = expit(self.eta[i]);
                w[i] = (p * (1.0 - p)).max(WEIGHT_FLOOR);
                wr[i] = self.y[i] - p;
            }
            let wsum: f64 = w.iter().sum();
            for &j in &self.eligible {
                let col = &self.xs.as_slice()[j * n_obs..(j + 1) * n_obs];
                let wcol = &mut wx[j * n_obs..(j + 1) * n_obs];
                let mut c = 0.0;
                for ((o, x), wi) in wcol.iter_mut().zip(col).zip(&w) {
                    *o = wi * x;
                    c += *o * x;
                }
                curv[j] = c / self.n;
            }
            let b0_old = self.b0;
            let beta_old = self.beta.clone();

            let mut inner = |active_only: bool, s: &mut Self| -> f64 {
                let mut dlx = 0.0f64;
                for idx in 0..s.eligible.len() {
                    let j = s.eligible[idx];
                    if active_only && s.beta[j] == 0.0 {
                        continue;
                    }
                    let col = &s.xs.as_slice()[j * n_obs..(j + 1) * n_obs];
                    let g = dot(col, &wr) / s.n;
                    let z = g + curv[j] * s.beta[j];
                    let new = coordinate_update(s.kind, z, curv[j], lam_for(lam, s.factors[j]));
                    let delta = new - s.beta[j];
                    if delta != 0.0 {
                        s.beta[j] = new;
                        let wcol = &wx[j * n_obs..(j + 1) * n_obs];
                        for (ri, wxi) in wr.iter_mut().zip(wcol) {
                            *ri -= delta * wxi;
                        }
                        dlx = dlx.max(curv[j] * delta * delta);
                    }
                }
                let d0 = wr.iter().sum::<f64>() / wsum;
                if d0 != 0.0 {
                    s.b0 += d0;
                    for (ri, wi) in wr.iter_mut().zip(&w) {
                        *ri -= d0 * wi;
                    }
                }
                dlx.max(wsum / s.n * d0 * d0)
            };

            loop {
                let full = inner(false, self);
                sweeps += 1;
                if cfg.record_objective {
                    self.refresh_eta();
                    trace.push(self.objective(lam));
                }
                if full < shr || sweeps >= cfg.max_sweeps {
                    break;
                }
                loop {
                    let d = inner(true, self);
                    sweeps += 1;
                    if cfg.record_objective {
                        self.refresh_eta();
                        trace.push(self.objective(lam));
                    }
                    if d < shr || sweeps >= cfg.max_sweeps {
                        break;
                    }
                }
            }
            self.refresh_eta();
            if sweeps >= cfg.max_sweeps {
                return SolveOutcome { converged: false, sweeps, trace };
            }
            let wsum_n = wsum / self.n;
            let change = self
                .eligible
                .iter()
                .map(|&j| curv[j] * (self.beta[j] - beta_old[j]).powi(2))
                .fold(wsum_n * (self.b0 - b0_old).powi(2), f64::max);
            if change < shr {
                return SolveOutcome { converged: true, sweeps, trace };
            }
            // a nearly separated fit keeps inflating its coefficients; stop
            // once the deviance is all but exhausted, as glmnet does
            if self.null_deviance > 0.0 && 1.0 - self.deviance() / self.null_deviance > SATURATION {
                return SolveOutcome { converged: false, sweeps, trace };
            }
        }
        SolveOutcome { converged: false, sweeps, trace }
    }
}

fn resolve_grid(
    grid: &LambdaGrid,
    lambda_max: f64,
    n: usize,
    p: usize,
) -> Vec<f64> {
    match grid {
        LambdaGrid::Explicit(v) => {
            let mut v = v.clone();
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            v
        }
        LambdaGrid::Auto { count, min_ratio } => {
            let ratio = min_ratio.unwrap_or(if n > p { 1e-4 } else { 1e-2 });
            if *count == 1 {
                return vec![lambda_max];
            }
            let step = ratio.ln() / (*count as f64 - 1.0);
            (0..*count).map(|k| lambda_max * (step * k as f64).exp()).collect()
        }
    }
}

fn lambda_max_from(grad: impl Fn(usize) -> f64, factors: &[f64], l1_share: f64) -> f64 {
    let lmax = factors
        .iter()
        .enumerate()
        .filter(|(_, f)| f.is_finite() && **f > 0.0)
        .map(|(j, f)| grad(j).abs() / (f * l1_share))
        .fold(0.0, f64::max);
    if lmax > 0.0 && lmax.is_finite() {
        lmax
    } else {
        1.0
    }
}

/// λ_max and the resolved grid for a problem, as `fit_path` would use them.
pub fn lambda_grid(
    x: &DMatrix<f64>,
    y: &[f64],
    family: Family,
    penalty: &PenaltySpec,
    cfg: &FitConfig,
) -> Result<Vec<f64>> {
    let design = Design::new(x);
    Ok(grid_for(&design, y, family, penalty, cfg))
}

pub(crate) fn grid_for(design: &Design, y: &[f64], family: Family, penalty: &PenaltySpec, cfg: &FitConfig) -> Vec<f64> {
    if let LambdaGrid::Explicit(_) = cfg.lambda_grid {
        return resolve_grid(&cfg.lambda_grid, 1.0, 0, 0);
    }
    let factors = design.effective_factors(&penalty.factors);
    let lmax = match family {
        Family::Linear => {
            let (mut st, _) = LinearState::new(&design.xs, y, penalty.kind, &factors);
            st.solve(f64::INFINITY, cfg);
            lambda_max_from(|j| st.grad[j], &factors, penalty.kind.l1_share())
        }
        Family::Logistic => {
            let mut st = LogisticState::new(&design.xs, y, penalty.kind, &factors);
            st.solve(f64::INFINITY, cfg);
            lambda_max_from(|j| st.gradient(j), &factors, penalty.kind.l1_share())
        }
    };
    resolve_grid(&cfg.lambda_grid, lmax, y.len(), design.xs.ncols())
}

/// Fits the whole regularization path, warm-starting from the largest λ.
///
/// Covariates are standardized internally and coefficients are returned on
/// the caller's scale. On an automatic grid the path stops early once the
/// fit explains more than 99.9% of the variance (deviance), or, after five
/// points, once the explained fraction stops growing (relative gain below
/// 1e-5 for least squares, absolute gain below 1e-5 for logistic).
pub fn fit_path(
    x: &DMatrix<f64>,
    y: &[f64],
    family: Family,
    penalty: &PenaltySpec,
    cfg: &FitConfig,
) -> Result<Vec<FittedModel>> {
    cfg.validate()?;
    penalty.validate(x.ncols())?;
    check_response(y, family, x.nrows())?;
    let design = Design::new(x);
    let lambdas = grid_for(&design, y, family, penalty, cfg);
    Ok(fit_path_prepared(&design, y, family, penalty, cfg, &lambdas))
}

pub(crate) fn fit_path_prepared(
    design: &Design,
    y: &[f64],
    family: Family,
    penalty: &PenaltySpec,
    cfg: &FitConfig,
    lambdas: &[f64],
) -> Vec<FittedModel> {
    let factors = design.effective_factors(&penalty.factors);
    let early_stop = matches!(cfg.lambda_grid, LambdaGrid::Auto { .. });
    let mut models = Vec::with_capacity(lambdas.len());
    match family {
        Family::Linear => {
            let (mut st, ybar) = LinearState::new(&design.xs, y, penalty.kind, &factors);
            let mut prev_rsq = 0.0;
            for &lam in lambdas {
                let out = st.solve(lam, cfg);
                let mut m = design.model(family, ybar, &st.beta, lam);
                m.converged = out.converged;
                m.sweeps = out.sweeps;
                m.objective_trace = out.trace;
                models.push(m);
                let rsq = st.rsq();
                if early_stop
                    && (rsq > SATURATION || (models.len() >= MIN_PATH_POINTS && rsq - prev_rsq < MIN_DEV_GAIN * rsq))
                {
                    break;
                }
                prev_rsq = rsq;
            }
        }
        Family::Logistic => {
            let mut st = LogisticState::new(&design.xs, y, penalty.kind, &factors);
            let mut prev_ratio = 0.0;
            for &lam in lambdas {
                let out = st.solve(lam, cfg);
                let mut m = design.model(family, st.b0, &st.beta, lam);
                m.converged = out.converged;
                m.sweeps = out.sweeps;
                m.objective_trace = out.trace;
                models.push(m);
                if !early_stop || st.null_deviance <= 0.0 {
                    continue;
                }
                let ratio = 1.0 - st.deviance() / st.null_deviance;
                if ratio > SATURATION {
                    break;
                }
                if models.len() >= MIN_PATH_POINTS && ratio - prev_ratio < MIN_DEV_GAIN {
                    break;
                }
                prev_ratio = ratio;
            }
        }
    }
    models
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penreg::{soft_threshold, LambdaGrid};
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
        let y = (0..n)
            .map(|i| {
                let e: f64 = StandardNormal.sample(&mut rng);
                let signal: f64 = [2.0, -1.5, 0.5].iter().take(p).enumerate().map(|(j, b)| b * x[(i, j)]).sum();
                1.0 + signal + e
            })
            .collect();
        (x, y)
    }

    // Normal-equations oracle with intercept column.
    fn ols_oracle(x: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
        let n = x.nrows();
        let a = DMatrix::from_fn(n, x.ncols() + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
        let ata = a.transpose() * &a;
        let aty = a.transpose() * DVector::from_column_slice(y);
        ata.lu().solve(&aty).unwrap().iter().copied().collect()
    }

    #[test]
    fn lambda_max_zeroes_every_coefficient() {
        let (x, y) = gaussian(60, 6, 1);
        let cfg = FitConfig::default();
        let path = fit_path(&x, &y, Family::Linear, &PenaltySpec::uniform(PenaltyKind::L1, 6), &cfg).unwrap();
        assert!(path[0].coef.iter().all(|&c| c == 0.0));
        assert!(!path[1].selected.is_empty());
        // the automatic grid may stop once the explained variance levels off
        assert!(path.len() >= 5 && path.len() <= 100);
        let full = lambda_grid(&x, &y, Family::Linear, &PenaltySpec::uniform(PenaltyKind::L1, 6), &cfg).unwrap();
        assert_eq!(full.len(), 100);
    }

    #[test]
    fn zero_lambda_is_ols() {
        let (x, y) = gaussian(50, 5, 2);
        let mut grid = lambda_grid(&x, &y, Family::Linear, &PenaltySpec::uniform(PenaltyKind::L1, 5), &FitConfig::default()).unwrap();
        grid.push(0.0);
        let cfg = FitConfig { lambda_grid: LambdaGrid::Explicit(grid), tol: 1e-24, ..FitConfig::default() };
        let path = fit_path(&x, &y, Family::Linear, &PenaltySpec::uniform(PenaltyKind::L1, 5), &cfg).unwrap();
        let last = path.last().unwrap();
        let oracle = ols_oracle(&x, &y);
        assert!((last.intercept - oracle[0]).abs() < 1e-6);
        for j in 0..5 {
            assert!((last.coef[j] - oracle[j + 1]).abs() < 1e-6);
        }
    }

    #[test]
    fn single_covariate_closed_form() {
        let (x0, y) = gaussian(40, 1, 3);
        let params = StandardizationParams::compute(&x0);
        let xs = params.apply(&x0);
        let n = 40.0;
        let xy = xs.column(0).iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n;
        let cfg = FitConfig { lambda_grid: LambdaGrid::Explicit(vec![0.9, 0.4, 0.05]), ..FitConfig::default() };
        let path = fit_path(&xs, &y, Family::Linear, &PenaltySpec::uniform(PenaltyKind::L1, 1), &cfg).unwrap();
        for m in &path {
            assert!((m.coef[0] - soft_threshold(xy, m.lambda_used)).abs() < 1e-9);
        }
    }

    #[test]
    fn infinite_factor_excluded_and_all_infinite_is_intercept_only() {
        let (x, y) = gaussian(50, 4, 4);
        let spec = PenaltySpec::with_factors(PenaltyKind::L1, vec![f64::INFINITY, 1.0, 1.0, 1.0]);
        let path = fit_path(&x, &y, Family::Linear, &spec, &FitConfig::default()).unwrap();
        assert!(path.iter().all(|m| m.coef[0] == 0.0));
        let spec = PenaltySpec::with_factors(PenaltyKind::L1, vec![f64::INFINITY; 4]);
        let path = fit_path(&x, &y, Family::Linear, &spec, &FitConfig::default()).unwrap();
        let ybar = y.iter().sum::<f64>() / 50.0;
        for m in path {
            assert!(m.selected.is_empty());
            assert!((m.intercept - ybar).abs() < 1e-12);
        }
    }

    #[test]
    fn unpenalized_logistic_matches_newton() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 300;
        let x = DMatrix::from_fn(n, 3, |_, _| StandardNormal.sample(&mut rng));
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let p = expit(0.3 + x[(i, 0)] - 0.5 * x[(i, 2)]);
                let u: f64 = rand::Rng::gen(&mut rng);
                (u < p) as u8 as f64
            })
            .collect();
        let cfg = FitConfig { lambda_grid: LambdaGrid::Explicit(vec![0.0]), tol: 1e-14, ..FitConfig::default() };
        let cd = &fit_path(&x, &y, Family::Logistic, &PenaltySpec::uniform(PenaltyKind::L1, 3), &cfg).unwrap()[0];
        let ml = crate::penreg::glm::logistic_ml(&x, &y).unwrap();
        assert!((cd.intercept - ml.intercept).abs() < 1e-5);
        for j in 0..3 {
            assert!((cd.coef[j] - ml.coef[j]).abs() < 1e-5);
        }
    }
}
