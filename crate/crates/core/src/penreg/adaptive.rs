use nalgebra::DMatrix;

use super::cv::{cross_validate, CvFit};
use super::glm;
use super::solver::Design;
use super::{Family, FitConfig, FittedModel, LambdaRule, PenaltyKind, PenaltySpec};
use crate::data::select_columns;
use crate::error::{Error, Result};

pub const AEN_MIX_GRID: [f64; 4] = [0.2, 0.4, 0.6, 0.8];
pub const LSP_DELTA: f64 = 1e-4;
pub const LSP_MAX_ITER: usize = 4;
const ZERO_GUARD: f64 = 1e-12;

pub fn fit_lasso(x: &DMatrix<f64>, y: &[f64], family: Family, cfg: &FitConfig) -> Result<FittedModel> {
    Ok(cross_validate(x, y, family, &PenaltySpec::uniform(PenaltyKind::L1, x.ncols()), cfg)?.model)
}

pub fn fit_scad(x: &DMatrix<f64>, y: &[f64], family: Family, cfg: &FitConfig, a: f64) -> Result<FittedModel> {
    Ok(cross_validate(x, y, family, &PenaltySpec::uniform(PenaltyKind::Scad { a }, x.ncols()), cfg)?.model)
}

pub fn fit_mcp(x: &DMatrix<f64>, y: &[f64], family: Family, cfg: &FitConfig, gamma: f64) -> Result<FittedModel> {
    Ok(cross_validate(x, y, family, &PenaltySpec::uniform(PenaltyKind::Mcp { gamma }, x.ncols()), cfg)?.model)
}

/// `|b|^{-1}`, with coefficients below the zero guard excluded (`+∞`).
fn inverse_abs(coefs: &[f64]) -> Vec<f64> {
    coefs.iter().map(|b| if b.abs() < ZERO_GUARD { f64::INFINITY } else { 1.0 / b.abs() }).collect()
}

/// Unpenalized slopes on the z-score scale, used as adaptive weights.
fn initial_std_coef(x: &DMatrix<f64>, y: &[f64], family: Family) -> Result<Vec<f64>> {
    let (n, p) = x.shape();
    if p >= n {
        return Err(Error::AdaptiveWeights { n, p });
    }
    let design = Design::new(x);
    let cols: Vec<usize> = (0..p).filter(|&j| design.usable[j]).collect();
    let xs = select_columns(&design.xs, &cols);
    let fitted = match family {
        Family::Linear => glm::ols(&xs, y)?.1,
        Family::Logistic => glm::logistic_ml(&xs, y)?.coef,
    };
    let mut out = vec![0.0; p];
    for (c, b) in cols.into_iter().zip(fitted) {
        out[c] = b;
    }
    Ok(out)
}

/// Adaptive lasso: weights `|β̂_init|^{-1}` from an unpenalized fit (least
/// squares, or logistic maximum likelihood), then l1 cross-validation.
pub fn fit_adaptive_lasso(x: &DMatrix<f64>, y: &[f64], family: Family, cfg: &FitConfig) -> Result<FittedModel> {
    let init = initial_std_coef(x, y, family)?;
    let spec = PenaltySpec::with_factors(PenaltyKind::L1, inverse_abs(&init));
    Ok(cross_validate(x, y, family, &spec, cfg)?.model)
}

pub fn fit_elastic_net(
    x: &DMatrix<f64>,
    y: &[f64],
    family: Family,
    cfg: &FitConfig,
    mix: f64,
) -> Result<FittedModel> {
    let kind = PenaltyKind::ElasticNet { mix };
    kind.validate()?;
    Ok(cross_validate(x, y, family, &PenaltySpec::uniform(kind, x.ncols()), cfg)?.model)
}

fn best_over_mix(
    x: &DMatrix<f64>,
    y: &[f64],
    family: Family,
    cfg: &FitConfig,
    mix_grid: &[f64],
    factors: &[f64],
) -> Result<CvFit> {
    let mut best: Option<CvFit> = None;
    for &mix in mix_grid {
        let kind = PenaltyKind::ElasticNet { mix };
        kind.validate()?;
        let cv = cross_validate(x, y, family, &PenaltySpec::with_factors(kind, factors.to_vec()), cfg)?;
        let better = best.as_ref().is_none_or(|b| cv.cvm[cv.index_min] < b.cvm[b.index_min]);
        if better {
            best = Some(cv);
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("empty elastic-net mix grid".into()))
}

fn null_model(y: &[f64], family: Family, p: usize) -> FittedModel {
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let b0 = match family {
        Family::Linear => ybar,
        Family::Logistic => (ybar / (1.0 - ybar)).ln(),
    };
    FittedModel::intercept_only(family, b0, p)
}

/// Two-stage adaptive elastic net. Each stage searches the mix grid and keeps
/// the (mix, λ) pair with the smallest CV loss; stage two penalizes with
/// `|β̂_stage1|^{-1}`.
pub fn fit_adaptive_elastic_net(
    x: &DMatrix<f64>,
    y: &[f64],
    family: Family,
    cfg: &FitConfig,
    mix_grid: &[f64],
) -> Result<FittedModel> {
    let cfg = cfg.with_rule(LambdaRule::Min);
    let p = x.ncols();
    let stage1 = best_over_mix(x, y, family, &cfg, mix_grid, &vec![1.0; p])?;
    if stage1.model.selected.is_empty() {
        let mut m = null_model(y, family, p);
        m.warnings.push("adaptive elastic net: stage 1 selected nothing; intercept-only model".into());
        return Ok(m);
    }
    let factors = inverse_abs(&stage1.model.std_coef);
    Ok(best_over_mix(x, y, family, &cfg, mix_grid, &factors)?.model)
}

/// Reweighting rule of the log-sum penalty: `1 / (|β̂| + δ)`.
pub fn lsp_next_factors(std_coef: &[f64], delta: f64) -> Vec<f64> {
    std_coef.iter().map(|b| 1.0 / (b.abs() + delta)).collect()
}

/// Log-sum penalty by iteratively reweighted l1: `l_max` weighted-lasso CV
/// fits starting from unit weights. `l_max = 0` is a plain lasso CV fit.
pub fn fit_lsp(
    x: &DMatrix<f64>,
    y: &[f64],
    family: Family,
    cfg: &FitConfig,
    delta: f64,
    l_max: usize,
) -> Result<FittedModel> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("LSP delta must be > 0, got {delta}")));
    }
    let mut factors = vec![1.0; x.ncols()];
    let mut fit = cross_validate(x, y, family, &PenaltySpec::with_factors(PenaltyKind::L1, factors.clone()), cfg)?;
    for _ in 1..l_max {
        factors = lsp_next_factors(&fit.model.std_coef, delta);
        fit = cross_validate(x, y, family, &PenaltySpec::with_factors(PenaltyKind::L1, factors.clone()), cfg)?;
    }
    Ok(fit.model)
}
