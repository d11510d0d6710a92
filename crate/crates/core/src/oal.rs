//! Outcome-adaptive lasso for the propensity-score model.
//!
//! Penalty weights come from an unpenalized regression of the outcome on
//! treatment and covariates, `w_j = |β̂_j|^{-γ}`, so covariates unrelated to
//! the outcome (instruments, noise) are penalized heavily. A weighted
//! logistic lasso of treatment on covariates is then solved at a set of
//! candidate λ values and one is chosen by covariate balance (wAMD) or by
//! cross-validated deviance.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{zscore_columns, Dataset};
use crate::error::{Error, Result};
use crate::penreg::{self, cross_validate, fit_path, Family, FitConfig, FittedModel, LambdaGrid, PenaltyKind, PenaltySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OalCriterion {
    Wamd,
    CvDeviance,
}

/// How the weight exponent γ is chosen for each candidate λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    /// The same `gamma` for every candidate.
    Fixed,
    /// `γ = 2(c − κ + 1)` for candidate `λ = n^κ`, which keeps
    /// `λ·n^{γ/2 − 1} = n^c`.
    Coupled { convergence_factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OalConfig {
    pub gamma: f64,
    pub gamma_rule: GammaRule,
    /// Candidate λ = n^κ on the summed log-likelihood scale.
    pub lambda_exponents: Vec<f64>,
    pub criterion: OalCriterion,
    pub zero_guard: f64,
}

impl Default for OalConfig {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            gamma_rule: GammaRule::Fixed,
            lambda_exponents: vec![-10.0, -5.0, -2.0, -1.0, -0.75, -0.5, -0.25, 0.25, 0.49],
            criterion: OalCriterion::Wamd,
            zero_guard: 1e-12,
        }
    }
}

impl OalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) {
            return Err(Error::InvalidParameter(format!("OAL gamma must exceed 1, got {}", self.gamma)));
        }
        if self.lambda_exponents.is_empty() || self.lambda_exponents.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidParameter("OAL lambda exponents must be non-empty and finite".into()));
        }
        if let GammaRule::Coupled { convergence_factor } = self.gamma_rule {
            if let Some(k) = self.lambda_exponents.iter().find(|k| !(convergence_factor - **k + 1.0 > 0.5)) {
                return Err(Error::InvalidParameter(format!("coupled gamma is not above 1 for exponent {k}")));
            }
        }
        if !(self.zero_guard >= 0.0) {
            return Err(Error::InvalidParameter("OAL zero guard must be >= 0".into()));
        }
        Ok(())
    }

    /// Weight exponent for candidate exponent κ.
    pub fn gamma_for(&self, kappa: f64) -> f64 {
        match self.gamma_rule {
            GammaRule::Fixed => self.gamma,
            GammaRule::Coupled { convergence_factor } => 2.0 * (convergence_factor - kappa + 1.0),
        }
    }
}

/// Penalty factors `|β_j|^{-γ}`, infinite below the zero guard.
pub fn oal_weights(outcome_coef: &[f64], gamma: f64, zero_guard: f64) -> Vec<f64> {
    outcome_coef
        .iter()
        .map(|b| if b.abs() < zero_guard || *b == 0.0 { f64::INFINITY } else { b.abs().powf(-gamma) })
        .collect()
}

#[derive(Debug, Clone)]
pub struct OalFit {
    /// Covariate slopes of the weight-generating outcome regression (z-score scale).
    pub outcome_coef: Vec<f64>,
    pub weights: Vec<f64>,
    /// Selected λ on the solver's per-observation scale (`n^κ / n` for wAMD).
    pub chosen_lambda: f64,
    /// Selected exponent κ (wAMD criterion only).
    pub chosen_exponent: Option<f64>,
    /// Criterion value per candidate, in the order of `lambda_exponents`
    /// (+∞ marks a candidate whose fit saturated or hit propensity 0/1).
    pub criterion_values: Vec<f64>,
    pub ps_model: FittedModel,
    /// The weight stage used a lasso-CV outcome fit because p ≥ n.
    pub fallback_used: bool,
}

impl OalFit {
    pub fn propensity(&self, x: &DMatrix<f64>) -> Vec<f64> {
        self.ps_model.predict(x)
    }
}

/// Weighted absolute mean difference: `Σ_j |β_j| · |x̄_j^{treated} − x̄_j^{control}|`
/// with inverse-propensity weights normalized within each arm.
pub fn wamd(d: &Dataset, ps: &[f64], outcome_coef: &[f64]) -> Result<f64> {
    let n = d.n();
    if ps.len() != n || outcome_coef.len() != d.p() {
        return Err(Error::Dimension("wamd input lengths differ from the dataset".into()));
    }
    if let Some((row, &value)) = ps.iter().enumerate().find(|(_, e)| !(**e > 0.0 && **e < 1.0)) {
        return Err(Error::PropensityOutOfRange { row, value });
    }
    let w1: Vec<f64> = (0..n).map(|i| d.z[i] / ps[i]).collect();
    let w0: Vec<f64> = (0..n).map(|i| (1.0 - d.z[i]) / (1.0 - ps[i])).collect();
    let s1: f64 = w1.iter().sum();
    let s0: f64 = w0.iter().sum();
    if s1 == 0.0 || s0 == 0.0 {
        return Err(Error::OneArm);
    }
    let mut total = 0.0;
    for (j, b) in outcome_coef.iter().enumerate() {
        if *b == 0.0 {
            continue;
        }
        let col = d.x.column(j);
        let m1 = col.iter().zip(&w1).map(|(x, w)| x * w).sum::<f64>() / s1;
        let m0 = col.iter().zip(&w0).map(|(x, w)| x * w).sum::<f64>() / s0;
        total += b.abs() * (m1 - m0).abs();
    }
    Ok(total)
}

/// Pooled outcome regression of y on (z, covariates); returns the covariate
/// slopes and whether the lasso fallback was used.
fn outcome_slopes(xs: &DMatrix<f64>, usable: &[bool], d: &Dataset, fit_cfg: &FitConfig) -> Result<(Vec<f64>, bool)> {
    let cols: Vec<usize> = (0..d.p()).filter(|&j| usable[j]).collect();
    let n = d.n();
    let design = DMatrix::from_fn(n, cols.len() + 1, |i, j| if j == 0 { d.z[i] } else { xs[(i, cols[j - 1])] });
    let mut out = vec![0.0; d.p()];
    let fallback = cols.len() + 1 >= n;
    let slopes = if fallback {
        let mut factors = vec![1.0; cols.len() + 1];
        factors[0] = 0.0;
        let spec = PenaltySpec::with_factors(PenaltyKind::L1, factors);
        cross_validate(&design, &d.y, Family::Linear, &spec, fit_cfg)?.model.std_coef
    } else {
        penreg::glm::ols(&design, &d.y)?.1
    };
    for (k, &j) in cols.iter().enumerate() {
        out[j] = slopes[k + 1];
    }
    Ok((out, fallback))
}

pub fn fit_oal(d: &Dataset, cfg: &OalConfig, fit_cfg: &FitConfig) -> Result<OalFit> {
    cfg.validate()?;
    d.check_both_arms()?;
    let n = d.n();
    let (xs, usable) = zscore_columns(&d.x);
    let (outcome_coef, fallback_used) = outcome_slopes(&xs, &usable, d, fit_cfg)?;
    let weights = oal_weights(&outcome_coef, cfg.gamma, cfg.zero_guard);

    match cfg.criterion {
        OalCriterion::CvDeviance => {
            let spec = PenaltySpec::with_factors(PenaltyKind::L1, weights.clone());
            let cv = cross_validate(&d.x, &d.z, Family::Logistic, &spec, fit_cfg)?;
            Ok(OalFit {
                outcome_coef,
                weights,
                chosen_lambda: cv.model.lambda_used,
                chosen_exponent: None,
                criterion_values: cv.cvm.clone(),
                ps_model: cv.model,
                fallback_used,
            })
        }
        OalCriterion::Wamd => {
            let nf = n as f64;
            let lambdas: Vec<f64> = cfg.lambda_exponents.iter().map(|k| nf.powf(*k) / nf).collect();
            let mut order: Vec<usize> = (0..lambdas.len()).collect();
            order.sort_by(|&a, &b| lambdas[b].partial_cmp(&lambdas[a]).unwrap());
            // candidate models in descending λ order
            let models: Vec<(FittedModel, Vec<f64>)> = match cfg.gamma_rule {
                GammaRule::Fixed => {
                    let spec = PenaltySpec::with_factors(PenaltyKind::L1, weights.clone());
                    let sorted: Vec<f64> = order.iter().map(|&i| lambdas[i]).collect();
                    let grid = fit_cfg.with_grid(LambdaGrid::Explicit(sorted));
                    fit_path(&d.x, &d.z, Family::Logistic, &spec, &grid)?
                        .into_iter()
                        .map(|m| (m, weights.clone()))
                        .collect()
                }
                GammaRule::Coupled { .. } => order
                    .iter()
                    .map(|&i| {
                        let w = oal_weights(&outcome_coef, cfg.gamma_for(cfg.lambda_exponents[i]), cfg.zero_guard);
                        let spec = PenaltySpec::with_factors(PenaltyKind::L1, w.clone());
                        let grid = fit_cfg.with_grid(LambdaGrid::Explicit(vec![lambdas[i]]));
                        let m = fit_path(&d.x, &d.z, Family::Logistic, &spec, &grid)?.remove(0);
                        Ok((m, w))
                    })
                    .collect::<Result<_>>()?,
            };
            let balance_data = d.with_x(xs);
            let mut values = vec![f64::INFINITY; lambdas.len()];
            let mut best: Option<(usize, f64)> = None;
            for (pos, (model, _)) in models.iter().enumerate() {
                let ps = model.predict(&d.x);
                let v = wamd(&balance_data, &ps, &outcome_coef).unwrap_or(f64::INFINITY);
                values[order[pos]] = v;
                // descending λ order: strict improvement keeps ties at the larger λ
                if v.is_finite() && best.is_none_or(|(_, b)| v < b) {
                    best = Some((pos, v));
                }
            }
            let (pos, _) = best.ok_or_else(|| {
                Error::InsufficientData("no OAL candidate produced propensities inside (0,1)".into())
            })?;
            let idx = order[pos];
            let (ps_model, weights) = models.into_iter().nth(pos).unwrap();
            Ok(OalFit {
                outcome_coef,
                weights,
                chosen_lambda: lambdas[idx],
                chosen_exponent: Some(cfg.lambda_exponents[idx]),
                criterion_values: values,
                ps_model,
                fallback_used,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        let x = DMatrix::from_column_slice(4, 2, &[1.0, 2.0, 0.0, 3.0, 0.5, -1.0, 1.0, 2.0]);
        Dataset::unnamed(x, vec![1.0, 1.0, 0.0, 0.0], vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn wamd_hand_computation() {
        let d = toy();
        let ps = [0.8, 0.4, 0.5, 0.25];
        let coef = [2.0, -0.5];
        // treated weights 1/0.8, 1/0.4 = 1.25, 2.5 -> normalized 1/3, 2/3
        // control weights 1/0.5, 1/0.75 = 2, 4/3 -> normalized 0.6, 0.4
        let m1: [f64; 2] = [1.0 / 3.0 * 1.0 + 2.0 / 3.0 * 2.0, 1.0 / 3.0 * 0.5 + -(2.0 / 3.0)];
        let m0: [f64; 2] = [0.6 * 0.0 + 0.4 * 3.0, 0.6 * 1.0 + 0.4 * 2.0];
        let expected = 2.0 * (m1[0] - m0[0]).abs() + 0.5 * (m1[1] - m0[1]).abs();
        assert!((wamd(&d, &ps, &coef).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn wamd_zero_cases() {
        let d = toy();
        assert_eq!(wamd(&d, &[0.3, 0.6, 0.2, 0.9], &[0.0, 0.0]).unwrap(), 0.0);
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 1.0, 2.0]);
        let balanced = Dataset::unnamed(x, vec![1.0, 1.0, 0.0, 0.0], vec![0.0; 4]).unwrap();
        assert!(wamd(&balanced, &[0.5; 4], &[3.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn wamd_rejects_boundary_propensity() {
        assert!(matches!(
            wamd(&toy(), &[1.0, 0.5, 0.5, 0.5], &[1.0, 1.0]),
            Err(Error::PropensityOutOfRange { row: 0, .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(OalConfig { gamma: 1.0, ..OalConfig::default() }.validate().is_err());
        assert!(OalConfig { lambda_exponents: vec![], ..OalConfig::default() }.validate().is_err());
        assert!(OalConfig::default().validate().is_ok());
    }
}
