//! Pathwise coordinate-descent solvers for penalized linear and logistic
//! regression, K-fold cross-validation, and the two-stage/iterative
//! wrappers built on top of them (adaptive lasso, elastic net, adaptive
//! elastic net, reweighted-l1 log-sum penalty).

mod adaptive;
mod cv;
pub mod glm;
mod solver;
pub mod threshold;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adaptive::{
    fit_adaptive_elastic_net, fit_adaptive_lasso, fit_elastic_net, fit_lasso, fit_lsp, fit_mcp, fit_scad,
    lsp_next_factors, AEN_MIX_GRID, LSP_DELTA, LSP_MAX_ITER,
};
pub use cv::{cross_validate, fold_assignment, CvFit};
pub use solver::{fit_path, lambda_grid};
pub use threshold::{mcp_univariate, scad_univariate, soft_threshold, MCP_GAMMA, SCAD_A};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Linear,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    None,
    L1,
    ElasticNet { mix: f64 },
    Scad { a: f64 },
    Mcp { gamma: f64 },
}

impl PenaltyKind {
    pub fn validate(self) -> Result<()> {
        match self {
            PenaltyKind::ElasticNet { mix } if !(mix > 0.0 && mix < 1.0) => {
                Err(Error::InvalidParameter(format!("elastic-net mix must lie in (0,1), got {mix}")))
            }
            PenaltyKind::Scad { a } if !(a > 2.0) => {
                Err(Error::InvalidParameter(format!("SCAD a must exceed 2, got {a}")))
            }
            PenaltyKind::Mcp { gamma } if !(gamma > 1.0) => {
                Err(Error::InvalidParameter(format!("MCP gamma must exceed 1, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    /// Share of the penalty carried by the l1 part (drives λ_max).
    pub(crate) fn l1_share(self) -> f64 {
        match self {
            PenaltyKind::ElasticNet { mix } => mix,
            _ => 1.0,
        }
    }
}

/// Penalty family plus per-coefficient multipliers. A factor of `+∞`
/// excludes the coefficient; `0` leaves it unpenalized.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub factors: Vec<f64>,
}

impl PenaltySpec {
    pub fn uniform(kind: PenaltyKind, p: usize) -> Self {
        Self { kind, factors: vec![1.0; p] }
    }

    pub fn with_factors(kind: PenaltyKind, factors: Vec<f64>) -> Self {
        Self { kind, factors }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        self.kind.validate()?;
        if self.factors.len() != p {
            return Err(Error::Dimension(format!("{} penalty factors for {p} covariates", self.factors.len())));
        }
        if self.factors.iter().any(|f| f.is_nan() || *f < 0.0) {
            return Err(Error::InvalidParameter("penalty factors must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaGrid {
    /// Log-spaced from λ_max; `min_ratio = None` picks 1e-4 when n > p, 1e-2 otherwise.
    Auto { count: usize, min_ratio: Option<f64> },
    /// Explicit values, used in descending order.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    Min,
    OneSe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub lambda_grid: LambdaGrid,
    /// Convergence threshold on the largest curvature-weighted squared
    /// coefficient change, relative to the null deviance per observation.
    pub tol: f64,
    pub max_sweeps: usize,
    pub cv_folds: usize,
    pub cv_seed: u64,
    pub lambda_rule: LambdaRule,
    /// Logistic outer-loop cap (quadratic approximations per λ).
    pub max_outer: usize,
    /// Record the objective after every sweep (diagnostics only).
    #[serde(default)]
    pub record_objective: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda_grid: LambdaGrid::Auto { count: 100, min_ratio: None },
            tol: 1e-7,
            max_sweeps: 100_000,
            cv_folds: 10,
            cv_seed: 1,
            lambda_rule: LambdaRule::OneSe,
            max_outer: 100,
            record_objective: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        match &self.lambda_grid {
            LambdaGrid::Auto { count, min_ratio } => {
                if *count < 1 {
                    return Err(Error::InvalidParameter("lambda count must be >= 1".into()));
                }
                if let Some(r) = min_ratio {
                    if !(*r > 0.0 && *r < 1.0) {
                        return Err(Error::InvalidParameter(format!("min_ratio must lie in (0,1), got {r}")));
                    }
                }
            }
            LambdaGrid::Explicit(v) => {
                if v.is_empty() || v.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
                    return Err(Error::InvalidParameter("explicit lambdas must be finite and >= 0".into()));
                }
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be > 0".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::InvalidParameter("cv_folds must be >= 2".into()));
        }
        Ok(())
    }

    pub fn with_rule(&self, rule: LambdaRule) -> Self {
        Self { lambda_rule: rule, ..self.clone() }
    }

    pub fn with_grid(&self, grid: LambdaGrid) -> Self {
        Self { lambda_grid: grid, ..self.clone() }
    }
}

/// One fitted model. Coefficients are on the caller's covariate scale;
/// `std_coef` holds the same slopes on the solver's internal z-score scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub family: Family,
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub std_coef: Vec<f64>,
    pub selected: Vec<usize>,
    pub lambda_used: f64,
    pub converged: bool,
    pub sweeps: usize,
    pub objective_trace: Vec<f64>,
    pub warnings: Vec<String>,
}

impl FittedModel {
    pub(crate) fn from_parts(
        family: Family,
        intercept: f64,
        coef: Vec<f64>,
        std_coef: Vec<f64>,
        lambda_used: f64,
    ) -> Self {
        let selected = coef.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(j, _)| j).collect();
        Self {
            family,
            intercept,
            coef,
            std_coef,
            selected,
            lambda_used,
            converged: true,
            sweeps: 0,
            objective_trace: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// Intercept-only model (all slopes zero).
    pub fn intercept_only(family: Family, intercept: f64, p: usize) -> Self {
        Self::from_parts(family, intercept, vec![0.0; p], vec![0.0; p], f64::INFINITY)
    }

    pub fn linear_predictor(&self, x: &DMatrix<f64>) -> Vec<f64> {
        assert_eq!(x.ncols(), self.coef.len(), "covariate count mismatch");
        let mut eta = vec![self.intercept; x.nrows()];
        for &j in &self.selected {
            let b = self.coef[j];
            for (e, v) in eta.iter_mut().zip(x.column(j).iter()) {
                *e += b * v;
            }
        }
        eta
    }

    /// Fitted mean: the linear predictor for `Linear`, unclipped probabilities for `Logistic`.
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let eta = self.linear_predictor(x);
        match self.family {
            Family::Linear => eta,
            Family::Logistic => eta.into_iter().map(expit).collect(),
        }
    }
}

#[inline]
pub fn expit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn check_response(y: &[f64], family: Family, n: usize) -> Result<()> {
    if y.len() != n {
        return Err(Error::Dimension(format!("response has {} rows, x has {n}", y.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite response".into()));
    }
    if family == Family::Logistic && y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidParameter("logistic response must be 0/1".into()));
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 rows, got {n}")));
    }
    Ok(())
}
