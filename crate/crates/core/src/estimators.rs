//! Average-treatment-effect estimators: difference in means, Hájek IPW,
//! g-computation, AIPW with penalized propensity/outcome models, the
//! known-set AIPW used in simulations, and the Farrell select-then-refit AIPW.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{select_columns, zscore_columns, Dataset};
use crate::error::{Error, Result};
use crate::oal::{fit_oal, GammaRule, OalConfig};
use crate::penreg::{
    self, glm, Family, FitConfig, FittedModel, LambdaRule, AEN_MIX_GRID, LSP_DELTA, LSP_MAX_ITER, MCP_GAMMA, SCAD_A,
};

/// Magnitude beyond which an estimate is reported as extreme.
pub const EXTREME_THRESHOLD: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EstimatorId {
    Naive,
    IpwOal,
    GcompAdl,
    AipwTarg,
    AipwLasLas,
    AipwOalLas,
    AipwOalEn,
    AipwOalAdl,
    AipwOalAen,
    AipwOalScad,
    AipwOalLsp,
    AipwOalMcp,
    AipwFarrell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PsMethod {
    Oal,
    Lasso,
    Known,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeMethod {
    Lasso,
    ElasticNet,
    AdaptiveLasso,
    AdaptiveElasticNet,
    Scad,
    Lsp,
    Mcp,
    Known,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AteForm {
    DifferenceInMeans,
    Ipw,
    GComputation,
    Aipw,
    FarrellAipw,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 13] = [
        EstimatorId::Naive,
        EstimatorId::IpwOal,
        EstimatorId::GcompAdl,
        EstimatorId::AipwTarg,
        EstimatorId::AipwLasLas,
        EstimatorId::AipwOalLas,
        EstimatorId::AipwOalEn,
        EstimatorId::AipwOalAdl,
        EstimatorId::AipwOalAen,
        EstimatorId::AipwOalScad,
        EstimatorId::AipwOalLsp,
        EstimatorId::AipwOalMcp,
        EstimatorId::AipwFarrell,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorId::Naive => "naive",
            EstimatorId::IpwOal => "IPW-OAL",
            EstimatorId::GcompAdl => "gComp-AdL",
            EstimatorId::AipwTarg => "AIPW-Targ",
            EstimatorId::AipwLasLas => "AIPW-Las-Las",
            EstimatorId::AipwOalLas => "AIPW-OAL-Las",
            EstimatorId::AipwOalEn => "AIPW-OAL-EN",
            EstimatorId::AipwOalAdl => "AIPW-OAL-AdL",
            EstimatorId::AipwOalAen => "AIPW-OAL-AEN",
            EstimatorId::AipwOalScad => "AIPW-OAL-SCAD",
            EstimatorId::AipwOalLsp => "AIPW-OAL-LSP",
            EstimatorId::AipwOalMcp => "AIPW-OAL-MCP",
            EstimatorId::AipwFarrell => "AIPW-Farrell",
        }
    }

    pub fn form(self) -> AteForm {
        match self {
            EstimatorId::Naive => AteForm::DifferenceInMeans,
            EstimatorId::IpwOal => AteForm::Ipw,
            EstimatorId::GcompAdl => AteForm::GComputation,
            EstimatorId::AipwFarrell => AteForm::FarrellAipw,
            _ => AteForm::Aipw,
        }
    }

    pub fn ps_method(self) -> Option<PsMethod> {
        use EstimatorId::*;
        match self {
            Naive | GcompAdl | AipwFarrell => None,
            AipwTarg => Some(PsMethod::Known),
            AipwLasLas => Some(PsMethod::Lasso),
            IpwOal | AipwOalLas | AipwOalEn | AipwOalAdl | AipwOalAen | AipwOalScad | AipwOalLsp | AipwOalMcp => {
                Some(PsMethod::Oal)
            }
        }
    }

    pub fn outcome_method(self) -> Option<OutcomeMethod> {
        use EstimatorId::*;
        match self {
            Naive | IpwOal | AipwFarrell => None,
            GcompAdl | AipwOalAdl => Some(OutcomeMethod::AdaptiveLasso),
            AipwTarg => Some(OutcomeMethod::Known),
            AipwLasLas | AipwOalLas => Some(OutcomeMethod::Lasso),
            AipwOalEn => Some(OutcomeMethod::ElasticNet),
            AipwOalAen => Some(OutcomeMethod::AdaptiveElasticNet),
            AipwOalScad => Some(OutcomeMethod::Scad),
            AipwOalLsp => Some(OutcomeMethod::Lsp),
            AipwOalMcp => Some(OutcomeMethod::Mcp),
        }
    }

    /// Whether the estimator needs the true covariate roles (simulation only).
    pub fn needs_known_sets(self) -> bool {
        self == EstimatorId::AipwTarg
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_end_matches('*');
        EstimatorId::ALL
            .iter()
            .copied()
            .find(|id| id.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::UnknownEstimator(s.to_string()))
    }
}

impl TryFrom<String> for EstimatorId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EstimatorId> for String {
    fn from(id: EstimatorId) -> String {
        id.name().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub id: EstimatorId,
    /// Optional propensity clipping to `[ε, 1 − ε]`.
    #[serde(default)]
    pub ps_clip: Option<f64>,
    /// Zero-based covariate indices of confounders ∪ outcome predictors.
    #[serde(default)]
    pub known_sets: Option<Vec<usize>>,
    /// Farrell only: refit every model on the union of all selected sets.
    #[serde(default)]
    pub farrell_pooled: bool,
}

impl EstimatorSpec {
    pub fn new(id: EstimatorId) -> Self {
        Self { id, ps_clip: None, known_sets: None, farrell_pooled: false }
    }

    pub fn with_known_sets(id: EstimatorId, sets: Vec<usize>) -> Self {
        Self { known_sets: Some(sets), ..Self::new(id) }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if let Some(eps) = self.ps_clip {
            if !(eps > 0.0 && eps < 0.5) {
                return Err(Error::InvalidParameter(format!("ps_clip must lie in (0, 0.5), got {eps}")));
            }
        }
        if self.id.needs_known_sets() {
            match &self.known_sets {
                None => return Err(Error::MissingKnownSets),
                Some(s) if s.iter().any(|&j| j >= p) => {
                    return Err(Error::InvalidParameter(format!("known set index out of range for p = {p}")))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Tuning shared by every estimator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub fit: FitConfig,
    pub oal: OalConfig,
    pub en_mix: f64,
    pub aen_mix_grid: Vec<f64>,
    pub scad_a: f64,
    pub mcp_gamma: f64,
    /// λ rule for the SCAD/MCP cross-validation.
    pub nonconvex_rule: LambdaRule,
    pub lsp_delta: f64,
    pub lsp_max_iter: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            fit: FitConfig { lambda_rule: LambdaRule::Min, ..FitConfig::default() },
            oal: OalConfig { gamma_rule: GammaRule::Coupled { convergence_factor: 2.0 }, ..OalConfig::default() },
            en_mix: 0.5,
            aen_mix_grid: AEN_MIX_GRID.to_vec(),
            scad_a: SCAD_A,
            mcp_gamma: MCP_GAMMA,
            nonconvex_rule: LambdaRule::Min,
            lsp_delta: LSP_DELTA,
            lsp_max_iter: LSP_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub ps_selected: Option<Vec<usize>>,
    pub m1_selected: Option<Vec<usize>>,
    pub m0_selected: Option<Vec<usize>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AteEstimate {
    pub theta_hat: f64,
    pub ps: Option<Vec<f64>>,
    pub m1: Option<Vec<f64>>,
    pub m0: Option<Vec<f64>>,
    /// Set when `theta_hat` is non-finite or exceeds 1e8 in magnitude.
    pub extreme: bool,
    pub diagnostics: Diagnostics,
}

impl AteEstimate {
    fn new(theta_hat: f64) -> Self {
        Self {
            theta_hat,
            ps: None,
            m1: None,
            m0: None,
            extreme: is_extreme(theta_hat),
            diagnostics: Diagnostics::default(),
        }
    }
}

pub fn is_extreme(theta: f64) -> bool {
    !theta.is_finite() || theta.abs() > EXTREME_THRESHOLD
}

fn check_len(d: &Dataset, v: &[f64], what: &str) -> Result<()> {
    if v.len() != d.n() {
        return Err(Error::Dimension(format!("{what} has {} entries for {} rows", v.len(), d.n())));
    }
    Ok(())
}

fn check_ps(ps: &[f64]) -> Result<()> {
    match ps.iter().enumerate().find(|(_, e)| !(**e > 0.0 && **e < 1.0)) {
        Some((row, &value)) => Err(Error::PropensityOutOfRange { row, value }),
        None => Ok(()),
    }
}

pub fn estimate_naive(d: &Dataset) -> Result<AteEstimate> {
    d.check_both_arms()?;
    let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0.0, 0.0, 0.0);
    for (z, y) in d.z.iter().zip(&d.y) {
        if *z == 1.0 {
            s1 += y;
            n1 += 1.0;
        } else {
            s0 += y;
            n0 += 1.0;
        }
    }
    Ok(AteEstimate::new(s1 / n1 - s0 / n0))
}

/// Hájek-form IPW: inverse-propensity weights normalized within each arm.
pub fn estimate_ipw(d: &Dataset, ps: &[f64]) -> Result<AteEstimate> {
    check_len(d, ps, "propensity")?;
    check_ps(ps)?;
    d.check_both_arms()?;
    let (mut num1, mut den1, mut num0, mut den0) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..d.n() {
        let (z, y, e) = (d.z[i], d.y[i], ps[i]);
        num1 += z * y / e;
        den1 += z / e;
        num0 += (1.0 - z) * y / (1.0 - e);
        den0 += (1.0 - z) / (1.0 - e);
    }
    let mut est = AteEstimate::new(num1 / den1 - num0 / den0);
    est.ps = Some(ps.to_vec());
    Ok(est)
}

fn aipw_value(d: &Dataset, ps: &[f64], m1: &[f64], m0: &[f64]) -> f64 {
    let n = d.n() as f64;
    let (mut t1, mut t0) = (0.0, 0.0);
    for i in 0..d.n() {
        let (z, y, e) = (d.z[i], d.y[i], ps[i]);
        // zero-weight terms are skipped so a boundary propensity in the
        // other arm does not produce 0 * inf
        if z == 1.0 {
            t1 += y / e;
        }
        if z != e {
            t1 -= (z - e) / e * m1[i];
            t0 += (z - e) / (1.0 - e) * m0[i];
        }
        if z == 0.0 {
            t0 += y / (1.0 - e);
        }
    }
    t1 / n - t0 / n
}

/// Augmented IPW in the form
/// `(1/n) Σ [z y/e − (z − e)/e · m1] − (1/n) Σ [(1 − z) y/(1 − e) + (z − e)/(1 − e) · m0]`.
pub fn estimate_aipw(d: &Dataset, ps: &[f64], m1: &[f64], m0: &[f64]) -> Result<AteEstimate> {
    check_len(d, ps, "propensity")?;
    check_len(d, m1, "m1")?;
    check_len(d, m0, "m0")?;
    check_ps(ps)?;
    let mut est = AteEstimate::new(aipw_value(d, ps, m1, m0));
    est.ps = Some(ps.to_vec());
    est.m1 = Some(m1.to_vec());
    est.m0 = Some(m0.to_vec());
    Ok(est)
}

/// g-computation: separate outcome models per arm, averaged predictions over all rows.
pub fn estimate_gcomp<F>(d: &Dataset, fit_outcome: F) -> Result<AteEstimate>
where
    F: Fn(&DMatrix<f64>, &[f64]) -> Result<FittedModel>,
{
    let (m1, m1_model) = arm_predictions(d, true, &fit_outcome)?;
    let (m0, m0_model) = arm_predictions(d, false, &fit_outcome)?;
    let n = d.n() as f64;
    let theta = m1.iter().sum::<f64>() / n - m0.iter().sum::<f64>() / n;
    let mut est = AteEstimate::new(theta);
    est.diagnostics.m1_selected = Some(m1_model.selected);
    est.diagnostics.m0_selected = Some(m0_model.selected);
    est.m1 = Some(m1);
    est.m0 = Some(m0);
    Ok(est)
}

fn arm_predictions<F>(d: &Dataset, arm: bool, fit_outcome: &F) -> Result<(Vec<f64>, FittedModel)>
where
    F: Fn(&DMatrix<f64>, &[f64]) -> Result<FittedModel>,
{
    let rows = d.arm_rows(arm);
    if rows.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} arm has {} rows; at least 2 needed",
            if arm { "treated" } else { "control" },
            rows.len()
        )));
    }
    let x = crate::data::select_rows(&d.x, &rows);
    let y: Vec<f64> = rows.iter().map(|&i| d.y[i]).collect();
    let model = fit_outcome(&x, &y)?;
    Ok((model.predict(&d.x), model))
}

/// Unpenalized fit on a column subset, expanded back to all `p` columns.
fn fit_on_columns(x: &DMatrix<f64>, y: &[f64], cols: &[usize], family: Family) -> Result<FittedModel> {
    let sub = select_columns(x, cols);
    let m = match family {
        Family::Linear => glm::ols_model(&sub, y)?,
        Family::Logistic => glm::logistic_model(&sub, y)?,
    };
    let mut coef = vec![0.0; x.ncols()];
    for (k, &j) in cols.iter().enumerate() {
        coef[j] = m.coef[k];
    }
    let mut full = FittedModel::from_parts(family, m.intercept, coef.clone(), coef, 0.0);
    full.converged = m.converged;
    full.warnings = m.warnings;
    Ok(full)
}

/// Farrell's estimator: lasso selects covariates for the propensity model and
/// each arm's outcome model; unpenalized refits on the selected covariates feed
/// the AIPW formula. Boundary propensities are not clipped: the estimate is
/// returned with the extreme flag instead.
pub fn estimate_farrell(d: &Dataset, fit_cfg: &FitConfig) -> Result<AteEstimate> {
    estimate_farrell_with(d, fit_cfg, false)
}

pub fn estimate_farrell_with(d: &Dataset, fit_cfg: &FitConfig, pooled: bool) -> Result<AteEstimate> {
    d.check_both_arms()?;
    let (xs, _) = zscore_columns(&d.x);
    let s_ps = penreg::fit_lasso(&xs, &d.z, Family::Logistic, fit_cfg)?.selected;
    let rows1 = d.arm_rows(true);
    let rows0 = d.arm_rows(false);
    let arm_data = |rows: &[usize]| (crate::data::select_rows(&xs, rows), rows.iter().map(|&i| d.y[i]).collect::<Vec<_>>());
    let (x1, y1) = arm_data(&rows1);
    let (x0, y0) = arm_data(&rows0);
    let s1 = penreg::fit_lasso(&x1, &y1, Family::Linear, fit_cfg)?.selected;
    let s0 = penreg::fit_lasso(&x0, &y0, Family::Linear, fit_cfg)?.selected;
    let (s_ps, s1, s0) = farrell_sets(s_ps, s1, s0, pooled);
    farrell_refit(d, &xs, &s_ps, &s1, &s0)
}

fn farrell_sets(s_ps: Vec<usize>, s1: Vec<usize>, s0: Vec<usize>, pooled: bool) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    if pooled {
        let mut all: Vec<usize> = s_ps.iter().chain(&s1).chain(&s0).copied().collect();
        all.sort_unstable();
        all.dedup();
        (all.clone(), all.clone(), all)
    } else {
        (s_ps, s1, s0)
    }
}

/// Refit stage of Farrell's estimator on fixed selections (z-scored design `xs`).
pub fn farrell_refit(d: &Dataset, xs: &DMatrix<f64>, s_ps: &[usize], s1: &[usize], s0: &[usize]) -> Result<AteEstimate> {
    let ps_model = fit_on_columns(xs, &d.z, s_ps, Family::Logistic)?;
    let ps = ps_model.predict(xs);
    let fit_arm = |rows: &[usize], cols: &[usize]| -> Result<Vec<f64>> {
        let x = crate::data::select_rows(xs, rows);
        let y: Vec<f64> = rows.iter().map(|&i| d.y[i]).collect();
        Ok(fit_on_columns(&x, &y, cols, Family::Linear)?.predict(xs))
    };
    let m1 = fit_arm(&d.arm_rows(true), s1)?;
    let m0 = fit_arm(&d.arm_rows(false), s0)?;
    let mut est = AteEstimate::new(aipw_value(d, &ps, &m1, &m0));
    est.diagnostics.ps_selected = Some(s_ps.to_vec());
    est.diagnostics.m1_selected = Some(s1.to_vec());
    est.diagnostics.m0_selected = Some(s0.to_vec());
    est.diagnostics.warnings = ps_model.warnings;
    est.ps = Some(ps);
    est.m1 = Some(m1);
    est.m0 = Some(m0);
    Ok(est)
}

#[derive(Debug, Clone)]
struct PsFit {
    ps: Vec<f64>,
    selected: Vec<usize>,
    warnings: Vec<String>,
}

#[derive(Debug, Clone)]
struct OutcomeFit {
    m1: Vec<f64>,
    m0: Vec<f64>,
    s1: Vec<usize>,
    s0: Vec<usize>,
}

/// Fits shared between estimators run on the same dataset.
struct Workspace<'a> {
    d: &'a Dataset,
    xs: DMatrix<f64>,
    cfg: &'a EstimatorConfig,
    ps: HashMap<(PsMethod, Option<Vec<usize>>), std::result::Result<PsFit, String>>,
    outcome: HashMap<(OutcomeMethod, Option<Vec<usize>>), std::result::Result<OutcomeFit, String>>,
}

impl<'a> Workspace<'a> {
    fn new(d: &'a Dataset, cfg: &'a EstimatorConfig) -> Self {
        let (xs, _) = zscore_columns(&d.x);
        Self { d, xs, cfg, ps: HashMap::new(), outcome: HashMap::new() }
    }

    fn ps_fit(&mut self, method: PsMethod, known: Option<&Vec<usize>>) -> Result<PsFit> {
        let key = (method, if method == PsMethod::Known { known.cloned() } else { None });
        if !self.ps.contains_key(&key) {
            let r = self.compute_ps(method, known).map_err(|e| e.to_string());
            self.ps.insert(key.clone(), r);
        }
        self.ps[&key].clone().map_err(Error::Fit)
    }

    fn compute_ps(&self, method: PsMethod, known: Option<&Vec<usize>>) -> Result<PsFit> {
        let d = self.d;
        let fit = &self.cfg.fit;
        let model = match method {
            PsMethod::Oal => fit_oal(&d.with_x(self.xs.clone()), &self.cfg.oal, fit)?.ps_model,
            PsMethod::Lasso => penreg::fit_lasso(&self.xs, &d.z, Family::Logistic, fit)?,
            PsMethod::Known => fit_on_columns(&self.xs, &d.z, known.ok_or(Error::MissingKnownSets)?, Family::Logistic)?,
        };
        Ok(PsFit { ps: model.predict(&self.xs), selected: model.selected, warnings: model.warnings })
    }

    fn outcome_fit(&mut self, method: OutcomeMethod, known: Option<&Vec<usize>>) -> Result<OutcomeFit> {
        let key = (method, if method == OutcomeMethod::Known { known.cloned() } else { None });
        if !self.outcome.contains_key(&key) {
            let r = self.compute_outcome(method, known).map_err(|e| e.to_string());
            self.outcome.insert(key.clone(), r);
        }
        self.outcome[&key].clone().map_err(Error::Fit)
    }

    fn compute_outcome(&self, method: OutcomeMethod, known: Option<&Vec<usize>>) -> Result<OutcomeFit> {
        let c = self.cfg;
        let fitter = |x: &DMatrix<f64>, y: &[f64]| -> Result<FittedModel> {
            let lin = Family::Linear;
            match method {
                OutcomeMethod::Lasso => penreg::fit_lasso(x, y, lin, &c.fit),
                OutcomeMethod::ElasticNet => penreg::fit_elastic_net(x, y, lin, &c.fit, c.en_mix),
                OutcomeMethod::AdaptiveLasso => penreg::fit_adaptive_lasso(x, y, lin, &c.fit),
                OutcomeMethod::AdaptiveElasticNet => penreg::fit_adaptive_elastic_net(x, y, lin, &c.fit, &c.aen_mix_grid),
                OutcomeMethod::Scad => penreg::fit_scad(x, y, lin, &c.fit.with_rule(c.nonconvex_rule), c.scad_a),
                OutcomeMethod::Mcp => penreg::fit_mcp(x, y, lin, &c.fit.with_rule(c.nonconvex_rule), c.mcp_gamma),
                OutcomeMethod::Lsp => penreg::fit_lsp(x, y, lin, &c.fit, c.lsp_delta, c.lsp_max_iter),
                OutcomeMethod::Known => fit_on_columns(x, y, known.ok_or(Error::MissingKnownSets)?, lin),
            }
        };
        let ds = self.d.with_x(self.xs.clone());
        let (m1, model1) = arm_predictions(&ds, true, &fitter)?;
        let (m0, model0) = arm_predictions(&ds, false, &fitter)?;
        Ok(OutcomeFit { m1, m0, s1: model1.selected, s0: model0.selected })
    }

    fn clip(&self, spec: &EstimatorSpec, ps: Vec<f64>) -> Vec<f64> {
        match spec.ps_clip {
            Some(eps) => ps.into_iter().map(|e| e.clamp(eps, 1.0 - eps)).collect(),
            None => ps,
        }
    }

    fn run(&mut self, spec: &EstimatorSpec) -> Result<AteEstimate> {
        spec.validate(self.d.p())?;
        let d = self.d;
        let known = spec.known_sets.as_ref();
        match spec.id.form() {
            AteForm::DifferenceInMeans => estimate_naive(d),
            AteForm::FarrellAipw => {
                // same selections as estimate_farrell_with, shared with the lasso estimators
                d.check_both_arms()?;
                let s_ps = self.ps_fit(PsMethod::Lasso, None)?.selected;
                let of = self.outcome_fit(OutcomeMethod::Lasso, None)?;
                let (s_ps, s1, s0) = farrell_sets(s_ps, of.s1, of.s0, spec.farrell_pooled);
                let mut est = farrell_refit(d, &self.xs, &s_ps, &s1, &s0)?;
                if spec.ps_clip.is_some() {
                    let ps = self.clip(spec, est.ps.take().unwrap_or_default());
                    let diag = est.diagnostics.clone();
                    est = AteEstimate::new(aipw_value(d, &ps, est.m1.as_ref().unwrap(), est.m0.as_ref().unwrap()));
                    est.diagnostics = diag;
                    est.ps = Some(ps);
                }
                Ok(est)
            }
            AteForm::Ipw => {
                let ps_fit = self.ps_fit(spec.id.ps_method().unwrap(), known)?;
                let ps = self.clip(spec, ps_fit.ps);
                let mut est = estimate_ipw(d, &ps)?;
                est.diagnostics.ps_selected = Some(ps_fit.selected);
                est.diagnostics.warnings = ps_fit.warnings;
                Ok(est)
            }
            AteForm::GComputation => {
                let of = self.outcome_fit(spec.id.outcome_method().unwrap(), known)?;
                let n = d.n() as f64;
                let theta = of.m1.iter().sum::<f64>() / n - of.m0.iter().sum::<f64>() / n;
                let mut est = AteEstimate::new(theta);
                est.diagnostics.m1_selected = Some(of.s1);
                est.diagnostics.m0_selected = Some(of.s0);
                est.m1 = Some(of.m1);
                est.m0 = Some(of.m0);
                Ok(est)
            }
            AteForm::Aipw => {
                let ps_fit = self.ps_fit(spec.id.ps_method().unwrap(), known)?;
                let of = self.outcome_fit(spec.id.outcome_method().unwrap(), known)?;
                let ps = self.clip(spec, ps_fit.ps);
                let mut est = estimate_aipw(d, &ps, &of.m1, &of.m0)?;
                est.diagnostics.ps_selected = Some(ps_fit.selected);
                est.diagnostics.m1_selected = Some(of.s1);
                est.diagnostics.m0_selected = Some(of.s0);
                est.diagnostics.warnings = ps_fit.warnings;
                Ok(est)
            }
        }
    }
}

/// Runs one estimator as listed in the registry.
pub fn run_estimator(spec: &EstimatorSpec, d: &Dataset, cfg: &EstimatorConfig) -> Result<AteEstimate> {
    Workspace::new(d, cfg).run(spec)
}

/// Runs several estimators on one dataset, fitting each propensity or
/// outcome method once and sharing it between estimators.
pub fn run_estimators(specs: &[EstimatorSpec], d: &Dataset, cfg: &EstimatorConfig) -> Vec<Result<AteEstimate>> {
    let mut ws = Workspace::new(d, cfg);
    specs.iter().map(|s| ws.run(s)).collect()
}
