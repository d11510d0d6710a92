//! Monte Carlo harness: scenario configuration, replication generation,
//! the replication loop and the 72-setting grid.

mod dgp;
pub mod example_data;
mod metrics;

pub use dgp::{binarize, gen_covariates, gen_outcome, gen_outcome_with_sd, gen_treatment, transform_u, TRUE_ATE};
pub use metrics::{rmse, summarize, MetricsSummary};

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{run_estimators, EstimatorConfig, EstimatorId, EstimatorSpec};

/// Confounders ∪ outcome predictors, zero-based.
pub const KNOWN_SETS: [usize; 4] = [0, 1, 2, 3];

pub const PAPER_DIMS: [(usize, usize); 3] = [(200, 80), (500, 200), (1000, 400)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confounding {
    Strong,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovariateType {
    Continuous,
    Binary,
}

/// Which generator receives the transformed covariates `U(X)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Misspec {
    None,
    Ps,
    Outcome,
    Both,
}

macro_rules! display_via_serde_names {
    ($t:ty, $($v:path => $s:expr),+) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($v => $s),+ })
            }
        }
    };
}

display_via_serde_names!(Confounding, Confounding::Strong => "strong", Confounding::Weak => "weak");
display_via_serde_names!(CovariateType, CovariateType::Continuous => "continuous", CovariateType::Binary => "binary");
display_via_serde_names!(Misspec, Misspec::None => "none", Misspec::Ps => "ps", Misspec::Outcome => "outcome", Misspec::Both => "both");

impl Confounding {
    /// Treatment coefficients α (first six entries; the rest are zero).
    pub fn alpha(self, p: usize) -> Vec<f64> {
        let head: [f64; 6] = match self {
            Confounding::Strong => [1.0, 1.0, 0.0, 0.0, 1.0, 1.0],
            Confounding::Weak => [0.4, 0.4, 0.0, 0.0, 1.0, 1.0],
        };
        pad(&head, p)
    }

    /// Outcome coefficients β.
    pub fn beta(self, p: usize) -> Vec<f64> {
        let head: [f64; 6] = match self {
            Confounding::Strong => [0.6, 0.6, 0.6, 0.6, 0.0, 0.0],
            Confounding::Weak => [0.2, 0.2, 0.6, 0.6, 0.0, 0.0],
        };
        pad(&head, p)
    }
}

fn pad(head: &[f64], p: usize) -> Vec<f64> {
    let mut v = vec![0.0; p];
    for (dst, src) in v.iter_mut().zip(head) {
        *dst = *src;
    }
    v
}

fn default_estimators() -> Vec<EstimatorSpec> {
    EstimatorId::ALL.iter().map(|&id| EstimatorSpec::new(id)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub rho: f64,
    pub confounding: Confounding,
    pub covariate_type: CovariateType,
    pub misspec: Misspec,
    pub reps: usize,
    pub seed: u64,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorSpec>,
}

impl ScenarioConfig {
    pub fn new(
        n: usize,
        p: usize,
        rho: f64,
        confounding: Confounding,
        covariate_type: CovariateType,
        misspec: Misspec,
        reps: usize,
        seed: u64,
    ) -> Self {
        Self { n, p, rho, confounding, covariate_type, misspec, reps, seed, estimators: default_estimators() }
    }

    pub fn with_estimators(mut self, ids: &[EstimatorId]) -> Self {
        self.estimators = ids.iter().map(|&id| EstimatorSpec::new(id)).collect();
        self
    }

    /// Stable identifier used in output files and replication seeding.
    pub fn id(&self) -> String {
        format!(
            "{}-{}-n{}-p{}-rho{}-{}",
            self.confounding, self.covariate_type, self.n, self.p, self.rho, self.misspec
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 7 {
            return Err(Error::Config(format!("p must be at least 7, got {}", self.p)));
        }
        if self.n < 20 {
            return Err(Error::Config(format!("n must be at least 20, got {}", self.n)));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        if self.rho != 0.0 && self.misspec != Misspec::None {
            return Err(Error::Config("rho != 0 is only allowed with misspec = none".into()));
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators configured".into()));
        }
        for spec in &self.estimators {
            let spec = with_known_sets(spec);
            spec.validate(self.p).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Additional check for the published grid: (n, p) must be one of its pairs.
    pub fn validate_paper_mode(&self) -> Result<()> {
        self.validate()?;
        if !PAPER_DIMS.contains(&(self.n, self.p)) {
            return Err(Error::Config(format!("(n, p) = ({}, {}) is not a published setting", self.n, self.p)));
        }
        Ok(())
    }
}

fn with_known_sets(spec: &EstimatorSpec) -> EstimatorSpec {
    let mut s = spec.clone();
    if s.id.needs_known_sets() && s.known_sets.is_none() {
        s.known_sets = Some(KNOWN_SETS.to_vec());
    }
    s
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ *b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of replication `rep`: a pure function of the base seed, scenario id and index.
pub fn replication_seed(base_seed: u64, scenario_id: &str, rep: usize) -> u64 {
    splitmix64(splitmix64(base_seed ^ fnv1a(scenario_id.as_bytes())) ^ rep as u64)
}

/// One simulated dataset. Estimators only ever see `X` (binarized for
/// binary scenarios); the transformed `U(X)` is used inside the generators.
pub fn make_replication(cfg: &ScenarioConfig, rep: usize, base_seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(base_seed, &cfg.id(), rep));
    let mut x = gen_covariates(cfg.n, cfg.p, cfg.rho, &mut rng)?;
    if cfg.covariate_type == CovariateType::Binary {
        x = binarize(&x);
    }
    let u = match cfg.misspec {
        Misspec::None => None,
        _ => Some(transform_u(&x)?),
    };
    let (vz, vy) = match (cfg.misspec, &u) {
        (Misspec::Ps, Some(u)) => (u, &x),
        (Misspec::Outcome, Some(u)) => (&x, u),
        (Misspec::Both, Some(u)) => (u, u),
        _ => (&x, &x),
    };
    let z = gen_treatment(vz, &cfg.confounding.alpha(cfg.p), &mut rng);
    let y = gen_outcome(vy, &z, &cfg.confounding.beta(cfg.p), &mut rng);
    Dataset::unnamed(x, z, y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationEntry {
    pub estimator: EstimatorId,
    /// `None` when the estimator failed on this replication.
    pub theta_hat: Option<f64>,
    pub extreme: bool,
    pub error: Option<String>,
    pub ps_selected: Option<Vec<usize>>,
    pub m1_selected: Option<Vec<usize>>,
    pub m0_selected: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub rep: usize,
    pub entries: Vec<ReplicationEntry>,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub replications: Vec<ReplicationResult>,
    pub metrics: Vec<MetricsSummary>,
    pub warnings: Vec<String>,
}

impl ScenarioResult {
    pub fn metrics_for(&self, id: EstimatorId) -> Option<&MetricsSummary> {
        self.metrics.iter().find(|m| m.estimator == id)
    }
}

/// Runs every configured estimator on one replication.
pub fn run_replication(cfg: &ScenarioConfig, rep: usize, est_cfg: &EstimatorConfig) -> Result<ReplicationResult> {
    let d = make_replication(cfg, rep, cfg.seed)?;
    let specs: Vec<EstimatorSpec> = cfg.estimators.iter().map(with_known_sets).collect();
    let entries = specs
        .iter()
        .zip(run_estimators(&specs, &d, est_cfg))
        .map(|(spec, r)| match r {
            Ok(est) => ReplicationEntry {
                estimator: spec.id,
                theta_hat: Some(est.theta_hat),
                extreme: est.extreme,
                error: None,
                ps_selected: est.diagnostics.ps_selected,
                m1_selected: est.diagnostics.m1_selected,
                m0_selected: est.diagnostics.m0_selected,
            },
            Err(e) => ReplicationEntry {
                estimator: spec.id,
                theta_hat: None,
                extreme: false,
                error: Some(e.to_string()),
                ps_selected: None,
                m1_selected: None,
                m0_selected: None,
            },
        })
        .collect();
    Ok(ReplicationResult { rep, entries })
}

/// Runs all replications of a scenario (in parallel on the current rayon
/// pool) and aggregates the metrics. Results do not depend on scheduling.
pub fn run_scenario(cfg: &ScenarioConfig, est_cfg: &EstimatorConfig) -> Result<ScenarioResult> {
    cfg.validate()?;
    let replications: Vec<ReplicationResult> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| run_replication(cfg, rep, est_cfg))
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let metrics = cfg
        .estimators
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let thetas: Vec<Option<f64>> = replications.iter().map(|r| r.entries[k].theta_hat).collect();
            let m = summarize(spec.id, &thetas);
            if m.n_failed > 0 {
                let first = replications.iter().find_map(|r| r.entries[k].error.clone()).unwrap_or_default();
                warnings.push(format!("{}: {} {} replication(s) failed (first: {first})", cfg.id(), spec.id, m.n_failed));
            }
            m
        })
        .collect();
    Ok(ScenarioResult { config: cfg.clone(), replications, metrics, warnings })
}

/// The 72 published settings: confounding × covariate type × (n, p) ×
/// {four misspecification patterns at ρ = 0, ρ ∈ {0.2, 0.5} with none}.
pub fn paper_grid(reps: usize, seed: u64) -> Vec<ScenarioConfig> {
    let mut out = Vec::with_capacity(72);
    for confounding in [Confounding::Strong, Confounding::Weak] {
        for covariate_type in [CovariateType::Continuous, CovariateType::Binary] {
            for (n, p) in PAPER_DIMS {
                for misspec in [Misspec::None, Misspec::Ps, Misspec::Outcome, Misspec::Both] {
                    out.push(ScenarioConfig::new(n, p, 0.0, confounding, covariate_type, misspec, reps, seed));
                }
                for rho in [0.2, 0.5] {
                    out.push(ScenarioConfig::new(n, p, rho, confounding, covariate_type, Misspec::None, reps, seed));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(misspec: Misspec, covariate_type: CovariateType) -> ScenarioConfig {
        ScenarioConfig::new(60, 8, 0.0, Confounding::Strong, covariate_type, misspec, 2, 11)
    }

    #[test]
    fn grid_has_72_published_settings() {
        let g = paper_grid(10, 1);
        assert_eq!(g.len(), 72);
        assert!(g.iter().all(|c| c.rho == 0.0 || c.misspec == Misspec::None));
        assert!(g.iter().all(|c| c.validate_paper_mode().is_ok()));
        let ids: std::collections::HashSet<String> = g.iter().map(|c| c.id()).collect();
        assert_eq!(ids.len(), 72);
    }

    #[test]
    fn coefficient_vectors() {
        assert_eq!(Confounding::Strong.alpha(8), vec![1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(Confounding::Weak.beta(7), vec![0.2, 0.2, 0.6, 0.6, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn validation_rules() {
        let mut c = small(Misspec::Ps, CovariateType::Continuous);
        c.rho = 0.2;
        assert!(c.validate().is_err());
        let mut c = small(Misspec::None, CovariateType::Continuous);
        c.p = 6;
        assert!(c.validate().is_err());
        assert!(small(Misspec::None, CovariateType::Continuous).validate_paper_mode().is_err());
    }

    #[test]
    fn replications_are_deterministic_and_carry_x() {
        for misspec in [Misspec::None, Misspec::Ps, Misspec::Outcome, Misspec::Both] {
            let c = small(misspec, CovariateType::Binary);
            let a = make_replication(&c, 3, 99).unwrap();
            let b = make_replication(&c, 3, 99).unwrap();
            assert_eq!(a, b);
            assert!(a.x.iter().all(|v| *v == 1.0 || *v == -1.0));
            assert_ne!(make_replication(&c, 4, 99).unwrap().y, a.y);
        }
    }

    #[test]
    fn naive_only_scenario_runs() {
        let c = small(Misspec::None, CovariateType::Continuous).with_estimators(&[EstimatorId::Naive]);
        let r = run_scenario(&c, &EstimatorConfig::default()).unwrap();
        assert_eq!(r.replications.len(), 2);
        assert_eq!(r.metrics[0].n_valid, 2);
    }
}
