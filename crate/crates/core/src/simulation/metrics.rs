//! Bias, standard error and RMSE over Monte Carlo replications.

use serde::{Deserialize, Serialize};

use super::dgp::TRUE_ATE;
use crate::estimators::{is_extreme, EstimatorId, EXTREME_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub estimator: EstimatorId,
    /// `None` is the hyphen sentinel: the aggregate overflowed or nothing was valid.
    pub bias: Option<f64>,
    pub se: Option<f64>,
    pub rmse: Option<f64>,
    pub n_valid: usize,
    pub n_extreme: usize,
    /// Replications where the estimator returned an error.
    pub n_failed: usize,
}

impl MetricsSummary {
    pub fn flagged(&self) -> bool {
        self.n_extreme > 0
    }

    pub fn is_sentinel(&self) -> bool {
        self.bias.is_none()
    }
}

pub fn rmse(bias: f64, se: f64) -> f64 {
    bias.hypot(se)
}

/// Summarizes one estimator's replications (`None` marks a failed fit).
///
/// Extreme estimates are counted and left out of the moments. When the mean
/// over every returned estimate, extreme ones included, is non-finite or
/// beyond 1e8 in magnitude the metrics are reported as the sentinel.
pub fn summarize(estimator: EstimatorId, thetas: &[Option<f64>]) -> MetricsSummary {
    let returned: Vec<f64> = thetas.iter().flatten().copied().collect();
    let valid: Vec<f64> = returned.iter().copied().filter(|t| !is_extreme(*t)).collect();
    let n_valid = valid.len();
    let n_extreme = returned.len() - n_valid;
    let n_failed = thetas.len() - returned.len();
    let overall = returned.iter().sum::<f64>() / returned.len() as f64;
    let overflow = !returned.is_empty() && (!overall.is_finite() || overall.abs() > EXTREME_THRESHOLD);
    let (bias, se, rmse_v) = if overflow || n_valid == 0 {
        (None, None, None)
    } else {
        let mean = valid.iter().sum::<f64>() / n_valid as f64;
        // population sd, so that rmse is the root mean squared error itself
        let se = (valid.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n_valid as f64).sqrt();
        let bias = mean - TRUE_ATE;
        (Some(bias), Some(se), Some(rmse(bias, se)))
    };
    MetricsSummary { estimator, bias, se, rmse: rmse_v, n_valid, n_extreme, n_failed }
}
