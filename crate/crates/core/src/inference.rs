//! Nonparametric bootstrap standard errors with normal-approximation
//! confidence intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{run_estimators, EstimatorConfig, EstimatorSpec};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959964;

/// Redraws allowed when a resample leaves one arm empty.
pub const MAX_REDRAWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Estimate on the original data; the interval is centered here.
    pub theta_hat: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub b_requested: usize,
    pub b_valid: usize,
}

impl BootstrapResult {
    pub fn from_parts(theta_hat: f64, se: f64, b_requested: usize, b_valid: usize) -> Self {
        let (ci_low, ci_high) = normal_ci(theta_hat, se);
        Self { theta_hat, se, ci_low, ci_high, b_requested, b_valid }
    }
}

pub fn normal_ci(theta_hat: f64, se: f64) -> (f64, f64) {
    (theta_hat - Z_95 * se, theta_hat + Z_95 * se)
}

/// Sample standard deviation (denominator m − 1).
pub fn sample_sd(v: &[f64]) -> f64 {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    (v.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
}

/// Row indices of resample `k`. Each resample owns an RNG stream, so the
/// draw does not depend on evaluation order. Returns `None` when every
/// attempt left an arm empty.
pub fn resample_rows(z: &[f64], seed: u64, k: usize) -> Option<Vec<usize>> {
    let n = z.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    for _ in 0..=MAX_REDRAWS {
        let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let treated = rows.iter().filter(|&&i| z[i] == 1.0).count();
        if treated > 0 && treated < n {
            return Some(rows);
        }
    }
    None
}

/// Bootstraps several estimators together; each resample is fitted once
/// and shared between them.
pub fn bootstrap_many(
    d: &Dataset,
    specs: &[EstimatorSpec],
    b: usize,
    seed: u64,
    cfg: &EstimatorConfig,
) -> Vec<Result<BootstrapResult>> {
    if b < 2 {
        return specs
            .iter()
            .map(|_| Err(Error::InvalidParameter(format!("bootstrap needs b >= 2, got {b}"))))
            .collect();
    }
    let original = run_estimators(specs, d, cfg);
    let draws: Vec<Vec<Option<f64>>> = (0..b)
        .into_par_iter()
        .map(|k| match resample_rows(&d.z, seed, k) {
            Some(rows) => run_estimators(specs, &d.select_rows(&rows), cfg)
                .into_iter()
                .map(|r| r.ok().filter(|e| !e.extreme).map(|e| e.theta_hat))
                .collect(),
            None => vec![None; specs.len()],
        })
        .collect();
    original
        .into_iter()
        .enumerate()
        .map(|(s, orig)| {
            let theta_hat = orig?.theta_hat;
            let valid: Vec<f64> = draws.iter().filter_map(|row| row[s]).collect();
            if valid.len() < 2 {
                return Err(Error::InsufficientData(format!(
                    "{}: only {} of {b} bootstrap resamples gave a finite estimate",
                    specs[s].id,
                    valid.len()
                )));
            }
            Ok(BootstrapResult::from_parts(theta_hat, sample_sd(&valid), b, valid.len()))
        })
        .collect()
}

pub fn bootstrap_ci(
    d: &Dataset,
    spec: &EstimatorSpec,
    b: usize,
    seed: u64,
    cfg: &EstimatorConfig,
) -> Result<BootstrapResult> {
    bootstrap_many(d, std::slice::from_ref(spec), b, seed, cfg).pop().expect("one spec in, one result out")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorId;
    use nalgebra::DMatrix;
    use rand_distr::{Distribution, Normal};

    fn round3(v: f64) -> f64 {
        (v * 1000.0).round() / 1000.0
    }

    #[test]
    fn table_naive_row_interval() {
        let r = BootstrapResult::from_parts(0.213, 0.027, 1000, 1000);
        assert_eq!((round3(r.ci_low), round3(r.ci_high)), (0.160, 0.266));
    }

    #[test]
    fn interval_is_centered_at_estimate() {
        let r = BootstrapResult::from_parts(-1.5, 0.4, 10, 9);
        assert!((r.ci_low - (-1.5 - Z_95 * 0.4)).abs() < 1e-12);
        assert!((r.ci_high - (-1.5 + Z_95 * 0.4)).abs() < 1e-12);
    }

    fn toy() -> Dataset {
        let x = DMatrix::from_column_slice(6, 1, &[0.3, -1.0, 0.2, 0.8, -0.4, 1.1]);
        Dataset::unnamed(x, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0], vec![2.0, 4.0, 3.0, 1.0, 0.5, 2.5]).unwrap()
    }

    #[test]
    fn constant_outcome_gives_zero_se() {
        let x = DMatrix::from_column_slice(6, 1, &[0.3, -1.0, 0.2, 0.8, -0.4, 1.1]);
        let d = Dataset::unnamed(x, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0], vec![7.0; 6]).unwrap();
        let r = bootstrap_ci(&d, &EstimatorSpec::new(EstimatorId::Naive), 50, 3, &EstimatorConfig::default()).unwrap();
        assert_eq!(r.theta_hat, 0.0);
        assert_eq!(r.se, 0.0);
        assert_eq!((r.ci_low, r.ci_high), (0.0, 0.0));
    }

    #[test]
    fn three_resamples_match_hand_computation() {
        let d = toy();
        let seed = 11;
        let by_hand: Vec<f64> = (0..3)
            .map(|k| {
                let rows = resample_rows(&d.z, seed, k).unwrap();
                let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0.0, 0.0, 0.0);
                for &i in &rows {
                    if d.z[i] == 1.0 {
                        s1 += d.y[i];
                        n1 += 1.0;
                    } else {
                        s0 += d.y[i];
                        n0 += 1.0;
                    }
                }
                s1 / n1 - s0 / n0
            })
            .collect();
        let mean = by_hand.iter().sum::<f64>() / 3.0;
        let sd = (by_hand.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
        let r = bootstrap_ci(&d, &EstimatorSpec::new(EstimatorId::Naive), 3, seed, &EstimatorConfig::default()).unwrap();
        assert!((r.se - sd).abs() < 1e-12);
        assert!((r.theta_hat - (3.0 - 4.0 / 3.0)).abs() < 1e-12);
        assert_eq!(r.b_valid, 3);
    }

    #[test]
    fn resamples_are_deterministic_and_keep_both_arms() {
        let d = toy();
        for k in 0..20 {
            let a = resample_rows(&d.z, 5, k).unwrap();
            assert_eq!(a, resample_rows(&d.z, 5, k).unwrap());
            let t = a.iter().filter(|&&i| d.z[i] == 1.0).count();
            assert!(t > 0 && t < 6);
        }
        assert_ne!(resample_rows(&d.z, 5, 0), resample_rows(&d.z, 5, 1));
    }

    #[test]
    fn single_treated_unit_can_exhaust_redraws() {
        // with one treated unit in two rows some streams fail repeatedly;
        // every stream either succeeds or returns None, never panics
        let z = [1.0, 0.0];
        let outcomes: Vec<bool> = (0..200).map(|k| resample_rows(&z, 1, k).is_some()).collect();
        assert!(outcomes.iter().any(|s| *s));
    }

    #[test]
    fn naive_se_matches_two_sample_formula() {
        let n = 5000;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let z: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 1.0 } else { 0.0 }).collect();
        let y: Vec<f64> = z.iter().map(|&zi| 0.5 * zi + (1.0 + zi) * noise.sample(&mut rng)).collect();
        let x = DMatrix::from_fn(n, 1, |i, _| i as f64 % 7.0);
        let d = Dataset::unnamed(x, z.clone(), y.clone()).unwrap();
        let arm = |a: f64| -> Vec<f64> { y.iter().zip(&z).filter(|(_, zi)| **zi == a).map(|(v, _)| *v).collect() };
        let (y1, y0) = (arm(1.0), arm(0.0));
        let formula = (sample_sd(&y1).powi(2) / y1.len() as f64 + sample_sd(&y0).powi(2) / y0.len() as f64).sqrt();
        let r = bootstrap_ci(&d, &EstimatorSpec::new(EstimatorId::Naive), 400, 8, &EstimatorConfig::default()).unwrap();
        assert!((r.se / formula - 1.0).abs() < 0.1, "bootstrap {} vs formula {formula}", r.se);
    }

    #[test]
    fn b_below_two_is_rejected() {
        let r = bootstrap_ci(&toy(), &EstimatorSpec::new(EstimatorId::Naive), 1, 0, &EstimatorConfig::default());
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }
}
