//! Data-generating process: equicorrelated Gaussian covariates, optional
//! ±1 binarization, the nonlinear `U` transform, logistic treatment
//! assignment without intercept and a linear outcome with true effect 0.5.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::penreg::expit;

pub const TRUE_ATE: f64 = 0.5;

/// Draws `n` rows of `N(0, Σ)` with unit variances and common correlation
/// `rho`, as `√ρ·g_i + √(1−ρ)·e_ij`.
pub fn gen_covariates<R: Rng>(n: usize, p: usize, rho: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("rho must lie in [0, 1), got {rho}")));
    }
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let g: f64 = rng.sample(StandardNormal);
        for j in 0..p {
            let e: f64 = rng.sample(StandardNormal);
            x[(i, j)] = a * g + b * e;
        }
    }
    Ok(x)
}

/// Maps each entry to 1 if positive, otherwise −1.
pub fn binarize(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.map(|v| if v > 0.0 { 1.0 } else { -1.0 })
}

/// Nonlinear transform of the first six columns; the rest pass through.
pub fn transform_u(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() < 7 {
        return Err(Error::InvalidParameter(format!("transform needs p >= 7, got {}", x.ncols())));
    }
    let mut u = x.clone();
    for i in 0..x.nrows() {
        let r = |j: usize| x[(i, j)];
        u[(i, 0)] = 3.0 * r(0) / (1.0 + r(1).exp());
        u[(i, 1)] = 5.0 * r(1).sin();
        u[(i, 2)] = r(2).powi(3) / 3.0;
        u[(i, 3)] = 5.0 * r(3).sin();
        u[(i, 4)] = (r(4) + r(5)) / std::f64::consts::SQRT_2;
        u[(i, 5)] = 5.0 * r(5).sin();
    }
    Ok(u)
}

/// `z_i ~ Bernoulli(expit(v_i · alpha))`.
pub fn gen_treatment<R: Rng>(v: &DMatrix<f64>, alpha: &[f64], rng: &mut R) -> Vec<f64> {
    (0..v.nrows())
        .map(|i| {
            let eta: f64 = alpha.iter().enumerate().map(|(j, a)| a * v[(i, j)]).sum();
            if rng.gen::<f64>() < expit(eta) {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// `y_i = 0.5 z_i + v_i · beta + ε_i` with `ε_i ~ N(0, 1)`.
pub fn gen_outcome<R: Rng>(v: &DMatrix<f64>, z: &[f64], beta: &[f64], rng: &mut R) -> Vec<f64> {
    gen_outcome_with_sd(v, z, beta, 1.0, rng)
}

/// As [`gen_outcome`] with noise standard deviation `sd` (0 gives the
/// noiseless outcome).
pub fn gen_outcome_with_sd<R: Rng>(v: &DMatrix<f64>, z: &[f64], beta: &[f64], sd: f64, rng: &mut R) -> Vec<f64> {
    (0..v.nrows())
        .map(|i| {
            let mean = TRUE_ATE * z[i] + beta.iter().enumerate().map(|(j, b)| b * v[(i, j)]).sum::<f64>();
            let eps: f64 = rng.sample(StandardNormal);
            mean + sd * eps
        })
        .collect()
}
