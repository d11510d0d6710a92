//! Unpenalized least squares and maximum-likelihood logistic regression,
//! both with an intercept.

use nalgebra::{DMatrix, DVector};

use super::{expit, Family, FittedModel};
use crate::error::{Error, Result};

const RANK_TOL: f64 = 1e-10;

fn centered(x: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    let means: Vec<f64> = x.column_iter().map(|c| c.sum() / n).collect();
    let xc = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - means[j]);
    (xc, means)
}

/// Ordinary least squares of `y` on `[1, x]`. Rank-deficient designs are an error.
pub fn ols(x: &DMatrix<f64>, y: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = x.nrows();
    let p = x.ncols();
    if y.len() != n {
        return Err(Error::Dimension(format!("response has {} rows, x has {n}", y.len())));
    }
    let ybar = y.iter().sum::<f64>() / n as f64;
    if p == 0 {
        return Ok((ybar, Vec::new()));
    }
    if n <= p {
        return Err(Error::Singular(format!("OLS needs n > p (n = {n}, p = {p})")));
    }
    let (xc, means) = centered(x);
    let svd = xc.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin / smax < RANK_TOL {
        return Err(Error::Singular("design matrix is rank deficient".into()));
    }
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - ybar));
    let beta = svd
        .solve(&yc, 0.0)
        .map_err(|e| Error::Singular(e.to_string()))?;
    let coef: Vec<f64> = beta.iter().copied().collect();
    let intercept = ybar - coef.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
    Ok((intercept, coef))
}

pub fn ols_model(x: &DMatrix<f64>, y: &[f64]) -> Result<FittedModel> {
    let (b0, coef) = ols(x, y)?;
    Ok(FittedModel::from_parts(Family::Linear, b0, coef.clone(), coef, 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticMl {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

pub const ML_TOL: f64 = 1e-8;
pub const ML_MAX_ITER: usize = 25;

/// Newton–Raphson logistic regression on `[1, x]`.
///
/// Convergence uses the relative deviance change `< 1e-8`, capped at 25
/// iterations. Under (quasi-)separation the coefficients keep growing and the
/// fit is returned with `converged = false`; fitted probabilities may then be
/// numerically 0 or 1.
pub fn logistic_ml(x: &DMatrix<f64>, y: &[f64]) -> Result<LogisticMl> {
    let n = x.nrows();
    let p = x.ncols();
    if y.len() != n {
        return Err(Error::Dimension(format!("response has {} rows, x has {n}", y.len())));
    }
    let a = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
    let mut theta = DVector::<f64>::zeros(p + 1);
    let ybar = y.iter().sum::<f64>() / n as f64;
    if ybar > 0.0 && ybar < 1.0 {
        theta[0] = (ybar / (1.0 - ybar)).ln();
    }
    let deviance = |eta: &DVector<f64>| -> f64 {
        eta.iter()
            .zip(y)
            .map(|(&e, &yi)| {
                let log1pexp = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
                2.0 * (log1pexp - yi * e)
            })
            .sum()
    };
    let mut eta = &a * &theta;
    let mut dev_old = deviance(&eta);
    for iter in 1..=ML_MAX_ITER {
        let mut grad = DVector::<f64>::zeros(p + 1);
        let mut hess = DMatrix::<f64>::zeros(p + 1, p + 1);
        let mut w = vec![0.0; n];
        for i in 0..n {
            let pi = expit(eta[i]);
            w[i] = pi * (1.0 - pi);
            let row = a.row(i);
            grad += row.transpose() * (y[i] - pi);
        }
        let aw = DMatrix::from_fn(n, p + 1, |i, j| a[(i, j)] * w[i]);
        hess += a.transpose() * aw;
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => {
                if iter == 1 {
                    return Err(Error::Singular("logistic information matrix is singular".into()));
                }
                return Ok(finish(&theta, false, iter - 1));
            }
        };
        if step.iter().any(|v| !v.is_finite()) {
            return Ok(finish(&theta, false, iter - 1));
        }
        theta += step;
        eta = &a * &theta;
        let dev = deviance(&eta);
        if (dev - dev_old).abs() / (dev.abs() + 0.1) < ML_TOL {
            return Ok(finish(&theta, true, iter));
        }
        dev_old = dev;
    }
    Ok(finish(&theta, false, ML_MAX_ITER))
}

fn finish(theta: &DVector<f64>, converged: bool, iterations: usize) -> LogisticMl {
    LogisticMl {
        intercept: theta[0],
        coef: theta.iter().skip(1).copied().collect(),
        converged,
        iterations,
    }
}

pub fn logistic_model(x: &DMatrix<f64>, y: &[f64]) -> Result<FittedModel> {
    let ml = logistic_ml(x, y)?;
    let mut m = FittedModel::from_parts(Family::Logistic, ml.intercept, ml.coef.clone(), ml.coef, 0.0);
    m.converged = ml.converged;
    m.sweeps = ml.iterations;
    if !ml.converged {
        m.warnings.push("unpenalized logistic fit did not converge".into());
    }
    if m.predict(x).iter().any(|p| *p < 1e-8 || *p > 1.0 - 1e-8) {
        m.warnings.push("fitted probabilities numerically 0 or 1".into());
    }
    Ok(m)
}
