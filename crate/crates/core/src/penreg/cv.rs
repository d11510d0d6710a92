use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::solver::{fit_path_prepared, grid_for, Design};
use super::{check_response, Family, FitConfig, FittedModel, LambdaGrid, LambdaRule, PenaltySpec};
use crate::data::select_rows;
use crate::error::{Error, Result};

const PROB_CLAMP: f64 = 1e-5;

/// Cross-validated fit: the full-data model at the selected λ and the CV curve.
#[derive(Debug, Clone)]
pub struct CvFit {
    pub model: FittedModel,
    pub lambdas: Vec<f64>,
    /// Mean held-out loss per λ.
    pub cvm: Vec<f64>,
    /// Standard error of `cvm` across folds.
    pub cvsd: Vec<f64>,
    pub index_min: usize,
    pub index_1se: usize,
    pub selected_index: usize,
    /// Seed actually used for the fold partition.
    pub fold_seed: u64,
}

/// Fold label per row: a seeded permutation dealt round-robin into `k` folds,
/// so fold sizes differ by at most one.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &row) in perm.iter().enumerate() {
        fold[row] = pos % k;
    }
    fold
}

fn training_has_both_classes(y: &[f64], fold: &[usize], k: usize) -> bool {
    (0..k).all(|f| {
        let mut seen = [false; 2];
        for (yi, fi) in y.iter().zip(fold) {
            if *fi != f {
                seen[(*yi == 1.0) as usize] = true;
            }
        }
        seen[0] && seen[1]
    })
}

fn loss(family: Family, y: f64, pred: f64) -> f64 {
    match family {
        Family::Linear => (y - pred).powi(2),
        Family::Logistic => {
            let p = pred.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            -2.0 * (y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        }
    }
}

/// K-fold cross-validation over the full-data λ grid.
///
/// Loss is mean squared error (linear) or binomial deviance (logistic).
/// For logistic fits a partition whose training part lacks one class is
/// redrawn once with `seed + 1`.
pub fn cross_validate(
    x: &DMatrix<f64>,
    y: &[f64],
    family: Family,
    penalty: &PenaltySpec,
    cfg: &FitConfig,
) -> Result<CvFit> {
    cfg.validate()?;
    penalty.validate(x.ncols())?;
    check_response(y, family, x.nrows())?;
    let n = x.nrows();
    let k = cfg.cv_folds;
    if n < k {
        return Err(Error::InsufficientData(format!("{n} rows for {k}-fold cross-validation")));
    }
    let mut fold_seed = cfg.cv_seed;
    let mut fold = fold_assignment(n, k, fold_seed);
    if family == Family::Logistic && !training_has_both_classes(y, &fold, k) {
        fold_seed = cfg.cv_seed.wrapping_add(1);
        fold = fold_assignment(n, k, fold_seed);
        if !training_has_both_classes(y, &fold, k) {
            return Err(Error::SingleClassFold(fold_seed));
        }
    }

    let design = Design::new(x);
    let lambdas = grid_for(&design, y, family, penalty, cfg);
    let full_path = fit_path_prepared(&design, y, family, penalty, cfg, &lambdas);

    // folds reuse the (possibly truncated) full-data grid, as given values
    let lambdas = lambdas[..full_path.len()].to_vec();
    let explicit = cfg.with_grid(LambdaGrid::Explicit(lambdas.clone()));
    let mut usable = full_path.len();
    let mut fold_losses: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut fold_sizes = Vec::with_capacity(k);
    for f in 0..k {
        let train: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| fold[i] == f).collect();
        let xt = select_rows(x, &train);
        let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let xv = select_rows(x, &test);
        let path = fit_path_prepared(&Design::new(&xt), &yt, family, penalty, &explicit, &lambdas);
        usable = usable.min(path.len());
        let losses = path
            .iter()
            .map(|m| {
                let pred = m.predict(&xv);
                test.iter().zip(pred).map(|(&i, p)| loss(family, y[i], p)).sum::<f64>() / test.len() as f64
            })
            .collect();
        fold_losses.push(losses);
        fold_sizes.push(test.len() as f64);
    }

    let total: f64 = fold_sizes.iter().sum();
    let mut cvm = Vec::with_capacity(usable);
    let mut cvsd = Vec::with_capacity(usable);
    for l in 0..usable {
        let m = fold_losses.iter().zip(&fold_sizes).map(|(fl, w)| fl[l] * w).sum::<f64>() / total;
        let v = fold_losses.iter().zip(&fold_sizes).map(|(fl, w)| w * (fl[l] - m).powi(2)).sum::<f64>()
            / total
            / (k as f64 - 1.0);
        cvm.push(m);
        cvsd.push(v.sqrt());
    }
    // first index wins ties, i.e. the larger λ
    let index_min = (0..usable).fold(0, |best, l| if cvm[l] < cvm[best] { l } else { best });
    let bound = cvm[index_min] + cvsd[index_min];
    let index_1se = (0..usable).find(|&l| cvm[l] <= bound).unwrap_or(index_min);
    let selected_index = match cfg.lambda_rule {
        LambdaRule::Min => index_min,
        LambdaRule::OneSe => index_1se,
    };
    let lambdas = lambdas[..usable].to_vec();
    Ok(CvFit {
        model: full_path[selected_index].clone(),
        lambdas,
        cvm,
        cvsd,
        index_min,
        index_1se,
        selected_index,
        fold_seed,
    })
}
