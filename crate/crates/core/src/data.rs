//! Dataset representation, CSV ingestion, the rare-binary filter and
//! column standardization.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Binary,
}

/// Covariates, binary treatment and outcome for `n` units.
///
/// `x` is stored column-major (n rows, p columns); `z` holds 0.0/1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub col_names: Vec<String>,
    pub col_kinds: Vec<ColumnKind>,
}

impl Dataset {
    /// Builds a dataset, inferring column kinds from the data.
    pub fn new(x: DMatrix<f64>, z: Vec<f64>, y: Vec<f64>, col_names: Vec<String>) -> Result<Self> {
        let col_kinds = (0..x.ncols()).map(|j| infer_kind(x.column(j).iter().copied())).collect();
        Self::with_kinds(x, z, y, col_names, col_kinds)
    }

    pub fn with_kinds(
        x: DMatrix<f64>,
        z: Vec<f64>,
        y: Vec<f64>,
        col_names: Vec<String>,
        col_kinds: Vec<ColumnKind>,
    ) -> Result<Self> {
        let n = x.nrows();
        if z.len() != n || y.len() != n {
            return Err(Error::Dimension(format!(
                "x has {n} rows, z has {}, y has {}",
                z.len(),
                y.len()
            )));
        }
        if n < 2 {
            return Err(Error::EmptyData(format!("need at least 2 rows, got {n}")));
        }
        if col_names.len() != x.ncols() || col_kinds.len() != x.ncols() {
            return Err(Error::Dimension("column metadata length differs from p".into()));
        }
        if let Some(v) = z.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::TreatmentNotBinary { column: "z".into(), value: v.to_string() });
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite value in x or y".into()));
        }
        Ok(Self { x, z, y, col_names, col_kinds })
    }

    /// Dataset with generic column names `x1..xp`.
    pub fn unnamed(x: DMatrix<f64>, z: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(x, z, y, names)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_treated(&self) -> usize {
        self.z.iter().filter(|&&v| v == 1.0).count()
    }

    /// Row indices of the arm with treatment value `arm`.
    pub fn arm_rows(&self, arm: bool) -> Vec<usize> {
        let target = if arm { 1.0 } else { 0.0 };
        (0..self.n()).filter(|&i| self.z[i] == target).collect()
    }

    pub fn check_both_arms(&self) -> Result<()> {
        let t = self.n_treated();
        if t == 0 || t == self.n() {
            return Err(Error::OneArm);
        }
        Ok(())
    }

    /// New dataset made of the given rows (repeats allowed).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: select_rows(&self.x, rows),
            z: rows.iter().map(|&i| self.z[i]).collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            col_names: self.col_names.clone(),
            col_kinds: self.col_kinds.clone(),
        }
    }

    /// New dataset keeping only the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        Dataset {
            x: select_columns(&self.x, cols),
            z: self.z.clone(),
            y: self.y.clone(),
            col_names: cols.iter().map(|&j| self.col_names[j].clone()).collect(),
            col_kinds: cols.iter().map(|&j| self.col_kinds[j]).collect(),
        }
    }

    /// Same dataset with the covariates replaced (used after standardization).
    pub fn with_x(&self, x: DMatrix<f64>) -> Dataset {
        assert_eq!(x.shape(), self.x.shape());
        Dataset { x, ..self.clone() }
    }
}

pub fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

pub fn select_columns(x: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), cols.len(), |i, j| x[(i, cols[j])])
}

fn infer_kind(values: impl Iterator<Item = f64>) -> ColumnKind {
    let mut distinct: Vec<f64> = Vec::with_capacity(3);
    for v in values {
        if !distinct.contains(&v) {
            distinct.push(v);
            if distinct.len() > 2 {
                return ColumnKind::Continuous;
            }
        }
    }
    if distinct.len() == 2 {
        ColumnKind::Binary
    } else {
        ColumnKind::Continuous
    }
}

/// Which columns of the CSV become covariates.
#[derive(Debug, Clone)]
pub enum CovariateSelection {
    AllRemaining,
    Named(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    /// Rows dropped because the outcome was missing.
    pub rows_dropped: usize,
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c == "NA"
}

/// Reads a header-first CSV. Rows with a missing outcome are dropped and
/// counted; missing treatment or covariate values are errors.
pub fn load_csv(
    path: impl AsRef<Path>,
    outcome_col: &str,
    treatment_col: &str,
    covariates: &CovariateSelection,
) -> Result<LoadedData> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let y_idx = find(outcome_col)?;
    let z_idx = find(treatment_col)?;
    let cov_idx: Vec<usize> = match covariates {
        CovariateSelection::AllRemaining => {
            (0..headers.len()).filter(|&j| j != y_idx && j != z_idx).collect()
        }
        CovariateSelection::Named(names) => {
            names.iter().map(|n| find(n)).collect::<Result<Vec<_>>>()?
        }
    };

    let mut y = Vec::new();
    let mut z = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dropped = 0usize;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let cell = |j: usize| record.get(j).unwrap_or("");
        let y_cell = cell(y_idx);
        if is_missing(y_cell) {
            dropped += 1;
            continue;
        }
        let yv: f64 = y_cell
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("non-numeric outcome at data row {}", r + 1)))?;
        let z_cell = cell(z_idx).trim();
        let zv = match z_cell.parse::<f64>() {
            Ok(v) if v == 0.0 || v == 1.0 => v,
            _ => {
                return Err(Error::TreatmentNotBinary {
                    column: treatment_col.to_string(),
                    value: z_cell.to_string(),
                })
            }
        };
        let mut row = Vec::with_capacity(cov_idx.len());
        for &j in &cov_idx {
            let c = cell(j);
            let v = if is_missing(c) { None } else { c.trim().parse::<f64>().ok().filter(|v| v.is_finite()) };
            match v {
                Some(v) => row.push(v),
                None => {
                    return Err(Error::MissingCovariate { column: headers[j].clone(), row: r + 1 })
                }
            }
        }
        y.push(yv);
        z.push(zv);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyData("no usable rows".into()));
    }
    let p = cov_idx.len();
    let x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    let names = cov_idx.iter().map(|&j| headers[j].clone()).collect();
    Ok(LoadedData { dataset: Dataset::new(x, z, y, names)?, rows_dropped: dropped })
}

/// Removes binary covariates whose minority category has proportion strictly
/// below `min_minority_prop`. Returns the filtered dataset and removed names.
pub fn filter_rare_binaries(d: &Dataset, min_minority_prop: f64) -> (Dataset, Vec<String>) {
    let n = d.n() as f64;
    let mut keep = Vec::new();
    let mut removed = Vec::new();
    for j in 0..d.p() {
        if d.col_kinds[j] == ColumnKind::Binary {
            let col = d.x.column(j);
            let first = col[0];
            let count_first = col.iter().filter(|&&v| v == first).count() as f64;
            let minority = count_first.min(n - count_first) / n;
            if minority < min_minority_prop {
                removed.push(d.col_names[j].clone());
                continue;
            }
        }
        keep.push(j);
    }
    (d.select_columns(&keep), removed)
}

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl StandardizationParams {
    /// Computes means and sds; columns with zero sd keep `sd = 0`.
    pub fn compute(x: &DMatrix<f64>) -> Self {
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut sd = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            mean.push(m);
            sd.push(var.sqrt());
        }
        Self { mean, sd }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.mean[j]) / self.sd[j])
    }

    pub fn destandardize_column(&self, j: usize, column: &[f64]) -> Vec<f64> {
        column.iter().map(|v| v * self.sd[j] + self.mean[j]).collect()
    }

    /// Maps standardized-scale slopes and intercept back to the raw scale.
    pub fn coef_to_original(&self, intercept: f64, coef: &[f64]) -> (f64, Vec<f64>) {
        let mut b0 = intercept;
        let raw: Vec<f64> = coef
            .iter()
            .enumerate()
            .map(|(j, &b)| {
                if b == 0.0 || self.sd[j] == 0.0 {
                    0.0
                } else {
                    let r = b / self.sd[j];
                    b0 -= r * self.mean[j];
                    r
                }
            })
            .collect();
        (b0, raw)
    }
}

/// Z-scores every column, zeroing constant ones instead of failing. The
/// returned mask marks the columns that carried variation.
pub fn zscore_columns(x: &DMatrix<f64>) -> (DMatrix<f64>, Vec<bool>) {
    let params = StandardizationParams::compute(x);
    let usable: Vec<bool> =
        params.sd.iter().zip(&params.mean).map(|(s, m)| *s > 1e-12 * (1.0 + m.abs())).collect();
    let xs = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        if usable[j] {
            (x[(i, j)] - params.mean[j]) / params.sd[j]
        } else {
            0.0
        }
    });
    (xs, usable)
}

/// Z-scores every covariate (population sd). Constant columns are an error.
pub fn standardize(d: &Dataset) -> Result<(DMatrix<f64>, StandardizationParams)> {
    let params = StandardizationParams::compute(&d.x);
    for (j, &s) in params.sd.iter().enumerate() {
        if !(s > 1e-14 * (1.0 + params.mean[j].abs())) {
            return Err(Error::ConstantColumn(d.col_names[j].clone()));
        }
    }
    Ok((params.apply(&d.x), params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn drops_rows_with_missing_outcome() {
        let f = write_csv("y,z,x1\n1,0,0.5\n2,1,0.7\nNA,1,0.1\n");
        let loaded = load_csv(f.path(), "y", "z", &CovariateSelection::AllRemaining).unwrap();
        assert_eq!(loaded.dataset.n(), 2);
        assert_eq!(loaded.rows_dropped, 1);
    }

    #[test]
    fn remaining_columns_keep_file_order() {
        let f = write_csv("y,z,x1,x2\n1,0,3,4\n2,1,5,6\n");
        let d = load_csv(f.path(), "y", "z", &CovariateSelection::AllRemaining).unwrap().dataset;
        assert_eq!(d.col_names, vec!["x1", "x2"]);
        assert_eq!(d.x[(1, 1)], 6.0);
    }

    #[test]
    fn rejects_non_binary_treatment() {
        let f = write_csv("y,z,x1\n1,0,3\n2,2,5\n");
        let err = load_csv(f.path(), "y", "z", &CovariateSelection::AllRemaining).unwrap_err();
        assert!(matches!(err, Error::TreatmentNotBinary { .. }));
        assert!(err.to_string().contains("treatment not binary"));
    }

    #[test]
    fn missing_column_is_named() {
        let f = write_csv("y,z\n1,0\n2,1\n");
        let err = load_csv(f.path(), "y", "treat", &CovariateSelection::AllRemaining).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "treat"));
    }

    #[test]
    fn empty_data_is_an_error() {
        let f = write_csv("y,z,x1\n");
        let err = load_csv(f.path(), "y", "z", &CovariateSelection::AllRemaining).unwrap_err();
        assert!(matches!(err, Error::EmptyData(_)));
    }

    #[test]
    fn missing_covariate_rejected() {
        let f = write_csv("y,z,x1\n1,0,\n2,1,5\n");
        let err = load_csv(f.path(), "y", "z", &CovariateSelection::AllRemaining).unwrap_err();
        assert!(matches!(err, Error::MissingCovariate { .. }));
    }

    #[test]
    fn kinds_inferred() {
        let f = write_csv("y,z,a,b\n1,0,1,0.1\n2,1,2,0.2\n3,1,1,0.3\n");
        let d = load_csv(f.path(), "y", "z", &CovariateSelection::AllRemaining).unwrap().dataset;
        assert_eq!(d.col_kinds, vec![ColumnKind::Binary, ColumnKind::Continuous]);
    }

    fn binary_dataset(minority: usize, n: usize) -> Dataset {
        let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { (i < minority) as u8 as f64 } else { (i as f64).powi(3) });
        let z = (0..n).map(|i| (i % 2) as f64).collect();
        let y = vec![0.0; n];
        Dataset::unnamed(x, z, y).unwrap()
    }

    #[test]
    fn rare_binary_removed() {
        let (d, removed) = filter_rare_binaries(&binary_dataset(2, 1000), 0.005);
        assert_eq!(removed, vec!["x1"]);
        assert_eq!(d.p(), 1);
        assert_eq!(d.col_names, vec!["x2"]);
    }

    #[test]
    fn boundary_binary_kept() {
        let (d, removed) = filter_rare_binaries(&binary_dataset(5, 1000), 0.005);
        assert!(removed.is_empty());
        assert_eq!(d.p(), 2);
    }

    #[test]
    fn filter_is_idempotent() {
        let (once, _) = filter_rare_binaries(&binary_dataset(2, 1000), 0.005);
        let (twice, removed) = filter_rare_binaries(&once, 0.005);
        assert!(removed.is_empty());
        assert_eq!(once, twice);
    }

    #[test]
    fn standardize_hand_example() {
        let d = Dataset::unnamed(DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]), vec![0.0, 1.0, 0.0], vec![0.0; 3])
            .unwrap();
        let (xs, params) = standardize(&d).unwrap();
        let s = (2.0f64 / 3.0).sqrt();
        assert!((params.mean[0] - 2.0).abs() < 1e-15);
        assert!((params.sd[0] - s).abs() < 1e-15);
        assert!((params.sd[0] - 0.8165).abs() < 1e-4);
        assert!((xs[(0, 0)] + 1.2247).abs() < 1e-4);
        assert!(xs[(1, 0)].abs() < 1e-15);
        assert!((xs[(2, 0)] - 1.0 / s).abs() < 1e-12);
    }

    #[test]
    fn constant_column_rejected() {
        let d = Dataset::unnamed(DMatrix::from_column_slice(3, 1, &[5.0, 5.0, 5.0]), vec![0.0, 1.0, 0.0], vec![0.0; 3])
            .unwrap();
        assert!(matches!(standardize(&d), Err(Error::ConstantColumn(ref c)) if c == "x1"));
    }

    proptest::proptest! {
        #[test]
        fn standardize_idempotent_and_invertible(col in proptest::collection::vec(-100.0f64..100.0, 3..40)) {
            let n = col.len();
            let mean = col.iter().sum::<f64>() / n as f64;
            proptest::prop_assume!(col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64) > 1e-6);
            let d = Dataset::unnamed(DMatrix::from_column_slice(n, 1, &col), (0..n).map(|i| (i % 2) as f64).collect(), vec![0.0; n]).unwrap();
            let (xs, params) = standardize(&d).unwrap();
            let (xs2, _) = standardize(&d.with_x(xs.clone())).unwrap();
            for i in 0..n {
                proptest::prop_assert!((xs[(i, 0)] - xs2[(i, 0)]).abs() < 1e-12);
            }
            let back = params.destandardize_column(0, xs.column(0).as_slice());
            for i in 0..n {
                proptest::prop_assert!((back[i] - col[i]).abs() < 1e-10);
            }
        }
    }
}
