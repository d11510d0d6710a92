//! Result files, table rendering and boxplot summaries. CSVs carry full
//! precision; rounding happens only when rendering.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::is_extreme;
use crate::simulation::ScenarioResult;

pub const RESULTS_COLUMNS: [&str; 13] = [
    "scenario_id",
    "n",
    "p",
    "rho",
    "confounding",
    "covariate_type",
    "misspec",
    "estimator",
    "bias",
    "se",
    "rmse",
    "n_valid",
    "n_extreme",
];

pub const ESTIMATES_COLUMNS: [&str; 5] = ["scenario_id", "rep", "estimator", "theta_hat", "extreme"];

/// Decimal places used by every rendered table.
pub const DISPLAY_DIGITS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario_id: String,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub confounding: String,
    pub covariate_type: String,
    pub misspec: String,
    pub estimator: String,
    /// Empty cells mark the sentinel.
    pub bias: Option<f64>,
    pub se: Option<f64>,
    pub rmse: Option<f64>,
    pub n_valid: usize,
    pub n_extreme: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub scenario_id: String,
    pub rep: usize,
    pub estimator: String,
    /// Empty when the estimator failed on this replication.
    pub theta_hat: Option<f64>,
    pub extreme: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotRow {
    pub scenario_id: String,
    pub estimator: String,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// Rounds the shortest round-trip decimal form of `v` to `digits` places,
/// breaking exact ties toward the even digit (0.7295 → "0.730").
pub fn round_half_even(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let repr = format!("{}", v.abs());
    let (int_part, frac_part) = repr.split_once('.').unwrap_or((&repr, ""));
    let mut kept: Vec<u8> = int_part.bytes().chain(frac_part.bytes().chain(std::iter::repeat(b'0')).take(digits)).collect();
    let rest = frac_part.as_bytes().get(digits..).unwrap_or(&[]);
    let round_up = match rest.first() {
        None => false,
        Some(&d) if d > b'5' => true,
        Some(&d) if d < b'5' => false,
        Some(_) => rest[1..].iter().any(|&d| d != b'0') || (kept.last().copied().unwrap_or(b'0') - b'0') % 2 == 1,
    };
    if round_up {
        let mut i = kept.len();
        loop {
            if i == 0 {
                kept.insert(0, b'1');
                break;
            }
            i -= 1;
            if kept[i] == b'9' {
                kept[i] = b'0';
            } else {
                kept[i] += 1;
                break;
            }
        }
    }
    let split = kept.len() - digits;
    let (ip, fp) = kept.split_at(split);
    let ip = std::str::from_utf8(ip).expect("ascii digits");
    let fp = std::str::from_utf8(fp).expect("ascii digits");
    let body = if digits == 0 { ip.to_string() } else { format!("{ip}.{fp}") };
    let nonzero = kept.iter().any(|&d| d != b'0');
    if v < 0.0 && nonzero {
        format!("-{body}")
    } else {
        body
    }
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn display_cell(v: Option<f64>) -> String {
    v.map(|x| round_half_even(x, DISPLAY_DIGITS)).unwrap_or_else(|| "-".into())
}

pub fn result_rows(results: &[ScenarioResult]) -> Vec<ResultRow> {
    results
        .iter()
        .flat_map(|r| {
            let c = &r.config;
            r.metrics.iter().map(move |m| ResultRow {
                scenario_id: c.id(),
                n: c.n,
                p: c.p,
                rho: c.rho,
                confounding: c.confounding.to_string(),
                covariate_type: c.covariate_type.to_string(),
                misspec: c.misspec.to_string(),
                estimator: m.estimator.to_string(),
                bias: m.bias,
                se: m.se,
                rmse: m.rmse,
                n_valid: m.n_valid,
                n_extreme: m.n_extreme,
            })
        })
        .collect()
}

pub fn estimate_rows(results: &[ScenarioResult]) -> Vec<EstimateRow> {
    results
        .iter()
        .flat_map(|r| {
            let id = r.config.id();
            r.replications.iter().flat_map(move |rep| {
                let id = id.clone();
                rep.entries.iter().map(move |e| EstimateRow {
                    scenario_id: id.clone(),
                    rep: rep.rep,
                    estimator: e.estimator.to_string(),
                    theta_hat: e.theta_hat,
                    extreme: e.extreme,
                })
            })
        })
        .collect()
}

pub fn write_results<W: Write>(w: W, rows: &[ResultRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RESULTS_COLUMNS)?;
    for r in rows {
        out.write_record([
            r.scenario_id.clone(),
            r.n.to_string(),
            r.p.to_string(),
            r.rho.to_string(),
            r.confounding.clone(),
            r.covariate_type.clone(),
            r.misspec.clone(),
            r.estimator.clone(),
            fmt_cell(r.bias),
            fmt_cell(r.se),
            fmt_cell(r.rmse),
            r.n_valid.to_string(),
            r.n_extreme.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_estimates<W: Write>(w: W, rows: &[EstimateRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(ESTIMATES_COLUMNS)?;
    for r in rows {
        out.write_record([
            r.scenario_id.clone(),
            r.rep.to_string(),
            r.estimator.clone(),
            fmt_cell(r.theta_hat),
            r.extreme.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_boxplot<W: Write>(w: W, rows: &[BoxplotRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["scenario_id", "estimator", "n", "min", "q1", "median", "q3", "max", "mean"])?;
    for r in rows {
        out.write_record([
            r.scenario_id.clone(),
            r.estimator.clone(),
            r.n.to_string(),
            r.min.to_string(),
            r.q1.to_string(),
            r.median.to_string(),
            r.q3.to_string(),
            r.max.to_string(),
            r.mean.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn read_rows<T: DeserializeOwned, R: Read>(r: R, required: &[&str]) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(missing) = required.iter().find(|c| !headers.iter().any(|h| h.trim() == **c)) {
        return Err(Error::Schema(missing.to_string()));
    }
    reader.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Reads a results file; an empty file is an empty report.
pub fn read_results<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    read_rows(r, &RESULTS_COLUMNS)
}

pub fn read_estimates<R: Read>(r: R) -> Result<Vec<EstimateRow>> {
    read_rows(r, &ESTIMATES_COLUMNS)
}

/// Linear-interpolation quantile of sorted data (the default sample
/// quantile of most statistics packages).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per scenario and estimator: quantiles and mean of the valid estimates.
/// Groups keep their first-appearance order; groups with no valid estimate
/// are omitted.
pub fn boxplot_rows(rows: &[EstimateRow]) -> Vec<BoxplotRow> {
    let mut groups: Vec<((String, String), Vec<f64>)> = Vec::new();
    for r in rows {
        let key = (r.scenario_id.clone(), r.estimator.clone());
        let pos = match groups.iter().position(|(k, _)| *k == key) {
            Some(i) => i,
            None => {
                groups.push((key, Vec::new()));
                groups.len() - 1
            }
        };
        if let Some(t) = r.theta_hat.filter(|t| !r.extreme && !is_extreme(*t)) {
            groups[pos].1.push(t);
        }
    }
    groups
        .into_iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|((scenario_id, estimator), mut v)| {
            v.sort_by(f64::total_cmp);
            BoxplotRow {
                scenario_id,
                estimator,
                n: v.len(),
                min: v[0],
                q1: quantile_sorted(&v, 0.25),
                median: quantile_sorted(&v, 0.5),
                q3: quantile_sorted(&v, 0.75),
                max: v[v.len() - 1],
                mean: v.iter().sum::<f64>() / v.len() as f64,
            }
        })
        .collect()
}

fn pad_table(header: &[&str], body: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in body {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let parts: Vec<String> = cells
            .iter()
            .zip(&width)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    for row in body {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

/// Renders results rounded to three decimals. The sentinel shows as `-`
/// in tables and as an empty cell or null elsewhere.
pub fn render_results(rows: &[ResultRow], format: Format) -> Result<String> {
    match format {
        Format::Table => {
            let mut out = String::new();
            let mut start = 0;
            while start < rows.len() {
                let id = &rows[start].scenario_id;
                let end = start + rows[start..].iter().take_while(|r| &r.scenario_id == id).count();
                let body: Vec<Vec<String>> = rows[start..end]
                    .iter()
                    .map(|r| {
                        vec![
                            r.estimator.clone(),
                            display_cell(r.bias),
                            display_cell(r.se),
                            display_cell(r.rmse),
                            r.n_valid.to_string(),
                            r.n_extreme.to_string(),
                        ]
                    })
                    .collect();
                if start > 0 {
                    out.push('\n');
                }
                out.push_str(&format!("# {id}\n"));
                out.push_str(&pad_table(&["Estimator", "Bias", "SE", "RMSE", "n_valid", "n_extreme"], &body));
                start = end;
            }
            Ok(out)
        }
        Format::Csv => {
            let mut buf = Vec::new();
            {
                let mut w = csv::Writer::from_writer(&mut buf);
                w.write_record(RESULTS_COLUMNS)?;
                for r in rows {
                    let cell = |v: Option<f64>| v.map(|x| round_half_even(x, DISPLAY_DIGITS)).unwrap_or_default();
                    w.write_record([
                        r.scenario_id.clone(),
                        r.n.to_string(),
                        r.p.to_string(),
                        r.rho.to_string(),
                        r.confounding.clone(),
                        r.covariate_type.clone(),
                        r.misspec.clone(),
                        r.estimator.clone(),
                        cell(r.bias),
                        cell(r.se),
                        cell(r.rmse),
                        r.n_valid.to_string(),
                        r.n_extreme.to_string(),
                    ])?;
                }
                w.flush()?;
            }
            Ok(String::from_utf8(buf).expect("csv output is utf-8"))
        }
        Format::Json => {
            let rounded = |v: Option<f64>| -> serde_json::Value {
                v.and_then(|x| round_half_even(x, DISPLAY_DIGITS).parse::<f64>().ok())
                    .map(serde_json::Value::from)
                    .unwrap_or(serde_json::Value::Null)
            };
            let arr: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "scenario_id": r.scenario_id,
                        "n": r.n,
                        "p": r.p,
                        "rho": r.rho,
                        "confounding": r.confounding,
                        "covariate_type": r.covariate_type,
                        "misspec": r.misspec,
                        "estimator": r.estimator,
                        "bias": rounded(r.bias),
                        "se": rounded(r.se),
                        "rmse": rounded(r.rmse),
                        "n_valid": r.n_valid,
                        "n_extreme": r.n_extreme,
                    })
                })
                .collect();
            Ok(serde_json::to_string_pretty(&arr).expect("json values serialize") + "\n")
        }
    }
}

/// One line of a dataset analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub estimator: String,
    pub ate: Option<f64>,
    pub se: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub b_valid: usize,
    pub error: Option<String>,
}

/// Table with the columns Estimator, ATE, Standard error, 95% CI.
pub fn render_analysis(rows: &[AnalysisRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let ci = match (r.ci_low, r.ci_high) {
                (Some(l), Some(h)) => {
                    format!("({}, {})", round_half_even(l, DISPLAY_DIGITS), round_half_even(h, DISPLAY_DIGITS))
                }
                _ => "-".into(),
            };
            vec![r.estimator.clone(), display_cell(r.ate), display_cell(r.se), ci]
        })
        .collect();
    pad_table(&["Estimator", "ATE", "Standard error", "95% CI"], &body)
}

pub fn write_analysis_csv<W: Write>(w: W, rows: &[AnalysisRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["estimator", "ate", "se", "ci_low", "ci_high", "b_valid", "error"])?;
    for r in rows {
        out.write_record([
            r.estimator.clone(),
            fmt_cell(r.ate),
            fmt_cell(r.se),
            fmt_cell(r.ci_low),
            fmt_cell(r.ci_high),
            r.b_valid.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_even_rounding() {
        assert_eq!(round_half_even(0.7295, 3), "0.730");
        assert_eq!(round_half_even(0.7285, 3), "0.728");
        assert_eq!(round_half_even(0.72851, 3), "0.729");
        assert_eq!(round_half_even(0.0005, 3), "0.000");
        assert_eq!(round_half_even(0.0015, 3), "0.002");
        assert_eq!(round_half_even(-0.0004, 3), "0.000");
        assert_eq!(round_half_even(-0.161, 3), "-0.161");
        assert_eq!(round_half_even(9.9996, 3), "10.000");
        assert_eq!(round_half_even(2.0, 3), "2.000");
        assert_eq!(round_half_even(1e-7, 3), "0.000");
        assert_eq!(round_half_even(123.4, 0), "123");
    }

    #[test]
    fn rendered_cells_match_rounded_full_precision() {
        for v in [0.1234567, -3.0005, 0.7295, 12.34449, 1e-9] {
            let s = round_half_even(v, 3);
            let back: f64 = s.parse().unwrap();
            assert!((back - v).abs() <= 0.0005 + 1e-12, "{v} -> {s}");
        }
    }

    fn row(est: &str, bias: Option<f64>) -> ResultRow {
        ResultRow {
            scenario_id: "s".into(),
            n: 200,
            p: 80,
            rho: 0.0,
            confounding: "strong".into(),
            covariate_type: "continuous".into(),
            misspec: "none".into(),
            estimator: est.into(),
            bias,
            se: bias.map(|_| 0.223),
            rmse: bias.map(|b| b.hypot(0.223)),
            n_valid: 10,
            n_extreme: if bias.is_none() { 3 } else { 0 },
        }
    }

    #[test]
    fn results_round_trip_with_sentinel() {
        let rows = vec![row("naive", Some(0.1 + 0.2)), row("AIPW-Farrell", None)];
        let mut buf = Vec::new();
        write_results(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(2).unwrap().contains("AIPW-Farrell,,,,10,3"));
        assert_eq!(read_results(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn missing_column_is_named() {
        let text = "scenario_id,n,p,rho,confounding,covariate_type,misspec,estimator,bias,se,n_valid,n_extreme\n";
        match read_results(text.as_bytes()) {
            Err(Error::Schema(c)) => assert_eq!(c, "rmse"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_empty_report() {
        let rows = read_results("".as_bytes()).unwrap();
        assert!(rows.is_empty());
        assert_eq!(render_results(&rows, Format::Table).unwrap(), "");
        assert_eq!(render_results(&rows, Format::Json).unwrap().trim(), "[]");
        assert_eq!(render_results(&rows, Format::Csv).unwrap().lines().count(), 1);
    }

    #[test]
    fn table_shows_sentinel_as_hyphen() {
        let t = render_results(&[row("naive", Some(0.7295)), row("AIPW-Farrell", None)], Format::Table).unwrap();
        assert!(t.contains("0.730"));
        let farrell = t.lines().find(|l| l.starts_with("AIPW-Farrell")).unwrap();
        assert_eq!(farrell.split_whitespace().nth(1), Some("-"));
    }

    #[test]
    fn json_uses_null_for_sentinel() {
        let j = render_results(&[row("AIPW-Farrell", None)], Format::Json).unwrap();
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert!(v[0]["bias"].is_null());
    }

    #[test]
    fn boxplot_quantiles() {
        let rows: Vec<EstimateRow> = [1.0, 2.0, 3.0, 4.0, 5.0, 1e9]
            .iter()
            .enumerate()
            .map(|(i, &t)| EstimateRow {
                scenario_id: "s".into(),
                rep: i,
                estimator: "naive".into(),
                theta_hat: Some(t),
                extreme: is_extreme(t),
            })
            .collect();
        let b = boxplot_rows(&rows);
        assert_eq!(b.len(), 1);
        let b = &b[0];
        assert_eq!((b.n, b.min, b.q1, b.median, b.q3, b.max, b.mean), (5, 1.0, 2.0, 3.0, 4.0, 5.0, 3.0));
    }

    #[test]
    fn quantile_interpolates() {
        let v = [0.0, 10.0];
        assert_eq!(quantile_sorted(&v, 0.25), 2.5);
        assert_eq!(quantile_sorted(&[7.0], 0.75), 7.0);
    }

    #[test]
    fn analysis_table_layout() {
        let r = AnalysisRow {
            estimator: "naive".into(),
            ate: Some(0.213),
            se: Some(0.027),
            ci_low: Some(0.213 - 1.959964 * 0.027),
            ci_high: Some(0.213 + 1.959964 * 0.027),
            b_valid: 1000,
            error: None,
        };
        let t = render_analysis(&[r]);
        let mut lines = t.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("Estimator") && header.contains("Standard error") && header.ends_with("95% CI"));
        assert!(lines.next().unwrap().ends_with("(0.160, 0.266)"));
    }
}
