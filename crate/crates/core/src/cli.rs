//! Command-line entry points: `simulate`, `analyze`, `report` and
//! `example-data`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::data::{filter_rare_binaries, load_csv, CovariateSelection};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, EstimatorId, EstimatorSpec};
use crate::inference::bootstrap_many;
use crate::oal::{GammaRule, OalCriterion};
use crate::penreg::LambdaRule;
use crate::report::{self, AnalysisRow, Format};
use crate::simulation::example_data::{write_example_csv, EXAMPLE_ROWS, EXAMPLE_SEED};
use crate::simulation::{
    paper_grid, run_scenario, Confounding, CovariateType, Misspec, ScenarioConfig, ScenarioResult,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;

/// Binary covariates whose minority share is below this are dropped.
pub const RARE_BINARY_THRESHOLD: f64 = 0.005;

#[derive(Debug, Parser)]
#[command(name = "aipw-oal", version, about = "Penalized doubly robust ATE estimation and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run Monte Carlo scenarios and write results.csv, estimates.csv and manifest.json.
    Simulate(SimulateArgs),
    /// Estimate the ATE on a CSV dataset with bootstrap confidence intervals.
    Analyze(AnalyzeArgs),
    /// Render results.csv as a rounded table, CSV or JSON.
    Report(ReportArgs),
    /// Write the bundled synthetic observational dataset.
    ExampleData(ExampleDataArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML scenario file, or a manifest.json from an earlier run.
    #[arg(long, conflicts_with = "paper_grid")]
    pub config: Option<PathBuf>,
    /// Run the 72 published settings.
    #[arg(long)]
    pub paper_grid: bool,
    /// Replications per scenario (overrides the config).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Base seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub outcome: String,
    #[arg(long)]
    pub treatment: String,
    /// Comma-separated estimator names; defaults to every estimator usable on real data.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Clip propensity scores to [clip, 1 - clip]; off by default.
    #[arg(long)]
    pub clip: Option<f64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output file; `.json` writes JSON, anything else CSV. A manifest is
    /// written next to it with `.manifest.json` appended.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write per-estimator quantiles of the replication estimates here.
    #[arg(long)]
    pub boxplot_data: Option<PathBuf>,
    /// Estimates file for --boxplot-data; defaults to estimates.csv next to --in.
    #[arg(long)]
    pub estimates: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExampleDataArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = EXAMPLE_ROWS)]
    pub rows: usize,
    #[arg(long, default_value_t = EXAMPLE_SEED)]
    pub seed: u64,
}

/// Estimator tuning exposed in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningConfig {
    #[serde(default = "default_lambda_rule")]
    pub lambda_rule: LambdaRule,
    #[serde(default = "default_cv_folds")]
    pub cv_folds: usize,
    #[serde(default = "default_oal_criterion")]
    pub oal_criterion: OalCriterion,
    #[serde(default = "default_gamma_rule")]
    pub oal_gamma_rule: GammaRule,
    #[serde(default = "default_oal_gamma")]
    pub oal_gamma: f64,
}

fn default_lambda_rule() -> LambdaRule {
    EstimatorConfig::default().fit.lambda_rule
}
fn default_cv_folds() -> usize {
    EstimatorConfig::default().fit.cv_folds
}
fn default_oal_criterion() -> OalCriterion {
    EstimatorConfig::default().oal.criterion
}
fn default_gamma_rule() -> GammaRule {
    EstimatorConfig::default().oal.gamma_rule
}
fn default_oal_gamma() -> f64 {
    EstimatorConfig::default().oal.gamma
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            lambda_rule: default_lambda_rule(),
            cv_folds: default_cv_folds(),
            oal_criterion: default_oal_criterion(),
            oal_gamma_rule: default_gamma_rule(),
            oal_gamma: default_oal_gamma(),
        }
    }
}

impl TuningConfig {
    pub fn estimator_config(&self) -> EstimatorConfig {
        let mut cfg = EstimatorConfig::default();
        cfg.fit.lambda_rule = self.lambda_rule;
        cfg.fit.cv_folds = self.cv_folds;
        cfg.oal.criterion = self.oal_criterion;
        cfg.oal.gamma_rule = self.oal_gamma_rule;
        cfg.oal.gamma = self.oal_gamma;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub rho: f64,
    pub confounding: Confounding,
    pub covariate_type: CovariateType,
    pub misspec: Misspec,
    /// Overrides the file-level `reps`.
    #[serde(default)]
    pub reps: Option<usize>,
    /// Estimator names; all thirteen when omitted.
    #[serde(default)]
    pub estimators: Option<Vec<EstimatorId>>,
}

/// Parsed simulation config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationFile {
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tuning: TuningConfig,
    #[serde(default)]
    pub scenario: Vec<ScenarioEntry>,
}

fn default_reps() -> usize {
    1000
}

impl SimulationFile {
    pub fn parse_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn scenarios(&self) -> Vec<ScenarioConfig> {
        self.scenario
            .iter()
            .map(|s| {
                let cfg = ScenarioConfig::new(
                    s.n,
                    s.p,
                    s.rho,
                    s.confounding,
                    s.covariate_type,
                    s.misspec,
                    s.reps.unwrap_or(self.reps),
                    self.seed,
                );
                match &s.estimators {
                    Some(ids) => cfg.with_estimators(ids),
                    None => cfg,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioTiming {
    pub scenario_id: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub base_seed: u64,
    /// Fully resolved configuration; `simulate --config manifest.json` reruns it.
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub timing: Vec<ScenarioTiming>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, base_seed: u64, config: serde_json::Value) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            base_seed,
            config,
            outputs: Vec::new(),
            timing: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// Exit code for an error: configuration problems map to 2, data
/// problems to 3.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::UnknownEstimator(_)
        | Error::MissingKnownSets
        | Error::AdaptiveWeights { .. } => EXIT_CONFIG,
        _ => EXIT_DATA,
    }
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::Config("--jobs must be at least 1".into())),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn read_config(path: &Path) -> Result<SimulationFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let manifest: RunManifest =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_value(manifest.config).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    } else {
        SimulationFile::parse_toml(&text)
    }
}

fn paper_grid_file(reps: usize, seed: u64) -> SimulationFile {
    let scenario = paper_grid(reps, seed)
        .into_iter()
        .map(|c| ScenarioEntry {
            n: c.n,
            p: c.p,
            rho: c.rho,
            confounding: c.confounding,
            covariate_type: c.covariate_type,
            misspec: c.misspec,
            reps: None,
            estimators: None,
        })
        .collect();
    SimulationFile { reps, seed, tuning: TuningConfig::default(), scenario }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Vec<ScenarioResult>> {
    let mut file = match (&args.config, args.paper_grid) {
        (Some(path), _) => read_config(path)?,
        (None, true) => paper_grid_file(default_reps(), 0),
        (None, false) => return Err(Error::Config("pass --config or --paper-grid".into())),
    };
    if let Some(r) = args.reps {
        file.reps = r;
        for s in &mut file.scenario {
            s.reps = None;
        }
    }
    if let Some(s) = args.seed {
        file.seed = s;
    }
    if file.reps < 1 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    let scenarios = file.scenarios();
    if scenarios.is_empty() {
        return Err(Error::Config("no scenarios configured".into()));
    }
    for s in &scenarios {
        s.validate().map_err(|e| Error::Config(format!("{}: {e}", s.id())))?;
    }
    let est_cfg = file.tuning.estimator_config();
    let config_json = serde_json::to_value(&file).map_err(|e| Error::Config(e.to_string()))?;
    let mut manifest = RunManifest::new("simulate", file.seed, config_json);

    std::fs::create_dir_all(&args.out)?;
    let mut results = Vec::with_capacity(scenarios.len());
    for s in &scenarios {
        let start = Instant::now();
        let r = with_pool(args.jobs, || run_scenario(s, &est_cfg))??;
        manifest.timing.push(ScenarioTiming { scenario_id: s.id(), seconds: start.elapsed().as_secs_f64() });
        manifest.warnings.extend(r.warnings.iter().cloned());
        results.push(r);
    }

    let results_path = args.out.join("results.csv");
    let estimates_path = args.out.join("estimates.csv");
    report::write_results(BufWriter::new(File::create(&results_path)?), &report::result_rows(&results))?;
    report::write_estimates(BufWriter::new(File::create(&estimates_path)?), &report::estimate_rows(&results))?;
    manifest.outputs = vec!["results.csv".into(), "estimates.csv".into()];
    manifest.write(&args.out.join("manifest.json"))?;
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    Ok(results)
}

fn parse_estimators(names: &Option<Vec<String>>) -> Result<Vec<EstimatorId>> {
    let ids: Vec<EstimatorId> = match names {
        None => EstimatorId::ALL.iter().copied().filter(|id| !id.needs_known_sets()).collect(),
        Some(v) => v.iter().filter(|s| !s.trim().is_empty()).map(|s| s.parse()).collect::<Result<_>>()?,
    };
    if let Some(t) = ids.iter().find(|id| id.needs_known_sets()) {
        return Err(Error::Config(format!(
            "{t} needs the true confounder and outcome-predictor sets, which only exist in simulation"
        )));
    }
    if ids.is_empty() {
        return Err(Error::Config("no estimators requested".into()));
    }
    Ok(ids)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisOutput {
    pub rows_used: usize,
    pub rows_dropped: usize,
    pub removed_covariates: Vec<String>,
    pub estimates: Vec<AnalysisRow>,
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<AnalysisOutput> {
    let ids = parse_estimators(&args.estimators)?;
    if args.bootstrap < 2 {
        return Err(Error::Config(format!("--bootstrap must be at least 2, got {}", args.bootstrap)));
    }
    if let Some(c) = args.clip {
        if !(c > 0.0 && c < 0.5) {
            return Err(Error::Config(format!("--clip must lie in (0, 0.5), got {c}")));
        }
    }
    let loaded = load_csv(&args.data, &args.outcome, &args.treatment, &CovariateSelection::AllRemaining)?;
    let (d, removed) = filter_rare_binaries(&loaded.dataset, RARE_BINARY_THRESHOLD);
    d.check_both_arms()?;
    let specs: Vec<EstimatorSpec> =
        ids.iter().map(|&id| EstimatorSpec { ps_clip: args.clip, ..EstimatorSpec::new(id) }).collect();
    let cfg = EstimatorConfig::default();
    let results = with_pool(args.jobs, || bootstrap_many(&d, &specs, args.bootstrap, args.seed, &cfg))?;
    let estimates: Vec<AnalysisRow> = ids
        .iter()
        .zip(results)
        .map(|(id, r)| match r {
            Ok(b) => AnalysisRow {
                estimator: id.to_string(),
                ate: Some(b.theta_hat),
                se: Some(b.se),
                ci_low: Some(b.ci_low),
                ci_high: Some(b.ci_high),
                b_valid: b.b_valid,
                error: None,
            },
            Err(e) => AnalysisRow {
                estimator: id.to_string(),
                ate: None,
                se: None,
                ci_low: None,
                ci_high: None,
                b_valid: 0,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let output = AnalysisOutput {
        rows_used: d.n(),
        rows_dropped: loaded.rows_dropped,
        removed_covariates: removed,
        estimates,
    };

    if let Some(out) = &args.out {
        if out.extension().is_some_and(|e| e == "json") {
            let text = serde_json::to_string_pretty(&output).map_err(|e| Error::Config(e.to_string()))?;
            std::fs::write(out, text + "\n")?;
        } else {
            report::write_analysis_csv(BufWriter::new(File::create(out)?), &output.estimates)?;
        }
        let config = serde_json::json!({
            "data": args.data,
            "outcome": args.outcome,
            "treatment": args.treatment,
            "estimators": ids,
            "bootstrap": args.bootstrap,
            "clip": args.clip,
            "rare_binary_threshold": RARE_BINARY_THRESHOLD,
            "estimator_config": cfg,
        });
        let mut manifest = RunManifest::new("analyze", args.seed, config);
        manifest.outputs = vec![out.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()];
        if let Some(c) = args.clip {
            manifest.warnings.push(format!("propensity scores clipped to [{c}, {}]; the default is no clipping", 1.0 - c));
        }
        let mut manifest_path = out.clone().into_os_string();
        manifest_path.push(".manifest.json");
        manifest.write(Path::new(&manifest_path))?;
    }
    Ok(output)
}

pub fn cmd_report(args: &ReportArgs) -> Result<String> {
    let rows = report::read_results(BufReader::new(File::open(&args.input)?))?;
    let rendered = report::render_results(&rows, args.format)?;
    if let Some(out) = &args.boxplot_data {
        let est_path = args
            .estimates
            .clone()
            .unwrap_or_else(|| args.input.with_file_name("estimates.csv"));
        let est = report::read_estimates(BufReader::new(File::open(&est_path)?))?;
        report::write_boxplot(BufWriter::new(File::create(out)?), &report::boxplot_rows(&est))?;
    }
    Ok(rendered)
}

fn print_analysis(out: &AnalysisOutput) {
    if out.rows_dropped > 0 {
        println!("{} row(s) dropped for a missing outcome", out.rows_dropped);
    }
    if !out.removed_covariates.is_empty() {
        println!("removed rare binary covariates: {}", out.removed_covariates.join(", "));
    }
    print!("{}", report::render_analysis(&out.estimates));
    for r in &out.estimates {
        if let Some(e) = &r.error {
            eprintln!("warning: {}: {e}", r.estimator);
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a).map(|r| {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            let _ = writeln!(lock, "{} scenario(s) written to {}", r.len(), a.out.display());
        }),
        Command::Analyze(a) => cmd_analyze(a).map(|o| print_analysis(&o)),
        Command::Report(a) => cmd_report(a).map(|s| print!("{s}")),
        Command::ExampleData(a) => File::create(&a.out)
            .map_err(Error::from)
            .and_then(|f| write_example_csv(BufWriter::new(f), a.rows, a.seed)),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_config_parses() {
        let text = r#"
            reps = 3
            seed = 9

            [tuning]
            lambda_rule = "one_se"

            [[scenario]]
            n = 200
            p = 80
            confounding = "strong"
            covariate_type = "binary"
            misspec = "outcome"
            estimators = ["naive", "AIPW-OAL-MCP"]

            [[scenario]]
            n = 500
            p = 200
            rho = 0.5
            confounding = "weak"
            covariate_type = "continuous"
            misspec = "none"
            reps = 7
        "#;
        let f = SimulationFile::parse_toml(text).unwrap();
        assert_eq!(f.tuning.lambda_rule, LambdaRule::OneSe);
        assert_eq!(f.tuning.oal_criterion, OalCriterion::Wamd);
        let s = f.scenarios();
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].reps, s[0].seed, s[0].estimators.len()), (3, 9, 2));
        assert_eq!(s[0].estimators[1].id, EstimatorId::AipwOalMcp);
        assert_eq!((s[1].reps, s[1].rho, s[1].estimators.len()), (7, 0.5, 13));
    }

    #[test]
    fn bad_config_is_a_config_error() {
        let e = SimulationFile::parse_toml("[[scenario]]\nn = 10\n").unwrap_err();
        assert_eq!(exit_code(&e), EXIT_CONFIG);
        let e = SimulationFile::parse_toml("bogus = 1\n").unwrap_err();
        assert_eq!(exit_code(&e), EXIT_CONFIG);
    }

    #[test]
    fn paper_grid_file_has_72_scenarios() {
        assert_eq!(paper_grid_file(10, 1).scenarios().len(), 72);
    }

    #[test]
    fn targ_is_rejected_for_real_data() {
        let e = parse_estimators(&Some(vec!["naive".into(), "AIPW-Targ".into()])).unwrap_err();
        assert_eq!(exit_code(&e), EXIT_CONFIG);
        assert!(e.to_string().contains("simulation"));
        let all = parse_estimators(&None).unwrap();
        assert_eq!(all.len(), 12);
    }

    #[test]
    fn data_errors_map_to_three() {
        assert_eq!(exit_code(&Error::MissingColumn("y".into())), EXIT_DATA);
        assert_eq!(exit_code(&Error::Schema("bias".into())), EXIT_DATA);
    }
}
