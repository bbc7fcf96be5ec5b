//! Command-line front end: validate the questionnaire, build features, train,
//! evaluate, run the full experiment grid, generate synthetic cohorts and
//! audit results against the reference oracles.

pub mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use attrition_core::evaluation::{
    auc_counts, auc_roc, metrics, run_grid, write_predictions_csv, EvalReport, ExperimentSeeds, Metrics, SmoteMode,
};
use attrition_core::ingest::{
    load_activity, load_responses, load_submissions, merge_cohort, write_json, Cohort, MergeSummary, TaskWindow,
};
use attrition_core::learners::{train, ModelDocument, ModelKind, THRESHOLD};
use attrition_core::pipeline::{
    apply_standardizer, assemble, fit_standardizer, smote, write_feature_csv, SmoteConfig, StandardizeMode,
    ACTIVITY_FEATURES,
};
use attrition_core::psychometrics::{
    alpha_report, cronbach_alpha, descriptives, fit_cfa, read_covariance_csv, response_covariance, SubscaleMap,
    ValidationReport,
};
use attrition_core::synth::{gen_dropout_cohort, oracle_alpha, oracle_auc_counts, oracle_segment_check};
use attrition_core::{Error, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{Overrides, RunConfig, CONFIG_FILE, SEED_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "attrition", version, about = "Team dropout prediction toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub responses: Option<PathBuf>,
    #[arg(long, global = true)]
    pub activity: Option<PathBuf>,
    #[arg(long, global = true)]
    pub submissions: Option<PathBuf>,
    /// JSON subscale map replacing the built-in 24-item, 6-factor map.
    #[arg(long, global = true)]
    pub subscale_map: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed. Falls back to the config file, then ATTRITION_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// leakage-safe | paper-replication
    #[arg(long, global = true)]
    pub smote_mode: Option<SmoteMode>,
    /// all | oslq-only
    #[arg(long, global = true)]
    pub standardize: Option<StandardizeMode>,
    /// logistic | tree | forest (default: all three)
    #[arg(long, global = true)]
    pub model: Option<ModelKind>,
    /// task0 | task1 | task2 | stage2_gate (default: all four)
    #[arg(long, global = true)]
    pub target: Option<TaskWindow>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Descriptives, Cronbach's alpha and CFA fit of the questionnaire.
    Validate(ValidateArgs),
    /// Per-target feature matrices.
    Features,
    /// Fit on every row and save model files.
    Train,
    /// Score saved models against the inputs.
    Evaluate(EvaluateArgs),
    /// All targets × models with held-out evaluation.
    Pipeline,
    /// Write a synthetic cohort with planted dropout structure.
    Synth(SynthArgs),
    /// Cross-check alpha, SMOTE and AUC against the reference oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Default, Clone)]
pub struct ValidateArgs {
    /// Item covariance matrix (CSV, no header) instead of raw responses; CFA only.
    #[arg(long, requires = "n")]
    pub covariance: Option<PathBuf>,
    /// Sample size behind `--covariance`.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct EvaluateArgs {
    /// Model file to score. Defaults to `<out>/model_<target>_<model>.json` for every selected pair.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct SynthArgs {
    #[arg(long)]
    pub teams: Option<usize>,
    /// Multiplier on the planted feature weights; 0 gives a null cohort.
    #[arg(long)]
    pub signal: Option<f64>,
    /// Label flip probability.
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct VerifyArgs {
    /// Predictions CSV (as written by `pipeline`) whose AUCs are recomputed.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let c = cli.common;
    let flags = Overrides {
        responses: c.responses,
        activity: c.activity,
        submissions: c.submissions,
        subscale_map: c.subscale_map,
        out: c.out,
        seed: c.seed,
        smote_mode: c.smote_mode,
        standardize: c.standardize,
        target: c.target,
        model: c.model,
    };
    let cfg = match RunConfig::resolve(c.config.as_deref(), flags, env_seed.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e),
    };
    match cli.command {
        Command::Validate(a) => cmd_validate(&cfg, &a),
        Command::Features => cmd_features(&cfg),
        Command::Train => cmd_train(&cfg),
        Command::Evaluate(a) => cmd_evaluate(&cfg, &a),
        Command::Pipeline => cmd_pipeline(&cfg),
        Command::Synth(a) => cmd_synth(&cfg, &a),
        Command::Verify(a) => cmd_verify(&cfg, &a),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        e if e.is_input_error() => EXIT_INPUT,
        _ => EXIT_PARTIAL,
    }
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    exit_code(e)
}

fn finish(r: Result<i32>) -> i32 {
    r.unwrap_or_else(|e| fail(&e))
}

fn prepare_out(cfg: &RunConfig) -> Result<&Path> {
    let out = cfg.out.as_path();
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    write_json(&out.join(CONFIG_FILE), cfg)?;
    Ok(out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn subscale_map(cfg: &RunConfig) -> Result<SubscaleMap> {
    match &cfg.subscale_map {
        Some(p) => SubscaleMap::load(p),
        None => Ok(SubscaleMap::oslq()),
    }
}

fn load_cohort(cfg: &RunConfig) -> Result<(Cohort, MergeSummary)> {
    let responses = load_responses(cfg.require(&cfg.responses, "--responses")?)?;
    let snapshots = load_activity(cfg.require(&cfg.activity, "--activity")?)?;
    let submissions = load_submissions(cfg.require(&cfg.submissions, "--submissions")?)?;
    merge_cohort(&responses, &snapshots, &submissions)
}

fn announce_merge(summary: &MergeSummary) {
    eprintln!(
        "merged cohort: {} teams kept, {} dropped {:?}",
        summary.kept,
        summary.total_dropped(),
        summary.dropped
    );
}

/// Questionnaire validation. Exit 0 on success, 2 when the input or the
/// statistics cannot be computed, 3 when the CFA does not converge.
pub fn cmd_validate(cfg: &RunConfig, args: &ValidateArgs) -> i32 {
    let inner = || -> Result<i32> {
        let map = subscale_map(cfg)?;
        let out = prepare_out(cfg)?;
        let mut report = ValidationReport::default();
        let (s, n) = match &args.covariance {
            Some(path) => {
                let n = args
                    .n
                    .ok_or_else(|| Error::InvalidConfig("--covariance requires --n".into()))?;
                (read_covariance_csv(path)?, n)
            }
            None => {
                let responses = load_responses(cfg.require(&cfg.responses, "--responses")?)?;
                report.descriptives = Some(descriptives(&responses, &map)?);
                report.alpha = Some(alpha_report(&responses, &map)?);
                (response_covariance(&responses)?, responses.len())
            }
        };
        report.n = n;
        let code = match fit_cfa(&s, n, &map, &cfg.cfa) {
            Ok((model, fit)) => {
                if fit.has_heywood_case() {
                    report.warnings.push(format!(
                        "uniqueness at its lower bound for items {:?}",
                        fit.heywood_items
                    ));
                }
                report.model = Some(model);
                report.fit = Some(fit);
                EXIT_OK
            }
            Err(Error::NonConvergence {
                iterations,
                gradient_norm,
                partial,
            }) => {
                report.warnings.push(format!(
                    "CFA did not converge after {iterations} iterations (gradient max-norm {gradient_norm:.3e}); loadings are the last iterate"
                ));
                report.model = partial.map(|m| *m);
                EXIT_NONCONVERGENCE
            }
            Err(e) => return Err(e),
        };
        if let Some(a) = &report.alpha {
            for sub in a.subscales.iter().filter(|s| s.alpha < 0.70) {
                report
                    .warnings
                    .push(format!("{}: alpha {:.3} below 0.70", sub.name, sub.alpha));
            }
        }
        let text = report.render_text();
        write_text(&out.join("validation.txt"), &text)?;
        write_json(&out.join("validation.json"), &report)?;
        print!("{text}");
        Ok(code)
    };
    match inner() {
        Ok(code) => code,
        Err(e @ Error::NonConvergence { .. }) => fail(&e),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

/// Writes `features_<target>.csv` for every selected target.
pub fn cmd_features(cfg: &RunConfig) -> i32 {
    finish((|| {
        let map = subscale_map(cfg)?;
        let (cohort, summary) = load_cohort(cfg)?;
        announce_merge(&summary);
        let out = prepare_out(cfg)?;
        write_json(&out.join("merge_summary.json"), &summary)?;
        for &target in &cfg.targets {
            let (matrix, labels) = assemble(&cohort, target, &map, cfg.oslq_aggregate)?;
            let path = out.join(format!("features_{target}.csv"));
            write_feature_csv(&path, &matrix, &labels)?;
            let ones = labels.iter().filter(|&&l| l == 1).count();
            println!("{target}: {} rows, {ones} positive -> {}", labels.len(), path.display());
        }
        Ok(EXIT_OK)
    })())
}

pub fn model_path(out: &Path, target: TaskWindow, kind: ModelKind) -> PathBuf {
    out.join(format!("model_{target}_{kind}.json"))
}

/// Fits the standardizer on every row, balances with SMOTE and saves one
/// model file per (target, model). No held-out data is involved.
pub fn cmd_train(cfg: &RunConfig) -> i32 {
    finish((|| {
        let map = subscale_map(cfg)?;
        let (cohort, summary) = load_cohort(cfg)?;
        announce_merge(&summary);
        let out = prepare_out(cfg)?;
        let mut failed = 0;
        for &target in &cfg.targets {
            let (matrix, labels) = assemble(&cohort, target, &map, cfg.oslq_aggregate)?;
            let mask = cfg.standardize.mask(matrix.n_cols(), ACTIVITY_FEATURES.len());
            for &kind in &cfg.models {
                let seeds = ExperimentSeeds::derive(cfg.seed(), target, kind);
                let fitted = (|| {
                    let stats = fit_standardizer(&matrix.rows, &mask)?;
                    let x = apply_standardizer(&matrix.rows, &stats);
                    let res = smote(
                        &x,
                        &labels,
                        &SmoteConfig {
                            k: cfg.smote_k,
                            seed: seeds.smote,
                        },
                    )?;
                    let model = train(kind, &res.rows, &res.labels, &cfg.learners, seeds.model)?;
                    let path = model_path(out, target, kind);
                    ModelDocument::new(model, matrix.columns.clone())
                        .with_standardizer(stats)
                        .save(&path)?;
                    Ok::<_, Error>(path)
                })();
                match fitted {
                    Ok(path) => println!("{target} {kind}: {}", path.display()),
                    Err(e) => {
                        failed += 1;
                        eprintln!("{target} {kind}: failed: {e}");
                    }
                }
            }
        }
        Ok(if failed > 0 { EXIT_PARTIAL } else { EXIT_OK })
    })())
}

#[derive(Debug, Serialize)]
struct Evaluation {
    target: TaskWindow,
    model: ModelKind,
    model_file: String,
    n_rows: usize,
    metrics: Metrics,
    auc: Option<f64>,
}

/// Scores saved models on the (merged) inputs.
pub fn cmd_evaluate(cfg: &RunConfig, args: &EvaluateArgs) -> i32 {
    finish((|| {
        let map = subscale_map(cfg)?;
        let (cohort, summary) = load_cohort(cfg)?;
        announce_merge(&summary);
        let out = prepare_out(cfg)?;
        let mut jobs = Vec::new();
        match &args.model_file {
            Some(p) => {
                let doc = ModelDocument::load(p)?;
                let target = match cfg.targets.as_slice() {
                    [t] => *t,
                    _ => return Err(Error::InvalidConfig("--model-file needs --target".into())),
                };
                jobs.push((target, doc.model.kind(), p.clone(), doc));
            }
            None => {
                for &target in &cfg.targets {
                    for &kind in &cfg.models {
                        let p = model_path(out, target, kind);
                        let doc = ModelDocument::load(&p)?;
                        jobs.push((target, kind, p, doc));
                    }
                }
            }
        }
        let mut csv = String::from("target,model,team_id,label,score,predicted\n");
        let mut evaluations = Vec::new();
        for (target, kind, path, doc) in jobs {
            let (matrix, labels) = assemble(&cohort, target, &map, cfg.oslq_aggregate)?;
            if doc.feature_columns != matrix.columns {
                return Err(Error::InvalidConfig(format!(
                    "{}: feature columns {:?} do not match inputs {:?}",
                    path.display(),
                    doc.feature_columns,
                    matrix.columns
                )));
            }
            let x = match &doc.standardizer {
                Some(stats) => apply_standardizer(&matrix.rows, stats),
                None => matrix.rows.clone(),
            };
            let scores: Vec<f64> = x.iter().map(|r| doc.model.predict_score(r)).collect::<Result<_>>()?;
            let preds: Vec<u8> = scores.iter().map(|&s| u8::from(s >= THRESHOLD)).collect();
            let m = metrics(&labels, &preds)?;
            let auc = match auc_roc(&labels, &scores) {
                Ok(a) => Some(a),
                Err(Error::SingleClass) => None,
                Err(e) => return Err(e),
            };
            for (((id, l), s), p) in matrix.team_ids.iter().zip(&labels).zip(&scores).zip(&preds) {
                let _ = writeln!(csv, "{target},{kind},{id},{l},{s:?},{p}");
            }
            println!(
                "{target} {kind}: accuracy {:.4}, AUC {}",
                m.accuracy,
                auc.map_or("-".to_string(), |a| format!("{a:.4}"))
            );
            evaluations.push(Evaluation {
                target,
                model: kind,
                model_file: path.display().to_string(),
                n_rows: labels.len(),
                metrics: m,
                auc,
            });
        }
        write_json(&out.join("evaluation.json"), &evaluations)?;
        write_text(&out.join("evaluation_predictions.csv"), &csv)?;
        Ok(EXIT_OK)
    })())
}

/// Every selected (target, model) pair with held-out evaluation. Writes
/// `report.txt`, `report.json`, `predictions.csv` and `merge_summary.json`.
/// Exit 1 when any experiment failed; the others are still reported.
pub fn cmd_pipeline(cfg: &RunConfig) -> i32 {
    cmd_pipeline_to(cfg, &mut std::io::stdout(), &mut std::io::stderr())
}

/// [`cmd_pipeline`] with the report text sent to `out` and per-experiment
/// progress to `log`.
pub fn cmd_pipeline_to(cfg: &RunConfig, out: &mut dyn Write, log: &mut dyn Write) -> i32 {
    let r = (|| {
        let map = subscale_map(cfg)?;
        let (cohort, summary) = load_cohort(cfg)?;
        let _ = writeln!(
            log,
            "merged cohort: {} teams kept, {} dropped {:?}",
            summary.kept,
            summary.total_dropped(),
            summary.dropped
        );
        let dir = prepare_out(cfg)?;
        write_json(&dir.join("merge_summary.json"), &summary)?;
        let exp = cfg.experiment();
        let results = run_grid(&cohort, &cfg.targets, &cfg.models, &map, &exp);
        for (target, kind, r) in &results {
            let _ = match r {
                Ok(r) => writeln!(
                    log,
                    "{target} {kind}: accuracy {:.4}, AUC {}, leakage-free {}",
                    r.summary.metrics.accuracy,
                    r.summary.auc.map_or("-".to_string(), |a| format!("{a:.4}")),
                    r.summary.leakage_free
                ),
                Err(e) => writeln!(log, "{target} {kind}: failed: {e}"),
            };
        }
        let report = EvalReport::new(&exp, &results);
        let text = report.render_text();
        write_text(&dir.join("report.txt"), &text)?;
        write_text(&dir.join("report.json"), &report.to_json()?)?;
        write_predictions_csv(&dir.join("predictions.csv"), &results)?;
        let _ = out.write_all(text.as_bytes());
        Ok(if report.failures() > 0 { EXIT_PARTIAL } else { EXIT_OK })
    })();
    r.unwrap_or_else(|e| {
        let _ = writeln!(log, "error: {e}");
        exit_code(&e)
    })
}

/// Synthetic cohort: the three CSVs plus `ground_truth.json`. The master
/// seed drives the generator.
pub fn cmd_synth(cfg: &RunConfig, args: &SynthArgs) -> i32 {
    finish((|| {
        let mut cfg = cfg.clone();
        if let Some(t) = args.teams {
            cfg.synth.n_teams = t;
        }
        if let Some(s) = args.signal {
            cfg.synth.signal = s;
        }
        if let Some(n) = args.noise {
            cfg.synth.label_noise = n;
        }
        cfg.synth.seed = cfg.seed();
        let cohort = gen_dropout_cohort(&cfg.synth)?;
        let out = cfg.out.clone();
        cfg.responses = Some(out.join("responses.csv"));
        cfg.activity = Some(out.join("activity.csv"));
        cfg.submissions = Some(out.join("submissions.csv"));
        cohort.write(&out)?;
        prepare_out(&cfg)?;
        println!(
            "{} teams, {} participants, realized priors {:?} -> {}",
            cfg.synth.n_teams,
            cohort.responses.len(),
            cohort.truth.realized_priors,
            out.display()
        );
        Ok(EXIT_OK)
    })())
}

#[derive(Debug, Default, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
}

#[derive(Debug, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl VerifyReport {
    fn push(&mut self, name: String, passed: bool, detail: String) {
        self.checks.push(VerifyCheck { name, passed, detail });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
        }
        s
    }
}

const ALPHA_TOL: f64 = 1e-10;

/// Recomputes alpha, SMOTE geometry and AUC with the reference oracles.
/// Exit 0 when everything agrees, 1 on any disagreement.
pub fn cmd_verify(cfg: &RunConfig, args: &VerifyArgs) -> i32 {
    finish((|| {
        let have_cohort = cfg.responses.is_some() && cfg.activity.is_some() && cfg.submissions.is_some();
        if cfg.responses.is_none() && args.predictions.is_none() {
            return Err(Error::InvalidConfig(
                "nothing to verify: give --responses and/or --predictions".into(),
            ));
        }
        let map = subscale_map(cfg)?;
        let out = prepare_out(cfg)?;
        let mut report = VerifyReport::default();

        if let Some(p) = &cfg.responses {
            let responses = load_responses(p)?;
            for sub in map.subscales() {
                let rows: Vec<Vec<f64>> = responses
                    .iter()
                    .map(|r| sub.items.iter().map(|&i| f64::from(r.items[i - 1])).collect())
                    .collect();
                let (passed, detail) = match (cronbach_alpha(&rows), oracle_alpha(&rows)) {
                    (Ok(a), Ok(b)) => ((a - b).abs() < ALPHA_TOL, format!("{a:.12} vs oracle {b:.12}")),
                    (Err(a), Err(b)) => (true, format!("both undefined ({a}; {b})")),
                    (a, b) => (false, format!("{a:?} vs oracle {b:?}")),
                };
                report.push(format!("alpha {}", sub.name), passed, detail);
            }
        }

        if have_cohort {
            let (cohort, _) = load_cohort(cfg)?;
            for &target in &cfg.targets {
                let (matrix, labels) = assemble(&cohort, target, &map, cfg.oslq_aggregate)?;
                let mask = cfg.standardize.mask(matrix.n_cols(), ACTIVITY_FEATURES.len());
                let stats = fit_standardizer(&matrix.rows, &mask)?;
                let x = apply_standardizer(&matrix.rows, &stats);
                let seeds = ExperimentSeeds::derive(cfg.seed(), target, ModelKind::Forest);
                let smote_cfg = SmoteConfig {
                    k: cfg.smote_k,
                    seed: seeds.smote,
                };
                let name = format!("smote {target}");
                match smote(&x, &labels, &smote_cfg) {
                    Ok(res) => {
                        let minority: Vec<Vec<f64>> = x
                            .iter()
                            .zip(&labels)
                            .filter(|(_, &l)| l == res.minority_class)
                            .map(|(r, _)| r.clone())
                            .collect();
                        let off = res.rows[x.len()..]
                            .iter()
                            .filter(|r| !oracle_segment_check(r, &minority))
                            .count();
                        let ones = res.labels.iter().filter(|&&l| l == 1).count();
                        let balanced = 2 * ones == res.labels.len();
                        report.push(
                            name,
                            off == 0 && balanced,
                            format!(
                                "{} synthetic rows, {off} off-segment, balanced {balanced}",
                                res.n_synthetic()
                            ),
                        );
                    }
                    Err(e) => report.push(name, true, format!("skipped: {e}")),
                }
            }
        }

        if let Some(p) = &args.predictions {
            for ((target, model), (y, s)) in read_prediction_groups(p)? {
                let name = format!("auc {target} {model}");
                let (passed, detail) = match (auc_counts(&y, &s), oracle_auc_counts(&y, &s)) {
                    (Ok(a), Ok(b)) => (a == b, format!("{}/{} vs oracle {}/{}", a.0, a.1, b.0, b.1)),
                    (Err(a), Err(b)) => (true, format!("both undefined ({a}; {b})")),
                    (a, b) => (false, format!("{a:?} vs oracle {b:?}")),
                };
                report.push(name, passed, detail);
            }
        }

        let text = report.render_text();
        write_text(&out.join("verify.txt"), &text)?;
        write_json(&out.join("verify.json"), &report)?;
        print!("{text}");
        Ok(if report.all_passed() { EXIT_OK } else { EXIT_PARTIAL })
    })())
}

type PredictionGroups = BTreeMap<(String, String), (Vec<u8>, Vec<f64>)>;

/// Labels and scores per (target, model) from a predictions CSV.
fn read_prediction_groups(path: &Path) -> Result<PredictionGroups> {
    let file = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        file: file.clone(),
        line: 1,
        rule: e.to_string(),
    })?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            file: file.clone(),
            line: 1,
            rule: e.to_string(),
        })?
        .clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            file: file.clone(),
            line: 1,
            rule: format!("missing column `{name}`"),
        })
    };
    let (ti, mi, li, si) = (col("target")?, col("model")?, col("label")?, col("score")?);
    let mut groups = PredictionGroups::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let bad = |rule: String| Error::Parse {
            file: file.clone(),
            line,
            rule,
        };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let label: u8 = match &rec[li] {
            "0" => 0,
            "1" => 1,
            other => return Err(bad(format!("label `{other}` is not 0 or 1"))),
        };
        let score: f64 = rec[si]
            .parse()
            .map_err(|_| bad(format!("score `{}` is not a number", &rec[si])))?;
        let g = groups.entry((rec[ti].to_string(), rec[mi].to_string())).or_default();
        g.0.push(label);
        g.1.push(score);
    }
    Ok(groups)
}
