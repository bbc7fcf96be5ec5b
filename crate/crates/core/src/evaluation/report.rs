use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::experiment::{ExperimentConfig, ExperimentResult, ExperimentSummary};
use crate::evaluation::split::SmoteMode;
use crate::ingest::TaskWindow;
use crate::learners::ModelKind;

/// Two decimals with trailing zeros dropped: `0.90 → 0.9`, `1.00 → 1`, `0.00 → 0`.
pub fn format_metric(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// One (target, model) cell: a summary, or the reason the experiment failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub target: TaskWindow,
    pub model: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub summary: Option<ExperimentSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: SmoteMode,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub cells: Vec<ReportCell>,
}

const HEADER: [&str; 5] = ["Precision", "Recall", "F1 Score", "AUC-ROC", "Accuracy"];
const W: usize = 11;

impl EvalReport {
    pub fn new(config: &ExperimentConfig, results: &[(TaskWindow, ModelKind, Result<ExperimentResult>)]) -> Self {
        let cells = results
            .iter()
            .map(|(target, model, r)| match r {
                Ok(r) => ReportCell {
                    target: *target,
                    model: *model,
                    summary: Some(r.summary.clone()),
                    error: None,
                },
                Err(e) => ReportCell {
                    target: *target,
                    model: *model,
                    summary: None,
                    error: Some(e.to_string()),
                },
            })
            .collect();
        EvalReport {
            mode: config.smote_mode,
            master_seed: config.seed,
            config: config.clone(),
            cells,
        }
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }

    pub fn cell(&self, target: TaskWindow, model: ModelKind) -> Option<&ExperimentSummary> {
        self.cells
            .iter()
            .find(|c| c.target == target && c.model == model)
            .and_then(|c| c.summary.as_ref())
    }

    /// One table per model. Each target gets two rows: class 0 (dropout)
    /// with the shared AUC-ROC and accuracy, then class 1.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "SMOTE mode: {}    master seed: {}", self.mode, self.master_seed);
        for kind in ModelKind::ALL {
            let cells: Vec<&ReportCell> = self.cells.iter().filter(|c| c.model == kind).collect();
            if cells.is_empty() {
                continue;
            }
            let targets: Vec<&str> = cells.iter().map(|c| c.target.report_name()).collect();
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "{} model report for {} prediction",
                kind.title(),
                join_and(&targets)
            );
            let _ = writeln!(out);
            let mut header = format!("{:<8}", "");
            for h in HEADER {
                let _ = write!(header, "{h:<W$}");
            }
            let _ = writeln!(out, "{}", header.trim_end());
            for c in cells {
                let name = c.target.report_name();
                match (&c.summary, &c.error) {
                    (Some(s), _) => {
                        let [c0, c1] = &s.metrics.classes;
                        let auc = s.auc.map(format_metric).unwrap_or_else(|| "n/a".into());
                        let row0 = [
                            format_metric(c0.precision),
                            format_metric(c0.recall),
                            format_metric(c0.f1),
                            auc,
                            format_metric(s.metrics.accuracy),
                        ];
                        let row1 = [
                            format_metric(c1.precision),
                            format_metric(c1.recall),
                            format_metric(c1.f1),
                        ];
                        push_row(&mut out, name, &row0);
                        push_row(&mut out, "", &row1);
                    }
                    (None, Some(e)) => {
                        let _ = writeln!(out, "{name:<8}failed: {e}");
                    }
                    (None, None) => {}
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

fn push_row(out: &mut String, label: &str, cols: &[String]) {
    let mut line = format!("{label:<8}");
    for c in cols {
        let _ = write!(line, "{c:<W$}");
    }
    let _ = writeln!(out, "{}", line.trim_end());
}

fn join_and(items: &[&str]) -> String {
    match items {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

/// Per-row test predictions of every successful experiment.
pub fn write_predictions_csv(path: &Path, results: &[(TaskWindow, ModelKind, Result<ExperimentResult>)]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(f);
    let res: std::result::Result<(), csv::Error> = (|| {
        w.write_record(["target", "model", "team_id", "synthetic", "label", "score", "predicted"])?;
        for (target, model, r) in results {
            let Ok(r) = r else { continue };
            for p in &r.predictions {
                w.write_record([
                    target.report_name(),
                    model.as_str(),
                    &p.team_id,
                    if p.synthetic { "1" } else { "0" },
                    &p.label.to_string(),
                    &p.score.to_string(),
                    &p.predicted.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    })();
    res.map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidConfig(format!("{other:?}")),
    })
}
