use std::path::PathBuf;

use crate::ingest::TaskWindow;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report.
///
/// Input-file variants carry the file, the 1-based line number and the rule
/// that was violated so diagnostics can be surfaced verbatim by the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{file}:{line}: malformed row: {rule}")]
    Parse { file: String, line: u64, rule: String },

    #[error("{file}:{line}: column `{column}` has Likert value {value}, expected 1..5")]
    Range {
        file: String,
        line: u64,
        column: String,
        value: i64,
    },

    #[error("{file}:{line}: duplicate key {key}")]
    Duplicate { file: String, line: u64, key: String },

    #[error("{file}:{line}: column `{column}` has negative count {value}")]
    NegativeCount {
        file: String,
        line: u64,
        column: String,
        value: i64,
    },

    #[error("{file}:{line}: unknown task window `{value}` (expected task0, task1, task2 or stage2_gate)")]
    UnknownWindow { file: String, line: u64, value: String },

    #[error("no team is present in all of responses, activity and submissions")]
    EmptyCohort,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("no convergence after {iterations} iterations (gradient max-norm {gradient_norm:.3e})")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
        /// Last accepted iterate, when the failing routine has one.
        partial: Option<Box<crate::psychometrics::CfaModel>>,
    },

    #[error("baseline chi-square {chi2_b:.4} does not exceed its df {df_b}")]
    DegenerateBaseline { chi2_b: f64, df_b: usize },

    #[error("team has no members")]
    EmptyTeam,

    #[error("team {team_id} has no label for {target}")]
    MissingLabel { team_id: String, target: TaskWindow },

    #[error("only one class present in the labels")]
    SingleClass,

    #[error("minority class has {size} rows; SMOTE needs at least 2")]
    TinyMinority { size: usize },

    #[error("node has no samples")]
    EmptyNode,

    #[error("expected {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("leakage detected: {0}")]
    Leakage(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Input-validation failures (as opposed to numerical ones).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Range { .. }
                | Error::Duplicate { .. }
                | Error::NegativeCount { .. }
                | Error::UnknownWindow { .. }
                | Error::EmptyCohort
                | Error::Io { .. }
                | Error::InvalidConfig(_)
                | Error::Json(_)
        )
    }
}
