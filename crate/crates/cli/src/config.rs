use std::path::{Path, PathBuf};

use attrition_core::evaluation::{ExperimentConfig, SmoteMode};
use attrition_core::ingest::TaskWindow;
use attrition_core::learners::{LearnerConfig, ModelKind};
use attrition_core::pipeline::{OslqAggregate, StandardizeMode};
use attrition_core::psychometrics::CfaConfig;
use attrition_core::synth::DropoutPlan;
use attrition_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const SEED_ENV: &str = "ATTRITION_SEED";
pub const CONFIG_FILE: &str = "config.json";

/// Everything a run depends on. Written as `config.json` beside the outputs;
/// passing that file back with `--config` reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub responses: Option<PathBuf>,
    pub activity: Option<PathBuf>,
    pub submissions: Option<PathBuf>,
    pub subscale_map: Option<PathBuf>,
    pub out: PathBuf,
    /// Unset only before resolution.
    pub seed: Option<u64>,
    pub smote_mode: SmoteMode,
    pub smote_k: usize,
    pub standardize: StandardizeMode,
    pub oslq_aggregate: OslqAggregate,
    pub stratified_split: bool,
    pub targets: Vec<TaskWindow>,
    pub models: Vec<ModelKind>,
    pub learners: LearnerConfig,
    pub cfa: CfaConfig,
    pub synth: DropoutPlan,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            responses: None,
            activity: None,
            submissions: None,
            subscale_map: None,
            out: PathBuf::from("attrition-out"),
            seed: None,
            smote_mode: SmoteMode::default(),
            smote_k: 5,
            standardize: StandardizeMode::default(),
            oslq_aggregate: OslqAggregate::default(),
            stratified_split: false,
            targets: TaskWindow::ALL.to_vec(),
            models: ModelKind::ALL.to_vec(),
            learners: LearnerConfig::default(),
            cfa: CfaConfig::default(),
            synth: DropoutPlan::default(),
        }
    }
}

/// Values given on the command line; `None` leaves the file/default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub responses: Option<PathBuf>,
    pub activity: Option<PathBuf>,
    pub submissions: Option<PathBuf>,
    pub subscale_map: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub smote_mode: Option<SmoteMode>,
    pub standardize: Option<StandardizeMode>,
    pub target: Option<TaskWindow>,
    pub model: Option<ModelKind>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    /// Precedence: command-line flag, then config file, then (seed only)
    /// the `ATTRITION_SEED` environment value, then the built-in default.
    pub fn resolve(config_file: Option<&Path>, flags: Overrides, env_seed: Option<&str>) -> Result<Self> {
        let mut cfg = match config_file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = flags.$field { cfg.$field = Some(v); })*
            };
        }
        take!(responses, activity, submissions, subscale_map);
        if let Some(out) = flags.out {
            cfg.out = out;
        }
        if let Some(m) = flags.smote_mode {
            cfg.smote_mode = m;
        }
        if let Some(s) = flags.standardize {
            cfg.standardize = s;
        }
        if let Some(t) = flags.target {
            cfg.targets = vec![t];
        }
        if let Some(m) = flags.model {
            cfg.models = vec![m];
        }
        let env_seed = match env_seed {
            Some(s) => Some(
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV}={s:?} is not an unsigned integer")))?,
            ),
            None => None,
        };
        cfg.seed = Some(flags.seed.or(cfg.seed).or(env_seed).unwrap_or(0));
        if cfg.targets.is_empty() || cfg.models.is_empty() {
            return Err(Error::InvalidConfig("targets and models must not be empty".into()));
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            seed: self.seed(),
            smote_mode: self.smote_mode,
            smote_k: self.smote_k,
            standardize: self.standardize,
            oslq_aggregate: self.oslq_aggregate,
            stratified_split: self.stratified_split,
            learners: self.learners.clone(),
        }
    }

    pub fn require<'a>(&self, path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| Error::InvalidConfig(format!("{flag} is required (flag or config file)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.json");
        std::fs::write(&file, r#"{"seed": 5}"#).unwrap();

        let flag = Overrides {
            seed: Some(9),
            ..Overrides::default()
        };
        assert_eq!(RunConfig::resolve(Some(&file), flag, Some("3")).unwrap().seed, Some(9));
        assert_eq!(
            RunConfig::resolve(Some(&file), Overrides::default(), Some("3"))
                .unwrap()
                .seed,
            Some(5)
        );
        assert_eq!(
            RunConfig::resolve(None, Overrides::default(), Some("3")).unwrap().seed,
            Some(3)
        );
        assert_eq!(
            RunConfig::resolve(None, Overrides::default(), None).unwrap().seed,
            Some(0)
        );
        assert!(RunConfig::resolve(None, Overrides::default(), Some("x")).is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.json");
        std::fs::write(
            &file,
            r#"{"smote_mode": "paper-replication", "targets": ["task1"], "learners": {"forest": {"n_trees": 7}}}"#,
        )
        .unwrap();
        let cfg = RunConfig::resolve(Some(&file), Overrides::default(), None).unwrap();
        assert_eq!(cfg.smote_mode, SmoteMode::PaperReplication);
        assert_eq!(cfg.targets, vec![TaskWindow::Task1]);
        assert_eq!(cfg.learners.forest.n_trees, 7);
        assert!(cfg.learners.forest.bootstrap);
        let flags = Overrides {
            smote_mode: Some(SmoteMode::LeakageSafe),
            target: Some(TaskWindow::Stage2Gate),
            ..Overrides::default()
        };
        let cfg = RunConfig::resolve(Some(&file), flags, None).unwrap();
        assert_eq!(cfg.smote_mode, SmoteMode::LeakageSafe);
        assert_eq!(cfg.targets, vec![TaskWindow::Stage2Gate]);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.json");
        std::fs::write(&file, r#"{"sed": 5}"#).unwrap();
        assert!(matches!(
            RunConfig::resolve(Some(&file), Overrides::default(), None),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = RunConfig::resolve(None, Overrides::default(), Some("11")).unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
