use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::auc::auc_roc;
use crate::evaluation::metrics::{metrics, Metrics};
use crate::evaluation::split::{split_80_20, split_stratified, SmoteMode, SplitPlan};
use crate::ingest::{Cohort, TaskWindow};
use crate::learners::{train, LearnerConfig, Model, ModelKind};
use crate::pipeline::{
    apply_standardizer, assemble, fit_standardizer, smote, FeatureMatrix, OslqAggregate, RowOrigin, SmoteConfig,
    StandardizeMode, ACTIVITY_FEATURES,
};
use crate::psychometrics::SubscaleMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub smote_mode: SmoteMode,
    pub smote_k: usize,
    pub standardize: StandardizeMode,
    pub oslq_aggregate: OslqAggregate,
    pub stratified_split: bool,
    pub learners: LearnerConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            smote_mode: SmoteMode::default(),
            smote_k: 5,
            standardize: StandardizeMode::default(),
            oslq_aggregate: OslqAggregate::default(),
            stratified_split: false,
            learners: LearnerConfig::default(),
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes the master seed with a sequence of tags.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix(master), |acc, &t| splitmix(acc ^ t))
}

/// Generator seeds owned by one (target, model) experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSeeds {
    /// Shared by every model of the same target, so they see the same test fold.
    pub split: u64,
    pub smote: u64,
    pub model: u64,
}

impl ExperimentSeeds {
    pub fn derive(master: u64, target: TaskWindow, kind: ModelKind) -> Self {
        let t = target.index() as u64 + 1;
        let m = kind as u64 + 1;
        Self {
            split: derive_seed(master, &[t]),
            smote: derive_seed(master, &[t, m, 1]),
            model: derive_seed(master, &[t, m, 2]),
        }
    }
}

/// Which assembled rows fed each fitted stage. Indices refer to rows of the
/// assembled feature matrix (before any oversampling).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LeakageAudit {
    pub test_rows: Vec<usize>,
    pub standardizer_rows: Vec<usize>,
    pub smote_pool_rows: Vec<usize>,
    pub training_rows: Vec<usize>,
}

impl LeakageAudit {
    /// One message per stage that saw a test row.
    pub fn violations(&self) -> Vec<String> {
        let test: BTreeSet<usize> = self.test_rows.iter().copied().collect();
        [
            ("standardizer fit", &self.standardizer_rows),
            ("SMOTE neighbour search", &self.smote_pool_rows),
            ("training", &self.training_rows),
        ]
        .into_iter()
        .filter_map(|(stage, rows)| {
            let hits = rows.iter().filter(|r| test.contains(r)).count();
            (hits > 0).then(|| format!("{hits} test rows reached {stage}"))
        })
        .collect()
    }

    pub fn check(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Leakage(v.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Synthetic rows (paper-replication test folds only) are named after their two sources.
    pub team_id: String,
    pub synthetic: bool,
    pub label: u8,
    pub score: f64,
    pub predicted: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub target: TaskWindow,
    pub model: ModelKind,
    pub mode: SmoteMode,
    pub seeds: ExperimentSeeds,
    pub n_rows: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_synthetic: usize,
    pub metrics: Metrics,
    /// `None` when the test fold holds a single class.
    pub auc: Option<f64>,
    pub leakage_free: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub summary: ExperimentSummary,
    pub predictions: Vec<Prediction>,
    pub audit: LeakageAudit,
    pub model: Model,
}

fn split(labels: &[u8], seed: u64, stratified: bool) -> Result<SplitPlan> {
    if stratified {
        split_stratified(labels, seed)
    } else {
        split_80_20(labels.len(), seed)
    }
}

fn sorted_sources<'a>(origins: impl Iterator<Item = &'a RowOrigin>) -> Vec<usize> {
    origins
        .flat_map(|o| o.sources())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Assembles features for `target` and runs one experiment.
pub fn run_experiment(
    cohort: &Cohort,
    target: TaskWindow,
    kind: ModelKind,
    map: &SubscaleMap,
    cfg: &ExperimentConfig,
) -> Result<ExperimentResult> {
    let (matrix, labels) = assemble(cohort, target, map, cfg.oslq_aggregate)?;
    run_on_matrix(&matrix, &labels, kind, cfg)
}

/// Runs one experiment on an assembled matrix.
///
/// Leakage-safe: split, fit the standardizer on the training fold, SMOTE the
/// training fold, train, score the untouched test fold. Paper-replication:
/// standardize and SMOTE everything, then split the balanced set.
pub fn run_on_matrix(
    matrix: &FeatureMatrix,
    labels: &[u8],
    kind: ModelKind,
    cfg: &ExperimentConfig,
) -> Result<ExperimentResult> {
    let seeds = ExperimentSeeds::derive(cfg.seed, matrix.target, kind);
    let mask = cfg.standardize.mask(matrix.n_cols(), ACTIVITY_FEATURES.len());
    let smote_cfg = |seed| SmoteConfig { k: cfg.smote_k, seed };
    let n = matrix.n_rows();

    let (model, test_x, test_y, test_origins, audit, n_train, n_synthetic) = match cfg.smote_mode {
        SmoteMode::LeakageSafe => {
            let plan = split(labels, seeds.split, cfg.stratified_split)?;
            let train_x = matrix.select(&plan.train);
            let train_y: Vec<u8> = plan.train.iter().map(|&i| labels[i]).collect();
            let stats = fit_standardizer(&train_x, &mask)?;
            let train_x = apply_standardizer(&train_x, &stats);
            let test_x = apply_standardizer(&matrix.select(&plan.test), &stats);
            let test_y: Vec<u8> = plan.test.iter().map(|&i| labels[i]).collect();
            let res = smote(&train_x, &train_y, &smote_cfg(seeds.smote))?;
            // Map resampled-row provenance back to assembled rows.
            let to_rows = |o: &RowOrigin| match *o {
                RowOrigin::Original(i) => RowOrigin::Original(plan.train[i]),
                RowOrigin::Synthetic { base, neighbor, lambda } => RowOrigin::Synthetic {
                    base: plan.train[base],
                    neighbor: plan.train[neighbor],
                    lambda,
                },
            };
            let origins: Vec<RowOrigin> = res.origins.iter().map(to_rows).collect();
            let audit = LeakageAudit {
                test_rows: plan.test.clone(),
                standardizer_rows: plan.train.clone(),
                smote_pool_rows: res.neighbor_pool.iter().map(|&i| plan.train[i]).collect(),
                training_rows: sorted_sources(origins.iter()),
            };
            audit.check()?;
            let model = train(kind, &res.rows, &res.labels, &cfg.learners, seeds.model)?;
            let test_origins = plan.test.iter().map(|&i| RowOrigin::Original(i)).collect();
            let n_syn = res.n_synthetic();
            (model, test_x, test_y, test_origins, audit, res.rows.len(), n_syn)
        }
        SmoteMode::PaperReplication => {
            let all: Vec<usize> = (0..n).collect();
            let stats = fit_standardizer(&matrix.rows, &mask)?;
            let x = apply_standardizer(&matrix.rows, &stats);
            let res = smote(&x, labels, &smote_cfg(seeds.smote))?;
            let plan = split(&res.labels, seeds.split, cfg.stratified_split)?;
            let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<u8>) {
                (
                    idx.iter().map(|&i| res.rows[i].clone()).collect(),
                    idx.iter().map(|&i| res.labels[i]).collect(),
                )
            };
            let (train_x, train_y) = pick(&plan.train);
            let (test_x, test_y) = pick(&plan.test);
            let test_origins: Vec<RowOrigin> = plan.test.iter().map(|&i| res.origins[i]).collect();
            let audit = LeakageAudit {
                test_rows: sorted_sources(test_origins.iter()),
                standardizer_rows: all,
                smote_pool_rows: res.neighbor_pool.clone(),
                training_rows: sorted_sources(plan.train.iter().map(|&i| &res.origins[i])),
            };
            let model = train(kind, &train_x, &train_y, &cfg.learners, seeds.model)?;
            let n_syn = res.n_synthetic();
            (model, test_x, test_y, test_origins, audit, plan.train.len(), n_syn)
        }
    };

    let scores: Vec<f64> = test_x.iter().map(|r| model.predict_score(r)).collect::<Result<_>>()?;
    let preds: Vec<u8> = scores
        .iter()
        .map(|&s| u8::from(s >= crate::learners::THRESHOLD))
        .collect();
    let m = metrics(&test_y, &preds)?;
    let auc = match auc_roc(&test_y, &scores) {
        Ok(a) => Some(a),
        Err(Error::SingleClass) => None,
        Err(e) => return Err(e),
    };
    let predictions = test_origins
        .iter()
        .zip(&test_y)
        .zip(scores.iter().zip(&preds))
        .map(|((o, &label), (&score, &predicted))| {
            let (team_id, synthetic) = match *o {
                RowOrigin::Original(i) => (matrix.team_ids[i].clone(), false),
                RowOrigin::Synthetic { base, neighbor, .. } => {
                    (format!("{}~{}", matrix.team_ids[base], matrix.team_ids[neighbor]), true)
                }
            };
            Prediction {
                team_id,
                synthetic,
                label,
                score,
                predicted,
            }
        })
        .collect();
    let leakage_free = audit.violations().is_empty();
    Ok(ExperimentResult {
        summary: ExperimentSummary {
            target: matrix.target,
            model: kind,
            mode: cfg.smote_mode,
            seeds,
            n_rows: n,
            n_train,
            n_test: test_y.len(),
            n_synthetic,
            metrics: m,
            auc,
            leakage_free,
        },
        predictions,
        audit,
        model,
    })
}

/// Every (target, model) pair, run in parallel. Results come back in
/// target-major order regardless of scheduling.
pub fn run_grid(
    cohort: &Cohort,
    targets: &[TaskWindow],
    models: &[ModelKind],
    map: &SubscaleMap,
    cfg: &ExperimentConfig,
) -> Vec<(TaskWindow, ModelKind, Result<ExperimentResult>)> {
    type Assembled = (TaskWindow, Result<(FeatureMatrix, Vec<u8>)>);
    let matrices: Vec<Assembled> = targets
        .par_iter()
        .map(|&t| (t, assemble(cohort, t, map, cfg.oslq_aggregate)))
        .collect();
    let jobs: Vec<(usize, ModelKind)> = (0..matrices.len())
        .flat_map(|i| models.iter().map(move |&m| (i, m)))
        .collect();
    jobs.par_iter()
        .map(|&(i, kind)| {
            let (target, assembled) = &matrices[i];
            let result = match assembled {
                Ok((matrix, labels)) => run_on_matrix(matrix, labels, kind, cfg),
                Err(e) => Err(Error::InvalidConfig(format!("feature assembly failed: {e}"))),
            };
            (*target, kind, result)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(n: usize, seed: u64, signal: bool) -> (FeatureMatrix, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..10).map(|_| rng.random_range(0.0..10.0)).collect())
            .collect();
        let labels = rows
            .iter()
            .map(|r| {
                let z = if signal { r[0] + r[4] - 10.0 } else { 0.0 };
                u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-z - 1.0f64).exp()))
            })
            .collect();
        let m = FeatureMatrix {
            team_ids: (0..n).map(|i| format!("T{i:04}")).collect(),
            columns: (0..10).map(|j| format!("f{j}")).collect(),
            rows,
            target: TaskWindow::Task1,
        };
        (m, labels)
    }

    #[test]
    fn seeds_are_distinct_per_cell_and_shared_split() {
        let a = ExperimentSeeds::derive(7, TaskWindow::Task0, ModelKind::Tree);
        let b = ExperimentSeeds::derive(7, TaskWindow::Task0, ModelKind::Forest);
        let c = ExperimentSeeds::derive(7, TaskWindow::Task1, ModelKind::Tree);
        assert_eq!(a.split, b.split);
        assert_ne!(a.split, c.split);
        assert_ne!(a.model, b.model);
        assert_ne!(a.smote, a.model);
        assert_eq!(a, ExperimentSeeds::derive(7, TaskWindow::Task0, ModelKind::Tree));
    }

    #[test]
    fn leakage_safe_audit_is_clean() {
        let (m, y) = matrix(200, 1, true);
        for kind in ModelKind::ALL {
            let r = run_on_matrix(&m, &y, kind, &ExperimentConfig::default()).unwrap();
            assert!(r.summary.leakage_free);
            assert_eq!(r.summary.n_test, 40);
            assert_eq!(r.predictions.len(), 40);
            let test: BTreeSet<usize> = r.audit.test_rows.iter().copied().collect();
            assert!(r.audit.training_rows.iter().all(|i| !test.contains(i)));
        }
    }

    #[test]
    fn paper_mode_trips_the_guard() {
        let (m, y) = matrix(200, 2, true);
        let cfg = ExperimentConfig {
            smote_mode: SmoteMode::PaperReplication,
            ..ExperimentConfig::default()
        };
        let r = run_on_matrix(&m, &y, ModelKind::Logistic, &cfg).unwrap();
        assert!(!r.summary.leakage_free);
        assert!(matches!(r.audit.check(), Err(Error::Leakage(_))));
        let zeros = y.iter().filter(|&&v| v == 0).count();
        assert_eq!(r.summary.n_train + r.summary.n_test, 2 * zeros.max(200 - zeros));
    }

    #[test]
    fn learns_planted_signal() {
        let (m, y) = matrix(400, 3, true);
        let r = run_on_matrix(&m, &y, ModelKind::Logistic, &ExperimentConfig::default()).unwrap();
        assert!(r.summary.auc.unwrap() > 0.8, "{:?}", r.summary.auc);
    }

    #[test]
    fn grid_is_deterministic() {
        let (m, y) = matrix(120, 4, true);
        let cfg = ExperimentConfig {
            learners: LearnerConfig {
                forest: crate::learners::ForestConfig {
                    n_trees: 10,
                    ..Default::default()
                },
                ..Default::default()
            },
            ..ExperimentConfig::default()
        };
        let a = run_on_matrix(&m, &y, ModelKind::Forest, &cfg).unwrap();
        let b = run_on_matrix(&m, &y, ModelKind::Forest, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
