//! Checks that the synthetic generators deliver the structure the other
//! suites rely on. Thresholds were fixed from seeded calibration runs.

use attrition_core::evaluation::{run_experiment, ExperimentConfig};
use attrition_core::ingest::{merge_cohort, Cohort, TaskWindow};
use attrition_core::learners::ModelKind;
use attrition_core::pipeline::{assemble, OslqAggregate};
use attrition_core::psychometrics::{alpha_report, fit_cfa, response_covariance, CfaConfig, SubscaleMap};
use attrition_core::synth::{gen_dropout_cohort, gen_factor_cohort, DropoutPlan, FactorPlan};

fn cohort(plan: &DropoutPlan) -> Cohort {
    let c = gen_dropout_cohort(plan).unwrap();
    merge_cohort(&c.responses, &c.snapshots, &c.submissions).unwrap().0
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn class_priors_hold_at_ten_thousand_teams() {
    let plan = DropoutPlan {
        n_teams: 10_000,
        seed: 21,
        ..DropoutPlan::default()
    };
    let c = gen_dropout_cohort(&plan).unwrap();
    for (realized, wanted) in c.truth.realized_priors.iter().zip(plan.priors) {
        assert!((realized - wanted).abs() <= 0.02, "{realized} vs {wanted}");
    }
    let noisy = DropoutPlan {
        label_noise: 0.15,
        priors: [0.8, 0.7, 0.5, 0.3],
        ..plan
    };
    let c = gen_dropout_cohort(&noisy).unwrap();
    for (realized, wanted) in c.truth.realized_priors.iter().zip(noisy.priors) {
        assert!((realized - wanted).abs() <= 0.02, "{realized} vs {wanted}");
    }
}

#[test]
fn zero_weights_give_uncorrelated_labels() {
    let c = cohort(&DropoutPlan {
        n_teams: 3000,
        signal: 0.0,
        priors: [0.5; 4],
        seed: 3,
        ..DropoutPlan::default()
    });
    let (m, y) = assemble(&c, TaskWindow::Task2, &SubscaleMap::oslq(), OslqAggregate::Mean).unwrap();
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    for j in 0..m.n_cols() {
        let col: Vec<f64> = m.rows.iter().map(|r| r[j]).collect();
        let r = correlation(&col, &yf);
        assert!(r.abs() < 0.06, "{}: {r}", m.columns[j]);
    }
}

#[test]
fn strong_noiseless_signal_is_learnable_by_a_shallow_tree() {
    let mut weights = [0.0; 10];
    weights[0] = 1.0;
    weights[3] = 1.0;
    for seed in 0..5 {
        let c = cohort(&DropoutPlan {
            weights,
            signal: 10.0,
            seed,
            ..DropoutPlan::default()
        });
        let mut cfg = ExperimentConfig {
            seed,
            ..ExperimentConfig::default()
        };
        cfg.learners.tree.max_depth = Some(6);
        for target in TaskWindow::ALL {
            let r = run_experiment(&c, target, ModelKind::Tree, &SubscaleMap::oslq(), &cfg).unwrap();
            assert!(
                r.summary.metrics.accuracy >= 0.9,
                "seed {seed} {target}: {}",
                r.summary.metrics.accuracy
            );
        }
    }
}

#[test]
fn forest_beats_tree_under_label_noise() {
    let (mut tree, mut forest) = (0.0, 0.0);
    for seed in 0..20 {
        let c = cohort(&DropoutPlan {
            label_noise: 0.15,
            priors: [0.8, 0.7, 0.5, 0.3],
            seed,
            ..DropoutPlan::default()
        });
        let cfg = ExperimentConfig {
            seed,
            ..ExperimentConfig::default()
        };
        let map = SubscaleMap::oslq();
        tree += run_experiment(&c, TaskWindow::Task2, ModelKind::Tree, &map, &cfg)
            .unwrap()
            .summary
            .metrics
            .accuracy;
        forest += run_experiment(&c, TaskWindow::Task2, ModelKind::Forest, &map, &cfg)
            .unwrap()
            .summary
            .metrics
            .accuracy;
    }
    assert!(forest >= tree, "forest {} < tree {}", forest / 20.0, tree / 20.0);
}

#[test]
fn zero_signal_tree_auc_is_chance() {
    let mut total = 0.0;
    for seed in 0..20 {
        let c = cohort(&DropoutPlan {
            signal: 0.0,
            seed,
            ..DropoutPlan::default()
        });
        let cfg = ExperimentConfig {
            seed,
            ..ExperimentConfig::default()
        };
        let r = run_experiment(&c, TaskWindow::Stage2Gate, ModelKind::Tree, &SubscaleMap::oslq(), &cfg).unwrap();
        total += r.summary.auc.unwrap();
    }
    let mean = total / 20.0;
    assert!((mean - 0.5).abs() <= 0.1, "{mean}");
}

#[test]
fn default_questionnaire_plan_is_reliable_and_fits() {
    let plan = FactorPlan::oslq(1500, 2);
    let responses = gen_factor_cohort(&plan).unwrap();
    let report = alpha_report(&responses, &plan.map).unwrap();
    assert_eq!(report.subscales.len(), 6);
    for s in &report.subscales {
        assert!(s.alpha >= 0.70, "{}: {}", s.name, s.alpha);
    }
    let s = response_covariance(&responses).unwrap();
    let (_, fit) = fit_cfa(&s, responses.len(), &plan.map, &CfaConfig::default()).unwrap();
    assert_eq!(fit.df, 237);
    assert!(fit.cfi.unwrap() > 0.95);
}
