use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    write_activity, write_json, write_responses, write_submissions, ActivityCounts, ActivitySnapshot,
    ParticipantResponse, SubmissionRecord, TaskWindow,
};
use crate::learners::sigmoid;
use crate::pipeline::{activity_features, cumulative_activity, team_max, team_oslq, OslqAggregate};
use crate::psychometrics::SubscaleMap;
use crate::synth::factor::{FactorPlan, LikertSampler};

/// Mean per-window counts for an average member of an average team.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActivityRates {
    pub topics_entered: f64,
    pub posts_read: f64,
    pub likes_given: f64,
    pub likes_received: f64,
    /// Standard deviation of the team engagement effect on the log-rate scale.
    pub team_sd: f64,
    /// Standard deviation of the member effect on the log-rate scale.
    pub member_sd: f64,
}

impl Default for ActivityRates {
    fn default() -> Self {
        Self {
            topics_entered: 3.0,
            posts_read: 20.0,
            likes_given: 1.5,
            likes_received: 1.5,
            team_sd: 0.6,
            member_sd: 0.4,
        }
    }
}

/// Planted dropout process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DropoutPlan {
    pub n_teams: usize,
    pub min_members: usize,
    pub max_members: usize,
    /// Effects on the standardized features, in feature-matrix column order.
    pub weights: [f64; 10],
    /// Multiplies `weights`; 0 gives labels independent of the features.
    pub signal: f64,
    /// Target share of label 1 per window (task0, task1, task2, stage2 gate).
    pub priors: [f64; 4],
    /// Explicit intercepts; when absent they are solved from `priors`.
    pub intercepts: Option<[f64; 4]>,
    pub activity: ActivityRates,
    /// Probability each label is flipped after sampling.
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for DropoutPlan {
    fn default() -> Self {
        Self {
            n_teams: 1290,
            min_members: 2,
            max_members: 4,
            weights: [0.9, 0.5, 0.6, 0.9, 0.3, 0.2, 0.2, 0.3, 0.1, 0.2],
            signal: 2.0,
            priors: [0.95, 0.70, 0.40, 0.30],
            intercepts: None,
            activity: ActivityRates::default(),
            label_noise: 0.0,
            seed: 0,
        }
    }
}

/// Planted parameters and realized outcomes, written beside the CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropoutTruth {
    pub plan: DropoutPlan,
    pub intercepts: [f64; 4],
    /// Per window: means and sds used to standardize the features.
    pub feature_means: Vec<Vec<f64>>,
    pub feature_sds: Vec<Vec<f64>>,
    /// Realized share of label 1 per window.
    pub realized_priors: [f64; 4],
    /// Labels before noise, keyed by team.
    pub clean_labels: BTreeMap<String, [u8; 4]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropoutCohort {
    pub responses: Vec<ParticipantResponse>,
    pub snapshots: Vec<ActivitySnapshot>,
    pub submissions: Vec<SubmissionRecord>,
    pub truth: DropoutTruth,
}

impl DropoutCohort {
    /// `responses.csv`, `activity.csv`, `submissions.csv` and `ground_truth.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_responses(&dir.join("responses.csv"), &self.responses)?;
        write_activity(&dir.join("activity.csv"), &self.snapshots)?;
        write_submissions(&dir.join("submissions.csv"), &self.submissions)?;
        write_json(&dir.join("ground_truth.json"), &self.truth)
    }
}

impl DropoutPlan {
    fn validate(&self) -> Result<()> {
        if self.n_teams == 0 {
            return Err(Error::InvalidConfig("need at least one team".into()));
        }
        if self.min_members == 0 || self.min_members > self.max_members {
            return Err(Error::InvalidConfig(format!(
                "invalid member range {}..={}",
                self.min_members, self.max_members
            )));
        }
        if !(0.0..0.5).contains(&self.label_noise) {
            return Err(Error::InvalidConfig("label noise must be in [0, 0.5)".into()));
        }
        for &p in &self.priors {
            if !(p > self.label_noise && p < 1.0 - self.label_noise) {
                return Err(Error::InvalidConfig(format!(
                    "prior {p} is unreachable with label noise {}",
                    self.label_noise
                )));
            }
        }
        let a = &self.activity;
        let rates = [a.topics_entered, a.posts_read, a.likes_given, a.likes_received];
        if rates.iter().any(|&r| r.is_nan() || r <= 0.0) || a.team_sd < 0.0 || a.member_sd < 0.0 {
            return Err(Error::InvalidConfig("activity rates must be positive".into()));
        }
        Ok(())
    }
}

/// Intercept `b` with `mean_i sigmoid(z_i + b) = target`, by bisection.
pub fn solve_intercept(z: &[f64], target: f64) -> f64 {
    let mean = |b: f64| z.iter().map(|&v| sigmoid(v + b)).sum::<f64>() / z.len() as f64;
    let (mut lo, mut hi) = (-100.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn column_stats(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let means: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let sds = (0..d)
        .map(|j| {
            if rows.len() < 2 {
                return 0.0;
            }
            (rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        })
        .collect();
    (means, sds)
}

/// Generates a cohort whose labels follow `sigmoid(signal·βᵀx_std + b_task)`,
/// where `x_std` is the team feature vector for that window standardized over
/// the cohort. Each label is drawn as a logistic utility crossing zero, then
/// flipped with probability `label_noise`. The stage-2 gate row carries that
/// utility as its score, so selection is a cut on the planted score.
pub fn gen_dropout_cohort(plan: &DropoutPlan) -> Result<DropoutCohort> {
    plan.validate()?;
    let map = SubscaleMap::oslq();
    let likert = LikertSampler::new(&FactorPlan::oslq(0, 0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let a = &plan.activity;
    let team_effect = Normal::new(0.0, a.team_sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let member_effect = Normal::new(0.0, a.member_sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    // Log-normal effects with mean one.
    let mean_correction = -0.5 * (a.team_sd * a.team_sd + a.member_sd * a.member_sd);

    let tw = plan.n_teams.to_string().len();
    let pw = (plan.n_teams * plan.max_members).to_string().len();
    let mut responses = Vec::new();
    let mut snapshots = Vec::new();
    let mut team_ids = Vec::with_capacity(plan.n_teams);
    let mut spans = Vec::with_capacity(plan.n_teams);
    let mut pid = 0usize;
    for t in 0..plan.n_teams {
        let team_id = format!("T{t:0tw$}");
        let members = rng.random_range(plan.min_members..=plan.max_members);
        let engagement: f64 = team_effect.sample(&mut rng);
        let (r0, s0) = (responses.len(), snapshots.len());
        for _ in 0..members {
            let participant_id = format!("P{pid:0pw$}");
            pid += 1;
            responses.push(ParticipantResponse::new(
                participant_id.clone(),
                team_id.clone(),
                likert.sample(&mut rng),
            ));
            let scale = (engagement + member_effect.sample(&mut rng) + mean_correction).exp();
            for window in TaskWindow::ALL {
                let mut draw = |rate: f64| -> Result<u64> {
                    let p = Poisson::new(rate * scale).map_err(|e| Error::InvalidConfig(e.to_string()))?;
                    Ok(p.sample(&mut rng) as u64)
                };
                let counts = ActivityCounts::new(
                    draw(a.topics_entered)?,
                    draw(a.posts_read)?,
                    draw(a.likes_given)?,
                    draw(a.likes_received)?,
                );
                snapshots.push(ActivitySnapshot {
                    participant_id: participant_id.clone(),
                    team_id: team_id.clone(),
                    window,
                    counts,
                });
            }
        }
        team_ids.push(team_id);
        spans.push((r0..responses.len(), s0..snapshots.len()));
    }

    let mut utilities = vec![[0.0f64; 4]; plan.n_teams];
    let mut intercepts = [0.0; 4];
    let mut feature_means = Vec::new();
    let mut feature_sds = Vec::new();
    for window in TaskWindow::ALL {
        let w = window.index();
        let rows: Vec<Vec<f64>> = spans
            .iter()
            .map(|(rs, ss)| -> Result<Vec<f64>> {
                let snaps = &snapshots[ss.clone()];
                let per_member: Vec<ActivityCounts> = responses[rs.clone()]
                    .iter()
                    .map(|r| cumulative_activity(snaps, &r.participant_id, window))
                    .collect();
                let mut row = activity_features(&team_max(&per_member)?).to_vec();
                row.extend(team_oslq(&responses[rs.clone()], &map, OslqAggregate::Mean)?);
                Ok(row)
            })
            .collect::<Result<_>>()?;
        let (means, sds) = column_stats(&rows);
        let z: Vec<f64> = rows
            .iter()
            .map(|r| {
                plan.signal
                    * (0..r.len())
                        .filter(|&j| sds[j] > 0.0)
                        .map(|j| plan.weights[j] * (r[j] - means[j]) / sds[j])
                        .sum::<f64>()
            })
            .collect();
        let eta = plan.label_noise;
        intercepts[w] = match plan.intercepts {
            Some(b) => b[w],
            None => solve_intercept(&z, (plan.priors[w] - eta) / (1.0 - 2.0 * eta)),
        };
        for (u, zi) in utilities.iter_mut().zip(&z) {
            u[w] = zi + intercepts[w];
        }
        feature_means.push(means);
        feature_sds.push(sds);
    }

    let mut submissions = Vec::with_capacity(4 * plan.n_teams);
    let mut clean_labels = BTreeMap::new();
    let mut ones = [0usize; 4];
    for (team_id, u) in team_ids.iter().zip(&utilities) {
        let mut clean = [0u8; 4];
        for window in TaskWindow::ALL {
            let w = window.index();
            let v: f64 = rng.random_range(f64::EPSILON..1.0);
            let utility = u[w] + (v / (1.0 - v)).ln();
            clean[w] = u8::from(utility > 0.0);
            let flip = rng.random::<f64>() < plan.label_noise;
            let label = clean[w] ^ u8::from(flip);
            ones[w] += label as usize;
            let score = (50.0 + 10.0 * utility).max(0.0);
            submissions.push(match window {
                TaskWindow::Stage2Gate => SubmissionRecord {
                    team_id: team_id.clone(),
                    task: window,
                    score: Some(score),
                    stage2_selected: Some(label == 1),
                },
                _ => SubmissionRecord {
                    team_id: team_id.clone(),
                    task: window,
                    score: (label == 1).then_some(score),
                    stage2_selected: None,
                },
            });
        }
        clean_labels.insert(team_id.clone(), clean);
    }
    let realized_priors = ones.map(|c| c as f64 / plan.n_teams as f64);
    Ok(DropoutCohort {
        responses,
        snapshots,
        submissions,
        truth: DropoutTruth {
            plan: plan.clone(),
            intercepts,
            feature_means,
            feature_sds,
            realized_priors,
            clean_labels,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intercept_solves_target_mean() {
        let z: Vec<f64> = (0..100).map(|i| (i as f64 - 50.0) / 10.0).collect();
        let b = solve_intercept(&z, 0.8);
        let m = z.iter().map(|&v| sigmoid(v + b)).sum::<f64>() / 100.0;
        assert!((m - 0.8).abs() < 1e-12);
    }

    #[test]
    fn shape_of_small_cohort() {
        let plan = DropoutPlan {
            n_teams: 30,
            seed: 2,
            ..DropoutPlan::default()
        };
        let c = gen_dropout_cohort(&plan).unwrap();
        assert_eq!(c.submissions.len(), 120);
        assert!(c.responses.len() >= 60 && c.responses.len() <= 120);
        assert_eq!(c.snapshots.len(), 4 * c.responses.len());
        let gate: Vec<_> = c
            .submissions
            .iter()
            .filter(|s| s.task == TaskWindow::Stage2Gate)
            .collect();
        assert_eq!(gate.len(), 30);
        assert!(gate.iter().all(|s| s.stage2_selected.is_some() && s.score.is_some()));
        assert_eq!(c, gen_dropout_cohort(&plan).unwrap());
    }

    #[test]
    fn invalid_plans() {
        let bad = [
            DropoutPlan {
                n_teams: 0,
                ..DropoutPlan::default()
            },
            DropoutPlan {
                min_members: 3,
                max_members: 2,
                ..DropoutPlan::default()
            },
            DropoutPlan {
                label_noise: 0.5,
                ..DropoutPlan::default()
            },
            DropoutPlan {
                priors: [0.99, 0.5, 0.5, 0.5],
                label_noise: 0.05,
                ..DropoutPlan::default()
            },
        ];
        for p in bad {
            assert!(matches!(gen_dropout_cohort(&p), Err(Error::InvalidConfig(_))));
        }
    }
}
