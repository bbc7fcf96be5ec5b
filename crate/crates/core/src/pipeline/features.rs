use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ActivityCounts, ActivitySnapshot, Cohort, ParticipantResponse, TaskWindow};
use crate::psychometrics::{subscale_score, SubscaleMap};

pub const ACTIVITY_FEATURES: [&str; 4] = [
    "max_likes_received",
    "max_likes_given",
    "max_topics_entered",
    "max_posts_read",
];

/// How member subscale scores are combined into a team value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OslqAggregate {
    #[default]
    Mean,
    Max,
    Min,
}

/// Team-level design matrix for one prediction target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub team_ids: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub target: TaskWindow,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn select(&self, idx: &[usize]) -> Vec<Vec<f64>> {
        idx.iter().map(|&i| self.rows[i].clone()).collect()
    }
}

/// Column names: the four activity maxima then one `oslq_<subscale>` per subscale.
pub fn feature_columns(map: &SubscaleMap) -> Vec<String> {
    ACTIVITY_FEATURES
        .iter()
        .map(|s| s.to_string())
        .chain(
            map.names()
                .map(|n| format!("oslq_{}", n.to_lowercase().replace(' ', "_"))),
        )
        .collect()
}

/// Sum of a participant's counters over every window up to and including `target`.
pub fn cumulative_activity(snapshots: &[ActivitySnapshot], participant: &str, target: TaskWindow) -> ActivityCounts {
    snapshots
        .iter()
        .filter(|s| s.participant_id == participant && s.window <= target)
        .fold(ActivityCounts::default(), |acc, s| acc + s.counts)
}

/// Element-wise maximum over team members.
pub fn team_max(members: &[ActivityCounts]) -> Result<ActivityCounts> {
    let (first, rest) = members.split_first().ok_or(Error::EmptyTeam)?;
    Ok(rest.iter().fold(*first, |acc, c| acc.max(*c)))
}

/// In declared feature order: likes received, likes given, topics entered, posts read.
pub fn activity_features(c: &ActivityCounts) -> [f64; 4] {
    [
        c.likes_received as f64,
        c.likes_given as f64,
        c.topics_entered as f64,
        c.posts_read as f64,
    ]
}

/// One value per subscale, combining the responding members' subscale scores.
pub fn team_oslq(responses: &[ParticipantResponse], map: &SubscaleMap, agg: OslqAggregate) -> Result<Vec<f64>> {
    if responses.is_empty() {
        return Err(Error::EmptyTeam);
    }
    Ok(map
        .subscales()
        .iter()
        .map(|s| {
            let scores = responses.iter().map(|r| subscale_score(r, &s.items));
            match agg {
                OslqAggregate::Mean => scores.sum::<f64>() / responses.len() as f64,
                OslqAggregate::Max => scores.fold(f64::NEG_INFINITY, f64::max),
                OslqAggregate::Min => scores.fold(f64::INFINITY, f64::min),
            }
        })
        .collect())
}

/// Builds the feature matrix and labels for `target`. Rows follow `team_id`
/// order; activity only counts windows up to the target deadline.
pub fn assemble(
    cohort: &Cohort,
    target: TaskWindow,
    map: &SubscaleMap,
    agg: OslqAggregate,
) -> Result<(FeatureMatrix, Vec<u8>)> {
    if cohort.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let mut team_ids = Vec::with_capacity(cohort.len());
    let mut rows = Vec::with_capacity(cohort.len());
    let mut labels = Vec::with_capacity(cohort.len());
    for (team_id, team) in &cohort.teams {
        let label = *team.labels.get(&target).ok_or_else(|| Error::MissingLabel {
            team_id: team_id.clone(),
            target,
        })?;
        let members: BTreeSet<&str> = team.snapshots.iter().map(|s| s.participant_id.as_str()).collect();
        let per_member: Vec<ActivityCounts> = members
            .into_iter()
            .map(|p| cumulative_activity(&team.snapshots, p, target))
            .collect();
        let mut row = activity_features(&team_max(&per_member)?).to_vec();
        row.extend(team_oslq(&team.responses, map, agg)?);
        team_ids.push(team_id.clone());
        rows.push(row);
        labels.push(label);
    }
    Ok((
        FeatureMatrix {
            team_ids,
            columns: feature_columns(map),
            rows,
            target,
        },
        labels,
    ))
}

/// `team_id`, the feature columns, then `label`.
pub fn write_feature_csv(path: &Path, matrix: &FeatureMatrix, labels: &[u8]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(f);
    let res: std::result::Result<(), csv::Error> = (|| {
        let mut header = vec!["team_id".to_string()];
        header.extend(matrix.columns.iter().cloned());
        header.push("label".into());
        w.write_record(&header)?;
        for ((id, row), label) in matrix.team_ids.iter().zip(&matrix.rows).zip(labels) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            rec.push(label.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    })();
    res.map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{merge_cohort, SubmissionRecord, N_ITEMS};
    use proptest::prelude::*;

    fn snap(p: &str, team: &str, w: TaskWindow, c: ActivityCounts) -> ActivitySnapshot {
        ActivitySnapshot {
            participant_id: p.into(),
            team_id: team.into(),
            window: w,
            counts: c,
        }
    }

    #[test]
    fn cumulative_sums_up_to_target() {
        let s = vec![
            snap("p1", "A", TaskWindow::Task0, ActivityCounts::new(2, 0, 0, 0)),
            snap("p1", "A", TaskWindow::Task1, ActivityCounts::new(3, 0, 0, 0)),
        ];
        assert_eq!(cumulative_activity(&s, "p1", TaskWindow::Task1).topics_entered, 5);
        assert_eq!(cumulative_activity(&s, "p1", TaskWindow::Task0).topics_entered, 2);

        let later_only = vec![snap("p1", "A", TaskWindow::Task1, ActivityCounts::new(3, 4, 5, 6))];
        assert_eq!(
            cumulative_activity(&later_only, "p1", TaskWindow::Task0),
            ActivityCounts::default()
        );

        let all: Vec<_> = TaskWindow::ALL
            .iter()
            .map(|&w| snap("p1", "A", w, ActivityCounts::new(1, 2, 3, 4)))
            .collect();
        assert_eq!(
            cumulative_activity(&all, "p1", TaskWindow::Stage2Gate),
            ActivityCounts::new(4, 8, 12, 16)
        );
    }

    #[test]
    fn team_max_elementwise() {
        let a = ActivityCounts::new(2, 0, 5, 1);
        let b = ActivityCounts::new(1, 4, 3, 9);
        assert_eq!(team_max(&[a, b]).unwrap(), ActivityCounts::new(2, 4, 5, 9));
        assert_eq!(team_max(&[a]).unwrap(), a);
        let r1 = ActivityCounts::new(0, 0, 0, 3);
        let r2 = ActivityCounts::new(0, 0, 0, 7);
        assert_eq!(team_max(&[r1, r2]).unwrap().likes_received, 7);
        assert!(matches!(team_max(&[]), Err(Error::EmptyTeam)));
    }

    fn resp(id: &str, items: [u8; N_ITEMS]) -> ParticipantResponse {
        ParticipantResponse::new(id, "A", items)
    }

    #[test]
    fn team_oslq_aggregates() {
        let map = SubscaleMap::oslq();
        let one = team_oslq(&[resp("p1", [4; N_ITEMS])], &map, OslqAggregate::Mean).unwrap();
        assert_eq!(one, vec![4.0; 6]);

        let two = team_oslq(
            &[resp("p1", [3; N_ITEMS]), resp("p2", [5; N_ITEMS])],
            &map,
            OslqAggregate::Mean,
        )
        .unwrap();
        assert_eq!(two, vec![4.0; 6]);

        // Goal Setting = items 1..=5. Member scores: 1.0, 3.0, (5+5+5+1+1)/5 = 3.4 -> mean 7.4/3.
        let mut third = [5u8; N_ITEMS];
        third[3] = 1;
        third[4] = 1;
        let three = [resp("p1", [1; N_ITEMS]), resp("p2", [3; N_ITEMS]), resp("p3", third)];
        let v = team_oslq(&three, &map, OslqAggregate::Mean).unwrap();
        assert!((v[0] - 7.4 / 3.0).abs() < 1e-12);
        assert!((v[1] - 3.0).abs() < 1e-12);
        let mx = team_oslq(&three, &map, OslqAggregate::Max).unwrap();
        assert_eq!(mx[0], 3.4);
        let mn = team_oslq(&three, &map, OslqAggregate::Min).unwrap();
        assert_eq!(mn[0], 1.0);

        assert!(matches!(
            team_oslq(&[], &map, OslqAggregate::Mean),
            Err(Error::EmptyTeam)
        ));
    }

    fn tiny_cohort(order_reversed: bool) -> Cohort {
        let mut responses = vec![
            ParticipantResponse::new("p1", "B", [4; N_ITEMS]),
            ParticipantResponse::new("p2", "A", [2; N_ITEMS]),
        ];
        let mut snaps = vec![
            snap("p1", "B", TaskWindow::Task0, ActivityCounts::new(1, 2, 3, 4)),
            snap("p2", "A", TaskWindow::Task0, ActivityCounts::new(5, 6, 7, 8)),
        ];
        let mut subs = vec![
            SubmissionRecord {
                team_id: "B".into(),
                task: TaskWindow::Task0,
                score: Some(1.0),
                stage2_selected: None,
            },
            SubmissionRecord {
                team_id: "A".into(),
                task: TaskWindow::Task0,
                score: None,
                stage2_selected: None,
            },
        ];
        if order_reversed {
            responses.reverse();
            snaps.reverse();
            subs.reverse();
        }
        merge_cohort(&responses, &snaps, &subs).unwrap().0
    }

    #[test]
    fn assemble_shape_and_order() {
        let map = SubscaleMap::oslq();
        let (m, y) = assemble(&tiny_cohort(false), TaskWindow::Task0, &map, OslqAggregate::Mean).unwrap();
        assert_eq!(m.n_rows(), 2);
        assert_eq!(m.n_cols(), 10);
        assert_eq!(m.team_ids, vec!["A", "B"]);
        assert_eq!(&m.columns[..4], &ACTIVITY_FEATURES);
        assert_eq!(m.columns[4], "oslq_goal_setting");
        assert_eq!(y, vec![0, 1]);
        // Team A: likes_received 8, likes_given 7, topics 5, posts 6.
        assert_eq!(&m.rows[0][..4], &[8.0, 7.0, 5.0, 6.0]);
        assert_eq!(m.rows[0][4], 2.0);

        let (m2, y2) = assemble(&tiny_cohort(true), TaskWindow::Task0, &map, OslqAggregate::Mean).unwrap();
        assert_eq!(m, m2);
        assert_eq!(y, y2);

        assert!(matches!(
            assemble(&tiny_cohort(false), TaskWindow::Task1, &map, OslqAggregate::Mean),
            Err(Error::MissingLabel { .. })
        ));
    }

    fn counts() -> impl Strategy<Value = ActivityCounts> {
        (0u64..50, 0u64..50, 0u64..50, 0u64..50).prop_map(|(a, b, c, d)| ActivityCounts::new(a, b, c, d))
    }

    proptest! {
        #[test]
        fn cumulative_is_monotone(per_window in prop::collection::vec(counts(), 4)) {
            let s: Vec<_> = TaskWindow::ALL
                .iter()
                .zip(&per_window)
                .map(|(&w, &c)| snap("p", "A", w, c))
                .collect();
            for (i, &w1) in TaskWindow::ALL.iter().enumerate() {
                for &w2 in &TaskWindow::ALL[i..] {
                    let a = cumulative_activity(&s, "p", w1);
                    let b = cumulative_activity(&s, "p", w2);
                    prop_assert!(b.dominates(&a));
                }
            }
        }

        #[test]
        fn team_max_permutation_invariant(mut members in prop::collection::vec(counts(), 1..6)) {
            let a = team_max(&members).unwrap();
            members.reverse();
            prop_assert_eq!(team_max(&members).unwrap(), a);
            members.rotate_left(1);
            prop_assert_eq!(team_max(&members).unwrap(), a);
            prop_assert_eq!(team_max(&members[..1]).unwrap(), members[0]);
        }
    }
}
