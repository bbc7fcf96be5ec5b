use std::collections::BTreeSet;

use attrition_core::ingest::{
    load_activity, load_responses, load_submissions, merge_cohort, write_activity, write_responses, write_submissions,
    DropReason, TaskWindow,
};
use attrition_core::synth::{gen_dropout_cohort, DropoutPlan};

#[test]
fn written_cohort_reloads_identically() {
    let c = gen_dropout_cohort(&DropoutPlan {
        n_teams: 60,
        seed: 5,
        ..DropoutPlan::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    c.write(dir.path()).unwrap();
    let responses = load_responses(&dir.path().join("responses.csv")).unwrap();
    let snapshots = load_activity(&dir.path().join("activity.csv")).unwrap();
    let submissions = load_submissions(&dir.path().join("submissions.csv")).unwrap();
    assert_eq!(responses, c.responses);
    assert_eq!(snapshots, c.snapshots);
    assert_eq!(submissions, c.submissions);
    assert!(dir.path().join("ground_truth.json").exists());

    let (cohort, summary) = merge_cohort(&responses, &snapshots, &submissions).unwrap();
    assert_eq!(summary.kept, 60);
    let out = tempfile::tempdir().unwrap();
    cohort.write_csvs(out.path()).unwrap();
    let again = merge_cohort(
        &load_responses(&out.path().join("responses.csv")).unwrap(),
        &load_activity(&out.path().join("activity.csv")).unwrap(),
        &load_submissions(&out.path().join("submissions.csv")).unwrap(),
    )
    .unwrap()
    .0;
    assert_eq!(again, cohort);
}

#[test]
fn full_scale_fixture_has_every_window() {
    let c = gen_dropout_cohort(&DropoutPlan {
        n_teams: 1290,
        seed: 1,
        ..DropoutPlan::default()
    })
    .unwrap();
    let teams: BTreeSet<&str> = c.submissions.iter().map(|s| s.team_id.as_str()).collect();
    assert_eq!(teams.len(), 1290);
    assert_eq!(c.submissions.len(), 1290 * 4);
    for w in TaskWindow::ALL {
        assert_eq!(c.submissions.iter().filter(|s| s.task == w).count(), 1290);
    }
}

/// 1520 registered teams; 230 lack one of the three sources.
#[test]
fn join_keeps_complete_teams_only() {
    let c = gen_dropout_cohort(&DropoutPlan {
        n_teams: 1520,
        seed: 9,
        ..DropoutPlan::default()
    })
    .unwrap();
    let team = |i: usize| format!("T{i:04}");
    let no_responses: BTreeSet<String> = (0..50).map(team).collect();
    let no_activity: BTreeSet<String> = (50..150).map(team).collect();
    let no_submissions: BTreeSet<String> = (150..230).map(team).collect();

    let responses: Vec<_> = c
        .responses
        .iter()
        .filter(|r| !no_responses.contains(&r.team_id))
        .cloned()
        .collect();
    let snapshots: Vec<_> = c
        .snapshots
        .iter()
        .filter(|s| !no_activity.contains(&s.team_id))
        .cloned()
        .collect();
    let submissions: Vec<_> = c
        .submissions
        .iter()
        .filter(|s| !no_submissions.contains(&s.team_id))
        .cloned()
        .collect();

    // Through files, as the CLI would see them.
    let dir = tempfile::tempdir().unwrap();
    write_responses(&dir.path().join("r.csv"), &responses).unwrap();
    write_activity(&dir.path().join("a.csv"), &snapshots).unwrap();
    write_submissions(&dir.path().join("s.csv"), &submissions).unwrap();
    let (cohort, summary) = merge_cohort(
        &load_responses(&dir.path().join("r.csv")).unwrap(),
        &load_activity(&dir.path().join("a.csv")).unwrap(),
        &load_submissions(&dir.path().join("s.csv")).unwrap(),
    )
    .unwrap();
    assert_eq!(cohort.len(), 1290);
    assert_eq!(summary.kept, 1290);
    assert_eq!(summary.dropped[&DropReason::NoResponses], 50);
    assert_eq!(summary.dropped[&DropReason::NoActivity], 100);
    assert_eq!(summary.dropped[&DropReason::NoSubmissions], 80);
    assert_eq!(summary.total_dropped(), 230);
    assert!(cohort.teams.keys().all(|t| t.as_str() >= "T0230"));
}
