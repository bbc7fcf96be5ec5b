//! Input files: questionnaire responses, per-window forum activity and task
//! submissions. Parsing, validation, label encoding and the team-level join.
//!
//! All three files are comma-separated UTF-8 with a fixed header:
//!
//! * `responses.csv`: `participant_id,team_id,item_01,...,item_24`
//! * `activity.csv`: `participant_id,team_id,window,topics_entered,posts_read,likes_given,likes_received`
//! * `submissions.csv`: `team_id,task,score,stage2_selected`
//!
//! Identifiers are opaque strings.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Questionnaire length.
pub const N_ITEMS: usize = 24;

pub const ACTIVITY_HEADER: [&str; 7] = [
    "participant_id",
    "team_id",
    "window",
    "topics_entered",
    "posts_read",
    "likes_given",
    "likes_received",
];

pub const SUBMISSIONS_HEADER: [&str; 4] = ["team_id", "task", "score", "stage2_selected"];

pub fn responses_header() -> Vec<String> {
    let mut h = vec!["participant_id".to_string(), "team_id".to_string()];
    h.extend((1..=N_ITEMS).map(|i| format!("item_{i:02}")));
    h
}

/// Deadline-bounded task window. The derived order is the competition timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskWindow {
    #[serde(rename = "task0")]
    Task0,
    #[serde(rename = "task1")]
    Task1,
    #[serde(rename = "task2")]
    Task2,
    Stage2Gate,
}

impl TaskWindow {
    pub const ALL: [TaskWindow; 4] = [
        TaskWindow::Task0,
        TaskWindow::Task1,
        TaskWindow::Task2,
        TaskWindow::Stage2Gate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskWindow::Task0 => "task0",
            TaskWindow::Task1 => "task1",
            TaskWindow::Task2 => "task2",
            TaskWindow::Stage2Gate => "stage2_gate",
        }
    }

    /// Short name used in report tables (`stage2` rather than `stage2_gate`).
    pub fn report_name(self) -> &'static str {
        match self {
            TaskWindow::Stage2Gate => "stage2",
            other => other.as_str(),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TaskWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskWindow {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "task0" => Ok(TaskWindow::Task0),
            "task1" => Ok(TaskWindow::Task1),
            "task2" => Ok(TaskWindow::Task2),
            "stage2_gate" | "stage2" => Ok(TaskWindow::Stage2Gate),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantResponse {
    pub participant_id: String,
    pub team_id: String,
    pub items: [u8; N_ITEMS],
}

impl ParticipantResponse {
    /// Panics if an item is outside 1..=5; use the loaders for untrusted input.
    pub fn new(participant_id: impl Into<String>, team_id: impl Into<String>, items: [u8; N_ITEMS]) -> Self {
        assert!(
            items.iter().all(|v| (1..=5).contains(v)),
            "Likert items must be in 1..=5"
        );
        Self {
            participant_id: participant_id.into(),
            team_id: team_id.into(),
            items,
        }
    }
}

/// The four forum counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityCounts {
    pub topics_entered: u64,
    pub posts_read: u64,
    pub likes_given: u64,
    pub likes_received: u64,
}

impl ActivityCounts {
    pub fn new(topics_entered: u64, posts_read: u64, likes_given: u64, likes_received: u64) -> Self {
        Self {
            topics_entered,
            posts_read,
            likes_given,
            likes_received,
        }
    }

    pub fn max(self, o: Self) -> Self {
        Self {
            topics_entered: self.topics_entered.max(o.topics_entered),
            posts_read: self.posts_read.max(o.posts_read),
            likes_given: self.likes_given.max(o.likes_given),
            likes_received: self.likes_received.max(o.likes_received),
        }
    }

    /// All counters element-wise `>=` the other's.
    pub fn dominates(&self, o: &Self) -> bool {
        self.topics_entered >= o.topics_entered
            && self.posts_read >= o.posts_read
            && self.likes_given >= o.likes_given
            && self.likes_received >= o.likes_received
    }
}

impl std::ops::Add for ActivityCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            topics_entered: self.topics_entered + o.topics_entered,
            posts_read: self.posts_read + o.posts_read,
            likes_given: self.likes_given + o.likes_given,
            likes_received: self.likes_received + o.likes_received,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivitySnapshot {
    pub participant_id: String,
    pub team_id: String,
    pub window: TaskWindow,
    pub counts: ActivityCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionRecord {
    pub team_id: String,
    pub task: TaskWindow,
    /// `None` means the team never submitted.
    pub score: Option<f64>,
    /// Only meaningful on `stage2_gate` rows.
    pub stage2_selected: Option<bool>,
}

/// 1 iff a score is present (a score of 0 still counts as submitted).
pub fn encode_label(record: &SubmissionRecord) -> u8 {
    u8::from(record.score.is_some())
}

/// Label used for prediction targets. Gate rows carry an explicit selection
/// flag which takes precedence over score presence.
pub fn target_label(record: &SubmissionRecord) -> u8 {
    match (record.task, record.stage2_selected) {
        (TaskWindow::Stage2Gate, Some(selected)) => u8::from(selected),
        _ => encode_label(record),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamEntry {
    pub team_id: String,
    pub responses: Vec<ParticipantResponse>,
    pub snapshots: Vec<ActivitySnapshot>,
    pub submissions: Vec<SubmissionRecord>,
    pub labels: BTreeMap<TaskWindow, u8>,
}

/// Teams present in all three sources, keyed and ordered by `team_id`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Cohort {
    pub teams: BTreeMap<String, TeamEntry>,
}

impl Cohort {
    pub fn len(&self) -> usize {
        self.teams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.teams.is_empty()
    }

    pub fn responses(&self) -> impl Iterator<Item = &ParticipantResponse> {
        self.teams.values().flat_map(|t| t.responses.iter())
    }

    /// Writes the cohort back out as the three input files.
    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let responses: Vec<_> = self.teams.values().flat_map(|t| t.responses.clone()).collect();
        let snapshots: Vec<_> = self.teams.values().flat_map(|t| t.snapshots.clone()).collect();
        let submissions: Vec<_> = self.teams.values().flat_map(|t| t.submissions.clone()).collect();
        write_responses(&dir.join("responses.csv"), &responses)?;
        write_activity(&dir.join("activity.csv"), &snapshots)?;
        write_submissions(&dir.join("submissions.csv"), &submissions)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    NoResponses,
    NoActivity,
    NoSubmissions,
}

/// Join bookkeeping. Each dropped team is counted once, under the first
/// missing source in the order responses, activity, submissions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MergeSummary {
    pub kept: usize,
    pub dropped: BTreeMap<DropReason, usize>,
    pub dropped_teams: Vec<(String, DropReason)>,
}

impl MergeSummary {
    pub fn total_dropped(&self) -> usize {
        self.dropped.values().sum()
    }
}

/// Inner join on `team_id` across the three sources.
pub fn merge_cohort(
    responses: &[ParticipantResponse],
    snapshots: &[ActivitySnapshot],
    submissions: &[SubmissionRecord],
) -> Result<(Cohort, MergeSummary)> {
    let resp_teams: BTreeSet<&str> = responses.iter().map(|r| r.team_id.as_str()).collect();
    let act_teams: BTreeSet<&str> = snapshots.iter().map(|s| s.team_id.as_str()).collect();
    let sub_teams: BTreeSet<&str> = submissions.iter().map(|s| s.team_id.as_str()).collect();

    let mut all: BTreeSet<&str> = resp_teams.clone();
    all.extend(&act_teams);
    all.extend(&sub_teams);

    let mut summary = MergeSummary::default();
    let mut teams = BTreeMap::new();
    for team in all {
        let reason = if !resp_teams.contains(team) {
            Some(DropReason::NoResponses)
        } else if !act_teams.contains(team) {
            Some(DropReason::NoActivity)
        } else if !sub_teams.contains(team) {
            Some(DropReason::NoSubmissions)
        } else {
            None
        };
        match reason {
            Some(r) => {
                *summary.dropped.entry(r).or_insert(0) += 1;
                summary.dropped_teams.push((team.to_string(), r));
            }
            None => {
                teams.insert(
                    team.to_string(),
                    TeamEntry {
                        team_id: team.to_string(),
                        responses: Vec::new(),
                        snapshots: Vec::new(),
                        submissions: Vec::new(),
                        labels: BTreeMap::new(),
                    },
                );
            }
        }
    }
    if teams.is_empty() {
        return Err(Error::EmptyCohort);
    }
    for r in responses {
        if let Some(t) = teams.get_mut(&r.team_id) {
            t.responses.push(r.clone());
        }
    }
    for s in snapshots {
        if let Some(t) = teams.get_mut(&s.team_id) {
            t.snapshots.push(s.clone());
        }
    }
    for s in submissions {
        if let Some(t) = teams.get_mut(&s.team_id) {
            t.labels.insert(s.task, target_label(s));
            t.submissions.push(s.clone());
        }
    }
    summary.kept = teams.len();
    Ok((Cohort { teams }, summary))
}

// ---------------------------------------------------------------------------
// Parsing

fn file_label(path: &Path) -> String {
    path.display().to_string()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn csv_error(file: &str, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        file: file.to_string(),
        line,
        rule: e.to_string(),
    }
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, file: &str, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(|e| csv_error(file, e))?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::Parse {
            file: file.to_string(),
            line: 1,
            rule: format!("header must be `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

struct Row<'a> {
    file: &'a str,
    line: u64,
    rec: csv::StringRecord,
}

impl Row<'_> {
    fn id(&self, idx: usize, column: &str) -> Result<String> {
        let v = &self.rec[idx];
        if v.is_empty() {
            return Err(self.parse_err(format!("`{column}` must not be empty")));
        }
        Ok(v.to_string())
    }

    fn int(&self, idx: usize, column: &str) -> Result<i64> {
        self.rec[idx]
            .parse::<i64>()
            .map_err(|_| self.parse_err(format!("`{column}` must be an integer, found `{}`", &self.rec[idx])))
    }

    fn count(&self, idx: usize, column: &str) -> Result<u64> {
        let v = self.int(idx, column)?;
        if v < 0 {
            return Err(Error::NegativeCount {
                file: self.file.to_string(),
                line: self.line,
                column: column.to_string(),
                value: v,
            });
        }
        Ok(v as u64)
    }

    fn parse_err(&self, rule: String) -> Error {
        Error::Parse {
            file: self.file.to_string(),
            line: self.line,
            rule,
        }
    }
}

fn rows<'a, R: Read>(rdr: &'a mut csv::Reader<R>, file: &'a str) -> impl Iterator<Item = Result<Row<'a>>> + 'a {
    rdr.records().map(move |rec| {
        let rec = rec.map_err(|e| csv_error(file, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        Ok(Row { file, line, rec })
    })
}

pub fn load_responses(path: &Path) -> Result<Vec<ParticipantResponse>> {
    read_responses(open(path)?, &file_label(path))
}

pub fn read_responses<R: Read>(reader: R, file: &str) -> Result<Vec<ParticipantResponse>> {
    let mut rdr = csv_reader(reader);
    let header = responses_header();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    check_header(&mut rdr, file, &header_refs)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rows(&mut rdr, file) {
        let row = row?;
        let participant_id = row.id(0, "participant_id")?;
        let team_id = row.id(1, "team_id")?;
        let mut items = [0u8; N_ITEMS];
        for (i, item) in items.iter_mut().enumerate() {
            let column = &header[i + 2];
            let v = row.int(i + 2, column)?;
            if !(1..=5).contains(&v) {
                return Err(Error::Range {
                    file: file.to_string(),
                    line: row.line,
                    column: column.clone(),
                    value: v,
                });
            }
            *item = v as u8;
        }
        if !seen.insert(participant_id.clone()) {
            return Err(Error::Duplicate {
                file: file.to_string(),
                line: row.line,
                key: format!("participant_id={participant_id}"),
            });
        }
        out.push(ParticipantResponse {
            participant_id,
            team_id,
            items,
        });
    }
    Ok(out)
}

pub fn load_activity(path: &Path) -> Result<Vec<ActivitySnapshot>> {
    read_activity(open(path)?, &file_label(path))
}

pub fn read_activity<R: Read>(reader: R, file: &str) -> Result<Vec<ActivitySnapshot>> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, file, &ACTIVITY_HEADER)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rows(&mut rdr, file) {
        let row = row?;
        let participant_id = row.id(0, "participant_id")?;
        let team_id = row.id(1, "team_id")?;
        let window: TaskWindow = row.rec[2].parse().map_err(|value| Error::UnknownWindow {
            file: file.to_string(),
            line: row.line,
            value,
        })?;
        let counts = ActivityCounts {
            topics_entered: row.count(3, ACTIVITY_HEADER[3])?,
            posts_read: row.count(4, ACTIVITY_HEADER[4])?,
            likes_given: row.count(5, ACTIVITY_HEADER[5])?,
            likes_received: row.count(6, ACTIVITY_HEADER[6])?,
        };
        if !seen.insert((participant_id.clone(), window)) {
            return Err(Error::Duplicate {
                file: file.to_string(),
                line: row.line,
                key: format!("participant_id={participant_id}, window={window}"),
            });
        }
        out.push(ActivitySnapshot {
            participant_id,
            team_id,
            window,
            counts,
        });
    }
    Ok(out)
}

pub fn load_submissions(path: &Path) -> Result<Vec<SubmissionRecord>> {
    read_submissions(open(path)?, &file_label(path))
}

pub fn read_submissions<R: Read>(reader: R, file: &str) -> Result<Vec<SubmissionRecord>> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, file, &SUBMISSIONS_HEADER)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rows(&mut rdr, file) {
        let row = row?;
        let team_id = row.id(0, "team_id")?;
        let task: TaskWindow = row.rec[1].parse().map_err(|value| Error::UnknownWindow {
            file: file.to_string(),
            line: row.line,
            value,
        })?;
        let score = match &row.rec[2] {
            "" => None,
            s => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| row.parse_err(format!("`score` must be a number or empty, found `{s}`")))?;
                if !v.is_finite() || v < 0.0 {
                    return Err(row.parse_err(format!("`score` must be finite and >= 0, found `{s}`")));
                }
                Some(v)
            }
        };
        let stage2_selected = match &row.rec[3] {
            "" => None,
            "0" => Some(false),
            "1" => Some(true),
            s => return Err(row.parse_err(format!("`stage2_selected` must be 0, 1 or empty, found `{s}`"))),
        };
        if stage2_selected.is_some() && task != TaskWindow::Stage2Gate {
            return Err(row.parse_err("`stage2_selected` is only allowed on stage2_gate rows".into()));
        }
        if !seen.insert((team_id.clone(), task)) {
            return Err(Error::Duplicate {
                file: file.to_string(),
                line: row.line,
                key: format!("team_id={team_id}, task={task}"),
            });
        }
        out.push(SubmissionRecord {
            team_id,
            task,
            score,
            stage2_selected,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Writing

fn create(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn csv_write_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

pub fn write_responses(path: &Path, responses: &[ParticipantResponse]) -> Result<()> {
    let mut w = create(path)?;
    let res: std::result::Result<(), csv::Error> = (|| {
        w.write_record(responses_header())?;
        for r in responses {
            let mut rec = vec![r.participant_id.clone(), r.team_id.clone()];
            rec.extend(r.items.iter().map(u8::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    })();
    res.map_err(|e| csv_write_err(path, e))
}

pub fn write_activity(path: &Path, snapshots: &[ActivitySnapshot]) -> Result<()> {
    let mut w = create(path)?;
    let res: std::result::Result<(), csv::Error> = (|| {
        w.write_record(ACTIVITY_HEADER)?;
        for s in snapshots {
            let c = &s.counts;
            w.write_record([
                s.participant_id.clone(),
                s.team_id.clone(),
                s.window.to_string(),
                c.topics_entered.to_string(),
                c.posts_read.to_string(),
                c.likes_given.to_string(),
                c.likes_received.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })();
    res.map_err(|e| csv_write_err(path, e))
}

pub fn write_submissions(path: &Path, submissions: &[SubmissionRecord]) -> Result<()> {
    let mut w = create(path)?;
    let res: std::result::Result<(), csv::Error> = (|| {
        w.write_record(SUBMISSIONS_HEADER)?;
        for s in submissions {
            w.write_record([
                s.team_id.clone(),
                s.task.to_string(),
                s.score.map(|v| v.to_string()).unwrap_or_default(),
                match s.stage2_selected {
                    None => String::new(),
                    Some(b) => u8::from(b).to_string(),
                },
            ])?;
        }
        w.flush()?;
        Ok(())
    })();
    res.map_err(|e| csv_write_err(path, e))
}

/// Writes any serializable value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    let s = serde_json::to_string_pretty(value)?;
    f.write_all(s.as_bytes())
        .and_then(|_| f.write_all(b"\n"))
        .map_err(|e| Error::io(path, e))
}
