//! Review store: teacher-labeled items and reviewer verdicts kept in an
//! append-only log of JSON lines. All state is rebuilt by replaying the log.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label, Message};
use crate::teacher::TeacherVerdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewStatus {
    Pending,
    Reviewed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub message_id: String,
    pub text: String,
    pub teacher_label: Label,
    pub teacher_explanation: String,
    pub status: ReviewStatus,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewVerdict {
    pub message_id: String,
    pub reviewer_id: String,
    pub agrees: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrected_label: Option<Label>,
    #[serde(default)]
    pub note: String,
    #[serde(with = "crate::corpus::utc_z")]
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReviewError {
    #[error("reviewer {reviewer_id} already judged {message_id}")]
    Duplicate { message_id: String, reviewer_id: String },
    #[error("unknown message {0}")]
    UnknownMessage(String),
    #[error("invalid verdict: {0}")]
    Invalid(String),
    #[error("review log line {line}: {message}")]
    CorruptLog { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum LogEntry {
    Item {
        message_id: String,
        text: String,
        teacher_label: Label,
        teacher_explanation: String,
    },
    Verdict(ReviewVerdict),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReviewerStats {
    pub reviewer_id: String,
    pub count: usize,
    pub agreements: usize,
    pub agreement_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub reviewer_a: String,
    pub reviewer_b: String,
    pub co_reviewed: usize,
    pub matching: usize,
    pub agreement: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReviewStats {
    pub total_items: usize,
    pub reviewed_items: usize,
    pub total_verdicts: usize,
    /// Share of all verdicts that agree with the teacher.
    pub teacher_agreement: Option<f64>,
    pub reviewers: Vec<ReviewerStats>,
    pub pairwise: Vec<PairAgreement>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub reviewed: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidatedRecord {
    pub message_id: String,
    pub text: String,
    pub label: Label,
    pub teacher_label: Label,
    pub n_verdicts: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExportResult {
    pub records: Vec<ValidatedRecord>,
    /// Items whose votes split evenly between the two labels.
    pub ties: Vec<String>,
    /// Items nobody has reviewed yet.
    pub unreviewed: Vec<String>,
}

#[derive(Default)]
pub struct ReviewStore {
    sink: Option<File>,
    items: Vec<ReviewItem>,
    index: HashMap<String, usize>,
    verdicts: Vec<ReviewVerdict>,
    judged: HashSet<(String, String)>,
}

impl std::fmt::Debug for ReviewStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReviewStore")
            .field("items", &self.items.len())
            .field("verdicts", &self.verdicts.len())
            .finish()
    }
}

impl ReviewItem {
    pub fn from_verdict(verdict: &TeacherVerdict, message: &Message) -> Self {
        Self {
            message_id: verdict.message_id.clone(),
            text: message.text(),
            teacher_label: verdict.label,
            teacher_explanation: verdict.explanation.clone(),
            status: ReviewStatus::Pending,
        }
    }
}

/// Review items for every verdict whose message is in the corpus, in verdict
/// order. Returns the items and the ids of verdicts without a message.
pub fn items_from_verdicts(verdicts: &[TeacherVerdict], corpus: &Corpus) -> (Vec<ReviewItem>, Vec<String>) {
    let mut items = Vec::new();
    let mut missing = Vec::new();
    for v in verdicts {
        match corpus.get(&v.message_id) {
            Some(m) => items.push(ReviewItem::from_verdict(v, m)),
            None => missing.push(v.message_id.clone()),
        }
    }
    (items, missing)
}

impl ReviewVerdict {
    /// The label this verdict argues for.
    pub fn effective_label(&self, teacher_label: Label) -> Label {
        if self.agrees {
            teacher_label
        } else {
            self.corrected_label.unwrap_or(teacher_label.flipped())
        }
    }
}

impl ReviewStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (creating if needed) a log file and replays it.
    pub fn open(path: &Path) -> Result<Self, ReviewError> {
        let mut store = Self::default();
        if path.exists() {
            store.replay(BufReader::new(File::open(path)?))?;
        }
        store.sink = Some(OpenOptions::new().create(true).append(true).open(path)?);
        Ok(store)
    }

    pub fn replay<R: BufRead>(&mut self, reader: R) -> Result<(), ReviewError> {
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let corrupt = |message: String| ReviewError::CorruptLog { line: i + 1, message };
            let entry: LogEntry = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
            match entry {
                LogEntry::Item {
                    message_id,
                    text,
                    teacher_label,
                    teacher_explanation,
                } => {
                    self.apply_item(ReviewItem {
                        message_id,
                        text,
                        teacher_label,
                        teacher_explanation,
                        status: ReviewStatus::Pending,
                    });
                }
                LogEntry::Verdict(v) => {
                    self.validate(&v).map_err(|e| corrupt(e.to_string()))?;
                    self.apply_verdict(v);
                }
            }
        }
        Ok(())
    }

    fn append(&mut self, entry: &LogEntry) -> io::Result<()> {
        if let Some(f) = self.sink.as_mut() {
            let mut line = serde_json::to_string(entry).map_err(io::Error::other)?;
            line.push('\n');
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        Ok(())
    }

    fn apply_item(&mut self, item: ReviewItem) -> bool {
        if self.index.contains_key(&item.message_id) {
            return false;
        }
        self.index.insert(item.message_id.clone(), self.items.len());
        self.items.push(item);
        true
    }

    fn apply_verdict(&mut self, v: ReviewVerdict) {
        let idx = self.index[&v.message_id];
        self.items[idx].status = ReviewStatus::Reviewed;
        self.judged.insert((v.message_id.clone(), v.reviewer_id.clone()));
        self.verdicts.push(v);
    }

    /// Adds items not yet in the store; returns how many were new.
    pub fn add_items(&mut self, items: impl IntoIterator<Item = ReviewItem>) -> Result<usize, ReviewError> {
        let mut added = 0;
        for item in items {
            if self.index.contains_key(&item.message_id) {
                continue;
            }
            self.append(&LogEntry::Item {
                message_id: item.message_id.clone(),
                text: item.text.clone(),
                teacher_label: item.teacher_label,
                teacher_explanation: item.teacher_explanation.clone(),
            })?;
            self.apply_item(ReviewItem {
                status: ReviewStatus::Pending,
                ..item
            });
            added += 1;
        }
        Ok(added)
    }

    fn validate(&self, v: &ReviewVerdict) -> Result<(), ReviewError> {
        if v.reviewer_id.trim().is_empty() {
            return Err(ReviewError::Invalid("reviewer_id is empty".into()));
        }
        let idx = *self
            .index
            .get(&v.message_id)
            .ok_or_else(|| ReviewError::UnknownMessage(v.message_id.clone()))?;
        let teacher = self.items[idx].teacher_label;
        match (v.agrees, v.corrected_label) {
            (false, None) => return Err(ReviewError::Invalid("an override needs corrected_label".into())),
            (false, Some(l)) if l == teacher => {
                return Err(ReviewError::Invalid("corrected_label equals the teacher label".into()))
            }
            (true, Some(_)) => return Err(ReviewError::Invalid("an agreeing verdict takes no corrected_label".into())),
            _ => {}
        }
        if self.judged.contains(&(v.message_id.clone(), v.reviewer_id.clone())) {
            return Err(ReviewError::Duplicate {
                message_id: v.message_id.clone(),
                reviewer_id: v.reviewer_id.clone(),
            });
        }
        Ok(())
    }

    pub fn submit(&mut self, verdict: ReviewVerdict) -> Result<(), ReviewError> {
        self.validate(&verdict)?;
        self.append(&LogEntry::Verdict(verdict.clone()))?;
        self.apply_verdict(verdict);
        Ok(())
    }

    pub fn items(&self) -> &[ReviewItem] {
        &self.items
    }

    pub fn verdicts(&self) -> &[ReviewVerdict] {
        &self.verdicts
    }

    /// Earliest loaded item this reviewer has not judged, with the
    /// reviewer's progress.
    pub fn next_for(&self, reviewer_id: &str) -> Option<(ReviewItem, Progress)> {
        let reviewed = self.items.iter().filter(|i| self.has_judged(&i.message_id, reviewer_id)).count();
        self.items
            .iter()
            .find(|i| !self.has_judged(&i.message_id, reviewer_id))
            .map(|i| {
                (
                    i.clone(),
                    Progress {
                        reviewed,
                        total: self.items.len(),
                    },
                )
            })
    }

    fn has_judged(&self, message_id: &str, reviewer_id: &str) -> bool {
        self.judged.contains(&(message_id.to_string(), reviewer_id.to_string()))
    }

    fn teacher_label(&self, message_id: &str) -> Label {
        self.items[self.index[message_id]].teacher_label
    }

    pub fn stats(&self) -> ReviewStats {
        let mut per: BTreeMap<&str, ReviewerStats> = BTreeMap::new();
        // reviewer -> message -> effective label
        let mut labels: BTreeMap<&str, HashMap<&str, Label>> = BTreeMap::new();
        for v in &self.verdicts {
            let s = per.entry(&v.reviewer_id).or_insert_with(|| ReviewerStats {
                reviewer_id: v.reviewer_id.clone(),
                ..ReviewerStats::default()
            });
            s.count += 1;
            s.agreements += usize::from(v.agrees);
            labels
                .entry(&v.reviewer_id)
                .or_default()
                .insert(&v.message_id, v.effective_label(self.teacher_label(&v.message_id)));
        }
        let reviewers: Vec<ReviewerStats> = per
            .into_values()
            .map(|mut s| {
                s.agreement_rate = Some(s.agreements as f64 / s.count as f64);
                s
            })
            .collect();
        let names: Vec<&str> = labels.keys().copied().collect();
        let mut pairwise = Vec::new();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                let (la, lb) = (&labels[a], &labels[b]);
                let mut co = 0;
                let mut matching = 0;
                for (m, l) in la {
                    if let Some(other) = lb.get(m) {
                        co += 1;
                        matching += usize::from(l == other);
                    }
                }
                pairwise.push(PairAgreement {
                    reviewer_a: a.to_string(),
                    reviewer_b: b.to_string(),
                    co_reviewed: co,
                    matching,
                    agreement: (co > 0).then(|| matching as f64 / co as f64),
                });
            }
        }
        let agrees = self.verdicts.iter().filter(|v| v.agrees).count();
        ReviewStats {
            total_items: self.items.len(),
            reviewed_items: self.items.iter().filter(|i| i.status == ReviewStatus::Reviewed).count(),
            total_verdicts: self.verdicts.len(),
            teacher_agreement: (!self.verdicts.is_empty()).then(|| agrees as f64 / self.verdicts.len() as f64),
            reviewers,
            pairwise,
        }
    }

    /// Adjudicated labels. Unanimous agreement keeps the teacher label;
    /// otherwise every verdict votes for its effective label and the majority
    /// wins. Even splits are excluded and listed as ties.
    pub fn export(&self) -> ExportResult {
        let mut votes: HashMap<&str, [usize; 2]> = HashMap::new();
        for v in &self.verdicts {
            let l = v.effective_label(self.teacher_label(&v.message_id));
            votes.entry(&v.message_id).or_default()[usize::from(l.is_clinical())] += 1;
        }
        let mut out = ExportResult::default();
        for item in &self.items {
            let Some(&[admin, clinical]) = votes.get(item.message_id.as_str()) else {
                out.unreviewed.push(item.message_id.clone());
                continue;
            };
            let label = match admin.cmp(&clinical) {
                std::cmp::Ordering::Greater => Label::Admin,
                std::cmp::Ordering::Less => Label::Clinical,
                std::cmp::Ordering::Equal => {
                    out.ties.push(item.message_id.clone());
                    continue;
                }
            };
            out.records.push(ValidatedRecord {
                message_id: item.message_id.clone(),
                text: item.text.clone(),
                label,
                teacher_label: item.teacher_label,
                n_verdicts: admin + clinical,
            });
        }
        out
    }
}

pub fn write_export<W: Write>(mut w: W, export: &ExportResult) -> io::Result<()> {
    for r in &export.records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
