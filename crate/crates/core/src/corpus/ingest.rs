use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::clean::normalize;
use super::message::{parse_timestamp, Corpus, Label, Message, SenderType};

/// Why a single record was refused.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RejectReason {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("{0}")]
    BadTimestamp(String),
    #[error("unknown sender_type {0:?}")]
    UnknownSenderType(String),
    #[error("unknown gold_label {0:?}")]
    UnknownLabel(String),
    #[error("empty id")]
    EmptyId,
    #[error("body is empty after cleaning")]
    EmptyBody,
    #[error("PROVIDER sender without a clinician service role")]
    ProviderWithoutClinicianSer,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reject {
    /// 1-based line number in the input stream.
    pub line: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: duplicate message id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("{path}: {count} record(s) rejected, first at line {first_line}: {first_reason}")]
    Rejected {
        path: String,
        count: usize,
        first_line: usize,
        first_reason: RejectReason,
    },
}

#[derive(Debug)]
pub struct IngestReport {
    pub corpus: Corpus,
    pub rejects: Vec<Reject>,
}

// Everything optional so that a missing field is reported by name instead of
// as a generic serde failure.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: Option<String>,
    encounter_id: Option<String>,
    timestamp: Option<String>,
    sender_type: Option<String>,
    sender_has_clinician_ser: Option<bool>,
    has_order_activity: Option<bool>,
    has_note_activity: Option<bool>,
    subject: Option<String>,
    body: Option<String>,
    gold_label: Option<String>,
    // Present in weak-labeled corpora; recomputed from metadata on demand.
    #[allow(dead_code)]
    weak_group: Option<String>,
}

fn require<T>(v: Option<T>, name: &'static str) -> Result<T, RejectReason> {
    v.ok_or(RejectReason::MissingField(name))
}

fn validate(raw: RawRecord) -> Result<Message, RejectReason> {
    let id = require(raw.id, "id")?;
    if id.trim().is_empty() {
        return Err(RejectReason::EmptyId);
    }
    let encounter_id = require(raw.encounter_id, "encounter_id")?;
    let timestamp = parse_timestamp(&require(raw.timestamp, "timestamp")?)
        .map_err(RejectReason::BadTimestamp)?;
    let sender_raw = require(raw.sender_type, "sender_type")?;
    let sender_type: SenderType = sender_raw
        .parse()
        .map_err(|_| RejectReason::UnknownSenderType(sender_raw))?;
    let sender_has_clinician_ser =
        require(raw.sender_has_clinician_ser, "sender_has_clinician_ser")?;
    let has_order_activity = require(raw.has_order_activity, "has_order_activity")?;
    let has_note_activity = require(raw.has_note_activity, "has_note_activity")?;
    let subject = normalize(&require(raw.subject, "subject")?);
    let body = normalize(&require(raw.body, "body")?);
    let gold_label = match raw.gold_label {
        None => None,
        Some(s) => Some(s.parse::<Label>().map_err(|_| RejectReason::UnknownLabel(s))?),
    };

    if body.is_empty() {
        return Err(RejectReason::EmptyBody);
    }
    if sender_type == SenderType::Provider && !sender_has_clinician_ser {
        return Err(RejectReason::ProviderWithoutClinicianSer);
    }

    Ok(Message {
        id,
        encounter_id,
        timestamp,
        sender_type,
        sender_has_clinician_ser,
        has_order_activity,
        has_note_activity,
        subject,
        body,
        gold_label,
    })
}

/// Reads message records, one JSON object per line, validating and cleaning each.
///
/// Invalid records are collected in [`IngestReport::rejects`] with their line
/// number. A repeated id aborts the whole ingest.
pub fn ingest<R: BufRead>(reader: R, provenance: &str) -> Result<IngestReport, IngestError> {
    let mut messages = Vec::new();
    let mut rejects = Vec::new();
    let mut seen = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RawRecord>(&line)
            .map_err(|e| RejectReason::Malformed(e.to_string()))
            .and_then(validate);
        match parsed {
            Ok(msg) => {
                if !seen.insert(msg.id.clone()) {
                    return Err(IngestError::DuplicateId {
                        line: line_no,
                        id: msg.id,
                    });
                }
                messages.push(msg);
            }
            Err(reason) => rejects.push(Reject {
                line: line_no,
                reason,
            }),
        }
    }

    Ok(IngestReport {
        corpus: Corpus::new(messages, provenance),
        rejects,
    })
}

pub fn ingest_path(path: &Path) -> Result<IngestReport, IngestError> {
    let file = File::open(path)?;
    ingest(BufReader::new(file), &path.display().to_string())
}

/// Loads a corpus file that is expected to be clean; any reject is an error.
pub fn load_corpus(path: &Path) -> Result<Corpus, IngestError> {
    let report = ingest_path(path)?;
    if let Some(first) = report.rejects.first() {
        return Err(IngestError::Rejected {
            path: path.display().to_string(),
            count: report.rejects.len(),
            first_line: first.line,
            first_reason: first.reason.clone(),
        });
    }
    Ok(report.corpus)
}

pub fn write_corpus<W: Write>(mut writer: W, corpus: &Corpus) -> io::Result<()> {
    for msg in &corpus.messages {
        serde_json::to_writer(&mut writer, msg)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_corpus(path: &Path, corpus: &Corpus) -> io::Result<()> {
    write_corpus(BufWriter::new(File::create(path)?), corpus)
}
