use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::clean::clean;

/// Binary triage label. Clinical is the positive class throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Admin,
    Clinical,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Admin, Label::Clinical];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Admin => "Admin",
            Label::Clinical => "Clinical",
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Admin => Label::Clinical,
            Label::Clinical => Label::Admin,
        }
    }

    pub fn is_clinical(self) -> bool {
        self == Label::Clinical
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Admin" => Ok(Label::Admin),
            "Clinical" => Ok(Label::Clinical),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SenderType {
    #[serde(rename = "PATIENT")]
    Patient,
    #[serde(rename = "EMP")]
    Emp,
    /// Clinician-titled employee.
    #[serde(rename = "PROVIDER")]
    Provider,
}

impl SenderType {
    pub fn as_str(self) -> &'static str {
        match self {
            SenderType::Patient => "PATIENT",
            SenderType::Emp => "EMP",
            SenderType::Provider => "PROVIDER",
        }
    }
}

impl FromStr for SenderType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "PATIENT" => Ok(SenderType::Patient),
            "EMP" => Ok(SenderType::Emp),
            "PROVIDER" => Ok(SenderType::Provider),
            other => Err(format!("unknown sender_type {other:?}")),
        }
    }
}

/// One patient-portal message together with its routing metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Message {
    pub id: String,
    pub encounter_id: String,
    #[serde(with = "utc_z")]
    pub timestamp: DateTime<Utc>,
    pub sender_type: SenderType,
    pub sender_has_clinician_ser: bool,
    pub has_order_activity: bool,
    pub has_note_activity: bool,
    pub subject: String,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<Label>,
}

impl Message {
    /// The single classification text: subject and body joined and normalized.
    pub fn text(&self) -> String {
        clean(&self.subject, &self.body)
    }
}

/// An ordered, id-unique collection of messages.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub messages: Vec<Message>,
    pub provenance: String,
}

impl Corpus {
    pub fn new(messages: Vec<Message>, provenance: impl Into<String>) -> Self {
        Self {
            messages,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Message> {
        self.messages.iter()
    }

    pub fn get(&self, id: &str) -> Option<&Message> {
        self.messages.iter().find(|m| m.id == id)
    }

    /// Returns the messages whose ids are listed, in the order of `ids`.
    /// Unknown ids are skipped.
    pub fn select(&self, ids: &[String]) -> Corpus {
        let index: std::collections::HashMap<&str, &Message> =
            self.messages.iter().map(|m| (m.id.as_str(), m)).collect();
        let messages = ids
            .iter()
            .filter_map(|id| index.get(id.as_str()).map(|m| (*m).clone()))
            .collect();
        Corpus::new(messages, self.provenance.clone())
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Message;
    type IntoIter = std::slice::Iter<'a, Message>;

    fn into_iter(self) -> Self::IntoIter {
        self.messages.iter()
    }
}

/// Formats a timestamp the way the message file stores it (`...Z`).
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Parses an ISO-8601 instant that carries the `Z` designator.
pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>, String> {
    if !s.ends_with('Z') {
        return Err(format!("timestamp {s:?} lacks the Z zone designator"));
    }
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| format!("bad timestamp {s:?}: {e}"))
}

pub(crate) mod utc_z {
    use super::*;

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_timestamp(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        parse_timestamp(&raw).map_err(serde::de::Error::custom)
    }
}
