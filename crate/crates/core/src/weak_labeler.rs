//! Retrospective grouping of messages from routing metadata alone.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Message, SenderType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeakGroup {
    #[serde(rename = "possible_admin")]
    PossibleAdministrative,
    #[serde(rename = "possible_clinical")]
    PossibleClinical,
    #[serde(rename = "uncategorized")]
    Uncategorized,
}

impl WeakGroup {
    pub const ALL: [WeakGroup; 3] = [
        WeakGroup::PossibleAdministrative,
        WeakGroup::PossibleClinical,
        WeakGroup::Uncategorized,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WeakGroup::PossibleAdministrative => "possible_admin",
            WeakGroup::PossibleClinical => "possible_clinical",
            WeakGroup::Uncategorized => "uncategorized",
        }
    }
}

impl fmt::Display for WeakGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeakGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WeakGroup::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| format!("unknown weak group {s:?}"))
    }
}

/// Clinical rule first: a provider acting with an order or note. Otherwise an
/// employee without a clinician service role is administrative.
pub fn assign_group(message: &Message) -> WeakGroup {
    let clinical_activity = message.has_order_activity || message.has_note_activity;
    if message.sender_type == SenderType::Provider && clinical_activity {
        WeakGroup::PossibleClinical
    } else if message.sender_type == SenderType::Emp && !message.sender_has_clinician_ser {
        WeakGroup::PossibleAdministrative
    } else {
        WeakGroup::Uncategorized
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCensus {
    pub possible_admin: usize,
    pub possible_clinical: usize,
    pub uncategorized: usize,
}

impl GroupCensus {
    pub fn total(&self) -> usize {
        self.possible_admin + self.possible_clinical + self.uncategorized
    }

    pub fn get(&self, group: WeakGroup) -> usize {
        match group {
            WeakGroup::PossibleAdministrative => self.possible_admin,
            WeakGroup::PossibleClinical => self.possible_clinical,
            WeakGroup::Uncategorized => self.uncategorized,
        }
    }
}

pub fn census(corpus: &Corpus) -> GroupCensus {
    let mut c = GroupCensus::default();
    for msg in corpus {
        match assign_group(msg) {
            WeakGroup::PossibleAdministrative => c.possible_admin += 1,
            WeakGroup::PossibleClinical => c.possible_clinical += 1,
            WeakGroup::Uncategorized => c.uncategorized += 1,
        }
    }
    c
}

/// Serializes a message as its file record plus a `weak_group` field.
pub fn grouped_record(message: &Message) -> serde_json::Value {
    let mut value = serde_json::to_value(message).expect("message serializes");
    if let serde_json::Value::Object(map) = &mut value {
        map.insert(
            "weak_group".into(),
            serde_json::Value::String(assign_group(message).as_str().into()),
        );
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, Label, SynthConfig};
    use chrono::Utc;

    fn msg(sender: SenderType, ser: bool, order: bool, note: bool) -> Message {
        Message {
            id: "m".into(),
            encounter_id: "e".into(),
            timestamp: Utc::now(),
            sender_type: sender,
            sender_has_clinician_ser: ser,
            has_order_activity: order,
            has_note_activity: note,
            subject: String::new(),
            body: "x".into(),
            gold_label: None,
        }
    }

    #[test]
    fn paper_examples() {
        assert_eq!(
            assign_group(&msg(SenderType::Emp, false, false, false)),
            WeakGroup::PossibleAdministrative
        );
        assert_eq!(
            assign_group(&msg(SenderType::Provider, true, true, false)),
            WeakGroup::PossibleClinical
        );
        assert_eq!(
            assign_group(&msg(SenderType::Patient, false, false, false)),
            WeakGroup::Uncategorized
        );
    }

    #[test]
    fn clinician_titled_emp_is_uncategorized() {
        assert_eq!(
            assign_group(&msg(SenderType::Emp, true, false, false)),
            WeakGroup::Uncategorized
        );
        assert_eq!(
            assign_group(&msg(SenderType::Provider, true, false, false)),
            WeakGroup::Uncategorized
        );
    }

    #[test]
    fn order_flag_keeps_provider_clinical() {
        for note in [false, true] {
            let mut m = msg(SenderType::Provider, true, false, note);
            let before = assign_group(&m);
            m.has_order_activity = true;
            assert_eq!(assign_group(&m), WeakGroup::PossibleClinical);
            if before == WeakGroup::PossibleClinical {
                assert_eq!(assign_group(&m), before);
            }
        }
    }

    #[test]
    fn empty_census() {
        assert_eq!(census(&Corpus::default()), GroupCensus::default());
    }

    #[test]
    fn census_matches_generator_bookkeeping() {
        let corpus = generate_synthetic(&SynthConfig::new(500, 12)).unwrap();
        let c = census(&corpus);
        let clinical = corpus.iter().filter(|m| m.gold_label == Some(Label::Clinical)).count();
        assert_eq!(c.possible_clinical, clinical);
        assert_eq!(c.possible_admin, corpus.len() - clinical);
        assert_eq!(c.uncategorized, 0);
        assert_eq!(c.total(), corpus.len());
    }

    #[test]
    fn grouped_record_has_weak_group() {
        let v = grouped_record(&msg(SenderType::Emp, false, false, false));
        assert_eq!(v["weak_group"], "possible_admin");
        assert_eq!(v["sender_type"], "EMP");
    }
}
