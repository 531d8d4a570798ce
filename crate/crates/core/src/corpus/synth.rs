//! Synthetic patient-message corpus.
//!
//! Messages come from per-class template families (four administrative, four
//! clinical). Each family owns its slot vocabularies, and the class
//! vocabularies are disjoint except for the glue words in [`FUNCTION_WORDS`].
//! `overlap` is the probability that any slot is instead filled from a
//! class-neutral pool, which is how shared content tokens enter the corpus.

use chrono::{Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::message::{Corpus, Label, Message, SenderType};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_messages: usize,
    /// Fraction of Clinical messages.
    pub class_balance: f64,
    /// Probability that a content slot draws from the class-neutral pool.
    pub overlap: f64,
    pub seed: u64,
    /// Number of template families used per class, 1..=4.
    pub templates_per_class: usize,
    /// Probability that routing metadata agrees with the message's class.
    /// Inconsistent messages are written as plain patient messages.
    pub metadata_consistency: f64,
}

impl SynthConfig {
    pub fn new(n_messages: usize, seed: u64) -> Self {
        Self {
            n_messages,
            class_balance: 0.5,
            overlap: 0.2,
            seed,
            templates_per_class: FAMILIES_PER_CLASS,
            metadata_consistency: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_messages < 2 {
            return Err(SynthError::Invalid(format!(
                "n_messages must be at least 2, got {}",
                self.n_messages
            )));
        }
        for (name, v) in [
            ("class_balance", self.class_balance),
            ("overlap", self.overlap),
            ("metadata_consistency", self.metadata_consistency),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SynthError::Invalid(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(1..=FAMILIES_PER_CLASS).contains(&self.templates_per_class) {
            return Err(SynthError::Invalid(format!(
                "templates_per_class must lie in 1..={FAMILIES_PER_CLASS}, got {}",
                self.templates_per_class
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic corpus config: {0}")]
    Invalid(String),
}

/// Generator output with the bookkeeping the corpus itself does not carry.
#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// Template family per message, `0..4` administrative, `4..8` clinical.
    pub template_ids: Vec<usize>,
}

pub const FAMILIES_PER_CLASS: usize = 4;

/// Glue words shared by every template. Everything else is a content token.
pub const FUNCTION_WORDS: &[&str] = &[
    "a", "about", "am", "an", "and", "any", "are", "at", "be", "been", "but", "can", "could",
    "do", "does", "for", "from", "get", "good", "has", "have", "hello", "hi", "i", "if", "is",
    "in", "it", "just", "know", "let", "me", "morning", "much", "my", "need", "of", "on", "or", "please",
    "should", "so", "some", "still", "that", "thank", "thanks", "the", "there", "this", "to",
    "was", "we", "what", "when", "will", "with", "would", "you", "your",
];

const GREETINGS: &[&str] = &["", "Hi,", "Hello,", "Good morning,", "Hi there,"];
const CLOSINGS: &[&str] = &["", "Thanks.", "Thank you.", "Thanks so much."];

const NEUTRAL_POOL: &[&str] = &[
    "covid", "booster", "vaccine", "clinic", "office", "today", "message", "doctor", "nurse",
    "health", "team", "call", "soon", "asap", "again", "week", "quick", "update", "okay",
    "portal",
];

struct Family {
    subjects: &'static [&'static str],
    patterns: &'static [&'static str],
    slots: [&'static [&'static str]; 3],
}

const ADMIN_FAMILIES: [Family; FAMILIES_PER_CLASS] = [
    // scheduling
    Family {
        subjects: &["Appointment", "Scheduling", "Reschedule", "Visit date"],
        patterns: &[
            "I need to {0} my {1} on {2}.",
            "Could you {0} the {1} for {2}?",
            "Is it possible to {0} my {1}? {2} would work.",
        ],
        slots: [
            &["reschedule", "cancel", "book", "move", "confirm", "postpone", "arrange"],
            &["appointment", "checkup", "physical", "visit", "slot", "consultation", "annual"],
            &["tuesday", "wednesday", "thursday", "friday", "monday", "saturday", "tomorrow"],
        ],
    },
    // forms and insurance
    Family {
        subjects: &["Insurance Form", "Paperwork", "Form request", "Billing"],
        patterns: &[
            "Can you please {0} my {1}? It is for my {2}.",
            "Have you had time to {0} the {1} for my {2}?",
            "I need the {1} {0} for the {2}.",
        ],
        slots: [
            &["sign", "complete", "fax", "fill", "submit", "stamp", "notarize"],
            &["paperwork", "form", "letter", "statement", "claim", "invoice", "certificate"],
            &["employer", "insurer", "school", "agency", "reimbursement", "coverage", "hr"],
        ],
    },
    // refill logistics
    Family {
        subjects: &["Refill", "Pharmacy", "Prescription transfer"],
        patterns: &[
            "Please {0} my {1} to the {2} pharmacy.",
            "Could you {0} the {1} to {2}?",
            "My {1} needs to {0} over to {2}.",
        ],
        slots: [
            &["transfer", "send", "forward", "switch", "reroute", "route"],
            &["prescription", "refill", "script", "renewal", "order"],
            &["cvs", "walgreens", "walmart", "costco", "kroger", "mailorder", "express"],
        ],
    },
    // records and account
    Family {
        subjects: &["Records", "Immunization record", "Account access"],
        patterns: &[
            "Can you {0} my {1} in the {2}?",
            "Please {0} the {1} on my {2}.",
            "I would like to {0} my {1} through the {2}.",
        ],
        slots: [
            &["amend", "upload", "release", "print", "correct", "share", "change"],
            &["records", "immunization", "address", "phonenumber", "referral", "card", "email"],
            &["account", "file", "chart", "login", "profile", "system", "mychart"],
        ],
    },
];

const CLINICAL_FAMILIES: [Family; FAMILIES_PER_CLASS] = [
    // symptoms
    Family {
        subjects: &["Pain", "Symptoms", "Not feeling well"],
        patterns: &[
            "I have been having {0} in my {1} for {2}.",
            "There is {0} in my {1}, it started {2} ago.",
            "My {1} has {0} for {2} now.",
        ],
        slots: [
            &["pain", "swelling", "numbness", "tingling", "cramping", "burning", "throbbing"],
            &["chest", "knee", "shoulder", "stomach", "throat", "ankle", "neck"],
            &["days", "weeks", "hours", "nights", "fortnight", "months", "yesterday"],
        ],
    },
    // medication effects
    Family {
        subjects: &["Medication", "Side effects", "Dosage question"],
        patterns: &[
            "Since starting {1} I get {0}. Should I lower the {2}?",
            "The {1} is giving me {0}, can we adjust the {2}?",
            "I get {0} after my {1} {2}.",
        ],
        slots: [
            &["dizziness", "nausea", "rash", "insomnia", "fatigue", "headaches", "palpitations"],
            &["lisinopril", "metformin", "sertraline", "atorvastatin", "amlodipine", "gabapentin", "prednisone"],
            &["dose", "dosage", "mg", "milligrams", "tablet", "pills", "capsule"],
        ],
    },
    // results
    Family {
        subjects: &["Labs", "Test results", "Imaging results"],
        patterns: &[
            "Here are my labs. My {0} was {1} on the {2}.",
            "My {2} showed {1} {0}. What does that mean?",
            "The {2} came back with {1} {0}.",
        ],
        slots: [
            &["cholesterol", "glucose", "potassium", "hemoglobin", "thyroid", "creatinine", "a1c"],
            &["elevated", "abnormal", "borderline", "flagged", "high", "low", "irregular"],
            &["mri", "xray", "ultrasound", "biopsy", "scan", "ekg", "bloodwork"],
        ],
    },
    // chronic conditions
    Family {
        subjects: &["Condition", "Worsening", "Treatment"],
        patterns: &[
            "My {0} is getting {1}, is my {2} still right?",
            "The {0} has been {1} even with the {2}.",
            "I think my {0} is {1}. Should we modify the {2}?",
        ],
        slots: [
            &["anxiety", "depression", "asthma", "diabetes", "hypertension", "migraines", "reflux"],
            &["worse", "flaring", "uncontrolled", "worsening", "unbearable", "severe", "persistent"],
            &["inhaler", "therapy", "treatment", "insulin", "breathing", "sleep", "regimen"],
        ],
    },
];

/// Lowercased alphanumeric tokens that are not glue words.
pub fn content_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .filter(|t| !FUNCTION_WORDS.contains(&t.as_str()))
        .collect()
}

fn fill(rng: &mut ChaCha8Rng, options: &[&str], overlap: f64) -> String {
    let pool = if rng.gen::<f64>() < overlap { NEUTRAL_POOL } else { options };
    pool.choose(rng).copied().unwrap_or_default().to_string()
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn render(rng: &mut ChaCha8Rng, family: &Family, overlap: f64) -> (String, String) {
    let subject = if rng.gen::<f64>() < overlap {
        capitalize(NEUTRAL_POOL.choose(rng).unwrap())
    } else {
        family.subjects.choose(rng).unwrap().to_string()
    };
    let mut sentence = family.patterns.choose(rng).unwrap().to_string();
    for (i, slot) in family.slots.iter().enumerate() {
        let word = fill(rng, slot, overlap);
        sentence = sentence.replace(&format!("{{{i}}}"), &word);
    }
    let greeting = GREETINGS.choose(rng).unwrap();
    let closing = CLOSINGS.choose(rng).unwrap();
    let body = [*greeting, capitalize(&sentence).as_str(), *closing]
        .iter()
        .filter(|p| !p.is_empty())
        .copied()
        .collect::<Vec<_>>()
        .join(" ");
    (subject, body)
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<Corpus, SynthError> {
    generate_synthetic_detailed(config).map(|s| s.corpus)
}

pub fn generate_synthetic_detailed(config: &SynthConfig) -> Result<SyntheticCorpus, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n_messages;
    let n_clinical = (n as f64 * config.class_balance).round() as usize;
    let mut labels: Vec<Label> = std::iter::repeat_n(Label::Clinical, n_clinical)
        .chain(std::iter::repeat_n(Label::Admin, n - n_clinical))
        .collect();
    labels.shuffle(&mut rng);

    let start = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
    let mut clock = start;
    let mut messages = Vec::with_capacity(n);
    let mut template_ids = Vec::with_capacity(n);
    for (i, label) in labels.into_iter().enumerate() {
        let family_idx = rng.gen_range(0..config.templates_per_class);
        let (families, base) = match label {
            Label::Admin => (&ADMIN_FAMILIES, 0),
            Label::Clinical => (&CLINICAL_FAMILIES, FAMILIES_PER_CLASS),
        };
        let (subject, body) = render(&mut rng, &families[family_idx], config.overlap);
        clock += Duration::minutes(rng.gen_range(1..=120));

        let consistent = rng.gen::<f64>() < config.metadata_consistency;
        let (sender_type, ser, order, note) = match (consistent, label) {
            (false, _) => (SenderType::Patient, false, false, false),
            (true, Label::Admin) => (SenderType::Emp, false, rng.gen_bool(0.2), rng.gen_bool(0.2)),
            (true, Label::Clinical) => {
                let (order, note) = [(true, false), (false, true), (true, true)]
                    .choose(&mut rng)
                    .copied()
                    .unwrap();
                (SenderType::Provider, true, order, note)
            }
        };

        messages.push(Message {
            id: format!("msg-{i:06}"),
            encounter_id: format!("enc-{i:06}"),
            timestamp: clock,
            sender_type,
            sender_has_clinician_ser: ser,
            has_order_activity: order,
            has_note_activity: note,
            subject,
            body,
            gold_label: Some(label),
        });
        template_ids.push(base + family_idx);
    }

    Ok(SyntheticCorpus {
        corpus: Corpus::new(messages, format!("synthetic(seed={})", config.seed)),
        template_ids,
    })
}
