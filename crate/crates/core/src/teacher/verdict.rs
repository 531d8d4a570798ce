use serde::{Deserialize, Serialize};

use super::prompt::PromptKind;
use crate::corpus::Label;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeacherVerdict {
    pub message_id: String,
    pub label: Label,
    pub explanation: String,
    pub raw: String,
    pub teacher_model: String,
    pub prompt_kind: PromptKind,
}

impl TeacherVerdict {
    /// The response form requested by the prompts.
    pub fn canonical_form(&self) -> String {
        canonical_response(self.label, &self.explanation)
    }
}

pub fn canonical_response(label: Label, explanation: &str) -> String {
    format!("({label}), {explanation}")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("unparseable teacher response for {message_id}: {reason}")]
pub struct ParseFailure {
    pub message_id: String,
    pub raw: String,
    pub reason: String,
}

// longest first so "Administrative" is not read as "Admin" + "istrative"
const LABEL_FORMS: [(&str, Label); 3] = [
    ("administrative", Label::Admin),
    ("admin", Label::Admin),
    ("clinical", Label::Clinical),
];

fn strip_prefix_ci<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    let head = s.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix).then(|| &s[prefix.len()..])
}

fn leading_label(s: &str) -> Option<(Label, &str)> {
    let (inner, parenthesized) = match s.strip_prefix('(') {
        Some(rest) => (rest.trim_start(), true),
        None => (s, false),
    };
    let (label, rest) = LABEL_FORMS
        .iter()
        .find_map(|(form, label)| strip_prefix_ci(inner, form).map(|rest| (*label, rest)))?;
    let rest = if parenthesized {
        rest.trim_start().strip_prefix(')')?
    } else {
        rest
    };
    if rest.chars().next().is_some_and(|c| c.is_alphanumeric()) {
        return None;
    }
    Some((label, rest))
}

/// Reads the leading label token and the explanation that follows it.
/// Accepts `(Admin)`, `(Clinical)`, `Admin`, `Clinical` and `Administrative`
/// in any case, then an optional comma. A response without a recognizable
/// label or without an explanation is a [`ParseFailure`].
pub fn parse_verdict(
    raw: &str,
    message_id: &str,
    teacher_model: &str,
    prompt_kind: PromptKind,
) -> Result<TeacherVerdict, ParseFailure> {
    let fail = |reason: &str| ParseFailure {
        message_id: message_id.to_string(),
        raw: raw.to_string(),
        reason: reason.to_string(),
    };
    let trimmed = raw.trim_start();
    if trimmed.is_empty() {
        return Err(fail("empty response"));
    }
    let (label, rest) = leading_label(trimmed).ok_or_else(|| fail("no leading label"))?;
    let rest = rest.trim_start();
    let explanation = rest.strip_prefix(',').unwrap_or(rest).trim();
    if explanation.is_empty() {
        return Err(fail("missing explanation"));
    }
    Ok(TeacherVerdict {
        message_id: message_id.to_string(),
        label,
        explanation: explanation.to_string(),
        raw: raw.to_string(),
        teacher_model: teacher_model.to_string(),
        prompt_kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(raw: &str) -> Result<TeacherVerdict, ParseFailure> {
        parse_verdict(raw, "m1", "gpt-4-32k", PromptKind::FewShot)
    }

    #[test]
    fn canonical_clinical() {
        let v = parse("(Clinical), Patient reports new back pain requiring assessment.").unwrap();
        assert_eq!(v.label, Label::Clinical);
        assert_eq!(v.explanation, "Patient reports new back pain requiring assessment.");
    }

    #[test]
    fn lowercase_bare_admin() {
        assert_eq!(parse("admin, scheduling request").unwrap().label, Label::Admin);
    }

    #[test]
    fn no_label() {
        let e = parse("I think this could be either.").unwrap_err();
        assert_eq!(e.raw, "I think this could be either.");
    }

    #[test]
    fn word_prefix_is_not_a_label() {
        assert!(parse("Administration of the form is pending").is_err());
        assert!(parse("Clinically, this is urgent").is_err());
    }

    proptest! {
        #[test]
        fn canonical_round_trip(clinical: bool, explanation in "[A-Za-z][A-Za-z ,.]{0,60}") {
            let label = if clinical { Label::Clinical } else { Label::Admin };
            let v = parse(&canonical_response(label, &explanation)).unwrap();
            prop_assert_eq!(v.label, label);
            prop_assert_eq!(parse(&v.canonical_form()).unwrap().label, label);
            prop_assert_eq!(v.explanation, explanation.trim());
        }
    }
}
