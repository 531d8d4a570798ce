use serde::{Deserialize, Serialize};

use super::exemplars::ExemplarSet;
use crate::corpus::Label;

pub const ZERO_SHOT_TEMPLATE: &str = include_str!("../../templates/zero_shot.txt");
pub const FEW_SHOT_TEMPLATE: &str = include_str!("../../templates/few_shot.txt");
pub const NEW_MESSAGE_TEMPLATE: &str = include_str!("../../templates/new_message.txt");
pub const TEMPLATE_VERSION: &str = "1";

const DELIMITER: &str = "\"\"\"";
const ESCAPED_DELIMITER: &str = "'''";
const NEW_MESSAGE_MARKER: &str = "New message:\n\"\"\"\n";
const CLOSING: &str = "\n\"\"\"\n";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    ZeroShot,
    FewShot,
}

impl PromptKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptKind::ZeroShot => "zero_shot",
            PromptKind::FewShot => "few_shot",
        }
    }
}

impl std::fmt::Display for PromptKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PromptKind {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "zero" | "zero_shot" | "zero-shot" => Ok(PromptKind::ZeroShot),
            "few" | "few_shot" | "few-shot" => Ok(PromptKind::FewShot),
            _ => Err(PromptError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PromptError {
    #[error("message text is empty")]
    EmptyMessage,
    #[error("exemplar set has no {0} examples")]
    EmptyExemplarClass(Label),
    #[error("zero-shot prompts take no exemplars")]
    UnexpectedExemplars,
    #[error("few-shot prompts need an exemplar set")]
    MissingExemplars,
    #[error("unknown prompt kind {0:?}")]
    UnknownKind(String),
    #[error("prompt has no delimited new message")]
    NoMessage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub kind: PromptKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exemplars: Option<ExemplarSet>,
    pub template_version: String,
}

impl PromptSpec {
    pub fn zero_shot() -> Self {
        Self {
            kind: PromptKind::ZeroShot,
            exemplars: None,
            template_version: TEMPLATE_VERSION.to_string(),
        }
    }

    pub fn few_shot(exemplars: ExemplarSet) -> Self {
        Self {
            kind: PromptKind::FewShot,
            exemplars: Some(exemplars),
            template_version: TEMPLATE_VERSION.to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        match (self.kind, &self.exemplars) {
            (PromptKind::ZeroShot, None) => Ok(()),
            (PromptKind::ZeroShot, Some(_)) => Err(PromptError::UnexpectedExemplars),
            (PromptKind::FewShot, None) => Err(PromptError::MissingExemplars),
            (PromptKind::FewShot, Some(set)) => check_classes(set),
        }
    }

    /// Instruction part of the prompt, sent as the system message.
    pub fn preamble(&self) -> Result<String, PromptError> {
        self.validate()?;
        match &self.exemplars {
            None => Ok(ZERO_SHOT_TEMPLATE.to_string()),
            Some(set) => few_shot_preamble(set),
        }
    }

    pub fn render(&self, message_text: &str) -> Result<RenderedPrompt, PromptError> {
        let system = self.preamble()?;
        let user = message_block(message_text)?;
        Ok(RenderedPrompt { system, user })
    }
}

/// A prompt split into the chat roles it is sent as.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

impl RenderedPrompt {
    pub fn full_text(&self) -> String {
        format!("{}{}", self.system, self.user)
    }
}

pub fn escape_delimiter(text: &str) -> String {
    text.replace(DELIMITER, ESCAPED_DELIMITER)
}

/// `New message:` followed by the escaped text between triple quotes.
pub fn message_block(message_text: &str) -> Result<String, PromptError> {
    if message_text.trim().is_empty() {
        return Err(PromptError::EmptyMessage);
    }
    Ok(NEW_MESSAGE_TEMPLATE.replace("{message}", &escape_delimiter(message_text)))
}

pub fn render_zero_shot(message_text: &str) -> Result<String, PromptError> {
    Ok(PromptSpec::zero_shot().render(message_text)?.full_text())
}

pub fn render_few_shot(exemplars: &ExemplarSet, message_text: &str) -> Result<String, PromptError> {
    check_classes(exemplars)?;
    Ok(format!("{}{}", few_shot_preamble(exemplars)?, message_block(message_text)?))
}

/// Recovers the (escaped) new message from a rendered prompt or user block.
pub fn extract_message(prompt: &str) -> Result<&str, PromptError> {
    let start = prompt.rfind(NEW_MESSAGE_MARKER).ok_or(PromptError::NoMessage)? + NEW_MESSAGE_MARKER.len();
    prompt[start..].strip_suffix(CLOSING).ok_or(PromptError::NoMessage)
}

fn check_classes(set: &ExemplarSet) -> Result<(), PromptError> {
    if set.admin.is_empty() {
        return Err(PromptError::EmptyExemplarClass(Label::Admin));
    }
    if set.clinical.is_empty() {
        return Err(PromptError::EmptyExemplarClass(Label::Clinical));
    }
    Ok(())
}

fn numbered(texts: impl Iterator<Item = String>, label: Label) -> String {
    texts
        .enumerate()
        .map(|(i, t)| format!("{}. {}, {}", i + 1, escape_delimiter(&t), label))
        .collect::<Vec<_>>()
        .join("\n")
}

fn few_shot_preamble(set: &ExemplarSet) -> Result<String, PromptError> {
    check_classes(set)?;
    let canonical = set.canonical();
    let admin = numbered(canonical.admin.into_iter().map(|e| e.text), Label::Admin);
    let clinical = numbered(canonical.clinical.into_iter().map(|e| e.text), Label::Clinical);
    Ok(FEW_SHOT_TEMPLATE
        .replacen("{admin_examples}", &admin, 1)
        .replacen("{clinical_examples}", &clinical, 1))
}
