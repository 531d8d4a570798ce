//! Prompting a teacher model for labels: templates, transport, parsing,
//! exemplar sampling and the verdict cache.

mod batch;
mod cache;
mod client;
mod exemplars;
mod mock;
mod presets;
mod prompt;
mod verdict;

pub use batch::{backoff, label_batch, BatchError, BatchReport, FailureKind, LabelFailure};
pub use cache::{read_verdicts, LabelCache};
pub use client::{
    ChatMessage, ChatRequest, ConfigError, HttpTeacher, TeacherBackend, TeacherConfig, TransportError, API_KEY_ENV,
    BASE_URL_ENV, DEFAULT_BASE_URL,
};
pub use exemplars::{sample_exemplars, Exemplar, ExemplarError, ExemplarSet};
pub use mock::{canned_explanation, mock_flips, mock_router, mock_teacher, MockBackend, MockError, MockServerHandle};
pub use presets::{Preset, FULL_EXEMPLAR_BUDGET};
pub use prompt::{
    escape_delimiter, extract_message, message_block, render_few_shot, render_zero_shot, PromptError, PromptKind,
    PromptSpec, RenderedPrompt, FEW_SHOT_TEMPLATE, NEW_MESSAGE_TEMPLATE, TEMPLATE_VERSION, ZERO_SHOT_TEMPLATE,
};
pub use verdict::{canonical_response, parse_verdict, ParseFailure, TeacherVerdict};
