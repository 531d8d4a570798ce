//! HTTP classification and review service.

mod http;
mod review;

pub use http::{
    bind, load_checked_model, router, serve, serve_listener, ApiError, AppState, ClassifyRequest, ClassifyResponse,
    NextItem, ServeError, VerdictRequest, MAX_TEXT_BYTES,
};
pub use review::{
    items_from_verdicts, write_export, ExportResult, PairAgreement, Progress, ReviewError, ReviewItem, ReviewStats,
    ReviewStatus, ReviewStore, ReviewVerdict, ReviewerStats, ValidatedRecord,
};
