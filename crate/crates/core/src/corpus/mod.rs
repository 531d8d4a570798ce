//! Message data model, ingestion, cleaning, encounter collapsing, splitting and
//! the synthetic corpus generator.

mod clean;
mod encounters;
mod ingest;
mod message;
mod split;
pub mod synth;

pub use clean::{clean, normalize};
pub use encounters::first_message_per_encounter;
pub use ingest::{
    ingest, ingest_path, load_corpus, save_corpus, write_corpus, IngestError, IngestReport,
    Reject, RejectReason,
};
pub(crate) use message::utc_z;
pub use message::{format_timestamp, parse_timestamp, Corpus, Label, Message, SenderType};
pub use split::{parse_ratios, split, DatasetSplit, SplitError};
pub use synth::{generate_synthetic, generate_synthetic_detailed, SynthConfig, SynthError, SyntheticCorpus};
