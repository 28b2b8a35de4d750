//! Corpus ingestion, reference labeling and synthetic corpus generation.
//!
//! * [`trace`]: the line-oriented decoded-trace file format.
//! * [`preprocess`]: field filtering, `KEY=VALUE` flattening, truncation and
//!   seeded sampling into a [`Corpus`](crate::message::Corpus).
//! * [`rules`]: the hand-written reference abstraction.
//! * [`synth`]: TLS-like synthetic corpora with ground-truth classes.

pub mod preprocess;
pub mod rules;
pub mod synth;
pub mod trace;

pub use preprocess::{message_tokens, preprocess, PreprocessOptions};
pub use rules::{apply_rules, default_rules, parse_rules, read_rules, AbstractionRule, DEFAULT_RULES};
pub use synth::{generate_synthetic, nearest_template, tls_templates, ClassTemplate, Slot, SynthSpec};
pub use trace::{parse_trace_file, parse_traces, serialize_traces, DecodedMessage, DecodedRow, DecodedTrace};
