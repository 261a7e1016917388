//! Tag schemas, corpus ingestion, vocabulary, batching, and the synthetic
//! corpus generator.

mod batch;
mod corpus;
mod encode;
mod schema;
mod synth;
mod vocab;

pub use batch::{epoch_batches, shuffled_indices};
pub use corpus::{load_corpus, parse_corpus, render_corpus, save_corpus, TaggedSentence};
pub use encode::{encode_example, EncodedSentence};
pub use schema::{PolarityTag, TermTag};
pub use synth::{synth_generate, SynthConfig};
pub use vocab::{Vocab, CLS, PAD, SEP, SPECIALS, UNK};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected 3 tab-separated fields")]
    FieldCount { line: usize },
    #[error("line {line}: unknown {set} tag '{tag}'")]
    UnknownTag { line: usize, tag: String, set: &'static str },
    #[error("line {line}: token/tag sequences have different lengths")]
    LengthMismatch { line: usize },
    #[error("line {line}: 'I' tag without a preceding 'B' or 'I'")]
    OrphanInside { line: usize },
    #[error("line {line}: polarity tag on a non-term token")]
    PolarityOutsideTerm { line: usize },
    #[error("line {line}: term token without a polarity tag")]
    MissingPolarity { line: usize },
    #[error("line {line}: tokens of one term carry different polarities")]
    InconsistentPolarity { line: usize },
    #[error("sentence of {len} tokens exceeds the {max}-token limit; skipped, not truncated")]
    Overlong { len: usize, max: usize },
}
