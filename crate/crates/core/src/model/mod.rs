//! The two-branch tagging network: token embeddings, a transformer encoder
//! with a shared/task-specific layer split, a cascaded decoder that
//! consumes term-label queries, and the tagging heads.

mod checkpoint;
mod config;
mod forward;
mod infer;
mod params;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
pub use config::EncoderConfig;
pub use forward::{
    asc_branch, ate_branch, bind_params, consistent_scores, embed_tokens, encode, encode_from,
    AscOut, Bound, BranchOut, Mode,
};
pub use infer::{predict_sentence, Prediction};
pub use params::{param_group, ModelParams, ParamEntry, ParamGroup, INIT_STD};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("sequence of {len} ids exceeds max_len {max}")]
    Overlength { len: usize, max: usize },
    #[error("token id {id} outside vocabulary of size {vocab}")]
    UnknownTokenId { id: usize, vocab: usize },
    #[error("id sequence must be framed by [CLS] and [SEP]")]
    MissingSpecialFrame,
    #[error("query label id {id} outside the term tag set")]
    BadLabelId { id: usize },
    #[error("query stream length {got} does not match sequence length {want}")]
    QueryLengthMismatch { got: usize, want: usize },
    #[error("shape mismatch copying {from} into {to}")]
    ShapeIncompatible { from: String, to: String },
    #[error("perturbation has {got} elements, embeddings have {want}")]
    PerturbationShape { got: usize, want: usize },
}
