//! Joint aspect-term / aspect-sentiment sequence labeling at desk scale:
//! a small transformer encoder with a cascaded label-conditioned decoder,
//! gradient-harmonized cross-entropy for label imbalance, and virtual
//! adversarial training on token embeddings. Everything is built to be
//! checkable: reverse-mode gradients against finite differences, histogram
//! reweighting against brute-force oracles, and end-to-end runs on a
//! synthetic corpus.

pub mod data;
pub mod eval;
pub mod ghm;
pub mod model;
pub mod numcore;
pub mod spans;
pub mod train;
pub mod vat;
