//! Two-stage training orchestration: composes the model, the histogram
//! reweighting, and the adversarial consistency loss into the total
//! objective.

mod config;
mod loop_;

pub use config::{parse_config_file, render_config, ConfigError, FileConfig, TrainConfig};
pub use loop_::{
    encode_corpus, evaluate_on, loss_total, render_metrics_line, BatchLossSpec, DevSet,
    EpochMetrics, LossBreakdown, TrainError, Trainer,
};

/// Derives independent deterministic seeds for the different consumers of
/// randomness (init, shuffling, dropout, probe noise). SplitMix64 over the
/// base seed and a caller-chosen tag pair.
pub fn sub_seed(seed: u64, tag: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(tag)
        .wrapping_mul(0xBF58_476D_1CE4_E5B9)
        .wrapping_add(index);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
