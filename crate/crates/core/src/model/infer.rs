//! Inference: the term branch runs first, its argmax labels (repaired to
//! valid BIO) become the decoder's query stream, and pairs are decoded from
//! both tag sequences.

use super::config::EncoderConfig;
use super::forward::{asc_branch, ate_branch, bind_params, encode, Mode};
use super::params::ModelParams;
use super::ModelError;
use crate::data::{PolarityTag, TermTag};
use crate::numcore::{Mat, Real, Tape};
use crate::spans::{
    consistent_polarity, decode_pairs, extract_boundaries, repair_bio, AspectPolarityPair,
    DecodeCounters, PolarityStrategy, TokenBoundaries,
};

#[derive(Clone, Debug)]
pub struct Prediction {
    /// Repaired term tags over real tokens.
    pub term_tags: Vec<TermTag>,
    /// Per-token polarity tags over real tokens.
    pub polarity_tags: Vec<PolarityTag>,
    pub pairs: Vec<AspectPolarityPair>,
    pub counters: DecodeCounters,
}

fn argmax_row<F: Real>(row: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Predicts one [CLS] ... [SEP] wrapped sentence. `consistent` switches the
/// polarity decode to the span-pooled head.
pub fn predict_sentence<F: Real>(
    cfg: &EncoderConfig,
    params: &ModelParams<F>,
    ids: &[usize],
    tokens: &[String],
    consistent: bool,
    strategy: PolarityStrategy,
) -> Result<Prediction, ModelError> {
    let mut tape: Tape<F> = Tape::new();
    let bound = bind_params(&mut tape, params, false);
    let mut mode = Mode::Eval;
    let layers = encode(cfg, &mut tape, &bound, ids, None, &mut mode)?;
    let ate = ate_branch(cfg, &mut tape, &bound, &layers);

    let n = ids.len() - 2;
    let raw_terms: Vec<TermTag> = (1..=n)
        .map(|i| {
            let row = &tape.values(ate.probs)[i * TermTag::COUNT..(i + 1) * TermTag::COUNT];
            TermTag::from_id(argmax_row(row)).expect("argmax within tag set")
        })
        .collect();
    let term_tags = repair_bio(&raw_terms);

    // query stream: predicted labels with the specials forced to O
    let o = TermTag::Outside.id();
    let mut q_ids = Vec::with_capacity(ids.len());
    q_ids.push(o);
    q_ids.extend(term_tags.iter().map(|t| t.id()));
    q_ids.push(o);

    let asc = asc_branch(cfg, &mut tape, &bound, &layers, &q_ids, &mut mode)?;

    if consistent {
        let boundaries = extract_boundaries(&term_tags);
        let h = cfg.hidden;
        let g_c = tape.values(asc.branch.repr);
        let rows: Vec<Vec<f64>> = (1..=n)
            .map(|i| g_c[i * h..(i + 1) * h].iter().map(|&v| v.to_f64()).collect())
            .collect();
        let g_mat = Mat::from_rows(&rows);
        let w_h = params.entry("head.cons.w");
        let w_mat = Mat::new(
            w_h.shape[0],
            w_h.shape[1],
            w_h.values.iter().map(|&v| v.to_f64()).collect(),
        );
        let b_h: Vec<f64> = params.get("head.cons.b").iter().map(|&v| v.to_f64()).collect();
        let scores = consistent_polarity(&g_mat, &boundaries, &w_mat, &b_h);
        decode_consistent(&term_tags, &boundaries, &scores, tokens)
    } else {
        let polarity_tags: Vec<PolarityTag> = (1..=n)
            .map(|i| {
                let row =
                    &tape.values(asc.branch.probs)[i * PolarityTag::COUNT..(i + 1) * PolarityTag::COUNT];
                PolarityTag::from_id(argmax_row(row)).expect("argmax within tag set")
            })
            .collect();
        let (pairs, counters) = decode_pairs(&term_tags, &polarity_tags, tokens, strategy);
        Ok(Prediction {
            term_tags,
            polarity_tags,
            pairs,
            counters,
        })
    }
}

fn decode_consistent(
    term_tags: &[TermTag],
    boundaries: &TokenBoundaries,
    scores: &Mat<f64>,
    tokens: &[String],
) -> Result<Prediction, ModelError> {
    let mut counters = DecodeCounters::default();
    let mut polarity_tags = vec![PolarityTag::Outside; term_tags.len()];
    let mut pairs = Vec::new();
    for (i, &(b, e)) in boundaries.spans().iter().enumerate() {
        if term_tags[i] == TermTag::Outside || i != b {
            continue;
        }
        let resolved = PolarityTag::from_id(argmax_row(scores.row(i))).expect("5-way head");
        let polarity = if resolved == PolarityTag::Outside {
            counters.o_polarity_spans += 1;
            PolarityTag::Neutral
        } else {
            resolved
        };
        for tag in polarity_tags.iter_mut().take(e).skip(b) {
            *tag = polarity;
        }
        let surface = if tokens.is_empty() {
            String::new()
        } else {
            tokens[b..e].join(" ")
        };
        pairs.push(AspectPolarityPair {
            begin: b,
            end: e,
            surface,
            polarity,
        });
    }
    Ok(Prediction {
        term_tags: term_tags.to_vec(),
        polarity_tags,
        pairs,
        counters,
    })
}
