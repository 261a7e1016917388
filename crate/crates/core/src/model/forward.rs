//! Graph builders for the two-branch network. A forward pass binds the
//! parameters onto a fresh tape and assembles the encoder, the term head,
//! and the label-conditioned decoder node by node.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

use super::config::EncoderConfig;
use super::params::ModelParams;
use super::ModelError;
use crate::data::{CLS, SEP};
use crate::numcore::{Real, Tape, Var};

/// Parameter leaves of one tape, addressable by name.
pub struct Bound {
    map: HashMap<String, Var>,
}

impl Bound {
    pub fn var(&self, name: &str) -> Var {
        *self
            .map
            .get(name)
            .unwrap_or_else(|| panic!("parameter {name} not bound"))
    }

    pub fn names(&self) -> impl Iterator<Item = (&String, &Var)> {
        self.map.iter()
    }
}

/// Inserts every parameter onto the tape. Trainable binding makes them
/// leaves that receive gradients; frozen binding makes them constants, so
/// backward never touches them.
pub fn bind_params<F: Real>(tape: &mut Tape<F>, params: &ModelParams<F>, trainable: bool) -> Bound {
    let mut map = HashMap::with_capacity(params.len());
    for e in params.entries() {
        let var = if trainable {
            tape.leaf(e.values.clone(), &e.shape)
        } else {
            tape.constant(e.values.clone(), &e.shape)
        };
        map.insert(e.name.clone(), var);
    }
    Bound { map }
}

/// Dropout state for one forward pass. Eval mode applies no dropout.
pub enum Mode<'r> {
    Eval,
    Train { rng: &'r mut ChaCha8Rng },
}

impl<'r> Mode<'r> {
    fn dropout<F: Real>(&mut self, tape: &mut Tape<F>, x: Var, p: f64) -> Var {
        match self {
            Mode::Eval => x,
            Mode::Train { rng } => {
                if p <= 0.0 {
                    return x;
                }
                let numel: usize = tape.shape(x).iter().product();
                let keep = 1.0 - p;
                let scale = F::from_f64(1.0 / keep);
                let mask: Vec<F> = (0..numel)
                    .map(|_| {
                        if rng.random_bool(keep) {
                            scale
                        } else {
                            F::zero()
                        }
                    })
                    .collect();
                let shape = tape.shape(x).to_vec();
                let m = tape.constant(mask, &shape);
                tape.mul(x, m)
            }
        }
    }
}

fn linear<F: Real>(tape: &mut Tape<F>, x: Var, bound: &Bound, w: &str, b: &str) -> Var {
    let wv = bound.var(w);
    let bv = bound.var(b);
    let prod = tape.matmul(x, wv);
    tape.add_bias(prod, bv)
}

/// Multi-head attention; `sink` collects the per-head attention probability
/// matrices in head order.
fn attention<F: Real>(
    cfg: &EncoderConfig,
    tape: &mut Tape<F>,
    bound: &Bound,
    prefix: &str,
    queries: Var,
    keys_values: Var,
    sink: Option<&mut Vec<Var>>,
) -> Var {
    let d = cfg.head_dim();
    let q = linear(tape, queries, bound, &format!("{prefix}.wq"), &format!("{prefix}.bq"));
    let k = linear(tape, keys_values, bound, &format!("{prefix}.wk"), &format!("{prefix}.bk"));
    let v = linear(tape, keys_values, bound, &format!("{prefix}.wv"), &format!("{prefix}.bv"));
    let mut heads = Vec::with_capacity(cfg.heads);
    let mut probs_out = Vec::with_capacity(cfg.heads);
    for head in 0..cfg.heads {
        let qh = tape.cols(q, head * d, d);
        let kh = tape.cols(k, head * d, d);
        let vh = tape.cols(v, head * d, d);
        let kt = tape.transpose(kh);
        let raw = tape.matmul(qh, kt);
        let scores = tape.scale(raw, 1.0 / (d as f64).sqrt());
        let probs = tape.softmax_rows(scores);
        probs_out.push(probs);
        heads.push(tape.matmul(probs, vh));
    }
    if let Some(sink) = sink {
        sink.extend(probs_out);
    }
    let joined = tape.concat_cols(&heads);
    linear(tape, joined, bound, &format!("{prefix}.wo"), &format!("{prefix}.bo"))
}

fn feed_forward<F: Real>(tape: &mut Tape<F>, bound: &Bound, prefix: &str, x: Var) -> Var {
    let hidden = linear(tape, x, bound, &format!("{prefix}.w1"), &format!("{prefix}.b1"));
    let act = tape.gelu(hidden);
    linear(tape, act, bound, &format!("{prefix}.w2"), &format!("{prefix}.b2"))
}

fn post_norm<F: Real>(tape: &mut Tape<F>, bound: &Bound, ln: &str, x: Var, sub: Var) -> Var {
    let sum = tape.add(x, sub);
    let gamma = bound.var(&format!("{ln}.gamma"));
    let beta = bound.var(&format!("{ln}.beta"));
    tape.layer_norm(sum, gamma, beta, 1e-5)
}

/// Token + position embeddings with norm and dropout. An optional
/// perturbation is added to the raw token embeddings before anything else.
pub fn embed_tokens<F: Real>(
    cfg: &EncoderConfig,
    tape: &mut Tape<F>,
    bound: &Bound,
    ids: &[usize],
    perturbation: Option<Var>,
    mode: &mut Mode<'_>,
) -> Var {
    let table = bound.var("embed.token");
    let mut tok = tape.gather_rows(table, ids);
    if let Some(r) = perturbation {
        tok = tape.add(tok, r);
    }
    let positions: Vec<usize> = (0..ids.len()).collect();
    let pos_table = bound.var("embed.pos");
    let pos = tape.gather_rows(pos_table, &positions);
    let sum = tape.add(tok, pos);
    let gamma = bound.var("embed.ln.gamma");
    let beta = bound.var("embed.ln.beta");
    let normed = tape.layer_norm(sum, gamma, beta, 1e-5);
    mode.dropout(tape, normed, cfg.dropout)
}

/// Runs the encoder stack from prepared embeddings; returns all layer
/// outputs, each (n+2, h).
pub fn encode_from<F: Real>(
    cfg: &EncoderConfig,
    tape: &mut Tape<F>,
    bound: &Bound,
    embeddings: Var,
    mode: &mut Mode<'_>,
) -> Vec<Var> {
    let mut x = embeddings;
    let mut layers = Vec::with_capacity(cfg.layers);
    for i in 0..cfg.layers {
        let attn = attention(cfg, tape, bound, &format!("enc.{i}.attn"), x, x, None);
        let attn = mode.dropout(tape, attn, cfg.dropout);
        let x1 = post_norm(tape, bound, &format!("enc.{i}.ln1"), x, attn);
        let ffn = feed_forward(tape, bound, &format!("enc.{i}.ffn"), x1);
        let ffn = mode.dropout(tape, ffn, cfg.dropout);
        x = post_norm(tape, bound, &format!("enc.{i}.ln2"), x1, ffn);
        layers.push(x);
    }
    layers
}

fn check_frame(cfg: &EncoderConfig, ids: &[usize]) -> Result<(), ModelError> {
    if ids.len() > cfg.max_len {
        return Err(ModelError::Overlength {
            len: ids.len(),
            max: cfg.max_len,
        });
    }
    if let Some(&bad) = ids.iter().find(|&&id| id >= cfg.vocab_size) {
        return Err(ModelError::UnknownTokenId {
            id: bad,
            vocab: cfg.vocab_size,
        });
    }
    if ids.len() < 2 || ids[0] != CLS || ids[ids.len() - 1] != SEP {
        return Err(ModelError::MissingSpecialFrame);
    }
    Ok(())
}

/// Full encoder pass over a [CLS] ... [SEP] id sequence.
pub fn encode<F: Real>(
    cfg: &EncoderConfig,
    tape: &mut Tape<F>,
    bound: &Bound,
    ids: &[usize],
    perturbation: Option<Var>,
    mode: &mut Mode<'_>,
) -> Result<Vec<Var>, ModelError> {
    check_frame(cfg, ids)?;
    let emb = embed_tokens(cfg, tape, bound, ids, perturbation, mode);
    Ok(encode_from(cfg, tape, bound, emb, mode))
}

pub struct BranchOut {
    /// Representation feeding the head: the top layer for the term branch,
    /// the decoder output for the sentiment branch.
    pub repr: Var,
    pub logits: Var,
    pub probs: Var,
}

/// Term branch: per-position logits over {B, I, O} from the top layer.
pub fn ate_branch<F: Real>(
    _cfg: &EncoderConfig,
    tape: &mut Tape<F>,
    bound: &Bound,
    layers: &[Var],
) -> BranchOut {
    let h_e = *layers.last().expect("encoder produced no layers");
    let logits = linear(tape, h_e, bound, "head.ate.w", "head.ate.b");
    let probs = tape.softmax_rows(logits);
    BranchOut { repr: h_e, logits, probs }
}

pub struct AscOut {
    pub branch: BranchOut,
    /// Decoder self-attention probabilities, block-major then head order.
    pub self_attention: Vec<Var>,
}

/// Sentiment branch: the shared layer's representation is attended by a
/// query stream built from term-label embeddings. The first decoder
/// sub-layer is plain (non-masked) self-attention over the label queries,
/// then cross-attention onto the shared representation, then feed-forward.
/// With zero decoder blocks the shared representation feeds the head
/// directly and `q_ids` is ignored.
pub fn asc_branch<F: Real>(
    cfg: &EncoderConfig,
    tape: &mut Tape<F>,
    bound: &Bound,
    layers: &[Var],
    q_ids: &[usize],
    mode: &mut Mode<'_>,
) -> Result<AscOut, ModelError> {
    let h_c = layers[cfg.shared_layer - 1];
    let seq_len = tape.shape(h_c)[0];
    let mut self_attention = Vec::new();

    let g_c = if cfg.asc_layers == 0 {
        h_c
    } else {
        if q_ids.len() != seq_len {
            return Err(ModelError::QueryLengthMismatch {
                got: q_ids.len(),
                want: seq_len,
            });
        }
        if let Some(&bad) = q_ids.iter().find(|&&id| id >= 3) {
            return Err(ModelError::BadLabelId { id: bad });
        }
        let label_table = bound.var("q_embed.label");
        let lab = tape.gather_rows(label_table, q_ids);
        let positions: Vec<usize> = (0..q_ids.len()).collect();
        let pos_table = bound.var("q_embed.pos");
        let pos = tape.gather_rows(pos_table, &positions);
        let sum = tape.add(lab, pos);
        let gamma = bound.var("q_embed.ln.gamma");
        let beta = bound.var("q_embed.ln.beta");
        let normed = tape.layer_norm(sum, gamma, beta, 1e-5);
        let mut x = mode.dropout(tape, normed, cfg.dropout);
        for k in 0..cfg.asc_layers {
            let attn = attention(
                cfg,
                tape,
                bound,
                &format!("dec.{k}.self"),
                x,
                x,
                Some(&mut self_attention),
            );
            let attn = mode.dropout(tape, attn, cfg.dropout);
            let x1 = post_norm(tape, bound, &format!("dec.{k}.ln1"), x, attn);
            let cross = attention(cfg, tape, bound, &format!("dec.{k}.cross"), x1, h_c, None);
            let cross = mode.dropout(tape, cross, cfg.dropout);
            let x2 = post_norm(tape, bound, &format!("dec.{k}.lnx"), x1, cross);
            let ffn = feed_forward(tape, bound, &format!("dec.{k}.ffn"), x2);
            let ffn = mode.dropout(tape, ffn, cfg.dropout);
            x = post_norm(tape, bound, &format!("dec.{k}.ln2"), x2, ffn);
        }
        x
    };

    let logits = linear(tape, g_c, bound, "head.asc.w", "head.asc.b");
    let probs = tape.softmax_rows(logits);
    Ok(AscOut {
        branch: BranchOut { repr: g_c, logits, probs },
        self_attention,
    })
}

/// Consistent-polarity scores on the tape: segment max over decoder rows,
/// a linear head, and ReLU. `segments` must tile the full padded sequence.
pub fn consistent_scores<F: Real>(
    tape: &mut Tape<F>,
    bound: &Bound,
    g_c: Var,
    segments: &[(usize, usize)],
) -> BranchOut {
    let pooled = tape.segment_max_rows(g_c, segments);
    let lin = linear(tape, pooled, bound, "head.cons.w", "head.cons.b");
    let logits = tape.relu(lin);
    let probs = tape.softmax_rows(logits);
    BranchOut { repr: pooled, logits, probs }
}
