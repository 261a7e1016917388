//! Batch graph assembly and the two-stage loop.
//!
//! Stage one optimizes the term loss alone, then continues with the
//! adversarial consistency term on the term distribution at a lower rate.
//! Stage two seeds the decoder from the top encoder layers and optimizes
//! the full objective with per-group learning rates, teacher-forcing the
//! query stream with gold term labels. Histogram and optimizer state reset
//! at phase boundaries, which is what makes a run resumed from a phase
//! checkpoint bit-identical to the uninterrupted one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::sub_seed;
use crate::data::{epoch_batches, encode_example, EncodedSentence, TaggedSentence, Vocab};
use crate::ghm::{gradient_norm, GhmError, GradientHistogram, HistogramSnapshot};
use crate::model::{
    asc_branch, ate_branch, bind_params, consistent_scores, embed_tokens, encode, encode_from,
    load_checkpoint, predict_sentence, Bound, CheckpointError, EncoderConfig, Mode, ModelError,
    ModelParams, ParamGroup,
};
use crate::numcore::{clip_global_norm, AdamConfig, AdamState, NumError, Real, Tape, Var, WarmupLinear};
use crate::spans::{extract_boundaries, gold_pairs, AspectPolarityPair, PolarityStrategy};
use crate::eval::{pair_prf, PairMetrics};
use crate::vat::{adversarial_perturbation_with_clean, VatConfig, VatCounters};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("non-finite loss (l_e={l_e}, l_c={l_c}, l_vat={l_vat}); run aborted")]
    NonFiniteLoss { l_e: f64, l_c: f64, l_vat: f64 },
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ghm(#[from] GhmError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Loss components of one batch, already reduced to plain numbers.
#[derive(Clone, Copy, Debug, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub l_e: f64,
    pub l_c: f64,
    pub l_vat: f64,
}

/// What enters the batch objective.
#[derive(Clone, Copy, Debug)]
pub struct BatchLossSpec {
    pub include_asc: bool,
    /// Train the sentiment branch through the span-pooled consistent head
    /// instead of the direct per-token head.
    pub consistent_head: bool,
    pub ghm: bool,
    pub ghm_ema: bool,
    pub vat: Option<VatConfig>,
}

struct SentenceGraph {
    probs_e: Var,
    probs_c: Option<Var>,
}

struct BatchGraph<F: Real> {
    tape: Tape<F>,
    bound: Bound,
    root: Var,
    breakdown: LossBreakdown,
}

fn teacher_q_ids(enc: &EncodedSentence) -> &[usize] {
    &enc.term_ids
}

/// Segments over the padded sequence for the consistent head: gold term
/// spans shifted past [CLS], specials as singletons.
fn padded_segments(enc: &EncodedSentence) -> Vec<(usize, usize)> {
    let tags: Vec<crate::data::TermTag> = enc.term_ids[1..enc.len() - 1]
        .iter()
        .map(|&id| crate::data::TermTag::from_id(id).expect("encoded term id"))
        .collect();
    let bounds = extract_boundaries(&tags);
    let mut segments = Vec::with_capacity(enc.len());
    segments.push((0, 1));
    segments.extend(bounds.spans().iter().map(|&(b, e)| (b + 1, e + 1)));
    segments.push((enc.len() - 1, enc.len()));
    segments
}

fn masked_positions(enc: &EncodedSentence) -> impl Iterator<Item = usize> + '_ {
    enc.mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| i)
}

/// Gradient norms g = 1 - p[true] for the real-token rows of a probability
/// tensor.
fn collect_norms<F: Real>(
    tape: &Tape<F>,
    probs: Var,
    targets: &[usize],
    enc: &EncodedSentence,
) -> Result<Vec<f64>, GhmError> {
    let classes = tape.shape(probs)[1];
    let values = tape.values(probs);
    masked_positions(enc)
        .map(|i| {
            let row: Vec<f64> = values[i * classes..(i + 1) * classes]
                .iter()
                .map(|&v| v.to_f64())
                .collect();
            gradient_norm(&row, targets[i])
        })
        .collect()
}

/// Per-row loss weights for one sentence: the (detached) histogram weight
/// at real positions, zero at the specials.
fn row_weights(enc: &EncodedSentence, betas: Option<&[f64]>, cursor: &mut usize) -> Vec<f64> {
    enc.mask
        .iter()
        .map(|&m| {
            if !m {
                0.0
            } else {
                match betas {
                    None => 1.0,
                    Some(b) => {
                        let w = b[*cursor];
                        *cursor += 1;
                        w
                    }
                }
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn build_batch_graph<F: Real>(
    model_cfg: &EncoderConfig,
    params: &ModelParams<F>,
    batch: &[&EncodedSentence],
    spec: &BatchLossSpec,
    hist_e: &mut GradientHistogram,
    hist_c: &mut GradientHistogram,
    mut dropout_rng: Option<&mut ChaCha8Rng>,
    probe_params: Option<&ModelParams<f64>>,
    vat_seed: &dyn Fn(usize) -> u64,
    vat_counters: &mut VatCounters,
) -> Result<BatchGraph<F>, TrainError> {
    assert!(!batch.is_empty(), "empty batch");
    let mut tape: Tape<F> = Tape::new();
    let bound = bind_params(&mut tape, params, true);

    // clean forward passes
    let mut graphs = Vec::with_capacity(batch.len());
    for enc_s in batch {
        let mut mode = match dropout_rng.as_deref_mut() {
            Some(rng) => Mode::Train { rng },
            None => Mode::Eval,
        };
        let layers = encode(model_cfg, &mut tape, &bound, &enc_s.ids, None, &mut mode)?;
        let ate = ate_branch(model_cfg, &mut tape, &bound, &layers);
        let probs_c = if spec.include_asc {
            let asc = asc_branch(
                model_cfg,
                &mut tape,
                &bound,
                &layers,
                teacher_q_ids(enc_s),
                &mut mode,
            )?;
            if spec.consistent_head {
                let segments = padded_segments(enc_s);
                let cons = consistent_scores(&mut tape, &bound, asc.branch.repr, &segments);
                Some(cons.probs)
            } else {
                Some(asc.branch.probs)
            }
        } else {
            None
        };
        graphs.push(SentenceGraph {
            probs_e: ate.probs,
            probs_c,
        });
    }

    let n_e: usize = batch.iter().map(|e| e.n_real).sum();
    let denom_e = n_e.max(1) as f64;

    // detached histogram weights per task
    let betas_e = if spec.ghm {
        let mut all = Vec::with_capacity(n_e);
        for (g, enc_s) in graphs.iter().zip(batch) {
            all.extend(collect_norms(&tape, g.probs_e, &enc_s.term_ids, enc_s)?);
        }
        Some(hist_e.update_and_weights_from_norms(&all, spec.ghm_ema)?)
    } else {
        None
    };
    let betas_c = if spec.include_asc && spec.ghm {
        let mut all = Vec::with_capacity(n_e);
        for (g, enc_s) in graphs.iter().zip(batch) {
            let probs = g.probs_c.expect("asc probs present");
            all.extend(collect_norms(&tape, probs, &enc_s.polarity_ids, enc_s)?);
        }
        Some(hist_c.update_and_weights_from_norms(&all, spec.ghm_ema)?)
    } else {
        None
    };

    // loss nodes
    let mut l_e: Option<Var> = None;
    let mut cursor = 0usize;
    for (g, enc_s) in graphs.iter().zip(batch) {
        let weights = row_weights(enc_s, betas_e.as_deref(), &mut cursor);
        let term = tape.nll_rows(g.probs_e, &enc_s.term_ids, &weights, denom_e);
        l_e = Some(match l_e {
            None => term,
            Some(acc) => tape.add(acc, term),
        });
    }
    let l_e = l_e.expect("nonempty batch");

    let mut l_c: Option<Var> = None;
    if spec.include_asc {
        let mut cursor = 0usize;
        for (g, enc_s) in graphs.iter().zip(batch) {
            let weights = row_weights(enc_s, betas_c.as_deref(), &mut cursor);
            let probs = g.probs_c.expect("asc probs present");
            let term = tape.nll_rows(probs, &enc_s.polarity_ids, &weights, denom_e);
            l_c = Some(match l_c {
                None => term,
                Some(acc) => tape.add(acc, term),
            });
        }
    }

    // adversarial consistency
    let mut l_vat: Option<Var> = None;
    if let Some(vat_cfg) = spec.vat {
        let probe_params = probe_params.expect("probe parameters required when vat is on");
        for (idx, enc_s) in batch.iter().enumerate() {
            let q = spec.include_asc.then(|| teacher_q_ids(enc_s));
            let probe = adversarial_perturbation_with_clean(
                model_cfg,
                probe_params,
                &enc_s.ids,
                q,
                &enc_s.mask,
                &vat_cfg,
                vat_seed(idx),
                vat_counters,
            )?;
            let r: Vec<F> = probe.r.iter().map(|&x| F::from_f64(x)).collect();
            let r_var = tape.constant(r, &[enc_s.len(), model_cfg.hidden]);
            let mut mode = Mode::Eval;
            let emb = embed_tokens(model_cfg, &mut tape, &bound, &enc_s.ids, Some(r_var), &mut mode);
            let layers = encode_from(model_cfg, &mut tape, &bound, emb, &mut mode);
            let weights = row_weights(enc_s, None, &mut 0);

            let mut terms = Vec::new();
            if let Some(clean_e) = &probe.clean_ate {
                let clean: Vec<F> = clean_e.iter().map(|&x| F::from_f64(x)).collect();
                let p = tape.constant(clean, &[enc_s.len(), 3]);
                let q_probs = ate_branch(model_cfg, &mut tape, &bound, &layers).probs;
                terms.push(tape.kl_rows(p, q_probs, &weights, denom_e));
            }
            if let Some(clean_c) = &probe.clean_asc {
                let clean: Vec<F> = clean_c.iter().map(|&x| F::from_f64(x)).collect();
                let p = tape.constant(clean, &[enc_s.len(), 5]);
                let asc = asc_branch(
                    model_cfg,
                    &mut tape,
                    &bound,
                    &layers,
                    teacher_q_ids(enc_s),
                    &mut mode,
                )?;
                terms.push(tape.kl_rows(p, asc.branch.probs, &weights, denom_e));
            }
            let sentence_vat = match terms.len() {
                1 => terms[0],
                2 => {
                    let sum = tape.add(terms[0], terms[1]);
                    tape.scale(sum, 0.5)
                }
                _ => unreachable!("vat selects at least one branch"),
            };
            l_vat = Some(match l_vat {
                None => sentence_vat,
                Some(acc) => tape.add(acc, sentence_vat),
            });
        }
    }

    let mut root = l_e;
    if let Some(c) = l_c {
        root = tape.add(root, c);
    }
    if let Some(v) = l_vat {
        root = tape.add(root, v);
    }

    let breakdown = LossBreakdown {
        total: tape.scalar(root).to_f64(),
        l_e: tape.scalar(l_e).to_f64(),
        l_c: l_c.map(|v| tape.scalar(v).to_f64()).unwrap_or(0.0),
        l_vat: l_vat.map(|v| tape.scalar(v).to_f64()).unwrap_or(0.0),
    };
    if !breakdown.total.is_finite() {
        return Err(TrainError::NonFiniteLoss {
            l_e: breakdown.l_e,
            l_c: breakdown.l_c,
            l_vat: breakdown.l_vat,
        });
    }
    Ok(BatchGraph { tape, bound, root, breakdown })
}

/// The total objective of one batch, evaluated without dropout: the two
/// histogram-weighted cross-entropies plus the adversarial consistency
/// term. Components come back individually for logging and tests.
pub fn loss_total<F: Real>(
    model_cfg: &EncoderConfig,
    params: &ModelParams<F>,
    batch: &[&EncodedSentence],
    hist_e: &mut GradientHistogram,
    hist_c: &mut GradientHistogram,
    spec: &BatchLossSpec,
    vat_seed_base: u64,
) -> Result<LossBreakdown, TrainError> {
    let probe_params = spec.vat.map(|_| params.convert::<f64>());
    let mut counters = VatCounters::default();
    let graph = build_batch_graph(
        model_cfg,
        params,
        batch,
        spec,
        hist_e,
        hist_c,
        None,
        probe_params.as_ref(),
        &|i| sub_seed(vat_seed_base, 0x5641_5400, i as u64),
        &mut counters,
    )?;
    Ok(graph.breakdown)
}

/// Per-epoch log record.
#[derive(Clone, Debug)]
pub struct EpochMetrics {
    pub stage: u8,
    pub epoch: usize,
    pub global_epoch: usize,
    pub l_e: f64,
    pub l_c: f64,
    pub l_vat: f64,
    pub f1_dev: f64,
}

pub fn render_metrics_line(m: &EpochMetrics) -> String {
    format!(
        "stage={} epoch={} global_epoch={} l_e={:.6} l_c={:.6} l_vat={:.6} f1_dev={:.6}",
        m.stage, m.epoch, m.global_epoch, m.l_e, m.l_c, m.l_vat, m.f1_dev
    )
}

/// Held-out sentences prepared for per-epoch evaluation.
pub struct DevSet {
    items: Vec<DevItem>,
}

struct DevItem {
    enc: EncodedSentence,
    tokens: Vec<String>,
    gold: Vec<AspectPolarityPair>,
}

impl DevSet {
    /// Returns the dev set and the number of overlong sentences skipped.
    pub fn build(corpus: &[TaggedSentence], vocab: &Vocab, max_len: usize) -> (Self, usize) {
        let mut items = Vec::with_capacity(corpus.len());
        let mut skipped = 0;
        for s in corpus {
            match encode_example(s, vocab, max_len) {
                Ok(enc) => items.push(DevItem {
                    enc,
                    tokens: s.tokens.clone(),
                    gold: gold_pairs(&s.term_tags, &s.polarity_tags, &s.tokens),
                }),
                Err(_) => skipped += 1,
            }
        }
        (DevSet { items }, skipped)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Exact-match pair metrics of the current parameters on a dev set.
pub fn evaluate_on<F: Real>(
    model_cfg: &EncoderConfig,
    params: &ModelParams<F>,
    dev: &DevSet,
    consistent: bool,
) -> Result<PairMetrics, ModelError> {
    let mut gold = Vec::with_capacity(dev.items.len());
    let mut pred = Vec::with_capacity(dev.items.len());
    for item in &dev.items {
        let p = predict_sentence(
            model_cfg,
            params,
            &item.enc.ids,
            &item.tokens,
            consistent,
            PolarityStrategy::FirstToken,
        )?;
        gold.push(item.gold.clone());
        pred.push(p.pairs);
    }
    Ok(pair_prf(&gold, &pred))
}

/// Owns parameters, optimizer state, both histograms, and the metric trail
/// for one training run.
pub struct Trainer<F: Real> {
    pub model_cfg: EncoderConfig,
    pub cfg: TrainConfig,
    pub vocab: Vocab,
    pub params: ModelParams<F>,
    pub hist_e: GradientHistogram,
    pub hist_c: GradientHistogram,
    pub snapshots_e: Vec<HistogramSnapshot>,
    pub snapshots_c: Vec<HistogramSnapshot>,
    pub metrics: Vec<EpochMetrics>,
    pub vat_counters: VatCounters,
    global_epoch: usize,
}

const TAG_INIT: u64 = 1;
const TAG_ASC_INIT: u64 = 2;
const TAG_STAGE: u64 = 3;
const TAG_DROPOUT: u64 = 4;
const TAG_VAT: u64 = 5;

struct PhasePlan {
    stage: u8,
    /// Distinguishes the two phases of stage one in seeding.
    phase_tag: u64,
    epochs: usize,
    include_asc: bool,
    vat: Option<VatConfig>,
}

impl<F: Real> Trainer<F> {
    pub fn new(model_cfg: EncoderConfig, cfg: TrainConfig, vocab: Vocab) -> Self {
        assert_eq!(model_cfg.vocab_size, vocab.len(), "config vocab_size must match the vocabulary");
        let params = ModelParams::init(&model_cfg, sub_seed(cfg.seed, TAG_INIT, 0));
        let hist_e = GradientHistogram::new(cfg.ghm_bins, cfg.ghm_alpha);
        let hist_c = GradientHistogram::new(cfg.ghm_bins, cfg.ghm_alpha);
        Trainer {
            model_cfg,
            cfg,
            vocab,
            params,
            hist_e,
            hist_c,
            snapshots_e: Vec::new(),
            snapshots_c: Vec::new(),
            metrics: Vec::new(),
            vat_counters: VatCounters::default(),
            global_epoch: 0,
        }
    }

    /// Replaces the parameters, e.g. to resume from a checkpoint.
    pub fn set_params(&mut self, params: ModelParams<F>) {
        self.params = params;
    }

    fn reset_histograms(&mut self) {
        self.hist_e = GradientHistogram::new(self.cfg.ghm_bins, self.cfg.ghm_alpha);
        self.hist_c = GradientHistogram::new(self.cfg.ghm_bins, self.cfg.ghm_alpha);
    }

    fn lr_for_entry(&self, plan: &PhasePlan, name: &str, base_lr: f64) -> f64 {
        if plan.stage == 2 {
            match crate::model::param_group(name) {
                ParamGroup::Asc => self.cfg.lr_stage2_asc,
                ParamGroup::Ate => self.cfg.lr_stage2_ate,
            }
        } else {
            base_lr
        }
    }

    fn run_phase(
        &mut self,
        plan: PhasePlan,
        base_lr: f64,
        train: &[EncodedSentence],
        dev: Option<&DevSet>,
    ) -> Result<(), TrainError> {
        if plan.epochs == 0 {
            return Ok(());
        }
        self.reset_histograms();
        let phase_seed = sub_seed(self.cfg.seed, TAG_STAGE, plan.phase_tag);
        let n = train.len();
        let batches_per_epoch = n.div_ceil(self.cfg.batch);
        let total_steps = (batches_per_epoch * plan.epochs) as u64;
        let warmup = WarmupLinear {
            warmup_steps: (self.cfg.warmup_frac * total_steps as f64).round() as u64,
        };
        let mut adam = AdamState::<F>::new(&self.params.sizes(), AdamConfig::default());
        let lrs: Vec<f64> = self
            .params
            .entries()
            .iter()
            .map(|e| self.lr_for_entry(&plan, &e.name, base_lr))
            .collect();

        let spec = BatchLossSpec {
            include_asc: plan.include_asc,
            consistent_head: plan.include_asc && self.cfg.consistent_head,
            ghm: self.cfg.ghm,
            ghm_ema: self.cfg.ghm_ema,
            vat: plan.vat,
        };

        for epoch in 1..=plan.epochs {
            self.global_epoch += 1;
            let mut dropout_rng = ChaCha8Rng::seed_from_u64(sub_seed(
                phase_seed,
                TAG_DROPOUT,
                epoch as u64,
            ));
            let batches = epoch_batches(n, self.cfg.batch, phase_seed, epoch as u64);
            let mut epoch_u_e = vec![0.0; self.cfg.ghm_bins];
            let mut epoch_u_c = vec![0.0; self.cfg.ghm_bins];
            let mut sums = LossBreakdown::default();
            for (batch_idx, batch_ids) in batches.iter().enumerate() {
                let batch: Vec<&EncodedSentence> = batch_ids.iter().map(|&i| &train[i]).collect();
                let probe_params = spec.vat.map(|_| self.params.convert::<f64>());
                let vat_base = sub_seed(phase_seed, TAG_VAT, ((epoch as u64) << 32) | batch_idx as u64);
                let graph = build_batch_graph(
                    &self.model_cfg,
                    &self.params,
                    &batch,
                    &spec,
                    &mut self.hist_e,
                    &mut self.hist_c,
                    (self.model_cfg.dropout > 0.0).then_some(&mut dropout_rng),
                    probe_params.as_ref(),
                    &|i| sub_seed(vat_base, 0, i as u64),
                    &mut self.vat_counters,
                )?;
                if spec.ghm {
                    for (acc, &u) in epoch_u_e.iter_mut().zip(self.hist_e.batch_counts()) {
                        *acc += u;
                    }
                    if spec.include_asc {
                        for (acc, &u) in epoch_u_c.iter_mut().zip(self.hist_c.batch_counts()) {
                            *acc += u;
                        }
                    }
                }
                sums.l_e += graph.breakdown.l_e;
                sums.l_c += graph.breakdown.l_c;
                sums.l_vat += graph.breakdown.l_vat;
                sums.total += graph.breakdown.total;

                let mut tape = graph.tape;
                tape.backward(graph.root)?;
                let mut grads: Vec<Vec<F>> = self
                    .params
                    .entries()
                    .iter()
                    .map(|e| tape.grad(graph.bound.var(&e.name)).to_vec())
                    .collect();
                drop(tape);
                clip_global_norm(&mut grads, 1.0);
                let grad_refs: Vec<&[F]> = grads.iter().map(|g| g.as_slice()).collect();
                let mut values: Vec<&mut [F]> = Vec::with_capacity(grads.len());
                for e in self.params.values_mut() {
                    values.push(e.values.as_mut_slice());
                }
                adam.step(&mut values, &grad_refs, &lrs, &warmup)?;
            }
            let nb = batches.len() as f64;
            if spec.ghm {
                self.snapshots_e.push(HistogramSnapshot {
                    epoch: self.global_epoch,
                    u: epoch_u_e,
                    a: self.hist_e.ema_counts().to_vec(),
                });
                if spec.include_asc {
                    self.snapshots_c.push(HistogramSnapshot {
                        epoch: self.global_epoch,
                        u: epoch_u_c,
                        a: self.hist_c.ema_counts().to_vec(),
                    });
                }
            }
            let f1_dev = match dev {
                Some(d) if !d.is_empty() => evaluate_on(&self.model_cfg, &self.params, d, false)?.f1,
                _ => 0.0,
            };
            self.metrics.push(EpochMetrics {
                stage: plan.stage,
                epoch,
                global_epoch: self.global_epoch,
                l_e: sums.l_e / nb,
                l_c: sums.l_c / nb,
                l_vat: sums.l_vat / nb,
                f1_dev,
            });
        }
        Ok(())
    }

    /// Stage one: the term branch alone, then its adversarial tail.
    /// Returns the parameters as they stood between the two phases.
    pub fn train_stage1(
        &mut self,
        train: &[EncodedSentence],
        dev: Option<&DevSet>,
    ) -> Result<ModelParams<F>, TrainError> {
        self.run_phase(
            PhasePlan {
                stage: 1,
                phase_tag: 10,
                epochs: self.cfg.stage1_epochs,
                include_asc: false,
                vat: None,
            },
            self.cfg.lr_stage1,
            train,
            dev,
        )?;
        let phase1_params = self.params.clone();
        if self.cfg.vat {
            self.run_phase(
                PhasePlan {
                    stage: 1,
                    phase_tag: 11,
                    epochs: self.cfg.stage1_vat_epochs,
                    include_asc: false,
                    vat: Some(VatConfig {
                        xi: self.cfg.vat_xi,
                        eps: self.cfg.vat_eps,
                        apply_to: crate::vat::VatBranch::Ate,
                    }),
                },
                self.cfg.lr_stage1_vat,
                train,
                dev,
            )?;
        }
        Ok(phase1_params)
    }

    /// Stage two: seed the decoder from the term encoder, then optimize the
    /// full objective with per-group learning rates.
    pub fn train_stage2(
        &mut self,
        train: &[EncodedSentence],
        dev: Option<&DevSet>,
    ) -> Result<(), TrainError> {
        if self.model_cfg.asc_layers > 0 {
            self.params
                .init_asc_from_ate(&self.model_cfg, sub_seed(self.cfg.seed, TAG_ASC_INIT, 0))?;
        }
        self.run_phase(
            PhasePlan {
                stage: 2,
                phase_tag: 20,
                epochs: self.cfg.stage2_epochs,
                include_asc: true,
                vat: self.cfg.vat.then_some(VatConfig {
                    xi: self.cfg.vat_xi,
                    eps: self.cfg.vat_eps,
                    apply_to: self.cfg.vat_apply_to,
                }),
            },
            self.cfg.lr_stage2_asc,
            train,
            dev,
        )
    }

    /// Loads parameters from a checkpoint written by an earlier phase.
    pub fn resume_from(&mut self, path: &std::path::Path) -> Result<(), TrainError> {
        let (cfg, params, _vocab) = load_checkpoint::<F>(path)?;
        assert_eq!(cfg, self.model_cfg, "checkpoint configuration mismatch");
        self.params = params;
        Ok(())
    }
}

/// Encodes a corpus, dropping overlong sentences; returns the survivors
/// and the skip count.
pub fn encode_corpus(
    corpus: &[TaggedSentence],
    vocab: &Vocab,
    max_len: usize,
) -> (Vec<EncodedSentence>, usize) {
    let mut out = Vec::with_capacity(corpus.len());
    let mut skipped = 0;
    for s in corpus {
        match encode_example(s, vocab, max_len) {
            Ok(e) => out.push(e),
            Err(_) => skipped += 1,
        }
    }
    (out, skipped)
}
