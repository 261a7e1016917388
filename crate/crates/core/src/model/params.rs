//! Named parameter collection. Creation order is fixed, so iteration,
//! checkpointing, and optimizer state all agree on tensor order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::collections::HashMap;

use super::config::EncoderConfig;
use super::ModelError;
use crate::numcore::Real;

pub const INIT_STD: f64 = 0.02;

#[derive(Clone, Debug)]
pub struct ParamEntry<F: Real> {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<F>,
}

#[derive(Clone, Debug)]
pub struct ModelParams<F: Real> {
    entries: Vec<ParamEntry<F>>,
    index: HashMap<String, usize>,
}

/// Learning-rate group in the second training stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamGroup {
    /// Encoder, embeddings, and the term head.
    Ate,
    /// Decoder, query embeddings, and the sentiment heads.
    Asc,
}

pub fn param_group(name: &str) -> ParamGroup {
    if name.starts_with("dec.")
        || name.starts_with("q_embed.")
        || name.starts_with("head.asc")
        || name.starts_with("head.cons")
    {
        ParamGroup::Asc
    } else {
        ParamGroup::Ate
    }
}

struct Init {
    rng: ChaCha8Rng,
    normal: Normal<f64>,
}

impl Init {
    fn new(seed: u64) -> Self {
        Init {
            rng: ChaCha8Rng::seed_from_u64(seed),
            normal: Normal::new(0.0, INIT_STD).expect("valid std"),
        }
    }

    fn weight<F: Real>(&mut self, numel: usize) -> Vec<F> {
        (0..numel)
            .map(|_| F::from_f64(self.normal.sample(&mut self.rng)))
            .collect()
    }
}

impl<F: Real> ModelParams<F> {
    fn empty() -> Self {
        ModelParams {
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn push(&mut self, name: String, shape: Vec<usize>, values: Vec<F>) {
        debug_assert_eq!(values.len(), shape.iter().product::<usize>());
        assert!(
            !self.index.contains_key(&name),
            "duplicate parameter name {name}"
        );
        self.index.insert(name.clone(), self.entries.len());
        self.entries.push(ParamEntry { name, shape, values });
    }

    fn push_weight(&mut self, init: &mut Init, name: &str, shape: &[usize]) {
        let numel = shape.iter().product();
        self.push(name.to_string(), shape.to_vec(), init.weight(numel));
    }

    fn push_zeros(&mut self, name: &str, shape: &[usize]) {
        let numel = shape.iter().product();
        self.push(name.to_string(), shape.to_vec(), vec![F::zero(); numel]);
    }

    fn push_ln(&mut self, name_prefix: &str, h: usize) {
        self.push(
            format!("{name_prefix}.gamma"),
            vec![h],
            vec![F::one(); h],
        );
        self.push_zeros(&format!("{name_prefix}.beta"), &[h]);
    }

    fn push_attention(&mut self, init: &mut Init, prefix: &str, h: usize) {
        for w in ["wq", "wk", "wv", "wo"] {
            self.push_weight(init, &format!("{prefix}.{w}"), &[h, h]);
        }
        for b in ["bq", "bk", "bv", "bo"] {
            self.push_zeros(&format!("{prefix}.{b}"), &[h]);
        }
    }

    fn push_ffn(&mut self, init: &mut Init, prefix: &str, h: usize, ffn: usize) {
        self.push_weight(init, &format!("{prefix}.w1"), &[h, ffn]);
        self.push_zeros(&format!("{prefix}.b1"), &[ffn]);
        self.push_weight(init, &format!("{prefix}.w2"), &[ffn, h]);
        self.push_zeros(&format!("{prefix}.b2"), &[h]);
    }

    pub fn init(cfg: &EncoderConfig, seed: u64) -> Self {
        cfg.validate().expect("invalid model configuration");
        assert!(cfg.vocab_size > 0, "vocab_size must be set before init");
        let mut init = Init::new(seed);
        let mut p = Self::empty();
        let h = cfg.hidden;

        p.push_weight(&mut init, "embed.token", &[cfg.vocab_size, h]);
        p.push_weight(&mut init, "embed.pos", &[cfg.max_len, h]);
        p.push_ln("embed.ln", h);
        for i in 0..cfg.layers {
            p.push_attention(&mut init, &format!("enc.{i}.attn"), h);
            p.push_ln(&format!("enc.{i}.ln1"), h);
            p.push_ffn(&mut init, &format!("enc.{i}.ffn"), h, cfg.ffn);
            p.push_ln(&format!("enc.{i}.ln2"), h);
        }
        p.push_weight(&mut init, "head.ate.w", &[h, 3]);
        p.push_zeros("head.ate.b", &[3]);

        p.push_weight(&mut init, "q_embed.label", &[3, h]);
        p.push_weight(&mut init, "q_embed.pos", &[cfg.max_len, h]);
        p.push_ln("q_embed.ln", h);
        for k in 0..cfg.asc_layers {
            p.push_attention(&mut init, &format!("dec.{k}.self"), h);
            p.push_ln(&format!("dec.{k}.ln1"), h);
            p.push_attention(&mut init, &format!("dec.{k}.cross"), h);
            p.push_ln(&format!("dec.{k}.lnx"), h);
            p.push_ffn(&mut init, &format!("dec.{k}.ffn"), h, cfg.ffn);
            p.push_ln(&format!("dec.{k}.ln2"), h);
        }
        p.push_weight(&mut init, "head.asc.w", &[h, 5]);
        p.push_zeros("head.asc.b", &[5]);
        p.push_weight(&mut init, "head.cons.w", &[h, 5]);
        p.push_zeros("head.cons.b", &[5]);
        p
    }

    pub fn from_entries(entries: Vec<ParamEntry<F>>) -> Self {
        let mut p = Self::empty();
        for e in entries {
            p.push(e.name, e.shape, e.values);
        }
        p
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ParamEntry<F>] {
        &self.entries
    }

    pub fn entry(&self, name: &str) -> &ParamEntry<F> {
        &self.entries[self.position(name)]
    }

    pub fn position(&self, name: &str) -> usize {
        *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn get(&self, name: &str) -> &[F] {
        &self.entry(name).values
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Vec<F> {
        let i = self.position(name);
        &mut self.entries[i].values
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut ParamEntry<F>> {
        self.entries.iter_mut()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.values.len()).collect()
    }

    pub fn total_parameters(&self) -> usize {
        self.entries.iter().map(|e| e.values.len()).sum()
    }

    pub fn convert<T: Real>(&self) -> ModelParams<T> {
        ModelParams::from_entries(
            self.entries
                .iter()
                .map(|e| ParamEntry {
                    name: e.name.clone(),
                    shape: e.shape.clone(),
                    values: e.values.iter().map(|&v| T::from_f64(v.to_f64())).collect(),
                })
                .collect(),
        )
    }

    fn copy_tensor(&mut self, from: &str, to: &str) -> Result<(), ModelError> {
        let src_idx = self.position(from);
        let dst_idx = self.position(to);
        if self.entries[src_idx].shape != self.entries[dst_idx].shape {
            return Err(ModelError::ShapeIncompatible {
                from: from.to_string(),
                to: to.to_string(),
            });
        }
        let values = self.entries[src_idx].values.clone();
        self.entries[dst_idx].values = values;
        Ok(())
    }

    /// Copies the self-attention, feed-forward, and norm weights of the top
    /// `asc_layers` encoder layers into the decoder blocks (block k takes
    /// encoder layer L - asc_layers + k, 0-based), then freshly initializes
    /// the cross-attention and query-embedding weights from `seed`.
    /// Copying is idempotent; the fresh parts depend only on the seed.
    pub fn init_asc_from_ate(&mut self, cfg: &EncoderConfig, seed: u64) -> Result<(), ModelError> {
        assert!(cfg.asc_layers <= cfg.layers, "decoder deeper than encoder");
        for k in 0..cfg.asc_layers {
            let src = cfg.layers - cfg.asc_layers + k;
            for w in ["wq", "wk", "wv", "wo", "bq", "bk", "bv", "bo"] {
                self.copy_tensor(&format!("enc.{src}.attn.{w}"), &format!("dec.{k}.self.{w}"))?;
            }
            for w in ["w1", "b1", "w2", "b2"] {
                self.copy_tensor(&format!("enc.{src}.ffn.{w}"), &format!("dec.{k}.ffn.{w}"))?;
            }
            for ln in ["ln1", "ln2"] {
                for part in ["gamma", "beta"] {
                    self.copy_tensor(
                        &format!("enc.{src}.{ln}.{part}"),
                        &format!("dec.{k}.{ln}.{part}"),
                    )?;
                }
            }
        }

        let mut init = Init::new(seed);
        for k in 0..cfg.asc_layers {
            for w in ["wq", "wk", "wv", "wo"] {
                let name = format!("dec.{k}.cross.{w}");
                let numel = self.entry(&name).values.len();
                *self.get_mut(&name) = init.weight(numel);
            }
            for b in ["bq", "bk", "bv", "bo"] {
                let name = format!("dec.{k}.cross.{b}");
                let numel = self.entry(&name).values.len();
                *self.get_mut(&name) = vec![F::zero(); numel];
            }
            let gname = format!("dec.{k}.lnx.gamma");
            let numel = self.entry(&gname).values.len();
            *self.get_mut(&gname) = vec![F::one(); numel];
            let bname = format!("dec.{k}.lnx.beta");
            let numel = self.entry(&bname).values.len();
            *self.get_mut(&bname) = vec![F::zero(); numel];
        }
        for name in ["q_embed.label", "q_embed.pos"] {
            let numel = self.entry(name).values.len();
            *self.get_mut(name) = init.weight(numel);
        }
        let numel = self.entry("q_embed.ln.gamma").values.len();
        *self.get_mut("q_embed.ln.gamma") = vec![F::one(); numel];
        *self.get_mut("q_embed.ln.beta") = vec![F::zero(); numel];
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> EncoderConfig {
        EncoderConfig {
            vocab_size: 30,
            ..Default::default()
        }
    }

    #[test]
    fn names_are_unique_and_order_is_stable() {
        let a = ModelParams::<f32>::init(&cfg(), 1);
        let b = ModelParams::<f32>::init(&cfg(), 1);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.entries().iter().zip(b.entries()) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.shape, y.shape);
            assert_eq!(x.values, y.values);
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = ModelParams::<f64>::init(&cfg(), 1);
        let b = ModelParams::<f64>::init(&cfg(), 2);
        assert_ne!(a.get("embed.token"), b.get("embed.token"));
    }

    #[test]
    fn asc_init_copies_top_encoder_layers_bit_exact() {
        let c = cfg();
        let mut p = ModelParams::<f32>::init(&c, 3);
        p.init_asc_from_ate(&c, 9).unwrap();
        // block 0 <- layer 2, block 1 <- layer 3 (0-based)
        for (k, src) in [(0usize, 2usize), (1, 3)] {
            for w in ["wq", "wk", "wv", "wo"] {
                assert_eq!(
                    p.get(&format!("dec.{k}.self.{w}")),
                    p.get(&format!("enc.{src}.attn.{w}"))
                );
            }
            assert_eq!(
                p.get(&format!("dec.{k}.ffn.w1")),
                p.get(&format!("enc.{src}.ffn.w1"))
            );
        }
    }

    #[test]
    fn asc_init_is_idempotent_on_copied_weights() {
        let c = cfg();
        let mut p = ModelParams::<f32>::init(&c, 3);
        p.init_asc_from_ate(&c, 9).unwrap();
        let first: Vec<f32> = p.get("dec.0.self.wq").to_vec();
        p.init_asc_from_ate(&c, 9).unwrap();
        assert_eq!(p.get("dec.0.self.wq"), &first[..]);
    }

    #[test]
    fn fresh_cross_attention_depends_on_the_seed() {
        let c = cfg();
        let mut a = ModelParams::<f32>::init(&c, 3);
        let mut b = ModelParams::<f32>::init(&c, 3);
        a.init_asc_from_ate(&c, 9).unwrap();
        b.init_asc_from_ate(&c, 10).unwrap();
        assert_ne!(a.get("dec.0.cross.wq"), b.get("dec.0.cross.wq"));
        assert_eq!(a.get("dec.0.self.wq"), b.get("dec.0.self.wq"));
    }

    #[test]
    fn groups_split_decoder_from_encoder() {
        assert_eq!(param_group("enc.0.attn.wq"), ParamGroup::Ate);
        assert_eq!(param_group("embed.token"), ParamGroup::Ate);
        assert_eq!(param_group("head.ate.w"), ParamGroup::Ate);
        assert_eq!(param_group("dec.1.cross.wq"), ParamGroup::Asc);
        assert_eq!(param_group("q_embed.label"), ParamGroup::Asc);
        assert_eq!(param_group("head.asc.w"), ParamGroup::Asc);
        assert_eq!(param_group("head.cons.b"), ParamGroup::Asc);
    }
}
