//! Virtual adversarial training: a single-step worst-case perturbation of
//! the token embeddings and the consistency loss against it.
//!
//! The probe follows the linearized power step exactly: draw d from a
//! standard normal, move the embeddings by xi * d, differentiate the KL
//! divergence between the clean and probed output distributions with
//! respect to the probed embeddings (parameters frozen as constants), and
//! rescale that gradient to radius eps under the whole-matrix L2 norm.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::{
    asc_branch, ate_branch, bind_params, embed_tokens, encode_from, Bound, EncoderConfig, Mode,
    ModelError, ModelParams,
};
use crate::numcore::{Real, Tape, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VatBranch {
    Ate,
    Asc,
    Both,
}

impl VatBranch {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ate" => Some(VatBranch::Ate),
            "asc" => Some(VatBranch::Asc),
            "both" => Some(VatBranch::Both),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VatBranch::Ate => "ate",
            VatBranch::Asc => "asc",
            VatBranch::Both => "both",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VatConfig {
    /// Probe magnitude.
    pub xi: f64,
    /// Perturbation radius.
    pub eps: f64,
    /// Which branch distributions enter the KL.
    pub apply_to: VatBranch,
}

impl Default for VatConfig {
    fn default() -> Self {
        VatConfig {
            xi: 1e-6,
            eps: 2.0,
            apply_to: VatBranch::Both,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VatCounters {
    /// Probes whose KL gradient vanished; the perturbation falls back to
    /// zero.
    pub zero_grad_fallbacks: usize,
}

fn mask_weights(mask: &[bool]) -> Vec<f64> {
    mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect()
}

fn real_count(mask: &[bool]) -> f64 {
    mask.iter().filter(|&&m| m).count() as f64
}

/// Builds the branch distributions for a forward pass with the given token
/// embedding tensor.
fn branch_probs<F: Real>(
    cfg: &EncoderConfig,
    tape: &mut Tape<F>,
    bound: &Bound,
    embeddings: Var,
    q_ids: Option<&[usize]>,
    apply_to: VatBranch,
) -> Result<(Option<Var>, Option<Var>), ModelError> {
    let mut mode = Mode::Eval;
    let layers = encode_from(cfg, tape, bound, embeddings, &mut mode);
    let want_ate = matches!(apply_to, VatBranch::Ate | VatBranch::Both);
    let want_asc = matches!(apply_to, VatBranch::Asc | VatBranch::Both);
    let p_e = want_ate.then(|| ate_branch(cfg, tape, bound, &layers).probs);
    let p_c = if want_asc {
        let q = q_ids.expect("sentiment branch requested without a query stream");
        Some(asc_branch(cfg, tape, bound, &layers, q, &mut mode)?.branch.probs)
    } else {
        None
    };
    Ok((p_e, p_c))
}

/// Masked mean KL between matching branch distributions; both branches
/// average with equal weight when present.
fn kl_between<F: Real>(
    tape: &mut Tape<F>,
    clean: (Option<Var>, Option<Var>),
    probed: (Option<Var>, Option<Var>),
    weights: &[f64],
    denom: f64,
) -> Var {
    let mut terms = Vec::new();
    if let (Some(p), Some(q)) = (clean.0, probed.0) {
        terms.push(tape.kl_rows(p, q, weights, denom));
    }
    if let (Some(p), Some(q)) = (clean.1, probed.1) {
        terms.push(tape.kl_rows(p, q, weights, denom));
    }
    match terms.len() {
        1 => terms[0],
        2 => {
            let sum = tape.add(terms[0], terms[1]);
            tape.scale(sum, 0.5)
        }
        _ => unreachable!("at least one branch is always selected"),
    }
}

pub(crate) struct ProbeResult<F: Real> {
    pub tape: Tape<F>,
    pub pert: Var,
    pub grad_norm: f64,
    pub clean: (Option<Var>, Option<Var>),
}

fn run_probe<F: Real>(
    cfg: &EncoderConfig,
    params: &ModelParams<F>,
    ids: &[usize],
    q_ids: Option<&[usize]>,
    mask: &[bool],
    vat: &VatConfig,
    seed: u64,
) -> Result<ProbeResult<F>, ModelError> {
    let mut tape: Tape<F> = Tape::new();
    // parameters are a frozen constant set for the whole probe
    let bound = bind_params(&mut tape, params, false);
    let mut mode = Mode::Eval;

    let clean_emb = embed_tokens(cfg, &mut tape, &bound, ids, None, &mut mode);
    let clean = branch_probs(cfg, &mut tape, &bound, clean_emb, q_ids, vat.apply_to)?;

    let h = cfg.hidden;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<F> = (0..ids.len() * h)
        .map(|_| {
            let d: f64 = StandardNormal.sample(&mut rng);
            F::from_f64(vat.xi * d)
        })
        .collect();
    let pert = tape.leaf(noise, &[ids.len(), h]);
    let probed_emb = embed_tokens(cfg, &mut tape, &bound, ids, Some(pert), &mut mode);
    let probed = branch_probs(cfg, &mut tape, &bound, probed_emb, q_ids, vat.apply_to)?;

    let weights = mask_weights(mask);
    let denom = real_count(mask).max(1.0);
    let kl = kl_between(&mut tape, clean, probed, &weights, denom);
    tape.backward(kl).expect("probe root is scalar");

    let grad_norm = tape
        .grad(pert)
        .iter()
        .map(|&g| {
            let g = g.to_f64();
            g * g
        })
        .sum::<f64>()
        .sqrt();
    Ok(ProbeResult { tape, pert, grad_norm, clean })
}

/// The adversarial direction for one sentence, flattened (len, hidden)
/// row-major. The L2 norm of the result equals eps exactly up to rounding;
/// a vanished probe gradient yields the zero matrix and bumps the counter.
pub fn adversarial_perturbation<F: Real>(
    cfg: &EncoderConfig,
    params: &ModelParams<F>,
    ids: &[usize],
    q_ids: Option<&[usize]>,
    mask: &[bool],
    vat: &VatConfig,
    seed: u64,
    counters: &mut VatCounters,
) -> Result<Vec<F>, ModelError> {
    assert!(vat.xi > 0.0 && vat.eps > 0.0, "xi and eps must be positive");
    assert_eq!(mask.len(), ids.len(), "mask must cover the id sequence");
    let probe = run_probe(cfg, params, ids, q_ids, mask, vat, seed)?;
    if probe.grad_norm == 0.0 {
        counters.zero_grad_fallbacks += 1;
        return Ok(vec![F::zero(); ids.len() * cfg.hidden]);
    }
    let scale = vat.eps / probe.grad_norm;
    Ok(probe
        .tape
        .grad(probe.pert)
        .iter()
        .map(|&g| F::from_f64(g.to_f64() * scale))
        .collect())
}

/// A perturbation bundled with the clean (unperturbed, frozen-parameter)
/// branch distributions computed along the way. The probe always runs at
/// f64: the KL gradient at probe magnitude is a difference of nearly equal
/// distributions and cancels below f32 resolution. The trainer reuses the
/// clean distributions as the stop-gradient side of the consistency loss.
pub struct SentencePerturbation {
    /// (len, hidden) row-major, L2 norm eps (or all zero on fallback).
    pub r: Vec<f64>,
    /// Term-branch probability rows, when that branch is selected.
    pub clean_ate: Option<Vec<f64>>,
    /// Sentiment-branch probability rows, when that branch is selected.
    pub clean_asc: Option<Vec<f64>>,
}

/// As [`adversarial_perturbation`], at fixed f64 precision, also handing
/// back the clean distributions of the probe's forward pass.
#[allow(clippy::too_many_arguments)]
pub fn adversarial_perturbation_with_clean(
    cfg: &EncoderConfig,
    params: &ModelParams<f64>,
    ids: &[usize],
    q_ids: Option<&[usize]>,
    mask: &[bool],
    vat: &VatConfig,
    seed: u64,
    counters: &mut VatCounters,
) -> Result<SentencePerturbation, ModelError> {
    assert!(vat.xi > 0.0 && vat.eps > 0.0, "xi and eps must be positive");
    assert_eq!(mask.len(), ids.len(), "mask must cover the id sequence");
    let probe = run_probe(cfg, params, ids, q_ids, mask, vat, seed)?;
    let r = if probe.grad_norm == 0.0 {
        counters.zero_grad_fallbacks += 1;
        vec![0.0; ids.len() * cfg.hidden]
    } else {
        let scale = vat.eps / probe.grad_norm;
        probe.tape.grad(probe.pert).iter().map(|&g| g * scale).collect()
    };
    Ok(SentencePerturbation {
        r,
        clean_ate: probe.clean.0.map(|v| probe.tape.values(v).to_vec()),
        clean_asc: probe.clean.1.map(|v| probe.tape.values(v).to_vec()),
    })
}

/// Standalone consistency loss for a precomputed perturbation: the masked
/// mean KL between the clean distributions (constants: the clean branch is
/// stop-gradient) and the distributions after adding r to the token
/// embeddings. Zero when r is zero.
pub fn vat_loss<F: Real>(
    cfg: &EncoderConfig,
    params: &ModelParams<F>,
    ids: &[usize],
    q_ids: Option<&[usize]>,
    mask: &[bool],
    r: &[F],
    vat: &VatConfig,
) -> Result<f64, ModelError> {
    if r.len() != ids.len() * cfg.hidden {
        return Err(ModelError::PerturbationShape {
            got: r.len(),
            want: ids.len() * cfg.hidden,
        });
    }
    let mut tape: Tape<F> = Tape::new();
    let bound = bind_params(&mut tape, params, false);
    let mut mode = Mode::Eval;

    let clean_emb = embed_tokens(cfg, &mut tape, &bound, ids, None, &mut mode);
    let clean = branch_probs(cfg, &mut tape, &bound, clean_emb, q_ids, vat.apply_to)?;
    let clean = (
        clean.0.map(|v| tape.detach(v)),
        clean.1.map(|v| tape.detach(v)),
    );

    let pert = tape.constant(r.to_vec(), &[ids.len(), cfg.hidden]);
    let probed_emb = embed_tokens(cfg, &mut tape, &bound, ids, Some(pert), &mut mode);
    let probed = branch_probs(cfg, &mut tape, &bound, probed_emb, q_ids, vat.apply_to)?;

    let weights = mask_weights(mask);
    let denom = real_count(mask).max(1.0);
    let kl = kl_between(&mut tape, clean, probed, &weights, denom);
    Ok(tape.scalar(kl).to_f64())
}
