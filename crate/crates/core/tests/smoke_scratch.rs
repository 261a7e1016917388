use std::time::Instant;

use grace_core::data::{synth_generate, PolarityTag, SynthConfig, TaggedSentence, Vocab};
use grace_core::model::{predict_sentence, EncoderConfig};
use grace_core::spans::{gold_pairs, PolarityStrategy};
use grace_core::train::{encode_corpus, DevSet, TrainConfig, Trainer};

fn diag(trainer: &Trainer<f32>, corpus: &[TaggedSentence], vocab: &Vocab, label: &str) {
    let (enc, _) = encode_corpus(corpus, vocab, trainer.model_cfg.max_len);
    let mut gold_pairs_all = Vec::new();
    let mut pred_pairs_all = Vec::new();
    let mut gold_spans_all = Vec::new();
    let mut pred_spans_all = Vec::new();
    let mut term_token_total = 0usize;
    let mut term_token_pol_correct = 0usize;
    let mut confusion = [[0usize; 5]; 5];
    for (s, e) in corpus.iter().zip(&enc) {
        let p = predict_sentence(
            &trainer.model_cfg,
            &trainer.params,
            &e.ids,
            &s.tokens,
            false,
            PolarityStrategy::FirstToken,
        )
        .unwrap();
        let gold = gold_pairs(&s.term_tags, &s.polarity_tags, &s.tokens);
        // spans only: erase polarity
        let erase = |pairs: &[grace_core::spans::AspectPolarityPair]| {
            pairs
                .iter()
                .map(|x| grace_core::spans::AspectPolarityPair {
                    begin: x.begin,
                    end: x.end,
                    surface: String::new(),
                    polarity: PolarityTag::Positive,
                })
                .collect::<Vec<_>>()
        };
        gold_spans_all.push(erase(&gold));
        pred_spans_all.push(erase(&p.pairs));
        gold_pairs_all.push(gold);
        pred_pairs_all.push(p.pairs.clone());
        for i in 0..s.tokens.len() {
            if s.polarity_tags[i] != PolarityTag::Outside {
                term_token_total += 1;
                confusion[s.polarity_tags[i].id()][p.polarity_tags[i].id()] += 1;
                if p.polarity_tags[i] == s.polarity_tags[i] {
                    term_token_pol_correct += 1;
                }
            }
        }
    }
    let pair = grace_core::eval::pair_prf(&gold_pairs_all, &pred_pairs_all);
    let span = grace_core::eval::pair_prf(&gold_spans_all, &pred_spans_all);
    eprintln!(
        "  [{label}] pair F1 {:.4} | span-only F1 {:.4} | term-token polarity acc {:.4} ({}/{})",
        pair.f1,
        span.f1,
        term_token_pol_correct as f64 / term_token_total.max(1) as f64,
        term_token_pol_correct,
        term_token_total
    );
    eprintln!("    confusion rows=gold(POS NEU NEG CON O) cols=pred: {:?}", confusion);
}

fn run2(label: &str, ghm: bool, vat: bool, lr_ate2: f64, epochs2: usize, base: bool) {
    let corpus = synth_generate(&SynthConfig {
        n_sentences: 1000,
        seed: 1,
        imbalance: 20.0,
        ..Default::default()
    });
    let (train, dev) = corpus.split_at(800);

    let vocab = Vocab::build(train, 1);
    let mut model_cfg = if base { EncoderConfig::base_preset() } else { EncoderConfig::default() };
    model_cfg.vocab_size = vocab.len();
    model_cfg.dropout = 0.1;
    let mut cfg = TrainConfig::desk(1);
    cfg.ghm = ghm;
    cfg.vat = vat;
    cfg.vat_eps = 0.1;
    cfg.lr_stage2_ate = lr_ate2;
    cfg.stage2_epochs = epochs2;

    let (train_enc, _) = encode_corpus(train, &vocab, model_cfg.max_len);

    let t0 = Instant::now();
    let mut trainer: Trainer<f32> = Trainer::new(model_cfg.clone(), cfg, vocab.clone());
    trainer.train_stage1(&train_enc, None).unwrap();
    trainer.train_stage2(&train_enc, None).unwrap();
    eprintln!("== {label}: total {:?}", t0.elapsed());
    diag(&trainer, &train[..200], &vocab, "train");
    diag(&trainer, dev, &vocab, "dev");
}

#[test]
#[ignore = "scratch benchmark"]
fn scratch_matrix() {
    run2("cascade plain 20ep", false, false, 3e-4, 20, false);
    run2("cascade ghm 20ep", true, false, 3e-4, 20, false);
}
