//! Exact-match pair metrics and the label / gradient-histogram statistics
//! exports.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::data::{DataError, PolarityTag, TaggedSentence, TermTag};
use crate::ghm::HistogramSnapshot;
use crate::spans::AspectPolarityPair;

/// Micro-averaged over the corpus: a predicted pair counts iff begin, end,
/// and polarity all match a gold pair of the same sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct PairMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_gold: usize,
    pub n_pred: usize,
    pub n_correct: usize,
    /// (polarity, gold, predicted, correct) per non-`O` polarity class.
    pub per_polarity: Vec<(PolarityTag, usize, usize, usize)>,
    /// Set when a denominator was empty and the convention 0 was used.
    pub empty_denominator: bool,
}

fn keys(pairs: &[AspectPolarityPair]) -> HashSet<(usize, usize, PolarityTag)> {
    pairs.iter().map(|p| (p.begin, p.end, p.polarity)).collect()
}

pub fn pair_prf(gold: &[Vec<AspectPolarityPair>], pred: &[Vec<AspectPolarityPair>]) -> PairMetrics {
    assert_eq!(gold.len(), pred.len(), "gold and prediction sentence counts differ");
    let mut n_gold = 0;
    let mut n_pred = 0;
    let mut n_correct = 0;
    let polarities = [
        PolarityTag::Positive,
        PolarityTag::Neutral,
        PolarityTag::Negative,
        PolarityTag::Conflict,
    ];
    let mut per = [(0usize, 0usize, 0usize); 4];
    for (g, p) in gold.iter().zip(pred) {
        let gk = keys(g);
        let pk = keys(p);
        n_gold += gk.len();
        n_pred += pk.len();
        n_correct += gk.intersection(&pk).count();
        for (slot, &pol) in per.iter_mut().zip(&polarities) {
            let gp: HashSet<_> = gk.iter().filter(|k| k.2 == pol).collect();
            let pp: HashSet<_> = pk.iter().filter(|k| k.2 == pol).collect();
            slot.0 += gp.len();
            slot.1 += pp.len();
            slot.2 += gp.intersection(&pp).count();
        }
    }
    let empty_denominator = n_pred == 0 || n_gold == 0;
    let precision = if n_pred == 0 { 0.0 } else { n_correct as f64 / n_pred as f64 };
    let recall = if n_gold == 0 { 0.0 } else { n_correct as f64 / n_gold as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    PairMetrics {
        precision,
        recall,
        f1,
        n_gold,
        n_pred,
        n_correct,
        per_polarity: polarities
            .iter()
            .zip(per)
            .map(|(&pol, (g, p, c))| (pol, g, p, c))
            .collect(),
        empty_denominator,
    }
}

/// Structured text report; keys are stable for downstream parsing.
pub fn format_metrics_report(m: &PairMetrics) -> String {
    let mut out = String::new();
    out.push_str(&format!("precision {:.6}\n", m.precision));
    out.push_str(&format!("recall {:.6}\n", m.recall));
    out.push_str(&format!("f1 {:.6}\n", m.f1));
    out.push_str(&format!("n_gold {}\n", m.n_gold));
    out.push_str(&format!("n_pred {}\n", m.n_pred));
    out.push_str(&format!("n_correct {}\n", m.n_correct));
    for (pol, gold, pred, correct) in &m.per_polarity {
        out.push_str(&format!(
            "{}.n_gold {}\n{}.n_pred {}\n{}.n_correct {}\n",
            pol.as_str(),
            gold,
            pol.as_str(),
            pred,
            pol.as_str(),
            correct
        ));
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelStats {
    pub term_counts: [usize; TermTag::COUNT],
    pub polarity_counts: [usize; PolarityTag::COUNT],
    pub total_tokens: usize,
}

impl LabelStats {
    pub fn o_share_term(&self) -> f64 {
        self.term_counts[TermTag::Outside.id()] as f64 / self.total_tokens as f64
    }
}

pub fn label_stats(corpus: &[TaggedSentence]) -> LabelStats {
    let mut stats = LabelStats::default();
    for s in corpus {
        stats.total_tokens += s.len();
        for &t in &s.term_tags {
            stats.term_counts[t.id()] += 1;
        }
        for &p in &s.polarity_tags {
            stats.polarity_counts[p.id()] += 1;
        }
    }
    stats
}

/// One snapshot renders as m bin rows "bin_lo, bin_hi, U, A" followed by a
/// summary row "total, epoch, sum_U, sum_A": m + 1 lines. The rendered
/// text is a pure function of the snapshots, so re-export is byte-exact.
pub fn render_gradient_stats(snapshots: &[HistogramSnapshot]) -> String {
    let mut out = String::new();
    for snap in snapshots {
        let m = snap.u.len();
        for j in 0..m {
            out.push_str(&format!(
                "{:.6}, {:.6}, {}, {:.6}\n",
                j as f64 / m as f64,
                (j + 1) as f64 / m as f64,
                snap.u[j],
                snap.a[j]
            ));
        }
        let su: f64 = snap.u.iter().sum();
        let sa: f64 = snap.a.iter().sum();
        out.push_str(&format!("total, {}, {}, {:.6}\n", snap.epoch, su, sa));
    }
    out
}

pub fn export_gradient_stats(snapshots: &[HistogramSnapshot], path: &Path) -> Result<(), DataError> {
    assert!(!snapshots.is_empty(), "no histogram snapshots were recorded");
    fs::write(path, render_gradient_stats(snapshots)).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_corpus;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(b: usize, e: usize, pol: PolarityTag) -> AspectPolarityPair {
        AspectPolarityPair {
            begin: b,
            end: e,
            surface: String::new(),
            polarity: pol,
        }
    }

    #[test]
    fn identical_nonempty_sets_score_one() {
        let gold = vec![vec![pair(1, 3, PolarityTag::Positive)]];
        let m = pair_prf(&gold, &gold.clone());
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        assert!(!m.empty_denominator);
    }

    #[test]
    fn empty_prediction_scores_zero_with_diagnostic() {
        let gold = vec![vec![pair(1, 3, PolarityTag::Positive)]];
        let pred = vec![vec![]];
        let m = pair_prf(&gold, &pred);
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert!(m.empty_denominator);
    }

    #[test]
    fn one_span_right_one_polarity_wrong_scores_half() {
        let gold = vec![vec![
            pair(1, 3, PolarityTag::Positive),
            pair(4, 6, PolarityTag::Negative),
        ]];
        let pred = vec![vec![
            pair(1, 3, PolarityTag::Positive),
            pair(4, 6, PolarityTag::Positive),
        ]];
        let m = pair_prf(&gold, &pred);
        assert_eq!((m.precision, m.recall, m.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn matches_brute_force_intersection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let pols = [
            PolarityTag::Positive,
            PolarityTag::Neutral,
            PolarityTag::Negative,
            PolarityTag::Conflict,
        ];
        for _ in 0..5000 {
            let sentences = rng.random_range(1..4usize);
            let mut gold = Vec::new();
            let mut pred = Vec::new();
            for _ in 0..sentences {
                let mk = |rng: &mut ChaCha8Rng| -> Vec<AspectPolarityPair> {
                    let k = rng.random_range(0..4usize);
                    let mut seen = HashSet::new();
                    (0..k)
                        .filter_map(|_| {
                            let b = rng.random_range(0..8usize);
                            let e = b + rng.random_range(1..3usize);
                            let pol = pols[rng.random_range(0..4)];
                            seen.insert((b, e, pol)).then(|| pair(b, e, pol))
                        })
                        .collect()
                };
                gold.push(mk(&mut rng));
                pred.push(mk(&mut rng));
            }
            let m = pair_prf(&gold, &pred);
            // oracle: explicit membership scan
            let mut correct = 0usize;
            let mut tg = 0;
            let mut tp = 0;
            for (g, p) in gold.iter().zip(&pred) {
                tg += g.len();
                tp += p.len();
                for cand in p {
                    if g.iter().any(|x| {
                        x.begin == cand.begin && x.end == cand.end && x.polarity == cand.polarity
                    }) {
                        correct += 1;
                    }
                }
            }
            assert_eq!(m.n_correct, correct);
            assert_eq!(m.n_gold, tg);
            assert_eq!(m.n_pred, tp);
            assert!(m.f1 >= 0.0 && m.f1 <= 1.0);
            if tg > 0 && tg == tp && correct == tg {
                assert_eq!(m.f1, 1.0);
            }
        }
    }

    #[test]
    fn label_stats_counts_directly() {
        let corpus = parse_corpus("a\tO\tO\nb\tB\tPOS\nc\tI\tPOS\n\n").unwrap();
        let stats = label_stats(&corpus);
        assert_eq!(stats.term_counts, [1, 1, 1]);
        assert_eq!(stats.polarity_counts, [2, 0, 0, 0, 1]);
        assert_eq!(stats.total_tokens, 3);
        let sum: usize = stats.term_counts.iter().sum();
        assert_eq!(sum, stats.total_tokens);
    }

    #[test]
    fn label_stats_invariant_under_shuffling() {
        let corpus = parse_corpus("a\tO\tO\n\nb\tB\tNEG\n\n").unwrap();
        let mut reversed = corpus.clone();
        reversed.reverse();
        assert_eq!(label_stats(&corpus), label_stats(&reversed));
    }

    #[test]
    fn gradient_stats_render_one_snapshot_is_m_plus_one_lines() {
        let snap = HistogramSnapshot {
            epoch: 1,
            u: vec![3.0, 0.0, 1.0],
            a: vec![2.25, 0.0, 0.75],
        };
        let text = render_gradient_stats(&[snap]);
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("0.000000, 0.333333, 3, 2.250000\n"));
        assert!(text.ends_with("total, 1, 4, 3.000000\n"));
    }

    #[test]
    fn gradient_stats_reexport_is_byte_identical() {
        let snaps = vec![
            HistogramSnapshot { epoch: 1, u: vec![1.0, 2.0], a: vec![0.5, 1.5] },
            HistogramSnapshot { epoch: 2, u: vec![0.0, 3.0], a: vec![0.25, 2.0] },
        ];
        assert_eq!(render_gradient_stats(&snaps), render_gradient_stats(&snaps));
    }

    #[test]
    fn metrics_report_has_the_contract_keys() {
        let gold = vec![vec![pair(0, 1, PolarityTag::Neutral)]];
        let report = format_metrics_report(&pair_prf(&gold, &gold.clone()));
        for key in ["precision", "recall", "f1", "n_gold", "n_pred", "n_correct", "POS.n_gold", "CON.n_correct"] {
            assert!(report.lines().any(|l| l.starts_with(key)), "missing key {key}");
        }
    }
}
