//! BIO boundary extraction, aspect-polarity pair assembly, and the
//! shared-representation consistent-polarity scores.
//!
//! All indices are 0-based half-open. The worked boundary example for tags
//! `O B I O B` is {[0,1), [1,3), [1,3), [3,4), [4,5)}; add 1 to both ends
//! for the 1-based convention.

use crate::data::{PolarityTag, TermTag};
use crate::numcore::Mat;

/// Per-token half-open span of the enclosing term; `O` tokens map to their
/// own singleton span. Spans tile the sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenBoundaries(pub Vec<(usize, usize)>);

impl TokenBoundaries {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spans(&self) -> &[(usize, usize)] {
        &self.0
    }
}

/// The unit of evaluation: a term span plus its resolved polarity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AspectPolarityPair {
    pub begin: usize,
    pub end: usize,
    pub surface: String,
    pub polarity: PolarityTag,
}

/// Rewrites every `I` whose predecessor is `O` (or the start) to `B`;
/// everything else passes through. Model argmax can emit such sequences.
pub fn repair_bio(term_tags: &[TermTag]) -> Vec<TermTag> {
    let mut out = Vec::with_capacity(term_tags.len());
    let mut prev = TermTag::Outside;
    for &t in term_tags {
        let fixed = if t == TermTag::Inside && prev == TermTag::Outside {
            TermTag::Begin
        } else {
            t
        };
        out.push(fixed);
        prev = fixed;
    }
    out
}

pub fn is_valid_bio(term_tags: &[TermTag]) -> bool {
    let mut prev = TermTag::Outside;
    for &t in term_tags {
        if t == TermTag::Inside && prev == TermTag::Outside {
            return false;
        }
        prev = t;
    }
    true
}

/// Contiguous B(I)* runs become shared spans; `O` positions are singletons.
/// Feeding an invalid BIO sequence is a programming error: repair first.
pub fn extract_boundaries(term_tags: &[TermTag]) -> TokenBoundaries {
    assert!(is_valid_bio(term_tags), "extract_boundaries requires valid BIO input");
    let n = term_tags.len();
    let mut spans = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        match term_tags[i] {
            TermTag::Outside => {
                spans.push((i, i + 1));
                i += 1;
            }
            TermTag::Begin => {
                let mut e = i + 1;
                while e < n && term_tags[e] == TermTag::Inside {
                    e += 1;
                }
                for _ in i..e {
                    spans.push((i, e));
                }
                i = e;
            }
            TermTag::Inside => unreachable!("valid BIO cannot start a run with I"),
        }
    }
    TokenBoundaries(spans)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolarityStrategy {
    /// Take the polarity tag of the first token of the run.
    FirstToken,
    /// Majority vote over the run; ties break by polarity id order.
    Majority,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DecodeCounters {
    /// Runs whose resolved polarity was `O`; reported as NEU rather than
    /// dropped so precision reflects the branch disagreement.
    pub o_polarity_spans: usize,
}

/// One pair per B(I)* run. Output spans are disjoint and sorted.
pub fn decode_pairs(
    term_tags: &[TermTag],
    polarity_tags: &[PolarityTag],
    tokens: &[String],
    strategy: PolarityStrategy,
) -> (Vec<AspectPolarityPair>, DecodeCounters) {
    assert_eq!(
        term_tags.len(),
        polarity_tags.len(),
        "decode_pairs: tag sequence lengths differ"
    );
    assert!(is_valid_bio(term_tags), "decode_pairs requires valid BIO input");
    let mut pairs = Vec::new();
    let mut counters = DecodeCounters::default();
    let n = term_tags.len();
    let mut i = 0;
    while i < n {
        if term_tags[i] != TermTag::Begin {
            i += 1;
            continue;
        }
        let begin = i;
        let mut end = i + 1;
        while end < n && term_tags[end] == TermTag::Inside {
            end += 1;
        }
        let resolved = match strategy {
            PolarityStrategy::FirstToken => polarity_tags[begin],
            PolarityStrategy::Majority => {
                let mut counts = [0usize; PolarityTag::COUNT];
                for &p in &polarity_tags[begin..end] {
                    counts[p.id()] += 1;
                }
                let best = (0..PolarityTag::COUNT)
                    .max_by_key(|&id| (counts[id], std::cmp::Reverse(id)))
                    .unwrap();
                PolarityTag::from_id(best).unwrap()
            }
        };
        let polarity = if resolved == PolarityTag::Outside {
            counters.o_polarity_spans += 1;
            PolarityTag::Neutral
        } else {
            resolved
        };
        let surface = if tokens.is_empty() {
            String::new()
        } else {
            tokens[begin..end].join(" ")
        };
        pairs.push(AspectPolarityPair {
            begin,
            end,
            surface,
            polarity,
        });
        i = end;
    }
    (pairs, counters)
}

/// Gold pairs of a labeled sentence.
pub fn gold_pairs(
    term_tags: &[TermTag],
    polarity_tags: &[PolarityTag],
    tokens: &[String],
) -> Vec<AspectPolarityPair> {
    decode_pairs(term_tags, polarity_tags, tokens, PolarityStrategy::FirstToken).0
}

/// Elementwise max over each token's span of decoder rows, then a ReLU'd
/// linear head. Tokens of one span receive identical score rows, so their
/// argmax labels agree by construction.
pub fn consistent_polarity(
    g_c: &Mat<f64>,
    boundaries: &TokenBoundaries,
    w_h: &Mat<f64>,
    b_h: &[f64],
) -> Mat<f64> {
    assert_eq!(boundaries.len(), g_c.rows, "boundaries must tile the rows");
    assert_eq!(w_h.rows, g_c.cols);
    assert_eq!(b_h.len(), w_h.cols);
    let mut scores = Mat::zeros(g_c.rows, w_h.cols);
    for (i, &(b, e)) in boundaries.spans().iter().enumerate() {
        assert!(b < e && e <= g_c.rows, "empty or out-of-range span");
        let mut pooled = g_c.row(b).to_vec();
        for r in b + 1..e {
            for (p, &v) in pooled.iter_mut().zip(g_c.row(r)) {
                if v > *p {
                    *p = v;
                }
            }
        }
        let out = scores.row_mut(i);
        for c in 0..w_h.cols {
            let mut s = b_h[c];
            for (k, &p) in pooled.iter().enumerate() {
                s += p * w_h.data[k * w_h.cols + c];
            }
            out[c] = s.max(0.0);
        }
    }
    scores
}

/// Prediction dump line: space-separated "begin:end:POLARITY" triples.
pub fn format_pair_line(pairs: &[AspectPolarityPair]) -> String {
    pairs
        .iter()
        .map(|p| format!("{}:{}:{}", p.begin, p.end, p.polarity.as_str()))
        .collect::<Vec<_>>()
        .join(" ")
}
