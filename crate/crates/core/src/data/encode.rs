//! Sentence -> id sequences with [CLS]/[SEP] wrapping. The two special
//! positions carry forced `O` tags and are masked out of every loss.

use super::corpus::TaggedSentence;
use super::schema::{PolarityTag, TermTag};
use super::vocab::{Vocab, CLS, SEP};
use super::DataError;

#[derive(Clone, Debug)]
pub struct EncodedSentence {
    /// [CLS] + token ids + [SEP]
    pub ids: Vec<usize>,
    /// term tag ids, `O` at the special positions
    pub term_ids: Vec<usize>,
    /// polarity tag ids, `O` at the special positions
    pub polarity_ids: Vec<usize>,
    /// true exactly at real-token positions
    pub mask: Vec<bool>,
    /// number of real tokens
    pub n_real: usize,
}

impl EncodedSentence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Overlong sentences are refused rather than truncated, so gold spans are
/// never split; callers skip them with a diagnostic.
pub fn encode_example(s: &TaggedSentence, vocab: &Vocab, max_len: usize) -> Result<EncodedSentence, DataError> {
    let n = s.len();
    if n + 2 > max_len {
        return Err(DataError::Overlong {
            len: n,
            max: max_len - 2,
        });
    }
    let mut ids = Vec::with_capacity(n + 2);
    ids.push(CLS);
    ids.extend(s.tokens.iter().map(|t| vocab.id(t)));
    ids.push(SEP);

    let o_term = TermTag::Outside.id();
    let mut term_ids = Vec::with_capacity(n + 2);
    term_ids.push(o_term);
    term_ids.extend(s.term_tags.iter().map(|t| t.id()));
    term_ids.push(o_term);

    let o_pol = PolarityTag::Outside.id();
    let mut polarity_ids = Vec::with_capacity(n + 2);
    polarity_ids.push(o_pol);
    polarity_ids.extend(s.polarity_tags.iter().map(|t| t.id()));
    polarity_ids.push(o_pol);

    let mut mask = vec![true; n + 2];
    mask[0] = false;
    mask[n + 1] = false;

    Ok(EncodedSentence {
        ids,
        term_ids,
        polarity_ids,
        mask,
        n_real: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::vocab::UNK;

    fn vocab() -> Vocab {
        let s = TaggedSentence::new(
            vec!["nice".into(), "screen".into(), "here".into()],
            vec![TermTag::Outside; 3],
            vec![PolarityTag::Outside; 3],
        );
        Vocab::build(&[s], 1)
    }

    #[test]
    fn empty_sentence_is_just_specials() {
        let s = TaggedSentence::new(vec![], vec![], vec![]);
        let e = encode_example(&s, &vocab(), 128).unwrap();
        assert_eq!(e.ids, vec![CLS, SEP]);
        assert_eq!(e.term_ids, vec![2, 2]);
        assert_eq!(e.polarity_ids, vec![4, 4]);
        assert_eq!(e.mask, vec![false, false]);
        assert_eq!(e.n_real, 0);
    }

    #[test]
    fn three_tokens_produce_length_five() {
        let s = TaggedSentence::new(
            vec!["nice".into(), "screen".into(), "here".into()],
            vec![TermTag::Outside, TermTag::Begin, TermTag::Outside],
            vec![PolarityTag::Outside, PolarityTag::Positive, PolarityTag::Outside],
        );
        let e = encode_example(&s, &vocab(), 128).unwrap();
        assert_eq!(e.len(), 5);
        assert_eq!(e.mask, vec![false, true, true, true, false]);
        assert_eq!(e.term_ids[2], TermTag::Begin.id());
    }

    #[test]
    fn unseen_token_becomes_unk_with_tags_intact() {
        let s = TaggedSentence::new(
            vec!["mystery".into()],
            vec![TermTag::Begin],
            vec![PolarityTag::Negative],
        );
        let e = encode_example(&s, &vocab(), 128).unwrap();
        assert_eq!(e.ids[1], UNK);
        assert_eq!(e.polarity_ids[1], PolarityTag::Negative.id());
    }

    #[test]
    fn overlong_is_skipped_not_truncated() {
        let n = 10;
        let s = TaggedSentence::new(
            (0..n).map(|i| format!("w{i}")).collect(),
            vec![TermTag::Outside; n],
            vec![PolarityTag::Outside; n],
        );
        assert!(matches!(
            encode_example(&s, &vocab(), 8),
            Err(DataError::Overlong { len: 10, max: 6 })
        ));
    }
}
