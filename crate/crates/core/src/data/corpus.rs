//! Corpus wire format and sentence invariants.
//!
//! One token per line with three tab-separated fields: token, term tag,
//! polarity tag. A blank line terminates a sentence and `#` in column 0
//! starts a comment line.

use std::fs;
use std::path::Path;

use super::schema::{PolarityTag, TermTag};
use super::DataError;

/// Token sequence with its two parallel tag sequences. `line_span` records
/// where the sentence came from (1-based, inclusive) for diagnostics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedSentence {
    pub tokens: Vec<String>,
    pub term_tags: Vec<TermTag>,
    pub polarity_tags: Vec<PolarityTag>,
    pub line_span: (usize, usize),
}

impl TaggedSentence {
    pub fn new(tokens: Vec<String>, term_tags: Vec<TermTag>, polarity_tags: Vec<PolarityTag>) -> Self {
        TaggedSentence {
            tokens,
            term_tags,
            polarity_tags,
            line_span: (0, 0),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Checks every sentence invariant: equal lengths, `I` only after `B`
    /// or `I`, polarity non-`O` exactly on term tokens, and one polarity
    /// per term. `line` is used for the error location.
    pub fn validate(&self, line: usize) -> Result<(), DataError> {
        if self.term_tags.len() != self.tokens.len() || self.polarity_tags.len() != self.tokens.len() {
            return Err(DataError::LengthMismatch { line });
        }
        let mut prev = TermTag::Outside;
        let mut term_polarity: Option<PolarityTag> = None;
        for (i, (&t, &p)) in self.term_tags.iter().zip(&self.polarity_tags).enumerate() {
            if t == TermTag::Inside && prev == TermTag::Outside {
                return Err(DataError::OrphanInside { line: line + i });
            }
            match t {
                TermTag::Outside => {
                    if p != PolarityTag::Outside {
                        return Err(DataError::PolarityOutsideTerm { line: line + i });
                    }
                    term_polarity = None;
                }
                TermTag::Begin => {
                    if p == PolarityTag::Outside {
                        return Err(DataError::MissingPolarity { line: line + i });
                    }
                    term_polarity = Some(p);
                }
                TermTag::Inside => {
                    if p == PolarityTag::Outside {
                        return Err(DataError::MissingPolarity { line: line + i });
                    }
                    if term_polarity != Some(p) {
                        return Err(DataError::InconsistentPolarity { line: line + i });
                    }
                }
            }
            prev = t;
        }
        Ok(())
    }
}

pub fn parse_corpus(text: &str) -> Result<Vec<TaggedSentence>, DataError> {
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let mut term_tags = Vec::new();
    let mut polarity_tags = Vec::new();
    let mut first_line = 0usize;

    let flush = |tokens: &mut Vec<String>,
                     term_tags: &mut Vec<TermTag>,
                     polarity_tags: &mut Vec<PolarityTag>,
                     first_line: usize,
                     last_line: usize,
                     sentences: &mut Vec<TaggedSentence>|
     -> Result<(), DataError> {
        if tokens.is_empty() {
            return Ok(());
        }
        let sentence = TaggedSentence {
            tokens: std::mem::take(tokens),
            term_tags: std::mem::take(term_tags),
            polarity_tags: std::mem::take(polarity_tags),
            line_span: (first_line, last_line),
        };
        sentence.validate(first_line)?;
        sentences.push(sentence);
        Ok(())
    };

    let mut last_line = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.starts_with('#') {
            continue;
        }
        if raw.trim().is_empty() {
            flush(&mut tokens, &mut term_tags, &mut polarity_tags, first_line, last_line, &mut sentences)?;
            continue;
        }
        let mut fields = raw.split('\t');
        let token = fields.next().unwrap_or("");
        let term = fields.next();
        let polarity = fields.next();
        let extra = fields.next();
        let (term, polarity) = match (term, polarity, extra) {
            (Some(t), Some(p), None) => (t, p),
            _ => return Err(DataError::FieldCount { line: line_no }),
        };
        if token.is_empty() {
            return Err(DataError::FieldCount { line: line_no });
        }
        let term_tag = TermTag::parse(term).ok_or(DataError::UnknownTag {
            line: line_no,
            tag: term.to_string(),
            set: "term",
        })?;
        let polarity_tag = PolarityTag::parse(polarity).ok_or(DataError::UnknownTag {
            line: line_no,
            tag: polarity.to_string(),
            set: "polarity",
        })?;
        if tokens.is_empty() {
            first_line = line_no;
        }
        last_line = line_no;
        tokens.push(token.to_string());
        term_tags.push(term_tag);
        polarity_tags.push(polarity_tag);
    }
    flush(&mut tokens, &mut term_tags, &mut polarity_tags, first_line, last_line, &mut sentences)?;
    Ok(sentences)
}

pub fn load_corpus(path: &Path) -> Result<Vec<TaggedSentence>, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_corpus(&text)
}

pub fn render_corpus(sentences: &[TaggedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        for i in 0..s.len() {
            out.push_str(&s.tokens[i]);
            out.push('\t');
            out.push_str(s.term_tags[i].as_str());
            out.push('\t');
            out.push_str(s.polarity_tags[i].as_str());
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

pub fn save_corpus(sentences: &[TaggedSentence], path: &Path) -> Result<(), DataError> {
    fs::write(path, render_corpus(sentences)).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_block_parses() {
        let text = "The\tO\tO\nkeyboard\tB\tPOS\nrocks\tO\tO\n\n";
        let corpus = parse_corpus(text).unwrap();
        assert_eq!(corpus.len(), 1);
        let s = &corpus[0];
        assert_eq!(s.len(), 3);
        assert_eq!(s.tokens[1], "keyboard");
        assert_eq!(s.term_tags[1], TermTag::Begin);
        assert_eq!(s.polarity_tags[1], PolarityTag::Positive);
        assert_eq!(s.line_span, (1, 3));
    }

    #[test]
    fn unknown_tag_names_the_line() {
        let text = "ok\tO\tO\nbad\tXYZ\tO\n\n";
        match parse_corpus(text) {
            Err(DataError::UnknownTag { line, tag, set }) => {
                assert_eq!(line, 2);
                assert_eq!(tag, "XYZ");
                assert_eq!(set, "term");
            }
            other => panic!("expected UnknownTag, got {other:?}"),
        }
    }

    #[test]
    fn orphan_inside_is_rejected() {
        let text = "a\tO\tO\nb\tI\tPOS\n\n";
        assert!(matches!(parse_corpus(text), Err(DataError::OrphanInside { .. })));
    }

    #[test]
    fn polarity_on_non_term_is_rejected() {
        let text = "a\tO\tPOS\n\n";
        assert!(matches!(parse_corpus(text), Err(DataError::PolarityOutsideTerm { .. })));
    }

    #[test]
    fn term_without_polarity_is_rejected() {
        let text = "a\tB\tO\n\n";
        assert!(matches!(parse_corpus(text), Err(DataError::MissingPolarity { .. })));
    }

    #[test]
    fn split_polarity_within_term_is_rejected() {
        let text = "a\tB\tPOS\nb\tI\tNEG\n\n";
        assert!(matches!(parse_corpus(text), Err(DataError::InconsistentPolarity { .. })));
    }

    #[test]
    fn comments_and_missing_trailing_blank_are_fine() {
        let text = "# header\na\tB\tNEG\n# middle comment\nb\tI\tNEG";
        let corpus = parse_corpus(text).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus[0].len(), 2);
    }

    #[test]
    fn field_count_errors_name_the_line() {
        let text = "a\tB\n\n";
        assert!(matches!(parse_corpus(text), Err(DataError::FieldCount { line: 1 })));
    }
}
