//! Whitespace-token vocabulary with fixed special ids. Ids are dense and
//! independent of corpus order: surviving tokens are sorted
//! lexicographically before numbering.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::corpus::TaggedSentence;
use super::DataError;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const CLS: usize = 2;
pub const SEP: usize = 3;
pub const SPECIALS: [&str; 4] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"];

#[derive(Clone, Debug)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn build(corpus: &[TaggedSentence], min_count: usize) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for s in corpus {
            for t in &s.tokens {
                *counts.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<&str> = counts
            .iter()
            .filter(|(_, &c)| c >= min_count.max(1))
            .map(|(&t, _)| t)
            .collect();
        kept.sort_unstable();
        Self::from_tokens(kept.into_iter().map(str::to_string))
    }

    fn from_tokens(tokens: impl Iterator<Item = String>) -> Self {
        let mut all: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        all.extend(tokens);
        let index = all
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocab { tokens: all, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lookup; unseen tokens map to [UNK].
    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    /// Non-special tokens in id order, as stored in the vocabulary file.
    pub fn payload_tokens(&self) -> &[String] {
        &self.tokens[SPECIALS.len()..]
    }

    pub fn from_payload(tokens: impl Iterator<Item = String>) -> Self {
        Self::from_tokens(tokens)
    }

    /// One token per line; the id is the line number offset by the four
    /// specials, which are not written.
    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        let mut text = String::new();
        for t in self.payload_tokens() {
            text.push_str(t);
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| DataError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = fs::read_to_string(path).map_err(|e| DataError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(Self::from_tokens(
            text.lines().filter(|l| !l.is_empty()).map(str::to_string),
        ))
    }
}
