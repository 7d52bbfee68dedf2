use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{BaselineError, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    /// Inclusive n-gram range; `(1, 1)` is plain bag-of-words.
    pub ngram_range: (usize, usize),
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            ngram_range: (1, 1),
        }
    }
}

/// Maximal runs of alphanumeric characters, then n-grams joined by a space.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let words: Vec<String> = text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| if config.lowercase { w.to_lowercase() } else { w.into() })
        .collect();
    let (lo, hi) = config.ngram_range;
    let lo = lo.max(1);
    let mut out = Vec::new();
    for n in lo..=hi.max(lo) {
        if n > words.len() {
            break;
        }
        for gram in words.windows(n) {
            out.push(gram.join(" "));
        }
    }
    out
}

/// Vocabulary and document frequencies learned from a training corpus.
///
/// Terms are sorted, so a term's index is its rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfVocabulary {
    pub terms: Vec<String>,
    pub document_frequency: Vec<u64>,
    pub n_documents: u64,
    pub tokenizer: TokenizerConfig,
}

impl TfidfVocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    /// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, index: usize) -> f64 {
        let n = self.n_documents as f64;
        let df = self.document_frequency[index] as f64;
        libm::log((1.0 + n) / (1.0 + df)) + 1.0
    }

    /// L2-normalised tf-idf vector; unknown terms are skipped.
    pub fn transform(&self, doc: &str) -> SparseVector {
        let pairs = tokenize(doc, &self.tokenizer)
            .iter()
            .filter_map(|t| self.index_of(t))
            .map(|i| (i, 1.0))
            .collect();
        let mut v = SparseVector::from_pairs(pairs);
        let weighted = v.iter().map(|(i, tf)| (i, tf * self.idf(i))).collect();
        v = SparseVector::from_pairs(weighted);
        let norm = v.norm();
        if norm > 0.0 {
            v.scale(1.0 / norm);
        }
        v
    }
}

pub fn fit_tfidf<S: AsRef<str>>(docs: &[S], tokenizer: TokenizerConfig) -> Result<TfidfVocabulary, BaselineError> {
    let mut df: BTreeMap<String, u64> = BTreeMap::new();
    for doc in docs {
        let mut terms = tokenize(doc.as_ref(), &tokenizer);
        terms.sort();
        terms.dedup();
        for t in terms {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    if df.is_empty() {
        return Err(BaselineError::EmptyVocabulary);
    }
    let (terms, document_frequency) = df.into_iter().unzip();
    Ok(TfidfVocabulary {
        terms,
        document_frequency,
        n_documents: docs.len() as u64,
        tokenizer,
    })
}
