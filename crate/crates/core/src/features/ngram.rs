//! 1- to 3-gram vocabulary, raw counts and TF-IDF weighting.
//!
//! N-grams are built over lowercased word tokens and joined with `_`, which
//! cannot occur inside a word token. TF-IDF uses
//! `tf · (ln((N + 1) / (df + 1)) + 1)` followed by L2 normalisation.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub const MAX_ORDER: usize = 3;

/// Sparse vector as sorted `(index, value)` pairs.
pub type SparseVec = Vec<(u32, f64)>;

/// All 1..=3-grams of `tokens` (lowercased), in position order.
pub fn ngrams(tokens: &[String]) -> Vec<String> {
    let lower: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let mut out = Vec::new();
    for n in 1..=MAX_ORDER {
        for w in lower.windows(n) {
            out.push(w.join("_"));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramVocabulary {
    index: BTreeMap<String, u32>,
    doc_freq: Vec<u32>,
    n_docs: usize,
    min_df: usize,
}

impl NgramVocabulary {
    /// Keep every n-gram whose document frequency is at least `min_df`.
    /// Indices follow lexicographic order of the n-gram strings.
    pub fn build<'a, I>(docs: I, min_df: usize) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut df: HashMap<String, u32> = HashMap::new();
        let mut n_docs = 0;
        for doc in docs {
            n_docs += 1;
            let uniq: BTreeSet<String> = ngrams(doc).into_iter().collect();
            for g in uniq {
                *df.entry(g).or_default() += 1;
            }
        }
        let kept: BTreeMap<String, u32> = df
            .into_iter()
            .filter(|(_, d)| *d as usize >= min_df.max(1))
            .collect();
        let mut index = BTreeMap::new();
        let mut doc_freq = Vec::with_capacity(kept.len());
        for (i, (g, d)) in kept.into_iter().enumerate() {
            index.insert(g, i as u32);
            doc_freq.push(d);
        }
        NgramVocabulary {
            index,
            doc_freq,
            n_docs,
            min_df,
        }
    }

    /// Vocabulary with explicit document frequencies (useful for fixtures).
    pub fn from_counts(entries: impl IntoIterator<Item = (String, u32)>, n_docs: usize) -> Self {
        let sorted: BTreeMap<String, u32> = entries.into_iter().collect();
        let mut index = BTreeMap::new();
        let mut doc_freq = Vec::new();
        for (i, (g, d)) in sorted.into_iter().enumerate() {
            index.insert(g, i as u32);
            doc_freq.push(d);
        }
        NgramVocabulary {
            index,
            doc_freq,
            n_docs,
            min_df: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.doc_freq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_freq.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }

    pub fn index_of(&self, gram: &str) -> Option<u32> {
        self.index.get(gram).copied()
    }

    pub fn doc_freq(&self, idx: u32) -> u32 {
        self.doc_freq[idx as usize]
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    pub fn idf(&self, idx: u32) -> f64 {
        ((self.n_docs as f64 + 1.0) / (self.doc_freq(idx) as f64 + 1.0)).ln() + 1.0
    }

    /// Raw in-vocabulary n-gram counts, sorted by index.
    pub fn counts(&self, tokens: &[String]) -> SparseVec {
        let mut c: BTreeMap<u32, f64> = BTreeMap::new();
        for g in ngrams(tokens) {
            if let Some(i) = self.index_of(&g) {
                *c.entry(i).or_default() += 1.0;
            }
        }
        c.into_iter().collect()
    }

    /// L2-normalised TF-IDF vector; all-zero (empty) when nothing is in vocabulary.
    pub fn tfidf(&self, tokens: &[String]) -> SparseVec {
        let mut v: SparseVec = self
            .counts(tokens)
            .into_iter()
            .map(|(i, tf)| (i, tf * self.idf(i)))
            .collect();
        let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, x) in &mut v {
                *x /= norm;
            }
        }
        v
    }
}
