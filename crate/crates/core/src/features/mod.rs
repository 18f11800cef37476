//! Feature extraction.
//!
//! Eight feature groups describe a comment: lexical n-grams (TF-IDF, or raw
//! counts), length, argumentation, named entities, text quality, and three
//! groups of ingested toxicity-style scores. A [`FeatureExtractor`] is fitted
//! once on training comments (vocabulary, aux layout) and is then immutable;
//! extraction is a pure function of the comment and may run in parallel.

pub mod aux;
pub mod lexicon;
pub mod ngram;
pub mod text;
pub mod tokenize;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledComment, RawComment};
use crate::error::{Error, Result};
use aux::{aux_score_features, AuxColumns, AuxLayout};
use lexicon::{Dictionary, LexiconCategory, LexiconSet};
use ngram::{NgramVocabulary, SparseVec};
use tokenize::{tokenize, TokenizedComment};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, schemars::JsonSchema,
)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    /// Raw 1-3-gram counts.
    LexicalCounts,
    /// TF-IDF weighted 1-3-grams.
    Lexical,
    Length,
    Argumentation,
    NamedEntity,
    TextQuality,
    ContentQuality,
    Aggressiveness,
    Toxicity,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 9] = [
        FeatureGroup::LexicalCounts,
        FeatureGroup::Lexical,
        FeatureGroup::Length,
        FeatureGroup::Argumentation,
        FeatureGroup::NamedEntity,
        FeatureGroup::TextQuality,
        FeatureGroup::ContentQuality,
        FeatureGroup::Aggressiveness,
        FeatureGroup::Toxicity,
    ];

    /// The groups used by the "all features" model and the ablation table.
    pub const STANDARD: [FeatureGroup; 8] = [
        FeatureGroup::Lexical,
        FeatureGroup::Length,
        FeatureGroup::Argumentation,
        FeatureGroup::NamedEntity,
        FeatureGroup::TextQuality,
        FeatureGroup::ContentQuality,
        FeatureGroup::Aggressiveness,
        FeatureGroup::Toxicity,
    ];

    pub const AUX: [FeatureGroup; 3] = [
        FeatureGroup::ContentQuality,
        FeatureGroup::Aggressiveness,
        FeatureGroup::Toxicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::LexicalCounts => "lexical_counts",
            FeatureGroup::Lexical => "lexical",
            FeatureGroup::Length => "length",
            FeatureGroup::Argumentation => "argumentation",
            FeatureGroup::NamedEntity => "named_entity",
            FeatureGroup::TextQuality => "text_quality",
            FeatureGroup::ContentQuality => "content_quality",
            FeatureGroup::Aggressiveness => "aggressiveness",
            FeatureGroup::Toxicity => "toxicity",
        }
    }

    /// Column-name prefix in feature exports.
    pub fn prefix(self) -> &'static str {
        match self {
            FeatureGroup::LexicalCounts => "lexc",
            FeatureGroup::Lexical => "lex",
            FeatureGroup::Length => "len",
            FeatureGroup::Argumentation => "arg",
            FeatureGroup::NamedEntity => "ne",
            FeatureGroup::TextQuality => "tq",
            FeatureGroup::ContentQuality => "cq",
            FeatureGroup::Aggressiveness => "agg",
            FeatureGroup::Toxicity => "tox",
        }
    }

    /// Fixed width of a dense group; `None` for the sparse lexical groups.
    pub fn dense_dim(self) -> Option<usize> {
        match self {
            FeatureGroup::LexicalCounts | FeatureGroup::Lexical => None,
            FeatureGroup::Length => Some(4),
            FeatureGroup::Argumentation => Some(5),
            FeatureGroup::NamedEntity => Some(1),
            FeatureGroup::TextQuality => Some(5),
            FeatureGroup::ContentQuality | FeatureGroup::Aggressiveness => Some(3),
            FeatureGroup::Toxicity => Some(8),
        }
    }

    pub fn is_sparse(self) -> bool {
        self.dense_dim().is_none()
    }

    pub fn is_aux(self) -> bool {
        FeatureGroup::AUX.contains(&self)
    }

    /// Feature names without the group prefix.
    pub fn feature_names(self, aux: &AuxColumns) -> Vec<String> {
        let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect();
        match self {
            FeatureGroup::LexicalCounts | FeatureGroup::Lexical => Vec::new(),
            FeatureGroup::Length => s(&["tokens", "sentences", "mean_word_length", "words_per_sentence"]),
            FeatureGroup::Argumentation => LexiconCategory::ALL.iter().map(|c| c.name().to_string()).collect(),
            FeatureGroup::NamedEntity => s(&["count"]),
            FeatureGroup::TextQuality => s(&["smog", "personal_experience", "misspellings", "caps", "punct"]),
            g => aux.names(g).to_vec(),
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown feature group `{s}`")))
    }
}

fn default_min_df() -> usize {
    2
}

fn default_groups() -> Vec<FeatureGroup> {
    FeatureGroup::STANDARD.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    /// Minimum document frequency for a retained n-gram.
    #[serde(default = "default_min_df")]
    pub min_df: usize,
    /// Groups to extract.
    #[serde(default = "default_groups")]
    pub groups: Vec<FeatureGroup>,
    /// Directory with the five lexicon files; the shipped lists when absent.
    #[serde(default)]
    pub lexicon_dir: Option<PathBuf>,
    /// Spelling word list; the shipped list when absent.
    #[serde(default)]
    pub dictionary: Option<PathBuf>,
    #[serde(default)]
    pub aux: AuxColumns,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            min_df: default_min_df(),
            groups: default_groups(),
            lexicon_dir: None,
            dictionary: None,
            aux: AuxColumns::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GroupValues {
    Dense(Vec<f64>),
    Sparse(SparseVec),
}

/// Feature values for one comment, keyed by group. Disabled groups are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FeatureVector {
    pub groups: BTreeMap<FeatureGroup, GroupValues>,
}

impl FeatureVector {
    pub fn dense(&self, g: FeatureGroup) -> Option<&[f64]> {
        match self.groups.get(&g) {
            Some(GroupValues::Dense(v)) => Some(v),
            _ => None,
        }
    }

    pub fn sparse(&self, g: FeatureGroup) -> Option<&SparseVec> {
        match self.groups.get(&g) {
            Some(GroupValues::Sparse(v)) => Some(v),
            _ => None,
        }
    }
}

/// Fitted, immutable extraction resources.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    pub config: FeatureConfig,
    pub vocab: NgramVocabulary,
    pub lexicons: LexiconSet,
    pub dictionary: Dictionary,
    pub aux: AuxLayout,
}

impl FeatureExtractor {
    /// Build the vocabulary and aux layout from `train`, load word lists.
    pub fn fit(train: &[LabeledComment], config: &FeatureConfig) -> Result<Self> {
        let lexicons = match &config.lexicon_dir {
            Some(d) => LexiconSet::from_dir(d)?,
            None => LexiconSet::builtin(),
        };
        let dictionary = match &config.dictionary {
            Some(p) => Dictionary::from_file(p)?,
            None => Dictionary::builtin(),
        };
        Self::fit_with(train, config, lexicons, dictionary)
    }

    pub fn fit_with(
        train: &[LabeledComment],
        config: &FeatureConfig,
        lexicons: LexiconSet,
        dictionary: Dictionary,
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Usage("cannot fit features on an empty corpus".into()));
        }
        let needs_vocab = config.groups.iter().any(|g| g.is_sparse());
        let vocab = if needs_vocab {
            let docs: Vec<Vec<String>> = train.par_iter().map(|c| tokenize(c.text()).word_tokens).collect();
            NgramVocabulary::build(docs.iter().map(Vec::as_slice), config.min_df)
        } else {
            NgramVocabulary::from_counts(std::iter::empty(), train.len())
        };
        let aux = AuxLayout::resolve(&config.aux, train.iter().map(|c| &c.raw))?;
        Ok(FeatureExtractor {
            config: config.clone(),
            vocab,
            lexicons,
            dictionary,
            aux,
        })
    }

    /// Groups that are both requested and available.
    pub fn active_groups(&self) -> Vec<FeatureGroup> {
        self.config
            .groups
            .iter()
            .copied()
            .filter(|g| !g.is_aux() || self.aux.is_enabled(*g))
            .collect()
    }

    pub fn extract(&self, c: &RawComment) -> Result<FeatureVector> {
        let t = tokenize(&c.text);
        self.extract_tokenized(c, &t)
    }

    pub fn extract_tokenized(&self, c: &RawComment, t: &TokenizedComment) -> Result<FeatureVector> {
        let mut out = FeatureVector::default();
        let aux = aux_score_features(&self.aux, c)?;
        for g in self.active_groups() {
            let v = match g {
                FeatureGroup::LexicalCounts => GroupValues::Sparse(self.vocab.counts(&t.word_tokens)),
                FeatureGroup::Lexical => GroupValues::Sparse(self.vocab.tfidf(&t.word_tokens)),
                FeatureGroup::Length => GroupValues::Dense(text::length_features(t).to_vec()),
                FeatureGroup::Argumentation => {
                    GroupValues::Dense(text::argumentation_features(t, &self.lexicons).to_vec())
                }
                FeatureGroup::NamedEntity => GroupValues::Dense(vec![text::named_entity_count(t)]),
                FeatureGroup::TextQuality => {
                    GroupValues::Dense(text::text_quality_features(t, &self.dictionary).to_vec())
                }
                FeatureGroup::ContentQuality => GroupValues::Dense(aux.content_quality.expect("enabled").to_vec()),
                FeatureGroup::Aggressiveness => GroupValues::Dense(aux.aggressiveness.expect("enabled").to_vec()),
                FeatureGroup::Toxicity => GroupValues::Dense(aux.toxicity.expect("enabled").to_vec()),
            };
            out.groups.insert(g, v);
        }
        Ok(out)
    }

    /// Extract every comment in parallel; output order matches input order.
    pub fn extract_all(&self, comments: &[LabeledComment]) -> Result<Vec<FeatureVector>> {
        comments.par_iter().map(|c| self.extract(&c.raw)).collect()
    }

    pub fn sparse_dim(&self) -> usize {
        self.vocab.len()
    }

    /// Header for the dense-feature CSV export.
    pub fn dense_header(&self) -> Vec<String> {
        self.active_groups()
            .into_iter()
            .filter(|g| !g.is_sparse())
            .flat_map(|g| {
                g.feature_names(&self.config.aux)
                    .into_iter()
                    .map(move |n| format!("{}.{n}", g.prefix()))
            })
            .collect()
    }
}

/// Write dense groups as CSV: `id,<prefix.feature>...`. Sparse lexical
/// groups are omitted; their width is the vocabulary size.
pub fn write_feature_csv<W: std::io::Write>(
    writer: W,
    extractor: &FeatureExtractor,
    comments: &[LabeledComment],
    vectors: &[FeatureVector],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Data(format!("writing feature CSV: {e}"));
    let mut header = vec!["id".to_string()];
    header.extend(extractor.dense_header());
    w.write_record(&header).map_err(err)?;
    let dense_groups: Vec<FeatureGroup> = extractor.active_groups().into_iter().filter(|g| !g.is_sparse()).collect();
    for (c, v) in comments.iter().zip(vectors) {
        let mut row = vec![c.raw.id.clone()];
        for g in &dense_groups {
            for x in v.dense(*g).unwrap_or(&[]) {
                row.push(format!("{x:.4}"));
            }
        }
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Data(e.to_string()))?;
    Ok(())
}

/// Where a group's columns sit inside a [`FeatureMatrix`] row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSlot {
    pub group: FeatureGroup,
    pub sparse: bool,
    pub start: usize,
    pub len: usize,
}

/// Design matrix: a dense block (standardisable) and a sparse block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    pub dense: Vec<Vec<f64>>,
    pub sparse: Vec<SparseVec>,
    pub n_dense: usize,
    pub n_sparse: usize,
    pub layout: Vec<GroupSlot>,
    pub dense_names: Vec<String>,
}

/// A borrowed row of a [`FeatureMatrix`].
#[derive(Debug, Clone, Copy)]
pub struct Row<'a> {
    pub dense: &'a [f64],
    pub sparse: &'a [(u32, f64)],
}

impl FeatureMatrix {
    /// Dense-only matrix.
    pub fn from_dense(rows: Vec<Vec<f64>>) -> Self {
        let n_dense = rows.first().map_or(0, Vec::len);
        let n = rows.len();
        FeatureMatrix {
            dense: rows,
            sparse: vec![Vec::new(); n],
            n_dense,
            n_sparse: 0,
            layout: Vec::new(),
            dense_names: (0..n_dense).map(|i| format!("x{i}")).collect(),
        }
    }

    /// Assemble the requested groups. Every vector must carry every group.
    pub fn assemble(
        vectors: &[FeatureVector],
        groups: &[FeatureGroup],
        sparse_dim: usize,
        aux: &AuxColumns,
    ) -> Result<Self> {
        let mut layout = Vec::new();
        let mut dense_names = Vec::new();
        let (mut nd, mut ns) = (0usize, 0usize);
        for &g in groups {
            match g.dense_dim() {
                Some(d) => {
                    layout.push(GroupSlot {
                        group: g,
                        sparse: false,
                        start: nd,
                        len: d,
                    });
                    dense_names.extend(g.feature_names(aux).into_iter().map(|n| format!("{}.{n}", g.prefix())));
                    nd += d;
                }
                None => {
                    layout.push(GroupSlot {
                        group: g,
                        sparse: true,
                        start: ns,
                        len: sparse_dim,
                    });
                    ns += sparse_dim;
                }
            }
        }
        let mut dense = Vec::with_capacity(vectors.len());
        let mut sparse = Vec::with_capacity(vectors.len());
        for v in vectors {
            let mut d = Vec::with_capacity(nd);
            let mut s = Vec::new();
            for slot in &layout {
                match v.groups.get(&slot.group) {
                    Some(GroupValues::Dense(x)) if !slot.sparse => d.extend_from_slice(x),
                    Some(GroupValues::Sparse(x)) if slot.sparse => {
                        s.extend(x.iter().map(|&(i, val)| (i + slot.start as u32, val)))
                    }
                    _ => {
                        return Err(Error::Config(format!(
                            "feature group `{}` is not available",
                            slot.group
                        )))
                    }
                }
            }
            dense.push(d);
            sparse.push(s);
        }
        Ok(FeatureMatrix {
            dense,
            sparse,
            n_dense: nd,
            n_sparse: ns,
            layout,
            dense_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.dense.len()
    }

    pub fn dim(&self) -> usize {
        self.n_dense + self.n_sparse
    }

    pub fn row(&self, i: usize) -> Row<'_> {
        Row {
            dense: &self.dense[i],
            sparse: &self.sparse[i],
        }
    }

    /// Copy of the selected rows.
    pub fn select(&self, rows: &[usize]) -> Self {
        FeatureMatrix {
            dense: rows.iter().map(|&i| self.dense[i].clone()).collect(),
            sparse: rows.iter().map(|&i| self.sparse[i].clone()).collect(),
            ..self.clone_shape()
        }
    }

    fn clone_shape(&self) -> Self {
        FeatureMatrix {
            dense: Vec::new(),
            sparse: Vec::new(),
            n_dense: self.n_dense,
            n_sparse: self.n_sparse,
            layout: self.layout.clone(),
            dense_names: self.dense_names.clone(),
        }
    }
}
