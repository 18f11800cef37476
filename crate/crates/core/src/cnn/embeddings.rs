//! Word embedding tables in the GloVe text format: one token per line
//! followed by `D` space-separated reals.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `V` rows of width `D` plus a trailing all-zero OOV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    dim: usize,
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
    data: Vec<f64>,
}

/// How much of a corpus vocabulary a table covers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub types: usize,
    pub type_hits: usize,
    pub tokens: usize,
    pub token_hits: usize,
}

impl Coverage {
    pub fn type_rate(&self) -> f64 {
        if self.types == 0 {
            0.0
        } else {
            self.type_hits as f64 / self.types as f64
        }
    }

    pub fn token_rate(&self) -> f64 {
        if self.tokens == 0 {
            0.0
        } else {
            self.token_hits as f64 / self.tokens as f64
        }
    }
}

impl EmbeddingTable {
    /// Build from `(token, vector)` rows. Later duplicates are ignored.
    pub fn from_rows(dim: usize, rows: impl IntoIterator<Item = (String, Vec<f64>)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be at least 1".into()));
        }
        let mut t = EmbeddingTable {
            dim,
            tokens: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        };
        for (tok, v) in rows {
            if v.len() != dim {
                return Err(Error::Data(format!("`{tok}` has {} values, expected {dim}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Data(format!("`{tok}` has a non-finite value")));
            }
            t.push(tok, &v);
        }
        t.data.extend(std::iter::repeat_n(0.0, dim));
        Ok(t)
    }

    fn push(&mut self, tok: String, v: &[f64]) {
        if self.index.contains_key(&tok) {
            return;
        }
        self.index.insert(tok.clone(), self.tokens.len() as u32);
        self.tokens.push(tok);
        self.data.extend_from_slice(v);
    }

    /// Uniform(−0.25, 0.25) vectors for `vocab`, in sorted order.
    pub fn random<'a>(vocab: impl IntoIterator<Item = &'a str>, dim: usize, seed: u64) -> Result<Self> {
        let sorted: BTreeSet<&str> = vocab.into_iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<(String, Vec<f64>)> = sorted
            .into_iter()
            .map(|t| (t.to_string(), (0..dim).map(|_| rng.random_range(-0.25..0.25)).collect()))
            .collect();
        Self::from_rows(dim, rows)
    }

    /// Rebuild the lookup index after deserialisation.
    pub fn reindex(&mut self) {
        self.index = self.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of real rows, excluding OOV.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn oov_index(&self) -> u32 {
        self.tokens.len() as u32
    }

    /// Exact match first, then the lowercased form, else OOV.
    pub fn index_of(&self, token: &str) -> u32 {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        self.index
            .get(&token.to_lowercase())
            .copied()
            .unwrap_or_else(|| self.oov_index())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index_of(token) != self.oov_index()
    }

    pub fn row(&self, idx: u32) -> &[f64] {
        let i = idx as usize * self.dim;
        &self.data[i..i + self.dim]
    }

    pub fn row_mut(&mut self, idx: u32) -> &mut [f64] {
        let i = idx as usize * self.dim;
        &mut self.data[i..i + self.dim]
    }

    pub fn lookup(&self, token: &str) -> &[f64] {
        self.row(self.index_of(token))
    }

    /// Copy keeping only tokens in `keep` (matched as [`index_of`] would).
    ///
    /// [`index_of`]: EmbeddingTable::index_of
    pub fn restrict<'a>(&self, keep: impl IntoIterator<Item = &'a str>) -> Self {
        let mut ids: BTreeSet<u32> = BTreeSet::new();
        for t in keep {
            let i = self.index_of(t);
            if i != self.oov_index() {
                ids.insert(i);
            }
        }
        let rows = ids
            .into_iter()
            .map(|i| (self.tokens[i as usize].clone(), self.row(i).to_vec()));
        Self::from_rows(self.dim, rows).expect("rows already validated")
    }

    pub fn coverage<'a>(&self, docs: impl IntoIterator<Item = &'a [String]>) -> Coverage {
        let mut types: HashSet<&str> = HashSet::new();
        let mut c = Coverage {
            types: 0,
            type_hits: 0,
            tokens: 0,
            token_hits: 0,
        };
        for d in docs {
            for t in d {
                c.tokens += 1;
                let hit = self.contains(t);
                if hit {
                    c.token_hits += 1;
                }
                if types.insert(t.as_str()) {
                    c.types += 1;
                    if hit {
                        c.type_hits += 1;
                    }
                }
            }
        }
        c
    }
}

/// Read a GloVe-format file. When `keep` is given, other tokens are skipped
/// (their lines are still validated).
pub fn load_embeddings(path: impl AsRef<Path>, expected_dim: usize, keep: Option<&HashSet<String>>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(' ').filter(|s| !s.is_empty());
        let tok = fields.next().expect("non-empty line");
        let vals: std::result::Result<Vec<f64>, _> = fields.map(str::parse::<f64>).collect();
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message,
        };
        let vals = vals.map_err(|e| parse_err(format!("bad number: {e}")))?;
        if vals.len() != expected_dim {
            return Err(parse_err(format!("{} values, expected {expected_dim}", vals.len())));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(parse_err("non-finite value".into()));
        }
        if keep.is_none_or(|k| k.contains(tok) || k.contains(&tok.to_lowercase())) {
            rows.push((tok.to_string(), vals));
        }
    }
    let t = EmbeddingTable::from_rows(expected_dim, rows)?;
    log::info!("loaded {} embeddings of dimension {expected_dim} from {}", t.len(), path.display());
    Ok(t)
}
