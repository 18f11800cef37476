//! Experiment configuration, loaded from JSON with unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::DEFAULT_BUCKET_EDGES;
use crate::cnn::CnnTrainConfig;
use crate::corpus::annotations::AgreeMapping;
use crate::corpus::ColumnMapping;
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::linear::{LogRegConfig, TrainConfig};
use crate::synthetic::SyntheticConfig;

/// Environment variable naming the workspace root when the config does not.
pub const DATA_DIR_ENV: &str = "C3_DATA_DIR";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root for every relative path. Falls back to `$C3_DATA_DIR`, then to
    /// the directory holding the config file.
    #[serde(default)]
    pub workspace_root: Option<PathBuf>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub linear: LinearSection,
    #[serde(default)]
    pub logreg: LogRegConfig,
    #[serde(default)]
    pub cnn: CnnSection,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub transfer: TransferConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("runs/default")
}

/// Where comments come from. Exactly one of the three sources is used, in
/// the order annotations, c3, synthetic.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Aggregated comment CSV.
    #[serde(default)]
    pub c3: Option<PathBuf>,
    /// Logical field → header for `c3`.
    #[serde(default)]
    pub mapping: ColumnMapping,
    /// Per-annotator export; averaged into fractions on ingest.
    #[serde(default)]
    pub annotations: Option<PathBuf>,
    #[serde(default)]
    pub annotation_mapping: ColumnMapping,
    #[serde(default)]
    pub agree_mapping: AgreeMapping,
    /// Generate a synthetic corpus instead of reading one.
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
}

fn d_test_fraction() -> f64 {
    0.2
}
fn d_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "d_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "d_seed")]
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_fraction: d_test_fraction(),
            seed: d_seed(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LinearSection {
    #[serde(default)]
    pub train: TrainConfig,
    /// Feature groups of the trained model; every available standard group when empty.
    #[serde(default)]
    pub groups: Vec<String>,
}

fn d_emb_dim() -> usize {
    300
}
fn d_random_dim() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CnnSection {
    #[serde(default)]
    pub train: CnnTrainConfig,
    /// GloVe-format embedding file. Seeded random vectors when absent.
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    #[serde(default = "d_emb_dim")]
    pub embedding_dim: usize,
    /// Dimension of the random vectors used without an embedding file.
    #[serde(default = "d_random_dim")]
    pub random_dim: usize,
    /// Train on at most this many training comments.
    #[serde(default)]
    pub subsample: Option<usize>,
}

impl Default for CnnSection {
    fn default() -> Self {
        CnnSection {
            train: CnnTrainConfig::default(),
            embeddings: None,
            embedding_dim: d_emb_dim(),
            random_dim: d_random_dim(),
            subsample: None,
        }
    }
}

fn d_edges() -> Vec<f64> {
    DEFAULT_BUCKET_EDGES.iter().copied().filter(|e| e.is_finite()).collect()
}
fn d_ablation() -> Vec<String> {
    crate::analysis::AblationGroup::standard().iter().map(|g| g.to_string()).collect()
}
fn d_tox() -> String {
    "toxicity".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Finite histogram edges; a final open bucket is always added.
    #[serde(default = "d_edges")]
    pub bucket_edges: Vec<f64>,
    #[serde(default = "d_ablation")]
    pub ablation_groups: Vec<String>,
    /// Aux score correlated against constructiveness.
    #[serde(default = "d_tox")]
    pub toxicity_column: String,
    /// Seed for the controversial-pair sample.
    #[serde(default = "d_seed")]
    pub pair_seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            bucket_edges: d_edges(),
            ablation_groups: d_ablation(),
            toxicity_column: d_tox(),
            pair_seed: d_seed(),
        }
    }
}

impl AnalysisConfig {
    pub fn edges(&self) -> Vec<f64> {
        let mut e = self.bucket_edges.clone();
        e.push(f64::INFINITY);
        e
    }
}

/// An external labelled corpus: either a pair of positive/negative comment
/// files or one aggregated CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CorpusSource {
    pub name: String,
    #[serde(default)]
    pub positive: Option<PathBuf>,
    #[serde(default)]
    pub negative: Option<PathBuf>,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub mapping: ColumnMapping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TransferPair {
    pub train: String,
    pub test: String,
}

fn d_pairs() -> Vec<TransferPair> {
    let p = |a: &str, b: &str| TransferPair {
        train: a.into(),
        test: b.into(),
    };
    vec![
        p("c3", "c3"),
        p("c3", "socc_a"),
        p("nyt_ynacc", "socc_a"),
        p("c3", "nyt_ynacc"),
        p("nyt_ynacc", "c3"),
    ]
}
fn d_transfer_groups() -> Vec<String> {
    vec!["all".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    /// External corpora. The name `c3` always refers to the ingested corpus
    /// (its train split when training, its test split when testing).
    #[serde(default)]
    pub corpora: Vec<CorpusSource>,
    #[serde(default = "d_pairs")]
    pub pairs: Vec<TransferPair>,
    #[serde(default = "d_transfer_groups")]
    pub groups: Vec<String>,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            corpora: Vec::new(),
            pairs: d_pairs(),
            groups: d_transfer_groups(),
        }
    }
}

/// JSON schema of [`ExperimentConfig`].
pub fn schema_json() -> String {
    let schema = schemars::schema_for!(ExperimentConfig);
    serde_json::to_string_pretty(&schema).expect("schema serialises") + "\n"
}

/// Apply `key.path=value` to a JSON document. The value is parsed as JSON
/// and kept as a string when that fails.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("override `{assignment}` is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Usage(format!("bad override key `{key}`")));
    }
    let mut cur = doc;
    for p in &parts[..parts.len() - 1] {
        if !cur.is_object() {
            return Err(Error::Config(format!("`{key}`: `{p}` is not an object")));
        }
        cur = cur
            .as_object_mut()
            .expect("checked")
            .entry(p.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    match cur.as_object_mut() {
        Some(o) => {
            o.insert(parts[parts.len() - 1].to_string(), value);
            Ok(())
        }
        None => Err(Error::Config(format!("`{key}`: parent is not an object"))),
    }
}

/// A parsed config plus the directory used to resolve relative paths.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub root: PathBuf,
    /// Raw JSON after overrides, for the manifest.
    pub snapshot: Value,
    pub source: Option<PathBuf>,
}

impl LoadedConfig {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Default::default()),
        };
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let config: ExperimentConfig =
            serde_json::from_value(doc.clone()).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        config.validate()?;
        let base = path
            .and_then(Path::parent)
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let root = match (&config.workspace_root, std::env::var_os(DATA_DIR_ENV)) {
            (Some(r), _) if r.is_absolute() => r.clone(),
            (Some(r), _) => base.join(r),
            (None, Some(env)) => PathBuf::from(env),
            (None, None) => base,
        };
        let snapshot = serde_json::to_value(&config)?;
        Ok(LoadedConfig {
            config,
            root,
            snapshot,
            source: path.map(Path::to_path_buf),
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output_dir)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let f = self.split.test_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Config(format!("split.test_fraction must lie in (0, 1), got {f}")));
        }
        self.linear.train.validate()?;
        self.cnn.train.validate()?;
        let mut edges = self.analysis.bucket_edges.clone();
        edges.push(f64::INFINITY);
        crate::analysis::validate_edges(&edges)?;
        for g in self.analysis.ablation_groups.iter().chain(&self.transfer.groups) {
            g.parse::<crate::analysis::AblationGroup>()?;
        }
        for g in &self.linear.groups {
            g.parse::<crate::features::FeatureGroup>()?;
        }
        if self.features.min_df == 0 {
            return Err(Error::Config("features.min_df must be at least 1".into()));
        }
        Ok(())
    }
}
