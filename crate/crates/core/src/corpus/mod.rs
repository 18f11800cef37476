//! Loading, validation, aggregation and splitting of labeled comment corpora.
//!
//! The primary input is an aggregated comment CSV: one row per comment with
//! the fraction of annotators that judged it constructive, optional
//! per-characteristic fractions, an optional agreement fraction and any
//! number of precomputed toxicity-style score columns. Header names are not
//! fixed; a [`ColumnMapping`] ties logical fields to the file's headers.
//!
//! Per-annotator exports are handled by [`annotations`], which averages them
//! down to the same [`RawComment`] shape.

pub mod annotations;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::tokenize::word_token_count;

/// Aggregation threshold: a comment is constructive iff its score is strictly above this.
pub const CONSTRUCTIVE_THRESHOLD: f64 = 0.5;

/// Inclusive score band counted as "no clear consensus".
pub const NO_CONSENSUS_BAND: (f64, f64) = (0.4, 0.6);

/// Maximum share of invalid rows tolerated before a load is rejected.
pub const MAX_INVALID_ROW_SHARE: f64 = 0.01;

/// The ten crowd-annotated sub-characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubCharacteristic {
    Solution,
    SpecificPoints,
    Evidence,
    PersonalStory,
    Dialogue,
    NonRelevant,
    NoRespect,
    Unsubstantial,
    Sarcastic,
    Provocative,
}

impl SubCharacteristic {
    pub const ALL: [SubCharacteristic; 10] = [
        SubCharacteristic::Solution,
        SubCharacteristic::SpecificPoints,
        SubCharacteristic::Evidence,
        SubCharacteristic::PersonalStory,
        SubCharacteristic::Dialogue,
        SubCharacteristic::NonRelevant,
        SubCharacteristic::NoRespect,
        SubCharacteristic::Unsubstantial,
        SubCharacteristic::Sarcastic,
        SubCharacteristic::Provocative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SubCharacteristic::Solution => "solution",
            SubCharacteristic::SpecificPoints => "specific_points",
            SubCharacteristic::Evidence => "evidence",
            SubCharacteristic::PersonalStory => "personal_story",
            SubCharacteristic::Dialogue => "dialogue",
            SubCharacteristic::NonRelevant => "non_relevant",
            SubCharacteristic::NoRespect => "no_respect",
            SubCharacteristic::Unsubstantial => "unsubstantial",
            SubCharacteristic::Sarcastic => "sarcastic",
            SubCharacteristic::Provocative => "provocative",
        }
    }

    /// True for the five characteristics that indicate constructiveness.
    pub fn is_constructive(self) -> bool {
        matches!(
            self,
            SubCharacteristic::Solution
                | SubCharacteristic::SpecificPoints
                | SubCharacteristic::Evidence
                | SubCharacteristic::PersonalStory
                | SubCharacteristic::Dialogue
        )
    }
}

impl fmt::Display for SubCharacteristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SubCharacteristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SubCharacteristic::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sub-characteristic `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Constructive,
    NonConstructive,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Constructive
    }

    /// +1 for constructive, -1 otherwise.
    pub fn sign(self) -> f64 {
        if self.is_positive() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn as_f64(self) -> f64 {
        if self.is_positive() {
            1.0
        } else {
            0.0
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Constructive => "constructive",
            Label::NonConstructive => "non_constructive",
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "constructive" | "1" => Ok(Label::Constructive),
            "non_constructive" | "0" => Ok(Label::NonConstructive),
            other => Err(Error::Data(format!("unknown label `{other}`"))),
        }
    }
}

/// One comment as loaded from disk, before aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawComment {
    pub id: String,
    pub text: String,
    /// Zero when the source does not record how many annotators saw the comment.
    pub annotator_count: u32,
    pub constructive_fraction: f64,
    pub subchar_fractions: BTreeMap<SubCharacteristic, f64>,
    pub agree_fraction: Option<f64>,
    pub aux_scores: BTreeMap<String, f64>,
}

impl RawComment {
    /// Minimal comment with only text and constructive fraction.
    pub fn new(id: impl Into<String>, text: impl Into<String>, fraction: f64) -> Self {
        RawComment {
            id: id.into(),
            text: text.into(),
            annotator_count: 0,
            constructive_fraction: fraction,
            subchar_fractions: BTreeMap::new(),
            agree_fraction: None,
            aux_scores: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.text.trim().is_empty() {
            return Err("empty text".into());
        }
        check_fraction("constructive_fraction", self.constructive_fraction)?;
        for (c, v) in &self.subchar_fractions {
            check_fraction(c.name(), *v)?;
        }
        if let Some(a) = self.agree_fraction {
            check_fraction("agree_fraction", a)?;
        }
        for (name, v) in &self.aux_scores {
            check_fraction(name, *v)?;
        }
        Ok(())
    }

    /// Annotator count for a sub-characteristic: the fraction scaled by the
    /// number of annotators, or the bare fraction when that number is unknown.
    pub fn subchar_count(&self, c: SubCharacteristic) -> f64 {
        let f = self.subchar_fractions.get(&c).copied().unwrap_or(0.0);
        if self.annotator_count > 0 {
            (f * self.annotator_count as f64).round()
        } else {
            f
        }
    }
}

fn check_fraction(name: &str, v: f64) -> std::result::Result<(), String> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(format!("{name} = {v} outside [0, 1]"))
    }
}

/// Aggregated comment with its binary label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledComment {
    pub raw: RawComment,
    pub score: f64,
    pub label: Label,
    pub token_length: usize,
}

impl LabeledComment {
    pub fn from_raw(raw: RawComment) -> Self {
        let (score, label) = aggregate_label(raw.constructive_fraction);
        let token_length = word_token_count(&raw.text);
        LabeledComment {
            raw,
            score,
            label,
            token_length,
        }
    }

    pub fn id(&self) -> &str {
        &self.raw.id
    }

    pub fn text(&self) -> &str {
        &self.raw.text
    }
}

/// Score and label for an annotator fraction. Exactly 0.5 is non-constructive.
pub fn aggregate_label(fraction: f64) -> (f64, Label) {
    debug_assert!((0.0..=1.0).contains(&fraction), "fraction {fraction} out of range");
    let label = if fraction > CONSTRUCTIVE_THRESHOLD {
        Label::Constructive
    } else {
        Label::NonConstructive
    };
    (fraction, label)
}

pub fn label_all(raw: Vec<RawComment>) -> Vec<LabeledComment> {
    raw.into_iter().map(LabeledComment::from_raw).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_total: usize,
    pub n_constructive: usize,
    pub n_non_constructive: usize,
    pub n_no_consensus: usize,
    /// Comments where at least one annotator marked the characteristic.
    pub subchar_presence: BTreeMap<SubCharacteristic, usize>,
}

pub fn corpus_stats(comments: &[LabeledComment]) -> Result<CorpusStats> {
    if comments.is_empty() {
        return Err(Error::Usage("corpus_stats on an empty corpus".into()));
    }
    let n_constructive = comments.iter().filter(|c| c.label.is_positive()).count();
    let (lo, hi) = NO_CONSENSUS_BAND;
    let n_no_consensus = comments
        .iter()
        .filter(|c| c.score >= lo && c.score <= hi)
        .count();
    let mut subchar_presence = BTreeMap::new();
    for c in SubCharacteristic::ALL {
        let n = comments
            .iter()
            .filter(|x| x.raw.subchar_fractions.get(&c).is_some_and(|f| *f > 0.0))
            .count();
        subchar_presence.insert(c, n);
    }
    Ok(CorpusStats {
        n_total: comments.len(),
        n_constructive,
        n_non_constructive: comments.len() - n_constructive,
        n_no_consensus,
        subchar_presence,
    })
}

/// Seeded shuffle into train/test. Train gets `floor(n * (1 - test_fraction))` items.
pub fn split_train_test<T: Clone>(items: &[T], test_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Usage(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // the epsilon guards products like 10 * 0.7 = 6.999...
    let n_train = ((items.len() as f64) * (1.0 - test_fraction) + 1e-9).floor() as usize;
    let train = order[..n_train].iter().map(|&i| items[i].clone()).collect();
    let test = order[n_train..].iter().map(|&i| items[i].clone()).collect();
    Ok((train, test))
}

/// Logical field name → CSV header.
///
/// Recognised logical names: `id`, `text`, `constructive_fraction`,
/// `annotator_count`, `agree_fraction`, `subchar.<characteristic>` and
/// `aux.<score name>`. Columns not named in the mapping are ignored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(transparent)]
pub struct ColumnMapping(pub BTreeMap<String, String>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Id,
    Text,
    Fraction,
    AnnotatorCount,
    Agree,
    Sub(SubCharacteristic),
    Aux,
}

impl ColumnMapping {
    pub fn new<K: Into<String>, V: Into<String>>(pairs: impl IntoIterator<Item = (K, V)>) -> Self {
        ColumnMapping(pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }

    /// Mapping that reads the canonical export written by [`write_canonical_csv`].
    pub fn canonical(headers: &[String]) -> Self {
        let mut m = BTreeMap::new();
        for h in headers {
            let logical = match h.as_str() {
                "id" | "text" | "annotator_count" | "agree_fraction" => h.clone(),
                "score" => "constructive_fraction".to_string(),
                "label" => continue,
                other if other.starts_with("aux.") => other.to_string(),
                other if other.parse::<SubCharacteristic>().is_ok() => format!("subchar.{other}"),
                other => format!("aux.{other}"),
            };
            m.insert(logical, h.clone());
        }
        ColumnMapping(m)
    }

    pub fn get(&self, logical: &str) -> Option<&str> {
        self.0.get(logical).map(String::as_str)
    }

    fn classify(logical: &str) -> Result<Field> {
        Ok(match logical {
            "id" => Field::Id,
            "text" => Field::Text,
            "constructive_fraction" => Field::Fraction,
            "annotator_count" => Field::AnnotatorCount,
            "agree_fraction" => Field::Agree,
            other => {
                if let Some(name) = other.strip_prefix("subchar.") {
                    Field::Sub(name.parse()?)
                } else if let Some(name) = other.strip_prefix("aux.") {
                    if name.is_empty() {
                        return Err(Error::Config("empty aux score name".into()));
                    }
                    Field::Aux
                } else {
                    return Err(Error::Config(format!("unknown logical field `{other}`")));
                }
            }
        })
    }

    /// Names of aux scores this mapping provides.
    pub fn aux_names(&self) -> Vec<String> {
        self.0
            .keys()
            .filter_map(|k| k.strip_prefix("aux.").map(str::to_string))
            .collect()
    }
}

/// A row rejected during loading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based line in the file (the header is line 1).
    pub line: usize,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Successful load: the valid comments plus any tolerated row errors.
#[derive(Debug, Clone)]
pub struct LoadReport<T> {
    pub items: Vec<T>,
    pub row_errors: Vec<RowError>,
}

struct ResolvedColumn {
    index: usize,
    logical: String,
    field: Field,
}

fn resolve_columns(
    path: &Path,
    headers: &csv::StringRecord,
    mapping: &ColumnMapping,
    mandatory: &[&str],
) -> Result<Vec<ResolvedColumn>> {
    for m in mandatory {
        if mapping.get(m).is_none() {
            return Err(Error::Config(format!("mandatory field `{m}` is not mapped")));
        }
    }
    let mut cols = Vec::new();
    for (logical, header) in &mapping.0 {
        let field = ColumnMapping::classify(logical)?;
        let index = headers.iter().position(|h| h == header).ok_or_else(|| {
            Error::Config(format!(
                "{}: column `{header}` (mapped from `{logical}`) not found in header",
                path.display()
            ))
        })?;
        cols.push(ResolvedColumn {
            index,
            logical: logical.clone(),
            field,
        });
    }
    Ok(cols)
}

fn parse_fraction(raw: &str, what: &str) -> std::result::Result<f64, String> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| format!("{what}: cannot parse `{raw}` as a number"))
}

fn build_raw(
    record: &csv::StringRecord,
    cols: &[ResolvedColumn],
    row_number: usize,
) -> std::result::Result<RawComment, String> {
    let mut c = RawComment::new(format!("r{row_number}"), String::new(), f64::NAN);
    for col in cols {
        let cell = record.get(col.index).unwrap_or("");
        match col.field {
            Field::Id => c.id = cell.to_string(),
            Field::Text => c.text = cell.to_string(),
            Field::Fraction => c.constructive_fraction = parse_fraction(cell, &col.logical)?,
            Field::AnnotatorCount => {
                c.annotator_count = if cell.trim().is_empty() {
                    0
                } else {
                    cell.trim()
                        .parse()
                        .map_err(|_| format!("annotator_count: cannot parse `{cell}`"))?
                }
            }
            Field::Agree => {
                if !cell.trim().is_empty() {
                    c.agree_fraction = Some(parse_fraction(cell, &col.logical)?);
                }
            }
            Field::Sub(s) => {
                if !cell.trim().is_empty() {
                    c.subchar_fractions.insert(s, parse_fraction(cell, &col.logical)?);
                }
            }
            Field::Aux => {
                let name = col.logical.trim_start_matches("aux.").to_string();
                if cell.trim().is_empty() {
                    return Err(format!("{}: missing value", col.logical));
                }
                c.aux_scores.insert(name, parse_fraction(cell, &col.logical)?);
            }
        }
    }
    if c.constructive_fraction.is_nan() && cols.iter().any(|c| c.field == Field::Fraction) {
        return Err("constructive_fraction missing".into());
    }
    Ok(c)
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                _ => unreachable!(),
            },
            _ => Error::csv(path, e),
        })
}

fn read_rows(
    path: &Path,
    mapping: &ColumnMapping,
    mandatory: &[&str],
    require_fraction: bool,
) -> Result<LoadReport<RawComment>> {
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let cols = resolve_columns(path, &headers, mapping, mandatory)?;
    let mut items = Vec::new();
    let mut row_errors = Vec::new();
    let mut total = 0usize;
    for (i, rec) in reader.records().enumerate() {
        total += 1;
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(i + 2);
        let mut built = build_raw(&rec, &cols, i + 1);
        if let Ok(c) = &mut built {
            if !require_fraction {
                c.constructive_fraction = 0.0;
            }
        }
        match built.and_then(|c| c.validate().map(|_| c)) {
            Ok(c) => items.push(c),
            Err(message) => row_errors.push(RowError { line, message }),
        }
    }
    if !row_errors.is_empty() && row_errors.len() as f64 > MAX_INVALID_ROW_SHARE * total as f64 {
        return Err(Error::TooManyInvalidRows {
            path: path.to_path_buf(),
            invalid: row_errors.len(),
            total,
            first: row_errors[0].to_string(),
            rows: row_errors,
        });
    }
    for e in &row_errors {
        log::warn!("{}: skipped {e}", path.display());
    }
    Ok(LoadReport { items, row_errors })
}

/// Load an aggregated comment CSV.
///
/// `id` may be left unmapped, in which case rows are numbered `r1`, `r2`, ...
pub fn load_c3_csv(path: impl AsRef<Path>, mapping: &ColumnMapping) -> Result<LoadReport<RawComment>> {
    read_rows(path.as_ref(), mapping, &["text", "constructive_fraction"], true)
}

fn load_single_class(path: &Path, mapping: &ColumnMapping, label: Label) -> Result<Vec<LabeledComment>> {
    let mut mapping = mapping.clone();
    mapping.0.remove("constructive_fraction");
    let report = read_rows(path, &mapping, &["text"], false)?;
    if report.items.is_empty() {
        return Err(Error::Data(format!(
            "{}: no comments; a binary corpus needs both classes",
            path.display()
        )));
    }
    let fraction = label.as_f64();
    Ok(report
        .items
        .into_iter()
        .map(|mut raw| {
            raw.constructive_fraction = fraction;
            LabeledComment::from_raw(raw)
        })
        .collect())
}

/// Build a labeled corpus from one file of positives and one of negatives.
pub fn load_external_corpus(
    pos_path: impl AsRef<Path>,
    neg_path: impl AsRef<Path>,
    mapping: &ColumnMapping,
) -> Result<Vec<LabeledComment>> {
    let mut out = load_single_class(pos_path.as_ref(), mapping, Label::Constructive)?;
    out.extend(load_single_class(neg_path.as_ref(), mapping, Label::NonConstructive)?);
    Ok(out)
}

/// Write the canonical export:
/// `id,text,score,label,annotator_count,agree_fraction,<subchars...>,aux.<name>...`.
/// The prefix keeps aux scores apart from sub-characteristics of the same name.
pub fn write_canonical_csv<W: std::io::Write>(writer: W, comments: &[LabeledComment]) -> Result<()> {
    let aux: std::collections::BTreeSet<&str> = comments
        .iter()
        .flat_map(|c| c.raw.aux_scores.keys().map(String::as_str))
        .collect();
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ["id", "text", "score", "label", "annotator_count", "agree_fraction"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(SubCharacteristic::ALL.iter().map(|c| c.name().to_string()));
    header.extend(aux.iter().map(|s| format!("aux.{s}")));
    let io_err = |e: csv::Error| Error::Data(format!("writing canonical CSV: {e}"));
    w.write_record(&header).map_err(io_err)?;
    for c in comments {
        let mut row = vec![
            c.raw.id.clone(),
            c.raw.text.clone(),
            fmt_float(c.score),
            c.label.name().to_string(),
            c.raw.annotator_count.to_string(),
            c.raw.agree_fraction.map(fmt_float).unwrap_or_default(),
        ];
        for s in SubCharacteristic::ALL {
            row.push(c.raw.subchar_fractions.get(&s).map(|v| fmt_float(*v)).unwrap_or_default());
        }
        for a in &aux {
            row.push(c.raw.aux_scores.get(*a).map(|v| fmt_float(*v)).unwrap_or_default());
        }
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Data(format!("writing canonical CSV: {e}")))?;
    Ok(())
}

/// Shortest representation that parses back to the same `f64`.
fn fmt_float(v: f64) -> String {
    format!("{v:?}")
}

/// Read a canonical export back. The stored label must agree with the score.
pub fn read_canonical_csv(path: impl AsRef<Path>) -> Result<Vec<LabeledComment>> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| Error::Config(format!("{}: not a canonical export (no label column)", path.display())))?;
    let labels: Vec<Label> = reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| Error::csv(path, e))?;
            r.get(label_idx).unwrap_or("").parse()
        })
        .collect::<Result<_>>()?;
    let mapping = ColumnMapping::canonical(&headers);
    let report = load_c3_csv(path, &mapping)?;
    if !report.row_errors.is_empty() {
        return Err(Error::Data(format!(
            "{}: canonical export has invalid rows: {}",
            path.display(),
            report.row_errors[0]
        )));
    }
    let comments = label_all(report.items);
    for (c, l) in comments.iter().zip(&labels) {
        if c.label != *l {
            return Err(Error::Data(format!(
                "{}: comment {} has label {} but score {}",
                path.display(),
                c.raw.id,
                l.name(),
                c.score
            )));
        }
    }
    Ok(comments)
}
