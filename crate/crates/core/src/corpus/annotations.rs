//! Per-annotator annotation exports.
//!
//! Each row is one annotator's judgement of one comment. Rows are grouped by
//! comment id (first-appearance order) and averaged into [`RawComment`]
//! fractions; the same grouping feeds reliability statistics, which need the
//! individual answers.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ColumnMapping, RawComment, RowError, SubCharacteristic, MAX_INVALID_ROW_SHARE};
use crate::error::{Error, Result};

/// An annotator's stance toward the views in a comment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreeAnswer {
    Yes,
    No,
    Partially,
    NoOpinion,
}

impl AgreeAnswer {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace(['_', '-'], " ").as_str() {
            "yes" => Some(AgreeAnswer::Yes),
            "no" => Some(AgreeAnswer::No),
            "partially" | "partial" => Some(AgreeAnswer::Partially),
            "no opinion" | "noopinion" => Some(AgreeAnswer::NoOpinion),
            _ => None,
        }
    }
}

/// Which side of the agree/disagree split an answer falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum AgreeSide {
    Agree,
    Disagree,
    Excluded,
}

/// Configurable mapping from agree answers to sides.
/// Default: yes → agree, no → disagree, everything else excluded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AgreeMapping {
    pub yes: AgreeSide,
    pub no: AgreeSide,
    pub partially: AgreeSide,
    pub no_opinion: AgreeSide,
}

impl Default for AgreeMapping {
    fn default() -> Self {
        AgreeMapping {
            yes: AgreeSide::Agree,
            no: AgreeSide::Disagree,
            partially: AgreeSide::Excluded,
            no_opinion: AgreeSide::Excluded,
        }
    }
}

impl AgreeMapping {
    pub fn side(&self, a: AgreeAnswer) -> AgreeSide {
        match a {
            AgreeAnswer::Yes => self.yes,
            AgreeAnswer::No => self.no,
            AgreeAnswer::Partially => self.partially,
            AgreeAnswer::NoOpinion => self.no_opinion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgement {
    pub annotator: Option<String>,
    pub constructive: bool,
    pub agree: Option<AgreeAnswer>,
    pub subchars: Vec<SubCharacteristic>,
}

/// All judgements for one comment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedComment {
    pub id: String,
    pub text: String,
    pub batch: Option<String>,
    pub judgements: Vec<Judgement>,
    pub aux_scores: BTreeMap<String, f64>,
}

impl AnnotatedComment {
    /// Average the judgements into a [`RawComment`].
    pub fn aggregate(&self, agree_mapping: &AgreeMapping) -> RawComment {
        let n = self.judgements.len();
        let nf = n as f64;
        let positives = self.judgements.iter().filter(|j| j.constructive).count();
        let mut raw = RawComment::new(self.id.clone(), self.text.clone(), positives as f64 / nf);
        raw.annotator_count = n as u32;
        for c in SubCharacteristic::ALL {
            let k = self.judgements.iter().filter(|j| j.subchars.contains(&c)).count();
            raw.subchar_fractions.insert(c, k as f64 / nf);
        }
        let (mut agree, mut disagree) = (0usize, 0usize);
        for a in self.judgements.iter().filter_map(|j| j.agree) {
            match agree_mapping.side(a) {
                AgreeSide::Agree => agree += 1,
                AgreeSide::Disagree => disagree += 1,
                AgreeSide::Excluded => {}
            }
        }
        if agree + disagree > 0 {
            raw.agree_fraction = Some(agree as f64 / (agree + disagree) as f64);
        }
        raw.aux_scores = self.aux_scores.clone();
        raw
    }
}

/// Names that may appear in characteristic list columns but are not one of the ten tracked characteristics.
const IGNORED_CHARACTERISTICS: &[&str] = &["no_con", "no_non_con", "con_other", "noncon_other", "other"];

fn parse_bool(cell: &str) -> Option<bool> {
    match cell.trim().to_ascii_lowercase().as_str() {
        "1" | "yes" | "true" | "y" | "constructive" => Some(true),
        "0" | "no" | "false" | "n" | "non_constructive" | "not constructive" => Some(false),
        _ => None,
    }
}

fn parse_characteristic_list(cell: &str) -> std::result::Result<Vec<SubCharacteristic>, String> {
    let mut out = Vec::new();
    for part in cell.split(['\n', ',', ';', '|']) {
        let name = part.trim().to_ascii_lowercase();
        if name.is_empty() || IGNORED_CHARACTERISTICS.contains(&name.as_str()) {
            continue;
        }
        let c = name
            .parse::<SubCharacteristic>()
            .map_err(|_| format!("unknown characteristic `{name}`"))?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(out)
}

/// Load a per-annotator export.
///
/// Logical fields: `id` and `constructive` are mandatory; `text`, `batch`,
/// `annotator`, `agree`, `subchar.<name>` (boolean column per characteristic),
/// `subchar_list.<tag>` (column holding a delimited list of characteristic
/// names) and `aux.<name>` are optional.
pub fn load_annotations(path: impl AsRef<Path>, mapping: &ColumnMapping) -> Result<Vec<AnnotatedComment>> {
    let path = path.as_ref();
    for m in ["id", "constructive"] {
        if mapping.get(m).is_none() {
            return Err(Error::Config(format!("mandatory field `{m}` is not mapped")));
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let col = |logical: &str| -> Result<Option<usize>> {
        match mapping.get(logical) {
            None => Ok(None),
            Some(h) => headers.iter().position(|x| x == h).map(Some).ok_or_else(|| {
                Error::Config(format!("{}: column `{h}` not found in header", path.display()))
            }),
        }
    };
    let id_col = col("id")?.expect("checked above");
    let cons_col = col("constructive")?.expect("checked above");
    let text_col = col("text")?;
    let batch_col = col("batch")?;
    let annot_col = col("annotator")?;
    let agree_col = col("agree")?;
    let mut bool_cols = Vec::new();
    let mut list_cols = Vec::new();
    let mut aux_cols = Vec::new();
    for logical in mapping.0.keys() {
        if let Some(name) = logical.strip_prefix("subchar.") {
            bool_cols.push((name.parse::<SubCharacteristic>()?, col(logical)?.unwrap()));
        } else if logical.starts_with("subchar_list.") {
            list_cols.push(col(logical)?.unwrap());
        } else if let Some(name) = logical.strip_prefix("aux.") {
            aux_cols.push((name.to_string(), col(logical)?.unwrap()));
        } else if !["id", "constructive", "text", "batch", "annotator", "agree"].contains(&logical.as_str()) {
            return Err(Error::Config(format!("unknown logical field `{logical}`")));
        }
    }

    let mut order: Vec<AnnotatedComment> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut row_errors = Vec::new();
    let mut total = 0usize;
    for (i, rec) in reader.records().enumerate() {
        total += 1;
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(i + 2);
        let cell = |c: usize| rec.get(c).unwrap_or("");
        let parsed = (|| -> std::result::Result<(Judgement, BTreeMap<String, f64>), String> {
            let constructive =
                parse_bool(cell(cons_col)).ok_or_else(|| format!("bad constructive answer `{}`", cell(cons_col)))?;
            let agree = match agree_col {
                Some(c) if !cell(c).trim().is_empty() => {
                    Some(AgreeAnswer::parse(cell(c)).ok_or_else(|| format!("bad agree answer `{}`", cell(c)))?)
                }
                _ => None,
            };
            let mut subchars = Vec::new();
            for (s, c) in &bool_cols {
                if parse_bool(cell(*c)).ok_or_else(|| format!("bad {s} flag `{}`", cell(*c)))? {
                    subchars.push(*s);
                }
            }
            for c in &list_cols {
                for s in parse_characteristic_list(cell(*c))? {
                    if !subchars.contains(&s) {
                        subchars.push(s);
                    }
                }
            }
            let mut aux = BTreeMap::new();
            for (name, c) in &aux_cols {
                let v: f64 = cell(*c)
                    .trim()
                    .parse()
                    .map_err(|_| format!("aux.{name}: cannot parse `{}`", cell(*c)))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(format!("aux.{name} = {v} outside [0, 1]"));
                }
                aux.insert(name.clone(), v);
            }
            Ok((
                Judgement {
                    annotator: annot_col.map(|c| cell(c).to_string()),
                    constructive,
                    agree,
                    subchars,
                },
                aux,
            ))
        })();
        match parsed {
            Ok((j, aux)) => {
                let id = cell(id_col).to_string();
                let slot = *index.entry(id.clone()).or_insert_with(|| {
                    order.push(AnnotatedComment {
                        id,
                        text: text_col.map(|c| cell(c).to_string()).unwrap_or_default(),
                        batch: batch_col.map(|c| cell(c).to_string()),
                        judgements: Vec::new(),
                        aux_scores: aux.clone(),
                    });
                    order.len() - 1
                });
                order[slot].judgements.push(j);
            }
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
    Ok(order)
}

/// Average per-annotator rows into comments. Comments without text are rejected.
pub fn aggregate_annotations(comments: &[AnnotatedComment], agree_mapping: &AgreeMapping) -> Result<Vec<RawComment>> {
    comments
        .iter()
        .map(|c| {
            let raw = c.aggregate(agree_mapping);
            raw.validate()
                .map_err(|e| Error::Data(format!("comment {}: {e}", c.id)))?;
            Ok(raw)
        })
        .collect()
}
