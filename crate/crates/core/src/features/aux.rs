//! Precomputed toxicity-style score columns.
//!
//! These scores are ingested as data, never computed here. A group is enabled
//! only when every one of its columns is present for every comment; a group
//! with no columns at all is disabled corpus-wide, and anything in between is
//! a configuration error.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::FeatureGroup;
use crate::corpus::RawComment;
use crate::error::{Error, Result};

/// Score names feeding each aux group, in feature order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct AuxColumns {
    pub content_quality: Vec<String>,
    pub aggressiveness: Vec<String>,
    pub toxicity: Vec<String>,
}

impl Default for AuxColumns {
    fn default() -> Self {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        AuxColumns {
            content_quality: v(&["incoherent", "unsubstantial", "spam"]),
            aggressiveness: v(&["attack_on_author", "attack_on_commenter", "attack_on_publisher"]),
            toxicity: v(&[
                "severe_toxicity",
                "sexually_explicit",
                "toxicity",
                "identity_attack",
                "insult",
                "obscene",
                "threat",
                "inflammatory",
            ]),
        }
    }
}

impl AuxColumns {
    pub fn names(&self, group: FeatureGroup) -> &[String] {
        match group {
            FeatureGroup::ContentQuality => &self.content_quality,
            FeatureGroup::Aggressiveness => &self.aggressiveness,
            FeatureGroup::Toxicity => &self.toxicity,
            _ => &[],
        }
    }

    fn validate(&self) -> Result<()> {
        for g in FeatureGroup::AUX {
            let want = g.dense_dim().expect("aux groups are dense");
            if self.names(g).len() != want {
                return Err(Error::Config(format!(
                    "{} needs exactly {want} score columns, {} configured",
                    g.name(),
                    self.names(g).len()
                )));
            }
        }
        Ok(())
    }
}

/// Which aux groups a corpus supports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxLayout {
    pub columns: AuxColumns,
    pub enabled: Vec<FeatureGroup>,
    /// Disabled groups with the reason, for the run manifest.
    pub disabled: BTreeMap<String, String>,
}

impl AuxLayout {
    /// Decide corpus-wide which aux groups are usable.
    pub fn resolve<'a>(columns: &AuxColumns, corpus: impl IntoIterator<Item = &'a RawComment> + Clone) -> Result<Self> {
        columns.validate()?;
        let mut enabled = Vec::new();
        let mut disabled = BTreeMap::new();
        let n = corpus.clone().into_iter().count();
        for g in FeatureGroup::AUX {
            let names = columns.names(g);
            let mut full = 0usize;
            let mut absent = 0usize;
            for name in names {
                let present = corpus
                    .clone()
                    .into_iter()
                    .filter(|c| c.aux_scores.contains_key(name))
                    .count();
                if present == n {
                    full += 1;
                } else if present == 0 {
                    absent += 1;
                } else {
                    return Err(Error::Config(format!(
                        "score `{name}` ({}) present for {present} of {n} comments",
                        g.name()
                    )));
                }
            }
            if full == names.len() && n > 0 {
                enabled.push(g);
            } else if absent == names.len() || n == 0 {
                log::info!("{} disabled: no score columns", g.name());
                disabled.insert(g.name().to_string(), "score columns absent".to_string());
            } else {
                let missing: Vec<&str> = names
                    .iter()
                    .filter(|nm| corpus.clone().into_iter().all(|c| !c.aux_scores.contains_key(*nm)))
                    .map(String::as_str)
                    .collect();
                return Err(Error::Config(format!(
                    "{} partially present; missing {missing:?}",
                    g.name()
                )));
            }
        }
        Ok(AuxLayout {
            columns: columns.clone(),
            enabled,
            disabled,
        })
    }

    pub fn is_enabled(&self, g: FeatureGroup) -> bool {
        self.enabled.contains(&g)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuxScores {
    pub content_quality: Option<[f64; 3]>,
    pub aggressiveness: Option<[f64; 3]>,
    pub toxicity: Option<[f64; 8]>,
}

fn take<const N: usize>(c: &RawComment, names: &[String]) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    for (slot, name) in out.iter_mut().zip(names) {
        *slot = *c.aux_scores.get(name).ok_or_else(|| {
            Error::Config(format!("comment {} lacks score `{name}`", c.id))
        })?;
    }
    Ok(out)
}

/// Pass the configured scores through for every enabled group.
pub fn aux_score_features(layout: &AuxLayout, c: &RawComment) -> Result<AuxScores> {
    let cols = &layout.columns;
    Ok(AuxScores {
        content_quality: layout
            .is_enabled(FeatureGroup::ContentQuality)
            .then(|| take::<3>(c, &cols.content_quality))
            .transpose()?,
        aggressiveness: layout
            .is_enabled(FeatureGroup::Aggressiveness)
            .then(|| take::<3>(c, &cols.aggressiveness))
            .transpose()?,
        toxicity: layout
            .is_enabled(FeatureGroup::Toxicity)
            .then(|| take::<8>(c, &cols.toxicity))
            .transpose()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comment(scores: &[(&str, f64)]) -> RawComment {
        let mut c = RawComment::new("x", "text", 0.5);
        for (k, v) in scores {
            c.aux_scores.insert(k.to_string(), *v);
        }
        c
    }

    fn full_scores() -> Vec<(String, f64)> {
        let cols = AuxColumns::default();
        let mut v = Vec::new();
        for (i, n) in cols
            .content_quality
            .iter()
            .chain(&cols.aggressiveness)
            .chain(&cols.toxicity)
            .enumerate()
        {
            v.push((n.clone(), i as f64 / 20.0));
        }
        v
    }

    #[test]
    fn passthrough() {
        let s = full_scores();
        let refs: Vec<(&str, f64)> = s.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        let c = comment(&refs);
        let layout = AuxLayout::resolve(&AuxColumns::default(), [&c]).unwrap();
        assert_eq!(layout.enabled.len(), 3);
        let a = aux_score_features(&layout, &c).unwrap();
        assert_eq!(a.content_quality, Some([0.0, 0.05, 0.1]));
        assert_eq!(a.toxicity.unwrap()[7], 13.0 / 20.0);
    }

    #[test]
    fn absent_group_disabled() {
        let c = comment(&[("incoherent", 0.1), ("unsubstantial", 0.2), ("spam", 0.3)]);
        let layout = AuxLayout::resolve(&AuxColumns::default(), [&c]).unwrap();
        assert_eq!(layout.enabled, vec![FeatureGroup::ContentQuality]);
        assert!(layout.disabled.contains_key("toxicity"));
        let a = aux_score_features(&layout, &c).unwrap();
        assert!(a.toxicity.is_none());
    }

    #[test]
    fn partial_group_is_config_error() {
        let c = comment(&[("incoherent", 0.1), ("spam", 0.3)]);
        assert!(matches!(
            AuxLayout::resolve(&AuxColumns::default(), [&c]),
            Err(Error::Config(_))
        ));
        let a = comment(&[("incoherent", 0.1), ("unsubstantial", 0.2), ("spam", 0.3)]);
        let b = comment(&[]);
        assert!(matches!(
            AuxLayout::resolve(&AuxColumns::default(), [&a, &b]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn wrong_width_rejected() {
        let mut cols = AuxColumns::default();
        cols.toxicity.push("likely_to_reject".into());
        assert!(AuxLayout::resolve(&cols, std::iter::empty::<&RawComment>()).is_err());
    }
}
