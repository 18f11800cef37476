//! Seeded synthetic comment corpora for examples, smoke tests and offline
//! demonstrations. The texture loosely imitates news comments: constructive
//! comments run longer and use more argumentative vocabulary, while the
//! toxicity-style scores are only weakly tied to the label.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::annotations::{AgreeAnswer, AgreeMapping, AnnotatedComment, Judgement};
use crate::corpus::{RawComment, SubCharacteristic};
use crate::features::aux::AuxColumns;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub n_comments: usize,
    pub min_annotators: u32,
    pub max_annotators: u32,
    /// Probability that a comment is constructive before annotation noise.
    pub constructive_share: f64,
    /// Probability that an annotator reports the latent label.
    pub annotator_accuracy: f64,
    pub with_aux_scores: bool,
    pub with_agree: bool,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_comments: 1000,
            min_annotators: 3,
            max_annotators: 7,
            constructive_share: 0.55,
            annotator_accuracy: 0.85,
            with_aux_scores: true,
            with_agree: true,
            seed: 42,
        }
    }
}

const FILLER: &[&str] = &[
    "the", "a", "this", "that", "it", "is", "was", "are", "to", "of", "and", "in", "for", "on", "with", "people",
    "government", "article", "policy", "time", "city", "year", "money", "tax", "plan", "school", "country",
    "vote", "party", "public", "system", "change", "work", "job", "story", "point", "there", "they", "we",
    "have", "has", "not", "just", "more", "some", "many", "would", "could", "think", "know", "see", "want",
];
const ARGUMENT: &[&str] = &[
    "because", "therefore", "however", "although", "evidence", "reason", "problem", "issue", "decision",
    "should", "may", "might", "suggests", "indicates", "consequently", "furthermore", "clearly", "arguably",
    "research", "data", "percent", "example", "solution", "propose", "consider", "cause", "lead",
];
const PERSONAL: &[&str] = &["I", "my", "we", "our", "worked", "lived", "remember", "experienced", "visited"];
const ENTITIES: &[&str] = &[
    "Ottawa", "Toronto", "Vancouver", "Canada", "Alberta", "Ontario", "Trudeau", "Harper", "Parliament",
    "Quebec", "Calgary", "Senate",
];
const HOSTILE: &[&str] = &[
    "idiot", "stupid", "pathetic", "clown", "joke", "lol", "whatever", "ridiculous", "morons", "garbage",
];
const SHOUT: &[&str] = &["WRONG", "NEVER", "LOL", "STOP", "SAD"];

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs[rng.random_range(0..xs.len())]
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

fn sentence<R: Rng>(rng: &mut R, constructive: bool) -> String {
    let (lo, hi) = if constructive { (8, 20) } else { (3, 10) };
    let n = rng.random_range(lo..=hi);
    let mut words: Vec<String> = Vec::with_capacity(n);
    for i in 0..n {
        let r: f64 = rng.random();
        let w = if constructive {
            if r < 0.18 {
                pick(rng, ARGUMENT).to_string()
            } else if r < 0.24 && i > 0 {
                pick(rng, ENTITIES).to_string()
            } else if r < 0.30 {
                pick(rng, PERSONAL).to_string()
            } else {
                pick(rng, FILLER).to_string()
            }
        } else if r < 0.15 {
            pick(rng, HOSTILE).to_string()
        } else if r < 0.20 {
            pick(rng, SHOUT).to_string()
        } else if r < 0.24 {
            pick(rng, ARGUMENT).to_string()
        } else {
            pick(rng, FILLER).to_string()
        };
        words.push(w);
    }
    words[0] = capitalize(&words[0]);
    let end = if constructive {
        if rng.random::<f64>() < 0.1 {
            "?"
        } else {
            "."
        }
    } else {
        ["!", "!!!", ".", "?"][rng.random_range(0..4)]
    };
    format!("{}{end}", words.join(" "))
}

fn comment_text<R: Rng>(rng: &mut R, constructive: bool) -> String {
    let n = if constructive {
        rng.random_range(2..=7)
    } else {
        rng.random_range(1..=3)
    };
    (0..n).map(|_| sentence(rng, constructive)).collect::<Vec<_>>().join(" ")
}

fn subchar_prob(c: SubCharacteristic, judged_constructive: bool) -> f64 {
    use SubCharacteristic::*;
    match (judged_constructive, c) {
        (true, Dialogue) => 0.55,
        (true, SpecificPoints) => 0.5,
        (true, Evidence) => 0.35,
        (true, Solution) => 0.3,
        (true, PersonalStory) => 0.2,
        (true, Sarcastic) => 0.08,
        (true, _) => 0.04,
        (false, Unsubstantial) => 0.6,
        (false, NonRelevant) => 0.3,
        (false, NoRespect) => 0.25,
        (false, Sarcastic) => 0.25,
        (false, Provocative) => 0.2,
        (false, _) => 0.05,
    }
}

fn aux_scores<R: Rng>(rng: &mut R, text: &str, constructive: bool) -> BTreeMap<String, f64> {
    let cols = AuxColumns::default();
    let hostile = text
        .split_whitespace()
        .filter(|w| HOSTILE.contains(&w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase().as_str()))
        .count() as f64;
    let mut out = BTreeMap::new();
    let mut put = |name: &str, v: f64| {
        out.insert(name.to_string(), v.clamp(0.0, 1.0));
    };
    for n in &cols.toxicity {
        let base: f64 = rng.random::<f64>().powi(2) * 0.6;
        put(n, base + 0.08 * hostile.min(4.0));
    }
    for n in &cols.aggressiveness {
        let base: f64 = rng.random::<f64>() * 0.5;
        put(n, base + 0.05 * hostile.min(4.0));
    }
    for n in &cols.content_quality {
        let base: f64 = rng.random::<f64>() * 0.5;
        put(n, base + if constructive { 0.0 } else { 0.3 });
    }
    out
}

/// Per-annotator judgements for a synthetic corpus.
pub fn synthetic_annotations(cfg: &SyntheticConfig) -> Vec<AnnotatedComment> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.n_comments);
    let lo = cfg.min_annotators.max(1);
    let hi = cfg.max_annotators.max(lo);
    for i in 0..cfg.n_comments {
        let latent = rng.random::<f64>() < cfg.constructive_share;
        let text = comment_text(&mut rng, latent);
        let k = rng.random_range(lo..=hi);
        let judgements = (0..k)
            .map(|a| {
                let constructive = if rng.random::<f64>() < cfg.annotator_accuracy {
                    latent
                } else {
                    !latent
                };
                let subchars = SubCharacteristic::ALL
                    .into_iter()
                    .filter(|&c| rng.random::<f64>() < subchar_prob(c, constructive))
                    .collect();
                let agree = cfg.with_agree.then(|| {
                    let r: f64 = rng.random();
                    let p_yes = if constructive { 0.55 } else { 0.15 };
                    if r < p_yes {
                        AgreeAnswer::Yes
                    } else if r < p_yes + 0.3 {
                        AgreeAnswer::No
                    } else if r < p_yes + 0.4 {
                        AgreeAnswer::Partially
                    } else {
                        AgreeAnswer::NoOpinion
                    }
                });
                Judgement {
                    annotator: Some(format!("w{}", (i + a as usize * 7) % 40)),
                    constructive,
                    agree,
                    subchars,
                }
            })
            .collect();
        let aux = if cfg.with_aux_scores {
            aux_scores(&mut rng, &text, latent)
        } else {
            BTreeMap::new()
        };
        out.push(AnnotatedComment {
            id: format!("s{:05}", i + 1),
            text,
            batch: Some(format!("b{}", i % 4)),
            judgements,
            aux_scores: aux,
        });
    }
    out
}

/// Aggregated synthetic corpus.
pub fn synthetic_corpus(cfg: &SyntheticConfig) -> Vec<RawComment> {
    let m = AgreeMapping::default();
    synthetic_annotations(cfg).iter().map(|a| a.aggregate(&m)).collect()
}
