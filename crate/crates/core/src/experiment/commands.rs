//! Subcommand implementations. Each reads its inputs from the config and the
//! output directory, writes its artifacts plus a manifest, and returns the
//! JSON payload that is also written to `<command>.json`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{CorpusSource, LoadedConfig};
use super::manifest::{ManifestBuilder, OutputLock};
use crate::agreement::{
    controversial_pairs, krippendorff_alpha_nominal, mean_alpha, pearson, percentage_agreement, RatingMatrix,
    StatRecord,
};
use crate::analysis::{
    collect_errors, correlation_study, domain_transfer, feature_ablation, length_bias_report, write_scatter_csv,
    AblationGroup, FeatureSplit, LengthBiasReport, Prediction, TransferCell,
};
use crate::cnn::embeddings::{load_embeddings, EmbeddingTable};
use crate::cnn::CnnModel;
use crate::corpus::annotations::{aggregate_annotations, load_annotations, AnnotatedComment};
use crate::corpus::{
    corpus_stats, label_all, load_c3_csv, load_external_corpus, read_canonical_csv, split_train_test,
    write_canonical_csv, Label, LabeledComment,
};
use crate::error::{Error, Result};
use crate::features::tokenize::tokenize;
use crate::features::{write_feature_csv, FeatureConfig, FeatureExtractor, FeatureGroup, FeatureMatrix};
use crate::linear::logreg::{subchar_design, write_coefficients_csv};
use crate::linear::sgd::label_for_score;
use crate::linear::{self, evaluate_labels, train_logreg_standardized, LinearModel, Metrics};
use crate::synthetic::{synthetic_annotations, synthetic_corpus};

pub const CORPUS_FILE: &str = "corpus.csv";
pub const LINEAR_MODEL_FILE: &str = "linear_model.json";
pub const CNN_MODEL_FILE: &str = "cnn.json";

/// Report tables concatenated by `report`, in order, with their titles.
pub const REPORT_TABLES: [(&str, &str); 5] = [
    ("corpus_stats.csv", "Corpus statistics"),
    ("subchar_coefficients.csv", "Sub-characteristic logistic regression"),
    ("transfer.csv", "Domain transfer"),
    ("ablation.csv", "Feature ablation"),
    ("length_bias.csv", "Length bias of errors"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Ingest,
    Stats,
    Agreement,
    Features,
    TrainLinear,
    TrainCnn,
    Evaluate,
    Ablate,
    Transfer,
    LengthBias,
    Correlate,
    Report,
}

impl Command {
    pub const ALL: [Command; 12] = [
        Command::Ingest,
        Command::Stats,
        Command::Agreement,
        Command::Features,
        Command::TrainLinear,
        Command::TrainCnn,
        Command::Evaluate,
        Command::Ablate,
        Command::Transfer,
        Command::LengthBias,
        Command::Correlate,
        Command::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Stats => "stats",
            Command::Agreement => "agreement",
            Command::Features => "features",
            Command::TrainLinear => "train-linear",
            Command::TrainCnn => "train-cnn",
            Command::Evaluate => "evaluate",
            Command::Ablate => "ablate",
            Command::Transfer => "transfer",
            Command::LengthBias => "length-bias",
            Command::Correlate => "correlate",
            Command::Report => "report",
        }
    }

    /// File holding the command's JSON payload.
    pub fn payload_file(self) -> String {
        format!("{}.json", self.name().replace('-', "_"))
    }
}

impl std::str::FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown command `{s}`")))
    }
}

struct Ctx<'a> {
    cfg: &'a LoadedConfig,
    out: PathBuf,
    manifest: ManifestBuilder,
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let p = self.path(name);
        let f = File::create(&p).map_err(|e| Error::io(&p, e))?;
        self.manifest.output(&p);
        Ok(BufWriter::new(f))
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let mut w = self.create(name)?;
        w.write_all(text.as_bytes()).map_err(|e| Error::io(self.path(name), e))?;
        w.flush().map_err(|e| Error::io(self.path(name), e))
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let doc = json!({ "manifest": self.manifest.file_name(), "result": value });
        self.write_text(name, &(serde_json::to_string_pretty(&doc)? + "\n"))
    }

    fn input(&mut self, p: &Path) -> Result<()> {
        self.manifest.input(p)
    }

    fn existing(&self, name: &str) -> Option<PathBuf> {
        let p = self.path(name);
        p.exists().then_some(p)
    }

    fn corpus(&mut self) -> Result<Vec<LabeledComment>> {
        let p = self.existing(CORPUS_FILE).ok_or_else(|| {
            Error::Data(format!("{CORPUS_FILE} not found in {}; run `ingest` first", self.out.display()))
        })?;
        self.input(&p)?;
        let c = read_canonical_csv(&p)?;
        if c.is_empty() {
            return Err(Error::Data(format!("{} holds no comments", p.display())));
        }
        Ok(c)
    }

    fn split(&mut self) -> Result<(Vec<LabeledComment>, Vec<LabeledComment>)> {
        let corpus = self.corpus()?;
        let s = &self.cfg.config.split;
        self.manifest.seed("split", s.seed);
        split_train_test(&corpus, s.test_fraction, s.seed)
    }

    fn note_extractor(&mut self, fx: &FeatureExtractor) {
        for (g, why) in &fx.aux.disabled {
            self.manifest.note(&format!("disabled_group.{g}"), why.clone());
        }
    }

    fn feature_config(&mut self) -> Result<FeatureConfig> {
        let mut f = self.cfg.config.features.clone();
        if let Some(d) = &f.lexicon_dir {
            f.lexicon_dir = Some(self.cfg.resolve(d));
        }
        if let Some(d) = &f.dictionary {
            let p = self.cfg.resolve(d);
            self.input(&p)?;
            f.dictionary = Some(p);
        }
        Ok(f)
    }

    /// Per-annotator judgements from the configured source.
    fn annotations(&mut self) -> Result<Vec<AnnotatedComment>> {
        let d = &self.cfg.config.data;
        if let Some(p) = &d.annotations {
            let p = self.cfg.resolve(p);
            self.input(&p)?;
            load_annotations(&p, &d.annotation_mapping)
        } else if let Some(s) = &d.synthetic {
            self.manifest.seed("synthetic", s.seed);
            Ok(synthetic_annotations(s))
        } else {
            Err(Error::Data(
                "agreement statistics need per-annotator rows; set data.annotations".into(),
            ))
        }
    }
}

/// Run one subcommand under the output-directory lock.
pub fn run(command: Command, cfg: &LoadedConfig) -> Result<Value> {
    let out = cfg.output_dir();
    let _lock = OutputLock::acquire(&out)?;
    let mut ctx = Ctx {
        cfg,
        out: out.clone(),
        manifest: ManifestBuilder::new(command.name(), cfg.snapshot.clone(), cfg.source.clone()),
    };
    let result = match command {
        Command::Ingest => ingest(&mut ctx),
        Command::Stats => stats(&mut ctx),
        Command::Agreement => agreement(&mut ctx),
        Command::Features => features(&mut ctx),
        Command::TrainLinear => train_linear(&mut ctx),
        Command::TrainCnn => train_cnn(&mut ctx),
        Command::Evaluate => evaluate(&mut ctx),
        Command::Ablate => ablate(&mut ctx),
        Command::Transfer => transfer(&mut ctx),
        Command::LengthBias => length_bias(&mut ctx),
        Command::Correlate => correlate(&mut ctx),
        Command::Report => report(&mut ctx),
    }?;
    ctx.write_json(&command.payload_file(), &result)?;
    ctx.manifest.finish(&out)?;
    Ok(result)
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

fn opt4(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), f4)
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Data(format!("writing CSV: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 input"))
}

fn labels(c: &[LabeledComment]) -> Vec<Label> {
    c.iter().map(|c| c.label).collect()
}

fn ingest(ctx: &mut Ctx<'_>) -> Result<Value> {
    let d = &ctx.cfg.config.data;
    let (raw, source, row_errors) = if let Some(p) = &d.annotations {
        let p = ctx.cfg.resolve(p);
        ctx.input(&p)?;
        let ann = load_annotations(&p, &d.annotation_mapping)?;
        (aggregate_annotations(&ann, &d.agree_mapping)?, "annotations", Vec::new())
    } else if let Some(p) = &d.c3 {
        let p = ctx.cfg.resolve(p);
        ctx.input(&p)?;
        let r = load_c3_csv(&p, &d.mapping)?;
        (r.items, "c3", r.row_errors)
    } else if let Some(s) = &d.synthetic {
        ctx.manifest.seed("synthetic", s.seed);
        (synthetic_corpus(s), "synthetic", Vec::new())
    } else {
        return Err(Error::Config(
            "no data source: set data.c3, data.annotations or data.synthetic".into(),
        ));
    };
    if raw.is_empty() {
        return Err(Error::Data("data source holds no comments".into()));
    }
    let labeled = label_all(raw);
    let w = ctx.create(CORPUS_FILE)?;
    write_canonical_csv(w, &labeled)?;
    let n_pos = labeled.iter().filter(|c| c.label.is_positive()).count();
    Ok(json!({
        "source": source,
        "n_comments": labeled.len(),
        "n_constructive": n_pos,
        "n_row_errors": row_errors.len(),
        "row_errors": row_errors,
    }))
}

fn stats(ctx: &mut Ctx<'_>) -> Result<Value> {
    let corpus = ctx.corpus()?;
    let s = corpus_stats(&corpus)?;
    let mut rows = vec![
        vec!["constructive".into(), s.n_constructive.to_string()],
        vec!["non_constructive".into(), s.n_non_constructive.to_string()],
        vec!["no_consensus".into(), s.n_no_consensus.to_string()],
        vec!["total".into(), s.n_total.to_string()],
    ];
    for (c, n) in &s.subchar_presence {
        rows.push(vec![format!("subchar.{}", c.name()), n.to_string()]);
    }
    let text = csv_text(&["row", "count"], &rows)?;
    ctx.write_text(REPORT_TABLES[0].0, &text)?;
    Ok(serde_json::to_value(&s)?)
}

fn agreement(ctx: &mut Ctx<'_>) -> Result<Value> {
    let ann = ctx.annotations()?;
    let seed = ctx.cfg.config.analysis.pair_seed;
    ctx.manifest.seed("controversial_pairs", seed);
    let mapping = ctx.cfg.config.data.agree_mapping.clone();

    let overall = krippendorff_alpha_nominal(&RatingMatrix::from_annotations(&ann))?;
    let mut batches: BTreeMap<String, Vec<&AnnotatedComment>> = BTreeMap::new();
    for a in &ann {
        batches
            .entry(a.batch.clone().unwrap_or_else(|| "all".into()))
            .or_default()
            .push(a);
    }
    let matrices: BTreeMap<&String, RatingMatrix> = batches
        .iter()
        .map(|(b, cs)| (b, RatingMatrix::from_annotations(cs.iter().copied())))
        .collect();
    let mut per_batch = BTreeMap::new();
    for (b, m) in &matrices {
        match krippendorff_alpha_nominal(m) {
            Ok(a) => {
                per_batch.insert((*b).clone(), Some(a.record("alpha")));
            }
            Err(e) => {
                log::warn!("batch {b}: {e}");
                per_batch.insert((*b).clone(), None);
            }
        }
    }
    let (mean, n_batches) = mean_alpha(matrices.values())?;

    let pairs = controversial_pairs(&ann, &mapping, seed);
    let n_pairs = pairs.pairs.len();
    let pct = if n_pairs > 0 {
        Some(percentage_agreement(&pairs)?)
    } else {
        None
    };

    let agg = aggregate_annotations(&ann, &mapping)?;
    let with_agree: Vec<(f64, f64)> = agg
        .iter()
        .filter_map(|c| c.agree_fraction.map(|a| (c.constructive_fraction, a)))
        .collect();
    let agree_corr = (with_agree.len() >= 2)
        .then(|| {
            let (x, y): (Vec<f64>, Vec<f64>) = with_agree.iter().copied().unzip();
            pearson(&x, &y).map(|e| StatRecord::new("pearson", e, x.len(), agg.len() - x.len()))
        })
        .transpose()?;

    Ok(json!({
        "alpha_overall": overall.record("alpha"),
        "alpha_per_batch": per_batch,
        "alpha_batch_mean": StatRecord::new("mean_alpha", mean, n_batches, matrices.len() - n_batches),
        "controversial_pairs": n_pairs,
        "controversial_agreement": pct,
        "constructiveness_agree_corr": agree_corr,
    }))
}

fn features(ctx: &mut Ctx<'_>) -> Result<Value> {
    let (train, test) = ctx.split()?;
    let fc = ctx.feature_config()?;
    let fx = FeatureExtractor::fit(&train, &fc)?;
    ctx.note_extractor(&fx);
    let trv = fx.extract_all(&train)?;
    let tev = fx.extract_all(&test)?;
    write_feature_csv(ctx.create("features_train.csv")?, &fx, &train, &trv)?;
    write_feature_csv(ctx.create("features_test.csv")?, &fx, &test, &tev)?;
    Ok(json!({
        "n_train": train.len(),
        "n_test": test.len(),
        "active_groups": fx.active_groups(),
        "disabled_aux_groups": fx.aux.disabled,
        "vocabulary_size": fx.sparse_dim(),
        "dense_columns": fx.dense_header(),
    }))
}

fn linear_groups(ctx: &Ctx<'_>, fx: &FeatureExtractor) -> Result<Vec<FeatureGroup>> {
    let configured = &ctx.cfg.config.linear.groups;
    if configured.is_empty() {
        return Ok(fx
            .active_groups()
            .into_iter()
            .filter(|g| FeatureGroup::STANDARD.contains(g))
            .collect());
    }
    configured.iter().map(|g| g.parse()).collect()
}

fn train_linear(ctx: &mut Ctx<'_>) -> Result<Value> {
    let (train, _test) = ctx.split()?;
    let fc = ctx.feature_config()?;
    let tc = ctx.cfg.config.linear.train.clone();
    ctx.manifest.seed("linear", tc.seed);
    let fx = FeatureExtractor::fit(&train, &fc)?;
    ctx.note_extractor(&fx);
    let groups = linear_groups(ctx, &fx)?;
    let trv = fx.extract_all(&train)?;
    let x = FeatureMatrix::assemble(&trv, &groups, fx.sparse_dim(), &fx.config.aux)?;
    let y = labels(&train);
    let model = linear::train(&x, &y, &tc)?;
    let train_metrics = model.evaluate(&x, &y)?;
    ctx.write_text(LINEAR_MODEL_FILE, &model.to_json()?)?;
    let constant = (0..model.n_dense).filter(|&j| model.standardization.is_constant(j)).count();
    ctx.manifest.note("dense_standardization", "z-score on training rows; constant columns zeroed");
    ctx.manifest.note("sparse_standardization", "none");

    // Sub-characteristic regression runs on the whole corpus.
    let corpus = ctx.corpus()?;
    let standardization = if ctx.cfg.config.logreg.center {
        "z-score"
    } else {
        "divide by sample std"
    };
    ctx.manifest.note("logreg_standardization", standardization);
    let (xs, names) = subchar_design(&corpus);
    let has_subchars = xs.iter().any(|r| r.iter().any(|v| *v != 0.0));
    let logreg = if has_subchars {
        match train_logreg_standardized(&xs, &names, &labels(&corpus), &ctx.cfg.config.logreg) {
            Ok(r) => {
                write_coefficients_csv(ctx.create(REPORT_TABLES[1].0)?, &r)?;
                ctx.write_json("logreg.json", &r)?;
                json!({ "in_sample_f1": r.in_sample.f1, "separable": r.separable, "converged": r.converged })
            }
            Err(e) => {
                log::warn!("sub-characteristic regression skipped: {e}");
                json!({ "skipped": e.to_string() })
            }
        }
    } else {
        log::warn!("sub-characteristic regression skipped: corpus has no sub-characteristic columns");
        json!({ "skipped": "no sub-characteristic columns" })
    };
    Ok(json!({
        "n_train": train.len(),
        "groups": groups,
        "dim": x.dim(),
        "constant_dense_features": constant,
        "train_metrics": train_metrics,
        "logreg": logreg,
    }))
}

fn tokenized(c: &[LabeledComment]) -> Vec<Vec<String>> {
    c.par_iter().map(|c| tokenize(c.text()).word_tokens).collect()
}

fn train_cnn(ctx: &mut Ctx<'_>) -> Result<Value> {
    let (mut train, test) = ctx.split()?;
    let sec = ctx.cfg.config.cnn.clone();
    ctx.manifest.seed("cnn", sec.train.seed);
    let frozen = if sec.train.fine_tune_embeddings { "fine-tuned" } else { "frozen" };
    ctx.manifest.note("cnn_embeddings", frozen);
    if let Some(n) = sec.subsample {
        train.truncate(n);
    }
    let docs = tokenized(&train);
    let (table, source) = match &sec.embeddings {
        Some(p) => {
            let p = ctx.cfg.resolve(p);
            ctx.input(&p)?;
            let mut keep: HashSet<String> = HashSet::new();
            for d in docs.iter().chain(&tokenized(&test)) {
                for t in d {
                    keep.insert(t.clone());
                    keep.insert(t.to_lowercase());
                }
            }
            (load_embeddings(&p, sec.embedding_dim, Some(&keep))?, "file")
        }
        None => {
            let vocab: BTreeSet<&str> = docs.iter().flatten().map(String::as_str).collect();
            ctx.manifest.seed("random_embeddings", sec.train.seed);
            ctx.manifest.note("embeddings", "seeded random vectors; no embedding file configured");
            (EmbeddingTable::random(vocab, sec.random_dim, sec.train.seed)?, "random")
        }
    };
    let coverage = table.coverage(docs.iter().map(Vec::as_slice));
    let (model, log) = CnnModel::train(&docs, &labels(&train), table, &sec.train)?;
    let p = ctx.path(CNN_MODEL_FILE);
    model.save(&p)?;
    ctx.manifest.output(&p);
    let result = json!({
        "n_train": train.len(),
        "embedding_source": source,
        "embedding_dim": model.embeddings.dim(),
        "vocabulary_size": model.embeddings.len(),
        "coverage_type_rate": coverage.type_rate(),
        "coverage_token_rate": coverage.token_rate(),
        "epochs": log,
    });
    ctx.write_json("cnn_log.json", &result)?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PredictionRow {
    id: String,
    true_label: Label,
    predicted: Label,
    score: f64,
    token_length: usize,
}

fn predictions_file(model: &str) -> String {
    format!("predictions_{model}.csv")
}

fn write_predictions(ctx: &mut Ctx<'_>, model: &str, test: &[LabeledComment], scores: &[f64], pred: &[Label]) -> Result<()> {
    let name = predictions_file(model);
    let mut w = csv::Writer::from_writer(ctx.create(&name)?);
    for ((c, s), p) in test.iter().zip(scores).zip(pred) {
        w.serialize(PredictionRow {
            id: c.raw.id.clone(),
            true_label: c.label,
            predicted: *p,
            score: *s,
            token_length: c.token_length,
        })
        .map_err(|e| Error::csv(ctx.path(&name), e))?;
    }
    w.flush().map_err(|e| Error::io(ctx.path(&name), e))
}

fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize::<PredictionRow>()
        .map(|row| {
            let row = row.map_err(|e| Error::csv(path, e))?;
            Ok(Prediction {
                id: row.id,
                label: row.predicted,
                score: row.score,
            })
        })
        .collect()
}

fn evaluate(ctx: &mut Ctx<'_>) -> Result<Value> {
    let (train, test) = ctx.split()?;
    let gold = labels(&test);
    let mut out: BTreeMap<&str, Metrics> = BTreeMap::new();
    if let Some(p) = ctx.existing(LINEAR_MODEL_FILE) {
        ctx.input(&p)?;
        let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        let model = LinearModel::from_json(&text)?;
        let fc = ctx.feature_config()?;
        let fx = FeatureExtractor::fit(&train, &fc)?;
    ctx.note_extractor(&fx);
        let groups: Vec<FeatureGroup> = model.layout.iter().map(|s| s.group).collect();
        let tev = fx.extract_all(&test)?;
        let x = FeatureMatrix::assemble(&tev, &groups, fx.sparse_dim(), &fx.config.aux)?;
        if x.dim() != model.weights.len() || x.dense_names != model.dense_names {
            return Err(Error::Data(format!(
                "{LINEAR_MODEL_FILE} does not match the configured features; rerun train-linear"
            )));
        }
        let scores = model.scores(&x);
        let pred: Vec<Label> = scores.iter().map(|&s| label_for_score(s)).collect();
        out.insert("linear", evaluate_labels(&gold, &pred)?);
        write_predictions(ctx, "linear", &test, &scores, &pred)?;
    }
    if let Some(p) = ctx.existing(CNN_MODEL_FILE) {
        ctx.input(&p)?;
        let model = CnnModel::load(&p)?;
        let docs = tokenized(&test);
        let probs = model.predict_proba_all(&docs);
        let pred: Vec<Label> = probs
            .iter()
            .map(|&p| if p > 0.5 { Label::Constructive } else { Label::NonConstructive })
            .collect();
        out.insert("cnn", evaluate_labels(&gold, &pred)?);
        write_predictions(ctx, "cnn", &test, &probs, &pred)?;
    }
    if out.is_empty() {
        return Err(Error::Data("no trained model in the output directory; run train-linear or train-cnn".into()));
    }
    Ok(json!({ "n_test": test.len(), "models": out }))
}

fn ablate(ctx: &mut Ctx<'_>) -> Result<Value> {
    let (train, test) = ctx.split()?;
    let fc = ctx.feature_config()?;
    let tc = ctx.cfg.config.linear.train.clone();
    ctx.manifest.seed("linear", tc.seed);
    let cells: Vec<AblationGroup> = ctx
        .cfg
        .config
        .analysis
        .ablation_groups
        .iter()
        .map(|g| g.parse())
        .collect::<Result<_>>()?;
    let fx = FeatureExtractor::fit(&train, &fc)?;
    ctx.note_extractor(&fx);
    let trv = fx.extract_all(&train)?;
    let tev = fx.extract_all(&test)?;
    let (try_, tey) = (labels(&train), labels(&test));
    let split = FeatureSplit {
        extractor: &fx,
        train: &trv,
        train_labels: &try_,
        test: &tev,
        test_labels: &tey,
    };
    let result = feature_ablation(&split, &cells, &tc);
    let rows: Vec<Vec<String>> = result
        .iter()
        .map(|c| {
            let m = c.metrics.as_ref();
            vec![
                c.group.clone(),
                opt4(c.f1),
                opt4(m.map(|m| m.precision)),
                opt4(m.map(|m| m.recall)),
                c.skipped.clone().unwrap_or_else(|| "ok".into()),
            ]
        })
        .collect();
    let text = csv_text(&["group", "f1", "precision", "recall", "status"], &rows)?;
    ctx.write_text(REPORT_TABLES[3].0, &text)?;
    Ok(serde_json::to_value(&result)?)
}

fn load_source(ctx: &mut Ctx<'_>, s: &CorpusSource) -> Result<Option<Vec<LabeledComment>>> {
    let resolve = |p: &PathBuf| ctx.cfg.resolve(p);
    let files: Vec<PathBuf> = match (&s.positive, &s.negative, &s.path) {
        (Some(p), Some(n), _) => vec![resolve(p), resolve(n)],
        (None, None, Some(p)) => vec![resolve(p)],
        _ => {
            return Err(Error::Config(format!(
                "transfer corpus `{}` needs positive+negative files or a path",
                s.name
            )))
        }
    };
    if let Some(missing) = files.iter().find(|f| !f.exists()) {
        log::warn!("transfer corpus `{}`: {} not found", s.name, missing.display());
        return Ok(None);
    }
    for f in &files {
        ctx.input(f)?;
    }
    let c = if files.len() == 2 {
        load_external_corpus(&files[0], &files[1], &s.mapping)?
    } else {
        label_all(load_c3_csv(&files[0], &s.mapping)?.items)
    };
    Ok(Some(c))
}

fn transfer(ctx: &mut Ctx<'_>) -> Result<Value> {
    let tcfg = ctx.cfg.config.transfer.clone();
    let fc = ctx.feature_config()?;
    let lc = ctx.cfg.config.linear.train.clone();
    ctx.manifest.seed("linear", lc.seed);
    let cells: Vec<AblationGroup> = tcfg.groups.iter().map(|g| g.parse()).collect::<Result<_>>()?;
    let split = &ctx.cfg.config.split;
    let (fraction, seed) = (split.test_fraction, split.seed);

    let mut corpora: BTreeMap<String, Option<Vec<LabeledComment>>> = BTreeMap::new();
    let c3 = ctx.existing(CORPUS_FILE).is_some().then(|| ctx.corpus()).transpose()?;
    if c3.is_some() {
        ctx.manifest.seed("split", seed);
    }
    corpora.insert("c3".into(), c3);
    for s in &tcfg.corpora {
        let c = load_source(ctx, s)?;
        corpora.insert(s.name.clone(), c);
    }

    let mut rows = Vec::new();
    for pair in &tcfg.pairs {
        let (tr, te) = (&pair.train, &pair.test);
        let data = match (corpora.get(tr).cloned().flatten(), corpora.get(te).cloned().flatten()) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        };
        let Some((a, b)) = data else {
            rows.extend(cells.iter().map(|c| TransferCell::unavailable(tr, te, &c.to_string())));
            continue;
        };
        // A corpus is split when it plays both roles, and the ingested corpus
        // always contributes only its train or test side.
        let (train, test) = if tr == te {
            split_train_test(&a, fraction, seed)?
        } else {
            let train = if tr == "c3" { split_train_test(&a, fraction, seed)?.0 } else { a };
            let test = if te == "c3" { split_train_test(&b, fraction, seed)?.1 } else { b };
            (train, test)
        };
        match domain_transfer((tr, &train), (te, &test), &fc, &cells, &lc) {
            Ok(r) => rows.extend(r),
            Err(e) => {
                log::warn!("transfer {tr} -> {te}: {e}");
                rows.extend(cells.iter().map(|c| TransferCell {
                    train: tr.clone(),
                    test: te.clone(),
                    model: c.to_string(),
                    f1: None,
                    status: e.to_string(),
                }));
            }
        }
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|c| vec![c.train.clone(), c.test.clone(), c.model.clone(), opt4(c.f1), c.status.clone()])
        .collect();
    let text = csv_text(&["train", "test", "model", "f1", "status"], &table)?;
    ctx.write_text(REPORT_TABLES[2].0, &text)?;
    Ok(serde_json::to_value(&rows)?)
}

fn score_kind(model: &str) -> &'static str {
    if model == "cnn" {
        "constructive_probability"
    } else {
        "decision_value"
    }
}

fn length_bias(ctx: &mut Ctx<'_>) -> Result<Value> {
    let (_train, test) = ctx.split()?;
    let edges = ctx.cfg.config.analysis.edges();
    let mut reports: Vec<LengthBiasReport> = Vec::new();
    for model in ["linear", "cnn"] {
        let Some(p) = ctx.existing(&predictions_file(model)) else {
            continue;
        };
        ctx.input(&p)?;
        let preds = read_predictions(&p)?;
        let errors = collect_errors(&preds, &test)?;
        let pred_labels: Vec<Label> = preds.iter().map(|p| p.label).collect();
        let f1 = evaluate_labels(&labels(&test), &pred_labels)?.f1;
        let r = length_bias_report(model, score_kind(model), &errors, &edges, Some(f1))?;
        r.histogram.write_csv(ctx.create(&format!("histogram_{model}.csv"))?)?;
        reports.push(r);
    }
    if reports.is_empty() {
        return Err(Error::Data("no predictions in the output directory; run evaluate first".into()));
    }
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.model.clone(),
                opt4(r.test_f1),
                r.n_false_negative.to_string(),
                r.n_false_positive.to_string(),
                opt4(r.mean_fn_length),
                opt4(r.mean_fp_length),
                opt4(r.score_length_corr.value),
                opt4(r.abs_score_length_corr.value),
            ]
        })
        .collect();
    let text = csv_text(
        &[
            "model",
            "f1",
            "n_false_negative",
            "n_false_positive",
            "mean_fn_length",
            "mean_fp_length",
            "error_score_length_corr",
            "error_abs_score_length_corr",
        ],
        &rows,
    )?;
    ctx.write_text(REPORT_TABLES[4].0, &text)?;
    Ok(serde_json::to_value(&reports)?)
}

fn correlate(ctx: &mut Ctx<'_>) -> Result<Value> {
    let corpus = ctx.corpus()?;
    let mut r = correlation_study(&corpus, &ctx.cfg.config.analysis.toxicity_column)?;
    write_scatter_csv(ctx.create("scatter.csv")?, &r.scatter)?;
    r.scatter.clear();
    Ok(serde_json::to_value(&r)?)
}

fn report(ctx: &mut Ctx<'_>) -> Result<Value> {
    let mut text = String::new();
    let mut included = Vec::new();
    for (file, title) in REPORT_TABLES {
        text.push_str(&format!("== {title} ({file}) ==\n"));
        match ctx.existing(file) {
            Some(p) => {
                ctx.input(&p)?;
                let body = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                text.push_str(&body);
                included.push(file);
            }
            None => text.push_str("not computed\n"),
        }
        text.push('\n');
    }
    ctx.write_text("report.txt", &text)?;
    Ok(json!({ "tables": included, "text": text }))
}
