//! Acceptance suite: one status line per criterion.
//!
//! Data-dependent criteria read corpora from environment variables:
//!
//! | variable | content |
//! |---|---|
//! | `C3_PATH` | aggregated C3 CSV |
//! | `C3_MAPPING` | JSON column mapping for `C3_PATH` (default: `comment_text`, `constructive`) |
//! | `GLOVE_PATH` | 300-d embeddings; with `C3_CNN_FULL=1` runs the full-size CNN |
//! | `GLOVE50_PATH` | 50-d embeddings for the CI-scale CNN (random vectors otherwise) |
//! | `SOCC_A_PATH`, `SOCC_A_MAPPING` | aggregated SOCC-A CSV and its mapping |
//! | `NYT_PATH`, `YNACC_PATH`, `EXTERNAL_MAPPING` | positive / negative comment files (default mapping `text`) |
//! | `C3_REQUIRE=1` | treat missing data as failure |

mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use constructive::agreement::{krippendorff_alpha_nominal, pearson, Estimate, RatingMatrix};
use constructive::analysis::{
    collect_errors, correlation_study, domain_transfer, feature_ablation, length_bias_report, AblationGroup,
    FeatureSplit, LengthBiasReport, Prediction,
};
use constructive::cnn::net::{self, CnnParams, CnnShape, Input};
use constructive::cnn::{load_embeddings, CnnModel, CnnTrainConfig, EmbeddingTable};
use constructive::corpus::{
    corpus_stats, label_all, load_c3_csv, load_external_corpus, split_train_test, ColumnMapping, Label,
    LabeledComment, SubCharacteristic,
};
use constructive::experiment::{self, Command, LoadedConfig};
use constructive::features::ngram::NgramVocabulary;
use constructive::features::text::{smog_from_counts, smog_readability};
use constructive::features::tokenize::tokenize;
use constructive::features::{FeatureConfig, FeatureExtractor, FeatureGroup, FeatureMatrix};
use constructive::linear::logreg::subchar_design;
use constructive::linear::sgd::{label_for_score, objective, objective_gradient};
use constructive::linear::{self, train_logreg_standardized, LogRegConfig, Loss, TrainConfig};
use constructive::synthetic::{synthetic_corpus, SyntheticConfig};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Status {
    Pass,
    Fail,
    Unavailable,
    OutOfScope,
    Info,
}

impl Status {
    fn tag(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Unavailable => "UNAVAILABLE",
            Status::OutOfScope => "OUT OF SCOPE",
            Status::Info => "INFO",
        }
    }
}

struct Outcome {
    status: Status,
    detail: String,
}

fn verdict(ok: bool, detail: String) -> Outcome {
    Outcome {
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn unavailable(what: &str) -> Outcome {
    Outcome {
        status: Status::Unavailable,
        detail: format!("data unavailable: {what}"),
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol + 1e-12
}

fn env_path(name: &str) -> Option<PathBuf> {
    std::env::var_os(name).map(PathBuf::from).filter(|p| p.exists())
}

fn mapping_from_env(var: &str, default: &[(&str, &str)]) -> ColumnMapping {
    match env_path(var) {
        Some(p) => {
            let text = std::fs::read_to_string(&p).expect("mapping file readable");
            serde_json::from_str(&text).expect("mapping file is a JSON object")
        }
        None => ColumnMapping::new(default.iter().copied()),
    }
}

struct C3 {
    corpus: Vec<LabeledComment>,
    mapping: ColumnMapping,
}

fn load_c3() -> Option<C3> {
    let path = env_path("C3_PATH")?;
    let mapping = mapping_from_env("C3_MAPPING", &[("text", "comment_text"), ("constructive_fraction", "constructive")]);
    let report = load_c3_csv(&path, &mapping).expect("C3 CSV loads");
    Some(C3 {
        corpus: label_all(report.items),
        mapping,
    })
}

fn c1(c3: &C3) -> Outcome {
    let s = corpus_stats(&c3.corpus).unwrap();
    verdict(
        s.n_constructive == 6516 && s.n_non_constructive == 5484 && s.n_no_consensus == 1238,
        format!(
            "constructive {} (6516), non-constructive {} (5484), score in [0.4,0.6] {} (1238)",
            s.n_constructive, s.n_non_constructive, s.n_no_consensus
        ),
    )
}

fn c2(c3: &C3) -> Outcome {
    let len: Vec<f64> = c3.corpus.iter().map(|c| c.token_length as f64).collect();
    let lab: Vec<f64> = c3.corpus.iter().map(|c| c.label.as_f64()).collect();
    let r = pearson(&len, &lab).unwrap().value().unwrap_or(f64::NAN);
    verdict(within(r, 0.65, 0.05), format!("pearson(length, label) = {r:.4} (0.65 ± 0.05)"))
}

fn c3_toxicity(c3: &C3) -> Outcome {
    if !c3.mapping.aux_names().iter().any(|n| n == "toxicity") {
        return unavailable("no aux.toxicity column mapped");
    }
    let r = correlation_study(&c3.corpus, "toxicity").unwrap();
    let get = |name: &str| {
        r.toxicity
            .iter()
            .find(|s| s.statistic == name)
            .and_then(|s| s.value)
            .unwrap_or(f64::NAN)
    };
    let (p, s, k) = (get("pearson"), get("spearman"), get("kendall_tau_b"));
    verdict(
        within(p, -0.02, 0.05) && within(s, 0.04, 0.05) && within(k, -0.04, 0.05),
        format!("pearson {p:.4} (-0.02), spearman {s:.4} (0.04), kendall {k:.4} (-0.04), tol 0.05"),
    )
}

fn c4(c3: &C3) -> Outcome {
    if c3.mapping.get("agree_fraction").is_none() {
        return unavailable("no agree_fraction column mapped");
    }
    let r = correlation_study(&c3.corpus, "toxicity").unwrap();
    match r.agree.and_then(|a| a.value) {
        Some(v) => verdict(within(v, 0.56, 0.05), format!("pearson(score, agree) = {v:.4} (0.56 ± 0.05)")),
        None => unavailable("agree column empty"),
    }
}

fn c5(c3: &C3) -> Outcome {
    if !SubCharacteristic::ALL
        .iter()
        .all(|s| c3.mapping.get(&format!("subchar.{}", s.name())).is_some())
    {
        return unavailable("sub-characteristic columns not mapped");
    }
    let (x, names) = subchar_design(&c3.corpus);
    let y: Vec<Label> = c3.corpus.iter().map(|c| c.label).collect();
    let r = train_logreg_standardized(&x, &names, &y, &LogRegConfig::default()).unwrap();
    let coef = |n: &str| r.coefficient(n).unwrap();
    let signs = SubCharacteristic::ALL
        .iter()
        .all(|s| (coef(s.name()) > 0.0) == s.is_constructive());
    let max_pos = SubCharacteristic::ALL
        .iter()
        .max_by(|a, b| coef(a.name()).total_cmp(&coef(b.name())))
        .unwrap();
    let min_neg = SubCharacteristic::ALL
        .iter()
        .min_by(|a, b| coef(a.name()).total_cmp(&coef(b.name())))
        .unwrap();
    let (d, u) = (coef("dialogue"), coef("unsubstantial"));
    verdict(
        within(r.in_sample.f1, 0.87, 0.03)
            && signs
            && *max_pos == SubCharacteristic::Dialogue
            && *min_neg == SubCharacteristic::Unsubstantial
            && within(d, 0.77, 0.10)
            && within(u, -1.17, 0.10),
        format!(
            "F1 {:.4} (0.87), signs {}, largest {}, smallest {}, dialogue {d:.4} (0.77), unsubstantial {u:.4} (-1.17)",
            r.in_sample.f1,
            if signs { "ok" } else { "wrong" },
            max_pos.name(),
            min_neg.name()
        ),
    )
}

/// Linear model trained on the 80/20 split of a corpus with every available group.
struct LinearRun {
    train: Vec<LabeledComment>,
    test: Vec<LabeledComment>,
    report: LengthBiasReport,
}

fn linear_length_bias(corpus: &[LabeledComment], cfg: &TrainConfig) -> LinearRun {
    let (train, test) = split_train_test(corpus, 0.2, 42).unwrap();
    let fx = FeatureExtractor::fit(&train, &FeatureConfig::default()).unwrap();
    let groups = fx.active_groups();
    let aux = &fx.config.aux;
    let xtr = FeatureMatrix::assemble(&fx.extract_all(&train).unwrap(), &groups, fx.sparse_dim(), aux).unwrap();
    let xte = FeatureMatrix::assemble(&fx.extract_all(&test).unwrap(), &groups, fx.sparse_dim(), aux).unwrap();
    let ytr: Vec<Label> = train.iter().map(|c| c.label).collect();
    let m = linear::train(&xtr, &ytr, cfg).unwrap();
    let preds: Vec<Prediction> = test
        .iter()
        .zip(m.scores(&xte))
        .map(|(c, s)| Prediction {
            id: c.raw.id.clone(),
            label: label_for_score(s),
            score: s,
        })
        .collect();
    let gold: Vec<Label> = test.iter().map(|c| c.label).collect();
    let pl: Vec<Label> = preds.iter().map(|p| p.label).collect();
    let f1 = linear::evaluate_labels(&gold, &pl).unwrap().f1;
    let errors = collect_errors(&preds, &test).unwrap();
    let edges = constructive::analysis::DEFAULT_BUCKET_EDGES;
    let report = length_bias_report("linear", "decision_value", &errors, &edges, Some(f1)).unwrap();
    LinearRun { train, test, report }
}

fn c6(c3: &C3) -> Outcome {
    let (train, test) = split_train_test(&c3.corpus, 0.2, 42).unwrap();
    let fx = FeatureExtractor::fit(&train, &FeatureConfig::default()).unwrap();
    let (trv, tev) = (fx.extract_all(&train).unwrap(), fx.extract_all(&test).unwrap());
    let try_: Vec<Label> = train.iter().map(|c| c.label).collect();
    let tey: Vec<Label> = test.iter().map(|c| c.label).collect();
    let split = FeatureSplit {
        extractor: &fx,
        train: &trv,
        train_labels: &try_,
        test: &tev,
        test_labels: &tey,
    };
    use FeatureGroup::*;
    let cells = [
        AblationGroup::All,
        AblationGroup::Only(Length),
        AblationGroup::Only(TextQuality),
        AblationGroup::Only(Toxicity),
        AblationGroup::Only(Aggressiveness),
    ];
    let r = feature_ablation(&split, &cells, &TrainConfig::default());
    let f = |i: usize| r[i].f1;
    let (Some(all), Some(len), Some(tq)) = (f(0), f(1), f(2)) else {
        return verdict(false, "a text-derived cell failed to train".into());
    };
    let (Some(tox), Some(agg)) = (f(3), f(4)) else {
        return unavailable("toxicity / aggressiveness columns not mapped");
    };
    let order = len > tox && len > agg && tq > tox && tq > agg;
    verdict(
        within(all, 0.91, 0.03) && within(len, 0.93, 0.03) && within(tox, 0.67, 0.05) && order,
        format!(
            "all {all:.4} (0.91), length {len:.4} (0.93), toxicity {tox:.4} (0.67), text quality {tq:.4}, aggressiveness {agg:.4}, ordering {}",
            if order { "ok" } else { "violated" }
        ),
    )
}

fn c7(run: &LinearRun) -> Outcome {
    let r = &run.report;
    let (Some(fnl), Some(fpl)) = (r.mean_fn_length, r.mean_fp_length) else {
        return verdict(false, "no false positives or no false negatives".into());
    };
    let raw = r.score_length_corr.value.unwrap_or(f64::NAN);
    let abs = r.abs_score_length_corr.value.unwrap_or(f64::NAN);
    // Sign convention for false-negative scores is ambiguous; both forms are reported.
    let corr_ok = within(raw, 0.75, 0.10) || within(abs, 0.75, 0.10);
    verdict(
        fnl < fpl && corr_ok,
        format!(
            "mean FN length {fnl:.1} < mean FP length {fpl:.1}: {}; error corr raw {raw:.4} / |score| {abs:.4} (0.75 ± 0.10)",
            fnl < fpl
        ),
    )
}

fn cnn_error_corr(
    train: &[LabeledComment],
    test: &[LabeledComment],
    table: EmbeddingTable,
    cfg: &CnnTrainConfig,
) -> (f64, Option<f64>) {
    let (model, _) = CnnModel::train_comments(train, table, cfg).unwrap();
    let docs: Vec<Vec<String>> = test.iter().map(|c| tokenize(c.text()).word_tokens).collect();
    let probs = model.predict_proba_all(&docs);
    let preds: Vec<Prediction> = test
        .iter()
        .zip(&probs)
        .map(|(c, &p)| Prediction {
            id: c.raw.id.clone(),
            label: if p > 0.5 { Label::Constructive } else { Label::NonConstructive },
            score: p,
        })
        .collect();
    let gold: Vec<Label> = test.iter().map(|c| c.label).collect();
    let pl: Vec<Label> = preds.iter().map(|p| p.label).collect();
    let f1 = linear::evaluate_labels(&gold, &pl).unwrap().f1;
    let errors = collect_errors(&preds, test).unwrap();
    let r = length_bias_report("cnn", "constructive_probability", &errors, &constructive::analysis::DEFAULT_BUCKET_EDGES, Some(f1))
        .unwrap();
    (f1, r.score_length_corr.value)
}

fn vocab_of(docs: &[LabeledComment]) -> BTreeSet<String> {
    docs.iter()
        .flat_map(|c| tokenize(c.text()).word_tokens)
        .flat_map(|t| [t.to_lowercase(), t])
        .collect()
}

fn c8(run: &LinearRun) -> Outcome {
    let full = std::env::var("C3_CNN_FULL").is_ok_and(|v| v == "1");
    if full {
        let Some(glove) = env_path("GLOVE_PATH") else {
            return unavailable("GLOVE_PATH not set");
        };
        let keep: std::collections::HashSet<String> = vocab_of(&run.train).union(&vocab_of(&run.test)).cloned().collect();
        let table = load_embeddings(&glove, 300, Some(&keep)).unwrap();
        let (f1, corr) = cnn_error_corr(&run.train, &run.test, table, &CnnTrainConfig::default());
        let corr = corr.unwrap_or(f64::NAN);
        return verdict(
            within(f1, 0.92, 0.03) && within(corr, 0.32, 0.15),
            format!("full-size CNN F1 {f1:.4} (0.92 ± 0.03), error-length corr {corr:.4} (0.32 ± 0.15)"),
        );
    }
    let sub: Vec<LabeledComment> = run.train.iter().take(2000).cloned().collect();
    let (table, source) = match env_path("GLOVE50_PATH") {
        Some(p) => {
            let keep = vocab_of(&sub).union(&vocab_of(&run.test)).cloned().collect();
            (load_embeddings(&p, 50, Some(&keep)).unwrap(), "50-d file")
        }
        None => {
            let v = vocab_of(&sub);
            (EmbeddingTable::random(v.iter().map(String::as_str), 50, 42).unwrap(), "50-d random")
        }
    };
    let (f1, corr) = cnn_error_corr(&sub, &run.test, table, &CnnTrainConfig::default());
    let lin = run.report.score_length_corr.value.unwrap_or(f64::NAN);
    let corr = corr.unwrap_or(f64::NAN);
    verdict(
        lin - corr >= 0.2,
        format!("CI scale ({source}, 2000 train): CNN F1 {f1:.4}, error-length corr CNN {corr:.4} vs linear {lin:.4} (gap >= 0.2)"),
    )
}

fn c9(c3: &C3) -> Outcome {
    let socc = env_path("SOCC_A_PATH").map(|p| {
        let m = mapping_from_env("SOCC_A_MAPPING", &[("text", "comment_text"), ("constructive_fraction", "constructive")]);
        label_all(load_c3_csv(&p, &m).unwrap().items)
    });
    let nyt = match (env_path("NYT_PATH"), env_path("YNACC_PATH")) {
        (Some(pos), Some(neg)) => {
            let m = mapping_from_env("EXTERNAL_MAPPING", &[("text", "text")]);
            Some(load_external_corpus(pos, neg, &m).unwrap())
        }
        _ => None,
    };
    if socc.is_none() && nyt.is_none() {
        return unavailable("SOCC_A_PATH, NYT_PATH and YNACC_PATH not set");
    }
    let (train, test) = split_train_test(&c3.corpus, 0.2, 42).unwrap();
    let fc = FeatureConfig::default();
    let tc = TrainConfig::default();
    let all = [AblationGroup::All];
    let mut ok = true;
    let mut parts = Vec::new();
    if let Some(s) = &socc {
        let f = domain_transfer(("c3", &train), ("socc_a", s), &fc, &all, &tc).unwrap()[0].f1.unwrap_or(f64::NAN);
        ok &= within(f, 0.87, 0.03);
        parts.push(format!("C3->SOCC-A {f:.4} (0.87)"));
        if let Some(n) = &nyt {
            let f = domain_transfer(("nyt_ynacc", n), ("socc_a", s), &fc, &all, &tc).unwrap()[0].f1.unwrap_or(f64::NAN);
            ok &= within(f, 0.84, 0.03);
            parts.push(format!("NYT+YNACC->SOCC-A {f:.4} (0.84)"));
        }
    }
    if let Some(n) = &nyt {
        use FeatureGroup::*;
        let groups = [Lexical, Length, Argumentation, NamedEntity, TextQuality, ContentQuality, Aggressiveness, Toxicity];
        let mut cells: Vec<AblationGroup> = groups.iter().map(|&g| AblationGroup::Only(g)).collect();
        cells.push(AblationGroup::All);
        let to_nyt = [0.81, 0.82, 0.69, 0.72, 0.82, 0.79, 0.75, 0.66, 0.82];
        let from_nyt = [0.84, 0.76, 0.75, 0.73, 0.81, 0.78, 0.61, 0.67, 0.81];
        let pairs: [((&str, &[LabeledComment]), (&str, &[LabeledComment]), [f64; 9]); 2] = [
            (("c3", &train), ("nyt_ynacc", n), to_nyt),
            (("nyt_ynacc", n), ("c3", &test), from_nyt),
        ];
        for (tr, te, expect) in pairs {
            let r = domain_transfer(tr, te, &fc, &cells, &tc).unwrap();
            let mut n_checked = 0;
            for (cell, e) in r.iter().zip(expect) {
                if let Some(f) = cell.f1 {
                    n_checked += 1;
                    if !within(f, e, 0.05) {
                        ok = false;
                        parts.push(format!("{}->{} {} {f:.4} ({e})", tr.0, te.0, cell.model));
                    }
                }
            }
            parts.push(format!("{}->{}: {n_checked} cells checked", tr.0, te.0));
        }
    }
    verdict(ok, parts.join("; "))
}

fn c10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    let mut mismatched = 0;
    for _ in 0..200 {
        let n_units = rng.random_range(2..12);
        let k = rng.random_range(2..5u32);
        let mut units: Vec<Vec<u32>> = (0..n_units)
            .map(|_| {
                let m = rng.random_range(0..6);
                (0..m).map(|_| rng.random_range(0..k)).collect()
            })
            .collect();
        units[0] = vec![0, 1];
        units[1] = vec![rng.random_range(0..k), rng.random_range(0..k)];
        let got = krippendorff_alpha_nominal(&RatingMatrix::from_rows(units.clone())).unwrap();
        match (got.alpha, common::alpha_oracle(&units)) {
            (Estimate::Value(a), Some(b)) => worst = worst.max((a - b).abs()),
            (Estimate::Degenerate, None) => {}
            _ => mismatched += 1,
        }
    }
    let ex = krippendorff_alpha_nominal(&RatingMatrix::from_rows(vec![vec![1, 1], vec![0, 0], vec![1, 0]]))
        .unwrap()
        .alpha
        .value()
        .unwrap();
    verdict(
        worst <= 1e-12 && mismatched == 0 && (ex - 4.0 / 9.0).abs() <= 1e-12,
        format!("200 random matrices: max |alpha - oracle| = {worst:.2e}, {mismatched} mismatches; worked example {ex:.6} (4/9)"),
    )
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn linear_gradient_check(loss: Loss, rng: &mut ChaCha8Rng) -> f64 {
    let (n, nd, ns) = (12, 4, 6);
    let h = 1e-6;
    let mut worst = 0.0f64;
    'retry: loop {
        let dense: Vec<Vec<f64>> = (0..n).map(|_| (0..nd).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let sparse: Vec<Vec<(u32, f64)>> = (0..n)
            .map(|_| {
                let mut idx: Vec<u32> = (0..ns as u32).filter(|_| rng.random_bool(0.4)).collect();
                idx.dedup();
                idx.into_iter().map(|j| (j, rng.random_range(0.0..1.0))).collect()
            })
            .collect();
        let y: Vec<Label> = (0..n)
            .map(|_| if rng.random_bool(0.5) { Label::Constructive } else { Label::NonConstructive })
            .collect();
        let w: Vec<f64> = (0..nd + ns).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = rng.random_range(-0.5..0.5);
        let lambda = 1e-2;
        if loss == Loss::Hinge {
            for i in 0..n {
                let mut z = b;
                for j in 0..nd {
                    z += w[j] * dense[i][j];
                }
                for &(j, v) in &sparse[i] {
                    z += w[nd + j as usize] * v;
                }
                if (y[i].sign() * z - 1.0).abs() < 1e-3 {
                    continue 'retry;
                }
            }
        }
        let (gw, gb) = objective_gradient(&w, b, &dense, &sparse, &y, loss, lambda);
        let f = |w: &[f64], b: f64| objective(w, b, &dense, &sparse, &y, loss, lambda);
        for j in 0..w.len() {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[j] += h;
            wm[j] -= h;
            let num = (f(&wp, b) - f(&wm, b)) / (2.0 * h);
            worst = worst.max(rel_err(gw[j], num));
        }
        let num = (f(&w, b + h) - f(&w, b - h)) / (2.0 * h);
        worst = worst.max(rel_err(gb, num));
        return worst;
    }
}

fn cnn_gradient_check(rng: &mut ChaCha8Rng) -> (f64, usize, usize) {
    let shape = CnnShape { dim: 4, filters: 2 };
    let mut p = CnnParams::init(shape, 3);
    for t in p.theta.iter_mut() {
        *t += rng.random_range(-0.1..0.1);
    }
    let inputs: Vec<Input> = [3usize, 7, 9]
        .iter()
        .map(|&len| {
            let rows: Vec<Vec<f64>> = (0..len).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            Input::from_rows(rows.iter().map(Vec::as_slice), 4)
        })
        .collect();
    let batch: Vec<(&Input, usize)> = inputs.iter().zip([0usize, 1, 1]).collect();
    let masks: Vec<Option<Vec<f64>>> = (0..batch.len())
        .map(|i| (i > 0).then(|| net::dropout_mask(rng, shape.pooled(), 0.5)))
        .collect();
    let (_, grad) = net::loss_and_gradients(&p, &batch, &masks);
    let argmaxes = |p: &CnnParams| -> Vec<Vec<usize>> {
        inputs.iter().map(|x| net::forward(p, x, None).argmax.clone()).collect()
    };
    let base = argmaxes(&p);
    let h = 1e-4;
    let (mut worst, mut checked, mut skipped) = (0.0f64, 0, 0);
    for j in 0..p.theta.len() {
        let mut pp = p.clone();
        let mut pm = p.clone();
        pp.theta[j] += h;
        pm.theta[j] -= h;
        // a step that moves a pooling argmax crosses a kink
        if argmaxes(&pp) != base || argmaxes(&pm) != base {
            skipped += 1;
            continue;
        }
        let num = (net::loss_and_gradients(&pp, &batch, &masks).0 - net::loss_and_gradients(&pm, &batch, &masks).0) / (2.0 * h);
        worst = worst.max(rel_err(grad[j], num));
        checked += 1;
    }
    let _ = &mut p;
    (worst, checked, skipped)
}

fn determinism() -> bool {
    let d = tempfile::tempdir().unwrap();
    let run = |out: &str| {
        let cfg = LoadedConfig::load(
            None,
            &[
                format!("workspace_root={}", d.path().display()),
                "data.synthetic.n_comments=300".into(),
                format!("output_dir={out}"),
            ],
        )
        .unwrap();
        for c in [Command::Ingest, Command::TrainLinear, Command::Evaluate, Command::LengthBias] {
            experiment::run(c, &cfg).unwrap();
        }
    };
    run("a");
    run("b");
    ["corpus.csv", "linear_model.json", "predictions_linear.csv", "length_bias.json", "length_bias.csv"]
        .iter()
        .all(|f| std::fs::read(d.path().join("a").join(f)).unwrap() == std::fs::read(d.path().join("b").join(f)).unwrap())
}

fn c12() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let hinge = (0..5).map(|_| linear_gradient_check(Loss::Hinge, &mut rng)).fold(0.0, f64::max);
    let logistic = (0..5).map(|_| linear_gradient_check(Loss::Logistic, &mut rng)).fold(0.0, f64::max);
    let (cnn, checked, skipped) = cnn_gradient_check(&mut rng);

    let hand = [
        (smog_from_counts(0, 5), 3.1291),
        (smog_from_counts(30, 30), 1.043 * 30f64.sqrt() + 3.1291),
        (smog_from_counts(1, 1), 1.043 * 30f64.sqrt() + 3.1291),
        (smog_from_counts(3, 10), 1.043 * 3.0 + 3.1291),
        (smog_readability(&tokenize("Unbelievable opportunity. Yes.")), 1.043 * 30f64.sqrt() + 3.1291),
        (smog_readability(&tokenize("")), 3.1291),
    ];
    let smog_ok = hand.iter().all(|(a, b)| (a - b).abs() < 1e-9);

    let docs: Vec<Vec<String>> = synthetic_corpus(&SyntheticConfig {
        n_comments: 300,
        ..SyntheticConfig::default()
    })
    .iter()
    .map(|c| tokenize(&c.text).word_tokens)
    .collect();
    let vocab = NgramVocabulary::build(docs.iter().map(Vec::as_slice), 2);
    let mut extra = docs.clone();
    extra.push(vec!["zzzunseen".into()]);
    extra.push(Vec::new());
    let tfidf_ok = extra.iter().all(|d| {
        let n: f64 = vocab.tfidf(d).iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        n == 0.0 || (n - 1.0).abs() < 1e-12
    });
    let det = determinism();
    verdict(
        hinge < 1e-6 && logistic < 1e-6 && cnn < 1e-4 && checked > 0 && smog_ok && tfidf_ok && det,
        format!(
            "grad rel err: hinge {hinge:.1e}, logistic {logistic:.1e} (< 1e-6), CNN {cnn:.1e} (< 1e-4, {checked} params, {skipped} at pooling kinks); SMOG hand cases {}; TF-IDF norms {}; pipeline determinism {}",
            ok_word(smog_ok),
            ok_word(tfidf_ok),
            ok_word(det)
        ),
    )
}

fn ok_word(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

/// Criteria 6-8 in shape only, on the synthetic corpus. Informational.
fn synthetic_proxy() -> Outcome {
    let corpus = label_all(synthetic_corpus(&SyntheticConfig {
        n_comments: 2000,
        ..SyntheticConfig::default()
    }));
    let run = linear_length_bias(&corpus, &TrainConfig::default());
    let r = &run.report;
    let v = |o: Option<f64>| o.map_or("NA".into(), |x| format!("{x:.2}"));
    Outcome {
        status: Status::Info,
        detail: format!(
            "synthetic corpus, linear model: F1 {}, mean FN length {}, mean FP length {}, error corr {}",
            v(r.test_f1),
            v(r.mean_fn_length),
            v(r.mean_fp_length),
            v(r.score_length_corr.value)
        ),
    }
}

fn main() {
    let require = std::env::var("C3_REQUIRE").is_ok_and(|v| v == "1");
    let c3 = load_c3();
    let mut lines: Vec<(String, Outcome)> = Vec::new();
    let missing = || unavailable("C3_PATH not set");
    match &c3 {
        Some(c) => {
            lines.push(("1".into(), c1(c)));
            lines.push(("2".into(), c2(c)));
            lines.push(("3".into(), c3_toxicity(c)));
            lines.push(("4".into(), c4(c)));
            lines.push(("5".into(), c5(c)));
            lines.push(("6".into(), c6(c)));
            let run = linear_length_bias(&c.corpus, &TrainConfig::default());
            lines.push(("7".into(), c7(&run)));
            lines.push(("8".into(), c8(&run)));
            lines.push(("9".into(), c9(c)));
        }
        None => {
            for n in 1..=9 {
                lines.push((n.to_string(), missing()));
            }
        }
    }
    lines.push(("10".into(), c10()));
    lines.push((
        "11".into(),
        Outcome {
            status: Status::OutOfScope,
            detail: "recurrent and transformer models not built; length contrast covered by 7-8".into(),
        },
    ));
    lines.push(("12".into(), c12()));
    lines.push(("proxy".into(), synthetic_proxy()));

    let mut failed = false;
    for (n, o) in &lines {
        println!("criterion {n:>5}: {:<12} {}", o.status.tag(), o.detail);
        failed |= o.status == Status::Fail || (require && o.status == Status::Unavailable);
    }
    if failed {
        eprintln!("acceptance: at least one criterion failed");
        std::process::exit(1);
    }
}
