use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_c3");

fn c3(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .env_remove("C3_DATA_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, out: &str) -> String {
    let cfg = serde_json::json!({
        "data": { "synthetic": { "n_comments": 300, "seed": 7 } },
        "linear": { "train": { "epochs": 5 } },
        "output_dir": out,
    });
    let p = dir.join(format!("{out}.json"));
    std::fs::write(&p, cfg.to_string()).unwrap();
    p.to_string_lossy().into_owned()
}

fn run_pipeline(dir: &Path, out: &str) {
    let cfg = write_config(dir, out);
    for cmd in ["ingest", "train-linear", "evaluate", "length-bias"] {
        let o = c3(dir, &["-c", &cfg, cmd]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

fn error_payload(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("stderr has a payload");
    serde_json::from_str(line).expect("error payload is JSON")
}

#[test]
fn pipeline_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    run_pipeline(d.path(), "a");
    run_pipeline(d.path(), "b");
    for f in [
        "corpus.csv",
        "linear_model.json",
        "predictions_linear.csv",
        "evaluate.json",
        "length_bias.json",
        "length_bias.csv",
        "histogram_linear.csv",
    ] {
        let a = std::fs::read(d.path().join("a").join(f)).unwrap();
        let b = std::fs::read(d.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between runs");
    }
    let m: Value =
        serde_json::from_slice(&std::fs::read(d.path().join("a/manifest_train_linear.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "train-linear");
    assert_eq!(m["seeds"]["split"], 42);
    assert!(m["inputs"][0]["sha256"].as_str().unwrap().len() == 64);
    assert!(!m.get("outputs").unwrap().as_array().unwrap().is_empty());
    assert!(!d.path().join("a/.c3.lock").exists());
}

#[test]
fn every_command_succeeds_on_synthetic_data() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "all");
    let cfg_set = ["--set", "cnn.random_dim=8", "--set", "cnn.train.filters_per_width=4", "--set", "cnn.train.epochs=1"];
    for cmd in [
        "ingest",
        "stats",
        "agreement",
        "features",
        "train-linear",
        "train-cnn",
        "evaluate",
        "ablate",
        "transfer",
        "length-bias",
        "correlate",
        "report",
    ] {
        let mut args = vec!["-c", cfg.as_str(), cmd];
        args.extend(cfg_set);
        let o = c3(d.path(), &args);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let _: Value = serde_json::from_slice(&o.stdout).expect("stdout is JSON");
    }
    let report = std::fs::read_to_string(d.path().join("all/report.txt")).unwrap();
    assert!(!report.contains("not computed"), "{report}");
    let transfer = std::fs::read_to_string(d.path().join("all/transfer.csv")).unwrap();
    assert!(transfer.contains("data unavailable"));
}

#[test]
fn ablate_single_group_gives_one_row() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "one");
    assert!(c3(d.path(), &["-c", &cfg, "ingest"]).status.success());
    let o = c3(d.path(), &["-c", &cfg, "--set", r#"analysis.ablation_groups=["length"]"#, "ablate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = std::fs::read_to_string(d.path().join("one/ablation.csv")).unwrap();
    assert_eq!(t.lines().count(), 2, "{t}");
    assert!(t.lines().nth(1).unwrap().starts_with("length,0."));
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "e");

    let o = c3(d.path(), &["-c", &cfg, "--set", "bogus=1", "stats"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_payload(&o)["error"]["kind"], "config");

    // no corpus yet
    let o = c3(d.path(), &["-c", &cfg, "stats"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_payload(&o)["error"]["exit_code"], 3);

    let o = c3(d.path(), &["-c", "missing.json", "stats"]);
    assert_eq!(o.status.code(), Some(3));

    let o = c3(d.path(), &["stats", "--set", "output_dir=x"]);
    assert_eq!(o.status.code(), Some(3));

    let o = c3(d.path(), &["ingest", "--set", "output_dir=y"]);
    assert_eq!(o.status.code(), Some(2), "no data source configured");

    std::fs::create_dir_all(d.path().join("e")).unwrap();
    std::fs::write(d.path().join("e/.c3.lock"), "1").unwrap();
    let o = c3(d.path(), &["-c", &cfg, "ingest"]);
    assert_eq!(o.status.code(), Some(6));
    assert_eq!(error_payload(&o)["error"]["kind"], "locked");
}

#[test]
fn data_dir_env_roots_relative_paths() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .current_dir(std::env::temp_dir())
        .env("C3_DATA_DIR", d.path())
        .args(["ingest", "--set", "data.synthetic.n_comments=50", "--set", "output_dir=envrun"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.path().join("envrun/corpus.csv").exists());
}

#[test]
fn published_schema_matches_code() {
    let committed = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config.schema.json"))
        .expect("config.schema.json at the workspace root");
    assert_eq!(committed, constructive::experiment::schema_json(), "regenerate with `c3 schema`");
}
