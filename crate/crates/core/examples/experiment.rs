//! Drive the experiment runner from code: the same steps as
//! `c3 ingest`, `c3 stats`, `c3 train-linear`, `c3 evaluate`, `c3 length-bias`, `c3 report`.

use constructive::experiment::{run, Command, LoadedConfig};

fn main() -> constructive::Result<()> {
    let dir = std::env::temp_dir().join("c3-example-run");
    let cfg = LoadedConfig::load(
        None,
        &[
            format!("workspace_root={}", dir.display()),
            "data.synthetic.n_comments=800".into(),
            "output_dir=run".into(),
        ],
    )?;
    for c in [Command::Ingest, Command::Stats, Command::TrainLinear, Command::Evaluate, Command::LengthBias, Command::Report] {
        let v = run(c, &cfg)?;
        println!("{}: ok", c.name());
        if c == Command::Report {
            println!("{}", v["text"].as_str().unwrap_or_default());
        }
    }
    println!("artifacts in {}", dir.join("run").display());
    Ok(())
}
