//! Short training run through the harness, then a greedy evaluation that
//! writes a WAV, a trajectory CSV and the report row.
//!
//! ```text
//! cargo run --release --example evaluate_policy -- /tmp/artic_eval
//! ```

use std::path::PathBuf;

use artic::checkpoint::Checkpoint;
use artic::harness::run::episode_config;
use artic::harness::{evaluate, train, Backend, EvalReport, RunConfig, RunPaths};

fn main() -> artic::Result<()> {
    let dir: PathBuf = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("artic_eval"), PathBuf::from);
    let mut cfg = RunConfig::from_toml(
        r#"
        seed = 4
        [train]
        total_episodes = 300
        [target]
        fixture = "iy"
        [output]
        checkpoint_interval = 100
        "#,
    )?;
    cfg.output.dir = dir.clone();
    let mut backend = Backend::open(&cfg.backend)?;
    let paths = RunPaths::new(&dir);
    let outcome = train(&cfg, &mut backend, None, &paths)?;
    println!("{outcome:?}");

    let ck = Checkpoint::load(&paths.checkpoint("final"))?;
    let ep = episode_config(&cfg, ck.target_id.clone(), ck.target.clone());
    let report = evaluate(&ck.params, &ep, &mut backend, &dir, "")?;
    println!("{}", EvalReport::CSV_HEADER.join(","));
    println!("{}", report.csv_record().join(","));
    Ok(())
}
