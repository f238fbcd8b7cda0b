#![allow(dead_code)]

use std::path::{Path, PathBuf};

use clarify_rank::experiment::ExperimentConfig;
use clarify_rank::ingest::{write_tsv_file, ClickRecord, ClickSchema};
use clarify_rank::synth::{generate, SynthSpec};

pub fn write_records(dir: &Path, name: &str, records: &[ClickRecord]) -> PathBuf {
    let p = dir.join(name);
    write_tsv_file(&p, records, &ClickSchema::default()).unwrap();
    p
}

/// Click-style log: one pane per query.
pub fn click_log(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let spec = SynthSpec {
        n_queries: n,
        ..Default::default()
    };
    write_records(dir, "click.tsv", &generate(&spec, seed))
}

/// Explore-style log: several panes per query.
pub fn explore_log(dir: &Path, n_queries: usize, seed: u64) -> PathBuf {
    let spec = SynthSpec {
        n_queries,
        min_cps: 1,
        max_cps: 5,
        ..Default::default()
    };
    write_records(dir, "explore.tsv", &generate(&spec, seed))
}

/// Small, fast settings for end-to-end runs.
pub fn quick_config(dir: &Path) -> ExperimentConfig {
    ExperimentConfig::default()
        .with_overrides(&[
            "predictor.epochs=30",
            "predictor.hidden=[32,8]",
            "predictor.eval_every=10",
            "preprocess.vocab_size=2000",
        ])
        .map(|mut c| {
            c.output_dir = dir.join("out");
            c
        })
        .unwrap()
}
