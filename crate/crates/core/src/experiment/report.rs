use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::ingest::N_LEVELS;
use crate::metrics::ConfusionMatrix;
use crate::predictor::{BestCheckpoint, Task};
use crate::preprocess::VectorizerKind;
use crate::ranker::RankerEpoch;
use crate::stats::TTestResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageHistogram {
    pub stage: String,
    pub n_rows: usize,
    pub histogram: [usize; N_LEVELS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub source: String,
    pub parsed_rows: usize,
    pub skipped_rows: usize,
    /// Label histograms after each preprocessing stage, in application order.
    pub stages: Vec<StageHistogram>,
    pub split_sizes: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    /// What the model is compared against.
    pub against: String,
    pub t_statistic: f64,
    pub p_value: f64,
    pub n: usize,
    /// Mean of (first − second) over the pairing unit.
    pub mean_diff: f64,
    pub alpha: f64,
    pub significant: bool,
}

impl Significance {
    pub fn new(against: impl Into<String>, t: &TTestResult, alpha: f64) -> Self {
        Self {
            against: against.into(),
            t_statistic: t.t_statistic,
            p_value: t.p_value,
            n: t.n,
            mean_diff: t.mean_diff,
            alpha,
            significant: t.significant(alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub name: String,
    /// Constant prediction, for regression baselines.
    pub value: Option<f64>,
    pub loss: f64,
    pub accuracy: Option<f64>,
    /// Paired test of per-sample model loss against this baseline's.
    pub test: Significance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: Task,
    pub n_classes: usize,
    pub input_dim: usize,
    pub n_parameters: usize,
    pub best_val: BestCheckpoint,
    pub total_batches: u64,
    pub final_val_loss: f64,
    pub test_loss: f64,
    pub test_accuracy: Option<f64>,
    pub baselines: Vec<BaselineRow>,
    pub confusion: ConfusionMatrix,
    pub model_file: String,
    pub confusion_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorizerSummary {
    pub kind: VectorizerKind,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictReport {
    pub status: RunStatus,
    pub error: Option<String>,
    pub completed_stages: Vec<String>,
    pub config: Value,
    pub seeds: BTreeMap<String, u64>,
    /// Methodological choices that affect comparability.
    pub notes: Vec<String>,
    pub data: Option<DataSummary>,
    pub vectorizer: Option<VectorizerSummary>,
    pub tasks: Vec<TaskResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub source: String,
    pub n_queries: usize,
    pub n_pairs: usize,
    pub negatives_per_query: usize,
    /// Queries per split (train, val, test).
    pub split_queries: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub with_pue: bool,
    pub input_dim: usize,
    /// sha256 over the query lists of the train/val/test groups this arm used.
    pub split_digest: String,
    pub epochs: Vec<RankerEpoch>,
    pub test_ndcg: f64,
    pub test_mrr: f64,
    pub model_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub status: RunStatus,
    pub error: Option<String>,
    pub completed_stages: Vec<String>,
    pub config: Value,
    pub seeds: BTreeMap<String, u64>,
    pub notes: Vec<String>,
    pub predictor_config_hash: Option<String>,
    pub groups: Option<GroupSummary>,
    /// Mean test NDCG of the untrained with-PUE network.
    pub untrained_ndcg: Option<f64>,
    pub arms: Vec<ArmResult>,
    /// With-PUE minus without-PUE, paired per test query.
    pub ndcg_test: Option<Significance>,
    pub mrr_test: Option<Significance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunReport {
    Predict(PredictReport),
    Rank(RankReport),
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

fn status_line(out: &mut String, status: RunStatus, error: &Option<String>, stages: &[String]) {
    match status {
        RunStatus::Ok => {}
        RunStatus::Failed => {
            let _ = writeln!(out, "**FAILED**: {}\n", error.as_deref().unwrap_or("unknown error"));
            let _ = writeln!(out, "Completed stages: {}\n", stages.join(", "));
        }
    }
}

fn notes(out: &mut String, notes: &[String], seeds: &BTreeMap<String, u64>) {
    out.push_str("\n## Notes\n\n");
    for n in notes {
        let _ = writeln!(out, "- {n}");
    }
    out.push_str("\n## Seeds\n\n");
    for (k, v) in seeds {
        let _ = writeln!(out, "- `{k}`: {v}");
    }
}

impl PredictReport {
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Engagement prediction\n\n");
        status_line(&mut out, self.status, &self.error, &self.completed_stages);
        if let Some(d) = &self.data {
            let _ = writeln!(
                out,
                "Source `{}`: {} rows parsed, {} skipped; split {}/{}/{}.\n",
                d.source, d.parsed_rows, d.skipped_rows, d.split_sizes[0], d.split_sizes[1], d.split_sizes[2]
            );
            out.push_str("| Stage | Rows | Label histogram |\n|---|---|---|\n");
            for s in &d.stages {
                let _ = writeln!(out, "| {} | {} | {:?} |", s.stage, s.n_rows, s.histogram);
            }
            out.push('\n');
        }
        if let Some(v) = &self.vectorizer {
            let _ = writeln!(out, "Vectorizer: {:?}, width {}.\n", v.kind, v.width);
        }
        for t in &self.tasks {
            let loss_name = match t.task {
                Task::Regression => "MSE",
                Task::Classification => "CE",
            };
            let _ = writeln!(out, "## {:?} ({} classes)\n", t.task, t.n_classes);
            let _ = writeln!(out, "| Model | Test {loss_name} | Accuracy | p |\n|---|---|---|---|");
            let _ = writeln!(out, "| Model | {:.3} | {} | |", t.test_loss, fmt_opt(t.test_accuracy));
            for b in &t.baselines {
                let star = if b.test.significant { "*" } else { "" };
                let _ = writeln!(
                    out,
                    "| {} | {:.3}{star} | {} | {:.3e} |",
                    b.name,
                    b.loss,
                    fmt_opt(b.accuracy),
                    b.test.p_value
                );
            }
            let _ = writeln!(
                out,
                "\n`*`: paired t-test of per-sample loss against the model, p < {}.\n",
                t.baselines.first().map_or(0.001, |b| b.test.alpha)
            );
            let _ = writeln!(
                out,
                "Best validation loss {:.4} at batch {} of {}; {} parameters.\n",
                t.best_val.loss, t.best_val.checkpoint, t.total_batches, t.n_parameters
            );
            let _ = writeln!(
                out,
                "Confusion matrix (`{}`):\n\n```\n{}```\n",
                t.confusion_file,
                t.confusion.to_csv()
            );
        }
        notes(&mut out, &self.notes, &self.seeds);
        out
    }
}

impl RankReport {
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Ranking\n\n");
        status_line(&mut out, self.status, &self.error, &self.completed_stages);
        if let Some(g) = &self.groups {
            let _ = writeln!(
                out,
                "Source `{}`: {} queries, {} pairs, {} negatives per query; queries per split {}/{}/{}.\n",
                g.source,
                g.n_queries,
                g.n_pairs,
                g.negatives_per_query,
                g.split_queries[0],
                g.split_queries[1],
                g.split_queries[2]
            );
        }
        if !self.arms.is_empty() {
            out.push_str("| Ranker | NDCG | MRR |\n|---|---|---|\n");
            for a in &self.arms {
                let name = if a.with_pue {
                    "With predictions"
                } else {
                    "Without predictions"
                };
                let _ = writeln!(out, "| {name} | {:.3} | {:.3} |", a.test_ndcg, a.test_mrr);
            }
            if let Some(u) = self.untrained_ndcg {
                let _ = writeln!(out, "| Untrained | {u:.3} | - |");
            }
            out.push('\n');
        }
        for (name, t) in [("NDCG", &self.ndcg_test), ("MRR", &self.mrr_test)] {
            if let Some(t) = t {
                let _ = writeln!(
                    out,
                    "{name}: mean difference {:.4}, t = {:.3}, p = {:.3e} over {} queries{}.",
                    t.mean_diff,
                    t.t_statistic,
                    t.p_value,
                    t.n,
                    if t.significant {
                        format!(" (significant at {})", t.alpha)
                    } else {
                        String::new()
                    }
                );
            }
        }
        if let [a, b] = &self.arms[..] {
            let same = a.split_digest == b.split_digest;
            let _ = writeln!(out, "\nSplit digests {}.", if same { "match" } else { "DIFFER" });
        }
        notes(&mut out, &self.notes, &self.seeds);
        out
    }
}

impl RunReport {
    pub fn to_markdown(&self) -> String {
        match self {
            RunReport::Predict(r) => r.to_markdown(),
            RunReport::Rank(r) => r.to_markdown(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Writes `report.json` and `report.md` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join("report.json");
        fs::write(&json, self.to_json()).map_err(|e| Error::io(&json, e))?;
        let md = dir.join("report.md");
        fs::write(&md, self.to_markdown()).map_err(|e| Error::io(&md, e))
    }
}
