use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::ExperimentConfig;
use super::report::RunStatus;
use super::run::run_predict_experiment;
use crate::error::{Error, Result};

/// Dotted config key → candidate values.
pub type Grid = BTreeMap<String, Vec<Value>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub overrides: Vec<String>,
    pub status: RunStatus,
    pub error: Option<String>,
    pub best_val_loss: Option<f64>,
    pub test_loss: Option<f64>,
    pub output_dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    /// Row with the lowest validation loss among successful runs.
    pub best: Option<usize>,
}

/// Cartesian product of the grid as `key=json` override lists; keys in
/// sorted order, the last key varying fastest.
pub fn grid_cells(grid: &Grid) -> Result<Vec<Vec<String>>> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let mut cells: Vec<Vec<String>> = vec![Vec::new()];
    for (key, values) in grid {
        if values.is_empty() {
            return Err(Error::Config(format!("sweep key `{key}` has no values")));
        }
        cells = cells
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push(format!("{key}={v}"));
                    c
                })
            })
            .collect();
    }
    Ok(cells)
}

/// Runs one prediction experiment per grid cell in `output_dir/cell_NNN`.
/// Failed cells are recorded and the sweep continues.
pub fn sweep(cfg: &ExperimentConfig, grid: &Grid) -> Result<SweepSummary> {
    let cells = grid_cells(grid)?;
    let mut rows = Vec::with_capacity(cells.len());
    for (index, overrides) in cells.into_iter().enumerate() {
        let dir = cfg.output_dir.join(format!("cell_{index:03}"));
        let outcome = cfg.with_overrides(&overrides).and_then(|mut c| {
            c.output_dir = dir.clone();
            run_predict_experiment(&c)
        });
        let row = match outcome {
            Ok(r) => {
                let t = r.tasks.first();
                SweepRow {
                    index,
                    overrides,
                    status: RunStatus::Ok,
                    error: None,
                    best_val_loss: t.map(|t| t.best_val.loss),
                    test_loss: t.map(|t| t.test_loss),
                    output_dir: dir.display().to_string(),
                }
            }
            Err(e) => {
                log::warn!("sweep cell {index} failed: {e}");
                SweepRow {
                    index,
                    overrides,
                    status: RunStatus::Failed,
                    error: Some(e.to_string()),
                    best_val_loss: None,
                    test_loss: None,
                    output_dir: dir.display().to_string(),
                }
            }
        };
        rows.push(row);
    }
    let best = rows
        .iter()
        .filter_map(|r| r.best_val_loss.filter(|v| v.is_finite()).map(|v| (r.index, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    let summary = SweepSummary { rows, best };
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let json = cfg.output_dir.join("sweep.json");
    fs::write(&json, serde_json::to_string_pretty(&summary)? + "\n").map_err(|e| Error::io(&json, e))?;
    let md = cfg.output_dir.join("sweep.md");
    fs::write(&md, summary.to_markdown()).map_err(|e| Error::io(&md, e))?;
    Ok(summary)
}

impl SweepSummary {
    pub fn to_markdown(&self) -> String {
        let mut out =
            String::from("# Sweep\n\n| # | Overrides | Val loss | Test loss | Status |\n|---|---|---|---|---|\n");
        let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        for r in &self.rows {
            let mark = if Some(r.index) == self.best { " **best**" } else { "" };
            let status = match (&r.status, &r.error) {
                (RunStatus::Ok, _) => "ok".to_string(),
                (RunStatus::Failed, e) => format!("FAILED: {}", e.as_deref().unwrap_or("")),
            };
            let _ = writeln!(
                out,
                "| {}{mark} | `{}` | {} | {} | {status} |",
                r.index,
                r.overrides.join(" "),
                f(r.best_val_loss),
                f(r.test_loss)
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;

    #[test]
    fn cells_are_the_cartesian_product() {
        let mut g = Grid::new();
        g.insert("predictor.optim.lr".into(), vec![json!(0.001), json!(0.01)]);
        g.insert("predictor.hidden".into(), vec![json!([8]), json!([16, 4])]);
        let cells = grid_cells(&g).unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[0], vec!["predictor.hidden=[8]", "predictor.optim.lr=0.001"]);
        assert_eq!(cells[3], vec!["predictor.hidden=[16,4]", "predictor.optim.lr=0.01"]);
        for c in &cells {
            ExperimentConfig::default().with_overrides(c).unwrap();
        }
    }

    #[test]
    fn empty_grids_are_rejected() {
        assert!(grid_cells(&Grid::new()).is_err());
        let mut g = Grid::new();
        g.insert("seed".into(), vec![]);
        assert!(grid_cells(&g).is_err());
    }
}
