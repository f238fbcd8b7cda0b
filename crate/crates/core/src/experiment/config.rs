use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::ingest::ClickSchema;
use crate::predictor::PredictorConfig;
use crate::preprocess::PreprocessConfig;
use crate::ranker::RankerConfig;
use crate::seed::derive_seed;

/// Default root for relative data paths.
pub const DATA_DIR_ENV: &str = "CLARIFY_RANK_DATA_DIR";

pub const SEED_BALANCE: &str = "preprocess/balance";
pub const SEED_SPLIT: &str = "preprocess/split";
pub const SEED_RANK_SPLIT: &str = "rank/split";
pub const SEED_NEGATIVES: &str = "rank/negatives";

/// Every named stage seed derived from the top-level seed.
pub const SEED_STAGES: [&str; 8] = [
    SEED_BALANCE,
    SEED_SPLIT,
    "predictor/init",
    "predictor/shuffle",
    SEED_RANK_SPLIT,
    SEED_NEGATIVES,
    "ranker/init",
    "ranker/shuffle",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[derive(Default)]
pub struct DataConfig {
    pub click: Option<PathBuf>,
    pub click_explore: Option<PathBuf>,
    /// EMB1 file aligned with the accepted rows of `click`.
    pub click_embeddings: Option<PathBuf>,
    /// EMB1 file aligned with the accepted rows of `click_explore`.
    pub click_explore_embeddings: Option<PathBuf>,
    pub schema: ClickSchema,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankStageConfig {
    pub negatives_per_query: usize,
    /// Regression model file supplying the predicted engagement.
    pub predictor_model: Option<PathBuf>,
}

impl Default for RankStageConfig {
    fn default() -> Self {
        Self {
            negatives_per_query: 10,
            predictor_model: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub data: DataConfig,
    pub preprocess: PreprocessConfig,
    pub predictor: PredictorConfig,
    /// Also train the other task (regression vs classification) on the same data.
    pub compare_tasks: bool,
    pub ranker: RankerConfig,
    pub rank: RankStageConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            seed: 0,
            data: DataConfig::default(),
            preprocess: PreprocessConfig::default(),
            predictor: PredictorConfig::default(),
            compare_tasks: false,
            ranker: RankerConfig::default(),
            rank: RankStageConfig::default(),
            output_dir: PathBuf::from("runs/experiment"),
        }
    }
}

fn parse_override(raw: &str) -> Result<(Vec<&str>, Value)> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{raw}` is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    // Bare words that are not JSON are taken as strings.
    let value = serde_json::from_str(value.trim()).unwrap_or_else(|_| Value::String(value.trim().to_string()));
    Ok((path, value))
}

/// Replaces the value at a dotted path; the path must already exist.
pub fn set_path(root: &mut Value, raw: &str) -> Result<()> {
    let (path, value) = parse_override(raw)?;
    let mut node = root;
    for (i, part) in path.iter().enumerate() {
        let next = match node {
            Value::Object(map) => map.get_mut(*part),
            Value::Array(items) => part.parse::<usize>().ok().and_then(|k| items.get_mut(k)),
            _ => None,
        };
        node = next.ok_or_else(|| Error::Config(format!("unknown config key `{}`", path[..=i].join("."))))?;
    }
    *node = value;
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies `key.sub=value` overrides in order.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut v = self.to_value();
        for o in overrides {
            set_path(&mut v, o.as_ref())?;
        }
        Ok(serde_json::from_value(v)?)
    }

    /// Joins relative data paths onto `root`.
    pub fn with_data_root(mut self, root: &Path) -> Self {
        let d = &mut self.data;
        for p in [
            &mut d.click,
            &mut d.click_explore,
            &mut d.click_embeddings,
            &mut d.click_explore_embeddings,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = root.join(&*p);
            }
        }
        self
    }

    /// Applies the data root from the environment, if set.
    pub fn resolved(self) -> Self {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(root) if !root.is_empty() => self.with_data_root(Path::new(&root)),
            _ => self,
        }
    }

    /// Checks numeric settings and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        self.preprocess.split.validate()?;
        self.predictor.validate()?;
        self.ranker.optim.validate()?;
        self.ranker.mlp().validate()?;
        if self.ranker.sigma.is_nan() || self.ranker.sigma <= 0.0 || self.ranker.epochs == 0 {
            return Err(Error::Config("ranker needs sigma > 0 and at least one epoch".into()));
        }
        let d = &self.data;
        for p in [
            &d.click,
            &d.click_explore,
            &d.click_embeddings,
            &d.click_explore_embeddings,
            &self.rank.predictor_model,
        ]
        .into_iter()
        .flatten()
        {
            if !p.is_file() {
                return Err(Error::Config(format!("referenced file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn seeds(&self) -> BTreeMap<String, u64> {
        let mut m: BTreeMap<String, u64> = SEED_STAGES
            .iter()
            .map(|s| (s.to_string(), derive_seed(self.seed, s)))
            .collect();
        m.insert("top_level".into(), self.seed);
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::Task;

    #[test]
    fn round_trips_losslessly() {
        let c = ExperimentConfig {
            seed: 42,
            compare_tasks: true,
            ..Default::default()
        };
        let back = ExperimentConfig::from_json_str(&c.to_json_pretty()).unwrap();
        assert_eq!(back, c);
        assert_eq!(
            ExperimentConfig::from_json_str("{}").unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn overrides_follow_dotted_paths() {
        let c = ExperimentConfig::default()
            .with_overrides(&[
                "predictor.optim.lr=0.01",
                "predictor.hidden=[8,4]",
                "predictor.task=classification",
                "name=run 7",
                "data.click=/tmp/x.tsv",
            ])
            .unwrap();
        assert_eq!(c.predictor.optim.lr, 0.01);
        assert_eq!(c.predictor.hidden, vec![8, 4]);
        assert_eq!(c.predictor.task, Task::Classification);
        assert_eq!(c.name, "run 7");
        assert_eq!(c.data.click, Some(PathBuf::from("/tmp/x.tsv")));
        let err = ExperimentConfig::default()
            .with_overrides(&["predictor.lr=1"])
            .unwrap_err();
        assert!(err.to_string().contains("predictor.lr"));
        assert!(ExperimentConfig::default().with_overrides(&["seed"]).is_err());
        assert!(ExperimentConfig::default().with_overrides(&["seed=abc"]).is_err());
    }

    #[test]
    fn data_root_applies_to_relative_paths() {
        let mut c = ExperimentConfig::default();
        c.data.click = Some("click.tsv".into());
        c.data.click_explore = Some("/abs/explore.tsv".into());
        let c = c.with_data_root(Path::new("/data"));
        assert_eq!(c.data.click, Some(PathBuf::from("/data/click.tsv")));
        assert_eq!(c.data.click_explore, Some(PathBuf::from("/abs/explore.tsv")));
    }

    #[test]
    fn validation_checks_files() {
        let mut c = ExperimentConfig::default();
        assert!(c.validate().is_ok());
        c.data.click = Some("/definitely/missing.tsv".into());
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn seeds_cover_every_stage() {
        let s = ExperimentConfig::default().seeds();
        assert_eq!(s.len(), SEED_STAGES.len() + 1);
        assert_eq!(s["ranker/init"], derive_seed(0, "ranker/init"));
    }
}
