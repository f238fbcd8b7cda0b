use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, SEED_BALANCE, SEED_NEGATIVES, SEED_RANK_SPLIT, SEED_SPLIT};
use super::report::*;
use crate::error::{Error, Result};
use crate::ingest::{parse_click, parse_click_explore, ClickRecord, Dataset, N_LEVELS};
use crate::linalg::Matrix;
use crate::metrics::confusion;
use crate::model_file::{ModelFile, Stage, VectorizerSpec};
use crate::nn::{MlpModel, Mode};
use crate::predictor::{
    baselines, evaluate_predictor, predict_outputs, train_predictor_with, Evaluation, FeatureMatrix, LabeledSplit,
    PredictorConfig, Task,
};
use crate::preprocess::{
    add_negatives, assign_relevance, balance_zero, filter_impression, reduce_classes, split_queries, split_rows,
    CandidateGroup, RankGroup, VectorizerKind,
};
use crate::ranker::{evaluate_ranker, feature_groups, fit_standardization, train_ranker, FeatureGroup};
use crate::seed::derive_seed;
use crate::stats::paired_ttest;
use crate::vectorize::{load_embeddings, EmbeddingManifest, EmbeddingMatrix, TfidfModel};

/// Significance level marked in prediction tables.
pub const PREDICT_ALPHA: f64 = 0.001;
/// Significance level for the ranking ablation.
pub const RANK_ALPHA: f64 = 0.05;

const PUE_CHUNK: usize = 512;

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Config(format!("`{key}` is required for this stage")))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Line-oriented JSON writer.
struct JsonLines {
    path: PathBuf,
    out: BufWriter<File>,
}

impl JsonLines {
    fn create(path: PathBuf) -> Result<Self> {
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            out: BufWriter::new(f),
            path,
        })
    }

    fn push<T: Serialize>(&mut self, v: &T) -> Result<()> {
        let line = serde_json::to_string(v)?;
        log::info!("{line}");
        writeln!(self.out, "{line}").map_err(|e| Error::io(&self.path, e))
    }

    fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Loads an EMB1 file and, when its sidecar manifest exists, checks the
/// shape and that it was exported from `source`.
pub fn load_aligned_embeddings(path: &Path, source: &Path) -> Result<EmbeddingMatrix> {
    let m = load_embeddings(path)?;
    let side = EmbeddingManifest::sidecar_path(path);
    if side.is_file() {
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let manifest: EmbeddingManifest = serde_json::from_str(&text)?;
        manifest.check(&m)?;
        let digest = sha256_file(source)?;
        if !manifest.sha256.eq_ignore_ascii_case(&digest) {
            return Err(Error::Config(format!(
                "{} was exported from a different file (sha256 {}, {} has {digest})",
                path.display(),
                manifest.sha256,
                source.display()
            )));
        }
    } else {
        log::warn!("no manifest next to {}; row alignment is unchecked", path.display());
    }
    Ok(m)
}

fn check_rows(table: &EmbeddingMatrix, rows: &[usize]) -> Result<()> {
    match rows.iter().max() {
        Some(&r) if r >= table.n_rows() => Err(Error::IndexOutOfRange {
            index: r,
            bound: table.n_rows(),
        }),
        _ => Ok(()),
    }
}

fn histogram(stage: &str, d: &Dataset) -> StageHistogram {
    StageHistogram {
        stage: stage.to_string(),
        n_rows: d.len(),
        histogram: d.label_histogram(),
    }
}

/// Filtered, balanced, reduced and split click data.
pub struct PreparedData {
    pub parsed: Dataset,
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub summary: DataSummary,
}

/// Runs ingest and preprocessing: impression filter, then zero balancing,
/// then class reduction, then the row split. Histograms go to
/// `preprocess.jsonl` in the output directory.
pub fn prepare_click_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let path = required(&cfg.data.click, "data.click")?;
    let parsed = parse_click(path, &cfg.data.schema)?;
    create_dir(&cfg.output_dir)?;
    let mut log = JsonLines::create(cfg.output_dir.join("preprocess.jsonl"))?;
    let mut stages = vec![histogram("parsed", &parsed)];
    let mut d = parsed.clone();
    let p = &cfg.preprocess;
    if p.impression_filter {
        d = filter_impression(&d);
        stages.push(histogram("impression_filter", &d));
    }
    if p.balance {
        d = balance_zero(&d, derive_seed(cfg.seed, SEED_BALANCE));
        stages.push(histogram("balance_zero", &d));
    }
    if p.reduced_classes {
        d = reduce_classes(&d);
        stages.push(histogram("reduce_classes", &d));
    }
    for s in &stages {
        log.push(s)?;
    }
    log.finish()?;
    let (train, val, test) = split_rows(&d, &p.split, derive_seed(cfg.seed, SEED_SPLIT))?;
    let summary = DataSummary {
        source: path.display().to_string(),
        parsed_rows: parsed.len(),
        skipped_rows: parsed.skipped,
        stages,
        split_sizes: [train.len(), val.len(), test.len()],
    };
    Ok(PreparedData {
        parsed,
        train,
        val,
        test,
        summary,
    })
}

struct Vectorized {
    spec: VectorizerSpec,
    width: usize,
    train: FeatureMatrix,
    val: FeatureMatrix,
    test: FeatureMatrix,
}

fn vectorize(cfg: &ExperimentConfig, data: &PreparedData) -> Result<Vectorized> {
    match cfg.preprocess.vectorizer {
        VectorizerKind::Tfidf => {
            let model = TfidfModel::fit(&data.train.records, cfg.preprocess.vocab_size)?;
            let rows = |d: &Dataset| FeatureMatrix::Sparse(d.records.iter().map(|r| model.transform(r)).collect());
            Ok(Vectorized {
                width: model.vocab_len(),
                train: rows(&data.train),
                val: rows(&data.val),
                test: rows(&data.test),
                spec: VectorizerSpec::Tfidf(model),
            })
        }
        VectorizerKind::DenseEmbedding => {
            let emb_path = required(&cfg.data.click_embeddings, "data.click_embeddings")?;
            let src = required(&cfg.data.click, "data.click")?;
            let table = Arc::new(load_aligned_embeddings(emb_path, src)?);
            check_rows(&table, &data.parsed.provenance.rows)?;
            let rows = |d: &Dataset| FeatureMatrix::Embedded {
                table: Arc::clone(&table),
                rows: d.provenance.rows.clone(),
            };
            Ok(Vectorized {
                width: table.dim(),
                train: rows(&data.train),
                val: rows(&data.val),
                test: rows(&data.test),
                spec: VectorizerSpec::DenseEmbedding { dim: table.dim() },
            })
        }
    }
}

fn labels(d: &Dataset) -> Vec<u8> {
    d.records.iter().map(|r| r.engagement).collect()
}

fn predict_notes(cfg: &ExperimentConfig) -> Vec<String> {
    let mut n = vec![
        "Preprocessing order: impression filter, zero-label balancing, class reduction; all before the row split.".to_string(),
        "Reported test metrics use the parameters with the lowest validation loss.".to_string(),
        format!("Significance: two-sided paired t-test over per-sample test losses, model vs baseline, marked at p < {PREDICT_ALPHA}."),
        "Regression targets are raw engagement levels; the confusion matrix rounds and clamps regression outputs.".to_string(),
        "Constant-class baseline: one-hot on the most frequent training class, other classes smoothed to 1e-12; class-prior and uniform-random baselines are listed too.".to_string(),
    ];
    n.push(match cfg.preprocess.vectorizer {
        VectorizerKind::Tfidf => {
            "TFIDF vocabulary and idf are fitted on the training split only; input width is the fitted vocabulary size."
                .to_string()
        }
        VectorizerKind::DenseEmbedding => "Dense rows are read from the EMB1 file by accepted-row index.".to_string(),
    });
    n
}

fn predictor_file(
    model: &MlpModel,
    cfg: &ExperimentConfig,
    task: Task,
    spec: &VectorizerSpec,
    metrics: BTreeMap<String, f64>,
) -> ModelFile {
    let mut f = ModelFile::from_model(model, Stage::Predictor, cfg.to_value(), metrics);
    f.manifest.task = Some(task);
    f.manifest.vectorizer = Some(spec.clone());
    f
}

fn task_name(t: Task) -> &'static str {
    match t {
        Task::Regression => "regression",
        Task::Classification => "classification",
    }
}

fn run_task(
    cfg: &ExperimentConfig,
    task: Task,
    primary: bool,
    data: &PreparedData,
    vec: &Vectorized,
    history: &mut JsonLines,
) -> Result<TaskResult> {
    let n_classes = if cfg.preprocess.reduced_classes { 2 } else { N_LEVELS };
    let pcfg = PredictorConfig {
        task,
        n_classes,
        ..cfg.predictor.clone()
    };
    let train = LabeledSplit {
        features: vec.train.clone(),
        labels: labels(&data.train),
    };
    let val = LabeledSplit {
        features: vec.val.clone(),
        labels: labels(&data.val),
    };
    let test = LabeledSplit {
        features: vec.test.clone(),
        labels: labels(&data.test),
    };
    let model_name = format!("predictor_{}.mdl1", task_name(task));
    let model_path = cfg.output_dir.join(&model_name);
    let (model, hist) = train_predictor_with(&pcfg, &train, &val, cfg.seed, |m, batch| {
        let metrics = BTreeMap::from([("checkpoint_batch".to_string(), batch as f64)]);
        predictor_file(m, cfg, task, &vec.spec, metrics).save(&model_path)
    })?;
    for p in &hist.points {
        history.push(&json!({"stage": "predictor", "task": task, "point": p}))?;
    }

    let eval: Evaluation = evaluate_predictor(&model, &test, task)?;
    let base = baselines(&train.labels, &test.labels, task, n_classes)?;
    let mut rows = Vec::new();
    let mut add = |name: &str, value: Option<f64>, loss: f64, accuracy: Option<f64>, per: &[f64]| -> Result<()> {
        let t = paired_ttest(&eval.per_sample, per)?;
        rows.push(BaselineRow {
            name: name.to_string(),
            value,
            loss,
            accuracy,
            test: Significance::new(name, &t, PREDICT_ALPHA),
        });
        Ok(())
    };
    for (name, b) in [("Mean", &base.mean), ("Median", &base.median), ("Mode", &base.mode)] {
        if let Some(b) = b {
            add(name, Some(b.value), b.mse, None, &b.per_sample)?;
        }
    }
    for (name, b) in [
        ("Constant class", &base.constant_class),
        ("Class prior", &base.class_prior),
        ("Uniform random", &base.uniform_random),
    ] {
        if let Some(b) = b {
            add(name, None, b.ce, Some(b.accuracy), &b.per_sample)?;
        }
    }

    let conf_classes = match task {
        Task::Regression => N_LEVELS.max(n_classes),
        Task::Classification => n_classes,
    };
    let truth: Vec<usize> = test.labels.iter().map(|&l| l as usize).collect();
    let conf = confusion(&truth, &eval.predicted_classes, conf_classes)?;
    let confusion_file = if primary {
        "confusion.csv".to_string()
    } else {
        format!("confusion_{}.csv", task_name(task))
    };
    let conf_path = cfg.output_dir.join(&confusion_file);
    fs::write(&conf_path, conf.to_csv()).map_err(|e| Error::io(&conf_path, e))?;

    let metrics = BTreeMap::from([
        ("best_val_loss".to_string(), hist.best_val.loss),
        ("checkpoint_batch".to_string(), hist.best_val.checkpoint as f64),
        ("test_loss".to_string(), eval.loss),
    ]);
    predictor_file(&model, cfg, task, &vec.spec, metrics).save(&model_path)?;

    Ok(TaskResult {
        task,
        n_classes,
        input_dim: vec.width,
        n_parameters: model.n_parameters(),
        best_val: hist.best_val,
        total_batches: hist.total_batches,
        final_val_loss: hist.final_val_loss,
        test_loss: eval.loss,
        test_accuracy: eval.accuracy,
        baselines: rows,
        confusion: conf,
        model_file: model_name,
        confusion_file,
    })
}

fn predict_stages(cfg: &ExperimentConfig, report: &mut PredictReport) -> Result<()> {
    cfg.validate()?;
    report.completed_stages.push("validate".into());
    let data = prepare_click_data(cfg)?;
    report.data = Some(data.summary.clone());
    report.completed_stages.push("preprocess".into());
    let vec = vectorize(cfg, &data)?;
    report.vectorizer = Some(VectorizerSummary {
        kind: cfg.preprocess.vectorizer,
        width: vec.width,
    });
    report.completed_stages.push("vectorize".into());

    let primary = cfg.predictor.task;
    let mut tasks = vec![primary];
    if cfg.compare_tasks {
        tasks.push(match primary {
            Task::Regression => Task::Classification,
            Task::Classification => Task::Regression,
        });
    }
    let mut history = JsonLines::create(cfg.output_dir.join("history.jsonl"))?;
    for (i, &task) in tasks.iter().enumerate() {
        let r = run_task(cfg, task, i == 0, &data, &vec, &mut history);
        history.out.flush().map_err(|e| Error::io(&history.path, e))?;
        report.tasks.push(r?);
        report
            .completed_stages
            .push(format!("train_evaluate_{}", task_name(task)));
    }
    history.finish()
}

fn finish<R: Clone>(
    result: Result<()>,
    mut report: R,
    dir: &Path,
    wrap: fn(R) -> RunReport,
    fail: fn(&mut R, String),
) -> Result<R> {
    match result {
        Ok(()) => {
            wrap(report.clone()).write(dir)?;
            Ok(report)
        }
        Err(e) => {
            fail(&mut report, e.to_string());
            // Partial outputs stay on disk; the report records the failure.
            if let Err(w) = wrap(report).write(dir) {
                log::error!("could not write failure report: {w}");
            }
            Err(e)
        }
    }
}

/// Ingest → preprocess → vectorize → train → evaluate → baselines → t-tests.
/// Writes `report.json`, `report.md`, `history.jsonl`, `confusion.csv`,
/// `preprocess.jsonl` and model files to the output directory.
pub fn run_predict_experiment(cfg: &ExperimentConfig) -> Result<PredictReport> {
    let mut report = PredictReport {
        status: RunStatus::Ok,
        error: None,
        completed_stages: Vec::new(),
        config: cfg.to_value(),
        seeds: cfg.seeds(),
        notes: predict_notes(cfg),
        data: None,
        vectorizer: None,
        tasks: Vec::new(),
    };
    let result = create_dir(&cfg.output_dir).and_then(|_| predict_stages(cfg, &mut report));
    finish(result, report, &cfg.output_dir, RunReport::Predict, |r, e| {
        r.status = RunStatus::Failed;
        r.error = Some(e);
    })
}

/// Predicted engagement for every candidate of every group.
pub fn predicted_engagement(
    predictor: &ModelFile,
    groups: &[CandidateGroup],
    embeddings: Option<&EmbeddingMatrix>,
) -> Result<Vec<Vec<f64>>> {
    let model = predictor.to_model()?;
    let spec = predictor
        .manifest
        .vectorizer
        .as_ref()
        .ok_or_else(|| Error::ModelFormat("predictor file records no vectorizer".into()))?;
    let mut flat: Vec<f64> = Vec::with_capacity(groups.iter().map(|g| g.candidates.len()).sum());
    let pairs: Vec<(usize, usize, &ClickRecord)> = groups
        .iter()
        .flat_map(|g| g.candidates.iter().map(move |c| (g.query_row, c.source_row, &c.record)))
        .collect();
    for chunk in pairs.chunks(PUE_CHUNK) {
        let x = match spec {
            VectorizerSpec::Tfidf(t) => FeatureMatrix::Sparse(chunk.iter().map(|(_, _, r)| t.transform(r)).collect()),
            VectorizerSpec::DenseEmbedding { dim } => {
                let table = embeddings.ok_or_else(|| Error::Config("dense predictor needs embeddings".into()))?;
                if table.dim() != *dim {
                    return Err(Error::DimMismatch {
                        expected: *dim,
                        found: table.dim(),
                    });
                }
                let mut data = Vec::with_capacity(chunk.len() * dim);
                for &(q, s, _) in chunk {
                    data.extend(table.composite_row(q, s).into_iter().map(f64::from));
                }
                FeatureMatrix::Dense(Matrix::from_vec(chunk.len(), *dim, data))
            }
        };
        flat.extend_from_slice(predict_outputs(&model, &x)?.as_slice());
    }
    let mut it = flat.into_iter();
    Ok(groups
        .iter()
        .map(|g| it.by_ref().take(g.candidates.len()).collect())
        .collect())
}

fn split_digest(parts: [&[FeatureGroup]; 3]) -> String {
    let mut h = Sha256::new();
    for (name, part) in ["train", "val", "test"].iter().zip(parts) {
        h.update(name.as_bytes());
        h.update([0]);
        for g in part {
            h.update(g.query.as_bytes());
            h.update([0]);
        }
    }
    hex::encode(h.finalize())
}

fn rank_notes() -> Vec<String> {
    vec![
        "Queries are split before negative sampling; negatives come from other queries of the same split.".to_string(),
        "Relevance: negatives 0, positives with the group's maximum predicted engagement 2 (ties included), other positives 1.".to_string(),
        "All five ranker features, predicted engagement included, are standardized with training-split statistics.".to_string(),
        "NDCG is computed over the full candidate list without a cutoff.".to_string(),
        format!("Significance: two-sided paired t-test over per-query test NDCG and MRR, with vs without predictions, alpha {RANK_ALPHA}."),
        "Both arms use identical splits and the same top-level seed; `ranker.with_pue` is ignored here.".to_string(),
    ]
}

fn check_predictor(p: &ModelFile) -> Result<()> {
    let m = &p.manifest;
    if m.stage != Stage::Predictor || m.task != Some(Task::Regression) || m.mlp.output_dim != 1 {
        return Err(Error::Config(
            "the ranker needs a regression predictor model (stage predictor, one output)".into(),
        ));
    }
    Ok(())
}

fn rank_stages(cfg: &ExperimentConfig, predictor: &ModelFile, report: &mut RankReport) -> Result<()> {
    cfg.validate()?;
    check_predictor(predictor)?;
    report.completed_stages.push("validate".into());
    let path = required(&cfg.data.click_explore, "data.click_explore")?;
    let grouped = parse_click_explore(path, &cfg.data.schema)?;
    if grouped.groups.is_empty() {
        return Err(Error::EmptyDataset);
    }
    report.completed_stages.push("ingest".into());

    let (tr, va, te) = split_queries(&grouped, &cfg.preprocess.split, derive_seed(cfg.seed, SEED_RANK_SPLIT))?;
    let k = cfg.rank.negatives_per_query;
    let neg_seed = derive_seed(cfg.seed, SEED_NEGATIVES);
    let splits =
        [("train", &tr), ("val", &va), ("test", &te)].map(|(name, g)| add_negatives(g, k, derive_seed(neg_seed, name)));
    let [train_c, val_c, test_c] = splits;
    let (train_c, val_c, test_c) = (train_c?, val_c?, test_c?);
    report.groups = Some(GroupSummary {
        source: path.display().to_string(),
        n_queries: grouped.groups.len(),
        n_pairs: grouped.n_pairs(),
        negatives_per_query: k,
        split_queries: [train_c.len(), val_c.len(), test_c.len()],
    });
    report.completed_stages.push("negatives".into());

    let embeddings = match predictor.manifest.vectorizer {
        Some(VectorizerSpec::DenseEmbedding { .. }) => {
            let emb = required(&cfg.data.click_explore_embeddings, "data.click_explore_embeddings")?;
            let table = load_aligned_embeddings(emb, path)?;
            check_rows(
                &table,
                &grouped
                    .groups
                    .iter()
                    .flat_map(|g| g.rows.iter().copied())
                    .collect::<Vec<_>>(),
            )?;
            Some(table)
        }
        _ => None,
    };
    let relevance = |groups: &[CandidateGroup]| -> Result<Vec<RankGroup>> {
        let pue = predicted_engagement(predictor, groups, embeddings.as_ref())?;
        groups.iter().zip(&pue).map(|(g, p)| assign_relevance(g, p)).collect()
    };
    let (train_r, val_r, test_r) = (relevance(&train_c)?, relevance(&val_c)?, relevance(&test_c)?);
    report.completed_stages.push("predicted_engagement".into());

    let stats = fit_standardization(&train_r);
    let untrained_cfg = crate::ranker::RankerConfig {
        with_pue: true,
        ..cfg.ranker.clone()
    };
    let mut untrained = MlpModel::new(untrained_cfg.mlp(), derive_seed(cfg.seed, "ranker/init"))?;
    untrained.set_mode(Mode::Eval);
    report.untrained_ndcg = Some(evaluate_ranker(&untrained, &feature_groups(&test_r, &stats, true))?.mean_ndcg);

    let mut history = JsonLines::create(cfg.output_dir.join("history.jsonl"))?;
    let mut per_query = Vec::new();
    for with_pue in [true, false] {
        let rc = crate::ranker::RankerConfig {
            with_pue,
            ..cfg.ranker.clone()
        };
        let (ftr, fva, fte) = (
            feature_groups(&train_r, &stats, with_pue),
            feature_groups(&val_r, &stats, with_pue),
            feature_groups(&test_r, &stats, with_pue),
        );
        let (model, hist) = train_ranker(&rc, &ftr, &fva, cfg.seed)?;
        let arm = if with_pue { "with_pue" } else { "without_pue" };
        for e in &hist.epochs {
            history.push(&json!({"stage": "ranker", "arm": arm, "epoch": e}))?;
        }
        let eval = evaluate_ranker(&model, &fte)?;
        let model_file = format!("ranker_{arm}.mdl1");
        let metrics = BTreeMap::from([
            ("test_ndcg".to_string(), eval.mean_ndcg),
            ("test_mrr".to_string(), eval.mean_mrr),
        ]);
        let mut f = ModelFile::from_model(&model, Stage::Ranker, cfg.to_value(), metrics);
        f.manifest.standardization = Some(stats.clone());
        f.manifest.with_pue = Some(with_pue);
        f.save(&cfg.output_dir.join(&model_file))?;
        report.arms.push(ArmResult {
            with_pue,
            input_dim: rc.input_dim(),
            split_digest: split_digest([&ftr, &fva, &fte]),
            epochs: hist.epochs,
            test_ndcg: eval.mean_ndcg,
            test_mrr: eval.mean_mrr,
            model_file,
        });
        per_query.push(eval);
        report.completed_stages.push(format!("ranker_{arm}"));
    }
    history.finish()?;
    let (with, without) = (&per_query[0], &per_query[1]);
    report.ndcg_test = Some(Significance::new(
        "without_pue",
        &paired_ttest(&with.ndcg, &without.ndcg)?,
        RANK_ALPHA,
    ));
    report.mrr_test = Some(Significance::new(
        "without_pue",
        &paired_ttest(&with.mrr, &without.mrr)?,
        RANK_ALPHA,
    ));
    report.completed_stages.push("significance".into());
    Ok(())
}

/// Builds rank groups with predicted engagement from `predictor`, trains the
/// with- and without-prediction rankers on identical splits, and compares
/// them per test query.
pub fn run_rank_experiment(cfg: &ExperimentConfig, predictor: &ModelFile) -> Result<RankReport> {
    let mut report = RankReport {
        status: RunStatus::Ok,
        error: None,
        completed_stages: Vec::new(),
        config: cfg.to_value(),
        seeds: cfg.seeds(),
        notes: rank_notes(),
        predictor_config_hash: Some(predictor.manifest.config_hash.clone()),
        groups: None,
        untrained_ndcg: None,
        arms: Vec::new(),
        ndcg_test: None,
        mrr_test: None,
    };
    let result = create_dir(&cfg.output_dir).and_then(|_| rank_stages(cfg, predictor, &mut report));
    finish(result, report, &cfg.output_dir, RunReport::Rank, |r, e| {
        r.status = RunStatus::Failed;
        r.error = Some(e);
    })
}

/// Loads `rank.predictor_model` and runs the ranking experiment.
pub fn run_rank_experiment_from_config(cfg: &ExperimentConfig) -> Result<RankReport> {
    let path = required(&cfg.rank.predictor_model, "rank.predictor_model")?;
    let predictor = ModelFile::load(path)?;
    run_rank_experiment(cfg, &predictor)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationSummary {
    pub source: String,
    pub n: usize,
    pub task: Task,
    pub loss: f64,
    pub accuracy: Option<f64>,
}

/// Scores a saved predictor on every accepted row of a click file.
pub fn evaluate_predictor_file(
    model: &ModelFile,
    click: &Path,
    schema: &crate::ingest::ClickSchema,
    embeddings: Option<&Path>,
) -> Result<EvaluationSummary> {
    if model.manifest.stage != Stage::Predictor {
        return Err(Error::Config("evaluate expects a predictor model".into()));
    }
    let task = model.manifest.task.unwrap_or(Task::Regression);
    let d = parse_click(click, schema)?;
    let features = match &model.manifest.vectorizer {
        Some(VectorizerSpec::Tfidf(t)) => FeatureMatrix::Sparse(d.records.iter().map(|r| t.transform(r)).collect()),
        Some(VectorizerSpec::DenseEmbedding { .. }) => {
            let emb = embeddings.ok_or_else(|| Error::Config("dense predictor needs --embeddings".into()))?;
            let table = Arc::new(load_aligned_embeddings(emb, click)?);
            check_rows(&table, &d.provenance.rows)?;
            FeatureMatrix::Embedded {
                table,
                rows: d.provenance.rows.clone(),
            }
        }
        None => return Err(Error::ModelFormat("predictor file records no vectorizer".into())),
    };
    let split = LabeledSplit {
        features,
        labels: labels(&d),
    };
    let e = evaluate_predictor(&model.to_model()?, &split, task)?;
    Ok(EvaluationSummary {
        source: click.display().to_string(),
        n: split.len(),
        task,
        loss: e.loss,
        accuracy: e.accuracy,
    })
}
