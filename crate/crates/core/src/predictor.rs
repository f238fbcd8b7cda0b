//! Engagement regression/classification with best-validation checkpointing,
//! and the constant-prediction baselines it is compared against.

use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SparseVec};
use crate::nn::{ce_loss, ce_per_sample, mse_loss, mse_per_sample, Inputs, MlpConfig, MlpModel, Mode};
use crate::optim::{OptimConfig, Optimizer};
use crate::seed;
use crate::vectorize::EmbeddingMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorConfig {
    pub task: Task,
    pub n_classes: usize,
    pub epochs: usize,
    pub batch_size: usize,
    /// Validation frequency, in training batches.
    pub eval_every: usize,
    pub hidden: Vec<usize>,
    pub leaky_slope: f64,
    pub use_batchnorm: bool,
    pub dropout_p: f64,
    pub optim: OptimConfig,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            task: Task::Regression,
            n_classes: 11,
            epochs: 40,
            batch_size: 64,
            eval_every: 100,
            hidden: vec![300, 32],
            leaky_slope: 0.02,
            use_batchnorm: true,
            dropout_p: 0.0,
            optim: OptimConfig::amsgrad(1e-3, 0.0),
        }
    }
}

impl PredictorConfig {
    pub fn output_dim(&self) -> usize {
        match self.task {
            Task::Regression => 1,
            Task::Classification => self.n_classes,
        }
    }

    pub fn mlp(&self, input_dim: usize) -> MlpConfig {
        MlpConfig {
            input_dim,
            hidden: self.hidden.clone(),
            output_dim: self.output_dim(),
            leaky_slope: self.leaky_slope,
            use_batchnorm: self.use_batchnorm,
            dropout_p: self.dropout_p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.task == Task::Classification && !(self.n_classes == 2 || self.n_classes == 11) {
            return Err(Error::Config(format!(
                "n_classes must be 2 or 11, got {}",
                self.n_classes
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.eval_every == 0 {
            return Err(Error::Config(
                "epochs, batch_size and eval_every must be positive".into(),
            ));
        }
        self.optim.validate()
    }
}

/// Row features for one split.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMatrix {
    Dense(Matrix),
    Sparse(Vec<SparseVec>),
    /// Rows of a shared 32-bit embedding table, widened to f64 only when a
    /// batch is gathered.
    Embedded {
        table: Arc<EmbeddingMatrix>,
        rows: Vec<usize>,
    },
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        match self {
            FeatureMatrix::Dense(m) => m.rows(),
            FeatureMatrix::Sparse(v) => v.len(),
            FeatureMatrix::Embedded { rows, .. } => rows.len(),
        }
    }

    pub fn width(&self) -> Option<usize> {
        match self {
            FeatureMatrix::Dense(m) => Some(m.cols()),
            FeatureMatrix::Sparse(v) => v.first().map(SparseVec::dims),
            FeatureMatrix::Embedded { table, .. } => Some(table.dim()),
        }
    }

    /// Selected rows as a dense or sparse matrix.
    pub fn gather(&self, idx: &[usize]) -> FeatureMatrix {
        match self {
            FeatureMatrix::Dense(m) => FeatureMatrix::Dense(m.select_rows(idx)),
            FeatureMatrix::Sparse(v) => FeatureMatrix::Sparse(idx.iter().map(|&i| v[i].clone()).collect()),
            FeatureMatrix::Embedded { table, rows } => {
                let mut data = Vec::with_capacity(idx.len() * table.dim());
                for &i in idx {
                    data.extend(table.row(rows[i]).iter().map(|&v| v as f64));
                }
                FeatureMatrix::Dense(Matrix::from_vec(idx.len(), table.dim(), data))
            }
        }
    }

    fn range(&self, lo: usize, hi: usize) -> FeatureMatrix {
        self.gather(&(lo..hi).collect::<Vec<_>>())
    }

    /// Borrowed network input; embedded rows must be gathered first.
    pub fn inputs(&self) -> Result<Inputs<'_>> {
        match self {
            FeatureMatrix::Dense(m) => Ok(Inputs::Dense(m)),
            FeatureMatrix::Sparse(v) => Ok(Inputs::Sparse(v)),
            FeatureMatrix::Embedded { .. } => {
                Err(Error::ShapeMismatch("embedded rows must be gathered before use".into()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSplit {
    pub features: FeatureMatrix,
    pub labels: Vec<u8>,
}

impl LabeledSplit {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub global_batch: u64,
    pub epoch: usize,
    /// Mean training loss over batches since the previous evaluation point.
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestCheckpoint {
    pub loss: f64,
    /// Global batch index at which the parameters were saved.
    pub checkpoint: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub points: Vec<EvalPoint>,
    pub best_val: BestCheckpoint,
    pub total_batches: u64,
    /// Validation loss of the parameters after the last batch.
    pub final_val_loss: f64,
}

fn loss_and_grad(task: Task, out: &Matrix, labels: &[u8]) -> Result<(f64, Matrix)> {
    match task {
        Task::Regression => {
            let target: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
            let (loss, g) = mse_loss(out.as_slice(), &target)?;
            Ok((loss, Matrix::from_vec(out.rows(), 1, g)))
        }
        Task::Classification => {
            let classes: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
            ce_loss(out, &classes)
        }
    }
}

fn check_split(name: &'static str, s: &LabeledSplit, width: Option<usize>) -> Result<usize> {
    if s.is_empty() {
        return Err(Error::EmptySplit(name));
    }
    if s.features.rows() != s.labels.len() {
        return Err(Error::LengthMismatch {
            left: s.features.rows(),
            right: s.labels.len(),
        });
    }
    let w = s.features.width().unwrap_or(0);
    if let Some(expected) = width {
        if w != expected {
            return Err(Error::WidthMismatch { expected, found: w });
        }
    }
    Ok(w)
}

pub fn train_predictor(
    cfg: &PredictorConfig,
    train: &LabeledSplit,
    val: &LabeledSplit,
    seed: u64,
) -> Result<(MlpModel, TrainHistory)> {
    train_predictor_with(cfg, train, val, seed, |_, _| Ok(()))
}

/// Trains with shuffled epochs of full batches (the trailing partial batch is
/// dropped), validating every `eval_every` batches and after the final batch.
/// Returns the parameters with the lowest validation loss; `on_checkpoint` is
/// called each time a new best is recorded.
pub fn train_predictor_with<F>(
    cfg: &PredictorConfig,
    train: &LabeledSplit,
    val: &LabeledSplit,
    seed: u64,
    mut on_checkpoint: F,
) -> Result<(MlpModel, TrainHistory)>
where
    F: FnMut(&MlpModel, u64) -> Result<()>,
{
    cfg.validate()?;
    let width = check_split("train", train, None)?;
    check_split("val", val, Some(width))?;
    if train.len() < cfg.batch_size {
        return Err(Error::DatasetTooSmall {
            needed: cfg.batch_size,
            got: train.len(),
        });
    }
    if cfg.task == Task::Classification {
        if let Some(&bad) = train
            .labels
            .iter()
            .chain(&val.labels)
            .find(|&&l| l as usize >= cfg.n_classes)
        {
            return Err(Error::IndexOutOfRange {
                index: bad as usize,
                bound: cfg.n_classes,
            });
        }
    }

    let mut model = MlpModel::new(cfg.mlp(width), seed::derive_seed(seed, "predictor/init"))?;
    let sizes: Vec<usize> = model.parameters().iter().map(|p| p.len()).collect();
    let mut opt = Optimizer::new(cfg.optim, &sizes);
    let mut rng = seed::rng(seed::derive_seed(seed, "predictor/shuffle"));
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut points = Vec::new();
    let mut best: Option<(f64, u64, MlpModel)> = None;
    let mut global: u64 = 0;
    let (mut loss_sum, mut loss_count) = (0.0, 0usize);

    let mut record =
        |model: &mut MlpModel, global: u64, epoch: usize, loss_sum: &mut f64, loss_count: &mut usize| -> Result<f64> {
            model.set_mode(Mode::Eval);
            let val_loss = evaluate_predictor(model, val, cfg.task)?.loss;
            model.set_mode(Mode::Train);
            points.push(EvalPoint {
                global_batch: global,
                epoch,
                train_loss: *loss_sum / (*loss_count).max(1) as f64,
                val_loss,
            });
            *loss_sum = 0.0;
            *loss_count = 0;
            if best.as_ref().is_none_or(|(b, _, _)| val_loss < *b) {
                on_checkpoint(model, global)?;
                best = Some((val_loss, global, model.clone()));
            }
            Ok(val_loss)
        };

    let mut last_val = f64::NAN;
    let mut last_epoch = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks_exact(cfg.batch_size) {
            let x = train.features.gather(chunk);
            let labels: Vec<u8> = chunk.iter().map(|&i| train.labels[i]).collect();
            model.set_mode(Mode::Train);
            let (out, cache) = model.forward(x.inputs()?)?;
            let (loss, grad) = loss_and_grad(cfg.task, &out, &labels)?;
            let grads = model.backward(x.inputs()?, &cache, &grad)?;
            opt.step(&mut model.parameters_mut(), &grads.tensors)?;
            global += 1;
            loss_sum += loss;
            loss_count += 1;
            if global.is_multiple_of(cfg.eval_every as u64) {
                last_val = record(&mut model, global, epoch, &mut loss_sum, &mut loss_count)?;
            }
        }
        last_epoch = epoch;
    }
    if !global.is_multiple_of(cfg.eval_every as u64) {
        last_val = record(&mut model, global, last_epoch, &mut loss_sum, &mut loss_count)?;
    }
    let (best_loss, checkpoint, mut best_model) = best.expect("at least one evaluation point");
    best_model.set_mode(Mode::Eval);
    let history = TrainHistory {
        points,
        best_val: BestCheckpoint {
            loss: best_loss,
            checkpoint,
        },
        total_batches: global,
        final_val_loss: last_val,
    };
    Ok((best_model, history))
}

/// Scores a split; regression additionally reports predictions rounded and
/// clamped to the class range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub per_sample: Vec<f64>,
    pub accuracy: Option<f64>,
    /// Raw regression outputs (empty for classification).
    pub predictions: Vec<f64>,
    pub predicted_classes: Vec<usize>,
}

const EVAL_CHUNK: usize = 512;

pub fn round_to_class(pred: f64, n_classes: usize) -> usize {
    pred.round().clamp(0.0, (n_classes - 1) as f64) as usize
}

/// Raw model outputs for every row, computed in Eval mode.
pub fn predict_outputs(model: &MlpModel, features: &FeatureMatrix) -> Result<Matrix> {
    let n = features.rows();
    let out_dim = model.config().output_dim;
    let mut data = Vec::with_capacity(n * out_dim);
    let mut lo = 0;
    while lo < n {
        let hi = (lo + EVAL_CHUNK).min(n);
        let chunk = features.range(lo, hi);
        data.extend_from_slice(model.predict(chunk.inputs()?)?.as_slice());
        lo = hi;
    }
    Ok(Matrix::from_vec(n, out_dim, data))
}

pub fn evaluate_predictor(model: &MlpModel, split: &LabeledSplit, task: Task) -> Result<Evaluation> {
    if let Some(found) = split.features.width() {
        let expected = model.config().input_dim;
        if found != expected {
            return Err(Error::WidthMismatch { expected, found });
        }
    }
    let out = predict_outputs(model, &split.features)?;
    let n = split.len();
    let n_classes = match task {
        Task::Regression => crate::ingest::N_LEVELS,
        Task::Classification => out.cols(),
    };
    let (per_sample, predictions, predicted_classes) = match task {
        Task::Regression => {
            let target: Vec<f64> = split.labels.iter().map(|&l| l as f64).collect();
            let preds = out.as_slice().to_vec();
            let classes: Vec<usize> = preds.iter().map(|&p| round_to_class(p, n_classes)).collect();
            (mse_per_sample(&preds, &target), preds, classes)
        }
        Task::Classification => {
            let classes: Vec<usize> = split.labels.iter().map(|&l| l as usize).collect();
            let per = ce_per_sample(&out, &classes)?;
            let argmax = (0..n)
                .map(|i| {
                    let row = out.row(i);
                    (0..row.len()).fold(0, |b, j| if row[j] > row[b] { j } else { b })
                })
                .collect();
            (per, Vec::new(), argmax)
        }
    };
    let loss = per_sample.iter().sum::<f64>() / n.max(1) as f64;
    let accuracy = (task == Task::Classification && n > 0).then(|| {
        predicted_classes
            .iter()
            .zip(&split.labels)
            .filter(|(p, &l)| **p == l as usize)
            .count() as f64
            / n as f64
    });
    Ok(Evaluation {
        loss,
        per_sample,
        accuracy,
        predictions,
        predicted_classes,
    })
}

/// A constant regression prediction and its test losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantBaseline {
    pub value: f64,
    pub mse: f64,
    pub per_sample: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBaseline {
    pub ce: f64,
    pub accuracy: f64,
    pub per_sample: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub mean: Option<ConstantBaseline>,
    pub median: Option<ConstantBaseline>,
    pub mode: Option<ConstantBaseline>,
    /// Most frequent training class as a smoothed one-hot prediction.
    pub constant_class: Option<ClassBaseline>,
    pub constant_class_label: Option<usize>,
    /// Empirical training class frequencies used as the predicted distribution.
    pub class_prior: Option<ClassBaseline>,
    /// Expected loss of uniformly random guessing.
    pub uniform_random: Option<ClassBaseline>,
}

/// Smoothing mass for classes a constant classifier never predicts.
pub const CONSTANT_CLASS_EPS: f64 = 1e-12;

fn median(labels: &[u8]) -> f64 {
    let mut v: Vec<u8> = labels.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] as f64 + v[n / 2] as f64) / 2.0
    }
}

/// Most frequent label; ties go to the smallest.
fn mode(labels: &[u8], n_classes: usize) -> usize {
    let mut counts = vec![0usize; n_classes.max(1 + *labels.iter().max().unwrap_or(&0) as usize)];
    for &l in labels {
        counts[l as usize] += 1;
    }
    (0..counts.len()).fold(0, |b, c| if counts[c] > counts[b] { c } else { b })
}

fn constant(value: f64, test: &[u8]) -> ConstantBaseline {
    let per_sample: Vec<f64> = test.iter().map(|&t| (value - t as f64).powi(2)).collect();
    ConstantBaseline {
        value,
        mse: per_sample.iter().sum::<f64>() / test.len() as f64,
        per_sample,
    }
}

fn class_baseline(probs: &[f64], test: &[u8], hit: impl Fn(usize) -> f64) -> ClassBaseline {
    let per_sample: Vec<f64> = test.iter().map(|&t| -probs[t as usize].ln()).collect();
    let n = test.len() as f64;
    ClassBaseline {
        ce: per_sample.iter().sum::<f64>() / n,
        accuracy: test.iter().map(|&t| hit(t as usize)).sum::<f64>() / n,
        per_sample,
    }
}

pub fn baselines(train_labels: &[u8], test_labels: &[u8], task: Task, n_classes: usize) -> Result<BaselineReport> {
    if train_labels.is_empty() || test_labels.is_empty() {
        return Err(Error::EmptyLabels);
    }
    match task {
        Task::Regression => {
            let mean = train_labels.iter().map(|&l| l as f64).sum::<f64>() / train_labels.len() as f64;
            Ok(BaselineReport {
                mean: Some(constant(mean, test_labels)),
                median: Some(constant(median(train_labels), test_labels)),
                mode: Some(constant(mode(train_labels, n_classes) as f64, test_labels)),
                constant_class: None,
                constant_class_label: None,
                class_prior: None,
                uniform_random: None,
            })
        }
        Task::Classification => {
            if let Some(&bad) = train_labels
                .iter()
                .chain(test_labels)
                .find(|&&l| l as usize >= n_classes)
            {
                return Err(Error::IndexOutOfRange {
                    index: bad as usize,
                    bound: n_classes,
                });
            }
            let k = n_classes;
            let c = mode(train_labels, k);
            let mut one_hot = vec![CONSTANT_CLASS_EPS; k];
            one_hot[c] = 1.0 - (k - 1) as f64 * CONSTANT_CLASS_EPS;
            let mut freq = vec![0.0; k];
            for &l in train_labels {
                freq[l as usize] += 1.0;
            }
            let total = train_labels.len() as f64;
            let prior: Vec<f64> = freq.iter().map(|f| (f / total).max(CONSTANT_CLASS_EPS)).collect();
            let prior_argmax = c;
            let uniform = vec![1.0 / k as f64; k];
            Ok(BaselineReport {
                mean: None,
                median: None,
                mode: None,
                constant_class: Some(class_baseline(&one_hot, test_labels, |t| f64::from(u8::from(t == c)))),
                constant_class_label: Some(c),
                class_prior: Some(class_baseline(&prior, test_labels, |t| {
                    f64::from(u8::from(t == prior_argmax))
                })),
                uniform_random: Some(class_baseline(&uniform, test_labels, |_| 1.0 / k as f64)),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;

    #[test]
    fn embedded_rows_gather_to_dense() {
        let table = EmbeddingMatrix::new(3, 2, vec![0.5, 1.0, -2.0, 0.25, 3.0, 4.0]).unwrap();
        let f = FeatureMatrix::Embedded {
            table: Arc::new(table),
            rows: vec![2, 0],
        };
        assert_eq!(f.rows(), 2);
        assert_eq!(f.width(), Some(2));
        assert!(f.inputs().is_err());
        let g = f.gather(&[1, 0, 1]);
        assert_eq!(
            g,
            FeatureMatrix::Dense(Matrix::from_rows(&[vec![0.5, 1.0], vec![3.0, 4.0], vec![0.5, 1.0]]))
        );
    }

    #[test]
    fn rounding_rule() {
        assert_eq!(round_to_class(3.6, 11), 4);
        assert_eq!(round_to_class(-0.3, 11), 0);
        assert_eq!(round_to_class(14.2, 11), 10);
        assert_eq!(round_to_class(0.7, 2), 1);
    }

    #[test]
    fn constant_labels_give_zero_baselines() {
        let r = baselines(&[4, 4, 4], &[4, 4], Task::Regression, 11).unwrap();
        assert_eq!(r.mean.unwrap().mse, 0.0);
        assert_eq!(r.median.unwrap().mse, 0.0);
        assert_eq!(r.mode.unwrap().mse, 0.0);
    }

    #[test]
    fn mean_baseline_identity() {
        let mut rng = seed::rng(3);
        let train: Vec<u8> = (0..200).map(|_| rng.gen_range(0..11)).collect();
        let test: Vec<u8> = (0..77).map(|_| rng.gen_range(0..11)).collect();
        let r = baselines(&train, &test, Task::Regression, 11).unwrap();
        let mt = train.iter().map(|&l| l as f64).sum::<f64>() / 200.0;
        let ms = test.iter().map(|&l| l as f64).sum::<f64>() / 77.0;
        let var = test.iter().map(|&l| (l as f64 - ms).powi(2)).sum::<f64>() / 77.0;
        assert!((r.mean.unwrap().mse - (var + (mt - ms).powi(2))).abs() < 1e-9);
    }

    #[test]
    fn balanced_binary_random_baseline() {
        let r = baselines(&[0, 1, 0, 1], &[1, 0], Task::Classification, 2).unwrap();
        let u = r.uniform_random.unwrap();
        assert!((u.accuracy - 0.5).abs() < 1e-15);
        assert!((u.ce - 2f64.ln()).abs() < 1e-15);
        assert_eq!(r.constant_class_label, Some(0));
        let c = r.constant_class.unwrap();
        assert_eq!(c.accuracy, 0.5);
        assert!((c.per_sample[0] + CONSTANT_CLASS_EPS.ln()).abs() < 1e-9);
        let p = r.class_prior.unwrap();
        assert!((p.ce - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn median_and_mode() {
        assert_eq!(median(&[1, 3, 2, 10]), 2.5);
        assert_eq!(median(&[5, 0, 1]), 1.0);
        assert_eq!(mode(&[2, 3, 3, 2, 7], 11), 2);
        assert!(baselines(&[], &[1], Task::Regression, 11).is_err());
    }

    fn synthetic(n: usize, seed_: u64) -> LabeledSplit {
        let mut rng = seed::rng(seed_);
        let mut data = Vec::with_capacity(n * 4);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let l: u8 = rng.gen_range(0..11);
            data.push(l as f64 / 10.0 + rng.gen_range(-0.05..0.05));
            for _ in 0..3 {
                data.push(rng.gen_range(-1.0..1.0));
            }
            labels.push(l);
        }
        LabeledSplit {
            features: FeatureMatrix::Dense(Matrix::from_vec(n, 4, data)),
            labels,
        }
    }

    fn small_cfg(task: Task) -> PredictorConfig {
        PredictorConfig {
            task,
            epochs: 8,
            eval_every: 10,
            hidden: vec![16, 8],
            optim: OptimConfig::amsgrad(1e-2, 0.0),
            ..Default::default()
        }
    }

    #[test]
    fn training_reduces_loss_and_keeps_best() {
        let (train, val) = (synthetic(512, 1), synthetic(128, 2));
        for task in [Task::Regression, Task::Classification] {
            let cfg = small_cfg(task);
            let (model, h) = train_predictor(&cfg, &train, &val, 7).unwrap();
            assert_eq!(h.total_batches, 8 * 8);
            assert!(h.points.last().unwrap().train_loss < h.points[0].train_loss);
            let min = h.points.iter().map(|p| p.val_loss).fold(f64::INFINITY, f64::min);
            assert_eq!(h.best_val.loss, min);
            assert!(h.best_val.loss <= h.final_val_loss);
            let ev = evaluate_predictor(&model, &val, task).unwrap();
            assert!((ev.loss - h.best_val.loss).abs() < 1e-12);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (train, val) = (synthetic(256, 1), synthetic(64, 2));
        let cfg = small_cfg(Task::Regression);
        let (m1, h1) = train_predictor(&cfg, &train, &val, 3).unwrap();
        let (m2, h2) = train_predictor(&cfg, &train, &val, 3).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(m1, m2);
    }

    #[test]
    fn uniform_classifier_scores_ln_k() {
        let cfg = PredictorConfig {
            task: Task::Classification,
            hidden: vec![4],
            ..Default::default()
        };
        let mut model = MlpModel::new(cfg.mlp(4), 0).unwrap();
        for p in model.parameters_mut() {
            p.iter_mut().for_each(|v| *v = 0.0);
        }
        let ev = evaluate_predictor(&model, &synthetic(20, 5), Task::Classification).unwrap();
        assert!((ev.loss - 11f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn width_and_size_errors() {
        let cfg = small_cfg(Task::Regression);
        let train = synthetic(100, 1);
        let mut val = synthetic(10, 2);
        val.features = FeatureMatrix::Dense(Matrix::zeros(10, 3));
        assert!(matches!(
            train_predictor(&cfg, &train, &val, 0),
            Err(Error::WidthMismatch { expected: 4, found: 3 })
        ));
        assert!(matches!(
            train_predictor(&cfg, &synthetic(10, 1), &synthetic(10, 2), 0),
            Err(Error::DatasetTooSmall { .. })
        ));
        let empty = LabeledSplit {
            features: FeatureMatrix::Sparse(vec![]),
            labels: vec![],
        };
        assert!(matches!(
            train_predictor(&cfg, &empty, &val, 0),
            Err(Error::EmptySplit("train"))
        ));
    }
}
