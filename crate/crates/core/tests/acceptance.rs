//! Acceptance gate. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Optional full-data checks run only when `CLARIFY_RANK_FULL_CONFIG` names an
//! experiment config pointing at the real click logs; they are reported but do
//! not gate.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use clarify_rank::experiment::{
    run_predict_experiment, run_rank_experiment, ExperimentConfig, PredictReport, RankReport,
};
use clarify_rank::ingest::{parse_click_str, write_tsv, ClickRecord, ClickSchema, Impression};
use clarify_rank::linalg::{Matrix, SparseVec};
use clarify_rank::metrics::{mrr, ndcg};
use clarify_rank::model_file::{ModelFile, Stage};
use clarify_rank::nn::{ce_loss, mse_loss, Inputs, MlpConfig, MlpModel, Mode};
use clarify_rank::optim::{OptimConfig, OptimKind, Optimizer};
use clarify_rank::ranker::lambda_gradients;
use clarify_rank::stats::paired_ttest;
use clarify_rank::synth::{generate, stub_embeddings, SynthSpec};
use clarify_rank::vectorize::{read_embeddings, write_embeddings};

use common::write_records;

const FULL_CONFIG_ENV: &str = "CLARIFY_RANK_FULL_CONFIG";

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

// ---------------------------------------------------------------- gradients

struct GradCase {
    model: MlpModel,
    dense: Option<Matrix>,
    sparse: Vec<SparseVec>,
    targets: Vec<f64>,
    classes: Vec<usize>,
    regression: bool,
}

impl GradCase {
    fn inputs(&self) -> Inputs<'_> {
        match &self.dense {
            Some(m) => Inputs::Dense(m),
            None => Inputs::Sparse(&self.sparse),
        }
    }

    fn random(r: &mut ChaCha8Rng, index: usize) -> Self {
        let input_dim = r.gen_range(2..=6);
        let hidden: Vec<usize> = (0..r.gen_range(0..=3)).map(|_| r.gen_range(2..=6)).collect();
        let regression = index.is_multiple_of(2);
        let output_dim = if regression { 1 } else { r.gen_range(2..=4) };
        let mut cfg = MlpConfig::new(input_dim, hidden, output_dim);
        cfg.use_batchnorm = index % 4 < 2;
        cfg.leaky_slope = [0.02, 0.1, 0.3][index % 3];
        cfg.dropout_p = if index.is_multiple_of(5) { 0.3 } else { 0.0 };
        let mut model = MlpModel::new(cfg, r.gen()).unwrap();
        // move batch-norm affine parameters and running statistics off their
        // initial values so every term of the backward pass is exercised
        for b in &mut model.blocks {
            if let Some(bn) = &mut b.norm {
                for j in 0..bn.gamma.len() {
                    bn.gamma[j] = r.gen_range(0.5..1.5);
                    bn.beta[j] = r.gen_range(-0.5..0.5);
                    bn.running_mean[j] = r.gen_range(-0.3..0.3);
                    bn.running_var[j] = r.gen_range(0.5..2.0);
                }
            }
            for v in &mut b.linear.bias {
                *v = r.gen_range(-0.2..0.2);
            }
        }
        if index % 7 == 3 {
            model.set_mode(Mode::Eval);
        }
        let batch = r.gen_range(3..=8);
        let sparse_input = index % 3 == 1;
        let rows: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..input_dim).map(|_| r.gen_range(-2.0..2.0)).collect())
            .collect();
        let (dense, sparse) = if sparse_input {
            let sv = rows
                .iter()
                .map(|row| {
                    let entries = row
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| v.abs() > 0.7)
                        .map(|(j, &v)| (j as u32, v))
                        .collect();
                    SparseVec::new(input_dim, entries)
                })
                .collect();
            (None, sv)
        } else {
            (Some(Matrix::from_rows(&rows)), Vec::new())
        };
        Self {
            model,
            dense,
            sparse,
            targets: (0..batch).map(|_| r.gen_range(0.0..10.0)).collect(),
            classes: (0..batch).map(|_| r.gen_range(0..output_dim)).collect(),
            regression,
        }
    }

    fn loss_of(&self, m: &mut MlpModel) -> (f64, Matrix, clarify_rank::nn::ForwardCache) {
        let (y, cache) = m.forward(self.inputs()).unwrap();
        if self.regression {
            let (l, g) = mse_loss(y.as_slice(), &self.targets).unwrap();
            (l, Matrix::from_vec(y.rows(), 1, g), cache)
        } else {
            let (l, g) = ce_loss(&y, &self.classes).unwrap();
            (l, g, cache)
        }
    }
}

fn gradient_check() -> Outcome {
    const CONFIGS: usize = 120;
    // wide enough that cancellation noise stays far below zero gradients
    // (e.g. biases feeding train-mode batch-norm); Richardson extrapolation
    // removes the O(h²) truncation term
    let h = 1e-3;
    let mut r = rng(20_240_601);
    let (mut max_err, mut checked, mut skipped) = (0.0f64, 0usize, 0usize);
    let mut worst = String::new();
    for index in 0..CONFIGS {
        let case = GradCase::random(&mut r, index);
        // clones share the dropout generator state, so every forward pass
        // below draws the same mask
        let snapshot = case.model.clone();
        let mut model = snapshot.clone();
        let (_, grad_out, cache) = case.loss_of(&mut model);
        let grads = model.backward(case.inputs(), &cache, &grad_out).unwrap();
        let sizes: Vec<usize> = snapshot.parameters().iter().map(|p| p.len()).collect();
        for (t, &n) in sizes.iter().enumerate() {
            for j in 0..n {
                let eval = |delta: f64| {
                    let mut m = snapshot.clone();
                    m.parameters_mut()[t][j] += delta;
                    case.loss_of(&mut m).0
                };
                let central = |w: f64| (eval(w) - eval(-w)) / (2.0 * w);
                let (f1, f2, f4) = (central(h), central(h / 2.0), central(h / 4.0));
                let coarse = (4.0 * f2 - f1) / 3.0;
                let numeric = (4.0 * f4 - f2) / 3.0;
                // a LeakyReLU kink inside the stencil breaks the agreement of
                // the two extrapolations
                if rel_err(coarse, numeric) > 1e-5 {
                    skipped += 1;
                    continue;
                }
                let e = rel_err(grads.tensors[t][j], numeric);
                checked += 1;
                if e > max_err {
                    max_err = e;
                    worst = format!(
                        "config {index}, tensor {t}[{j}]: analytic {:.3e}, numeric {numeric:.3e}",
                        grads.tensors[t][j]
                    );
                }
            }
        }
    }
    let skip_share = skipped as f64 / (checked + skipped) as f64;
    outcome(
        max_err < 1e-4 && skip_share < 0.01,
        format!(
            "{CONFIGS} configs, {checked} coordinates, {skipped} skipped at kinks; max rel err {max_err:.2e} ({worst})"
        ),
    )
}

// ------------------------------------------------------------------ lambdas

fn lambda_check() -> Outcome {
    const GROUPS: usize = 1200;
    let h = 1e-6;
    let mut r = rng(77);
    let (mut max_err, mut max_sum) = (0.0f64, 0.0f64);
    for _ in 0..GROUPS {
        let n = r.gen_range(2..=10);
        let sigma = [0.5, 1.0, 2.0][r.gen_range(0..3)];
        let scores: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
        let rel: Vec<u8> = (0..n).map(|_| r.gen_range(0..=2)).collect();
        let set = lambda_gradients(&scores, &rel, sigma).unwrap();
        max_sum = max_sum.max(set.lambdas.iter().sum::<f64>().abs());
        for i in 0..n {
            let cost = |d: f64| {
                let mut s = scores.clone();
                s[i] += d;
                lambda_gradients(&s, &rel, sigma).unwrap().cost
            };
            let fd = (cost(h) - cost(-h)) / (2.0 * h);
            max_err = max_err.max(rel_err(set.lambdas[i], fd));
        }
    }
    outcome(
        max_err < 1e-4 && max_sum <= 1e-9,
        format!("{GROUPS} groups; max rel err {max_err:.2e}, max |Σλ| {max_sum:.1e}"),
    )
}

// ------------------------------------------------------------------ metrics

fn brute_dcg(rels: &[u8]) -> f64 {
    let mut s = 0.0;
    for (i, &r) in rels.iter().enumerate() {
        s += (2f64.powi(r as i32) - 1.0) / ((i + 2) as f64).log2();
    }
    s
}

fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

fn metric_check() -> Outcome {
    let (mut lists, mut evaluated, mut mismatches) = (0usize, 0usize, 0usize);
    let mut ideal_ok = true;
    for len in 1..=6usize {
        for code in 0..3usize.pow(len as u32) {
            let labels: Vec<u8> = (0..len).map(|k| (code / 3usize.pow(k as u32) % 3) as u8).collect();
            lists += 1;
            let perms = permutations(&labels);
            let idcg = perms.iter().map(|p| brute_dcg(p)).fold(0.0, f64::max);
            for p in &perms {
                let want_ndcg = if idcg == 0.0 { 0.0 } else { brute_dcg(p) / idcg };
                let want_mrr = p.iter().position(|&r| r > 0).map_or(0.0, |k| 1.0 / (k + 1) as f64);
                if ndcg(p).unwrap() != want_ndcg || mrr(p).unwrap() != want_mrr {
                    mismatches += 1;
                }
                evaluated += 1;
            }
            if idcg > 0.0 {
                let mut ideal = labels.clone();
                ideal.sort_unstable_by(|a, b| b.cmp(a));
                ideal_ok &= ndcg(&ideal).unwrap() == 1.0;
            }
        }
    }
    outcome(
        mismatches == 0 && ideal_ok,
        format!(
            "{lists} label lists, {evaluated} permutations, {mismatches} mismatches; ideal order = 1.0: {ideal_ok}"
        ),
    )
}

// ---------------------------------------------------------------- optimizer

/// Name, settings, initial value, gradients, expected trajectory.
type Frozen<'a> = (&'a str, OptimConfig, f64, &'a [f64], Vec<f64>);

/// Closed-form reference: moments are written as explicit weighted sums over
/// the gradient history instead of recurrences.
fn reference_trajectory(cfg: &OptimConfig, p0: f64, grads: &[f64]) -> Vec<f64> {
    let mut p = p0;
    let mut hist: Vec<f64> = Vec::new();
    let mut v_max = 0.0f64;
    let mut out = Vec::new();
    for &g in grads {
        hist.push(g + cfg.weight_decay * p);
        let t = hist.len() as i32;
        match cfg.kind {
            OptimKind::Sgd => {
                let buf: f64 = hist
                    .iter()
                    .enumerate()
                    .map(|(k, gk)| cfg.momentum.powi(t - 1 - k as i32) * gk)
                    .sum();
                p -= cfg.lr * buf;
            }
            OptimKind::Adam | OptimKind::AmsGrad => {
                let (b1, b2) = (cfg.beta1, cfg.beta2);
                let m: f64 = hist
                    .iter()
                    .enumerate()
                    .map(|(k, gk)| (1.0 - b1) * b1.powi(t - 1 - k as i32) * gk)
                    .sum();
                let v: f64 = hist
                    .iter()
                    .enumerate()
                    .map(|(k, gk)| (1.0 - b2) * b2.powi(t - 1 - k as i32) * gk * gk)
                    .sum();
                v_max = v_max.max(v);
                let second = if cfg.kind == OptimKind::AmsGrad { v_max } else { v };
                let m_hat = m / (1.0 - b1.powi(t));
                let denom = (second / (1.0 - b2.powi(t))).sqrt() + cfg.eps;
                p -= cfg.lr * m_hat / denom;
            }
        }
        out.push(p);
    }
    out
}

fn library_trajectory(cfg: &OptimConfig, p0: f64, grads: &[f64]) -> Vec<f64> {
    let mut opt = Optimizer::new(*cfg, &[1]);
    let mut p = [p0];
    grads
        .iter()
        .map(|&g| {
            opt.step(&mut [&mut p[..]], &[vec![g]]).unwrap();
            p[0]
        })
        .collect()
}

fn optimizer_check() -> Outcome {
    let base = OptimConfig::default();
    let with = |kind, wd| OptimConfig {
        kind,
        weight_decay: wd,
        ..base
    };
    let g5 = [1.0, -0.5, 2.0, 0.1, -3.0];
    let g6 = [2.0, 0.1, 0.1, 0.1, 0.1, -0.05];
    // reference trajectories recorded from a widely used tensor library
    let frozen: Vec<Frozen> = vec![
        (
            "amsgrad",
            with(OptimKind::AmsGrad, 0.0),
            0.0,
            &g5,
            vec![
                -0.0009999999900000003,
                -0.0012663370262909687,
                -0.001924448621571968,
                -0.0024883766573242285,
                -0.002344090312323835,
            ],
        ),
        (
            "sgd",
            with(OptimKind::Sgd, 0.0),
            0.0,
            &g5,
            vec![-0.001, -0.0014, -0.00376, -0.005984, -0.0049856],
        ),
        (
            "amsgrad+wd",
            with(OptimKind::AmsGrad, 1e-3),
            0.5,
            &g5,
            vec![
                0.499000000009995,
                0.49873308456285076,
                0.4980747522073879,
                0.49751052837821874,
                0.4976545216754943,
            ],
        ),
        (
            "sgd+wd",
            with(OptimKind::Sgd, 1e-3),
            0.5,
            &g5,
            vec![
                0.4989995,
                0.4985985510005,
                0.496237198302399,
                0.4940114846369098,
                0.49500784832648487,
            ],
        ),
        (
            "amsgrad max",
            with(OptimKind::AmsGrad, 0.0),
            0.0,
            &g6,
            vec![
                -0.000999999995,
                -0.0017064003706393864,
                -0.002283661861607049,
                -0.002784921881567941,
                -0.00323526725351739,
                -0.003610198569408874,
            ],
        ),
        (
            "adam",
            with(OptimKind::Adam, 0.0),
            0.0,
            &g6,
            vec![
                -0.000999999995,
                -0.0017064003706393864,
                -0.002283661861607049,
                -0.002784921881567941,
                -0.00323526725351739,
                -0.0036102695869644403,
            ],
        ),
    ];
    let mut max_err = 0.0f64;
    let mut cases = 0;
    for (_, cfg, p0, g, want) in &frozen {
        let got = library_trajectory(cfg, *p0, g);
        let scripted = reference_trajectory(cfg, *p0, g);
        for ((a, b), c) in got.iter().zip(want).zip(&scripted) {
            max_err = max_err.max((a - b).abs()).max((a - c).abs());
        }
        cases += 1;
    }
    // random single- and multi-step runs against the scripted reference
    let mut r = rng(5);
    for i in 0..300 {
        let kind = [OptimKind::Sgd, OptimKind::Adam, OptimKind::AmsGrad][i % 3];
        let cfg = OptimConfig {
            kind,
            lr: r.gen_range(1e-4..1e-1),
            momentum: r.gen_range(0.0..0.99),
            weight_decay: if i % 2 == 0 { 0.0 } else { r.gen_range(0.0..1e-2) },
            ..base
        };
        let steps = if i < 30 { 1 } else { r.gen_range(2..40) };
        let g: Vec<f64> = (0..steps).map(|_| r.gen_range(-3.0..3.0)).collect();
        let p0 = r.gen_range(-1.0..1.0);
        for (a, b) in library_trajectory(&cfg, p0, &g)
            .iter()
            .zip(reference_trajectory(&cfg, p0, &g))
        {
            max_err = max_err.max((a - b).abs());
        }
        cases += 1;
    }
    outcome(
        max_err < 1e-10,
        format!("{cases} trajectories; max abs err {max_err:.2e}"),
    )
}

// ------------------------------------------------------------------- t-test

fn sign_flip_p(d: &[f64], draws: usize, r: &mut ChaCha8Rng) -> f64 {
    let t_of = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let sd = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        m / (sd / n.sqrt())
    };
    let observed = t_of(d).abs();
    let mut flipped = d.to_vec();
    let mut hits = 0usize;
    for _ in 0..draws {
        for (f, &v) in flipped.iter_mut().zip(d) {
            *f = if r.gen::<bool>() { v } else { -v };
        }
        if t_of(&flipped).abs() >= observed - 1e-12 {
            hits += 1;
        }
    }
    hits as f64 / draws as f64
}

fn ttest_check() -> Outcome {
    let mut r = rng(31);
    let mut beta_err = 0.0f64;
    let mut fixtures = 0;
    for i in 0..400 {
        let n = r.gen_range(2..60);
        let shift = if i % 2 == 0 { 0.0 } else { r.gen_range(-1.0..1.0) };
        let a: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0) + shift).collect();
        let b: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
        let res = paired_ttest(&a, &b).unwrap();
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).unwrap();
        let want = 2.0 * (1.0 - dist.cdf(res.t_statistic.abs()));
        beta_err = beta_err.max((res.p_value - want).abs());
        fixtures += 1;
    }
    let known = paired_ttest(
        &[0.3, 1.2, -0.4, 2.2, 0.9, 1.7, 0.1],
        &[0.1, 0.8, 0.2, 1.0, 1.1, 0.4, -0.2],
    )
    .unwrap();
    let known_ok =
        (known.t_statistic - 1.4247912233130962).abs() < 1e-9 && (known.p_value - 0.20409233509442617).abs() < 1e-6;

    let mut perm_err = 0.0f64;
    for k in 0..6 {
        let n = 40;
        let shift = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5][k];
        let a: Vec<f64> = (0..n).map(|_| std_normal(&mut r) + shift).collect();
        let b: Vec<f64> = (0..n).map(|_| std_normal(&mut r)).collect();
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let p = paired_ttest(&a, &b).unwrap().p_value;
        perm_err = perm_err.max((p - sign_flip_p(&d, 200_000, &mut r)).abs());
    }
    outcome(
        beta_err < 1e-6 && known_ok && perm_err < 0.02,
        format!(
            "{fixtures} fixtures vs reference CDF, max |Δp| {beta_err:.1e}; recorded fixture ok: {known_ok}; \
             6 Gaussian fixtures vs 200k sign flips, max |Δp| {perm_err:.4}"
        ),
    )
}

/// Box–Muller standard normal.
fn std_normal(r: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = r.gen_range(f64::EPSILON..1.0);
    let u2: f64 = r.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

// ------------------------------------------------------------- experiments

fn base_config(dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        output_dir: dir.join("out"),
        ..Default::default()
    }
}

fn mean_row(r: &PredictReport) -> Option<(f64, f64, f64, f64)> {
    let t = r.tasks.first()?;
    let m = t.baselines.iter().find(|b| b.name == "Mean")?;
    Some((t.test_loss, m.loss, m.test.p_value, m.test.mean_diff))
}

fn rq1_check() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec {
        n_queries: 9000,
        ..Default::default()
    };
    let mut cfg = base_config(dir.path());
    cfg.data.click = Some(write_records(dir.path(), "click.tsv", &generate(&spec, 101)));
    let r = match run_predict_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let rows = r.data.as_ref().and_then(|d| d.stages.last()).map_or(0, |s| s.n_rows);
    let Some((model, mean, p, diff)) = mean_row(&r) else {
        return outcome(false, "no mean baseline in report");
    };
    outcome(
        rows >= 5000 && model < mean && diff < 0.0 && p < 0.05,
        format!("{rows} balanced rows; test MSE {model:.3} vs mean baseline {mean:.3}, p = {p:.2e}"),
    )
}

fn rank_run(dir: &Path, click_rows: usize, explore_queries: usize) -> Result<RankReport, String> {
    let mut cfg = base_config(dir);
    cfg.predictor.epochs = 20;
    cfg.predictor.hidden = vec![64, 16];
    let spec = SynthSpec {
        n_queries: click_rows,
        ..Default::default()
    };
    cfg.data.click = Some(write_records(dir, "click.tsv", &generate(&spec, 202)));
    let pr = run_predict_experiment(&cfg).map_err(|e| e.to_string())?;
    let predictor = ModelFile::load(&cfg.output_dir.join(&pr.tasks[0].model_file)).map_err(|e| e.to_string())?;
    let spec = SynthSpec {
        n_queries: explore_queries,
        min_cps: 1,
        max_cps: 5,
        ..Default::default()
    };
    cfg.data.click_explore = Some(write_records(dir, "explore.tsv", &generate(&spec, 303)));
    cfg.output_dir = dir.join("rank");
    run_rank_experiment(&cfg, &predictor).map_err(|e| e.to_string())
}

fn rq3_check() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let r = match rank_run(dir.path(), 3000, 3600) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let (Some(t), [with, without]) = (&r.ndcg_test, &r.arms[..]) else {
        return outcome(false, "report lacks both arms");
    };
    outcome(
        t.n >= 500 && with.test_ndcg > without.test_ndcg && t.mean_diff > 0.0 && t.p_value < 0.05,
        format!(
            "{} test queries; NDCG {:.3} with vs {:.3} without, p = {:.2e}; MRR {:.3} vs {:.3}",
            t.n, with.test_ndcg, without.test_ndcg, t.p_value, with.test_mrr, without.test_mrr
        ),
    )
}

fn determinism_check() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let read = |p: &Path| fs::read(p.join("out/report.json")).unwrap();
    let read_rank = |p: &Path| fs::read(p.join("rank/report.json")).unwrap();
    let mut cfg = common::quick_config(dir.path());
    cfg.data.click = Some(common::click_log(dir.path(), 800, 9));
    cfg.compare_tasks = true;
    let predicts: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            run_predict_experiment(&cfg).unwrap();
            read(dir.path())
        })
        .collect();
    let ranks: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            rank_run(dir.path(), 600, 200).unwrap();
            read_rank(dir.path())
        })
        .collect();
    let p_same = predicts[0] == predicts[1];
    let r_same = ranks[0] == ranks[1];
    outcome(
        p_same && r_same,
        format!(
            "prediction report identical: {p_same} ({} bytes); ranking report identical: {r_same} ({} bytes)",
            predicts[0].len(),
            ranks[0].len()
        ),
    )
}

fn format_check() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec {
        n_queries: 40,
        min_cps: 1,
        max_cps: 3,
        ..Default::default()
    };
    let mut records = generate(&spec, 4);
    records.push(ClickRecord {
        query: "edge case".into(),
        question: "what about \"quotes\" and ünïcode?".into(),
        answers: vec!["only one".into()],
        impression: Impression::Medium,
        engagement: 10,
    });

    let emb = stub_embeddings(&records, 8).unwrap();
    let e1 = dir.path().join("a.emb1");
    write_embeddings(&e1, &emb).unwrap();
    let bytes1 = fs::read(&e1).unwrap();
    let back = read_embeddings(&bytes1, Some(emb.dim())).unwrap();
    let e2 = dir.path().join("b.emb1");
    write_embeddings(&e2, &back).unwrap();
    let emb_ok = bytes1 == fs::read(&e2).unwrap();

    let model = MlpModel::new(MlpConfig::new(7, vec![5, 3], 2), 3).unwrap();
    let mut metrics = BTreeMap::new();
    metrics.insert("val_loss".to_string(), 0.125);
    let f = ModelFile::from_model(&model, Stage::Predictor, serde_json::json!({"seed": 1}), metrics);
    let m1 = dir.path().join("a.mdl1");
    f.save(&m1).unwrap();
    let loaded = ModelFile::load(&m1).unwrap();
    let m2 = dir.path().join("b.mdl1");
    loaded.save(&m2).unwrap();
    let mdl_ok = fs::read(&m1).unwrap() == fs::read(&m2).unwrap()
        && loaded.to_model().unwrap().n_parameters() == model.n_parameters();

    let schema = ClickSchema::default();
    let mut text = Vec::new();
    write_tsv(&mut text, &records, &schema).unwrap();
    let text = String::from_utf8(text).unwrap();
    let first = parse_click_str(&text, Path::new("a.tsv"), &schema).unwrap();
    let mut again = Vec::new();
    write_tsv(&mut again, &first.records, &schema).unwrap();
    let second = parse_click_str(&String::from_utf8(again).unwrap(), Path::new("b.tsv"), &schema).unwrap();
    let tsv_ok = first.records == second.records && first.records == records;

    outcome(
        emb_ok && mdl_ok && tsv_ok,
        format!(
            "EMB1 {}x{} byte-identical: {emb_ok}; MDL1 byte-identical: {mdl_ok}; TSV {} rows field-identical: {tsv_ok}",
            emb.n_rows(),
            emb.dim(),
            records.len()
        ),
    )
}

// ------------------------------------------------------------- full scale

fn full_scale() -> Option<Vec<(String, Outcome)>> {
    let path = std::env::var_os(FULL_CONFIG_ENV)?;
    let cfg = match ExperimentConfig::load(Path::new(&path)) {
        Ok(c) => c.resolved(),
        Err(e) => return Some(vec![("full-scale config".into(), outcome(false, e.to_string()))]),
    };
    let mut out = Vec::new();
    let pr = run_predict_experiment(&cfg);
    let predictor = match &pr {
        Ok(r) => {
            let (model, mean, p, _) = mean_row(r).unwrap_or((f64::NAN, f64::NAN, 1.0, 0.0));
            out.push((
                "full-scale prediction (model vs mean, 5.351 ± 0.4)".into(),
                outcome(
                    model < mean && p < 0.05 && (model - 5.351).abs() <= 0.4,
                    format!("test MSE {model:.3}, mean baseline {mean:.3}, p = {p:.2e}"),
                ),
            ));
            ModelFile::load(&cfg.output_dir.join(&r.tasks[0].model_file)).ok()
        }
        Err(e) => {
            out.push(("full-scale prediction".into(), outcome(false, e.to_string())));
            None
        }
    };
    if let (Some(predictor), Some(_)) = (predictor, &cfg.data.click_explore) {
        let mut rc = cfg.clone();
        rc.output_dir = cfg.output_dir.join("rank");
        let o = match run_rank_experiment(&rc, &predictor) {
            Ok(r) if r.arms.len() == 2 => {
                let (w, wo) = (&r.arms[0], &r.arms[1]);
                let close = |a: f64, b: f64| (a - b).abs() <= 0.03;
                outcome(
                    close(w.test_ndcg, 0.620)
                        && close(wo.test_ndcg, 0.611)
                        && close(w.test_mrr, 0.620)
                        && close(wo.test_mrr, 0.607),
                    format!(
                        "NDCG {:.3}/{:.3}, MRR {:.3}/{:.3} (with/without)",
                        w.test_ndcg, wo.test_ndcg, w.test_mrr, wo.test_mrr
                    ),
                )
            }
            Ok(_) => outcome(false, "ranking report lacks both arms"),
            Err(e) => outcome(false, e.to_string()),
        };
        out.push(("full-scale ranking (±0.03)".into(), o));
    }
    Some(out)
}

// ------------------------------------------------------------------ driver

fn run(name: &str, limit: Option<Duration>, f: fn() -> Outcome) -> bool {
    let start = Instant::now();
    let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        outcome(false, format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let pass = o.pass && in_time;
    let budget = limit.map_or(String::new(), |l| format!(" / limit {}s", l.as_secs()));
    println!(
        "{} {name}: {} [{:.1}s{budget}]",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64()
    );
    pass
}

type Check = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() -> ExitCode {
    let minute = Duration::from_secs(60);
    let checks: [Check; 9] = [
        ("gradient correctness", Some(minute), gradient_check),
        ("lambda correctness", None, lambda_check),
        ("metric oracles", None, metric_check),
        ("optimizer oracle", None, optimizer_check),
        ("t-test oracle", None, ttest_check),
        (
            "prediction beats mean baseline (desk scale)",
            Some(5 * minute),
            rq1_check,
        ),
        (
            "predicted engagement improves ranking (desk scale)",
            Some(5 * minute),
            rq3_check,
        ),
        ("determinism", None, determinism_check),
        ("format round-trips", None, format_check),
    ];
    let mut failed = 0;
    for (name, limit, f) in checks {
        if !run(name, limit, f) {
            failed += 1;
        }
    }
    match full_scale() {
        None => {
            println!("SKIP full-scale checks: set {FULL_CONFIG_ENV} to an experiment config with the real click logs")
        }
        Some(rows) => {
            for (name, o) in rows {
                println!(
                    "{} {name} (informational): {}",
                    if o.pass { "PASS" } else { "FAIL" },
                    o.detail
                );
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        checks.len() - failed,
        checks.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
