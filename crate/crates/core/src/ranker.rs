//! Factorized ("sped-up") RankNet over per-query candidate groups.
//!
//! Each group is scored in one forward pass; the pairwise logistic cost over
//! all preference pairs is folded into one lambda per candidate, which is
//! fed back as the output gradient.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::{mrr, ndcg};
use crate::nn::{Inputs, MlpConfig, MlpModel, Mode};
use crate::optim::{OptimConfig, Optimizer};
use crate::preprocess::RankGroup;
use crate::seed;
use crate::vectorize::{raw_ranker_features, StandardizationStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankerConfig {
    pub with_pue: bool,
    pub epochs: usize,
    pub hidden: Vec<usize>,
    pub leaky_slope: f64,
    pub use_batchnorm: bool,
    pub optim: OptimConfig,
    pub sigma: f64,
}

impl Default for RankerConfig {
    fn default() -> Self {
        Self {
            with_pue: true,
            epochs: 5,
            hidden: vec![32, 16],
            leaky_slope: 0.02,
            use_batchnorm: true,
            optim: OptimConfig::amsgrad(1e-3, 1e-3),
            sigma: 1.0,
        }
    }
}

impl RankerConfig {
    pub fn input_dim(&self) -> usize {
        if self.with_pue {
            5
        } else {
            4
        }
    }

    pub fn mlp(&self) -> MlpConfig {
        MlpConfig {
            input_dim: self.input_dim(),
            hidden: self.hidden.clone(),
            output_dim: 1,
            leaky_slope: self.leaky_slope,
            use_batchnorm: self.use_batchnorm,
            dropout_p: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSet {
    /// `∂C/∂s_i` for every candidate.
    pub lambdas: Vec<f64>,
    /// Pairwise logistic cost `C`.
    pub cost: f64,
    pub n_pairs: usize,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Accumulates `λ_pair = −σ / (1 + exp(σ(s_i − s_j)))` over every pair with
/// `rel_i > rel_j`, adding it to `λ_i` and subtracting it from `λ_j`.
pub fn lambda_gradients(scores: &[f64], relevance: &[u8], sigma: f64) -> Result<LambdaSet> {
    if scores.len() != relevance.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: relevance.len(),
        });
    }
    let n = scores.len();
    let mut lambdas = vec![0.0; n];
    let mut cost = 0.0;
    let mut n_pairs = 0;
    for i in 0..n {
        for j in 0..n {
            if relevance[i] <= relevance[j] {
                continue;
            }
            let diff = sigma * (scores[i] - scores[j]);
            let lambda = -sigma / (1.0 + diff.exp());
            lambdas[i] += lambda;
            lambdas[j] -= lambda;
            cost += softplus(-diff);
            n_pairs += 1;
        }
    }
    Ok(LambdaSet { lambdas, cost, n_pairs })
}

/// A group's standardized feature rows and relevance labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGroup {
    pub query: String,
    pub features: Matrix,
    pub relevance: Vec<u8>,
}

/// Raw 5-dim feature rows (lexical features + PUE) of every candidate.
pub fn raw_group_features(g: &RankGroup) -> Vec<Vec<f64>> {
    g.candidates
        .iter()
        .map(|c| raw_ranker_features(&g.query, &c.candidate.record, Some(c.pue)).to_vec())
        .collect()
}

/// Fits standardization over every candidate of the training groups.
pub fn fit_standardization(train: &[RankGroup]) -> StandardizationStats {
    let rows: Vec<Vec<f64>> = train.iter().flat_map(raw_group_features).collect();
    StandardizationStats::fit(rows.iter().map(Vec::as_slice))
}

/// Standardizes features and drops the PUE column unless `with_pue`.
pub fn feature_groups(groups: &[RankGroup], stats: &StandardizationStats, with_pue: bool) -> Vec<FeatureGroup> {
    let dim = if with_pue { 5 } else { 4 };
    groups
        .iter()
        .map(|g| {
            let rows: Vec<Vec<f64>> = raw_group_features(g)
                .iter()
                .map(|r| stats.apply(r)[..dim].to_vec())
                .collect();
            FeatureGroup {
                query: g.query.clone(),
                features: Matrix::from_rows(&rows),
                relevance: g.relevances(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankerEpoch {
    pub epoch: usize,
    pub train_cost: f64,
    pub skipped_groups: usize,
    pub val_ndcg: f64,
    pub val_mrr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankerHistory {
    pub epochs: Vec<RankerEpoch>,
}

/// Trains for `cfg.epochs` epochs over seeded-shuffled groups, one optimizer
/// step per group. Groups without a preference pair are skipped and counted.
pub fn train_ranker(
    cfg: &RankerConfig,
    train: &[FeatureGroup],
    val: &[FeatureGroup],
    seed: u64,
) -> Result<(MlpModel, RankerHistory)> {
    if train.is_empty() {
        return Err(Error::EmptyGroups);
    }
    cfg.optim.validate()?;
    let mut model = MlpModel::new(cfg.mlp(), seed::derive_seed(seed, "ranker/init"))?;
    let sizes: Vec<usize> = model.parameters().iter().map(|p| p.len()).collect();
    let mut opt = Optimizer::new(cfg.optim, &sizes);
    let mut rng = seed::rng(seed::derive_seed(seed, "ranker/shuffle"));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = RankerHistory { epochs: Vec::new() };
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut cost = 0.0;
        let mut skipped = 0;
        for &gi in &order {
            let g = &train[gi];
            if g.relevance.iter().all(|&r| r == g.relevance[0]) {
                skipped += 1;
                continue;
            }
            model.set_mode(Mode::Train);
            let (scores, cache) = model.forward(Inputs::Dense(&g.features))?;
            let lambdas = lambda_gradients(scores.as_slice(), &g.relevance, cfg.sigma)?;
            cost += lambdas.cost;
            let grad = Matrix::from_vec(lambdas.lambdas.len(), 1, lambdas.lambdas);
            let grads = model.backward(Inputs::Dense(&g.features), &cache, &grad)?;
            opt.step(&mut model.parameters_mut(), &grads.tensors)?;
        }
        model.set_mode(Mode::Eval);
        let (val_ndcg, val_mrr) = if val.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let e = evaluate_ranker(&model, val)?;
            (e.mean_ndcg, e.mean_mrr)
        };
        log::info!("ranker epoch {epoch}: cost {cost:.4}, val ndcg {val_ndcg:.4}, skipped {skipped}");
        history.epochs.push(RankerEpoch {
            epoch,
            train_cost: cost,
            skipped_groups: skipped,
            val_ndcg,
            val_mrr,
        });
    }
    model.set_mode(Mode::Eval);
    Ok((model, history))
}

/// Candidate indices by descending score; ties keep the original order.
pub fn rank_by_scores(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

pub fn score(model: &MlpModel, features: &Matrix) -> Result<Vec<f64>> {
    Ok(model.predict(Inputs::Dense(features))?.into_vec())
}

/// Eval-mode ranking of one group's candidates.
pub fn rank(model: &MlpModel, features: &Matrix) -> Result<Vec<usize>> {
    Ok(rank_by_scores(&score(model, features)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingEval {
    pub ndcg: Vec<f64>,
    pub mrr: Vec<f64>,
    pub mean_ndcg: f64,
    pub mean_mrr: f64,
}

/// Per-query NDCG and MRR of the model's rankings.
pub fn evaluate_ranker(model: &MlpModel, groups: &[FeatureGroup]) -> Result<RankingEval> {
    let mut nd = Vec::with_capacity(groups.len());
    let mut rr = Vec::with_capacity(groups.len());
    for g in groups {
        let order = rank(model, &g.features)?;
        let rels: Vec<u8> = order.iter().map(|&i| g.relevance[i]).collect();
        nd.push(ndcg(&rels)?);
        rr.push(mrr(&rels)?);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    Ok(RankingEval {
        mean_ndcg: mean(&nd),
        mean_mrr: mean(&rr),
        ndcg: nd,
        mrr: rr,
    })
}
