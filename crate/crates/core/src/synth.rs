//! Synthetic click logs with a planted lexical engagement signal, and
//! deterministic stub embeddings, for desk-scale runs and fixtures.
//!
//! Every clarification pane carries a few "hot" tokens with fixed weights;
//! engagement is a noisy clamped sum of those weights, so lexical models can
//! beat constant predictors while the remaining tokens are noise.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::{ClickRecord, Impression, MAX_ANSWERS, N_LEVELS};
use crate::seed;
use crate::vectorize::{tokenize, EmbeddingMatrix, EMBEDDING_DIM, FIELD_DIM};

pub const N_PLAIN_WORDS: usize = 400;
pub const N_HOT_WORDS: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_queries: usize,
    pub min_cps: usize,
    pub max_cps: usize,
    /// Standard deviation of the latent engagement noise.
    pub noise: f64,
    pub low_impression_share: f64,
    /// Share of panes forced to engagement 0 regardless of their tokens.
    pub extra_zero_share: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_queries: 1000,
            min_cps: 1,
            max_cps: 1,
            noise: 1.0,
            low_impression_share: 0.1,
            extra_zero_share: 0.3,
        }
    }
}

fn plain(i: usize) -> String {
    format!("w{i}")
}

fn hot(i: usize) -> String {
    format!("hot{i}")
}

/// Weights of the hot tokens; fixed across seeds so that click logs and
/// grouped logs generated separately share one signal.
pub fn hot_weights() -> Vec<f64> {
    let mut rng = seed::rng(seed::derive_seed(0, "synth/weights"));
    (0..N_HOT_WORDS).map(|_| rng.gen_range(0.4..2.4)).collect()
}

fn words(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Vec<String> {
    let n = rng.gen_range(lo..hi);
    (0..n).map(|_| plain(rng.gen_range(0..N_PLAIN_WORDS))).collect()
}

fn pane(rng: &mut ChaCha8Rng, query: &str, spec: &SynthSpec, weights: &[f64]) -> ClickRecord {
    let n_answers = rng.gen_range(1..=MAX_ANSWERS);
    let mut question = words(rng, 3, 7);
    let mut answers: Vec<Vec<String>> = (0..n_answers).map(|_| words(rng, 1, 4)).collect();
    let n_hot = rng.gen_range(0..4);
    let mut latent = 0.0;
    for _ in 0..n_hot {
        let h = rng.gen_range(0..N_HOT_WORDS);
        latent += weights[h];
        let slot = rng.gen_range(0..=n_answers);
        if slot == 0 {
            question.push(hot(h));
        } else {
            answers[slot - 1].push(hot(h));
        }
    }
    question.shuffle(rng);
    let noise: f64 = (0..4).map(|_| rng.gen_range(-1.0..1.0)).sum::<f64>() * spec.noise * (3.0f64).sqrt() / 2.0;
    let mut engagement = (1.5 * latent + noise).round().clamp(0.0, (N_LEVELS - 1) as f64) as u8;
    if rng.gen_bool(spec.extra_zero_share.clamp(0.0, 1.0)) {
        engagement = 0;
    }
    let impression = if rng.gen_bool(spec.low_impression_share.clamp(0.0, 1.0)) {
        Impression::Low
    } else if rng.gen_bool(0.5) {
        Impression::Medium
    } else {
        Impression::High
    };
    ClickRecord {
        query: query.to_string(),
        question: question.join(" "),
        answers: answers.into_iter().map(|a| a.join(" ")).collect(),
        impression,
        engagement,
    }
}

/// Records in query order; each query gets `min_cps..=max_cps` panes.
/// Query texts are unique.
pub fn generate(spec: &SynthSpec, seed_: u64) -> Vec<ClickRecord> {
    let weights = hot_weights();
    let mut rng = seed::rng(seed::derive_seed(seed_, "synth/records"));
    let mut out = Vec::new();
    for q in 0..spec.n_queries {
        let mut query = words(&mut rng, 1, 4);
        query.push(format!("q{q}"));
        let query = query.join(" ");
        let n = rng.gen_range(spec.min_cps.max(1)..=spec.max_cps.max(spec.min_cps).max(1));
        for _ in 0..n {
            out.push(pane(&mut rng, &query, spec, &weights));
        }
    }
    out
}

/// Deterministic pseudo-embeddings: each field is the mean of fixed random
/// per-token vectors, so lexical signal survives linearly. Missing answers
/// are zero vectors.
pub fn stub_embeddings(records: &[ClickRecord], seed_: u64) -> Result<EmbeddingMatrix> {
    let mut cache: HashMap<String, Vec<f32>> = HashMap::new();
    let mut token_vec = |t: &str| -> Vec<f32> {
        cache
            .entry(t.to_string())
            .or_insert_with(|| {
                let mut rng = seed::rng(seed::derive_seed(seed_, t));
                (0..FIELD_DIM).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
            })
            .clone()
    };
    let mut data = Vec::with_capacity(records.len() * EMBEDDING_DIM);
    for r in records {
        let mut fields: Vec<&str> = vec![&r.query, &r.question];
        fields.extend(r.answers.iter().map(String::as_str));
        for slot in 0..7 {
            let mut acc = vec![0f32; FIELD_DIM];
            if let Some(text) = fields.get(slot) {
                let toks: Vec<String> = tokenize(text).collect();
                for t in &toks {
                    acc.iter_mut().zip(token_vec(t)).for_each(|(a, v)| *a += v);
                }
                if !toks.is_empty() {
                    let n = toks.len() as f32;
                    acc.iter_mut().for_each(|a| *a /= n);
                }
            }
            data.extend_from_slice(&acc);
        }
    }
    EmbeddingMatrix::new(records.len(), EMBEDDING_DIM, data)
}
