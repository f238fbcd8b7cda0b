use serde::{Deserialize, Serialize};

use crate::ingest::ClickRecord;

/// Lexical CP features for the ranker, optionally with the predicted engagement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankerFeatures {
    pub qlen: f64,
    pub question_len: f64,
    pub n_answers: f64,
    pub mean_answer_len: f64,
    pub pue: Option<f64>,
}

impl RankerFeatures {
    pub fn dim(&self) -> usize {
        if self.pue.is_some() {
            5
        } else {
            4
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.qlen, self.question_len, self.n_answers, self.mean_answer_len];
        v.extend(self.pue);
        v
    }

    fn from_slice(v: &[f64]) -> Self {
        Self {
            qlen: v[0],
            question_len: v[1],
            n_answers: v[2],
            mean_answer_len: v[3],
            pue: v.get(4).copied(),
        }
    }
}

/// Character counts of query and question, answer count, mean answer length
/// (0 when there are no answers), and the PUE if given.
pub fn raw_ranker_features(query: &str, record: &ClickRecord, pue: Option<f64>) -> RankerFeatures {
    let n = record.answers.len();
    let mean_len = if n == 0 {
        0.0
    } else {
        record.answers.iter().map(|a| a.chars().count()).sum::<usize>() as f64 / n as f64
    };
    RankerFeatures {
        qlen: query.chars().count() as f64,
        question_len: record.question.chars().count() as f64,
        n_answers: n as f64,
        mean_answer_len: mean_len,
        pue,
    }
}

/// Per-dimension z-score parameters fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationStats {
    /// Population mean/std per dimension. Constant dimensions get std 1 so
    /// they are only centred.
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        let dim = rows.first().map_or(0, |r| r.len());
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in &rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// Standardized ranker features.
pub fn ranker_features(
    query: &str,
    record: &ClickRecord,
    pue: Option<f64>,
    stats: &StandardizationStats,
) -> RankerFeatures {
    let raw = raw_ranker_features(query, record, pue).to_vec();
    RankerFeatures::from_slice(&stats.apply(&raw))
}
