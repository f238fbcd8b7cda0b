//! Ranking metrics and classification diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn dcg(rels: &[u8]) -> f64 {
    rels.iter()
        .enumerate()
        .map(|(i, &r)| ((1u64 << r) - 1) as f64 / ((i + 2) as f64).log2())
        .sum()
}

/// Full-list NDCG with gain `2^rel − 1` and discount `log2(pos + 1)`.
/// Lists without any relevant item score 0.
pub fn ndcg(ranked_relevances: &[u8]) -> Result<f64> {
    if ranked_relevances.is_empty() {
        return Err(Error::EmptyList);
    }
    let mut ideal = ranked_relevances.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(&ideal);
    if idcg == 0.0 {
        return Ok(0.0);
    }
    Ok(dcg(ranked_relevances) / idcg)
}

/// Reciprocal rank of the first item with relevance ≥ 1, or 0.
pub fn mrr(ranked_relevances: &[u8]) -> Result<f64> {
    if ranked_relevances.is_empty() {
        return Err(Error::EmptyList);
    }
    Ok(ranked_relevances
        .iter()
        .position(|&r| r >= 1)
        .map_or(0.0, |p| 1.0 / (p + 1) as f64))
}

/// Absolute counts, rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub n_classes: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Trace over total; `None` when the matrix is empty.
    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| (0..self.n_classes).map(|i| self.counts[i][i]).sum::<u64>() as f64 / total as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("true\\pred");
        for c in 0..self.n_classes {
            s.push_str(&format!(",{c}"));
        }
        s.push('\n');
        for (t, row) in self.counts.iter().enumerate() {
            s.push_str(&t.to_string());
            for c in row {
                s.push_str(&format!(",{c}"));
            }
            s.push('\n');
        }
        s
    }
}

pub fn confusion(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    let mut counts = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        for v in [t, p] {
            if v >= n_classes {
                return Err(Error::IndexOutOfRange {
                    index: v,
                    bound: n_classes,
                });
            }
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { n_classes, counts })
}
