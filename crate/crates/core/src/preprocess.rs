//! Label balancing, impression filtering, class reduction, seeded splits,
//! negative sampling and relevance labels for the ranker.

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ClickRecord, Dataset, Group, GroupedDataset, Impression, N_LEVELS};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorizerKind {
    Tfidf,
    DenseEmbedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub balance: bool,
    pub impression_filter: bool,
    pub reduced_classes: bool,
    pub vectorizer: VectorizerKind,
    pub vocab_size: usize,
    pub split: SplitFractions,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            balance: true,
            impression_filter: true,
            reduced_classes: false,
            vectorizer: VectorizerKind::Tfidf,
            vocab_size: crate::vectorize::DEFAULT_VOCAB_SIZE,
            split: SplitFractions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.70,
            val: 0.15,
            test: 0.15,
        }
    }
}

impl SplitFractions {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let f = Self { train, val, test };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(Error::Config(format!("split fractions must lie in (0,1): {parts:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions must sum to 1: {parts:?}")));
        }
        Ok(())
    }

    /// Cut points `(⌊train·n⌋, ⌊(train+val)·n⌋)`; the remainder goes to test.
    pub fn cut_points(&self, n: usize) -> (usize, usize) {
        // The 1e-9 nudge keeps e.g. 0.7·100 from flooring to 69.
        let a = (self.train * n as f64 + 1e-9).floor() as usize;
        let b = ((self.train + self.val) * n as f64 + 1e-9).floor() as usize;
        (a.min(n), b.min(n))
    }
}

fn median_count(hist: &[usize; N_LEVELS]) -> usize {
    let mut sorted = *hist;
    sorted.sort_unstable();
    sorted[N_LEVELS / 2]
}

/// Downsamples engagement-0 records to the median of the 11 per-level counts.
pub fn balance_zero(d: &Dataset, seed: u64) -> Dataset {
    let hist = d.label_histogram();
    let target = median_count(&hist);
    if hist[0] <= target {
        return d.clone();
    }
    let zeros: Vec<usize> = (0..d.len()).filter(|&i| d.records[i].engagement == 0).collect();
    let mut rng = seed::rng(seed);
    let mut keep_zero = vec![false; d.len()];
    for k in index::sample(&mut rng, zeros.len(), target).into_iter() {
        keep_zero[zeros[k]] = true;
    }
    let idx: Vec<usize> = (0..d.len())
        .filter(|&i| d.records[i].engagement != 0 || keep_zero[i])
        .collect();
    d.subset(&idx)
}

/// Drops records with a low impression level.
pub fn filter_impression(d: &Dataset) -> Dataset {
    let idx: Vec<usize> = (0..d.len())
        .filter(|&i| d.records[i].impression != Impression::Low)
        .collect();
    d.subset(&idx)
}

/// Maps engagement to binary: 0 stays 0, anything else becomes 1.
pub fn reduce_classes(d: &Dataset) -> Dataset {
    let mut out = d.clone();
    for r in &mut out.records {
        r.engagement = u8::from(r.engagement > 0);
    }
    out
}

/// Seeded shuffle-and-slice of `0..n` into three sorted index lists.
fn split_indices(n: usize, f: &SplitFractions, seed: u64) -> [Vec<usize>; 3] {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let (a, b) = f.cut_points(n);
    let mut parts = [order[..a].to_vec(), order[a..b].to_vec(), order[b..].to_vec()];
    for p in &mut parts {
        p.sort_unstable();
    }
    parts
}

/// Random row-level train/val/test split. Each output keeps provenance order.
pub fn split_rows(d: &Dataset, f: &SplitFractions, seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    f.validate()?;
    if d.len() < 3 {
        return Err(Error::DatasetTooSmall {
            needed: 3,
            got: d.len(),
        });
    }
    let [tr, va, te] = split_indices(d.len(), f, seed);
    Ok((d.subset(&tr), d.subset(&va), d.subset(&te)))
}

/// Query-level split of any group list; every group lands in exactly one part.
pub fn split_groups<T: Clone>(groups: &[T], f: &SplitFractions, seed: u64) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    f.validate()?;
    if groups.len() < 3 {
        return Err(Error::DatasetTooSmall {
            needed: 3,
            got: groups.len(),
        });
    }
    let pick = |idx: &[usize]| idx.iter().map(|&i| groups[i].clone()).collect::<Vec<_>>();
    let [tr, va, te] = split_indices(groups.len(), f, seed);
    Ok((pick(&tr), pick(&va), pick(&te)))
}

pub fn split_queries(
    g: &GroupedDataset,
    f: &SplitFractions,
    seed: u64,
) -> Result<(GroupedDataset, GroupedDataset, GroupedDataset)> {
    let (a, b, c) = split_groups(&g.groups, f, seed)?;
    let wrap = |groups| GroupedDataset {
        groups,
        source: g.source.clone(),
    };
    Ok((wrap(a), wrap(b), wrap(c)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub record: ClickRecord,
    pub is_negative: bool,
    /// Accepted-row index of the CP's source record.
    pub source_row: usize,
}

/// A query with its positive CPs and any sampled negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGroup {
    pub query: String,
    /// Accepted-row index of the group's first positive, used for query-level features.
    pub query_row: usize,
    pub candidates: Vec<Candidate>,
}

impl CandidateGroup {
    pub fn positives(g: &Group) -> Self {
        Self {
            query: g.query.clone(),
            query_row: g.rows[0],
            candidates: g
                .records
                .iter()
                .zip(&g.rows)
                .map(|(r, &row)| Candidate {
                    record: r.clone(),
                    is_negative: false,
                    source_row: row,
                })
                .collect(),
        }
    }
}

/// Adds `k` CPs drawn without replacement from other queries to every group.
/// Negatives keep the host query text.
pub fn add_negatives(g: &GroupedDataset, k: usize, seed: u64) -> Result<Vec<CandidateGroup>> {
    let mut out: Vec<CandidateGroup> = g.groups.iter().map(CandidateGroup::positives).collect();
    if k == 0 {
        return Ok(out);
    }
    if g.groups.len() < 2 {
        return Err(Error::DatasetTooSmall {
            needed: 2,
            got: g.groups.len(),
        });
    }
    // Flattened pool; group i owns the contiguous range starts[i]..starts[i+1].
    let mut pool: Vec<(usize, usize)> = Vec::with_capacity(g.n_pairs());
    let mut starts = Vec::with_capacity(g.groups.len() + 1);
    for (gi, gr) in g.groups.iter().enumerate() {
        starts.push(pool.len());
        pool.extend((0..gr.records.len()).map(|ri| (gi, ri)));
    }
    starts.push(pool.len());

    let mut rng = seed::rng(seed);
    for (gi, group) in out.iter_mut().enumerate() {
        let (lo, hi) = (starts[gi], starts[gi + 1]);
        let foreign = pool.len() - (hi - lo);
        if foreign < k {
            return Err(Error::NotEnoughForeignCandidates {
                query: group.query.clone(),
                available: foreign,
                requested: k,
            });
        }
        for j in index::sample(&mut rng, foreign, k).into_iter() {
            let (src_g, src_r) = pool[if j >= lo { j + (hi - lo) } else { j }];
            let src = &g.groups[src_g];
            let mut record = src.records[src_r].clone();
            record.query = group.query.clone();
            group.candidates.push(Candidate {
                record,
                is_negative: true,
                source_row: src.rows[src_r],
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedCandidate {
    pub candidate: Candidate,
    pub relevance: u8,
    pub pue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankGroup {
    pub query: String,
    pub query_row: usize,
    pub candidates: Vec<RankedCandidate>,
}

impl RankGroup {
    /// True when the group has no positive candidate.
    pub fn is_degenerate(&self) -> bool {
        self.candidates.iter().all(|c| c.candidate.is_negative)
    }

    pub fn relevances(&self) -> Vec<u8> {
        self.candidates.iter().map(|c| c.relevance).collect()
    }
}

/// Negatives get 0, positives at the group's maximum PUE get 2 (ties included),
/// remaining positives get 1.
pub fn assign_relevance(group: &CandidateGroup, pue: &[f64]) -> Result<RankGroup> {
    if group.candidates.is_empty() {
        return Err(Error::EmptyGroup);
    }
    if pue.len() != group.candidates.len() {
        return Err(Error::LengthMismatch {
            left: group.candidates.len(),
            right: pue.len(),
        });
    }
    let best = group
        .candidates
        .iter()
        .zip(pue)
        .filter(|(c, _)| !c.is_negative)
        .map(|(_, &p)| p)
        .fold(f64::NEG_INFINITY, f64::max);
    let candidates = group
        .candidates
        .iter()
        .zip(pue)
        .map(|(c, &p)| RankedCandidate {
            relevance: match (c.is_negative, p == best) {
                (true, _) => 0,
                (false, true) => 2,
                (false, false) => 1,
            },
            candidate: c.clone(),
            pue: p,
        })
        .collect();
    Ok(RankGroup {
        query: group.query.clone(),
        query_row: group.query_row,
        candidates,
    })
}
