use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ClickRecord;
use crate::linalg::SparseVec;

pub const DEFAULT_VOCAB_SIZE: usize = 30_000;

/// Lowercases and splits into maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Fitted vocabulary and smoothed inverse document frequencies.
///
/// Columns are assigned in lexicographic term order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TfidfRepr")]
pub struct TfidfModel {
    terms: Vec<String>,
    idf: Vec<f64>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

#[derive(Deserialize)]
struct TfidfRepr {
    terms: Vec<String>,
    idf: Vec<f64>,
}

impl TryFrom<TfidfRepr> for TfidfModel {
    type Error = String;

    fn try_from(r: TfidfRepr) -> std::result::Result<Self, String> {
        if r.terms.len() != r.idf.len() {
            return Err(format!("{} terms but {} idf values", r.terms.len(), r.idf.len()));
        }
        Ok(Self::from_parts(r.terms, r.idf))
    }
}

impl TfidfModel {
    /// Keeps the `vocab_size` terms with highest document frequency
    /// (ties broken lexicographically); `idf(t) = ln((1+N)/(1+df)) + 1`.
    pub fn fit(corpus: &[ClickRecord], vocab_size: usize) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut df: HashMap<String, usize> = HashMap::new();
        for r in corpus {
            let doc = r.document_text();
            let uniq: HashSet<String> = tokenize(&doc).collect();
            for t in uniq {
                *df.entry(t).or_default() += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = df.into_iter().collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(vocab_size);
        let chosen: BTreeMap<String, usize> = ranked.into_iter().collect();
        let n = corpus.len() as f64;
        let (terms, idf) = chosen
            .into_iter()
            .map(|(t, d)| (t, ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0))
            .unzip();
        Ok(Self::from_parts(terms, idf))
    }

    pub fn from_parts(terms: Vec<String>, idf: Vec<f64>) -> Self {
        assert_eq!(terms.len(), idf.len());
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self { terms, idf, index }
    }

    pub fn vocab_len(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).map(|&i| i as usize)
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.column(term).map(|i| self.idf[i])
    }

    pub fn transform_text(&self, text: &str) -> SparseVec {
        let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
        for tok in tokenize(text) {
            if let Some(&i) = self.index.get(&tok) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let mut entries: Vec<(u32, f64)> = counts.into_iter().map(|(i, c)| (i, c * self.idf[i as usize])).collect();
        let norm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut entries {
                e.1 /= norm;
            }
        }
        SparseVec::new(self.terms.len(), entries)
    }

    /// Raw term counts weighted by idf, then L2-normalized. All-OOV documents
    /// map to the zero vector.
    pub fn transform(&self, r: &ClickRecord) -> SparseVec {
        self.transform_text(&r.document_text())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
