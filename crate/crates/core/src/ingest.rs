//! Parsing of the MIMICS-Click and MIMICS-ClickExplore TSV releases.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of engagement classes (levels 0..=10).
pub const N_LEVELS: usize = 11;
pub const MAX_ANSWERS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Impression {
    Low,
    Medium,
    High,
}

impl FromStr for Impression {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_lowercase().as_str() {
            "low" => Ok(Impression::Low),
            "medium" => Ok(Impression::Medium),
            "high" => Ok(Impression::High),
            other => Err(format!("unknown impression level `{other}`")),
        }
    }
}

impl fmt::Display for Impression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Impression::Low => "low",
            Impression::Medium => "medium",
            Impression::High => "high",
        })
    }
}

/// One clarification pane shown for a query, with its observed engagement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub query: String,
    pub question: String,
    /// Non-empty candidate answers, at most five.
    pub answers: Vec<String>,
    pub impression: Impression,
    /// Engagement level in 0..=10.
    pub engagement: u8,
}

impl ClickRecord {
    /// Text used for lexical featurization: query, question, then answers.
    pub fn document_text(&self) -> String {
        let mut s = String::with_capacity(
            self.query.len() + self.question.len() + self.answers.iter().map(String::len).sum::<usize>() + 8,
        );
        s.push_str(&self.query);
        s.push(' ');
        s.push_str(&self.question);
        for a in &self.answers {
            s.push(' ');
            s.push_str(a);
        }
        s
    }
}

/// Column names used to locate fields in the TSV header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClickSchema {
    pub query: String,
    pub question: String,
    pub options: [String; MAX_ANSWERS],
    pub impression: String,
    pub engagement: String,
    /// Skip and count malformed rows instead of failing.
    pub lenient: bool,
}

impl Default for ClickSchema {
    fn default() -> Self {
        Self {
            query: "query".into(),
            question: "question".into(),
            options: std::array::from_fn(|i| format!("option_{}", i + 1)),
            impression: "impression_level".into(),
            engagement: "engagement_level".into(),
            lenient: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: PathBuf,
    /// Index of each record among the accepted data rows of the source file.
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<ClickRecord>,
    pub provenance: Provenance,
    /// Rows skipped in lenient mode.
    pub skipped: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Keeps the records at `idx` (must be increasing to preserve provenance order).
    pub(crate) fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            records: idx.iter().map(|&i| self.records[i].clone()).collect(),
            provenance: Provenance {
                source: self.provenance.source.clone(),
                rows: idx.iter().map(|&i| self.provenance.rows[i]).collect(),
            },
            skipped: self.skipped,
        }
    }

    /// Per-level engagement counts.
    pub fn label_histogram(&self) -> [usize; N_LEVELS] {
        let mut h = [0usize; N_LEVELS];
        for r in &self.records {
            h[r.engagement as usize] += 1;
        }
        h
    }
}

/// Records sharing one query, with their accepted-row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub query: String,
    pub records: Vec<ClickRecord>,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset {
    /// Groups in first-appearance order of their query.
    pub groups: Vec<Group>,
    pub source: PathBuf,
}

impl GroupedDataset {
    /// Groups records by exact query text.
    pub fn from_dataset(d: &Dataset) -> Self {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut groups: Vec<Group> = Vec::new();
        for (r, &row) in d.records.iter().zip(&d.provenance.rows) {
            let gi = *index.entry(r.query.as_str()).or_insert_with(|| {
                groups.push(Group {
                    query: r.query.clone(),
                    records: Vec::new(),
                    rows: Vec::new(),
                });
                groups.len() - 1
            });
            groups[gi].records.push(r.clone());
            groups[gi].rows.push(row);
        }
        Self {
            groups,
            source: d.provenance.source.clone(),
        }
    }

    pub fn n_pairs(&self) -> usize {
        self.groups.iter().map(|g| g.records.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_queries: usize,
    pub n_pairs: usize,
    pub mean_cps_per_query: f64,
    pub max_cps_per_query: usize,
    pub zero_engagement_fraction: f64,
}

struct Columns {
    query: usize,
    question: usize,
    options: [usize; MAX_ANSWERS],
    impression: usize,
    engagement: usize,
    width: usize,
}

impl Columns {
    fn locate(header: &str, schema: &ClickSchema) -> Result<Self> {
        let names: Vec<&str> = header.split('\t').map(str::trim).collect();
        let find = |name: &str| {
            names
                .iter()
                .position(|c| *c == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let mut options = [0usize; MAX_ANSWERS];
        for (slot, name) in options.iter_mut().zip(&schema.options) {
            *slot = find(name)?;
        }
        Ok(Self {
            query: find(&schema.query)?,
            question: find(&schema.question)?,
            options,
            impression: find(&schema.impression)?,
            engagement: find(&schema.engagement)?,
            width: names.len(),
        })
    }

    fn parse_row(&self, line: &str) -> std::result::Result<ClickRecord, String> {
        let fields: Vec<&str> = line.split('\t').collect();
        let needed = self.width.max(1 + self.max_index());
        if fields.len() < 1 + self.max_index() {
            return Err(format!("expected {needed} fields, found {}", fields.len()));
        }
        let query = fields[self.query].to_string();
        if query.is_empty() {
            return Err("empty query".into());
        }
        let answers = self
            .options
            .iter()
            .map(|&i| fields[i])
            .filter(|a| !a.is_empty())
            .map(str::to_string)
            .collect();
        let impression: Impression = fields[self.impression].parse()?;
        let raw = fields[self.engagement].trim();
        let engagement: u8 = raw
            .parse()
            .map_err(|_| format!("unparsable engagement level `{raw}`"))?;
        if engagement as usize >= N_LEVELS {
            return Err(format!("engagement level {engagement} outside 0..=10"));
        }
        Ok(ClickRecord {
            query,
            question: fields[self.question].to_string(),
            answers,
            impression,
            engagement,
        })
    }

    fn max_index(&self) -> usize {
        let mut m = self.query.max(self.question).max(self.impression).max(self.engagement);
        for &o in &self.options {
            m = m.max(o);
        }
        m
    }
}

/// Parses a MIMICS-Click style TSV file.
pub fn parse_click(path: &Path, schema: &ClickSchema) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_click_str(&text, path, schema)
}

pub fn parse_click_str(text: &str, source: &Path, schema: &ClickSchema) -> Result<Dataset> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::EmptyFile)?;
    let cols = Columns::locate(header.trim_start_matches('\u{feff}'), schema)?;
    let mut records = Vec::new();
    let mut skipped = 0;
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match cols.parse_row(line) {
            Ok(r) => records.push(r),
            Err(reason) if schema.lenient => {
                log::debug!("skipping line {}: {reason}", i + 2);
                skipped += 1;
            }
            Err(reason) => return Err(Error::BadRow { line_no: i + 2, reason }),
        }
    }
    if records.is_empty() && skipped == 0 {
        return Err(Error::EmptyFile);
    }
    let rows = (0..records.len()).collect();
    Ok(Dataset {
        records,
        provenance: Provenance {
            source: source.to_path_buf(),
            rows,
        },
        skipped,
    })
}

/// Parses a MIMICS-ClickExplore style TSV and groups it by query.
pub fn parse_click_explore(path: &Path, schema: &ClickSchema) -> Result<GroupedDataset> {
    Ok(GroupedDataset::from_dataset(&parse_click(path, schema)?))
}

pub fn compute_stats(g: &GroupedDataset) -> Result<CorpusStats> {
    if g.groups.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n_queries = g.groups.len();
    let n_pairs = g.n_pairs();
    let zeros = g
        .groups
        .iter()
        .flat_map(|gr| &gr.records)
        .filter(|r| r.engagement == 0)
        .count();
    Ok(CorpusStats {
        n_queries,
        n_pairs,
        mean_cps_per_query: n_pairs as f64 / n_queries as f64,
        max_cps_per_query: g.groups.iter().map(|gr| gr.records.len()).max().unwrap_or(0),
        zero_engagement_fraction: zeros as f64 / n_pairs as f64,
    })
}

/// Serializes records under the schema's column names. Fails on fields
/// containing tabs or line breaks, which the format cannot represent.
pub fn write_tsv<W: Write>(out: &mut W, records: &[ClickRecord], schema: &ClickSchema) -> Result<()> {
    let io_err = |e| Error::io("<tsv writer>", e);
    let mut header = vec![schema.query.as_str(), schema.question.as_str()];
    header.extend(schema.options.iter().map(String::as_str));
    header.push(schema.impression.as_str());
    header.push(schema.engagement.as_str());
    writeln!(out, "{}", header.join("\t")).map_err(io_err)?;
    for (i, r) in records.iter().enumerate() {
        let mut fields: Vec<&str> = vec![&r.query, &r.question];
        for slot in 0..MAX_ANSWERS {
            fields.push(r.answers.get(slot).map_or("", String::as_str));
        }
        if let Some(bad) = fields.iter().find(|f| f.contains(['\t', '\n', '\r'])) {
            return Err(Error::BadRow {
                line_no: i + 2,
                reason: format!("field {bad:?} contains a tab or line break"),
            });
        }
        let level = r.engagement.to_string();
        let imp = r.impression.to_string();
        fields.push(&imp);
        fields.push(&level);
        writeln!(out, "{}", fields.join("\t")).map_err(io_err)?;
    }
    Ok(())
}

pub fn write_tsv_file(path: &Path, records: &[ClickRecord], schema: &ClickSchema) -> Result<()> {
    let mut buf = Vec::new();
    write_tsv(&mut buf, records, schema)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}
