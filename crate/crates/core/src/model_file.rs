//! MDL1 model files: a JSON manifest followed by 32-bit tensor payloads.
//!
//! Layout (all integers little-endian `u32`):
//!
//! ```text
//! "MDL1" | manifest_len | manifest JSON (UTF-8)
//!        | n_tensors | per tensor: ndim, dims.., f32 values (row-major)
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{MlpConfig, MlpModel, Mode};
use crate::predictor::Task;
use crate::vectorize::{StandardizationStats, TfidfModel};

pub const MDL1_MAGIC: [u8; 4] = *b"MDL1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Predictor,
    Ranker,
}

/// How the predictor's input rows were built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorizerSpec {
    Tfidf(TfidfModel),
    DenseEmbedding { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub format_version: u32,
    pub stage: Stage,
    /// Hex sha256 of the canonical JSON of `config`.
    pub config_hash: String,
    pub config: serde_json::Value,
    pub mlp: MlpConfig,
    pub tensor_names: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
    pub created_unix: u64,
    #[serde(default)]
    pub task: Option<Task>,
    #[serde(default)]
    pub vectorizer: Option<VectorizerSpec>,
    #[serde(default)]
    pub standardization: Option<StandardizationStats>,
    #[serde(default)]
    pub with_pue: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub manifest: ModelManifest,
    pub tensors: Vec<Tensor>,
}

/// Hex sha256 of a JSON value; object keys serialize in sorted order.
pub fn config_hash(config: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(config).expect("json values always serialize");
    hex::encode(Sha256::digest(bytes))
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(Error::TruncatedPayload {
                expected: self.pos.saturating_add(n),
                found: self.bytes.len(),
            });
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
}

fn push_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::ModelFormat(format!("{v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

impl ModelFile {
    /// Snapshots `model` at 32-bit precision. Non-finite metrics are dropped
    /// since JSON cannot represent them.
    pub fn from_model(
        model: &MlpModel,
        stage: Stage,
        config: serde_json::Value,
        metrics: BTreeMap<String, f64>,
    ) -> Self {
        let state = model.state_tensors();
        let manifest = ModelManifest {
            format_version: FORMAT_VERSION,
            stage,
            config_hash: config_hash(&config),
            config,
            mlp: model.config().clone(),
            tensor_names: state.iter().map(|(n, _, _)| n.clone()).collect(),
            metrics: metrics.into_iter().filter(|(_, v)| v.is_finite()).collect(),
            created_unix: now_unix(),
            task: None,
            vectorizer: None,
            standardization: None,
            with_pue: None,
        };
        let tensors = state
            .into_iter()
            .map(|(_, shape, data)| Tensor {
                shape,
                data: data.into_iter().map(|v| v as f32).collect(),
            })
            .collect();
        Self { manifest, tensors }
    }

    /// Rebuilds the network in eval mode.
    pub fn to_model(&self) -> Result<MlpModel> {
        let mut m = MlpModel::new(self.manifest.mlp.clone(), 0)?;
        let state: Vec<(Vec<usize>, Vec<f64>)> = self
            .tensors
            .iter()
            .map(|t| (t.shape.clone(), t.data.iter().map(|&v| v as f64).collect()))
            .collect();
        m.load_state(&state)?;
        m.set_mode(Mode::Eval);
        Ok(m)
    }

    /// True when the stored hash matches `config`; logs a warning otherwise.
    pub fn check_config(&self, config: &serde_json::Value) -> bool {
        let h = config_hash(config);
        if h != self.manifest.config_hash {
            log::warn!(
                "model config hash {} differs from expected {h}",
                self.manifest.config_hash
            );
            return false;
        }
        true
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if self.manifest.tensor_names.len() != self.tensors.len() {
            return Err(Error::ModelFormat(format!(
                "{} tensor names for {} tensors",
                self.manifest.tensor_names.len(),
                self.tensors.len()
            )));
        }
        let manifest = serde_json::to_vec(&self.manifest)?;
        let mut out = Vec::with_capacity(manifest.len() + 16);
        out.extend_from_slice(&MDL1_MAGIC);
        push_u32(&mut out, manifest.len())?;
        out.extend_from_slice(&manifest);
        push_u32(&mut out, self.tensors.len())?;
        for t in &self.tensors {
            if t.shape.iter().product::<usize>() != t.data.len() {
                return Err(Error::ModelFormat(format!(
                    "tensor shape {:?} holds {} values",
                    t.shape,
                    t.data.len()
                )));
            }
            push_u32(&mut out, t.shape.len())?;
            for &d in &t.shape {
                push_u32(&mut out, d)?;
            }
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if bytes.len() < 4 {
            return Err(Error::TruncatedPayload {
                expected: 4,
                found: bytes.len(),
            });
        }
        let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
        if magic != MDL1_MAGIC {
            return Err(Error::BadMagic {
                expected: MDL1_MAGIC,
                found: magic,
            });
        }
        let mlen = r.u32()?;
        let manifest: ModelManifest = serde_json::from_slice(r.take(mlen)?)?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format version {}",
                manifest.format_version
            )));
        }
        if config_hash(&manifest.config) != manifest.config_hash {
            log::warn!("model manifest config hash does not match its embedded config");
        }
        let n = r.u32()?;
        if n != manifest.tensor_names.len() {
            return Err(Error::ModelFormat(format!(
                "{n} tensors but {} names",
                manifest.tensor_names.len()
            )));
        }
        let mut tensors = Vec::with_capacity(n);
        for _ in 0..n {
            let ndim = r.u32()?;
            let shape = (0..ndim).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            let len = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .and_then(|l| l.checked_mul(4))
                .ok_or_else(|| Error::ModelFormat(format!("tensor shape {shape:?} overflows")))?;
            let data = r
                .take(len)?
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push(Tensor { shape, data });
        }
        if r.pos != bytes.len() {
            return Err(Error::ModelFormat(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self { manifest, tensors })
    }

    /// Writes via a temporary sibling and rename.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        fs::write(&tmp, bytes).map_err(|e| Error::io(path, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
