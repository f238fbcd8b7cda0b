use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, Matrix, SparseVec};
use crate::seed;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    #[serde(default = "default_slope")]
    pub leaky_slope: f64,
    #[serde(default = "default_true")]
    pub use_batchnorm: bool,
    #[serde(default)]
    pub dropout_p: f64,
}

fn default_slope() -> f64 {
    0.02
}

fn default_true() -> bool {
    true
}

impl MlpConfig {
    pub fn new(input_dim: usize, hidden: Vec<usize>, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden,
            output_dim,
            leaky_slope: default_slope(),
            use_batchnorm: true,
            dropout_p: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::Config(format!("zero-width layer in {self:?}")));
        }
        if self.leaky_slope < 0.0 {
            return Err(Error::Config("leaky_slope must be ≥ 0".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Config("dropout_p must lie in [0,1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// A batch of network inputs.
#[derive(Debug, Clone, Copy)]
pub enum Inputs<'a> {
    Dense(&'a Matrix),
    Sparse(&'a [SparseVec]),
}

impl Inputs<'_> {
    pub fn rows(&self) -> usize {
        match self {
            Inputs::Dense(m) => m.rows(),
            Inputs::Sparse(v) => v.len(),
        }
    }

    fn check_width(&self, width: usize) -> Result<()> {
        let bad = match self {
            Inputs::Dense(m) => (m.cols() != width).then_some(m.cols()),
            Inputs::Sparse(v) => v.iter().find(|s| s.dims() != width).map(SparseVec::dims),
        };
        match bad {
            Some(found) => Err(Error::ShapeMismatch(format!(
                "input width {found}, model expects {width}"
            ))),
            None => Ok(()),
        }
    }
}

/// Affine layer; `weight` is `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Linear {
    /// Kaiming-uniform weights for LeakyReLU with the given slope, zero bias.
    fn init(fan_in: usize, fan_out: usize, slope: f64, rng: &mut ChaCha8Rng) -> Self {
        let gain = (2.0 / (1.0 + slope * slope)).sqrt();
        let bound = gain * (3.0 / fan_in as f64).sqrt();
        let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
        Self {
            weight: Matrix::from_vec(fan_in, fan_out, data),
            bias: vec![0.0; fan_out],
        }
    }

    fn forward_dense(&self, x: &Matrix) -> Matrix {
        let mut z = x.matmul(&self.weight);
        for i in 0..z.rows() {
            z.row_mut(i).iter_mut().zip(&self.bias).for_each(|(v, b)| *v += b);
        }
        z
    }

    fn forward(&self, x: Inputs<'_>) -> Matrix {
        match x {
            Inputs::Dense(m) => self.forward_dense(m),
            Inputs::Sparse(rows) => {
                let out = self.weight.cols();
                let mut z = Matrix::zeros(rows.len(), out);
                for (i, sv) in rows.iter().enumerate() {
                    let zi = z.row_mut(i);
                    zi.copy_from_slice(&self.bias);
                    for &(k, v) in sv.entries() {
                        axpy(v, self.weight.row(k as usize), zi);
                    }
                }
                z
            }
        }
    }

    /// Accumulates `xᵀ·dz` into `dw` and column sums of `dz` into `db`.
    fn weight_grads(x: Inputs<'_>, dz: &Matrix, dw: &mut [f64], db: &mut [f64]) {
        let out = dz.cols();
        for i in 0..dz.rows() {
            let g = dz.row(i);
            db.iter_mut().zip(g).for_each(|(b, v)| *b += v);
            match x {
                Inputs::Dense(m) => {
                    for (k, &xk) in m.row(i).iter().enumerate() {
                        if xk != 0.0 {
                            axpy(xk, g, &mut dw[k * out..(k + 1) * out]);
                        }
                    }
                }
                Inputs::Sparse(rows) => {
                    for &(k, v) in rows[i].entries() {
                        let k = k as usize;
                        axpy(v, g, &mut dw[k * out..(k + 1) * out]);
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl BatchNorm {
    fn new(width: usize) -> Self {
        Self {
            gamma: vec![1.0; width],
            beta: vec![0.0; width],
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenBlock {
    pub linear: Linear,
    pub norm: Option<BatchNorm>,
}

#[derive(Debug, Clone)]
struct BlockCache {
    xhat: Matrix,
    inv_std: Vec<f64>,
    batch_stats: bool,
    /// Pre-activation (after normalization).
    pre_act: Matrix,
    /// Dropout multipliers, already divided by the keep probability.
    mask: Option<Matrix>,
    /// Block output, i.e. the next layer's input.
    out: Matrix,
}

/// Intermediate values recorded by [`MlpModel::forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    batch: usize,
    blocks: Vec<BlockCache>,
}

/// Parameter gradients in [`MlpModel::parameters`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn is_zero(&self) -> bool {
        self.tensors.iter().flatten().all(|&v| v == 0.0)
    }
}

/// Hidden blocks of linear → batch-norm → LeakyReLU (→ dropout), followed by
/// a plain linear output layer.
#[derive(Debug, Clone)]
pub struct MlpModel {
    config: MlpConfig,
    pub blocks: Vec<HiddenBlock>,
    pub output: Linear,
    mode: Mode,
    version: u64,
    dropout_rng: ChaCha8Rng,
}

impl PartialEq for MlpModel {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.blocks == other.blocks && self.output == other.output
    }
}

fn leaky(v: f64, slope: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        slope * v
    }
}

fn col_sums(m: &Matrix) -> Vec<f64> {
    let mut s = vec![0.0; m.cols()];
    for i in 0..m.rows() {
        s.iter_mut().zip(m.row(i)).for_each(|(a, v)| *a += v);
    }
    s
}

impl MlpModel {
    pub fn new(config: MlpConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = seed::rng(seed);
        let mut blocks = Vec::with_capacity(config.hidden.len());
        let mut fan_in = config.input_dim;
        for &width in &config.hidden {
            blocks.push(HiddenBlock {
                linear: Linear::init(fan_in, width, config.leaky_slope, &mut rng),
                norm: config.use_batchnorm.then(|| BatchNorm::new(width)),
            });
            fan_in = width;
        }
        let output = Linear::init(fan_in, config.output_dim, config.leaky_slope, &mut rng);
        let dropout_rng = seed::rng(seed::derive_seed(seed, "dropout"));
        Ok(Self {
            config,
            blocks,
            output,
            mode: Mode::Train,
            version: 0,
            dropout_rng,
        })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    /// Trainable tensors: per block `W, b, [γ, β]`, then output `W, b`.
    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for b in &self.blocks {
            out.push(b.linear.weight.as_slice());
            out.push(&b.linear.bias);
            if let Some(n) = &b.norm {
                out.push(&n.gamma);
                out.push(&n.beta);
            }
        }
        out.push(self.output.weight.as_slice());
        out.push(&self.output.bias);
        out
    }

    /// Mutable trainable tensors. Invalidates outstanding forward caches.
    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        self.version += 1;
        let mut out: Vec<&mut [f64]> = Vec::new();
        for b in &mut self.blocks {
            out.push(b.linear.weight.as_mut_slice());
            out.push(&mut b.linear.bias);
            if let Some(n) = &mut b.norm {
                out.push(&mut n.gamma);
                out.push(&mut n.beta);
            }
        }
        out.push(self.output.weight.as_mut_slice());
        out.push(&mut self.output.bias);
        out
    }

    pub fn n_parameters(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    /// Forward pass. In `Train` mode batch-norm uses batch statistics (except
    /// for single-row batches, which use running statistics) and updates the
    /// running estimates; dropout is active.
    pub fn forward(&mut self, x: Inputs<'_>) -> Result<(Matrix, ForwardCache)> {
        let train = self.mode == Mode::Train;
        let mut rng = self.dropout_rng.clone();
        let (y, cache, batch_stats) = self.run(x, train, &mut rng)?;
        self.dropout_rng = rng;
        for (block, stats) in self.blocks.iter_mut().zip(batch_stats) {
            if let (Some(bn), Some((mean, var, n))) = (&mut block.norm, stats) {
                let unbias = n as f64 / (n as f64 - 1.0);
                for j in 0..mean.len() {
                    bn.running_mean[j] = (1.0 - BN_MOMENTUM) * bn.running_mean[j] + BN_MOMENTUM * mean[j];
                    bn.running_var[j] = (1.0 - BN_MOMENTUM) * bn.running_var[j] + BN_MOMENTUM * var[j] * unbias;
                }
            }
        }
        Ok((y, cache))
    }

    /// Eval-mode forward that never mutates the model.
    pub fn predict(&self, x: Inputs<'_>) -> Result<Matrix> {
        let mut rng = seed::rng(0);
        Ok(self.run(x, false, &mut rng)?.0)
    }

    #[allow(clippy::type_complexity)]
    fn run(
        &self,
        x: Inputs<'_>,
        train: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Matrix, ForwardCache, Vec<Option<(Vec<f64>, Vec<f64>, usize)>>)> {
        x.check_width(self.config.input_dim)?;
        let n = x.rows();
        let slope = self.config.leaky_slope;
        let p = self.config.dropout_p;
        let mut caches: Vec<BlockCache> = Vec::with_capacity(self.blocks.len());
        let mut batch_stats = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let z = match caches.last() {
                None => block.linear.forward(x),
                Some(prev) => block.linear.forward_dense(&prev.out),
            };
            let width = z.cols();
            let (xhat, inv_std, used_batch, pre_act) = match &block.norm {
                None => {
                    batch_stats.push(None);
                    (Matrix::zeros(0, 0), Vec::new(), false, z)
                }
                Some(bn) => {
                    let use_batch = train && n > 1;
                    let (mean, var) = if use_batch {
                        let mean: Vec<f64> = col_sums(&z).into_iter().map(|s| s / n as f64).collect();
                        let mut var = vec![0.0; width];
                        for i in 0..n {
                            for (j, v) in z.row(i).iter().enumerate() {
                                var[j] += (v - mean[j]) * (v - mean[j]);
                            }
                        }
                        var.iter_mut().for_each(|v| *v /= n as f64);
                        batch_stats.push(Some((mean.clone(), var.clone(), n)));
                        (mean, var)
                    } else {
                        batch_stats.push(None);
                        (bn.running_mean.clone(), bn.running_var.clone())
                    };
                    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
                    let mut xhat = z;
                    let mut pre = Matrix::zeros(n, width);
                    for i in 0..n {
                        let (xr, pr) = (xhat.row_mut(i), pre.row_mut(i));
                        for j in 0..width {
                            xr[j] = (xr[j] - mean[j]) * inv_std[j];
                            pr[j] = bn.gamma[j] * xr[j] + bn.beta[j];
                        }
                    }
                    (xhat, inv_std, use_batch, pre)
                }
            };
            let mut out = pre_act.clone();
            out.as_mut_slice().iter_mut().for_each(|v| *v = leaky(*v, slope));
            let mask = if train && p > 0.0 {
                let keep = 1.0 - p;
                let data: Vec<f64> = (0..n * width)
                    .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect();
                let mask = Matrix::from_vec(n, width, data);
                out.as_mut_slice()
                    .iter_mut()
                    .zip(mask.as_slice())
                    .for_each(|(v, m)| *v *= m);
                Some(mask)
            } else {
                None
            };
            caches.push(BlockCache {
                xhat,
                inv_std,
                batch_stats: used_batch,
                pre_act,
                mask,
                out,
            });
        }
        let y = match caches.last() {
            None => self.output.forward(x),
            Some(prev) => self.output.forward_dense(&prev.out),
        };
        Ok((
            y,
            ForwardCache {
                version: self.version,
                batch: n,
                blocks: caches,
            },
            batch_stats,
        ))
    }

    /// Reverse-mode gradients for the parameters given `dL/d(output)`.
    pub fn backward(&self, x: Inputs<'_>, cache: &ForwardCache, grad_out: &Matrix) -> Result<Gradients> {
        if cache.version != self.version {
            return Err(Error::StaleCache);
        }
        if x.rows() != cache.batch || grad_out.rows() != cache.batch || grad_out.cols() != self.config.output_dim {
            return Err(Error::ShapeMismatch(format!(
                "backward over batch {} with inputs {} and grad {}×{}",
                cache.batch,
                x.rows(),
                grad_out.rows(),
                grad_out.cols()
            )));
        }
        let n = cache.batch;
        let slope = self.config.leaky_slope;
        let mut tensors: Vec<Vec<f64>> = self.parameters().iter().map(|p| vec![0.0; p.len()]).collect();
        let mut slot = tensors.len() - 2;

        // Output layer.
        {
            let (dw, rest) = tensors[slot..].split_at_mut(1);
            match cache.blocks.last() {
                None => Linear::weight_grads(x, grad_out, &mut dw[0], &mut rest[0]),
                Some(prev) => Linear::weight_grads(Inputs::Dense(&prev.out), grad_out, &mut dw[0], &mut rest[0]),
            }
        }
        if cache.blocks.is_empty() {
            return Ok(Gradients { tensors });
        }
        let mut dh = grad_out.matmul_transposed(&self.output.weight);

        for bi in (0..self.blocks.len()).rev() {
            let block = &self.blocks[bi];
            let bc = &cache.blocks[bi];
            let width = bc.out.cols();
            if let Some(mask) = &bc.mask {
                dh.as_mut_slice()
                    .iter_mut()
                    .zip(mask.as_slice())
                    .for_each(|(g, m)| *g *= m);
            }
            let mut du = dh;
            du.as_mut_slice()
                .iter_mut()
                .zip(bc.pre_act.as_slice())
                .for_each(|(g, &u)| {
                    if u <= 0.0 {
                        *g *= slope;
                    }
                });
            let n_tensors = if block.norm.is_some() { 4 } else { 2 };
            slot -= n_tensors;
            let dz = match &block.norm {
                None => du,
                Some(bn) => {
                    let mut dgamma = vec![0.0; width];
                    let mut dbeta = vec![0.0; width];
                    let mut dxhat = Matrix::zeros(n, width);
                    for i in 0..n {
                        let (g, xh) = (du.row(i), bc.xhat.row(i));
                        let d = dxhat.row_mut(i);
                        for j in 0..width {
                            dgamma[j] += g[j] * xh[j];
                            dbeta[j] += g[j];
                            d[j] = g[j] * bn.gamma[j];
                        }
                    }
                    tensors[slot + 2] = dgamma;
                    tensors[slot + 3] = dbeta;
                    let mut dz = Matrix::zeros(n, width);
                    if bc.batch_stats {
                        let nf = n as f64;
                        let sum_d = col_sums(&dxhat);
                        let mut sum_dx = vec![0.0; width];
                        for i in 0..n {
                            for (j, s) in sum_dx.iter_mut().enumerate() {
                                *s += dxhat.get(i, j) * bc.xhat.get(i, j);
                            }
                        }
                        for i in 0..n {
                            for j in 0..width {
                                let v = bc.inv_std[j] / nf
                                    * (nf * dxhat.get(i, j) - sum_d[j] - bc.xhat.get(i, j) * sum_dx[j]);
                                dz.set(i, j, v);
                            }
                        }
                    } else {
                        for i in 0..n {
                            for j in 0..width {
                                dz.set(i, j, dxhat.get(i, j) * bc.inv_std[j]);
                            }
                        }
                    }
                    dz
                }
            };
            {
                let (dw, rest) = tensors[slot..].split_at_mut(1);
                let input = if bi == 0 {
                    x
                } else {
                    Inputs::Dense(&cache.blocks[bi - 1].out)
                };
                Linear::weight_grads(input, &dz, &mut dw[0], &mut rest[0]);
            }
            if bi == 0 {
                break;
            }
            dh = dz.matmul_transposed(&block.linear.weight);
        }
        Ok(Gradients { tensors })
    }

    /// Named tensors including running statistics, for persistence.
    pub fn state_tensors(&self) -> Vec<(String, Vec<usize>, Vec<f64>)> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            let w = &b.linear.weight;
            out.push((
                format!("block{i}.weight"),
                vec![w.rows(), w.cols()],
                w.as_slice().to_vec(),
            ));
            out.push((
                format!("block{i}.bias"),
                vec![b.linear.bias.len()],
                b.linear.bias.clone(),
            ));
            if let Some(n) = &b.norm {
                let len = vec![n.gamma.len()];
                out.push((format!("block{i}.bn.gamma"), len.clone(), n.gamma.clone()));
                out.push((format!("block{i}.bn.beta"), len.clone(), n.beta.clone()));
                out.push((format!("block{i}.bn.running_mean"), len.clone(), n.running_mean.clone()));
                out.push((format!("block{i}.bn.running_var"), len, n.running_var.clone()));
            }
        }
        let w = &self.output.weight;
        out.push(("output.weight".into(), vec![w.rows(), w.cols()], w.as_slice().to_vec()));
        out.push((
            "output.bias".into(),
            vec![self.output.bias.len()],
            self.output.bias.clone(),
        ));
        out
    }

    /// Overwrites all tensors from [`MlpModel::state_tensors`]-ordered data.
    pub fn load_state(&mut self, tensors: &[(Vec<usize>, Vec<f64>)]) -> Result<()> {
        let expected: Vec<Vec<usize>> = self.state_tensors().into_iter().map(|(_, s, _)| s).collect();
        if expected.len() != tensors.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} tensors, got {}",
                expected.len(),
                tensors.len()
            )));
        }
        for (e, (s, _)) in expected.iter().zip(tensors) {
            if e != s {
                return Err(Error::ShapeMismatch(format!("tensor shape {s:?}, expected {e:?}")));
            }
        }
        let mut it = tensors.iter().map(|(_, d)| d.clone());
        let mut next = || it.next().unwrap();
        for b in &mut self.blocks {
            b.linear.weight.as_mut_slice().copy_from_slice(&next());
            b.linear.bias = next();
            if let Some(n) = &mut b.norm {
                n.gamma = next();
                n.beta = next();
                n.running_mean = next();
                n.running_var = next();
            }
        }
        self.output.weight.as_mut_slice().copy_from_slice(&next());
        self.output.bias = next();
        self.version += 1;
        Ok(())
    }
}
