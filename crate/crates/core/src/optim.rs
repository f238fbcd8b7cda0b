//! SGD with momentum, Adam and AMSGrad with coupled L2 weight decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimKind {
    Sgd,
    Adam,
    AmsGrad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimConfig {
    pub kind: OptimKind,
    pub lr: f64,
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            kind: OptimKind::AmsGrad,
            lr: 1e-3,
            momentum: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

impl OptimConfig {
    pub fn amsgrad(lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            weight_decay,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.weight_decay >= 0.0
            && self.momentum >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// Per-tensor moment buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimState {
    pub t: u64,
    /// First moment (Adam/AMSGrad) or momentum buffer (SGD).
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    /// Running maximum of `v` (AMSGrad only).
    pub v_max: Vec<Vec<f64>>,
}

/// Zero-initialized state for tensors of the given lengths.
pub fn attach(cfg: &OptimConfig, sizes: &[usize]) -> OptimState {
    let zeros = || sizes.iter().map(|&n| vec![0.0; n]).collect::<Vec<_>>();
    let (v, v_max) = match cfg.kind {
        OptimKind::Sgd => (Vec::new(), Vec::new()),
        OptimKind::Adam => (zeros(), Vec::new()),
        OptimKind::AmsGrad => (zeros(), zeros()),
    };
    OptimState {
        t: 0,
        m: zeros(),
        v,
        v_max,
    }
}

/// Applies one update in place.
pub fn step(params: &mut [&mut [f64]], grads: &[Vec<f64>], state: &mut OptimState, cfg: &OptimConfig) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} parameter tensors, {} gradients, {} state buffers",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || state.m[i].len() != p.len() {
            return Err(Error::ShapeMismatch(format!(
                "tensor {i}: {} params, {} grads",
                p.len(),
                g.len()
            )));
        }
    }
    state.t += 1;
    let t = state.t as f64;
    let wd = cfg.weight_decay;
    match cfg.kind {
        OptimKind::Sgd => {
            for (i, p) in params.iter_mut().enumerate() {
                let buf = &mut state.m[i];
                for ((x, &g), b) in p.iter_mut().zip(&grads[i]).zip(buf.iter_mut()) {
                    let g = g + wd * *x;
                    *b = cfg.momentum * *b + g;
                    *x -= cfg.lr * *b;
                }
            }
        }
        OptimKind::Adam | OptimKind::AmsGrad => {
            let amsgrad = cfg.kind == OptimKind::AmsGrad;
            let bc1 = 1.0 - cfg.beta1.powf(t);
            let bc2_sqrt = (1.0 - cfg.beta2.powf(t)).sqrt();
            let step_size = cfg.lr / bc1;
            for (i, p) in params.iter_mut().enumerate() {
                for (j, x) in p.iter_mut().enumerate() {
                    let g = grads[i][j] + wd * *x;
                    let m = &mut state.m[i][j];
                    let v = &mut state.v[i][j];
                    *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                    *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                    let second = if amsgrad {
                        let vm = &mut state.v_max[i][j];
                        *vm = vm.max(*v);
                        *vm
                    } else {
                        *v
                    };
                    *x -= step_size * *m / (second.sqrt() / bc2_sqrt + cfg.eps);
                }
            }
        }
    }
    Ok(())
}

/// Optimizer bound to a fixed parameter layout.
#[derive(Debug, Clone)]
pub struct Optimizer {
    pub config: OptimConfig,
    pub state: OptimState,
}

impl Optimizer {
    pub fn new(config: OptimConfig, sizes: &[usize]) -> Self {
        Self {
            state: attach(&config, sizes),
            config,
        }
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[Vec<f64>]) -> Result<()> {
        step(params, grads, &mut self.state, &self.config)
    }
}
