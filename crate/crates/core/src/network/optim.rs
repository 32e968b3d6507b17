use super::config::TrainConfig;
use super::model::{GradientSet, NetworkParams};
use crate::error::{Error, Result};

/// First and second moment estimates for every learnable tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &NetworkParams, beta1: f64, beta2: f64, eps: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .learnables()
            .iter()
            .map(|t| vec![0.0; t.len()])
            .collect();
        Self {
            beta1,
            beta2,
            eps,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn from_config(params: &NetworkParams, cfg: &TrainConfig) -> Self {
        Self::new(params, cfg.beta1, cfg.beta2, cfg.eps)
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(
    params: &mut NetworkParams,
    grads: &GradientSet,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    let mut tensors = params.learnables_mut();
    if tensors.len() != grads.tensors.len() || tensors.len() != state.m.len() {
        return Err(Error::dim("gradient set does not match the parameter tree"));
    }
    for ((p, g), m) in tensors.iter().zip(&grads.tensors).zip(&state.m) {
        if p.len() != g.len() || p.len() != m.len() {
            return Err(Error::dim("gradient tensor shape mismatch"));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    for (((p, g), m), v) in tensors
        .iter_mut()
        .zip(&grads.tensors)
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

/// Step-decayed learning rate for `epoch` in `[0, epochs)`.
pub fn lr_at_epoch(cfg: &TrainConfig, epoch: usize) -> Result<f64> {
    if epoch >= cfg.epochs {
        return Err(Error::param(format!(
            "epoch {epoch} outside [0, {})",
            cfg.epochs
        )));
    }
    let decays = cfg.decay_epochs.iter().filter(|&&e| e <= epoch).count();
    Ok(cfg.lr0 * cfg.shrink.powi(decays as i32))
}
