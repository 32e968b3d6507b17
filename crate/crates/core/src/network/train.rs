use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::model::{l1_loss, l1_loss_grad, Mode, NetworkParams};
use super::optim::{adam_step, lr_at_epoch, AdamState};
use crate::bases::TrajectoryBasis;
use crate::error::{Error, Result};
use crate::motion::{flip_rows, SkeletonConfig};

/// One training pair: a normalized `F × 2J` 2D window and its root-aligned
/// `F × 3J` 3D target.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Array2<f64>,
    pub target: Array2<f64>,
}

impl Sample {
    pub fn new(input: Array2<f64>, target: Array2<f64>) -> Result<Self> {
        if input.nrows() != target.nrows() || input.nrows() == 0 {
            return Err(Error::dim(format!(
                "input has {} frames, target {}",
                input.nrows(),
                target.nrows()
            )));
        }
        if input.ncols() % 2 != 0
            || target.ncols() % 3 != 0
            || input.ncols() / 2 != target.ncols() / 3
        {
            return Err(Error::dim(format!(
                "input width {} and target width {} do not describe the same joints",
                input.ncols(),
                target.ncols()
            )));
        }
        if input.iter().chain(target.iter()).any(|v| !v.is_finite()) {
            return Err(Error::numeric("non-finite sample value"));
        }
        Ok(Self { input, target })
    }

    pub fn frames(&self) -> usize {
        self.input.nrows()
    }

    pub fn joints(&self) -> usize {
        self.input.ncols() / 2
    }

    /// Mirror image of the pair.
    pub fn flipped(&self, skeleton: &SkeletonConfig) -> Result<Self> {
        Ok(Self {
            input: flip_rows(self.input.view(), 2, skeleton)?,
            target: flip_rows(self.target.view(), 3, skeleton)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    /// Mean training loss over the epoch's batches.
    pub loss: f64,
}

/// Trains `params` in place and returns the per-epoch log. `on_epoch` is
/// called after every epoch. The returned parameters are in eval mode.
pub fn train_with(
    mut params: NetworkParams,
    basis: &TrajectoryBasis,
    data: &[Sample],
    cfg: &TrainConfig,
    skeleton: Option<&SkeletonConfig>,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(NetworkParams, Vec<EpochRecord>)> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(Error::param("training needs at least two samples"));
    }
    let net = &params.config;
    for (i, s) in data.iter().enumerate() {
        if s.frames() != net.frames || s.joints() != net.joints {
            return Err(Error::dim(format!(
                "sample {i} is F={} J={}, network expects F={} J={}",
                s.frames(),
                s.joints(),
                net.frames,
                net.joints
            )));
        }
    }
    let flips = match (cfg.flip_augment, skeleton) {
        (false, _) => None,
        (true, None) => return Err(Error::param("flip augmentation needs a skeleton")),
        (true, Some(sk)) => {
            if sk.num_joints() != net.joints {
                return Err(Error::dim("skeleton joint count differs from the network"));
            }
            Some(
                data.iter()
                    .map(|s| s.flipped(sk))
                    .collect::<Result<Vec<_>>>()?,
            )
        }
    };

    if cfg.standardize_inputs {
        let inputs: Vec<ArrayView2<f64>> = data.iter().map(|s| s.input.view()).collect();
        params.fit_input_normalization(&inputs)?;
    }
    params.set_mode(Mode::Train);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::from_config(&params, cfg);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = lr_at_epoch(cfg, epoch)?;
        order.shuffle(&mut rng);
        let (mut total, mut batches) = (0.0, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let batch: Vec<&Sample> = chunk
                .iter()
                .map(|&i| match &flips {
                    Some(f) if rng.random_bool(cfg.flip_prob) => &f[i],
                    _ => &data[i],
                })
                .collect();
            let inputs: Vec<ArrayView2<f64>> = batch.iter().map(|s| s.input.view()).collect();
            let targets: Vec<ArrayView2<f64>> = batch.iter().map(|s| s.target.view()).collect();

            let out = params.forward_batch(basis, &inputs, &mut rng)?;
            let preds: Vec<ArrayView2<f64>> = out.poses.iter().map(|p| p.view()).collect();
            total += l1_loss(&preds, &targets)?;
            batches += 1;
            let grad = l1_loss_grad(&preds, &targets)?;
            let grads = params.backward(basis, &out.cache, &grad)?;
            params.update_running_stats(&out.cache);
            adam_step(&mut params, &grads, &mut adam, lr)?;
        }
        let rec = EpochRecord {
            epoch,
            lr,
            loss: total / batches as f64,
        };
        if !rec.loss.is_finite() {
            return Err(Error::numeric(format!(
                "training loss diverged at epoch {epoch}"
            )));
        }
        on_epoch(&rec);
        log.push(rec);
    }
    params.set_mode(Mode::Eval);
    Ok((params, log))
}

pub fn train(
    params: NetworkParams,
    basis: &TrajectoryBasis,
    data: &[Sample],
    cfg: &TrainConfig,
    skeleton: Option<&SkeletonConfig>,
) -> Result<(NetworkParams, Vec<EpochRecord>)> {
    train_with(params, basis, data, cfg, skeleton, |_| {})
}

/// Mean eval-mode L1 loss over a dataset.
pub fn evaluate_loss(
    params: &NetworkParams,
    basis: &TrajectoryBasis,
    data: &[Sample],
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::param("empty dataset"));
    }
    let inputs: Vec<ArrayView2<f64>> = data.iter().map(|s| s.input.view()).collect();
    let targets: Vec<ArrayView2<f64>> = data.iter().map(|s| s.target.view()).collect();
    let preds = params.predict(basis, &inputs, 256)?;
    let views: Vec<ArrayView2<f64>> = preds.iter().map(|p| p.view()).collect();
    l1_loss(&views, &targets)
}
