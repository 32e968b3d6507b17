//! The full network: per-frame feature block, temporal pooling, trajectory
//! transform, coefficient regression block and the `Θ·A` reconstruction.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::NetworkConfig;
use super::layers::{
    avg_pool_temporal, avg_pool_temporal_backward, trajectory_transform,
    trajectory_transform_backward, BlockCache, BlockGrads, DenseBlock,
};
use crate::bases::TrajectoryBasis;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics, dropout active.
    Train,
    /// Running statistics, no dropout; forward is a pure function.
    Eval,
}

/// All learnable tensors plus batch-norm running statistics.
#[derive(Debug, Clone)]
pub struct NetworkParams {
    pub config: NetworkConfig,
    pub feature: DenseBlock,
    pub regression: DenseBlock,
    /// Fixed per-column input standardization, `x ↦ (x − shift)·scale`.
    pub input_shift: Array1<f64>,
    pub input_scale: Array1<f64>,
    pub mode: Mode,
    version: u64,
}

impl PartialEq for NetworkParams {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.feature == other.feature
            && self.regression == other.regression
            && self.input_shift == other.input_shift
            && self.input_scale == other.input_scale
            && self.mode == other.mode
    }
}

/// Gradients in the order of [`NetworkParams::learnable_names`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub tensors: Vec<Vec<f64>>,
}

impl GradientSet {
    pub fn max_abs(&self) -> f64 {
        self.tensors
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().flatten().all(|v| v.is_finite())
    }
}

/// Activations kept from a forward pass for [`NetworkParams::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    feature: BlockCache,
    regression: BlockCache,
    pooled: Array2<f64>,
    trajectory: Array2<f64>,
    batch: usize,
    frames: usize,
    num_bases: usize,
    version: u64,
}

impl ForwardCache {
    /// Pooled feature trajectories, `(B·F) × C`.
    pub fn pooled(&self) -> &Array2<f64> {
        &self.pooled
    }

    /// Trajectory-space features fed to the regression block, `B × (C·K)`
    /// with entry `c·K + k` holding coefficient `k` of channel `c`.
    pub fn trajectory_features(&self) -> &Array2<f64> {
        &self.trajectory
    }
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// Per sample, `K × 3J`.
    pub coeffs: Vec<Array2<f64>>,
    /// Per sample, `F × 3J`.
    pub poses: Vec<Array2<f64>>,
    pub cache: ForwardCache,
}

/// Fresh parameters: seeded uniform fan-in weights, zero biases, identity
/// batch norms.
pub fn init_network(cfg: &NetworkConfig) -> Result<NetworkParams> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let feature = DenseBlock::init(
        2 * cfg.joints,
        cfg.feat_width,
        cfg.feat_layers,
        cfg.dense_connections,
        cfg.feat_dropout,
        None,
        &mut rng,
    );
    let channels = feature.output_width();
    let regression = DenseBlock::init(
        channels * cfg.num_bases,
        cfg.reg_width,
        cfg.reg_layers,
        cfg.dense_connections,
        cfg.reg_dropout,
        Some(cfg.num_bases * 3 * cfg.joints),
        &mut rng,
    );
    Ok(NetworkParams {
        config: cfg.clone(),
        feature,
        regression,
        input_shift: Array1::zeros(2 * cfg.joints),
        input_scale: Array1::ones(2 * cfg.joints),
        mode: Mode::Train,
        version: 0,
    })
}

fn stack_rows(inputs: &[ArrayView2<'_, f64>], frames: usize, width: usize) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((inputs.len() * frames, width));
    for (b, x) in inputs.iter().enumerate() {
        if x.dim() != (frames, width) {
            return Err(Error::dim(format!(
                "sample {b} is {}x{}, expected {frames}x{width}",
                x.nrows(),
                x.ncols()
            )));
        }
        out.slice_mut(s![b * frames..(b + 1) * frames, ..])
            .assign(x);
    }
    Ok(out)
}

impl NetworkParams {
    /// Number of feature channels entering the trajectory transform.
    pub fn channels(&self) -> usize {
        self.feature.output_width()
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    fn check_basis(&self, basis: &TrajectoryBasis) -> Result<()> {
        if basis.frames() != self.config.frames || basis.num_bases() != self.config.num_bases {
            return Err(Error::dim(format!(
                "basis is F={} K={}, network expects F={} K={}",
                basis.frames(),
                basis.num_bases(),
                self.config.frames,
                self.config.num_bases
            )));
        }
        Ok(())
    }

    /// Runs a batch of `F × 2J` inputs. `rng` drives dropout in train mode.
    pub fn forward_batch(
        &self,
        basis: &TrajectoryBasis,
        inputs: &[ArrayView2<'_, f64>],
        rng: &mut impl Rng,
    ) -> Result<ForwardOutput> {
        self.check_basis(basis)?;
        if inputs.is_empty() {
            return Err(Error::dim("empty batch"));
        }
        let cfg = &self.config;
        let (frames, k, width3) = (cfg.frames, cfg.num_bases, 3 * cfg.joints);
        let batch = inputs.len();
        let train = self.mode == Mode::Train;

        let mut x0 = stack_rows(inputs, frames, 2 * cfg.joints)?;
        x0 -= &self.input_shift;
        x0 *= &self.input_scale;
        let (feat, feature_cache) = self.feature.forward(x0.view(), train, rng)?;
        let channels = feat.ncols();

        let mut pooled = Array2::zeros(feat.raw_dim());
        let mut trajectory = Array2::zeros((batch, channels * k));
        for b in 0..batch {
            let rows = s![b * frames..(b + 1) * frames, ..];
            let p = avg_pool_temporal(feat.slice(rows), cfg.pool_window)?;
            let coeffs = trajectory_transform(p.view(), basis);
            // channel-major flattening: entry c·K + k
            trajectory.row_mut(b).assign(
                &coeffs
                    .t()
                    .as_standard_layout()
                    .view()
                    .into_shape_with_order(channels * k)
                    .expect("contiguous"),
            );
            pooled.slice_mut(rows).assign(&p);
        }

        let (out, regression_cache) = self.regression.forward(trajectory.view(), train, rng)?;
        let mut coeffs = Vec::with_capacity(batch);
        let mut poses = Vec::with_capacity(batch);
        for row in out.rows() {
            let a = row
                .to_owned()
                .into_shape_with_order((k, width3))
                .expect("head width is K·3J")
                * cfg.output_scale;
            poses.push(basis.theta().dot(&a));
            coeffs.push(a);
        }
        if poses.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::numeric("forward pass produced non-finite poses"));
        }
        Ok(ForwardOutput {
            coeffs,
            poses,
            cache: ForwardCache {
                feature: feature_cache,
                regression: regression_cache,
                pooled,
                trajectory,
                batch,
                frames,
                num_bases: k,
                version: self.version,
            },
        })
    }

    /// Single-sample eval-mode forward.
    pub fn forward(
        &self,
        basis: &TrajectoryBasis,
        input: ArrayView2<'_, f64>,
    ) -> Result<ForwardOutput> {
        if self.mode != Mode::Eval {
            return Err(Error::param(
                "single-sample forward needs eval mode (batch statistics are undefined)",
            ));
        }
        let mut unused = ChaCha8Rng::seed_from_u64(0);
        self.forward_batch(basis, &[input], &mut unused)
    }

    /// Eval-mode predictions in chunks of `chunk` samples.
    pub fn predict(
        &self,
        basis: &TrajectoryBasis,
        inputs: &[ArrayView2<'_, f64>],
        chunk: usize,
    ) -> Result<Vec<Array2<f64>>> {
        let mut eval = self.clone();
        eval.mode = Mode::Eval;
        let mut unused = ChaCha8Rng::seed_from_u64(0);
        let mut out = Vec::with_capacity(inputs.len());
        for part in inputs.chunks(chunk.max(1)) {
            out.extend(eval.forward_batch(basis, part, &mut unused)?.poses);
        }
        Ok(out)
    }

    /// Gradients of a loss w.r.t. every learnable, given the loss gradient
    /// w.r.t. each sample's `F × 3J` poses.
    pub fn backward(
        &self,
        basis: &TrajectoryBasis,
        cache: &ForwardCache,
        grad_poses: &[Array2<f64>],
    ) -> Result<GradientSet> {
        self.check_basis(basis)?;
        if cache.version != self.version {
            return Err(Error::param(
                "stale forward cache: parameters changed since forward",
            ));
        }
        let cfg = &self.config;
        let (frames, k, width3) = (cfg.frames, cfg.num_bases, 3 * cfg.joints);
        if cache.frames != frames || cache.num_bases != k || grad_poses.len() != cache.batch {
            return Err(Error::dim("forward cache does not match this batch"));
        }
        let channels = self.channels();

        let mut dout = Array2::zeros((cache.batch, k * width3));
        for (b, g) in grad_poses.iter().enumerate() {
            if g.dim() != (frames, width3) {
                return Err(Error::dim(format!(
                    "pose gradient {b} is {}x{}, expected {frames}x{width3}",
                    g.nrows(),
                    g.ncols()
                )));
            }
            let da = basis.theta().t().dot(g) * cfg.output_scale;
            dout.row_mut(b)
                .assign(&da.into_shape_with_order(k * width3).expect("contiguous"));
        }

        let (dtraj, reg_grads) = self.regression.backward(&cache.regression, dout.view());

        let mut dfeat = Array2::zeros((cache.batch * frames, channels));
        for b in 0..cache.batch {
            let dcoef = dtraj
                .row(b)
                .to_owned()
                .into_shape_with_order((channels, k))
                .expect("contiguous");
            let dpooled = trajectory_transform_backward(dcoef.t(), basis);
            let dfeat_b = avg_pool_temporal_backward(dpooled.view(), cfg.pool_window)?;
            dfeat
                .slice_mut(s![b * frames..(b + 1) * frames, ..])
                .assign(&dfeat_b);
        }
        let (_, feat_grads) = self.feature.backward(&cache.feature, dfeat.view());

        let mut tensors = Vec::new();
        for grads in [feat_grads, reg_grads] {
            flatten_grads(grads, &mut tensors);
        }
        let set = GradientSet { tensors };
        if !set.is_finite() {
            return Err(Error::numeric(
                "backward pass produced non-finite gradients",
            ));
        }
        Ok(set)
    }

    /// Folds the batch statistics of a training forward pass into the
    /// running statistics.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) {
        self.feature.update_running_stats(&cache.feature);
        self.regression.update_running_stats(&cache.regression);
    }

    /// Names of the learnable tensors, in gradient order.
    pub fn learnable_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (prefix, block) in [("feature", &self.feature), ("regression", &self.regression)] {
            for l in 0..block.layers.len() {
                for t in ["weight", "bias", "gamma", "beta"] {
                    names.push(format!("{prefix}.{l}.{t}"));
                }
            }
            if block.head.is_some() {
                names.push(format!("{prefix}.head.weight"));
                names.push(format!("{prefix}.head.bias"));
            }
        }
        names
    }

    /// Learnable tensors as flat slices, in gradient order.
    pub fn learnables(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for block in [&self.feature, &self.regression] {
            for layer in &block.layers {
                out.push(layer.linear.weight.as_slice().expect("standard layout"));
                out.push(layer.linear.bias.as_slice().expect("standard layout"));
                out.push(layer.norm.gamma.as_slice().expect("standard layout"));
                out.push(layer.norm.beta.as_slice().expect("standard layout"));
            }
            if let Some(h) = &block.head {
                out.push(h.weight.as_slice().expect("standard layout"));
                out.push(h.bias.as_slice().expect("standard layout"));
            }
        }
        out
    }

    /// Mutable learnables; invalidates outstanding forward caches.
    pub fn learnables_mut(&mut self) -> Vec<&mut [f64]> {
        self.version += 1;
        let mut out: Vec<&mut [f64]> = Vec::new();
        for block in [&mut self.feature, &mut self.regression] {
            for layer in &mut block.layers {
                out.push(layer.linear.weight.as_slice_mut().expect("standard layout"));
                out.push(layer.linear.bias.as_slice_mut().expect("standard layout"));
                out.push(layer.norm.gamma.as_slice_mut().expect("standard layout"));
                out.push(layer.norm.beta.as_slice_mut().expect("standard layout"));
            }
            if let Some(h) = &mut block.head {
                out.push(h.weight.as_slice_mut().expect("standard layout"));
                out.push(h.bias.as_slice_mut().expect("standard layout"));
            }
        }
        out
    }

    /// Running statistics with their names.
    pub fn buffers(&self) -> Vec<(String, &[f64])> {
        let mut out = vec![
            (
                "input.shift".to_string(),
                self.input_shift.as_slice().expect("standard layout"),
            ),
            (
                "input.scale".to_string(),
                self.input_scale.as_slice().expect("standard layout"),
            ),
        ];
        for (prefix, block) in [("feature", &self.feature), ("regression", &self.regression)] {
            for (l, layer) in block.layers.iter().enumerate() {
                out.push((
                    format!("{prefix}.{l}.running_mean"),
                    layer.norm.running_mean.as_slice().expect("standard layout"),
                ));
                out.push((
                    format!("{prefix}.{l}.running_var"),
                    layer.norm.running_var.as_slice().expect("standard layout"),
                ));
            }
        }
        out
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        self.version += 1;
        let mut out: Vec<&mut [f64]> = vec![
            self.input_shift.as_slice_mut().expect("standard layout"),
            self.input_scale.as_slice_mut().expect("standard layout"),
        ];
        for block in [&mut self.feature, &mut self.regression] {
            for layer in &mut block.layers {
                out.push(
                    layer
                        .norm
                        .running_mean
                        .as_slice_mut()
                        .expect("standard layout"),
                );
                out.push(
                    layer
                        .norm
                        .running_var
                        .as_slice_mut()
                        .expect("standard layout"),
                );
            }
        }
        out
    }

    /// Sets the input standardization to the per-column mean and inverse
    /// standard deviation of `inputs` (columns with no spread keep scale 1).
    pub fn fit_input_normalization(&mut self, inputs: &[ArrayView2<'_, f64>]) -> Result<()> {
        let cols = 2 * self.config.joints;
        let rows = stack_rows(inputs, self.config.frames, cols)?;
        if rows.nrows() == 0 {
            return Err(Error::param("no inputs to fit normalization on"));
        }
        let mean = rows.mean_axis(Axis(0)).expect("rows > 0");
        let std = rows.std_axis(Axis(0), 0.0);
        self.version += 1;
        self.input_shift = mean;
        self.input_scale = std.mapv(|s| if s > 1e-12 { 1.0 / s } else { 1.0 });
        Ok(())
    }

    pub fn num_learnables(&self) -> usize {
        self.learnables().iter().map(|t| t.len()).sum()
    }
}

fn flatten_grads(grads: BlockGrads, out: &mut Vec<Vec<f64>>) {
    for l in grads.layers {
        out.push(l.weight.into_raw_vec_and_offset().0);
        out.push(l.bias.to_vec());
        out.push(l.gamma.to_vec());
        out.push(l.beta.to_vec());
    }
    if let Some((w, b)) = grads.head {
        out.push(w.as_standard_layout().iter().copied().collect());
        out.push(b.to_vec());
    }
}

/// L1 objective: summed absolute error per sequence, averaged over
/// sequences and frames (not over the `3J` coordinates).
pub fn l1_loss(pred: &[ArrayView2<'_, f64>], gt: &[ArrayView2<'_, f64>]) -> Result<f64> {
    check_pairs(pred, gt)?;
    let frames = pred[0].nrows() as f64;
    let total: f64 = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| {
            p.iter()
                .zip(g.iter())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        })
        .sum();
    Ok(total / (pred.len() as f64 * frames))
}

/// Gradient of [`l1_loss`] w.r.t. each prediction; `sign(0) = 0`.
pub fn l1_loss_grad(
    pred: &[ArrayView2<'_, f64>],
    gt: &[ArrayView2<'_, f64>],
) -> Result<Vec<Array2<f64>>> {
    check_pairs(pred, gt)?;
    let scale = 1.0 / (pred.len() as f64 * pred[0].nrows() as f64);
    Ok(pred
        .iter()
        .zip(gt)
        .map(|(p, g)| {
            let mut d = p.to_owned() - g;
            d.mapv_inplace(|v| {
                if v > 0.0 {
                    scale
                } else if v < 0.0 {
                    -scale
                } else {
                    0.0
                }
            });
            d
        })
        .collect())
}

fn check_pairs(pred: &[ArrayView2<'_, f64>], gt: &[ArrayView2<'_, f64>]) -> Result<()> {
    if pred.is_empty() || pred.len() != gt.len() {
        return Err(Error::dim(format!(
            "{} predictions vs {} targets",
            pred.len(),
            gt.len()
        )));
    }
    let dim = pred[0].dim();
    for (i, (p, g)) in pred.iter().zip(gt).enumerate() {
        if p.dim() != dim || g.dim() != dim {
            return Err(Error::dim(format!("sequence {i} shape mismatch")));
        }
    }
    Ok(())
}
