//! Building blocks of the regression network and their backward passes.
//!
//! All activations are 2-D with one sample (or one sample-frame) per row.

use ndarray::{s, Array1, Array2, ArrayView2, ArrayViewMut2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::bases::TrajectoryBasis;
use crate::error::{Error, Result};

pub(crate) const BN_EPS: f64 = 1e-5;
pub(crate) const BN_MOMENTUM: f64 = 0.1;

/// `y = x·W + b` with `W` stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    /// Uniform `±1/√fan_in` weights, zero bias.
    pub fn init(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound).expect("bound is finite and positive");
        Self {
            weight: Array2::from_shape_fn((inputs, outputs), |_| dist.sample(rng)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }

    fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }
}

/// Per-feature batch normalization over rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

impl BatchNorm {
    pub fn new(width: usize) -> Self {
        Self {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
        }
    }
}

/// One `Linear → BatchNorm → ReLU → Dropout` unit.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub linear: Linear,
    pub norm: BatchNorm,
}

/// A stack of [`DenseLayer`]s with optional dense connectivity and an
/// optional plain linear head.
///
/// With dense connectivity, layer `l` sees the concatenation
/// `[x₀ | h₀ | … | h_{l−1}]` and the block output (the head input, if any) is
/// `[x₀ | h₀ | … | h_{L−1}]`. Without it the layers form a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlock {
    pub input_width: usize,
    pub width: usize,
    pub dense: bool,
    pub dropout: f64,
    pub layers: Vec<DenseLayer>,
    pub head: Option<Linear>,
}

impl DenseBlock {
    pub fn init(
        input_width: usize,
        width: usize,
        depth: usize,
        dense: bool,
        dropout: f64,
        head_outputs: Option<usize>,
        rng: &mut impl Rng,
    ) -> Self {
        let mut block = Self {
            input_width,
            width,
            dense,
            dropout,
            layers: Vec::with_capacity(depth),
            head: None,
        };
        for l in 0..depth {
            let (a, b) = block.layer_input_range(l);
            block.layers.push(DenseLayer {
                linear: Linear::init(b - a, width, rng),
                norm: BatchNorm::new(width),
            });
        }
        if let Some(out) = head_outputs {
            let (a, b) = block.body_output_range();
            block.head = Some(Linear::init(b - a, out, rng));
        }
        block
    }

    fn full_width(&self) -> usize {
        self.input_width + self.layers.len() * self.width
    }

    fn slot(&self, l: usize) -> (usize, usize) {
        let a = self.input_width + l * self.width;
        (a, a + self.width)
    }

    /// Columns of the full activation matrix that feed layer `l`.
    fn layer_input_range(&self, l: usize) -> (usize, usize) {
        if self.dense {
            (0, self.input_width + l * self.width)
        } else if l == 0 {
            (0, self.input_width)
        } else {
            self.slot(l - 1)
        }
    }

    /// Columns forming the block output before the head.
    fn body_output_range(&self) -> (usize, usize) {
        let depth = self.layers.len();
        if self.dense {
            (0, self.input_width + depth * self.width)
        } else if depth == 0 {
            (0, self.input_width)
        } else {
            self.slot(depth - 1)
        }
    }

    /// Width of the block output: the head's outputs if present, else the body.
    pub fn output_width(&self) -> usize {
        match &self.head {
            Some(h) => h.outputs(),
            None => {
                let (a, b) = self.body_output_range();
                b - a
            }
        }
    }

    pub(crate) fn forward(
        &self,
        x: ArrayView2<'_, f64>,
        train: bool,
        rng: &mut impl Rng,
    ) -> Result<(Array2<f64>, BlockCache)> {
        if x.ncols() != self.input_width {
            return Err(Error::dim(format!(
                "block expects {} input features, got {}",
                self.input_width,
                x.ncols()
            )));
        }
        let rows = x.nrows();
        let mut full = Array2::zeros((rows, self.full_width()));
        full.slice_mut(s![.., ..self.input_width]).assign(&x);
        let mut caches = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let (a, b) = self.layer_input_range(l);
            let z = layer.linear.forward(full.slice(s![.., a..b]));
            let (xhat, inv_std, batch_mean, batch_var) = if train {
                if rows < 2 {
                    return Err(Error::dim(
                        "batch normalization in training needs >= 2 rows",
                    ));
                }
                let mean = z.mean_axis(Axis(0)).expect("rows > 0");
                let centered = &z - &mean;
                let var = centered
                    .mapv(|v| v * v)
                    .mean_axis(Axis(0))
                    .expect("rows > 0");
                let inv = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
                (centered * &inv, inv, Some(mean), Some(var))
            } else {
                let inv = layer.norm.running_var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
                ((&z - &layer.norm.running_mean) * &inv, inv, None, None)
            };
            let y = &xhat * &layer.norm.gamma + &layer.norm.beta;
            let active = y.mapv(|v| v > 0.0);
            let mut h = y.mapv(|v| v.max(0.0));
            let mask = if train && self.dropout > 0.0 {
                let keep = 1.0 / (1.0 - self.dropout);
                let m = Array2::from_shape_fn(h.raw_dim(), |_| {
                    if rng.random::<f64>() < self.dropout {
                        0.0
                    } else {
                        keep
                    }
                });
                h *= &m;
                Some(m)
            } else {
                None
            };
            let (sa, sb) = self.slot(l);
            full.slice_mut(s![.., sa..sb]).assign(&h);
            caches.push(LayerCache {
                xhat,
                inv_std,
                active,
                mask,
                batch_mean,
                batch_var,
            });
        }
        let (a, b) = self.body_output_range();
        let out = match &self.head {
            Some(head) => head.forward(full.slice(s![.., a..b])),
            None => full.slice(s![.., a..b]).to_owned(),
        };
        Ok((
            out,
            BlockCache {
                full,
                layers: caches,
                train,
            },
        ))
    }

    /// Gradients w.r.t. the block input and every learnable, given the
    /// gradient of the block output.
    pub(crate) fn backward(
        &self,
        cache: &BlockCache,
        grad_out: ArrayView2<'_, f64>,
    ) -> (Array2<f64>, BlockGrads) {
        let rows = cache.full.nrows();
        let mut dfull = Array2::<f64>::zeros(cache.full.raw_dim());
        let (oa, ob) = self.body_output_range();
        let head = self.head.as_ref().map(|head| {
            let input = cache.full.slice(s![.., oa..ob]);
            let dw = input.t().dot(&grad_out);
            let db = grad_out.sum_axis(Axis(0));
            dfull
                .slice_mut(s![.., oa..ob])
                .assign(&grad_out.dot(&head.weight.t()));
            (dw, db)
        });
        if head.is_none() {
            dfull.slice_mut(s![.., oa..ob]).assign(&grad_out);
        }

        let mut layer_grads = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let lc = &cache.layers[l];
            let (sa, sb) = self.slot(l);
            let mut dy = dfull.slice(s![.., sa..sb]).to_owned();
            if let Some(m) = &lc.mask {
                dy *= m;
            }
            dy.zip_mut_with(&lc.active, |g, &on| {
                if !on {
                    *g = 0.0
                }
            });
            let dgamma = (&dy * &lc.xhat).sum_axis(Axis(0));
            let dbeta = dy.sum_axis(Axis(0));
            let dxhat = dy * &layer.norm.gamma;
            let dz = if cache.train {
                let n = rows as f64;
                let sum_dxhat = dxhat.sum_axis(Axis(0));
                let sum_dxhat_xhat = (&dxhat * &lc.xhat).sum_axis(Axis(0));
                let mut dz = dxhat * n - &sum_dxhat - &(&lc.xhat * &sum_dxhat_xhat);
                dz *= &(&lc.inv_std / n);
                dz
            } else {
                dxhat * &lc.inv_std
            };
            let (a, b) = self.layer_input_range(l);
            let input = cache.full.slice(s![.., a..b]);
            let dw = input.t().dot(&dz);
            let db = dz.sum_axis(Axis(0));
            let dinput = dz.dot(&layer.linear.weight.t());
            let mut target: ArrayViewMut2<'_, f64> = dfull.slice_mut(s![.., a..b]);
            target += &dinput;
            layer_grads.push(LayerGrads {
                weight: dw,
                bias: db,
                gamma: dgamma,
                beta: dbeta,
            });
        }
        layer_grads.reverse();
        let dx = dfull.slice(s![.., ..self.input_width]).to_owned();
        (
            dx,
            BlockGrads {
                layers: layer_grads,
                head,
            },
        )
    }

    /// Exponential moving update of the running statistics from a training
    /// forward pass (unbiased batch variance).
    pub(crate) fn update_running_stats(&mut self, cache: &BlockCache) {
        let n = cache.full.nrows() as f64;
        for (layer, lc) in self.layers.iter_mut().zip(&cache.layers) {
            if let (Some(mean), Some(var)) = (&lc.batch_mean, &lc.batch_var) {
                let unbiased = var * (n / (n - 1.0).max(1.0));
                layer.norm.running_mean =
                    &layer.norm.running_mean * (1.0 - BN_MOMENTUM) + mean * BN_MOMENTUM;
                layer.norm.running_var =
                    &layer.norm.running_var * (1.0 - BN_MOMENTUM) + unbiased * BN_MOMENTUM;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
    active: Array2<bool>,
    mask: Option<Array2<f64>>,
    batch_mean: Option<Array1<f64>>,
    batch_var: Option<Array1<f64>>,
}

#[derive(Debug, Clone)]
pub(crate) struct BlockCache {
    full: Array2<f64>,
    layers: Vec<LayerCache>,
    train: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct LayerGrads {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct BlockGrads {
    pub layers: Vec<LayerGrads>,
    pub head: Option<(Array2<f64>, Array1<f64>)>,
}

/// Moving average along time with replicate padding at both ends; output has
/// the same length `F` as the input.
pub fn avg_pool_temporal(features: ArrayView2<'_, f64>, window: usize) -> Result<Array2<f64>> {
    let frames = features.nrows();
    check_window(window, frames)?;
    let half = (window / 2) as isize;
    let last = frames as isize - 1;
    let mut out = Array2::zeros(features.raw_dim());
    for f in 0..frames as isize {
        let mut row = out.row_mut(f as usize);
        for d in -half..=half {
            let src = (f + d).clamp(0, last) as usize;
            row += &features.row(src);
        }
        row /= window as f64;
    }
    Ok(out)
}

/// Transpose of [`avg_pool_temporal`].
pub fn avg_pool_temporal_backward(grad: ArrayView2<'_, f64>, window: usize) -> Result<Array2<f64>> {
    let frames = grad.nrows();
    check_window(window, frames)?;
    let half = (window / 2) as isize;
    let last = frames as isize - 1;
    let mut out = Array2::zeros(grad.raw_dim());
    let scale = 1.0 / window as f64;
    for f in 0..frames as isize {
        let g = grad.row(f as usize);
        for d in -half..=half {
            let dst = (f + d).clamp(0, last) as usize;
            out.row_mut(dst).scaled_add(scale, &g);
        }
    }
    Ok(out)
}

fn check_window(window: usize, frames: usize) -> Result<()> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::param(format!(
            "pooling window must be odd, got {window}"
        )));
    }
    if window > frames {
        return Err(Error::param(format!(
            "pooling window {window} exceeds sequence length {frames}"
        )));
    }
    Ok(())
}

/// Maps every feature trajectory (column of `pooled`, `F × C`) to `K`
/// trajectory-space coefficients: `(2/F)·Θᵀ·pooled`, returned `K × C`.
pub fn trajectory_transform(pooled: ArrayView2<'_, f64>, basis: &TrajectoryBasis) -> Array2<f64> {
    let scale = 2.0 / basis.frames() as f64;
    basis.theta().t().dot(&pooled) * scale
}

/// Gradient of [`trajectory_transform`] w.r.t. its input: `(2/F)·Θ·grad`.
pub fn trajectory_transform_backward(
    grad: ArrayView2<'_, f64>,
    basis: &TrajectoryBasis,
) -> Array2<f64> {
    let scale = 2.0 / basis.frames() as f64;
    basis.theta().dot(&grad) * scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::dct_basis;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pooling_examples() {
        let constant = Array2::from_elem((7, 2), 3.5);
        assert_eq!(avg_pool_temporal(constant.view(), 5).unwrap(), constant);

        let spike = array![[0.0], [0.0], [5.0], [0.0], [0.0]];
        let p = avg_pool_temporal(spike.view(), 5).unwrap();
        assert!((p[[2, 0]] - 1.0).abs() < 1e-15);

        let ramp = Array2::from_shape_fn((10, 1), |(f, _)| 2.0 * f as f64 - 3.0);
        let p = avg_pool_temporal(ramp.view(), 5).unwrap();
        for f in 2..8 {
            assert!((p[[f, 0]] - ramp[[f, 0]]).abs() < 1e-12);
        }
        // replicate padding at the left edge: mean(x0, x0, x0, x1, x2)
        assert!((p[[0, 0]] - (-3.0 * 3.0 - 1.0 + 1.0) / 5.0).abs() < 1e-12);
    }

    #[test]
    fn pooling_errors() {
        let x = Array2::<f64>::zeros((4, 1));
        assert!(avg_pool_temporal(x.view(), 5).is_err());
        assert!(avg_pool_temporal(x.view(), 2).is_err());
        assert!(avg_pool_temporal_backward(x.view(), 5).is_err());
    }

    #[test]
    fn pooling_backward_is_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = Array2::from_shape_fn((9, 3), |_| rng.random_range(-1.0..1.0));
        let g = Array2::from_shape_fn((9, 3), |_| rng.random_range(-1.0..1.0));
        let lhs = (&avg_pool_temporal(x.view(), 5).unwrap() * &g).sum();
        let rhs = (&x * &avg_pool_temporal_backward(g.view(), 5).unwrap()).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn transform_matches_matrix_product() {
        let basis = dct_basis(10, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pooled = Array2::from_shape_fn((10, 6), |_| rng.random_range(-1.0..1.0));
        let t = trajectory_transform(pooled.view(), &basis);
        for c in 0..6 {
            for k in 0..4 {
                let direct: f64 = (0..10)
                    .map(|f| basis.theta()[[f, k]] * pooled[[f, c]])
                    .sum::<f64>()
                    * 0.2;
                assert!((t[[k, c]] - direct).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn transform_backward_two_by_two() {
        // F=2, K=2 by hand: Θ = [[.5, h], [.5, -h]], scale 2/F = 1
        let basis = dct_basis(2, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let g = array![[1.0], [2.0]];
        let back = trajectory_transform_backward(g.view(), &basis);
        assert!((back[[0, 0]] - (0.5 + 2.0 * h)).abs() < 1e-15);
        assert!((back[[1, 0]] - (0.5 - 2.0 * h)).abs() < 1e-15);
    }

    #[test]
    fn constant_trajectory_has_only_dc() {
        let basis = dct_basis(12, 5).unwrap();
        let t = trajectory_transform(Array2::from_elem((12, 3), 2.0).view(), &basis);
        assert!(t.row(0).iter().all(|v| (v - 2.0).abs() < 1e-14));
        assert!(t.slice(s![1.., ..]).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn block_widths() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dense = DenseBlock::init(6, 4, 3, true, 0.0, None, &mut rng);
        assert_eq!(dense.layers[0].linear.inputs(), 6);
        assert_eq!(dense.layers[2].linear.inputs(), 14);
        assert_eq!(dense.output_width(), 18);
        let chain = DenseBlock::init(6, 4, 3, false, 0.0, Some(2), &mut rng);
        assert_eq!(chain.layers[2].linear.inputs(), 4);
        assert_eq!(chain.head.as_ref().unwrap().inputs(), 4);
        assert_eq!(chain.output_width(), 2);
    }
}
