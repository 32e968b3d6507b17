//! Band-limited synthetic motion.
//!
//! Every trajectory column is a combination of the first `k_gen` DCT bases
//! plus optional i.i.d. Gaussian noise, so the factorization `S = Θ·A` holds
//! exactly when `noise_sigma = 0`.
//!
//! With `latent_rank = 0` each of the `3J` columns gets independent
//! coefficients. With `latent_rank = r > 0` the joints move jointly: a
//! dataset-wide rest pose `μ` and shape matrix `B` (`r × 3J`) are drawn once
//! and each sequence is `1·μᵀ + Θ·C·B` with random `C` (`k_gen × r`). The
//! latent variant makes depth recoverable from 2D projections, which is what
//! a lifting network needs in order to learn anything. When a skeleton is
//! supplied the rest pose and shape space are made mirror-symmetric, so the
//! sequence distribution is invariant under horizontal flips.

use ndarray::{Array1, Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::camera::{normalize_2d, project_camera, CameraModel};
use crate::bases::{dct_basis, TrajectoryBasis};
use crate::error::{Error, Result};
use crate::motion::{flip_rows, root_align_rows, MotionMatrix, SkeletonConfig};
use crate::network::Sample;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub frames: usize,
    pub joints: usize,
    /// Number of DCT bases the motion is generated from.
    pub k_gen: usize,
    /// Standard deviation of the generating coefficients, in mm.
    pub amplitude: f64,
    /// Standard deviation of the additive per-entry noise, in mm.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Dimension of the shared shape space; 0 makes all columns independent.
    pub latent_rank: usize,
    /// Spread of the rest pose in mm (latent mode only).
    pub rest_scale: f64,
    /// Added to every Z coordinate so pinhole depths stay positive.
    pub depth_offset: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            frames: 50,
            joints: 17,
            k_gen: 8,
            amplitude: 100.0,
            noise_sigma: 0.0,
            seed: 0,
            latent_rank: 0,
            rest_scale: 300.0,
            depth_offset: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 || self.joints == 0 {
            return Err(Error::param("frames and joints must be positive"));
        }
        if self.k_gen == 0 || self.k_gen > self.frames {
            return Err(Error::param(format!(
                "k_gen={} must be in [1, F={}]",
                self.k_gen, self.frames
            )));
        }
        if !(self.noise_sigma >= 0.0) || !(self.amplitude >= 0.0) || !(self.rest_scale >= 0.0) {
            return Err(Error::param(
                "amplitude, rest_scale and noise_sigma must be >= 0",
            ));
        }
        if !self.depth_offset.is_finite() {
            return Err(Error::param("depth_offset must be finite"));
        }
        Ok(())
    }
}

/// Seeded generator; sequence `i` is a pure function of `(config, i)`.
#[derive(Debug, Clone)]
pub struct SynthGenerator {
    cfg: SynthConfig,
    basis: TrajectoryBasis,
    rest: Array1<f64>,
    shapes: Option<Array2<f64>>,
}

fn standard_normal(rng: &mut impl rand::Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn mirror(v: &Array1<f64>, skeleton: Option<&SkeletonConfig>) -> Result<Array1<f64>> {
    match skeleton {
        Some(s) => {
            let row = v.view().insert_axis(ndarray::Axis(0));
            Ok(flip_rows(row, 3, s)?.row(0).to_owned())
        }
        None => Ok(v.clone()),
    }
}

impl SynthGenerator {
    pub fn new(cfg: SynthConfig, skeleton: Option<&SkeletonConfig>) -> Result<Self> {
        cfg.validate()?;
        if let Some(s) = skeleton {
            if s.num_joints() != cfg.joints {
                return Err(Error::dim(format!(
                    "skeleton has {} joints, config has {}",
                    s.num_joints(),
                    cfg.joints
                )));
            }
        }
        let basis = dct_basis(cfg.frames, cfg.k_gen)?;
        let width = 3 * cfg.joints;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut gauss =
            |n: usize| -> Array1<f64> { Array1::from_shape_fn(n, |_| standard_normal(&mut rng)) };

        let (rest, shapes) = if cfg.latent_rank == 0 {
            (Array1::zeros(width), None)
        } else {
            let raw = gauss(width) * cfg.rest_scale;
            let rest = if skeleton.is_some() {
                (&raw + &mirror(&raw, skeleton)?) * 0.5
            } else {
                raw
            };
            let r = cfg.latent_rank;
            let mut shapes = Array2::zeros((r, width));
            let mut i = 0;
            while i < r {
                let b = gauss(width) / (r as f64).sqrt();
                if skeleton.is_some() && i + 1 < r {
                    let m = mirror(&b, skeleton)?;
                    shapes.row_mut(i).assign(&b);
                    shapes.row_mut(i + 1).assign(&m);
                    i += 2;
                } else {
                    let sym = if skeleton.is_some() {
                        (&b + &mirror(&b, skeleton)?) * 0.5
                    } else {
                        b
                    };
                    shapes.row_mut(i).assign(&sym);
                    i += 1;
                }
            }
            (rest, Some(shapes))
        };
        Ok(Self {
            cfg,
            basis,
            rest,
            shapes,
        })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.cfg
    }

    /// Clean (noise-free) and noisy versions of sequence `index`.
    pub fn sequence_pair(&self, index: u64) -> Result<(MotionMatrix, MotionMatrix)> {
        let cfg = &self.cfg;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(index + 1);
        let width = 3 * cfg.joints;
        let theta = self.basis.theta();

        let mut clean = match &self.shapes {
            None => {
                let a = Array2::from_shape_fn((cfg.k_gen, width), |_| {
                    cfg.amplitude * standard_normal(&mut rng)
                });
                theta.dot(&a)
            }
            Some(b) => {
                let c = Array2::from_shape_fn((cfg.k_gen, b.nrows()), |_| {
                    cfg.amplitude * standard_normal(&mut rng)
                });
                theta.dot(&c).dot(b) + &self.rest
            }
        };
        for j in 0..cfg.joints {
            clean
                .column_mut(3 * j + 2)
                .mapv_inplace(|z| z + cfg.depth_offset);
        }
        let mut noisy = clean.clone();
        if cfg.noise_sigma > 0.0 {
            let noise = Normal::new(0.0, cfg.noise_sigma)
                .map_err(|e| Error::param(format!("noise distribution: {e}")))?;
            noisy.mapv_inplace(|v| v + noise.sample(&mut rng));
        }
        Ok((MotionMatrix::new(clean)?, MotionMatrix::new(noisy)?))
    }

    /// Noisy sequence `index`.
    pub fn sequence(&self, index: u64) -> Result<MotionMatrix> {
        Ok(self.sequence_pair(index)?.1)
    }

    /// Sequences `0..n`.
    pub fn corpus(&self, n: usize) -> Result<Vec<MotionMatrix>> {
        (0..n as u64).map(|i| self.sequence(i)).collect()
    }
}

/// First sequence of a generator built from `cfg` without a skeleton.
pub fn synth_motion(cfg: &SynthConfig) -> Result<MotionMatrix> {
    SynthGenerator::new(cfg.clone(), None)?.sequence(0)
}

/// Builds a training pair from camera-space 3D motion: normalized 2D
/// projection as input and the root-aligned motion as target.
pub fn lifting_sample(
    motion: ArrayView2<'_, f64>,
    camera: &CameraModel,
    image_size: (f64, f64),
    root_index: usize,
) -> Result<Sample> {
    let px = project_camera(motion, camera)?;
    let input = normalize_2d(px.view(), image_size.0, image_size.1)?;
    let target = root_align_rows(motion, root_index);
    Sample::new(input, target)
}
