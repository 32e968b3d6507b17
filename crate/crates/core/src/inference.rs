//! Whole-video lifting with overlapping fixed-length windows.

use ndarray::{s, Array2, ArrayView2};

use crate::bases::TrajectoryBasis;
use crate::error::{Error, Result};
use crate::motion::{flip_rows, SkeletonConfig};
use crate::network::{Mode, NetworkParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlidingConfig {
    /// Window length `F`.
    pub frames: usize,
    /// Distance between window starts.
    pub step: usize,
    /// Also lift the mirrored input and average with the un-mirrored result.
    pub flip_average: bool,
}

impl SlidingConfig {
    pub fn new(frames: usize) -> Self {
        Self {
            frames,
            step: 5,
            flip_average: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 || self.step == 0 || self.step > self.frames {
            return Err(Error::param(format!(
                "step {} must be in [1, F={}]",
                self.step, self.frames
            )));
        }
        Ok(())
    }
}

/// Something that lifts fixed-length `F × 2J` windows to `F × 3J` poses.
pub trait WindowModel {
    fn frames(&self) -> usize;
    fn joints(&self) -> usize;
    fn lift_windows(&self, windows: &[ArrayView2<'_, f64>]) -> Result<Vec<Array2<f64>>>;
}

/// A trained network paired with its basis, always evaluated in eval mode.
#[derive(Debug, Clone)]
pub struct Lifter {
    params: NetworkParams,
    basis: TrajectoryBasis,
    chunk: usize,
}

impl Lifter {
    pub fn new(mut params: NetworkParams, basis: TrajectoryBasis) -> Result<Self> {
        if basis.frames() != params.config.frames || basis.num_bases() != params.config.num_bases {
            return Err(Error::dim("basis does not match the network"));
        }
        params.set_mode(Mode::Eval);
        Ok(Self {
            params,
            basis,
            chunk: 64,
        })
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    pub fn basis(&self) -> &TrajectoryBasis {
        &self.basis
    }
}

impl WindowModel for Lifter {
    fn frames(&self) -> usize {
        self.params.config.frames
    }

    fn joints(&self) -> usize {
        self.params.config.joints
    }

    fn lift_windows(&self, windows: &[ArrayView2<'_, f64>]) -> Result<Vec<Array2<f64>>> {
        self.params.predict(&self.basis, windows, self.chunk)
    }
}

/// `0, q, 2q, …` plus a final `L − F` when the stride does not land there.
pub fn window_starts(len: usize, cfg: &SlidingConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    if len < cfg.frames {
        return Err(Error::param(format!(
            "video has {len} frames, shorter than the window F={}",
            cfg.frames
        )));
    }
    let last = len - cfg.frames;
    let mut starts: Vec<usize> = (0..=last).step_by(cfg.step).collect();
    if *starts.last().expect("0 is always a start") != last {
        starts.push(last);
    }
    Ok(starts)
}

/// `L × W` matrix whose entry `(t, w)` is the weight of window `w` in the
/// estimate for frame `t`.
pub fn frame_weights(len: usize, cfg: &SlidingConfig) -> Result<Array2<f64>> {
    let starts = window_starts(len, cfg)?;
    let mut w = Array2::zeros((len, starts.len()));
    for (i, &s0) in starts.iter().enumerate() {
        w.slice_mut(s![s0..s0 + cfg.frames, i]).fill(1.0);
    }
    for mut row in w.rows_mut() {
        let n = row.sum();
        row /= n;
    }
    Ok(w)
}

/// Lifts an `L × 2J` video, averaging every frame over the windows that
/// contain it. Flip averaging needs the skeleton's left/right pairs.
pub fn sliding_infer(
    model: &impl WindowModel,
    video: ArrayView2<'_, f64>,
    cfg: &SlidingConfig,
    skeleton: Option<&SkeletonConfig>,
) -> Result<Array2<f64>> {
    if cfg.frames != model.frames() {
        return Err(Error::param(format!(
            "window length {} differs from model F={}",
            cfg.frames,
            model.frames()
        )));
    }
    let joints = model.joints();
    if video.ncols() != 2 * joints {
        return Err(Error::dim(format!(
            "video has {} columns, model expects {}",
            video.ncols(),
            2 * joints
        )));
    }
    let len = video.nrows();
    let starts = window_starts(len, cfg)?;
    let windows: Vec<ArrayView2<f64>> = starts
        .iter()
        .map(|&s0| video.slice(s![s0..s0 + cfg.frames, ..]))
        .collect();
    let mut poses = model.lift_windows(&windows)?;

    if cfg.flip_average {
        let sk = skeleton.ok_or_else(|| Error::param("flip averaging needs a skeleton"))?;
        let mirrored: Vec<Array2<f64>> = windows
            .iter()
            .map(|w| flip_rows(*w, 2, sk))
            .collect::<Result<_>>()?;
        let views: Vec<ArrayView2<f64>> = mirrored.iter().map(|m| m.view()).collect();
        for (p, m) in poses.iter_mut().zip(model.lift_windows(&views)?) {
            let back = flip_rows(m.view(), 3, sk)?;
            *p = (&*p + &back) * 0.5;
        }
    }

    // sum then divide, so identical window estimates average exactly
    let mut out = Array2::zeros((len, 3 * joints));
    let mut counts = vec![0usize; len];
    for (&s0, p) in starts.iter().zip(&poses) {
        out.slice_mut(s![s0..s0 + cfg.frames, ..])
            .scaled_add(1.0, p);
        for c in &mut counts[s0..s0 + cfg.frames] {
            *c += 1;
        }
    }
    for (mut row, n) in out.rows_mut().into_iter().zip(counts) {
        row /= n as f64;
    }
    Ok(out)
}
