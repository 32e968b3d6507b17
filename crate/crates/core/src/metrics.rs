//! Pose accuracy metrics: MPJPE under root and similarity alignment, PCK and
//! AUC.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};
use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::motion::{root_align_rows, SkeletonConfig};

pub const PCK_THRESHOLD_MM: f64 = 150.0;

/// `0, 5, …, 150` mm.
pub fn default_auc_thresholds() -> Vec<f64> {
    (0..=30).map(|i| 5.0 * i as f64).collect()
}

fn check_pair(pred: ArrayView2<'_, f64>, gt: ArrayView2<'_, f64>) -> Result<()> {
    if pred.dim() != gt.dim() {
        return Err(Error::dim(format!(
            "prediction is {}x{}, ground truth {}x{}",
            pred.nrows(),
            pred.ncols(),
            gt.nrows(),
            gt.ncols()
        )));
    }
    if pred.ncols() % 3 != 0 || pred.is_empty() {
        return Err(Error::dim(format!(
            "expected a non-empty F x 3J matrix, got {}x{}",
            pred.nrows(),
            pred.ncols()
        )));
    }
    Ok(())
}

/// Euclidean distance per (frame, joint), no alignment.
pub fn joint_errors(pred: ArrayView2<'_, f64>, gt: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    check_pair(pred, gt)?;
    let joints = pred.ncols() / 3;
    Ok(Array2::from_shape_fn((pred.nrows(), joints), |(f, j)| {
        (0..3)
            .map(|d| {
                let e = pred[[f, 3 * j + d]] - gt[[f, 3 * j + d]];
                e * e
            })
            .sum::<f64>()
            .sqrt()
    }))
}

fn root_aligned_errors(
    pred: ArrayView2<'_, f64>,
    gt: ArrayView2<'_, f64>,
    skeleton: &SkeletonConfig,
) -> Result<Array2<f64>> {
    check_pair(pred, gt)?;
    if skeleton.num_joints() != pred.ncols() / 3 {
        return Err(Error::dim(format!(
            "skeleton has {} joints, poses have {}",
            skeleton.num_joints(),
            pred.ncols() / 3
        )));
    }
    let p = root_align_rows(pred, skeleton.root_index);
    let g = root_align_rows(gt, skeleton.root_index);
    joint_errors(p.view(), g.view())
}

fn mean(m: &Array2<f64>) -> f64 {
    m.mean().expect("checked non-empty")
}

/// Protocol 1: both sequences root-aligned per frame, then mean joint error.
pub fn mpjpe_p1(
    pred: ArrayView2<'_, f64>,
    gt: ArrayView2<'_, f64>,
    skeleton: &SkeletonConfig,
) -> Result<f64> {
    Ok(mean(&root_aligned_errors(pred, gt, skeleton)?))
}

/// Result of a similarity fit `x ↦ s·R·x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Similarity {
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let v = self.rotation * Vector3::from(p) * self.scale + self.translation;
        [v.x, v.y, v.z]
    }
}

fn centroid(points: &[[f64; 3]]) -> Vector3<f64> {
    points
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + Vector3::from(*p))
        / points.len() as f64
}

/// Least-squares similarity transform taking `pred` onto `gt`, with the
/// rotation restricted to `det = +1`.
pub fn procrustes_transform(pred: &[[f64; 3]], gt: &[[f64; 3]]) -> Result<Similarity> {
    if pred.len() != gt.len() {
        return Err(Error::dim(format!(
            "{} predicted joints vs {} ground-truth joints",
            pred.len(),
            gt.len()
        )));
    }
    if pred.len() < 3 {
        return Err(Error::param(
            "similarity alignment needs at least three joints",
        ));
    }
    let (mp, mg) = (centroid(pred), centroid(gt));
    let mut cov = Matrix3::zeros();
    let (mut spread_p, mut spread_g) = (0.0, 0.0);
    for (p, g) in pred.iter().zip(gt) {
        let x = Vector3::from(*p) - mp;
        let y = Vector3::from(*g) - mg;
        cov += y * x.transpose();
        spread_p += x.norm_squared();
        spread_g += y.norm_squared();
    }
    if spread_p <= f64::EPSILON * (1.0 + mp.norm_squared())
        || spread_g <= f64::EPSILON * (1.0 + mg.norm_squared())
    {
        return Err(Error::numeric("degenerate point set: all joints coincide"));
    }
    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut fix = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        // flip the direction of the smallest singular value
        let smallest = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("three values");
        fix[(smallest, smallest)] = -1.0;
    }
    let rotation = u * fix * v_t;
    let trace: f64 = (0..3).map(|i| fix[(i, i)] * svd.singular_values[i]).sum();
    let scale = trace / spread_p;
    Ok(Similarity {
        scale,
        rotation,
        translation: mg - rotation * mp * scale,
    })
}

/// `pred` after the best similarity alignment onto `gt`.
pub fn procrustes_align(pred: &[[f64; 3]], gt: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
    let t = procrustes_transform(pred, gt)?;
    Ok(pred.iter().map(|p| t.apply(*p)).collect())
}

fn frame_points(row: ndarray::ArrayView1<'_, f64>) -> Vec<[f64; 3]> {
    row.iter()
        .copied()
        .collect::<Vec<_>>()
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect()
}

fn procrustes_errors(pred: ArrayView2<'_, f64>, gt: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    check_pair(pred, gt)?;
    let joints = pred.ncols() / 3;
    let mut out = Array2::zeros((pred.nrows(), joints));
    for (f, (p, g)) in pred.rows().into_iter().zip(gt.rows()).enumerate() {
        let gp = frame_points(g);
        let aligned = procrustes_align(&frame_points(p), &gp)?;
        for (j, (a, b)) in aligned.iter().zip(&gp).enumerate() {
            out[[f, j]] =
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        }
    }
    Ok(out)
}

/// Protocol 2: per-frame similarity alignment, then mean joint error.
pub fn mpjpe_p2(pred: ArrayView2<'_, f64>, gt: ArrayView2<'_, f64>) -> Result<f64> {
    Ok(mean(&procrustes_errors(pred, gt)?))
}

fn pck_of(errors: &Array2<f64>, threshold: f64) -> f64 {
    let hits = errors.iter().filter(|e| **e <= threshold).count();
    100.0 * hits as f64 / errors.len() as f64
}

fn auc_of(errors: &Array2<f64>, thresholds: &[f64]) -> Result<f64> {
    if thresholds.is_empty() {
        return Err(Error::param("empty threshold grid"));
    }
    Ok(thresholds.iter().map(|t| pck_of(errors, *t)).sum::<f64>() / thresholds.len() as f64)
}

/// Percentage of (frame, joint) pairs whose error is at most `threshold`.
/// Distances are taken on the coordinates as given.
pub fn pck(pred: ArrayView2<'_, f64>, gt: ArrayView2<'_, f64>, threshold: f64) -> Result<f64> {
    Ok(pck_of(&joint_errors(pred, gt)?, threshold))
}

/// Mean [`pck`] over `thresholds`.
pub fn auc(pred: ArrayView2<'_, f64>, gt: ArrayView2<'_, f64>, thresholds: &[f64]) -> Result<f64> {
    auc_of(&joint_errors(pred, gt)?, thresholds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mpjpe_p1: f64,
    pub mpjpe_p2: f64,
    pub pck150: f64,
    pub auc: f64,
    /// Protocol-1 error of every frame.
    pub per_frame_errors: Vec<f64>,
}

impl EvalReport {
    /// All metrics; PCK and AUC use root-aligned poses.
    pub fn compute(
        pred: ArrayView2<'_, f64>,
        gt: ArrayView2<'_, f64>,
        skeleton: &SkeletonConfig,
    ) -> Result<Self> {
        let errors = root_aligned_errors(pred, gt, skeleton)?;
        let per_frame_errors = errors
            .rows()
            .into_iter()
            .map(|r| r.mean().expect("joints > 0"))
            .collect();
        Ok(Self {
            mpjpe_p1: mean(&errors),
            mpjpe_p2: mpjpe_p2(pred, gt)?,
            pck150: pck_of(&errors, PCK_THRESHOLD_MM),
            auc: auc_of(&errors, &default_auc_thresholds())?,
            per_frame_errors,
        })
    }

    pub fn to_key_value(&self) -> String {
        format!(
            "mpjpe_p1={:?}\nmpjpe_p2={:?}\npck150={:?}\nauc={:?}\nframes={}\n",
            self.mpjpe_p1,
            self.mpjpe_p2,
            self.pck150,
            self.auc,
            self.per_frame_errors.len()
        )
    }

    pub fn per_frame_csv(&self) -> String {
        let mut out = String::from("frame,mpjpe_p1\n");
        for (i, e) in self.per_frame_errors.iter().enumerate() {
            writeln!(out, "{i},{e:?}").expect("writing to a String cannot fail");
        }
        out
    }
}
