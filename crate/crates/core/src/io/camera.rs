use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Maps camera-space 3D joints to image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CameraModel {
    /// `(X, Y, Z) → (X, Y)`.
    Orthographic,
    /// `(X, Y, Z) → (f·X/Z + cx, f·Y/Z + cy)`.
    Pinhole { focal: f64, cx: f64, cy: f64 },
}

impl CameraModel {
    pub fn pinhole(focal: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(focal > 0.0) || !focal.is_finite() {
            return Err(Error::param(format!(
                "focal length must be positive, got {focal}"
            )));
        }
        Ok(CameraModel::Pinhole { focal, cx, cy })
    }
}

/// Projects an `F × 3J` sequence to `F × 2J`.
pub fn project_camera(seq3d: ArrayView2<'_, f64>, cam: &CameraModel) -> Result<Array2<f64>> {
    if seq3d.ncols() % 3 != 0 {
        return Err(Error::dim(format!(
            "{} columns is not a multiple of 3",
            seq3d.ncols()
        )));
    }
    let joints = seq3d.ncols() / 3;
    let mut out = Array2::zeros((seq3d.nrows(), 2 * joints));
    for (f, row) in seq3d.rows().into_iter().enumerate() {
        for j in 0..joints {
            let (x, y, z) = (row[3 * j], row[3 * j + 1], row[3 * j + 2]);
            let (u, v) = match *cam {
                CameraModel::Orthographic => (x, y),
                CameraModel::Pinhole { focal, cx, cy } => {
                    if !(z > 0.0) {
                        return Err(Error::numeric(format!(
                            "joint {j} at frame {f} has non-positive depth {z}"
                        )));
                    }
                    (focal * x / z + cx, focal * y / z + cy)
                }
            };
            out[[f, 2 * j]] = u;
            out[[f, 2 * j + 1]] = v;
        }
    }
    Ok(out)
}

fn check_image(width: f64, height: f64) -> Result<f64> {
    if !(width > 0.0 && height > 0.0) {
        return Err(Error::param(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    Ok(width.max(height))
}

/// Pixel coordinates to `[-1, 1]` along the long image side, aspect kept:
/// `u' = (2u − w)/max(w, h)`, `v' = (2v − h)/max(w, h)`.
pub fn normalize_2d(seq2d: ArrayView2<'_, f64>, width: f64, height: f64) -> Result<Array2<f64>> {
    let long = check_image(width, height)?;
    if seq2d.ncols() % 2 != 0 {
        return Err(Error::dim("2-D sequence needs an even column count"));
    }
    let mut out = seq2d.to_owned();
    for mut row in out.rows_mut() {
        for (i, v) in row.iter_mut().enumerate() {
            let size = if i % 2 == 0 { width } else { height };
            *v = (2.0 * *v - size) / long;
        }
    }
    Ok(out)
}

/// Inverse of [`normalize_2d`].
pub fn denormalize_2d(seq2d: ArrayView2<'_, f64>, width: f64, height: f64) -> Result<Array2<f64>> {
    let long = check_image(width, height)?;
    if seq2d.ncols() % 2 != 0 {
        return Err(Error::dim("2-D sequence needs an even column count"));
    }
    let mut out = seq2d.to_owned();
    for mut row in out.rows_mut() {
        for (i, v) in row.iter_mut().enumerate() {
            let size = if i % 2 == 0 { width } else { height };
            *v = (*v * long + size) / 2.0;
        }
    }
    Ok(out)
}
