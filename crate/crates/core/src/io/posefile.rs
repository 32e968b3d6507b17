//! `POSESEQ v1 F=<F> J=<J> D=<2|3>` followed by `F` rows of `J·D` values.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::text::{
    content_lines, field, parse_err, parse_floats, parse_header, push_row, read_to_string,
    write_string,
};
use crate::error::{Error, Result};
use crate::motion::{MotionMatrix, Pose2d, Pose3d};

/// A sequence of 2D or 3D poses, one frame per row of `data`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequence {
    dims: usize,
    joints: usize,
    data: Array2<f64>,
}

impl PoseSequence {
    pub fn new(data: Array2<f64>, dims: usize) -> Result<Self> {
        if dims != 2 && dims != 3 {
            return Err(Error::param(format!(
                "pose dimension must be 2 or 3, got {dims}"
            )));
        }
        if data.nrows() == 0 || data.ncols() == 0 || data.ncols() % dims != 0 {
            return Err(Error::dim(format!(
                "{}x{} array is not a non-empty {dims}-D pose sequence",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("pose sequence contains non-finite values"));
        }
        Ok(Self {
            dims,
            joints: data.ncols() / dims,
            data,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.data
    }

    pub fn to_motion_matrix(&self) -> Result<MotionMatrix> {
        if self.dims != 3 {
            return Err(Error::dim("a motion matrix needs 3-D poses"));
        }
        MotionMatrix::new(self.data.clone())
    }

    pub fn poses2d(&self) -> Result<Vec<Pose2d>> {
        if self.dims != 2 {
            return Err(Error::dim("sequence does not hold 2-D poses"));
        }
        Ok(self
            .data
            .rows()
            .into_iter()
            .map(|r| Pose2d::new(r.to_vec().chunks_exact(2).map(|c| [c[0], c[1]]).collect()))
            .collect())
    }

    pub fn poses3d(&self) -> Result<Vec<Pose3d>> {
        if self.dims != 3 {
            return Err(Error::dim("sequence does not hold 3-D poses"));
        }
        crate::motion::poses_from_motion_matrix(self.data.view())
    }
}

pub fn write_pose_sequence(seq: &PoseSequence) -> String {
    let mut out = format!(
        "POSESEQ v1 F={} J={} D={}\n",
        seq.frames(),
        seq.joints,
        seq.dims
    );
    for row in seq.data.rows() {
        push_row(&mut out, row.iter());
    }
    out
}

pub fn save_pose_sequence(seq: &PoseSequence, path: &Path) -> Result<()> {
    write_string(path, &write_pose_sequence(seq))
}

pub fn parse_pose_sequence(text: &str, path: &str) -> Result<PoseSequence> {
    let mut lines = content_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty pose file"))?;
    let fields = parse_header(header, "POSESEQ", "v1", path, hline)?;
    let frames: usize = field(&fields, "F", path, hline)?;
    let joints: usize = field(&fields, "J", path, hline)?;
    let dims: usize = field(&fields, "D", path, hline)?;
    if dims != 2 && dims != 3 {
        return Err(parse_err(
            path,
            hline,
            format!("D must be 2 or 3, got {dims}"),
        ));
    }
    if frames == 0 || joints == 0 {
        return Err(parse_err(path, hline, "F and J must be positive"));
    }
    let width = joints * dims;
    let mut data = Array2::zeros((frames, width));
    let mut rows = 0;
    for (no, line) in lines {
        if rows == frames {
            return Err(parse_err(
                path,
                no,
                format!("header declares F={frames} but more rows follow"),
            ));
        }
        let vals = parse_floats(line, path, no)?;
        if vals.len() != width {
            return Err(parse_err(
                path,
                no,
                format!(
                    "expected {width} values (J={joints}, D={dims}), found {}",
                    vals.len()
                ),
            ));
        }
        data.row_mut(rows).assign(&Array1::from(vals));
        rows += 1;
    }
    if rows != frames {
        return Err(parse_err(
            path,
            text.lines().count() + 1,
            format!("header declares F={frames} but only {rows} rows present"),
        ));
    }
    PoseSequence::new(data, dims)
}

pub fn load_pose_sequence(path: &Path) -> Result<PoseSequence> {
    parse_pose_sequence(&read_to_string(path)?, &path.display().to_string())
}
