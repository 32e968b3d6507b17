//! Pose and motion representations.
//!
//! 3D coordinates are in millimeters, 2D coordinates in normalized image
//! units (see [`crate::io::normalize_2d`]).

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// One frame of 3D joint positions `(X, Y, Z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose3d {
    pub joints: Vec<[f64; 3]>,
}

/// One frame of 2D joint positions `(u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose2d {
    pub joints: Vec<[f64; 2]>,
}

impl Pose3d {
    pub fn new(joints: Vec<[f64; 3]>) -> Self {
        Self { joints }
    }

    pub fn num_joints(&self) -> usize {
        self.joints.len()
    }
}

impl Pose2d {
    pub fn new(joints: Vec<[f64; 2]>) -> Self {
        Self { joints }
    }

    pub fn num_joints(&self) -> usize {
        self.joints.len()
    }
}

/// `F × 3J` matrix whose row `f` is `X₁ Y₁ Z₁ … X_J Y_J Z_J` at frame `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionMatrix {
    data: Array2<f64>,
}

impl MotionMatrix {
    /// Wraps an `F × 3J` array.
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.ncols() % 3 != 0 {
            return Err(Error::dim(format!(
                "motion matrix needs a multiple of 3 columns, got {}",
                data.ncols()
            )));
        }
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::dim("motion matrix must be non-empty"));
        }
        Ok(Self { data })
    }

    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn joints(&self) -> usize {
        self.data.ncols() / 3
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.data
    }

    /// Position of `joint` at `frame`.
    pub fn joint(&self, frame: usize, joint: usize) -> [f64; 3] {
        let r = self.data.row(frame);
        [r[3 * joint], r[3 * joint + 1], r[3 * joint + 2]]
    }
}

/// Joint names, root joint and left/right pairs used for flipping.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonConfig {
    pub joint_names: Vec<String>,
    pub root_index: usize,
    pub lr_pairs: Vec<(usize, usize)>,
}

impl SkeletonConfig {
    /// Validates index ranges and pair disjointness.
    pub fn new(
        joint_names: Vec<String>,
        root_index: usize,
        lr_pairs: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let j = joint_names.len();
        if j == 0 {
            return Err(Error::param("skeleton needs at least one joint"));
        }
        if root_index >= j {
            return Err(Error::param(format!(
                "root index {root_index} out of range for {j} joints"
            )));
        }
        let mut seen = vec![false; j];
        for &(l, r) in &lr_pairs {
            if l >= j || r >= j {
                return Err(Error::param(format!("pair ({l}, {r}) out of range")));
            }
            if l == r {
                return Err(Error::param(format!("joint {l} paired with itself")));
            }
            if l == root_index || r == root_index {
                return Err(Error::param("root joint cannot be in a left/right pair"));
            }
            for idx in [l, r] {
                if seen[idx] {
                    return Err(Error::param(format!("joint {idx} appears in two pairs")));
                }
                seen[idx] = true;
            }
        }
        Ok(Self {
            joint_names,
            root_index,
            lr_pairs,
        })
    }

    /// The common 17-joint Human3.6M layout, hip as root.
    pub fn h36m17() -> Self {
        let names = [
            "hip",
            "r_hip",
            "r_knee",
            "r_foot",
            "l_hip",
            "l_knee",
            "l_foot",
            "spine",
            "thorax",
            "neck",
            "head",
            "l_shoulder",
            "l_elbow",
            "l_wrist",
            "r_shoulder",
            "r_elbow",
            "r_wrist",
        ];
        Self::new(
            names.iter().map(|s| s.to_string()).collect(),
            0,
            vec![(4, 1), (5, 2), (6, 3), (11, 14), (12, 15), (13, 16)],
        )
        .expect("static skeleton is valid")
    }

    /// `J` anonymous joints, joint 0 as root and no pairs.
    pub fn generic(joints: usize) -> Result<Self> {
        Self::new((0..joints).map(|i| format!("j{i}")).collect(), 0, vec![])
    }

    pub fn num_joints(&self) -> usize {
        self.joint_names.len()
    }

    /// `perm[j]` is the joint whose flipped value lands on `j`.
    pub fn flip_permutation(&self) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.num_joints()).collect();
        for &(l, r) in &self.lr_pairs {
            perm[l] = r;
            perm[r] = l;
        }
        perm
    }

    fn check_joints(&self, j: usize) -> Result<()> {
        if j != self.num_joints() {
            return Err(Error::dim(format!(
                "pose has {j} joints, skeleton has {}",
                self.num_joints()
            )));
        }
        Ok(())
    }
}

/// Stacks poses row-wise into a motion matrix.
pub fn motion_matrix_from_poses(poses: &[Pose3d]) -> Result<MotionMatrix> {
    let first = poses
        .first()
        .ok_or_else(|| Error::dim("need at least one frame"))?;
    let j = first.num_joints();
    if j == 0 {
        return Err(Error::dim("pose has no joints"));
    }
    let mut data = Array2::zeros((poses.len(), 3 * j));
    for (f, pose) in poses.iter().enumerate() {
        if pose.num_joints() != j {
            return Err(Error::dim(format!(
                "frame {f} has {} joints, expected {j}",
                pose.num_joints()
            )));
        }
        for (jj, p) in pose.joints.iter().enumerate() {
            for c in 0..3 {
                data[[f, 3 * jj + c]] = p[c];
            }
        }
    }
    MotionMatrix::new(data)
}

/// Splits each row of an `F × 3J` array back into a pose.
pub fn poses_from_motion_matrix(m: ArrayView2<'_, f64>) -> Result<Vec<Pose3d>> {
    if m.ncols() % 3 != 0 {
        return Err(Error::dim(format!(
            "{} columns is not a multiple of 3",
            m.ncols()
        )));
    }
    Ok(m.rows()
        .into_iter()
        .map(|row| {
            Pose3d::new(
                row.as_slice()
                    .map(|s| s.to_vec())
                    .unwrap_or_else(|| row.to_vec())
                    .chunks_exact(3)
                    .map(|c| [c[0], c[1], c[2]])
                    .collect(),
            )
        })
        .collect())
}

/// Translates the pose so the root joint sits at the origin.
pub fn root_align(pose: &Pose3d, skeleton: &SkeletonConfig) -> Result<Pose3d> {
    skeleton.check_joints(pose.num_joints())?;
    let root = pose.joints[skeleton.root_index];
    Ok(Pose3d::new(
        pose.joints
            .iter()
            .map(|p| [p[0] - root[0], p[1] - root[1], p[2] - root[2]])
            .collect(),
    ))
}

/// Row-wise root alignment of an `F × 3J` array.
pub fn root_align_rows(m: ArrayView2<'_, f64>, root_index: usize) -> Array2<f64> {
    let mut out = m.to_owned();
    for mut row in out.rows_mut() {
        let root = [
            row[3 * root_index],
            row[3 * root_index + 1],
            row[3 * root_index + 2],
        ];
        for (i, v) in row.iter_mut().enumerate() {
            *v -= root[i % 3];
        }
    }
    out
}

/// Types that can be horizontally mirrored with a skeleton's pair map.
pub trait Flip: Sized {
    fn flipped(&self, skeleton: &SkeletonConfig) -> Result<Self>;
}

fn flip_joints<const D: usize>(joints: &[[f64; D]], perm: &[usize]) -> Vec<[f64; D]> {
    perm.iter()
        .map(|&src| {
            let mut p = joints[src];
            p[0] = -p[0];
            p
        })
        .collect()
}

impl Flip for Pose3d {
    fn flipped(&self, skeleton: &SkeletonConfig) -> Result<Self> {
        skeleton.check_joints(self.num_joints())?;
        Ok(Pose3d::new(flip_joints(
            &self.joints,
            &skeleton.flip_permutation(),
        )))
    }
}

impl Flip for Pose2d {
    fn flipped(&self, skeleton: &SkeletonConfig) -> Result<Self> {
        skeleton.check_joints(self.num_joints())?;
        Ok(Pose2d::new(flip_joints(
            &self.joints,
            &skeleton.flip_permutation(),
        )))
    }
}

/// Negates the first coordinate of every joint and swaps left/right pairs.
pub fn flip_pose_sequence<P: Flip>(seq: &[P], skeleton: &SkeletonConfig) -> Result<Vec<P>> {
    seq.iter().map(|p| p.flipped(skeleton)).collect()
}

/// Flip applied to an `F × (J·dims)` array, one frame per row.
pub fn flip_rows(
    m: ArrayView2<'_, f64>,
    dims: usize,
    skeleton: &SkeletonConfig,
) -> Result<Array2<f64>> {
    if dims == 0 || m.ncols() != dims * skeleton.num_joints() {
        return Err(Error::dim(format!(
            "expected {} columns for {dims}-D poses, got {}",
            dims * skeleton.num_joints(),
            m.ncols()
        )));
    }
    let perm = skeleton.flip_permutation();
    let mut out = Array2::zeros(m.raw_dim());
    for (f, row) in m.rows().into_iter().enumerate() {
        for (dst, &src) in perm.iter().enumerate() {
            for c in 0..dims {
                let v = row[src * dims + c];
                out[[f, dst * dims + c]] = if c == 0 { -v } else { v };
            }
        }
    }
    Ok(out)
}
