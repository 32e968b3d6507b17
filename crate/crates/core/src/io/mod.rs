//! File formats, 2D normalization, camera projection and synthetic data.

mod camera;
mod posefile;
mod skeleton;
mod synth;
pub(crate) mod text;

pub use camera::{denormalize_2d, normalize_2d, project_camera, CameraModel};
pub use posefile::{
    load_pose_sequence, parse_pose_sequence, save_pose_sequence, write_pose_sequence, PoseSequence,
};
pub use skeleton::{load_skeleton, parse_skeleton, save_skeleton, write_skeleton};
pub use synth::{lifting_sample, synth_motion, SynthConfig, SynthGenerator};
