//! Sequence-level 3D human pose lifting in trajectory space.
//!
//! A window of `F` frames of 3D joint positions is arranged as an `F × 3J`
//! motion matrix `S` and factorized as `S = Θ·A`, where `Θ` (`F × K`) is a
//! fixed trajectory basis (DCT or SVD) and `A` (`K × 3J`) holds trajectory
//! coefficients. A network regresses `A` from the 2D joints of all frames at
//! once and the poses of every frame are recovered through `Θ`.
//!
//! Modules:
//!
//! - [`motion`]: poses, motion matrices, skeletons, root alignment, flips.
//! - [`bases`]: DCT/SVD bases, projection, reconstruction, truncation analysis.
//! - [`network`]: the coefficient regression network, its manual gradients,
//!   Adam and the training loop.
//! - [`inference`]: sliding-window inference over long videos.
//! - [`metrics`]: MPJPE (root aligned and Procrustes aligned), PCK and AUC.
//! - [`io`]: text file formats, 2D normalization, cameras and synthetic data.

pub mod bases;
pub mod error;
pub mod inference;
pub mod io;
pub mod metrics;
pub mod motion;
pub mod network;

pub use error::{Error, Result};
