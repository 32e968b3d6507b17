//! Trajectory bases `Θ` (`F × K`) and the maps between motion matrices and
//! trajectory coefficients.
//!
//! Two families are supported. DCT bases are fixed cosines: column 0 is the
//! constant `0.5` and column `k ≥ 1` holds `cos[(π/F)(f + ½)k]`. Analysis
//! uses the scale `2/F`, which makes analysis/synthesis an exact inverse pair
//! when `K = F`. SVD bases are the leading left singular vectors of a stack of
//! training trajectories and are orthonormal.

mod analysis;
mod dct;
mod file;
mod svd;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::motion::MotionMatrix;

pub use analysis::{
    coefficient_magnitude_profile, truncation_error_profile, CoefficientMagnitude, ErrorMetric,
    TruncationPoint,
};
pub use dct::{dct_basis, dct_cosine, dct_forward};
pub use file::{load_basis, parse_basis, save_basis, write_basis};
pub use svd::{
    sample_trajectories, svd_basis, svd_basis_from_trajectories, DEFAULT_SVD_TRAJECTORIES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisFamily {
    Dct,
    Svd,
}

impl fmt::Display for BasisFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisFamily::Dct => "DCT",
            BasisFamily::Svd => "SVD",
        })
    }
}

impl FromStr for BasisFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DCT" => Ok(BasisFamily::Dct),
            "SVD" => Ok(BasisFamily::Svd),
            other => Err(Error::param(format!("unknown basis family '{other}'"))),
        }
    }
}

/// An `F × K` matrix of trajectory basis vectors stored in columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBasis {
    theta: Array2<f64>,
    family: BasisFamily,
}

impl TrajectoryBasis {
    /// Wraps an existing matrix; checks `1 ≤ K ≤ F` and finiteness.
    pub fn from_matrix(theta: Array2<f64>, family: BasisFamily) -> Result<Self> {
        let (f, k) = theta.dim();
        if k == 0 || k > f {
            return Err(Error::param(format!(
                "basis count K={k} must satisfy 1 <= K <= F={f}"
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("basis contains non-finite values"));
        }
        Ok(Self { theta, family })
    }

    pub fn theta(&self) -> &Array2<f64> {
        &self.theta
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn frames(&self) -> usize {
        self.theta.nrows()
    }

    pub fn num_bases(&self) -> usize {
        self.theta.ncols()
    }

    /// The first `k` columns.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.num_bases() {
            return Err(Error::param(format!(
                "cannot truncate a {}-column basis to {k}",
                self.num_bases()
            )));
        }
        Ok(Self {
            theta: self.theta.slice(ndarray::s![.., ..k]).to_owned(),
            family: self.family,
        })
    }

    /// Factor that turns `θ_kᵀ·s` into the least-squares coefficient of `θ_k`.
    fn analysis_scale(&self, k: usize) -> f64 {
        let f = self.frames() as f64;
        match (self.family, k) {
            (BasisFamily::Dct, 0) => 4.0 / f,
            (BasisFamily::Dct, _) => 2.0 / f,
            (BasisFamily::Svd, _) => 1.0,
        }
    }

    /// `ΘᵀΘ`.
    pub fn gram(&self) -> Array2<f64> {
        self.theta.t().dot(&self.theta)
    }

    /// Largest deviation of `ΘᵀΘ` from its expected diagonal
    /// (`F/4, F/2, …` for DCT, identity for SVD).
    pub fn orthogonality_residual(&self) -> f64 {
        let gram = self.gram();
        let mut worst = 0.0f64;
        for ((i, j), &g) in gram.indexed_iter() {
            let expected = if i == j {
                1.0 / self.analysis_scale(i)
            } else {
                0.0
            };
            worst = worst.max((g - expected).abs());
        }
        worst
    }
}

/// `K × 3J` trajectory coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    a: Array2<f64>,
}

impl CoefficientMatrix {
    pub fn new(a: Array2<f64>) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("coefficients contain non-finite values"));
        }
        Ok(Self { a })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.a
    }

    pub fn num_bases(&self) -> usize {
        self.a.nrows()
    }
}

/// `S = Θ·A`.
pub fn reconstruct_motion(
    basis: &TrajectoryBasis,
    coeffs: &CoefficientMatrix,
) -> Result<MotionMatrix> {
    if basis.num_bases() != coeffs.num_bases() {
        return Err(Error::dim(format!(
            "basis has K={}, coefficients have K={}",
            basis.num_bases(),
            coeffs.num_bases()
        )));
    }
    MotionMatrix::new(basis.theta.dot(&coeffs.a))
}

/// Least-squares coefficients of every column of `m` in the span of `Θ`.
pub fn project_motion(m: &MotionMatrix, basis: &TrajectoryBasis) -> Result<CoefficientMatrix> {
    Ok(CoefficientMatrix {
        a: project_columns(m.view(), basis)?,
    })
}

/// [`project_motion`] on a raw `F × n` array.
pub fn project_columns(m: ArrayView2<'_, f64>, basis: &TrajectoryBasis) -> Result<Array2<f64>> {
    if m.nrows() != basis.frames() {
        return Err(Error::dim(format!(
            "motion has F={} frames, basis has F={}",
            m.nrows(),
            basis.frames()
        )));
    }
    let mut a = basis.theta.t().dot(&m);
    for (k, mut row) in a.axis_iter_mut(Axis(0)).enumerate() {
        row *= basis.analysis_scale(k);
    }
    Ok(a)
}
