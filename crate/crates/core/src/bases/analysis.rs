use super::{project_columns, TrajectoryBasis};
use crate::error::{Error, Result};
use crate::motion::MotionMatrix;

/// How a reconstruction residual is summarized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMetric {
    /// Mean over frames and joints of the per-joint Euclidean distance.
    #[default]
    MeanJointDistance,
    /// Root mean square over all residual entries, i.e. the Frobenius norm
    /// divided by `sqrt(F·3J)`. Directly comparable to a per-entry noise
    /// level; nested bases make it non-increasing and SVD bases minimize it.
    RootMeanSquare,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPoint {
    pub num_bases: usize,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientMagnitude {
    pub k: usize,
    pub mean_abs: f64,
    /// Set for `k = 0`, the constant (DC) component.
    pub is_dc: bool,
}

/// Reconstruction error after projecting every motion onto the first `K`
/// columns of `basis`, for each `K` in `ks`.
pub fn truncation_error_profile(
    motions: &[MotionMatrix],
    basis: &TrajectoryBasis,
    ks: impl IntoIterator<Item = usize>,
    metric: ErrorMetric,
) -> Result<Vec<TruncationPoint>> {
    if motions.is_empty() {
        return Err(Error::param("empty motion corpus"));
    }
    let mut out = Vec::new();
    for k in ks {
        if k == 0 || k > basis.num_bases() {
            return Err(Error::param(format!(
                "K={k} outside [1, {}]",
                basis.num_bases()
            )));
        }
        let sub = basis.truncated(k)?;
        let mut total = 0.0;
        let mut count = 0usize;
        for m in motions {
            let a = project_columns(m.view(), &sub)?;
            let resid = m.data() - &sub.theta().dot(&a);
            for row in resid.rows() {
                for j in row
                    .as_slice()
                    .expect("owned rows are contiguous")
                    .chunks_exact(3)
                {
                    let sq = j[0] * j[0] + j[1] * j[1] + j[2] * j[2];
                    total += match metric {
                        ErrorMetric::MeanJointDistance => sq.sqrt(),
                        ErrorMetric::RootMeanSquare => sq,
                    };
                    count += 1;
                }
            }
        }
        let mean = total / count as f64;
        out.push(TruncationPoint {
            num_bases: k,
            error: match metric {
                ErrorMetric::MeanJointDistance => mean,
                ErrorMetric::RootMeanSquare => (mean / 3.0).sqrt(),
            },
        });
    }
    Ok(out)
}

/// Mean absolute coefficient per basis index over every trajectory column
/// of every motion.
pub fn coefficient_magnitude_profile(
    motions: &[MotionMatrix],
    basis: &TrajectoryBasis,
) -> Result<Vec<CoefficientMagnitude>> {
    if motions.is_empty() {
        return Err(Error::param("empty motion corpus"));
    }
    let mut sums = vec![0.0; basis.num_bases()];
    let mut cols = 0usize;
    for m in motions {
        let a = project_columns(m.view(), basis)?;
        for (k, row) in a.rows().into_iter().enumerate() {
            sums[k] += row.iter().map(|v| v.abs()).sum::<f64>();
        }
        cols += a.ncols();
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(k, s)| CoefficientMagnitude {
            k,
            mean_abs: s / cols as f64,
            is_dc: k == 0,
        })
        .collect())
}
