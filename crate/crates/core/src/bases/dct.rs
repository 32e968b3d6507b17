use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1};

use super::{BasisFamily, TrajectoryBasis};
use crate::error::{Error, Result};

/// `cos[(π/F)(f + ½)k]`.
pub fn dct_cosine(frames: usize, f: usize, k: usize) -> f64 {
    (PI / frames as f64 * (f as f64 + 0.5) * k as f64).cos()
}

/// The first `k` DCT trajectory bases over `frames` samples.
///
/// Column 0 is the constant `0.5` (the `½D₀` synthesis weight folded into
/// the basis), column `k ≥ 1` the `k`-th cosine.
pub fn dct_basis(frames: usize, k: usize) -> Result<TrajectoryBasis> {
    if k == 0 || k > frames {
        return Err(Error::param(format!(
            "basis count K={k} must satisfy 1 <= K <= F={frames}"
        )));
    }
    let theta = Array2::from_shape_fn((frames, k), |(f, kk)| {
        if kk == 0 {
            0.5
        } else {
            dct_cosine(frames, f, kk)
        }
    });
    TrajectoryBasis::from_matrix(theta, BasisFamily::Dct)
}

/// Scaled DCT-II of a single trajectory: `D_k = (2/F)·Σ_f d_f·cos[(π/F)(f + ½)k]`.
///
/// Paired with [`super::reconstruct_motion`] on a DCT basis this inverts
/// exactly when `K = F`.
pub fn dct_forward(signal: ArrayView1<'_, f64>, basis: &TrajectoryBasis) -> Result<Array1<f64>> {
    let frames = basis.frames();
    if signal.len() != frames {
        return Err(Error::dim(format!(
            "signal has {} samples, basis expects {frames}",
            signal.len()
        )));
    }
    let scale = 2.0 / frames as f64;
    Ok(Array1::from_shape_fn(basis.num_bases(), |k| {
        scale
            * signal
                .iter()
                .enumerate()
                .map(|(f, d)| d * dct_cosine(frames, f, k))
                .sum::<f64>()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{project_columns, reconstruct_motion, CoefficientMatrix};
    use ndarray::{array, Axis};

    #[test]
    fn two_frame_basis_values() {
        let b = dct_basis(2, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = array![[0.5, h], [0.5, -h]];
        for (x, y) in b.theta().iter().zip(&expected) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn dc_column_is_half() {
        for f in [1, 3, 50] {
            let b = dct_basis(f, 1).unwrap();
            assert!(b.theta().iter().all(|&v| v == 0.5));
        }
    }

    #[test]
    fn first_three_bases_are_half_cosines() {
        // column k has exactly k sign changes and column 1 is decreasing.
        let b = dct_basis(50, 3).unwrap();
        for k in 1..3 {
            let col = b.theta().column(k);
            let changes = col
                .windows(2)
                .into_iter()
                .filter(|w| w[0].signum() != w[1].signum())
                .count();
            assert_eq!(changes, k);
        }
        let c1 = b.theta().column(1);
        assert!(c1.windows(2).into_iter().all(|w| w[1] < w[0]));
    }

    #[test]
    fn rejects_bad_counts() {
        assert!(matches!(dct_basis(4, 5), Err(Error::Parameter(_))));
        assert!(matches!(dct_basis(4, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn forward_constant_signal() {
        let b = dct_basis(4, 4).unwrap();
        let d = dct_forward(array![1.0, 1.0, 1.0, 1.0].view(), &b).unwrap();
        let expected = [2.0, 0.0, 0.0, 0.0];
        for (x, y) in d.iter().zip(expected) {
            assert!((x - y).abs() < 1e-15);
        }
        // synthesis: ½·D₀ recovers the constant
        let coeffs = Array2::from_shape_fn((4, 3), |(k, _)| d[k]);
        let rec = reconstruct_motion(&b, &CoefficientMatrix::new(coeffs).unwrap()).unwrap();
        assert!(rec.data().iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn forward_alternating_two_frames() {
        let b = dct_basis(2, 2).unwrap();
        let d = dct_forward(array![1.0, -1.0].view(), &b).unwrap();
        assert!(d[0].abs() < 1e-15);
        assert!((d[1] - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn forward_zero_and_mismatch() {
        let b = dct_basis(5, 3).unwrap();
        assert!(dct_forward(Array1::zeros(5).view(), &b)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        assert!(dct_forward(Array1::zeros(4).view(), &b).is_err());
    }

    #[test]
    fn forward_matches_projection() {
        let f = 11;
        let b = dct_basis(f, 7).unwrap();
        let signal = Array1::from_shape_fn(f, |i| (i as f64 * 0.7).sin() * 3.0 + i as f64);
        let d = dct_forward(signal.view(), &b).unwrap();
        let p = project_columns(signal.view().insert_axis(Axis(1)), &b).unwrap();
        for k in 0..7 {
            assert!((d[k] - p[[k, 0]]).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_gram_identities() {
        for f in [2usize, 10, 50] {
            for k in 0..f {
                for k2 in 0..f {
                    let dot: f64 = (0..f)
                        .map(|i| dct_cosine(f, i, k) * dct_cosine(f, i, k2))
                        .sum();
                    let expected = match (k == k2, k) {
                        (false, _) => 0.0,
                        (true, 0) => f as f64,
                        (true, _) => f as f64 / 2.0,
                    };
                    assert!((dot - expected).abs() < 1e-10, "F={f} k={k} k'={k2}");
                }
            }
            assert!(dct_basis(f, f).unwrap().orthogonality_residual() < 1e-10);
        }
    }
}
