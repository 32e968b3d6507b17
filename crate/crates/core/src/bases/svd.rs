use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BasisFamily, TrajectoryBasis};
use crate::error::{Error, Result};
use crate::motion::MotionMatrix;

/// Number of trajectory columns sampled for SVD basis extraction by default.
pub const DEFAULT_SVD_TRAJECTORIES: usize = 10_000;

fn check_uniform_frames(motions: &[MotionMatrix]) -> Result<usize> {
    let first = motions
        .first()
        .ok_or_else(|| Error::param("empty motion corpus"))?;
    let f = first.frames();
    if let Some((i, m)) = motions.iter().enumerate().find(|(_, m)| m.frames() != f) {
        return Err(Error::dim(format!(
            "motion {i} has F={}, expected F={f}",
            m.frames()
        )));
    }
    Ok(f)
}

/// Draws up to `count` trajectory columns from the corpus without
/// replacement, returning them as an `F × n` matrix in ascending index order.
pub fn sample_trajectories(
    motions: &[MotionMatrix],
    count: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    let f = check_uniform_frames(motions)?;
    let total: usize = motions.iter().map(|m| m.data().ncols()).sum();
    let mut picks: Vec<usize> = if count >= total {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        index::sample(&mut rng, total, count).into_vec()
    };
    picks.sort_unstable();

    let mut offsets = Vec::with_capacity(motions.len());
    let mut acc = 0;
    for m in motions {
        offsets.push(acc);
        acc += m.data().ncols();
    }
    let mut out = Array2::zeros((f, picks.len()));
    for (dst, &global) in picks.iter().enumerate() {
        let which = offsets.partition_point(|&o| o <= global) - 1;
        let col = global - offsets[which];
        out.column_mut(dst)
            .assign(&motions[which].data().column(col));
    }
    Ok(out)
}

/// Leading `k` left singular vectors of the horizontally stacked corpus
/// `[S₁ S₂ … S_N]`, without mean-centering.
///
/// Each column's largest-magnitude entry is made positive (first such entry
/// on ties) so the result is reproducible.
pub fn svd_basis(motions: &[MotionMatrix], k: usize) -> Result<TrajectoryBasis> {
    let f = check_uniform_frames(motions)?;
    let total: usize = motions.iter().map(|m| m.data().ncols()).sum();
    if k == 0 || k > f {
        return Err(Error::param(format!(
            "basis count K={k} must satisfy 1 <= K <= F={f}"
        )));
    }

    let mut stacked = Array2::zeros((f, total));
    let mut col = 0;
    for m in motions {
        let n = m.data().ncols();
        stacked
            .slice_mut(ndarray::s![.., col..col + n])
            .assign(m.data());
        col += n;
    }
    svd_basis_from_trajectories(stacked.view(), k)
}

/// [`svd_basis`] on trajectories already stacked as the columns of an
/// `F × n` matrix (e.g. from [`sample_trajectories`]).
pub fn svd_basis_from_trajectories(
    stacked: ArrayView2<'_, f64>,
    k: usize,
) -> Result<TrajectoryBasis> {
    let (f, total) = stacked.dim();
    if k == 0 || k > f {
        return Err(Error::param(format!(
            "basis count K={k} must satisfy 1 <= K <= F={f}"
        )));
    }
    if total < k {
        return Err(Error::param(format!(
            "corpus has {total} trajectories, need at least K={k}"
        )));
    }
    if stacked.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("corpus contains non-finite values"));
    }
    left_singular_basis(DMatrix::from_fn(f, total, |r, c| stacked[[r, c]]), k)
}

fn left_singular_basis(stacked: DMatrix<f64>, k: usize) -> Result<TrajectoryBasis> {
    let f = stacked.nrows();
    let svd = stacked.svd(true, false);
    let (values, u) = (svd.singular_values, svd.u);
    let u = u.ok_or_else(|| Error::numeric("SVD did not produce singular vectors"))?;

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    if order.len() < k {
        return Err(Error::numeric(format!(
            "only {} singular vectors available, need {k}",
            order.len()
        )));
    }

    let mut theta = Array2::zeros((f, k));
    for (dst, &src) in order.iter().take(k).enumerate() {
        let col = u.column(src);
        let mut pivot = 0;
        for r in 1..f {
            if col[r].abs() > col[pivot].abs() {
                pivot = r;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..f {
            theta[[r, dst]] = sign * col[r];
        }
    }
    TrajectoryBasis::from_matrix(theta, BasisFamily::Svd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{project_motion, reconstruct_motion};
    use rand::Rng;

    fn corpus(n: usize, f: usize, cols: usize, seed: u64) -> Vec<MotionMatrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                MotionMatrix::new(Array2::from_shape_fn((f, cols), |_| {
                    rng.random_range(-1.0..1.0)
                }))
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn rank_one_corpus() {
        let f = 9;
        let t: Vec<f64> = (0..f).map(|i| (i as f64 * 0.4).cos() + 0.3).collect();
        let norm = t.iter().map(|v| v * v).sum::<f64>().sqrt();
        let motions: Vec<_> = [1.0, -2.0, 0.5]
            .iter()
            .map(|&s| {
                MotionMatrix::new(Array2::from_shape_fn((f, 6), |(r, c)| {
                    s * (c as f64 + 1.0) * t[r]
                }))
                .unwrap()
            })
            .collect();
        let b = svd_basis(&motions, 1).unwrap();
        let dot: f64 = (0..f).map(|r| b.theta()[[r, 0]] * t[r] / norm).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-12);
        for m in &motions {
            let rec = reconstruct_motion(&b, &project_motion(m, &b).unwrap()).unwrap();
            let err = (rec.data() - m.data())
                .iter()
                .fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(err < 1e-9);
        }
    }

    #[test]
    fn orthonormal_and_sign_fixed() {
        let motions = corpus(4, 20, 15, 1);
        let b = svd_basis(&motions, 8).unwrap();
        let gram = b.gram();
        for ((i, j), g) in gram.indexed_iter() {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((g - e).abs() < 1e-10);
        }
        for col in b.theta().columns() {
            let pivot = col
                .iter()
                .fold(0.0f64, |m, v| if v.abs() > m.abs() { *v } else { m });
            assert!(pivot > 0.0);
        }
        assert!(b.orthogonality_residual() < 1e-10);
    }

    #[test]
    fn tall_and_wide_agree() {
        // 6 columns (tall path) vs the same data repeated into a 24-column stack
        let tall = corpus(1, 12, 6, 7);
        let b1 = svd_basis(&tall, 3).unwrap();
        let wide: Vec<_> = (0..4).map(|_| tall[0].clone()).collect();
        let b2 = svd_basis(&wide, 3).unwrap();
        for (x, y) in b1.theta().iter().zip(b2.theta()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic() {
        let motions = corpus(3, 16, 30, 5);
        assert_eq!(
            svd_basis(&motions, 5).unwrap(),
            svd_basis(&motions, 5).unwrap()
        );
    }

    #[test]
    fn errors() {
        assert!(svd_basis(&[], 1).is_err());
        let motions = corpus(1, 10, 3, 0);
        assert!(matches!(svd_basis(&motions, 4), Err(Error::Parameter(_))));
        let mixed = vec![corpus(1, 10, 3, 0).remove(0), corpus(1, 11, 3, 0).remove(0)];
        assert!(matches!(svd_basis(&mixed, 2), Err(Error::Dimension(_))));
        let mut bad = Array2::zeros((5, 3));
        bad[[0, 0]] = f64::NAN;
        let bad = vec![MotionMatrix::new(bad).unwrap()];
        assert!(matches!(svd_basis(&bad, 2), Err(Error::Numeric(_))));
    }

    #[test]
    fn sampling() {
        let motions = corpus(5, 8, 6, 2);
        let all = sample_trajectories(&motions, 100, 0).unwrap();
        assert_eq!(all.dim(), (8, 30));
        assert_eq!(all.column(7), motions[1].data().column(1));
        let some = sample_trajectories(&motions, 10, 3).unwrap();
        assert_eq!(some.dim(), (8, 10));
        assert_eq!(some, sample_trajectories(&motions, 10, 3).unwrap());
        for col in some.columns() {
            assert!(all.columns().into_iter().any(|c| c == col));
        }
    }
}
