//! Radius-r local covariance at each sample and its eigenframe.
//!
//! The covariance at `x_i` is centered at `x_i` itself (not at the
//! neighborhood mean) and the denominator counts `x_i`, so it is never zero:
//!
//! ```text
//! Σ_i = Σ_j (x_j - x_i)(x_j - x_i)ᵀ 1(‖x_j - x_i‖ ≤ r) / Σ_j 1(‖x_j - x_i‖ ≤ r)
//! ```
//!
//! Eigenvalues are kept ascending, so direction `k = 0` is the one with the
//! least local variance and the first to be discarded by the nested fit.

use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, SquareMatrix};
use crate::math;
use crate::par;

/// Asymmetry accepted by [`spectral_frame`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Indices `j` with `‖x_j - center‖ ≤ r`, boundary included.
pub fn neighbors_within(cloud: &PointCloud, center: &[f64], r: f64) -> Vec<usize> {
    let r2 = r * r;
    cloud
        .points()
        .enumerate()
        .filter(|(_, p)| math::dist_sq(p, center) <= r2)
        .map(|(j, _)| j)
        .collect()
}

/// Local covariance at sample `i` together with its neighbor count
/// (self included).
pub fn local_covariance_with_count(cloud: &PointCloud, i: usize, r: f64) -> (SquareMatrix, usize) {
    let dim = cloud.dim();
    let center = cloud.point(i);
    let r2 = r * r;
    let mut sigma = SquareMatrix::zeros(dim);
    let mut diff = alloc::vec![0.0; dim];
    let mut count = 0usize;
    for p in cloud.points() {
        if math::dist_sq(p, center) <= r2 {
            for ((d, a), b) in diff.iter_mut().zip(p).zip(center) {
                *d = a - b;
            }
            sigma.add_outer(&diff, 1.0);
            count += 1;
        }
    }
    sigma.scale(1.0 / count as f64);
    (sigma, count)
}

pub fn local_covariance(cloud: &PointCloud, i: usize, r: f64) -> SquareMatrix {
    local_covariance_with_count(cloud, i, r).0
}

/// Ascending eigenvalues and matching unit eigenvectors of one local
/// covariance. Rank-one projectors are `v_k v_kᵀ` and are only built on
/// request.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrame {
    eigenvalues: Vec<f64>,
    /// Column-major; direction `k` occupies `[k * dim, (k + 1) * dim)`.
    eigenvectors: Vec<f64>,
    neighbor_count: usize,
}

impl SpectralFrame {
    #[inline]
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unit eigenvector paired with `eigenvalues()[k]`.
    #[inline]
    pub fn direction(&self, k: usize) -> &[f64] {
        let n = self.dim();
        &self.eigenvectors[k * n..(k + 1) * n]
    }

    pub fn neighbor_count(&self) -> usize {
        self.neighbor_count
    }

    pub fn projector(&self, k: usize) -> SquareMatrix {
        let mut p = SquareMatrix::zeros(self.dim());
        p.add_outer(self.direction(k), 1.0);
        p
    }

    /// Rebuilds `Σ λ_k v_k v_kᵀ`.
    pub fn reconstruct(&self) -> SquareMatrix {
        let mut m = SquareMatrix::zeros(self.dim());
        for (k, lambda) in self.eigenvalues.iter().enumerate() {
            m.add_outer(self.direction(k), *lambda);
        }
        m
    }

    /// Negates direction `k`. Every quantity downstream depends only on
    /// `v_k v_kᵀ`, so this is observationally a no-op; exposed for tests.
    pub fn flip_sign(&mut self, k: usize) {
        let n = self.dim();
        self.eigenvectors[k * n..(k + 1) * n]
            .iter_mut()
            .for_each(|x| *x = -*x);
    }
}

pub fn spectral_frame(sigma: &SquareMatrix) -> Result<SpectralFrame> {
    let asymmetry = sigma.max_asymmetry();
    if !(asymmetry <= SYMMETRY_TOLERANCE) {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let eig = symmetric_eigen(sigma)?;
    Ok(SpectralFrame {
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        neighbor_count: 0,
    })
}

/// One frame per sample, in input order, computed from `cloud` at radius `r`.
pub fn precompute_frames(cloud: &PointCloud, r: f64) -> Result<Vec<SpectralFrame>> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("radius must be positive, got {r}")));
    }
    par::map_indices(cloud.len(), |i| {
        let (sigma, count) = local_covariance_with_count(cloud, i, r);
        let mut frame = spectral_frame(&sigma).map_err(|e| match e {
            Error::EigenFailure { .. } => Error::EigenFailure { index: Some(i) },
            other => other,
        })?;
        frame.neighbor_count = count;
        Ok(frame)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line_1d() -> PointCloud {
        PointCloud::new(alloc::vec![0.0, 1.0, 3.0], 1).unwrap()
    }

    #[test]
    fn neighbors_examples() {
        let c = line_1d();
        assert_eq!(neighbors_within(&c, &[0.0], 1.0), alloc::vec![0, 1]);
        assert_eq!(neighbors_within(&c, &[0.0], 0.5), alloc::vec![0]);
        assert!(neighbors_within(&c, &[10.0], 1.0).is_empty());
    }

    #[test]
    fn covariance_examples() {
        let c = PointCloud::from_rows(&[[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]]).unwrap();
        let s = local_covariance(&c, 1, 2.0);
        assert!(s.frobenius_distance(&SquareMatrix::diagonal(&[2.0 / 3.0, 0.0])) < 1e-15);

        let single = PointCloud::from_rows(&[[3.0, 4.0]]).unwrap();
        assert_eq!(local_covariance(&single, 0, 10.0), SquareMatrix::zeros(2));

        let pair = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let (s, count) = local_covariance_with_count(&pair, 0, 0.5);
        assert_eq!(s, SquareMatrix::zeros(2));
        assert_eq!(count, 1);
    }

    #[test]
    fn frame_examples() {
        let f = spectral_frame(&SquareMatrix::diagonal(&[2.0 / 3.0, 0.0])).unwrap();
        assert_eq!(f.eigenvalues(), &[0.0, 2.0 / 3.0]);
        assert_abs_diff_eq!(f.direction(0)[0], 0.0);
        assert_abs_diff_eq!(f.direction(0)[1].abs(), 1.0);

        let f = spectral_frame(&SquareMatrix::identity(3)).unwrap();
        assert!(f.eigenvalues().iter().all(|v| (*v - 1.0).abs() < 1e-15));

        let f = spectral_frame(&SquareMatrix::zeros(3)).unwrap();
        assert!(f.eigenvalues().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn frame_rejects_asymmetric_input() {
        let mut m = SquareMatrix::identity(2);
        m[(0, 1)] = 1e-6;
        assert!(matches!(spectral_frame(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn collinear_frames_span_the_line() {
        let c = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 2.0], [2.0, 4.0]]).unwrap();
        let frames = precompute_frames(&c, 100.0).unwrap();
        let u = [1.0 / 5f64.sqrt(), 2.0 / 5f64.sqrt()];
        for f in &frames {
            assert_eq!(f.neighbor_count(), 3);
            assert_abs_diff_eq!(math::dot(f.direction(1), &u).abs(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(f.eigenvalues()[0], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_point_has_zero_spectrum() {
        let c = PointCloud::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let frames = precompute_frames(&c, 1.0).unwrap();
        assert_eq!(frames.len(), 1);
        assert!(frames[0].eigenvalues().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn projector_identities() {
        let c = PointCloud::from_rows(&[
            [0.0, 0.1, 0.3],
            [1.0, -0.2, 0.1],
            [0.4, 0.9, -0.5],
            [0.2, 0.2, 0.2],
            [-0.7, 0.3, 0.6],
        ])
        .unwrap();
        for f in precompute_frames(&c, 1.5).unwrap() {
            for k in 0..3 {
                let p = f.projector(k);
                assert!(p.mul(&p).frobenius_distance(&p) < 1e-10);
                assert_abs_diff_eq!(p.trace(), 1.0, epsilon = 1e-10);
                let mut g = f.clone();
                g.flip_sign(k);
                assert_eq!(g.projector(k), p);
            }
        }
    }

    #[test]
    fn non_positive_radius_is_rejected() {
        let c = line_1d();
        assert!(precompute_frames(&c, 0.0).is_err());
    }
}
