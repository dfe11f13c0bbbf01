//! Smooth local fields evaluated at an arbitrary query point `z`.
//!
//! Weights are the compactly supported bump
//!
//! ```text
//! α̃_i(z) = (1 - ‖z - x_i‖² / r²)^β · 1(‖z - x_i‖ ≤ r),   α_i = α̃_i / Σ_j α̃_j
//! ```
//!
//! (β = 3 by default, which makes α̃ twice continuously differentiable across
//! the boundary of the ball). From them come the reference point
//! `μ(z) = Σ α_i x_i`, the aggregated direction `u_k(z)`, the top
//! eigenvector of `Σ α_i v_{i,k} v_{i,k}ᵀ`, and the bias sum
//! `Σ_{k<K} u_k u_kᵀ (z - μ(z))`. The fitted set of dimension `D′ - K` is
//! where that bias sum vanishes.

use alloc::vec;
use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, SquareMatrix};
use crate::math;
use crate::spectral::SpectralFrame;

pub const DEFAULT_BETA: u32 = 3;
pub const DEFAULT_SUPPORT: f64 = 0.9;

/// Minimum gap between the two largest eigenvalues of an aggregated
/// projector sum for its top eigenvector to count as well defined.
pub const DIRECTION_GAP_TOLERANCE: f64 = 1e-10;

/// Sparse normalized weights, `(sample index, α_i(z))`, in index order.
pub type Weights = Vec<(usize, f64)>;

/// Unnormalized bump weight for a squared distance.
#[inline]
pub fn bump_weight(dist_sq: f64, r: f64, beta: u32) -> f64 {
    let r2 = r * r;
    if dist_sq > r2 {
        0.0
    } else {
        let base = 1.0 - dist_sq / r2;
        (0..beta).fold(1.0, |acc, _| acc * base)
    }
}

/// Normalized weights of every sample within `r` of `z`.
pub fn weights_at(z: &[f64], cloud: &PointCloud, r: f64, beta: u32) -> Result<Weights> {
    let (weights, _) = weights_and_nearest(z, cloud, r, beta)?;
    Ok(weights)
}

// Also reports the squared distance to the nearest sample, for the support test.
fn weights_and_nearest(z: &[f64], cloud: &PointCloud, r: f64, beta: u32) -> Result<(Weights, f64)> {
    let r2 = r * r;
    let mut nearest = f64::INFINITY;
    let mut weights = Vec::new();
    let mut total = 0.0;
    for (i, p) in cloud.points().enumerate() {
        let d2 = math::dist_sq(z, p);
        nearest = nearest.min(d2);
        if d2 <= r2 {
            let w = bump_weight(d2, r, beta);
            if w > 0.0 {
                weights.push((i, w));
                total += w;
            }
        }
    }
    if weights.is_empty() || !(total > 0.0) {
        return Err(Error::EmptyNeighborhood);
    }
    for (_, w) in weights.iter_mut() {
        *w /= total;
    }
    Ok((weights, nearest))
}

/// `Σ α_i x_i`.
pub fn reference_point(cloud: &PointCloud, weights: &[(usize, f64)]) -> Vec<f64> {
    let mut mu = vec![0.0; cloud.dim()];
    for &(i, w) in weights {
        for (m, x) in mu.iter_mut().zip(cloud.point(i)) {
            *m += w * x;
        }
    }
    mu
}

/// Top eigenvector of `Σ α_i v_{i,k} v_{i,k}ᵀ`.
///
/// The sign is fixed so that the largest-magnitude component is positive;
/// only `u uᵀ` is meaningful.
pub fn aggregated_direction(frames: &[SpectralFrame], weights: &[(usize, f64)], k: usize) -> Result<Vec<f64>> {
    let Some(&(first, _)) = weights.first() else {
        return Err(Error::EmptyNeighborhood);
    };
    let dim = frames[first].dim();
    let mut sum = SquareMatrix::zeros(dim);
    for &(i, w) in weights {
        sum.add_outer(frames[i].direction(k), w);
    }
    let eig = symmetric_eigen(&sum)?;
    if dim >= 2 {
        let gap = eig.values[dim - 1] - eig.values[dim - 2];
        if !(gap >= DIRECTION_GAP_TOLERANCE) {
            return Err(Error::AmbiguousDirection { k, gap });
        }
    }
    let mut u = eig.vector(dim - 1).to_vec();
    let pivot = u
        .iter()
        .enumerate()
        .fold(0, |best, (j, x)| if x.abs() > u[best].abs() { j } else { best });
    if u[pivot] < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    pub radius: f64,
    pub beta: u32,
    /// Support constant `c`: queries farther than `c·r` from every sample
    /// are flagged, not rejected.
    pub support: f64,
}

impl FieldParams {
    pub fn new(radius: f64) -> Self {
        Self {
            radius,
            beta: DEFAULT_BETA,
            support: DEFAULT_SUPPORT,
        }
    }
}

/// Everything the field knows at one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldEvaluation {
    pub query: Vec<f64>,
    pub weights: Weights,
    pub mu: Vec<f64>,
    /// Aggregated directions `u_0 … u_{K-1}`, least-variance first.
    pub directions: Vec<Vec<f64>>,
    /// `Σ_k u_k u_kᵀ (z - μ)`.
    pub bias_sum: Vec<f64>,
    /// Whether some sample lies within `c·r` of the query.
    pub support_ok: bool,
}

/// The field induced by a cloud, its precomputed frames and the weighting
/// parameters. Borrowing only; cheap to copy.
#[derive(Debug, Clone, Copy)]
pub struct LocalField<'a> {
    cloud: &'a PointCloud,
    frames: &'a [SpectralFrame],
    params: FieldParams,
}

impl<'a> LocalField<'a> {
    pub fn new(cloud: &'a PointCloud, frames: &'a [SpectralFrame], params: FieldParams) -> Result<Self> {
        if frames.len() != cloud.len() {
            return Err(Error::ShapeMismatch {
                expected: (cloud.len(), cloud.dim()),
                found: (frames.len(), frames.first().map_or(0, SpectralFrame::dim)),
            });
        }
        if frames.iter().any(|f| f.dim() != cloud.dim()) {
            return Err(Error::InvalidArgument("frame dimension differs from cloud".into()));
        }
        if !(params.radius > 0.0) || !params.radius.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!(
                "radius must be positive, got {}",
                params.radius
            )));
        }
        if params.beta < 2 {
            return Err(Error::InvalidArgument("weight exponent must be at least 2".into()));
        }
        Ok(Self { cloud, frames, params })
    }

    pub fn cloud(&self) -> &'a PointCloud {
        self.cloud
    }

    pub fn frames(&self) -> &'a [SpectralFrame] {
        self.frames
    }

    pub fn params(&self) -> FieldParams {
        self.params
    }

    pub fn dim(&self) -> usize {
        self.cloud.dim()
    }

    /// Same data and frames, different weighting radius.
    pub fn with_radius(&self, radius: f64) -> Self {
        Self {
            params: FieldParams { radius, ..self.params },
            ..*self
        }
    }

    pub fn weights_at(&self, z: &[f64]) -> Result<Weights> {
        weights_at(z, self.cloud, self.params.radius, self.params.beta)
    }

    /// Evaluates the field with the `codim` least-variance directions.
    pub fn evaluate(&self, z: &[f64], codim: usize) -> Result<FieldEvaluation> {
        let dim = self.dim();
        if z.len() != dim {
            return Err(Error::ShapeMismatch {
                expected: (1, dim),
                found: (1, z.len()),
            });
        }
        if codim > dim {
            return Err(Error::InvalidArgument(alloc::format!(
                "codimension {codim} exceeds ambient dimension {dim}"
            )));
        }
        let (weights, nearest_sq) = weights_and_nearest(z, self.cloud, self.params.radius, self.params.beta)?;
        let mu = reference_point(self.cloud, &weights);
        let residual: Vec<f64> = z.iter().zip(&mu).map(|(a, b)| a - b).collect();

        let mut directions = Vec::with_capacity(codim);
        let mut bias_sum = vec![0.0; dim];
        for k in 0..codim {
            let u = aggregated_direction(self.frames, &weights, k)?;
            let coef = math::dot(&u, &residual);
            for (b, uj) in bias_sum.iter_mut().zip(&u) {
                *b += coef * uj;
            }
            directions.push(u);
        }
        let reach = self.params.support * self.params.radius;
        Ok(FieldEvaluation {
            query: z.to_vec(),
            weights,
            mu,
            directions,
            bias_sum,
            support_ok: nearest_sq <= reach * reach,
        })
    }
}
