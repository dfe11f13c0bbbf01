//! Iterative projection onto a fitted level set and the backward nested fit.
//!
//! Projecting `z` onto the level of dimension `d` repeats
//!
//! ```text
//! Δ = μ(z) - z
//! F = Σ_{k < D′-d} u_k(z) u_k(z)ᵀ Δ
//! z ← z + F
//! ```
//!
//! until `‖F‖ < ε`, then retracts once onto the embedding set. The nested fit
//! precomputes frames on the embedded cloud a single time and walks the
//! requested dimensions from high to low, feeding each level's output to the
//! next. Weights and frames always come from the original embedded cloud.

use alloc::format;
use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::embeddings::EmbeddingSpec;
use crate::error::{Error, Result};
use crate::field::{FieldEvaluation, FieldParams, LocalField, DEFAULT_BETA, DEFAULT_SUPPORT};
use crate::linalg::{symmetric_eigen, SquareMatrix};
use crate::math;
use crate::par;
use crate::spectral::{precompute_frames, SpectralFrame};

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_RADIUS_RETRIES: u32 = 3;
pub const DEFAULT_RETRY_INFLATION: f64 = 1.05;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub radius: f64,
    /// Target dimensions, strictly descending, each in `1..D′`.
    pub dims: Vec<usize>,
    /// Convergence threshold on `‖F‖`.
    pub epsilon: f64,
    pub max_iter: usize,
    /// Support constant `c` in (0, 1).
    pub support: f64,
    pub beta: u32,
    pub embedding: EmbeddingSpec,
    /// Multiplier on each update. 1.0 is the plain fixed-point step.
    pub step_size: f64,
    /// Recompute frames from each level's input instead of reusing the
    /// frames of the embedded cloud. Not part of the reference procedure.
    pub recompute_frames: bool,
    /// On an ambiguous direction, retry the evaluation with the radius
    /// inflated by `retry_inflation` up to this many times.
    pub radius_retries: u32,
    pub retry_inflation: f64,
}

impl FitConfig {
    pub fn new(radius: f64, dims: Vec<usize>, embedding: EmbeddingSpec) -> Self {
        Self {
            radius,
            dims,
            epsilon: DEFAULT_EPSILON,
            max_iter: DEFAULT_MAX_ITER,
            support: DEFAULT_SUPPORT,
            beta: DEFAULT_BETA,
            embedding,
            step_size: 1.0,
            recompute_frames: false,
            radius_retries: DEFAULT_RADIUS_RETRIES,
            retry_inflation: DEFAULT_RETRY_INFLATION,
        }
    }

    /// All levels `D′-1, …, 1` for the configured embedding.
    pub fn all_dims(radius: f64, embedding: EmbeddingSpec) -> Self {
        let dims = (1..embedding.ambient_dim()).rev().collect();
        Self::new(radius, dims, embedding)
    }

    pub fn field_params(&self) -> FieldParams {
        FieldParams {
            radius: self.radius,
            beta: self.beta,
            support: self.support,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ambient = self.embedding.ambient_dim();
        if ambient < 2 {
            return Err(Error::InvalidArgument(format!(
                "ambient dimension must be at least 2, got {ambient}"
            )));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {}", self.radius)));
        }
        if self.dims.is_empty() {
            return Err(Error::InvalidArgument("no target dimensions".into()));
        }
        for &d in &self.dims {
            check_dim(d, ambient)?;
        }
        if self.dims.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidArgument("target dimensions must be strictly descending".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be positive".into()));
        }
        if !(self.support > 0.0 && self.support < 1.0) {
            return Err(Error::InvalidArgument(format!("support constant must lie in (0, 1), got {}", self.support)));
        }
        if self.beta < 2 {
            return Err(Error::InvalidArgument("weight exponent must be at least 2".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidArgument("step size must be positive".into()));
        }
        if !(self.retry_inflation >= 1.0) {
            return Err(Error::InvalidArgument("retry inflation must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_dim(d: usize, ambient: usize) -> Result<()> {
    if d == 0 || d >= ambient {
        return Err(Error::InvalidDimension { d, max: ambient - 1 });
    }
    Ok(())
}

/// How a single projection ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointStatus {
    Converged,
    MaxIterations,
    /// An iterate left every radius-r ball; the last valid iterate is kept.
    EmptyNeighborhood,
    /// A direction stayed ambiguous after all radius retries.
    AmbiguousDirection,
    /// The final iterate has no unique nearest point on the embedding set.
    DegenerateRetraction,
}

impl PointStatus {
    pub fn is_converged(self) -> bool {
        self == PointStatus::Converged
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::MaxIterations => "max_iterations",
            Self::EmptyNeighborhood => "empty_neighborhood",
            Self::AmbiguousDirection => "ambiguous_direction",
            Self::DegenerateRetraction => "degenerate_retraction",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointProjection {
    /// Final point, retracted onto the embedding set.
    pub point: Vec<f64>,
    /// The iterate before retraction; this is where the bias sum was driven
    /// below ε. Equal to `point` for Euclidean embeddings.
    pub fixed_point: Vec<f64>,
    /// Number of field evaluations.
    pub iterations: usize,
    /// `‖F‖` at the last evaluation.
    pub residual: f64,
    pub status: PointStatus,
    /// Support flag of the last successful evaluation.
    pub support_ok: bool,
}

impl PointProjection {
    pub fn converged(&self) -> bool {
        self.status.is_converged()
    }
}

fn evaluate_with_retry(field: &LocalField<'_>, z: &[f64], codim: usize, config: &FitConfig) -> Result<FieldEvaluation> {
    let mut attempt = 0;
    let mut radius = field.params().radius;
    loop {
        let f = field.with_radius(radius);
        match f.evaluate(z, codim) {
            Err(Error::AmbiguousDirection { .. }) if attempt < config.radius_retries => {
                attempt += 1;
                radius *= config.retry_inflation;
            }
            other => return other,
        }
    }
}

/// Projects `z0` onto the fitted level of dimension `d`.
///
/// Numerical trouble along the way (an empty neighborhood, an ambiguous
/// direction, a degenerate retraction) is reported through
/// [`PointProjection::status`]; only contract violations are errors.
pub fn project_point(z0: &[f64], field: &LocalField<'_>, config: &FitConfig, d: usize) -> Result<PointProjection> {
    let ambient = field.dim();
    check_dim(d, ambient)?;
    if z0.len() != ambient {
        return Err(Error::ShapeMismatch {
            expected: (1, ambient),
            found: (1, z0.len()),
        });
    }
    let codim = ambient - d;

    let mut z = z0.to_vec();
    let mut status = PointStatus::MaxIterations;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut support_ok = false;
    for iter in 1..=config.max_iter {
        iterations = iter;
        let eval = match evaluate_with_retry(field, &z, codim, config) {
            Ok(eval) => eval,
            Err(Error::EmptyNeighborhood) => {
                status = PointStatus::EmptyNeighborhood;
                break;
            }
            Err(Error::AmbiguousDirection { .. }) => {
                status = PointStatus::AmbiguousDirection;
                break;
            }
            Err(e) => return Err(e),
        };
        support_ok = eval.support_ok;
        // F = Σ u uᵀ (μ - z) is the negated bias sum.
        residual = math::norm(&eval.bias_sum);
        if residual < config.epsilon {
            status = PointStatus::Converged;
            break;
        }
        let step = config.step_size;
        let next: Vec<f64> = z.iter().zip(&eval.bias_sum).map(|(zi, b)| zi - step * b).collect();
        z = next;
    }

    let point = match config.embedding.retract(&z) {
        Ok(p) => p,
        Err(Error::DegenerateRetraction { .. }) => {
            status = PointStatus::DegenerateRetraction;
            z.clone()
        }
        Err(e) => return Err(e),
    };
    Ok(PointProjection {
        point,
        fixed_point: z,
        iterations,
        residual,
        status,
        support_ok,
    })
}

/// One level of the nested fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub d: usize,
    /// Projected points on the embedding set, input order.
    pub projected: PointCloud,
    /// Pre-retraction iterates, input order.
    pub fixed_points: PointCloud,
    /// Recovered angle pairs, for sphere and torus embeddings.
    pub angles: Option<Vec<(f64, f64)>>,
    pub iterations: Vec<usize>,
    pub residuals: Vec<f64>,
    pub status: Vec<PointStatus>,
    pub support_ok: Vec<bool>,
}

impl LevelResult {
    pub fn failures(&self) -> usize {
        self.status.iter().filter(|s| !s.is_converged()).count()
    }

    pub fn converged(&self, i: usize) -> bool {
        self.status[i].is_converged()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestedResult {
    /// The raw input mapped into the embedding set.
    pub embedded: PointCloud,
    /// One entry per requested dimension, same order as `FitConfig::dims`.
    pub levels: Vec<LevelResult>,
}

impl NestedResult {
    pub fn level(&self, d: usize) -> Option<&LevelResult> {
        self.levels.iter().find(|l| l.d == d)
    }
}

/// Maps raw rows (points, or angle pairs for sphere/torus) into the ambient space.
pub fn embed_cloud(raw: &PointCloud, embedding: EmbeddingSpec) -> Result<PointCloud> {
    if raw.dim() != embedding.input_dim() {
        return Err(Error::ShapeMismatch {
            expected: (raw.len(), embedding.input_dim()),
            found: (raw.len(), raw.dim()),
        });
    }
    if !embedding.has_angles() {
        return Ok(raw.clone());
    }
    let mut coords = Vec::with_capacity(raw.len() * embedding.ambient_dim());
    for p in raw.points() {
        coords.extend(embedding.embed_row(p)?);
    }
    raw.replace_coords(coords, embedding.ambient_dim())
}

/// Projects every point of `inputs` onto the level of dimension `d`.
pub fn project_level(inputs: &PointCloud, field: &LocalField<'_>, config: &FitConfig, d: usize) -> Result<LevelResult> {
    let n = inputs.len();
    let projections = par::map_indices(n, |i| project_point(inputs.point(i), field, config, d))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let ambient = field.dim();
    let mut coords = Vec::with_capacity(n * ambient);
    let mut fixed = Vec::with_capacity(n * ambient);
    let mut iterations = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    let mut status = Vec::with_capacity(n);
    let mut support_ok = Vec::with_capacity(n);
    for p in projections {
        coords.extend_from_slice(&p.point);
        fixed.extend_from_slice(&p.fixed_point);
        iterations.push(p.iterations);
        residuals.push(p.residual);
        status.push(p.status);
        support_ok.push(p.support_ok);
    }
    let projected = inputs.replace_coords(coords, ambient)?;
    let fixed_points = inputs.replace_coords(fixed, ambient)?;

    let angles = if config.embedding.has_angles() {
        let mut out = Vec::with_capacity(n);
        for (i, p) in projected.points().enumerate() {
            // A degenerate retraction leaves the point off the manifold.
            let a = if status[i] == PointStatus::DegenerateRetraction {
                (f64::NAN, f64::NAN)
            } else {
                config.embedding.recover_angles(p)?
            };
            out.push(a);
        }
        Some(out)
    } else {
        None
    };

    Ok(LevelResult {
        d,
        projected,
        fixed_points,
        angles,
        iterations,
        residuals,
        status,
        support_ok,
    })
}

/// Fits the nested family for every dimension in `config.dims`.
///
/// Fails with [`Error::TooManyFailures`] when more than half of the points
/// do not converge at some level; otherwise unconverged points are kept at
/// their last iterate and flagged.
pub fn fit_nested(raw: &PointCloud, config: &FitConfig) -> Result<NestedResult> {
    config.validate()?;
    if raw.is_empty() {
        return Err(Error::InvalidCloud("cannot fit an empty cloud".into()));
    }
    let embedded = embed_cloud(raw, config.embedding)?;
    let frames = precompute_frames(&embedded, config.radius)?;
    let params = config.field_params();

    let mut levels: Vec<LevelResult> = Vec::with_capacity(config.dims.len());
    for &d in &config.dims {
        let inputs = levels.last().map_or(&embedded, |l| &l.projected);
        let level_frames: Vec<SpectralFrame>;
        let frames_ref: &[SpectralFrame] = if config.recompute_frames && !levels.is_empty() {
            level_frames = precompute_frames(inputs, config.radius)?;
            &level_frames
        } else {
            &frames
        };
        let field = LocalField::new(&embedded, frames_ref, params)?;
        let level = project_level(inputs, &field, config, d)?;
        let failed = level.failures();
        if 2 * failed > level.status.len() {
            return Err(Error::TooManyFailures {
                d,
                failed,
                total: level.status.len(),
            });
        }
        levels.push(level);
    }
    Ok(NestedResult { embedded, levels })
}

/// Linear baseline: projection onto the affine span of the top-`d`
/// principal axes of the global covariance.
pub fn pca_projection(cloud: &PointCloud, d: usize) -> Result<PointCloud> {
    let dim = cloud.dim();
    if d == 0 || d > dim {
        return Err(Error::InvalidDimension { d, max: dim });
    }
    if d == dim || cloud.is_empty() {
        return Ok(cloud.clone());
    }
    let n = cloud.len() as f64;
    let mut mean = alloc::vec![0.0; dim];
    for p in cloud.points() {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut cov = SquareMatrix::zeros(dim);
    let mut centered = alloc::vec![0.0; dim];
    for p in cloud.points() {
        for ((c, x), m) in centered.iter_mut().zip(p).zip(&mean) {
            *c = x - m;
        }
        cov.add_outer(&centered, 1.0 / n);
    }
    let eig = symmetric_eigen(&cov)?;
    // Subtract the discarded components rather than rebuilding from the
    // kept ones, so points already in the subspace come back unchanged.
    let discarded: Vec<&[f64]> = (0..dim - d).map(|k| eig.vector(k)).collect();

    let mut coords = Vec::with_capacity(cloud.len() * dim);
    for p in cloud.points() {
        for ((c, x), m) in centered.iter_mut().zip(p).zip(&mean) {
            *c = x - m;
        }
        let mut out = p.to_vec();
        for axis in &discarded {
            let coef = math::dot(axis, &centered);
            for (o, a) in out.iter_mut().zip(axis.iter()) {
                *o -= coef * a;
            }
        }
        coords.extend(out);
    }
    cloud.replace_coords(coords, dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn segment(n: usize) -> PointCloud {
        let rows: Vec<[f64; 3]> = (0..n).map(|i| [i as f64 / (n - 1) as f64, 0.0, 0.0]).collect();
        PointCloud::from_rows(&rows).unwrap()
    }

    #[test]
    fn config_validation() {
        let e = EmbeddingSpec::Euclidean { dim: 3 };
        assert!(FitConfig::new(0.5, vec![2, 1], e).validate().is_ok());
        assert!(FitConfig::new(0.5, vec![1, 2], e).validate().is_err());
        assert_eq!(
            FitConfig::new(0.5, vec![3], e).validate(),
            Err(Error::InvalidDimension { d: 3, max: 2 })
        );
        assert!(FitConfig::new(-1.0, vec![1], e).validate().is_err());
        assert_eq!(FitConfig::all_dims(1.0, EmbeddingSpec::Torus2).dims, vec![3, 2, 1]);
    }

    #[test]
    fn target_dimension_equal_to_ambient_is_rejected() {
        let c = segment(5);
        let frames = precompute_frames(&c, 0.5).unwrap();
        let field = LocalField::new(&c, &frames, FieldParams::new(0.5)).unwrap();
        let config = FitConfig::new(0.5, vec![1], EmbeddingSpec::Euclidean { dim: 3 });
        assert_eq!(
            project_point(&[0.5, 0.0, 0.0], &field, &config, 3),
            Err(Error::InvalidDimension { d: 3, max: 2 })
        );
    }

    #[test]
    fn far_query_is_flagged_not_failed() {
        let c = segment(11);
        let frames = precompute_frames(&c, 0.5).unwrap();
        let field = LocalField::new(&c, &frames, FieldParams::new(0.5)).unwrap();
        let config = FitConfig::new(0.5, vec![1], EmbeddingSpec::Euclidean { dim: 3 });
        let p = project_point(&[5.0, 5.0, 5.0], &field, &config, 1).unwrap();
        assert_eq!(p.status, PointStatus::EmptyNeighborhood);
        assert_eq!(p.point, vec![5.0, 5.0, 5.0]);
    }

    #[test]
    fn pca_examples() {
        let c = segment(7);
        assert_eq!(pca_projection(&c, 1).unwrap(), c);
        let noisy = PointCloud::from_rows(&[[0.0, 1.0, 2.0], [3.0, -1.0, 0.5]]).unwrap();
        assert_eq!(pca_projection(&noisy, 3).unwrap(), noisy);
        assert!(pca_projection(&noisy, 0).is_err());
        assert!(pca_projection(&noisy, 4).is_err());
    }

    #[test]
    fn pca_tie_keeps_discarded_variance() {
        let c = PointCloud::from_rows(&[[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let p = pca_projection(&c, 1).unwrap();
        let residual: f64 = c.points().zip(p.points()).map(|(a, b)| math::dist_sq(a, b)).sum::<f64>() / 4.0;
        assert!((residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embedding_shape_is_checked() {
        let c = segment(4);
        let config = FitConfig::new(0.5, vec![1], EmbeddingSpec::Torus2);
        assert!(matches!(fit_nested(&c, &config), Err(Error::ShapeMismatch { .. })));
    }
}
