use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("target dimension {d} is outside 1..={max}")]
    InvalidDimension { d: usize, max: usize },

    #[error("angles are undefined for a Euclidean embedding")]
    AnglesUndefined,

    #[error("nearest point on the embedding set is not unique (norm {norm:e})")]
    DegenerateRetraction { norm: f64 },

    #[error("point is off the embedded manifold (deviation {deviation:e})")]
    OffManifold { deviation: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("symmetric eigen-solver did not converge{}", match .index { Some(i) => alloc::format!(" at sample {i}"), None => String::new() })]
    EigenFailure { index: Option<usize> },

    #[error("no sample lies within the weighting radius of the query point")]
    EmptyNeighborhood,

    #[error("direction {k} is ambiguous: top eigenvalue gap {gap:e}")]
    AmbiguousDirection { k: usize, gap: f64 },

    #[error("curve frame is degenerate at t = {t}")]
    FrameDegenerate { t: f64 },

    #[error("label error: {0}")]
    LabelError(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("{failed} of {total} points failed to project at level d = {d}")]
    TooManyFailures { d: usize, failed: usize, total: usize },
}
