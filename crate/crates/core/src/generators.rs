//! Seeded synthetic data around known curves.
//!
//! Euclidean cases place noise in the normal plane of a space curve in R³:
//! `x = γ(t) + ξ₁ v₁(t) + ξ₂ v₂(t)`. Shape cases place noise along the unit
//! normal of a curve in the angle plane, `(φ, ψ) = γ(t) + ξ n(t)`, and the
//! caller embeds the pairs on S² or T².
//!
//! Randomness comes from ChaCha8 seeded with the scenario seed. Parameter
//! draws use stream 0, the first noise amplitude stream 1 and the second
//! stream 2, so changing `n` only extends each stream.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cloud::PointCloud;
use crate::embeddings::EmbeddingSpec;
use crate::error::{Error, Result};
use crate::math;

const STREAM_PARAMETER: u64 = 0;
const STREAM_NOISE_1: u64 = 1;
const STREAM_NOISE_2: u64 = 2;

/// Curve-frame vectors shorter than this are treated as undefined.
const FRAME_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioCase {
    EuclidLine,
    EuclidCircle,
    EuclidInvolute,
    SphereCircle,
    SphereTennis,
    SphereInvolute,
    TorusCircleMajor,
    TorusCircleMinor,
    TorusInvolute,
}

impl ScenarioCase {
    pub const ALL: [ScenarioCase; 9] = [
        Self::EuclidLine,
        Self::EuclidCircle,
        Self::EuclidInvolute,
        Self::SphereCircle,
        Self::SphereTennis,
        Self::SphereInvolute,
        Self::TorusCircleMajor,
        Self::TorusCircleMinor,
        Self::TorusInvolute,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::EuclidLine => "euclid_line",
            Self::EuclidCircle => "euclid_circle",
            Self::EuclidInvolute => "euclid_involute",
            Self::SphereCircle => "sphere_circle",
            Self::SphereTennis => "sphere_tennis",
            Self::SphereInvolute => "sphere_involute",
            Self::TorusCircleMajor => "torus_circle_major",
            Self::TorusCircleMinor => "torus_circle_minor",
            Self::TorusInvolute => "torus_involute",
        }
    }

    pub fn is_euclidean(self) -> bool {
        matches!(self, Self::EuclidLine | Self::EuclidCircle | Self::EuclidInvolute)
    }

    /// Embedding the generated rows are meant for.
    pub fn embedding(self) -> EmbeddingSpec {
        match self {
            Self::EuclidLine | Self::EuclidCircle | Self::EuclidInvolute => EmbeddingSpec::Euclidean { dim: 3 },
            Self::SphereCircle | Self::SphereTennis | Self::SphereInvolute => EmbeddingSpec::Sphere2,
            Self::TorusCircleMajor | Self::TorusCircleMinor | Self::TorusInvolute => EmbeddingSpec::Torus2,
        }
    }

    /// Default noise scales `(σ₁, σ₂)` for the Euclidean cases.
    pub fn default_sigmas(self) -> (f64, f64) {
        match self {
            Self::EuclidInvolute => (0.09, 0.03),
            _ => (0.1, 0.05),
        }
    }
}

impl fmt::Display for ScenarioCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioCase {
    type Err = Error;

    /// Accepts `euclid_line` and `euclid-line` spellings.
    fn from_str(s: &str) -> Result<Self> {
        let canon: alloc::string::String = s.chars().map(|c| if c == '-' { '_' } else { c }).collect();
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == canon)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown scenario case '{s}'")))
    }
}

/// Parameter interval for the Euclidean circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CircleInterval {
    /// `t ∈ (0, 2π)`, the full circle.
    #[default]
    FullTurn,
    /// `t ∈ (0, 1)`, an arc of one radian.
    UnitInterval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub case: ScenarioCase,
    pub n: usize,
    /// Noise along `v₁` (Euclidean cases).
    pub sigma1: f64,
    /// Noise along `v₂` (Euclidean cases).
    pub sigma2: f64,
    /// Normal noise in the angle plane (shape cases).
    pub sigma: f64,
    pub seed: u64,
    pub circle_interval: CircleInterval,
}

impl ScenarioSpec {
    /// Spec with the reference noise levels and n = 10⁴.
    pub fn new(case: ScenarioCase, seed: u64) -> Self {
        let (sigma1, sigma2) = case.default_sigmas();
        Self {
            case,
            n: 10_000,
            sigma1,
            sigma2,
            sigma: 0.1,
            seed,
            circle_interval: CircleInterval::FullTurn,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("sample count must be at least 1".into()));
        }
        for (name, s) in [("sigma1", self.sigma1), ("sigma2", self.sigma2), ("sigma", self.sigma)] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(alloc::format!("{name} must be finite and non-negative")));
            }
        }
        Ok(())
    }

    fn parameter_interval(&self) -> (f64, f64) {
        match self.case {
            ScenarioCase::EuclidLine => (0.0, 1.0),
            ScenarioCase::EuclidCircle => match self.circle_interval {
                CircleInterval::FullTurn => (0.0, TAU),
                CircleInterval::UnitInterval => (0.0, 1.0),
            },
            ScenarioCase::EuclidInvolute => (0.0, 6.0 * PI),
            ScenarioCase::SphereInvolute => (FRAC_PI_2, 4.5 * PI),
            ScenarioCase::TorusInvolute => (FRAC_PI_2, 9.5 * PI),
            _ => (0.0, TAU),
        }
    }
}

/// Generated rows plus the curve parameter of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Points in R³ for Euclidean cases, `(φ, ψ)` rows for shape cases.
    pub cloud: PointCloud,
    pub t: Vec<f64>,
}

struct Streams {
    parameter: ChaCha8Rng,
    noise1: ChaCha8Rng,
    noise2: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        let stream = |s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            rng
        };
        Self {
            parameter: stream(STREAM_PARAMETER),
            noise1: stream(STREAM_NOISE_1),
            noise2: stream(STREAM_NOISE_2),
        }
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Draws `n` parameters uniformly from `[lo, hi)`.
fn draw_parameters(rng: &mut ChaCha8Rng, n: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Generates the scenario: a 3-D cloud for Euclidean cases, angle pairs
/// otherwise.
pub fn generate(spec: &ScenarioSpec) -> Result<Sample> {
    if spec.case.is_euclidean() {
        gen_euclidean(spec)
    } else {
        gen_shape(spec)
    }
}

/// Point, velocity and acceleration of the Euclidean curves.
fn space_curve(case: ScenarioCase, t: f64) -> [[f64; 3]; 3] {
    let (s, c) = (math::sin(t), math::cos(t));
    match case {
        ScenarioCase::EuclidLine => [[t, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0; 3]],
        ScenarioCase::EuclidCircle => [[c, s, 0.0], [-s, c, 0.0], [-c, -s, 0.0]],
        ScenarioCase::EuclidInvolute => [
            [t / 6.0 * c, t / 6.0 * s, t / 6.0],
            [(c - t * s) / 6.0, (s + t * c) / 6.0, 1.0 / 6.0],
            [(-2.0 * s - t * c) / 6.0, (2.0 * c - t * s) / 6.0, 0.0],
        ],
        _ => unreachable!("not a space curve"),
    }
}

fn normalized(v: [f64; 3], t: f64) -> Result<[f64; 3]> {
    let n = math::norm(&v);
    if !(n >= FRAME_TOLERANCE) {
        return Err(Error::FrameDegenerate { t });
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Orthonormal noise directions `(v₁, v₂)` in the normal plane at `t`.
fn noise_frame(case: ScenarioCase, t: f64) -> Result<[[f64; 3]; 2]> {
    match case {
        ScenarioCase::EuclidLine => Ok([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
        ScenarioCase::EuclidCircle => Ok([[0.0, 0.0, 1.0], [math::cos(t), math::sin(t), 0.0]]),
        ScenarioCase::EuclidInvolute => {
            let [_, vel, acc] = space_curve(case, t);
            let tangent = normalized(vel, t)?;
            // The parametrization is not unit speed; drop the tangential part
            // of the acceleration so the frame is orthonormal.
            let along = math::dot(&acc, &tangent);
            let normal = normalized(
                [
                    acc[0] - along * tangent[0],
                    acc[1] - along * tangent[1],
                    acc[2] - along * tangent[2],
                ],
                t,
            )?;
            let binormal = normalized(cross(tangent, normal), t)?;
            let (s2, c2) = (math::sin(2.0 * t), math::cos(2.0 * t));
            let mix = |a: f64, u: [f64; 3], b: f64, w: [f64; 3]| {
                [a * u[0] + b * w[0], a * u[1] + b * w[1], a * u[2] + b * w[2]]
            };
            Ok([mix(s2, binormal, c2, normal), mix(c2, binormal, -s2, normal)])
        }
        _ => unreachable!("not a space curve"),
    }
}

/// Euclidean cases: `x = γ(t) + ξ₁ v₁(t) + ξ₂ v₂(t)` in R³.
pub fn gen_euclidean(spec: &ScenarioSpec) -> Result<Sample> {
    spec.validate()?;
    if !spec.case.is_euclidean() {
        return Err(Error::InvalidArgument(alloc::format!("{} is not a Euclidean case", spec.case)));
    }
    let mut streams = Streams::new(spec.seed);
    let t = draw_parameters(&mut streams.parameter, spec.n, spec.parameter_interval());
    let mut coords = Vec::with_capacity(spec.n * 3);
    for &ti in &t {
        let xi1 = spec.sigma1 * standard_normal(&mut streams.noise1);
        let xi2 = spec.sigma2 * standard_normal(&mut streams.noise2);
        let [g, _, _] = space_curve(spec.case, ti);
        let [v1, v2] = noise_frame(spec.case, ti)?;
        for j in 0..3 {
            coords.push(g[j] + xi1 * v1[j] + xi2 * v2[j]);
        }
    }
    Ok(Sample {
        cloud: PointCloud::new(coords, 3)?.with_source(spec.case.as_str()),
        t,
    })
}

/// Point, velocity and acceleration of the angle-plane curves.
pub(crate) fn angle_curve(case: ScenarioCase, t: f64) -> [[f64; 2]; 3] {
    let (s, c) = (math::sin(t), math::cos(t));
    match case {
        ScenarioCase::SphereCircle | ScenarioCase::TorusCircleMajor => [[t, 0.0], [1.0, 0.0], [0.0, 0.0]],
        ScenarioCase::TorusCircleMinor => [[-2.0 * PI / 3.0, t], [0.0, 1.0], [0.0, 0.0]],
        ScenarioCase::SphereInvolute | ScenarioCase::TorusInvolute => [
            [t / 10.0 * c, t / 10.0 * s],
            [(c - t * s) / 10.0, (s + t * c) / 10.0],
            [(-2.0 * s - t * c) / 10.0, (2.0 * c - t * s) / 10.0],
        ],
        ScenarioCase::SphereTennis => tennis_curve(t),
        _ => unreachable!("not an angle curve"),
    }
}

// φ = arctan(tan³t ∓ π/2) (minus on (0, π), plus on (π, 2π)),
// ψ = arccos(√3 sin t cos t).
fn tennis_curve(t: f64) -> [[f64; 2]; 3] {
    let shift = if t < PI { -FRAC_PI_2 } else { FRAC_PI_2 };
    let tn = math::tan(t);
    let sec2 = 1.0 + tn * tn;
    let g = tn * tn * tn + shift;
    let g1 = 3.0 * tn * tn * sec2;
    let g2 = 6.0 * tn * sec2 * sec2 + 6.0 * tn * tn * tn * sec2;
    let q = 1.0 + g * g;
    let phi = math::atan(g);
    let phi1 = g1 / q;
    let phi2 = (g2 * q - 2.0 * g * g1 * g1) / (q * q);

    let sqrt3 = math::sqrt(3.0);
    let h = 0.5 * sqrt3 * math::sin(2.0 * t);
    let h1 = sqrt3 * math::cos(2.0 * t);
    let h2 = -2.0 * sqrt3 * math::sin(2.0 * t);
    let w = 1.0 - h * h;
    let psi = math::acos(h);
    let psi1 = -h1 / math::sqrt(w);
    let psi2 = -(h2 * w + h * h1 * h1) / (w * math::sqrt(w));
    [[phi, psi], [phi1, psi1], [phi2, psi2]]
}

/// Curves whose angle-plane acceleration vanishes identically; their noise
/// direction is the left unit normal of the velocity instead.
fn is_straight(case: ScenarioCase) -> bool {
    matches!(
        case,
        ScenarioCase::SphereCircle | ScenarioCase::TorusCircleMajor | ScenarioCase::TorusCircleMinor
    )
}

/// Unit noise direction in the angle plane at `t`.
pub(crate) fn angle_noise_direction(case: ScenarioCase, t: f64) -> Result<[f64; 2]> {
    let [_, vel, acc] = angle_curve(case, t);
    let dir = if is_straight(case) { [-vel[1], vel[0]] } else { acc };
    let n = math::hypot(dir[0], dir[1]);
    if !(n >= FRAME_TOLERANCE) || !n.is_finite() {
        return Err(Error::FrameDegenerate { t });
    }
    Ok([dir[0] / n, dir[1] / n])
}

/// Shape cases: `(φ, ψ) = γ(t) + ξ n(t)`.
pub fn gen_shape(spec: &ScenarioSpec) -> Result<Sample> {
    spec.validate()?;
    if spec.case.is_euclidean() {
        return Err(Error::InvalidArgument(alloc::format!("{} is not a shape case", spec.case)));
    }
    let mut streams = Streams::new(spec.seed);
    let t = draw_parameters(&mut streams.parameter, spec.n, spec.parameter_interval());
    let mut coords = Vec::with_capacity(spec.n * 2);
    for &ti in &t {
        let xi = spec.sigma * standard_normal(&mut streams.noise1);
        let [g, _, _] = angle_curve(spec.case, ti);
        let dir = angle_noise_direction(spec.case, ti)?;
        coords.push(g[0] + xi * dir[0]);
        coords.push(g[1] + xi * dir[1]);
    }
    Ok(Sample {
        cloud: PointCloud::new(coords, 2)?.with_source(spec.case.as_str()),
        t,
    })
}
