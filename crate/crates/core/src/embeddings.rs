//! Ambient embedding sets: R^D itself, the unit sphere S² ⊂ R³ and the flat
//! torus T² = S¹ × S¹ ⊂ R⁴.
//!
//! Angle conventions: on the sphere `φ` is longitude and `ψ` latitude,
//! `(cos ψ cos φ, cos ψ sin φ, sin ψ)`; on the torus each angle drives one
//! coordinate pair, `(cos φ, sin φ, cos ψ, sin ψ)`. Recovered angles use the
//! two-argument arctangent and lie in (-π, π].

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math;

/// Norm below which the nearest point on a sphere or circle is not unique.
pub const RETRACTION_TOLERANCE: f64 = 1e-12;

/// Largest deviation from the image set accepted by [`EmbeddingSpec::recover_angles`].
pub const MANIFOLD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmbeddingSpec {
    /// Identity embedding of R^D.
    Euclidean { dim: usize },
    /// Unit sphere in R³, parametrized by (longitude, latitude).
    Sphere2,
    /// Product of two unit circles in R⁴.
    Torus2,
}

impl EmbeddingSpec {
    /// Dimension D′ of the ambient space the fit runs in.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Self::Euclidean { dim } => *dim,
            Self::Sphere2 => 3,
            Self::Torus2 => 4,
        }
    }

    /// Number of columns expected in raw input: D for Euclidean data and
    /// two angles otherwise.
    pub fn input_dim(&self) -> usize {
        match self {
            Self::Euclidean { dim } => *dim,
            Self::Sphere2 | Self::Torus2 => 2,
        }
    }

    pub fn has_angles(&self) -> bool {
        !matches!(self, Self::Euclidean { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Euclidean { .. } => "euclidean",
            Self::Sphere2 => "sphere",
            Self::Torus2 => "torus",
        }
    }

    pub fn embed_angles(&self, phi: f64, psi: f64) -> Result<Vec<f64>> {
        match self {
            Self::Euclidean { .. } => Err(Error::AnglesUndefined),
            Self::Sphere2 => {
                let (c_psi, s_psi) = (math::cos(psi), math::sin(psi));
                Ok(vec![c_psi * math::cos(phi), c_psi * math::sin(phi), s_psi])
            }
            Self::Torus2 => Ok(vec![
                math::cos(phi),
                math::sin(phi),
                math::cos(psi),
                math::sin(psi),
            ]),
        }
    }

    /// Maps one raw input row into the ambient space.
    pub fn embed_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                expected: (1, self.input_dim()),
                found: (1, row.len()),
            });
        }
        match self {
            Self::Euclidean { .. } => Ok(row.to_vec()),
            _ => self.embed_angles(row[0], row[1]),
        }
    }

    /// Nearest point of the embedding set.
    pub fn retract(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z)?;
        match self {
            Self::Euclidean { .. } => Ok(z.to_vec()),
            Self::Sphere2 => {
                let nrm = math::norm(z);
                if nrm < RETRACTION_TOLERANCE {
                    return Err(Error::DegenerateRetraction { norm: nrm });
                }
                Ok(z.iter().map(|x| x / nrm).collect())
            }
            Self::Torus2 => {
                let n1 = math::hypot(z[0], z[1]);
                let n2 = math::hypot(z[2], z[3]);
                if n1 < RETRACTION_TOLERANCE || n2 < RETRACTION_TOLERANCE {
                    return Err(Error::DegenerateRetraction { norm: n1.min(n2) });
                }
                Ok(vec![z[0] / n1, z[1] / n1, z[2] / n2, z[3] / n2])
            }
        }
    }

    /// Angle pair of a point on the image set, each in (-π, π].
    pub fn recover_angles(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_len(x)?;
        let deviation = self.deviation(x);
        if !(deviation <= MANIFOLD_TOLERANCE) {
            return Err(Error::OffManifold { deviation });
        }
        match self {
            Self::Euclidean { .. } => Err(Error::AnglesUndefined),
            Self::Sphere2 => Ok((
                math::atan2(x[1], x[0]),
                math::atan2(x[2], math::hypot(x[0], x[1])),
            )),
            Self::Torus2 => Ok((math::atan2(x[1], x[0]), math::atan2(x[3], x[2]))),
        }
    }

    /// Distance-like deviation of `x` from the image set: `|‖x‖ - 1|` on
    /// the sphere, the worse of the two pair norms on the torus, 0 in R^D.
    pub fn deviation(&self, x: &[f64]) -> f64 {
        match self {
            Self::Euclidean { .. } => 0.0,
            Self::Sphere2 => (math::norm(x) - 1.0).abs(),
            Self::Torus2 => {
                let a = (math::hypot(x[0], x[1]) - 1.0).abs();
                let b = (math::hypot(x[2], x[3]) - 1.0).abs();
                a.max(b)
            }
        }
    }

    fn check_len(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.ambient_dim() {
            return Err(Error::ShapeMismatch {
                expected: (1, self.ambient_dim()),
                found: (1, z.len()),
            });
        }
        Ok(())
    }
}

impl fmt::Display for EmbeddingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Euclidean { dim } => write!(f, "euclidean({dim})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Places an angle pair on the ring torus in R³ with major radius 1 and
/// minor radius 0.5, for plotting.
pub fn torus_viz(phi: f64, psi: f64) -> [f64; 3] {
    let ring = 1.0 + 0.5 * math::cos(psi);
    [ring * math::cos(phi), ring * math::sin(phi), 0.5 * math::sin(psi)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::{FRAC_PI_2, PI};
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn embed_examples() {
        let s = EmbeddingSpec::Sphere2;
        let t = EmbeddingSpec::Torus2;
        assert_eq!(s.embed_angles(0.0, 0.0).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(t.embed_angles(0.0, 0.0).unwrap(), vec![1.0, 0.0, 1.0, 0.0]);
        assert!(close(&s.embed_angles(FRAC_PI_2, 0.0).unwrap(), &[0.0, 1.0, 0.0], 1e-15));
        assert_eq!(
            EmbeddingSpec::Euclidean { dim: 3 }.embed_angles(0.0, 0.0),
            Err(Error::AnglesUndefined)
        );
    }

    #[test]
    fn retract_examples() {
        assert_eq!(
            EmbeddingSpec::Sphere2.retract(&[2.0, 0.0, 0.0]).unwrap(),
            vec![1.0, 0.0, 0.0]
        );
        let t = EmbeddingSpec::Torus2.retract(&[0.5, 0.0, 3.0, 4.0]).unwrap();
        assert!(close(&t, &[1.0, 0.0, 0.6, 0.8], 1e-15));
        assert_eq!(
            EmbeddingSpec::Euclidean { dim: 3 }.retract(&[1.0, 2.0, 3.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
    }

    #[test]
    fn retract_rejects_non_unique_nearest_point() {
        assert!(matches!(
            EmbeddingSpec::Sphere2.retract(&[0.0, 0.0, 0.0]),
            Err(Error::DegenerateRetraction { .. })
        ));
        assert!(matches!(
            EmbeddingSpec::Torus2.retract(&[1.0, 1.0, 0.0, 0.0]),
            Err(Error::DegenerateRetraction { .. })
        ));
    }

    #[test]
    fn recover_examples() {
        assert_eq!(EmbeddingSpec::Sphere2.recover_angles(&[1.0, 0.0, 0.0]).unwrap(), (0.0, 0.0));
        let (phi, psi) = EmbeddingSpec::Torus2.recover_angles(&[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(phi, FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(psi, 0.0);
        assert_eq!(
            EmbeddingSpec::Torus2.recover_angles(&[1.0, 0.0, 1.0, 0.0]).unwrap(),
            (0.0, 0.0)
        );
        assert!(matches!(
            EmbeddingSpec::Sphere2.recover_angles(&[1.1, 0.0, 0.0]),
            Err(Error::OffManifold { .. })
        ));
    }

    #[test]
    fn angle_branch_is_half_open() {
        // -π folds onto π.
        let (phi, _) = EmbeddingSpec::Torus2.recover_angles(&[-1.0, -0.0, 1.0, 0.0]).unwrap();
        assert_eq!(phi, PI);
    }

    #[test]
    fn torus_viz_examples() {
        assert_eq!(torus_viz(0.0, 0.0), [1.5, 0.0, 0.0]);
        let p = torus_viz(PI, 0.0);
        assert!(close(&p, &[-1.5, 0.0, 0.0], 1e-15));
        let p = torus_viz(0.0, PI);
        assert!(close(&p, &[0.5, 0.0, 0.0], 1e-15));
    }

    proptest! {
        #[test]
        fn retract_is_idempotent(z in prop::collection::vec(-5.0f64..5.0, 4)) {
            for spec in [EmbeddingSpec::Sphere2, EmbeddingSpec::Torus2] {
                let z = &z[..spec.ambient_dim()];
                if let Ok(p) = spec.retract(z) {
                    let q = spec.retract(&p).unwrap();
                    prop_assert!(close(&p, &q, 1e-15));
                    prop_assert!(spec.deviation(&p) <= 1e-12);
                }
            }
        }

        #[test]
        fn torus_round_trip(phi in -PI..PI, psi in -PI..PI) {
            // (-π, π]: shift the open end of the sampled range.
            let (phi, psi) = (if phi == -PI { PI } else { phi }, if psi == -PI { PI } else { psi });
            let spec = EmbeddingSpec::Torus2;
            let x = spec.embed_angles(phi, psi).unwrap();
            prop_assert_eq!(spec.retract(&x).unwrap().len(), 4);
            let (a, b) = spec.recover_angles(&x).unwrap();
            prop_assert!((a - phi).abs() <= 1e-9 && (b - psi).abs() <= 1e-9);
        }

        #[test]
        fn sphere_round_trip(phi in -PI..PI, psi in -1.5f64..1.5) {
            let spec = EmbeddingSpec::Sphere2;
            let x = spec.embed_angles(phi, psi).unwrap();
            let (a, b) = spec.recover_angles(&x).unwrap();
            prop_assert!((a - phi).abs() <= 1e-9 && (b - psi).abs() <= 1e-9);
            let y = spec.embed_angles(a, b).unwrap();
            prop_assert!(close(&x, &y, 1e-9));
        }
    }
}
