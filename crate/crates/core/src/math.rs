// Float intrinsics routed through libm so results do not depend on the
// platform's libm (and so the crate builds without std).

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn tan(x: f64) -> f64 {
    libm::tan(x)
}

#[inline]
pub(crate) fn atan(x: f64) -> f64 {
    libm::atan(x)
}

#[inline]
pub(crate) fn acos(x: f64) -> f64 {
    libm::acos(x)
}

/// Two-argument arctangent folded onto (-π, π].
#[inline]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    let a = libm::atan2(y, x);
    if a <= -core::f64::consts::PI {
        core::f64::consts::PI
    } else {
        a
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

#[inline]
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}
