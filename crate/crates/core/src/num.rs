//! Float helpers that work without `std`.

/// Relative slack used when two measures of the same set are computed by
/// different summation orders.
pub(crate) const MEASURE_RTOL: f64 = 1e-12;

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn log2(x: f64) -> f64 {
    libm::log2(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// `2^k` for an integer exponent.
#[inline]
pub(crate) fn pow2(k: i64) -> f64 {
    libm::ldexp(1.0, k as i32)
}

/// `a >= b` up to a relative slack.
#[inline]
pub(crate) fn ge_rel(a: f64, b: f64, rtol: f64) -> bool {
    a >= b - rtol * abs(a).max(abs(b))
}
