//! Small numeric helpers shared across modules.

/// Most negative value still treated as a rounding artifact of zero.
pub(crate) const NEG_EPS: f64 = -1e-14;

/// x^alpha with fast paths for the small integer exponents that dominate
/// the stepping kernels.
#[inline]
pub(crate) fn apow(x: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        x
    } else if alpha == 2.0 {
        x * x
    } else if alpha == 3.0 {
        x * x * x
    } else if alpha == 4.0 {
        let s = x * x;
        s * s
    } else {
        x.powf(alpha)
    }
}

/// Fractional power of a value that is nonnegative up to rounding.
/// Values in [NEG_EPS, 0) count as 0; anything below is a real sign error
/// and yields None.
#[inline]
pub(crate) fn frac_pow(x: f64, p: f64) -> Option<f64> {
    if x > 0.0 {
        Some(x.powf(p))
    } else if x >= NEG_EPS {
        Some(0.0)
    } else {
        None
    }
}
