//! Closed forms of the exponential integration kernel.
//!
//! Every pulse-domain formula is written in terms of the leak factor
//! `g(m) = 1 - exp(-alpha m)`. All of them are homogeneous in `g`, so they can
//! equally be evaluated with the kernel area `G(m) = g(m) / alpha`, which has a
//! finite, exact value (`G(m) = m`) at zero leak. The zero-leak branch below is
//! a dedicated closed form, never a limit of the leaky one.

/// Leak factor `1 - exp(-alpha m)`.
///
/// At `alpha = 0` this is identically zero; callers that need a usable zero-leak
/// quantity use [`kernel_area`] instead.
pub fn leak_factor(alpha: f64, m: f64) -> f64 {
    -(-alpha * m).exp_m1()
}

/// `G(m) = ∫_0^m exp(-alpha s) ds`, the area a unit constant leaves in the
/// integrator after `m` seconds.
pub fn kernel_area(alpha: f64, m: f64) -> f64 {
    if alpha == 0.0 {
        m
    } else {
        leak_factor(alpha, m) / alpha
    }
}

/// Inverse of [`kernel_area`]. Returns `None` when `alpha * value >= 1`, i.e.
/// when the logarithm `ln(1 - alpha value)` has a non-positive argument.
pub fn inverse_kernel_area(alpha: f64, value: f64) -> Option<f64> {
    if alpha == 0.0 {
        return Some(value);
    }
    let x = alpha * value;
    if x >= 1.0 {
        None
    } else {
        Some(-(-x).ln_1p() / alpha)
    }
}

/// `∫_{t_a}^{t_b} exp(-alpha (t_ref - t)) dt` written as a product so that it
/// does not cancel for short windows.
pub fn discounted_area(alpha: f64, t_ref: f64, t_a: f64, t_b: f64) -> f64 {
    if alpha == 0.0 {
        t_b - t_a
    } else {
        (-alpha * (t_ref - t_b)).exp() * kernel_area(alpha, t_b - t_a)
    }
}

/// `∫_0^len s exp(-alpha (len - s)) ds`, the response to a unit ramp.
pub(crate) fn ramp_area(alpha: f64, len: f64) -> f64 {
    let x = alpha * len;
    if x.abs() < 1e-3 {
        // len²/2 - alpha len³/6 + alpha² len⁴/24 - ...
        len * len * (0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0)
    } else {
        len / alpha - kernel_area(alpha, len) / alpha
    }
}
