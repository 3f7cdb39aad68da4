//! Bounds on the area error made by treating an operand as constant between
//! its pulses.

use crate::error::{PulseError, Result};

/// Deviation of one operand from its constant model over a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperandDeviation {
    /// Pulse closing the operand's bracket.
    pub next_pulse: f64,
    /// `min |x(z) - c|` over the window.
    pub min_dev: f64,
    /// `max |x(z) - c|` over the window.
    pub max_dev: f64,
}

impl OperandDeviation {
    pub fn new(next_pulse: f64, min_dev: f64, max_dev: f64) -> Self {
        Self { next_pulse, min_dev, max_dev }
    }

    fn check(&self) -> Result<()> {
        if !(self.min_dev >= 0.0 && self.min_dev <= self.max_dev && self.max_dev.is_finite()) {
            return Err(PulseError::Precondition(format!(
                "deviation extrema inconsistent: min {} max {}",
                self.min_dev, self.max_dev
            )));
        }
        Ok(())
    }
}

/// Areas `K1 = ∫x`, `K2 = ∫y`, `K3 = ∫r` of the constant models that scale
/// the product and convolution bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaFactors {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundQuery {
    Single(OperandDeviation),
    Add(OperandDeviation, OperandDeviation),
    Multiply(OperandDeviation, OperandDeviation, AreaFactors),
    /// `y` deviations are taken over the shifted range
    /// `[lambda.0 - t_b, lambda.1 - t_a]`.
    Convolve(OperandDeviation, OperandDeviation, AreaFactors, (f64, f64)),
}

/// `(lower, upper)` bound on `|delta|` for the window `(t_a, t_b)`.
pub fn constancy_error_bounds(alpha: f64, t_a: f64, t_b: f64, query: BoundQuery) -> Result<(f64, f64)> {
    if !(t_a < t_b) {
        return Err(PulseError::Precondition(format!("empty window ({t_a}, {t_b})")));
    }
    let w = t_b - t_a;
    // decay of a deviation at `t` seen from the operand's next pulse
    let decay = |next: f64, t: f64| (-alpha * (next - t)).exp();

    let bounds = match query {
        BoundQuery::Single(x) => {
            x.check()?;
            (
                w * x.min_dev * decay(x.next_pulse, t_a),
                w * x.max_dev * decay(x.next_pulse, t_b),
            )
        }
        BoundQuery::Add(x, y) => {
            x.check()?;
            y.check()?;
            let lo = (x.min_dev * decay(x.next_pulse, t_a)).hypot(y.min_dev * decay(y.next_pulse, t_a));
            let hi = (x.max_dev * decay(x.next_pulse, t_b)).hypot(y.max_dev * decay(y.next_pulse, t_b));
            (w * lo, w * hi)
        }
        BoundQuery::Multiply(x, y, k) => {
            x.check()?;
            y.check()?;
            let scale = w / k.k3.abs();
            let lo = (k.k2 * x.min_dev * decay(x.next_pulse, t_a)).hypot(k.k1 * y.min_dev * decay(y.next_pulse, t_a));
            let hi = (k.k2 * x.max_dev * decay(x.next_pulse, t_b)).hypot(k.k1 * y.max_dev * decay(y.next_pulse, t_b));
            (scale * lo, scale * hi)
        }
        BoundQuery::Convolve(x, y, k, (l1, l2)) => {
            x.check()?;
            y.check()?;
            let scale = w * (l2 - l1) / k.k3.abs();
            let lo = (k.k2 * x.min_dev * decay(x.next_pulse, t_a))
                .hypot(k.k1 * y.min_dev * decay(y.next_pulse, l1 - t_b));
            let hi = (k.k2 * x.max_dev * decay(x.next_pulse, t_b))
                .hypot(k.k1 * y.max_dev * decay(y.next_pulse, l2 - t_a));
            (scale * lo, scale * hi)
        }
    };
    Ok(bounds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_signal_has_zero_bounds() {
        let x = OperandDeviation::new(1.0, 0.0, 0.0);
        let k = AreaFactors { k1: 1.0, k2: 1.0, k3: 1.0 };
        for q in [
            BoundQuery::Single(x),
            BoundQuery::Add(x, x),
            BoundQuery::Multiply(x, x, k),
            BoundQuery::Convolve(x, x, k, (0.0, 0.5)),
        ] {
            assert_eq!(constancy_error_bounds(0.7, 0.2, 0.6, q).unwrap(), (0.0, 0.0));
        }
    }

    #[test]
    fn zero_leak_add_is_quadrature() {
        let x = OperandDeviation::new(3.0, 0.1, 0.4);
        let y = OperandDeviation::new(2.5, 0.2, 0.3);
        let (lo, hi) = constancy_error_bounds(0.0, 1.0, 1.5, BoundQuery::Add(x, y)).unwrap();
        assert!((lo - 0.5 * (0.01f64 + 0.04).sqrt()).abs() < 1e-15);
        assert!((hi - 0.5 * (0.16f64 + 0.09).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn leaky_single_bound_decays_from_window_edges() {
        let x = OperandDeviation::new(2.0, 0.5, 1.0);
        let (lo, hi) = constancy_error_bounds(1.0, 0.5, 1.0, BoundQuery::Single(x)).unwrap();
        assert!((lo - 0.5 * 0.5 * (-1.5f64).exp()).abs() < 1e-15);
        assert!((hi - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn inconsistent_extrema_rejected() {
        let bad = OperandDeviation::new(1.0, 0.5, 0.1);
        let err = constancy_error_bounds(0.0, 0.0, 1.0, BoundQuery::Single(bad)).unwrap_err();
        assert_eq!(err.class(), crate::error::ErrorClass::Precondition);
    }
}
