//! Integrate-and-fire conversion of a sampled signal into a biphasic train.
//!
//! The integrator obeys `dv/dt = -alpha v + x(t)` with `x` linearly
//! interpolated between samples. Each grid step is propagated with the exact
//! response to a linear input, so the only discretization left is the
//! placement of a threshold crossing inside a step, which is found by linear
//! interpolation of `v`. After a pulse the integrator restarts from zero at
//! the crossing time and the rest of the step is integrated from there.

use crate::error::{PulseError, Result};
use crate::kernel::{kernel_area, ramp_area};
use crate::train::{IfcParams, Polarity, PulseEvent, PulseTrain, Signal};

/// Integrator state between grid steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderState {
    /// Leaky area accumulated since the last pulse.
    pub v: f64,
    /// Time of the last pulse, or the origin.
    pub t_last: f64,
}

/// Exact propagation of the integrator across a span with linear input.
#[derive(Debug, Clone, Copy)]
struct Propagator {
    decay: f64,
    area: f64,
    ramp_per_len: f64,
}

impl Propagator {
    fn new(alpha: f64, len: f64) -> Self {
        Self {
            decay: (-alpha * len).exp(),
            area: kernel_area(alpha, len),
            ramp_per_len: ramp_area(alpha, len) / len,
        }
    }

    /// State after the span given the input at both of its ends.
    fn advance(&self, v: f64, x0: f64, x1: f64) -> f64 {
        v * self.decay + x0 * self.area + (x1 - x0) * self.ramp_per_len
    }
}

/// Encodes `signal` with threshold and leak from `params`, integrating on a
/// grid of width `step`.
pub fn encode(signal: &Signal, params: IfcParams, step: f64) -> Result<PulseTrain> {
    if !(step.is_finite() && step > 0.0) {
        return Err(PulseError::Precondition(format!("step must be > 0, got {step}")));
    }
    if step > signal.sample_interval() * (1.0 + 1e-12) {
        return Err(PulseError::Precondition(format!(
            "step {step} exceeds the sample interval {}",
            signal.sample_interval()
        )));
    }
    let duration = signal.duration();
    if duration < step {
        return Err(PulseError::Precondition(format!(
            "signal of duration {duration} is shorter than one step {step}"
        )));
    }

    let theta = params.theta();
    let alpha = params.alpha();
    let t0 = signal.start_time();
    let full = Propagator::new(alpha, step);

    // Whole steps, then one clipped step reaching the last sample.
    let whole = (duration / step * (1.0 + 1e-12)).floor() as usize;
    let tail = duration - whole as f64 * step;
    let n_steps = if tail > step * 1e-9 { whole + 1 } else { whole };

    let mut state = EncoderState { v: 0.0, t_last: t0 };
    let mut events = Vec::new();
    let mut t_lo = t0;
    let mut x_lo = signal.value_at(t_lo);

    for i in 1..=n_steps {
        let t_hi = if i > whole { signal.end_time() } else { t0 + i as f64 * step };
        let x_hi = signal.value_at(t_hi);
        let v_hi = if i > whole {
            Propagator::new(alpha, t_hi - t_lo).advance(state.v, x_lo, x_hi)
        } else {
            full.advance(state.v, x_lo, x_hi)
        };
        integrate_step(&mut state, &mut events, theta, alpha, (t_lo, x_lo), (t_hi, x_hi), v_hi);
        t_lo = t_hi;
        x_lo = x_hi;
    }
    Ok(PulseTrain::from_sorted(params, t0, events))
}

/// Handles one grid step whose end state `v_hi` has already been propagated
/// from `state.v`. Emits every crossing found in the step.
fn integrate_step(
    state: &mut EncoderState,
    events: &mut Vec<PulseEvent>,
    theta: f64,
    alpha: f64,
    (mut t_lo, mut x_lo): (f64, f64),
    (t_hi, x_hi): (f64, f64),
    mut v_hi: f64,
) {
    let mut v_lo = state.v;
    loop {
        let sign = if v_hi >= theta {
            1.0
        } else if v_hi <= -theta {
            -1.0
        } else {
            state.v = v_hi;
            return;
        };
        let frac = ((sign * theta - v_lo) / (v_hi - v_lo)).clamp(0.0, 1.0);
        let mut t_star = t_lo + frac * (t_hi - t_lo);
        if let Some(prev) = events.last() {
            if t_star <= prev.time {
                t_star = prev.time.next_up();
            }
        }
        if t_star <= state.t_last {
            t_star = state.t_last.next_up();
        }
        events.push(PulseEvent::new(t_star, Polarity::from_sign(sign)));
        state.t_last = t_star;

        // Restart from zero at the crossing and integrate the rest of the step.
        let x_star = x_lo + (x_hi - x_lo) * ((t_star - t_lo) / (t_hi - t_lo));
        t_lo = t_star;
        x_lo = x_star;
        v_lo = 0.0;
        let rest = t_hi - t_lo;
        v_hi = if rest > 0.0 {
            Propagator::new(alpha, rest).advance(0.0, x_lo, x_hi)
        } else {
            0.0
        };
    }
}

/// Closed-form inter-pulse interval of a constant input `c`, or `None` when
/// the leak keeps it under threshold.
pub fn constant_interval(params: IfcParams, c: f64) -> Option<f64> {
    params.interval_for_amplitude(c.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(theta: f64, alpha: f64) -> IfcParams {
        IfcParams::new(theta, alpha).unwrap()
    }

    fn constant(c: f64, secs: f64, dt: f64) -> Signal {
        let n = (secs / dt).round() as usize + 1;
        Signal::new(0.0, dt, vec![c; n]).unwrap()
    }

    #[test]
    fn constant_one_volt_zero_leak() {
        let train = encode(&constant(1.0, 1.0, 1e-3), p(0.1, 0.0), 1e-6).unwrap();
        // the tenth crossing sits on the very last sample
        assert!(train.len() == 10 || train.len() == 9, "{}", train.len());
        for (k, e) in train.events().iter().enumerate() {
            assert!((e.time - 0.1 * (k + 1) as f64).abs() < 1e-6);
            assert_eq!(e.polarity, Polarity::Positive);
        }
    }

    #[test]
    fn constant_leaky_spacing() {
        let (c, theta, alpha): (f64, f64, f64) = (2.0, 0.1, 3.0);
        let want = -(1.0 - theta * alpha / c).ln() / alpha;
        let train = encode(&constant(c, 2.0, 1e-3), p(theta, alpha), 1e-5).unwrap();
        let mut prev = 0.0;
        for e in train.events() {
            assert!(((e.time - prev) - want).abs() < 1e-9 * want.max(1.0));
            prev = e.time;
        }
        assert_eq!(constant_interval(p(theta, alpha), c).unwrap(), want);
    }

    #[test]
    fn below_leak_ceiling_never_fires() {
        let train = encode(&constant(0.05, 5.0, 1e-3), p(0.1, 1.0), 1e-4).unwrap();
        assert!(train.is_empty());
        assert!(constant_interval(p(0.1, 1.0), 0.05).is_none());
    }

    #[test]
    fn rejects_bad_step_and_short_signal() {
        let s = constant(1.0, 1.0, 1e-3);
        assert!(encode(&s, p(0.1, 0.0), 0.0).is_err());
        assert!(encode(&s, p(0.1, 0.0), -1.0).is_err());
        assert!(encode(&s, p(0.1, 0.0), 2e-3).is_err());
        let short = Signal::new(0.0, 1e-3, vec![1.0]).unwrap();
        assert!(encode(&short, p(0.1, 0.0), 1e-4).is_err());
    }

    #[test]
    fn sign_symmetry_is_exact() {
        let s = Signal::from_fn(0.0, 1e-3, 2001, |t| (2.0 * PI * t).sin() + 0.3 * (7.0 * t).cos()).unwrap();
        let neg = s.map(|v| -v);
        for alpha in [0.0, 2.0] {
            let a = encode(&s, p(0.01, alpha), 1e-4).unwrap();
            let b = encode(&neg, p(0.01, alpha), 1e-4).unwrap();
            assert_eq!(b, a.negate());
        }
    }

    #[test]
    fn sinusoid_count_matches_fine_grid() {
        let s = Signal::from_fn(0.0, 1e-4, 10_001, |t| (2.0 * PI * t).sin()).unwrap();
        let coarse = encode(&s, p(0.01, 0.0), 1e-4).unwrap();
        let fine = encode(&s, p(0.01, 0.0), 1e-6).unwrap();
        assert!((coarse.len() as i64 - fine.len() as i64).abs() <= 1);
        // density is highest around the peaks
        let near = |c: f64| coarse.times().filter(|t| (t - c).abs() < 0.05).count();
        assert!(near(0.25) > 3 * near(0.5).max(1));
    }

    #[test]
    fn multiple_crossings_inside_one_step() {
        // 1 V with theta 0.01 crosses ten times inside a 0.1 s step
        let s = Signal::new(0.0, 0.1, vec![1.0, 1.0, 1.0]).unwrap();
        let train = encode(&s, p(0.01, 0.0), 0.1).unwrap();
        assert!((19..=20).contains(&train.len()));
        for (k, e) in train.events().iter().enumerate() {
            assert!((e.time - 0.01 * (k + 1) as f64).abs() < 1e-9);
        }
    }
}
