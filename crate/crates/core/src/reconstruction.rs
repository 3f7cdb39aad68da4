//! Least-squares reconstruction of a signal from its pulse train.
//!
//! The signal is modelled as `x(t) = Σ a_k φ_k(t)`. Every inter-pulse interval
//! `(t_i, t_{i+1}]` inside the window gives one equation
//! `p_{i+1} θ = Σ a_k ∫ φ_k(t) e^{-α (t_{i+1} - t)} dt`, and the coefficients
//! are the minimum-norm least-squares solution.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{PulseError, Result};
use crate::train::{PulseTrain, Signal};

/// Relative tolerance of the per-interval quadrature.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;

/// Condition number above which a reconstruction is flagged.
pub const CONDITION_WARNING: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// DC followed by cosine/sine pairs of harmonics of the window length.
    Fourier,
    /// Cubic B-splines on uniform knots over the window.
    BSpline,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub m: usize,
    pub window: (f64, f64),
}

impl BasisSpec {
    pub fn new(kind: BasisKind, m: usize, window: (f64, f64)) -> Result<Self> {
        if m == 0 {
            return Err(PulseError::Precondition("basis needs at least one function".into()));
        }
        if kind == BasisKind::BSpline && m < 4 {
            return Err(PulseError::Precondition("cubic B-splines need m >= 4".into()));
        }
        if !(window.1 > window.0) {
            return Err(PulseError::Precondition(format!("empty window {window:?}")));
        }
        Ok(Self { kind, m, window })
    }

    /// Values of every basis function at `t`, written into `out`.
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let (a, b) = self.window;
        match self.kind {
            BasisKind::Fourier => {
                let w = 2.0 * PI / (b - a);
                let u = t - a;
                out[0] = 1.0;
                for k in 1..self.m {
                    let h = k.div_ceil(2) as f64;
                    out[k] = if k % 2 == 1 { (w * h * u).cos() } else { (w * h * u).sin() };
                }
            }
            BasisKind::BSpline => bspline_values(self.m, a, b, t, out),
        }
    }
}

/// Cubic B-splines with clamped uniform knots; `m` functions on `[a, b]`.
fn bspline_values(m: usize, a: f64, b: f64, t: f64, out: &mut [f64]) {
    const DEGREE: usize = 3;
    let segments = m - DEGREE;
    let h = (b - a) / segments as f64;
    let knot = |i: usize| -> f64 {
        if i <= DEGREE {
            a
        } else if i >= m {
            b
        } else {
            a + (i - DEGREE) as f64 * h
        }
    };
    let t = t.clamp(a, b);
    // degree 0, half-open except the last span
    let n_knots = m + DEGREE + 1;
    let mut basis = vec![0.0; n_knots - 1];
    for (i, v) in basis.iter_mut().enumerate() {
        let (lo, hi) = (knot(i), knot(i + 1));
        *v = if (lo <= t && t < hi) || (t == b && hi == b && lo < hi) { 1.0 } else { 0.0 };
    }
    for d in 1..=DEGREE {
        for i in 0..n_knots - 1 - d {
            let left = {
                let den = knot(i + d) - knot(i);
                if den > 0.0 { (t - knot(i)) / den * basis[i] } else { 0.0 }
            };
            let right = {
                let den = knot(i + d + 1) - knot(i + 1);
                if den > 0.0 { (knot(i + d + 1) - t) / den * basis[i + 1] } else { 0.0 }
            };
            basis[i] = left + right;
        }
    }
    out[..m].copy_from_slice(&basis[..m]);
}

/// Adaptive Simpson integration of a vector-valued integrand, refined until
/// the change is below `tol` relative to the integral's norm.
fn integrate_vec(f: &dyn Fn(f64, &mut [f64]), a: f64, b: f64, dim: usize, tol: f64) -> Vec<f64> {
    let eval = |t: f64| {
        let mut v = vec![0.0; dim];
        f(t, &mut v);
        v
    };
    let fa = eval(a);
    let fb = eval(b);
    let fm = eval(0.5 * (a + b));
    let whole = simpson(a, b, &fa, &fm, &fb);
    let scale = whole.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut out = vec![0.0; dim];
    refine(&eval, a, b, fa, fm, fb, whole, tol * scale, 40, &mut out);
    out
}

fn simpson(a: f64, b: f64, fa: &[f64], fm: &[f64], fb: &[f64]) -> Vec<f64> {
    let h = (b - a) / 6.0;
    fa.iter().zip(fm).zip(fb).map(|((x, y), z)| h * (x + 4.0 * y + z)).collect()
}

#[allow(clippy::too_many_arguments)]
fn refine(
    eval: &dyn Fn(f64) -> Vec<f64>,
    a: f64,
    b: f64,
    fa: Vec<f64>,
    fm: Vec<f64>,
    fb: Vec<f64>,
    whole: Vec<f64>,
    tol: f64,
    depth: u32,
    out: &mut [f64],
) {
    let m = 0.5 * (a + b);
    let flm = eval(0.5 * (a + m));
    let frm = eval(0.5 * (m + b));
    let left = simpson(a, m, &fa, &flm, &fm);
    let right = simpson(m, b, &fm, &frm, &fb);
    let err = left
        .iter()
        .zip(&right)
        .zip(&whole)
        .map(|((l, r), w)| (l + r - w).abs())
        .fold(0.0, f64::max);
    if depth == 0 || err <= 15.0 * tol {
        for (i, o) in out.iter_mut().enumerate() {
            // Richardson step
            *o += left[i] + right[i] + (left[i] + right[i] - whole[i]) / 15.0;
        }
        return;
    }
    refine(eval, a, m, fa, flm, fm.clone(), left, 0.5 * tol, depth - 1, out);
    refine(eval, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, out);
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub signal: Signal,
    pub coefficients: Vec<f64>,
    /// Ratio of largest to smallest singular value of `S`.
    pub condition: f64,
    /// `condition` exceeded [`CONDITION_WARNING`].
    pub ill_conditioned: bool,
    pub intervals: usize,
}

impl Reconstruction {
    pub fn basis_value(spec: &BasisSpec, coefficients: &[f64], t: f64) -> f64 {
        let mut phi = vec![0.0; spec.m];
        spec.eval(t, &mut phi);
        phi.iter().zip(coefficients).map(|(p, a)| p * a).sum()
    }
}

/// Reconstructs the signal behind `train` on `basis.window`, sampled every
/// `dt` seconds from the window start.
pub fn reconstruct(train: &PulseTrain, basis: BasisSpec, dt: f64) -> Result<Reconstruction> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(PulseError::Precondition(format!("sample interval must be > 0, got {dt}")));
    }
    let (w0, w1) = basis.window;
    let params = train.params();
    let alpha = params.alpha();
    let mut intervals = Vec::new();
    let mut prev = train.origin();
    for e in train.events() {
        if prev >= w0 && e.time <= w1 {
            intervals.push((prev, e.time, e.polarity.sign()));
        }
        prev = e.time;
    }
    if intervals.len() < basis.m {
        return Err(PulseError::Precondition(format!(
            "{} pulse intervals in the window, basis needs at least {}",
            intervals.len(),
            basis.m
        )));
    }

    let m = basis.m;
    let mut s = DMatrix::<f64>::zeros(intervals.len(), m);
    let mut rhs = DVector::<f64>::zeros(intervals.len());
    for (i, &(t0, t1, sign)) in intervals.iter().enumerate() {
        let f = |t: f64, out: &mut [f64]| {
            basis.eval(t, out);
            let k = (-alpha * (t1 - t)).exp();
            for v in out.iter_mut() {
                *v *= k;
            }
        };
        let row = integrate_vec(&f, t0, t1, m, QUADRATURE_TOLERANCE);
        for (k, v) in row.into_iter().enumerate() {
            s[(i, k)] = v;
        }
        rhs[i] = sign * params.theta();
    }

    let svd = s.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let eps = smax * f64::EPSILON * intervals.len().max(m) as f64;
    let coef = svd
        .solve(&rhs, eps)
        .map_err(|e| PulseError::Degenerate(format!("least squares failed: {e}")))?;
    let coefficients: Vec<f64> = coef.iter().copied().collect();

    let n = ((w1 - w0) / dt + 1e-9).floor() as usize + 1;
    let mut phi = vec![0.0; m];
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            basis.eval(w0 + i as f64 * dt, &mut phi);
            phi.iter().zip(&coefficients).map(|(p, a)| p * a).sum()
        })
        .collect();
    Ok(Reconstruction {
        signal: Signal::new(w0, dt, samples)?,
        coefficients,
        condition,
        ill_conditioned: condition > CONDITION_WARNING,
        intervals: intervals.len(),
    })
}
