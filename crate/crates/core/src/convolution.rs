//! Convolution of two pulse trains.
//!
//! The output time axis is the shift `lambda` of the reversed `Y` against `X`.
//! Shifts advance between consecutive alignment events, where a pulse (or the
//! origin) of the reversed `Y` lands on a pulse (or the origin) of `X`; between
//! two alignments the set of computation windows does not change order. For
//! each shift `(lambda_1, lambda_2)` the overlap of the two supports is cut at
//! every pulse of `X`, of the shifted `Y` and of the reference, each window
//! contributes an area `eta_i`, and pulses are emitted once the running area
//! reaches one threshold.

use rayon::prelude::*;

use crate::arithmetic::{xi, Bracket, CarryState, Variant, Window, TIE_TOLERANCE};
use crate::error::{PulseError, Result};
use crate::kernel::{inverse_kernel_area, kernel_area};
use crate::train::{reference_train, IfcParams, Polarity, PulseEvent, PulseTrain};

/// Shifts processed per parallel batch.
const BATCH: usize = 256;

/// Window data of one shift.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftContext {
    pub lambda_1: f64,
    pub lambda_2: f64,
    /// Overlap `(T_1, T_2)` on the `X` time axis at the middle of the shift.
    pub t_1: f64,
    pub t_2: f64,
    pub windows: Vec<Window>,
    /// Area of each window, in units of `theta`.
    pub etas: Vec<f64>,
    /// `G(Δx) G(Δy) / G(Δr)` of each window (raw intervals for the
    /// approximation).
    kernels: Vec<f64>,
}

impl ShiftContext {
    pub fn lambda(&self) -> f64 {
        self.lambda_2 - self.lambda_1
    }

    pub fn overlap(&self) -> f64 {
        self.t_2 - self.t_1
    }

    pub fn total(&self) -> f64 {
        self.etas.iter().sum()
    }
}

/// Per-shift diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftTrace {
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub eta: f64,
    pub emitted: i32,
    pub carry: CarryState,
}

#[derive(Debug, Clone)]
pub struct ConvOutput {
    pub train: PulseTrain,
    pub trace: Vec<ShiftTrace>,
    /// Emissions pulled back into their shift interval.
    pub clamped: usize,
}

/// Consecutive alignment events of the reversed `Y` against `X`.
///
/// Alignments are all sums `a + b` with `a` a pulse time or the origin of `X`
/// and `b` likewise for `Y`, so the shifts tile the whole convolution support
/// `[origin_x + origin_y, end_x + end_y]`. Returns nothing when either train
/// has no pulses.
pub fn schedule_shifts(x: &PulseTrain, y: &PulseTrain) -> Vec<(f64, f64)> {
    if x.is_empty() || y.is_empty() {
        return Vec::new();
    }
    let xs: Vec<f64> = std::iter::once(x.origin()).chain(x.times()).collect();
    let ys: Vec<f64> = std::iter::once(y.origin()).chain(y.times()).collect();
    let mut sums = Vec::with_capacity(xs.len() * ys.len());
    for &a in &xs {
        sums.extend(ys.iter().map(|&b| a + b));
    }
    sums.sort_unstable_by(f64::total_cmp);
    // sums that differ only by rounding are one alignment
    let scale = sums.last().unwrap().abs().max(sums[0].abs()).max(1.0);
    sums.dedup_by(|b, a| *b - *a <= 1e-12 * scale);
    sums.windows(2).map(|p| (p[0], p[1])).collect()
}

/// Analytic reference train spanning the support of `x`, where the
/// computation windows live.
pub fn convolution_reference(x: &PulseTrain, y: &PulseTrain) -> Result<PulseTrain> {
    let params = check_params(x, y)?;
    let period = params.interval_for_amplitude(1.0).ok_or(PulseError::LeakCeiling {
        theta: params.theta(),
        alpha: params.alpha(),
        value: 1.0,
    })?;
    reference_train(params, x.origin(), x.end() + period)
}

fn check_params(a: &PulseTrain, b: &PulseTrain) -> Result<IfcParams> {
    if a.params() != b.params() {
        return Err(PulseError::ParamMismatch(format!(
            "theta {} alpha {} vs theta {} alpha {}",
            a.params().theta(),
            a.params().alpha(),
            b.params().theta(),
            b.params().alpha()
        )));
    }
    Ok(a.params())
}

/// Bracket of the interval of `train` containing `t` (pulse strictly after).
fn bracket_at(origin: f64, times: &[f64], polarity: &[Polarity], t: f64) -> Option<Bracket> {
    let k = times.partition_point(|&e| e <= t);
    if k == times.len() || t < origin {
        return None;
    }
    let start = if k == 0 { origin } else { times[k - 1] };
    Some(Bracket::new(start, times[k], polarity[k]))
}

/// Flattened train for fast lookups.
struct Flat {
    origin: f64,
    times: Vec<f64>,
    polarity: Vec<Polarity>,
}

impl Flat {
    fn new(train: &PulseTrain) -> Self {
        Self {
            origin: train.origin(),
            times: train.times().collect(),
            polarity: train.events().iter().map(|e| e.polarity).collect(),
        }
    }

    fn end(&self) -> f64 {
        self.times.last().copied().unwrap_or(self.origin)
    }

    fn bracket(&self, t: f64) -> Option<Bracket> {
        bracket_at(self.origin, &self.times, &self.polarity, t)
    }

    /// Events strictly inside `(lo, hi)`.
    fn inside(&self, lo: f64, hi: f64) -> &[f64] {
        let a = self.times.partition_point(|&e| e <= lo);
        let b = self.times.partition_point(|&e| e < hi);
        &self.times[a..b.max(a)]
    }
}

/// `∫_{lambda_1}^{lambda_2} xi_y dλ` for a fixed window `(t_a, t_b)` on the
/// `X` axis, where `Y` is read at `lambda - tau`.
pub(crate) fn swept_area(alpha: f64, y: &Bracket, t_a: f64, t_b: f64, lambda_1: f64, lambda_2: f64) -> f64 {
    let w = t_b - t_a;
    let gy = y.kernel(alpha);
    if alpha == 0.0 {
        return w * (lambda_2 - lambda_1) / gy;
    }
    kernel_area(alpha, w) * (-alpha * (y.end + t_a - lambda_2)).exp() * kernel_area(alpha, lambda_2 - lambda_1) / gy
}

struct Operands {
    x: Flat,
    y: Flat,
    r: Flat,
    alpha: f64,
    variant: Variant,
}

impl Operands {
    fn context(&self, lambda_1: f64, lambda_2: f64) -> Result<ShiftContext> {
        let mid = 0.5 * (lambda_1 + lambda_2);
        let t_1 = self.x.origin.max(mid - self.y.end());
        let t_2 = self.x.end().min(mid - self.y.origin);

        let mut cuts: Vec<f64> = Vec::new();
        cuts.push(t_1);
        cuts.extend_from_slice(self.x.inside(t_1, t_2));
        cuts.extend(self.y.inside(mid - t_2, mid - t_1).iter().map(|&s| mid - s));
        cuts.extend_from_slice(self.r.inside(t_1, t_2));
        cuts.push(t_2);
        cuts.sort_unstable_by(f64::total_cmp);
        cuts.dedup();

        let lambda = lambda_2 - lambda_1;
        let n = cuts.len().saturating_sub(1);
        let mut windows = Vec::with_capacity(n);
        let mut etas = Vec::with_capacity(n);
        let mut kernels = Vec::with_capacity(n);
        for pair in cuts.windows(2) {
            let (t_a, t_b) = (pair[0], pair[1]);
            if t_b <= t_a {
                continue;
            }
            let centre = 0.5 * (t_a + t_b);
            let (Some(bx), Some(by)) = (self.x.bracket(centre), self.y.bracket(mid - centre)) else {
                // rounding at the support edges
                continue;
            };
            let br = self.r.bracket(centre).ok_or(PulseError::ReferenceCoverage { t_a, t_b })?;
            let sign = bx.polarity.sign() * by.polarity.sign();
            let (eta, kernel) = match self.variant {
                Variant::Exact => {
                    let a = self.alpha;
                    let ex = xi(&bx, t_a, t_b, a);
                    let er = xi(&br, t_a, t_b, a);
                    let ey = swept_area(a, &by, t_a, t_b, lambda_1, lambda_2);
                    (sign * ex * ey / er, bx.kernel(a) * by.kernel(a) / br.kernel(a))
                }
                Variant::Approx => {
                    let (dx, dy, dr) = (bx.len(), by.len(), br.len());
                    (sign * (t_b - t_a) * dr * lambda / (dx * dy), dx * dy / dr)
                }
            };
            windows.push(Window {
                t_a,
                t_b,
                x: Some(bx),
                y: Some(by),
                r: Some(br),
            });
            etas.push(eta);
            kernels.push(kernel);
        }
        Ok(ShiftContext {
            lambda_1,
            lambda_2,
            t_1,
            t_2,
            windows,
            etas,
            kernels,
        })
    }

    /// Output interval `t_c` of window `i`.
    fn base_interval(&self, ctx: &ShiftContext, shift: usize, i: usize) -> Result<f64> {
        let v = ctx.kernels[i] / ctx.overlap();
        if self.variant == Variant::Approx {
            return Ok(v);
        }
        inverse_kernel_area(self.alpha, v).ok_or(PulseError::ShiftLogDomain {
            shift,
            window: i,
            argument: 1.0 - self.alpha * v,
        })
    }
}

/// Builds the windows and areas of one shift.
pub fn shift_context(
    x: &PulseTrain,
    y: &PulseTrain,
    r: &PulseTrain,
    variant: Variant,
    lambda_1: f64,
    lambda_2: f64,
) -> Result<ShiftContext> {
    let params = check_params(x, y)?;
    check_params(x, r)?;
    operands(x, y, r, params, variant).context(lambda_1, lambda_2)
}

fn operands(x: &PulseTrain, y: &PulseTrain, r: &PulseTrain, params: IfcParams, variant: Variant) -> Operands {
    Operands {
        x: Flat::new(x),
        y: Flat::new(y),
        r: Flat::new(r),
        alpha: params.alpha(),
        variant,
    }
}

struct Emitter {
    carry: CarryState,
    events: Vec<PulseEvent>,
    clamped: usize,
}

impl Emitter {
    fn shift(&mut self, ops: &Operands, mut ctx: ShiftContext, shift: usize) -> Result<ShiftTrace> {
        let eta0 = ctx.total();
        let mut eta = eta0;
        let mut first = 0;
        let mut emitted = 0i32;
        // time credited to each window per unit of area, filled on demand
        let mut t_c: Vec<Option<f64>> = vec![None; ctx.etas.len()];

        while (eta + self.carry.eta_ex).abs() >= 1.0 - TIE_TOLERANCE {
            let mut running = self.carry.eta_ex;
            let mut j = first;
            while j < ctx.etas.len() {
                if (running + ctx.etas[j]).abs() >= 1.0 - TIE_TOLERANCE {
                    break;
                }
                running += ctx.etas[j];
                j += 1;
            }
            if j == ctx.etas.len() {
                // the total only crossed by rounding
                break;
            }
            let sigma = ctx.etas[j].signum() - running;

            let mut elapsed = 0.0;
            for i in first..=j {
                let weight = if i == j { sigma.abs() } else { ctx.etas[i].abs() };
                if weight == 0.0 {
                    continue;
                }
                let tc = match t_c[i] {
                    Some(v) => v,
                    None => {
                        let v = ops.base_interval(&ctx, shift, i)?;
                        t_c[i] = Some(v);
                        v
                    }
                };
                elapsed += weight * tc;
            }
            let mut t_k = self.carry.t_last_out + self.carry.t_ex + elapsed;
            if t_k > ctx.lambda_2 {
                t_k = ctx.lambda_2;
                self.clamped += 1;
            }
            t_k = t_k.max(ctx.lambda_1);
            if let Some(prev) = self.events.last() {
                if t_k <= prev.time {
                    t_k = prev.time.next_up();
                }
            }
            let polarity = Polarity::from_sign(sigma);
            self.events.push(PulseEvent::new(t_k, polarity));
            emitted += polarity.sign() as i32;

            ctx.etas[j] -= sigma;
            for e in &mut ctx.etas[first..j] {
                *e = 0.0;
            }
            first = j;
            eta = ctx.etas[j..].iter().sum();
            self.carry.eta_ex = 0.0;
            self.carry.t_ex = 0.0;
            self.carry.t_last_out = t_k;
        }
        self.carry.eta_ex += eta;
        self.carry.t_ex = ctx.lambda_2 - self.carry.t_last_out;
        Ok(ShiftTrace {
            lambda_1: ctx.lambda_1,
            lambda_2: ctx.lambda_2,
            eta: eta0,
            emitted,
            carry: self.carry,
        })
    }
}

/// Convolution with full diagnostics.
pub fn convolve_with(variant: Variant, x: &PulseTrain, y: &PulseTrain, r: &PulseTrain) -> Result<ConvOutput> {
    let params = check_params(x, y)?;
    check_params(x, r)?;
    if x.is_empty() || y.is_empty() {
        return Err(PulseError::Precondition("convolution operands must have pulses".into()));
    }
    let ops = operands(x, y, r, params, variant);
    let shifts = schedule_shifts(x, y);
    let origin = x.origin() + y.origin();
    let mut emitter = Emitter {
        carry: CarryState::new(origin),
        events: Vec::new(),
        clamped: 0,
    };
    let mut trace = Vec::with_capacity(shifts.len());
    for (b, batch) in shifts.chunks(BATCH).enumerate() {
        let contexts: Vec<Result<ShiftContext>> = batch
            .par_iter()
            .map(|&(l1, l2)| ops.context(l1, l2))
            .collect();
        for (i, ctx) in contexts.into_iter().enumerate() {
            trace.push(emitter.shift(&ops, ctx?, b * BATCH + i)?);
        }
    }
    Ok(ConvOutput {
        train: PulseTrain::from_sorted(params, origin, emitter.events),
        trace,
        clamped: emitter.clamped,
    })
}

pub fn convolve(x: &PulseTrain, y: &PulseTrain, r: &PulseTrain) -> Result<PulseTrain> {
    Ok(convolve_with(Variant::Exact, x, y, r)?.train)
}

pub fn convolve_approx(x: &PulseTrain, y: &PulseTrain, r: &PulseTrain) -> Result<PulseTrain> {
    Ok(convolve_with(Variant::Approx, x, y, r)?.train)
}
