//! Online addition, subtraction and multiplication of pulse trains.
//!
//! Each computation window contributes an area `eta` (in units of `theta`)
//! estimated from the operand brackets under a locally constant signal model.
//! Area below one threshold is carried to the next window together with the
//! time it has been accumulating (`eta_ex`, `t_ex`). Whenever the running total
//! reaches one threshold a pulse is emitted at the time the constant output
//! rate of the window would have produced it.

mod bounds;
mod window;

pub use bounds::{constancy_error_bounds, AreaFactors, BoundQuery, OperandDeviation};
pub use window::{partial_area, Bracket, SchedulePolicy, Window, WindowSchedule, DEFAULT_HORIZON_FACTOR};

pub(crate) use window::xi;

use crate::error::{PulseError, Result};
use crate::kernel::inverse_kernel_area;
use crate::train::{reference_train, IfcParams, Polarity, PulseEvent, PulseTrain};

/// Totals within this distance of one threshold count as reaching it exactly
/// and emit at the window end, so that rounding cannot decide ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Area and time carried between windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarryState {
    /// Residual area in units of `theta`, `|eta_ex| < 1` between windows.
    pub eta_ex: f64,
    /// Time the residual has been accumulating since the last output pulse.
    pub t_ex: f64,
    /// Last output pulse, or the output origin.
    pub t_last_out: f64,
}

impl CarryState {
    pub fn new(origin: f64) -> Self {
        Self {
            eta_ex: 0.0,
            t_ex: 0.0,
            t_last_out: origin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Multiply,
}

/// Exact kernel-based timing, or the linearized kernel (`g(m) ≈ alpha m`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    Exact,
    Approx,
}

/// Per-window diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowTrace {
    pub t_a: f64,
    pub t_b: f64,
    /// Area of the whole window before any emission.
    pub eta: f64,
    /// Area credited to the window: what the emissions consumed plus what was
    /// left in carry. Equals `eta` at zero leak; with leak, recomputing the
    /// remainder after an emission shifts it slightly.
    pub accounted: f64,
    /// Signed number of pulses emitted in the window.
    pub emitted: i32,
    pub carry: CarryState,
}

#[derive(Debug, Clone)]
pub struct ArithOutput {
    pub train: PulseTrain,
    pub trace: Vec<WindowTrace>,
    /// Emissions whose computed time fell past the window end and were pulled
    /// back to it.
    pub clamped: usize,
}

/// Streaming operator: feed it windows in order, one carry state per stream.
#[derive(Debug, Clone)]
pub struct ArithMachine {
    op: ArithOp,
    variant: Variant,
    alpha: f64,
    carry: CarryState,
    events: Vec<PulseEvent>,
    clamped: usize,
    index: usize,
}

impl ArithMachine {
    pub fn new(op: ArithOp, variant: Variant, params: IfcParams, origin: f64) -> Self {
        Self {
            op,
            variant,
            alpha: params.alpha(),
            carry: CarryState::new(origin),
            events: Vec::new(),
            clamped: 0,
            index: 0,
        }
    }

    pub fn carry(&self) -> CarryState {
        self.carry
    }

    pub fn events(&self) -> &[PulseEvent] {
        &self.events
    }

    /// Area of `(t_a, t_b)` in the window brackets.
    fn eta(&self, w: &Window, t_a: f64) -> f64 {
        let a = self.alpha;
        let term = |b: Option<Bracket>| b.map(|b| b.sign() * xi(&b, t_a, w.t_b, a));
        match self.op {
            ArithOp::Add => term(w.x).unwrap_or(0.0) + term(w.y).unwrap_or(0.0),
            ArithOp::Multiply => match (term(w.x), term(w.y), w.r) {
                (Some(ex), Some(ey), Some(r)) => {
                    let er = xi(&r, t_a, w.t_b, a);
                    if er > 0.0 {
                        ex * ey / er
                    } else {
                        0.0
                    }
                }
                _ => 0.0,
            },
        }
    }

    /// `G(Δp)` of the constant output rate over the window, or `None` when
    /// the operands cancel.
    fn output_kernel(&self, w: &Window) -> Option<f64> {
        let a = self.alpha;
        match self.op {
            ArithOp::Add => match (w.x, w.y) {
                (Some(x), Some(y)) => {
                    let (gx, gy) = (x.kernel(a), y.kernel(a));
                    // 1 / |rate_x + rate_y| with rate = p / G
                    let g = gx * gy / (x.sign() * gy + y.sign() * gx).abs();
                    (g.is_finite() && g > 0.0).then_some(g)
                }
                (Some(b), None) | (None, Some(b)) => Some(b.kernel(a)),
                (None, None) => None,
            },
            ArithOp::Multiply => {
                let (x, y, r) = (w.x?, w.y?, w.r?);
                Some(x.kernel(a) * y.kernel(a) / r.kernel(a))
            }
        }
    }

    /// Window area from raw interval ratios.
    fn eta_approx(&self, w: &Window) -> f64 {
        let width = w.width();
        let rate = |b: Option<Bracket>| b.map(|b| b.sign() / b.len());
        match self.op {
            ArithOp::Add => width * (rate(w.x).unwrap_or(0.0) + rate(w.y).unwrap_or(0.0)),
            ArithOp::Multiply => match (rate(w.x), rate(w.y), w.r) {
                (Some(rx), Some(ry), Some(r)) => width * (rx * ry) * r.len(),
                _ => 0.0,
            },
        }
    }

    /// Processes one window and returns its trace.
    pub fn process(&mut self, w: &Window) -> Result<WindowTrace> {
        let index = self.index;
        self.index += 1;
        let eta0 = match self.variant {
            Variant::Exact => self.eta(w, w.t_a),
            Variant::Approx => self.eta_approx(w),
        };
        let mut eta = eta0;
        let mut t_a = w.t_a;
        let mut emitted = 0i32;
        let mut accounted = 0.0;
        let approx_step = w.width() / eta0.abs();

        while (eta + self.carry.eta_ex).abs() >= 1.0 - TIE_TOLERANCE {
            let total = eta + self.carry.eta_ex;
            let sign = eta.signum();
            let needed = (sign - self.carry.eta_ex).abs();
            let base = self.carry.t_last_out + self.carry.t_ex;
            let mut t_k = if (total.abs() - 1.0).abs() <= TIE_TOLERANCE {
                w.t_b
            } else {
                match self.variant {
                    Variant::Approx => base + approx_step * needed,
                    Variant::Exact => {
                        let g = self.output_kernel(w).ok_or_else(|| PulseError::LogDomain {
                            window: index,
                            t_a: w.t_a,
                            t_b: w.t_b,
                            argument: 0.0,
                        })?;
                        let arg = g * needed;
                        let dt = inverse_kernel_area(self.alpha, arg).ok_or(PulseError::LogDomain {
                            window: index,
                            t_a: w.t_a,
                            t_b: w.t_b,
                            argument: 1.0 - self.alpha * arg,
                        })?;
                        base + dt
                    }
                }
            };
            if t_k > w.t_b {
                t_k = w.t_b;
                self.clamped += 1;
            }
            if t_k < t_a {
                t_k = t_a;
            }
            if let Some(prev) = self.events.last() {
                if t_k <= prev.time {
                    t_k = prev.time.next_up();
                }
            }
            let polarity = Polarity::from_sign(sign);
            self.events.push(PulseEvent::new(t_k, polarity));
            emitted += polarity.sign() as i32;

            match self.variant {
                Variant::Exact => {
                    t_a = t_k;
                    eta = self.eta(w, t_a);
                }
                Variant::Approx => eta -= sign - self.carry.eta_ex,
            }
            accounted += sign - self.carry.eta_ex;
            self.carry.eta_ex = 0.0;
            self.carry.t_ex = 0.0;
            self.carry.t_last_out = t_k;
        }
        accounted += eta;
        self.carry.eta_ex += eta;
        self.carry.t_ex = w.t_b - self.carry.t_last_out;
        Ok(WindowTrace {
            t_a: w.t_a,
            t_b: w.t_b,
            eta: eta0,
            accounted,
            emitted,
            carry: self.carry,
        })
    }

    pub fn finish(self, params: IfcParams, origin: f64) -> (PulseTrain, usize) {
        (PulseTrain::from_sorted(params, origin, self.events), self.clamped)
    }
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

/// Runs `op` over the full window schedule of `x` and `y`.
///
/// Multiplication needs a reference train covering every window; see
/// [`reference_for`].
pub fn apply(
    op: ArithOp,
    variant: Variant,
    x: &PulseTrain,
    y: &PulseTrain,
    r: Option<&PulseTrain>,
    policy: SchedulePolicy,
) -> Result<ArithOutput> {
    let params = check_params(x, y)?;
    if let Some(r) = r {
        check_params(x, r)?;
    }
    if op == ArithOp::Multiply && r.is_none() {
        return Err(PulseError::Precondition("multiplication needs a reference train".into()));
    }
    let schedule = WindowSchedule::new(x, y, r.filter(|_| op == ArithOp::Multiply), policy);
    let origin = schedule.start();
    let mut machine = ArithMachine::new(op, variant, params, origin);
    let mut trace = Vec::with_capacity(schedule.window_count());
    for w in schedule {
        if op == ArithOp::Multiply && w.r.is_none() && w.x.is_some() && w.y.is_some() {
            return Err(PulseError::ReferenceCoverage { t_a: w.t_a, t_b: w.t_b });
        }
        trace.push(machine.process(&w)?);
    }
    let (train, clamped) = machine.finish(params, origin);
    Ok(ArithOutput { train, trace, clamped })
}

/// Analytic reference train spanning both operands.
pub fn reference_for(x: &PulseTrain, y: &PulseTrain) -> Result<PulseTrain> {
    let params = check_params(x, y)?;
    let start = x.origin().min(y.origin());
    let end = x.end().max(y.end());
    let period = params.interval_for_amplitude(1.0).ok_or(PulseError::LeakCeiling {
        theta: params.theta(),
        alpha: params.alpha(),
        value: 1.0,
    })?;
    // one extra period so the last window is bracketed
    reference_train(params, start, end + period)
}

pub fn add(x: &PulseTrain, y: &PulseTrain) -> Result<PulseTrain> {
    Ok(apply(ArithOp::Add, Variant::Exact, x, y, None, SchedulePolicy::default())?.train)
}

pub fn add_approx(x: &PulseTrain, y: &PulseTrain) -> Result<PulseTrain> {
    Ok(apply(ArithOp::Add, Variant::Approx, x, y, None, SchedulePolicy::default())?.train)
}

pub fn subtract(x: &PulseTrain, y: &PulseTrain) -> Result<PulseTrain> {
    add(x, &y.negate())
}

pub fn subtract_approx(x: &PulseTrain, y: &PulseTrain) -> Result<PulseTrain> {
    add_approx(x, &y.negate())
}

pub fn multiply(x: &PulseTrain, y: &PulseTrain, r: &PulseTrain) -> Result<PulseTrain> {
    Ok(apply(ArithOp::Multiply, Variant::Exact, x, y, Some(r), SchedulePolicy::default())?.train)
}

pub fn multiply_approx(x: &PulseTrain, y: &PulseTrain, r: &PulseTrain) -> Result<PulseTrain> {
    Ok(apply(ArithOp::Multiply, Variant::Approx, x, y, Some(r), SchedulePolicy::default())?.train)
}
