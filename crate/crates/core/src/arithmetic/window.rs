//! Computation windows: the intervals between consecutive pulses of all
//! participating trains, each paired with the operand intervals bracketing it.

use crate::error::{PulseError, Result};
use crate::kernel::{discounted_area, kernel_area};
use crate::train::{IfcParams, Polarity, PulseTrain};

/// One inter-pulse interval of an operand: `(start, end]` closed by a pulse of
/// `polarity` at `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub start: f64,
    pub end: f64,
    pub polarity: Polarity,
}

impl Bracket {
    pub fn new(start: f64, end: f64, polarity: Polarity) -> Self {
        Self { start, end, polarity }
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    /// `G` of the bracket length.
    pub fn kernel(&self, alpha: f64) -> f64 {
        kernel_area(alpha, self.len())
    }

    pub(crate) fn sign(&self) -> f64 {
        self.polarity.sign()
    }
}

/// A computation window `(t_a, t_b)` with the operand brackets containing it.
/// `None` marks an operand treated as silent over the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub t_a: f64,
    pub t_b: f64,
    pub x: Option<Bracket>,
    pub y: Option<Bracket>,
    pub r: Option<Bracket>,
}

impl Window {
    pub fn width(&self) -> f64 {
        self.t_b - self.t_a
    }
}

/// Fraction of a bracket's threshold area that falls inside `(t_a, t_b)`
/// under the constant-signal model:
///
/// `xi = [g(end - t_a) - g(end - t_b)] / g(end - start)`
///
/// which is `(t_b - t_a) / (end - start)` at zero leak.
pub fn partial_area(bracket: &Bracket, t_a: f64, t_b: f64, params: IfcParams) -> Result<f64> {
    if !(bracket.start <= t_a && t_a < t_b && t_b <= bracket.end) {
        return Err(PulseError::Containment {
            t_a,
            t_b,
            start: bracket.start,
            end: bracket.end,
        });
    }
    Ok(xi(bracket, t_a, t_b, params.alpha()))
}

/// [`partial_area`] without the containment check; `t_a > t_b` yields 0.
#[inline]
pub(crate) fn xi(bracket: &Bracket, t_a: f64, t_b: f64, alpha: f64) -> f64 {
    if t_b <= t_a {
        return 0.0;
    }
    discounted_area(alpha, bracket.end, t_a, t_b) / bracket.kernel(alpha)
}

/// How operands without a bracketing pulse are treated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchedulePolicy {
    /// Stop at the first window some operand cannot bracket.
    Strict,
    /// Keep going while any operand brackets; the others are silent.
    ///
    /// With `Some(h)` an operand is also treated as silent inside a gap
    /// longer than `h` times its previous inter-pulse interval. That drops
    /// the area of the gap, so sparse bursty trains (ECG) lose pulses; the
    /// default leaves it off and an operand only goes silent after its last
    /// pulse.
    Lenient { horizon_factor: Option<f64> },
}

impl Default for SchedulePolicy {
    fn default() -> Self {
        SchedulePolicy::Lenient { horizon_factor: None }
    }
}

/// Suggested horizon for [`SchedulePolicy::Lenient`], in multiples of an
/// operand's previous interval.
pub const DEFAULT_HORIZON_FACTOR: f64 = 10.0;

/// Tracks which interval of one train the current window falls in.
#[derive(Debug, Clone)]
struct Cursor<'a> {
    train: &'a PulseTrain,
    /// Index of the first event at or after the current window end.
    next: usize,
}

impl<'a> Cursor<'a> {
    fn new(train: &'a PulseTrain) -> Self {
        Self { train, next: 0 }
    }

    fn bracket(&mut self, t_a: f64, t_b: f64, horizon: Option<f64>) -> Option<Bracket> {
        let events = self.train.events();
        while self.next < events.len() && events[self.next].time < t_b {
            self.next += 1;
        }
        let k = self.next;
        if k >= events.len() {
            return None;
        }
        let start = self.train.interval_start(k);
        if t_a < start {
            return None;
        }
        let end = events[k].time;
        if let (Some(h), true) = (horizon, k >= 1) {
            let prev = start - self.train.interval_start(k - 1);
            if end - start > h * prev {
                return None;
            }
        }
        Some(Bracket::new(start, end, events[k].polarity))
    }
}

/// Iterator over the computation windows of two operands and an optional
/// reference train.
///
/// Window boundaries are the merged, deduplicated pulse times of every
/// participating train together with their origins; e.g. `X = {1, 3}` and
/// `Y = {2, 3}` from origin 0 give `(0, 1), (1, 2), (2, 3)`.
#[derive(Debug, Clone)]
pub struct WindowSchedule<'a> {
    boundaries: Vec<f64>,
    pos: usize,
    x: Cursor<'a>,
    y: Cursor<'a>,
    r: Option<Cursor<'a>>,
    policy: SchedulePolicy,
    done: bool,
}

impl<'a> WindowSchedule<'a> {
    pub fn new(x: &'a PulseTrain, y: &'a PulseTrain, r: Option<&'a PulseTrain>, policy: SchedulePolicy) -> Self {
        let start = x.origin().min(y.origin());
        let end = x.end().max(y.end());
        let mut boundaries: Vec<f64> = Vec::with_capacity(x.len() + y.len() + 3);
        boundaries.push(start);
        boundaries.push(x.origin());
        boundaries.push(y.origin());
        boundaries.extend(x.times());
        boundaries.extend(y.times());
        if let Some(r) = r {
            boundaries.push(r.origin());
            boundaries.extend(r.times().filter(|&t| t < end));
        }
        boundaries.retain(|&t| t >= start && t <= end);
        boundaries.sort_by(f64::total_cmp);
        boundaries.dedup();
        Self {
            boundaries,
            pos: 0,
            x: Cursor::new(x),
            y: Cursor::new(y),
            r: r.map(Cursor::new),
            policy,
            done: false,
        }
    }

    /// Start of the first window.
    pub fn start(&self) -> f64 {
        self.boundaries.first().copied().unwrap_or(f64::NAN)
    }

    /// Number of windows the lenient policy would produce.
    pub fn window_count(&self) -> usize {
        self.boundaries.len().saturating_sub(1)
    }

    /// Next window, or `None` at end of stream.
    pub fn next_window(&mut self) -> Option<Window> {
        if self.done || self.pos + 1 >= self.boundaries.len() {
            return None;
        }
        let t_a = self.boundaries[self.pos];
        let t_b = self.boundaries[self.pos + 1];
        self.pos += 1;

        let horizon = match self.policy {
            SchedulePolicy::Strict => None,
            SchedulePolicy::Lenient { horizon_factor } => horizon_factor,
        };
        let x = self.x.bracket(t_a, t_b, horizon);
        let y = self.y.bracket(t_a, t_b, horizon);
        // the reference is never silenced by the horizon
        let r = self.r.as_mut().map(|c| c.bracket(t_a, t_b, None));

        match self.policy {
            SchedulePolicy::Strict => {
                if x.is_none() || y.is_none() || matches!(r, Some(None)) {
                    self.done = true;
                    return None;
                }
            }
            SchedulePolicy::Lenient { .. } => {}
        }
        Some(Window {
            t_a,
            t_b,
            x,
            y,
            r: r.flatten(),
        })
    }

    /// Whether a reference train participates.
    pub fn has_reference(&self) -> bool {
        self.r.is_some()
    }
}

impl Iterator for WindowSchedule<'_> {
    type Item = Window;

    fn next(&mut self) -> Option<Window> {
        self.next_window()
    }
}
