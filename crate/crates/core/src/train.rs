//! Pulse trains, sampled signals and the conversion parameters shared by both.

use crate::error::{PulseError, Result};
use crate::kernel::{inverse_kernel_area, kernel_area};

/// Threshold and leak rate of one integrate-and-fire conversion regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IfcParams {
    theta: f64,
    alpha: f64,
}

impl IfcParams {
    pub fn new(theta: f64, alpha: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(PulseError::InvalidParams(format!("theta must be > 0, got {theta}")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(PulseError::InvalidParams(format!("alpha must be >= 0, got {alpha}")));
        }
        Ok(Self { theta, alpha })
    }

    /// Threshold, in amplitude × seconds.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Leak rate, in 1/seconds.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_leaky(&self) -> bool {
        self.alpha > 0.0
    }

    /// Amplitude of a constant that fills one threshold in `interval` seconds.
    pub fn amplitude_for_interval(&self, interval: f64) -> f64 {
        self.theta / kernel_area(self.alpha, interval)
    }

    /// Interval a constant `value > 0` needs to fill one threshold, or `None`
    /// when the leak keeps it below the threshold forever.
    pub fn interval_for_amplitude(&self, value: f64) -> Option<f64> {
        if value <= 0.0 {
            return None;
        }
        inverse_kernel_area(self.alpha, self.theta / value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn from_sign(value: f64) -> Polarity {
        if value < 0.0 {
            Polarity::Negative
        } else {
            Polarity::Positive
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        }
    }

    pub fn flip(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseEvent {
    pub time: f64,
    pub polarity: Polarity,
}

impl PulseEvent {
    pub fn new(time: f64, polarity: Polarity) -> Self {
        Self { time, polarity }
    }
}

/// Ordered sequence of signed pulses produced under one set of [`IfcParams`].
///
/// `origin` is the time of the virtual zeroth pulse: the first inter-pulse
/// interval is measured from it.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrain {
    params: IfcParams,
    origin: f64,
    events: Vec<PulseEvent>,
}

impl PulseTrain {
    pub fn new(params: IfcParams, origin: f64, events: Vec<PulseEvent>) -> Result<Self> {
        if !origin.is_finite() {
            return Err(PulseError::Precondition(format!("origin must be finite, got {origin}")));
        }
        let mut prev = origin;
        for (i, e) in events.iter().enumerate() {
            if !e.time.is_finite() || e.time <= prev {
                return Err(PulseError::Precondition(format!(
                    "event {i} at {} does not follow {prev}",
                    e.time
                )));
            }
            prev = e.time;
        }
        Ok(Self {
            params,
            origin,
            events,
        })
    }

    pub fn empty(params: IfcParams, origin: f64) -> Self {
        Self {
            params,
            origin,
            events: Vec::new(),
        }
    }

    pub(crate) fn from_sorted(params: IfcParams, origin: f64, events: Vec<PulseEvent>) -> Self {
        debug_assert!(events.windows(2).all(|w| w[0].time < w[1].time));
        debug_assert!(events.first().is_none_or(|e| e.time > origin));
        Self {
            params,
            origin,
            events,
        }
    }

    pub fn params(&self) -> IfcParams {
        self.params
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn events(&self) -> &[PulseEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(|e| e.time)
    }

    /// End of the support: the last pulse, or the origin for an empty train.
    pub fn end(&self) -> f64 {
        self.events.last().map_or(self.origin, |e| e.time)
    }

    /// Start time of pulse interval `k` (`k = 0` starts at the origin).
    pub(crate) fn interval_start(&self, k: usize) -> f64 {
        if k == 0 {
            self.origin
        } else {
            self.events[k - 1].time
        }
    }

    /// Sum of polarities.
    pub fn net_count(&self) -> i64 {
        self.events
            .iter()
            .map(|e| match e.polarity {
                Polarity::Positive => 1,
                Polarity::Negative => -1,
            })
            .sum()
    }

    /// Same timings with every polarity flipped.
    pub fn negate(&self) -> PulseTrain {
        PulseTrain {
            params: self.params,
            origin: self.origin,
            events: self
                .events
                .iter()
                .map(|e| PulseEvent::new(e.time, e.polarity.flip()))
                .collect(),
        }
    }
}

/// Free-function form of [`PulseTrain::negate`].
pub fn negate(train: &PulseTrain) -> PulseTrain {
    train.negate()
}

/// Uniformly sampled real waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    start_time: f64,
    sample_interval: f64,
    samples: Vec<f64>,
}

impl Signal {
    pub fn new(start_time: f64, sample_interval: f64, samples: Vec<f64>) -> Result<Self> {
        if !(sample_interval.is_finite() && sample_interval > 0.0) {
            return Err(PulseError::Precondition(format!(
                "sample interval must be > 0, got {sample_interval}"
            )));
        }
        if samples.is_empty() {
            return Err(PulseError::Precondition("signal has no samples".into()));
        }
        if !start_time.is_finite() || samples.iter().any(|s| !s.is_finite()) {
            return Err(PulseError::Precondition("signal contains non-finite values".into()));
        }
        Ok(Self {
            start_time,
            sample_interval,
            samples,
        })
    }

    /// Samples `f` at `start + i dt` for `i in 0..n`.
    pub fn from_fn(start_time: f64, sample_interval: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..n)
            .map(|i| f(start_time + i as f64 * sample_interval))
            .collect();
        Self::new(start_time, sample_interval, samples)
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn sample_interval(&self) -> f64 {
        self.sample_interval
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start_time + i as f64 * self.sample_interval
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.samples.len() - 1)
    }

    pub fn duration(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.sample_interval
    }

    /// Piecewise-linear interpolation, held constant outside the sampled span.
    pub fn value_at(&self, t: f64) -> f64 {
        let u = (t - self.start_time) / self.sample_interval;
        if u <= 0.0 {
            return self.samples[0];
        }
        let last = self.samples.len() - 1;
        if u >= last as f64 {
            return self.samples[last];
        }
        let i = u.floor() as usize;
        let i = i.min(last - 1);
        let frac = u - i as f64;
        self.samples[i] + (self.samples[i + 1] - self.samples[i]) * frac
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Signal {
        Signal {
            start_time: self.start_time,
            sample_interval: self.sample_interval,
            samples: self.samples.iter().map(|&s| f(s)).collect(),
        }
    }

    /// Elementwise combination of two signals on the same grid.
    pub fn zip_with(&self, other: &Signal, f: impl Fn(f64, f64) -> f64) -> Result<Signal> {
        if self.samples.len() != other.samples.len()
            || self.start_time != other.start_time
            || self.sample_interval != other.sample_interval
        {
            return Err(PulseError::Precondition("signals are not on the same grid".into()));
        }
        Ok(Signal {
            start_time: self.start_time,
            sample_interval: self.sample_interval,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

/// Periodic positive train encoding the constant 1 over `(t_start, t_end]`.
///
/// The period solves `theta = G(period)`, i.e. `-ln(1 - theta alpha) / alpha`,
/// and equals `theta` at zero leak.
pub fn reference_train(params: IfcParams, t_start: f64, t_end: f64) -> Result<PulseTrain> {
    if !(t_end > t_start) {
        return Err(PulseError::Precondition(format!(
            "reference span ({t_start}, {t_end}] is empty"
        )));
    }
    let period = reference_period(params)?;
    let count = ((t_end - t_start) / period + 1e-9).floor() as usize;
    let events = (1..=count)
        .map(|k| PulseEvent::new(t_start + k as f64 * period, Polarity::Positive))
        .collect();
    Ok(PulseTrain::from_sorted(params, t_start, events))
}

/// Inter-pulse interval of the reference train.
pub fn reference_period(params: IfcParams) -> Result<f64> {
    params
        .interval_for_amplitude(1.0)
        .ok_or(PulseError::LeakCeiling {
            theta: params.theta(),
            alpha: params.alpha(),
            value: 1.0,
        })
}

/// One constant piece of a decoded pulse train.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeStep {
    pub start: f64,
    pub end: f64,
    pub amplitude: f64,
}

/// Decodes every inter-pulse interval into the constant amplitude that would
/// have produced it, signed by the polarity of the closing pulse.
pub fn instantaneous_amplitude(train: &PulseTrain) -> Vec<AmplitudeStep> {
    let params = train.params();
    let mut prev = train.origin();
    train
        .events()
        .iter()
        .map(|e| {
            let step = AmplitudeStep {
                start: prev,
                end: e.time,
                amplitude: e.polarity.sign() * params.amplitude_for_interval(e.time - prev),
            };
            prev = e.time;
            step
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(theta: f64, alpha: f64) -> IfcParams {
        IfcParams::new(theta, alpha).unwrap()
    }

    #[test]
    fn params_validate() {
        assert!(IfcParams::new(0.0, 0.0).is_err());
        assert!(IfcParams::new(-1.0, 0.0).is_err());
        assert!(IfcParams::new(0.1, -0.5).is_err());
        assert!(IfcParams::new(0.1, f64::NAN).is_err());
        assert!(IfcParams::new(0.1, 0.0).is_ok());
    }

    #[test]
    fn train_rejects_unordered_events() {
        let ev = |t| PulseEvent::new(t, Polarity::Positive);
        assert!(PulseTrain::new(p(0.1, 0.0), 0.0, vec![ev(0.2), ev(0.1)]).is_err());
        assert!(PulseTrain::new(p(0.1, 0.0), 0.0, vec![ev(0.2), ev(0.2)]).is_err());
        assert!(PulseTrain::new(p(0.1, 0.0), 0.5, vec![ev(0.5)]).is_err());
        assert!(PulseTrain::new(p(0.1, 0.0), 0.0, vec![ev(0.1), ev(0.3)]).is_ok());
    }

    #[test]
    fn reference_train_zero_leak() {
        let r = reference_train(p(0.1, 0.0), 0.0, 1.0).unwrap();
        assert_eq!(r.len(), 10);
        for (k, e) in r.events().iter().enumerate() {
            assert!((e.time - 0.1 * (k + 1) as f64).abs() < 1e-12);
            assert_eq!(e.polarity, Polarity::Positive);
        }
    }

    #[test]
    fn reference_train_leaky_spacing() {
        let r = reference_train(p(0.1, 1.0), 0.0, 1.0).unwrap();
        let want = -(0.9f64).ln();
        assert!((r.events()[0].time - want).abs() < 1e-12);
        let gaps: Vec<f64> = r.events().windows(2).map(|w| w[1].time - w[0].time).collect();
        let max = gaps.iter().cloned().fold(f64::MIN, f64::max);
        let min = gaps.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max - min < 1e-12);
        assert!((gaps[0] - want).abs() < 1e-12);
    }

    #[test]
    fn reference_train_leak_ceiling() {
        assert!(matches!(
            reference_train(p(1.0, 1.0), 0.0, 1.0),
            Err(PulseError::LeakCeiling { .. })
        ));
        assert!(reference_train(p(0.1, 0.0), 1.0, 1.0).is_err());
    }

    #[test]
    fn instantaneous_amplitude_examples() {
        let ev = |t, pol| PulseEvent::new(t, pol);
        let t = PulseTrain::new(p(0.01, 0.0), 0.0, vec![ev(0.01, Polarity::Positive)]).unwrap();
        assert!((instantaneous_amplitude(&t)[0].amplitude - 1.0).abs() < 1e-12);

        let dt = -(0.9f64).ln();
        let t = PulseTrain::new(p(0.1, 1.0), 0.0, vec![ev(dt, Polarity::Positive)]).unwrap();
        assert!((instantaneous_amplitude(&t)[0].amplitude - 1.0).abs() < 1e-12);

        let t = PulseTrain::new(p(0.01, 0.0), 0.0, vec![ev(0.02, Polarity::Negative)]).unwrap();
        assert!((instantaneous_amplitude(&t)[0].amplitude + 0.5).abs() < 1e-12);
    }

    #[test]
    fn negate_examples() {
        let empty = PulseTrain::empty(p(0.1, 0.0), 0.0);
        assert_eq!(negate(&empty), empty);
        let one = PulseTrain::new(p(0.1, 0.0), 0.0, vec![PulseEvent::new(1.0, Polarity::Positive)]).unwrap();
        assert_eq!(negate(&one).events()[0].polarity, Polarity::Negative);
        assert_eq!(negate(&negate(&one)), one);
    }

    #[test]
    fn signal_interpolates_linearly() {
        let s = Signal::new(1.0, 0.5, vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(s.value_at(1.25), 0.5);
        assert_eq!(s.value_at(1.75), 2.0);
        assert_eq!(s.value_at(0.0), 0.0);
        assert_eq!(s.value_at(9.0), 3.0);
        assert_eq!(s.end_time(), 2.0);
        assert!(Signal::new(0.0, 0.0, vec![1.0]).is_err());
        assert!(Signal::new(0.0, 0.1, vec![]).is_err());
    }
}
