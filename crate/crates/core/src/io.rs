//! Text formats for pulse trains and signals.
//!
//! Pulse train:
//!
//! ```text
//! theta=0.01 alpha=0 origin=0
//! 0.012345678,+1
//! 0.031000000,-1
//! ```
//!
//! Signal:
//!
//! ```text
//! t0=0 dt=0.001
//! 0.5
//! 0.51
//! ```
//!
//! Event times are written with nine decimals (1 ns resolution); every other
//! number uses the shortest representation that parses back to the same
//! `f64`. Writing, reading and writing again is therefore byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{PulseError, Result};
use crate::train::{IfcParams, Polarity, PulseEvent, PulseTrain, Signal};

pub fn format_train(train: &PulseTrain) -> String {
    let p = train.params();
    let mut out = String::with_capacity(32 + train.len() * 16);
    let _ = writeln!(
        out,
        "theta={} alpha={} origin={}",
        p.theta(),
        p.alpha(),
        train.origin()
    );
    for e in train.events() {
        let sign = match e.polarity {
            Polarity::Positive => "+1",
            Polarity::Negative => "-1",
        };
        let _ = writeln!(out, "{:.9},{}", e.time, sign);
    }
    out
}

pub fn parse_train(text: &str) -> Result<PulseTrain> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| PulseError::format(1, "missing header"))?;
    let fields = parse_header(header, &["theta", "alpha", "origin"], 1)?;
    let params = IfcParams::new(fields[0], fields[1]).map_err(|e| PulseError::format(1, e.to_string()))?;
    let origin = fields[2];

    let mut events = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (t, pol) = line
            .split_once(',')
            .ok_or_else(|| PulseError::format(lineno, "expected `<time>,<+1|-1>`"))?;
        let time = parse_number(t.trim(), lineno)?;
        let polarity = match pol.trim() {
            "+1" => Polarity::Positive,
            "-1" => Polarity::Negative,
            other => return Err(PulseError::format(lineno, format!("bad polarity `{other}`"))),
        };
        events.push(PulseEvent::new(time, polarity));
    }
    PulseTrain::new(params, origin, events).map_err(|e| PulseError::format(0, e.to_string()))
}

pub fn format_signal(signal: &Signal) -> String {
    let mut out = String::with_capacity(32 + signal.len() * 12);
    let _ = writeln!(out, "t0={} dt={}", signal.start_time(), signal.sample_interval());
    for s in signal.samples() {
        let _ = writeln!(out, "{s}");
    }
    out
}

pub fn parse_signal(text: &str) -> Result<Signal> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| PulseError::format(1, "missing header"))?;
    let fields = parse_header(header, &["t0", "dt"], 1)?;
    let mut samples = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        samples.push(parse_number(line.trim(), i + 1)?);
    }
    Signal::new(fields[0], fields[1], samples).map_err(|e| PulseError::format(0, e.to_string()))
}

pub fn read_train(path: impl AsRef<Path>) -> Result<PulseTrain> {
    parse_train(&fs::read_to_string(path)?)
}

pub fn write_train(path: impl AsRef<Path>, train: &PulseTrain) -> Result<()> {
    fs::write(path, format_train(train))?;
    Ok(())
}

pub fn read_signal(path: impl AsRef<Path>) -> Result<Signal> {
    parse_signal(&fs::read_to_string(path)?)
}

pub fn write_signal(path: impl AsRef<Path>, signal: &Signal) -> Result<()> {
    fs::write(path, format_signal(signal))?;
    Ok(())
}

fn parse_header(line: &str, keys: &[&str], lineno: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != keys.len() {
        return Err(PulseError::format(
            lineno,
            format!("expected header fields {}", keys.join(" ")),
        ));
    }
    parts
        .iter()
        .zip(keys)
        .map(|(part, key)| {
            let value = part
                .strip_prefix(key)
                .and_then(|rest| rest.strip_prefix('='))
                .ok_or_else(|| PulseError::format(lineno, format!("expected `{key}=<decimal>`")))?;
            parse_number(value, lineno)
        })
        .collect()
}

fn parse_number(s: &str, lineno: usize) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| PulseError::format(lineno, format!("not a number: `{s}`")))?;
    if !v.is_finite() {
        return Err(PulseError::format(lineno, format!("non-finite value `{s}`")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn train_text_layout() {
        let p = IfcParams::new(0.01, 0.0).unwrap();
        let t = PulseTrain::new(
            p,
            0.0,
            vec![
                PulseEvent::new(0.1, Polarity::Positive),
                PulseEvent::new(0.25, Polarity::Negative),
            ],
        )
        .unwrap();
        assert_eq!(
            format_train(&t),
            "theta=0.01 alpha=0 origin=0\n0.100000000,+1\n0.250000000,-1\n"
        );
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_train("").is_err());
        assert!(parse_train("theta=0.1 alpha=0\n").is_err());
        assert!(parse_train("theta=0.1 alpha=0 origin=0\n0.1,+2\n").is_err());
        assert!(parse_train("theta=0.1 alpha=0 origin=0\n0.2,+1\n0.1,+1\n").is_err());
        assert!(parse_train("theta=0 alpha=0 origin=0\n").is_err());
        assert!(parse_signal("t0=0 dt=0.1\nabc\n").is_err());
        assert!(parse_signal("t0=0 dt=0.1\n").is_err());
        for e in [parse_train("x").unwrap_err(), parse_signal("t0=0").unwrap_err()] {
            assert_eq!(e.class(), crate::error::ErrorClass::Format);
        }
    }

    proptest! {
        #[test]
        fn train_write_read_write_is_stable(
            origin in -5.0f64..5.0,
            gaps in proptest::collection::vec((1e-6f64..0.5, any::<bool>()), 0..40),
            theta in 1e-4f64..1.0,
            alpha in 0.0f64..20.0,
        ) {
            let p = IfcParams::new(theta, alpha).unwrap();
            let mut t = origin;
            let events: Vec<_> = gaps.iter().map(|&(g, pos)| {
                t += g;
                PulseEvent::new(t, if pos { Polarity::Positive } else { Polarity::Negative })
            }).collect();
            let train = PulseTrain::new(p, origin, events).unwrap();
            let first = format_train(&train);
            let back = parse_train(&first).unwrap();
            prop_assert_eq!(back.params(), train.params());
            prop_assert_eq!(back.origin().to_bits(), train.origin().to_bits());
            let second = format_train(&back);
            prop_assert_eq!(&first, &second);
            prop_assert_eq!(parse_train(&second).unwrap(), back);
        }

        #[test]
        fn signal_round_trip_is_bit_exact(
            t0 in -10.0f64..10.0,
            dt in 1e-6f64..1.0,
            samples in proptest::collection::vec(-1e3f64..1e3, 1..60),
        ) {
            let s = Signal::new(t0, dt, samples).unwrap();
            let text = format_signal(&s);
            let back = parse_signal(&text).unwrap();
            prop_assert_eq!(back.start_time().to_bits(), s.start_time().to_bits());
            prop_assert_eq!(back.sample_interval().to_bits(), s.sample_interval().to_bits());
            for (a, b) in back.samples().iter().zip(s.samples()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(format_signal(&back), text);
        }
    }
}
