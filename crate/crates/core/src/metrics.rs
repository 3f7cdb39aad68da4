//! Accuracy and sparsity measures on decoded amplitudes.

use std::fmt::{self, Write as _};

use crate::error::{PulseError, Result};
use crate::train::PulseTrain;

/// Default comparison grid, seconds.
pub const DEFAULT_GRID: f64 = 1e-3;

/// Step-function samples of a train's instantaneous amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSeries {
    pub values: Vec<f64>,
    /// Set where the time fell outside `(origin, last pulse]`; the value is 0.
    pub outside: Vec<bool>,
}

impl AmplitudeSeries {
    pub fn any_outside(&self) -> bool {
        self.outside.iter().any(|&o| o)
    }
}

/// Signed amplitude of the interval containing each time. Intervals are
/// closed on the right: a time equal to a pulse takes the value of the
/// interval that pulse ends.
pub fn amplitude_series(train: &PulseTrain, times: &[f64]) -> AmplitudeSeries {
    let ev = train.events();
    let params = train.params();
    let mut values = Vec::with_capacity(times.len());
    let mut outside = Vec::with_capacity(times.len());
    for &t in times {
        let k = ev.partition_point(|e| e.time < t);
        if k == ev.len() || t <= train.origin() {
            values.push(0.0);
            outside.push(true);
            continue;
        }
        let start = if k == 0 { train.origin() } else { ev[k - 1].time };
        values.push(ev[k].polarity.sign() * params.amplitude_for_interval(ev[k].time - start));
        outside.push(false);
    }
    AmplitudeSeries { values, outside }
}

/// Peak signal to noise ratio in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Finite(f64),
    /// The sequences are identical.
    Perfect,
}

impl Psnr {
    pub fn finite(self) -> Option<f64> {
        match self {
            Psnr::Finite(v) => Some(v),
            Psnr::Perfect => None,
        }
    }

    /// Finite value, or `+inf` for a perfect match.
    pub fn db(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v:.6}"),
            Psnr::Perfect => f.write_str("perfect"),
        }
    }
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(PulseError::Precondition(format!(
            "need equal lengths >= 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// `-10 log10( Σ(ẑ - z)² / (N (max ẑ - min ẑ)²) )`.
pub fn psnr(z_hat: &[f64], z: &[f64]) -> Result<Psnr> {
    check_pair(z_hat, z)?;
    let sse: f64 = z_hat.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
    if sse == 0.0 {
        return Ok(Psnr::Perfect);
    }
    let (lo, hi) = z_hat
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if range == 0.0 {
        return Err(PulseError::Degenerate("estimate has zero range".into()));
    }
    let n = z_hat.len() as f64;
    Ok(Psnr::Finite(-10.0 * (sse / (n * range * range)).log10()))
}

/// Sample Pearson correlation.
pub fn corrcoef(z_hat: &[f64], z: &[f64]) -> Result<f64> {
    check_pair(z_hat, z)?;
    let n = z.len() as f64;
    let ma = z_hat.iter().sum::<f64>() / n;
    let mb = z.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (a, b) in z_hat.iter().zip(z) {
        let (da, db) = (a - ma, b - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(PulseError::Degenerate("correlation of a constant sequence".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    A,
    B,
    C,
    D,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::A, Region::B, Region::C, Region::D];

    pub fn name(self) -> &'static str {
        match self {
            Region::A => "A",
            Region::B => "B",
            Region::C => "C",
            Region::D => "D",
        }
    }
}

/// Quartile labels of `|z|`, A lowest. An element equal to a quartile edge
/// goes to the lower region.
pub fn region_partition(z: &[f64]) -> Vec<Region> {
    if z.is_empty() {
        return Vec::new();
    }
    let mut mags: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(f64::total_cmp);
    let n = mags.len();
    // element rank n/4, n/2, 3n/4 (rounded up) closes each quartile
    let edge = |q: usize| mags[((q * n).div_ceil(4)).saturating_sub(1)];
    let (e1, e2, e3) = (edge(1), edge(2), edge(3));
    z.iter()
        .map(|v| {
            let m = v.abs();
            if m <= e1 {
                Region::A
            } else if m <= e2 {
                Region::B
            } else if m <= e3 {
                Region::C
            } else {
                Region::D
            }
        })
        .collect()
}

/// Events in `[start, end)` per second.
pub fn pulse_rate(train: &PulseTrain, start: f64, end: f64) -> Result<f64> {
    if !(end > start) {
        return Err(PulseError::Precondition(format!("empty window ({start}, {end})")));
    }
    let count = train.times().filter(|&t| t >= start && t < end).count();
    Ok(count as f64 / (end - start))
}

/// Measures of one region. `None` marks a measure that was undefined on the
/// region (zero-range estimate, constant sequence, or empty region).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionStats {
    pub samples: usize,
    pub psnr: Option<Psnr>,
    pub r: Option<f64>,
    pub pulse_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionReport {
    pub window: (f64, f64),
    pub grid: f64,
    pub regions: [RegionStats; 4],
    /// Over the whole window.
    pub psnr_all: Option<Psnr>,
    pub r_all: Option<f64>,
    pub rate_all: f64,
}

/// Mean and sample standard deviation (`n - 1`); the deviation is `None`
/// below two values.
pub fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (None, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (Some(mean), Some(var.sqrt()))
}

impl RegionReport {
    pub fn region(&self, r: Region) -> &RegionStats {
        &self.regions[r as usize]
    }

    /// Finite per-region PSNR values; perfect and undefined regions are left out.
    pub fn finite_psnrs(&self) -> Vec<f64> {
        self.regions.iter().filter_map(|s| s.psnr.and_then(Psnr::finite)).collect()
    }

    pub fn psnr_summary(&self) -> (Option<f64>, Option<f64>) {
        mean_sd(&self.finite_psnrs())
    }

    pub fn r_summary(&self) -> (Option<f64>, Option<f64>) {
        let v: Vec<f64> = self.regions.iter().filter_map(|s| s.r).collect();
        mean_sd(&v)
    }

    pub fn rate_summary(&self) -> (Option<f64>, Option<f64>) {
        let v: Vec<f64> = self.regions.iter().filter(|s| s.samples > 0).map(|s| s.pulse_rate).collect();
        mean_sd(&v)
    }

    /// Flat `key=value` lines with fixed field names.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "window_start={}", self.window.0);
        let _ = writeln!(out, "window_end={}", self.window.1);
        let _ = writeln!(out, "grid={}", self.grid);
        for r in Region::ALL {
            let s = self.region(r);
            let n = r.name();
            let _ = writeln!(out, "samples_{n}={}", s.samples);
            let _ = writeln!(out, "psnr_{n}={}", fmt_psnr(s.psnr));
            let _ = writeln!(out, "r_{n}={}", fmt_opt(s.r));
            let _ = writeln!(out, "pulse_rate_{n}={:.6}", s.pulse_rate);
        }
        let (mp, sp) = self.psnr_summary();
        let (mr, sr) = self.r_summary();
        let (mq, sq) = self.rate_summary();
        let _ = writeln!(out, "mean_psnr={}", fmt_opt(mp));
        let _ = writeln!(out, "sd_psnr={}", fmt_opt(sp));
        let _ = writeln!(out, "mean_r={}", fmt_opt(mr));
        let _ = writeln!(out, "sd_r={}", fmt_opt(sr));
        let _ = writeln!(out, "mean_rate={}", fmt_opt(mq));
        let _ = writeln!(out, "sd_rate={}", fmt_opt(sq));
        let _ = writeln!(out, "psnr_all={}", fmt_psnr(self.psnr_all));
        let _ = writeln!(out, "r_all={}", fmt_opt(self.r_all));
        let _ = writeln!(out, "rate_all={:.6}", self.rate_all);
        let excluded: Vec<&str> = Region::ALL
            .iter()
            .filter(|&&r| self.region(r).psnr.and_then(Psnr::finite).is_none())
            .map(|r| r.name())
            .collect();
        let _ = writeln!(out, "psnr_excluded={}", if excluded.is_empty() { "none".to_string() } else { excluded.join(",") });
        out
    }
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "undefined".into())
}

fn fmt_psnr(v: Option<Psnr>) -> String {
    v.map(|p| p.to_string()).unwrap_or_else(|| "undefined".into())
}

/// Cell-centre sample times covering `[start, end)` at `grid` spacing.
pub fn grid_times(start: f64, end: f64, grid: f64) -> Vec<f64> {
    let n = ((end - start) / grid + 1e-9).floor().max(0.0) as usize;
    (0..n).map(|i| start + (i as f64 + 0.5) * grid).collect()
}

/// Overlap of the two supports `(origin, last pulse]`.
pub fn common_window(a: &PulseTrain, b: &PulseTrain) -> Result<(f64, f64)> {
    let start = a.origin().max(b.origin());
    let end = a.end().min(b.end());
    if !(end > start) {
        return Err(PulseError::Precondition("train supports do not overlap".into()));
    }
    Ok((start, end))
}

/// Compares `hat` against `reference` on a grid over `window`, in quartile
/// regions of the reference amplitude.
pub fn region_report(hat: &PulseTrain, reference: &PulseTrain, window: (f64, f64), grid: f64) -> Result<RegionReport> {
    if !(grid > 0.0 && grid.is_finite()) {
        return Err(PulseError::Precondition(format!("grid must be > 0, got {grid}")));
    }
    let (start, end) = window;
    let times = grid_times(start, end, grid);
    if times.len() < 2 {
        return Err(PulseError::Precondition("window shorter than two grid cells".into()));
    }
    let zh = amplitude_series(hat, &times).values;
    let zr = amplitude_series(reference, &times).values;
    let labels = region_partition(&zr);

    // events per grid cell of the estimate; cells are closed on the right
    // like the amplitude intervals
    let mut cell_events = vec![0usize; times.len()];
    for t in hat.times() {
        let i = ((t - start) / grid - 1e-9).ceil() - 1.0;
        if i >= 0.0 && (i as usize) < times.len() {
            cell_events[i as usize] += 1;
        }
    }

    let stats = Region::ALL.map(|region| {
        let idx: Vec<usize> = (0..times.len()).filter(|&i| labels[i] == region).collect();
        let a: Vec<f64> = idx.iter().map(|&i| zh[i]).collect();
        let b: Vec<f64> = idx.iter().map(|&i| zr[i]).collect();
        let events: usize = idx.iter().map(|&i| cell_events[i]).sum();
        RegionStats {
            samples: idx.len(),
            psnr: psnr(&a, &b).ok(),
            r: corrcoef(&a, &b).ok(),
            pulse_rate: if idx.is_empty() { 0.0 } else { events as f64 / (idx.len() as f64 * grid) },
        }
    });
    let total_events: usize = cell_events.iter().sum();
    Ok(RegionReport {
        window,
        grid,
        regions: stats,
        psnr_all: psnr(&zh, &zr).ok(),
        r_all: corrcoef(&zh, &zr).ok(),
        rate_all: total_events as f64 / (times.len() as f64 * grid),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::{reference_train, IfcParams, Polarity, PulseEvent};
    use proptest::prelude::*;

    fn p() -> IfcParams {
        IfcParams::new(0.1, 0.0).unwrap()
    }

    #[test]
    fn psnr_examples() {
        assert_eq!(psnr(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), Psnr::Perfect);
        assert!(psnr(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        let v = psnr(&[0.0, 1.0], &[0.0, 0.0]).unwrap().finite().unwrap();
        assert!((v - 3.010299956639812).abs() < 1e-12);
        assert!(psnr(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn corrcoef_examples() {
        let z = [1.0, 2.0, 3.0];
        assert!((corrcoef(&z, &z).unwrap() - 1.0).abs() < 1e-15);
        assert!((corrcoef(&[-1.0, -2.0, -3.0], &z).unwrap() + 1.0).abs() < 1e-15);
        // hand evaluation: 3 / sqrt(2 * 14/3)
        let want = 3.0 / (2.0f64 * 14.0 / 3.0).sqrt();
        let got = corrcoef(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.98198).abs() < 1e-5);
        assert!(corrcoef(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn partition_examples() {
        let ramp: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        let labels = region_partition(&ramp);
        for r in Region::ALL {
            assert_eq!(labels.iter().filter(|&&l| l == r).count(), 25);
        }
        assert!(region_partition(&[0.3; 10]).iter().all(|&l| l == Region::A));

        // |sin| over one period: D is where |sin| exceeds sin(3π/8)
        let n = 1000;
        let z: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64).sin()).collect();
        let edge = (3.0 * std::f64::consts::PI / 8.0).sin();
        for (v, l) in z.iter().zip(region_partition(&z)) {
            if v.abs() > edge + 0.01 {
                assert_eq!(l, Region::D);
            }
            if l == Region::D {
                assert!(v.abs() > edge - 0.01);
            }
        }
    }

    #[test]
    fn amplitude_series_conventions() {
        let train = PulseTrain::new(
            p(),
            0.0,
            vec![PulseEvent::new(0.1, Polarity::Positive), PulseEvent::new(0.3, Polarity::Negative)],
        )
        .unwrap();
        let s = amplitude_series(&train, &[0.05, 0.1, 0.2, 0.3, 0.31, 0.0]);
        for (v, want) in s.values.iter().zip([1.0, 1.0, -0.5, -0.5]) {
            assert!((v - want).abs() < 1e-12);
        }
        assert_eq!(s.values[4], 0.0);
        assert_eq!(s.outside, vec![false, false, false, false, true, true]);

        let r = reference_train(p(), 0.0, 2.0).unwrap();
        let s = amplitude_series(&r, &grid_times(0.0, 1.9, 1e-3));
        assert!(!s.any_outside());
        assert!(s.values.iter().all(|&v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn pulse_rate_examples() {
        let r = reference_train(p(), 0.0, 2.0).unwrap();
        assert!((pulse_rate(&r, 0.05, 1.05).unwrap() - 10.0).abs() < 1e-9);
        assert_eq!(pulse_rate(&r, 5.0, 6.0).unwrap(), 0.0);
        assert!(pulse_rate(&r, 1.0, 1.0).is_err());
    }

    #[test]
    fn identical_trains_report_perfect() {
        let times: Vec<f64> = (1..=200).map(|k| k as f64 * 0.01 + 0.002 * ((k as f64) * 0.7).sin()).collect();
        let train = PulseTrain::new(p(), 0.0, times.iter().map(|&t| PulseEvent::new(t, Polarity::Positive)).collect()).unwrap();
        let rep = region_report(&train, &train, common_window(&train, &train).unwrap(), 1e-3).unwrap();
        for s in &rep.regions {
            assert_eq!(s.psnr, Some(Psnr::Perfect));
            assert!((s.r.unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(rep.to_text().contains("psnr_A=perfect"));
        assert!(rep.to_text().contains("mean_psnr=undefined"));
    }

    #[test]
    fn report_aggregates_match_hand_values() {
        // 20 grid cells of 0.1 s; reference amplitudes 0.1 .. 2.0 in order
        let params = IfcParams::new(0.01, 0.0).unwrap();
        // cell i of 0.1 s holds i + 1 reference pulses; the estimate drops one
        // pulse in odd cells
        let mut ref_t = Vec::new();
        let mut hat_t = Vec::new();
        for i in 0..20usize {
            let k = i + 1;
            for j in 1..=k {
                ref_t.push(i as f64 * 0.1 + 0.1 * j as f64 / k as f64);
            }
            // estimate: one fewer pulse in odd cells beyond the first
            let kh = if i % 2 == 1 { k - 1 } else { k };
            for j in 1..=kh {
                hat_t.push(i as f64 * 0.1 + 0.1 * j as f64 / kh as f64);
            }
        }
        let mk = |ts: &[f64]| PulseTrain::new(params, 0.0, ts.iter().map(|&t| PulseEvent::new(t, Polarity::Positive)).collect()).unwrap();
        let (hat, reference) = (mk(&hat_t), mk(&ref_t));
        let rep = region_report(&hat, &reference, (0.0, 2.0), 0.1).unwrap();

        // hand values: cell amplitudes are 0.01 * count / 0.1
        let zr: Vec<f64> = (0..20).map(|i| 0.1 * (i + 1) as f64).collect();
        let zh: Vec<f64> = (0..20).map(|i| if i % 2 == 1 { 0.1 * i as f64 } else { 0.1 * (i + 1) as f64 }).collect();
        for (q, region) in Region::ALL.iter().enumerate() {
            let idx = q * 5..q * 5 + 5;
            let a = &zh[idx.clone()];
            let b = &zr[idx.clone()];
            let s = rep.region(*region);
            assert_eq!(s.samples, 5);
            let sse: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            let range = a.iter().cloned().fold(f64::MIN, f64::max) - a.iter().cloned().fold(f64::MAX, f64::min);
            let want = -10.0 * (sse / (5.0 * range * range)).log10();
            assert!((s.psnr.unwrap().finite().unwrap() - want).abs() < 1e-9, "{region:?}");
            let events: usize = idx.clone().map(|i| if i % 2 == 1 { i } else { i + 1 }).sum();
            assert!((s.pulse_rate - events as f64 / 0.5).abs() < 1e-9);
        }
        let psnrs: Vec<f64> = Region::ALL.iter().map(|&r| rep.region(r).psnr.unwrap().finite().unwrap()).collect();
        let mean = psnrs.iter().sum::<f64>() / 4.0;
        let sd = (psnrs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
        let (m, s) = rep.psnr_summary();
        assert!((m.unwrap() - mean).abs() < 1e-12);
        assert!((s.unwrap() - sd).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn psnr_shift_invariant(
            pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..50),
            c in -100.0f64..100.0,
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let a2: Vec<f64> = a.iter().map(|v| v + c).collect();
            let b2: Vec<f64> = b.iter().map(|v| v + c).collect();
            match (psnr(&a, &b), psnr(&a2, &b2)) {
                (Ok(Psnr::Finite(x)), Ok(Psnr::Finite(y))) => prop_assert!((x - y).abs() < 1e-6),
                (Ok(_), Ok(_)) | (Err(_), Err(_)) => {}
                _ => prop_assert!(false),
            }
        }

        #[test]
        fn corrcoef_affine_invariant(
            pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..50),
            scale in 0.01f64..100.0,
            shift in -100.0f64..100.0,
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let a2: Vec<f64> = a.iter().map(|v| scale * v + shift).collect();
            if let (Ok(x), Ok(y)) = (corrcoef(&a, &b), corrcoef(&a2, &b)) {
                prop_assert!((x - y).abs() < 1e-9);
                prop_assert!((-1.0..=1.0).contains(&x));
            }
        }

        #[test]
        fn partition_is_balanced(mut z in proptest::collection::vec(-1e3f64..1e3, 4..200)) {
            z.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
            z.dedup_by(|a, b| a.abs() == b.abs());
            let n = z.len() as f64;
            let labels = region_partition(&z);
            for r in Region::ALL {
                let count = labels.iter().filter(|&&l| l == r).count() as f64;
                prop_assert!((count - n / 4.0).abs() <= 1.0);
            }
        }
    }
}
