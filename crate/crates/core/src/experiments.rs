//! Synthetic sweeps, the digital-processing comparison and the ECG
//! baseline-wander demo.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arithmetic::{self, reference_for, ArithOp, SchedulePolicy, Variant};
use crate::convolution::{convolution_reference, convolve_with};
use crate::encoder::encode;
use crate::error::{PulseError, Result};
use crate::io;
use crate::metrics::{self, amplitude_series, common_window, fmt_opt, grid_times, region_report, RegionReport};
use crate::reconstruction::{reconstruct, BasisKind, BasisSpec};
use crate::train::{IfcParams, PulseTrain, Signal};

#[derive(Debug, Clone, PartialEq)]
pub enum SignalSpec {
    /// `amplitude * sin(2π frequency t + phase)`; a `None` phase is drawn
    /// from the config seed.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        phase: Option<f64>,
    },
    /// Signal file covering `[0, duration]`.
    File(PathBuf),
}

impl SignalSpec {
    pub fn sinusoid(amplitude: f64, frequency: f64, phase: f64) -> Self {
        SignalSpec::Sinusoid {
            amplitude,
            frequency,
            phase: Some(phase),
        }
    }

    fn resolve(&self, rng: &mut ChaCha8Rng) -> ResolvedSignal {
        match self {
            SignalSpec::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => {
                let drawn: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                ResolvedSignal::Sinusoid {
                    amplitude: *amplitude,
                    frequency: *frequency,
                    phase: phase.unwrap_or(drawn),
                }
            }
            SignalSpec::File(p) => ResolvedSignal::File(p.clone()),
        }
    }
}

impl fmt::Display for SignalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalSpec::Sinusoid {
                amplitude,
                frequency,
                phase: Some(p),
            } => write!(f, "sin:{amplitude}:{frequency}:{p}"),
            SignalSpec::Sinusoid {
                amplitude, frequency, ..
            } => write!(f, "sin:{amplitude}:{frequency}:random"),
            SignalSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Accepts `sin:AMPLITUDE:FREQUENCY[:PHASE|random]` or `file:PATH`.
impl FromStr for SignalSpec {
    type Err = PulseError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || PulseError::Precondition(format!("bad signal descriptor '{s}'"));
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(SignalSpec::File(PathBuf::from(path)));
        }
        let rest = s.strip_prefix("sin:").ok_or_else(bad)?;
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() < 2 || parts.len() > 3 {
            return Err(bad());
        }
        let num = |p: &str| p.parse::<f64>().map_err(|_| bad());
        let phase = match parts.get(2) {
            None => Some(0.0),
            Some(&"random") => None,
            Some(p) => Some(num(p)?),
        };
        Ok(SignalSpec::Sinusoid {
            amplitude: num(parts[0])?,
            frequency: num(parts[1])?,
            phase,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ResolvedSignal {
    Sinusoid { amplitude: f64, frequency: f64, phase: f64 },
    File(PathBuf),
}

impl ResolvedSignal {
    fn describe(&self) -> String {
        match self {
            ResolvedSignal::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => format!("sin:{amplitude}:{frequency}:{phase}"),
            ResolvedSignal::File(p) => format!("file:{}", p.display()),
        }
    }

    /// Samples on `[0, duration]` at `dt`.
    fn sample(&self, duration: f64, dt: f64) -> Result<Signal> {
        let n = (duration / dt).round() as usize + 1;
        match self {
            ResolvedSignal::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => Signal::from_fn(0.0, dt, n, |t| {
                amplitude * (std::f64::consts::TAU * frequency * t + phase).sin()
            }),
            ResolvedSignal::File(p) => {
                let s = io::read_signal(p).map_err(|e| e.context(format!("reading {}", p.display())))?;
                if s.start_time() > 1e-12 || s.end_time() < duration - 1e-9 {
                    return Err(PulseError::Precondition(format!(
                        "{} covers [{}, {}], need [0, {duration}]",
                        p.display(),
                        s.start_time(),
                        s.end_time()
                    )));
                }
                Signal::from_fn(0.0, dt, n, |t| s.value_at(t))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operation {
    Add,
    Subtract,
    Multiply,
    Convolve,
}

impl Operation {
    pub fn name(self) -> &'static str {
        match self {
            Operation::Add => "add",
            Operation::Subtract => "sub",
            Operation::Multiply => "mul",
            Operation::Convolve => "conv",
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Operation {
    type Err = PulseError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "add" => Ok(Operation::Add),
            "sub" => Ok(Operation::Subtract),
            "mul" => Ok(Operation::Multiply),
            "conv" => Ok(Operation::Convolve),
            _ => Err(PulseError::Precondition(format!("unknown operation '{s}'"))),
        }
    }
}

pub fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Exact => "exact",
        Variant::Approx => "approx",
    }
}

pub fn parse_variant(s: &str) -> Result<Variant> {
    match s {
        "exact" => Ok(Variant::Exact),
        "approx" => Ok(Variant::Approx),
        _ => Err(PulseError::Precondition(format!("unknown variant '{s}'"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub thetas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub operations: Vec<Operation>,
    pub variants: Vec<Variant>,
    pub x: SignalSpec,
    pub y: SignalSpec,
    pub duration: f64,
    /// Sampling interval of the operand and oracle signals.
    pub sample_interval: f64,
    /// Encoder integration step.
    pub step: f64,
    /// Metric grid, also the grid of the numeric convolution oracle and of
    /// reconstructions.
    pub grid: f64,
    pub seed: u64,
    /// Highest frequency the comparison basis has to represent, in Hz.
    pub bandwidth: f64,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            thetas: vec![0.01],
            alphas: vec![0.0],
            operations: vec![Operation::Add, Operation::Multiply, Operation::Convolve],
            variants: vec![Variant::Exact, Variant::Approx],
            x: SignalSpec::sinusoid(1.0, 1.0, 0.0),
            y: SignalSpec::sinusoid(1.0, 1.0, std::f64::consts::FRAC_PI_2),
            duration: 5.0,
            sample_interval: 1e-4,
            step: 1e-5,
            grid: 1e-3,
            seed: 0,
            bandwidth: 3.0,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PulseError::Precondition(m));
        if self.thetas.is_empty() || self.thetas.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return bad(format!("theta values must be > 0: {:?}", self.thetas));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return bad(format!("alpha values must be >= 0: {:?}", self.alphas));
        }
        if self.operations.is_empty() || self.variants.is_empty() {
            return bad("no operations or variants selected".into());
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration must be > 0, got {}", self.duration));
        }
        for (name, v) in [
            ("sample interval", self.sample_interval),
            ("step", self.step),
            ("grid", self.grid),
            ("bandwidth", self.bandwidth),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        if self.step > self.sample_interval * (1.0 + 1e-12) {
            return bad(format!("step {} exceeds sample interval {}", self.step, self.sample_interval));
        }
        Ok(())
    }

    fn operands(&self) -> (ResolvedSignal, ResolvedSignal) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let x = self.x.resolve(&mut rng);
        let y = self.y.resolve(&mut rng);
        (x, y)
    }

    fn points(&self) -> Vec<(f64, f64, Operation, Variant)> {
        let mut out = Vec::new();
        for &theta in &self.thetas {
            for &alpha in &self.alphas {
                for &op in &self.operations {
                    for &v in &self.variants {
                        out.push((theta, alpha, op, v));
                    }
                }
            }
        }
        out
    }
}

/// Operand samples shared by every sweep point.
struct Operands {
    x_desc: String,
    y_desc: String,
    x: Signal,
    y: Signal,
}

impl Operands {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let (x, y) = cfg.operands();
        Ok(Self {
            x_desc: x.describe(),
            y_desc: y.describe(),
            x: x.sample(cfg.duration, cfg.sample_interval)?,
            y: y.sample(cfg.duration, cfg.sample_interval)?,
        })
    }

    /// Analytically combined signal, sampled for encoding.
    fn combined(&self, op: Operation, cfg: &ExperimentConfig) -> Result<Signal> {
        match op {
            Operation::Add => self.x.zip_with(&self.y, |a, b| a + b),
            Operation::Subtract => self.x.zip_with(&self.y, |a, b| a - b),
            Operation::Multiply => self.x.zip_with(&self.y, |a, b| a * b),
            Operation::Convolve => {
                let n = (cfg.duration / cfg.grid).round() as usize + 1;
                let xs: Vec<f64> = (0..n).map(|i| self.x.value_at(i as f64 * cfg.grid)).collect();
                let ys: Vec<f64> = (0..n).map(|i| self.y.value_at(i as f64 * cfg.grid)).collect();
                Signal::new(0.0, cfg.grid, linear_convolution(&xs, &ys, cfg.grid))
            }
        }
    }
}

/// Trapezoid-rule samples of `∫ x(τ) y(λ - τ) dτ` at `λ = k h` for two
/// sequences sampled at spacing `h` from zero.
pub fn linear_convolution(x: &[f64], y: &[f64], h: f64) -> Vec<f64> {
    let (n, m) = (x.len(), y.len());
    if n == 0 || m == 0 {
        return Vec::new();
    }
    (0..n + m - 1)
        .map(|k| {
            let lo = k.saturating_sub(m - 1);
            let hi = k.min(n - 1);
            if lo == hi {
                return 0.0;
            }
            let mut s: f64 = (lo..=hi).map(|i| x[i] * y[k - i]).sum();
            s -= 0.5 * (x[lo] * y[k - lo] + x[hi] * y[k - hi]);
            s * h
        })
        .collect()
}

/// Runs one pulse-domain operator with the reference it needs.
pub fn run_operator(op: Operation, variant: Variant, x: &PulseTrain, y: &PulseTrain) -> Result<(PulseTrain, usize)> {
    let policy = SchedulePolicy::default();
    match op {
        Operation::Add => {
            let out = arithmetic::apply(ArithOp::Add, variant, x, y, None, policy)?;
            Ok((out.train, out.clamped))
        }
        Operation::Subtract => {
            let out = arithmetic::apply(ArithOp::Add, variant, x, &y.negate(), None, policy)?;
            Ok((out.train, out.clamped))
        }
        Operation::Multiply => {
            let r = reference_for(x, y)?;
            let out = arithmetic::apply(ArithOp::Multiply, variant, x, y, Some(&r), policy)?;
            Ok((out.train, out.clamped))
        }
        Operation::Convolve => {
            let r = convolution_reference(x, y)?;
            let out = convolve_with(variant, x, y, &r)?;
            Ok((out.train, out.clamped))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub theta: f64,
    pub alpha: f64,
    pub op: Operation,
    pub variant: Variant,
    pub pulses: usize,
    pub oracle_pulses: usize,
    pub clamped: usize,
    pub report: RegionReport,
    pub output: PulseTrain,
    pub oracle: PulseTrain,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub x: String,
    pub y: String,
    pub duration: f64,
    pub sample_interval: f64,
    pub step: f64,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepSummary {
    pub fn row(&self, theta: f64, alpha: f64, op: Operation, variant: Variant) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.theta == theta && r.alpha == alpha && r.op == op && r.variant == variant)
    }

    /// Tab-separated table with one row per sweep point.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let mut header = vec![
            "theta", "alpha", "op", "variant", "x", "y", "duration", "sample_interval", "step", "grid", "seed",
            "pulses", "oracle_pulses", "clamped",
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
        for m in ["psnr", "r", "rate"] {
            for r in metrics::Region::ALL {
                header.push(format!("{m}_{}", r.name()));
            }
        }
        for k in ["mean_psnr", "sd_psnr", "mean_r", "sd_r", "mean_rate", "sd_rate", "psnr_all", "r_all", "rate_all"] {
            header.push(k.into());
        }
        let _ = writeln!(out, "{}", header.join("\t"));
        for row in &self.rows {
            let rep = &row.report;
            let mut f = vec![
                row.theta.to_string(),
                row.alpha.to_string(),
                row.op.to_string(),
                variant_name(row.variant).to_string(),
                self.x.clone(),
                self.y.clone(),
                self.duration.to_string(),
                self.sample_interval.to_string(),
                self.step.to_string(),
                rep.grid.to_string(),
                self.seed.to_string(),
                row.pulses.to_string(),
                row.oracle_pulses.to_string(),
                row.clamped.to_string(),
            ];
            for r in metrics::Region::ALL {
                f.push(fmt_psnr(rep.region(r).psnr));
            }
            for r in metrics::Region::ALL {
                f.push(fmt_opt(rep.region(r).r));
            }
            for r in metrics::Region::ALL {
                f.push(format!("{:.6}", rep.region(r).pulse_rate));
            }
            let (mp, sp) = rep.psnr_summary();
            let (mr, sr) = rep.r_summary();
            let (mq, sq) = rep.rate_summary();
            for v in [mp, sp, mr, sr, mq, sq] {
                f.push(fmt_opt(v));
            }
            f.push(fmt_psnr(rep.psnr_all));
            f.push(fmt_opt(rep.r_all));
            f.push(format!("{:.6}", rep.rate_all));
            let _ = writeln!(out, "{}", f.join("\t"));
        }
        out
    }

    /// Writes `sweep.tsv` and one report per point into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("sweep.tsv"), self.to_tsv())?;
        for row in &self.rows {
            let stem = point_stem(row.theta, row.alpha, row.op, row.variant);
            let mut text = String::new();
            let _ = writeln!(text, "theta={}", row.theta);
            let _ = writeln!(text, "alpha={}", row.alpha);
            let _ = writeln!(text, "op={}", row.op);
            let _ = writeln!(text, "variant={}", variant_name(row.variant));
            let _ = writeln!(text, "x={}", self.x);
            let _ = writeln!(text, "y={}", self.y);
            let _ = writeln!(text, "duration={}", self.duration);
            let _ = writeln!(text, "sample_interval={}", self.sample_interval);
            let _ = writeln!(text, "step={}", self.step);
            let _ = writeln!(text, "seed={}", self.seed);
            let _ = writeln!(text, "pulses={}", row.pulses);
            let _ = writeln!(text, "oracle_pulses={}", row.oracle_pulses);
            let _ = writeln!(text, "clamped={}", row.clamped);
            text.push_str(&row.report.to_text());
            std::fs::write(dir.join(format!("report_{stem}.txt")), text)?;
            io::write_train(dir.join(format!("output_{stem}.txt")), &row.output)?;
            io::write_train(dir.join(format!("oracle_{stem}.txt")), &row.oracle)?;
        }
        Ok(())
    }
}

fn point_stem(theta: f64, alpha: f64, op: Operation, variant: Variant) -> String {
    format!("{op}_{}_theta{theta}_alpha{alpha}", variant_name(variant))
}

fn fmt_psnr(v: Option<metrics::Psnr>) -> String {
    v.map(|p| p.to_string()).unwrap_or_else(|| "undefined".into())
}

fn point_context(theta: f64, alpha: f64, op: Operation, variant: Variant) -> String {
    format!("{op} {} at theta={theta} alpha={alpha}", variant_name(variant))
}

/// Encodes the operands and the oracle, runs every operator in the sweep
/// and compares each output against its oracle.
pub fn run_synthetic(cfg: &ExperimentConfig) -> Result<SweepSummary> {
    cfg.validate()?;
    let operands = Operands::new(cfg)?;
    let combined: Vec<(Operation, Signal)> = cfg
        .operations
        .iter()
        .map(|&op| operands.combined(op, cfg).map(|s| (op, s)))
        .collect::<Result<_>>()?;

    let rows = cfg
        .points()
        .into_par_iter()
        .map(|(theta, alpha, op, variant)| {
            let ctx = point_context(theta, alpha, op, variant);
            let run = || -> Result<SweepRow> {
                let params = IfcParams::new(theta, alpha)?;
                let x = encode(&operands.x, params, cfg.step)?;
                let y = encode(&operands.y, params, cfg.step)?;
                let target = &combined.iter().find(|(o, _)| *o == op).expect("oracle signal").1;
                let oracle = encode(target, params, cfg.step)?;
                let (output, clamped) = run_operator(op, variant, &x, &y)?;
                let window = common_window(&output, &oracle)?;
                let report = region_report(&output, &oracle, window, cfg.grid)?;
                Ok(SweepRow {
                    theta,
                    alpha,
                    op,
                    variant,
                    pulses: output.len(),
                    oracle_pulses: oracle.len(),
                    clamped,
                    report,
                    output,
                    oracle,
                })
            };
            run().map_err(|e| e.context(ctx))
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = SweepSummary {
        x: operands.x_desc,
        y: operands.y_desc,
        duration: cfg.duration,
        sample_interval: cfg.sample_interval,
        step: cfg.step,
        seed: cfg.seed,
        rows,
    };
    if let Some(dir) = &cfg.output_dir {
        summary.write(dir)?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub theta: f64,
    pub alpha: f64,
    pub op: Operation,
    pub variant: Variant,
    pub basis_m: usize,
    pub samples: usize,
    pub psnr: Option<metrics::Psnr>,
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSummary {
    pub x: String,
    pub y: String,
    pub duration: f64,
    pub step: f64,
    pub grid: f64,
    pub bandwidth: f64,
    pub seed: u64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonSummary {
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "theta\talpha\top\tvariant\tx\ty\tduration\tstep\tgrid\tbandwidth\tseed\tbasis_m\tsamples\tpsnr\tr"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.theta,
                r.alpha,
                r.op,
                variant_name(r.variant),
                self.x,
                self.y,
                self.duration,
                self.step,
                self.grid,
                self.bandwidth,
                self.seed,
                r.basis_m,
                r.samples,
                fmt_psnr(r.psnr),
                fmt_opt(r.r)
            );
        }
        out
    }
}

/// Fourier basis size representing content up to `bandwidth` Hz on a window
/// of length `len`.
fn basis_size(bandwidth: f64, len: f64) -> usize {
    2 * (bandwidth * len).ceil() as usize + 1
}

/// Reconstructs the operand trains, combines the reconstructions on a dense
/// grid and compares that with the reconstruction of the pulse-domain
/// output.
pub fn run_comparison(cfg: &ExperimentConfig) -> Result<ComparisonSummary> {
    cfg.validate()?;
    let operands = Operands::new(cfg)?;
    let d = cfg.duration;

    let rows = cfg
        .points()
        .into_par_iter()
        .map(|(theta, alpha, op, variant)| {
            let ctx = point_context(theta, alpha, op, variant);
            let run = || -> Result<ComparisonRow> {
                let params = IfcParams::new(theta, alpha)?;
                let x = encode(&operands.x, params, cfg.step)?;
                let y = encode(&operands.y, params, cfg.step)?;
                let m = basis_size(cfg.bandwidth, d);
                let xr = reconstruct(&x, BasisSpec::new(BasisKind::Fourier, m, (0.0, d))?, cfg.grid)?.signal;
                let yr = reconstruct(&y, BasisSpec::new(BasisKind::Fourier, m, (0.0, d))?, cfg.grid)?.signal;
                let digital = match op {
                    Operation::Add => xr.zip_with(&yr, |a, b| a + b)?,
                    Operation::Subtract => xr.zip_with(&yr, |a, b| a - b)?,
                    Operation::Multiply => xr.zip_with(&yr, |a, b| a * b)?,
                    Operation::Convolve => {
                        Signal::new(0.0, cfg.grid, linear_convolution(xr.samples(), yr.samples(), cfg.grid))?
                    }
                };
                let (out, _) = run_operator(op, variant, &x, &y)?;
                let len = digital.end_time();
                let out_m = basis_size(cfg.bandwidth, len);
                let rec = reconstruct(&out, BasisSpec::new(BasisKind::Fourier, out_m, (0.0, len))?, cfg.grid)?;
                let n = rec.signal.len().min(digital.len());
                let zh = &rec.signal.samples()[..n];
                let z = &digital.samples()[..n];
                Ok(ComparisonRow {
                    theta,
                    alpha,
                    op,
                    variant,
                    basis_m: out_m,
                    samples: n,
                    psnr: metrics::psnr(zh, z).ok(),
                    r: metrics::corrcoef(zh, z).ok(),
                })
            };
            run().map_err(|e| e.context(ctx))
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = ComparisonSummary {
        x: operands.x_desc,
        y: operands.y_desc,
        duration: d,
        step: cfg.step,
        grid: cfg.grid,
        bandwidth: cfg.bandwidth,
        seed: cfg.seed,
        rows,
    };
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("comparison.tsv"), summary.to_tsv())?;
    }
    Ok(summary)
}

/// Gaussian wave components of one synthetic heartbeat: offset from the R
/// peak (s), amplitude (mV), width (s).
const BEAT_WAVES: [(f64, f64, f64); 5] = [
    (-0.20, 0.15, 0.025),
    (-0.03, -0.12, 0.010),
    (0.0, 1.10, 0.012),
    (0.03, -0.25, 0.012),
    (0.28, 0.30, 0.045),
];

/// ECG-like test signal in mV: beats at about 72 bpm with seeded jitter of
/// the RR interval and of the wave amplitudes.
pub fn synthetic_ecg(duration: f64, sample_interval: f64, seed: u64) -> Result<Signal> {
    if !(duration > 0.0 && sample_interval > 0.0) {
        return Err(PulseError::Precondition("duration and sample interval must be > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut beats = Vec::new();
    let mut t = 0.35;
    while t < duration + 0.5 {
        let scale: f64 = rng.gen_range(0.95..1.05);
        beats.push((t, scale));
        t += 60.0 / 72.0 * rng.gen_range(0.95..1.05);
    }
    let n = (duration / sample_interval).round() as usize + 1;
    Signal::from_fn(0.0, sample_interval, n, |t| {
        beats
            .iter()
            .filter(|(r, _)| (t - r).abs() < 1.0)
            .map(|&(r, s)| {
                BEAT_WAVES
                    .iter()
                    .map(|&(off, a, w)| {
                        let z = (t - r - off) / w;
                        s * a * (-0.5 * z * z).exp()
                    })
                    .sum::<f64>()
            })
            .sum()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcgConfig {
    /// `None` tunes the threshold to `target_rate` on the clean ECG.
    pub theta: Option<f64>,
    pub alpha: f64,
    pub wander_amplitude: f64,
    pub wander_frequency: f64,
    pub wander_phase: f64,
    pub step: f64,
    pub grid: f64,
    /// Clean-ECG pulse rate aimed at when tuning, in pulses per second.
    pub target_rate: f64,
    pub output_dir: Option<PathBuf>,
}

impl Default for EcgConfig {
    fn default() -> Self {
        Self {
            theta: None,
            alpha: 0.0,
            wander_amplitude: 0.3,
            wander_frequency: 0.2,
            wander_phase: 0.0,
            step: 1e-5,
            grid: 1e-3,
            target_rate: 60.0,
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EcgReport {
    pub theta: f64,
    pub alpha: f64,
    pub theta_tuned: bool,
    pub config: EcgConfig,
    pub duration: f64,
    pub corrupted: PulseTrain,
    pub wander: PulseTrain,
    pub result: PulseTrain,
    pub clean: PulseTrain,
    pub clamped: usize,
    /// Result against the encoded clean ECG.
    pub comparison: RegionReport,
}

impl EcgReport {
    fn rate(&self, t: &PulseTrain) -> f64 {
        t.len() as f64 / self.duration
    }

    pub fn rate_corrupted(&self) -> f64 {
        self.rate(&self.corrupted)
    }

    pub fn rate_wander(&self) -> f64 {
        self.rate(&self.wander)
    }

    pub fn rate_result(&self) -> f64 {
        self.rate(&self.result)
    }

    pub fn rate_clean(&self) -> f64 {
        self.rate(&self.clean)
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "theta={}", self.theta);
        let _ = writeln!(out, "theta_source={}", if self.theta_tuned { "tuned" } else { "given" });
        let _ = writeln!(out, "alpha={}", self.alpha);
        let _ = writeln!(out, "target_rate={}", c.target_rate);
        let _ = writeln!(out, "wander_amplitude={}", c.wander_amplitude);
        let _ = writeln!(out, "wander_frequency={}", c.wander_frequency);
        let _ = writeln!(out, "wander_phase={}", c.wander_phase);
        let _ = writeln!(out, "step={}", c.step);
        let _ = writeln!(out, "duration={}", self.duration);
        let _ = writeln!(out, "pulses_corrupted={}", self.corrupted.len());
        let _ = writeln!(out, "pulses_wander={}", self.wander.len());
        let _ = writeln!(out, "pulses_result={}", self.result.len());
        let _ = writeln!(out, "pulses_clean={}", self.clean.len());
        let _ = writeln!(out, "rate_corrupted={:.6}", self.rate_corrupted());
        let _ = writeln!(out, "rate_wander={:.6}", self.rate_wander());
        let _ = writeln!(out, "rate_result={:.6}", self.rate_result());
        let _ = writeln!(out, "rate_clean={:.6}", self.rate_clean());
        let _ = writeln!(out, "clamped={}", self.clamped);
        out.push_str(&self.comparison.to_text());
        out
    }

    /// Report, the four trains and their decoded step signals.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("ecg_report.txt"), self.to_text())?;
        let times = grid_times(0.0, self.duration, self.config.grid);
        for (name, train) in [
            ("corrupted", &self.corrupted),
            ("wander", &self.wander),
            ("result", &self.result),
            ("clean", &self.clean),
        ] {
            io::write_train(dir.join(format!("{name}_train.txt")), train)?;
            let steps = amplitude_series(train, &times).values;
            let decoded = Signal::new(times[0], self.config.grid, steps)?;
            io::write_signal(dir.join(format!("{name}_decoded.txt")), &decoded)?;
        }
        Ok(())
    }
}

/// Threshold giving the clean signal roughly `target` pulses per second.
fn tune_theta(ecg: &Signal, alpha: f64, step: f64, target: f64) -> Result<f64> {
    let dt = ecg.sample_interval();
    let mean_abs = ecg.samples().iter().map(|v| v.abs()).sum::<f64>() * dt / ecg.duration();
    let mut theta = mean_abs / target;
    for _ in 0..6 {
        let train = encode(ecg, IfcParams::new(theta, alpha)?, step)?;
        let rate = train.len() as f64 / ecg.duration();
        if rate == 0.0 {
            theta *= 0.5;
            continue;
        }
        if (rate / target - 1.0).abs() < 0.05 {
            break;
        }
        theta *= rate / target;
    }
    Ok(theta)
}

/// Adds sinusoidal wander to `ecg`, encodes the corrupted signal and the
/// wander with the same parameters and subtracts the wander train.
pub fn run_ecg_demo(ecg: &Signal, cfg: &EcgConfig) -> Result<EcgReport> {
    if !(cfg.step > 0.0 && cfg.grid > 0.0 && cfg.target_rate > 0.0 && cfg.alpha >= 0.0) {
        return Err(PulseError::Precondition("step, grid and target rate must be > 0, alpha >= 0".into()));
    }
    let (theta, tuned) = match cfg.theta {
        Some(t) => (t, false),
        None => (tune_theta(ecg, cfg.alpha, cfg.step, cfg.target_rate)?, true),
    };
    let params = IfcParams::new(theta, cfg.alpha)?;
    let t0 = ecg.start_time();
    let wander_fn = |t: f64| {
        cfg.wander_amplitude * (std::f64::consts::TAU * cfg.wander_frequency * (t - t0) + cfg.wander_phase).sin()
    };
    let wander_sig = Signal::from_fn(t0, ecg.sample_interval(), ecg.len(), wander_fn)?;
    let corrupted_sig = ecg.zip_with(&wander_sig, |a, b| a + b)?;

    fn ctx(what: &'static str) -> impl Fn(PulseError) -> PulseError {
        move |e| e.context(format!("ecg demo: {what}"))
    }
    let corrupted = encode(&corrupted_sig, params, cfg.step).map_err(ctx("encoding corrupted signal"))?;
    let wander = encode(&wander_sig, params, cfg.step).map_err(ctx("encoding wander"))?;
    let clean = encode(ecg, params, cfg.step).map_err(ctx("encoding clean signal"))?;
    let out = arithmetic::apply(ArithOp::Add, Variant::Exact, &corrupted, &wander.negate(), None, SchedulePolicy::default())
        .map_err(ctx("subtracting wander"))?;
    let window = common_window(&out.train, &clean).map_err(ctx("comparing with clean signal"))?;
    let comparison = region_report(&out.train, &clean, window, cfg.grid).map_err(ctx("comparing with clean signal"))?;

    let report = EcgReport {
        theta,
        alpha: cfg.alpha,
        theta_tuned: tuned,
        config: cfg.clone(),
        duration: ecg.duration(),
        corrupted,
        wander,
        result: out.train,
        clean,
        clamped: out.clamped,
        comparison,
    };
    if let Some(dir) = &cfg.output_dir {
        report.write(dir)?;
    }
    Ok(report)
}
