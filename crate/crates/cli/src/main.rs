use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ifc_pulse::arithmetic::{self, ArithOp, SchedulePolicy, Variant};
use ifc_pulse::convolution::{convolution_reference, convolve_with};
use ifc_pulse::experiments::{
    run_comparison, run_ecg_demo, run_synthetic, synthetic_ecg, EcgConfig, ExperimentConfig, Operation, SignalSpec,
};
use ifc_pulse::metrics::{common_window, region_report};
use ifc_pulse::reconstruction::{reconstruct, BasisKind, BasisSpec};
use ifc_pulse::{encode, io, ErrorClass, IfcParams, PulseError};

/// Signal processing on integrate-and-fire pulse trains.
#[derive(Debug, Parser)]
#[command(name = "ifcpulse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a sampled signal into a pulse train.
    Encode {
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        alpha: f64,
        /// Integration step in seconds.
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add, subtract or multiply two pulse trains.
    Arith {
        #[arg(long, value_enum)]
        op: ArithKind,
        #[arg(long)]
        approx: bool,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Treat an operand as silent inside gaps longer than this many
        /// times its previous interval.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Convolve two pulse trains.
    Conv {
        #[arg(long)]
        approx: bool,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Least-squares reconstruction of the signal behind a pulse train.
    Reconstruct {
        #[arg(long, value_enum, default_value_t = BasisArg::Fourier)]
        basis: BasisArg,
        #[arg(long)]
        m: usize,
        /// Output sample interval in seconds.
        #[arg(long)]
        dt: f64,
        /// Window start; defaults to the train origin.
        #[arg(long)]
        start: Option<f64>,
        /// Window end; defaults to the last pulse.
        #[arg(long)]
        end: Option<f64>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-region PSNR, correlation and pulse rate of a train against a reference train.
    Metrics {
        #[arg(long)]
        hat: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        grid: f64,
        /// Report file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic parameter sweep against encoded oracles.
    Sweep(SweepArgs),
    /// Baseline wander removal by pulse-domain subtraction.
    EcgDemo(EcgArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ArithKind {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BasisArg {
    Fourier,
    Bspline,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.01")]
    theta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    alpha: Vec<f64>,
    #[arg(long = "ops", value_delimiter = ',', default_value = "add,mul,conv")]
    operations: Vec<Operation>,
    /// Operand descriptors: `sin:AMP:FREQ[:PHASE|random]` or `file:PATH`.
    #[arg(long, default_value = "sin:1:1:0")]
    x: SignalSpec,
    #[arg(long, default_value = "sin:1:1:1.5707963267948966")]
    y: SignalSpec,
    #[arg(long, default_value_t = 5.0)]
    duration: f64,
    #[arg(long, default_value_t = 1e-4)]
    sample_interval: f64,
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    #[arg(long, default_value_t = 1e-3)]
    grid: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also run the reconstruction comparison.
    #[arg(long)]
    comparison: bool,
    /// Highest frequency the comparison basis represents, in Hz.
    #[arg(long, default_value_t = 3.0)]
    bandwidth: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EcgArgs {
    /// ECG signal file; the bundled synthetic generator is used when absent.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Length of the synthetic ECG in seconds.
    #[arg(long, default_value_t = 20.0)]
    synthetic_duration: f64,
    #[arg(long, default_value_t = 1e-3)]
    synthetic_interval: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed threshold; tuned to `--target-rate` on the clean ECG when absent.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.3)]
    wander_amplitude: f64,
    #[arg(long, default_value_t = 0.2)]
    wander_frequency: f64,
    #[arg(long, default_value_t = 0.0)]
    wander_phase: f64,
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    #[arg(long, default_value_t = 1e-3)]
    grid: f64,
    #[arg(long, default_value_t = 60.0)]
    target_rate: f64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Format => 2,
                ErrorClass::Numeric => 3,
                ErrorClass::Precondition => 4,
            })
        }
    }
}

fn run(command: Command) -> Result<(), PulseError> {
    match command {
        Command::Encode {
            theta,
            alpha,
            step,
            input,
            out,
        } => {
            let params = IfcParams::new(theta, alpha)?;
            let signal = io::read_signal(&input).map_err(|e| in_file(e, &input))?;
            let train = encode(&signal, params, step)?;
            io::write_train(&out, &train)?;
            println!("pulses={}", train.len());
        }
        Command::Arith {
            op,
            approx,
            x,
            y,
            out,
            horizon,
        } => {
            let (xt, yt) = (read_train(&x)?, read_train(&y)?);
            let policy = SchedulePolicy::Lenient { horizon_factor: horizon };
            let result = match op {
                ArithKind::Add => arithmetic::apply(ArithOp::Add, variant(approx), &xt, &yt, None, policy)?,
                ArithKind::Sub => arithmetic::apply(ArithOp::Add, variant(approx), &xt, &yt.negate(), None, policy)?,
                ArithKind::Mul => {
                    let r = arithmetic::reference_for(&xt, &yt)?;
                    arithmetic::apply(ArithOp::Multiply, variant(approx), &xt, &yt, Some(&r), policy)?
                }
            };
            io::write_train(&out, &result.train)?;
            println!("pulses={}", result.train.len());
            println!("clamped={}", result.clamped);
        }
        Command::Conv { approx, x, y, out } => {
            let (xt, yt) = (read_train(&x)?, read_train(&y)?);
            let r = convolution_reference(&xt, &yt)?;
            let result = convolve_with(variant(approx), &xt, &yt, &r)?;
            io::write_train(&out, &result.train)?;
            println!("pulses={}", result.train.len());
            println!("clamped={}", result.clamped);
        }
        Command::Reconstruct {
            basis,
            m,
            dt,
            start,
            end,
            input,
            out,
        } => {
            let train = read_train(&input)?;
            let window = (start.unwrap_or(train.origin()), end.unwrap_or(train.end()));
            let kind = match basis {
                BasisArg::Fourier => BasisKind::Fourier,
                BasisArg::Bspline => BasisKind::BSpline,
            };
            let rec = reconstruct(&train, BasisSpec::new(kind, m, window)?, dt)?;
            io::write_signal(&out, &rec.signal)?;
            println!("intervals={}", rec.intervals);
            println!("condition={:e}", rec.condition);
            if rec.ill_conditioned {
                eprintln!("warning: least-squares system is ill-conditioned");
            }
        }
        Command::Metrics {
            hat,
            reference,
            grid,
            out,
        } => {
            let (h, r) = (read_train(&hat)?, read_train(&reference)?);
            let report = region_report(&h, &r, common_window(&h, &r)?, grid)?;
            match out {
                Some(path) => fs::write(path, report.to_text())?,
                None => print!("{}", report.to_text()),
            }
        }
        Command::Sweep(args) => sweep(args)?,
        Command::EcgDemo(args) => ecg_demo(args)?,
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), PulseError> {
    let cfg = ExperimentConfig {
        thetas: args.theta,
        alphas: args.alpha,
        operations: args.operations,
        x: args.x,
        y: args.y,
        duration: args.duration,
        sample_interval: args.sample_interval,
        step: args.step,
        grid: args.grid,
        seed: args.seed,
        bandwidth: args.bandwidth,
        output_dir: Some(args.out.clone()),
        ..Default::default()
    };
    let summary = run_synthetic(&cfg)?;
    println!("points={}", summary.rows.len());
    if args.comparison {
        let comparison = run_comparison(&cfg)?;
        println!("comparison_points={}", comparison.rows.len());
    }
    println!("output={}", args.out.display());
    Ok(())
}

fn ecg_demo(args: EcgArgs) -> Result<(), PulseError> {
    let ecg = match &args.input {
        Some(path) => io::read_signal(path).map_err(|e| in_file(e, path))?,
        None => synthetic_ecg(args.synthetic_duration, args.synthetic_interval, args.seed)?,
    };
    let cfg = EcgConfig {
        theta: args.theta,
        alpha: args.alpha,
        wander_amplitude: args.wander_amplitude,
        wander_frequency: args.wander_frequency,
        wander_phase: args.wander_phase,
        step: args.step,
        grid: args.grid,
        target_rate: args.target_rate,
        output_dir: Some(args.out.clone()),
    };
    let report = run_ecg_demo(&ecg, &cfg)?;
    print!("{}", report.to_text());
    Ok(())
}

fn variant(approx: bool) -> Variant {
    if approx {
        Variant::Approx
    } else {
        Variant::Exact
    }
}

fn read_train(path: &Path) -> Result<ifc_pulse::PulseTrain, PulseError> {
    io::read_train(path).map_err(|e| in_file(e, path))
}

fn in_file(e: PulseError, path: &Path) -> PulseError {
    e.context(path.display().to_string())
}
