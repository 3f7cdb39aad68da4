//! End-to-end use of the public API: encode, operate, decode, score.

use ifc_pulse::arithmetic::{self, reference_for};
use ifc_pulse::convolution::{convolution_reference, convolve};
use ifc_pulse::kernel::leak_factor;
use ifc_pulse::metrics::{common_window, psnr, region_report, Psnr, Region};
use ifc_pulse::reconstruction::{reconstruct, BasisKind, BasisSpec};
use ifc_pulse::{encode, instantaneous_amplitude, negate, reference_train, IfcParams, Polarity, PulseEvent, PulseTrain, Signal};

fn params(theta: f64, alpha: f64) -> IfcParams {
    IfcParams::new(theta, alpha).unwrap()
}

fn constant(c: f64, duration: f64) -> Signal {
    Signal::from_fn(0.0, 1e-3, (duration / 1e-3) as usize + 1, |_| c).unwrap()
}

fn mean_amplitude(train: &PulseTrain, from: f64, to: f64) -> f64 {
    let steps: Vec<_> = instantaneous_amplitude(train)
        .into_iter()
        .filter(|s| s.start >= from && s.end <= to)
        .collect();
    steps.iter().map(|s| s.amplitude).sum::<f64>() / steps.len() as f64
}

#[test]
fn leak_factor_and_reference_spacing() {
    assert_eq!(leak_factor(1.0, 0.0), 0.0);
    assert!((leak_factor(1.0, std::f64::consts::LN_2) - 0.5).abs() < 1e-15);

    let r = reference_train(params(0.1, 0.0), 0.0, 1.0).unwrap();
    assert_eq!(r.len(), 10);
    assert!(r.events().iter().all(|e| e.polarity == Polarity::Positive));

    let r = reference_train(params(0.1, 1.0), 0.0, 1.0).unwrap();
    let d = r.events()[1].time - r.events()[0].time;
    assert!((d - -(0.9f64.ln())).abs() < 1e-12);
    assert!(instantaneous_amplitude(&r).iter().all(|s| (s.amplitude - 1.0).abs() < 1e-9));

    assert!(reference_train(params(1.0, 1.0), 0.0, 1.0).is_err());
}

#[test]
fn negate_is_an_involution() {
    let x = PulseTrain::new(params(0.1, 0.0), 0.0, vec![PulseEvent::new(1.0, Polarity::Positive)]).unwrap();
    assert_eq!(negate(&x).events()[0].polarity, Polarity::Negative);
    assert_eq!(negate(&negate(&x)), x);
}

#[test]
fn constant_arithmetic_through_the_encoder() {
    for alpha in [0.0, 1.0] {
        let p = params(0.01, alpha);
        let x = encode(&constant(0.75, 4.0), p, 1e-5).unwrap();
        let y = encode(&constant(0.5, 4.0), p, 1e-5).unwrap();

        let sum = arithmetic::add(&x, &y).unwrap();
        let diff = arithmetic::subtract(&x, &y).unwrap();
        let r = reference_for(&x, &y).unwrap();
        let prod = arithmetic::multiply(&x, &y, &r).unwrap();
        // under leak every operand pulses at about c/theta - alpha/2 per second, so
        // counts combine with an offset of up to theta alpha / 2 in amplitude
        let bias = p.theta() * alpha / 2.0;
        for (train, want) in [(&sum, 1.25), (&diff, 0.25), (&prod, 0.375)] {
            let got = mean_amplitude(train, 0.5, 3.5);
            assert!((got - want).abs() < 0.005 * want + bias, "alpha {alpha}: {got} vs {want}");
        }
    }
}

#[test]
fn box_convolution_peaks_at_full_overlap() {
    let p = params(0.01, 0.0);
    let x = encode(&constant(1.0, 1.0), p, 1e-5).unwrap();
    let r = convolution_reference(&x, &x).unwrap();
    let out = convolve(&x, &x, &r).unwrap();
    // triangle of height 1 at t = 1 and area 1
    assert!((out.net_count() as f64 - 100.0).abs() <= 2.0, "{}", out.net_count());
    let peak = instantaneous_amplitude(&out)
        .into_iter()
        .filter(|s| s.start > 0.9 && s.end < 1.1)
        .map(|s| s.amplitude)
        .fold(0.0, f64::max);
    assert!((peak - 1.0).abs() < 0.1, "{peak}");
}

#[test]
fn encoded_sinusoid_scores_against_itself_and_reconstructs() {
    let p = params(0.01, 0.0);
    let s = Signal::from_fn(0.0, 1e-4, 20_001, |t| (std::f64::consts::TAU * t).sin()).unwrap();
    let x = encode(&s, p, 1e-5).unwrap();

    let report = region_report(&x, &x, common_window(&x, &x).unwrap(), 1e-3).unwrap();
    for region in Region::ALL {
        assert_eq!(report.region(region).psnr, Some(Psnr::Perfect));
    }
    assert!(report.region(Region::D).pulse_rate > report.region(Region::A).pulse_rate);

    let rec = reconstruct(&x, BasisSpec::new(BasisKind::Fourier, 5, (0.0, 2.0)).unwrap(), 1e-3).unwrap();
    let truth: Vec<f64> = (0..rec.signal.len()).map(|i| (std::f64::consts::TAU * rec.signal.time(i)).sin()).collect();
    match psnr(rec.signal.samples(), &truth).unwrap() {
        Psnr::Finite(db) => assert!(db > 60.0, "{db}"),
        Psnr::Perfect => {}
    }
}
