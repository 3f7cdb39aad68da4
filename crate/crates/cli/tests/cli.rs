use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ifc_pulse::{io, Signal};

fn ifcpulse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ifcpulse")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_sine(p: &Path, phase: f64) {
    let s = Signal::from_fn(0.0, 1e-4, 20_001, |t| (std::f64::consts::TAU * t + phase).sin()).unwrap();
    io::write_signal(p, &s).unwrap();
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn encode_arith_metrics_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (sx, sy) = (dir.path().join("x.sig"), dir.path().join("y.sig"));
    write_sine(&sx, 0.0);
    write_sine(&sy, std::f64::consts::FRAC_PI_2);
    let (tx, ty) = (dir.path().join("x.txt"), dir.path().join("y.txt"));
    for (s, t) in [(&sx, &tx), (&sy, &ty)] {
        let o = ifcpulse(&["encode", "--theta", "0.01", "--alpha", "0", "--in", path(s), "--out", path(t)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let x = io::read_train(&tx).unwrap();
    assert!(x.len() > 100);

    for op in ["add", "sub", "mul"] {
        for approx in [false, true] {
            let out = dir.path().join(format!("{op}{approx}.txt"));
            let mut args = vec!["arith", "--op", op, "--x", path(&tx), "--y", path(&ty), "--out", path(&out)];
            if approx {
                args.push("--approx");
            }
            let o = ifcpulse(&args);
            assert!(o.status.success(), "{op}: {}", String::from_utf8_lossy(&o.stderr));
            assert!(!io::read_train(&out).unwrap().is_empty());
        }
    }

    let report = dir.path().join("report.txt");
    let add = dir.path().join("addfalse.txt");
    let o = ifcpulse(&["metrics", "--hat", path(&add), "--ref", path(&add), "--grid", "0.001", "--out", path(&report)]);
    assert!(o.status.success());
    let text = fs::read_to_string(&report).unwrap();
    for key in ["psnr_A=", "pulse_rate_D=", "mean_psnr=", "sd_psnr=", "mean_rate="] {
        assert!(text.contains(key), "missing {key}");
    }
    assert!(text.contains("r_all=1.000000"));
}

#[test]
fn conv_and_reconstruct() {
    let dir = tempfile::tempdir().unwrap();
    let sig = dir.path().join("box.sig");
    io::write_signal(&sig, &Signal::new(0.0, 1e-3, vec![1.0; 1001]).unwrap()).unwrap();
    let train = dir.path().join("box.txt");
    assert!(ifcpulse(&["encode", "--theta", "0.05", "--in", path(&sig), "--out", path(&train)]).status.success());

    let out = dir.path().join("conv.txt");
    let o = ifcpulse(&["conv", "--x", path(&train), "--y", path(&train), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let conv = io::read_train(&out).unwrap();
    // the box autocorrelation has area 1, i.e. about 1 / theta pulses
    assert!((conv.net_count() - 20).abs() <= 2, "{}", conv.net_count());

    let rec = dir.path().join("rec.sig");
    let o = ifcpulse(&["reconstruct", "--basis", "fourier", "--m", "1", "--dt", "0.01", "--in", path(&train), "--out", path(&rec)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = io::read_signal(&rec).unwrap();
    assert!(s.samples().iter().all(|v| (v - 1.0).abs() < 1e-6));
}

#[test]
fn sweep_and_ecg_demo_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep");
    let o = ifcpulse(&[
        "sweep", "--theta", "0.02,0.04", "--ops", "add", "--duration", "2", "--comparison", "--out", path(&sweep),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("points=4"));
    let tsv = fs::read_to_string(sweep.join("sweep.tsv")).unwrap();
    assert_eq!(tsv.lines().filter(|l| !l.starts_with('#')).count(), 5, "{tsv}");
    assert!(sweep.join("comparison.tsv").exists());

    let ecg = dir.path().join("ecg");
    let o = ifcpulse(&["ecg-demo", "--synthetic-duration", "6", "--seed", "2", "--out", path(&ecg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(ecg.join("ecg_report.txt").exists());
    let text = stdout(&o);
    assert!(text.contains("theta="), "{text}");
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.txt");

    // malformed input file
    let bad = dir.path().join("bad.sig");
    fs::write(&bad, "t0=0 dt=0.001\n0.5\nnot-a-number\n").unwrap();
    let o = ifcpulse(&["encode", "--theta", "0.01", "--in", path(&bad), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    // constant 1 never reaches theta under this leak, so no reference train exists
    let leaky = dir.path().join("leaky.txt");
    fs::write(&leaky, "theta=0.5 alpha=3 origin=0\n0.100000000,+1\n0.200000000,+1\n").unwrap();
    let o = ifcpulse(&["arith", "--op", "mul", "--x", path(&leaky), "--y", path(&leaky), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(3));

    // invalid parameters
    let sig = dir.path().join("s.sig");
    write_sine(&sig, 0.0);
    let o = ifcpulse(&["encode", "--theta", "-1", "--in", path(&sig), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(4));

    // mismatched operand parameters
    let other = dir.path().join("other.txt");
    fs::write(&other, "theta=0.2 alpha=0 origin=0\n0.500000000,+1\n").unwrap();
    let o = ifcpulse(&["arith", "--op", "add", "--x", path(&leaky), "--y", path(&other), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(4));
}
