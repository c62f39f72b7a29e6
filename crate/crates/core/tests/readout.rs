use qctl::readout::{self, ReadoutDotParams, SplittingSweep};
use qctl::twoqubit::DoubleDotParams;
use qctl::TAU;

fn dot() -> ReadoutDotParams {
    ReadoutDotParams { base: DoubleDotParams { omega_0: TAU * 1e9, delta_omega_0: TAU * 50e6, t0: TAU * 39e6, u: TAU * 1e12, epsilon: 0.0 }, e_st: TAU * 12.09e9 }
}

#[test]
fn scan_symmetric_about_midpoint() {
    let xs: Vec<f64> = (1..20).map(|k| k as f64 / 20.0).collect();
    let s = readout::charge_error_scan(&dot(), &xs).unwrap();
    for k in 0..s.len() / 2 {
        let (a, b) = (s[k].1, s[s.len() - 1 - k].1);
        assert!((a / b - 1.0).abs() < 0.01, "{k}: {a} {b}");
    }
}

#[test]
fn omega_0_decade_keeps_shape() {
    let xs: Vec<f64> = (1..20).map(|k| k as f64 / 20.0).collect();
    let norm = |p: &ReadoutDotParams| {
        let s = readout::charge_error_scan(p, &xs).unwrap();
        let m = s.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        s.iter().map(|v| v.1 / m).collect::<Vec<_>>()
    };
    let mut q = dot();
    q.base.omega_0 /= 10.0;
    for (a, b) in norm(&dot()).iter().zip(norm(&q)) {
        assert!((a / b - 1.0).abs() < 0.01);
    }
}

#[test]
fn larger_splitting_lowers_error() {
    let ratios = [10.0, 100.0, 1000.0];
    for sweep in [SplittingSweep::Tunnel, SplittingSweep::Splitting] {
        let v = readout::charge_error_vs_splitting(&dot(), &ratios, sweep).unwrap();
        assert!(v[0].1 > v[1].1 && v[1].1 > v[2].1, "{sweep:?} {v:?}");
    }
}

#[test]
fn p_detect_limits() {
    assert!((readout::p_detect(0.0).unwrap() - 0.5).abs() < 1e-12);
    assert!(readout::p_detect(400.0).unwrap() > 1.0 - 1e-12);
    assert!(readout::p_detect(-1.0).is_err());
}
