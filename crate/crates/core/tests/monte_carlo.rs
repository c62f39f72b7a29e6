use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use qctl::cli::commands::simulate_detector;
use qctl::onequbit::{self, QuasiStaticKind, StaticKind};
use qctl::qcore;
use qctl::readout;

fn mean_se(n: usize, mut f: impl FnMut() -> f64) -> (f64, f64) {
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let v = f();
        s += v;
        s2 += v * v;
    }
    let m = s / n as f64;
    (m, ((s2 / n as f64 - m * m) / n as f64).sqrt())
}

#[test]
fn gaussian_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (order, sigma) in [(2u32, 0.1), (4, 0.3)] {
        let d = Normal::new(0.0, sigma).unwrap();
        let closed = qcore::gaussian_expectation(order, 1.0, sigma).unwrap();
        let (m, se) = mean_se(100_000, || 1.0 - d.sample(&mut rng).powi(order as i32));
        assert!((m - closed).abs() < 3.0 * se, "order {order}: {m} vs {closed}");
    }
}

#[test]
fn quasi_static_phase() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sigma = 0.5;
    let d = Normal::new(0.0, sigma).unwrap();
    let closed = onequbit::quasi_static_expectation(QuasiStaticKind::Phase, 1.0, sigma).unwrap();
    let (m, se) = mean_se(100_000, || onequbit::fid_static(StaticKind::Phase, 1.0, d.sample(&mut rng)).exact);
    assert!((m - closed).abs() < 3.0 * se, "{m} vs {closed}");
}

#[test]
fn detector_matches_p_detect() {
    let snr: f64 = 9.0;
    let trials = 200_000;
    let mc = simulate_detector(1.0, 0.5, 1.0 / snr.sqrt(), trials, 3).unwrap();
    let p = readout::p_detect(snr).unwrap();
    assert!((mc - p).abs() < 3.0 * (p * (1.0 - p) / trials as f64).sqrt(), "{mc} vs {p}");
}
