//! Dense complex matrices, Hermitian exponentials, piecewise propagation and
//! fidelity metrics.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// Real symmetric matrix lifted to complex.
pub fn from_real(n: usize, rows: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_row_iterator(n, n, rows.iter().map(|&x| c(x, 0.0)))
}

pub fn diag(d: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d))
}

fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// max |A − A†| relative to max |A| (absolute when A = 0).
pub fn hermitian_asymmetry(a: &ComplexMatrix) -> f64 {
    let d = a - a.adjoint();
    let scale = max_abs(a);
    if scale == 0.0 {
        0.0
    } else {
        max_abs(&d) / scale
    }
}

pub fn unitarity_error(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - identity(n)))
}

fn check_square(a: &ComplexMatrix, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return invalid(format!("{what}: expected a non-empty square matrix, got {}x{}", a.nrows(), a.ncols()));
    }
    Ok(())
}

pub fn check_hermitian(h: &ComplexMatrix) -> Result<()> {
    check_square(h, "hermitian input")?;
    let asym = hermitian_asymmetry(h);
    if asym > 1e-12 {
        return invalid(format!("matrix is not Hermitian: max relative asymmetry {asym:.3e}"));
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// Columns of the returned matrix are the matching eigenvectors.
pub fn eigh(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    check_hermitian(h)?;
    // symmetrize so tiny asymmetries do not leak into the solver
    let hs = (h + h.adjoint()) * c(0.5, 0.0);
    let n = hs.nrows();
    let eig = SymmetricEigen::new(hs);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = ComplexMatrix::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(k));
    }
    Ok((vals, vecs))
}

/// e^{−iHt} through the eigenbasis of H.
pub fn matexp_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if !t.is_finite() {
        return invalid(format!("propagation time must be finite, got {t}"));
    }
    let (vals, v) = eigh(h)?;
    let phases: Vec<C64> = vals.iter().map(|&w| (-I * (w * t)).exp()).collect();
    let mut vd = v.clone();
    for (j, p) in phases.iter().enumerate() {
        for r in 0..vd.nrows() {
            vd[(r, j)] *= p;
        }
    }
    Ok(vd * v.adjoint())
}

/// Time-ordered list of constant generators.
#[derive(Debug, Clone)]
pub struct PiecewiseSchedule {
    pub segments: Vec<(ComplexMatrix, f64)>,
    pub step_hint: Option<f64>,
}

impl PiecewiseSchedule {
    pub fn new(segments: Vec<(ComplexMatrix, f64)>) -> Self {
        Self { segments, step_hint: None }
    }

    /// Samples a time-dependent generator at segment midpoints, with steps no
    /// longer than `step` over [t_start, t_start + duration].
    pub fn sample<F>(h: F, t_start: f64, duration: f64, step: f64) -> Result<Self>
    where
        F: Fn(f64) -> ComplexMatrix,
    {
        if !(step > 0.0) || !(duration >= 0.0) {
            return invalid(format!("sampling needs step > 0 and duration >= 0 (step {step}, duration {duration})"));
        }
        let n = (duration / step).ceil().max(1.0) as usize;
        let dt = duration / n as f64;
        let segments = (0..n).map(|k| (h(t_start + (k as f64 + 0.5) * dt), dt)).collect();
        Ok(Self { segments, step_hint: Some(step) })
    }

    pub fn dim(&self) -> Option<usize> {
        self.segments.first().map(|(h, _)| h.nrows())
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|(_, d)| d).sum()
    }
}

/// Ordered product of segment exponentials; later segments act from the left.
pub fn propagate(schedule: &PiecewiseSchedule) -> Result<ComplexMatrix> {
    let n = match schedule.dim() {
        Some(n) => n,
        None => return invalid("empty schedule"),
    };
    propagate_iter(n, schedule.segments.iter().map(|(h, d)| (h.clone(), *d)))
}

/// Streaming form of [`propagate`] for long generated schedules.
pub fn propagate_iter<It>(n: usize, segments: It) -> Result<ComplexMatrix>
where
    It: IntoIterator<Item = (ComplexMatrix, f64)>,
{
    let mut u = identity(n);
    for (k, (h, d)) in segments.into_iter().enumerate() {
        if h.nrows() != n || h.ncols() != n {
            return invalid(format!("segment {k} has dimension {}x{}, expected {n}x{n}", h.nrows(), h.ncols()));
        }
        if !(d > 0.0) {
            return invalid(format!("segment {k} has non-positive duration {d}"));
        }
        u = matexp_hermitian(&h, d)? * u;
        if k % 1024 == 1023 {
            u = nearest_unitary(&u);
        }
    }
    Ok(u)
}

/// Polar projection W·V† of U = W·Σ·V†; removes accumulated rounding drift.
pub fn nearest_unitary(u: &ComplexMatrix) -> ComplexMatrix {
    let svd = u.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(w), Some(vt)) => w * vt,
        _ => u.clone(),
    }
}

/// |Tr(U_ideal† U_real)|² / n².
pub fn process_fidelity(u_ideal: &ComplexMatrix, u_real: &ComplexMatrix) -> Result<f64> {
    check_square(u_ideal, "ideal operation")?;
    if u_ideal.shape() != u_real.shape() {
        return invalid(format!("dimension mismatch: {:?} vs {:?}", u_ideal.shape(), u_real.shape()));
    }
    let n = u_ideal.nrows() as f64;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..u_ideal.nrows() {
        for j in 0..u_ideal.ncols() {
            acc += u_ideal[(i, j)].conj() * u_real[(i, j)];
        }
    }
    Ok(acc.norm_sqr() / (n * n))
}

/// (1 + nF)/(n + 1).
pub fn average_fidelity(f: f64, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return invalid(format!("process fidelity {f} outside [0, 1]"));
    }
    if n < 2 {
        return invalid(format!("dimension must be at least 2, got {n}"));
    }
    let n = n as f64;
    Ok((1.0 + n * f) / (n + 1.0))
}

/// Coefficients of U = i·I + x·σx + y·σy + z·σz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliDecomposition {
    pub x: C64,
    pub y: C64,
    pub z: C64,
    pub i: C64,
}

impl PauliDecomposition {
    pub fn norm_sqr(&self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr() + self.i.norm_sqr()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        identity(2) * self.i + sigma_x() * self.x + sigma_y() * self.y + sigma_z() * self.z
    }
}

pub fn pauli_decompose(u: &ComplexMatrix) -> Result<PauliDecomposition> {
    if u.shape() != (2, 2) {
        return invalid(format!("Pauli decomposition needs a 2x2 matrix, got {:?}", u.shape()));
    }
    let coef = |p: &ComplexMatrix| (p * u).trace() / 2.0;
    Ok(PauliDecomposition { x: coef(&sigma_x()), y: coef(&sigma_y()), z: coef(&sigma_z()), i: coef(&identity(2)) })
}

/// Expected fidelity when a Gaussian error with std-dev σ enters as
/// F = 1 − c·x² (order 2) or F = 1 − c·x⁴ (order 4).
pub fn gaussian_expectation(order: u32, c: f64, sigma: f64) -> Result<f64> {
    if c < 0.0 || sigma < 0.0 {
        return invalid(format!("curvature and sigma must be non-negative (c = {c}, sigma = {sigma})"));
    }
    match order {
        2 => Ok(1.0 - c * sigma * sigma),
        4 => Ok(1.0 - 3.0 * c * sigma.powi(4)),
        o => invalid(format!("unsupported expansion order {o}, expected 2 or 4")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn zero_generator_gives_identity() {
        let u = matexp_hermitian(&ComplexMatrix::zeros(3, 3), 7.0).unwrap();
        assert!(max_abs(&(u - identity(3))) < 1e-15);
    }

    #[test]
    fn rabi_pi_pulse_is_x_gate() {
        let w = 2.0 * PI * 1e6;
        let h = sigma_x() * c(w / 2.0, 0.0);
        let u = matexp_hermitian(&h, PI / w).unwrap();
        let target = sigma_x() * (-I);
        assert!(max_abs(&(u.clone() - target)) < 1e-12);
        assert!(close(process_fidelity(&sigma_x(), &u).unwrap(), 1.0, 1e-14));
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let err = matexp_hermitian(&a, 1.0).unwrap_err();
        assert!(err.to_string().contains("asymmetry"));
    }

    #[test]
    fn semigroup_and_single_segment() {
        let h = sigma_x() * c(0.3, 0.0) + sigma_z() * c(1.1, 0.0);
        let one = propagate(&PiecewiseSchedule::new(vec![(h.clone(), 2.0)])).unwrap();
        let two = propagate(&PiecewiseSchedule::new(vec![(h.clone(), 1.0), (h.clone(), 1.0)])).unwrap();
        let direct = matexp_hermitian(&h, 2.0).unwrap();
        assert!(max_abs(&(one.clone() - direct)) < 1e-14);
        assert!(max_abs(&(one - two)) < 1e-13);
    }

    #[test]
    fn later_segments_act_from_left() {
        let a = sigma_x() * c(1.0, 0.0);
        let b = sigma_z() * c(1.0, 0.0);
        let u = propagate(&PiecewiseSchedule::new(vec![(a.clone(), 0.4), (b.clone(), 0.7)])).unwrap();
        let expect = matexp_hermitian(&b, 0.7).unwrap() * matexp_hermitian(&a, 0.4).unwrap();
        assert!(max_abs(&(u - expect)) < 1e-14);
    }

    #[test]
    fn propagate_errors() {
        assert!(propagate(&PiecewiseSchedule::new(vec![])).is_err());
        let s = PiecewiseSchedule::new(vec![(sigma_x(), 1.0), (identity(3), 1.0)]);
        assert!(propagate(&s).is_err());
    }

    #[test]
    fn fidelity_examples() {
        assert!(close(process_fidelity(&sigma_x(), &sigma_x()).unwrap(), 1.0, 1e-15));
        assert!(close(process_fidelity(&sigma_x(), &sigma_y()).unwrap(), 0.0, 1e-15));
        let dphi: f64 = 0.02;
        let rz = matexp_hermitian(&(sigma_z() * c(0.5, 0.0)), dphi).unwrap();
        let f = process_fidelity(&identity(2), &rz).unwrap();
        assert!(close(f, (dphi / 2.0).cos().powi(2), 1e-14));
        assert!(close(f, 1.0 - 1e-4, 1e-8));
        assert!(process_fidelity(&identity(2), &identity(3)).is_err());
    }

    #[test]
    fn average_fidelity_examples() {
        assert_eq!(average_fidelity(1.0, 2).unwrap(), 1.0);
        assert!(close(average_fidelity(0.0, 2).unwrap(), 1.0 / 3.0, 1e-15));
        assert!(close(average_fidelity(0.999, 4).unwrap(), 0.9992, 1e-12));
        assert!(average_fidelity(1.2, 2).is_err());
        assert!(average_fidelity(0.5, 1).is_err());
    }

    #[test]
    fn pauli_examples() {
        let d = pauli_decompose(&identity(2)).unwrap();
        assert_eq!((d.x, d.y, d.z, d.i), (c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)));
        let d = pauli_decompose(&(sigma_x() * (-I))).unwrap();
        assert!((d.x - c(0.0, -1.0)).norm() < 1e-15 && d.i.norm() < 1e-15);
        assert!(pauli_decompose(&identity(4)).is_err());
    }

    #[test]
    fn gaussian_examples() {
        assert_eq!(gaussian_expectation(2, 0.25, 0.0).unwrap(), 1.0);
        assert!(close(1.0 - gaussian_expectation(2, 1.0, 0.011).unwrap(), 1.21e-4, 1e-12));
        let inf = 1.0 - gaussian_expectation(4, PI * PI / 16.0, 9.2 / 82.7).unwrap();
        assert!((inf - 2.84e-4).abs() / 2.84e-4 < 0.01, "{inf}");
        assert!(gaussian_expectation(3, 1.0, 0.1).is_err());
    }

    #[test]
    fn million_step_schedule_stays_unitary() {
        let h = sigma_x() * c(0.7, 0.0) + sigma_y() * c(0.2, 0.0) + sigma_z() * c(-1.3, 0.0);
        let u = propagate_iter(2, (0..1_000_000).map(|_| (h.clone(), 1e-3))).unwrap();
        assert!(unitarity_error(&u) < 1e-10, "{}", unitarity_error(&u));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_hermitian(v: &[f64]) -> ComplexMatrix {
            sigma_x() * c(v[0], 0.0) + sigma_y() * c(v[1], 0.0) + sigma_z() * c(v[2], 0.0) + identity(2) * c(v[3], 0.0)
        }

        proptest! {
            #[test]
            fn global_phase_invariance(v in prop::collection::vec(-3.0f64..3.0, 4), phi in -PI..PI, t in 0.0f64..5.0) {
                let u = matexp_hermitian(&random_hermitian(&v), t).unwrap();
                let f = process_fidelity(&u, &(u.clone() * (I * phi).exp())).unwrap();
                prop_assert!((f - 1.0).abs() < 1e-12);
            }

            #[test]
            fn exponential_is_unitary(v in prop::collection::vec(-1e3f64..1e3, 4), t in -10.0f64..10.0) {
                let u = matexp_hermitian(&random_hermitian(&v), t).unwrap();
                prop_assert!(unitarity_error(&u) < 1e-10);
            }

            #[test]
            fn pauli_reconstructs(v in prop::collection::vec(-3.0f64..3.0, 4), t in 0.0f64..5.0) {
                let u = matexp_hermitian(&random_hermitian(&v), t).unwrap();
                let d = pauli_decompose(&u).unwrap();
                prop_assert!(max_abs(&(d.reconstruct() - &u)) < 1e-10);
                prop_assert!((d.norm_sqr() - 1.0).abs() < 1e-10);
            }
        }
    }
}
