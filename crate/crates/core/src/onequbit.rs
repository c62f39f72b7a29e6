//! Single-qubit control errors: Hamiltonians, static and quasi-static error
//! fidelities, filter functions, FDMA crosstalk and idle degradation.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::noise::{self, FilterKind, FilterResponse, PowerSpectrum};
use crate::qcore::{self, c, identity, matexp_hermitian, sigma_x, sigma_y, sigma_z, ComplexMatrix, PauliDecomposition, C64, I};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    Rectangular,
    /// Gaussian truncated at ±3σ_t.
    Gaussian { sigma_t: f64 },
}

/// Operating point of a single-qubit rotation. Angular units throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationSpec {
    pub theta: f64,
    pub phi: f64,
    pub omega_r: f64,
    pub omega_0: f64,
    pub omega_mw: f64,
    pub t: f64,
    pub envelope: Envelope,
}

/// Reduces an angle into (−π, π]; the flag is set when a reduction happened.
pub fn clamp_angle(theta: f64) -> (f64, bool) {
    if (-PI..=PI).contains(&theta) {
        return (theta, false);
    }
    let mut r = theta.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    (r, true)
}

impl RotationSpec {
    /// Resonant rectangular pulse; θ outside [−π, π] is reduced.
    pub fn rectangular(theta: f64, phi: f64, omega_r: f64, omega_0: f64) -> Result<(Self, bool)> {
        if !(omega_r > 0.0) {
            return invalid(format!("omega_R must be positive, got {omega_r}"));
        }
        let (theta, reduced) = clamp_angle(theta);
        let spec = Self { theta, phi, omega_r, omega_0, omega_mw: omega_0, t: theta.abs() / omega_r, envelope: Envelope::Rectangular };
        Ok((spec, reduced))
    }
}

/// Static carrier errors.
#[derive(Debug, Clone, PartialEq)]
pub struct CarrierError {
    pub delta_omega: f64,
    pub delta_phi: f64,
    /// Frequency noise, (rad/s)²/Hz.
    pub s_freq: Option<PowerSpectrum>,
    /// Additive drive-line noise, V²/Hz.
    pub s_add: Option<PowerSpectrum>,
}

impl Default for CarrierError {
    fn default() -> Self {
        Self { delta_omega: 0.0, delta_phi: 0.0, s_freq: None, s_add: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnvelopeError {
    pub delta_omega_r_rel: f64,
    pub delta_t_rel: f64,
    /// Amplitude noise, V²/Hz.
    pub s_amp: Option<PowerSpectrum>,
    pub sigma_t: f64,
}

/// Δω·σz/2 + ω_R[cos φ·σx/2 − sin φ·σy/2], with Δω = ω_mw − ω_0 plus the carrier error.
pub fn rwa_hamiltonian(spec: &RotationSpec, err: &CarrierError) -> ComplexMatrix {
    let dw = spec.omega_mw - spec.omega_0 + err.delta_omega;
    let phi = spec.phi + err.delta_phi;
    sigma_z() * c(dw / 2.0, 0.0) + (sigma_x() * c(phi.cos() / 2.0, 0.0) - sigma_y() * c(phi.sin() / 2.0, 0.0)) * c(spec.omega_r, 0.0)
}

/// −ω_0·σz/2 + 2ω_R·cos(ω_mw t + φ)·σx/2.
pub fn lab_hamiltonian(spec: &RotationSpec, t: f64) -> ComplexMatrix {
    sigma_z() * c(-spec.omega_0 / 2.0, 0.0) + sigma_x() * c(spec.omega_r * (spec.omega_mw * t + spec.phi).cos(), 0.0)
}

/// Frame change from the lab to the frame rotating with the carrier at time t.
pub fn lab_to_rotating(spec: &RotationSpec, t: f64) -> ComplexMatrix {
    // R(t) = e^{iω_mw t σz/2}; the rotating-frame state is R(t)†·ψ
    let a = spec.omega_mw * t / 2.0;
    qcore::diag(&[(-I * a).exp(), (I * a).exp()])
}

/// Default sampling step for full-Hamiltonian runs: a tenth of the carrier
/// period, capped at 10⁻³/ω_R for slow carriers.
pub fn default_step(spec: &RotationSpec) -> f64 {
    let carrier = if spec.omega_mw > 0.0 { 2.0 * PI / spec.omega_mw / 10.0 } else { f64::INFINITY };
    carrier.min(1e-3 / spec.omega_r)
}

/// Piecewise schedule of the full (non-RWA) drive, expressed in the rotating
/// frame. In that frame the generator is A + B·e^{−ikt} + B†·e^{ikt} with
/// k = 2ω_mw. Each step carries the second-order Magnus generator with the
/// exponential integrals done in closed form, so the counter-rotating term is
/// resolved even at a few samples per carrier cycle.
pub fn lab_schedule(spec: &RotationSpec, err: &CarrierError, step: f64) -> Result<qcore::PiecewiseSchedule> {
    if !(step > 0.0) {
        return invalid(format!("step must be positive, got {step}"));
    }
    if spec.envelope != Envelope::Rectangular {
        return invalid("full-Hamiltonian schedule supports rectangular envelopes only");
    }
    let n = (spec.t / step).ceil().max(1.0) as usize;
    let h = spec.t / n as f64;
    let a = rwa_hamiltonian(spec, err);
    let phi = spec.phi + err.delta_phi;
    let b = ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), (-I * phi).exp() * (spec.omega_r / 2.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let bd = b.adjoint();
    let k = 2.0 * spec.omega_mw;
    let m = moments(k, h);
    let comm = |x: &ComplexMatrix, y: &ComplexMatrix| x * y - y * x;
    let (ab, abd, bbd) = (comm(&a, &b), comm(&a, &bd), comm(&b, &bd));
    let mut segments = Vec::with_capacity(n);
    for j in 0..n {
        let ph = (-I * (k * h * j as f64)).exp();
        let j1 = ph * m.j;
        let o1 = &a * c(h, 0.0) + &b * j1 + &bd * j1.conj();
        let k1 = ph * (m.inner - m.outer);
        let k3 = m.inner - m.inner.conj();
        let cm = &ab * k1 + &abd * k1.conj() + &bbd * k3;
        let g = o1 - cm * (I * 0.5);
        // Hermitian part only; the anti-Hermitian residue is rounding
        let g = (&g + g.adjoint()) * c(0.5 / h, 0.0);
        segments.push((g, h));
    }
    Ok(qcore::PiecewiseSchedule { segments, step_hint: Some(step) })
}

struct Moments {
    /// ∫₀^h e^{−iks} ds
    j: C64,
    /// ∫₀^h ds₁ ∫₀^{s₁} e^{−iks₂} ds₂, which also equals ∫₀^h ds₁ e^{−iks₁} ∫₀^{s₁} e^{iks₂} ds₂
    inner: C64,
    /// ∫₀^h s·e^{−iks} ds
    outer: C64,
}

fn moments(k: f64, h: f64) -> Moments {
    let x = k * h;
    if x.abs() < 1e-3 {
        let y = -I * x;
        let j = h * (c(1.0, 0.0) + y / 2.0 + y * y / 6.0 + y * y * y / 24.0);
        let inner = h * h * (c(0.5, 0.0) + y / 6.0 + y * y / 24.0 + y * y * y / 120.0);
        let outer = h * h * (c(0.5, 0.0) + y / 3.0 + y * y / 8.0 + y * y * y / 30.0);
        return Moments { j, inner, outer };
    }
    let e = (-I * x).exp();
    let ik = I * k;
    let j = (c(1.0, 0.0) - e) / ik;
    let inner = (c(h, 0.0) - j) / ik;
    let outer = h * e / (-ik) + j / ik;
    Moments { j, inner, outer }
}

/// Full-Hamiltonian π-pulse (or any θ) propagator in the rotating frame.
pub fn simulate_full(spec: &RotationSpec, err: &CarrierError, step: Option<f64>) -> Result<ComplexMatrix> {
    let step = step.unwrap_or_else(|| default_step(spec));
    qcore::propagate(&lab_schedule(spec, err, step)?)
}

/// Brute-force lab-frame product of midpoint-sampled exponentials, mapped to
/// the rotating frame. Needs far finer steps than [`simulate_full`].
pub fn simulate_lab_midpoint(spec: &RotationSpec, step: f64) -> Result<ComplexMatrix> {
    let sched = qcore::PiecewiseSchedule::sample(|t| lab_hamiltonian(spec, t), 0.0, spec.t, step)?;
    let u = qcore::propagate(&sched)?;
    Ok(lab_to_rotating(spec, spec.t) * u)
}

/// RWA ideal e^{−i·H_RWA·T} with no errors.
pub fn rwa_ideal(spec: &RotationSpec) -> Result<ComplexMatrix> {
    matexp_hermitian(&rwa_hamiltonian(spec, &CarrierError::default()), spec.t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwaPoint {
    pub ratio: f64,
    pub theta: f64,
    pub fidelity: f64,
}

/// Full-Hamiltonian fidelity against the RWA ideal over a (ratio, θ) grid,
/// with ratio = ω_0/ω_R and a resonant carrier.
pub fn rwa_validity_sweep(ratios: &[f64], thetas: &[f64], phi: f64, step_per_carrier: Option<usize>) -> Result<Vec<RwaPoint>> {
    let mut out = Vec::with_capacity(ratios.len() * thetas.len());
    for &ratio in ratios {
        if !(ratio >= 1.0) {
            return invalid(format!("ratio omega_0/omega_R must be >= 1, got {ratio}"));
        }
        for &theta in thetas {
            let (spec, _) = RotationSpec::rectangular(theta, phi, 1.0, ratio)?;
            let step = match step_per_carrier {
                Some(n) if n > 0 => (2.0 * PI / spec.omega_mw / n as f64).min(1e-3 / spec.omega_r),
                Some(_) => return invalid("samples per carrier cycle must be positive"),
                None => default_step(&spec),
            };
            let u = simulate_full(&spec, &CarrierError::default(), Some(step))?;
            let fidelity = qcore::process_fidelity(&rwa_ideal(&spec)?, &u)?;
            out.push(RwaPoint { ratio, theta, fidelity });
        }
    }
    Ok(out)
}

/// Fidelity in both conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityPair {
    pub exact: f64,
    pub taylor: f64,
}

/// Z-rotation phase error: cos²(Δφ/2) and 1 − Δφ²/4.
pub fn fid_z_phase(delta_phi: f64) -> FidelityPair {
    FidelityPair { exact: (delta_phi / 2.0).cos().powi(2), taylor: 1.0 - delta_phi * delta_phi / 4.0 }
}

/// Carrier frequency error α = Δω_mw/ω_R.
pub fn fid_freq_inaccuracy(theta: f64, alpha: f64) -> FidelityPair {
    let om = (1.0 + alpha * alpha).sqrt();
    let s = (theta / 2.0).sin() * (theta * om / 2.0).sin() + om * (theta / 2.0).cos() * (theta * om / 2.0).cos();
    FidelityPair { exact: (s / om).powi(2), taylor: 1.0 - 0.5 * alpha * alpha * (1.0 - theta.cos()) }
}

/// Rotation-axis phase error Δφ.
pub fn fid_phase_inaccuracy(theta: f64, delta_phi: f64) -> FidelityPair {
    let s2 = (theta / 2.0).sin().powi(2);
    let c2 = (theta / 2.0).cos().powi(2);
    FidelityPair {
        exact: (delta_phi.cos() * s2 + c2).powi(2),
        taylor: 1.0 - 0.5 * delta_phi * delta_phi * (1.0 - theta.cos()),
    }
}

/// Relative Rabi-amplitude error.
pub fn fid_amplitude_inaccuracy(theta: f64, rel: f64) -> FidelityPair {
    FidelityPair { exact: (theta * rel / 2.0).cos().powi(2), taylor: 1.0 - theta * theta * rel * rel / 4.0 }
}

/// Relative duration error; same form as the amplitude error.
pub fn fid_duration_inaccuracy(theta: f64, rel: f64) -> FidelityPair {
    fid_amplitude_inaccuracy(theta, rel)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaticKind {
    ZPhase,
    Frequency,
    Phase,
    Amplitude,
    Duration,
}

impl StaticKind {
    pub const ALL: [StaticKind; 5] = [StaticKind::ZPhase, StaticKind::Frequency, StaticKind::Phase, StaticKind::Amplitude, StaticKind::Duration];
}

/// Closed-form static-error fidelity.
pub fn fid_static(kind: StaticKind, theta: f64, x: f64) -> FidelityPair {
    match kind {
        StaticKind::ZPhase => fid_z_phase(x),
        StaticKind::Frequency => fid_freq_inaccuracy(theta, x),
        StaticKind::Phase => fid_phase_inaccuracy(theta, x),
        StaticKind::Amplitude => fid_amplitude_inaccuracy(theta, x),
        StaticKind::Duration => fid_duration_inaccuracy(theta, x),
    }
}

/// Ideal and perturbed unitaries built from the RWA Hamiltonian, for checking
/// the closed forms against direct propagation.
pub fn static_error_unitaries(kind: StaticKind, theta: f64, x: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let wr = 1.0;
    if kind == StaticKind::ZPhase {
        let u = matexp_hermitian(&(sigma_z() * c(0.5, 0.0)), x)?;
        return Ok((identity(2), u));
    }
    let (spec, _) = RotationSpec::rectangular(theta, 0.0, wr, 100.0)?;
    let ideal = matexp_hermitian(&rwa_hamiltonian(&spec, &CarrierError::default()), spec.t)?;
    let mut err = CarrierError::default();
    let mut real_spec = spec;
    match kind {
        StaticKind::Frequency => err.delta_omega = x * wr,
        StaticKind::Phase => err.delta_phi = x,
        StaticKind::Amplitude => real_spec.omega_r = wr * (1.0 + x),
        StaticKind::Duration => real_spec.t = spec.t * (1.0 + x),
        StaticKind::ZPhase => unreachable!(),
    }
    let real = matexp_hermitian(&rwa_hamiltonian(&real_spec, &err), real_spec.t)?;
    Ok((ideal, real))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuasiStaticKind {
    Phase,
    Amplitude,
    Duration,
    Frequency,
}

/// Expected fidelity for a Gaussian static error with standard deviation σ
/// (radians for phase, relative for amplitude/duration, Δω/ω_R for frequency).
pub fn quasi_static_expectation(kind: QuasiStaticKind, theta: f64, sigma: f64) -> Result<f64> {
    if sigma < 0.0 {
        return invalid(format!("sigma must be non-negative, got {sigma}"));
    }
    let s2 = sigma * sigma;
    Ok(match kind {
        QuasiStaticKind::Phase => {
            0.5 * (1.0 + (-2.0 * s2).exp()) * (theta / 2.0).sin().powi(4)
                + (theta / 2.0).cos().powi(4)
                + 0.5 * (-s2 / 2.0).exp() * theta.sin().powi(2)
        }
        QuasiStaticKind::Amplitude | QuasiStaticKind::Duration => 0.5 + 0.5 * (-s2 * theta * theta / 2.0).exp(),
        QuasiStaticKind::Frequency => qcore::gaussian_expectation(2, 0.5 * (1.0 - theta.cos()), sigma)?,
    })
}

pub fn filter_response(kind: FilterKind, theta: f64, omega_r: f64) -> Result<FilterResponse> {
    FilterResponse::new(kind, theta, omega_r)
}

/// Crosstalk on an unaddressed qubit detuned by α·ω_R, driven at β·ω_R.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdmaScenario {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub envelope: Envelope,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdmaResult {
    pub f_raw: f64,
    pub f_z_corrected: f64,
    /// 1 − (β²/α²)·sin²(θα/2).
    pub f_z_corrected_approx: f64,
    /// 1 − β²/α².
    pub f_z_corrected_bound: f64,
    pub decomposition: PauliDecomposition,
}

fn fdma_hamiltonian(alpha: f64, beta: f64, g: f64) -> ComplexMatrix {
    (sigma_z() * c(alpha, 0.0) + sigma_x() * c(beta * g, 0.0)) * c(0.5, 0.0)
}

/// Gaussian σ_t (in units of 1/ω_R) giving area θ within ±3σ_t at unit peak.
pub fn gaussian_sigma_for_theta(theta: f64) -> f64 {
    theta.abs() / ((2.0 * PI).sqrt() * libm::erf(3.0 / 2f64.sqrt()))
}

fn fdma_unitaries(s: &FdmaScenario, steps: usize) -> Result<(ComplexMatrix, ComplexMatrix)> {
    match s.envelope {
        Envelope::Rectangular => {
            let t = s.theta.abs();
            let ideal = matexp_hermitian(&fdma_hamiltonian(s.alpha, 0.0, 0.0), t)?;
            let real = matexp_hermitian(&fdma_hamiltonian(s.alpha, s.beta, 1.0), t)?;
            Ok((ideal, real))
        }
        Envelope::Gaussian { sigma_t } => {
            let sig = if sigma_t > 0.0 { sigma_t } else { gaussian_sigma_for_theta(s.theta) };
            let total = 6.0 * sig;
            let norm = s.theta.abs() / (sig * (2.0 * PI).sqrt() * libm::erf(3.0 / 2f64.sqrt()));
            let sched = qcore::PiecewiseSchedule::sample(
                |t| {
                    let x = (t - 3.0 * sig) / sig;
                    fdma_hamiltonian(s.alpha, s.beta, norm * (-0.5 * x * x).exp())
                },
                0.0,
                total,
                total / steps as f64,
            )?;
            let ideal = matexp_hermitian(&fdma_hamiltonian(s.alpha, 0.0, 0.0), total)?;
            Ok((ideal, qcore::propagate(&sched)?))
        }
    }
}

/// Raw and Z-corrected fidelity of the unaddressed qubit, with the Pauli
/// decomposition of U_ideal†·U_real.
pub fn fdma_unaddressed(s: &FdmaScenario) -> Result<FdmaResult> {
    if s.alpha < 0.0 || s.beta < 0.0 {
        return invalid(format!("alpha and beta must be non-negative (got {}, {})", s.alpha, s.beta));
    }
    if s.alpha == 0.0 && s.beta == 0.0 {
        return invalid("alpha = beta = 0 describes no crosstalk scenario");
    }
    let (ideal, real) = fdma_unitaries(s, 4000)?;
    let d = qcore::pauli_decompose(&(ideal.adjoint() * real))?;
    let ratio2 = if s.alpha > 0.0 { (s.beta / s.alpha).powi(2) } else { f64::INFINITY };
    Ok(FdmaResult {
        f_raw: d.i.norm_sqr(),
        f_z_corrected: d.i.norm_sqr() + d.z.norm_sqr(),
        f_z_corrected_approx: 1.0 - ratio2 * (s.theta * s.alpha / 2.0).sin().powi(2),
        f_z_corrected_bound: 1.0 - ratio2,
        decomposition: d,
    })
}

/// Closed-form Tr(U_ideal†U_real)/2 for rectangular envelopes (real valued).
pub fn fdma_trace_closed_form(alpha: f64, beta: f64, theta: f64) -> C64 {
    let om = (alpha * alpha + beta * beta).sqrt();
    if om == 0.0 {
        return c(1.0, 0.0);
    }
    let t = theta.abs();
    let re = (t * alpha / 2.0).cos() * (t * om / 2.0).cos() + alpha / om * (t * alpha / 2.0).sin() * (t * om / 2.0).sin();
    c(re, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attenuation {
    /// β at the requested α; None at a notch where any β passes to first order.
    pub beta_max: Option<f64>,
    /// sqrt(1 − F)·α, valid for every θ.
    pub beta_bound: f64,
}

/// Largest unaddressed drive β meeting F_target after Z-correction.
pub fn fdma_required_attenuation(alpha: f64, theta: f64, f_target: f64) -> Result<Attenuation> {
    if !(0.0..=1.0).contains(&f_target) || alpha < 0.0 {
        return invalid(format!("need 0 <= F <= 1 and alpha >= 0 (got F = {f_target}, alpha = {alpha})"));
    }
    let r = (1.0 - f_target).sqrt();
    let s = (theta * alpha / 2.0).sin().abs();
    let beta_max = if s < 1e-12 { None } else { Some(r * alpha / s) };
    Ok(Attenuation { beta_max, beta_bound: r * alpha })
}

/// Smallest α with the conservative bound 1 − β²/α² ≥ F_target.
pub fn fdma_min_spacing(beta: f64, f_target: f64) -> f64 {
    beta / (1.0 - f_target).sqrt()
}

/// Idle qubit next to an active drive line.
#[derive(Debug, Clone, PartialEq)]
pub struct IdleScenario {
    pub t_nop: f64,
    pub delta_omega: f64,
    /// Rabi frequency of the residual tone.
    pub omega_spur: f64,
    /// Residual drive-line noise as Rabi-frequency noise, (rad/s)²/Hz.
    pub s_drive: Option<PowerSpectrum>,
    pub omega_0: f64,
    /// Drive strength that normalizes the idle filter.
    pub omega_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdleBreakdown {
    pub freq_offset: FidelityPair,
    pub spur: FidelityPair,
    /// Infidelity from drive-line noise: quadrature and brick wall.
    pub drive_noise: f64,
    pub drive_noise_brickwall: f64,
}

pub fn idle_fidelity(s: &IdleScenario, omega_min: f64) -> Result<IdleBreakdown> {
    if s.t_nop < 0.0 {
        return invalid(format!("T_nop must be non-negative, got {}", s.t_nop));
    }
    let pair = |x: f64| FidelityPair { exact: (x * s.t_nop / 2.0).cos().powi(2), taylor: 1.0 - 0.25 * x * x * s.t_nop * s.t_nop };
    let (noise_q, noise_b) = match &s.s_drive {
        Some(sp) if s.t_nop > 0.0 && !sp.is_zero() => {
            let h = FilterResponse::idle(s.t_nop, s.omega_r)?.with_center(s.omega_0);
            (noise::filtered_infidelity(sp, &h, s.omega_r, omega_min)?, noise::brickwall_infidelity(sp, &h, s.omega_r, omega_min)?)
        }
        _ => (0.0, 0.0),
    };
    Ok(IdleBreakdown { freq_offset: pair(s.delta_omega), spur: pair(s.omega_spur), drive_noise: noise_q, drive_noise_brickwall: noise_b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::process_fidelity;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn rwa_hamiltonian_examples() {
        let (spec, _) = RotationSpec::rectangular(PI, 0.0, 2.0, 50.0).unwrap();
        let h = rwa_hamiltonian(&spec, &CarrierError::default());
        assert!((h.clone() - sigma_x()).norm() < 1e-15);
        let mut s2 = spec;
        s2.phi = PI / 2.0;
        let h = rwa_hamiltonian(&s2, &CarrierError::default());
        assert!((h + sigma_y()).norm() < 1e-15);
        let err = CarrierError { delta_omega: 1.5, ..Default::default() };
        let (vals, _) = qcore::eigh(&rwa_hamiltonian(&spec, &err)).unwrap();
        let g = (1.5f64.powi(2) + 4.0).sqrt() / 2.0;
        assert!((vals[1] - g).abs() < 1e-12 && (vals[0] + g).abs() < 1e-12);
    }

    #[test]
    fn lab_hamiltonian_at_drive_zero() {
        let (spec, _) = RotationSpec::rectangular(PI, 0.0, 1.0, 40.0).unwrap();
        let t = (PI / 2.0) / spec.omega_mw;
        let h = lab_hamiltonian(&spec, t);
        assert!((h - sigma_z() * c(-20.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn matexp_matches_frequency_closed_form() {
        let (spec, _) = RotationSpec::rectangular(PI, 0.0, 1.0, 1e3).unwrap();
        let err = CarrierError { delta_omega: 0.1, ..Default::default() };
        let u = matexp_hermitian(&rwa_hamiltonian(&spec, &err), spec.t).unwrap();
        let f = process_fidelity(&rwa_ideal(&spec).unwrap(), &u).unwrap();
        assert!((f - fid_freq_inaccuracy(PI, 0.1).exact).abs() < 1e-8);
    }

    #[test]
    fn closed_forms_match_propagation() {
        for kind in StaticKind::ALL {
            for &th in &[PI, PI / 2.0, -1.1, 0.3] {
                for &x in &[0.0, 0.003, -0.02, 0.05] {
                    let (a, b) = static_error_unitaries(kind, th, x).unwrap();
                    let f = process_fidelity(&a, &b).unwrap();
                    assert!((f - fid_static(kind, th, x).exact).abs() < 1e-10, "{kind:?} θ={th} x={x}");
                }
            }
        }
    }

    #[test]
    fn table_static_rows() {
        assert!(rel(1.0 - fid_freq_inaccuracy(PI, 0.011).taylor, 1.21e-4) < 1e-9);
        assert!((fid_freq_inaccuracy(PI, 0.03).exact - 0.999).abs() < 2e-4);
        assert!((fid_phase_inaccuracy(PI, 0.03).exact - 0.9991).abs() < 1e-4);
        assert!(rel(1.0 - fid_amplitude_inaccuracy(PI, 0.007).taylor, 1.21e-4) < 2e-3);
        assert!((fid_amplitude_inaccuracy(PI, 0.02).exact - 0.999).abs() < 2e-5);
        let z = fid_z_phase(0.64f64.to_radians());
        assert!(rel(1.0 - z.exact, 31e-6) < 0.02);
        let z = fid_z_phase(0.0112);
        assert!((z.exact - z.taylor).abs() < 1e-8);
        assert_eq!(fid_z_phase(0.0).exact, 1.0);
    }

    #[test]
    fn taylor_tracks_exact_at_small_errors() {
        for kind in StaticKind::ALL {
            for &th in &[PI, PI / 2.0] {
                let p = fid_static(kind, th, 0.01);
                let (ie, it) = (1.0 - p.exact, 1.0 - p.taylor);
                assert!(((ie - it) / ie).abs() < 1e-4, "{kind:?} θ={th}: {ie} vs {it}");
            }
        }
    }

    #[test]
    fn quasi_static_limits() {
        for k in [QuasiStaticKind::Phase, QuasiStaticKind::Amplitude, QuasiStaticKind::Duration, QuasiStaticKind::Frequency] {
            assert!((quasi_static_expectation(k, PI, 0.0).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((quasi_static_expectation(QuasiStaticKind::Amplitude, PI, 1e3).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fdma_examples() {
        let r = fdma_unaddressed(&FdmaScenario { alpha: 10.0, beta: 0.0, theta: PI, envelope: Envelope::Rectangular }).unwrap();
        assert!((r.f_raw - 1.0).abs() < 1e-12);
        let r = fdma_unaddressed(&FdmaScenario { alpha: 10.0, beta: 1.0, theta: PI, envelope: Envelope::Rectangular }).unwrap();
        let d = r.decomposition;
        assert!(d.z.norm_sqr() > d.x.norm_sqr() + d.y.norm_sqr());
        assert!((d.norm_sqr() - 1.0).abs() < 1e-10);
        let tr = fdma_trace_closed_form(10.0, 1.0, PI);
        assert!((tr.norm_sqr() - r.f_raw).abs() < 1e-12);
        assert!((fdma_min_spacing(1.0, 0.999) - 31.6).abs() < 0.05);
        let r = fdma_unaddressed(&FdmaScenario { alpha: 1000.0, beta: 1.0, theta: PI, envelope: Envelope::Rectangular }).unwrap();
        assert!(((1.0 - r.f_z_corrected_bound) - 1e-6).abs() < 1e-15);
        assert!(r.f_z_corrected >= r.f_z_corrected_bound - 1e-12);
        assert!(fdma_unaddressed(&FdmaScenario { alpha: 0.0, beta: 0.0, theta: PI, envelope: Envelope::Rectangular }).is_err());
    }

    #[test]
    fn fdma_attenuation() {
        let a = fdma_required_attenuation(10.0, PI, 1.0).unwrap();
        assert_eq!(a.beta_bound, 0.0);
        let a = fdma_required_attenuation(10.0, PI, 0.999).unwrap();
        assert!((a.beta_bound - 0.316).abs() < 1e-3);
        // α = 2 at θ = π puts sin(θα/2) on a notch
        assert!(fdma_required_attenuation(2.0, PI, 0.999).unwrap().beta_max.is_none());
    }

    #[test]
    fn fdma_gaussian_runs() {
        let g = fdma_unaddressed(&FdmaScenario { alpha: 10.0, beta: 1.0, theta: PI, envelope: Envelope::Gaussian { sigma_t: 0.0 } }).unwrap();
        let r = fdma_unaddressed(&FdmaScenario { alpha: 10.0, beta: 1.0, theta: PI, envelope: Envelope::Rectangular }).unwrap();
        // smooth envelopes leak less than rectangular ones away from notches
        assert!(1.0 - g.f_z_corrected < 1.0 - r.f_z_corrected);
    }

    #[test]
    fn idle_examples() {
        let zero = IdleScenario { t_nop: 500e-9, delta_omega: 0.0, omega_spur: 0.0, s_drive: None, omega_0: 0.0, omega_r: 1.0 };
        let b = idle_fidelity(&zero, 0.0).unwrap();
        assert_eq!((b.freq_offset.exact, b.spur.exact, b.drive_noise), (1.0, 1.0, 0.0));
        let s = IdleScenario { delta_omega: 2.0 * PI * 11e3, ..zero.clone() };
        let inf = 1.0 - idle_fidelity(&s, 0.0).unwrap().freq_offset.taylor;
        assert!((inf - 3.0e-4).abs() < 0.1 * 3.0e-4, "{inf}");
        let wr = 2.0 * PI * 1e6;
        let s = IdleScenario { t_nop: 10.0 * PI / wr, omega_spur: wr * noise::dbc_to_amplitude(-54.0), ..zero };
        assert!((idle_fidelity(&s, 0.0).unwrap().spur.exact - 0.999).abs() < 2e-5);
    }

    #[test]
    fn full_hamiltonian_pi_pulse() {
        let (spec, _) = RotationSpec::rectangular(PI, 0.0, 1.0, 1000.0).unwrap();
        let u = simulate_full(&spec, &CarrierError::default(), Some(2.0 * PI / 1000.0 / 10.0)).unwrap();
        let f = process_fidelity(&rwa_ideal(&spec).unwrap(), &u).unwrap();
        assert!(f >= 0.9999997, "{f}");
        let pts = rwa_validity_sweep(&[1.0, 1e4], &[PI], 0.0, None).unwrap();
        assert!(1.0 - pts[0].fidelity > 1e-2);
        let inf = 1.0 - pts[1].fidelity;
        assert!(inf < 1e-7 && inf > 0.32e-9 && inf < 1.28e-9, "{inf}");
    }

    #[test]
    fn magnus_step_agrees_with_fine_midpoint() {
        // independent path: plain lab-frame midpoint product at a very fine step
        let (spec, _) = RotationSpec::rectangular(PI / 2.0, 0.4, 1.0, 5.0).unwrap();
        let a = simulate_full(&spec, &CarrierError::default(), None).unwrap();
        let b = simulate_lab_midpoint(&spec, spec.t / 200_000.0).unwrap();
        assert!(1.0 - process_fidelity(&a, &b).unwrap() < 1e-9);
    }

    #[test]
    fn clamp() {
        assert_eq!(clamp_angle(1.0), (1.0, false));
        let (t, r) = clamp_angle(3.0 * PI / 2.0);
        assert!(r && (t + PI / 2.0).abs() < 1e-12);
    }
}
