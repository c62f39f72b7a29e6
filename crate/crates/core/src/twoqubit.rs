//! Double-dot two-qubit gates: Hamiltonian, eigenenergies, C-phase and
//! exchange unitaries, control-error fidelities and idle leakage of the
//! exchange interaction.
//!
//! Basis order is [↑↑, ↑↓, ↓↑, ↓↓, S(0,2), S(2,0)].

use std::f64::consts::{PI, SQRT_2};

use crate::error::{invalid, numerical, Result};
use crate::qcore::{self, c, from_real, ComplexMatrix, C64, I};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleDotParams {
    pub omega_0: f64,
    pub delta_omega_0: f64,
    pub t0: f64,
    pub u: f64,
    pub epsilon: f64,
}

impl DoubleDotParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.u > 0.0) {
            return invalid(format!("charging energy U must be positive, got {}", self.u));
        }
        if !(self.t0 >= 0.0) {
            return invalid(format!("tunnel coupling t0 must be non-negative, got {}", self.t0));
        }
        if !(self.epsilon.abs() < self.u) {
            return invalid(format!("|epsilon| = {} must stay below U = {} for gate operation", self.epsilon.abs(), self.u));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// δω_0 = 0
    DeltaZero,
    /// δω_0 pinned to the nominal ω_op
    DeltaEqOmegaOp,
    /// δω_0 = √2·t0
    DeltaEqSqrt2T0,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::DeltaZero, Regime::DeltaEqOmegaOp, Regime::DeltaEqSqrt2T0];

    /// δω_0 this regime implies for the nominal parameters.
    pub fn delta_omega_0(self, p: &DoubleDotParams) -> f64 {
        match self {
            Regime::DeltaZero => 0.0,
            Regime::DeltaEqOmegaOp => omega_op(p),
            Regime::DeltaEqSqrt2T0 => SQRT_2 * p.t0,
        }
    }

    /// |φ_Z,B| / θ_cz.
    pub fn phi_b_fraction(self) -> f64 {
        match self {
            Regime::DeltaZero => 1.0,
            Regime::DeltaEqOmegaOp => 1.0 / SQRT_2,
            Regime::DeltaEqSqrt2T0 => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    CPhase,
    Exchange,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitGateSpec {
    pub kind: GateKind,
    pub theta: f64,
    pub regime: Regime,
    pub t: f64,
}

impl TwoQubitGateSpec {
    pub fn validate(&self) -> Result<()> {
        if self.kind == GateKind::Exchange && self.regime != Regime::DeltaZero {
            return invalid("the exchange gate needs delta_omega_0 = 0");
        }
        Ok(())
    }
}

pub fn hamiltonian6(p: &DoubleDotParams) -> ComplexMatrix {
    let (w, d, t, u, e) = (p.omega_0, p.delta_omega_0, p.t0, p.u, p.epsilon);
    #[rustfmt::skip]
    let rows = [
        -w,  0.0,       0.0,        0.0, 0.0,   0.0,
        0.0, d / 2.0,   0.0,        0.0, t,     t,
        0.0, 0.0,       -d / 2.0,   0.0, -t,    -t,
        0.0, 0.0,       0.0,        w,   0.0,   0.0,
        0.0, t,         -t,         0.0, u - e, 0.0,
        0.0, t,         -t,         0.0, 0.0,   u + e,
    ];
    from_real(6, &rows)
}

/// 4t0²U/(U² − ε²).
pub fn omega_op(p: &DoubleDotParams) -> f64 {
    4.0 * p.t0 * p.t0 * p.u / (p.u * p.u - p.epsilon * p.epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    Exact6x6,
    Approx,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    pub lambdas: [f64; 4],
    pub omega_op: f64,
    pub method: EigenMethod,
    pub warnings: Vec<String>,
}

/// Coefficients of the printed quartic for the spin-flip branches, highest
/// power first, in the variable x = 2ω_λ.
pub fn quartic_coefficients(p: &DoubleDotParams) -> [f64; 5] {
    let (d2, e2, t2, u) = (p.delta_omega_0.powi(2), p.epsilon.powi(2), p.t0.powi(2), p.u);
    [1.0, -4.0 * u, -d2 - 4.0 * e2 - 16.0 * t2 + 4.0 * u * u, 4.0 * u * (d2 + 8.0 * t2), 4.0 * d2 * (e2 - u * u)]
}

/// |q(2λ)| relative to the size of its terms evaluated at max(|2λ|, 2ω_op).
/// The floor keeps the measure meaningful for the root at λ = 0 when δω_0 = 0.
pub fn quartic_relative_residual(p: &DoubleDotParams, lambda: f64) -> f64 {
    let a = quartic_coefficients(p);
    let x = 2.0 * lambda;
    let s = x.abs().max(2.0 * omega_op(p));
    let value = a.iter().fold(0.0, |acc, k| acc * x + k);
    let scale = a.iter().enumerate().map(|(k, v)| v.abs() * s.powi(4 - k as i32)).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        value.abs() / scale
    }
}

pub fn eigenenergies(p: &DoubleDotParams, method: EigenMethod) -> Result<EigenSolution> {
    p.validate()?;
    let wop = omega_op(p);
    let mut warnings = vec![];
    let lambdas = match method {
        EigenMethod::Exact6x6 => {
            let (l2, l3) = spin_flip_branches(p)?;
            [-p.omega_0, l2, l3, p.omega_0]
        }
        EigenMethod::Approx => {
            if p.t0 / p.u > 0.05 {
                warnings.push(format!("t0/U = {:.3} is not small; the closed forms lose accuracy", p.t0 / p.u));
            }
            let d = p.delta_omega_0;
            let root = (d * d + wop * wop).sqrt();
            let (hi, lo) = ((-wop + root) / 2.0, (-wop - root) / 2.0);
            let (l2, l3) = if d >= 0.0 { (hi, lo) } else { (lo, hi) };
            [-p.omega_0, l2, l3, p.omega_0]
        }
    };
    Ok(EigenSolution { lambdas, omega_op: wop, method, warnings })
}

/// Spin-like eigenvalues of the {↑↓, ↓↑, S(0,2), S(2,0)} block. λ₂ is the
/// branch connected to ↑↓ (the upper one for δω_0 ≥ 0).
fn spin_flip_branches(p: &DoubleDotParams) -> Result<(f64, f64)> {
    let h = hamiltonian6(p);
    let idx = [1usize, 2, 4, 5];
    let block = ComplexMatrix::from_fn(4, 4, |r, c_| h[(idx[r], idx[c_])]);
    let (vals, vecs) = qcore::eigh(&block)?;
    let mut weights: Vec<(f64, usize)> = (0..4).map(|k| (vecs[(0, k)].norm_sqr() + vecs[(1, k)].norm_sqr(), k)).collect();
    weights.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (w_spin, w_charge) = (weights[1].0, weights[2].0);
    if w_spin < 0.75 || w_spin - w_charge < 0.5 {
        return numerical(format!(
            "spin branch selection is ambiguous (spin weights {:.3} vs {:.3}); epsilon is too close to U",
            w_spin, w_charge
        ));
    }
    let a = vals[weights[0].1];
    let b = vals[weights[1].1];
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    Ok(if p.delta_omega_0 >= 0.0 { (hi, lo) } else { (lo, hi) })
}

/// Bare Larmor energies of the spin states, removed in the rotating frame.
pub fn larmor_energies(p: &DoubleDotParams) -> [f64; 4] {
    [-p.omega_0, p.delta_omega_0 / 2.0, -p.delta_omega_0 / 2.0, p.omega_0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct CPhaseResult {
    pub u_lab: ComplexMatrix,
    pub u_rot: ComplexMatrix,
    pub phi_za: f64,
    pub phi_zb: f64,
    pub theta_cz: f64,
}

/// Ideal adiabatic C-phase: diagonal phases from the eigenenergies.
pub fn cphase_from_eigen(p: &DoubleDotParams, eig: &EigenSolution, t: f64) -> CPhaseResult {
    let l = eig.lambdas;
    let e0 = larmor_energies(p);
    let u_lab = qcore::diag(&l.map(|x| (-I * (x * t)).exp()));
    let u_rot = qcore::diag(&[0, 1, 2, 3].map(|k| (-I * ((l[k] - e0[k]) * t)).exp()));
    let phi_za = t * (l[1] - p.delta_omega_0 / 2.0);
    let phi_zb = t * (l[2] + p.delta_omega_0 / 2.0);
    CPhaseResult { u_lab, u_rot, phi_za, phi_zb, theta_cz: -(phi_za + phi_zb) }
}

pub fn cphase_unitary(p: &DoubleDotParams, t: f64, method: EigenMethod) -> Result<CPhaseResult> {
    let eig = eigenenergies(p, method)?;
    Ok(cphase_from_eigen(p, &eig, t))
}

/// diag(1, 1, 1, e^{−iθ}) after the two software Z-corrections.
pub fn cz_ideal(theta: f64) -> ComplexMatrix {
    qcore::diag(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), (-I * theta).exp()])
}

/// The Z-corrections that turn the rotating-frame C-phase into diag(1, 1, 1, e^{−iθ}).
pub fn z_corrections(phi_za: f64, phi_zb: f64) -> ComplexMatrix {
    qcore::diag(&[c(1.0, 0.0), (I * phi_za).exp(), (I * phi_zb).exp(), (I * (phi_za + phi_zb)).exp()])
}

/// Exchange gate in the rotating frame with θ_J = ω_op·T.
pub fn exchange_matrix(theta_j: f64) -> ComplexMatrix {
    let e = (I * theta_j).exp();
    let one = c(1.0, 0.0);
    let z = c(0.0, 0.0);
    let (a, b) = ((one + e) / 2.0, (one - e) / 2.0);
    ComplexMatrix::from_row_slice(4, 4, &[one, z, z, z, z, a, b, z, z, b, a, z, z, z, z, one])
}

pub fn exchange_unitary(p: &DoubleDotParams, t: f64) -> Result<ComplexMatrix> {
    p.validate()?;
    if p.delta_omega_0 != 0.0 {
        return invalid(format!("the exchange closed form needs delta_omega_0 = 0, got {}", p.delta_omega_0));
    }
    Ok(exchange_matrix(omega_op(p) * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateErrorKind {
    Duration,
    Tunnel,
    /// Detuning error at the gate's operating ε (finite detuning form unless ε = 0).
    Detuning,
}

/// Relative (ΔT/T, Δt0/t0) or absolute-over-U (Δε/U) control error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateError {
    pub kind: GateErrorKind,
    pub value: f64,
}

/// Table coefficient c in F = 1 − c·θ²·(...) for a gate, regime and error.
pub fn table_coefficient(kind: GateKind, regime: Regime, err: GateErrorKind, eps_zero: bool) -> f64 {
    let col = match (kind, regime) {
        (GateKind::Exchange, _) | (GateKind::CPhase, Regime::DeltaZero) => 0,
        (GateKind::CPhase, Regime::DeltaEqOmegaOp) => 1,
        (GateKind::CPhase, Regime::DeltaEqSqrt2T0) => 2,
    };
    let row: [f64; 3] = match (err, eps_zero) {
        (GateErrorKind::Duration, _) => [3.0 / 16.0, (7.0 - 4.0 * SQRT_2) / 16.0, 1.0 / 16.0],
        (GateErrorKind::Tunnel, _) => [0.75, 0.5, 0.25],
        (GateErrorKind::Detuning, false) => [0.75, 0.5, 0.25],
        (GateErrorKind::Detuning, true) => [3.0 / 16.0, 1.0 / 8.0, 1.0 / 16.0],
    };
    row[col]
}

/// Taylor curvature c and expansion order such that F ≈ 1 − c·x^order with
/// x the error value.
pub fn taylor_curvature(spec: &TwoQubitGateSpec, p: &DoubleDotParams, err: GateErrorKind) -> (f64, u32) {
    let eps_zero = p.epsilon == 0.0;
    let coef = table_coefficient(spec.kind, spec.regime, err, eps_zero) * spec.theta * spec.theta;
    match err {
        GateErrorKind::Duration | GateErrorKind::Tunnel => (coef, 2),
        GateErrorKind::Detuning if eps_zero => (coef, 4),
        GateErrorKind::Detuning => {
            let x = p.epsilon / p.u;
            (coef * (x / (1.0 - x * x)).powi(2), 2)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateFidelity {
    pub taylor: f64,
    pub exact: f64,
}

fn perturbed(p: &DoubleDotParams, t: f64, e: &GateError) -> (DoubleDotParams, f64) {
    let mut q = *p;
    let mut tt = t;
    match e.kind {
        GateErrorKind::Duration => tt = t * (1.0 + e.value),
        GateErrorKind::Tunnel => q.t0 = p.t0 * (1.0 + e.value),
        GateErrorKind::Detuning => q.epsilon = p.epsilon + e.value * p.u,
    }
    (q, tt)
}

/// C-phase fidelity from the phase differences ΔA, ΔB.
pub fn cphase_phase_fidelity(da: f64, db: f64) -> f64 {
    3.0 / 8.0 + (da - db).cos() / 8.0 + 0.25 * da.cos() + 0.25 * db.cos()
}

/// Exchange fidelity for an angle error Δθ_J.
pub fn exchange_angle_fidelity(dtheta: f64) -> f64 {
    5.0 / 8.0 + 3.0 / 8.0 * dtheta.cos()
}

/// Nominal parameters with δω_0 fixed by the regime, and T from θ = ω_op·T.
pub fn operating_point(spec: &TwoQubitGateSpec, base: &DoubleDotParams) -> Result<(DoubleDotParams, f64)> {
    spec.validate()?;
    base.validate()?;
    let mut p = *base;
    p.delta_omega_0 = spec.regime.delta_omega_0(base);
    let t = spec.theta / omega_op(&p);
    Ok((p, t))
}

/// Table form and cosine form of a control-error fidelity.
pub fn fid_gate_inaccuracy(spec: &TwoQubitGateSpec, base: &DoubleDotParams, err: &GateError) -> Result<GateFidelity> {
    let (p, t) = operating_point(spec, base)?;
    if err.kind == GateErrorKind::Detuning && p.epsilon.abs() + (err.value * p.u).abs() >= p.u {
        return invalid("|epsilon| + |delta epsilon| must stay below U");
    }
    let (c, order) = taylor_curvature(spec, &p, err.kind);
    let taylor = 1.0 - c * err.value.abs().powi(order as i32);
    let (q, tq) = perturbed(&p, t, err);
    let exact = match spec.kind {
        GateKind::Exchange => exchange_angle_fidelity(omega_op(&q) * tq - omega_op(&p) * t),
        GateKind::CPhase => {
            let a = cphase_unitary(&p, t, EigenMethod::Approx)?;
            let b = cphase_unitary(&q, tq, EigenMethod::Approx)?;
            cphase_phase_fidelity(a.phi_za - b.phi_za, a.phi_zb - b.phi_zb)
        }
    };
    Ok(GateFidelity { taylor, exact })
}

/// Expected fidelity under a Gaussian quasi-static error of std-dev σ.
pub fn fid_gate_noise(spec: &TwoQubitGateSpec, base: &DoubleDotParams, kind: GateErrorKind, sigma: f64) -> Result<f64> {
    let (p, _) = operating_point(spec, base)?;
    let (c, order) = taylor_curvature(spec, &p, kind);
    qcore::gaussian_expectation(order, c, sigma)
}

/// Idle coefficient for ω_op,off²·T_nop².
pub fn idle_coefficient(kind: GateKind, regime: Regime) -> f64 {
    table_coefficient(kind, regime, GateErrorKind::Duration, false)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdleFidelity {
    pub taylor: f64,
    pub exact: f64,
}

pub fn fid_idle(kind: GateKind, regime: Regime, omega_op_off: f64, t_nop: f64) -> IdleFidelity {
    let th = omega_op_off * t_nop;
    let taylor = 1.0 - idle_coefficient(kind, regime) * th * th;
    let exact = match kind {
        GateKind::Exchange => exchange_angle_fidelity(th),
        GateKind::CPhase => {
            let fb = regime.phi_b_fraction();
            cphase_phase_fidelity(-(1.0 - fb) * th, -fb * th)
        }
    };
    IdleFidelity { taylor, exact }
}

/// ω_op/ω_op,off needed for an idle fidelity F over `n_gates` π-gate durations.
pub fn idle_reduction_factor(kind: GateKind, regime: Regime, f_target: f64, n_gates: f64) -> f64 {
    n_gates * PI * (idle_coefficient(kind, regime) / (1.0 - f_target)).sqrt()
}

/// Process fidelity between the simulated nominal gate and the simulated gate
/// with one control error applied. The C-phase gate uses adiabatic transport,
/// the exchange gate the spin-sudden evolution.
pub fn simulated_error_fidelity(spec: &TwoQubitGateSpec, base: &DoubleDotParams, err: &GateError) -> Result<f64> {
    let (p, t) = operating_point(spec, base)?;
    if err.kind == GateErrorKind::Detuning && p.epsilon.abs() + (err.value * p.u).abs() >= p.u {
        return invalid("|epsilon| + |delta epsilon| must stay below U");
    }
    let pulse = if spec.kind == GateKind::Exchange { GatePulse::SpinSudden } else { GatePulse::Adiabatic };
    let (q, tq) = perturbed(&p, t, err);
    let un = simulate_gate(&p, &pulse, t)?.u;
    let up = simulate_gate(&q, &pulse, tq)?.u;
    qcore::process_fidelity(&un, &up)
}

/// One constant-control piece of a gate pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSegment {
    pub t0: f64,
    pub epsilon: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GatePulse {
    /// Controls switched on instantly for T, then off.
    Instant,
    /// Ideal adiabatic transport: the operation is e^{−iDT} in the eigenbasis.
    Adiabatic,
    /// Charge-adiabatic but sudden for the spin: evolution under the four
    /// spin-like dressed eigenstates, as for the exchange gate.
    SpinSudden,
    /// Explicit control waveform; T is ignored.
    Segments(Vec<ControlSegment>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedGate {
    /// Rotating-frame operation on the spin sector (not exactly unitary when
    /// population leaks into the charge states).
    pub u: ComplexMatrix,
    pub leakage: f64,
    pub warnings: Vec<String>,
}

/// Linear t0 ramp up, hold, and ramp down at fixed ε.
pub fn linear_ramp_pulse(p: &DoubleDotParams, ramp: f64, hold: f64, steps: usize) -> Vec<ControlSegment> {
    let n = steps.max(1);
    let dt = ramp / n as f64;
    let mut v = Vec::with_capacity(2 * n + 1);
    for k in 0..n {
        v.push(ControlSegment { t0: p.t0 * (k as f64 + 0.5) / n as f64, epsilon: p.epsilon, duration: dt });
    }
    v.push(ControlSegment { t0: p.t0, epsilon: p.epsilon, duration: hold });
    for k in (0..n).rev() {
        v.push(ControlSegment { t0: p.t0 * (k as f64 + 0.5) / n as f64, epsilon: p.epsilon, duration: dt });
    }
    v
}

/// Propagates the 6-level Hamiltonian, projects on the spin sector and removes
/// the single-qubit Larmor phases.
pub fn simulate_gate(p: &DoubleDotParams, pulse: &GatePulse, t: f64) -> Result<SimulatedGate> {
    p.validate()?;
    let e0 = larmor_energies(p);
    match pulse {
        GatePulse::Adiabatic => {
            let eig = eigenenergies(p, EigenMethod::Exact6x6)?;
            Ok(SimulatedGate { u: cphase_from_eigen(p, &eig, t).u_rot, leakage: 0.0, warnings: vec![] })
        }
        GatePulse::SpinSudden => {
            let (vals, vecs) = qcore::eigh(&hamiltonian6(p))?;
            let mut order: Vec<(f64, usize)> = (0..6).map(|k| ((0..4).map(|i| vecs[(i, k)].norm_sqr()).sum::<f64>(), k)).collect();
            order.sort_by(|a, b| b.0.total_cmp(&a.0));
            if order[3].0 < 0.75 {
                return numerical(format!("spin-like eigenstates are not separable (weight {:.3})", order[3].0));
            }
            let cols: Vec<usize> = order[..4].iter().map(|o| o.1).collect();
            let w = qcore::nearest_unitary(&ComplexMatrix::from_fn(4, 4, |r, c_| vecs[(r, cols[c_])]));
            let ph = qcore::diag(&cols.iter().map(|&k| (-I * (vals[k] * t)).exp()).collect::<Vec<_>>());
            let frame = qcore::diag(&e0.map(|e| (I * (e * t)).exp()));
            Ok(SimulatedGate { u: frame * &w * ph * w.adjoint(), leakage: 0.0, warnings: vec![] })
        }
        GatePulse::Instant | GatePulse::Segments(_) => {
            let segs = match pulse {
                GatePulse::Instant => vec![ControlSegment { t0: p.t0, epsilon: p.epsilon, duration: t }],
                GatePulse::Segments(s) => s.clone(),
                GatePulse::Adiabatic | GatePulse::SpinSudden => unreachable!(),
            };
            let mut u6 = qcore::identity(6);
            let mut total = 0.0;
            for (k, s) in segs.iter().enumerate() {
                if s.duration < 0.0 {
                    return invalid(format!("pulse segment {k} has negative duration"));
                }
                if s.duration == 0.0 {
                    continue;
                }
                let q = DoubleDotParams { t0: s.t0, epsilon: s.epsilon, ..*p };
                q.validate()?;
                u6 = qcore::matexp_hermitian(&hamiltonian6(&q), s.duration)? * u6;
                total += s.duration;
            }
            let frame: Vec<C64> = e0.iter().map(|e| (I * (e * total)).exp()).collect();
            let u = ComplexMatrix::from_fn(4, 4, |r, c_| frame[r] * u6[(r, c_)]);
            let leakage = (0..4).map(|j| 1.0 - (0..4).map(|i| u6[(i, j)].norm_sqr()).sum::<f64>()).fold(0.0, f64::max);
            let mut warnings = vec![];
            if leakage > 0.01 {
                warnings.push(format!("leakage out of the spin sector is {:.3}%", leakage * 100.0));
            }
            Ok(SimulatedGate { u, leakage, warnings })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::process_fidelity;
    use crate::TAU;

    fn table3() -> DoubleDotParams {
        let d = TAU * 1e9;
        DoubleDotParams { omega_0: TAU * 10e9, delta_omega_0: d, t0: d / SQRT_2, u: TAU * 1e12, epsilon: 0.0 }
    }

    #[test]
    fn hamiltonian_structure() {
        let mut p = table3();
        let h = hamiltonian6(&p);
        assert!(qcore::hermitian_asymmetry(&h) == 0.0);
        p.t0 = 0.0;
        p.epsilon = 0.3 * p.u;
        let (vals, _) = qcore::eigh(&hamiltonian6(&p)).unwrap();
        let mut expect = vec![-p.omega_0, p.delta_omega_0 / 2.0, -p.delta_omega_0 / 2.0, p.omega_0, p.u - p.epsilon, p.u + p.epsilon];
        expect.sort_by(f64::total_cmp);
        for (a, b) in vals.iter().zip(expect) {
            assert!((a - b).abs() <= 1e-12 * p.u);
        }
    }

    #[test]
    fn omega_op_values() {
        let p = table3();
        assert!(((omega_op(&p) / TAU) - 2.0e6).abs() / 2.0e6 < 0.02);
        let half = DoubleDotParams { t0: p.t0 / 2.0, ..p };
        assert!((omega_op(&half) * 4.0 - omega_op(&p)).abs() / omega_op(&p) < 1e-14);
    }

    #[test]
    fn exact_and_approx_eigenvalues() {
        let mut p = table3();
        p.delta_omega_0 = 0.0;
        let ex = eigenenergies(&p, EigenMethod::Exact6x6).unwrap();
        let ap = eigenenergies(&p, EigenMethod::Approx).unwrap();
        assert!(((ex.lambdas[2] - ap.lambdas[2]) / ap.lambdas[2]).abs() < 0.01);
        assert_eq!(ex.lambdas[0], -p.omega_0);
        assert_eq!(ex.lambdas[3], p.omega_0);
        for d in [0.0, 1e3, 1e7, p.t0 * SQRT_2] {
            let q = DoubleDotParams { delta_omega_0: d, ..p };
            let e = eigenenergies(&q, EigenMethod::Exact6x6).unwrap();
            let s = e.lambdas[1] + e.lambdas[2];
            assert!((s + e.omega_op).abs() / e.omega_op < 0.01);
            for l in [e.lambdas[1], e.lambdas[2]] {
                assert!(quartic_relative_residual(&q, l) < 1e-6, "{}", quartic_relative_residual(&q, l));
            }
        }
    }

    #[test]
    fn cphase_phases() {
        let p = table3();
        let r = cphase_unitary(&p, 0.0, EigenMethod::Exact6x6).unwrap();
        assert!((r.u_rot - qcore::identity(4)).norm() < 1e-15);
        let t = PI / omega_op(&p);
        let r = cphase_unitary(&p, t, EigenMethod::Approx).unwrap();
        // equal only to leading order; the mismatch is O(t0/U)
        assert!((r.phi_za - r.phi_zb).abs() < 10.0 * p.t0 / p.u * r.phi_za.abs(), "{} {}", r.phi_za, r.phi_zb);
        assert!((r.theta_cz - PI).abs() < 1e-9);
        let z = DoubleDotParams { delta_omega_0: 0.0, ..p };
        let r = cphase_unitary(&z, t, EigenMethod::Approx).unwrap();
        assert!(r.phi_za.abs() < 1e-12);
        let corrected = z_corrections(r.phi_za, r.phi_zb) * &r.u_rot;
        assert!((process_fidelity(&cz_ideal(r.theta_cz), &corrected).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exchange_examples() {
        let swap = exchange_matrix(PI);
        assert!((swap[(1, 2)] - c(1.0, 0.0)).norm() < 1e-15 && swap[(1, 1)].norm() < 1e-15);
        assert!((exchange_matrix(0.0) - qcore::identity(4)).norm() < 1e-15);
        let prod = exchange_matrix(0.4) * exchange_matrix(1.1);
        assert!((prod - exchange_matrix(1.5)).norm() < 1e-14);
        assert!(exchange_unitary(&table3(), 1.0).is_err());
    }

    #[test]
    fn table3_rows() {
        let p = table3();
        let spec = TwoQubitGateSpec { kind: GateKind::CPhase, theta: PI, regime: Regime::DeltaEqSqrt2T0, t: 250e-9 };
        let f = fid_gate_inaccuracy(&spec, &p, &GateError { kind: GateErrorKind::Duration, value: 5.3 / 250.0 }).unwrap();
        assert!(((1.0 - f.taylor) - 2.8e-4).abs() / 2.8e-4 < 0.02, "{}", 1.0 - f.taylor);
        let f = fid_gate_inaccuracy(&spec, &p, &GateError { kind: GateErrorKind::Tunnel, value: 7.5 / 710.0 }).unwrap();
        assert!(((1.0 - f.taylor) - 2.75e-4).abs() / 2.75e-4 < 0.02, "{}", 1.0 - f.taylor);
        let n = fid_gate_noise(&spec, &p, GateErrorKind::Detuning, 9.2 / 82.7).unwrap();
        assert!(((1.0 - n) - 2.84e-4).abs() / 2.84e-4 < 0.01, "{}", 1.0 - n);
        assert_eq!(fid_gate_noise(&spec, &p, GateErrorKind::Duration, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn swap_detuning_tolerance_near_crossing() {
        let p = DoubleDotParams { epsilon: 0.9 * TAU * 1e12, delta_omega_0: 0.0, ..table3() };
        let spec = TwoQubitGateSpec { kind: GateKind::Exchange, theta: PI, regime: Regime::DeltaZero, t: 0.0 };
        let ok = fid_gate_inaccuracy(&spec, &p, &GateError { kind: GateErrorKind::Detuning, value: 0.0024 }).unwrap();
        let bad = fid_gate_inaccuracy(&spec, &p, &GateError { kind: GateErrorKind::Detuning, value: 0.0026 }).unwrap();
        assert!(ok.taylor > 0.999 && bad.taylor < 0.999);
    }

    #[test]
    fn duration_error_is_symmetric() {
        let p = table3();
        for regime in Regime::ALL {
            let spec = TwoQubitGateSpec { kind: GateKind::CPhase, theta: PI, regime, t: 0.0 };
            let a = fid_gate_inaccuracy(&spec, &p, &GateError { kind: GateErrorKind::Duration, value: 0.01 }).unwrap();
            let b = fid_gate_inaccuracy(&spec, &p, &GateError { kind: GateErrorKind::Duration, value: -0.01 }).unwrap();
            assert!((a.taylor - b.taylor).abs() < 1e-15 && (a.exact - b.exact).abs() < 1e-12);
        }
    }

    #[test]
    fn idle_examples() {
        assert_eq!(fid_idle(GateKind::CPhase, Regime::DeltaZero, 0.0, 1e-6).taylor, 1.0);
        let r = idle_reduction_factor(GateKind::CPhase, Regime::DeltaZero, 0.999, 10.0);
        assert!((r - 430.0).abs() / 430.0 < 0.02);
        assert!((r.sqrt() - 21.0).abs() / 21.0 < 0.02);
        let off = DoubleDotParams { t0: TAU * 78e6, ..table3() };
        let inf = 1.0 - fid_idle(GateKind::CPhase, Regime::DeltaEqSqrt2T0, omega_op(&off), 500e-9).taylor;
        assert!((inf - 3.74e-4).abs() / 3.74e-4 < 0.1, "{inf}");
    }

    #[test]
    fn simulate_instant_exchange() {
        let mut p = table3();
        p.delta_omega_0 = 0.0;
        p.t0 = 7e-4 * p.u;
        let t = PI / omega_op(&p);
        let g = simulate_gate(&p, &GatePulse::Instant, t).unwrap();
        assert!(process_fidelity(&exchange_unitary(&p, t).unwrap(), &g.u).unwrap() > 0.999);
        let z = simulate_gate(&p, &GatePulse::Instant, 0.0).unwrap();
        assert!((z.u - qcore::identity(4)).norm() < 1e-15);
    }

    #[test]
    fn simulate_slow_ramp_matches_adiabatic_phases() {
        let p = table3();
        let hold = PI / omega_op(&p);
        let ramp = 2e-9;
        let g = simulate_gate(&p, &GatePulse::Segments(linear_ramp_pulse(&p, ramp, hold, 400)), 0.0).unwrap();
        // a linear t0 ramp accumulates ω_op·ramp/3 on each side
        let r = cphase_unitary(&p, hold + 2.0 * ramp / 3.0, EigenMethod::Exact6x6).unwrap();
        let pa = -g.u[(1, 1)].arg() + g.u[(0, 0)].arg();
        let pb = -g.u[(2, 2)].arg() + g.u[(0, 0)].arg();
        assert!(((pa - r.phi_za) / r.phi_za).abs() < 0.01, "{pa} vs {}", r.phi_za);
        assert!(((pb - r.phi_zb) / r.phi_zb).abs() < 0.01, "{pb} vs {}", r.phi_zb);
    }
}
