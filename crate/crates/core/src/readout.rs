//! Pauli spin-blockade read-out: spin-to-charge conversion, charge detection
//! and the composed read-out fidelity.
//!
//! Basis order is [↑↑, ↑↓, ↓↑, ↓↓, (0,↑↑), (0,↑↓), (0,↓↑), (0,↓↓)].

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, numerical, Result};
use crate::noise::{integrate, PowerSpectrum, PsdUnit, Shape};
use crate::twoqubit::DoubleDotParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutDotParams {
    /// `base.epsilon` is the detuning at which the Hamiltonian is evaluated.
    pub base: DoubleDotParams,
    pub e_st: f64,
}

impl ReadoutDotParams {
    pub fn validate(&self) -> Result<Vec<String>> {
        let b = &self.base;
        if !(self.e_st > 0.0) {
            return invalid(format!("E_ST must be positive, got {}", self.e_st));
        }
        if !(b.u > 0.0) {
            return invalid(format!("charging energy U must be positive, got {}", b.u));
        }
        if !(b.t0 >= 0.0) {
            return invalid(format!("tunnel coupling t0 must be non-negative, got {}", b.t0));
        }
        let mut w = vec![];
        if b.omega_0 > self.e_st / 10.0 {
            w.push(format!("omega_0/E_ST = {:.3}; the read-out curve shape assumes omega_0 << E_ST", b.omega_0 / self.e_st));
        }
        Ok(w)
    }

    pub fn at(&self, epsilon: f64) -> Self {
        let mut p = *self;
        p.base.epsilon = epsilon;
        p
    }
}

pub fn hamiltonian8_real(p: &ReadoutDotParams) -> DMatrix<f64> {
    let b = &p.base;
    let (w, d, e) = (b.omega_0, b.delta_omega_0, b.u - b.epsilon);
    let mut h = DMatrix::zeros(8, 8);
    let diag = [-w, d / 2.0, -d / 2.0, w, e + p.e_st - w, e + p.e_st / 2.0, e + p.e_st / 2.0, e + p.e_st + w];
    for (k, v) in diag.iter().enumerate() {
        h[(k, k)] = *v;
    }
    h[(5, 6)] = p.e_st / 2.0;
    h[(6, 5)] = p.e_st / 2.0;
    let s = SQRT_2 * b.t0;
    for k in 0..4 {
        h[(k, k + 4)] = s;
        h[(k + 4, k)] = s;
    }
    h
}

pub fn hamiltonian8(p: &ReadoutDotParams) -> crate::qcore::ComplexMatrix {
    hamiltonian8_real(p).map(|x| crate::qcore::c(x, 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargeTransferResult {
    pub p_charge: f64,
    pub p_transfer_given_down_down: f64,
    pub p_no_transfer_given_down_up: f64,
    pub epsilon_read: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    /// Geometric grid points between ε = 0 and ε_read.
    pub points: usize,
    /// Dense window half-width around each bare level crossing, in units of t0.
    pub window_t0: f64,
    /// Dense window step, in units of t0.
    pub window_step_t0: f64,
    /// Smallest step (relative to U) before continuation gives up.
    pub min_step_rel: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions { points: 2000, window_t0: 50.0, window_step_t0: 0.02, min_step_rel: 1e-15 }
    }
}

impl ContinuationOptions {
    pub fn refined(&self) -> Self {
        ContinuationOptions { points: self.points * 2, window_step_t0: self.window_step_t0 / 2.0, ..*self }
    }
}

/// Detunings at which a (1,1) level crosses a (0,2) level it couples to, when t0 = 0.
pub fn bare_crossings(p: &ReadoutDotParams) -> Vec<f64> {
    let b = &p.base;
    let h = b.delta_omega_0 / 2.0;
    let mut v = vec![b.u - h, b.u + h, b.u + p.e_st - h, b.u + p.e_st, b.u + p.e_st + h];
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn grid(p: &ReadoutDotParams, targets: &[f64], o: &ContinuationOptions) -> Vec<f64> {
    let n = o.points.max(2);
    let far = targets.iter().fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
    let mut g = vec![0.0];
    if far != 0.0 {
        let first = far.abs() * 1e-6;
        for k in 0..n {
            g.push(far.signum() * first * (1e6f64).powf(k as f64 / (n - 1) as f64));
        }
    }
    let t0 = p.base.t0.max(p.e_st * 1e-6);
    let (lo, hi) = (far.min(0.0), far.max(0.0));
    let mut windows: Vec<(f64, f64)> = bare_crossings(p)
        .into_iter()
        .flat_map(|x| [x, -x])
        .map(|x| ((x - o.window_t0 * t0).max(lo), (x + o.window_t0 * t0).min(hi)))
        .filter(|(a, b)| b > a)
        .collect();
    windows.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = vec![];
    for w in windows {
        match merged.last_mut() {
            Some(m) if w.0 <= m.1 => m.1 = m.1.max(w.1),
            _ => merged.push(w),
        }
    }
    for (a, b) in merged {
        let m = ((b - a) / (o.window_step_t0 * t0)).ceil() as usize;
        g.extend((0..=m).map(|k| a + (b - a) * k as f64 / m as f64));
    }
    g.extend_from_slice(targets);
    g.retain(|x| *x >= lo && *x <= hi);
    g.sort_by(|x, y| if far < 0.0 { y.total_cmp(x) } else { x.total_cmp(y) });
    g.dedup();
    g
}

fn eigen_at(p: &ReadoutDotParams, eps: f64) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new(hamiltonian8_real(&p.at(eps)))
}

fn best_match(e: &SymmetricEigen<f64, nalgebra::Dyn>, psi: &DVector<f64>) -> (DVector<f64>, f64) {
    let mut best = (0, 0.0);
    for k in 0..e.eigenvalues.len() {
        let ov = e.eigenvectors.column(k).dot(psi).abs();
        if ov > best.1 {
            best = (k, ov);
        }
    }
    let mut v = e.eigenvectors.column(best.0).into_owned();
    if v.dot(psi) < 0.0 {
        v = -v;
    }
    (v, best.1)
}

/// Follows the eigenstates that start as the basis states `starts` at ε = 0,
/// returning them at each target detuning. Targets must share one sign.
fn continue_states(p: &ReadoutDotParams, starts: &[usize], targets: &[f64], o: &ContinuationOptions) -> Result<Vec<Vec<DVector<f64>>>> {
    if targets.iter().any(|t| *t > 0.0) && targets.iter().any(|t| *t < 0.0) {
        return invalid("read-out detunings in one scan must share a sign");
    }
    let g = grid(p, targets, o);
    let e0 = eigen_at(p, 0.0);
    let mut psis: Vec<DVector<f64>> = starts
        .iter()
        .map(|&s| {
            let mut unit = DVector::zeros(8);
            unit[s] = 1.0;
            best_match(&e0, &unit).0
        })
        .collect();
    let snapshot = |psis: &[DVector<f64>], x: f64, out: &mut Vec<Option<Vec<DVector<f64>>>>| {
        for (k, t) in targets.iter().enumerate() {
            if *t == x {
                out[k] = Some(psis.to_vec());
            }
        }
    };
    let mut out: Vec<Option<Vec<DVector<f64>>>> = vec![None; targets.len()];
    snapshot(&psis, 0.0, &mut out);
    let floor = o.min_step_rel * p.base.u;
    for w in g.windows(2) {
        let mut stack = vec![(w[0], w[1])];
        while let Some((a, b)) = stack.pop() {
            let e = eigen_at(p, b);
            let next: Vec<(DVector<f64>, f64)> = psis.iter().map(|psi| best_match(&e, psi)).collect();
            if next.iter().any(|(_, ov)| *ov < 0.5) {
                if (b - a).abs() < floor {
                    return numerical(format!("eigenvector continuation is ambiguous near epsilon = {b:.6e} even at the smallest step"));
                }
                let m = 0.5 * (a + b);
                stack.push((m, b));
                stack.push((a, m));
                continue;
            }
            psis = next.into_iter().map(|x| x.0).collect();
        }
        snapshot(&psis, w[1], &mut out);
    }
    Ok(out.into_iter().map(|x| x.expect("every target lies on the grid")).collect())
}

fn transfer_result(dd: &DVector<f64>, du: &DVector<f64>, epsilon_read: f64, warnings: Vec<String>) -> ChargeTransferResult {
    let transfer: f64 = (4..8).map(|k| dd[k] * dd[k]).sum();
    let no_transfer: f64 = (0..4).map(|k| du[k] * du[k]).sum();
    ChargeTransferResult {
        p_charge: 1.0 - transfer - no_transfer,
        p_transfer_given_down_down: transfer,
        p_no_transfer_given_down_up: no_transfer,
        epsilon_read,
        warnings,
    }
}

/// Charge-transfer probabilities at several read-out detunings in one sweep.
pub fn adiabatic_charge_transfer_many(p: &ReadoutDotParams, epsilon_reads: &[f64], o: &ContinuationOptions) -> Result<Vec<ChargeTransferResult>> {
    let warnings = p.validate()?;
    if epsilon_reads.iter().any(|e| !e.is_finite()) {
        return invalid("epsilon_read must be finite");
    }
    let states = continue_states(p, &[3, 2], epsilon_reads, o)?;
    Ok(states
        .iter()
        .zip(epsilon_reads)
        .map(|(s, &e)| {
            let mut w = warnings.clone();
            if e.abs() >= p.base.u + p.e_st {
                w.push("epsilon_read lies beyond the triplet crossing; the result is not a read-out point".into());
            }
            transfer_result(&s[0], &s[1], e, w)
        })
        .collect())
}

pub fn adiabatic_charge_transfer_with(p: &ReadoutDotParams, epsilon_read: f64, o: &ContinuationOptions) -> Result<ChargeTransferResult> {
    Ok(adiabatic_charge_transfer_many(p, &[epsilon_read], o)?.remove(0))
}

pub fn adiabatic_charge_transfer(p: &ReadoutDotParams, epsilon_read: f64) -> Result<ChargeTransferResult> {
    adiabatic_charge_transfer_with(p, epsilon_read, &ContinuationOptions::default())
}

/// ε = U + E_ST/2, equidistant between the singlet and triplet crossings.
pub fn nominal_read_point(p: &ReadoutDotParams) -> f64 {
    p.base.u + p.e_st / 2.0
}

/// 1 − P_charge on a grid of x = (ε − U)/E_ST.
pub fn charge_error_scan(p: &ReadoutDotParams, xs: &[f64]) -> Result<Vec<(f64, f64)>> {
    let eps: Vec<f64> = xs.iter().map(|x| p.base.u + x * p.e_st).collect();
    let r = adiabatic_charge_transfer_many(p, &eps, &ContinuationOptions::default())?;
    Ok(xs.iter().zip(r).map(|(x, r)| (*x, 1.0 - r.p_charge)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSummary {
    pub x_min: f64,
    pub error_min: f64,
    /// Edges of the band where 1 − P_charge ≤ 2·minimum.
    pub doubling_band: (f64, f64),
}

/// Minimum and doubling band of a (x, 1 − P_charge) scan, with linear
/// interpolation at the band edges.
pub fn summarize_scan(scan: &[(f64, f64)]) -> Result<ScanSummary> {
    if scan.len() < 3 {
        return invalid("scan needs at least three points");
    }
    let k = (0..scan.len()).min_by(|&a, &b| scan[a].1.total_cmp(&scan[b].1)).unwrap();
    let (x_min, m) = scan[k];
    let edge = |range: Vec<usize>| -> f64 {
        let mut prev = k;
        for j in range {
            if scan[j].1 > 2.0 * m {
                let (x0, y0, x1, y1) = (scan[prev].0, scan[prev].1, scan[j].0, scan[j].1);
                return x0 + (2.0 * m - y0) * (x1 - x0) / (y1 - y0);
            }
            prev = j;
        }
        scan[prev].0
    };
    let lo = edge((0..k).rev().collect());
    let hi = edge((k + 1..scan.len()).collect());
    Ok(ScanSummary { x_min, error_min: m, doubling_band: (lo, hi) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplittingSweep {
    /// t0 = E_ST / ratio.
    Tunnel,
    /// E_ST = ratio · t0.
    Splitting,
}

/// 1 − P_charge at the nominal read point versus E_ST/t0.
pub fn charge_error_vs_splitting(p: &ReadoutDotParams, ratios: &[f64], sweep: SplittingSweep) -> Result<Vec<(f64, f64)>> {
    ratios
        .iter()
        .map(|&r| {
            if !(r > 0.0) {
                return invalid(format!("E_ST/t0 ratio must be positive, got {r}"));
            }
            let mut q = *p;
            match sweep {
                SplittingSweep::Tunnel => q.base.t0 = p.e_st / r,
                SplittingSweep::Splitting => q.e_st = r * p.base.t0,
            }
            let res = adiabatic_charge_transfer(&q, nominal_read_point(&q))?;
            Ok((r, 1.0 - res.p_charge))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorChain {
    pub i_s: f64,
    pub s_sensor: PowerSpectrum,
    pub s_circuit: PowerSpectrum,
    pub t_read: f64,
    /// Decision threshold; I_s/2 when absent.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrMethod {
    White,
    Full,
}

impl DetectorChain {
    pub fn validate(&self) -> Result<()> {
        if !(self.i_s > 0.0) {
            return invalid(format!("sensor signal I_s must be positive, got {}", self.i_s));
        }
        if !(self.t_read > 0.0) {
            return invalid(format!("T_read must be positive, got {}", self.t_read));
        }
        for s in [&self.s_sensor, &self.s_circuit] {
            if s.unit != PsdUnit::A2PerHz {
                return invalid(format!("detector noise must be a2_per_hz, got {}", s.unit.tag()));
            }
            s.validate()?;
        }
        Ok(())
    }

    pub fn enbw(&self) -> f64 {
        1.0 / (2.0 * self.t_read)
    }

    /// rms noise current in the integration bandwidth for a white density.
    pub fn noise_rms(density_a2_per_hz: f64, t_read: f64) -> f64 {
        (density_a2_per_hz / (2.0 * t_read)).sqrt()
    }
}

/// Matched-filter SNR, I_s²/σ²; infinite for a noiseless chain.
pub fn snr(chain: &DetectorChain, method: SnrMethod) -> Result<f64> {
    chain.validate()?;
    let comps: Vec<_> = chain.s_sensor.components.iter().chain(&chain.s_circuit.components).collect();
    let var = match method {
        SnrMethod::White => {
            let mut s = 0.0;
            for c in &comps {
                if c.shape != Shape::White || c.f_lo != 0.0 || c.f_hi.is_finite() {
                    return invalid("white-noise SNR needs flat, unbounded spectra; use the full method");
                }
                s += c.level;
            }
            s * chain.enbw()
        }
        SnrMethod::Full => {
            let t = chain.t_read;
            let mut acc = 0.0;
            for s in [&chain.s_sensor, &chain.s_circuit] {
                if !s.is_zero() {
                    acc += sinc2_integral(s, t)?;
                }
            }
            acc / (t * t)
        }
    };
    if var == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(chain.i_s * chain.i_s / var)
}

/// ∫₀^∞ S(f)·(sin(πfT)/(πf))² df.
fn sinc2_integral(s: &PowerSpectrum, t: f64) -> Result<f64> {
    let w = |f: f64| {
        if f == 0.0 {
            s.eval(0.0) * t * t
        } else {
            let x = (PI * f * t).sin() / (PI * f);
            s.eval(f) * x * x
        }
    };
    let period = 1.0 / t;
    let cutoff = 4000.0 * period;
    let mut total = 0.0;
    let mut x = 0.0;
    while x < cutoff {
        total += integrate(&w, x, x + period, 1e-11, 0.0)?;
        x += period;
    }
    let tail = |u: f64| if u <= 0.0 { 0.0 } else { s.eval(cutoff / u) / (2.0 * PI * PI * cutoff) };
    total += integrate(&tail, 0.0, 1.0, 1e-10, 0.0)?;
    if !total.is_finite() {
        return numerical("read-out noise integral diverges");
    }
    Ok(total)
}

/// (1 + erf(√(SNR/8)))/2.
pub fn p_detect(snr: f64) -> Result<f64> {
    if snr.is_nan() || snr < 0.0 {
        return invalid(format!("SNR must be non-negative, got {snr}"));
    }
    if snr.is_infinite() {
        return Ok(1.0);
    }
    Ok(0.5 * (1.0 + libm::erf((snr / 8.0).sqrt())))
}

/// P_detect for an arbitrary threshold I_t and noise σ.
pub fn p_detect_threshold(i_s: f64, i_t: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return invalid(format!("noise sigma must be positive, got {sigma}"));
    }
    let z = std::f64::consts::FRAC_1_SQRT_2 / sigma;
    Ok(0.25 * (1.0 + libm::erf(i_t * z)) + 0.25 * (1.0 + libm::erf((i_s - i_t) * z)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutBudget {
    pub p_charge: f64,
    pub p_sense: f64,
    pub p_detect: f64,
}

impl Default for ReadoutBudget {
    fn default() -> Self {
        ReadoutBudget { p_charge: 0.99967, p_sense: 0.99967, p_detect: 0.99967 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FidelityMode {
    Approx,
    Full,
}

pub fn readout_fidelity(b: &ReadoutBudget, mode: FidelityMode) -> Result<f64> {
    for (name, v) in [("p_charge", b.p_charge), ("p_sense", b.p_sense), ("p_detect", b.p_detect)] {
        if !(0.0..=1.0).contains(&v) {
            return invalid(format!("{name} must lie in [0, 1], got {v}"));
        }
    }
    Ok(match mode {
        FidelityMode::Approx => b.p_charge * b.p_sense * b.p_detect,
        FidelityMode::Full => b.p_charge * (b.p_sense * b.p_detect + (1.0 - b.p_sense) * (1.0 - b.p_detect)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TAU;

    pub(crate) fn table5() -> ReadoutDotParams {
        ReadoutDotParams {
            base: DoubleDotParams { omega_0: TAU * 1e9, delta_omega_0: TAU * 50e6, t0: TAU * 39e6, u: TAU * 1e12, epsilon: 0.0 },
            e_st: TAU * 12.09e9,
        }
    }

    fn chain(t: f64) -> DetectorChain {
        DetectorChain {
            i_s: 400e-12,
            s_sensor: PowerSpectrum::white(PsdUnit::A2PerHz, (57e-15f64).powi(2)),
            s_circuit: PowerSpectrum::white(PsdUnit::A2PerHz, (28e-15f64).powi(2)),
            t_read: t,
            threshold: None,
        }
    }

    // The blocks {↓↓, (0,↓↓)} and {↑↓, ↓↑, (0,↑↓), (0,↓↑)} are decoupled and
    // their levels never cross, so the adiabatic state keeps its energy rank.
    fn rank_oracle(p: &ReadoutDotParams, eps: f64) -> (f64, f64) {
        let block = |idx: &[usize], e: f64| {
            let h = hamiltonian8_real(&p.at(e));
            SymmetricEigen::new(DMatrix::from_fn(idx.len(), idx.len(), |r, c| h[(idx[r], idx[c])]))
        };
        let pick = |idx: &[usize], start: usize| {
            let e0 = block(idx, 0.0);
            let k0 = (0..idx.len()).max_by(|&a, &b| e0.eigenvectors[(start, a)].abs().total_cmp(&e0.eigenvectors[(start, b)].abs())).unwrap();
            let mut order0: Vec<usize> = (0..idx.len()).collect();
            order0.sort_by(|&a, &b| e0.eigenvalues[a].total_cmp(&e0.eigenvalues[b]));
            let rank = order0.iter().position(|&k| k == k0).unwrap();
            let e1 = block(idx, eps);
            let mut order1: Vec<usize> = (0..idx.len()).collect();
            order1.sort_by(|&a, &b| e1.eigenvalues[a].total_cmp(&e1.eigenvalues[b]));
            let v = e1.eigenvectors.column(order1[rank]).into_owned();
            (0..idx.len()).filter(|&r| idx[r] >= 4).map(|r| v[r] * v[r]).sum::<f64>()
        };
        let dd = pick(&[3, 7], 0);
        let du = 1.0 - pick(&[1, 2, 5, 6], 1);
        (dd, du)
    }

    #[test]
    fn hamiltonian_t0_zero_is_diagonal() {
        let mut p = table5();
        p.base.t0 = 0.0;
        p.base.epsilon = 0.7 * p.base.u;
        let h = hamiltonian8_real(&p);
        assert_eq!(h.transpose(), h);
        let mut vals: Vec<f64> = SymmetricEigen::new(h.clone()).eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        let (b, e) = (p.base, p.base.u - p.base.epsilon);
        let mut expect = vec![-b.omega_0, b.delta_omega_0 / 2.0, -b.delta_omega_0 / 2.0, b.omega_0, e + p.e_st - b.omega_0, e, e + p.e_st, e + p.e_st + b.omega_0];
        expect.sort_by(f64::total_cmp);
        for (a, x) in vals.iter().zip(expect) {
            assert!((a - x).abs() <= 1e-12 * p.base.u);
        }
    }

    #[test]
    fn crossings_at_u_and_u_plus_est() {
        let p = table5();
        let xs = bare_crossings(&p);
        let b = &p.base;
        // ↓↑ against the singlet and ↓↓ against (0,↓↓)
        assert!(xs.iter().any(|x| (x - (b.u + b.delta_omega_0 / 2.0)).abs() < 1.0));
        assert!(xs.iter().any(|x| (x - (b.u + p.e_st)).abs() < 1.0));
    }

    #[test]
    fn continuation_matches_rank_oracle() {
        let p = table5();
        for x in [0.25, 0.5, 0.7] {
            let eps = p.base.u + x * p.e_st;
            let r = adiabatic_charge_transfer(&p, eps).unwrap();
            let (dd, du) = rank_oracle(&p, eps);
            assert!((r.p_transfer_given_down_down - dd).abs() / dd < 1e-6, "{x}: {} vs {dd}", r.p_transfer_given_down_down);
            assert!((r.p_no_transfer_given_down_up - du).abs() / du < 1e-6, "{x}: {} vs {du}", r.p_no_transfer_given_down_up);
        }
    }

    #[test]
    fn halving_step_is_stable() {
        let p = table5();
        let eps = nominal_read_point(&p);
        let a = adiabatic_charge_transfer(&p, eps).unwrap();
        let b = adiabatic_charge_transfer_with(&p, eps, &ContinuationOptions::default().refined()).unwrap();
        assert!(((1.0 - a.p_charge) - (1.0 - b.p_charge)).abs() / (1.0 - a.p_charge) < 5e-3);
    }

    #[test]
    fn large_splitting_limit() {
        let p = table5();
        let r = charge_error_vs_splitting(&p, &[1e2, 1e3, 1e5], SplittingSweep::Tunnel).unwrap();
        assert!(r[0].1 > r[1].1 && r[1].1 > r[2].1);
        assert!(r[2].1 < 1e-8);
    }

    #[test]
    fn snr_table5() {
        let c = chain(0.6e-6);
        let w = snr(&c, SnrMethod::White).unwrap();
        assert!((w - 46.0).abs() / 46.0 < 0.05, "{w}");
        let f = snr(&c, SnrMethod::Full).unwrap();
        assert!((f - w).abs() / w < 5e-3, "{f} vs {w}");
        let d = snr(&chain(1.2e-6), SnrMethod::White).unwrap();
        assert!((d / w - 2.0).abs() < 1e-12);
        let mut z = c.clone();
        z.s_sensor = PowerSpectrum::zero(PsdUnit::A2PerHz);
        z.s_circuit = PowerSpectrum::zero(PsdUnit::A2PerHz);
        assert_eq!(snr(&z, SnrMethod::White).unwrap(), f64::INFINITY);
        assert!((DetectorChain::noise_rms((57e-15f64).powi(2), 0.6e-6) - 53e-12).abs() / 53e-12 < 0.03);
    }

    #[test]
    fn p_detect_values() {
        assert_eq!(p_detect(0.0).unwrap(), 0.5);
        assert!((p_detect(46.0).unwrap() - 0.99966).abs() < 1e-4);
        assert!((p_detect(36.0).unwrap() - 0.99865).abs() < 1e-5);
        assert!(p_detect(-1.0).is_err());
        let mut last = 0.5;
        for k in 1..200 {
            let v = p_detect(k as f64 * 0.5).unwrap();
            assert!(v > last || v == 1.0);
            last = v;
        }
        // threshold form with I_t = I_s/2 reduces to the SNR form
        let sigma = 400e-12 / 46f64.sqrt();
        assert!((p_detect_threshold(400e-12, 200e-12, sigma).unwrap() - p_detect(46.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn fidelity_composition() {
        let one = ReadoutBudget { p_charge: 1.0, p_sense: 1.0, p_detect: 1.0 };
        assert_eq!(readout_fidelity(&one, FidelityMode::Approx).unwrap(), 1.0);
        let b = ReadoutBudget::default();
        let a = readout_fidelity(&b, FidelityMode::Approx).unwrap();
        let f = readout_fidelity(&b, FidelityMode::Full).unwrap();
        assert!((a - 0.999).abs() < 5e-5);
        assert!((f - a).abs() < 1e-6);
        assert!(readout_fidelity(&ReadoutBudget { p_sense: 1.2, ..b }, FidelityMode::Full).is_err());
    }
}
