//! Error budgets: unit conversions, inversion of the forward fidelity formulas
//! and the worked specification tables.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::error::{invalid, numerical, Result};
use crate::onequbit::{self, Envelope, FdmaScenario};
use crate::readout::{self, DetectorChain, ReadoutDotParams, SnrMethod};
use crate::twoqubit::{self, DoubleDotParams, GateErrorKind, GateKind, Regime, TwoQubitGateSpec};
use crate::{noise, TAU};

/// Planck constant over the elementary charge, eV·s.
pub const H_EV_S: f64 = 6.626_070_15e-34 / 1.602_176_634e-19;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConversionContext {
    /// α = Δε/ΔV_d, eV/V.
    pub lever_arm: f64,
    /// Rabi frequency per drive amplitude, (rad/s)/V.
    pub drive_scale: f64,
    /// Gyromagnetic ratio, (rad/s)/T.
    pub gamma_e: f64,
}

impl Default for ConversionContext {
    fn default() -> Self {
        ConversionContext { lever_arm: 0.05, drive_scale: TAU * 1e6 / 2e-3, gamma_e: TAU * 28e9 }
    }
}

impl ConversionContext {
    pub fn validate(&self) -> Result<()> {
        for (k, v) in [("lever_arm", self.lever_arm), ("drive_scale", self.drive_scale), ("gamma_e", self.gamma_e)] {
            if !(v > 0.0) || !v.is_finite() {
                return invalid(format!("{k} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Drive amplitude (V) to Rabi frequency (rad/s).
    pub fn volts_to_rabi(&self, v: f64) -> f64 {
        v * self.drive_scale
    }

    pub fn rabi_to_volts(&self, w: f64) -> f64 {
        w / self.drive_scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyUnit {
    Volt,
    ElectronVolt,
    Hertz,
    RadPerSecond,
}

impl EnergyUnit {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "v" | "V" => Ok(EnergyUnit::Volt),
            "ev" | "eV" => Ok(EnergyUnit::ElectronVolt),
            "hz" | "Hz" => Ok(EnergyUnit::Hertz),
            "rad_s" | "rad/s" => Ok(EnergyUnit::RadPerSecond),
            _ => invalid(format!("unknown energy unit '{s}' (expected v, ev, hz or rad_s)")),
        }
    }
}

fn to_rad_s(x: f64, u: EnergyUnit, ctx: &ConversionContext) -> f64 {
    match u {
        EnergyUnit::Volt => x * ctx.lever_arm / H_EV_S * TAU,
        EnergyUnit::ElectronVolt => x / H_EV_S * TAU,
        EnergyUnit::Hertz => x * TAU,
        EnergyUnit::RadPerSecond => x,
    }
}

fn from_rad_s(w: f64, u: EnergyUnit, ctx: &ConversionContext) -> f64 {
    match u {
        EnergyUnit::Volt => w / TAU * H_EV_S / ctx.lever_arm,
        EnergyUnit::ElectronVolt => w / TAU * H_EV_S,
        EnergyUnit::Hertz => w / TAU,
        EnergyUnit::RadPerSecond => w,
    }
}

/// Gate voltage, energy, frequency and angular frequency via the lever arm and E = h·f.
pub fn convert(value: f64, from: EnergyUnit, to: EnergyUnit, ctx: &ConversionContext) -> Result<f64> {
    ctx.validate()?;
    if from == to {
        return Ok(value);
    }
    Ok(from_rad_s(to_rad_s(value, from, ctx), to, ctx))
}

/// A forward infidelity formula in one error variable x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Formula {
    /// x = Δω_mw/ω_R.
    RotFrequency { theta: f64 },
    /// x = Δφ in rad.
    RotPhase { theta: f64 },
    /// x = Δω_R/ω_R.
    RotAmplitude { theta: f64 },
    /// x = ΔT/T.
    RotDuration { theta: f64 },
    /// x = Z-phase error in rad.
    ZPhase,
    /// x = white density in (rad/s)²/Hz through a brick-wall filter.
    Brickwall { dc_gain: f64, enbw_hz: f64, sides: f64, omega_r: f64 },
    /// x = α (spacing over Rabi frequency) for an unaddressed qubit driven at β.
    Fdma { theta: f64, beta: f64 },
    /// x = relative duration or tunnel error, or Δε/U.
    TwoQubit { kind: GateKind, regime: Regime, theta: f64, error: GateErrorKind, eps_over_u: f64, noise: bool },
    /// x = ω_op,off in rad/s.
    TwoQubitIdle { kind: GateKind, regime: Regime, t_nop: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardValue {
    pub taylor: f64,
    pub exact: f64,
}

impl Formula {
    pub fn id(&self) -> &'static str {
        match self {
            Formula::RotFrequency { .. } => "onequbit.freq_inaccuracy",
            Formula::RotPhase { .. } => "onequbit.phase_inaccuracy",
            Formula::RotAmplitude { .. } => "onequbit.amplitude_inaccuracy",
            Formula::RotDuration { .. } => "onequbit.duration_inaccuracy",
            Formula::ZPhase => "onequbit.z_phase",
            Formula::Brickwall { .. } => "noise.brickwall",
            Formula::Fdma { .. } => "onequbit.fdma",
            Formula::TwoQubit { .. } => "twoqubit.gate_inaccuracy",
            Formula::TwoQubitIdle { .. } => "twoqubit.idle",
        }
    }

    /// (c, order) with infidelity ≈ c·x^order, when the Taylor form is a monomial.
    fn monomial(&self) -> Option<(f64, i32)> {
        Some(match *self {
            Formula::RotFrequency { theta } | Formula::RotPhase { theta } => (0.5 * (1.0 - theta.cos()), 2),
            Formula::RotAmplitude { theta } | Formula::RotDuration { theta } => (theta * theta / 4.0, 2),
            Formula::ZPhase => (0.25, 2),
            Formula::Brickwall { dc_gain, enbw_hz, sides, omega_r } => (sides * dc_gain * enbw_hz / (omega_r * omega_r), 1),
            Formula::TwoQubit { kind, regime, theta, error, eps_over_u, noise } => {
                let spec = TwoQubitGateSpec { kind, theta, regime, t: 0.0 };
                let p = unit_dot(eps_over_u);
                let (c, order) = twoqubit::taylor_curvature(&spec, &p, error);
                let c = if noise && order == 4 { 3.0 * c } else { c };
                (c, order as i32)
            }
            Formula::TwoQubitIdle { kind, regime, t_nop } => (twoqubit::idle_coefficient(kind, regime) * t_nop * t_nop, 2),
            Formula::Fdma { .. } => return None,
        })
    }

    pub fn forward(&self, x: f64) -> Result<ForwardValue> {
        let pair = |p: onequbit::FidelityPair| ForwardValue { taylor: 1.0 - p.taylor, exact: 1.0 - p.exact };
        Ok(match *self {
            Formula::RotFrequency { theta } => pair(onequbit::fid_freq_inaccuracy(theta, x)),
            Formula::RotPhase { theta } => pair(onequbit::fid_phase_inaccuracy(theta, x)),
            Formula::RotAmplitude { theta } => pair(onequbit::fid_amplitude_inaccuracy(theta, x)),
            Formula::RotDuration { theta } => pair(onequbit::fid_duration_inaccuracy(theta, x)),
            Formula::ZPhase => pair(onequbit::fid_z_phase(x)),
            Formula::Brickwall { .. } => {
                let (c, _) = self.monomial().unwrap();
                ForwardValue { taylor: c * x, exact: c * x }
            }
            Formula::Fdma { theta, beta } => {
                let r = onequbit::fdma_unaddressed(&FdmaScenario { alpha: x, beta, theta, envelope: Envelope::Rectangular })?;
                ForwardValue { taylor: 1.0 - r.f_z_corrected_bound, exact: 1.0 - r.f_z_corrected }
            }
            Formula::TwoQubit { kind, regime, theta, error, eps_over_u, noise } => {
                let spec = TwoQubitGateSpec { kind, theta, regime, t: 0.0 };
                let p = unit_dot(eps_over_u);
                if noise {
                    let f = twoqubit::fid_gate_noise(&spec, &p, error, x)?;
                    ForwardValue { taylor: 1.0 - f, exact: 1.0 - f }
                } else {
                    let f = twoqubit::fid_gate_inaccuracy(&spec, &p, &twoqubit::GateError { kind: error, value: x })?;
                    ForwardValue { taylor: 1.0 - f.taylor, exact: 1.0 - f.exact }
                }
            }
            Formula::TwoQubitIdle { kind, regime, t_nop } => {
                let f = twoqubit::fid_idle(kind, regime, x, t_nop);
                ForwardValue { taylor: 1.0 - f.taylor, exact: 1.0 - f.exact }
            }
        })
    }
}

/// Dimensionless dot used where only ratios matter.
fn unit_dot(eps_over_u: f64) -> DoubleDotParams {
    DoubleDotParams { omega_0: 10.0, delta_omega_0: 0.0, t0: 1e-3, u: 1.0, epsilon: eps_over_u }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionMethod {
    ClosedForm,
    Bisection,
    ConservativeBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inversion {
    pub value: f64,
    pub method: InversionMethod,
    /// Relative mismatch of forward(value) against the target.
    pub roundtrip: f64,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InversionMode {
    /// Closed-form root of the Taylor form.
    Taylor,
    /// Bisection on the exact form.
    Exact,
}

/// Largest error x with infidelity(x) = target.
pub fn invert_forward(f: &Formula, target: f64, mode: InversionMode) -> Result<Inversion> {
    if !(target > 0.0 && target < 0.5) {
        return invalid(format!("target infidelity must lie in (0, 0.5), got {target}"));
    }
    if let Formula::Fdma { theta: _, beta } = *f {
        if !(beta > 0.0) {
            return invalid("FDMA inversion needs a positive drive ratio beta");
        }
        let value = beta / target.sqrt();
        let back = f.forward(value)?.taylor;
        return Ok(Inversion {
            value,
            method: InversionMethod::ConservativeBound,
            roundtrip: (back - target).abs() / target,
            flag: Some("exact infidelity oscillates in alpha; the monotone bound branch is returned".into()),
        });
    }
    let (c, order) = f.monomial().unwrap();
    if !(c > 0.0) || !c.is_finite() {
        return invalid(format!("{}: the error has no effect at this operating point; any value meets the target", f.id()));
    }
    let closed = (target / c).powf(1.0 / order as f64);
    match mode {
        InversionMode::Taylor => {
            let back = f.forward(closed)?.taylor;
            let roundtrip = (back - target).abs() / target;
            if roundtrip > 1e-6 {
                return numerical(format!("{}: round-trip mismatch {roundtrip:.2e}", f.id()));
            }
            Ok(Inversion { value: closed, method: InversionMethod::ClosedForm, roundtrip, flag: None })
        }
        InversionMode::Exact => {
            let g = |x: f64| -> Result<f64> { Ok(f.forward(x)?.exact - target) };
            let (mut lo, mut hi) = (0.0, closed);
            let mut grow = 0;
            while g(hi)? < 0.0 {
                lo = hi;
                hi *= 2.0;
                grow += 1;
                if grow > 60 {
                    return numerical(format!("{}: exact form never reaches the target", f.id()));
                }
            }
            while (hi - lo) > 1e-9 * hi {
                let m = 0.5 * (lo + hi);
                if g(m)? < 0.0 {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            let value = 0.5 * (lo + hi);
            let back = f.forward(value)?.exact;
            let roundtrip = (back - target).abs() / target;
            if roundtrip > 1e-6 {
                return numerical(format!("{}: exact form is not monotone near the target (mismatch {roundtrip:.2e})", f.id()));
            }
            Ok(Inversion { value, method: InversionMethod::Bisection, roundtrip, flag: None })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AppliesTo {
    Operation,
    Idle,
    Both,
    Info,
}

/// One row of a specification table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetItem {
    pub section: String,
    pub item: String,
    pub value: f64,
    pub unit: String,
    pub infidelity_operation: Option<f64>,
    pub infidelity_idle: Option<f64>,
    pub applies_to: AppliesTo,
    /// Formula id the row was produced with.
    pub formula: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecTable {
    pub name: String,
    pub items: Vec<BudgetItem>,
    pub total_operation: f64,
    pub total_idle: f64,
    pub warnings: Vec<String>,
}

impl SpecTable {
    fn new(name: &str) -> Self {
        SpecTable { name: name.into(), items: vec![], total_operation: 0.0, total_idle: 0.0, warnings: vec![] }
    }

    fn row(&mut self, section: &str, item: &str, value: f64, unit: &str, op: Option<f64>, idle: Option<f64>, formula: &str) {
        let applies_to = match (op, idle) {
            (Some(_), Some(_)) => AppliesTo::Both,
            (Some(_), None) => AppliesTo::Operation,
            (None, Some(_)) => AppliesTo::Idle,
            (None, None) => AppliesTo::Info,
        };
        self.items.push(BudgetItem {
            section: section.into(),
            item: item.into(),
            value,
            unit: unit.into(),
            infidelity_operation: op,
            infidelity_idle: idle,
            applies_to,
            formula: formula.into(),
        });
    }

    fn info(&mut self, section: &str, item: &str, value: f64, unit: &str, formula: &str) {
        self.row(section, item, value, unit, None, None, formula);
    }

    fn finish(mut self) -> Self {
        self.total_operation = self.items.iter().filter_map(|i| i.infidelity_operation).fold(0.0, |a, b| a + b);
        self.total_idle = self.items.iter().filter_map(|i| i.infidelity_idle).fold(0.0, |a, b| a + b);
        self
    }

    pub fn find(&self, section: &str, item: &str) -> Option<&BudgetItem> {
        self.items.iter().find(|i| i.section == section && i.item == item)
    }
}

/// Named numeric overrides for a case study, keyed with unit suffixes.
pub type Overrides = BTreeMap<String, f64>;

struct Params<'a> {
    values: BTreeMap<&'static str, f64>,
    overrides: &'a Overrides,
}

impl<'a> Params<'a> {
    fn new(defaults: &[(&'static str, f64)], overrides: &'a Overrides) -> Result<Self> {
        let values: BTreeMap<&'static str, f64> = defaults.iter().copied().collect();
        for (k, v) in overrides {
            if !values.contains_key(k.as_str()) {
                let known: Vec<&str> = values.keys().copied().collect();
                return invalid(format!("unknown parameter '{k}' (known: {})", known.join(", ")));
            }
            if !v.is_finite() {
                return invalid(format!("parameter '{k}' must be finite"));
            }
        }
        Ok(Params { values, overrides })
    }

    fn get(&self, k: &'static str) -> f64 {
        self.overrides.get(k).copied().unwrap_or(self.values[k])
    }

    fn positive(&self, k: &'static str) -> Result<f64> {
        let v = self.get(k);
        if !(v > 0.0) {
            return invalid(format!("parameter '{k}' must be positive, got {v}"));
        }
        Ok(v)
    }
}

fn sides(h: &noise::FilterResponse) -> f64 {
    if h.two_sided {
        2.0
    } else {
        1.0
    }
}

fn db20(x: f64) -> f64 {
    20.0 * x.log10()
}

pub const CASE_STUDIES: [&str; 4] = ["table1", "table3", "table4", "table5"];

pub fn case_study(name: &str, overrides: &Overrides) -> Result<SpecTable> {
    match name {
        "table1" => table1(overrides),
        "table3" => two_qubit_table("table3", 0.0, 250e-9, 10e6, overrides),
        "table4" => two_qubit_table("table4", 0.95, 25e-9, 100e6, overrides),
        "table5" => table5(overrides),
        _ => invalid(format!("unknown case study '{name}' (expected one of {})", CASE_STUDIES.join(", "))),
    }
}

fn table1(o: &Overrides) -> Result<SpecTable> {
    let p = Params::new(
        &[
            ("target_infidelity", 1e-3),
            ("theta_rad", PI),
            ("rabi_hz", 1e6),
            ("larmor_hz", 10e9),
            ("spacing_hz", 1e9),
            ("nuclear_sigma_hz", 1.9e3),
            ("drive_amplitude_v", 2e-3),
            ("lever_arm_ev_per_v", 0.05),
            ("l_offset_hz", 1e6),
        ],
        o,
    )?;
    let target = p.positive("target_infidelity")?;
    let theta = p.get("theta_rad");
    let omega_r = TAU * p.positive("rabi_hz")?;
    let omega_0 = TAU * p.positive("larmor_hz")?;
    let a0 = p.positive("drive_amplitude_v")?;
    let ctx = ConversionContext { lever_arm: p.positive("lever_arm_ev_per_v")?, drive_scale: omega_r / a0, ..Default::default() };
    let t = theta.abs() / omega_r;
    if !(t > 0.0) {
        return invalid("theta_rad must be nonzero");
    }
    let t_nop = t;
    let mut tab = SpecTable::new("table1");
    let z = Formula::ZPhase;

    // fixed contributions first, the rest is split over the eight operation rows
    let rwa = 1.0 - onequbit::rwa_validity_sweep(&[omega_0 / omega_r], &[theta], 0.0, None)?[0].fidelity;
    let sigma_n = TAU * p.get("nuclear_sigma_hz");
    let nuc_op = Formula::RotFrequency { theta }.forward(sigma_n / omega_r)?.taylor;
    let nuc_idle = z.forward(sigma_n * t_nop)?.taylor;
    let a = (target - rwa - nuc_op) / 8.0;
    if !(a > 0.0) {
        return invalid("target_infidelity leaves nothing for the operation rows");
    }

    let freq = Formula::RotFrequency { theta };
    let alpha = invert_forward(&freq, a, InversionMode::Taylor)?.value;
    let dw = alpha * omega_r;
    let idle_freq = z.forward(dw * t_nop)?.taylor;
    tab.row("frequency", "nominal", omega_0 / TAU, "Hz", Some(rwa), None, "onequbit.rwa_validity");
    let spacing = TAU * p.positive("spacing_hz")?;
    let fdma = Formula::Fdma { theta, beta: 1.0 }.forward(spacing / omega_r)?.taylor;
    tab.row("frequency", "spacing", spacing / TAU, "Hz", None, Some(fdma), "onequbit.fdma_bound");
    tab.row("frequency", "inaccuracy", dw / TAU, "Hz", Some(a), Some(idle_freq), freq.id());
    tab.row("frequency", "oscillator noise", dw / TAU, "Hz_rms", Some(a), Some(idle_freq), "onequbit.quasi_static_frequency");
    let hf = noise::FilterResponse::new(noise::FilterKind::Frequency, theta, omega_r)?;
    let enbw_f = hf.enbw / TAU;
    let s_f = (dw / TAU).powi(2) / enbw_f;
    let l_off = p.positive("l_offset_hz")?;
    tab.info("frequency", "oscillator noise enbw", enbw_f, "Hz", "noise.enbw_frequency");
    tab.info("frequency", "oscillator noise L", noise::sphi_to_ssb(s_f / (l_off * l_off)), "dBc/Hz", "noise.phase_noise_ssb");
    tab.row("frequency", "nuclear spin noise", sigma_n / TAU, "Hz_rms", Some(nuc_op), Some(nuc_idle), "onequbit.quasi_static_frequency");

    let ha = noise::FilterResponse::new(noise::FilterKind::Additive, theta, omega_r)?;
    let add = Formula::Brickwall { dc_gain: ha.dc_gain, enbw_hz: ha.enbw / TAU, sides: sides(&ha), omega_r };
    let s_add = invert_forward(&add, a, InversionMode::Taylor)?.value / ctx.drive_scale.powi(2);
    let enbw_add = 2.0 * ha.enbw / TAU;
    tab.row("frequency", "wideband noise", (s_add * enbw_add).sqrt(), "V_rms", Some(a), None, add.id());
    tab.info("frequency", "wideband noise enbw", enbw_add, "Hz", "noise.enbw_additive");
    tab.info("frequency", "wideband noise psd", s_add.sqrt(), "V/sqrt(Hz)", "noise.brickwall");

    let ph = Formula::RotPhase { theta };
    let dphi = invert_forward(&ph, a, InversionMode::Taylor)?.value;
    let idle_phase = z.forward(dphi)?.taylor;
    tab.row("phase", "inaccuracy", dphi.to_degrees(), "deg", Some(a), Some(idle_phase), ph.id());

    let amp = Formula::RotAmplitude { theta };
    let rel = invert_forward(&amp, a, InversionMode::Taylor)?.value;
    tab.info("amplitude", "nominal", a0, "V", "input");
    tab.info("amplitude", "full scale", 2.0 * a0, "V", "input");
    tab.info("amplitude", "rms", a0 / SQRT_2, "V_rms", "input");
    tab.row("amplitude", "inaccuracy", rel * a0, "V", Some(a), None, amp.id());
    tab.row("amplitude", "noise", rel * a0, "V_rms", Some(a), None, "onequbit.quasi_static_amplitude");
    let hr = noise::FilterResponse::new(noise::FilterKind::Amplitude, theta, omega_r)?;
    tab.info("amplitude", "noise enbw", hr.enbw / TAU, "Hz", "noise.enbw_amplitude");
    tab.info("amplitude", "noise psd", rel * a0 / (hr.enbw / TAU).sqrt(), "V/sqrt(Hz)", "noise.rms_in_enbw");
    tab.info("amplitude", "noise snr", db20(rel * SQRT_2), "dB", "noise.rms_in_enbw");

    let hi = noise::FilterResponse::idle(t_nop, omega_r)?;
    let idle_noise = Formula::Brickwall { dc_gain: hi.dc_gain, enbw_hz: hi.enbw / TAU, sides: sides(&hi), omega_r };
    let s_off = invert_forward(&idle_noise, a, InversionMode::Taylor)?.value / ctx.drive_scale.powi(2);
    let enbw_off = 2.0 * hi.enbw / TAU;
    let spur_alloc = target - (2.0 * idle_freq + nuc_idle + fdma + idle_phase + a);
    if !(spur_alloc > 0.0) {
        tab.warnings.push("idle budget is exhausted before the off-spur row".into());
    } else {
        let w_spur = invert_forward(&z, spur_alloc, InversionMode::Taylor)?.value / t_nop;
        let v_spur = ctx.rabi_to_volts(w_spur);
        tab.row("amplitude", "off-spur", v_spur, "V", None, Some(spur_alloc), "onequbit.idle_spur");
        tab.info("amplitude", "off-spur level", db20(v_spur / a0), "dBc", "noise.amplitude_to_dbc");
    }
    tab.row("amplitude", "off-noise", (s_off * enbw_off).sqrt(), "V_rms", None, Some(a), idle_noise.id());
    tab.info("amplitude", "off-noise enbw", enbw_off, "Hz", "noise.enbw_idle");
    tab.info("amplitude", "off-noise psd", s_off.sqrt(), "V/sqrt(Hz)", "noise.brickwall");

    let dur = Formula::RotDuration { theta };
    let rel_t = invert_forward(&dur, a, InversionMode::Taylor)?.value;
    tab.info("duration", "nominal", t, "s", "onequbit.duration");
    tab.row("duration", "inaccuracy", rel_t * t, "s", Some(a), None, dur.id());
    tab.row("duration", "noise", rel_t * t, "s_rms", Some(a), None, "onequbit.quasi_static_duration");
    Ok(tab.finish())
}

fn two_qubit_table(name: &str, eps_default: f64, t_print: f64, enbw_default: f64, o: &Overrides) -> Result<SpecTable> {
    let p = Params::new(
        &[
            ("target_infidelity", 1e-3),
            ("theta_rad", PI),
            ("spacing_hz", 1e9),
            ("charging_energy_hz", 1e12),
            ("epsilon_over_u", eps_default),
            ("t_nop_s", 500e-9),
            ("frequency_inaccuracy_hz", 11.2e3),
            ("nuclear_sigma_hz", 1.9e3),
            ("noise_enbw_hz", enbw_default),
            ("lever_arm_ev_per_v", 0.05),
        ],
        o,
    )?;
    let target = p.positive("target_infidelity")?;
    let theta = p.get("theta_rad");
    let ctx = ConversionContext { lever_arm: p.positive("lever_arm_ev_per_v")?, ..Default::default() };
    let d = TAU * p.positive("spacing_hz")?;
    let u = TAU * p.positive("charging_energy_hz")?;
    let x = p.get("epsilon_over_u");
    if !(x.abs() < 1.0) {
        return invalid(format!("epsilon_over_u must lie in (-1, 1), got {x}"));
    }
    let t_nop = p.positive("t_nop_s")?;
    let regime = Regime::DeltaEqSqrt2T0;
    let kind = GateKind::CPhase;
    let base = DoubleDotParams { omega_0: TAU * 10e9, delta_omega_0: d, t0: d / SQRT_2, u, epsilon: x * u };
    let spec = TwoQubitGateSpec { kind, theta, regime, t: 0.0 };
    let (pp, t) = twoqubit::operating_point(&spec, &base)?;
    let w_op = twoqubit::omega_op(&pp);
    let mut tab = SpecTable::new(name);
    if (t - t_print).abs() / t_print > 0.02 {
        tab.warnings.push(format!("derived gate time {:.4e} s differs from the nominal {:.4e} s", t, t_print));
    }
    let z = Formula::ZPhase;
    let v = |w: f64| from_rad_s(w, EnergyUnit::Volt, &ctx);
    let ev = |w: f64| from_rad_s(w, EnergyUnit::ElectronVolt, &ctx);

    let dw = TAU * p.get("frequency_inaccuracy_hz");
    let sn = TAU * p.get("nuclear_sigma_hz");
    let (f_op, f_idle) = (z.forward(dw * t)?.taylor, z.forward(dw * t_nop)?.taylor);
    let (n_op, n_idle) = (z.forward(sn * t)?.taylor, z.forward(sn * t_nop)?.taylor);
    tab.info("frequency", "spacing", d / TAU, "Hz", "input");
    tab.row("frequency", "inaccuracy", dw / TAU, "Hz", Some(f_op), Some(f_idle), z.id());
    tab.row("frequency", "oscillator noise", dw / TAU, "Hz_rms", Some(f_op), Some(f_idle), "onequbit.quasi_static_z_phase");
    tab.row("frequency", "nuclear spin noise", sn / TAU, "Hz_rms", Some(n_op), Some(n_idle), "onequbit.quasi_static_z_phase");
    tab.info("charging energy", "nominal", v(u), "V", "budget.convert");
    tab.info("charging energy", "nominal energy", ev(u), "eV", "budget.convert");
    tab.info("charging energy", "nominal frequency", u / TAU, "Hz", "input");

    let a = (target - 2.0 * f_op - n_op) / 3.0;
    if !(a > 0.0) {
        return invalid("target_infidelity leaves nothing for the two-qubit control rows");
    }
    tab.info("duration", "nominal", t, "s", "twoqubit.omega_op");
    tab.info("duration", "omega_op", w_op / TAU, "Hz", "twoqubit.omega_op");
    let fd = Formula::TwoQubit { kind, regime, theta, error: GateErrorKind::Duration, eps_over_u: x, noise: false };
    tab.row("duration", "error", invert_forward(&fd, a, InversionMode::Taylor)?.value * t, "s", Some(a), None, fd.id());

    let fe = Formula::TwoQubit { kind, regime, theta, error: GateErrorKind::Detuning, eps_over_u: x, noise: false };
    let fs = Formula::TwoQubit { kind, regime, theta, error: GateErrorKind::Detuning, eps_over_u: x, noise: true };
    let de = invert_forward(&fe, a, InversionMode::Taylor)?.value * u;
    let se = invert_forward(&fs, a, InversionMode::Taylor)?.value * u;
    let enbw = p.positive("noise_enbw_hz")?;
    tab.info("detuning", "nominal", v(x * u), "V", "budget.convert");
    tab.info("detuning", "nominal energy", ev(x * u), "eV", "budget.convert");
    tab.row("detuning", "error", v(de), "V", Some(a), None, fe.id());
    tab.info("detuning", "error energy", ev(de), "eV", "budget.convert");
    tab.info("detuning", "error frequency", de / TAU, "Hz", "budget.convert");
    tab.info("detuning", "noise", v(se), "V_rms", "twoqubit.gate_noise");
    tab.info("detuning", "noise psd", v(se) / enbw.sqrt(), "V/sqrt(Hz)", "noise.rms_in_enbw");

    let ft = Formula::TwoQubit { kind, regime, theta, error: GateErrorKind::Tunnel, eps_over_u: x, noise: false };
    let dt = invert_forward(&ft, a, InversionMode::Taylor)?.value * pp.t0;
    tab.info("tunnel coupling", "nominal", pp.t0 / TAU, "Hz", "twoqubit.regime");
    tab.info("tunnel coupling", "nominal energy", ev(pp.t0), "eV", "budget.convert");
    tab.row("tunnel coupling", "error", dt / TAU, "Hz", Some(a), None, ft.id());
    tab.info("tunnel coupling", "error energy", ev(dt), "eV", "budget.convert");

    // the interaction is parked at zero detuning when off
    let off_alloc = target - 2.0 * f_idle - n_idle;
    if !(off_alloc > 0.0) {
        tab.warnings.push("idle budget is exhausted before the tunnel off-value row".into());
    } else {
        let fi = Formula::TwoQubitIdle { kind, regime, t_nop };
        let w_off = invert_forward(&fi, off_alloc, InversionMode::Taylor)?.value;
        let t_off = (w_off * u / 4.0).sqrt();
        tab.row("tunnel coupling", "off-value", t_off / TAU, "Hz", None, Some(off_alloc), fi.id());
        tab.info("tunnel coupling", "off-value energy", ev(t_off), "eV", "budget.convert");
        tab.info("tunnel coupling", "on/off ratio", pp.t0 / t_off, "1", "twoqubit.omega_op");
    }
    Ok(tab.finish())
}

fn table5(o: &Overrides) -> Result<SpecTable> {
    let p = Params::new(
        &[
            ("target_fidelity", 0.999),
            ("charging_energy_hz", 1e12),
            ("e_st_ev", 50e-6),
            ("larmor_hz", 1e9),
            ("larmor_difference_hz", 50e6),
            ("lever_arm_ev_per_v", 0.05),
            ("detuning_enbw_hz", 1e6),
            ("signal_a", 400e-12),
            ("sensor_noise_a_per_rthz", 57e-15),
            ("circuit_noise_a_per_rthz", 28e-15),
            ("t_read_s", 0.6e-6),
        ],
        o,
    )?;
    let f = p.get("target_fidelity");
    if !(f > 0.0 && f < 1.0) {
        return invalid(format!("target_fidelity must lie in (0, 1), got {f}"));
    }
    let ctx = ConversionContext { lever_arm: p.positive("lever_arm_ev_per_v")?, ..Default::default() };
    let u = TAU * p.positive("charging_energy_hz")?;
    let e_st = to_rad_s(p.positive("e_st_ev")?, EnergyUnit::ElectronVolt, &ctx);
    let share = f.powf(1.0 / 3.0);
    let miss = 1.0 - share;
    let v = |w: f64| from_rad_s(w, EnergyUnit::Volt, &ctx);
    let ev = |w: f64| from_rad_s(w, EnergyUnit::ElectronVolt, &ctx);
    let mut tab = SpecTable::new("table5");

    tab.info("charging energy", "nominal", v(u), "V", "budget.convert");
    tab.info("charging energy", "nominal energy", ev(u), "eV", "budget.convert");
    tab.info("charging energy", "nominal frequency", u / TAU, "Hz", "input");
    tab.info("singlet-triplet energy", "nominal", v(e_st), "V", "budget.convert");
    tab.info("singlet-triplet energy", "nominal energy", ev(e_st), "eV", "input");
    tab.info("singlet-triplet energy", "nominal frequency", e_st / TAU, "Hz", "budget.convert");

    // half the charge budget sets t0 at the optimum, the other half the detuning window
    let base = DoubleDotParams {
        omega_0: TAU * p.positive("larmor_hz")?,
        delta_omega_0: TAU * p.get("larmor_difference_hz"),
        t0: 0.0,
        u,
        epsilon: 0.0,
    };
    let dot = |t0: f64| ReadoutDotParams { base: DoubleDotParams { t0, ..base }, e_st };
    let err_at = |t0: f64, eps: f64| -> Result<f64> { Ok(1.0 - readout::adiabatic_charge_transfer(&dot(t0), eps)?.p_charge) };
    let eps_read = u + e_st / 2.0;
    let t_alloc = miss / 2.0;
    let t0 = bisect_increasing(|t0| err_at(t0, eps_read), e_st * 1e-5, e_st * 0.2, t_alloc)?;
    let d_alloc = miss - t_alloc;
    let de = bisect_increasing(|d| err_at(t0, eps_read + d), 0.0, e_st * 0.499, miss)?;
    tab.info("detuning", "nominal", v(eps_read), "V", "readout.nominal_read_point");
    tab.info("detuning", "nominal energy", ev(eps_read), "eV", "budget.convert");
    tab.row("detuning", "error", v(de), "V", Some(d_alloc), None, "readout.charge_transfer");
    tab.info("detuning", "error energy", ev(de), "eV", "budget.convert");
    tab.info("detuning", "error frequency", de / TAU, "Hz", "budget.convert");
    tab.info("detuning", "noise psd", v(de) / p.positive("detuning_enbw_hz")?.sqrt(), "V/sqrt(Hz)", "noise.rms_in_enbw");
    tab.row("tunnel coupling", "nominal", t0 / TAU, "Hz", Some(t_alloc), None, "readout.charge_transfer");
    tab.info("tunnel coupling", "nominal energy", ev(t0), "eV", "budget.convert");
    tab.info("contribution", "p_charge", share, "1", "readout.p_charge");
    tab.row("contribution", "p_sense", share, "1", Some(miss), None, "readout.p_sense");

    let i_s = p.positive("signal_a")?;
    let (ns, nc) = (p.positive("sensor_noise_a_per_rthz")?, p.positive("circuit_noise_a_per_rthz")?);
    let t_read = p.positive("t_read_s")?;
    let snr_needed = bisect_increasing(|s| readout::p_detect(s), 0.0, 1e4, share)?;
    let chain = DetectorChain {
        i_s,
        s_sensor: noise::PowerSpectrum::white(noise::PsdUnit::A2PerHz, ns * ns),
        s_circuit: noise::PowerSpectrum::white(noise::PsdUnit::A2PerHz, nc * nc),
        t_read,
        threshold: None,
    };
    let snr = readout::snr(&chain, SnrMethod::White)?;
    // detection budget apportioned by rms noise amplitude
    let (ws, wc) = (ns / (ns + nc), nc / (ns + nc));
    tab.info("sensor", "signal", i_s, "A", "input");
    tab.row("sensor", "noise", DetectorChain::noise_rms(ns * ns, t_read), "A_rms", Some(miss * ws), None, "readout.snr");
    tab.info("sensor", "noise psd", ns, "A/sqrt(Hz)", "input");
    tab.row("readout circuit", "input-referred noise", DetectorChain::noise_rms(nc * nc, t_read), "A_rms", Some(miss * wc), None, "readout.snr");
    tab.info("readout circuit", "noise psd", nc, "A/sqrt(Hz)", "input");
    tab.info("detection", "t_read", t_read, "s", "input");
    tab.info("detection", "snr", snr, "1", "readout.snr");
    tab.info("detection", "snr required", snr_needed, "1", "readout.p_detect");
    tab.info("detection", "t_read minimum", snr_needed * (ns * ns + nc * nc) / (2.0 * i_s * i_s), "s", "readout.snr");
    tab.info("contribution", "p_detect", readout::p_detect(snr)?, "1", "readout.p_detect");
    tab.info("contribution", "p_detect allocated", share, "1", "readout.p_detect");
    let fid = readout::readout_fidelity(
        &readout::ReadoutBudget { p_charge: share, p_sense: share, p_detect: share },
        readout::FidelityMode::Approx,
    )?;
    tab.info("contribution", "fidelity", fid, "1", "readout.fidelity");
    Ok(tab.finish())
}

/// Root of an increasing function g(x) = target on [lo, hi].
fn bisect_increasing<F: Fn(f64) -> Result<f64>>(g: F, mut lo: f64, mut hi: f64, target: f64) -> Result<f64> {
    let (glo, ghi) = (g(lo)?, g(hi)?);
    if !(glo <= target && ghi >= target) {
        return numerical(format!("target {target:.4e} is not bracketed ({glo:.4e} .. {ghi:.4e})"));
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if g(m)? < target {
            lo = m;
        } else {
            hi = m;
        }
        if hi - lo <= 1e-10 * hi.abs() {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Error sources accepted by [`derive_custom`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    FrequencyInaccuracy,
    FrequencyNoise,
    PhaseInaccuracy,
    AmplitudeInaccuracy,
    AmplitudeNoise,
    DurationInaccuracy,
    DurationNoise,
    WidebandNoise,
    IdleFrequencyOffset,
    IdleSpur,
    IdleDriveNoise,
    FdmaSpacing,
    TwoQubitDuration,
    TwoQubitTunnel,
    TwoQubitDetuning,
    TwoQubitDetuningNoise,
    TwoQubitIdle,
}

impl Source {
    fn is_idle(self) -> bool {
        matches!(self, Source::IdleFrequencyOffset | Source::IdleSpur | Source::IdleDriveNoise | Source::FdmaSpacing | Source::TwoQubitIdle)
    }
}

/// Operating point shared by the rows of a custom budget.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct CustomContext {
    pub theta_rad: f64,
    pub rabi_hz: f64,
    pub t_nop_s: f64,
    pub drive_amplitude_v: f64,
    pub fdma_beta: f64,
    pub two_qubit_theta_rad: f64,
    pub spacing_hz: f64,
    pub charging_energy_hz: f64,
    pub epsilon_over_u: f64,
    pub lever_arm_ev_per_v: f64,
}

impl Default for CustomContext {
    fn default() -> Self {
        CustomContext {
            theta_rad: PI,
            rabi_hz: 1e6,
            t_nop_s: 500e-9,
            drive_amplitude_v: 2e-3,
            fdma_beta: 1.0,
            two_qubit_theta_rad: PI,
            spacing_hz: 1e9,
            charging_energy_hz: 1e12,
            epsilon_over_u: 0.0,
            lever_arm_ev_per_v: 0.05,
        }
    }
}

/// Inverts each (source, allocation) pair independently and composes the table.
pub fn derive_custom(request: &[(Source, f64)], c: &CustomContext) -> Result<SpecTable> {
    if request.is_empty() {
        return invalid("budget request is empty");
    }
    let omega_r = TAU * c.rabi_hz;
    let theta = c.theta_rad;
    if !(omega_r > 0.0) || theta == 0.0 {
        return invalid("custom budget needs rabi_hz > 0 and theta_rad != 0");
    }
    let t = theta.abs() / omega_r;
    let ctx = ConversionContext { lever_arm: c.lever_arm_ev_per_v, drive_scale: omega_r / c.drive_amplitude_v, ..Default::default() };
    ctx.validate()?;
    let d = TAU * c.spacing_hz;
    let u = TAU * c.charging_energy_hz;
    let tq = TwoQubitGateSpec { kind: GateKind::CPhase, theta: c.two_qubit_theta_rad, regime: Regime::DeltaEqSqrt2T0, t: 0.0 };
    let dot = DoubleDotParams { omega_0: TAU * 10e9, delta_omega_0: d, t0: d / SQRT_2, u, epsilon: c.epsilon_over_u * u };
    let tq_formula = |error, noise| Formula::TwoQubit {
        kind: tq.kind,
        regime: tq.regime,
        theta: tq.theta,
        error,
        eps_over_u: c.epsilon_over_u,
        noise,
    };
    let mut tab = SpecTable::new("custom");
    let mut op_dw = None;
    let mut idle_dw = None;
    for (k, &(src, alloc)) in request.iter().enumerate() {
        if !(alloc > 0.0) {
            return invalid(format!("row {k} ({src:?}): allocation must be positive, got {alloc}"));
        }
        let name = serde_json::to_value(src).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let (op, idle) = if src.is_idle() { (None, Some(alloc)) } else { (Some(alloc), None) };
        let inv = |f: &Formula| invert_forward(f, alloc, InversionMode::Taylor).map(|i| i.value);
        let (value, unit, id) = match src {
            Source::FrequencyInaccuracy | Source::FrequencyNoise => {
                let f = Formula::RotFrequency { theta };
                let dw = inv(&f)? * omega_r;
                op_dw = Some(dw);
                (dw / TAU, if src == Source::FrequencyNoise { "Hz_rms" } else { "Hz" }, f.id())
            }
            Source::PhaseInaccuracy => {
                let f = Formula::RotPhase { theta };
                (inv(&f)?.to_degrees(), "deg", f.id())
            }
            Source::AmplitudeInaccuracy | Source::AmplitudeNoise => {
                let f = Formula::RotAmplitude { theta };
                (inv(&f)? * c.drive_amplitude_v, if src == Source::AmplitudeNoise { "V_rms" } else { "V" }, f.id())
            }
            Source::DurationInaccuracy | Source::DurationNoise => {
                let f = Formula::RotDuration { theta };
                (inv(&f)? * t, if src == Source::DurationNoise { "s_rms" } else { "s" }, f.id())
            }
            Source::WidebandNoise => {
                let h = noise::FilterResponse::new(noise::FilterKind::Additive, theta, omega_r)?;
                let f = Formula::Brickwall { dc_gain: h.dc_gain, enbw_hz: h.enbw / TAU, sides: sides(&h), omega_r };
                (inv(&f)?.sqrt() / ctx.drive_scale, "V/sqrt(Hz)", f.id())
            }
            Source::IdleFrequencyOffset => {
                let dw = inv(&Formula::ZPhase)? / c.t_nop_s;
                idle_dw = Some(dw);
                (dw / TAU, "Hz", "onequbit.idle_frequency")
            }
            Source::IdleSpur => (ctx.rabi_to_volts(inv(&Formula::ZPhase)? / c.t_nop_s), "V", "onequbit.idle_spur"),
            Source::IdleDriveNoise => {
                let h = noise::FilterResponse::idle(c.t_nop_s, omega_r)?;
                let f = Formula::Brickwall { dc_gain: h.dc_gain, enbw_hz: h.enbw / TAU, sides: sides(&h), omega_r };
                (inv(&f)?.sqrt() / ctx.drive_scale, "V/sqrt(Hz)", "onequbit.idle_drive_noise")
            }
            Source::FdmaSpacing => {
                let f = Formula::Fdma { theta, beta: c.fdma_beta };
                let r = invert_forward(&f, alloc, InversionMode::Taylor)?;
                if let Some(flag) = r.flag {
                    tab.warnings.push(format!("row {k} ({name}): {flag}"));
                }
                (r.value * omega_r / TAU, "Hz", f.id())
            }
            Source::TwoQubitDuration => {
                let (_, tg) = twoqubit::operating_point(&tq, &dot)?;
                (inv(&tq_formula(GateErrorKind::Duration, false))? * tg, "s", "twoqubit.gate_inaccuracy")
            }
            Source::TwoQubitTunnel => (inv(&tq_formula(GateErrorKind::Tunnel, false))? * dot.t0 / TAU, "Hz", "twoqubit.gate_inaccuracy"),
            Source::TwoQubitDetuning => (from_rad_s(inv(&tq_formula(GateErrorKind::Detuning, false))? * u, EnergyUnit::Volt, &ctx), "V", "twoqubit.gate_inaccuracy"),
            Source::TwoQubitDetuningNoise => {
                (from_rad_s(inv(&tq_formula(GateErrorKind::Detuning, true))? * u, EnergyUnit::Volt, &ctx), "V_rms", "twoqubit.gate_noise")
            }
            Source::TwoQubitIdle => {
                let w = inv(&Formula::TwoQubitIdle { kind: tq.kind, regime: tq.regime, t_nop: c.t_nop_s })?;
                ((w * u / 4.0).sqrt() / TAU, "Hz", "twoqubit.idle")
            }
        };
        tab.row("custom", &name, value, unit, op, idle, id);
    }
    if let (Some(a), Some(b)) = (op_dw, idle_dw) {
        if b < a {
            tab.warnings.push(format!(
                "idle frequency offset ({:.3e} Hz) is stricter than the operation requirement ({:.3e} Hz); the idle row sets the oscillator spec",
                b / TAU,
                a / TAU
            ));
        }
    } else if let Some(a) = op_dw {
        let implied = Formula::ZPhase.forward(a * c.t_nop_s)?.taylor;
        let op_alloc = request.iter().find(|r| r.0 == Source::FrequencyInaccuracy || r.0 == Source::FrequencyNoise).map(|r| r.1).unwrap_or(0.0);
        if implied > op_alloc {
            tab.warnings.push(format!("the operation frequency spec implies an idle infidelity of {implied:.3e}, above its operation allocation"));
        }
    }
    Ok(tab.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn conversions() {
        let ctx = ConversionContext::default();
        let e = convert(83e-3, EnergyUnit::Volt, EnergyUnit::ElectronVolt, &ctx).unwrap();
        assert!(rel(e, 4.15e-3) < 1e-12);
        let f = convert(83e-3, EnergyUnit::Volt, EnergyUnit::Hertz, &ctx).unwrap();
        assert!(rel(f, 1.0e12) < 0.01);
        let g = convert(50e-6, EnergyUnit::ElectronVolt, EnergyUnit::Hertz, &ctx).unwrap();
        assert!(rel(g, 12.1e9) < 0.01);
        assert_eq!(convert(1.234, EnergyUnit::Hertz, EnergyUnit::Hertz, &ctx).unwrap(), 1.234);
        let units = [EnergyUnit::Volt, EnergyUnit::ElectronVolt, EnergyUnit::Hertz, EnergyUnit::RadPerSecond];
        for a in units {
            for b in units {
                for c in units {
                    let x = 0.37;
                    let two = convert(convert(x, a, b, &ctx).unwrap(), b, c, &ctx).unwrap();
                    let one = convert(x, a, c, &ctx).unwrap();
                    assert!(rel(two, one) < 1e-12);
                }
            }
        }
        assert!(convert(1.0, EnergyUnit::Volt, EnergyUnit::Hertz, &ConversionContext { lever_arm: 0.0, ..ctx }).is_err());
    }

    #[test]
    fn inversions_match_print() {
        let f = Formula::RotFrequency { theta: PI };
        let df = invert_forward(&f, 1.25e-4, InversionMode::Taylor).unwrap().value * 1e6;
        assert!(rel(df, 11.2e3) < 0.01, "{df}");
        let d = Formula::RotDuration { theta: PI };
        let dt = invert_forward(&d, 1.25e-4, InversionMode::Taylor).unwrap().value * 500e-9;
        assert!(rel(dt, 3.58e-9) < 0.01, "{dt}");
        let c = Formula::TwoQubit {
            kind: GateKind::CPhase,
            regime: Regime::DeltaEqSqrt2T0,
            theta: PI,
            error: GateErrorKind::Duration,
            eps_over_u: 0.95,
            noise: false,
        };
        let dt = invert_forward(&c, 3.33e-4, InversionMode::Taylor).unwrap().value * 25e-9;
        assert!(rel(dt, 0.58e-9) < 0.01, "{dt}");
    }

    #[test]
    fn round_trips() {
        let fs = [
            Formula::RotFrequency { theta: PI / 2.0 },
            Formula::RotPhase { theta: PI },
            Formula::RotAmplitude { theta: 1.0 },
            Formula::RotDuration { theta: PI },
            Formula::ZPhase,
            Formula::Brickwall { dc_gain: 2.0, enbw_hz: 1e6, sides: 2.0, omega_r: 1e7 },
            Formula::TwoQubit { kind: GateKind::Exchange, regime: Regime::DeltaZero, theta: PI, error: GateErrorKind::Detuning, eps_over_u: 0.0, noise: true },
            Formula::TwoQubit { kind: GateKind::CPhase, regime: Regime::DeltaEqOmegaOp, theta: PI, error: GateErrorKind::Tunnel, eps_over_u: 0.3, noise: false },
            Formula::TwoQubitIdle { kind: GateKind::CPhase, regime: Regime::DeltaZero, t_nop: 1e-6 },
        ];
        for f in fs {
            for target in [1e-6, 1e-4, 1e-3] {
                let r = invert_forward(&f, target, InversionMode::Taylor).unwrap();
                assert!(r.roundtrip < 1e-6);
                assert!(rel(f.forward(r.value).unwrap().taylor, target) < 1e-6);
                let e = invert_forward(&f, target, InversionMode::Exact).unwrap();
                assert!(rel(f.forward(e.value).unwrap().exact, target) < 1e-6);
            }
        }
        assert!(invert_forward(&Formula::ZPhase, 0.0, InversionMode::Taylor).is_err());
        assert!(invert_forward(&Formula::ZPhase, 0.7, InversionMode::Taylor).is_err());
    }

    #[test]
    fn fdma_inversion_is_flagged() {
        let f = Formula::Fdma { theta: PI, beta: 1.0 };
        let r = invert_forward(&f, 1e-3, InversionMode::Exact).unwrap();
        assert_eq!(r.method, InversionMethod::ConservativeBound);
        assert!(r.flag.is_some());
        assert!(rel(r.value, 31.6) < 0.01);
    }

    #[test]
    fn custom_single_source_is_direct_inversion() {
        let t = derive_custom(&[(Source::DurationInaccuracy, 1.25e-4)], &CustomContext::default()).unwrap();
        let d = invert_forward(&Formula::RotDuration { theta: PI }, 1.25e-4, InversionMode::Taylor).unwrap().value * 500e-9;
        assert_eq!(t.items[0].value, d);
        assert!(derive_custom(&[(Source::PhaseInaccuracy, 0.0)], &CustomContext::default()).is_err());
    }

    #[test]
    fn custom_equal_split_has_table1_structure() {
        let srcs = [
            Source::FrequencyInaccuracy,
            Source::FrequencyNoise,
            Source::WidebandNoise,
            Source::PhaseInaccuracy,
            Source::AmplitudeInaccuracy,
            Source::AmplitudeNoise,
            Source::DurationInaccuracy,
            Source::DurationNoise,
        ];
        let req: Vec<(Source, f64)> = srcs.iter().map(|s| (*s, 1e-3 / 8.0)).collect();
        let t = derive_custom(&req, &CustomContext::default()).unwrap();
        assert!(rel(t.total_operation, 1e-3) < 1e-12);
        assert!(rel(t.items[0].value, 11.2e3) < 0.01);
        assert!(rel(t.items[3].value, 0.64) < 0.01);
        assert!(rel(t.items[4].value, 14e-6) < 0.03);
        assert!(!t.warnings.is_empty());
    }

    fn val(t: &SpecTable, s: &str, i: &str) -> f64 {
        t.find(s, i).unwrap_or_else(|| panic!("missing {s}/{i}")).value
    }

    fn op(t: &SpecTable, s: &str, i: &str) -> f64 {
        t.find(s, i).unwrap().infidelity_operation.unwrap()
    }

    fn idle(t: &SpecTable, s: &str, i: &str) -> f64 {
        t.find(s, i).unwrap().infidelity_idle.unwrap()
    }

    #[test]
    fn single_qubit_table_matches_print() {
        let t = case_study("table1", &Overrides::new()).unwrap();
        assert!(t.total_operation <= 1e-3 + 1e-15 && t.total_idle <= 1e-3 + 1e-15);
        let checks = [
            (val(&t, "frequency", "inaccuracy"), 11e3, 0.03),
            (op(&t, "frequency", "inaccuracy"), 125e-6, 0.01),
            (idle(&t, "frequency", "inaccuracy"), 308e-6, 0.01),
            (op(&t, "frequency", "nominal"), 0.64e-9, 0.05),
            (idle(&t, "frequency", "spacing"), 1e-6, 0.01),
            (val(&t, "frequency", "oscillator noise enbw"), 2.5e6, 0.02),
            (op(&t, "frequency", "nuclear spin noise"), 3.6e-6, 0.01),
            (idle(&t, "frequency", "nuclear spin noise"), 8.9e-6, 0.01),
            (val(&t, "frequency", "wideband noise"), 12e-6, 0.01),
            (val(&t, "frequency", "wideband noise enbw"), 2.9e6, 0.02),
            (val(&t, "frequency", "wideband noise psd"), 7.1e-9, 0.01),
            (val(&t, "phase", "inaccuracy"), 0.64, 0.01),
            (idle(&t, "phase", "inaccuracy"), 31e-6, 0.01),
            (val(&t, "amplitude", "inaccuracy"), 14e-6, 0.02),
            (val(&t, "amplitude", "noise psd"), 14e-9, 0.02),
            (val(&t, "amplitude", "off-spur"), 19e-6, 0.01),
            (idle(&t, "amplitude", "off-spur"), 217e-6, 0.02),
            (val(&t, "amplitude", "off-noise"), 10e-6, 0.01),
            (val(&t, "amplitude", "off-noise enbw"), 2.0e6, 0.01),
            (val(&t, "duration", "inaccuracy"), 3.6e-9, 0.02),
        ];
        for (k, (got, want, tol)) in checks.iter().enumerate() {
            assert!(rel(*got, *want) < *tol, "check {k}: {got} vs {want}");
        }
        assert!((val(&t, "frequency", "oscillator noise L") + 106.0).abs() < 0.5);
        assert!((val(&t, "amplitude", "noise snr") + 40.0).abs() < 0.5);
        assert!((val(&t, "amplitude", "off-spur level") + 41.0).abs() < 1.0);
    }

    #[test]
    fn two_qubit_tables_match_print() {
        let t = case_study("table3", &Overrides::new()).unwrap();
        let checks = [
            (op(&t, "frequency", "inaccuracy"), 77e-6),
            (idle(&t, "frequency", "inaccuracy"), 308e-6),
            (op(&t, "frequency", "nuclear spin noise"), 2.2e-6),
            (val(&t, "charging energy", "nominal"), 83e-3),
            (val(&t, "duration", "nominal"), 250e-9),
            (val(&t, "duration", "error"), 5.3e-9),
            (op(&t, "duration", "error"), 281e-6),
            (val(&t, "detuning", "error"), 12e-3),
            (val(&t, "detuning", "error energy"), 0.60e-3),
            (val(&t, "detuning", "noise"), 9.2e-3),
            (val(&t, "detuning", "noise psd"), 2.9e-6),
            (val(&t, "tunnel coupling", "nominal"), 0.71e9),
            (val(&t, "tunnel coupling", "error"), 7.5e6),
            (val(&t, "tunnel coupling", "off-value"), 78e6),
            (idle(&t, "tunnel coupling", "off-value"), 374e-6),
        ];
        for (k, (got, want)) in checks.iter().enumerate() {
            assert!(rel(*got, *want) < 0.02, "table3 check {k}: {got} vs {want}");
        }
        assert!((val(&t, "tunnel coupling", "on/off ratio") - 9.0).abs() < 0.5);

        let t = case_study("table4", &Overrides::new()).unwrap();
        let checks = [
            (op(&t, "frequency", "inaccuracy"), 0.8e-6, 0.1),
            (val(&t, "duration", "nominal"), 25e-9, 0.03),
            (val(&t, "duration", "error"), 0.58e-9, 0.03),
            (op(&t, "duration", "error"), 333e-6, 0.01),
            (val(&t, "detuning", "nominal"), 78e-3, 0.01),
            (val(&t, "detuning", "error"), 0.10e-3, 0.03),
            (val(&t, "detuning", "error energy"), 5.1e-6, 0.04),
            (val(&t, "detuning", "error frequency"), 1.2e9, 0.01),
            (val(&t, "detuning", "noise psd"), 10e-9, 0.03),
            (val(&t, "tunnel coupling", "error"), 8.2e6, 0.01),
            (val(&t, "tunnel coupling", "off-value"), 78e6, 0.01),
        ];
        for (k, (got, want, tol)) in checks.iter().enumerate() {
            assert!(rel(*got, *want) < *tol, "table4 check {k}: {got} vs {want}");
        }
    }

    #[test]
    fn readout_table_matches_print() {
        let t = case_study("table5", &Overrides::new()).unwrap();
        assert!(rel(t.total_operation, 1e-3) < 2e-3);
        let checks = [
            (val(&t, "charging energy", "nominal"), 82.7e-3, 0.01),
            (val(&t, "singlet-triplet energy", "nominal frequency"), 12e9, 0.01),
            (val(&t, "detuning", "nominal"), 83.2e-3, 0.01),
            (val(&t, "detuning", "error"), 0.24e-3, 0.03),
            (val(&t, "detuning", "error frequency"), 2.8e9, 0.02),
            (val(&t, "detuning", "noise psd"), 0.24e-6, 0.03),
            (op(&t, "detuning", "error"), 167e-6, 0.01),
            (val(&t, "tunnel coupling", "nominal"), 39e6, 0.02),
            (val(&t, "contribution", "p_charge"), 0.99967, 1e-5),
            (val(&t, "sensor", "noise"), 53e-12, 0.03),
            (op(&t, "sensor", "noise"), 222e-6, 0.01),
            (val(&t, "readout circuit", "input-referred noise"), 26e-12, 0.02),
            (op(&t, "readout circuit", "input-referred noise"), 111e-6, 0.02),
            (val(&t, "detection", "snr required"), 46.0, 0.01),
        ];
        for (k, (got, want, tol)) in checks.iter().enumerate() {
            assert!(rel(*got, *want) < *tol, "table5 check {k}: {got} vs {want}");
        }
    }

    #[test]
    fn overrides_propagate() {
        let mut o = Overrides::new();
        o.insert("rabi_hz".into(), 2e6);
        let base = case_study("table1", &Overrides::new()).unwrap();
        let t = case_study("table1", &o).unwrap();
        assert!(rel(val(&t, "duration", "nominal"), 250e-9) < 1e-12);
        assert!(val(&t, "frequency", "inaccuracy") > 1.9 * val(&base, "frequency", "inaccuracy"));
        o.insert("target_infidelity".into(), 1e-9);
        assert!(case_study("table1", &o).is_err());
    }

    #[test]
    fn unknown_override_rejected() {
        let mut o = Overrides::new();
        o.insert("rabi_mhz".into(), 1.0);
        let e = case_study("table1", &o).unwrap_err().to_string();
        assert!(e.contains("rabi_mhz"));
        assert!(case_study("table9", &Overrides::new()).is_err());
    }
}
