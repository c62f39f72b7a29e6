//! Command configs and their evaluation.
//!
//! Every config is a flat JSON object; numeric keys carry their unit as a
//! suffix (`_hz`, `_rad`, `_s`, `_v`, `_a`, `_ev`, `_rel`). Unknown keys are
//! rejected. Spectra are given inline as a `PowerSpectrum` object or as the path
//! of a two-column CSV with header `f_hz,psd_<unit>`, unit one of
//! `rad2_per_hz`, `radps2_per_hz`, `v2_per_hz`, `a2_per_hz`.
//!
//! Column headers:
//! - single-gate, two-qubit, readout: `section,quantity,x,y,unit,value,value_ref,formula`
//! - filters: `theta_rad,omega_over_omega_r,h2_amplitude,h2_frequency,h2_additive,formula`
//! - rwa-sweep: `ratio,theta_rad,phi_rad,infidelity,formula`
//! - fdma: `alpha,beta,theta_rad,envelope,f_raw,f_z_corrected,f_z_corrected_approx,f_z_corrected_bound,pauli_i,pauli_x,pauli_y,pauli_z,formula`
//! - derive: `section,item,value,unit,infidelity_operation,infidelity_idle,applies_to,formula`

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use super::report::{Cell, Report};
use crate::budget::{self, CustomContext, Overrides, Source};
use crate::error::{invalid, Error, Result};
use crate::noise::{self, FilterKind, FilterResponse, PowerSpectrum, PsdUnit};
use crate::onequbit::{self, Envelope, FdmaScenario, IdleScenario, QuasiStaticKind, StaticKind};
use crate::readout::{self, DetectorChain, ReadoutDotParams, SnrMethod, SplittingSweep};
use crate::twoqubit::{self, DoubleDotParams, EigenMethod, GateError, GateErrorKind, GateKind, Regime, TwoQubitGateSpec};
use crate::TAU;

pub const GENERIC_COLUMNS: [&str; 8] = ["section", "quantity", "x", "y", "unit", "value", "value_ref", "formula"];

fn parse<T: DeserializeOwned>(v: &Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| Error::Validation(format!("config: {e}")))
}

fn generic_row(section: &str, quantity: &str, x: Cell, y: Cell, unit: &str, value: Cell, value_ref: Cell, formula: &str) -> Vec<Cell> {
    vec![section.into(), quantity.into(), x, y, unit.into(), value, value_ref, formula.into()]
}

/// An explicit list, or `{start, stop, points, scale}` with scale `lin` or `log`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        points: usize,
        #[serde(default)]
        scale: Scale,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Lin,
    Log,
}

impl Grid {
    pub fn values(&self, key: &str) -> Result<Vec<f64>> {
        let v = match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, points, scale } => {
                if *points < 2 {
                    return invalid(format!("{key}: a range needs at least 2 points"));
                }
                let n = *points;
                match scale {
                    Scale::Lin => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
                    Scale::Log => {
                        if !(*start > 0.0 && *stop > 0.0) {
                            return invalid(format!("{key}: a log range needs positive ends"));
                        }
                        let (a, b) = (start.ln(), stop.ln());
                        (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
                    }
                }
            }
        };
        if v.is_empty() {
            return invalid(format!("{key}: grid is empty"));
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return invalid(format!("{key}: non-finite grid value {x}"));
        }
        Ok(v)
    }
}

/// Inline spectrum object or CSV path.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(transparent)]
pub struct SpectrumInput(pub Value);

impl SpectrumInput {
    fn load(&self, key: &str) -> Result<PowerSpectrum> {
        let s = match &self.0 {
            Value::String(p) => PowerSpectrum::from_csv_path(Path::new(p)),
            v => serde_json::from_value::<PowerSpectrum>(v.clone())
                .map_err(|e| Error::Validation(e.to_string()))
                .and_then(|s| s.validate().map(|_| s)),
        };
        s.map_err(|e| Error::Validation(format!("{key}: {e}")))
    }
}

fn need_seed(seed: Option<u64>, key: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::Validation(format!("{key} > 0 requests a Monte-Carlo run and needs an explicit seed (--seed N)")))
}

// ---------------------------------------------------------------- single-gate

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SingleGateConfig {
    pub theta_rad: f64,
    pub rabi_hz: f64,
    pub larmor_hz: f64,
    pub frequency_error_hz: f64,
    pub phase_error_rad: f64,
    pub amplitude_error_rel: f64,
    pub duration_error_rel: f64,
    pub z_phase_error_rad: f64,
    pub frequency_sigma_hz: f64,
    pub phase_sigma_rad: f64,
    pub amplitude_sigma_rel: f64,
    pub duration_sigma_rel: f64,
    /// Phase (rad2_per_hz) or frequency (radps2_per_hz) noise of the carrier.
    pub frequency_noise: Option<SpectrumInput>,
    /// Envelope amplitude noise, v2_per_hz or radps2_per_hz.
    pub amplitude_noise: Option<SpectrumInput>,
    /// Additive drive-line noise, v2_per_hz or radps2_per_hz.
    pub additive_noise: Option<SpectrumInput>,
    pub drive_scale_radps_per_v: f64,
    /// Sets the low-frequency cutoff ω_min = 2π / duration.
    pub algorithm_duration_s: f64,
    pub verify_propagation: bool,
    pub monte_carlo_draws: usize,
    pub t_nop_s: Option<f64>,
    pub idle_frequency_offset_hz: f64,
    pub idle_spur_v: f64,
    pub idle_noise: Option<SpectrumInput>,
}

impl Default for SingleGateConfig {
    fn default() -> Self {
        SingleGateConfig {
            theta_rad: PI,
            rabi_hz: 1e6,
            larmor_hz: 10e9,
            frequency_error_hz: 0.0,
            phase_error_rad: 0.0,
            amplitude_error_rel: 0.0,
            duration_error_rel: 0.0,
            z_phase_error_rad: 0.0,
            frequency_sigma_hz: 0.0,
            phase_sigma_rad: 0.0,
            amplitude_sigma_rel: 0.0,
            duration_sigma_rel: 0.0,
            frequency_noise: None,
            amplitude_noise: None,
            additive_noise: None,
            drive_scale_radps_per_v: budget::ConversionContext::default().drive_scale,
            algorithm_duration_s: 1.0,
            verify_propagation: false,
            monte_carlo_draws: 0,
            t_nop_s: None,
            idle_frequency_offset_hz: 0.0,
            idle_spur_v: 0.0,
            idle_noise: None,
        }
    }
}

fn to_angular(s: PowerSpectrum, scale: f64, key: &str) -> Result<PowerSpectrum> {
    match s.unit {
        PsdUnit::Rad2PerHz => invalid(format!("{key}: phase noise (rad2_per_hz) is only accepted for frequency_noise")),
        _ => s.to_angular(scale),
    }
}

fn static_kind_name(k: StaticKind) -> (&'static str, &'static str, &'static str) {
    match k {
        StaticKind::ZPhase => ("z_phase", "rad", "onequbit.z_phase"),
        StaticKind::Frequency => ("frequency", "Hz", "onequbit.freq_inaccuracy"),
        StaticKind::Phase => ("phase", "rad", "onequbit.phase_inaccuracy"),
        StaticKind::Amplitude => ("amplitude", "rel", "onequbit.amplitude_inaccuracy"),
        StaticKind::Duration => ("duration", "rel", "onequbit.duration_inaccuracy"),
    }
}

pub fn single_gate(v: &Value, seed: Option<u64>) -> Result<Report> {
    let c: SingleGateConfig = parse(v)?;
    let omega_r = TAU * c.rabi_hz;
    if !(omega_r > 0.0) {
        return invalid("rabi_hz must be positive");
    }
    if !(c.drive_scale_radps_per_v > 0.0) {
        return invalid("drive_scale_radps_per_v must be positive");
    }
    if !(c.algorithm_duration_s > 0.0) {
        return invalid("algorithm_duration_s must be positive");
    }
    let (theta, reduced) = onequbit::clamp_angle(c.theta_rad);
    let mut r = Report::new("single-gate", &GENERIC_COLUMNS);
    if reduced {
        r.warnings.push(format!("theta_rad reduced to {theta} in (-pi, pi]"));
    }
    let omega_min = TAU / c.algorithm_duration_s;
    let mut total_op = 0.0;

    let statics = [
        (StaticKind::ZPhase, c.z_phase_error_rad, c.z_phase_error_rad),
        (StaticKind::Frequency, TAU * c.frequency_error_hz / omega_r, c.frequency_error_hz),
        (StaticKind::Phase, c.phase_error_rad, c.phase_error_rad),
        (StaticKind::Amplitude, c.amplitude_error_rel, c.amplitude_error_rel),
        (StaticKind::Duration, c.duration_error_rel, c.duration_error_rel),
    ];
    for (kind, x, shown) in statics {
        if x == 0.0 {
            continue;
        }
        let (name, unit, id) = static_kind_name(kind);
        let f = onequbit::fid_static(kind, theta, x);
        total_op += 1.0 - f.exact;
        r.push(generic_row("static", name, shown.into(), Cell::Empty, unit, (1.0 - f.taylor).into(), (1.0 - f.exact).into(), id));
        if c.verify_propagation {
            let (ideal, real) = onequbit::static_error_unitaries(kind, theta, x)?;
            let fp = crate::qcore::process_fidelity(&ideal, &real)?;
            r.push(generic_row("propagation", name, shown.into(), Cell::Empty, unit, (1.0 - f.exact).into(), (1.0 - fp).into(), "qcore.process_fidelity"));
        }
    }

    let quasi = [
        (QuasiStaticKind::Frequency, StaticKind::Frequency, TAU * c.frequency_sigma_hz / omega_r, c.frequency_sigma_hz, "Hz_rms"),
        (QuasiStaticKind::Phase, StaticKind::Phase, c.phase_sigma_rad, c.phase_sigma_rad, "rad_rms"),
        (QuasiStaticKind::Amplitude, StaticKind::Amplitude, c.amplitude_sigma_rel, c.amplitude_sigma_rel, "rel_rms"),
        (QuasiStaticKind::Duration, StaticKind::Duration, c.duration_sigma_rel, c.duration_sigma_rel, "rel_rms"),
    ];
    let mut rng = if c.monte_carlo_draws > 0 { Some(ChaCha8Rng::seed_from_u64(need_seed(seed, "monte_carlo_draws")?)) } else { None };
    for (qk, sk, sigma, shown, unit) in quasi {
        if sigma == 0.0 {
            continue;
        }
        if sigma < 0.0 {
            return invalid(format!("{} sigma must be non-negative", static_kind_name(sk).0));
        }
        let f = onequbit::quasi_static_expectation(qk, theta, sigma)?;
        total_op += 1.0 - f;
        let mc = match rng.as_mut() {
            Some(rng) => {
                let d = Normal::new(0.0, sigma).map_err(|e| Error::Validation(e.to_string()))?;
                let n = c.monte_carlo_draws;
                let mean: f64 = (0..n).map(|_| 1.0 - onequbit::fid_static(sk, theta, d.sample(rng)).exact).sum::<f64>() / n as f64;
                Cell::Num(mean)
            }
            None => Cell::Empty,
        };
        r.push(generic_row("quasi_static", static_kind_name(sk).0, shown.into(), Cell::Empty, unit, (1.0 - f).into(), mc, "onequbit.quasi_static"));
    }

    let omega_0 = TAU * c.larmor_hz;
    let noises = [
        (&c.frequency_noise, FilterKind::Frequency, "frequency_noise", "noise.filter_frequency"),
        (&c.amplitude_noise, FilterKind::Amplitude, "amplitude_noise", "noise.filter_amplitude"),
        (&c.additive_noise, FilterKind::Additive, "additive_noise", "noise.filter_additive"),
    ];
    for (input, kind, key, id) in noises {
        let Some(input) = input else { continue };
        let s = input.load(key)?;
        let s = if kind == FilterKind::Frequency {
            match s.unit {
                PsdUnit::Rad2PerHz => noise::phase_to_frequency_spectrum(&s)?,
                PsdUnit::AngFreq2PerHz => s,
                u => return invalid(format!("{key}: expected rad2_per_hz or radps2_per_hz, got {}", u.tag())),
            }
        } else {
            to_angular(s, c.drive_scale_radps_per_v, key)?
        };
        let h = FilterResponse::new(kind, theta, omega_r)?.with_center(omega_0);
        let q = noise::filtered_infidelity(&s, &h, omega_r, omega_min).map_err(|e| tag_err(e, key))?;
        let b = noise::brickwall_infidelity(&s, &h, omega_r, omega_min).map_err(|e| tag_err(e, key))?;
        total_op += q;
        r.push(generic_row("noise", key, (h.enbw / TAU).into(), h.dc_gain.into(), "enbw_hz,dc_gain", q.into(), b.into(), id));
    }
    r.push(generic_row("total", "operation", Cell::Empty, Cell::Empty, "", total_op.into(), Cell::Empty, "sum"));

    let t_nop = c.t_nop_s.unwrap_or(theta.abs() / omega_r);
    let has_idle = c.idle_frequency_offset_hz != 0.0 || c.idle_spur_v != 0.0 || c.idle_noise.is_some();
    if has_idle {
        let s_drive = match &c.idle_noise {
            Some(i) => Some(to_angular(i.load("idle_noise")?, c.drive_scale_radps_per_v, "idle_noise")?),
            None => None,
        };
        let sc = IdleScenario {
            t_nop,
            delta_omega: TAU * c.idle_frequency_offset_hz,
            omega_spur: c.idle_spur_v * c.drive_scale_radps_per_v,
            s_drive,
            omega_0,
            omega_r,
        };
        let b = onequbit::idle_fidelity(&sc, omega_min)?;
        let mut total_idle = 0.0;
        if c.idle_frequency_offset_hz != 0.0 {
            total_idle += 1.0 - b.freq_offset.exact;
            let f = b.freq_offset;
            r.push(generic_row("idle", "frequency_offset", c.idle_frequency_offset_hz.into(), t_nop.into(), "Hz,s", (1.0 - f.taylor).into(), (1.0 - f.exact).into(), "onequbit.idle_frequency"));
        }
        if c.idle_spur_v != 0.0 {
            total_idle += 1.0 - b.spur.exact;
            let f = b.spur;
            r.push(generic_row("idle", "spur", c.idle_spur_v.into(), t_nop.into(), "V,s", (1.0 - f.taylor).into(), (1.0 - f.exact).into(), "onequbit.idle_spur"));
        }
        if c.idle_noise.is_some() {
            total_idle += b.drive_noise;
            r.push(generic_row("idle", "drive_noise", Cell::Empty, t_nop.into(), "s", b.drive_noise.into(), b.drive_noise_brickwall.into(), "onequbit.idle_drive_noise"));
        }
        r.push(generic_row("total", "idle", Cell::Empty, t_nop.into(), "s", total_idle.into(), Cell::Empty, "sum"));
    }
    Ok(r)
}

fn tag_err(e: Error, key: &str) -> Error {
    match e {
        Error::Validation(m) => Error::Validation(format!("{key}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("{key}: {m}")),
    }
}

// -------------------------------------------------------------------- filters

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiltersConfig {
    pub thetas_rad: Vec<f64>,
    /// ω/ω_R offsets.
    pub omega_over_omega_r: Grid,
}

impl Default for FiltersConfig {
    fn default() -> Self {
        FiltersConfig {
            thetas_rad: vec![PI / 4.0, PI / 2.0, PI],
            omega_over_omega_r: Grid::Range { start: 1e-2, stop: 1e2, points: 401, scale: Scale::Log },
        }
    }
}

pub fn filters(v: &Value, _seed: Option<u64>) -> Result<Report> {
    let c: FiltersConfig = parse(v)?;
    let grid = c.omega_over_omega_r.values("omega_over_omega_r")?;
    if c.thetas_rad.is_empty() {
        return invalid("thetas_rad is empty");
    }
    let mut r = Report::new("filters", &["theta_rad", "omega_over_omega_r", "h2_amplitude", "h2_frequency", "h2_additive", "formula"]);
    for &th in &c.thetas_rad {
        if !th.is_finite() || th == 0.0 {
            return invalid(format!("thetas_rad: theta must be finite and nonzero, got {th}"));
        }
        let rows: Vec<Vec<Cell>> = grid
            .par_iter()
            .map(|&a| {
                let ha = noise::h2_amplitude(a, th);
                let hf = noise::h2_frequency(a, th);
                vec![th.into(), a.into(), ha.into(), hf.into(), (ha + hf).into(), "noise.filter_functions".into()]
            })
            .collect();
        rows.into_iter().for_each(|row| r.push(row));
    }
    Ok(r)
}

// ------------------------------------------------------------------ rwa-sweep

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RwaConfig {
    /// ω_0/ω_R.
    pub ratios: Grid,
    pub thetas_rad: Vec<f64>,
    pub phi_rad: f64,
    pub samples_per_carrier: Option<usize>,
}

impl Default for RwaConfig {
    fn default() -> Self {
        RwaConfig {
            ratios: Grid::Range { start: 10.0, stop: 1000.0, points: 9, scale: Scale::Log },
            thetas_rad: vec![PI / 2.0, PI],
            phi_rad: 0.0,
            samples_per_carrier: None,
        }
    }
}

pub fn rwa_sweep(v: &Value, _seed: Option<u64>) -> Result<Report> {
    let c: RwaConfig = parse(v)?;
    let ratios = c.ratios.values("ratios")?;
    let pairs: Vec<(f64, f64)> = ratios.iter().flat_map(|&a| c.thetas_rad.iter().map(move |&t| (a, t))).collect();
    let pts: Vec<Result<onequbit::RwaPoint>> = pairs
        .par_iter()
        .map(|&(a, t)| onequbit::rwa_validity_sweep(&[a], &[t], c.phi_rad, c.samples_per_carrier).map(|v| v[0]))
        .collect();
    let mut r = Report::new("rwa-sweep", &["ratio", "theta_rad", "phi_rad", "infidelity", "formula"]);
    for p in pts {
        let p = p?;
        r.push(vec![p.ratio.into(), p.theta.into(), c.phi_rad.into(), (1.0 - p.fidelity).into(), "onequbit.rwa_validity".into()]);
    }
    Ok(r)
}

// ----------------------------------------------------------------------- fdma

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeName {
    #[default]
    Rectangular,
    Gaussian,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdmaConfig {
    /// Spacing over Rabi frequency.
    pub alphas: Grid,
    pub beta: f64,
    pub theta_rad: f64,
    pub envelope: EnvelopeName,
    /// Gaussian σ_t in units of 1/ω_R; derived from θ when absent.
    pub sigma_t: Option<f64>,
    pub target_fidelity: Option<f64>,
}

impl Default for FdmaConfig {
    fn default() -> Self {
        FdmaConfig {
            alphas: Grid::Range { start: 0.5, stop: 50.0, points: 100, scale: Scale::Lin },
            beta: 1.0,
            theta_rad: PI,
            envelope: EnvelopeName::Rectangular,
            sigma_t: None,
            target_fidelity: None,
        }
    }
}

pub fn fdma(v: &Value, _seed: Option<u64>) -> Result<Report> {
    let c: FdmaConfig = parse(v)?;
    let alphas = c.alphas.values("alphas")?;
    let envelope = match c.envelope {
        EnvelopeName::Rectangular => Envelope::Rectangular,
        EnvelopeName::Gaussian => Envelope::Gaussian { sigma_t: c.sigma_t.unwrap_or(0.0) },
    };
    let name = match c.envelope {
        EnvelopeName::Rectangular => "rectangular",
        EnvelopeName::Gaussian => "gaussian",
    };
    let res: Vec<Result<onequbit::FdmaResult>> = alphas
        .par_iter()
        .map(|&a| onequbit::fdma_unaddressed(&FdmaScenario { alpha: a, beta: c.beta, theta: c.theta_rad, envelope }))
        .collect();
    let mut r = Report::new(
        "fdma",
        &[
            "alpha", "beta", "theta_rad", "envelope", "f_raw", "f_z_corrected", "f_z_corrected_approx", "f_z_corrected_bound", "pauli_i", "pauli_x",
            "pauli_y", "pauli_z", "formula",
        ],
    );
    for (a, x) in alphas.iter().zip(res) {
        let x = x?;
        let d = x.decomposition;
        r.push(vec![
            (*a).into(),
            c.beta.into(),
            c.theta_rad.into(),
            name.into(),
            x.f_raw.into(),
            x.f_z_corrected.into(),
            x.f_z_corrected_approx.into(),
            x.f_z_corrected_bound.into(),
            d.i.norm_sqr().into(),
            d.x.norm_sqr().into(),
            d.y.norm_sqr().into(),
            d.z.norm_sqr().into(),
            "onequbit.fdma".into(),
        ]);
    }
    if let Some(f) = c.target_fidelity {
        if !(f > 0.0 && f < 1.0) {
            return invalid(format!("target_fidelity must lie in (0, 1), got {f}"));
        }
        let a = onequbit::fdma_min_spacing(c.beta, f);
        let mut row = vec![Cell::Empty; r.columns.len()];
        row[0] = a.into();
        row[1] = c.beta.into();
        row[2] = c.theta_rad.into();
        row[3] = name.into();
        row[7] = f.into();
        row[12] = "onequbit.fdma_min_spacing".into();
        r.push(row);
    }
    Ok(r)
}

// ------------------------------------------------------------------ two-qubit

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateName {
    #[default]
    Cphase,
    Exchange,
}

impl From<GateName> for GateKind {
    fn from(g: GateName) -> Self {
        match g {
            GateName::Cphase => GateKind::CPhase,
            GateName::Exchange => GateKind::Exchange,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeName {
    DeltaZero,
    DeltaEqOmegaOp,
    #[default]
    DeltaEqSqrt2T0,
}

impl From<RegimeName> for Regime {
    fn from(r: RegimeName) -> Self {
        match r {
            RegimeName::DeltaZero => Regime::DeltaZero,
            RegimeName::DeltaEqOmegaOp => Regime::DeltaEqOmegaOp,
            RegimeName::DeltaEqSqrt2T0 => Regime::DeltaEqSqrt2T0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorName {
    /// ΔT/T.
    Duration,
    /// Δt0/t0.
    Tunnel,
    /// Δε/U.
    Detuning,
}

impl From<ErrorName> for GateErrorKind {
    fn from(e: ErrorName) -> Self {
        match e {
            ErrorName::Duration => GateErrorKind::Duration,
            ErrorName::Tunnel => GateErrorKind::Tunnel,
            ErrorName::Detuning => GateErrorKind::Detuning,
        }
    }
}

fn error_name(e: ErrorName) -> &'static str {
    match e {
        ErrorName::Duration => "duration",
        ErrorName::Tunnel => "tunnel",
        ErrorName::Detuning => "detuning",
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorEntry {
    pub kind: ErrorName,
    /// Relative error, or Δε/U for detuning.
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaOpMap {
    pub epsilon_over_u: Grid,
    pub t0_over_u: Grid,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoQubitConfig {
    pub larmor_hz: f64,
    pub t0_hz: f64,
    pub charging_energy_hz: f64,
    pub epsilon_over_u: f64,
    pub gate: GateName,
    pub regime: RegimeName,
    pub theta_rad: f64,
    pub errors: Vec<ErrorEntry>,
    /// Gaussian quasi-static errors, `value` being the standard deviation.
    pub noise: Vec<ErrorEntry>,
    pub simulate: bool,
    pub eigenenergies: bool,
    pub omega_op_map: Option<OmegaOpMap>,
    pub t_nop_s: Option<f64>,
    pub omega_op_off_hz: Option<f64>,
    pub idle_target_fidelity: f64,
    pub idle_gate_durations: f64,
}

impl Default for TwoQubitConfig {
    fn default() -> Self {
        TwoQubitConfig {
            larmor_hz: 10e9,
            t0_hz: 1e9 / std::f64::consts::SQRT_2,
            charging_energy_hz: 1e12,
            epsilon_over_u: 0.0,
            gate: GateName::Cphase,
            regime: RegimeName::DeltaEqSqrt2T0,
            theta_rad: PI,
            errors: vec![],
            noise: vec![],
            simulate: false,
            eigenenergies: true,
            omega_op_map: None,
            t_nop_s: None,
            omega_op_off_hz: None,
            idle_target_fidelity: 0.999,
            idle_gate_durations: 10.0,
        }
    }
}

pub fn two_qubit(v: &Value, _seed: Option<u64>) -> Result<Report> {
    let c: TwoQubitConfig = parse(v)?;
    let u = TAU * c.charging_energy_hz;
    let base = DoubleDotParams { omega_0: TAU * c.larmor_hz, delta_omega_0: 0.0, t0: TAU * c.t0_hz, u, epsilon: c.epsilon_over_u * u };
    let spec = TwoQubitGateSpec { kind: c.gate.into(), theta: c.theta_rad, regime: c.regime.into(), t: 0.0 };
    let (p, t) = twoqubit::operating_point(&spec, &base)?;
    let mut r = Report::new("two-qubit", &GENERIC_COLUMNS);
    let x = c.epsilon_over_u;

    let w = twoqubit::omega_op(&p);
    r.push(generic_row("operating_point", "omega_op", x.into(), Cell::Empty, "Hz", (w / TAU).into(), Cell::Empty, "twoqubit.omega_op"));
    r.push(generic_row("operating_point", "gate_time", x.into(), Cell::Empty, "s", t.into(), Cell::Empty, "twoqubit.omega_op"));
    r.push(generic_row("operating_point", "delta_omega_0", x.into(), Cell::Empty, "Hz", (p.delta_omega_0 / TAU).into(), Cell::Empty, "twoqubit.regime"));

    if c.eigenenergies {
        let ex = twoqubit::eigenenergies(&p, EigenMethod::Exact6x6)?;
        let ap = twoqubit::eigenenergies(&p, EigenMethod::Approx)?;
        r.warnings.extend(ex.warnings.iter().chain(&ap.warnings).cloned());
        for k in 0..4 {
            let q = format!("lambda_{}", k + 1);
            r.push(generic_row("eigenenergies", &q, x.into(), Cell::Empty, "Hz", (ex.lambdas[k] / TAU).into(), (ap.lambdas[k] / TAU).into(), "twoqubit.eigenenergies"));
        }
        r.push(generic_row("eigenenergies", "omega_op", x.into(), Cell::Empty, "Hz", (ex.omega_op / TAU).into(), (ap.omega_op / TAU).into(), "twoqubit.eigenenergies"));
    }

    for e in &c.errors {
        let err = GateError { kind: e.kind.into(), value: e.value };
        let f = twoqubit::fid_gate_inaccuracy(&spec, &base, &err).map_err(|m| tag_err(m, "errors"))?;
        r.push(generic_row("gate_error", error_name(e.kind), e.value.into(), x.into(), "rel", (1.0 - f.taylor).into(), (1.0 - f.exact).into(), "twoqubit.gate_inaccuracy"));
        if c.simulate {
            let fs = twoqubit::simulated_error_fidelity(&spec, &base, &err)?;
            r.push(generic_row("gate_error_simulated", error_name(e.kind), e.value.into(), x.into(), "rel", (1.0 - f.exact).into(), (1.0 - fs).into(), "twoqubit.simulate_gate"));
        }
    }
    for e in &c.noise {
        if e.value < 0.0 {
            return invalid("noise: sigma must be non-negative");
        }
        let f = twoqubit::fid_gate_noise(&spec, &base, e.kind.into(), e.value)?;
        r.push(generic_row("gate_noise", error_name(e.kind), e.value.into(), x.into(), "rel_rms", (1.0 - f).into(), Cell::Empty, "twoqubit.gate_noise"));
    }

    let kind: GateKind = c.gate.into();
    let regime: Regime = c.regime.into();
    let ft = c.idle_target_fidelity;
    if !(ft > 0.0 && ft < 1.0) {
        return invalid("idle_target_fidelity must lie in (0, 1)");
    }
    let factor = twoqubit::idle_reduction_factor(kind, regime, ft, c.idle_gate_durations);
    r.push(generic_row("idle", "omega_op_reduction", c.idle_gate_durations.into(), ft.into(), "1", factor.into(), Cell::Empty, "twoqubit.idle"));
    r.push(generic_row("idle", "tunnel_reduction", c.idle_gate_durations.into(), ft.into(), "1", factor.sqrt().into(), Cell::Empty, "twoqubit.idle"));
    if let (Some(tn), Some(off)) = (c.t_nop_s, c.omega_op_off_hz) {
        let f = twoqubit::fid_idle(kind, regime, TAU * off, tn);
        r.push(generic_row("idle", "infidelity", off.into(), tn.into(), "Hz,s", (1.0 - f.taylor).into(), (1.0 - f.exact).into(), "twoqubit.idle"));
    } else if c.t_nop_s.is_some() != c.omega_op_off_hz.is_some() {
        return invalid("t_nop_s and omega_op_off_hz must be given together");
    }

    if let Some(m) = &c.omega_op_map {
        let eps = m.epsilon_over_u.values("omega_op_map.epsilon_over_u")?;
        let ts = m.t0_over_u.values("omega_op_map.t0_over_u")?;
        let pts: Vec<(f64, f64)> = ts.iter().flat_map(|&a| eps.iter().map(move |&e| (e, a))).collect();
        let rows: Vec<Result<Vec<Cell>>> = pts
            .par_iter()
            .map(|&(e, a)| {
                let q = DoubleDotParams { omega_0: base.omega_0, delta_omega_0: 0.0, t0: a * u, u, epsilon: e * u };
                q.validate()?;
                let ex = twoqubit::eigenenergies(&q, EigenMethod::Exact6x6)?;
                Ok(generic_row("omega_op_map", "omega_op", e.into(), a.into(), "Hz", (ex.omega_op / TAU).into(), (twoqubit::omega_op(&q) / TAU).into(), "twoqubit.omega_op"))
            })
            .collect();
        for row in rows {
            r.push(row.map_err(|e| tag_err(e, "omega_op_map"))?);
        }
    }
    Ok(r)
}

// -------------------------------------------------------------------- readout

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepName {
    Tunnel,
    Splitting,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplittingConfig {
    pub sweep: SweepName,
    /// E_ST/t0 values.
    pub ratios: Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    White,
    Full,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutConfig {
    pub charging_energy_hz: f64,
    pub e_st_ev: f64,
    pub t0_hz: f64,
    pub larmor_hz: f64,
    pub larmor_difference_hz: f64,
    pub lever_arm_ev_per_v: f64,
    /// (ε − U)/E_ST values for the charge-transfer scan.
    pub scan_x: Option<Grid>,
    pub splitting: Option<SplittingConfig>,
    pub signal_a: f64,
    pub sensor_noise_a_per_rthz: f64,
    pub circuit_noise_a_per_rthz: f64,
    /// Override the white sensor/circuit densities with full spectra (a2_per_hz).
    pub sensor_noise: Option<SpectrumInput>,
    pub circuit_noise: Option<SpectrumInput>,
    pub t_read_s: f64,
    pub threshold_a: Option<f64>,
    pub snr_method: MethodName,
    pub p_sense: f64,
    pub detector_trials: usize,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        ReadoutConfig {
            charging_energy_hz: 1e12,
            e_st_ev: 50e-6,
            t0_hz: 39e6,
            larmor_hz: 1e9,
            larmor_difference_hz: 50e6,
            lever_arm_ev_per_v: 0.05,
            scan_x: None,
            splitting: None,
            signal_a: 400e-12,
            sensor_noise_a_per_rthz: 57e-15,
            circuit_noise_a_per_rthz: 28e-15,
            sensor_noise: None,
            circuit_noise: None,
            t_read_s: 0.6e-6,
            threshold_a: None,
            snr_method: MethodName::White,
            p_sense: 0.99967,
            detector_trials: 0,
        }
    }
}

pub fn readout_cmd(v: &Value, seed: Option<u64>) -> Result<Report> {
    let c: ReadoutConfig = parse(v)?;
    let ctx = budget::ConversionContext { lever_arm: c.lever_arm_ev_per_v, ..Default::default() };
    let e_st = budget::convert(c.e_st_ev, budget::EnergyUnit::ElectronVolt, budget::EnergyUnit::RadPerSecond, &ctx)?;
    let u = TAU * c.charging_energy_hz;
    let p = ReadoutDotParams {
        base: DoubleDotParams { omega_0: TAU * c.larmor_hz, delta_omega_0: TAU * c.larmor_difference_hz, t0: TAU * c.t0_hz, u, epsilon: 0.0 },
        e_st,
    };
    let mut r = Report::new("readout", &GENERIC_COLUMNS);
    r.warnings.extend(p.validate()?);

    let eps_read = readout::nominal_read_point(&p);
    let ct = readout::adiabatic_charge_transfer(&p, eps_read)?;
    r.warnings.extend(ct.warnings.iter().cloned());
    let xr = (eps_read - u) / e_st;
    r.push(generic_row("charge", "read_point", xr.into(), Cell::Empty, "V", budget::convert(eps_read, budget::EnergyUnit::RadPerSecond, budget::EnergyUnit::Volt, &ctx)?.into(), Cell::Empty, "readout.nominal_read_point"));
    r.push(generic_row("charge", "p_charge", xr.into(), Cell::Empty, "1", ct.p_charge.into(), Cell::Empty, "readout.charge_transfer"));

    if let Some(g) = &c.scan_x {
        let xs = g.values("scan_x")?;
        let scan = readout::charge_error_scan(&p, &xs)?;
        for (x, e) in &scan {
            r.push(generic_row("charge_scan", "charge_error", (*x).into(), Cell::Empty, "1", (*e).into(), Cell::Empty, "readout.charge_transfer"));
        }
        if scan.len() >= 3 {
            let s = readout::summarize_scan(&scan)?;
            r.push(generic_row("charge_scan", "minimum", s.x_min.into(), Cell::Empty, "1", s.error_min.into(), Cell::Empty, "readout.scan_summary"));
            r.push(generic_row("charge_scan", "doubling_band", s.doubling_band.0.into(), s.doubling_band.1.into(), "1", Cell::Empty, Cell::Empty, "readout.scan_summary"));
        }
    }
    if let Some(sp) = &c.splitting {
        let ratios = sp.ratios.values("splitting.ratios")?;
        let sweep = match sp.sweep {
            SweepName::Tunnel => SplittingSweep::Tunnel,
            SweepName::Splitting => SplittingSweep::Splitting,
        };
        let res: Vec<Result<Vec<(f64, f64)>>> = ratios.par_iter().map(|&a| readout::charge_error_vs_splitting(&p, &[a], sweep)).collect();
        for x in res {
            let (a, e) = x?[0];
            r.push(generic_row("splitting", "charge_error", a.into(), Cell::Empty, "1", e.into(), Cell::Empty, "readout.charge_transfer"));
        }
    }

    let white = |d: f64| PowerSpectrum::white(PsdUnit::A2PerHz, d * d);
    let s_sensor = match &c.sensor_noise {
        Some(s) => s.load("sensor_noise")?,
        None => white(c.sensor_noise_a_per_rthz),
    };
    let s_circuit = match &c.circuit_noise {
        Some(s) => s.load("circuit_noise")?,
        None => white(c.circuit_noise_a_per_rthz),
    };
    let chain = DetectorChain { i_s: c.signal_a, s_sensor, s_circuit, t_read: c.t_read_s, threshold: c.threshold_a };
    let method = match c.snr_method {
        MethodName::White => SnrMethod::White,
        MethodName::Full => SnrMethod::Full,
    };
    let snr = readout::snr(&chain, method)?;
    let sigma = c.signal_a / snr.sqrt();
    let pd = match c.threshold_a {
        Some(it) if sigma > 0.0 => readout::p_detect_threshold(c.signal_a, it, sigma)?,
        _ => readout::p_detect(snr)?,
    };
    r.push(generic_row("detection", "snr", c.t_read_s.into(), Cell::Empty, "1", snr.into(), Cell::Empty, "readout.snr"));
    r.push(generic_row("detection", "noise_rms", c.t_read_s.into(), Cell::Empty, "A_rms", sigma.into(), Cell::Empty, "readout.snr"));
    let mc = if c.detector_trials > 0 {
        let s = need_seed(seed, "detector_trials")?;
        Cell::Num(simulate_detector(c.signal_a, c.threshold_a.unwrap_or(c.signal_a / 2.0), sigma, c.detector_trials, s)?)
    } else {
        Cell::Empty
    };
    r.push(generic_row("detection", "p_detect", snr.into(), Cell::Empty, "1", pd.into(), mc, "readout.p_detect"));

    let b = readout::ReadoutBudget { p_charge: ct.p_charge, p_sense: c.p_sense, p_detect: pd };
    let fa = readout::readout_fidelity(&b, readout::FidelityMode::Approx)?;
    let ff = readout::readout_fidelity(&b, readout::FidelityMode::Full)?;
    r.push(generic_row("fidelity", "readout", Cell::Empty, Cell::Empty, "1", fa.into(), ff.into(), "readout.fidelity"));
    Ok(r)
}

/// Fraction of correct decisions of a threshold detector with equiprobable
/// signal levels 0 and I_s and Gaussian noise σ.
pub fn simulate_detector(i_s: f64, i_t: f64, sigma: f64, trials: usize, seed: u64) -> Result<f64> {
    let d = Normal::new(0.0, sigma).map_err(|e| Error::Validation(format!("detector noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = 0usize;
    for k in 0..trials {
        let high = k % 2 == 1;
        let i = if high { i_s } else { 0.0 } + d.sample(&mut rng);
        if (i > i_t) == high {
            ok += 1;
        }
    }
    Ok(ok as f64 / trials as f64)
}

// --------------------------------------------------------------------- derive

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomRow {
    pub source: Source,
    pub allocation: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeriveConfig {
    /// One of table1, table3, table4, table5.
    pub case: Option<String>,
    pub overrides: Overrides,
    pub context: Option<CustomContext>,
    pub rows: Vec<CustomRow>,
}

pub fn derive(v: &Value, _seed: Option<u64>) -> Result<Report> {
    let c: DeriveConfig = parse(v)?;
    let table = match (&c.case, c.rows.is_empty()) {
        (Some(name), true) => {
            if c.context.is_some() {
                return invalid("context applies to custom rows only");
            }
            budget::case_study(name, &c.overrides)?
        }
        (None, false) => {
            if !c.overrides.is_empty() {
                return invalid("overrides apply to case studies only; use context for custom rows");
            }
            let req: Vec<(Source, f64)> = c.rows.iter().map(|r| (r.source, r.allocation)).collect();
            budget::derive_custom(&req, &c.context.unwrap_or_default())?
        }
        (Some(_), false) => return invalid("give either case or rows, not both"),
        (None, true) => return invalid("derive needs a case name or custom rows"),
    };
    let mut r = Report::new("derive", &["section", "item", "value", "unit", "infidelity_operation", "infidelity_idle", "applies_to", "formula"]);
    for i in &table.items {
        let applies = serde_json::to_value(i.applies_to).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        r.push(vec![
            i.section.as_str().into(),
            i.item.as_str().into(),
            i.value.into(),
            i.unit.as_str().into(),
            i.infidelity_operation.into(),
            i.infidelity_idle.into(),
            applies.into(),
            i.formula.as_str().into(),
        ]);
    }
    r.push(vec![
        "total".into(),
        table.name.as_str().into(),
        Cell::Empty,
        "".into(),
        table.total_operation.into(),
        table.total_idle.into(),
        "".into(),
        "sum".into(),
    ]);
    r.warnings = table.warnings;
    Ok(r)
}
