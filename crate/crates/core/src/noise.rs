//! Noise spectra, spectral integrals against qubit filter functions, and
//! clock jitter.
//!
//! Spectra are one-sided densities over f ≥ 0 (per Hz). Filter functions take
//! angular arguments. A filtered infidelity is
//! (1/2π)·∫ S(ω/2π)/ω_R²·|H(ω)|² dω, with band-pass filters integrated over both
//! sidebands around their center.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, numerical, Error, Result};
use crate::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdUnit {
    /// rad²/Hz, phase noise.
    Rad2PerHz,
    /// (rad/s)²/Hz, frequency or Rabi-frequency noise.
    AngFreq2PerHz,
    /// V²/Hz.
    V2PerHz,
    /// A²/Hz.
    A2PerHz,
}

impl PsdUnit {
    pub fn tag(self) -> &'static str {
        match self {
            PsdUnit::Rad2PerHz => "rad2_per_hz",
            PsdUnit::AngFreq2PerHz => "radps2_per_hz",
            PsdUnit::V2PerHz => "v2_per_hz",
            PsdUnit::A2PerHz => "a2_per_hz",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        [PsdUnit::Rad2PerHz, PsdUnit::AngFreq2PerHz, PsdUnit::V2PerHz, PsdUnit::A2PerHz]
            .into_iter()
            .find(|u| u.tag() == tag)
            .ok_or_else(|| Error::Validation(format!("unknown PSD unit tag '{tag}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    /// Constant `level`.
    White,
    /// `level`·(f/f_ref)^exponent. Flicker noise is exponent −1.
    PowerLaw { f_ref: f64, exponent: f64 },
    /// Log-log interpolation between points; zero outside the table.
    Tabulated { f: Vec<f64>, v: Vec<f64> },
}

/// One additive piece of a spectrum, nonzero on [f_lo, f_hi].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(default)]
    pub level: f64,
    #[serde(default)]
    pub f_lo: f64,
    #[serde(default = "inf")]
    pub f_hi: f64,
}

fn inf() -> f64 {
    f64::INFINITY
}

impl Component {
    fn eval(&self, f: f64) -> f64 {
        if f < self.f_lo || f > self.f_hi {
            return 0.0;
        }
        match &self.shape {
            Shape::White => self.level,
            Shape::PowerLaw { f_ref, exponent } => {
                if f <= 0.0 {
                    if *exponent < 0.0 {
                        f64::INFINITY
                    } else if *exponent == 0.0 {
                        self.level
                    } else {
                        0.0
                    }
                } else {
                    self.level * (f / f_ref).powf(*exponent)
                }
            }
            Shape::Tabulated { f: fs, v } => interp_loglog(fs, v, f),
        }
    }

    /// Effective support [lo, hi] in Hz.
    fn support(&self) -> (f64, f64) {
        match &self.shape {
            Shape::Tabulated { f, .. } => (self.f_lo.max(f[0]), self.f_hi.min(*f.last().unwrap())),
            _ => (self.f_lo, self.f_hi),
        }
    }

    /// Log-slope of the density at high frequency, used for divergence checks.
    fn tail_exponent(&self) -> f64 {
        match &self.shape {
            Shape::White => 0.0,
            Shape::PowerLaw { exponent, .. } => *exponent,
            Shape::Tabulated { .. } => f64::NEG_INFINITY,
        }
    }

    fn low_exponent(&self) -> f64 {
        match &self.shape {
            Shape::White => 0.0,
            Shape::PowerLaw { exponent, .. } => *exponent,
            Shape::Tabulated { .. } => 0.0,
        }
    }
}

fn interp_loglog(fs: &[f64], v: &[f64], f: f64) -> f64 {
    if fs.is_empty() || f < fs[0] || f > fs[fs.len() - 1] {
        return 0.0;
    }
    let k = fs.partition_point(|&x| x <= f).min(fs.len() - 1).max(1);
    let (f0, f1, v0, v1) = (fs[k - 1], fs[k], v[k - 1], v[k]);
    if f == f0 {
        return v0;
    }
    if f0 > 0.0 && v0 > 0.0 && v1 > 0.0 {
        let s = (v1 / v0).ln() / (f1 / f0).ln();
        v0 * (f / f0).powf(s)
    } else {
        v0 + (v1 - v0) * (f - f0) / (f1 - f0)
    }
}

/// Sum of components sharing one unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrum {
    pub unit: PsdUnit,
    pub components: Vec<Component>,
}

impl PowerSpectrum {
    pub fn zero(unit: PsdUnit) -> Self {
        Self { unit, components: vec![] }
    }

    pub fn white(unit: PsdUnit, level: f64) -> Self {
        Self { unit, components: vec![Component { shape: Shape::White, level, f_lo: 0.0, f_hi: f64::INFINITY }] }
    }

    pub fn white_band(unit: PsdUnit, level: f64, f_lo: f64, f_hi: f64) -> Self {
        Self { unit, components: vec![Component { shape: Shape::White, level, f_lo, f_hi }] }
    }

    pub fn power_law(unit: PsdUnit, level_at_ref: f64, f_ref: f64, exponent: f64) -> Self {
        Self {
            unit,
            components: vec![Component {
                shape: Shape::PowerLaw { f_ref, exponent },
                level: level_at_ref,
                f_lo: 0.0,
                f_hi: f64::INFINITY,
            }],
        }
    }

    pub fn flicker(unit: PsdUnit, level_at_ref: f64, f_ref: f64) -> Self {
        Self::power_law(unit, level_at_ref, f_ref, -1.0)
    }

    pub fn tabulated(unit: PsdUnit, f: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let s = Self {
            unit,
            components: vec![Component { shape: Shape::Tabulated { f, v }, level: 0.0, f_lo: 0.0, f_hi: f64::INFINITY }],
        };
        s.validate()?;
        Ok(s)
    }

    /// Reads a two-column table with header `f_hz,psd_<unit>`.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read spectrum table {}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| Error::Validation(format!("spectrum table header: {e}")))?.clone();
        if headers.len() != 2 || &headers[0] != "f_hz" || !headers[1].starts_with("psd_") {
            return invalid(format!("spectrum table header must be 'f_hz,psd_<unit>', got '{}'", headers.iter().collect::<Vec<_>>().join(",")));
        }
        let unit = PsdUnit::from_tag(&headers[1]["psd_".len()..])?;
        let (mut f, mut v) = (vec![], vec![]);
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Validation(format!("spectrum table row {}: {e}", line + 2)))?;
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Validation(format!("spectrum table row {}: bad number '{s}'", line + 2)))
            };
            f.push(parse(&rec[0])?);
            v.push(parse(&rec[1])?);
        }
        Self::tabulated(unit, f, v)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, c) in self.components.iter().enumerate() {
            if !(c.f_lo >= 0.0) || !(c.f_hi > c.f_lo) {
                return invalid(format!("component {k}: band [{}, {}] Hz is empty or negative", c.f_lo, c.f_hi));
            }
            match &c.shape {
                Shape::White => {
                    if !(c.level >= 0.0) {
                        return invalid(format!("component {k}: negative level {}", c.level));
                    }
                }
                Shape::PowerLaw { f_ref, exponent } => {
                    if !(c.level >= 0.0) || !(*f_ref > 0.0) || !exponent.is_finite() {
                        return invalid(format!("component {k}: power law needs level >= 0, f_ref > 0, finite exponent"));
                    }
                }
                Shape::Tabulated { f, v } => {
                    if f.len() < 2 || f.len() != v.len() {
                        return invalid(format!("component {k}: table needs at least two (f, value) points"));
                    }
                    if f.windows(2).any(|w| !(w[1] > w[0])) || f[0] < 0.0 {
                        return invalid(format!("component {k}: table frequencies must be non-negative and strictly increasing"));
                    }
                    if v.iter().any(|x| !(*x >= 0.0)) {
                        return invalid(format!("component {k}: table values must be non-negative"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Density at frequency f (Hz).
    pub fn eval(&self, f: f64) -> f64 {
        self.components.iter().map(|c| c.eval(f)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| match &c.shape {
            Shape::Tabulated { v, .. } => v.iter().all(|x| *x == 0.0),
            _ => c.level == 0.0,
        })
    }

    /// Multiplies the density by a constant factor, optionally retagging the unit.
    pub fn scaled(&self, factor: f64, unit: PsdUnit) -> Self {
        let components = self
            .components
            .iter()
            .map(|c| {
                let mut c = c.clone();
                match &mut c.shape {
                    Shape::Tabulated { v, .. } => v.iter_mut().for_each(|x| *x *= factor),
                    _ => c.level *= factor,
                }
                c
            })
            .collect();
        Self { unit, components }
    }

    /// Voltage or current noise expressed as Rabi-frequency noise through a
    /// drive scale in (rad/s) per V or A.
    pub fn to_angular(&self, drive_scale: f64) -> Result<Self> {
        match self.unit {
            PsdUnit::V2PerHz | PsdUnit::A2PerHz => Ok(self.scaled(drive_scale * drive_scale, PsdUnit::AngFreq2PerHz)),
            PsdUnit::AngFreq2PerHz => Ok(self.clone()),
            PsdUnit::Rad2PerHz => invalid("phase noise must be converted with phase_to_frequency_spectrum"),
        }
    }
}

/// S_ω(Δω) = Δω²·S_φ(Δω).
pub fn phase_to_frequency_noise(s_phi: f64, offset_rad_s: f64) -> Result<f64> {
    if !(offset_rad_s > 0.0) {
        return invalid(format!("offset must be positive, got {offset_rad_s}"));
    }
    Ok(offset_rad_s * offset_rad_s * s_phi)
}

/// Whole-spectrum version of [`phase_to_frequency_noise`].
pub fn phase_to_frequency_spectrum(s_phi: &PowerSpectrum) -> Result<PowerSpectrum> {
    if s_phi.unit != PsdUnit::Rad2PerHz {
        return invalid(format!("expected a phase-noise spectrum (rad2_per_hz), got {}", s_phi.unit.tag()));
    }
    let components = s_phi
        .components
        .iter()
        .map(|c| {
            let mut c = c.clone();
            match &mut c.shape {
                Shape::White => {
                    // f⁰ → f²: a power law referenced at 1 Hz
                    c.shape = Shape::PowerLaw { f_ref: 1.0, exponent: 2.0 };
                    c.level *= TAU * TAU;
                }
                Shape::PowerLaw { f_ref, exponent } => {
                    c.level *= (TAU * *f_ref).powi(2);
                    *exponent += 2.0;
                }
                Shape::Tabulated { f, v } => {
                    for (fi, vi) in f.iter().zip(v.iter_mut()) {
                        *vi *= (TAU * fi).powi(2);
                    }
                }
            }
            c
        })
        .collect();
    Ok(PowerSpectrum { unit: PsdUnit::AngFreq2PerHz, components })
}

/// Single-sideband ℒ (dBc/Hz) to S_φ (rad²/Hz).
pub fn ssb_to_sphi(l_dbc_hz: f64) -> f64 {
    2.0 * 10f64.powf(l_dbc_hz / 10.0)
}

pub fn sphi_to_ssb(s_phi: f64) -> f64 {
    10.0 * (s_phi / 2.0).log10()
}

/// Power ratio for a level in dBc.
pub fn dbc_to_linear(dbc: f64) -> f64 {
    10f64.powf(dbc / 10.0)
}

pub fn linear_to_dbc(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Amplitude ratio for a level in dBc.
pub fn dbc_to_amplitude(dbc: f64) -> f64 {
    10f64.powf(dbc / 20.0)
}

pub fn amplitude_to_dbc(ratio: f64) -> f64 {
    20.0 * ratio.log10()
}

/// σ = sqrt(S·ENBW) for a white density.
pub fn rms_in_enbw(density: f64, enbw_hz: f64) -> f64 {
    (density * enbw_hz).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    /// |H_R|², Rabi-amplitude noise.
    Amplitude,
    /// |H_mw|², carrier frequency noise.
    Frequency,
    /// |H_R|² + |H_mw|² around the carrier, additive drive-line noise.
    Additive,
    /// sinc² band-pass seen by an idle qubit on a noisy drive line.
    IdleDrive,
}

/// Intrinsic qubit filter |H(ω)|² with its brick-wall equivalent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterResponse {
    pub kind: FilterKind,
    pub theta: f64,
    pub omega_r: f64,
    /// Idle duration; only used by the idle-drive filter.
    pub t_nop: f64,
    pub dc_gain: f64,
    /// One-sided equivalent noise bandwidth, rad/s.
    pub enbw: f64,
    /// 0 for low-pass filters, ω_0 for band-pass ones (informational).
    pub center: f64,
    /// Band-pass filters collect noise from both sidebands.
    pub two_sided: bool,
}

const POLE_EPS: f64 = 1e-4;

/// sin²(αθ/2)/α².
pub fn h2_amplitude(alpha: f64, theta: f64) -> f64 {
    if alpha.abs() < POLE_EPS {
        let x = theta * theta / 4.0;
        // sin²(u)/α² with u = αθ/2: θ²/4·(1 − u²/3)
        x * (1.0 - (alpha * theta / 2.0).powi(2) / 3.0)
    } else {
        (alpha * theta / 2.0).sin().powi(2) / (alpha * alpha)
    }
}

/// Frequency-noise filter; removable singularity at α = ±1.
pub fn h2_frequency(alpha: f64, theta: f64) -> f64 {
    let a = alpha.abs();
    if (a - 1.0).abs() < POLE_EPS {
        let x = a - 1.0;
        let c0 = (theta * theta + theta.sin().powi(2)) / 8.0;
        let c1 = (theta * (2.0 * theta).sin() + (2.0 * theta).cos() - 1.0) / 16.0;
        return c0 + c1 * x;
    }
    h2_frequency_raw(a, theta)
}

fn h2_frequency_raw(a: f64, theta: f64) -> f64 {
    let num = (1.0 - theta.cos() * (a * theta).cos()) * (a * a + 1.0) - 2.0 * a * theta.sin() * (a * theta).sin();
    num / (2.0 * (a * a - 1.0).powi(2))
}

/// Idle drive-line filter in dimensionless form: ω_R²·2·sin²(TΔ/2)/Δ².
pub fn h2_idle(delta: f64, t_nop: f64, omega_r: f64) -> f64 {
    let u = delta * t_nop / 2.0;
    let s = if u.abs() < 1e-6 { t_nop * t_nop / 4.0 * (1.0 - u * u / 3.0) } else { (u.sin() / delta).powi(2) };
    2.0 * omega_r * omega_r * s
}

impl FilterResponse {
    pub fn new(kind: FilterKind, theta: f64, omega_r: f64) -> Result<Self> {
        if !(omega_r > 0.0) {
            return invalid(format!("omega_R must be positive, got {omega_r}"));
        }
        let th = theta.abs();
        let (dc, enbw, two_sided) = match kind {
            FilterKind::Amplitude => {
                let dc = th * th / 4.0;
                (dc, if th > 0.0 { omega_r * PI / th } else { 0.0 }, false)
            }
            FilterKind::Frequency => {
                let dc = (1.0 - th.cos()) / 2.0;
                (dc, if th > 0.0 { omega_r * PI * th / (2.0 * (1.0 - th.cos())) } else { 0.0 }, false)
            }
            FilterKind::Additive => {
                let den = th * th + 2.0 * (1.0 - th.cos());
                (th * th / 4.0 + (1.0 - th.cos()) / 2.0, if th > 0.0 { omega_r * 2.0 * PI * th / den } else { 0.0 }, true)
            }
            FilterKind::IdleDrive => return invalid("use FilterResponse::idle for the idle drive-line filter"),
        };
        Ok(Self { kind, theta, omega_r, t_nop: th / omega_r, dc_gain: dc, enbw, center: 0.0, two_sided })
    }

    /// Filter seen by a qubit idling for `t_nop` on a line whose drive strength
    /// ω_R sets the noise normalization.
    pub fn idle(t_nop: f64, omega_r: f64) -> Result<Self> {
        if !(t_nop > 0.0) || !(omega_r > 0.0) {
            return invalid(format!("idle filter needs T_nop > 0 and omega_R > 0 (got {t_nop}, {omega_r})"));
        }
        let theta = omega_r * t_nop;
        Ok(Self {
            kind: FilterKind::IdleDrive,
            theta,
            omega_r,
            t_nop,
            dc_gain: theta * theta / 2.0,
            enbw: PI / t_nop,
            center: 0.0,
            two_sided: true,
        })
    }

    pub fn with_center(mut self, center: f64) -> Self {
        self.center = center;
        self
    }

    /// |H|² at angular offset ω from the filter center.
    pub fn h2(&self, omega: f64) -> f64 {
        let a = omega / self.omega_r;
        match self.kind {
            FilterKind::Amplitude => h2_amplitude(a, self.theta),
            FilterKind::Frequency => h2_frequency(a, self.theta),
            FilterKind::Additive => h2_amplitude(a, self.theta) + h2_frequency(a, self.theta),
            FilterKind::IdleDrive => h2_idle(omega, self.t_nop, self.omega_r),
        }
    }

    /// Oscillation-averaged |H|², valid far above the passband.
    fn h2_envelope(&self, omega: f64) -> f64 {
        let a = (omega / self.omega_r).abs();
        let amp = 1.0 / (2.0 * a * a);
        let freq = (a * a + 1.0) / (2.0 * (a * a - 1.0).powi(2));
        match self.kind {
            FilterKind::Amplitude => amp,
            FilterKind::Frequency => freq,
            FilterKind::Additive => amp + freq,
            FilterKind::IdleDrive => self.omega_r * self.omega_r / (omega * omega),
        }
    }

    /// Angular period of the ripple in |H|².
    fn ripple_period(&self) -> f64 {
        match self.kind {
            FilterKind::IdleDrive => TAU / self.t_nop,
            _ => TAU * self.omega_r / self.theta.abs().max(1e-9),
        }
    }

    /// ∫₀^∞ |H(ω)|² dω, numerically.
    pub fn integrated(&self) -> Result<f64> {
        integrate_filter(self, &|_| 1.0, 0.0)
    }
}

// Gauss–Kronrod 7/15 nodes and weights on [−1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut stack = vec![(a, b, 0u32)];
    let (mut total, mut budget) = (0.0, 200_000usize);
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(f, lo, hi);
        if !val.is_finite() {
            return numerical(format!("integrand not finite on [{lo:.6e}, {hi:.6e}]"));
        }
        let tol = (rel_tol * val.abs()).max(abs_tol);
        if err <= tol || depth >= 40 {
            total += val;
        } else {
            budget = match budget.checked_sub(1) {
                Some(b) => b,
                None => return numerical("adaptive quadrature exceeded its subdivision cap"),
            };
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    Ok(total)
}

/// ∫_{lo}^{∞} g(ω)·|H(ω)|² dω. Ripple-aligned chunks up to a cutoff, then the
/// ripple-averaged envelope on a 1/ω-mapped tail.
fn integrate_filter(h: &FilterResponse, g: &dyn Fn(f64) -> f64, lo: f64) -> Result<f64> {
    let period = h.ripple_period();
    let passband = h.omega_r.max(h.enbw);
    let cutoff = (2000.0 * period).max(200.0 * passband).max(lo * 2.0);
    let f = |w: f64| g(w) * h.h2(w);
    let mut edges = vec![lo];
    let mut x = (lo / period).floor() * period + period;
    while x < cutoff {
        edges.push(x);
        x += period;
    }
    edges.push(cutoff);
    let mut body = 0.0;
    for w in edges.windows(2) {
        body += integrate(&f, w[0], w[1], 1e-9, 0.0)?;
    }
    // tail: ω = cutoff/s, dω = cutoff/s² ds, s ∈ (0, 1]
    let tail_f = |s: f64| {
        if s <= 0.0 {
            0.0
        } else {
            let w = cutoff / s;
            g(w) * h.h2_envelope(w) * cutoff / (s * s)
        }
    };
    let tail = integrate(&tail_f, 0.0, 1.0, 1e-9, 0.0)?;
    Ok(body + tail)
}

/// Rejects spectra whose filtered integral cannot converge.
fn check_convergence(s: &PowerSpectrum, omega_min: f64, h: &FilterResponse) -> Result<()> {
    for (k, c) in s.components.iter().enumerate() {
        let (lo, hi) = c.support();
        let lo_eff = lo.max(omega_min / TAU);
        if hi < lo_eff {
            continue;
        }
        if lo_eff == 0.0 && c.low_exponent() <= -1.0 && h.dc_gain > 0.0 && c.level > 0.0 {
            return invalid(format!(
                "component {k} ({} spectrum with exponent {}) diverges at low frequency; set omega_min > 0",
                s.unit.tag(),
                c.low_exponent()
            ));
        }
        if hi.is_infinite() && c.tail_exponent() >= 1.0 && c.level > 0.0 {
            return invalid(format!("component {k} grows too fast at high frequency; add an upper band limit"));
        }
    }
    Ok(())
}

/// (1/2π)·∫_{ω_min}^∞ S/ω_R²·|H|² dω, doubled for band-pass filters.
pub fn filtered_infidelity(s: &PowerSpectrum, h: &FilterResponse, omega_r: f64, omega_min: f64) -> Result<f64> {
    if s.unit != PsdUnit::AngFreq2PerHz {
        return invalid(format!(
            "filtered infidelity needs an angular-frequency spectrum (radps2_per_hz), got {}; convert first",
            s.unit.tag()
        ));
    }
    if !(omega_min >= 0.0) || !(omega_r > 0.0) {
        return invalid(format!("need omega_min >= 0 and omega_R > 0 (got {omega_min}, {omega_r})"));
    }
    s.validate()?;
    if s.is_zero() {
        return Ok(0.0);
    }
    check_convergence(s, omega_min, h)?;
    let mut total = 0.0;
    // integrate each component over its own support so band edges are respected
    for c in &s.components {
        let (lo, hi) = c.support();
        let lo_w = (lo * TAU).max(omega_min);
        let hi_w = hi * TAU;
        if hi_w <= lo_w {
            continue;
        }
        let g = |w: f64| if w >= lo_w && w <= hi_w { c.eval(w / TAU) } else { 0.0 };
        let val = if hi_w.is_infinite() {
            integrate_filter(h, &g, lo_w)?
        } else {
            let f = |w: f64| g(w) * h.h2(w);
            let period = h.ripple_period();
            let mut acc = 0.0;
            let mut a = lo_w;
            while a < hi_w {
                let b = (a + period).min(hi_w);
                acc += integrate(&f, a, b, 1e-9, 0.0)?;
                a = b;
            }
            acc
        };
        total += val;
    }
    let sides = if h.two_sided { 2.0 } else { 1.0 };
    Ok(sides * total / (TAU * omega_r * omega_r))
}

/// Brick-wall shortcut: dc_gain times the noise power admitted by the ENBW.
pub fn brickwall_infidelity(s: &PowerSpectrum, h: &FilterResponse, omega_r: f64, omega_min: f64) -> Result<f64> {
    if s.unit != PsdUnit::AngFreq2PerHz {
        return invalid(format!("brick-wall infidelity needs radps2_per_hz, got {}", s.unit.tag()));
    }
    s.validate()?;
    if s.is_zero() {
        return Ok(0.0);
    }
    check_convergence(s, omega_min, h)?;
    let f_lo = omega_min / TAU;
    let f_hi = h.enbw / TAU;
    let power = band_power(s, f_lo, f_hi)?;
    let sides = if h.two_sided { 2.0 } else { 1.0 };
    Ok(sides * h.dc_gain * power / (omega_r * omega_r))
}

/// ∫ S(f) df over [f_lo, f_hi].
pub fn band_power(s: &PowerSpectrum, f_lo: f64, f_hi: f64) -> Result<f64> {
    let mut total = 0.0;
    for c in &s.components {
        let (lo, hi) = c.support();
        let a = lo.max(f_lo);
        let b = hi.min(f_hi);
        if b <= a {
            continue;
        }
        if b.is_infinite() {
            return invalid("band power over an unbounded band");
        }
        total += match &c.shape {
            Shape::White => c.level * (b - a),
            Shape::PowerLaw { f_ref, exponent } => {
                let e = *exponent;
                if (e + 1.0).abs() < 1e-12 {
                    if a == 0.0 {
                        return invalid("flicker power diverges at zero frequency; set a lower band limit");
                    }
                    c.level * f_ref * (b / a).ln()
                } else {
                    if e < -1.0 && a == 0.0 {
                        return invalid("power-law noise diverges at zero frequency; set a lower band limit");
                    }
                    c.level * f_ref / (e + 1.0) * ((b / f_ref).powf(e + 1.0) - (a / f_ref).powf(e + 1.0))
                }
            }
            Shape::Tabulated { .. } => {
                let f = |x: f64| c.eval(x);
                let mut acc = 0.0;
                if let Shape::Tabulated { f: fs, .. } = &c.shape {
                    let mut pts: Vec<f64> = fs.iter().copied().filter(|x| *x > a && *x < b).collect();
                    pts.insert(0, a);
                    pts.push(b);
                    for w in pts.windows(2) {
                        acc += integrate(&f, w[0], w[1], 1e-10, 0.0)?;
                    }
                }
                acc
            }
        };
    }
    Ok(total)
}

/// σ_T = (T/π)·sqrt(∫_{f_min}^∞ S_φ(f)·sin²(2πfT) df).
pub fn jitter_sigma(s_phi: &PowerSpectrum, t: f64, f_min: f64) -> Result<f64> {
    if s_phi.unit != PsdUnit::Rad2PerHz {
        return invalid(format!("jitter needs a phase-noise spectrum (rad2_per_hz), got {}", s_phi.unit.tag()));
    }
    if !(t > 0.0) {
        return invalid(format!("period T must be positive, got {t}"));
    }
    s_phi.validate()?;
    if s_phi.is_zero() {
        return Ok(0.0);
    }
    let period = 1.0 / (2.0 * t);
    let mut total = 0.0;
    for (k, c) in s_phi.components.iter().enumerate() {
        let (lo, hi) = c.support();
        let a = lo.max(f_min);
        if hi <= a {
            continue;
        }
        let w = |f: f64| c.eval(f) * (TAU * f * t).sin().powi(2);
        if hi.is_infinite() {
            if c.tail_exponent() >= -1.0 && c.level > 0.0 {
                return invalid(format!(
                    "phase-noise component {k} does not fall off fast enough for the jitter integral; add an upper band limit"
                ));
            }
            let cutoff = (a + 2000.0 * period).max(a * 4.0);
            let mut x = a;
            while x < cutoff {
                let b = (x + period).min(cutoff);
                total += integrate(&w, x, b, 1e-10, 0.0)?;
                x = b;
            }
            let tail = |s: f64| if s <= 0.0 { 0.0 } else { 0.5 * c.eval(cutoff / s) * cutoff / (s * s) };
            total += integrate(&tail, 0.0, 1.0, 1e-10, 0.0)?;
        } else {
            let n = ((hi - a) / period).ceil().min(2e6) as usize;
            let step = (hi - a) / n.max(1) as f64;
            for i in 0..n.max(1) {
                let x0 = a + i as f64 * step;
                total += integrate(&w, x0, x0 + step, 1e-10, 0.0)?;
            }
        }
    }
    Ok(t / PI * total.sqrt())
}
