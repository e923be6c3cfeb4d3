//! Coding-scheme parameters, their feasibility constraints, and the map from
//! `(bit, basis)` to the optical pulse Alice emits.
//!
//! A frequency-basis pulse is a wide pulse from laser 1 (`ω1`, bit 0) or
//! laser 2 (`ω2`, bit 1). A time-basis pulse is a narrow pulse from laser 3
//! centred at `ω3 = (ω1 + ω2)/2`, emitted with no delay (bit 0) or delayed
//! by `τ` (bit 1). The narrow pulse spectrally covers both wide pulses, and
//! each wide pulse temporally covers both narrow slots, so the two bases
//! overlap in time and frequency.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Relative tolerance used for every scheme comparison.
pub const SCHEME_REL_TOL: f64 = 1e-9;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Encoding degree of freedom. `Frequency` is coding bit `b_n = 0`,
/// `Time` is `b_n = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Frequency,
    Time,
}

impl Basis {
    pub fn from_coding_bit(b: bool) -> Self {
        if b {
            Basis::Time
        } else {
            Basis::Frequency
        }
    }

    pub fn coding_bit(self) -> u8 {
        match self {
            Basis::Frequency => 0,
            Basis::Time => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Basis::Frequency => Basis::Time,
            Basis::Time => Basis::Frequency,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitValue {
    Zero,
    One,
}

impl BitValue {
    pub fn as_bool(self) -> bool {
        self == BitValue::One
    }

    pub fn as_u8(self) -> u8 {
        self.as_bool() as u8
    }

    pub fn flipped(self) -> Self {
        match self {
            BitValue::Zero => BitValue::One,
            BitValue::One => BitValue::Zero,
        }
    }
}

impl From<bool> for BitValue {
    fn from(b: bool) -> Self {
        if b {
            BitValue::One
        } else {
            BitValue::Zero
        }
    }
}

/// Bob's resolved bit `g_n`. `Invalid` is the `g_n = -1` case: no click, or
/// an ambiguous set of clicks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReceivedBit {
    Zero,
    One,
    Invalid,
}

impl ReceivedBit {
    pub fn bit(self) -> Option<BitValue> {
        match self {
            ReceivedBit::Zero => Some(BitValue::Zero),
            ReceivedBit::One => Some(BitValue::One),
            ReceivedBit::Invalid => None,
        }
    }

    /// `0`, `1` or `-1`.
    pub fn as_i8(self) -> i8 {
        match self {
            ReceivedBit::Zero => 0,
            ReceivedBit::One => 1,
            ReceivedBit::Invalid => -1,
        }
    }
}

impl From<BitValue> for ReceivedBit {
    fn from(b: BitValue) -> Self {
        match b {
            BitValue::Zero => ReceivedBit::Zero,
            BitValue::One => ReceivedBit::One,
        }
    }
}

/// Optical parameter set of the two encoding bases. All values SI:
/// angular frequencies and spectral widths in rad/s, widths and delay in s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingScheme {
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub sigma_w1: f64,
    pub sigma_w2: f64,
    pub sigma_w3: f64,
    pub sigma_t1: f64,
    pub sigma_t2: f64,
    pub sigma_t3: f64,
    pub tau: f64,
}

/// Spectral width of a transform-limited pulse of temporal width `sigma_t`
/// under the `σ_ω = 2π/σ_t` rule used for the default scheme.
pub fn transform_limited_width(sigma_t: f64) -> f64 {
    2.0 * PI / sigma_t
}

/// Angular frequency of light with vacuum wavelength `lambda_m`.
pub fn angular_frequency_from_wavelength(lambda_m: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / lambda_m
}

/// The default scheme: 1550 nm band with laser 1 and 2 at ∓25 GHz, wide
/// pulses of 1.1 ns and narrow pulses of 0.55 ns (midpoints of the
/// 1–1.2 ns and 500–600 ps device ranges), `τ = 0.55 ns`.
///
/// Spectral widths follow `σ_ω = 2π/σ_t` per pulse. Note that the commonly
/// quoted band 1.047–1.257×10¹⁰ rad/s for the *wide* pulses is actually
/// `2π/σ_t3`; with the per-pulse rule the wide pulses get about half that.
pub fn default_scheme() -> CodingScheme {
    let center = angular_frequency_from_wavelength(1550e-9);
    let offset = 2.0 * PI * 25e9;
    let omega1 = center - offset;
    let omega2 = center + offset;
    let sigma_t1 = 1.1e-9;
    let sigma_t3 = 0.55e-9;
    CodingScheme {
        omega1,
        omega2,
        omega3: (omega1 + omega2) / 2.0,
        sigma_w1: transform_limited_width(sigma_t1),
        sigma_w2: transform_limited_width(sigma_t1),
        sigma_w3: transform_limited_width(sigma_t3),
        sigma_t1,
        sigma_t2: sigma_t1,
        sigma_t3,
        tau: sigma_t1 - sigma_t3,
    }
}

impl Default for CodingScheme {
    fn default() -> Self {
        default_scheme()
    }
}

/// One checked feasibility constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub entries: Vec<ConstraintCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.entries.iter().filter(|e| !e.passed)
    }

    pub fn entry(&self, name: &str) -> Option<&ConstraintCheck> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// `Ok` when every constraint holds, else an error naming the failures.
    pub fn into_result(self) -> Result<()> {
        if self.passed() {
            return Ok(());
        }
        let names: Vec<&str> = self.failures().map(|e| e.name).collect();
        Err(Error::InvalidScheme(names.join("; ")))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let mark = if e.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{mark}  {:<32} {}", e.name, e.detail)?;
        }
        write!(
            f,
            "overall: {}",
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= SCHEME_REL_TOL * a.abs().max(b.abs())
}

// a >= b up to relative rounding.
fn approx_ge(a: f64, b: f64) -> bool {
    a >= b || approx_eq(a, b)
}

/// Checks every feasibility constraint of `scheme`. Violations are
/// reported, never raised.
pub fn validate_scheme(scheme: &CodingScheme) -> ValidationReport {
    let s = scheme;
    let fields = [
        ("omega1", s.omega1),
        ("omega2", s.omega2),
        ("omega3", s.omega3),
        ("sigma_w1", s.sigma_w1),
        ("sigma_w2", s.sigma_w2),
        ("sigma_w3", s.sigma_w3),
        ("sigma_t1", s.sigma_t1),
        ("sigma_t2", s.sigma_t2),
        ("sigma_t3", s.sigma_t3),
        ("tau", s.tau),
    ];
    let non_positive: Vec<&str> = fields
        .iter()
        .filter(|(_, v)| !(*v > 0.0 && v.is_finite()))
        .map(|(n, _)| *n)
        .collect();

    let mut entries = Vec::with_capacity(11);
    let mut push = |name: &'static str, passed: bool, detail: String| {
        entries.push(ConstraintCheck {
            name,
            passed,
            detail,
        })
    };

    push(
        "all fields positive",
        non_positive.is_empty(),
        if non_positive.is_empty() {
            "ok".to_string()
        } else {
            format!("non-positive: {}", non_positive.join(", "))
        },
    );
    let mid = (s.omega1 + s.omega2) / 2.0;
    push(
        "omega3 = (omega1 + omega2)/2",
        approx_eq(s.omega3, mid),
        format!("{:e} vs {:e}", s.omega3, mid),
    );
    push(
        "sigma_w3 >= sigma_w1 + sigma_w2",
        approx_ge(s.sigma_w3, s.sigma_w1 + s.sigma_w2),
        format!("{:e} vs {:e}", s.sigma_w3, s.sigma_w1 + s.sigma_w2),
    );
    push(
        "sigma_t1 >= 2*sigma_t3",
        approx_ge(s.sigma_t1, 2.0 * s.sigma_t3),
        format!("{:e} vs {:e}", s.sigma_t1, 2.0 * s.sigma_t3),
    );
    push(
        "sigma_t1 = sigma_t2",
        approx_eq(s.sigma_t1, s.sigma_t2),
        format!("{:e} vs {:e}", s.sigma_t1, s.sigma_t2),
    );
    push(
        "sigma_w1 = sigma_w2",
        approx_eq(s.sigma_w1, s.sigma_w2),
        format!("{:e} vs {:e}", s.sigma_w1, s.sigma_w2),
    );
    push(
        "sigma_t1 - sigma_t3 >= tau",
        approx_ge(s.sigma_t1 - s.sigma_t3, s.tau),
        format!("{:e} vs {:e}", s.sigma_t1 - s.sigma_t3, s.tau),
    );
    push(
        "tau >= sigma_t3",
        approx_ge(s.tau, s.sigma_t3),
        format!("{:e} vs {:e}", s.tau, s.sigma_t3),
    );
    let products = [
        ("sigma_w1*sigma_t1 >= 1", s.sigma_w1 * s.sigma_t1),
        ("sigma_w2*sigma_t2 >= 1", s.sigma_w2 * s.sigma_t2),
        ("sigma_w3*sigma_t3 >= 1", s.sigma_w3 * s.sigma_t3),
    ];
    for (name, product) in products {
        push(name, approx_ge(product, 1.0), format!("{product:.6}"));
    }

    ValidationReport { entries }
}

/// One pulse as Alice emits it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub center_frequency: f64,
    pub spectral_width: f64,
    pub temporal_width: f64,
    /// `0` or `τ`.
    pub time_offset: f64,
    pub mean_photon_number: f64,
}

/// Maps `(bit, basis)` to the pulse Alice fires.
pub fn encode_pulse(
    bit: BitValue,
    basis: Basis,
    scheme: &CodingScheme,
    mu: f64,
) -> Result<PulseSpec> {
    validate_scheme(scheme).into_result()?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "mean photon number must be positive, got {mu}"
        )));
    }
    let spec = match (basis, bit) {
        (Basis::Frequency, BitValue::Zero) => PulseSpec {
            center_frequency: scheme.omega1,
            spectral_width: scheme.sigma_w1,
            temporal_width: scheme.sigma_t1,
            time_offset: 0.0,
            mean_photon_number: mu,
        },
        (Basis::Frequency, BitValue::One) => PulseSpec {
            center_frequency: scheme.omega2,
            spectral_width: scheme.sigma_w2,
            temporal_width: scheme.sigma_t2,
            time_offset: 0.0,
            mean_photon_number: mu,
        },
        (Basis::Time, bit) => PulseSpec {
            center_frequency: scheme.omega3,
            spectral_width: scheme.sigma_w3,
            temporal_width: scheme.sigma_t3,
            time_offset: if bit == BitValue::One {
                scheme.tau
            } else {
                0.0
            },
            mean_photon_number: mu,
        },
    };
    Ok(spec)
}

/// Channel, detector and source parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Mean photon number per pulse.
    pub mu: f64,
    /// Fiber loss, dB/km.
    pub alpha: f64,
    pub length_km: f64,
    /// Transmittance of Bob's optics.
    pub t_b: f64,
    pub eta_d: f64,
    /// Dark-count probability per detector per gate.
    pub p_d: f64,
    /// Detectors (detection modes) per basis.
    pub m: u32,
    pub visibility: f64,
    /// Fraction of detected pulses kept by sifting.
    pub p_s: f64,
    /// Probability a photon lands on the wrong detector of the right basis.
    pub p_opt: f64,
}

impl SystemParams {
    /// The comparison setup: `t_B = 1`, `η_D = 0.1`, `α = 0.25 dB/km`,
    /// `p_d = 1e-5`, `μ = 0.1`, `m = 2`, `p_s = 1/2`, `p_opt = 0`, `V = 1`,
    /// at zero length.
    pub fn fig2() -> Self {
        SystemParams {
            mu: 0.1,
            alpha: 0.25,
            length_km: 0.0,
            t_b: 1.0,
            eta_d: 0.1,
            p_d: 1e-5,
            m: 2,
            visibility: 1.0,
            p_s: 0.5,
            p_opt: 0.0,
        }
    }

    /// Lossless, noiseless channel with perfect detectors.
    pub fn ideal() -> Self {
        SystemParams {
            alpha: 0.0,
            eta_d: 1.0,
            p_d: 0.0,
            ..Self::fig2()
        }
    }

    pub fn with_length(mut self, length_km: f64) -> Self {
        self.length_km = length_km;
        self
    }

    pub fn with_visibility(mut self, v: f64) -> Self {
        self.visibility = v;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let mut bad = Vec::new();
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            bad.push(format!("mu = {} must be > 0", self.mu));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            bad.push(format!("alpha = {} must be >= 0", self.alpha));
        }
        if !(self.length_km >= 0.0 && self.length_km.is_finite()) {
            bad.push(format!("length_km = {} must be >= 0", self.length_km));
        }
        if !unit(self.t_b) {
            bad.push(format!("t_b = {} outside [0,1]", self.t_b));
        }
        if !unit(self.eta_d) {
            bad.push(format!("eta_d = {} outside [0,1]", self.eta_d));
        }
        if !(0.0..1.0).contains(&self.p_d) {
            bad.push(format!("p_d = {} outside [0,1)", self.p_d));
        }
        if self.m == 0 {
            bad.push("m must be a positive integer".to_string());
        }
        if !unit(self.visibility) {
            bad.push(format!("visibility = {} outside [0,1]", self.visibility));
        }
        if !(self.p_s > 0.0 && self.p_s <= 1.0) {
            bad.push(format!("p_s = {} outside (0,1]", self.p_s));
        }
        if !unit(self.p_opt) {
            bad.push(format!("p_opt = {} outside [0,1]", self.p_opt));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(bad.join("; ")))
        }
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::fig2()
    }
}
