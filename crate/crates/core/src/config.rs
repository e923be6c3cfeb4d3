//! Flat `name = value unit` configuration files.
//!
//! One setting per line, `#` starts a comment. Dimensional quantities must
//! carry a unit so magnitudes cannot be confused:
//!
//! ```text
//! sigma_t1 = 1.1 ns
//! sigma_t3 = 550 ps
//! omega1   = 1550 nm        # wavelength, converted to rad/s
//! sigma_w1 = 1 GHz          # ordinary frequency, multiplied by 2π
//! alpha    = 0.25 dB/km
//! length   = 25 km
//! eve      = ir
//! p_ir     = 1
//! visibilities = 1, 0.9, 0.8, 0.7
//! ```
//!
//! Keys that are not given keep the defaults of [`RunConfig::default`].

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::protocol::ProtocolConfig;
use crate::scheme::{
    angular_frequency_from_wavelength, default_scheme, CodingScheme, SystemParams,
};
use crate::sim::{EveStrategy, ResendPosition};

/// Distance grid of a sweep, km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub l_min: f64,
    pub l_max: f64,
    pub step: f64,
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep {
            l_min: 0.0,
            l_max: 200.0,
            step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scheme: CodingScheme,
    pub params: SystemParams,
    pub protocol: ProtocolConfig,
    pub sweep: Sweep,
    pub visibilities: Vec<f64>,
    /// Lengths checked by the Monte Carlo validation, km.
    pub validate_lengths: Vec<f64>,
    /// Pulse repetition rate in Hz, to convert per-pulse rates to bits/s.
    pub repetition_rate: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scheme: default_scheme(),
            params: SystemParams::fig2(),
            protocol: ProtocolConfig::default(),
            sweep: Sweep::default(),
            visibilities: vec![1.0, 0.9, 0.8, 0.7],
            validate_lengths: vec![0.0, 25.0, 50.0, 75.0, 100.0],
            repetition_rate: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<String> = Vec::new();
        let mut eve_kind: Option<(usize, String)> = None;
        let mut p_ir = 1.0;

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Config { line, msg };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `name = value`, got `{content}`")))?;
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|k| k == key) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            seen.push(key.to_string());
            cfg.apply(key, value, &mut eve_kind, &mut p_ir)
                .map_err(|msg| Error::Config { line, msg })?;
            if let Some((eve_line, _)) = eve_kind.as_mut() {
                if key == "eve" {
                    *eve_line = line;
                }
            }
        }

        if let Some((line, kind)) = eve_kind {
            cfg.protocol.eve = match kind.as_str() {
                "none" => EveStrategy::None,
                "ir" | "intercept-resend" => EveStrategy::InterceptResend(p_ir),
                "pns" => EveStrategy::Pns,
                "pns+ir" => EveStrategy::PnsThenIr(p_ir),
                other => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown eve strategy `{other}` (none, ir, pns, pns+ir)"),
                    })
                }
            };
        }
        cfg.check().map_err(|msg| Error::Config { line: 0, msg })?;
        Ok(cfg)
    }

    fn apply(
        &mut self,
        key: &str,
        value: &str,
        eve_kind: &mut Option<(usize, String)>,
        p_ir: &mut f64,
    ) -> std::result::Result<(), String> {
        let s = &mut self.scheme;
        let p = &mut self.params;
        match key {
            "omega1" => s.omega1 = angular(value)?,
            "omega2" => s.omega2 = angular(value)?,
            "omega3" => s.omega3 = angular(value)?,
            "sigma_w1" => s.sigma_w1 = spectral(value)?,
            "sigma_w2" => s.sigma_w2 = spectral(value)?,
            "sigma_w3" => s.sigma_w3 = spectral(value)?,
            "sigma_t1" => s.sigma_t1 = time(value)?,
            "sigma_t2" => s.sigma_t2 = time(value)?,
            "sigma_t3" => s.sigma_t3 = time(value)?,
            "tau" => s.tau = time(value)?,
            "mu" => p.mu = plain(value)?,
            "alpha" => p.alpha = with_unit(value, &[("dB/km", 1.0)])?,
            "length" | "length_km" => p.length_km = distance(value)?,
            "t_b" => p.t_b = plain(value)?,
            "eta_d" => p.eta_d = plain(value)?,
            "p_d" => p.p_d = plain(value)?,
            "m" => p.m = integer(value)? as u32,
            "visibility" | "v" => p.visibility = plain(value)?,
            "p_s" => p.p_s = plain(value)?,
            "p_opt" => p.p_opt = plain(value)?,
            "qber_threshold" => self.protocol.qber_threshold = plain(value)?,
            "sample_fraction" => self.protocol.sample_fraction = plain(value)?,
            "eve" => *eve_kind = Some((0, value.to_ascii_lowercase())),
            "p_ir" => *p_ir = plain(value)?,
            "resend" => {
                self.protocol.resend = match value {
                    "head" => ResendPosition::ChannelHead,
                    "receiver" => ResendPosition::ReceiverDoorstep,
                    other => {
                        return Err(format!(
                            "unknown resend position `{other}` (head, receiver)"
                        ))
                    }
                }
            }
            "seed" => self.protocol.seed = integer(value)?,
            "n_pulses" => self.protocol.n_pulses = integer(value)?,
            "l_min" => self.sweep.l_min = distance(value)?,
            "l_max" => self.sweep.l_max = distance(value)?,
            "l_step" => self.sweep.step = distance(value)?,
            "visibilities" => self.visibilities = list(value, None)?,
            "validate_lengths" => self.validate_lengths = list(value, Some(DISTANCE_UNITS))?,
            "repetition_rate" => self.repetition_rate = Some(with_unit(value, FREQUENCY_UNITS)?),
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    fn check(&self) -> std::result::Result<(), String> {
        self.params.validate().map_err(|e| e.to_string())?;
        self.protocol.eve.validate().map_err(|e| e.to_string())?;
        let Sweep { l_min, l_max, step } = self.sweep;
        if !(l_min >= 0.0 && l_min <= l_max && step > 0.0) {
            return Err(format!(
                "sweep needs 0 <= l_min <= l_max and step > 0 (got {l_min}, {l_max}, {step})"
            ));
        }
        if let Some(v) = self.visibilities.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(format!("visibility {v} outside [0,1]"));
        }
        let q = self.protocol.qber_threshold;
        if !(0.0..=1.0).contains(&q) {
            return Err(format!("qber_threshold {q} outside [0,1]"));
        }
        let f = self.protocol.sample_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(format!("sample_fraction {f} outside (0,1)"));
        }
        Ok(())
    }
}

const TIME_UNITS: &[(&str, f64)] = &[
    ("s", 1.0),
    ("ms", 1e-3),
    ("us", 1e-6),
    ("ns", 1e-9),
    ("ps", 1e-12),
    ("fs", 1e-15),
];
const FREQUENCY_UNITS: &[(&str, f64)] = &[
    ("Hz", 1.0),
    ("kHz", 1e3),
    ("MHz", 1e6),
    ("GHz", 1e9),
    ("THz", 1e12),
];
const DISTANCE_UNITS: &[(&str, f64)] = &[("km", 1.0), ("m", 1e-3)];
const WAVELENGTH_UNITS: &[(&str, f64)] = &[("nm", 1e-9), ("um", 1e-6)];

/// Splits `"500 ps"` or `"500ps"` into the number and the unit.
fn split_number(value: &str) -> std::result::Result<(f64, &str), String> {
    let value = value.trim();
    let cleaned = |s: &str| s.replace('_', "");
    for end in (1..=value.len()).rev() {
        if !value.is_char_boundary(end) {
            continue;
        }
        if let Ok(x) = cleaned(&value[..end]).parse::<f64>() {
            return Ok((x, value[end..].trim()));
        }
    }
    Err(format!("`{value}` does not start with a number"))
}

fn plain(value: &str) -> std::result::Result<f64, String> {
    let (x, unit) = split_number(value)?;
    if !unit.is_empty() {
        return Err(format!(
            "`{value}` is dimensionless, unexpected unit `{unit}`"
        ));
    }
    Ok(x)
}

fn integer(value: &str) -> std::result::Result<u64, String> {
    let x = plain(value)?;
    if x < 0.0 || x.fract() != 0.0 || x > u64::MAX as f64 {
        return Err(format!("`{value}` is not a non-negative integer"));
    }
    Ok(x as u64)
}

fn with_unit(value: &str, units: &[(&str, f64)]) -> std::result::Result<f64, String> {
    let (x, unit) = split_number(value)?;
    units
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, scale)| x * scale)
        .ok_or_else(|| {
            let names: Vec<&str> = units.iter().map(|(u, _)| *u).collect();
            format!("`{value}` needs a unit, one of: {}", names.join(", "))
        })
}

fn time(value: &str) -> std::result::Result<f64, String> {
    with_unit(value, TIME_UNITS)
}

fn distance(value: &str) -> std::result::Result<f64, String> {
    with_unit(value, DISTANCE_UNITS)
}

/// Spectral width: rad/s as is, ordinary frequency times 2π.
fn spectral(value: &str) -> std::result::Result<f64, String> {
    let (x, unit) = split_number(value)?;
    if unit == "rad/s" {
        return Ok(x);
    }
    with_unit(value, FREQUENCY_UNITS)
        .map(|f| 2.0 * PI * f)
        .map_err(|_| format!("`{value}` needs a unit: rad/s or Hz, kHz, MHz, GHz, THz"))
}

/// Center frequency: as a spectral width, or a vacuum wavelength.
fn angular(value: &str) -> std::result::Result<f64, String> {
    if let Ok(lambda) = with_unit(value, WAVELENGTH_UNITS) {
        return Ok(angular_frequency_from_wavelength(lambda));
    }
    spectral(value).map_err(|_| format!("`{value}` needs a unit: rad/s, Hz..THz, nm or um"))
}

/// `a, b, c [unit]`: the trailing unit applies to every item.
fn list(value: &str, units: Option<&[(&str, f64)]>) -> std::result::Result<Vec<f64>, String> {
    let items: Vec<&str> = value.split(',').map(str::trim).collect();
    let trailing_unit = items
        .last()
        .and_then(|last| split_number(last).ok())
        .map(|(_, u)| u.to_string())
        .unwrap_or_default();
    items
        .iter()
        .map(|item| {
            let (x, unit) = split_number(item)?;
            match units {
                None => {
                    if unit.is_empty() {
                        Ok(x)
                    } else {
                        Err(format!("`{item}` is dimensionless"))
                    }
                }
                Some(units) => {
                    let u = if unit.is_empty() {
                        trailing_unit.as_str()
                    } else {
                        unit
                    };
                    with_unit(&format!("{x} {u}"), units)
                }
            }
        })
        .collect()
}

/// Serializes a coding scheme in SI units, one `name = value unit` per line.
/// [`RunConfig::parse`] reads it back exactly.
pub fn scheme_to_kv(scheme: &CodingScheme) -> String {
    let mut out = String::new();
    let rows = [
        ("omega1", scheme.omega1, "rad/s"),
        ("omega2", scheme.omega2, "rad/s"),
        ("omega3", scheme.omega3, "rad/s"),
        ("sigma_w1", scheme.sigma_w1, "rad/s"),
        ("sigma_w2", scheme.sigma_w2, "rad/s"),
        ("sigma_w3", scheme.sigma_w3, "rad/s"),
        ("sigma_t1", scheme.sigma_t1, "s"),
        ("sigma_t2", scheme.sigma_t2, "s"),
        ("sigma_t3", scheme.sigma_t3, "s"),
        ("tau", scheme.tau, "s"),
    ];
    for (name, v, unit) in rows {
        let _ = writeln!(out, "{name} = {v:e} {unit}");
    }
    out
}
