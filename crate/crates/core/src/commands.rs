//! The operations behind the `ftqkd` subcommands. Each takes a parsed
//! [`RunConfig`] and returns a value whose `Display` is the CSV or report
//! the binary prints, so the same output is available to library callers.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::postprocess::key_to_hex;
use crate::protocol::{run_protocol, ProtocolOutcome, SUMMARY_CSV_HEADER};
use crate::rates::{
    breakdown_visibility, count_rates, distance_grid, max_distance, qber_ft, rate_point,
    MaxDistance, ProtocolKind, DEFAULT_DISTANCE_TOL_KM, DEFAULT_SCAN_LIMIT_KM,
};
use crate::scheme::{validate_scheme, ValidationReport};
use crate::sim::Simulator;

/// Tolerance of the visibility bisection in [`cmd_crossover`].
pub const BREAKDOWN_TOL: f64 = 1e-3;

/// `|z|` above which [`cmd_validate`] reports a breach.
pub const Z_LIMIT: f64 = 4.0;

/// Smallest session [`cmd_validate`] accepts.
pub const MIN_VALIDATE_PULSES: u64 = 100_000;

pub fn check_scheme(cfg: &RunConfig) -> ValidationReport {
    validate_scheme(&cfg.scheme)
}

/// Refuses a failing coding scheme unless `force` is set.
pub fn ensure_scheme(cfg: &RunConfig, force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    check_scheme(cfg).into_result()
}

/// Column names of [`cmd_rates`]; two bits/s columns follow when a
/// repetition rate is configured.
pub const RATES_CSV_HEADER: &str =
    "length_km,V,r_sift_ft,q_ft,r_net_ft,r_sift_bb84,q_bb84,r_net_bb84,secure_ft,secure_bb84";

/// FT and BB84 rates for every visibility (outer) and grid length (inner).
pub fn cmd_rates(cfg: &RunConfig, force: bool) -> Result<String> {
    ensure_scheme(cfg, force)?;
    let grid = distance_grid(cfg.sweep.l_min, cfg.sweep.l_max, cfg.sweep.step)?;
    let mut out = String::from(RATES_CSV_HEADER);
    if cfg.repetition_rate.is_some() {
        out.push_str(",key_bps_ft,key_bps_bb84");
    }
    out.push('\n');
    for &v in &cfg.visibilities {
        let base = cfg.params.with_visibility(v);
        for &l in &grid {
            let p = base.with_length(l);
            let ft = rate_point(ProtocolKind::Ft, &p)?;
            let bb = rate_point(ProtocolKind::Bb84, &p)?;
            out.push_str(&format!(
                "{l},{v},{},{},{},{},{},{},{},{}",
                ft.r_sift,
                ft.q,
                ft.r_net,
                bb.r_sift,
                bb.q,
                bb.r_net,
                ft.secure(),
                bb.secure()
            ));
            if let Some(rate) = cfg.repetition_rate {
                out.push_str(&format!(
                    ",{},{}",
                    ft.key_rate() * rate,
                    bb.key_rate() * rate
                ));
            }
            out.push('\n');
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverRow {
    pub visibility: f64,
    pub ft: MaxDistance,
    pub bb84: MaxDistance,
    /// FT minus BB84 distance, km; BB84 no-key counts as 0 km.
    pub advantage_km: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverReport {
    pub rows: Vec<CrossoverRow>,
    /// Lowest visibility at which BB84 still yields key at zero length.
    pub bb84_breakdown: Option<f64>,
}

impl fmt::Display for CrossoverReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "V,ft_max_km,bb84_max_km,advantage_km,ft_no_key,bb84_no_key,ft_reached_limit"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{},{},{},{},{},{},{}",
                r.visibility,
                r.ft.km,
                r.bb84.km,
                r.advantage_km,
                r.ft.no_key,
                r.bb84.no_key,
                r.ft.reached_limit
            )?;
        }
        writeln!(f)?;
        writeln!(f, "bb84_breakdown_visibility")?;
        match self.bb84_breakdown {
            Some(v) => writeln!(f, "{v}"),
            None => writeln!(f, "none"),
        }
    }
}

pub fn cmd_crossover(cfg: &RunConfig, force: bool) -> Result<CrossoverReport> {
    ensure_scheme(cfg, force)?;
    let rows = cfg
        .visibilities
        .iter()
        .map(|&v| {
            let p = cfg.params.with_visibility(v);
            let dist =
                |kind| max_distance(kind, &p, DEFAULT_SCAN_LIMIT_KM, DEFAULT_DISTANCE_TOL_KM);
            let ft = dist(ProtocolKind::Ft)?;
            let bb84 = dist(ProtocolKind::Bb84)?;
            Ok(CrossoverRow {
                visibility: v,
                ft,
                bb84,
                advantage_km: ft.km - bb84.km,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let bb84_breakdown = breakdown_visibility(ProtocolKind::Bb84, &cfg.params, BREAKDOWN_TOL)?;
    Ok(CrossoverReport {
        rows,
        bb84_breakdown,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationRow {
    pub length_km: f64,
    pub seed: u64,
    pub analytic_r: f64,
    pub empirical_r: f64,
    pub z_r: f64,
    pub analytic_q: f64,
    /// NaN when no pulse was sifted.
    pub empirical_q: f64,
    /// NaN when undefined.
    pub z_q: f64,
    pub sift_candidates: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McValidation {
    pub pulses: u64,
    pub rows: Vec<ValidationRow>,
}

impl McValidation {
    /// Any defined z-score beyond [`Z_LIMIT`].
    pub fn breach(&self) -> bool {
        self.rows
            .iter()
            .any(|r| r.z_r.abs() > Z_LIMIT || r.z_q.abs() > Z_LIMIT)
    }
}

impl fmt::Display for McValidation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "length_km,seed,pulses,analytic_r,empirical_r,z_r,analytic_q_ft,empirical_q,z_q,sifted"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{},{},{},{},{},{},{},{},{},{}",
                r.length_km,
                r.seed,
                self.pulses,
                r.analytic_r,
                r.empirical_r,
                r.z_r,
                r.analytic_q,
                r.empirical_q,
                r.z_q,
                r.sift_candidates
            )?;
        }
        Ok(())
    }
}

// (observed − expected) / binomial σ; 0/0 counts as agreement.
fn z_score(observed: f64, expected: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
    let diff = observed - expected;
    if sigma == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    } else {
        diff / sigma
    }
}

/// Monte Carlo count rate and QBER against the closed forms at every
/// configured validation length. Length `i` uses seed `seed + i`.
pub fn cmd_validate(cfg: &RunConfig, force: bool) -> Result<McValidation> {
    ensure_scheme(cfg, force)?;
    let n = cfg.protocol.n_pulses;
    if n < MIN_VALIDATE_PULSES {
        return Err(Error::InvalidParams(format!(
            "validation needs n_pulses >= {MIN_VALIDATE_PULSES}, got {n}"
        )));
    }
    let rows = cfg
        .validate_lengths
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let params = cfg.params.with_length(l);
            let seed = cfg.protocol.seed.wrapping_add(i as u64);
            let sim = Simulator::unchecked_scheme(params, cfg.protocol.eve)?
                .with_resend_position(cfg.protocol.resend);
            let stats = sim.run_stats(n, seed)?;
            let analytic_r = count_rates(&params)?.r;
            let analytic_q = qber_ft(&params)?;
            let empirical_q = stats.empirical_q.unwrap_or(f64::NAN);
            Ok(ValidationRow {
                length_km: l,
                seed,
                analytic_r,
                empirical_r: stats.empirical_r,
                z_r: z_score(stats.empirical_r, analytic_r, n),
                analytic_q,
                empirical_q,
                z_q: z_score(empirical_q, analytic_q, stats.sift_candidates),
                sift_candidates: stats.sift_candidates,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(McValidation { pulses: n, rows })
}

/// Runs one full session with the configured Eve and seed.
pub fn cmd_protocol(cfg: &RunConfig, force: bool) -> Result<ProtocolOutcome> {
    ensure_scheme(cfg, force)?;
    run_protocol(&cfg.scheme, &cfg.params, &cfg.protocol, force)
}

/// Paths written by [`write_protocol_outputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolFiles {
    pub summary: PathBuf,
    /// Absent when the session aborted.
    pub keys: Option<(PathBuf, PathBuf)>,
}

/// Writes `summary.csv` and, unless the session aborted, `alice.key` and
/// `bob.key` into `dir`, creating it if needed. An abort removes key files
/// left there by an earlier session.
pub fn write_protocol_outputs(outcome: &ProtocolOutcome, dir: &Path) -> Result<ProtocolFiles> {
    fs::create_dir_all(dir)?;
    let summary = dir.join("summary.csv");
    fs::write(
        &summary,
        format!("{SUMMARY_CSV_HEADER}\n{}\n", outcome.summary),
    )?;
    let keys = match &outcome.keys {
        Some((a, b)) => {
            let (pa, pb) = (dir.join("alice.key"), dir.join("bob.key"));
            fs::write(&pa, key_to_hex(&a.bits))?;
            fs::write(&pb, key_to_hex(&b.bits))?;
            Some((pa, pb))
        }
        None => {
            for name in ["alice.key", "bob.key"] {
                match fs::remove_file(dir.join(name)) {
                    Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e.into()),
                    _ => {}
                }
            }
            None
        }
    };
    Ok(ProtocolFiles { summary, keys })
}
