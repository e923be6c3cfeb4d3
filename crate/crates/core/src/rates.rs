//! Closed-form rate analysis for weak-coherent-pulse QKD: source statistics,
//! transmittance, count rates, QBER, mutual information and net key rate,
//! for the frequency/time protocol and the BB84 baseline.
//!
//! Every rate here is per emitted pulse. The sifted-rate exponent is always
//! `μt` (system transmittance included); the shorter `1 − e^{−μ} + 2p_d e^{−μ}`
//! that sometimes appears for the sifted rate drops `t` by mistake and is not
//! used.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::scheme::SystemParams;

/// Which QBER / key-rate formula to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    /// Frequency/time coding: errors from dark counts (and wrong-detector
    /// routing) only.
    Ft,
    /// Polarization or phase coding: adds the `(1 − V)/2` visibility term.
    Bb84,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Ft => "FT",
            ProtocolKind::Bb84 => "BB84",
        }
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(domain(format!("{name} = {v} outside [0,1]")))
    }
}

/// Poisson photon-number probability `μⁿ e^{−μ} / n!`.
pub fn poisson_pn(mu: f64, n: u32) -> Result<f64> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(domain(format!("mean photon number {mu} must be >= 0")));
    }
    if n == 0 {
        return Ok((-mu).exp());
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    if n <= 20 {
        let mut p = (-mu).exp();
        for k in 1..=n {
            p *= mu / k as f64;
        }
        Ok(p)
    } else {
        let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
        Ok((n as f64 * mu.ln() - mu - ln_fact).exp())
    }
}

/// `t_f = 10^{−αl/10}`.
pub fn fiber_transmittance(alpha: f64, length_km: f64) -> Result<f64> {
    if !(alpha >= 0.0) || !(length_km >= 0.0) {
        return Err(domain(format!(
            "alpha = {alpha}, length = {length_km} must both be >= 0"
        )));
    }
    Ok(10f64.powf(-alpha * length_km / 10.0))
}

/// `t = t_f · t_B · η_D`.
pub fn system_transmittance(t_f: f64, t_b: f64, eta_d: f64) -> Result<f64> {
    check_unit("t_f", t_f)?;
    check_unit("t_B", t_b)?;
    check_unit("eta_D", eta_d)?;
    Ok(t_f * t_b * eta_d)
}

fn check_dark(m: u32, p_d: f64) -> Result<()> {
    if m == 0 {
        return Err(domain("detectors per basis m must be >= 1"));
    }
    if !(0.0..1.0).contains(&p_d) {
        return Err(domain(format!(
            "dark-count probability {p_d} outside [0,1)"
        )));
    }
    if m as f64 * p_d > 1.0 {
        return Err(domain(format!(
            "m*p_d = {} exceeds 1; the dark-count formula leaves probability range",
            m as f64 * p_d
        )));
    }
    Ok(())
}

/// Click probability for an `n`-photon pulse: `t_{n,nd} = 1 − (1 − t)ⁿ`,
/// or `t_n = t_{n,nd} + m p_d (1 − t_{n,nd})` with dark counts.
pub fn click_prob_n_photons(n: u32, t: f64, m: u32, p_d: f64, with_dark: bool) -> Result<f64> {
    check_unit("t", t)?;
    check_dark(m, p_d)?;
    let no_dark = 1.0 - (1.0 - t).powi(n as i32);
    if with_dark {
        Ok(no_dark + m as f64 * p_d * (1.0 - no_dark))
    } else {
        Ok(no_dark)
    }
}

/// Mean count rate of a weak coherent pulse: `R_nd = 1 − e^{−μt}`, or
/// `R = 1 − e^{−μt} + m p_d e^{−μt}` with dark counts.
pub fn mean_count_rate(mu: f64, t: f64, m: u32, p_d: f64, with_dark: bool) -> Result<f64> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(domain(format!("mean photon number {mu} must be >= 0")));
    }
    check_unit("t", t)?;
    check_dark(m, p_d)?;
    let vacuum = (-mu * t).exp();
    let r_nd = -(-mu * t).exp_m1();
    if with_dark {
        Ok(r_nd + m as f64 * p_d * vacuum)
    } else {
        Ok(r_nd)
    }
}

/// `R_sift = R · p_s`.
pub fn sifted_rate(r: f64, p_s: f64) -> Result<f64> {
    check_unit("R", r)?;
    if !(p_s > 0.0 && p_s <= 1.0) {
        return Err(domain(format!("p_s = {p_s} outside (0,1]")));
    }
    Ok(r * p_s)
}

/// Binary entropy in bits, `H2(0) = H2(1) = 0`.
pub fn binary_entropy(q: f64) -> Result<f64> {
    check_unit("q", q)?;
    if q == 0.0 || q == 1.0 {
        return Ok(0.0);
    }
    Ok(-q * q.log2() - (1.0 - q) * (1.0 - q).log2())
}

/// General QBER: `[R_nd p_opt + (m/2)(1 − R_nd) p_d] p_s / R_sift`.
pub fn qber_general(r_nd: f64, p_opt: f64, m: u32, p_d: f64, p_s: f64, r_sift: f64) -> Result<f64> {
    check_unit("R_nd", r_nd)?;
    check_unit("p_opt", p_opt)?;
    if !(r_sift > 0.0) {
        return Err(Error::DeadChannel);
    }
    let numerator = (r_nd * p_opt + m as f64 / 2.0 * (1.0 - r_nd) * p_d) * p_s;
    Ok((numerator / r_sift).clamp(0.0, 1.0))
}

/// Count rates of `params` at its configured length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRates {
    pub t_f: f64,
    pub t: f64,
    pub r_nd: f64,
    pub r: f64,
    pub r_sift: f64,
}

pub fn count_rates(params: &SystemParams) -> Result<CountRates> {
    params.validate()?;
    let t_f = fiber_transmittance(params.alpha, params.length_km)?;
    let t = system_transmittance(t_f, params.t_b, params.eta_d)?;
    let r_nd = mean_count_rate(params.mu, t, params.m, params.p_d, false)?;
    let r = mean_count_rate(params.mu, t, params.m, params.p_d, true)?;
    let r_sift = sifted_rate(r, params.p_s)?;
    Ok(CountRates {
        t_f,
        t,
        r_nd,
        r,
        r_sift,
    })
}

/// QBER of the frequency/time protocol. With `p_opt = 0` and `m = 2` this is
/// `(1 − R_nd) p_d p_s / R_sift`.
pub fn qber_ft(params: &SystemParams) -> Result<f64> {
    let c = count_rates(params)?;
    qber_general(
        c.r_nd,
        params.p_opt,
        params.m,
        params.p_d,
        params.p_s,
        c.r_sift,
    )
}

/// BB84 QBER: `[R_nd (1 − V)/2 + (1 − R_nd) p_d] p_s / R_sift`.
pub fn qber_bb84(params: &SystemParams) -> Result<f64> {
    let c = count_rates(params)?;
    if !(c.r_sift > 0.0) {
        return Err(Error::DeadChannel);
    }
    let v = params.visibility;
    let numerator = (c.r_nd * (1.0 - v) / 2.0 + (1.0 - c.r_nd) * params.p_d) * params.p_s;
    Ok((numerator / c.r_sift).clamp(0.0, 1.0))
}

/// Eve's information per sifted bit, `μ(1 − t_f) + (1 − V)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EveInformation {
    /// Clamped to `[0, 1]`; this is what enters the key rate.
    pub bits: f64,
    pub raw: f64,
}

pub fn eve_information(mu: f64, t_f: f64, visibility: f64) -> EveInformation {
    let raw = mu * (1.0 - t_f) + (1.0 - visibility);
    EveInformation {
        bits: raw.clamp(0.0, 1.0),
        raw,
    }
}

/// `R_sift (1 − H2(Q) − I_AE)`. Signed: a value `<= 0` means no secure key.
pub fn net_rate(r_sift: f64, q: f64, i_ae: f64) -> Result<f64> {
    Ok(r_sift * (1.0 - binary_entropy(q)? - i_ae))
}

/// Every analytic quantity at one length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub kind: ProtocolKind,
    pub length_km: f64,
    pub t_f: f64,
    pub t: f64,
    pub r_nd: f64,
    pub r: f64,
    pub r_sift: f64,
    pub q: f64,
    pub i_ab: f64,
    pub i_ae: f64,
    pub i_ae_raw: f64,
    pub r_net: f64,
}

impl RatePoint {
    pub fn secure(&self) -> bool {
        self.r_net > 0.0
    }

    /// `max(0, R_net)`: the rate of secret key actually produced.
    pub fn key_rate(&self) -> f64 {
        self.r_net.max(0.0)
    }
}

pub fn rate_point(kind: ProtocolKind, params: &SystemParams) -> Result<RatePoint> {
    let c = count_rates(params)?;
    let q = match kind {
        ProtocolKind::Ft => qber_ft(params)?,
        ProtocolKind::Bb84 => qber_bb84(params)?,
    };
    let i_ab = 1.0 - binary_entropy(q)?;
    let eve = eve_information(params.mu, c.t_f, params.visibility);
    let r_net = net_rate(c.r_sift, q, eve.bits)?;
    Ok(RatePoint {
        kind,
        length_km: params.length_km,
        t_f: c.t_f,
        t: c.t,
        r_nd: c.r_nd,
        r: c.r,
        r_sift: c.r_sift,
        q,
        i_ab,
        i_ae: eve.bits,
        i_ae_raw: eve.raw,
        r_net,
    })
}

fn secure_at(kind: ProtocolKind, template: &SystemParams, length_km: f64) -> bool {
    rate_point(kind, &template.with_length(length_km))
        .map(|p| p.secure())
        .unwrap_or(false)
}

/// Longest fiber with a positive key rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxDistance {
    /// `0` when `no_key` is set.
    pub km: f64,
    /// No key even at zero length.
    pub no_key: bool,
    /// The key rate was still positive at the scan limit.
    pub reached_limit: bool,
}

/// Scans `[0, l_max_km]` on a 1 km grid for the first non-secure point and
/// bisects the bracketing interval down to `tol_km`.
pub fn max_distance(
    kind: ProtocolKind,
    template: &SystemParams,
    l_max_km: f64,
    tol_km: f64,
) -> Result<MaxDistance> {
    if !(tol_km > 0.0) {
        return Err(domain(format!("tolerance {tol_km} km must be > 0")));
    }
    if !(l_max_km >= 0.0) {
        return Err(domain(format!("scan limit {l_max_km} km must be >= 0")));
    }
    template.with_length(0.0).validate()?;
    if !secure_at(kind, template, 0.0) {
        return Ok(MaxDistance {
            km: 0.0,
            no_key: true,
            reached_limit: false,
        });
    }
    let mut lo = 0.0;
    let mut hi = None;
    let mut l = 1.0;
    while l <= l_max_km {
        if secure_at(kind, template, l) {
            lo = l;
        } else {
            hi = Some(l);
            break;
        }
        l += 1.0;
    }
    let mut hi = match hi {
        Some(h) => h,
        None if secure_at(kind, template, l_max_km) => {
            return Ok(MaxDistance {
                km: l_max_km,
                no_key: false,
                reached_limit: true,
            })
        }
        None => l_max_km,
    };
    while hi - lo > tol_km {
        let mid = 0.5 * (lo + hi);
        if secure_at(kind, template, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(MaxDistance {
        km: lo,
        no_key: false,
        reached_limit: false,
    })
}

/// Scan limit used for distance comparisons.
pub const DEFAULT_SCAN_LIMIT_KM: f64 = 500.0;
pub const DEFAULT_DISTANCE_TOL_KM: f64 = 1e-3;

/// `max_distance(FT) − max_distance(BB84)` at visibility `v`, BB84 no-key
/// counted as 0 km.
pub fn crossover_advantage(v: f64, template: &SystemParams) -> Result<f64> {
    let params = template.with_visibility(v);
    let ft = max_distance(
        ProtocolKind::Ft,
        &params,
        DEFAULT_SCAN_LIMIT_KM,
        DEFAULT_DISTANCE_TOL_KM,
    )?;
    let bb = max_distance(
        ProtocolKind::Bb84,
        &params,
        DEFAULT_SCAN_LIMIT_KM,
        DEFAULT_DISTANCE_TOL_KM,
    )?;
    Ok(ft.km - bb.km)
}

/// Lowest visibility at which `kind` still yields key at zero length, by
/// bisection on `V ∈ [0, 1]` to `tol`. `None` if even `V = 1` gives no key.
pub fn breakdown_visibility(
    kind: ProtocolKind,
    template: &SystemParams,
    tol: f64,
) -> Result<Option<f64>> {
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance {tol} must be > 0")));
    }
    let base = template.with_length(0.0);
    let works = |v: f64| secure_at(kind, &base.with_visibility(v), 0.0);
    if !works(1.0) {
        return Ok(None);
    }
    if works(0.0) {
        return Ok(Some(0.0));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if works(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Evaluates `kind` on every length of `grid`, in grid order.
pub fn sweep(kind: ProtocolKind, template: &SystemParams, grid: &[f64]) -> Result<Vec<RatePoint>> {
    grid.par_iter()
        .map(|&l| rate_point(kind, &template.with_length(l)))
        .collect()
}

/// `l_min, l_min + step, …` up to and including `l_max` (within rounding).
pub fn distance_grid(l_min: f64, l_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(l_min <= l_max) || !(l_min >= 0.0) {
        return Err(domain(format!(
            "bad grid: l_min = {l_min}, l_max = {l_max}, step = {step}"
        )));
    }
    let n = ((l_max - l_min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| l_min + i as f64 * step).collect())
}

#[cfg(test)]
// oracle values are kept at the digits they were computed with
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn poisson_examples() {
        assert_eq!(poisson_pn(0.0, 0).unwrap(), 1.0);
        assert_relative_eq!(
            poisson_pn(0.1, 0).unwrap(),
            0.904837418035959573,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            poisson_pn(0.1, 1).unwrap(),
            0.0904837418035959573,
            max_relative = 1e-15
        );
        assert!(poisson_pn(-0.1, 0).is_err());
        // log-space branch agrees with the product branch near the switch
        let direct: f64 = (1..=21).fold((-5.0f64).exp(), |p, k| p * 5.0 / k as f64);
        assert_relative_eq!(poisson_pn(5.0, 21).unwrap(), direct, max_relative = 1e-12);
        assert!(poisson_pn(1000.0, 1000).unwrap().is_finite());
    }

    #[test]
    fn fiber_examples() {
        assert_eq!(fiber_transmittance(0.25, 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            fiber_transmittance(0.25, 40.0).unwrap(),
            0.1,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            fiber_transmittance(0.25, 80.0).unwrap(),
            0.01,
            max_relative = 1e-14
        );
        assert!(fiber_transmittance(-1.0, 1.0).is_err());
        assert!(fiber_transmittance(0.2, -1.0).is_err());
    }

    #[test]
    fn system_transmittance_examples() {
        assert_eq!(system_transmittance(1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(
            system_transmittance(0.1, 1.0, 0.1).unwrap(),
            0.01,
            max_relative = 1e-15
        );
        assert_eq!(system_transmittance(0.0, 1.0, 0.1).unwrap(), 0.0);
        assert!(system_transmittance(1.2, 1.0, 0.1).is_err());
    }

    #[test]
    fn click_prob_examples() {
        assert_relative_eq!(
            click_prob_n_photons(0, 0.3, 2, 1e-5, true).unwrap(),
            2e-5,
            max_relative = 1e-15
        );
        assert_eq!(click_prob_n_photons(1, 0.5, 2, 0.0, false).unwrap(), 0.5);
        // brute force over the 2^3 survival patterns of three photons
        let t: f64 = 0.5;
        let mut brute = 0.0;
        for mask in 0u32..8 {
            let survivors = mask.count_ones();
            let p = t.powi(survivors as i32) * (1.0 - t).powi(3 - survivors as i32);
            if survivors > 0 {
                brute += p;
            }
        }
        assert_eq!(brute, 0.875);
        assert_eq!(click_prob_n_photons(3, 0.5, 2, 0.0, false).unwrap(), brute);
        assert!(click_prob_n_photons(1, 0.5, 3, 0.4, true).is_err());
    }

    #[test]
    fn mean_count_examples() {
        assert_relative_eq!(
            mean_count_rate(0.1, 0.0, 2, 1e-5, true).unwrap(),
            2e-5,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            mean_count_rate(0.1, 1.0, 2, 0.0, true).unwrap(),
            0.0951625819640404268,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            mean_count_rate(2f64.ln(), 1.0, 2, 0.0, false).unwrap(),
            0.5,
            max_relative = 1e-15
        );
    }

    #[test]
    fn sifted_rate_examples() {
        assert_eq!(sifted_rate(0.5, 0.5).unwrap(), 0.25);
        assert_eq!(sifted_rate(2e-5, 0.5).unwrap(), 1e-5);
        let c = count_rates(&SystemParams::fig2()).unwrap();
        assert_relative_eq!(c.r_sift, 0.00498498362375346489, max_relative = 1e-13);
        assert!(sifted_rate(0.5, 0.0).is_err());
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_relative_eq!(
            binary_entropy(0.11).unwrap(),
            0.499915958164527996,
            max_relative = 1e-14
        );
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn qber_general_examples() {
        assert_eq!(qber_general(0.3, 0.0, 2, 0.0, 0.5, 0.2).unwrap(), 0.0);
        let p_d = 1e-5;
        assert_relative_eq!(
            qber_general(0.0, 0.0, 2, p_d, 0.5, 2.0 * p_d * 0.5).unwrap(),
            0.5,
            max_relative = 1e-14
        );
        assert!(matches!(
            qber_general(0.0, 0.0, 2, p_d, 0.5, 0.0),
            Err(Error::DeadChannel)
        ));
        // at 50 km the general formula with p_opt = 0 is the FT QBER
        let p = SystemParams::fig2().with_length(50.0);
        let c = count_rates(&p).unwrap();
        let q = qber_general(c.r_nd, 0.0, 2, p.p_d, p.p_s, c.r_sift).unwrap();
        assert_relative_eq!(q, 0.0171673976322266321, max_relative = 1e-12);
    }

    #[test]
    fn qber_ft_examples() {
        let p = SystemParams {
            p_d: 0.0,
            ..SystemParams::fig2()
        };
        assert_eq!(qber_ft(&p).unwrap(), 0.0);
        let dead = SystemParams {
            eta_d: 0.0,
            ..SystemParams::fig2()
        };
        assert_relative_eq!(qber_ft(&dead).unwrap(), 0.5, max_relative = 1e-14);
        let far = SystemParams::fig2().with_length(100.0);
        assert_relative_eq!(
            qber_ft(&far).unwrap(),
            0.193711067124570616,
            max_relative = 1e-12
        );
        let no_signal = SystemParams {
            eta_d: 0.0,
            p_d: 0.0,
            ..SystemParams::fig2()
        };
        assert!(matches!(qber_ft(&no_signal), Err(Error::DeadChannel)));
    }

    #[test]
    fn qber_bb84_examples() {
        let p = SystemParams {
            p_d: 0.0,
            ..SystemParams::fig2()
        };
        assert_eq!(qber_bb84(&p).unwrap(), 0.0);
        assert_relative_eq!(
            qber_bb84(&p.with_visibility(0.8)).unwrap(),
            0.1,
            max_relative = 1e-12
        );
        let p = SystemParams::fig2().with_visibility(0.9).with_length(25.0);
        assert_relative_eq!(
            qber_bb84(&p).unwrap(),
            0.0537591038664389088,
            max_relative = 1e-12
        );
    }

    #[test]
    fn eve_information_examples() {
        assert_eq!(eve_information(0.1, 1.0, 1.0).bits, 0.0);
        assert_relative_eq!(
            eve_information(0.1, 0.1, 0.7).bits,
            0.39,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            eve_information(0.1, 0.5, 1.0).bits,
            0.05,
            max_relative = 1e-14
        );
        let big = eve_information(0.5, 0.0, 0.2);
        assert_eq!(big.bits, 1.0);
        assert_relative_eq!(big.raw, 1.3, max_relative = 1e-14);
    }

    #[test]
    fn net_rate_examples() {
        assert_eq!(net_rate(0.3, 0.0, 0.0).unwrap(), 0.3);
        assert_eq!(net_rate(0.3, 0.5, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            net_rate(0.5, 0.11, 0.2).unwrap(),
            0.150042020917736002,
            max_relative = 1e-13
        );
    }

    #[test]
    fn rate_point_examples() {
        let ft = rate_point(ProtocolKind::Ft, &SystemParams::fig2()).unwrap();
        assert!(ft.r_net > 0.0);
        assert_eq!(ft.r_sift, ft.r * 0.5);
        for l in [0.0, 10.0, 50.0] {
            let p = SystemParams::fig2().with_visibility(0.6).with_length(l);
            let bb = rate_point(ProtocolKind::Bb84, &p).unwrap();
            assert!(bb.r_net < 0.0, "l = {l}");
        }
        let bb0 = rate_point(
            ProtocolKind::Bb84,
            &SystemParams::fig2().with_visibility(0.6),
        )
        .unwrap();
        assert_relative_eq!(
            bb0.r_net / bb0.r_sift,
            -0.123118134203977913,
            max_relative = 1e-12
        );
    }

    #[test]
    fn max_distance_examples() {
        let v06 = SystemParams::fig2().with_visibility(0.6);
        let bb = max_distance(ProtocolKind::Bb84, &v06, 300.0, 1e-3).unwrap();
        assert!(bb.no_key);
        assert_eq!(bb.km, 0.0);

        let ft = max_distance(ProtocolKind::Ft, &SystemParams::fig2(), 300.0, 1e-3).unwrap();
        assert!(!ft.no_key && ft.km > 0.0 && ft.km < 200.0);
        // scan oracle on a 1 m grid
        let oracle = (0..200_000)
            .map(|i| i as f64 * 1e-3)
            .take_while(|&l| secure_at(ProtocolKind::Ft, &SystemParams::fig2(), l))
            .last()
            .unwrap();
        assert!((ft.km - oracle).abs() < 2e-3, "{} vs {}", ft.km, oracle);

        let clean = SystemParams {
            p_d: 0.0,
            ..SystemParams::fig2()
        };
        let full = max_distance(ProtocolKind::Bb84, &clean, 150.0, 1e-3).unwrap();
        assert!(full.reached_limit);
        assert_eq!(full.km, 150.0);
    }

    #[test]
    fn max_distance_stable_under_refinement() {
        let p = SystemParams::fig2().with_visibility(0.8);
        for kind in [ProtocolKind::Ft, ProtocolKind::Bb84] {
            let mut tol = 0.5;
            let mut prev = max_distance(kind, &p, 300.0, tol).unwrap().km;
            for _ in 0..8 {
                let next = max_distance(kind, &p, 300.0, tol / 2.0).unwrap().km;
                assert!((next - prev).abs() < tol);
                prev = next;
                tol /= 2.0;
            }
        }
    }

    #[test]
    fn crossover_examples() {
        let t = SystemParams::fig2();
        let a07 = crossover_advantage(0.7, &t).unwrap();
        assert!((55.0..=75.0).contains(&a07), "{a07}");
        let a08 = crossover_advantage(0.8, &t).unwrap();
        assert!((7.0..=17.0).contains(&a08), "{a08}");
        // at V = 1 the two QBER formulas coincide
        let a1 = crossover_advantage(1.0, &t).unwrap();
        assert!(a1.abs() < 1e-9, "{a1}");
    }

    #[test]
    fn breakdown_visibility_bracket() {
        let v = breakdown_visibility(ProtocolKind::Bb84, &SystemParams::fig2(), 1e-3)
            .unwrap()
            .unwrap();
        assert!((0.60..=0.70).contains(&v), "{v}");
        assert!((v - 0.6596).abs() < 2e-3);
    }

    #[test]
    fn grid_endpoints() {
        assert_eq!(distance_grid(0.0, 200.0, 1.0).unwrap().len(), 201);
        assert_eq!(distance_grid(5.0, 5.0, 1.0).unwrap(), vec![5.0]);
        assert!(distance_grid(10.0, 0.0, 1.0).is_err());
        let g = distance_grid(0.0, 1.0, 0.1).unwrap();
        assert_eq!(g.len(), 11);
    }
}
