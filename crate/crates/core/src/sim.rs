//! Pulse-level Monte Carlo of the quantum part of a session: Alice's
//! random choices, Poisson photon numbers, the eavesdropper, per-photon
//! loss, detector routing, dark counts and Bob's bit resolution.
//!
//! Every pulse draws from its own xoshiro256++ generator keyed by
//! `(seed, index)`, so a session is a pure function of the seed no matter how
//! the pulses are spread over threads.

use std::fmt;
use std::io::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::{Distribution, Poisson};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rates::fiber_transmittance;
use crate::scheme::{validate_scheme, Basis, BitValue, CodingScheme, ReceivedBit, SystemParams};

/// Eavesdropping strategy applied at the head of the fiber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EveStrategy {
    None,
    /// Measure a fraction `p_IR` of pulses in a random basis and resend.
    InterceptResend(f64),
    /// Photon-number splitting: each photon is diverted with probability
    /// `1 − t_f`, the rest reach Bob through a lossless channel.
    Pns,
    /// PNS, then intercept-resend with probability `p_IR` on pulses from
    /// which Eve split off nothing.
    PnsThenIr(f64),
}

impl EveStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EveStrategy::InterceptResend(p) | EveStrategy::PnsThenIr(p)
                if !(0.0..=1.0).contains(&p) =>
            {
                Err(Error::InvalidParams(format!("p_IR = {p} outside [0,1]")))
            }
            _ => Ok(()),
        }
    }
}

/// Where Eve's resent pulses enter the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResendPosition {
    /// At Alice's end; the resent pulse suffers the full fiber loss.
    #[default]
    ChannelHead,
    /// Right in front of Bob; only `t_B · η_D` applies.
    ReceiverDoorstep,
}

/// Bob's four detection modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    Spd1,
    Spd2,
    Spd3Early,
    Spd3Late,
}

impl Detector {
    pub const ALL: [Detector; 4] = [
        Detector::Spd1,
        Detector::Spd2,
        Detector::Spd3Early,
        Detector::Spd3Late,
    ];

    /// Detector that registers `bit` in `basis`.
    pub fn for_bit(basis: Basis, bit: BitValue) -> Self {
        match (basis, bit) {
            (Basis::Frequency, BitValue::Zero) => Detector::Spd1,
            (Basis::Frequency, BitValue::One) => Detector::Spd2,
            (Basis::Time, BitValue::Zero) => Detector::Spd3Early,
            (Basis::Time, BitValue::One) => Detector::Spd3Late,
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            Detector::Spd1 | Detector::Spd2 => Basis::Frequency,
            Detector::Spd3Early | Detector::Spd3Late => Basis::Time,
        }
    }

    pub fn bit(self) -> BitValue {
        match self {
            Detector::Spd1 | Detector::Spd3Early => BitValue::Zero,
            Detector::Spd2 | Detector::Spd3Late => BitValue::One,
        }
    }

    fn mask(self) -> u8 {
        1 << self as u8
    }
}

/// Set of detectors that fired: bit 0 SPD1, bit 1 SPD2, bit 2 SPD3 early
/// window, bit 3 SPD3 late window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Clicks(u8);

impl Clicks {
    pub fn from_bits(bits: u8) -> Self {
        Clicks(bits & 0b1111)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn insert(&mut self, d: Detector) {
        self.0 |= d.mask();
    }

    pub fn contains(self, d: Detector) -> bool {
        self.0 & d.mask() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn in_basis(self, basis: Basis) -> u32 {
        Detector::ALL
            .iter()
            .filter(|d| d.basis() == basis && self.contains(**d))
            .count() as u32
    }

    pub fn iter(self) -> impl Iterator<Item = Detector> {
        Detector::ALL.into_iter().filter(move |d| self.contains(*d))
    }
}

/// Resolves `g_n`: exactly one click, and only inside Bob's basis, gives a
/// bit; anything else is `Invalid`.
pub fn resolve(clicks: Clicks, bob_basis: Basis) -> ReceivedBit {
    if clicks.in_basis(bob_basis.other()) > 0 || clicks.in_basis(bob_basis) != 1 {
        return ReceivedBit::Invalid;
    }
    clicks
        .iter()
        .find(|d| d.basis() == bob_basis)
        .map(|d| d.bit().into())
        .unwrap_or(ReceivedBit::Invalid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EveTag {
    Absent,
    /// Eve was active but left this pulse alone.
    Passed,
    Split,
    Resent,
    SplitThenResent,
}

impl EveTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EveTag::Absent => "none",
            EveTag::Passed => "pass",
            EveTag::Split => "pns",
            EveTag::Resent => "ir",
            EveTag::SplitThenResent => "pns+ir",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EveMeasurement {
    pub basis: Basis,
    pub bit: BitValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EveLog {
    pub tag: EveTag,
    /// Photons Eve kept from a splitting attack.
    pub split_photons: u32,
    pub measurement: Option<EveMeasurement>,
}

impl EveLog {
    fn absent() -> Self {
        EveLog {
            tag: EveTag::Absent,
            split_photons: 0,
            measurement: None,
        }
    }

    /// Eve holds the bit with certainty: she kept a photon (readable once
    /// bases are announced) or measured in Alice's basis.
    pub fn knows_bit(&self, alice_basis: Basis) -> bool {
        self.split_photons > 0 || self.measurement.is_some_and(|m| m.basis == alice_basis)
    }

    /// Eve's best guess equals Alice's bit, lucky wrong-basis hits included.
    pub fn guessed_bit(&self, alice_bit: BitValue, alice_basis: Basis) -> bool {
        self.knows_bit(alice_basis) || self.measurement.is_some_and(|m| m.bit == alice_bit)
    }
}

/// Transmittance the pulse still has to cross after Eve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Downstream {
    /// Fiber, Bob's optics and detector: `t_f · t_B · η_D`.
    FullChannel,
    /// Bob's optics and detector only: `t_B · η_D`.
    ReceiverOnly,
}

/// What leaves Eve's position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EveOutcome {
    pub photons_out: u32,
    /// State carried by the outgoing photons, as `(basis, bit)`.
    pub encoding: (Basis, BitValue),
    pub downstream: Downstream,
    pub log: EveLog,
}

fn intercept<R: Rng + ?Sized>(
    photons: u32,
    alice_bit: BitValue,
    alice_basis: Basis,
    rng: &mut R,
) -> (EveMeasurement, (Basis, BitValue)) {
    let basis = Basis::from_coding_bit(rng.random());
    // wrong-basis outcomes are uniformly random
    let bit = if basis == alice_basis {
        alice_bit
    } else {
        BitValue::from(rng.random::<bool>())
    };
    debug_assert!(photons > 0);
    (EveMeasurement { basis, bit }, (basis, bit))
}

/// Applies `strategy` to a pulse of `photons` photons at the channel head.
///
/// An intercepted pulse is measured (Eve resolves any non-empty pulse) and
/// replaced by the same number of photons prepared in her basis with her
/// result, so Bob's click statistics do not reveal which pulses were hit.
pub fn apply_eve<R: Rng + ?Sized>(
    photons: u32,
    alice_bit: BitValue,
    alice_basis: Basis,
    strategy: EveStrategy,
    params: &SystemParams,
    resend: ResendPosition,
    rng: &mut R,
) -> EveOutcome {
    let untouched = EveOutcome {
        photons_out: photons,
        encoding: (alice_basis, alice_bit),
        downstream: Downstream::FullChannel,
        log: EveLog::absent(),
    };
    let resend_downstream = match resend {
        ResendPosition::ChannelHead => Downstream::FullChannel,
        ResendPosition::ReceiverDoorstep => Downstream::ReceiverOnly,
    };
    match strategy {
        EveStrategy::None => untouched,
        EveStrategy::InterceptResend(p) => {
            if photons == 0 || !rng.random_bool(p) {
                return EveOutcome {
                    log: EveLog {
                        tag: EveTag::Passed,
                        ..EveLog::absent()
                    },
                    ..untouched
                };
            }
            let (m, encoding) = intercept(photons, alice_bit, alice_basis, rng);
            EveOutcome {
                photons_out: photons,
                encoding,
                downstream: resend_downstream,
                log: EveLog {
                    tag: EveTag::Resent,
                    split_photons: 0,
                    measurement: Some(m),
                },
            }
        }
        EveStrategy::Pns | EveStrategy::PnsThenIr(_) => {
            let t_f = fiber_transmittance(params.alpha, params.length_km).unwrap_or(0.0);
            let split_p = (1.0 - t_f).clamp(0.0, 1.0);
            let kept = (0..photons).filter(|_| rng.random_bool(split_p)).count() as u32;
            let survivors = photons - kept;
            let split = EveOutcome {
                photons_out: survivors,
                encoding: (alice_basis, alice_bit),
                downstream: Downstream::ReceiverOnly,
                log: EveLog {
                    tag: EveTag::Split,
                    split_photons: kept,
                    measurement: None,
                },
            };
            let p_ir = match strategy {
                EveStrategy::PnsThenIr(p) => p,
                _ => return split,
            };
            if kept > 0 || survivors == 0 || !rng.random_bool(p_ir) {
                return split;
            }
            let (m, encoding) = intercept(survivors, alice_bit, alice_basis, rng);
            EveOutcome {
                photons_out: survivors,
                encoding,
                downstream: Downstream::ReceiverOnly,
                log: EveLog {
                    tag: EveTag::SplitThenResent,
                    split_photons: 0,
                    measurement: Some(m),
                },
            }
        }
    }
}

/// Full lifecycle of one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PulseRecord {
    pub index: u64,
    pub alice_bit: BitValue,
    pub alice_basis: Basis,
    pub eve: EveLog,
    pub photons_emitted: u32,
    /// Photons that reached and triggered Bob's detectors.
    pub photons_at_bob: u32,
    pub clicks: Clicks,
    pub bob_basis: Basis,
    pub received: ReceivedBit,
}

impl PulseRecord {
    pub fn bases_match(&self) -> bool {
        self.alice_basis == self.bob_basis
    }

    /// Candidate for the sifted key: matching bases and a valid bit.
    pub fn sift_candidate(&self) -> bool {
        self.bases_match() && self.received != ReceivedBit::Invalid
    }

    pub fn is_error(&self) -> bool {
        self.received.bit().is_some_and(|b| b != self.alice_bit)
    }
}

/// Header of the per-pulse CSV dump.
pub const RECORD_CSV_HEADER: &str = "index,a_n,b_n,eve,clicks,bob_basis,g_n";

impl fmt::Display for PulseRecord {
    /// One CSV row matching [`RECORD_CSV_HEADER`]; `clicks` is the detector
    /// bitmask.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{}",
            self.index,
            self.alice_bit.as_u8(),
            self.alice_basis.coding_bit(),
            self.eve.tag.as_str(),
            self.clicks.bits(),
            self.bob_basis.coding_bit(),
            self.received.as_i8()
        )
    }
}

pub fn write_records<W: Write>(out: &mut W, records: &[PulseRecord]) -> std::io::Result<()> {
    writeln!(out, "{RECORD_CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

pub type PulseRng = Xoshiro256PlusPlus;

/// Deterministic RNG for pulse `index` of a session seeded with `seed`.
pub fn pulse_rng(seed: u64, index: u64) -> PulseRng {
    let key = SplitMix64::seed_from_u64(seed).next_u64();
    // seed_from_u64 expands through SplitMix64, so adjacent indices decorrelate
    Xoshiro256PlusPlus::seed_from_u64(key ^ index)
}

/// A configured pulse simulator.
#[derive(Debug, Clone)]
pub struct Simulator {
    params: SystemParams,
    eve: EveStrategy,
    resend: ResendPosition,
    poisson: Poisson<f64>,
    t_f: f64,
}

impl Simulator {
    pub fn new(scheme: &CodingScheme, params: SystemParams, eve: EveStrategy) -> Result<Self> {
        validate_scheme(scheme).into_result()?;
        Self::unchecked_scheme(params, eve)
    }

    /// Skips the coding-scheme check (`--force`).
    pub fn unchecked_scheme(params: SystemParams, eve: EveStrategy) -> Result<Self> {
        params.validate()?;
        eve.validate()?;
        let poisson =
            Poisson::new(params.mu).map_err(|e| Error::InvalidParams(format!("mu: {e}")))?;
        let t_f = fiber_transmittance(params.alpha, params.length_km)?;
        Ok(Simulator {
            params,
            eve,
            resend: ResendPosition::default(),
            poisson,
            t_f,
        })
    }

    pub fn with_resend_position(mut self, resend: ResendPosition) -> Self {
        self.resend = resend;
        self
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn eve(&self) -> EveStrategy {
        self.eve
    }

    fn downstream_t(&self, d: Downstream) -> f64 {
        let receiver = self.params.t_b * self.params.eta_d;
        match d {
            Downstream::FullChannel => self.t_f * receiver,
            Downstream::ReceiverOnly => receiver,
        }
    }

    /// Simulates one pulse carrying `bit` in `basis`.
    pub fn simulate_pulse<R: Rng + ?Sized>(
        &self,
        index: u64,
        bit: BitValue,
        basis: Basis,
        rng: &mut R,
    ) -> PulseRecord {
        let bob_basis = Basis::from_coding_bit(rng.random());
        let photons_emitted = self.poisson.sample(rng) as u32;
        let eve = apply_eve(
            photons_emitted,
            bit,
            basis,
            self.eve,
            &self.params,
            self.resend,
            rng,
        );

        let t = self.downstream_t(eve.downstream);
        let (enc_basis, enc_bit) = eve.encoding;
        let mut clicks = Clicks::default();
        let mut photons_at_bob = 0;
        for _ in 0..eve.photons_out {
            if !rng.random_bool(t) {
                continue;
            }
            photons_at_bob += 1;
            let detector = if enc_basis == bob_basis {
                let right = Detector::for_bit(bob_basis, enc_bit);
                if self.params.p_opt > 0.0 && rng.random_bool(self.params.p_opt) {
                    Detector::for_bit(bob_basis, enc_bit.flipped())
                } else {
                    right
                }
            } else {
                // the other basis' pulse spreads evenly over both modes
                Detector::for_bit(bob_basis, BitValue::from(rng.random::<bool>()))
            };
            clicks.insert(detector);
        }
        // the optical switch gates only the chosen arm, so only its two
        // modes can dark-count
        if self.params.p_d > 0.0 {
            for b in [BitValue::Zero, BitValue::One] {
                if rng.random_bool(self.params.p_d) {
                    clicks.insert(Detector::for_bit(bob_basis, b));
                }
            }
        }

        PulseRecord {
            index,
            alice_bit: bit,
            alice_basis: basis,
            eve: eve.log,
            photons_emitted,
            photons_at_bob,
            clicks,
            bob_basis,
            received: resolve(clicks, bob_basis),
        }
    }

    /// Pulse `index` of the session seeded with `seed`, including Alice's
    /// random bit and basis.
    pub fn pulse(&self, seed: u64, index: u64) -> PulseRecord {
        let mut rng = pulse_rng(seed, index);
        let bit = BitValue::from(rng.random::<bool>());
        let basis = Basis::from_coding_bit(rng.random());
        self.simulate_pulse(index, bit, basis, &mut rng)
    }

    /// All `n_pulses` records, in index order.
    pub fn run(&self, n_pulses: u64, seed: u64) -> Vec<PulseRecord> {
        (0..n_pulses)
            .into_par_iter()
            .map(|i| self.pulse(seed, i))
            .collect()
    }

    /// Same as [`Simulator::run`] without rayon.
    pub fn run_serial(&self, n_pulses: u64, seed: u64) -> Vec<PulseRecord> {
        (0..n_pulses).map(|i| self.pulse(seed, i)).collect()
    }

    /// Only the pulses where some detector fired; everything else resolves
    /// to `Invalid` and never reaches the sifted key.
    pub fn run_clicked(&self, n_pulses: u64, seed: u64) -> Vec<PulseRecord> {
        (0..n_pulses)
            .into_par_iter()
            .map(|i| self.pulse(seed, i))
            .filter(|r| !r.clicks.is_empty())
            .collect()
    }

    /// Session statistics accumulated without keeping the records.
    pub fn run_stats(&self, n_pulses: u64, seed: u64) -> Result<SessionStats> {
        if n_pulses == 0 {
            return Err(Error::InvalidParams(
                "session needs at least one pulse".into(),
            ));
        }
        let tally = (0..n_pulses)
            .into_par_iter()
            .map(|i| Tally::of(&self.pulse(seed, i)))
            .reduce(Tally::default, Tally::merge);
        Ok(tally.into_stats())
    }
}

/// Runs a whole session: `n_pulses` records, deterministic in `seed`.
pub fn run_session(
    scheme: &CodingScheme,
    params: &SystemParams,
    eve: EveStrategy,
    n_pulses: u64,
    seed: u64,
) -> Result<Vec<PulseRecord>> {
    if n_pulses == 0 {
        return Err(Error::InvalidParams(
            "session needs at least one pulse".into(),
        ));
    }
    Ok(Simulator::new(scheme, *params, eve)?.run(n_pulses, seed))
}

/// Sample estimates of the count rate and QBER.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionStats {
    pub pulses: u64,
    /// Pulses with at least one click.
    pub clicks: u64,
    /// Matched-basis pulses with a valid bit.
    pub sift_candidates: u64,
    pub errors: u64,
    pub empirical_r: f64,
    /// `None` when there is no sift candidate.
    pub empirical_q: Option<f64>,
    /// Sift candidates whose bit Eve holds with certainty.
    pub eve_certain: u64,
    /// Sift candidates where Eve's guess is right, lucky guesses included.
    pub eve_correct: u64,
    pub alice_time_basis: u64,
    pub bob_time_basis: u64,
}

impl SessionStats {
    /// Eve's certain knowledge per sifted bit.
    pub fn eve_certain_rate(&self) -> Option<f64> {
        (self.sift_candidates > 0).then(|| self.eve_certain as f64 / self.sift_candidates as f64)
    }

    pub fn eve_correct_rate(&self) -> Option<f64> {
        (self.sift_candidates > 0).then(|| self.eve_correct as f64 / self.sift_candidates as f64)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    pulses: u64,
    clicks: u64,
    sift: u64,
    errors: u64,
    eve_certain: u64,
    eve_correct: u64,
    alice_time: u64,
    bob_time: u64,
}

impl Tally {
    fn of(r: &PulseRecord) -> Self {
        let sift = r.sift_candidate();
        Tally {
            pulses: 1,
            clicks: !r.clicks.is_empty() as u64,
            sift: sift as u64,
            errors: (sift && r.is_error()) as u64,
            eve_certain: (sift && r.eve.knows_bit(r.alice_basis)) as u64,
            eve_correct: (sift && r.eve.guessed_bit(r.alice_bit, r.alice_basis)) as u64,
            alice_time: (r.alice_basis == Basis::Time) as u64,
            bob_time: (r.bob_basis == Basis::Time) as u64,
        }
    }

    fn merge(a: Self, b: Self) -> Self {
        Tally {
            pulses: a.pulses + b.pulses,
            clicks: a.clicks + b.clicks,
            sift: a.sift + b.sift,
            errors: a.errors + b.errors,
            eve_certain: a.eve_certain + b.eve_certain,
            eve_correct: a.eve_correct + b.eve_correct,
            alice_time: a.alice_time + b.alice_time,
            bob_time: a.bob_time + b.bob_time,
        }
    }

    fn into_stats(self) -> SessionStats {
        SessionStats {
            pulses: self.pulses,
            clicks: self.clicks,
            sift_candidates: self.sift,
            errors: self.errors,
            empirical_r: self.clicks as f64 / self.pulses as f64,
            empirical_q: (self.sift > 0).then(|| self.errors as f64 / self.sift as f64),
            eve_certain: self.eve_certain,
            eve_correct: self.eve_correct,
            alice_time_basis: self.alice_time,
            bob_time_basis: self.bob_time,
        }
    }
}

/// Aggregates a record sequence into [`SessionStats`].
pub fn estimate_stats(records: &[PulseRecord]) -> Result<SessionStats> {
    if records.is_empty() {
        return Err(Error::InvalidParams("no records to aggregate".into()));
    }
    Ok(records
        .iter()
        .map(Tally::of)
        .fold(Tally::default(), Tally::merge)
        .into_stats())
}
