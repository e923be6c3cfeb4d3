//! A full session: pulses, sifting, sampled QBER with abort test,
//! reconciliation and privacy amplification.

use std::fmt;

use crate::error::Result;
use crate::postprocess::{
    abort_decision, estimate_qber, privacy_amplify, reconcile, sift, Decision, FinalKey,
    DEFAULT_QBER_THRESHOLD, DEFAULT_SAMPLE_FRACTION,
};
use crate::rates::{eve_information, fiber_transmittance};
use crate::scheme::{CodingScheme, SystemParams};
use crate::sim::{pulse_rng, EveStrategy, PulseRng, ResendPosition, Simulator};
use rand::RngCore;

/// Run-control parameters of a session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub qber_threshold: f64,
    pub sample_fraction: f64,
    pub eve: EveStrategy,
    pub resend: ResendPosition,
    pub seed: u64,
    pub n_pulses: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            qber_threshold: DEFAULT_QBER_THRESHOLD,
            sample_fraction: DEFAULT_SAMPLE_FRACTION,
            eve: EveStrategy::None,
            resend: ResendPosition::ChannelHead,
            seed: 1,
            n_pulses: 1_000_000,
        }
    }
}

/// Column names of [`SessionSummary`]'s CSV line.
pub const SUMMARY_CSV_HEADER: &str =
    "pulses,sifted,sample_size,q_hat,aborted,leak_bits,final_length";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionSummary {
    pub pulses: u64,
    pub sifted: usize,
    pub sample_size: usize,
    pub q_hat: f64,
    pub aborted: bool,
    pub leak_bits: usize,
    pub final_length: usize,
}

impl fmt::Display for SessionSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{}",
            self.pulses,
            self.sifted,
            self.sample_size,
            self.q_hat,
            self.aborted,
            self.leak_bits,
            self.final_length
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    pub summary: SessionSummary,
    /// `None` when the session aborted.
    pub keys: Option<(FinalKey, FinalKey)>,
}

impl ProtocolOutcome {
    pub fn keys_match(&self) -> bool {
        self.keys.as_ref().is_some_and(|(a, b)| a.bits == b.bits)
    }
}

/// Public randomness both parties share: sample positions, shuffles, hash
/// seed. Independent of every pulse stream.
pub fn public_rng(seed: u64) -> PulseRng {
    pulse_rng(seed, u64::MAX)
}

/// Runs one session. `force` skips the coding-scheme check.
pub fn run_protocol(
    scheme: &CodingScheme,
    params: &SystemParams,
    cfg: &ProtocolConfig,
    force: bool,
) -> Result<ProtocolOutcome> {
    let sim = if force {
        Simulator::unchecked_scheme(*params, cfg.eve)?
    } else {
        Simulator::new(scheme, *params, cfg.eve)?
    }
    .with_resend_position(cfg.resend);

    let records = sim.run_clicked(cfg.n_pulses, cfg.seed);
    let keys = sift(&records);
    let mut public = public_rng(cfg.seed);
    let estimate = estimate_qber(&keys, cfg.sample_fraction, &mut public)?;

    let mut summary = SessionSummary {
        pulses: cfg.n_pulses,
        sifted: keys.len(),
        sample_size: estimate.sample_size,
        q_hat: estimate.q_hat,
        aborted: false,
        leak_bits: 0,
        final_length: 0,
    };
    if abort_decision(estimate.q_hat, cfg.qber_threshold) == Decision::Abort {
        summary.aborted = true;
        return Ok(ProtocolOutcome {
            summary,
            keys: None,
        });
    }

    let remaining = &estimate.remaining;
    let rec = reconcile(
        &remaining.alice,
        &remaining.bob,
        estimate.block_qber(),
        &mut public,
    )?;
    let t_f = fiber_transmittance(params.alpha, params.length_km)?;
    let i_ae = eve_information(params.mu, t_f, params.visibility).bits;
    let hash_seed = public.next_u64();
    let alice = privacy_amplify(
        &remaining.alice,
        estimate.q_hat,
        i_ae,
        rec.leak_bits,
        hash_seed,
    )?;
    let bob = privacy_amplify(
        &rec.corrected,
        estimate.q_hat,
        i_ae,
        rec.leak_bits,
        hash_seed,
    )?;

    summary.leak_bits = rec.leak_bits;
    summary.final_length = alice.length;
    Ok(ProtocolOutcome {
        summary,
        keys: Some((alice, bob)),
    })
}
