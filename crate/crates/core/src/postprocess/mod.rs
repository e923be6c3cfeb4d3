//! Classical post-processing: sifting, sacrificial QBER estimation and the
//! abort test, error reconciliation, and privacy amplification.

mod amplify;
mod reconcile;

pub use amplify::{final_key_length, privacy_amplify, toeplitz_hash, FinalKey};
pub use reconcile::{
    block_schedule, initial_block_size, reconcile, ParityQuery, Reconciliation, CASCADE_PASSES,
    MIN_BLOCKS_PER_PASS,
};

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::sim::PulseRecord;

/// Smallest sifted key that may be sampled for QBER estimation.
pub const MIN_SAMPLE_BITS: usize = 200;
pub const DEFAULT_SAMPLE_FRACTION: f64 = 0.1;
pub const DEFAULT_QBER_THRESHOLD: f64 = 0.11;

/// Alice's `s_m` and Bob's `r_m`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SiftedKeys {
    pub alice: Vec<bool>,
    pub bob: Vec<bool>,
    pub source_indices: Vec<u64>,
}

impl SiftedKeys {
    pub fn len(&self) -> usize {
        self.alice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice.is_empty()
    }

    pub fn mismatches(&self) -> usize {
        self.alice
            .iter()
            .zip(&self.bob)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// Keeps pulses with matching bases and a valid received bit.
pub fn sift(records: &[PulseRecord]) -> SiftedKeys {
    let mut keys = SiftedKeys::default();
    for r in records.iter().filter(|r| r.sift_candidate()) {
        // sift_candidate guarantees a valid bit
        let Some(bit) = r.received.bit() else {
            continue;
        };
        keys.alice.push(r.alice_bit.as_bool());
        keys.bob.push(bit.as_bool());
        keys.source_indices.push(r.index);
    }
    keys
}

#[derive(Debug, Clone, PartialEq)]
pub struct QberEstimate {
    pub q_hat: f64,
    pub sample_size: usize,
    pub sample_errors: usize,
    /// Keys with the disclosed positions removed.
    pub remaining: SiftedKeys,
}

impl QberEstimate {
    /// Rule-of-succession QBER, `(errors + 1)/(sample + 2)`. Never zero, so
    /// it can size reconciliation blocks when the sample shows no error.
    pub fn block_qber(&self) -> f64 {
        (self.sample_errors as f64 + 1.0) / (self.sample_size as f64 + 2.0)
    }
}

/// Number of positions disclosed for a key of `len` bits.
pub fn sample_size(len: usize, sample_fraction: f64) -> usize {
    let by_fraction = (sample_fraction * len as f64).ceil() as usize;
    by_fraction.max(MIN_SAMPLE_BITS).min(len)
}

/// Publicly compares a random subset of positions and discards them.
pub fn estimate_qber<R: Rng + ?Sized>(
    keys: &SiftedKeys,
    sample_fraction: f64,
    rng: &mut R,
) -> Result<QberEstimate> {
    if !(sample_fraction > 0.0 && sample_fraction < 1.0) {
        return Err(Error::InvalidParams(format!(
            "sample fraction {sample_fraction} outside (0,1)"
        )));
    }
    let len = keys.len();
    if len < MIN_SAMPLE_BITS {
        return Err(Error::InsufficientMaterial {
            have: len,
            need: MIN_SAMPLE_BITS,
        });
    }
    let k = sample_size(len, sample_fraction);
    let mut disclosed = vec![false; len];
    for i in index::sample(rng, len, k) {
        disclosed[i] = true;
    }
    let mut errors = 0;
    let mut remaining = SiftedKeys::default();
    for (i, &shown) in disclosed.iter().enumerate() {
        if shown {
            errors += (keys.alice[i] != keys.bob[i]) as usize;
        } else {
            remaining.alice.push(keys.alice[i]);
            remaining.bob.push(keys.bob[i]);
            remaining.source_indices.push(keys.source_indices[i]);
        }
    }
    Ok(QberEstimate {
        q_hat: errors as f64 / k as f64,
        sample_size: k,
        sample_errors: errors,
        remaining,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Abort,
}

/// Abort iff the estimate strictly exceeds the threshold.
pub fn abort_decision(q_hat: f64, qber_threshold: f64) -> Decision {
    if q_hat > qber_threshold {
        Decision::Abort
    } else {
        Decision::Continue
    }
}

/// Lowercase hex, most significant bit first, 64 characters per line. The
/// last byte is zero-padded when the length is not a multiple of 8.
pub fn key_to_hex(bits: &[bool]) -> String {
    let bytes: Vec<u8> = bits
        .chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)))
        })
        .collect();
    let hex = hex::encode(bytes);
    let mut out = String::with_capacity(hex.len() + hex.len() / 64 + 1);
    for line in hex.as_bytes().chunks(64) {
        out.push_str(std::str::from_utf8(line).expect("hex is ascii"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{default_scheme, SystemParams};
    use crate::sim::{pulse_rng, EveStrategy, Simulator};

    #[test]
    fn mismatched_bases_sift_to_nothing() {
        let sim = Simulator::new(
            &default_scheme(),
            SystemParams::ideal().with_mu(5.0),
            EveStrategy::None,
        )
        .unwrap();
        let records: Vec<_> = sim
            .run(2000, 1)
            .into_iter()
            .filter(|r| !r.bases_match())
            .collect();
        assert!(!records.is_empty());
        assert!(sift(&records).is_empty());
    }

    #[test]
    fn ideal_channel_sifts_identical_keys() {
        let sim =
            Simulator::new(&default_scheme(), SystemParams::ideal(), EveStrategy::None).unwrap();
        let keys = sift(&sim.run(100_000, 2));
        assert!(keys.len() > 3000);
        assert_eq!(keys.alice, keys.bob);
    }

    fn keys(alice: Vec<bool>, bob: Vec<bool>) -> SiftedKeys {
        let source_indices = (0..alice.len() as u64).collect();
        SiftedKeys {
            alice,
            bob,
            source_indices,
        }
    }

    #[test]
    fn qber_of_identical_and_complementary_keys() {
        let mut rng = pulse_rng(1, 1);
        let a: Vec<bool> = (0..1000).map(|i| i % 3 == 0).collect();
        let e = estimate_qber(&keys(a.clone(), a.clone()), 0.1, &mut rng).unwrap();
        assert_eq!(e.q_hat, 0.0);
        assert_eq!(e.sample_size, 200);
        assert_eq!(e.remaining.len(), 800);
        let flipped: Vec<bool> = a.iter().map(|b| !b).collect();
        let e = estimate_qber(&keys(a, flipped), 0.5, &mut rng).unwrap();
        assert_eq!(e.q_hat, 1.0);
        assert_eq!(e.sample_size, 500);
    }

    #[test]
    fn qber_needs_material() {
        let mut rng = pulse_rng(1, 1);
        let a = vec![true; 199];
        assert!(matches!(
            estimate_qber(&keys(a.clone(), a), 0.1, &mut rng),
            Err(Error::InsufficientMaterial {
                have: 199,
                need: 200
            })
        ));
    }

    #[test]
    fn disclosed_positions_are_removed() {
        let mut rng = pulse_rng(4, 4);
        let a: Vec<bool> = (0..1000).map(|i| i % 2 == 0).collect();
        let e = estimate_qber(&keys(a.clone(), a), 0.3, &mut rng).unwrap();
        assert_eq!(e.remaining.len() + e.sample_size, 1000);
        let idx = &e.remaining.source_indices;
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        for (pos, &i) in idx.iter().enumerate() {
            assert_eq!(e.remaining.alice[pos], i % 2 == 0);
        }
    }

    #[test]
    fn abort_is_strict() {
        assert_eq!(abort_decision(0.25, 0.11), Decision::Abort);
        assert_eq!(abort_decision(0.0, 0.11), Decision::Continue);
        assert_eq!(abort_decision(0.11, 0.11), Decision::Continue);
    }

    #[test]
    fn hex_layout() {
        let bits: Vec<bool> = (0..8).map(|i| i == 0).collect();
        assert_eq!(key_to_hex(&bits), "80\n");
        let bits = vec![true; 9];
        assert_eq!(key_to_hex(&bits), "ff80\n");
        let long = key_to_hex(&vec![false; 8 * 40]);
        let lines: Vec<&str> = long.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].len(), 64);
        assert_eq!(lines[1].len(), 16);
        assert_eq!(key_to_hex(&[]), "");
    }
}
