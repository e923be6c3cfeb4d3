//! Privacy amplification by a seeded binary Toeplitz hash.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::Result;
use crate::rates::binary_entropy;

#[derive(Debug, Clone, PartialEq)]
pub struct FinalKey {
    pub bits: Vec<bool>,
    pub length: usize,
    pub leak_bits: usize,
    pub q_hat: f64,
    pub i_ae: f64,
    /// Set when the compression budget leaves nothing.
    pub zero_length: bool,
}

/// `ℓ = max(0, ⌊n(1 − H2(q) − I_AE)⌋ − max(0, leak − ⌈n H2(q)⌉))`.
///
/// The entropy term already budgets an ideal error-correction leak of
/// `n H2(q)`; only leakage beyond it is subtracted again.
pub fn final_key_length(n: usize, q_hat: f64, i_ae: f64, leak_bits: usize) -> Result<usize> {
    let h = binary_entropy(q_hat)?;
    let budget = (n as f64 * (1.0 - h - i_ae)).floor();
    let excess = leak_bits as f64 - (n as f64 * h).ceil();
    let len = budget - excess.max(0.0);
    Ok(if len > 0.0 { len as usize } else { 0 })
}

struct PackedBits {
    words: Vec<u64>,
}

impl PackedBits {
    fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        for (i, b) in bits.into_iter().enumerate() {
            if i % 64 == 0 {
                words.push(0);
            }
            if b {
                *words.last_mut().expect("pushed above") |= 1 << (i % 64);
            }
        }
        PackedBits { words }
    }

    fn random(n_bits: usize, rng: &mut impl RngCore) -> Self {
        let mut words: Vec<u64> = (0..n_bits.div_ceil(64)).map(|_| rng.next_u64()).collect();
        if !n_bits.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (n_bits % 64)) - 1;
            }
        }
        PackedBits { words }
    }

    // 64 bits starting at bit `offset`; bits past the end read as zero.
    fn window(&self, offset: usize) -> u64 {
        let (w, s) = (offset / 64, offset % 64);
        let lo = self.words.get(w).copied().unwrap_or(0);
        if s == 0 {
            return lo;
        }
        let hi = self.words.get(w + 1).copied().unwrap_or(0);
        (lo >> s) | (hi << (64 - s))
    }
}

/// Multiplies `key` (n bits) by the `out_len × n` Toeplitz matrix
/// `T[i][j] = diag[i − j + n − 1]`, where `diag` holds the `n + out_len − 1`
/// bits of the first column and row.
pub fn toeplitz_hash(key: &[bool], diag: &[bool], out_len: usize) -> Vec<bool> {
    let n = key.len();
    if out_len == 0 || n == 0 {
        return vec![false; out_len];
    }
    assert_eq!(diag.len(), n + out_len - 1, "Toeplitz diagonal length");
    let diag = PackedBits::from_bits(diag.iter().copied());
    hash_packed(key, &diag, out_len)
}

fn hash_packed(key: &[bool], diag: &PackedBits, out_len: usize) -> Vec<bool> {
    // with k = n − 1 − j, row i is diag[i + k] against key[n − 1 − k]
    let rev = PackedBits::from_bits(key.iter().rev().copied());
    (0..out_len)
        .map(|i| {
            let ones: u32 = rev
                .words
                .iter()
                .enumerate()
                .map(|(w, &x)| (diag.window(i + 64 * w) & x).count_ones())
                .sum();
            ones % 2 == 1
        })
        .collect()
}

/// Compresses a reconciled key to [`final_key_length`] bits. Both parties
/// call this with the same `hash_seed`.
pub fn privacy_amplify(
    key: &[bool],
    q_hat: f64,
    i_ae: f64,
    leak_bits: usize,
    hash_seed: u64,
) -> Result<FinalKey> {
    let n = key.len();
    let length = final_key_length(n, q_hat, i_ae, leak_bits)?;
    let bits = if length == 0 {
        Vec::new()
    } else {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(hash_seed);
        let diag = PackedBits::random(n + length - 1, &mut rng);
        hash_packed(key, &diag, length)
    };
    Ok(FinalKey {
        bits,
        length,
        leak_bits,
        q_hat,
        i_ae,
        zero_length: length == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::pulse_rng;
    use proptest::prelude::*;
    use rand::Rng;

    // direct matrix-vector product over GF(2)
    fn naive(key: &[bool], diag: &[bool], out_len: usize) -> Vec<bool> {
        let n = key.len();
        (0..out_len)
            .map(|i| (0..n).fold(false, |acc, j| acc ^ (diag[i + n - 1 - j] & key[j])))
            .collect()
    }

    #[test]
    fn length_formula_examples() {
        assert_eq!(final_key_length(1000, 0.0, 0.0, 0).unwrap(), 1000);
        assert_eq!(final_key_length(1000, 0.5, 0.0, 0).unwrap(), 0);
        // leak within the Shannon budget costs nothing extra
        let h = binary_entropy(0.05).unwrap();
        let base = (1000.0 * (1.0 - h - 0.1)).floor() as usize;
        assert_eq!(final_key_length(1000, 0.05, 0.1, 200).unwrap(), base);
        let shannon = (1000.0 * h).ceil() as usize;
        assert_eq!(
            final_key_length(1000, 0.05, 0.1, shannon + 37).unwrap(),
            base - 37
        );
        assert_eq!(final_key_length(1000, 0.05, 0.95, 0).unwrap(), 0);
    }

    #[test]
    fn perfect_key_is_kept_whole() {
        let key: Vec<bool> = (0..300).map(|i| i % 7 == 0).collect();
        let k = privacy_amplify(&key, 0.0, 0.0, 0, 42).unwrap();
        assert_eq!(k.length, 300);
        assert_eq!(k.bits.len(), 300);
        assert!(!k.zero_length);
    }

    #[test]
    fn half_error_rate_leaves_nothing() {
        let key = vec![true; 300];
        let k = privacy_amplify(&key, 0.5, 0.0, 0, 42).unwrap();
        assert!(k.zero_length);
        assert!(k.bits.is_empty());
    }

    #[test]
    fn same_seed_same_output() {
        let key: Vec<bool> = (0..777).map(|i| (i * 31) % 5 < 2).collect();
        let a = privacy_amplify(&key, 0.02, 0.1, 90, 9).unwrap();
        let b = privacy_amplify(&key, 0.02, 0.1, 90, 9).unwrap();
        assert_eq!(a, b);
        let c = privacy_amplify(&key, 0.02, 0.1, 90, 10).unwrap();
        assert_ne!(a.bits, c.bits);
    }

    #[test]
    fn packed_hash_matches_naive_product() {
        let mut rng = pulse_rng(12, 0);
        for (n, l) in [(1, 1), (63, 5), (64, 64), (65, 3), (200, 130), (513, 260)] {
            let key: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            let diag: Vec<bool> = (0..n + l - 1).map(|_| rng.random()).collect();
            assert_eq!(
                toeplitz_hash(&key, &diag, l),
                naive(&key, &diag, l),
                "n = {n}, l = {l}"
            );
        }
    }

    proptest! {
        #[test]
        fn output_length_matches_formula(
            n in 0usize..3000,
            q in 0.0..0.5f64,
            i_ae in 0.0..1.0f64,
            leak in 0usize..2000,
        ) {
            let key = vec![true; n];
            let k = privacy_amplify(&key, q, i_ae, leak, 1).unwrap();
            let expected = final_key_length(n, q, i_ae, leak).unwrap();
            prop_assert_eq!(k.length, expected);
            prop_assert_eq!(k.bits.len(), expected);
            prop_assert!(expected <= n);
        }

        #[test]
        fn hash_is_linear(seed in any::<u64>(), n in 1usize..300, l in 1usize..100) {
            let mut rng = pulse_rng(seed, 0);
            let x: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            let y: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            let diag: Vec<bool> = (0..n + l - 1).map(|_| rng.random()).collect();
            let xy: Vec<bool> = x.iter().zip(&y).map(|(a, b)| a ^ b).collect();
            let hx = toeplitz_hash(&x, &diag, l);
            let hy = toeplitz_hash(&y, &diag, l);
            let hxy = toeplitz_hash(&xy, &diag, l);
            let sum: Vec<bool> = hx.iter().zip(&hy).map(|(a, b)| a ^ b).collect();
            prop_assert_eq!(hxy, sum);
        }
    }
}
