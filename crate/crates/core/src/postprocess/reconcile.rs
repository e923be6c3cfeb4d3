//! Cascade error reconciliation.
//!
//! Each pass shuffles the key with a public permutation, cuts it into
//! blocks, and compares block parities; a block with odd relative parity is
//! bisected (one disclosed parity per step) down to the faulty bit. Block
//! size starts at `0.73/q` and doubles every pass, but later passes keep at
//! least [`MIN_BLOCKS_PER_PASS`] blocks; on short keys a single whole-key
//! block would hide every error pair. A correction flips the
//! relative parity of the block holding that bit in every earlier pass, and
//! those blocks are bisected in turn.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

pub const CASCADE_PASSES: usize = 4;

/// Lower bound on the block count of passes after the first.
pub const MIN_BLOCKS_PER_PASS: usize = 8;

/// One parity Alice disclosed: positions `start..end` of pass `pass`'s
/// permuted order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParityQuery {
    pub pass: usize,
    pub start: usize,
    pub end: usize,
    pub parity: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconciliation {
    pub corrected: Vec<bool>,
    /// Always `transcript.len()`.
    pub leak_bits: usize,
    pub transcript: Vec<ParityQuery>,
    pub corrections: usize,
}

/// Block size of every pass: `k, 2k, 4k, …` with `k` from
/// [`initial_block_size`], each later one capped at `⌈n / 8⌉` but never
/// below `k`.
pub fn block_schedule(q: f64, n: usize) -> [usize; CASCADE_PASSES] {
    let first = initial_block_size(q, n);
    let cap = n.div_ceil(MIN_BLOCKS_PER_PASS).max(first);
    let mut out = [first; CASCADE_PASSES];
    for i in 1..CASCADE_PASSES {
        out[i] = (out[i - 1] * 2).min(cap);
    }
    out
}

/// First-pass block size `≈ 0.73/q`, within `[1, n]`.
pub fn initial_block_size(q: f64, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    if !(q > 0.0) {
        return n;
    }
    ((0.73 / q).round() as usize).clamp(1, n)
}

struct Pass {
    order: Vec<usize>,
    // position of each key index inside `order`
    slot: Vec<usize>,
    block: usize,
    alice_parity: Vec<bool>,
}

impl Pass {
    fn block_of(&self, key_index: usize) -> usize {
        self.slot[key_index] / self.block
    }

    fn range(&self, b: usize) -> (usize, usize) {
        let start = b * self.block;
        (start, (start + self.block).min(self.order.len()))
    }
}

struct Session<'a> {
    alice: &'a [bool],
    bob: Vec<bool>,
    passes: Vec<Pass>,
    transcript: Vec<ParityQuery>,
    corrections: usize,
}

impl Session<'_> {
    fn parity(bits: &[bool], order: &[usize]) -> bool {
        order.iter().fold(false, |p, &i| p ^ bits[i])
    }

    fn disclose(&mut self, pass: usize, start: usize, end: usize) -> bool {
        let parity = Self::parity(self.alice, &self.passes[pass].order[start..end]);
        self.transcript.push(ParityQuery {
            pass,
            start,
            end,
            parity,
        });
        parity
    }

    /// Bisects an odd block down to one bit and flips it; returns its key index.
    fn bisect(&mut self, pass: usize, mut start: usize, mut end: usize) -> usize {
        while end - start > 1 {
            let mid = start + (end - start) / 2;
            let alice = self.disclose(pass, start, mid);
            let bob = Self::parity(&self.bob, &self.passes[pass].order[start..mid]);
            if alice != bob {
                end = mid;
            } else {
                start = mid;
            }
        }
        let idx = self.passes[pass].order[start];
        self.bob[idx] = !self.bob[idx];
        self.corrections += 1;
        idx
    }

    fn block_odd(&self, pass: usize, b: usize) -> bool {
        let p = &self.passes[pass];
        let (s, e) = p.range(b);
        Self::parity(&self.bob, &p.order[s..e]) != p.alice_parity[b]
    }

    /// Fixes `(pass, block)` and cascades into every pass up to `upto`.
    fn correct(&mut self, pass: usize, block: usize, upto: usize) {
        let mut work = vec![(pass, block)];
        while let Some((p, b)) = work.pop() {
            if !self.block_odd(p, b) {
                continue;
            }
            let (s, e) = self.passes[p].range(b);
            let idx = self.bisect(p, s, e);
            for q in 0..=upto {
                if q == p {
                    continue;
                }
                let qb = self.passes[q].block_of(idx);
                if self.block_odd(q, qb) {
                    work.push((q, qb));
                }
            }
        }
    }
}

/// Reconciles Bob's key to Alice's. `q` sizes the first-pass blocks and the
/// permutations come from the shared public `rng`.
pub fn reconcile<R: Rng + ?Sized>(
    alice: &[bool],
    bob: &[bool],
    q: f64,
    rng: &mut R,
) -> Result<Reconciliation> {
    if alice.len() != bob.len() {
        return Err(Error::InvalidParams(format!(
            "key lengths differ: {} vs {}",
            alice.len(),
            bob.len()
        )));
    }
    let n = alice.len();
    let mut session = Session {
        alice,
        bob: bob.to_vec(),
        passes: Vec::with_capacity(CASCADE_PASSES),
        transcript: Vec::new(),
        corrections: 0,
    };
    if n > 0 {
        for (pass, block) in block_schedule(q, n).into_iter().enumerate() {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let mut slot = vec![0; n];
            for (pos, &i) in order.iter().enumerate() {
                slot[i] = pos;
            }
            let blocks = n.div_ceil(block);
            session.passes.push(Pass {
                order,
                slot,
                block,
                alice_parity: Vec::with_capacity(blocks),
            });
            for b in 0..blocks {
                let (s, e) = session.passes[pass].range(b);
                let parity = session.disclose(pass, s, e);
                session.passes[pass].alice_parity.push(parity);
            }
            for b in 0..blocks {
                session.correct(pass, b, pass);
            }
        }
    }

    let residual = alice
        .iter()
        .zip(&session.bob)
        .filter(|(a, b)| a != b)
        .count();
    if residual > 0 {
        return Err(Error::ReconciliationFailed { residual });
    }
    Ok(Reconciliation {
        corrected: session.bob,
        leak_bits: session.transcript.len(),
        transcript: session.transcript,
        corrections: session.corrections,
    })
}
