//! Cascade on a noisy copy of a random key, then Toeplitz privacy
//! amplification of both sides with a shared seed.
//!
//!     cargo run --release --example reconciliation

use ftqkd::postprocess::{final_key_length, privacy_amplify, reconcile};
use ftqkd::rates::binary_entropy;
use ftqkd::sim::pulse_rng;
use rand::Rng;

fn main() -> ftqkd::Result<()> {
    let n = 10_000;
    let mut rng = pulse_rng(2024, 0);
    for q in [0.01, 0.03, 0.05, 0.08] {
        let alice: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let bob: Vec<bool> = alice.iter().map(|&b| b ^ rng.random_bool(q)).collect();
        let errors = alice.iter().zip(&bob).filter(|(a, b)| a != b).count();

        let rec = reconcile(&alice, &bob, q, &mut rng)?;
        let shannon = n as f64 * binary_entropy(q)?;
        let i_ae = 0.1;
        let ka = privacy_amplify(&alice, q, i_ae, rec.leak_bits, 99)?;
        let kb = privacy_amplify(&rec.corrected, q, i_ae, rec.leak_bits, 99)?;
        assert_eq!(ka.bits, kb.bits);
        println!(
            "q = {q:.2}: {errors:>4} errors fixed, leak {:>5} bits ({:.2}x Shannon), final {} bits (budget {})",
            rec.leak_bits,
            rec.leak_bits as f64 / shannon,
            ka.length,
            final_key_length(n, q, i_ae, 0)?
        );
    }
    Ok(())
}
