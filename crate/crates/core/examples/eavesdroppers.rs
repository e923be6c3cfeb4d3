//! Signatures of the three attacks on an ideal channel and on 25 km of
//! fiber: intercept-resend shows up in the QBER, photon-number splitting
//! does not.
//!
//!     cargo run --release --example eavesdroppers

use ftqkd::scheme::{default_scheme, SystemParams};
use ftqkd::sim::{EveStrategy, Simulator};

fn main() -> ftqkd::Result<()> {
    let n = 1_000_000;
    let cases = [
        ("ideal", SystemParams::ideal()),
        ("25 km", SystemParams::fig2().with_length(25.0)),
    ];
    let attacks = [
        EveStrategy::None,
        EveStrategy::InterceptResend(0.5),
        EveStrategy::InterceptResend(1.0),
        EveStrategy::Pns,
        EveStrategy::PnsThenIr(1.0),
    ];
    for (label, params) in cases {
        println!("{label}:");
        println!(
            "  {:<22} {:>8} {:>10} {:>10}",
            "attack", "QBER", "certain", "correct"
        );
        for eve in attacks {
            let s = Simulator::new(&default_scheme(), params, eve)?.run_stats(n, 7)?;
            println!(
                "  {:<22} {:>8.4} {:>10.4} {:>10.4}",
                format!("{eve:?}"),
                s.empirical_q.unwrap_or(f64::NAN),
                s.eve_certain_rate().unwrap_or(f64::NAN),
                s.eve_correct_rate().unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
