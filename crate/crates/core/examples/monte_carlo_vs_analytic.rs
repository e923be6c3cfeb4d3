//! Simulates a million pulses at several lengths and compares the measured
//! count rate and QBER with the closed forms.
//!
//!     cargo run --release --example monte_carlo_vs_analytic

use ftqkd::rates::{count_rates, qber_ft};
use ftqkd::scheme::{default_scheme, SystemParams};
use ftqkd::sim::{EveStrategy, Simulator};

fn main() -> ftqkd::Result<()> {
    let n = 1_000_000;
    println!(
        "{:>5} {:>11} {:>11} {:>9} {:>9} {:>9}",
        "l/km", "R", "R_mc", "Q", "Q_mc", "sifted"
    );
    for (i, l) in [0.0, 25.0, 50.0, 75.0, 100.0].into_iter().enumerate() {
        let params = SystemParams::fig2().with_length(l);
        let sim = Simulator::new(&default_scheme(), params, EveStrategy::None)?;
        let stats = sim.run_stats(n, 100 + i as u64)?;
        println!(
            "{l:>5} {:>11.4e} {:>11.4e} {:>9.5} {:>9.5} {:>9}",
            count_rates(&params)?.r,
            stats.empirical_r,
            qber_ft(&params)?,
            stats.empirical_q.unwrap_or(f64::NAN),
            stats.sift_candidates
        );
    }
    Ok(())
}
