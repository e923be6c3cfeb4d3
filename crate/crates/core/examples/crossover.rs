//! How much farther the frequency/time protocol reaches than BB84 as the
//! interferometric visibility degrades, and where BB84 stops working.
//!
//!     cargo run --example crossover

use ftqkd::rates::{
    breakdown_visibility, crossover_advantage, max_distance, ProtocolKind, DEFAULT_DISTANCE_TOL_KM,
    DEFAULT_SCAN_LIMIT_KM,
};
use ftqkd::scheme::SystemParams;

fn main() -> ftqkd::Result<()> {
    let template = SystemParams::fig2();
    println!(
        "{:>5} {:>10} {:>10} {:>10}",
        "V", "FT km", "BB84 km", "gain km"
    );
    for v in [1.0, 0.9, 0.8, 0.7, 0.6] {
        let p = template.with_visibility(v);
        let ft = max_distance(
            ProtocolKind::Ft,
            &p,
            DEFAULT_SCAN_LIMIT_KM,
            DEFAULT_DISTANCE_TOL_KM,
        )?;
        let bb = max_distance(
            ProtocolKind::Bb84,
            &p,
            DEFAULT_SCAN_LIMIT_KM,
            DEFAULT_DISTANCE_TOL_KM,
        )?;
        let bb_text = if bb.no_key {
            "no key".to_string()
        } else {
            format!("{:.1}", bb.km)
        };
        println!(
            "{v:>5} {:>10.1} {bb_text:>10} {:>10.1}",
            ft.km,
            crossover_advantage(v, &template)?
        );
    }
    match breakdown_visibility(ProtocolKind::Bb84, &template, 1e-4)? {
        Some(v) => println!("\nBB84 needs V >= {v:.4} for any key"),
        None => println!("\nBB84 yields no key at all"),
    }
    Ok(())
}
