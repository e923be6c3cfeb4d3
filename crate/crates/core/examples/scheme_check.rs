//! Builds the default coding scheme, checks its constraints, encodes the four
//! pulses Alice can send, and shows a scheme that fails.
//!
//!     cargo run --example scheme_check

use ftqkd::config::scheme_to_kv;
use ftqkd::scheme::{default_scheme, encode_pulse, validate_scheme, Basis, BitValue};

fn main() -> ftqkd::Result<()> {
    let scheme = default_scheme();
    println!("{}\n", validate_scheme(&scheme));
    print!("{}", scheme_to_kv(&scheme));

    println!();
    for basis in [Basis::Frequency, Basis::Time] {
        for bit in [BitValue::Zero, BitValue::One] {
            let p = encode_pulse(bit, basis, &scheme, 0.1)?;
            println!(
                "{basis:?} {}: center {:.6e} rad/s, width {:.3} ps, offset {:.3} ps",
                bit.as_u8(),
                p.center_frequency,
                p.temporal_width * 1e12,
                p.time_offset * 1e12
            );
        }
    }

    let mut narrow = scheme;
    narrow.tau = 0.2 * scheme.sigma_t3;
    let report = validate_scheme(&narrow);
    println!("\ndelay shrunk to {:.0} ps:", narrow.tau * 1e12);
    for f in report.failures() {
        println!("  FAIL {} ({})", f.name, f.detail);
    }
    assert!(encode_pulse(BitValue::Zero, Basis::Time, &narrow, 0.1).is_err());
    Ok(())
}
