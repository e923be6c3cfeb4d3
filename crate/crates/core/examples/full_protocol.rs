//! Runs complete sessions from a config text: an honest channel that ends
//! in matching keys and a fully intercepted one that aborts.
//!
//!     cargo run --release --example full_protocol

use ftqkd::commands::cmd_protocol;
use ftqkd::config::RunConfig;
use ftqkd::postprocess::key_to_hex;
use ftqkd::protocol::SUMMARY_CSV_HEADER;

const HONEST: &str = "
length   = 25 km
n_pulses = 1_000_000
seed     = 11
";

fn main() -> ftqkd::Result<()> {
    let cfg = RunConfig::parse(HONEST)?;
    let out = cmd_protocol(&cfg, false)?;
    println!("{SUMMARY_CSV_HEADER}\n{}", out.summary);
    if let Some((alice, bob)) = &out.keys {
        println!("keys match: {}", out.keys_match());
        let hex = key_to_hex(&alice.bits);
        println!(
            "first line of the key:\n{}",
            hex.lines().next().unwrap_or("")
        );
        println!(
            "{} bits, leak {} parities, I_AE {:.4}",
            bob.length, bob.leak_bits, bob.i_ae
        );
    }

    let attacked = RunConfig::parse(&format!("{HONEST}eve = ir\np_ir = 1\n"))?;
    let out = cmd_protocol(&attacked, false)?;
    println!("\nwith intercept-resend:\n{}", out.summary);
    println!("aborted: {}", out.summary.aborted);
    Ok(())
}
