use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ftqkd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftqkd"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.conf");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn rates_csv_is_stable() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "l_max = 50 km\nl_step = 10 km\n");
    let a = ftqkd(dir.path(), &["--config", &cfg, "rates"]);
    let b = ftqkd(dir.path(), &["--config", &cfg, "rates"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(
        rows[0],
        "length_km,V,r_sift_ft,q_ft,r_net_ft,r_sift_bb84,q_bb84,r_net_bb84,secure_ft,secure_bb84"
    );
    assert_eq!(rows.len(), 1 + 6 * 4);
    // V = 1 at l = 0: both protocols see only dark counts
    let first: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(&first[..2], ["0", "1"]);
    assert_eq!(first[3], first[6]);
    // values round-trip exactly
    let r_net: f64 = first[4].parse().unwrap();
    assert_eq!(r_net.to_string(), first[4]);
}

#[test]
fn rates_to_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "l_min = 20 km\nl_max = 20 km\nvisibilities = 0.7\n",
    );
    let o = ftqkd(
        dir.path(),
        &["--config", &cfg, "--out", "curve.csv", "rates"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn crossover_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "visibilities = 0.8, 0.7, 0.6\n");
    let o = ftqkd(dir.path(), &["--config", &cfg, "crossover"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .take(3)
        .map(|l| l.split(',').collect())
        .collect();
    let adv = |r: &Vec<&str>| r[3].parse::<f64>().unwrap();
    assert!((7.0..=17.0).contains(&adv(&rows[0])));
    assert!((55.0..=75.0).contains(&adv(&rows[1])));
    // V = 0.6: BB84 no key, FT finite
    assert_eq!(rows[2][5], "true");
    assert_eq!(rows[2][4], "false");
    let v_star: f64 = text.lines().last().unwrap().parse().unwrap();
    assert!((0.60..=0.70).contains(&v_star));
}

#[test]
fn config_errors_exit_2_with_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "mu = 0.1\n# comment\nsigma_t3 = 500\n");
    let o = ftqkd(dir.path(), &["--config", &cfg, "rates"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let missing = ftqkd(dir.path(), &["--config", "nope.conf", "rates"]);
    assert_ne!(missing.status.code(), Some(0));
}

#[test]
fn failing_scheme_is_refused_without_force() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "tau = 100 ps\nl_max = 5 km\n");
    let check = ftqkd(dir.path(), &["--config", &cfg, "check-scheme"]);
    assert_eq!(check.status.code(), Some(2));
    assert!(stdout(&check).contains("FAIL"));
    let refused = ftqkd(dir.path(), &["--config", &cfg, "rates"]);
    assert_eq!(refused.status.code(), Some(2));
    let forced = ftqkd(dir.path(), &["--config", &cfg, "--force", "rates"]);
    assert_eq!(forced.status.code(), Some(0));

    let ok = ftqkd(dir.path(), &["check-scheme"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).ends_with("overall: PASS\n"));
}

#[test]
fn protocol_writes_matching_keys() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "length = 25 km\nn_pulses = 1000000\n");
    let args = [
        "--config",
        cfg.as_str(),
        "--seed",
        "8",
        "--out",
        "session",
        "protocol",
    ];
    let o = ftqkd(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0));
    let session = dir.path().join("session");
    let alice = fs::read_to_string(session.join("alice.key")).unwrap();
    let bob = fs::read_to_string(session.join("bob.key")).unwrap();
    assert_eq!(alice, bob);
    assert!(!alice.is_empty());
    for line in alice.lines() {
        assert!(line.len() <= 64);
        assert!(line
            .chars()
            .all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase()));
    }
    let summary = fs::read_to_string(session.join("summary.csv")).unwrap();
    assert!(summary
        .starts_with("pulses,sifted,sample_size,q_hat,aborted,leak_bits,final_length\n1000000,"));
    assert!(summary.contains(",false,"));

    // same seed, same bytes
    let again = ftqkd(dir.path(), &args);
    assert_eq!(again.stdout, o.stdout);
    assert_eq!(
        fs::read_to_string(session.join("alice.key")).unwrap(),
        alice
    );
}

#[test]
fn protocol_abort_and_short_session_codes() {
    let dir = TempDir::new().unwrap();
    let clean = write_config(dir.path(), "length = 25 km\n");
    let o = ftqkd(dir.path(), &["--config", &clean, "--out", "s", "protocol"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("s/alice.key").exists());

    let cfg = write_config(dir.path(), "length = 25 km\neve = ir\np_ir = 1\n");
    let o = ftqkd(dir.path(), &["--config", &cfg, "--out", "s", "protocol"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains(",true,"));
    assert!(!dir.path().join("s/alice.key").exists());

    let short = write_config(dir.path(), "n_pulses = 100\n");
    let o = ftqkd(dir.path(), &["--config", &short, "--out", "s", "protocol"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn protocol_record_dump() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "n_pulses = 200000\n");
    let o = ftqkd(
        dir.path(),
        &[
            "--config",
            &cfg,
            "--out",
            "s",
            "protocol",
            "--dump-records",
            "pulses.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let dump = fs::read_to_string(dir.path().join("pulses.csv")).unwrap();
    assert_eq!(
        dump.lines().next(),
        Some("index,a_n,b_n,eve,clicks,bob_basis,g_n")
    );
    assert_eq!(dump.lines().count(), 200_001);
}

#[test]
fn validate_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "n_pulses = 200000\nvalidate_lengths = 0, 50 km\n",
    );
    let a = ftqkd(dir.path(), &["--config", &cfg, "--seed", "3", "validate"]);
    let b = ftqkd(dir.path(), &["--config", &cfg, "--seed", "3", "validate"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 3);

    let small = write_config(dir.path(), "n_pulses = 1000\n");
    let o = ftqkd(dir.path(), &["--config", &small, "validate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_flags_a_breach() {
    // the closed forms assume no eavesdropper; a full intercept breaks Q
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "n_pulses = 200000\nvalidate_lengths = 0 km\neve = ir\n",
    );
    let o = ftqkd(dir.path(), &["--config", &cfg, "validate"]);
    assert_eq!(o.status.code(), Some(6));
}
