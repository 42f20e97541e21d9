use std::fs;
use std::path::Path;

use dpsqkd::cli::{run, EXIT_CONFIG, EXIT_EMPTY, EXIT_OK};

fn dpsqkd(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("dpsqkd").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_deterministic_and_manifest_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    let args = |d: &Path| {
        vec![
            "simulate",
            "--seed",
            "9",
            "--pulses",
            "300000",
            "--out",
            path(d),
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>()
    };
    let run_args = |v: Vec<String>| {
        let refs: Vec<&str> = v.iter().map(String::as_str).collect();
        dpsqkd(&refs)
    };
    let (code, stdout, _) = run_args(args(&a));
    assert_eq!(code, EXIT_OK);
    assert!(stdout.contains("qber = "));
    assert_eq!(run_args(args(&b)).0, EXIT_OK);
    for f in ["record.csv", "summary.txt"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }

    // the manifest alone reproduces the run
    let manifest = a.join("manifest.toml");
    let text = fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("[run]") && text.contains("subcommand = \"simulate\""));
    let (code, _, err) = dpsqkd(&["simulate", "--config", path(&manifest), "--out", path(&c)]);
    assert_eq!(code, EXIT_OK, "{err}");
    for f in ["record.csv", "summary.txt"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(c.join(f)).unwrap(),
            "{f}"
        );
    }
    let header = fs::read_to_string(a.join("record.csv")).unwrap();
    assert!(header.starts_with("pulse_index,time_ns,bin,port,alice_bit,bob_bit,flags\n"));
}

#[test]
fn different_seeds_differ() {
    let (_, a, _) = dpsqkd(&["simulate", "--seed", "1", "--pulses", "300000"]);
    let (_, b, _) = dpsqkd(&["simulate", "--seed", "2", "--pulses", "300000"]);
    assert_ne!(a, b);
}

#[test]
fn sample_config_loads() {
    let cfg = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/configs/bench_30km.toml"
    );
    let (code, out, err) = dpsqkd(&["simulate", "--config", cfg, "--pulses", "200000"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("sifted_bits"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[source]\nbin_width = \"1\"\n").unwrap();
    let (code, _, err) = dpsqkd(&["simulate", "--config", path(&bad)]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("source.bin_width"), "{err}");

    fs::write(&bad, "[source]\nflavour = 3\n").unwrap();
    assert_eq!(dpsqkd(&["budget", "--config", path(&bad)]).0, EXIT_CONFIG);

    assert_eq!(
        dpsqkd(&["sweep", "--axis", "colour", "--range", "0:1:1"]).0,
        EXIT_CONFIG
    );
    assert_eq!(
        dpsqkd(&["sweep", "--axis", "mu", "--range", "0.1:0.5"]).0,
        EXIT_CONFIG
    );
    assert_eq!(dpsqkd(&["simulate", "--mc", "--analytic"]).0, EXIT_CONFIG);
    assert_eq!(dpsqkd(&["frobnicate"]).0, EXIT_CONFIG);
    assert_eq!(dpsqkd(&["attack-report", "--n-bins", "1"]).0, EXIT_CONFIG);
}

#[test]
fn empty_result_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let far = dir.path().join("far.toml");
    fs::write(&far, "[channel]\nlength = \"400 km\"\n[detector]\ndark_count_rate = \"0 Hz\"\nafterpulse_prob = 0.0\n[source]\nextinction_ratio = \"none\"\n").unwrap();
    let (code, _, err) = dpsqkd(&["simulate", "--config", path(&far), "--pulses", "1000"]);
    assert_eq!(code, EXIT_EMPTY, "{err}");
}

#[test]
fn budget_and_sweep_tables() {
    let (code, out, _) = dpsqkd(&["budget"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("source,measured_1ns,measured_0.4ns,predicted\n"));
    assert!(out.contains("total,0.1453,0.2318,"), "{out}");

    let (code, out, _) = dpsqkd(&["sweep", "--axis", "distance", "--range", "0:100:25"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 6);

    let (code, out, _) = dpsqkd(&[
        "sweep",
        "--axis",
        "guard",
        "--range",
        "0:300:100",
        "--mc",
        "--pulses",
        "400000",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 5);
}

#[test]
fn attack_report_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ir.toml");
    fs::write(&cfg, "[attack_report]\nmin_sifted_bits = 20000\n").unwrap();
    let (code, out, err) = dpsqkd(&["attack-report", "--config", path(&cfg), "--n-bins", "2,3"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("n_bins,exact_qber,mc_qber,mc_std_error,sifted_bits")
    );
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(row[0], 2.0);
    assert_eq!(row[1], 0.25);
    assert!((row[2] - 0.25).abs() < 5.0 * row[3]);
}

#[test]
fn help_goes_to_stdout_only() {
    let (code, out, err) = dpsqkd(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("attack-report"));
    assert!(err.is_empty());
}
