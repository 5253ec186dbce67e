//! End-to-end checks of the `ampcode` binary: documented stdout shapes,
//! exit codes, config-file handling, and manifest replay.

mod common;

use common::*;

#[test]
fn encode_prints_the_state() {
    let out = run(&["encode", "--probs", "0.25,0.75"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("0.5, 0.866025"), "{}", stdout(&out));

    let out = run(&["encode", "--probs", "1,0"]);
    assert_eq!(stdout(&out).trim(), "1, 0");
}

#[test]
fn encode_rejects_unnormalized_probs() {
    let out = run(&["encode", "--probs", "0.5,0.6"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("must sum to 1"), "{}", stderr(&out));
}

#[test]
fn fisher_matches_documented_values() {
    let out = run(&["fisher", "--encoding", "amplitude", "--omega", "0.2,0.7"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().next().unwrap(), "4, 4");

    let out = run(&["fisher", "--encoding", "identity", "--omega", "0.5"]);
    assert_eq!(stdout(&out).lines().next().unwrap(), "4");

    let out = run(&["fisher", "--encoding", "identity", "--omega", "0.9"]);
    assert!(stdout(&out).starts_with("11.1111"), "{}", stdout(&out));
}

#[test]
fn scan_bell_default_grids_match_documented_lines() {
    let out = run(&["scan-bell", "--mode", "local", "--grid", "default"]);
    assert_eq!(code(&out), 0);
    assert!(
        stdout(&out).starts_with("violations: 0 of 10201"),
        "{}",
        stdout(&out)
    );

    let out = run(&["scan-bell", "--mode", "contextual", "--grid", "default"]);
    let text = stdout(&out);
    let first = text.lines().next().unwrap();
    let violations: u64 = first
        .strip_prefix("violations: ")
        .and_then(|s| s.split(' ').next())
        .and_then(|s| s.parse().ok())
        .expect(first);
    assert!(violations > 0, "{first}");
    assert!(text.contains("max ΔS = 1 at "), "{text}");
}

#[test]
fn exit_codes_follow_the_contract() {
    // 2: invalid input, several flavors.
    for args in [
        &["simulate-double", "--mode", "psychic"][..],
        &["laser", "--alpha", "0.3", "--model", "gaussian"],
        &["no-signaling", "--set", "C"],
        &["verify", "--only", "no_property_is_called_this"],
        &["error-scaling"][..], // neither --m nor --probs
        &["laser", "--alpha", "2.0"], // outside [0, π/2]
    ] {
        let out = run(args);
        assert_eq!(code(&out), 2, "{args:?}: {}", stderr(&out));
    }

    // 2: clap usage errors.
    let out = run(&["fisher"]); // --omega is required
    assert_eq!(code(&out), 2);
    let out = run(&["no-such-command"]);
    assert_eq!(code(&out), 2);
    let out = run(&[]);
    assert_eq!(code(&out), 2);

    // 3: I/O trouble.
    let out = run(&["--from-manifest", "/nonexistent/manifest.json"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let out = run(&["encode", "--probs", "0.5,0.5", "--out", "/dev/null/sub"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn kv_and_json_configs_resolve_identically() {
    let dir = TempDir::new("configs");
    let kv = dir.join("single.conf");
    std::fs::write(
        &kv,
        "# codeword transfer\np = 0.3, 0.7\nencoding = amplitude\nn = 500\ntrials = 20\nseed = 6\n",
    )
    .unwrap();
    let json = dir.join("single.json");
    std::fs::write(
        &json,
        r#"{"p": [0.3, 0.7], "encoding": "amplitude", "n": 500, "trials": 20, "seed": 6}"#,
    )
    .unwrap();

    let d_kv = TempDir::new("kv");
    let d_json = TempDir::new("json");
    let d_flags = TempDir::new("flags");
    let out = run(&["simulate-single", "--config", kv.to_str().unwrap(), "--out", d_kv.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = run(&["simulate-single", "--config", json.to_str().unwrap(), "--out", d_json.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = run(&[
        "simulate-single", "--probs", "0.3,0.7", "--n", "500", "--trials", "20",
        "--seed", "6", "--out", d_flags.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let trials_kv = std::fs::read(d_kv.join("trials.csv")).unwrap();
    let trials_json = std::fs::read(d_json.join("trials.csv")).unwrap();
    let trials_flags = std::fs::read(d_flags.join("trials.csv")).unwrap();
    assert_eq!(trials_kv, trials_json);
    assert_eq!(trials_kv, trials_flags);
}

#[test]
fn seed_flag_overrides_config_file_seed() {
    let dir = TempDir::new("seedover");
    let conf = dir.join("single.conf");
    std::fs::write(&conf, "p = 0.3,0.7\nencoding = amplitude\nn = 200\ntrials = 10\nseed = 6\n").unwrap();

    let d1 = TempDir::new("seed6");
    let d2 = TempDir::new("seed7");
    run(&["simulate-single", "--config", conf.to_str().unwrap(), "--out", d1.path().to_str().unwrap()]);
    run(&["simulate-single", "--config", conf.to_str().unwrap(), "--seed", "7", "--out", d2.path().to_str().unwrap()]);
    let a = std::fs::read(d1.join("trials.csv")).unwrap();
    let b = std::fs::read(d2.join("trials.csv")).unwrap();
    assert_ne!(a, b, "different seeds should sample different trials");
}

#[test]
fn malformed_config_is_invalid_input() {
    let dir = TempDir::new("badconf");
    let conf = dir.join("broken.conf");
    std::fs::write(&conf, "p 0.3,0.7\n").unwrap();
    let out = run(&["simulate-single", "--config", conf.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("key = value"), "{}", stderr(&out));

    std::fs::write(&conf, r#"{"p": [0.3, 0.7]"#).unwrap(); // truncated JSON
    let out = run(&["simulate-single", "--config", conf.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn degrees_flag_matches_radians() {
    let d_deg = TempDir::new("deg");
    let d_rad = TempDir::new("rad");
    let out = run(&["laser", "--alpha", "45", "--degrees", "--n", "20000", "--seed", "3", "--out", d_deg.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = run(&["laser", "--alpha", "0.7853981633974483", "--n", "20000", "--seed", "3", "--out", d_rad.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        std::fs::read(d_deg.join("laser.json")).unwrap(),
        std::fs::read(d_rad.join("laser.json")).unwrap()
    );
}

#[test]
fn csv_cells_carry_full_precision() {
    let dir = TempDir::new("precision");
    run(&["fisher", "--encoding", "amplitude", "--omega", "0.2", "--out", dir.path().to_str().unwrap()]);
    let text = std::fs::read_to_string(dir.join("fisher.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "omega,fisher_information,variance_bound,achieved_variance,saturated"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("2.0000000000000001e-1,4.0000000000000000e0,"), "{row}");
    // 17 significant digits: mantissa digit + 16 after the point.
    let cell = row.split(',').next().unwrap();
    let mantissa = cell.split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{cell}");
}

#[test]
fn no_signaling_marginal_is_flat_in_theta_c() {
    let dir = TempDir::new("nosig");
    let out = run(&[
        "no-signaling", "--theta-alpha", "0.6", "--theta-b-a", "0.1", "--theta-c-a", "0.9",
        "--grid-points", "25", "--n", "50000", "--seed", "1",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.join("no_signaling.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 25);
    for row in rows {
        let dev: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!(dev.abs() < 1e-12, "{row}");
    }
}

#[test]
fn verify_json_is_machine_readable() {
    let out = run(&["verify", "--only", "space", "--seed", "4", "--json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["seed"], 4);
    let outcomes = report["outcomes"].as_array().unwrap();
    assert!(outcomes.len() >= 3, "{outcomes:?}");
    assert!(outcomes.iter().all(|o| o["passed"] == true));
}

#[test]
fn manifest_replay_reproduces_files_in_place() {
    let dir = TempDir::new("replay");
    let args = [
        "simulate-double", "--theta-c-a", "0.9", "--n", "50000", "--seed", "21",
        "--out", dir.path().to_str().unwrap(),
    ];
    let out = run(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let before = dir_files(dir.path());

    // No --out: outputs land back beside the manifest.
    let manifest = dir.join("manifest.json");
    let out = run(&["--from-manifest", manifest.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let after = dir_files(dir.path());

    for (name, bytes) in &before {
        if name == "manifest.json" {
            assert_eq!(
                manifest_modulo_duration(bytes),
                manifest_modulo_duration(&after[name])
            );
        } else {
            assert_eq!(bytes, &after[name], "{name} changed across replay");
        }
    }
}

#[test]
fn manifest_and_subcommand_together_are_rejected() {
    let out = run(&["encode", "--probs", "0.5,0.5", "--from-manifest", "x.json"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("not both"), "{}", stderr(&out));
}

#[test]
fn custom_axis_scan_with_svg() {
    let dir = TempDir::new("axes");
    let out = run(&[
        "scan-bell",
        "--axis", "theta_b_a:0:3.141592653589793:9",
        "--axis", "theta_c_a:0:3.141592653589793:9",
        "--svg", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let svg = std::fs::read_to_string(dir.join("scan.svg")).unwrap();
    assert!(svg.starts_with("<svg"), "not an svg");
    let csv = std::fs::read_to_string(dir.join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 81);

    // One-axis scans are legal, but refuse the 2-D heatmap.
    let out = run(&["scan-bell", "--axis", "theta_c_a:0:3.141592653589793:9"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = run(&["scan-bell", "--axis", "theta_c_a:0:3.141592653589793:9", "--svg"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}
