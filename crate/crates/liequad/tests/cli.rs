//! End-to-end tests that drive the compiled `liequad` binary against the
//! fixture files shipped in `fixtures/`.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liequad"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn check(name: &str) -> Output {
    run(&["check", fixture(name).to_str().unwrap()])
}

#[test]
fn holding_fixture_exits_zero_with_json_report() {
    let out = check("free_particle_n2.toml");
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["schema"], 1);
    assert_eq!(json["verdict"], "holds");
    assert_eq!(json["geometry"], "symplectic");
}

#[test]
fn failing_fixtures_exit_one() {
    for name in ["condition4_violation.toml", "sl2_not_solvable.toml", "contact_damped_oscillator.toml"] {
        let out = check(name);
        assert_eq!(out.status.code(), Some(1), "{name}");
        let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(json["verdict"], "fails", "{name}");
    }
}

#[test]
fn level_set_counterexample_names_the_offending_pair() {
    let out = check("condition4_violation.toml");
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let hyp = json["hypotheses"]
        .as_array()
        .unwrap()
        .iter()
        .find(|h| h["name"] == "level_set_compatibility")
        .unwrap();
    assert_eq!(hyp["verdict"], "fails");
    assert!(hyp["detail"].as_str().unwrap().contains("(1, 2)"), "{}", hyp["detail"]);
}

#[test]
fn check_output_is_byte_identical_across_runs() {
    for name in ["harmonic_oscillator.toml", "contact_damped_oscillator.toml", "cocontact_free.toml"] {
        let first = check(name);
        let second = check(name);
        assert_eq!(first.stdout, second.stdout, "{name}");
        assert_eq!(first.status.code(), second.status.code(), "{name}");
    }
}

#[test]
fn missing_file_and_malformed_file_exit_three() {
    let out = run(&["check", "/nonexistent/system.toml"]);
    assert_eq!(out.status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, "geometry = \"symplectic\"\nn = \"one\"\n").unwrap();
    let out = run(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error:"), "{stderr}");
}

#[test]
fn bracket_command_prints_the_weighted_coordinate() {
    let out = run(&["bracket", fixture("contact_free_particle.toml").to_str().unwrap(), "q1", "z"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("{q1, z} = q1\n"), "{stdout}");
    assert!(stdout.contains("routes agree"), "{stdout}");
}

#[test]
fn bracket_of_anything_with_itself_is_zero() {
    let out = run(&["bracket", fixture("harmonic_oscillator.toml").to_str().unwrap(), "q1^2*p1", "q1^2*p1"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("{q1^2*p1, q1^2*p1} = 0\n"), "{stdout}");
}

#[test]
fn bracket_with_unknown_identifier_exits_three() {
    let out = run(&["bracket", fixture("harmonic_oscillator.toml").to_str().unwrap(), "q1", "q7"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("q7"));
}

#[test]
fn cocontact_csv_leads_with_a_duplicated_time_column() {
    let out = run(&[
        "integrate",
        fixture("cocontact_free.toml").to_str().unwrap(),
        "--method",
        "rk4",
        "--t-max",
        "2",
        "--h",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("parameter,t,q1,p1,z"));
    for line in lines {
        let mut cols = line.split(',');
        let parameter = cols.next().unwrap();
        let t = cols.next().unwrap();
        assert_eq!(parameter, t, "{line}");
    }
}

#[test]
fn quadrature_refuses_a_field_no_probe_straightens() {
    let out = run(&[
        "integrate",
        fixture("quartic_oscillator.toml").to_str().unwrap(),
        "--method",
        "quadrature",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&out.stderr);
    for probe in ["translation", "separable", "linear", "scaling"] {
        assert!(stderr.contains(probe), "missing {probe} in {stderr}");
    }
}

#[test]
fn both_mode_reports_a_tight_oracle_agreement() {
    let out = run(&[
        "integrate",
        fixture("harmonic_oscillator.toml").to_str().unwrap(),
        "--method",
        "both",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let summary = stdout.lines().last().unwrap();
    let diff: f64 = summary.strip_prefix("# max_norm_diff = ").unwrap().parse().unwrap();
    assert!(diff <= 1e-6, "{diff}");
}

#[test]
fn report_command_embeds_the_check_bundle() {
    let out = run(&["report", fixture("cosymplectic_linear.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["system"]["geometry"], "cosymplectic");
    assert_eq!(json["constants_of_motion"][0]["constant_of_motion"], "yes");
    assert_eq!(json["check"]["verdict"], "holds");
}
