//! End-to-end tests driving the installed `qbsim` binary: figure dataset
//! reproduction (criterion 9), manifest round-trips, config and unit
//! validation, override plumbing, and the exit-code contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use tempfile::TempDir;

fn qbsim() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qbsim"));
    // Keep runs hermetic: the suite controls the thread cap explicitly
    // where it matters.
    cmd.env_remove("QBSIM_THREADS");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("qbsim binary should spawn")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process should exit, not signal")
}

fn read_bytes(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

/// Final value of a numeric CSV column.
fn last_field(csv: &str, index: usize) -> f64 {
    let line = csv.lines().last().expect("non-empty CSV");
    line.split(',')
        .nth(index)
        .expect("column present")
        .parse()
        .expect("numeric field")
}

const FIGURES: [&str; 5] = ["fig2a", "fig2b", "fig3", "fig5a", "fig5b"];

#[test]
fn criterion_9_figure_datasets_reproduce_deterministically() {
    let dir_a = TempDir::new().unwrap();
    let started = Instant::now();
    let out = run(qbsim()
        .args(["reproduce", "all", "--out-dir"])
        .arg(dir_a.path()));
    let elapsed = started.elapsed();
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    assert!(
        elapsed.as_secs() < 300,
        "reproduction took {elapsed:.2?}, budget is 5 minutes"
    );

    let mut first_pass = Vec::new();
    for name in FIGURES {
        let csv = dir_a.path().join(format!("{name}.csv"));
        let manifest = dir_a.path().join(format!("{name}.manifest.json"));
        let csv_bytes = read_bytes(&csv);
        let manifest_bytes = read_bytes(&manifest);
        assert!(!csv_bytes.is_empty());
        let text = String::from_utf8(csv_bytes.clone()).unwrap();
        assert!(text.lines().count() > 1, "{name}: header plus data rows");
        first_pass.push((csv, manifest, csv_bytes, manifest_bytes));
    }
    let fig2a_header = fs::read_to_string(dir_a.path().join("fig2a.csv"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(
        fig2a_header,
        "t_s,gamma_t,mean_photons,energy_J,power_W,ergotropy_dephased_J,ergotropy_coherent_J"
    );
    let fig3_header = fs::read_to_string(dir_a.path().join("fig3.csv"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(fig3_header, "detuning_rad_s,T_n64,T_n23.54,T_n8.66,T_n0");

    // Second pass into the same directory: everything byte-identical,
    // manifests included.
    let out = run(qbsim()
        .args(["reproduce", "all", "--out-dir"])
        .arg(dir_a.path()));
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    for (csv, manifest, csv_bytes, manifest_bytes) in &first_pass {
        assert_eq!(&read_bytes(csv), csv_bytes, "{} changed", csv.display());
        assert_eq!(
            &read_bytes(manifest),
            manifest_bytes,
            "{} changed",
            manifest.display()
        );
    }

    // Third pass in a fresh directory with the thread cap pinned to one
    // worker: the data bytes must not depend on parallelism or location.
    let dir_b = TempDir::new().unwrap();
    let out = run(qbsim()
        .env("QBSIM_THREADS", "1")
        .args(["reproduce", "all", "--out-dir"])
        .arg(dir_b.path()));
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    for name in FIGURES {
        let a = read_bytes(&dir_a.path().join(format!("{name}.csv")));
        let b = read_bytes(&dir_b.path().join(format!("{name}.csv")));
        assert_eq!(a, b, "{name}.csv differs across directories/thread caps");
    }

    println!(
        "PASS criterion 9: fig2a, fig2b, fig3, fig5a, fig5b reproduced in {:.2} s, \
         byte-identical across reruns and a single-threaded run",
        elapsed.as_secs_f64()
    );
}

#[test]
fn manifests_rerun_to_the_same_bytes_from_anywhere() {
    let dir1 = TempDir::new().unwrap();
    let out = run(qbsim().current_dir(dir1.path()).arg("charge"));
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let original = read_bytes(&dir1.path().join("charge.csv"));
    let manifest = dir1.path().join("charge.manifest.json");

    // `run` on the manifest from a different working directory writes the
    // same table relative to the new directory.
    let dir2 = TempDir::new().unwrap();
    let out = run(qbsim().current_dir(dir2.path()).arg("run").arg(&manifest));
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let replayed = read_bytes(&dir2.path().join("charge.csv"));
    assert_eq!(original, replayed, "manifest replay changed the table");

    // The replay writes its own manifest, identical to the source.
    assert_eq!(
        read_bytes(&manifest),
        read_bytes(&dir2.path().join("charge.manifest.json"))
    );

    // A scenario subcommand refuses a manifest recorded for another one.
    let out = run(qbsim().current_dir(dir2.path()).arg("age").arg(&manifest));
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr_of(&out).contains("charge"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn default_configuration_validates_clean() {
    let out = run(qbsim().arg("validate"));
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["ok"], serde_json::Value::Bool(true));
    assert!(doc["errors"].as_array().unwrap().is_empty());
    assert!(doc["warnings"].as_array().unwrap().is_empty());
    assert!(doc["config_hash"].as_str().unwrap().len() == 64);
    assert!(doc["resolved"]["physics"]["omega_a"].is_number());
}

#[test]
fn coupling_at_half_detuning_draws_a_named_warning() {
    // |omega_q - omega_a| = pi GHz; half of that as g_a trips the
    // dispersive-validity guard without being an outright error.
    let out = run(qbsim().args([
        "validate",
        "--set",
        r#"physics.g_a={"value":1.5707963267948966,"unit":"GHz","convention":"angular"}"#,
    ]));
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["ok"], serde_json::Value::Bool(true));
    let warnings = doc["warnings"].as_array().unwrap();
    assert!(
        warnings
            .iter()
            .any(|w| w.as_str().unwrap().contains("g_a") && w.as_str().unwrap().contains("0.5")),
        "warnings: {warnings:?}"
    );
}

#[test]
fn frequencies_without_a_convention_are_refused_by_key_name() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(
        &cfg,
        r#"{"scenario":"charge","physics":{"gamma":{"value":10,"unit":"kHz"}}}"#,
    )
    .unwrap();
    let out = run(qbsim().current_dir(dir.path()).arg("charge").arg(&cfg));
    assert_eq!(exit_code(&out), 2);
    let stderr = stderr_of(&out);
    assert!(stderr.contains("physics.gamma"), "stderr: {stderr}");
    assert!(stderr.contains("angular"), "stderr: {stderr}");
    assert!(stderr.contains("ordinary"), "stderr: {stderr}");
}

#[test]
fn config_scenario_reproduce_expands_to_all_figures() {
    // `"scenario": "reproduce"` in a config is an envelope: one `run`
    // rebuilds every figure dataset from that config's physics.
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"scenario":"reproduce"}"#).unwrap();
    let out = run(qbsim().current_dir(dir.path()).arg("run").arg(&cfg));
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    for name in FIGURES {
        assert!(
            dir.path().join(format!("{name}.csv")).is_file(),
            "{name}.csv missing"
        );
        assert!(
            dir.path().join(format!("{name}.manifest.json")).is_file(),
            "{name}.manifest.json missing"
        );
    }
    let fig3_header = fs::read_to_string(dir.path().join("fig3.csv"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(fig3_header, "detuning_rad_s,T_n64,T_n23.54,T_n8.66,T_n0");

    // With default physics the envelope's tables match the bundled presets
    // byte for byte (spot-checked on the cheapest figure).
    let preset_dir = TempDir::new().unwrap();
    let out = run(qbsim()
        .args(["reproduce", "fig2b", "--out-dir"])
        .arg(preset_dir.path()));
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    assert_eq!(
        read_bytes(&dir.path().join("fig2b.csv")),
        read_bytes(&preset_dir.path().join("fig2b.csv")),
        "envelope output diverged from the preset"
    );
}

#[test]
fn missing_unit_suffix_is_refused_by_key_name() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(
        &cfg,
        r#"{"scenario":"charge","physics":{"gamma":{"value":10}}}"#,
    )
    .unwrap();
    let out = run(qbsim().current_dir(dir.path()).arg("charge").arg(&cfg));
    assert_eq!(exit_code(&out), 2);
    let stderr = stderr_of(&out);
    assert!(stderr.contains("physics.gamma"), "stderr: {stderr}");
    assert!(stderr.contains("unit"), "stderr: {stderr}");
}

#[test]
fn unknown_config_keys_are_fatal() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, r#"{"physics":{"gamm":1.0}}"#).unwrap();
    let out = run(qbsim().current_dir(dir.path()).arg("charge").arg(&cfg));
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr_of(&out).contains("gamm"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn set_overrides_reach_the_physics_and_the_manifest() {
    let dir = TempDir::new().unwrap();
    let out =
        run(qbsim()
            .current_dir(dir.path())
            .args(["charge", "--set", "physics.beta_mag=0.6"]));
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("charge.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(
        manifest["resolved"]["physics"]["beta_mag"],
        serde_json::Value::from(0.6)
    );

    // (2·lambda·beta/gamma)² = 144 photons at saturation; at gamma·t = 15
    // the curve sits at 144·(1 − e^{−7.5})².
    let csv = fs::read_to_string(dir.path().join("charge.csv")).unwrap();
    let mean = last_field(&csv, 2);
    let expected = 144.0 * (1.0 - (-7.5f64).exp()).powi(2);
    assert!(
        ((mean - expected) / expected).abs() < 1e-12,
        "mean = {mean}, expected {expected}"
    );
}

#[test]
fn runaway_integration_reports_a_runtime_failure() {
    let dir = TempDir::new().unwrap();
    let out = run(qbsim().current_dir(dir.path()).args([
        "charge",
        "--set",
        "numerics.engine=lindblad",
        "--set",
        r#"numerics.dt={"value":1.0,"unit":"s"}"#,
        "--set",
        "numerics.dim=16",
    ]));
    assert_eq!(exit_code(&out), 3, "stderr: {}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("trace"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn thread_cap_must_be_a_positive_integer() {
    let out = run(qbsim().env("QBSIM_THREADS", "banana").arg("validate"));
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr_of(&out).contains("QBSIM_THREADS"),
        "stderr: {}",
        stderr_of(&out)
    );

    let out = run(qbsim().env("QBSIM_THREADS", "0").arg("validate"));
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn bare_run_requires_a_scenario() {
    let out = run(qbsim().arg("run"));
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr_of(&out).contains("scenario"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn json_output_mirrors_the_table() {
    let dir = TempDir::new().unwrap();
    let out = run(qbsim().current_dir(dir.path()).args([
        "ergotropy",
        "--set",
        "output.format=json",
        "--set",
        "output.path=ergo.json",
    ]));
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("ergo.json")).unwrap()).unwrap();
    let columns = doc["columns"].as_array().unwrap();
    assert_eq!(columns[0], "convention");
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "coherent");
    assert_eq!(rows[1][0], "dephased");
    // The coherent convention surrenders the full charged energy.
    assert_eq!(rows[0][4], serde_json::Value::from(1.0));
}

#[test]
fn lindblad_charge_stays_near_the_closed_form() {
    // A rescaled drive keeps the Fock space small enough for a quick
    // end-to-end master-equation run: beta = 0.05 saturates at one photon.
    let dir = TempDir::new().unwrap();
    let out = run(qbsim().current_dir(dir.path()).args([
        "charge",
        "--set",
        "physics.beta_mag=0.05",
        "--set",
        "numerics.engine=lindblad",
        "--set",
        "numerics.dim=16",
        "--set",
        r#"physics.t_end={"value":1.0,"unit":"ms"}"#,
    ]));
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let csv = fs::read_to_string(dir.path().join("charge.csv")).unwrap();
    assert!(csv
        .lines()
        .next()
        .unwrap()
        .starts_with("t_s,gamma_t,mean_photons,energy_J,purity"));
    let mean = last_field(&csv, 2);
    let expected = (1.0 - (-5.0f64).exp()).powi(2); // saturation 1.0 photon
    assert!(
        ((mean - expected) / expected).abs() < 1e-4,
        "mean = {mean}, closed form {expected}"
    );
}
