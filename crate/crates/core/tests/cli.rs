//! End-to-end checks of the command-line surface: subcommands, config
//! handling, output schemas, and byte-level determinism of `reproduce`.

use std::fs;

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wcinvest"))
}

fn tmpdir(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("wcinvest_cli_{name}_{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn check_prints_feller_index() {
    let out = bin().args(["check", "--model", "a"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("feller_index = 1.5325"), "{text}");
    assert!(text.contains("admissible_cap = 2.0000"));
}

#[test]
fn check_ko_uses_ou_preset() {
    let out = bin().args(["check", "--model", "ko"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // OU factor: no Feller index, threshold 2*3.5/0.09
    assert!(text.contains("feller_index = n/a"), "{text}");
    assert!(text.contains("exp_moment_threshold = 77.7778"), "{text}");
}

#[test]
fn unknown_model_fails_with_message() {
    let out = bin().args(["check", "--model", "zz"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("unknown model preset"), "{err}");
}

#[test]
fn missing_model_fails_before_output() {
    let dir = tmpdir("nomodel");
    let out = bin().args(["solve", "--out"]).arg(&dir).output().unwrap();
    assert!(!out.status.success());
    assert!(fs::read_dir(&dir).unwrap().next().is_none(), "no partial outputs expected");
}

#[test]
fn simulate_writes_csv_with_expected_grid() {
    let dir = tmpdir("simulate");
    let out = bin()
        .args(["simulate", "--model", "a", "--paths", "3", "--steps", "10", "--seed", "5", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.join("paths.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,path0,path1,path2");
    assert_eq!(text.lines().count(), 12); // header + 11 time rows
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("0.0000000000,"));
    for field in first.split(',').skip(1) {
        assert_eq!(field.parse::<f64>().unwrap(), 0.014);
    }
}

#[test]
fn solve_writes_surface_and_policy() {
    let dir = tmpdir("solve");
    let out = bin()
        .args(["solve", "--model", "c", "--n-t", "50", "--n-x", "30", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["surface.csv", "policy.csv"] {
        let text = fs::read_to_string(dir.join(name)).unwrap();
        assert!(text.starts_with("t,x,v\n"));
        assert_eq!(text.lines().count(), 1 + 51 * 31, "{name}");
    }
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("v(0, z0)"), "{stdout}");
}

#[test]
fn policy_paths_includes_reference_column() {
    let dir = tmpdir("policypaths");
    let out = bin()
        .args([
            "policy-paths",
            "--model",
            "c",
            "--paths",
            "2",
            "--steps",
            "40",
            "--n-t",
            "40",
            "--n-x",
            "30",
            "--seed",
            "9",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.join("policy_paths.csv")).unwrap();
    assert!(text.starts_with("t,pi_path0,pi_path1,reference\n"));
    // terminal allocations vanish
    let last = text.lines().last().unwrap();
    let fields: Vec<f64> = last.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert!(fields.iter().all(|&p| p.abs() < 1e-12), "{last}");
}

#[test]
fn config_file_drives_a_run() {
    let dir = tmpdir("config");
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, "model = c\nn_t = 40\nn_x = 20\nseed = 3\n# comment\n").unwrap();
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("surface.csv").exists());
}

#[test]
fn invalid_config_key_reports_line_number() {
    let dir = tmpdir("badcfg");
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, "model = c\nwibble = 3\n").unwrap();
    let out = bin().args(["solve", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2") && err.contains("wibble"), "{err}");
}

#[test]
fn reproduce_is_deterministic_and_complete() {
    let dir_a = tmpdir("fig_a");
    let dir_b = tmpdir("fig_b");
    for dir in [&dir_a, &dir_b] {
        let out = bin()
            .args(["reproduce", "--figure", "1", "--seed", "42", "--out"])
            .arg(dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let csv_a = fs::read(dir_a.join("fig1.csv")).unwrap();
    let csv_b = fs::read(dir_b.join("fig1.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "reproduce must be byte-deterministic for a fixed seed");
    let svg = fs::read_to_string(dir_a.join("fig1.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("stroke-dasharray"), "reference curve must be dashed");
    assert_eq!(svg.matches("<polyline").count(), 3); // two samples + reference

    let header = fs::read_to_string(dir_a.join("fig1.csv")).unwrap();
    assert!(header.starts_with("t,pi_path0,pi_path1,reference\n"));

    // a different seed must change the sampled curves
    let dir_c = tmpdir("fig_c");
    let out = bin()
        .args(["reproduce", "--figure", "1", "--seed", "43", "--out"])
        .arg(&dir_c)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_ne!(csv_a, fs::read(dir_c.join("fig1.csv")).unwrap());
}

#[test]
fn reproduce_merton_figures() {
    let dir = tmpdir("fig4");
    let out = bin()
        .args(["reproduce", "--figure", "4", "--seed", "42", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.join("fig4.csv")).unwrap();
    assert!(text.starts_with("t,merton_path0,merton_path1,pi_path0,pi_path1\n"));

    let dir6 = tmpdir("fig6");
    let out = bin()
        .args(["reproduce", "--figure", "6", "--seed", "42", "--out"])
        .arg(&dir6)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = fs::read_to_string(dir6.join("fig6.csv")).unwrap();
    assert!(text.starts_with("t,merton_path0,merton_path1\n"));
}

#[test]
fn reproduce_rejects_unknown_figure() {
    let out = bin().args(["reproduce", "--figure", "9"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("figure must lie in 1..=7"), "{err}");
}

#[test]
fn verify_runs_on_small_budget() {
    let dir = tmpdir("verify");
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, "model = c\nn_t = 200\nn_x = 60\nn_steps = 200\nseed = 11\n").unwrap();
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .args(["--paths", "400", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "stdout:\n{stdout}\nstderr:\n{}", String::from_utf8_lossy(&out.stderr));
    for name in [
        "verify_martingale.csv",
        "verify_comparison.csv",
        "verify_cash_lower_bound.csv",
        "verify_wealth_representation.csv",
        "verify_summary.txt",
    ] {
        assert!(dir.join(name).exists(), "missing {name}");
    }
    let csv = fs::read_to_string(dir.join("verify_martingale.csv")).unwrap();
    assert!(csv.starts_with("check,checkpoint,estimate,se,pass\n"));
    assert!(stdout.contains("martingale: PASS"), "{stdout}");
}

#[test]
fn outputs_are_atomic_no_tmp_left_behind() {
    let dir = tmpdir("atomic");
    let out = bin()
        .args(["solve", "--model", "c", "--n-t", "30", "--n-x", "20", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let leftovers: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension().map(|x| x == "tmp").unwrap_or(false)).then_some(p)
        })
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn help_lists_subcommands() {
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in ["check", "solve", "simulate", "policy-paths", "verify", "reproduce"] {
        assert!(text.contains(sub), "missing subcommand {sub} in help:\n{text}");
    }
}

