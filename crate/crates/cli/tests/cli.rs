use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn apiary(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apiary"))
        .args(args)
        .env("APIARY_LOG", "error")
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn run_in(dir: &Path, cmd: &str, config: Option<&Path>, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec![cmd, "--out", out];
    let cfg;
    if let Some(c) = config {
        cfg = c.to_str().unwrap().to_string();
        args.extend(["--config", cfg.as_str()]);
    }
    args.extend(extra);
    apiary(&args)
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_reports_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "run", None, &["--set", "horizon=20"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("reports.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);
    assert_eq!(
        csv.lines().next().unwrap(),
        apiary_core::sim::REPORT_COLUMNS.join(",")
    );
    let summary = read_json(dir.path().join("summary.json"));
    assert_eq!(summary["days_completed"], 20);
    assert!(summary["halt"].is_null());
}

#[test]
fn missing_colony_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = apiary_core::sim::scenario::default_config();
    doc.as_object_mut().unwrap().remove("colony");
    let path = dir.path().join("bad.json");
    fs::write(&path, doc.to_string()).unwrap();
    let out = run_in(&dir.path().join("out"), "run", Some(&path), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        text(&out.stderr).contains("colony"),
        "{}",
        text(&out.stderr)
    );
}

#[test]
fn winter_starvation_exits_two_with_partial_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "run", Some(&fixture("starvation.json")), &[]);
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("reports.csv")).unwrap();
    let days = csv.lines().count() - 1;
    assert!(days < 90);
    let summary = read_json(dir.path().join("summary.json"));
    assert_eq!(summary["halt"]["day"], days);
    assert_eq!(summary["halt"]["stock"], "honey");
}

#[test]
fn single_source_field_has_a_radial_gradient() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        "field",
        Some(&fixture("single_source_field.json")),
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let summary = read_json(dir.path().join("eikonal.json"));
    let combined = summary.as_array().unwrap().last().unwrap();
    assert_eq!(combined["field"], "combined");
    assert!(combined["within_5_percent"].as_f64().unwrap() >= 0.95);

    let pgm = fs::read_to_string(dir.path().join("quality_1.pgm")).unwrap();
    let mut lines = pgm.lines();
    assert_eq!(lines.next(), Some("P2"));
    assert_eq!(lines.next(), Some("128 128"));
    assert_eq!(lines.next(), Some("255"));
    let grid: Vec<Vec<u32>> = lines
        .map(|l| l.split(' ').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(grid[64][64], 255);
    // brightness falls off along every ray from the source
    for k in 1..60 {
        assert!(grid[64][64 + k] <= grid[64][64 + k - 1]);
        assert!(grid[64 - k][64] <= grid[64 - k + 1][64]);
    }
    assert_eq!(grid[64][64 + 10], grid[64 + 10][64]);
    assert_eq!(grid[0][0], 0);

    let single = fs::read_to_string(dir.path().join("quality_1.csv")).unwrap();
    let combined = fs::read_to_string(dir.path().join("quality.csv")).unwrap();
    assert_eq!(single, combined);
}

#[test]
fn empty_landscape_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "field", Some(&fixture("empty_field.json")), &[]);
    assert_eq!(out.status.code(), Some(1));
    let out = run_in(dir.path(), "field", None, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("landscape"));
}

#[test]
fn combined_field_is_the_max_of_resource_fields() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value =
        serde_json::from_str(&fs::read_to_string(fixture("single_source_field.json")).unwrap())
            .unwrap();
    let mut second = doc["resources"][0].clone();
    second["id"] = 2.into();
    second["quantum"] = 300.0.into();
    doc["resources"].as_array_mut().unwrap().push(second);
    let ids: Vec<Vec<u32>> = (0..40)
        .map(|r| {
            (0..40)
                .map(|c| {
                    if (r, c) == (5, 5) {
                        1
                    } else if (r, c) == (30, 33) {
                        2
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    doc["landscape"] = serde_json::json!({ "ids": ids, "cell_size": 10.0, "hive": [0, 0] });
    let path = dir.path().join("two.json");
    fs::write(&path, doc.to_string()).unwrap();
    let out = run_in(&dir.path().join("out"), "field", Some(&path), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let grid = |name: &str| -> Vec<f64> {
        fs::read_to_string(dir.path().join("out").join(name))
            .unwrap()
            .lines()
            .flat_map(|l| {
                l.split(',')
                    .map(|v| v.parse::<f64>().unwrap())
                    .collect::<Vec<_>>()
            })
            .collect()
    };
    let (a, b, max) = (
        grid("quality_1.csv"),
        grid("quality_2.csv"),
        grid("quality.csv"),
    );
    for i in 0..max.len() {
        assert_eq!(max[i], a[i].max(b[i]));
    }
}

#[test]
fn deficit_market_takes_case_a() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "market", Some(&fixture("deficit.json")), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(
        stdout.contains("regime=deficit") && stdout.contains("case=a"),
        "{stdout}"
    );
    let sol = read_json(dir.path().join("exchange_solution.json"));
    assert_eq!(sol["case"], "a");
    let tau = sol["tau"].as_f64().unwrap();
    assert!(stdout.contains(&format!("tau={tau:.9}")));
}

#[test]
fn surplus_market_trace_is_adjacent() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "market", Some(&fixture("surplus.json")), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("regime=surplus case=b "));
    let sol = read_json(dir.path().join("exchange_solution.json"));
    let trace: Vec<f64> = sol["trace"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(!trace.is_empty());
    for w in trace.windows(3) {
        assert!(w[2] >= w[0].min(w[1]) && w[2] <= w[0].max(w[1]));
    }
    assert_eq!(sol["converged"], true);
}

#[test]
fn balanced_market_echoes_the_previous_allocation() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_in(
        &dir.path().join("a"),
        "market",
        Some(&fixture("deficit.json")),
        &[],
    );
    assert_eq!(first.status.code(), Some(0));
    let previous = dir.path().join("a").join("exchange_solution.json");
    let out = run_in(
        &dir.path().join("b"),
        "market",
        Some(&fixture("balanced.json")),
        &["--previous", previous.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("regime=balanced case=frozen"));
    let before = read_json(previous);
    let after = read_json(dir.path().join("b").join("exchange_solution.json"));
    assert_eq!(after["case"], "frozen");
    for key in ["tau", "nectar", "pollen", "eta_cut"] {
        assert_eq!(before[key], after[key], "{key}");
    }

    let alone = run_in(
        &dir.path().join("c"),
        "market",
        Some(&fixture("balanced.json")),
        &[],
    );
    assert_eq!(alone.status.code(), Some(0));
    let idle = read_json(dir.path().join("c").join("exchange_solution.json"));
    assert!(idle["nectar"]["assignments"].as_array().unwrap().is_empty());
}

#[test]
fn infeasible_market_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "market", Some(&fixture("no_pollen.json")), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(text(&out.stderr).contains("no pollen resources"));
}

#[test]
fn scarce_pollen_keeps_foragers_in_reserve() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "market", Some(&fixture("scarce.json")), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let sol = read_json(dir.path().join("exchange_solution.json"));
    assert_eq!(sol["case"], "b_scarce");
    assert!(sol["pollen"]["reserve"].as_f64().unwrap() > 0.0);
}

#[test]
fn check_prints_derived_quantities() {
    let out = apiary(&["check"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    for needle in [
        "t_brood = 35.5 °C",
        "d_max = 10000 m",
        "r_target = ",
        "rho_crit",
        "pollen cut",
    ] {
        assert!(stdout.contains(needle), "missing {needle:?} in\n{stdout}");
    }
    assert!(out.stderr.is_empty());
}

#[test]
fn check_lists_every_violation() {
    let out = apiary(&[
        "check",
        "--set",
        "resources.0.density=0",
        "--set",
        "predation.d_max_local=20000",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = text(&out.stderr);
    assert!(
        stderr.contains("resource 1: density must be > 0"),
        "{stderr}"
    );
    assert!(stderr.contains("predation.d_max_local"), "{stderr}");
}

#[test]
fn overrides_match_edited_configs() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = apiary_core::sim::scenario::default_config();
    doc["horizon"] = 45.into();
    doc["colony"]["honey"] = 9000.0.into();
    doc["resources"][1]["bloom"] = serde_json::json!([10, 30]);
    let path = dir.path().join("edited.json");
    fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();

    let a = run_in(
        &dir.path().join("flags"),
        "run",
        None,
        &[
            "--set",
            "horizon=45",
            "--set",
            "colony.honey=9000",
            "--set",
            "resources.1.bloom=[10,30]",
        ],
    );
    let b = run_in(&dir.path().join("file"), "run", Some(&path), &[]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    for name in ["reports.csv", "summary.json"] {
        let x = fs::read(dir.path().join("flags").join(name)).unwrap();
        let y = fs::read(dir.path().join("file").join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn bad_arguments_are_config_errors() {
    assert_eq!(apiary(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(apiary(&["run"]).status.code(), Some(1));
    assert_eq!(
        apiary(&["run", "--out", "/tmp", "--set", "no-equals"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        apiary(&["check", "--config", "/does/not/exist.json"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(apiary(&["--help"]).status.code(), Some(0));
}

#[test]
fn log_level_comes_from_the_environment() {
    let quiet = apiary(&["check"]);
    assert!(!text(&quiet.stderr).contains("loaded scenario"));
    let loud = Command::new(env!("CARGO_BIN_EXE_apiary"))
        .arg("check")
        .env("APIARY_LOG", "info")
        .output()
        .unwrap();
    assert!(
        text(&loud.stderr).contains("loaded scenario"),
        "{}",
        text(&loud.stderr)
    );
}
