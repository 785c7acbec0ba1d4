use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clap::CommandFactory;
use moduli::cli::Cli;
use moduli::fixtures::{fixture_set, VERSION};
use moduli::formats::spec::{parse_spec_str, serialize_spec};
use moduli::formats::Mode;
use moduli::report::CURVE_HEADER;

const BLESS_ENV: &str = "MODULI_BLESS";

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn committed_fixtures() -> PathBuf {
    repo_root().join("fixtures").join(VERSION)
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn bless() -> bool {
    std::env::var_os(BLESS_ENV).is_some()
}

fn moduli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moduli"))
        .args(args)
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env_remove("MODULI_JOBS")
        .output()
        .expect("spawn moduli")
}

/// Copies the committed fixtures into a fresh directory.
fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (rel, _) in fixture_set() {
        let to = dir.path().join("fixtures").join(VERSION).join(&rel);
        std::fs::create_dir_all(to.parent().unwrap()).unwrap();
        std::fs::copy(committed_fixtures().join(&rel), to).unwrap();
    }
    dir
}

fn check_golden(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if bless() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}; regenerate with {BLESS_ENV}=1", path.display()));
    assert_eq!(
        actual, want,
        "{name} differs from golden; regenerate with {BLESS_ENV}=1 if intended"
    );
}

#[test]
fn generated_fixtures_match_committed() {
    for (rel, text) in fixture_set() {
        let path = committed_fixtures().join(&rel);
        if bless() {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &text).unwrap();
            continue;
        }
        let committed =
            std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(
            text, committed,
            "{rel} drifted; regenerate with {BLESS_ENV}=1"
        );
    }
}

#[test]
fn fixtures_round_trip_byte_exact() {
    for (rel, text) in fixture_set() {
        let spec = parse_spec_str(&text, Path::new(&rel), Mode::Strict)
            .unwrap_or_else(|e| panic!("{rel}: {e}"));
        assert_eq!(serialize_spec(&spec), text, "{rel}");
    }
}

#[test]
fn golden_outputs() {
    let ws = workspace();
    let d = ws.path();
    let f = format!("fixtures/{VERSION}");
    let agent = format!("{f}/agents/quadratic.json");
    let out = moduli(
        d,
        &[
            "eval",
            "--agent",
            &agent,
            "--battery",
            &format!("{f}/aai/reasoning-q.json"),
            "--n",
            "200",
            "--seed",
            "1",
            "--out",
            "eval.csv",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    check_golden(
        "eval.csv",
        &std::fs::read_to_string(d.join("eval.csv")).unwrap(),
    );

    let out = moduli(
        d,
        &[
            "eval",
            "--agent",
            &format!("{f}/agents/bandit.json"),
            "--battery",
            &format!("{f}/bandit/control-b.json"),
            "--n",
            "200",
            "--seed",
            "1",
            "--lambda",
            "0.1",
            "--beta",
            "0.5",
            "--out",
            "bandit.csv",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    check_golden(
        "bandit.csv",
        &std::fs::read_to_string(d.join("bandit.csv")).unwrap(),
    );

    let out = moduli(
        d,
        &[
            "gvu",
            "analyze",
            "--config",
            &format!("{f}/gvu/quadratic.json"),
            "--replicas",
            "100",
            "--eta-grid",
            "0.01:0.1:3",
            "--out",
            "analyze.json",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    check_golden(
        "analyze.json",
        &std::fs::read_to_string(d.join("analyze.json")).unwrap(),
    );

    let out = moduli(
        d,
        &[
            "gvu", "run", "--preset", "rl", "--steps", "20", "--out", "rl.csv",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    check_golden(
        "rl-trace.csv",
        &std::fs::read_to_string(d.join("rl.csv")).unwrap(),
    );

    let out = moduli(
        d,
        &[
            "aai",
            "--agent",
            &agent,
            "--gates",
            &format!("{f}/gates/placeholder.json"),
            "--batteries",
            &format!("{f}/aai"),
            "--n",
            "200",
            "--out",
            "aai.json",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(13),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    check_golden(
        "aai.json",
        &std::fs::read_to_string(d.join("aai.json")).unwrap(),
    );
}

fn visible_args(cmd: &clap::Command) -> Vec<&clap::Arg> {
    cmd.get_arguments()
        .filter(|a| !a.is_hide_set() && !matches!(a.get_id().as_str(), "help" | "version"))
        .collect()
}

fn check_help(cmd: &clap::Command, path: &[String], bad: &mut Vec<String>) {
    let mut args: Vec<String> = path.to_vec();
    args.push("--help".into());
    let out = moduli(
        Path::new("."),
        &args.iter().map(String::as_str).collect::<Vec<_>>(),
    );
    let help = String::from_utf8_lossy(&out.stdout).into_owned();
    for a in visible_args(cmd) {
        let name = format!("{}::{}", path.join(" "), a.get_id());
        if a.get_help().is_none() {
            bad.push(format!("{name}: no help text"));
        }
        let shown = match a.get_long() {
            Some(l) => help.contains(&format!("--{l}")),
            None => help.contains(&a.get_id().to_string().to_uppercase()),
        };
        if !shown {
            bad.push(format!("{name}: missing from --help"));
        }
    }
    for sub in cmd.get_subcommands() {
        if sub.get_name() == "help" {
            continue;
        }
        if sub.get_about().is_none() {
            bad.push(format!(
                "{} {}: no about text",
                path.join(" "),
                sub.get_name()
            ));
        }
        let mut p = path.to_vec();
        p.push(sub.get_name().to_string());
        check_help(sub, &p, bad);
    }
}

#[test]
fn every_argument_is_documented() {
    let mut cmd = Cli::command();
    cmd.build();
    let mut bad = Vec::new();
    check_help(&cmd, &[], &mut bad);
    assert!(bad.is_empty(), "{bad:#?}");
}

fn edit_fixture(
    rel: &str,
    edit: impl FnOnce(&mut serde_json::Value),
) -> (tempfile::TempDir, PathBuf) {
    let ws = workspace();
    let path = ws.path().join("fixtures").join(VERSION).join(rel);
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    edit(&mut v);
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    (ws, path)
}

fn eval_with(dir: &Path, battery: &Path, extra: &[&str]) -> Output {
    let agent = format!("fixtures/{VERSION}/agents/quadratic.json");
    let battery = battery.to_str().unwrap();
    let mut args = vec![
        "eval",
        "--agent",
        &agent,
        "--battery",
        battery,
        "--n",
        "10",
        "--out",
        "e.csv",
    ];
    args.extend_from_slice(extra);
    moduli(dir, &args)
}

#[test]
fn overweight_sampling_law_is_rejected() {
    let (ws, path) = edit_fixture("aai/reasoning-q.json", |v| {
        v["sampling_law"][0]["weight"] = serde_json::Value::String("1.1".into());
    });
    let out = eval_with(ws.path(), &path, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sampling_law"), "{err}");
    assert!(!ws.path().join("e.csv").exists());
}

#[test]
fn unknown_fields_are_rejected_unless_permissive() {
    let (ws, path) = edit_fixture("aai/reasoning-q.json", |v| {
        v["foo"] = serde_json::Value::Bool(true);
    });
    let out = eval_with(ws.path(), &path, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("foo"), "{err}");
    let out = eval_with(ws.path(), &path, &["--permissive"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn missing_input_is_an_io_error() {
    let ws = workspace();
    let out = eval_with(ws.path(), Path::new("nope.json"), &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn curves_csv_matches_report_json_exactly() {
    let ws = workspace();
    let d = ws.path();
    let out = moduli(
        d,
        &[
            "gvu",
            "analyze",
            "--config",
            &format!("fixtures/{VERSION}/gvu/quadratic.json"),
            "--replicas",
            "50",
            "--out",
            "r/a.json",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("r/a.json")).unwrap()).unwrap();
    let csv = std::fs::read_to_string(d.join("r/a.curves.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.join(","), CURVE_HEADER);
    let curve = json["curve"].as_array().unwrap();
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), curve.len());
    for (row, point) in rows.iter().zip(curve) {
        for (col, cell) in header.iter().zip(row.split(',')) {
            let from_csv: f64 = cell.parse().unwrap();
            let from_json = point[*col].as_f64().unwrap();
            assert_eq!(from_csv.to_bits(), from_json.to_bits(), "{col}");
        }
    }
}

#[test]
fn manifest_records_inputs_and_outputs() {
    let ws = workspace();
    let d = ws.path();
    let battery = format!("fixtures/{VERSION}/aai/planning-q.json");
    let out = eval_with(d, Path::new(&battery), &["--jobs", "3", "--seed", "4"]);
    assert!(out.status.success());
    let m = moduli::manifest::read_manifest(&d.join("e.csv.manifest.json")).unwrap();
    assert_eq!(m.seed_root, Some(4));
    assert!(!m.command.iter().any(|a| a.contains("jobs")));
    assert_eq!(m.outputs.len(), 1);
    assert_eq!(m.inputs.len(), 2);
    assert!(moduli::manifest::verify(&m, d).unwrap().is_empty());
}

#[test]
fn aborted_flow_exits_numerical() {
    let (ws, path) = edit_fixture("gvu/quadratic.json", |v| {
        v["eta"] = serde_json::json!(1e300);
        v["generator_noise"] = serde_json::json!({ "isotropic": 1e300 });
    });
    let out = moduli(
        ws.path(),
        &[
            "gvu",
            "run",
            "--config",
            path.to_str().unwrap(),
            "--out",
            "t.csv",
        ],
    );
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(3), "{err}");
    assert!(ws.path().join("t.csv").exists());
}
