use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use stable_sde::cli::help_text;
use stable_sde::experiments::{parse_configs, run_experiment};
use stable_sde::functionals::Thresholds;
use stable_sde::integral_tests::kernel_integral;
use stable_sde::rng::stream;
use stable_sde::sde::{classify_sde_at, solve_with};
use stable_sde::stable::sample_path_with;
use stable_sde::{FunctionSpec, GridSpec, IntervalSet, StableParams};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stable-sde"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stable-sde-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Set `UPDATE_GOLDEN=1` to regenerate after an intended flag change.
#[test]
fn help_matches_golden_file() {
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/help.txt");
    let help = help_text();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
        std::fs::write(&golden, &help).unwrap();
    }
    let expected = std::fs::read_to_string(&golden).unwrap();
    assert_eq!(
        help, expected,
        "help output changed; rerun with UPDATE_GOLDEN=1 if intended"
    );
}

#[test]
fn help_enumerates_every_flag() {
    let help = help_text();
    for flag in [
        "--seed",
        "--threads",
        "--out",
        "--override",
        "--config",
        "--alpha",
        "--z",
        "--horizon",
        "--step",
        "--grid",
        "--killing",
        "--sigma",
        "--big-m",
        "--escape-radius",
        "--beta",
        "--f",
        "--domain",
        "--eps",
        "--tol",
        "--set",
        "--nmax",
        "--nmin",
        "--center",
        "--lambda",
        "--keep",
    ] {
        assert!(help.contains(flag), "help lacks {flag}");
    }
}

#[test]
fn binary_exit_codes() {
    let ok = bin(&["test", "--alpha", "0.5", "--beta", "0.5"]);
    assert_eq!(ok.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(v["value"], 8.0);

    let usage = bin(&["frobnicate"]);
    assert_eq!(usage.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&usage.stderr).unwrap();
    assert_eq!(err["error"], "usage");

    let invalid = bin(&["classify", "--alpha", "0.5", "--sigma", "power:|x|^oops"]);
    assert_eq!(invalid.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&invalid.stderr).unwrap();
    assert_eq!(err["error"], "malformed_function");
    assert!(invalid.stdout.is_empty());

    let io = bin(&["wiener", "--config", "/nonexistent/w.json"]);
    assert_eq!(io.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&io.stderr).unwrap();
    assert_eq!(err["error"], "io");
}

#[test]
fn out_flag_writes_file() {
    let path = scratch("classify.json");
    let o = bin(&[
        "classify",
        "--alpha",
        "0.5",
        "--sigma",
        "power:|x|^0.5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["unique_all"], false);
    assert_eq!(v["global_all"], true);
}

#[test]
fn simulate_matches_library() {
    let o = bin(&[
        "--seed",
        "17",
        "simulate",
        "--alpha",
        "0.7",
        "--z",
        "-1",
        "--horizon",
        "2",
        "--step",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let path = sample_path_with(
        &StableParams::new(0.7).unwrap(),
        -1.0,
        2.0,
        &GridSpec::uniform(0.1),
        None,
        &mut stream(17, 0),
    )
    .unwrap();
    assert_eq!(stdout(&o), path.to_csv());
}

#[test]
fn solve_matches_library() {
    let o = bin(&[
        "--seed",
        "5",
        "solve",
        "--alpha",
        "0.5",
        "--sigma",
        "power:|x-1|^0.5*2",
        "--z",
        "0.2",
        "--horizon",
        "3",
        "--step",
        "0.05",
        "--big-m",
        "1e6",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let thresholds = Thresholds {
        big_m: 1e6,
        ..Thresholds::default()
    };
    let sol = solve_with(
        0.5,
        &FunctionSpec::parse("power:|x-1|^0.5*2").unwrap(),
        0.2,
        3.0,
        &GridSpec::uniform(0.05),
        thresholds,
        None,
        &mut stream(5, 0),
    )
    .unwrap();
    assert_eq!(stdout(&o), sol.to_csv());
}

#[test]
fn classify_and_test_match_library() {
    let o = bin(&[
        "classify",
        "--alpha",
        "0.3",
        "--sigma",
        "indicator:complement:[1,2)",
        "--z",
        "0,1.5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let report = classify_sde_at(
        0.3,
        &FunctionSpec::parse("indicator:complement:[1,2)").unwrap(),
        &[0.0, 1.5],
    )
    .unwrap();
    let expected = format!("{}\n", serde_json::to_string_pretty(&report).unwrap());
    assert_eq!(stdout(&o), expected);

    let o = bin(&["test", "--alpha", "0.5", "--f", "power:|x|^-0.2", "--domain", "[-1,1)"]);
    assert_eq!(o.status.code(), Some(0));
    let verdict = kernel_integral(
        0.5,
        0.0,
        &FunctionSpec::power(1.0, -0.2, 0.0),
        &IntervalSet::interval(-1.0, 1.0),
        1e-10,
    )
    .unwrap();
    let expected = format!("{}\n", serde_json::to_string_pretty(&verdict).unwrap());
    assert_eq!(stdout(&o), expected);
}

#[test]
fn experiment_matches_library_and_thread_count() {
    let cfg = r#"[{"alpha":0.5,"sigma":"power:|x|^1.5","z":[0,2],"replicates":200,"horizon":2,
                  "step":0.02,"estimator":"freeze_prob","seed":3},
                 {"alpha":0.6,"f":"const:1","z":-1,"replicates":200,"horizon":20,"step":0.05,
                  "estimator":"hitting_prob","target":"[1,2)","seed":4}]"#;
    let path = scratch("sweep.json");
    std::fs::write(&path, cfg).unwrap();
    let one = bin(&["--threads", "1", "experiment", "--config", path.to_str().unwrap()]);
    let four = bin(&["--threads", "4", "experiment", "--config", path.to_str().unwrap()]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let mut direct = Vec::new();
    run_experiment(&parse_configs(cfg).unwrap(), &mut direct, 2).unwrap();
    assert_eq!(one.stdout, direct);

    // --seed overrides every config's seed
    let reseeded = bin(&["--seed", "99", "experiment", "--config", path.to_str().unwrap()]);
    let text = stdout(&reseeded);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",99")));
}

#[test]
fn config_overrides_and_flags_compose() {
    let path = scratch("wiener.json");
    std::fs::write(&path, r#"{"alpha": 0.9, "set": "[1,2)", "nmax": 5}"#).unwrap();
    let from_file = bin(&["wiener", "--config", path.to_str().unwrap()]);
    assert_eq!(from_file.status.code(), Some(0));
    let overridden = bin(&["-D", "alpha=0.5", "wiener", "--config", path.to_str().unwrap()]);
    let flagged = bin(&[
        "-D",
        "alpha=0.9",
        "wiener",
        "--config",
        path.to_str().unwrap(),
        "--alpha",
        "0.5",
    ]);
    let direct = bin(&["wiener", "--alpha", "0.5", "--set", "[1,2)", "--nmax", "5"]);
    assert_ne!(from_file.stdout, direct.stdout);
    assert_eq!(overridden.stdout, direct.stdout);
    assert_eq!(flagged.stdout, direct.stdout);

    std::fs::write(&path, r#"{"alpha": 0.5, "set": "[1,2)", "bogus": 1}"#).unwrap();
    let bad = bin(&["wiener", "--config", path.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&bad.stderr).unwrap();
    assert_eq!(err["error"], "config");
}
