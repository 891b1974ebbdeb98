use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn network(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/networks")
        .join(format!("{name}.json"))
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn zics(args: &[&str]) -> Run {
    zics_env(args, &[])
}

fn zics_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_zics"));
    cmd.args(args).env_remove("ZICS_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_prints_reactions() {
    let net = network("wilhelm");
    let r = zics(&[
        "validate",
        "--network",
        path_str(&net),
        "--space",
        "X=0:50,Y=0:40",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("Y -> 2 X (k=35)"));
    assert!(r.stdout.contains("X -> 0 (k=9.74)"));
    assert!(r.stdout.contains("valid"));
}

#[test]
fn validate_shape_mismatch_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{"species": ["X", "Y"],
            "reactant_stoich": [[0,1],[2,0],[1,1,0]],
            "product_stoich": [[2,0],[1,1],[0,1]],
            "rate_constants": [35, 1, 1]}"#,
    )
    .unwrap();
    let r = zics(&[
        "validate",
        "--network",
        path_str(&path),
        "--space",
        "0:5,0:5",
    ]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("reactant row 2"), "{}", r.stderr);
}

#[test]
fn validate_negative_rate_is_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("neg.json");
    fs::write(
        &path,
        r#"{"species": ["X"], "reactions": [
            {"reactants": {"X": 1}, "products": {"X": 2}, "rate": -1.0},
            {"reactants": {"X": 1}, "products": {}, "rate": 1.0}]}"#,
    )
    .unwrap();
    let r = zics(&["validate", "--network", path_str(&path), "--space", "X=0:5"]);
    assert_eq!(r.code, 2);
    assert!(
        r.stderr.contains("negative propensity -5 at state [5]"),
        "{}",
        r.stderr
    );
}

#[test]
fn bad_space_is_usage_error() {
    let net = network("wilhelm");
    for space in ["X=0:50", "X=0:50,Z=0:4", "0-5,0:4"] {
        let r = zics(&["validate", "--network", path_str(&net), "--space", space]);
        assert_eq!(r.code, 1, "{space}");
    }
}

#[test]
fn transform_michaelis_menten() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("open.json");
    let r = zics(&[
        "transform",
        "--network",
        path_str(&network("michaelis_menten_closed")),
        "--totals",
        "E_T=10",
        "S_T=20",
        "--dependent",
        "S:E",
        "P",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        fs::read_to_string(network("michaelis_menten_open")).unwrap()
    );
}

#[test]
fn transform_open_network_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("same.json");
    let input = network("wilhelm");
    let r = zics(&[
        "transform",
        "--network",
        path_str(&input),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&input).unwrap());
}

#[test]
fn transform_nonlinear_dependence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dimer.json");
    fs::write(
        &path,
        r#"{"species": ["A", "B"], "reactions": [
            {"reactants": {"A": 2}, "products": {"B": 1}, "rate": 1.0},
            {"reactants": {"B": 1}, "products": {"A": 2}, "rate": 1.0}]}"#,
    )
    .unwrap();
    let r = zics(&[
        "transform",
        "--network",
        path_str(&path),
        "--totals",
        "A_T=10",
        "--dependent",
        "A",
    ]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("coefficient 2"), "{}", r.stderr);
}

#[test]
fn moments_text_csv_and_order_zero() {
    let r = zics(&[
        "moments",
        "--network",
        path_str(&network("birth_death")),
        "--order",
        "1",
        "--format",
        "text",
    ]);
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout.trim(), "d<X>/dt = 4 - 2*<X>");

    let r = zics(&[
        "moments",
        "--network",
        path_str(&network("wilhelm")),
        "--order",
        "2",
        "--format",
        "csv",
    ]);
    assert_eq!(r.code, 0);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].contains("{X^3}"), "{}", lines[0]);

    let r = zics(&[
        "moments",
        "--network",
        path_str(&network("birth_death")),
        "--order",
        "0",
    ]);
    assert_eq!(r.code, 1);
}

#[test]
fn solve_birth_death_and_warm_start() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let net = network("birth_death");
    let r = zics(&[
        "solve",
        "--network",
        path_str(&net),
        "--space",
        "X=0:30",
        "--max-order",
        "6",
        "--out",
        path_str(&first),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.lines().any(|l| l == "X: 2.000000"), "{}", r.stdout);
    for f in [
        "marginals.csv",
        "marginal_X.csv",
        "distribution.csv",
        "moments.csv",
        "lambdas.json",
        "manifest.json",
    ] {
        assert!(first.join(f).exists(), "{f}");
    }
    let moments = fs::read_to_string(first.join("moments.csv")).unwrap();
    assert!(moments.starts_with("moment_label,value,lambda\n"));

    let second = dir.path().join("second");
    let r = zics(&[
        "solve",
        "--network",
        path_str(&net),
        "--space",
        "X=0:30",
        "--max-order",
        "6",
        "--warm-start",
        path_str(&first.join("lambdas.json")),
        "--out",
        path_str(&second),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(second.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outcome"]["order_used"], 6);
    assert!(manifest["outcome"]["total_iterations"].as_u64().unwrap() <= 2);
    assert_eq!(manifest["network"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn solve_failure_is_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let r = zics(&[
        "solve",
        "--network",
        path_str(&network("birth_death")),
        "--space",
        "X=0:3",
        "--initial-order",
        "12",
        "--max-order",
        "12",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(r.code, 2, "{}", r.stderr);
}

#[test]
fn oracle_cme_schema_matches_solver() {
    let dir = tempfile::tempdir().unwrap();
    let net = network("birth_death");
    let r = zics(&[
        "oracle",
        "--network",
        path_str(&net),
        "--space",
        "0:30",
        "--cme",
        "--out",
        path_str(&dir.path().join("cme")),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = fs::read_to_string(dir.path().join("cme/marginal_X.csv")).unwrap();
    let p0: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!((p0 - 0.135335).abs() < 1e-6);

    let r = zics(&[
        "solve",
        "--network",
        path_str(&net),
        "--space",
        "0:30",
        "--max-order",
        "4",
        "--out",
        path_str(&dir.path().join("solve")),
        "--plot",
        "--overlay",
        path_str(&dir.path().join("cme/marginals.csv")),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    for f in ["marginals.csv", "distribution.csv", "moments.csv"] {
        let a = fs::read_to_string(dir.path().join("cme").join(f)).unwrap();
        let b = fs::read_to_string(dir.path().join("solve").join(f)).unwrap();
        assert_eq!(a.lines().next(), b.lines().next(), "{f}");
    }
    let svg = fs::read_to_string(dir.path().join("solve/marginal_X.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 31);
}

#[test]
fn oracle_cap_is_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let r = zics(&[
        "oracle",
        "--network",
        path_str(&network("wilhelm")),
        "--space",
        "0:50,0:40",
        "--cme",
        "--cap",
        "1000",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("above the cap"), "{}", r.stderr);
}

#[test]
fn oracle_ssa_is_deterministic_and_respects_threads() {
    let dir = tempfile::tempdir().unwrap();
    let net = network("wilhelm");
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let r = zics_env(
            &[
                "oracle",
                "--network",
                path_str(&net),
                "--space",
                "X=0:50,Y=0:40",
                "--ssa",
                "--seed",
                "1",
                "--time",
                "200",
                "--out",
                path_str(&out),
            ],
            &[("ZICS_THREADS", threads)],
        );
        assert_eq!(r.code, 0, "{}", r.stderr);
        out
    };
    let a = run("a", "1");
    let b = run("b", "3");
    for f in ["marginals.csv", "distribution.csv", "moments.csv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], 3);
}

#[test]
fn oracle_requires_a_method() {
    let r = zics(&[
        "oracle",
        "--network",
        path_str(&network("birth_death")),
        "--space",
        "0:30",
        "--out",
        "unused",
    ]);
    assert_eq!(r.code, 1);
}
