use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_equimean"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn run_config(sub: &str, config: &str, out: &Path) -> Output {
    let path = configs().join(config);
    run(&[sub, "--config", path.to_str().unwrap()], out)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn estimate_lambda_of_arithmetic_mean() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("estimate-lambda", "estimate-lambda.json", dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(dir.path());
    let l = r["estimate"]["lambda_hat"].as_f64().unwrap();
    assert!((0.499..=0.501).contains(&l), "{l}");
    let csv = std::fs::read_to_string(dir.path().join("lambda.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("mean,lambda_hat"));
    assert!(csv.contains("\r\n"));
}

#[test]
fn chain_positional() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["chain", "1/8", "3/4"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(o.stdout.split(|&b| b == b'\n').next().unwrap()).unwrap();
    assert_eq!(v["s_chain"], serde_json::json!(["1/2^3", "1/2^2", "1/2^1"]));
    assert_eq!(v["t_chain"], serde_json::json!(["3/2^2", "1/2^1"]));
    assert_eq!(report(dir.path())["violations"], serde_json::json!([]));

    let o = run(&["chain", "3/4", "1/8"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["chain", "1/3", "1/2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dictator_fails_anonymity_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("verify-mean", "verify-mean-dictator.json", dir.path());
    assert_eq!(o.status.code(), Some(1));
    let r = report(dir.path());
    assert_eq!(r["passed"], false);
    assert_eq!(r["laws"][0]["law"], "M2");
    assert_eq!(r["laws"][0]["witness"].as_array().unwrap().len(), 2);
}

#[test]
fn example_configs_have_expected_outcomes() {
    let cases = [
        ("verify-mean", "verify-mean-negation.json", 0),
        ("chain", "chain.json", 0),
        ("build-homotopy", "build-homotopy.json", 0),
        ("verify-claim1", "verify-claim1.json", 0),
        ("verify-holder", "verify-holder.json", 0),
        ("symmetrize", "symmetrize.json", 0),
        ("deform-fixed", "deform-fixed.json", 0),
        ("solomonic-search", "solomonic-search.json", 0),
    ];
    for (sub, cfg, code) in cases {
        let dir = tempfile::tempdir().unwrap();
        let o = run_config(sub, cfg, dir.path());
        assert_eq!(o.status.code(), Some(code), "{cfg}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(report(dir.path())["experiment"], sub);
    }
    let dir = tempfile::tempdir().unwrap();
    run_config("solomonic-search", "solomonic-search.json", dir.path());
    assert_eq!(report(dir.path())["found"], true);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cases = [
        ("estimate-lambda", "estimate-lambda.json"),
        ("verify-mean", "verify-mean-dictator.json"),
        ("build-homotopy", "build-homotopy.json"),
        ("verify-holder", "verify-holder.json"),
        ("symmetrize", "symmetrize.json"),
        ("deform-fixed", "deform-fixed.json"),
        ("solomonic-search", "solomonic-search.json"),
    ];
    for (sub, cfg) in cases {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_config(sub, cfg, a.path());
        run_config(sub, cfg, b.path());
        let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            let x = std::fs::read(a.path().join(&name)).unwrap();
            let y = std::fs::read(b.path().join(&name)).unwrap();
            assert_eq!(x, y, "{cfg}: {name:?} differs");
        }
    }
}

#[test]
fn seed_flag_overrides_config() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let path = configs().join("verify-mean-dictator.json");
    let p = path.to_str().unwrap();
    run(&["verify-mean", "--config", p, "--seed", "1"], a.path());
    run(&["verify-mean", "--config", p, "--seed", "2"], b.path());
    assert_ne!(report(a.path())["laws"][0]["witness"], report(b.path())["laws"][0]["witness"]);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\n  \"mean\": \"arithmetic:2\",\n  \"colour\": 3\n}\n");
    let o = run(&["verify-mean", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("colour") && err.contains("line 3"), "{err}");

    let o = run(&["verify-mean"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["estimate-lambda", "--config", configs().join("chain.json").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let unknown_mean = write(dir.path(), "m.json", r#"{"space":{"kind":"interval","params":{"a":0,"b":1}},"mean":"median"}"#);
    assert_eq!(run(&["verify-mean", "--config", unknown_mean.to_str().unwrap()], dir.path()).status.code(), Some(2));

    let o = bin().arg("no-such-command").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eps_beyond_reach_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "eps.json",
        r#"{"space":{"kind":"interval","params":{"a":1,"b":2}},"mean":"geometric","lambda":0.5857864376269049,"theta":[2],"x":[1],"eps":1e-15}"#,
    );
    let o = run(&["build-homotopy", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("achievable"));
}

#[test]
fn undersized_lambda_fails_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "low.json",
        r#"{"space":{"kind":"interval","params":{"a":0,"b":1}},"mean":"arithmetic:2","lambda":0.3,"theta":[0],"x":[1]}"#,
    );
    let o = run(&["build-homotopy", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(report(dir.path())["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn lambda_is_estimated_when_absent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "est.json",
        r#"{"space":{"kind":"interval","params":{"a":0,"b":1}},"mean":"arithmetic:3","theta":[0],"x":[1],"lambda_config":{"grid_step":0.01}}"#,
    );
    let o = run(&["verify-claim1", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    assert_eq!(r["collapsed"], true);
    assert_eq!(r["lambda_source"], "estimate");
    assert!((r["lambda"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-2);

    let ms = write(dir.path(), "ms.json", r#"{"space":{"kind":"interval","params":{"a":0,"b":1}},"mean":"minsq","theta":[0],"x":[1],"lambda_config":{"grid_step":0.5}}"#);
    // min+square is not contractive: a coarse estimate is caught by the builder and the sweep fails.
    let o = run(&["verify-claim1", "--config", ms.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(report(dir.path())["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn failed_hypotheses_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let sym = write(
        dir.path(),
        "sym.json",
        r#"{"space":{"kind":"interval","params":{"a":-1,"b":1}},"action":{"kind":"negation"},"mean":"dictator:1","theta":[0.5]}"#,
    );
    let o = run(&["symmetrize", "--config", sym.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(report(dir.path())["error"].as_str().unwrap().contains("M2"));

    let def = write(
        dir.path(),
        "def.json",
        r#"{"space":{"kind":"box","params":{"lo":[-1,-1],"hi":[1,1]}},"action":{"kind":"reflection","axis":1},"mean":"arithmetic:2","retraction":{"coordinate_zero":0}}"#,
    );
    let o = run(&["deform-fixed", "--config", def.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn plot_is_deterministic_and_checks_its_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "line.json",
        r#"{"space":{"kind":"interval","params":{"a":0,"b":1}},"mean":"arithmetic:2","lambda":0.5,"theta":[0],"x":[1],"steps":16}"#,
    );
    let traj = dir.path().join("traj");
    assert_eq!(run(&["build-homotopy", "--config", cfg.to_str().unwrap()], &traj).status.code(), Some(0));
    let csv = traj.join("trajectory.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    let xs: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(xs.len(), 17);
    assert!(xs.windows(2).all(|w| w[1] < w[0]));

    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&["plot", "--input", csv.to_str().unwrap()], &a).status.code(), Some(0));
    assert_eq!(run(&["plot", "--input", csv.to_str().unwrap()], &b).status.code(), Some(0));
    let svg = std::fs::read(a.join("trajectory.svg")).unwrap();
    assert_eq!(svg, std::fs::read(b.join("trajectory.svg")).unwrap());
    let svg = String::from_utf8(svg).unwrap();
    assert!(svg.contains("version=\"1.1\"") && svg.contains("<polyline") && svg.contains("<polygon"));

    let empty = write(dir.path(), "empty.csv", "t,x0,certified_error\r\n");
    let o = run(&["plot", "--input", empty.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));
    for bad in ["a,b\r\n1,2\r\n", "t,x0,certified_error\r\n0,abc,0\r\n", "t,x0,certified_error\r\n0,1\r\n"] {
        let p = write(dir.path(), "bad.csv", bad);
        assert_eq!(run(&["plot", "--input", p.to_str().unwrap()], dir.path()).status.code(), Some(2), "{bad:?}");
    }
    let o = run(&["plot", "--input", dir.path().join("missing.csv").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn schema_lists_exactly_the_config_fields() {
    let o = bin().arg("schema").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let schema: Value = serde_json::from_slice(&o.stdout).unwrap();
    let mut props: Vec<String> = schema["properties"].as_object().unwrap().keys().cloned().collect();
    props.sort();

    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "x.json", r#"{"zzz": 1}"#);
    let err = String::from_utf8(run(&["verify-mean", "--config", p.to_str().unwrap()], dir.path()).stderr).unwrap();
    let listed = err.split("expected one of").nth(1).unwrap();
    let mut fields: Vec<String> = listed.split('`').skip(1).step_by(2).map(str::to_string).collect();
    fields.sort();
    assert_eq!(props, fields);
}

#[test]
fn guide_configs_run() {
    let guide = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../book/src/cli.md")).unwrap();
    let blocks: Vec<&str> = guide.split("```json").skip(1).map(|b| b.split("```").next().unwrap()).collect();
    assert_eq!(blocks.len(), 4);
    for block in blocks {
        let cfg: Value = serde_json::from_str(block).unwrap();
        let sub = cfg["experiment"].as_str().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "cfg.json", block);
        let o = run(&[sub, "--config", path.to_str().unwrap()], dir.path());
        let expected = if cfg["mean"] == "dictator:1" { 1 } else { 0 };
        assert_eq!(o.status.code(), Some(expected), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
