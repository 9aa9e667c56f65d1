use harmwarp_cli::commands::{run, Overrides};
use harmwarp_cli::config::{parse_config, FiberConfig, Format};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::Command;

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("cli-{name}"))
}

fn write(name: &str, v: &Value) -> String {
    let p = tmp(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p.to_string_lossy().into_owned()
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["harmwarp".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = harmwarp_cli::main_with(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn su2_check(eps: f64) -> Value {
    json!({
        "fiber": {"kind": "unimodular", "lambda": [1, 1, 1]},
        "field": {"kind": "left_invariant", "coeffs": [1, 0, 0]},
        "warp": {"kind": "epsilon_numeric", "eps": eps, "t0": 0, "f0": 1, "df0": 0, "domain": [-2, 2]},
        "phi": {"kind": "ivp", "t0": 0, "phi0": 0, "dphi0": 1},
        "check": {"tol": 1e-6}
    })
}

#[test]
fn minimal_heisenberg_config_round_trips() {
    let text = r#"{"fiber": {"kind": "unimodular", "lambda": [1, 0, 0]},
                   "field": {"kind": "left_invariant", "coeffs": [1, 0, 0]}}"#;
    let c = parse_config(text).unwrap();
    assert_eq!(c.fiber, FiberConfig::Unimodular { lambda: [1.0, 0.0, 0.0] });
    assert_eq!(c.output.format, Format::Json);
    assert_eq!(c.check.samples, 256);
    // Key order and whitespace do not change the hash.
    let again = parse_config(r#"{"field":{"coeffs":[1,0,0],"kind":"left_invariant"},"fiber":{"lambda":[1,0,0],"kind":"unimodular"}}"#)
        .unwrap();
    assert_eq!(c.hash(), again.hash());
    assert_eq!(c.hash().len(), 64);
}

#[test]
fn schema_violations_carry_json_paths() {
    let e = parse_config(r#"{"fiber": {"kind": "unimodular", "lambda": [1, 0]}}"#).unwrap_err();
    assert_eq!(e[0].path, "/fiber/lambda");

    let e = parse_config(r#"{"fiber": {"kind": "non_unimodular", "alpha": 0.5, "beta": 0, "delta": 1}}"#).unwrap_err();
    assert_eq!(e[0].path, "/fiber");
    assert!(e[0].message.contains("alpha >= delta"), "{}", e[0].message);

    let e = parse_config(r#"{"fiber": {"kind": "unimodular", "lambda": [1, 0, 0], "mu": 1}, "extra": {}}"#).unwrap_err();
    let paths: Vec<&str> = e.iter().map(|x| x.path.as_str()).collect();
    assert!(paths.contains(&"/fiber/mu") && paths.contains(&"/extra"), "{paths:?}");

    let e = parse_config(r#"{"fiber": {"kind": "unimodular", "lambda": [1, "x", 0]}}"#).unwrap_err();
    assert_eq!(e[0].path, "/fiber/lambda/1");

    let e = parse_config(r#"{"fiber": {"kind": "chart_family", "family": "RxH2", "alpha": 1},
                             "field": {"kind": "family_params", "eps": 0.5}}"#)
        .unwrap_err();
    let paths: Vec<&str> = e.iter().map(|x| x.path.as_str()).collect();
    assert_eq!(paths, ["/field/b", "/field/c"]);

    let e = parse_config(r#"{"fiber": {"kind": "unimodular", "lambda": [1, 0, 0]},
                             "warp": {"kind": "linear", "slope": 1}, "check": {"tol": -1}}"#)
        .unwrap_err();
    let paths: Vec<&str> = e.iter().map(|x| x.path.as_str()).collect();
    assert_eq!(paths, ["/warp/offset", "/check/tol"]);

    assert_eq!(parse_config("{").unwrap_err()[0].path, "");
}

#[test]
fn table1_has_six_rows() {
    let (code, out, _) = cli(&["--command", "table1"]);
    assert_eq!(code, 0);
    let mut r = csv::Reader::from_reader(out.as_bytes());
    assert_eq!(r.headers().unwrap(), vec!["signs", "group_id", "group"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(&rows[0][0], "+,+,+");
    assert_eq!(&rows[0][2], "SU(2) or SO(3)");
    assert_eq!(&rows[5][1], "R3");
}

#[test]
fn classify_su2_axis_gives_one_half() {
    let cfg = json!({"fiber": {"kind": "unimodular", "lambda": [1, 1, 1]},
                     "field": {"kind": "left_invariant", "coeffs": [1, 0, 0]}});
    let path = write("classify.json", &cfg);
    let (code, out, err) = cli(&["--config", &path, "--command", "classify"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    let cases = v["report"]["cases"].as_array().unwrap();
    assert_eq!(cases.len(), 1);
    assert_eq!(cases[0]["epsilon"], json!(0.5));
    assert_eq!(cases[0]["case_id"], json!("7"));
    assert_eq!(v["report"]["group"], json!("SU2_SO3"));
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(v["tolerances"]["classify_tol"], json!(1e-12));
}

#[test]
fn check_passes_on_the_right_eps_and_fails_on_a_wrong_one() {
    let good = write("good.json", &su2_check(0.5));
    let (code, out, _) = cli(&["--config", &good, "--command", "check"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["report"]["harmonicity"]["max_abs"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["tolerances"]["check_tol"], json!(1e-6));

    let bad = write("bad.json", &su2_check(1.0));
    let (code, out, err) = cli(&["--config", &bad, "--command", "check"]);
    assert_eq!(code, 1);
    assert!(err.is_empty());
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["report"]["harmonicity"]["max_abs"].as_f64().unwrap() > 1e-2);
    assert_eq!(v["report"]["harmonicity"]["verdict"], json!(false));
}

#[test]
fn tol_flag_overrides_the_config() {
    let good = write("tol.json", &su2_check(0.5));
    let (code, out, _) = cli(&["--config", &good, "--command", "check", "--tol", "1e-20"]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["tolerances"]["check_tol"], json!(1e-20));
}

#[test]
fn errors_exit_two_with_json_on_stderr() {
    let path = write("schema.json", &json!({"fiber": {"kind": "unimodular", "lambda": [1, 0]}}));
    let (code, out, err) = cli(&["--config", &path, "--command", "classify"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    let e: Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(e["error"]["kind"], json!("schema"));
    assert_eq!(e["error"]["violations"][0]["path"], json!("/fiber/lambda"));

    // Distinct lambdas: e1 + e2 would need two values of eps.
    let path = write("nocase.json", &json!({"fiber": {"kind": "unimodular", "lambda": [3, 2, 1]},
                                            "field": {"kind": "left_invariant", "coeffs": [1, 1, 0]}}));
    let (code, _, err) = cli(&["--config", &path, "--command", "classify"]);
    assert_eq!(code, 2);
    let e: Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(e["error"]["kind"], json!("harmonicity"));

    let (code, _, err) = cli(&["--command", "check"]);
    assert_eq!(code, 2);
    assert!(err.contains("needs --config"));
    let (code, _, err) = cli(&["--command", "nope"]);
    assert_eq!(code, 2);
    assert!(err.contains("\"usage\""));
    let (code, _, _) = cli(&["--command", "table1", "--config", "/nonexistent/x.json"]);
    assert_eq!(code, 2);
    let (code, _, _) = cli(&["--command", "table1", "--h", "-1"]);
    assert_eq!(code, 2);
}

#[test]
fn solve_emits_csv_grids() {
    let mut cfg = su2_check(0.5);
    cfg["output"] = json!({"format": "csv"});
    cfg["check"] = json!({"samples": 11});
    let path = write("solve.json", &cfg);
    let (code, out, _) = cli(&["--config", &path, "--command", "solve"]);
    assert_eq!(code, 0);
    let mut r = csv::Reader::from_reader(out.as_bytes());
    assert_eq!(r.headers().unwrap(), vec!["t", "f", "df", "d2f", "phi", "dphi"]);
    let rows: Vec<Vec<f64>> = r
        .records()
        .map(|x| x.unwrap().iter().map(|s| s.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    for row in &rows {
        // f f'' + 2 f'^2 = 1/2
        assert!((row[1] * row[3] + 2.0 * row[2] * row[2] - 0.5).abs() < 1e-9);
    }
}

#[test]
fn out_flag_writes_a_file() {
    let path = write("out.json", &su2_check(0.5));
    let target = tmp("report.json");
    let _ = std::fs::remove_file(&target);
    let (code, out, _) = cli(&["--config", &path, "--command", "check", "--out", target.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(v["command"], json!("check"));
}

#[test]
fn map_check_and_oracle_on_the_heisenberg_axis() {
    let cfg = json!({
        "fiber": {"kind": "unimodular", "lambda": [1, 0, 0]},
        "field": {"kind": "left_invariant", "coeffs": [1, 0, 0]},
        "warp": {"kind": "linear", "slope": 0.5, "offset": 1},
        "phi": {"kind": "euler", "c1": 0.5, "c2": 0.2},
        "oracle": {"points": 4, "t_window": [0.5, 2.0]},
        "seed": 3
    });
    let path = write("map.json", &cfg);
    let (code, out, err) = cli(&["--config", &path, "--command", "map-check"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["report"]["classification"]["printed_case"], json!("2"));
    let (code, out, err) = cli(&["--config", &path, "--command", "oracle", "--h", "1e-4"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["report"]["reports"].as_array().unwrap().len(), 3);
    assert_eq!(v["tolerances"]["oracle_steps"]["outer"], json!(1e-3));
    assert_eq!(v["seed"], json!(3));
}

#[test]
fn families_check_and_map_check() {
    let cfg = json!({
        "fiber": {"kind": "chart_family", "family": "H3"},
        "field": {"kind": "family_params", "kappa": 1.0, "kappa_prime": 0.5},
        "warp": {"kind": "linear", "slope": 0.5, "offset": 1},
        "phi": {"kind": "euler", "c1": 0.3, "c2": 0},
        "check": {"samples": 16}
    });
    let path = write("h3.json", &cfg);
    let (code, _, err) = cli(&["--config", &path, "--command", "check"]);
    assert_eq!(code, 0, "{err}");
    // A harmonic vector field, but not a harmonic map.
    let (code, _, err) = cli(&["--config", &path, "--command", "map-check"]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn two_dim_fiber_check_and_unsupported_map_check() {
    let cfg = json!({
        "fiber": {"kind": "two_dim", "kappa0": 1.0, "kappa1": 0.3},
        "warp": {"kind": "sqrt_quadratic", "kappa0": 0.5, "c1": 0, "c2": 1},
        "phi": {"kind": "ivp", "t0": 0, "phi0": 0, "dphi0": 1}
    });
    let path = write("twodim.json", &cfg);
    let (code, _, err) = cli(&["--config", &path, "--command", "check"]);
    assert_eq!(code, 0, "{err}");
    let (code, _, err) = cli(&["--config", &path, "--command", "map-check"]);
    assert_eq!(code, 2);
    assert!(err.contains("\"tension\""));
}

#[test]
fn sweep_runs_every_value_in_order() {
    let mut cfg = su2_check(0.5);
    cfg["sweep"] = json!({"path": "/warp/eps", "values": [0.25, 0.5, 1.0, -5.0], "command": "check"});
    let c = parse_config(&cfg.to_string()).unwrap();
    let out = run("sweep", Some(&c), &Overrides::default()).unwrap();
    let pts = out.report["report"]["points"].as_array().unwrap();
    let codes: Vec<i64> = pts.iter().map(|p| p["exit_code"].as_i64().unwrap()).collect();
    assert_eq!(codes[..3], [1, 0, 1]);
    assert_eq!(out.exit_code(), 0);
    // Each point carries its own config hash.
    assert_ne!(pts[0]["report"]["config_hash"], pts[1]["report"]["config_hash"]);
    let again = run("sweep", Some(&c), &Overrides::default()).unwrap();
    assert_eq!(out, again);

    cfg["sweep"]["path"] = json!("/warp/nope");
    let e = parse_config(&cfg.to_string()).unwrap_err();
    assert_eq!(e[0].path, "/sweep/path");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_harmwarp");
    let bad = write("bin-bad.json", &su2_check(1.0));
    let st = Command::new(bin).args(["--config", &bad, "--command", "check"]).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    let st = Command::new(bin).args(["--command", "table1"]).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&st.stdout).lines().count(), 7);
    let st = Command::new(bin).args(["--command", "classify"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
}
