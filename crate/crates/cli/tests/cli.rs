use std::path::Path;
use std::process::{Command, Output};

use bvs_core::variation::p_variation;
use bvs_core::SampledFunction;
use serde_json::Value;

fn bvs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvs")).args(args).output().expect("spawn bvs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_kind(out: &Output) -> String {
    let rec: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["schema"], 1);
    rec["error"]["kind"].as_str().unwrap().to_string()
}

fn parse_profile(bytes: &[u8]) -> SampledFunction {
    let mut rdr = csv::Reader::from_reader(bytes);
    assert_eq!(rdr.headers().unwrap(), vec!["x", "u"]);
    let (mut xs, mut vs) = (Vec::new(), Vec::new());
    for r in rdr.records() {
        let r = r.unwrap();
        xs.push(r[0].parse().unwrap());
        vs.push(r[1].parse().unwrap());
    }
    SampledFunction::new(xs, vs).unwrap()
}

#[test]
fn packet_plateau() {
    let d = stdout_json(&bvs(&["packet", "--p", "2", "--dx", "0.1", "--delta", "0.5", "--t", "0.2", "--format", "json"]));
    let prof = d["profile"].as_array().unwrap();
    let peak = prof.iter().map(|r| r["u"].as_f64().unwrap()).fold(f64::MIN, f64::max);
    assert!((peak - 0.5).abs() < 1e-12, "{peak}");
    assert!(prof.iter().all(|r| r["u"].as_f64().unwrap().abs() <= 0.5 + 1e-12));
}

#[test]
fn variation_of_tent() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tent.csv");
    std::fs::write(&path, "x,u\n0,0\n1,1\n2,0\n").unwrap();
    let d = stdout_json(&bvs(&["variation", "--s", "0.5", "--input", path.to_str().unwrap(), "--format", "json"]));
    assert_eq!(d["value"].as_f64().unwrap(), 2.0);
    assert_eq!(d["p"].as_f64().unwrap(), 2.0);
}

#[test]
fn csv_profile_round_trips() {
    let out = bvs(&["riemann", "--left", "0", "--right", "1", "--t", "0.5", "--samples", "9"]);
    assert!(out.status.success());
    let f = parse_profile(&out.stdout);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    std::fs::write(&path, &out.stdout).unwrap();
    let d = stdout_json(&bvs(&["variation", "--s", "1", "--input", path.to_str().unwrap(), "--format", "json"]));
    let direct = p_variation(&f, 1.0).unwrap().value;
    assert_eq!(d["value"].as_f64().unwrap(), direct);
    assert!((direct - 1.0).abs() < 1e-12);
}

#[test]
fn outputs_are_deterministic() {
    let cases: [&[&str]; 3] = [
        &["triangular", "--t", "0.5", "--N", "8", "--pairs", "100", "--seed", "7", "--format", "json"],
        &["family", "--kind", "assp", "--t", "0.5", "--N", "4", "--format", "json"],
        &["oracle", "--t", "0.1,0.2", "--cells", "128"],
    ];
    for args in cases {
        let (a, b) = (bvs(args), bvs(args));
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["diverge", "--s", "0.5", "--N", "50"];
    let one = bvs(&[&args[..], &["--threads", "1"]].concat());
    let two = bvs(&[&args[..], &["--threads", "2"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn run_config_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"schema":1,"command":"oracle","args":{"t":[0.1,0.2],"cells":64,"alpha":"constant:0.5"},"format":"json"}"#,
    )
    .unwrap();
    let via_config = bvs(&["run", "--config", cfg.to_str().unwrap()]);
    let direct = bvs(&["oracle", "--t", "0.1,0.2", "--cells", "64", "--alpha", "constant:0.5", "--format", "json"]);
    assert!(via_config.status.success(), "{}", String::from_utf8_lossy(&via_config.stderr));
    assert_eq!(via_config.stdout, direct.stdout);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.csv");
    let out = bvs(&["bound", "--t", "1", "--a", "-1", "--b", "1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(Path::new(&path)).unwrap().starts_with("t,a,b,bound\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "{}").unwrap();
    let out = bvs(&["run", "--config", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "config");

    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"schema":1,"command":"packet","args":{"t":0.1,"colour":"red"}}"#).unwrap();
    assert_eq!(bvs(&["run", "--config", unknown.to_str().unwrap()]).status.code(), Some(2));

    let out = bvs(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "config");

    let out = bvs(&["oracle", "--t", "0.1", "--cfl", "2"]);
    assert_eq!(out.status.code(), Some(2));

    let out = bvs(&["bound", "--t", "2", "--T", "1", "--a", "0", "--b", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_kind(&out), "domain");

    let out = bvs(&["kk", "--t", "1.5", "--res", "16"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn help_exits_cleanly() {
    let out = bvs(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("oracle"));
}
