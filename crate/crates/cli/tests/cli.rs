use std::io::Write;
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use sha2::{Digest, Sha256};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_beamforge"));
    for k in ["LLM_API_BASE", "LLM_API_KEY", "LLM_MODEL", "LLM_ENABLED", "BEAMFORGE_SCENARIO"] {
        c.env_remove(k);
    }
    c
}

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = bin().args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn check_golden(name: &str, got: &str) {
    let path = golden("tests/golden").join(name);
    if std::env::var_os("BEAMFORGE_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, got).unwrap();
    }
    assert_eq!(got, std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden {name}")));
}

#[test]
fn compare_json_golden_and_csv_matches_library() {
    let o = run(&["compare", "--scenario", "synth:42", "--offline", "--json"], "");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    check_golden("compare_seed42.json", &stdout(&o));

    let o = run(&["compare", "--scenario", "synth:42", "--offline"], "");
    let lib = std::fs::read_to_string(golden("../core/tests/golden/comparison_seed42.csv")).unwrap();
    assert_eq!(stdout(&o), lib);
}

#[test]
fn chat_transcript_golden() {
    let o = run(&["chat", "--scenario", "synth:42", "--offline"], "enhance north, suppress south\nyes\n");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("== result =="));
    check_golden("chat_seed42.txt", &out);
}

#[test]
fn chat_json_keeps_stdout_machine_readable() {
    let o = run(&["chat", "--offline", "--json"], "boost the north and suppress the south\nok\n");
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["bright_sites"], serde_json::json!([7, 8]));
    assert!(v["max_dark_db"].as_f64().unwrap() <= 30.5);
}

#[test]
fn unconfirmed_chat_is_a_validation_failure() {
    let o = run(&["chat", "--offline", "--max-rounds", "2"], "boost the north\nno, boost the east instead\nno, boost the west\n");
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["chat", "--offline"], "");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gen_is_reproducible_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<PathBuf> = ["a.jsonl", "b.jsonl"].iter().map(|n| dir.path().join(n)).collect();
    for p in &paths {
        let o = run(&["gen", "--sites", "6", "--grid", "8x6", "--seed", "7", "--out", p.to_str().unwrap()], "");
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());

    let file = paths[0].to_str().unwrap();
    let o = run(&["compare", "--scenario", file, "--offline", "--intent", "boost site 1, suppress site 4"], "");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["heatmap", "--scenario", file, "--offline"], "");
    assert_eq!(o.status.code(), Some(1), "heatmaps need a synthetic scenario");
}

#[test]
fn build_cache_matches_library_digest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.bin");
    let o = run(&["build-cache", "--scenario", "synth:42", "--out", out.to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(0));
    let digest: String = Sha256::digest(std::fs::read(&out).unwrap()).iter().map(|b| format!("{b:02x}")).collect();
    let want = std::fs::read_to_string(golden("../core/tests/golden/cache_seed42.sha256")).unwrap();
    assert_eq!(digest + "\n", want);
}

#[test]
fn batch_commands_are_byte_reproducible() {
    for args in [
        &["sweep", "--offline", "--param", "threshold", "--values", "25,35"][..],
        &["ablate", "--offline", "--json"][..],
        &["heatmap", "--offline", "--res", "6"][..],
    ] {
        let (a, b) = (run(args, ""), run(args, ""));
        assert_eq!(a.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["compare", "--scenario", "synth:abc"], "").status.code(), Some(1));
    assert_eq!(run(&["compare", "--scenario", "/no/such/file.jsonl"], "").status.code(), Some(2));
    assert_eq!(run(&["compare", "--offline", "--intent", "hello"], "").status.code(), Some(1));
    assert_eq!(run(&["sweep", "--offline", "--param", "rounds", "--values", "0"], "").status.code(), Some(1));
    assert_eq!(run(&["compare", "--offline", "--threshold", "NaN"], "").status.code(), Some(1));
    assert_eq!(run(&["frobnicate"], "").status.code(), Some(1));
    assert_eq!(run(&["--help"], "").status.code(), Some(0));
}

#[test]
fn offline_never_touches_the_network() {
    // a configured, enabled endpoint that records any connection attempt
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let mut cmd = bin();
    cmd.env("LLM_API_BASE", &base).env("LLM_API_KEY", "k").env("LLM_ENABLED", "1");
    let o = cmd.args(["compare", "--offline"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(listener.accept().is_err(), "offline run connected to the endpoint");
}
