//! End-to-end tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockdesign"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn blocks(doc: &Value) -> &Vec<Value> {
    doc["blocks"].as_array().unwrap()
}

#[test]
fn construct_td_lines_and_verify() {
    let tmp = TempDir::new().unwrap();
    let out = bd(tmp.path(), &["construct", "td-lines", "--k", "5", "--p", "13", "-o", "td.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = read_json(&tmp.path().join("td.json"));
    assert_eq!(blocks(&doc).len(), 169);
    assert_eq!(code(&bd(tmp.path(), &["verify", "td.json", "--as", "td"])), 0);
    assert_eq!(
        code(&bd(tmp.path(), &["verify", "td.json", "--as", "blocking", "--system", "whole"])),
        0
    );
    // 4 is not prime
    let bad = bd(tmp.path(), &["construct", "td-lines", "--k", "5", "--p", "4", "-o", "x.json"]);
    assert_eq!(code(&bad), 2);
    assert!(!tmp.path().join("x.json").exists());
}

#[test]
fn construct_gdd_h16_block_count() {
    let tmp = TempDir::new().unwrap();
    let out =
        bd(tmp.path(), &["construct", "gdd-h16", "--h", "3", "--lambda", "1", "-o", "g.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = read_json(&tmp.path().join("g.json"));
    assert_eq!(blocks(&doc).len(), 11);
    assert_eq!(code(&bd(tmp.path(), &["verify", "g.json", "--as", "gdd"])), 0);
}

#[test]
fn verify_failure_and_parse_error() {
    let tmp = TempDir::new().unwrap();
    bd(tmp.path(), &["construct", "fixture", "--name", "fano", "-o", "fano.json"]);
    // drop one block: no longer pair-balanced
    let mut doc = read_json(&tmp.path().join("fano.json"));
    doc["blocks"].as_array_mut().unwrap().pop();
    std::fs::write(tmp.path().join("broken.json"), doc.to_string()).unwrap();
    let out = bd(tmp.path(), &["verify", "broken.json", "--as", "bibd"]);
    assert_eq!(code(&out), 1);
    assert!(!stderr(&out).trim().is_empty(), "witness expected");
    // but it is still a fine partial design
    assert_eq!(code(&bd(tmp.path(), &["verify", "broken.json", "--as", "partial-bibd"])), 0);

    std::fs::write(tmp.path().join("junk.json"), "{not json").unwrap();
    assert_eq!(code(&bd(tmp.path(), &["verify", "junk.json", "--as", "bibd"])), 3);
    assert_eq!(code(&bd(tmp.path(), &["verify", "absent.json", "--as", "bibd"])), 3);
}

#[test]
fn colour_fano() {
    let tmp = TempDir::new().unwrap();
    bd(tmp.path(), &["construct", "fixture", "--name", "fano", "-o", "fano.json"]);
    let exact = bd(tmp.path(), &["colour", "fano.json", "--exact", "-o", "col.json"]);
    assert_eq!(code(&exact), 0);
    assert!(stdout(&exact).contains("chi = 3"));
    let col = read_json(&tmp.path().join("col.json"));
    assert_eq!(col["c"], 3);
    assert_eq!(col["assignment"].as_object().unwrap().len(), 7);

    let greedy = bd(tmp.path(), &["colour", "fano.json", "--greedy", "--c", "2"]);
    assert_eq!(code(&greedy), 1);
    let greedy3 = bd(tmp.path(), &["colour", "fano.json", "--greedy", "--c", "3"]);
    assert_eq!(code(&greedy3), 0);
}

#[test]
fn search_blocking_positive_and_proven_absent() {
    let tmp = TempDir::new().unwrap();
    bd(tmp.path(), &["construct", "fixture", "--name", "fano", "-o", "fano.json"]);
    let absent = bd(tmp.path(), &["search-blocking", "fano.json", "--sizes", "3,2"]);
    assert_eq!(code(&absent), 1, "proven absent, not a budget failure");

    bd(tmp.path(), &["construct", "gdd-h16", "--h", "3", "--lambda", "1", "-o", "g.json"]);
    let found =
        bd(tmp.path(), &["search-blocking", "g.json", "--sizes", "3,3,3", "-o", "g2.json"]);
    assert_eq!(code(&found), 0, "{}", stderr(&found));
    let doc = read_json(&tmp.path().join("g2.json"));
    assert!(doc["blocking_systems"]["found"].is_array());
    assert_eq!(
        code(&bd(tmp.path(), &["verify", "g2.json", "--as", "blocking", "--system", "found"])),
        0
    );
}

fn write_trivial_fillers(dir: &Path, base: &Value, system: &str) -> Vec<String> {
    let groups = base["groups"].as_array().unwrap();
    let sets = base["blocking_systems"][system].as_array().unwrap();
    let mut args = Vec::new();
    for (i, g) in groups.iter().enumerate() {
        let pts: Vec<String> =
            g.as_array().unwrap().iter().map(|p| p.as_str().unwrap().to_string()).collect();
        let inter: Vec<Vec<String>> = sets
            .iter()
            .map(|s| {
                s.as_array()
                    .unwrap()
                    .iter()
                    .map(|p| p.as_str().unwrap().to_string())
                    .filter(|p| pts.contains(p))
                    .collect()
            })
            .collect();
        let doc = serde_json::json!({
            "format_version": 1,
            "kind": "bibd",
            "lambda": 1,
            "points": pts,
            "blocks": [pts],
            "blocking_systems": {"blocking": inter},
            "provenance": "trivial filler",
        });
        let name = format!("fill{}.json", i);
        std::fs::write(dir.join(&name), doc.to_string()).unwrap();
        args.push(format!("{}={}", i, name));
    }
    args
}

#[test]
fn compose_fill_td55() {
    let tmp = TempDir::new().unwrap();
    bd(tmp.path(), &["construct", "fixture", "--name", "td_5_5", "-o", "td55.json"]);
    let base = read_json(&tmp.path().join("td55.json"));
    let filler_args = write_trivial_fillers(tmp.path(), &base, "blocking");
    let mut args: Vec<String> =
        ["compose", "fill", "--base", "td55.json", "--base-system", "blocking", "-o", "filled.json"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    for f in &filler_args {
        args.push("--filler".into());
        args.push(f.clone());
    }
    let arg_refs: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    let out = bd(tmp.path(), &arg_refs);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = read_json(&tmp.path().join("filled.json"));
    assert_eq!(doc["points"].as_array().unwrap().len(), 25);
    assert_eq!(blocks(&doc).len(), 30);
    assert_eq!(code(&bd(tmp.path(), &["verify", "filled.json", "--as", "bibd"])), 0);
    assert_eq!(code(&bd(tmp.path(), &["verify", "filled.json", "--as", "blocking"])), 0);

    // missing ingredient file is an I/O failure, not a crash
    let missing = bd(
        tmp.path(),
        &[
            "compose", "fill", "--base", "td55.json", "--filler", "0=absent.json", "-o",
            "x.json",
        ],
    );
    assert_eq!(code(&missing), 3);
}

#[test]
fn compose_ladder_with_scan() {
    let tmp = TempDir::new().unwrap();
    bd(tmp.path(), &["construct", "fixture", "--name", "max_packing_6", "-o", "mp6.json"]);
    let out = bd(
        tmp.path(),
        &[
            "compose", "ladder", "--partial", "mp6.json", "--h", "1", "--lambda", "1",
            "--scan", "-o", "chain_",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let chis: Vec<u32> = text
        .lines()
        .filter_map(|l| l.strip_prefix("member "))
        .map(|l| l.split("chi = ").nth(1).unwrap().trim().parse().unwrap())
        .collect();
    assert!(chis.len() >= 2);
    for w in chis.windows(2) {
        assert!(w[0].abs_diff(w[1]) <= 1, "chromatic jump in {:?}", chis);
    }
    for i in 0..chis.len() {
        let f = format!("chain_{}.json", i);
        assert_eq!(code(&bd(tmp.path(), &["verify", &f, "--as", "bibd"])), 0);
    }
    assert_eq!(
        code(&bd(tmp.path(), &["verify", "chain_0.json", "--as", "blocking"])),
        0
    );
}

#[test]
fn lattice_reports() {
    let tmp = TempDir::new().unwrap();
    let alpha = bd(tmp.path(), &["lattice", "alpha", "--k", "5"]);
    assert_eq!(code(&alpha), 0);
    assert!(stdout(&alpha).contains("alpha = 4"));
    let beta = bd(tmp.path(), &["lattice", "beta", "--k", "5"]);
    assert!(stdout(&beta).contains("beta = 20"));

    let delta = bd(tmp.path(), &["lattice", "delta", "--k", "5", "--l", "4"]);
    assert_eq!(code(&delta), 0);
    assert!(stdout(&delta).contains("both positive: true"));
    // out of the supported range
    assert_eq!(code(&bd(tmp.path(), &["lattice", "delta", "--k", "4", "--l", "4"])), 2);

    let allow = bd(
        tmp.path(),
        &["lattice", "allowable", "--k", "4", "--g", "6", "--variant", "one-three"],
    );
    assert_eq!(code(&allow), 0);
    assert!(stdout(&allow).starts_with("feasible"));

    let tv = bd(
        tmp.path(),
        &["lattice", "typevec", "--k", "5", "--l", "5", "--family", "a"],
    );
    assert_eq!(code(&tv), 0);
    assert!(stdout(&tv).trim_end().ends_with("match"));
}

#[test]
fn catalogue_round_trip_and_integrity() {
    let tmp = TempDir::new().unwrap();
    bd(tmp.path(), &["construct", "fixture", "--name", "td_5_5", "-o", "td55.json"]);
    assert_eq!(code(&bd(tmp.path(), &["catalogue", "init", "--dir", "cat"])), 0);
    // empty list succeeds quietly
    let empty = bd(tmp.path(), &["catalogue", "list", "--dir", "cat"]);
    assert_eq!(code(&empty), 0);
    assert!(stdout(&empty).trim().is_empty());

    let add = bd(
        tmp.path(),
        &["catalogue", "add", "--name", "td55", "--file", "td55.json", "--dir", "cat"],
    );
    assert_eq!(code(&add), 0, "{}", stderr(&add));
    let list = bd(tmp.path(), &["catalogue", "list", "--dir", "cat"]);
    assert!(stdout(&list).contains("td55"));
    assert!(stdout(&list).contains("type=5^5"));
    assert_eq!(code(&bd(tmp.path(), &["catalogue", "check", "--dir", "cat"])), 0);

    // flip one byte in the stored file
    let stored = tmp.path().join("cat").join("td55.json");
    let mut bytes = std::fs::read(&stored).unwrap();
    let pos = bytes.iter().position(|&b| b == b'5').unwrap();
    bytes[pos] = b'6';
    std::fs::write(&stored, bytes).unwrap();
    let check = bd(tmp.path(), &["catalogue", "check", "--dir", "cat"]);
    assert_eq!(code(&check), 5);
    assert!(stderr(&check).contains("td55"), "failing entry is named");
}

#[test]
fn catalogue_env_var_default() {
    let tmp = TempDir::new().unwrap();
    let dir: PathBuf = tmp.path().join("envcat");
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_blockdesign"))
            .current_dir(tmp.path())
            .env("BLOCKDESIGN_CATALOGUE", &dir)
            .args(args)
            .output()
            .unwrap()
    };
    assert_eq!(run(&["catalogue", "init"]).status.code(), Some(0));
    assert!(dir.join("manifest.json").exists());
}

#[test]
fn identical_commands_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    for name in ["a.json", "b.json"] {
        let out = bd(tmp.path(), &["construct", "td-4-13", "-o", name]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(
        std::fs::read(tmp.path().join("a.json")).unwrap(),
        std::fs::read(tmp.path().join("b.json")).unwrap()
    );
    // a compose pipeline is deterministic too
    bd(tmp.path(), &["construct", "fixture", "--name", "max_packing_6", "-o", "mp6.json"]);
    for prefix in ["x_", "y_"] {
        let out = bd(
            tmp.path(),
            &["compose", "ladder", "--partial", "mp6.json", "--h", "1", "--lambda", "1", "-o", prefix],
        );
        assert_eq!(code(&out), 0);
    }
    assert_eq!(
        std::fs::read(tmp.path().join("x_0.json")).unwrap(),
        std::fs::read(tmp.path().join("y_0.json")).unwrap()
    );
}

#[test]
fn document_round_trip_is_stable() {
    let tmp = TempDir::new().unwrap();
    bd(tmp.path(), &["construct", "fixture", "--name", "sts9", "-o", "s9.json"]);
    let original = std::fs::read(tmp.path().join("s9.json")).unwrap();
    // re-serialize through the catalogue path
    bd(tmp.path(), &["catalogue", "init", "--dir", "cat"]);
    bd(tmp.path(), &["catalogue", "add", "--name", "s9", "--file", "s9.json", "--dir", "cat"]);
    let stored = std::fs::read(tmp.path().join("cat").join("s9.json")).unwrap();
    assert_eq!(original, stored);
}
