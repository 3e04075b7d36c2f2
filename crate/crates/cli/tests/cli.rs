use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use trex_core::code::CodeConfig;
use trex_core::trevisan::{extract, plan_params_with};
use trex_core::BitString;

fn trex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trex")).args(args).env_remove("TREX_THREADS").output().expect("spawn trex")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn no_arguments_is_a_usage_error() {
    let out = trex(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(trex(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(trex(&["design", "--m", "x", "--l", "3"]).status.code(), Some(1));
}

#[test]
fn infeasible_plan_exits_2() {
    let out = trex(&["plan", "--n", "1048576", "--k", "1048576", "--b", "1024", "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["status"], "infeasible");
}

#[test]
fn design_passes_its_own_check() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("design.json");
    let out = trex(&["design", "--m", "16", "--l", "8", "--r", "4", "--out", path(&file)]);
    assert_eq!(out.status.code(), Some(0));
    let d = json(&out);
    assert_eq!(d["sets"].as_array().unwrap().len(), 16);
    assert_eq!(d["l"], 8);

    let check = trex(&["design", "--check", path(&file)]);
    assert_eq!(check.status.code(), Some(0));
    assert_eq!(json(&check)["valid"], true);

    // Two sets sharing five of eight elements.
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"t":11,"l":8,"r":4,"sets":[[0,1,2,3,4,5,6,7],[0,1,2,3,4,8,9,10]]}"#).unwrap();
    assert_eq!(trex(&["design", "--check", path(&bad)]).status.code(), Some(3));
}

#[test]
fn plan_design_extract_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.json");
    let design = dir.path().join("design.json");
    let source = dir.path().join("source.bin");
    let output = dir.path().join("out.bin");
    let plan = trex(&[
        "plan",
        "--n",
        "16",
        "--k",
        "16",
        "--b",
        "1",
        "--eps",
        "0.7",
        "--c-field",
        "desk",
        "--mult",
        "10",
        "--out",
        path(&params),
    ]);
    assert_eq!(plan.status.code(), Some(0));
    let planned = json(&plan);
    assert_eq!(planned["status"], "feasible");
    assert_eq!(planned["t"], 27);
    let d = trex(&["design", "--m", "2", "--l", "14", "--r", "1", "--out", path(&design)]);
    assert_eq!(d.status.code(), Some(0));

    std::fs::write(&source, [0xef, 0xbe]).unwrap();
    let seed_hex = "a1b2c307";
    let out = trex(&[
        "extract",
        "--in",
        path(&source),
        "--seed",
        seed_hex,
        "--params",
        path(&params),
        "--design",
        path(&design),
        "--out",
        path(&output),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let p = plan_params_with(16, 16, 1, 0.7, 15.0, 10.0, &CodeConfig::desk()).unwrap().feasible().unwrap();
    let f = BitString::from_u64(0xbeef, 16);
    let y = BitString::from_hex(seed_hex, p.t).unwrap();
    let want = extract(&f, &y, &p).unwrap();
    assert_eq!(json(&out)["output"], want.to_string());
    assert_eq!(std::fs::read(&output).unwrap(), want.to_bytes_lsb());

    // The plan alone carries a design, so extract also works without --design.
    let again = trex(&["extract", "--in", path(&source), "--seed", seed_hex, "--params", path(&params)]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(json(&again)["output"], want.to_string());
}

#[test]
fn encode_bit_agrees_with_encode() {
    let dir = tempfile::tempdir().unwrap();
    let word = dir.path().join("word.bin");
    let base = ["--n", "4", "--delta", "0.25", "--c-field", "desk", "--bits", "1011"];
    let mut args = vec!["encode"];
    args.extend(base);
    args.extend(["--out", path(&word)]);
    let out = trex(&args);
    assert_eq!(out.status.code(), Some(0));
    let nbar = json(&out)["nbar"].as_u64().unwrap();
    let bytes = std::fs::read(&word).unwrap();
    let w = BitString::from_bytes_lsb(&bytes, nbar as usize).unwrap();
    for j in [0u64, 3, 17, 128, 255] {
        let js = j.to_string();
        let mut args = vec!["encode-bit"];
        args.extend(base);
        args.extend(["--j", js.as_str()]);
        let bit = json(&trex(&args))["bit"].as_u64().unwrap();
        assert_eq!(bit == 1, w.get(j as usize), "position {j}");
    }
}

#[test]
fn field_table_lists_moduli() {
    let out = trex(&["field-table"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "s=3 modulus=0b1011"));
    assert!(text.lines().any(|l| l == "s=8 modulus=0b100011011"));
}

#[test]
fn hash_verification_meets_the_bound() {
    let out = trex(&["verify", "--extractor", "hash", "--n", "5", "--k", "3", "--m", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["within_lhl_bound"], true);
    assert_eq!(v["certificate"]["holds"], true);
}

#[test]
fn same_seed_same_report() {
    let runs: [&[&str]; 4] = [
        &["--rng-seed", "0x2a", "rac", "--experiment", "amplify", "--trials", "2000"],
        &["--rng-seed", "9", "rac", "--experiment", "avgcase", "--n", "16", "--trials", "500"],
        &[
            "--rng-seed",
            "9",
            "verify",
            "--extractor",
            "bitselect",
            "--n",
            "8",
            "--k",
            "6",
            "--mode",
            "sampled",
            "--budget",
            "500",
        ],
        &["--rng-seed", "5", "reconstruct", "--trials", "2", "--advantage-trials", "256"],
    ];
    for args in runs {
        let a = trex(args);
        let b = trex(args);
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let sampled = |seed: &'static str| {
        trex(&[
            "--rng-seed",
            seed,
            "verify",
            "--extractor",
            "bitselect",
            "--n",
            "8",
            "--k",
            "6",
            "--mode",
            "sampled",
            "--budget",
            "50",
        ])
    };
    let (x, y) = (sampled("1"), sampled("2"));
    assert_ne!(x.stdout, y.stdout);
}

#[test]
fn thread_count_does_not_change_reports() {
    let args = ["--rng-seed", "3", "reconstruct", "--trials", "1", "--advantage-trials", "256"];
    let seq = Command::new(env!("CARGO_BIN_EXE_trex")).args(args).env("TREX_THREADS", "1").output().unwrap();
    let par = trex(&args);
    assert!(seq.status.success());
    assert_eq!(seq.stdout, par.stdout);
    assert_eq!(trex(&["--threads", "0", "field-table"]).status.code(), Some(1));
}
