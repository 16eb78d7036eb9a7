use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hominduce_cli::commands::{cmd_gen, instance_from_file};
use hominduce_cli::io::{parse_instance, to_json, tower_from_file, tower_to_file, GeneratorSpec, TowerFile};
use proptest::prelude::*;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hominduce"))
}

fn workdir(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn spec(kind: &str, dga: Option<&str>) -> GeneratorSpec {
    GeneratorSpec { kind: kind.into(), dga: dga.map(Into::into), n: None, cutoff: None, base: None, seed: None, keep: vec![], brk: vec![], side: None }
}

fn interval_text() -> String {
    to_json(&cmd_gen(&spec("interval", Some("exterior:1"))).unwrap())
}

#[test]
fn instance_files_round_trip_byte_for_byte() {
    for s in [spec("trivial", Some("exterior:2")), spec("interval", Some("dual")), spec("interval", Some("odd-ideal:1")), spec("grassmann", None)] {
        let text = to_json(&cmd_gen(&s).unwrap());
        let inst = instance_from_file(&parse_instance(&text).unwrap()).unwrap();
        assert_eq!(to_json(&hominduce_cli::io::instance_to_file(&inst)), text);
    }
}

#[test]
fn tower_files_round_trip() {
    let dir = workdir("tower-round-trip");
    std::fs::write(dir.join("i.json"), interval_text()).unwrap();
    let out = run(&dir, &["tower", "i.json", "--method", "hmi-sc", "--k1", "2/3", "--k2", "-1", "-N", "5", "-o", "t.json"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.join("t.json")).unwrap();
    let file: TowerFile = serde_json::from_str(&text).unwrap();
    let tower = tower_from_file(&file).unwrap();
    assert_eq!(tower.max_arity(), 5);
    assert_eq!(tower_to_file(&tower, 5).products, file.products);
    assert_eq!(run(&dir, &["verify", "t.json"]).status.code(), Some(0));
}

#[test]
fn exit_codes() {
    let dir = workdir("exit-codes");
    std::fs::write(dir.join("i.json"), interval_text()).unwrap();
    std::fs::write(dir.join("bad.json"), "{\"schema_version\": 1, \"kind\": \"inst").unwrap();
    assert_eq!(run(&dir, &["gen", "perturbed", "--base", "i.json", "--seed", "7", "--break", "SC_right", "-o", "p.json"]).status.code(), Some(0));

    let gate = run(&dir, &["tower", "p.json", "--method", "hmi-sc", "--k1", "1", "--k2", "1", "-N", "6"]);
    assert_eq!(gate.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&gate.stdout).contains("the Homotopy Module-Induction gives an"));

    let ht = run(&dir, &["tower", "i.json", "--method", "ht", "-N", "6", "--format", "text"]);
    assert_eq!(ht.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ht.stdout).contains("vanishing higher products = [3,4,5,6]"));

    let massey = run(&dir, &["massey", "i.json", "--k1", "1", "--k2", "-1", "-N", "4"]);
    assert_eq!(massey.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&massey.stdout).unwrap();
    assert!(report["findings"].as_array().unwrap().iter().any(|f| f["name"] == "𝖬_2 = 0" && f["value"] == true));

    let generic = run(&dir, &["hochschild", "i.json", "--k1", "2", "--k2", "3", "-N", "4"]);
    assert_eq!(generic.status.code(), Some(0));

    assert_eq!(run(&dir, &["verify", "bad.json"]).status.code(), Some(2));
    assert_eq!(run(&dir, &["tower", "missing.json"]).status.code(), Some(2));
    assert_eq!(run(&dir, &["tower", "i.json", "--method", "nope"]).status.code(), Some(2));
    assert_eq!(run(&dir, &["massey", "i.json", "--k1", "1/0"]).status.code(), Some(2));
    assert_eq!(run(&dir, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&dir, &["gen", "perturbed", "--base", "i.json", "--keep", "WSC", "--break", "SC_right"]).status.code(), Some(1));
    let capped = bin().args(["verify", "i.json"]).current_dir(&dir).env("HOMINDUCE_MAX_DIM", "4").output().unwrap();
    assert_eq!(capped.status.code(), Some(2));
}

#[test]
fn generator_spec_json_matches_flags() {
    let dir = workdir("gen-spec");
    std::fs::write(dir.join("spec.json"), r#"{"kind": "interval", "dga": "exterior:1"}"#).unwrap();
    let out = run(&dir, &["gen", "--spec", "spec.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), interval_text());
    std::fs::write(dir.join("bad.json"), r#"{"kind": "interval", "colour": 3}"#).unwrap();
    assert_eq!(run(&dir, &["gen", "--spec", "bad.json"]).status.code(), Some(2));
}

fn leaves(v: &Value, path: String, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| leaves(x, format!("{path}/{k}"), out)),
        Value::Array(a) => {
            if a.is_empty() {
                out.push(path.clone());
            }
            a.iter().enumerate().for_each(|(i, x)| leaves(x, format!("{path}/{i}"), out));
        }
        _ => out.push(path),
    }
}

fn replacement(k: u8) -> Value {
    match k % 10 {
        0 => Value::from(-1),
        1 => Value::from(1_000_000_000u64),
        2 => Value::from("1/0"),
        3 => Value::from("x"),
        4 => Value::from("-2/3"),
        5 => Value::Null,
        6 => Value::Array(vec![]),
        7 => Value::from(7),
        8 => Value::from(i32::MAX),
        _ => Value::from("0"),
    }
}

fn loads_without_panic(text: &str) -> bool {
    catch_unwind(AssertUnwindSafe(|| {
        if let Ok(f) = parse_instance(text) {
            let _ = instance_from_file(&f);
        }
        if let Ok(f) = serde_json::from_str::<TowerFile>(text) {
            let _ = tower_from_file(&f);
        }
    }))
    .is_ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn mutated_instances_never_panic(pick in any::<usize>(), k in any::<u8>()) {
        let text = interval_text();
        let mut v: Value = serde_json::from_str(&text).unwrap();
        let mut paths = vec![];
        leaves(&v, String::new(), &mut paths);
        let path = &paths[pick % paths.len()];
        *v.pointer_mut(path).unwrap() = replacement(k);
        prop_assert!(loads_without_panic(&v.to_string()));
    }

    #[test]
    fn truncated_files_never_panic(cut in any::<usize>()) {
        let text = interval_text();
        let mut end = cut % text.len();
        while !text.is_char_boundary(end) {
            end -= 1;
        }
        prop_assert!(loads_without_panic(&text[..end]));
    }
}

#[test]
fn mutated_towers_never_panic() {
    let dir = workdir("tower-fuzz");
    std::fs::write(dir.join("i.json"), interval_text()).unwrap();
    run(&dir, &["tower", "i.json", "--method", "ht", "-N", "4", "-o", "t.json"]);
    let text = std::fs::read_to_string(dir.join("t.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let mut paths = vec![];
    leaves(&v, String::new(), &mut paths);
    for (i, path) in paths.iter().enumerate() {
        let mut w = v.clone();
        *w.pointer_mut(path).unwrap() = replacement(i as u8);
        assert!(loads_without_panic(&w.to_string()), "panic after replacing {path}");
    }
}
