use std::path::PathBuf;
use std::process::{Command, Output};

use catdet::io::{loaded_document, parse_automaton, to_json};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn catdet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catdet")).args(args).output().expect("binary runs")
}

fn path(name: &str) -> String {
    fixture(name).to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn golden(args: &[&str], expected: &str) {
    let o = catdet(args);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    assert_eq!(o.stdout, std::fs::read(fixture(expected)).unwrap(), "{args:?}");
}

#[test]
fn det_matches_goldens() {
    golden(&["det", &path("example1.json")], "example1.det.json");
    golden(&["det", &path("example2.json")], "example2.det.json");
}

#[test]
fn mdet_matches_goldens() {
    golden(&["mdet", &path("example1.json")], "example1.mdet.json");
    golden(&["mdet", &path("example2.json")], "example2.mdet.json");
}

#[test]
fn lang_matches_goldens() {
    golden(&["lang", &path("example1.json"), "--max-len", "2", "--count"], "example1.lang.txt");
    golden(&["lang", &path("example2.json"), "--max-len", "6", "--count"], "example2.lang.txt");
}

#[test]
fn classical_matches_categorical_det() {
    golden(&["classical", &path("example1.nfa.json")], "example1.det.json");
}

#[test]
fn output_is_identical_across_runs() {
    let a = catdet(&["mdet", &path("example2.json"), "--expand"]);
    let b = catdet(&["mdet", &path("example2.json"), "--expand"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn fixtures_round_trip() {
    for name in ["example1.json", "example2.json", "example1.det.json", "example2.det.json", "example1.nfa.json"] {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let canonical = to_json(&loaded_document(&parse_automaton(&text).unwrap()));
        assert_eq!(to_json(&loaded_document(&parse_automaton(&canonical).unwrap())), canonical, "{name}");
        if name != "example1.nfa.json" {
            assert_eq!(canonical, text, "{name}");
        }
        let o = catdet(&["validate", &path(name)]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        assert_eq!(stdout(&o), "valid\n");
    }
}

#[test]
fn determinized_language_agrees() {
    for name in ["example1.json", "example2.json"] {
        let det = catdet(&["det", &path(name)]);
        let dir = std::env::temp_dir().join(format!("catdet-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join(format!("det-{name}"));
        std::fs::write(&file, &det.stdout).unwrap();
        let original = catdet(&["lang", &path(name), "--max-len", "6"]);
        let determinized = catdet(&["lang", file.to_str().unwrap(), "--max-len", "6"]);
        assert!(original.status.success() && determinized.status.success());
        assert_eq!(original.stdout, determinized.stdout, "{name}");
        std::fs::remove_dir_all(&dir).ok();
    }
}

#[test]
fn sim_check_verdicts() {
    let cases = [
        ("example1.identity.sim.json", "strict", 0),
        ("example1.identity.sim.json", "pseudo", 0),
        ("example1.canonical.sim.json", "lax", 0),
        ("example1.canonical.sim.json", "pseudo", 1),
        ("example1.swap.sim.json", "lax", 1),
        ("example1.det.identity.sim.json", "pseudo", 0),
    ];
    for (file, mode, code) in cases {
        let o = catdet(&["sim-check", &path(file), "--mode", mode]);
        assert_eq!(o.status.code(), Some(code), "{file} {mode}");
        if code == 0 {
            assert_eq!(stdout(&o), format!("holds ({mode})\n"));
        } else {
            assert!(stdout(&o).starts_with("fails at edge "));
            assert!(stderr(&o).starts_with("error[check-failed]: "));
        }
    }
}

#[test]
fn factor_through_det() {
    let o = catdet(&["factor", &path("example1.canonical.sim.json"), "--target", "det"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("\"composite_ok\": true"));
    let o = catdet(&["factor", &path("example1.canonical.sim.json"), "--target", "mdet"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[invalid-input]: "));
}

#[test]
fn input_errors_exit_with_two() {
    let o = catdet(&["det", "/nonexistent/automaton.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[io]: "));
    assert_eq!(stderr(&o).lines().count(), 1);

    let o = catdet(&["classical", &path("example1.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[invalid-input]: "));

    let o = catdet(&["det", &path("example1.json"), "--powerset-cap", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[limit-exceeded]: "));
}

#[test]
fn validate_reports_every_violation() {
    let dir = std::env::temp_dir().join(format!("catdet-validate-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("bad.json");
    let text = std::fs::read_to_string(fixture("example1.json"))
        .unwrap()
        .replacen("\"to\": \"2\"", "\"to\": \"9\"", 1)
        .replacen("\"initial\": \"1\"", "\"initial\": \"7\"", 1);
    std::fs::write(&file, text).unwrap();
    let o = catdet(&["validate", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.lines().count() >= 3, "{err}");
    assert!(err.lines().last().unwrap().starts_with("error[invalid]: "));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn dot_has_one_node_per_state_and_one_edge_per_token() {
    let o = catdet(&["dot", &path("example1.json")]);
    let text = stdout(&o);
    assert!(text.starts_with("digraph automaton {"));
    assert_eq!(text.lines().filter(|l| l.contains("shape=")).count(), 2);
    assert_eq!(text.lines().filter(|l| l.contains(" -> ")).count(), 4);
    let o = catdet(&["dot", &path("example1.det.json")]);
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.contains("shape=")).count(), 4);
    assert_eq!(text.lines().filter(|l| l.contains(" -> ")).count(), 8);
}

#[test]
fn laws_pass_on_a_small_run() {
    let o = catdet(&["laws", "--seed", "0", "--cases", "10"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("ok ")));
}
