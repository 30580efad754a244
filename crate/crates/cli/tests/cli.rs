//! The binaries driven as a user would.

use std::path::Path;
use std::process::{Command, Output};

const CHCFUZZ: &str = env!("CARGO_BIN_EXE_chcfuzz");
const FLIP: &str = env!("CARGO_BIN_EXE_flip-solver");

fn have_z3() -> bool {
    let ok = Command::new("z3").arg("-version").output().is_ok_and(|o| o.status.success());
    if !ok {
        eprintln!("z3 not found; skipping");
    }
    ok
}

fn corpus() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").display().to_string()
}

fn chcfuzz(args: &[&str]) -> Output {
    Command::new(CHCFUZZ).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn missing_seed_directory_is_a_harness_error() {
    let o = chcfuzz(&["fuzz", "--seeds", "/nonexistent/seeds"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/seeds"));
}

#[test]
fn missing_solver_is_a_harness_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().display().to_string();
    let o = chcfuzz(&["fuzz", "--seeds", &corpus(), "--out", &out, "--solver", "/nonexistent/z3", "--trace-profile", "z3-verbose"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("not found"));
}

#[test]
fn bad_option_values_are_rejected() {
    for args in [["-mutations", "everything"], ["-heuristic", "fastest"], ["-options", "loud"]] {
        let o = chcfuzz(&["fuzz", "--seeds", &corpus(), args[0], args[1]]);
        assert!(!o.status.success(), "{args:?}");
    }
}

#[test]
fn fuzz_reduce_and_stats_with_a_broken_solver() {
    if !have_z3() {
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out").display().to_string();
    let o = chcfuzz(&[
        "fuzz", "--seeds", &corpus(), "--out", &out, "--max-runs", "40", "--workers", "2", "--timeout", "5",
        "-mutations", "params", "-heuristic", "complex+rare-transitions", "--trace-profile", "z3-verbose",
        "--solver", FLIP, "--solver-arg=--marker", "--solver-arg=fp.", "--solver-arg=--solver", "--solver-arg=z3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("40 runs"), "{}", stdout(&o));

    let findings: Vec<_> = std::fs::read_dir(Path::new(&out).join("findings")).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(!findings.is_empty());
    let dir = &findings[0];
    let verdicts = std::fs::read_to_string(dir.join("verdicts.txt")).unwrap();
    assert!(verdicts.contains("truth: sat\nmutant: unsat"), "{verdicts}");

    let o = chcfuzz(&[
        "reduce", &dir.display().to_string(), "--trace-profile", "z3-verbose", "--timeout", "5",
        "--solver", FLIP, "--solver-arg=--marker", "--solver-arg=fp.", "--solver-arg=--solver", "--solver-arg=z3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["reduced.smt2", "reduced-chain.json", "reduction.log"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    // A toggled option is what triggers the stub, so one record must stay.
    assert!(stdout(&o).contains("-> 1 records"), "{}", stdout(&o));

    let o = chcfuzz(&["stats", &out]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("runs: 40\n"), "{}", stdout(&o));
}

#[test]
fn config_file_supplies_defaults() {
    if !have_z3() {
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("fuzz.toml");
    let out = tmp.path().join("out");
    std::fs::write(
        &cfg,
        format!(
            "seeds = {:?}\nout = {:?}\nmax-runs = 15\ntimeout = 5.0\nmutations = [\"own\"]\nequiprobable = true\ntrace-profile = \"z3-verbose\"\n",
            corpus(),
            out.display().to_string()
        ),
    )
    .unwrap();
    let o = chcfuzz(&["fuzz", "--config", &cfg.display().to_string()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = chcfuzz(&["stats", &out.display().to_string(), "--json"]);
    let json = stdout(&o);
    assert!(json.contains("\"runs\": 15"), "{json}");
    let snap: chcfuzz::scheduler::StatsSnapshot = chcfuzz::report::read_json(&out.join("stats.json")).unwrap();
    assert!(snap.weights.get("PARAM_TOGGLE").is_none_or(|w| w.applications == 0));
    assert!(snap.weights.values().all(|w| w.weight == 0.1));
}

#[test]
fn flip_solver_flips_only_marked_sat_answers() {
    if !have_z3() {
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let plain = tmp.path().join("plain.smt2");
    let marked = tmp.path().join("marked.smt2");
    let body = "(set-logic HORN)\n(declare-fun P (Int) Bool)\n(assert (forall ((x Int)) (=> (> x 0) (P x))))\n(check-sat)\n";
    std::fs::write(&plain, body).unwrap();
    std::fs::write(&marked, format!("(set-option :fp.spacer.ctp false)\n{body}")).unwrap();
    let run = |p: &Path| {
        let o = Command::new(FLIP).args(["--marker", "fp.", "--solver", "z3", &p.display().to_string()]).output().unwrap();
        stdout(&o)
    };
    assert_eq!(run(&plain).lines().next(), Some("sat"));
    assert_eq!(run(&marked), "unsat\n");
}
