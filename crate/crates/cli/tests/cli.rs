use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ssiv::report::{Report, Source};
use ssiv_core::checker::Outcome;

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn example(dir: &str) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(models().join(dir))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "sz"))
        .collect();
    files.sort();
    files
}

fn ssiv(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssiv")).current_dir(cwd).env_remove("SSIV_NUSMV").args(args).output().unwrap()
}

fn ssiv_with(cwd: &Path, args: &[&str], files: &[PathBuf]) -> Output {
    let mut all: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    all.extend(files.iter().map(|p| p.display().to_string()));
    let refs: Vec<&str> = all.iter().map(|s| s.as_str()).collect();
    ssiv(cwd, &refs)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_report(path: &Path) -> Report {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn check_example1_holds() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssiv_with(dir.path(), &["check", "--report", "r.json"], &example("example1"));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = read_report(&dir.path().join("r.json"));
    let f = &report.runs[0].formulas;
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].verdict, Outcome::Holds);
    assert!(f[0].trace.is_none());
    assert!(stdout(&out).contains("holds"));
}

#[test]
fn check_example2_reports_attack_path_that_replays() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssiv_with(dir.path(), &["check", "--report", "r.json"], &example("example2"));
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let report = read_report(&dir.path().join("r.json"));
    let f = &report.runs[0].formulas;
    assert_eq!(f.iter().map(|f| f.verdict).collect::<Vec<_>>(), [Outcome::Holds, Outcome::Fails]);
    let trace = f[1].trace.as_ref().expect("attack path");
    assert_eq!(trace.loop_start, None);
    let last = trace.steps.last().unwrap();
    assert_eq!(last.vars["m.vc"], serde_json::json!("VC_H"));
    assert!(last.fired.is_none());
    assert!(trace.steps[..trace.steps.len() - 1].iter().all(|s| s.fired.is_some()));

    let replayed = ssiv(dir.path(), &["replay", "r.json"]);
    assert_eq!(replayed.status.code(), Some(0), "{}{}", stdout(&replayed), stderr(&replayed));
    assert!(stdout(&replayed).contains("1/1 traces replay"));
}

#[test]
fn replay_rejects_tampered_traces() {
    let dir = tempfile::tempdir().unwrap();
    ssiv_with(dir.path(), &["check", "--report", "r.json"], &example("example2"));
    let report = read_report(&dir.path().join("r.json"));

    let mut values = report.clone();
    let step = &mut values.runs[0].formulas[1].trace.as_mut().unwrap().steps[2];
    step.vars.insert("m.vc".into(), serde_json::json!("VC_H"));
    std::fs::write(dir.path().join("vars.json"), serde_json::to_string(&values).unwrap()).unwrap();
    let out = ssiv(dir.path(), &["replay", "vars.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("recorded configuration differs"), "{}", stdout(&out));

    // Skipping a step keeps every configuration genuine but breaks the path.
    let mut skipped = report.clone();
    skipped.runs[0].formulas[1].trace.as_mut().unwrap().steps.remove(3);
    std::fs::write(dir.path().join("skip.json"), serde_json::to_string(&skipped).unwrap()).unwrap();
    let out = ssiv(dir.path(), &["replay", "skip.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("does not reach"), "{}", stdout(&out));

    let mut bogus = report;
    bogus.runs[0].formulas[1].trace.as_mut().unwrap().steps[0].fired.as_mut().unwrap().transition = 999;
    std::fs::write(dir.path().join("bogus.json"), serde_json::to_string(&bogus).unwrap()).unwrap();
    let out = ssiv(dir.path(), &["replay", "bogus.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("unknown transition"), "{}", stdout(&out));
}

#[test]
fn check_without_control_system_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.sz"), "").unwrap();
    let out = ssiv(dir.path(), &["check", "empty.sz"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no main control system"), "{}", stderr(&out));
}

#[test]
fn compile_errors_exit_2_with_locations() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.sz"), "varset V { x: bool }\nsystem S() over V {\n  A -> B\n  A = { x: 3 }\n}\n")
        .unwrap();
    let out = ssiv(dir.path(), &["check", "bad.sz"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.sz:"), "{}", stderr(&out));

    let out = ssiv(dir.path(), &["check", "missing.sz"]);
    assert_eq!(out.status.code(), Some(2));

    let out = ssiv_with(dir.path(), &["check", "-f", "AG (h.state = 3)"], &example("example1"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("<formula 1>"), "{}", stderr(&out));
}

#[test]
fn command_line_formulas_are_checked_and_ltl_is_delegated() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssiv_with(
        dir.path(),
        &["check", "-f", "ctl AG EF v.isDone", "-f", "ltl F h.isDone", "--smv-out", "ltl.smv", "--report", "r.json"],
        &example("example1"),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = read_report(&dir.path().join("r.json"));
    let f = &report.runs[0].formulas;
    assert_eq!(f.iter().map(|f| f.verdict).collect::<Vec<_>>(), [Outcome::Holds, Outcome::Holds, Outcome::Delegated]);
    assert_eq!(f[2].smv.as_deref(), Some("ltl.smv"));
    let smv = std::fs::read_to_string(dir.path().join("ltl.smv")).unwrap();
    assert_eq!(smv.matches("LTLSPEC").count(), 1);
    assert_eq!(smv.matches("CTLSPEC").count(), 2);
    match &report.runs[0].source {
        Source::Files { extra_formulas, .. } => assert_eq!(extra_formulas.len(), 2),
        other => panic!("unexpected source {other:?}"),
    }

    let out = ssiv_with(dir.path(), &["check", "-f", "AG !h.isDone"], &example("example1"));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reports_round_trip_and_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let runs = [
        ssiv_with(p, &["check", "--report", "a.json"], &example("example2")),
        ssiv_with(p, &["check", "--report", "b.json", "--jobs", "4"], &example("example2")),
        ssiv(p, &["scenario", "--all", "--trace-dir", "t1", "--report", "c.json"]),
        ssiv(p, &["scenario", "--all", "--trace-dir", "t2", "--report", "d.json"]),
    ];
    for r in &runs {
        assert!(r.status.code().is_some_and(|c| c <= 1), "{}", stderr(r));
    }
    for name in ["a.json", "c.json"] {
        let text = std::fs::read_to_string(p.join(name)).unwrap();
        let report: Report = serde_json::from_str(&text).unwrap();
        let again: Report = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
        assert_eq!(report, again);
    }
    let strip = |n: &str| read_report(&p.join(n)).without_timings();
    assert_eq!(strip("a.json"), strip("b.json"));
    assert_eq!(strip("c.json"), strip("d.json"));
    for entry in std::fs::read_dir(p.join("t1")).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(std::fs::read(p.join("t1").join(&name)).unwrap(), std::fs::read(p.join("t2").join(&name)).unwrap());
    }
}

#[test]
fn scenario_all_matches() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssiv(dir.path(), &["scenario", "--all", "--trace-dir", "traces", "--report", "r.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("14/14 scenarios match"));
    let report = read_report(&dir.path().join("r.json"));
    assert_eq!(report.runs.len(), 14);
    assert!(report.runs.iter().all(|r| r.expectation.as_ref().is_some_and(|e| e.matches)));

    let replayed = ssiv(dir.path(), &["replay", "r.json"]);
    assert_eq!(replayed.status.code(), Some(0), "{}", stdout(&replayed));
}

#[test]
fn scenario_writes_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssiv(dir.path(), &["scenario", "vm-upload-mitm"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = std::fs::read_to_string(dir.path().join("traces/vm-upload-mitm.f1.txt")).unwrap();
    assert!(text.lines().last().unwrap().contains("m.vc=\"VC_H\""), "{text}");

    let out = ssiv(dir.path(), &["scenario", "dos-vm", "--trace-format", "json", "--trace-dir", "j"]);
    assert_eq!(out.status.code(), Some(0));
    let trace: ssiv::report::TraceReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("j/dos-vm.f0.json")).unwrap()).unwrap();
    assert!(trace.loop_start.is_some());
}

#[test]
fn baseline_runs_hold() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssiv(dir.path(), &["scenario", "--all", "--baseline", "--report", "r.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let report = read_report(&dir.path().join("r.json"));
    for run in &report.runs {
        assert!(run.formulas.iter().all(|f| f.verdict == Outcome::Holds), "{}", run.system);
    }
    let replayed = ssiv(dir.path(), &["replay", "r.json"]);
    assert_eq!(replayed.status.code(), Some(0));
}

#[test]
fn unknown_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssiv(dir.path(), &["scenario", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown scenario"));
}

#[test]
fn scenario_with_mismatching_expectation_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("lib");
    copy_dir(&models(), &root);
    let manifest = root.join("scenarios/vm-upload.toml");
    let text = std::fs::read_to_string(&manifest).unwrap().replace("holds = true", "holds = false");
    std::fs::write(&manifest, text).unwrap();
    let models = root.display().to_string();
    let out = ssiv(dir.path(), &["scenario", "vm-upload", "--models", &models]);
    assert_eq!(out.status.code(), Some(1), "{}{}", stdout(&out), stderr(&out));
    assert!(stdout(&out).contains("MISMATCH"));
    let out = ssiv(dir.path(), &["list", "--models", &models]);
    assert_eq!(stdout(&out).lines().count(), 14);
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let dst = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &dst);
        } else {
            std::fs::copy(entry.path(), dst).unwrap();
        }
    }
}

#[test]
fn cross_check_needs_nusmv() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssiv(dir.path(), &["scenario", "vm-upload", "--cross-check"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("SSIV_NUSMV"));
}

#[test]
fn emit_writes_deterministic_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = ssiv_with(p, &["emit", "--format", "smv"], &example("example1"));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let first = std::fs::read_to_string(p.join("main.smv")).unwrap();
    assert!(first.contains("MODULE main"));
    assert_eq!(first.matches("CTLSPEC").count(), 1);
    ssiv_with(p, &["emit", "--format", "smv", "--out", "again.smv"], &example("example1"));
    assert_eq!(first, std::fs::read_to_string(p.join("again.smv")).unwrap());

    let out = ssiv_with(p, &["emit", "--format", "dot"], &example("example1"));
    assert_eq!(out.status.code(), Some(0));
    let dot = std::fs::read_to_string(p.join("main.dot")).unwrap();
    assert!(dot.starts_with("digraph"));

    let out = ssiv(p, &["emit", "--format", "smv", "--scenario", "dos-vm", "--out", "dos.smv"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::read_to_string(p.join("dos.smv")).unwrap().contains("MODULE main"));
}

#[test]
fn emit_to_unwritable_path_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("no/such/dir/main.smv").display().to_string();
    let out = ssiv_with(dir.path(), &["emit", "--format", "smv", "--out", &target], &example("example1"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("main.smv"));
}

#[test]
fn list_prints_every_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssiv(dir.path(), &["list"]);
    assert_eq!(out.status.code(), Some(0));
    let ids: Vec<String> = stdout(&out).lines().map(|l| l.split_whitespace().next().unwrap().to_string()).collect();
    assert_eq!(ids.len(), 14);
    assert!(ids.contains(&"vm-upload".to_string()));
    assert!(ids.contains(&"mitm-sk-vm".to_string()));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ssiv(dir.path(), &["check"]).status.code(), Some(2));
    assert_eq!(ssiv(dir.path(), &["scenario"]).status.code(), Some(2));
    assert_eq!(ssiv(dir.path(), &["scenario", "x", "--all"]).status.code(), Some(2));
    assert_eq!(ssiv(dir.path(), &["emit", "--format", "pdf", "a.sz"]).status.code(), Some(2));
}
