use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ssiv_core::checker::{self, replay, step_label, Outcome, Verdict};
use ssiv_core::codegen::{emit_dot, emit_nusmv, run_nusmv};
use ssiv_core::frontend::{compile, SourceFile};
use ssiv_core::graph::{compose_async, concretize, Composition, ExploreOptions, Lts};
use ssiv_core::library::{compare, Library, LoadedScenario};
use ssiv_core::logic::Logic;

use crate::report::{
    state_maps, ExpectationReport, ExtraFormula, FormulaReport, Report, Run, Source, Stats, TraceReport,
    SCHEMA_VERSION,
};
use crate::{
    CheckArgs, Cli, Command, EmitArgs, EmitFormat, ExploreArgs, ListArgs, ReplayArgs, ScenarioArgs, TraceFormat,
    EXIT_ERROR, EXIT_FAIL, EXIT_OK,
};

/// Error that aborts a command with [`EXIT_ERROR`].
type Fatal = String;

/// Runs one command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Scenario(a) => cmd_scenario(a),
        Command::Emit(a) => cmd_emit(a),
        Command::List(a) => cmd_list(a),
        Command::Replay(a) => cmd_replay(a),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_ERROR
        }
    }
}

fn nusmv_binary(flag: &Option<PathBuf>) -> Option<PathBuf> {
    flag.clone().or_else(|| std::env::var_os("SSIV_NUSMV").filter(|v| !v.is_empty()).map(PathBuf::from))
}

fn read_sources(paths: &[PathBuf]) -> Result<Vec<SourceFile>, Fatal> {
    paths
        .iter()
        .map(|p| {
            fs::read_to_string(p)
                .map(|text| SourceFile::new(p.display().to_string(), text))
                .map_err(|e| format!("{}: {e}", p.display()))
        })
        .collect()
}

fn write_file(path: &Path, text: &str) -> Result<(), Fatal> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Splits an optional leading `ctl`/`ltl` keyword off a command-line formula.
fn parse_extra(text: &str) -> ExtraFormula {
    let t = text.trim();
    for (kw, logic) in [("ctl", Logic::Ctl), ("ltl", Logic::Ltl)] {
        if let Some(rest) = t.strip_prefix(kw) {
            if rest.starts_with(char::is_whitespace) {
                return ExtraFormula { logic: Some(logic), text: rest.trim().to_string() };
            }
        }
    }
    ExtraFormula { logic: None, text: t.to_string() }
}

fn compose_files(paths: &[PathBuf], extra: &[ExtraFormula]) -> Result<Composition, Fatal> {
    let files = read_sources(paths)?;
    let extra: Vec<(Option<Logic>, String)> = extra.iter().map(|f| (f.logic, f.text.clone())).collect();
    let compiled = compile(&files, &extra).map_err(|(e, table)| e.render(&table))?;
    compose_async(&compiled.program).map_err(|e| e.to_string())
}

enum LibHandle {
    Builtin,
    Dir(Library),
}

impl LibHandle {
    fn open(models: &Option<PathBuf>) -> Result<LibHandle, Fatal> {
        match models {
            None => Ok(LibHandle::Builtin),
            Some(dir) => Library::from_dir(dir).map(LibHandle::Dir).map_err(|e| e.to_string()),
        }
    }

    fn get(&self) -> &Library {
        match self {
            LibHandle::Builtin => Library::builtin(),
            LibHandle::Dir(l) => l,
        }
    }

    fn load(&self, id: &str) -> Result<LoadedScenario, Fatal> {
        self.get().load(id).map_err(|e| e.to_string())
    }
}

struct Executed {
    run: Run,
    lts: Lts,
    verdicts: Vec<Verdict>,
}

fn execute(c: &Composition, source: Source, opts: &ExploreArgs) -> Result<Executed, Fatal> {
    let start = Instant::now();
    let lts = concretize(c, &ExploreOptions { max_states: opts.max_states, jobs: opts.jobs.max(1) })
        .map_err(|e| e.to_string())?;
    let explore_ms = start.elapsed().as_millis() as u64;
    let verdicts = checker::check(&lts, c).map_err(|e| e.to_string())?;
    let formulas = verdicts.iter().enumerate().map(|(i, v)| FormulaReport::new(i, c, &lts, v)).collect();
    let run = Run {
        system: c.name.clone(),
        source,
        max_states: opts.max_states,
        stats: Stats { states: lts.num_states(), transitions: lts.num_edges(), explore_ms },
        formulas,
        expectation: None,
    };
    Ok(Executed { run, lts, verdicts })
}

fn render_trace(c: &Composition, lts: &Lts, v: &Verdict, f: &FormulaReport, format: TraceFormat) -> Option<String> {
    let t = v.evidence.as_ref()?;
    Some(match format {
        TraceFormat::Text => t.render(c, lts),
        TraceFormat::Json => serde_json::to_string_pretty(f.trace.as_ref()?).expect("trace serializes") + "\n",
    })
}

fn indent(text: &str, by: &str) -> String {
    text.lines().map(|l| format!("{by}{l}\n")).collect()
}

/// Human-readable summary of one run.
fn summarize(ex: &Executed, c: &Composition, format: TraceFormat, with_traces: bool) -> String {
    let mut out = String::new();
    let s = &ex.run.stats;
    writeln!(out, "{}: {} states, {} transitions ({} ms)", ex.run.system, s.states, s.transitions, s.explore_ms).unwrap();
    for (f, v) in ex.run.formulas.iter().zip(&ex.verdicts) {
        let word = match f.verdict {
            Outcome::Holds => "holds",
            Outcome::Fails => "FAILS",
            Outcome::Delegated => "delegated",
        };
        writeln!(out, "  [{}] {word:<9} {} {}", f.index, f.kind, f.text).unwrap();
        for cj in &f.conjuncts {
            writeln!(out, "        {} {}", if cj.holds { "holds" } else { "FAILS" }, cj.text).unwrap();
        }
        if let Some(smv) = &f.smv {
            writeln!(out, "        program: {smv}").unwrap();
        }
        if let Some(n) = f.nusmv {
            writeln!(out, "        NuSMV: {n}").unwrap();
        }
        if with_traces {
            if let Some(text) = render_trace(c, &ex.lts, v, f, format) {
                let shape = if v.evidence.as_ref().is_some_and(|t| t.is_lasso()) { "lasso" } else { "finite path" };
                writeln!(out, "      counterexample ({shape}):").unwrap();
                out.push_str(&indent(&text, "        "));
            }
        }
    }
    out
}

/// Writes the JSON report to `target` and reports whether it replaced the
/// human-readable output on stdout.
fn emit_report(target: &Option<PathBuf>, report: &Report) -> Result<bool, Fatal> {
    let Some(path) = target else { return Ok(false) };
    let json = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    if path.as_os_str() == "-" {
        print!("{json}");
        return Ok(true);
    }
    write_file(path, &json)?;
    Ok(false)
}

fn scratch_smv(name: &str) -> PathBuf {
    std::env::temp_dir().join("ssiv").join(format!("{name}.smv"))
}

fn cmd_check(a: &CheckArgs) -> Result<i32, Fatal> {
    let extra: Vec<ExtraFormula> = a.formulas.iter().map(|t| parse_extra(t)).collect();
    let c = compose_files(&a.files, &extra)?;
    let paths = a.files.iter().map(|p| p.display().to_string()).collect();
    let mut ex = execute(&c, Source::Files { paths, extra_formulas: extra }, &a.explore)?;

    if ex.verdicts.iter().any(|v| v.outcome == Outcome::Delegated) {
        let path = a.smv_out.clone().unwrap_or_else(|| scratch_smv(&c.name));
        let program = emit_nusmv(&c, &c.formulas).map_err(|e| e.to_string())?;
        program.warnings.iter().for_each(|w| eprintln!("warning: {w}"));
        write_file(&path, &program.text)?;
        for f in ex.run.formulas.iter_mut().filter(|f| f.verdict == Outcome::Delegated) {
            f.smv = Some(path.display().to_string());
        }
        if let Some(bin) = nusmv_binary(&a.nusmv_path) {
            let results = run_nusmv(&bin, &path, c.formulas.len()).map_err(|e| e.to_string())?;
            for (f, r) in ex.run.formulas.iter_mut().zip(results) {
                f.nusmv = Some(r);
            }
        }
    }

    let failed = ex
        .run
        .formulas
        .iter()
        .any(|f| f.verdict == Outcome::Fails || (f.verdict == Outcome::Delegated && f.nusmv == Some(false)));
    let summary = summarize(&ex, &c, a.trace_format, true);
    if !emit_report(&a.report, &Report::new(vec![ex.run]))? {
        print!("{summary}");
    }
    Ok(if failed { EXIT_FAIL } else { EXIT_OK })
}

/// Every judged formula and conjunct must hold once the attacker is frozen.
fn baseline_mismatches(verdicts: &[Verdict]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, v) in verdicts.iter().enumerate() {
        if v.outcome == Outcome::Fails {
            out.push(format!("formula {i}: expected holds without the attacker, got fails"));
        }
    }
    out
}

/// Decides the composition's formulas with NuSMV, records the answers and
/// returns the disagreements with the native verdicts.
fn cross_check(c: &Composition, bin: &Path, smv: &Path, run: &mut Run) -> Result<Vec<String>, Fatal> {
    let program = emit_nusmv(c, &c.formulas).map_err(|e| e.to_string())?;
    write_file(smv, &program.text)?;
    let results = run_nusmv(bin, smv, c.formulas.len()).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for (f, r) in run.formulas.iter_mut().zip(results) {
        f.nusmv = Some(r);
        let native = match f.verdict {
            Outcome::Holds => true,
            Outcome::Fails => false,
            Outcome::Delegated => continue,
        };
        if native != r {
            out.push(format!("formula {}: native verdict {native}, NuSMV {r}", f.index));
        }
    }
    Ok(out)
}

fn cmd_scenario(a: &ScenarioArgs) -> Result<i32, Fatal> {
    let lib = LibHandle::open(&a.models)?;
    let ids: Vec<String> = match &a.id {
        Some(id) => vec![id.clone()],
        None => lib.get().scenarios().iter().map(|s| s.id.clone()).collect(),
    };
    let nusmv = if a.cross_check {
        Some(nusmv_binary(&a.nusmv_path).ok_or("--cross-check needs --nusmv-path or SSIV_NUSMV")?)
    } else {
        None
    };
    let models = a.models.as_ref().map(|p| p.display().to_string());

    let mut runs = Vec::new();
    let mut summary = String::new();
    let mut matched = 0;
    for id in &ids {
        let loaded = lib.load(id)?;
        let baseline = a.baseline && loaded.scenario.attacker_alias.is_some();
        let c = if baseline { loaded.baseline().expect("attacker alias present") } else { loaded.composition.clone() };
        let source = Source::Scenario { id: id.clone(), models: models.clone(), baseline };
        let mut ex = execute(&c, source, &a.explore)?;
        let mut mismatches: Vec<String> = if baseline {
            baseline_mismatches(&ex.verdicts)
        } else {
            compare(&loaded.scenario.expected, &ex.verdicts).iter().map(|m| m.to_string()).collect()
        };
        let tag = if baseline { format!("{id}.baseline") } else { id.clone() };
        if let Some(bin) = &nusmv {
            mismatches.extend(cross_check(&c, bin, &scratch_smv(&tag), &mut ex.run)?);
        }

        let mut written = Vec::new();
        for (f, v) in ex.run.formulas.iter().zip(&ex.verdicts) {
            if let Some(text) = render_trace(&c, &ex.lts, v, f, a.trace_format) {
                let ext = match a.trace_format {
                    TraceFormat::Text => "txt",
                    TraceFormat::Json => "json",
                };
                let path = a.trace_dir.join(format!("{tag}.f{}.{ext}", f.index));
                write_file(&path, &text)?;
                written.push(path);
            }
        }

        let ok = mismatches.is_empty();
        matched += ok as usize;
        let verdicts: Vec<&str> = ex
            .run
            .formulas
            .iter()
            .map(|f| match f.verdict {
                Outcome::Holds => "holds",
                Outcome::Fails => "fails",
                Outcome::Delegated => "delegated",
            })
            .collect();
        writeln!(
            summary,
            "{:<24} {:<8} [{}] {} states",
            tag,
            if ok { "match" } else { "MISMATCH" },
            verdicts.join(", "),
            ex.run.stats.states
        )
        .unwrap();
        for m in &mismatches {
            writeln!(summary, "    {m}").unwrap();
        }
        for p in &written {
            writeln!(summary, "    trace: {}", p.display()).unwrap();
        }
        ex.run.expectation = Some(ExpectationReport { matches: ok, mismatches });
        runs.push(ex.run);
    }
    writeln!(summary, "{matched}/{} scenarios match", ids.len()).unwrap();
    if !emit_report(&a.report, &Report::new(runs))? {
        print!("{summary}");
    }
    Ok(if matched == ids.len() { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_emit(a: &EmitArgs) -> Result<i32, Fatal> {
    let c = match &a.scenario {
        Some(id) => LibHandle::open(&a.models)?.load(id)?.composition,
        None => compose_files(&a.files, &[])?,
    };
    let (text, default) = match a.format {
        EmitFormat::Smv => {
            let program = emit_nusmv(&c, &c.formulas).map_err(|e| e.to_string())?;
            program.warnings.iter().for_each(|w| eprintln!("warning: {w}"));
            (program.text, "main.smv")
        }
        EmitFormat::Dot => (emit_dot(&c), "main.dot"),
    };
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from(default));
    fs::write(&out, text).map_err(|e| format!("{}: {e}", out.display()))?;
    println!("wrote {}", out.display());
    Ok(EXIT_OK)
}

fn cmd_list(a: &ListArgs) -> Result<i32, Fatal> {
    let lib = LibHandle::open(&a.models)?;
    for s in lib.get().scenarios() {
        let patterns: Vec<String> = s.patterns.iter().map(|p| format!("{p:?}")).collect();
        println!("{:<16} {:<10} {:<8} {}", s.id, s.attacker.to_string(), patterns.join(","), s.description);
    }
    Ok(EXIT_OK)
}

fn rebuild(source: &Source) -> Result<Composition, Fatal> {
    match source {
        Source::Files { paths, extra_formulas } => {
            let paths: Vec<PathBuf> = paths.iter().map(PathBuf::from).collect();
            compose_files(&paths, extra_formulas)
        }
        Source::Scenario { id, models, baseline } => {
            let loaded = LibHandle::open(&models.as_ref().map(PathBuf::from))?.load(id)?;
            match (baseline, loaded.baseline()) {
                (true, Some(c)) => Ok(c),
                (true, None) => Err(format!("scenario `{id}` has no attacker to freeze")),
                (false, _) => Ok(loaded.composition),
            }
        }
    }
}

/// Checks that every recorded step is the configuration the model reaches
/// and that firing the recorded transitions reproduces the path.
fn verify_trace(c: &Composition, lts: &Lts, t: &TraceReport) -> Result<(), String> {
    for (i, s) in t.steps.iter().enumerate() {
        if s.state as usize >= lts.num_states() {
            return Err(format!("step {i}: no state #{}", s.state));
        }
        if state_maps(c, lts, s.state) != (s.locations.clone(), s.vars.clone()) {
            return Err(format!("step {i}: recorded configuration differs from state #{}", s.state));
        }
        if let Some(f) = &s.fired {
            let known = c
                .instances
                .get(f.instance as usize)
                .is_some_and(|inst| (f.transition as usize) < inst.graph.transitions.len());
            if !known || step_label(c, f.instance, f.transition) != f.label {
                return Err(format!("step {i}: unknown transition {}", f.label));
            }
        }
    }
    replay(c, lts, &t.to_trace()).map_err(|e| e.to_string())
}

fn cmd_replay(a: &ReplayArgs) -> Result<i32, Fatal> {
    let text = fs::read_to_string(&a.report).map_err(|e| format!("{}: {e}", a.report.display()))?;
    let report: Report = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", a.report.display()))?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(format!("unsupported report schema version {}", report.schema_version));
    }
    let (mut total, mut ok) = (0, 0);
    for run in &report.runs {
        let c = rebuild(&run.source)?;
        let lts = concretize(&c, &ExploreOptions { max_states: run.max_states, jobs: 1 }).map_err(|e| e.to_string())?;
        for f in &run.formulas {
            let Some(t) = &f.trace else { continue };
            total += 1;
            let check = if lts.num_states() != run.stats.states {
                Err(format!("model has {} states, report has {}", lts.num_states(), run.stats.states))
            } else {
                verify_trace(&c, &lts, t)
            };
            match check {
                Ok(()) => {
                    ok += 1;
                    println!("ok    {} formula {}: {} steps", run.system, f.index, t.steps.len());
                }
                Err(e) => println!("FAIL  {} formula {}: {e}", run.system, f.index),
            }
        }
    }
    println!("{ok}/{total} traces replay");
    Ok(if ok == total { EXIT_OK } else { EXIT_FAIL })
}
