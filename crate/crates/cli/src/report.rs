//! Machine-readable run reports.
//!
//! Every field except `explore_ms` and `elapsed_ms` is a function of the
//! inputs, so two runs of the same command serialize identically once those
//! are zeroed (see [`Report::without_timings`]).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use ssiv_core::checker::{step_label, Outcome, Step, Trace, Verdict};
use ssiv_core::expr::{Value, VarId};
use ssiv_core::graph::{Composition, Lts};
use ssiv_core::logic::Logic;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub runs: Vec<Run>,
}

impl Report {
    pub fn new(runs: Vec<Run>) -> Report {
        Report { schema_version: SCHEMA_VERSION, tool_version: env!("CARGO_PKG_VERSION").to_string(), runs }
    }

    /// Copy with every timing field set to zero.
    pub fn without_timings(&self) -> Report {
        let mut r = self.clone();
        for run in &mut r.runs {
            run.stats.explore_ms = 0;
            run.formulas.iter_mut().for_each(|f| f.elapsed_ms = 0);
        }
        r
    }
}

/// Where a run's composition came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Source {
    /// `.sz` files plus formulas given on the command line.
    Files { paths: Vec<String>, extra_formulas: Vec<ExtraFormula> },
    /// A library scenario; `models` is `None` for the built-in library.
    Scenario { id: String, models: Option<String>, baseline: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtraFormula {
    pub logic: Option<Logic>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    /// Name of the main control system.
    pub system: String,
    pub source: Source,
    pub max_states: usize,
    pub stats: Stats,
    pub formulas: Vec<FormulaReport>,
    /// Present for scenario runs.
    pub expectation: Option<ExpectationReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub states: usize,
    pub transitions: usize,
    pub explore_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaReport {
    pub index: usize,
    pub text: String,
    pub kind: Logic,
    pub verdict: Outcome,
    pub conjuncts: Vec<ConjunctReport>,
    pub trace: Option<TraceReport>,
    /// Program the formula was delegated to (LTL only).
    pub smv: Option<String>,
    /// Verdict reported by NuSMV, when it was run.
    pub nusmv: Option<bool>,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjunctReport {
    pub text: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectationReport {
    pub matches: bool,
    pub mismatches: Vec<String>,
}

/// A finite path, or a lasso whose loop starts at step `loop_start` and
/// returns there from the last step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub loop_start: Option<usize>,
    pub steps: Vec<StepReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub state: u32,
    /// Current declarator per instance alias.
    pub locations: BTreeMap<String, String>,
    pub vars: BTreeMap<String, Json>,
    /// Transition leaving this state, absent on the last step of a finite path.
    pub fired: Option<Fired>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fired {
    pub instance: u16,
    pub transition: u16,
    pub label: String,
}

impl TraceReport {
    pub fn new(c: &Composition, lts: &Lts, trace: &Trace) -> TraceReport {
        let steps = trace
            .steps()
            .map(|s| {
                let (locations, vars) = state_maps(c, lts, s.state);
                StepReport {
                    state: s.state,
                    locations,
                    vars,
                    fired: s.via.map(|(k, t)| Fired { instance: k, transition: t, label: step_label(c, k, t) }),
                }
            })
            .collect();
        TraceReport { loop_start: trace.is_lasso().then_some(trace.prefix.len()), steps }
    }

    /// The checker-level trace this report describes.
    pub fn to_trace(&self) -> Trace {
        let steps: Vec<Step> =
            self.steps.iter().map(|s| Step { state: s.state, via: s.fired.as_ref().map(|f| (f.instance, f.transition)) }).collect();
        match self.loop_start {
            Some(at) if at <= steps.len() => {
                let mut prefix = steps;
                let cycle = prefix.split_off(at);
                Trace { prefix, cycle }
            }
            _ => Trace { prefix: steps, cycle: Vec::new() },
        }
    }
}

/// Declarator per instance and value per variable of one reachable state.
pub fn state_maps(c: &Composition, lts: &Lts, id: u32) -> (BTreeMap<String, String>, BTreeMap<String, Json>) {
    let w = lts.state(id);
    let locations = c
        .instances
        .iter()
        .enumerate()
        .map(|(k, i)| (i.alias.clone(), i.graph.declarators[lts.layout.pc(w, k) as usize].name.clone()))
        .collect();
    let vars = c
        .vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.clone(), to_json(c, &lts.layout.value(w, VarId(i as u32)))))
        .collect();
    (locations, vars)
}

fn to_json(c: &Composition, v: &Value) -> Json {
    match v {
        Value::Bool(b) => Json::Bool(*b),
        Value::Int(n) => Json::from(*n),
        Value::Str(s) => Json::String(c.universe.name(*s).to_string()),
        Value::Set(set) => Json::Array(set.0.iter().map(|s| Json::String(c.universe.name(*s).to_string())).collect()),
    }
}

impl FormulaReport {
    pub fn new(index: usize, c: &Composition, lts: &Lts, v: &Verdict) -> FormulaReport {
        FormulaReport {
            index,
            text: v.text.clone(),
            kind: v.logic,
            verdict: v.outcome,
            conjuncts: v.conjuncts.iter().map(|c| ConjunctReport { text: c.text.clone(), holds: c.holds }).collect(),
            trace: v.evidence.as_ref().map(|t| TraceReport::new(c, lts, t)),
            smv: None,
            nusmv: None,
            elapsed_ms: v.elapsed.as_millis() as u64,
        }
    }
}
