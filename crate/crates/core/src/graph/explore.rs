use std::fmt::Write;

use fixedbitset::FixedBitSet;
use indexmap::IndexSet;
use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{EvalError, Expr};

use super::compose::Composition;
use super::state::{fire, initial_states, Layout};

pub const DEFAULT_MAX_STATES: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConcretizeError {
    #[error(
        "deadlock: reachable state {state} has no outgoing transition \
         (add a self-loop such as `DONE -> DONE` to terminal declarators)\n{}",
        .trace.join("\n")
    )]
    Deadlock { state: u32, trace: Vec<String> },
    #[error("state limit of {0} reachable states exceeded (raise it with --max-states)")]
    StateLimitExceeded(usize),
    #[error("evaluation failed: {0}")]
    Eval(EvalError),
    #[error("initial guard ranges over set variable `{0}` whose domain is too large to enumerate")]
    InitDomain(String),
    #[error("composition has no initial state (every initial guard is false)")]
    NoInitialState,
    #[error("failed to start worker threads: {0}")]
    Threads(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub dst: u32,
    /// Firing instance and the index of its transition.
    pub instance: u16,
    pub transition: u16,
}

/// BFS tree edge into a state; `None` for initial states.
pub type Parent = Option<(u32, u16, u16)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreOptions {
    pub max_states: usize,
    /// Worker threads for successor generation; `1` explores sequentially.
    pub jobs: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { max_states: DEFAULT_MAX_STATES, jobs: 1 }
    }
}

/// Reachable fragment of the concretized composition. State ids follow
/// breadth-first discovery order; edges are stored per source in firing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lts {
    pub layout: Layout,
    states: IndexSet<Box<[u32]>>,
    offsets: Vec<u32>,
    edges: Vec<Edge>,
    initial: Vec<u32>,
    parents: Vec<Parent>,
    atoms: Vec<Expr>,
    labels: Vec<FixedBitSet>,
}

impl Lts {
    /// Builds an LTS from raw parts (used for synthetic structures in tests).
    /// Every state is represented by the single word holding its id.
    pub fn from_parts(
        n: usize,
        edges: &[(u32, u32)],
        initial: Vec<u32>,
        labels: Vec<FixedBitSet>,
    ) -> Lts {
        let mut sorted: Vec<(u32, u32)> = edges.to_vec();
        sorted.sort_by_key(|e| e.0);
        let mut offsets = vec![0u32; n + 1];
        for (s, _) in &sorted {
            offsets[*s as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Lts {
            layout: Layout { instances: 0, offsets: vec![], types: vec![], width: 1 },
            states: (0..n as u32).map(|i| Box::from([i])).collect(),
            offsets,
            edges: sorted.iter().map(|(_, d)| Edge { dst: *d, instance: 0, transition: 0 }).collect(),
            initial,
            parents: vec![None; n],
            atoms: (0..labels.len()).map(|i| Expr::Var(crate::expr::VarId(i as u32))).collect(),
            labels,
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn state(&self, id: u32) -> &[u32] {
        &self.states[id as usize]
    }

    pub fn id_of(&self, words: &[u32]) -> Option<u32> {
        self.states.get_index_of(words).map(|i| i as u32)
    }

    pub fn succ(&self, id: u32) -> &[Edge] {
        let (a, b) = (self.offsets[id as usize], self.offsets[id as usize + 1]);
        &self.edges[a as usize..b as usize]
    }

    pub fn initial(&self) -> &[u32] {
        &self.initial
    }

    pub fn parent(&self, id: u32) -> Parent {
        self.parents[id as usize]
    }

    /// Atomic propositions P.
    pub fn atoms(&self) -> &[Expr] {
        &self.atoms
    }

    /// States labeled with atom `i`.
    pub fn label(&self, i: usize) -> &FixedBitSet {
        &self.labels[i]
    }

    pub fn atom_index(&self, e: &Expr) -> Option<usize> {
        self.atoms.iter().position(|a| a == e)
    }

    /// Labels of one state, as atom indices.
    pub fn labels_of(&self, id: u32) -> Vec<usize> {
        (0..self.atoms.len()).filter(|&i| self.labels[i].contains(id as usize)).collect()
    }

    /// Satisfaction set of an arbitrary state expression.
    pub fn eval_set(&self, e: &Expr) -> Result<FixedBitSet, EvalError> {
        if let Some(i) = self.atom_index(e) {
            return Ok(self.labels[i].clone());
        }
        let mut set = FixedBitSet::with_capacity(self.num_states());
        for (id, w) in self.states.iter().enumerate() {
            if e.eval_bool(&self.layout.view(w))? {
                set.insert(id);
            }
        }
        Ok(set)
    }

    /// Shortest path from an initial state to `id` along BFS parents.
    pub fn path_to(&self, id: u32) -> Vec<(u32, Option<(u16, u16)>)> {
        let mut out = vec![(id, None)];
        let mut cur = id;
        while let Some((src, k, t)) = self.parents[cur as usize] {
            out.last_mut().unwrap().1 = Some((k, t));
            out.push((src, None));
            cur = src;
        }
        out.reverse();
        // shift: each entry carries the step that leaves it
        let steps: Vec<Option<(u16, u16)>> = out.iter().map(|e| e.1).collect();
        let n = out.len();
        for i in 0..n {
            out[i].1 = if i + 1 < n { steps[i + 1] } else { None };
        }
        out
    }

    /// Renders a state as `h@IDLE v@WAIT x="A" ...`.
    pub fn render_state(&self, c: &Composition, id: u32) -> String {
        render_words(c, &self.layout, self.state(id))
    }

    /// Line-oriented dump: `state-id | var=val ... | labels`.
    pub fn dump(&self, c: &Composition) -> String {
        let mut out = String::new();
        for id in 0..self.num_states() as u32 {
            let labels: Vec<String> =
                self.labels_of(id).into_iter().map(|i| c.render_expr(&self.atoms[i])).collect();
            writeln!(out, "{id} | {} | {}", self.render_state(c, id), labels.join(", ")).unwrap();
        }
        out
    }
}

pub fn render_words(c: &Composition, layout: &Layout, w: &[u32]) -> String {
    let mut parts: Vec<String> = c
        .instances
        .iter()
        .enumerate()
        .map(|(k, i)| format!("{}@{}", i.alias, i.graph.declarators[w[k] as usize].name))
        .collect();
    for (i, v) in c.vars.iter().enumerate() {
        let val = layout.value(w, crate::expr::VarId(i as u32));
        parts.push(format!("{}={}", v.name, val.render(&c.universe)));
    }
    parts.join(" ")
}

type Succs = Vec<(Box<[u32]>, u16, u16)>;

fn successors(c: &Composition, layout: &Layout, state: &[u32]) -> Result<Succs, EvalError> {
    let mut out: Succs = Vec::new();
    for (k, inst) in c.instances.iter().enumerate() {
        for t in 0..inst.graph.transitions.len() {
            if let Some(next) = fire(c, layout, state, k, t)? {
                out.push((next, k as u16, t as u16));
            }
        }
    }
    // A global stutter step is kept only when nothing else can happen.
    if out.iter().any(|(w, _, _)| &**w != state) {
        out.retain(|(w, _, _)| &**w != state);
    }
    Ok(out)
}

/// Atomic propositions: the clauses of every instance and the formula atoms,
/// split at boolean connectives; occupancy atoms only when formulas use them.
pub fn atoms_of(c: &Composition) -> Vec<Expr> {
    let mut atoms = Vec::new();
    for inst in &c.instances {
        for (_, clause) in &inst.graph.clauses {
            clause.decompose(&mut atoms);
        }
    }
    for f in &c.formulas {
        for a in f.formula.atoms() {
            a.decompose(&mut atoms);
        }
    }
    atoms
}

/// Explores the composition breadth-first from its initial states.
pub fn concretize(c: &Composition, opts: &ExploreOptions) -> Result<Lts, ConcretizeError> {
    let pool = if opts.jobs > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.jobs)
                .build()
                .map_err(|e| ConcretizeError::Threads(e.to_string()))?,
        )
    } else {
        None
    };
    let layout = Layout::new(c);
    let mut states: IndexSet<Box<[u32]>> = IndexSet::new();
    let mut parents: Vec<Parent> = Vec::new();
    let mut initial = Vec::new();
    for s in initial_states(c, &layout)? {
        let (id, new) = states.insert_full(s);
        if new {
            parents.push(None);
            initial.push(id as u32);
        }
    }
    if initial.is_empty() {
        return Err(ConcretizeError::NoInitialState);
    }
    if states.len() > opts.max_states {
        return Err(ConcretizeError::StateLimitExceeded(opts.max_states));
    }
    let mut offsets = vec![0u32];
    let mut edges: Vec<Edge> = Vec::new();

    let mut level_start = 0;
    while level_start < states.len() {
        let level_end = states.len();
        let expand = |id: usize| successors(c, &layout, &states[id]);
        let results: Vec<Result<Succs, EvalError>> = match &pool {
            Some(p) => p.install(|| (level_start..level_end).into_par_iter().map(expand).collect()),
            None => (level_start..level_end).map(expand).collect(),
        };
        for (i, r) in results.into_iter().enumerate() {
            let src = (level_start + i) as u32;
            let succs = r.map_err(ConcretizeError::Eval)?;
            if succs.is_empty() {
                let trace = deadlock_trace(c, &layout, &states, &parents, src);
                return Err(ConcretizeError::Deadlock { state: src, trace });
            }
            for (w, k, t) in succs {
                let (id, new) = states.insert_full(w);
                if new {
                    if states.len() > opts.max_states {
                        return Err(ConcretizeError::StateLimitExceeded(opts.max_states));
                    }
                    parents.push(Some((src, k, t)));
                }
                edges.push(Edge { dst: id as u32, instance: k, transition: t });
            }
            offsets.push(edges.len() as u32);
        }
        level_start = level_end;
    }

    let atoms = atoms_of(c);
    let n = states.len();
    let label = |a: &Expr| -> Result<FixedBitSet, EvalError> {
        let mut set = FixedBitSet::with_capacity(n);
        for (id, w) in states.iter().enumerate() {
            if a.eval_bool(&layout.view(w))? {
                set.insert(id);
            }
        }
        Ok(set)
    };
    let labels: Result<Vec<FixedBitSet>, EvalError> = match &pool {
        Some(p) => p.install(|| atoms.par_iter().map(label).collect()),
        None => atoms.iter().map(label).collect(),
    };
    let labels = labels.map_err(ConcretizeError::Eval)?;

    Ok(Lts { layout, states, offsets, edges, initial, parents, atoms, labels })
}

fn deadlock_trace(
    c: &Composition,
    layout: &Layout,
    states: &IndexSet<Box<[u32]>>,
    parents: &[Parent],
    id: u32,
) -> Vec<String> {
    let mut chain = vec![id];
    let mut cur = id;
    while let Some((src, _, _)) = parents[cur as usize] {
        chain.push(src);
        cur = src;
    }
    chain.reverse();
    chain
        .iter()
        .enumerate()
        .map(|(i, s)| format!("  {i}: {}", render_words(c, layout, &states[*s as usize])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::compile_str;
    use crate::graph::compose_async;

    fn lts(src: &str, jobs: usize) -> Result<(Composition, Lts), ConcretizeError> {
        let p = compile_str(&[src]).unwrap();
        let c = compose_async(&p).unwrap();
        let l = concretize(&c, &ExploreOptions { jobs, ..Default::default() })?;
        Ok((c, l))
    }

    const PING: &str = r#"
varset Env { msg :: string }
varset PV { state :: string }
system Ping() over PV with Env {
    init IDLE -> @{ msg: "PING" } SENT [msg = "PONG"] -> DONE -> DONE
    DONE = { state: "DONE" }
    prop isDone { state = "DONE" }
}
system Pong() with Env {
    init WAIT [msg = "PING"] -> @{ msg: "PONG" } DONE -> DONE
}
main control system Main() over Env {
    init { msg: "NONE" }
    async Ping() as a, Pong() as b
    ctl AF a.isDone
}
"#;

    #[test]
    fn ping_pong_is_a_line_with_a_final_stutter() {
        let (c, l) = lts(PING, 1).unwrap();
        assert_eq!(l.initial(), &[0]);
        assert_eq!(l.num_states(), 4);
        let last = l.num_states() as u32 - 1;
        assert_eq!(l.succ(last).len(), 2, "both DONE self-loops");
        assert!(l.succ(last).iter().all(|e| e.dst == last));
        let dump = l.dump(&c);
        assert!(dump.starts_with("0 | a@IDLE b@WAIT msg=\"NONE\" a.state=\"NONE\" | "), "{dump}");
    }

    #[test]
    fn stutter_is_dropped_when_progress_is_possible() {
        let (_, l) = lts(PING, 1).unwrap();
        for id in 0..l.num_states() as u32 - 1 {
            assert!(l.succ(id).iter().all(|e| e.dst != id), "state {id}");
        }
    }

    #[test]
    fn deadlock_is_reported_with_a_trace() {
        let src = PING.replace("[msg = \"PING\"] -> @{ msg: \"PONG\" } DONE -> DONE", "[msg = \"PING\"] -> @{ msg: \"PONG\" } DONE");
        let src = src.replace("SENT [msg = \"PONG\"] -> DONE -> DONE", "SENT [msg = \"PONG\"] -> DONE");
        let err = lts(&src, 1).unwrap_err();
        let ConcretizeError::Deadlock { trace, .. } = &err else { panic!("{err}") };
        assert_eq!(trace.len(), 4);
        assert!(err.to_string().contains("self-loop"));
    }

    #[test]
    fn state_limit() {
        let p = compile_str(&[PING]).unwrap();
        let c = compose_async(&p).unwrap();
        let err = concretize(&c, &ExploreOptions { max_states: 3, jobs: 1 }).unwrap_err();
        assert_eq!(err, ConcretizeError::StateLimitExceeded(3));
    }

    #[test]
    fn init_guard_enumerates_free_locals() {
        let src = r#"
varset V { a :: bool, b :: bool }
system S() over V {
    init D -> D
    init where b | !b
    D = { a: true }
}
main control system M() { async S() as s }
"#;
        let (_, l) = lts(src, 1).unwrap();
        assert_eq!(l.initial().len(), 2);
        assert_eq!(l.num_states(), 2);
    }

    #[test]
    fn parallel_matches_sequential() {
        let src = r#"
varset V { n :: int[0..9] }
system C() over V {
    init A [n < 9] -> @{ n: n + 1 } A
    A [n = 9] -> @{ n: 0 } A
}
main control system M() { async C() as x, C() as y, C() as z }
"#;
        let (_, a) = lts(src, 1).unwrap();
        let (_, b) = lts(src, 4).unwrap();
        assert_eq!(a.num_states(), 1000);
        assert_eq!(a, b);
    }

    #[test]
    fn path_to_follows_parents() {
        let (_, l) = lts(PING, 1).unwrap();
        let last = l.num_states() as u32 - 1;
        let p = l.path_to(last);
        assert_eq!(p.first().unwrap().0, 0);
        assert_eq!(p.last().unwrap(), &(last, None));
        for w in p.windows(2) {
            let (k, t) = w[0].1.unwrap();
            assert!(l.succ(w[0].0).iter().any(|e| e.dst == w[1].0 && (e.instance, e.transition) == (k, t)));
        }
    }
}
