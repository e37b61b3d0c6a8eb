//! Concretization by enumeration. Every configuration of the product space
//! is built, the initial ones are picked out by predicate, and each
//! configuration's successors are computed straight from the transition
//! rules. Only the part reachable from the initial configurations is kept.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use ssiv_core::expr::{EvalError, Expr, SemType, Sym, SymSet, Valuation, Value, VarId};
use ssiv_core::graph::{Composition, Lts};

/// Program counters, then one value per composition variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config {
    pub pcs: Vec<u32>,
    pub values: Vec<Value>,
}

impl Valuation for Config {
    fn value(&self, var: VarId) -> Value {
        self.values[var.0 as usize].clone()
    }

    fn at(&self, instance: u32, declarator: u32) -> bool {
        self.pcs[instance as usize] == declarator
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BruteError {
    /// The product space exceeds the enumeration cap.
    TooLarge(u128),
    Eval(EvalError),
    /// A reachable configuration without successors.
    Deadlock,
    NoInitial,
}

/// Reachable transition system keyed by configurations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteLts {
    pub initial: BTreeSet<Config>,
    pub states: BTreeSet<Config>,
    /// `(source, instance, transition, target)`.
    pub edges: BTreeSet<(Config, u16, u16, Config)>,
    /// Per atom, the reachable configurations satisfying it.
    pub labels: Vec<BTreeSet<Config>>,
}

// Enumerated here rather than through `SemType::domain` so the two can
// disagree. Symbol 0 is `NONE`, which no set ever contains.
fn domain(c: &Composition, ty: SemType) -> Vec<Value> {
    match ty {
        SemType::Set => {
            let syms: Vec<Sym> = (1..c.universe.len() as Sym).collect();
            let mut out = Vec::new();
            for mask in 0u64..(1u64 << syms.len()) {
                let members = syms.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, s)| *s);
                out.push(Value::Set(SymSet(members.collect())));
            }
            out
        }
        _ => ty.domain(&c.universe),
    }
}

fn put(cfg: &mut Config, ty: SemType, v: VarId, value: Value) -> Result<(), EvalError> {
    if let (SemType::Int { lo, hi }, Value::Int(n)) = (ty, &value) {
        if *n < lo || *n > hi {
            return Err(EvalError::OutOfDomain { value: *n, ty });
        }
    }
    cfg.values[v.0 as usize] = value;
    Ok(())
}

fn is_initial(c: &Composition, cfg: &Config) -> Result<bool, EvalError> {
    for (i, v) in c.env_init.iter().enumerate() {
        if &cfg.values[i] != v {
            return Ok(false);
        }
    }
    for (k, inst) in c.instances.iter().enumerate() {
        let g = &inst.graph;
        if cfg.pcs[k] != g.init {
            return Ok(false);
        }
        let assigns = &g.declarators[g.init as usize].assigns;
        let guarded = if g.init_guard.is_true() { Vec::new() } else { g.init_guard.vars() };
        for local in locals_of(c, k) {
            if let Some((_, e)) = assigns.iter().find(|(v, _)| *v == local) {
                if e.eval(cfg)? != cfg.values[local.0 as usize] {
                    return Ok(false);
                }
            } else if !guarded.contains(&local) && cfg.values[local.0 as usize] != c.vars[local.0 as usize].ty.first_value() {
                return Ok(false);
            }
        }
        if !g.init_guard.eval_bool(cfg)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Local variables of instance `k`: non-environment variables its graph
/// mentions in the table slot reserved for it.
fn locals_of(c: &Composition, k: usize) -> Vec<VarId> {
    let prefix = format!("{}.", c.instances[k].alias);
    (0..c.vars.len())
        .filter(|&i| !c.vars[i].env && c.vars[i].name.starts_with(&prefix))
        .map(|i| VarId(i as u32))
        .collect()
}

fn step(c: &Composition, cfg: &Config) -> Result<Vec<(u16, u16, Config)>, EvalError> {
    let mut out = Vec::new();
    for (k, inst) in c.instances.iter().enumerate() {
        let g = &inst.graph;
        for (t, tr) in g.transitions.iter().enumerate() {
            if cfg.pcs[k] != tr.src || !tr.guard.eval_bool(cfg)? {
                continue;
            }
            let mut next = cfg.clone();
            let dst_assigns = &g.declarators[tr.dst as usize].assigns;
            for (v, e) in tr.writes.iter().chain(dst_assigns) {
                put(&mut next, c.vars[v.0 as usize].ty, *v, e.eval(cfg)?)?;
            }
            next.pcs[k] = tr.dst;
            out.push((k as u16, t as u16, next));
        }
    }
    let moves = out.iter().any(|(_, _, n)| n != cfg);
    if moves {
        out.retain(|(_, _, n)| n != cfg);
    }
    Ok(out)
}

/// Enumerates the full product space, refusing when it has more than `cap`
/// configurations.
pub fn brute_lts(c: &Composition, atoms: &[Expr], cap: u128) -> Result<BruteLts, BruteError> {
    let domains: Vec<Vec<Value>> = c.vars.iter().map(|v| domain(c, v.ty)).collect();
    let pc_sizes: Vec<usize> = c.instances.iter().map(|i| i.graph.declarators.len()).collect();
    let radices: Vec<usize> = pc_sizes.iter().copied().chain(domains.iter().map(|d| d.len())).collect();
    let size: u128 = radices.iter().map(|n| *n as u128).product();
    if size > cap {
        return Err(BruteError::TooLarge(size));
    }

    let mut all = Vec::new();
    let mut digits = vec![0usize; radices.len()];
    loop {
        let pcs = digits[..pc_sizes.len()].iter().map(|d| *d as u32).collect();
        let values = digits[pc_sizes.len()..].iter().enumerate().map(|(i, d)| domains[i][*d].clone()).collect();
        all.push(Config { pcs, values });
        let mut i = 0;
        while i < radices.len() {
            digits[i] += 1;
            if digits[i] < radices[i] {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == radices.len() {
            break;
        }
    }

    let mut successors: BTreeMap<Config, Vec<(u16, u16, Config)>> = BTreeMap::new();
    let mut initial = BTreeSet::new();
    for cfg in &all {
        if is_initial(c, cfg).map_err(BruteError::Eval)? {
            initial.insert(cfg.clone());
        }
    }
    if initial.is_empty() {
        return Err(BruteError::NoInitial);
    }
    // Successors are computed for every configuration; only reachable ones
    // are kept, and only reachable ones may raise evaluation errors.
    let mut computed: BTreeMap<Config, Result<Vec<(u16, u16, Config)>, EvalError>> = BTreeMap::new();
    for cfg in &all {
        computed.insert(cfg.clone(), step(c, cfg));
    }

    let mut states = BTreeSet::new();
    let mut queue: VecDeque<Config> = initial.iter().cloned().collect();
    while let Some(s) = queue.pop_front() {
        if !states.insert(s.clone()) {
            continue;
        }
        let succ = computed[&s].clone().map_err(BruteError::Eval)?;
        if succ.is_empty() {
            return Err(BruteError::Deadlock);
        }
        for (_, _, n) in &succ {
            queue.push_back(n.clone());
        }
        successors.insert(s, succ);
    }
    let edges = successors
        .iter()
        .flat_map(|(s, succ)| succ.iter().map(move |(k, t, n)| (s.clone(), *k, *t, n.clone())))
        .collect();
    let mut labels = Vec::new();
    for a in atoms {
        let mut set = BTreeSet::new();
        for s in &states {
            if a.eval_bool(s).map_err(BruteError::Eval)? {
                set.insert(s.clone());
            }
        }
        labels.push(set);
    }
    Ok(BruteLts { initial, states, edges, labels })
}

/// Converts an explored system to the oracle's representation.
pub fn from_lts(c: &Composition, lts: &Lts) -> BruteLts {
    let cfg = |id: u32| {
        let w = lts.state(id);
        Config {
            pcs: (0..c.instances.len()).map(|k| lts.layout.pc(w, k)).collect(),
            values: (0..c.vars.len()).map(|i| lts.layout.value(w, VarId(i as u32))).collect(),
        }
    };
    let n = lts.num_states() as u32;
    BruteLts {
        initial: lts.initial().iter().map(|&i| cfg(i)).collect(),
        states: (0..n).map(cfg).collect(),
        edges: (0..n)
            .flat_map(|s| lts.succ(s).iter().map(move |e| (s, *e)))
            .map(|(s, e)| (cfg(s), e.instance, e.transition, cfg(e.dst)))
            .collect(),
        labels: (0..lts.atoms().len())
            .map(|a| lts.label(a).ones().map(|i| cfg(i as u32)).collect())
            .collect(),
    }
}
