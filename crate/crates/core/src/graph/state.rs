use crate::expr::{EvalError, SemType, Valuation, Value, VarId};

use super::compose::Composition;
use super::explore::ConcretizeError;

/// Packing of a global configuration into `u32` words: one program counter
/// (declarator index) per instance, then every variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub instances: usize,
    pub offsets: Vec<usize>,
    pub types: Vec<SemType>,
    pub width: usize,
}

impl Layout {
    pub fn new(c: &Composition) -> Layout {
        let mut offsets = Vec::with_capacity(c.vars.len());
        let mut at = c.instances.len();
        for v in &c.vars {
            offsets.push(at);
            at += v.ty.width(&c.universe);
        }
        Layout {
            instances: c.instances.len(),
            offsets,
            types: c.vars.iter().map(|v| v.ty).collect(),
            width: at,
        }
    }

    fn span(&self, v: VarId) -> std::ops::Range<usize> {
        let i = v.0 as usize;
        let end = self.offsets.get(i + 1).copied().unwrap_or(self.width);
        self.offsets[i]..end
    }

    pub fn value(&self, words: &[u32], v: VarId) -> Value {
        Value::decode(&self.types[v.0 as usize], &words[self.span(v)])
    }

    pub fn set(&self, words: &mut [u32], v: VarId, value: &Value) -> Result<(), EvalError> {
        let ty = self.types[v.0 as usize];
        if let (SemType::Int { lo, hi }, Value::Int(n)) = (ty, value) {
            if *n < lo || *n > hi {
                return Err(EvalError::OutOfDomain { value: *n, ty });
            }
        }
        let span = self.span(v);
        value.encode(&ty, &mut words[span]);
        Ok(())
    }

    pub fn pc(&self, words: &[u32], instance: usize) -> u32 {
        words[instance]
    }

    pub fn view<'a>(&'a self, words: &'a [u32]) -> StateView<'a> {
        StateView { layout: self, words }
    }
}

/// A packed configuration seen as a [`Valuation`].
#[derive(Clone, Copy)]
pub struct StateView<'a> {
    pub layout: &'a Layout,
    pub words: &'a [u32],
}

impl Valuation for StateView<'_> {
    fn value(&self, var: VarId) -> Value {
        self.layout.value(self.words, var)
    }

    fn at(&self, instance: u32, declarator: u32) -> bool {
        self.words[instance as usize] == declarator
    }
}

/// Fires transition `t` of instance `k` from `state`: `None` when the instance
/// is elsewhere or the guard is false. Effect writes and then the target
/// declarator's assignment are evaluated in `state`; other variables keep
/// their values.
pub fn fire(
    c: &Composition,
    layout: &Layout,
    state: &[u32],
    k: usize,
    t: usize,
) -> Result<Option<Box<[u32]>>, EvalError> {
    let g = &c.instances[k].graph;
    let tr = &g.transitions[t];
    if state[k] != tr.src {
        return Ok(None);
    }
    let view = layout.view(state);
    if !tr.guard.eval_bool(&view)? {
        return Ok(None);
    }
    let mut next: Box<[u32]> = state.into();
    for (v, e) in &tr.writes {
        layout.set(&mut next, *v, &e.eval(&view)?)?;
    }
    for (v, e) in &g.declarators[tr.dst as usize].assigns {
        layout.set(&mut next, *v, &e.eval(&view)?)?;
    }
    next[k] = tr.dst;
    Ok(Some(next))
}

/// Initial configurations: the control system's environment values, each
/// instance in its initial declarator, with the declarator's assignment
/// evaluated over that configuration. Locals the declarator leaves free take
/// the first value of their domain, or, when the instance has an initial
/// guard, every domain value satisfying the guard.
pub fn initial_states(c: &Composition, layout: &Layout) -> Result<Vec<Box<[u32]>>, ConcretizeError> {
    let mut base = vec![0u32; layout.width];
    for (i, v) in c.env_init.iter().enumerate() {
        layout.set(&mut base, VarId(i as u32), v).map_err(ConcretizeError::Eval)?;
    }
    for (i, d) in c.vars.iter().enumerate().skip(c.env_count()) {
        layout.set(&mut base, VarId(i as u32), &d.ty.first_value()).map_err(ConcretizeError::Eval)?;
    }
    for (k, inst) in c.instances.iter().enumerate() {
        base[k] = inst.graph.init;
    }

    // Per instance: the list of candidate assignments to its free locals.
    let mut states: Vec<Box<[u32]>> = vec![base.into()];
    for inst in &c.instances {
        let g = &inst.graph;
        let init = &g.declarators[g.init as usize];
        let free: Vec<VarId> = if g.init_guard.is_true() {
            Vec::new()
        } else {
            let mut locals = g.init_guard.vars();
            locals.retain(|v| !c.vars[v.0 as usize].env && !init.assigns.iter().any(|(a, _)| a == v));
            locals
        };
        let mut domains = Vec::new();
        for v in &free {
            let ty = c.vars[v.0 as usize].ty;
            if ty == SemType::Set && c.universe.len() > 17 {
                return Err(ConcretizeError::InitDomain(c.vars[v.0 as usize].name.clone()));
            }
            domains.push(ty.domain(&c.universe));
        }
        let total: usize = domains.iter().map(|d| d.len()).product();
        let mut next_states = Vec::new();
        for s in &states {
            for mut idx in 0..total {
                let mut w: Box<[u32]> = s.clone();
                // mixed radix, last free local varies fastest
                for (j, v) in free.iter().enumerate().rev() {
                    let n = domains[j].len();
                    layout.set(&mut w, *v, &domains[j][idx % n]).map_err(ConcretizeError::Eval)?;
                    idx /= n;
                }
                let pre = w.clone();
                let view = layout.view(&pre);
                for (v, e) in &init.assigns {
                    let val = e.eval(&view).map_err(ConcretizeError::Eval)?;
                    layout.set(&mut w, *v, &val).map_err(ConcretizeError::Eval)?;
                }
                if g.init_guard.eval_bool(&layout.view(&w)).map_err(ConcretizeError::Eval)? {
                    next_states.push(w);
                }
            }
        }
        states = next_states;
    }
    let mut seen = std::collections::HashSet::new();
    states.retain(|s| seen.insert(s.clone()));
    Ok(states)
}
