use std::collections::HashSet;
use std::fmt::Write;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::expr::EvalError;
use crate::graph::{fire, initial_states, render_words, Composition, Lts};
use crate::logic::Formula;

use super::{to_base, CheckError, Sat};

/// One position of a trace: a state and the `(instance, transition)` that
/// leaves it towards the next position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub state: u32,
    pub via: Option<(u16, u16)>,
}

/// A finite path, or a lasso when `cycle` is non-empty. The step before
/// `cycle[0]` leads into it and the last cycle step leads back to `cycle[0]`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub prefix: Vec<Step>,
    pub cycle: Vec<Step>,
}

impl Trace {
    fn point(s: u32) -> Trace {
        Trace { prefix: vec![Step { state: s, via: None }], cycle: Vec::new() }
    }

    pub fn is_lasso(&self) -> bool {
        !self.cycle.is_empty()
    }

    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn steps(&self) -> impl Iterator<Item = &Step> {
        self.prefix.iter().chain(self.cycle.iter())
    }

    /// Replaces the final state of `path` with `tail`, which must start there.
    fn splice(mut path: Vec<Step>, tail: Trace) -> Trace {
        let last = path.pop().expect("non-empty path");
        debug_assert_eq!(Some(last.state), tail.steps().next().map(|s| s.state));
        path.extend(tail.prefix);
        Trace { prefix: path, cycle: tail.cycle }
    }

    /// Human-readable rendering, one state per line with the firing step between.
    pub fn render(&self, c: &Composition, lts: &Lts) -> String {
        let mut out = String::new();
        let mut i = 0;
        for (part, steps) in [("", &self.prefix), ("-- loop --", &self.cycle)] {
            if steps.is_empty() {
                continue;
            }
            if !part.is_empty() {
                writeln!(out, "{part}").unwrap();
            }
            for s in steps.iter() {
                writeln!(out, "[{i}] #{} {}", s.state, render_words(c, &lts.layout, lts.state(s.state))).unwrap();
                if let Some((k, t)) = s.via {
                    writeln!(out, "    --{}-->", step_label(c, k, t)).unwrap();
                }
                i += 1;
            }
        }
        if self.is_lasso() {
            writeln!(out, "-- back to [{}] --", self.prefix.len()).unwrap();
        }
        out
    }
}

/// `alias.action`, or `alias.ε` for an internal step.
pub fn step_label(c: &Composition, k: u16, t: u16) -> String {
    let inst = &c.instances[k as usize];
    let action = inst.graph.transitions[t as usize].action.as_deref().unwrap_or("ε");
    format!("{}.{}", inst.alias, action)
}

struct Explainer<'a> {
    sat: Sat<'a>,
}

impl<'a> Explainer<'a> {
    fn set(&mut self, f: &Formula<usize>) -> Result<FixedBitSet, CheckError> {
        let b = to_base(f)?;
        Ok(self.sat.eval(&b))
    }

    fn holds(&mut self, f: &Formula<usize>, s: u32) -> Result<bool, CheckError> {
        Ok(self.set(f)?.contains(s as usize))
    }

    fn lts(&self) -> &'a Lts {
        self.sat.lts
    }

    /// Shortest path from `from` to a `target` state whose earlier states all
    /// lie in `within`. Layers are expanded in ascending state id, so the
    /// lowest-numbered candidate wins ties.
    fn bfs(&self, from: u32, within: Option<&FixedBitSet>, target: &FixedBitSet) -> Option<Vec<Step>> {
        let lts = self.lts();
        let mut parent: Vec<Option<(u32, u16, u16)>> = vec![None; lts.num_states()];
        let mut seen = FixedBitSet::with_capacity(lts.num_states());
        seen.insert(from as usize);
        let mut layer = vec![from];
        let mut found = None;
        loop {
            if let Some(&t) = layer.iter().filter(|s| target.contains(**s as usize)).min() {
                found = Some(t);
                break;
            }
            let mut next = Vec::new();
            for &s in &layer {
                if within.is_some_and(|w| !w.contains(s as usize)) {
                    continue;
                }
                let mut edges: Vec<_> = lts.succ(s).to_vec();
                edges.sort_by_key(|e| e.dst);
                for e in edges {
                    if !seen.contains(e.dst as usize) {
                        seen.insert(e.dst as usize);
                        parent[e.dst as usize] = Some((s, e.instance, e.transition));
                        next.push(e.dst);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            next.sort_unstable();
            layer = next;
        }
        let t = found?;
        let mut rev = vec![Step { state: t, via: None }];
        let mut cur = t;
        while cur != from {
            let (p, k, tr) = parent[cur as usize].expect("bfs parent");
            rev.push(Step { state: p, via: Some((k, tr)) });
            cur = p;
        }
        rev.reverse();
        Some(rev)
    }

    /// Lasso from `from` staying inside `z`, following the lowest-id
    /// successor in `z` until a state repeats. Every state of `z` must have
    /// a successor in `z`.
    fn lasso(&self, from: u32, z: &FixedBitSet) -> Result<Trace, CheckError> {
        let lts = self.lts();
        let mut path: Vec<Step> = Vec::new();
        let mut pos = std::collections::HashMap::new();
        let mut cur = from;
        loop {
            if let Some(&i) = pos.get(&cur) {
                let cycle = path.split_off(i);
                return Ok(Trace { prefix: path, cycle });
            }
            let e = lts
                .succ(cur)
                .iter()
                .filter(|e| z.contains(e.dst as usize))
                .min_by_key(|e| e.dst)
                .ok_or_else(|| CheckError::Internal(format!("state {cur} has no successor inside EG set")))?;
            pos.insert(cur, path.len());
            path.push(Step { state: cur, via: Some((e.instance, e.transition)) });
            cur = e.dst;
        }
    }

    /// Evidence that `f` is false at `s`.
    fn no(&mut self, f: &Formula<usize>, s: u32) -> Result<Trace, CheckError> {
        use Formula as F;
        Ok(match f {
            F::True | F::False | F::Atom(_) | F::EX(_) | F::EF(_) | F::EG(_) | F::EU(..) => Trace::point(s),
            F::Not(g) => self.yes(g, s)?,
            F::And(a, b) => {
                if self.holds(a, s)? {
                    self.no(b, s)?
                } else {
                    self.no(a, s)?
                }
            }
            F::Or(a, _) => self.no(a, s)?,
            F::Implies(_, b) => self.no(b, s)?,
            F::Iff(a, b) => {
                if self.holds(a, s)? {
                    self.no(b, s)?
                } else {
                    self.no(a, s)?
                }
            }
            F::AX(g) => {
                let sg = self.set(g)?;
                match self.step_into(s, &sg, false) {
                    Some(path) => {
                        let t = path[1].state;
                        Trace::splice(path, self.no(g, t)?)
                    }
                    None => Trace::point(s),
                }
            }
            F::AG(g) => {
                let mut bad = self.set(g)?;
                bad.toggle_range(..);
                match self.bfs(s, None, &bad) {
                    Some(path) => {
                        let t = path.last().unwrap().state;
                        Trace::splice(path, self.no(g, t)?)
                    }
                    None => Trace::point(s),
                }
            }
            F::AF(g) => {
                let z = self.set(&F::EG(Box::new(F::not((**g).clone()))))?;
                self.lasso(s, &z)?
            }
            F::AU(a, b) => {
                let not_b = F::not((**b).clone());
                let escape = F::and(F::not((**a).clone()), not_b.clone());
                let eu = self.set(&F::EU(Box::new(not_b.clone()), Box::new(escape.clone())))?;
                if eu.contains(s as usize) {
                    let (within, target) = (self.set(&not_b)?, self.set(&escape)?);
                    self.bfs(s, Some(&within), &target)
                        .map(|p| Trace { prefix: p, cycle: Vec::new() })
                        .unwrap_or_else(|| Trace::point(s))
                } else {
                    let z = self.set(&F::EG(Box::new(not_b)))?;
                    self.lasso(s, &z)?
                }
            }
            F::X(_) => return Err(CheckError::UnsupportedOperator("X")),
            F::F(_) => return Err(CheckError::UnsupportedOperator("F")),
            F::G(_) => return Err(CheckError::UnsupportedOperator("G")),
            F::U(..) => return Err(CheckError::UnsupportedOperator("U")),
        })
    }

    /// Evidence that `f` is true at `s`.
    fn yes(&mut self, f: &Formula<usize>, s: u32) -> Result<Trace, CheckError> {
        use Formula as F;
        Ok(match f {
            F::True | F::False | F::Atom(_) | F::AX(_) | F::AF(_) | F::AG(_) | F::AU(..) => Trace::point(s),
            F::Not(g) => self.no(g, s)?,
            F::And(a, b) => {
                let t = self.yes(a, s)?;
                if t.len() > 1 {
                    t
                } else {
                    self.yes(b, s)?
                }
            }
            F::Or(a, b) => {
                if self.holds(a, s)? {
                    self.yes(a, s)?
                } else {
                    self.yes(b, s)?
                }
            }
            F::Implies(a, b) => {
                if self.holds(a, s)? {
                    self.yes(b, s)?
                } else {
                    self.no(a, s)?
                }
            }
            F::Iff(a, b) => {
                if self.holds(a, s)? {
                    self.yes(b, s)?
                } else {
                    self.no(b, s)?
                }
            }
            F::EX(g) => {
                let sg = self.set(g)?;
                match self.step_into(s, &sg, true) {
                    Some(path) => {
                        let t = path[1].state;
                        Trace::splice(path, self.yes(g, t)?)
                    }
                    None => Trace::point(s),
                }
            }
            F::EF(g) => {
                let target = self.set(g)?;
                match self.bfs(s, None, &target) {
                    Some(path) => {
                        let t = path.last().unwrap().state;
                        Trace::splice(path, self.yes(g, t)?)
                    }
                    None => Trace::point(s),
                }
            }
            F::EU(a, b) => {
                let (within, target) = (self.set(a)?, self.set(b)?);
                match self.bfs(s, Some(&within), &target) {
                    Some(path) => {
                        let t = path.last().unwrap().state;
                        Trace::splice(path, self.yes(b, t)?)
                    }
                    None => Trace::point(s),
                }
            }
            F::EG(_) => {
                let z = self.set(f)?;
                self.lasso(s, &z)?
            }
            F::X(_) => return Err(CheckError::UnsupportedOperator("X")),
            F::F(_) => return Err(CheckError::UnsupportedOperator("F")),
            F::G(_) => return Err(CheckError::UnsupportedOperator("G")),
            F::U(..) => return Err(CheckError::UnsupportedOperator("U")),
        })
    }

    /// One step from `s` to the lowest-id successor inside (`inside`) or
    /// outside (`!inside`) of `set`.
    fn step_into(&self, s: u32, set: &FixedBitSet, inside: bool) -> Option<Vec<Step>> {
        let e = self
            .lts()
            .succ(s)
            .iter()
            .filter(|e| set.contains(e.dst as usize) == inside)
            .min_by_key(|e| e.dst)?;
        Some(vec![Step { state: s, via: Some((e.instance, e.transition)) }, Step { state: e.dst, via: None }])
    }
}

/// Counterexample for a formula that is false at state `s`. `AG p` yields a
/// shortest path to a `!p` state, `AF p` a lasso avoiding `p`, and `!EF p` a
/// shortest path to a `p` state; nested operators extend the path from there.
pub fn explain_false(lts: &Lts, atoms: &[FixedBitSet], f: &Formula<usize>, s: u32) -> Result<Trace, CheckError> {
    Explainer { sat: Sat::new(lts, atoms) }.no(f, s)
}

/// Witness for a formula that is true at state `s`.
pub fn explain_true(lts: &Lts, atoms: &[FixedBitSet], f: &Formula<usize>, s: u32) -> Result<Trace, CheckError> {
    Explainer { sat: Sat::new(lts, atoms) }.yes(f, s)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("trace is empty")]
    Empty,
    #[error("trace does not start in an initial state")]
    NotInitial,
    #[error("step {step}: missing transition label")]
    MissingStep { step: usize },
    #[error("step {step}: firing {label} does not reach the recorded successor")]
    ReplayMismatch { step: usize, label: String },
    #[error("step {step}: {source}")]
    Eval { step: usize, source: EvalError },
    #[error("initial states: {0}")]
    Init(String),
}

/// Re-executes a trace against the composition's transition relation,
/// independently of how the LTS was built.
pub fn replay(c: &Composition, lts: &Lts, trace: &Trace) -> Result<(), ReplayError> {
    let steps: Vec<&Step> = trace.steps().collect();
    let first = steps.first().ok_or(ReplayError::Empty)?;
    let inits: HashSet<Box<[u32]>> = initial_states(c, &lts.layout)
        .map_err(|e| ReplayError::Init(e.to_string()))?
        .into_iter()
        .collect();
    if !inits.contains(lts.state(first.state)) {
        return Err(ReplayError::NotInitial);
    }
    for (i, step) in steps.iter().enumerate() {
        let next = if i + 1 < steps.len() {
            Some(steps[i + 1].state)
        } else if trace.is_lasso() {
            Some(trace.cycle[0].state)
        } else {
            None
        };
        let Some(next) = next else { break };
        let (k, t) = step.via.ok_or(ReplayError::MissingStep { step: i })?;
        let label = step_label(c, k, t);
        let got = fire(c, &lts.layout, lts.state(step.state), k as usize, t as usize)
            .map_err(|source| ReplayError::Eval { step: i, source })?;
        if got.as_deref() != Some(lts.state(next)) {
            return Err(ReplayError::ReplayMismatch { step: i, label });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(n: usize, on: &[usize]) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(n);
        on.iter().for_each(|i| b.insert(*i));
        b
    }

    fn atom(i: usize) -> Box<Formula<usize>> {
        Box::new(Formula::Atom(i))
    }

    /// 0 -> {1, 2}, 1 -> 3, 2 -> 3, 3 -> 3; p at 3.
    fn diamond() -> (Lts, Vec<FixedBitSet>) {
        let lts = Lts::from_parts(4, &[(0, 2), (0, 1), (1, 3), (2, 3), (3, 3)], vec![0], vec![]);
        (lts, vec![bits(4, &[3]), bits(4, &[0, 1, 2])])
    }

    #[test]
    fn ag_counterexample_is_shortest_lowest_path() {
        let (l, a) = diamond();
        let t = explain_false(&l, &a, &Formula::AG(atom(1)), 0).unwrap();
        let ids: Vec<u32> = t.steps().map(|s| s.state).collect();
        assert_eq!(ids, [0, 1, 3]);
        assert!(!t.is_lasso());
    }

    #[test]
    fn af_counterexample_is_lasso() {
        let l = Lts::from_parts(3, &[(0, 1), (1, 2), (2, 1), (0, 0)], vec![0], vec![]);
        let a = vec![bits(3, &[])];
        let t = explain_false(&l, &a, &Formula::AF(atom(0)), 0).unwrap();
        assert!(t.is_lasso());
        assert_eq!(t.prefix.iter().map(|s| s.state).collect::<Vec<_>>(), Vec::<u32>::new());
        assert_eq!(t.cycle.iter().map(|s| s.state).collect::<Vec<_>>(), [0]);
    }

    #[test]
    fn not_ef_counterexample_reaches_target() {
        let (l, a) = diamond();
        let f = Formula::not(Formula::EF(atom(0)));
        let t = explain_false(&l, &a, &f, 0).unwrap();
        assert_eq!(t.steps().last().unwrap().state, 3);
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn ag_implies_af_nests() {
        // 0 -> 1 -> 1: q at 1, p never. AG(q -> AF p) fails via 0,1 then loop at 1.
        let l = Lts::from_parts(2, &[(0, 1), (1, 1)], vec![0], vec![]);
        let a = vec![bits(2, &[]), bits(2, &[1])];
        let f = Formula::AG(Box::new(Formula::implies(Formula::Atom(1), Formula::AF(atom(0)))));
        let t = explain_false(&l, &a, &f, 0).unwrap();
        assert_eq!(t.prefix.iter().map(|s| s.state).collect::<Vec<_>>(), [0]);
        assert_eq!(t.cycle.iter().map(|s| s.state).collect::<Vec<_>>(), [1]);
    }
}
