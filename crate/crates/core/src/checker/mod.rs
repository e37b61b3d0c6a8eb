//! CTL model checking over a concretized [`Lts`] by bottom-up labeling.
//!
//! Formulas are first rewritten into the base operators
//! `{true, atom, !, &, EX, EU, EG}`:
//!
//! | source      | rewritten                                   |
//! |-------------|---------------------------------------------|
//! | `false`     | `!true`                                     |
//! | `a \| b`    | `!(!a & !b)`                                |
//! | `a -> b`    | `!(a & !b)`                                 |
//! | `a <-> b`   | `(a -> b) & (b -> a)`                       |
//! | `AX a`      | `!EX !a`                                    |
//! | `EF a`      | `E[true U a]`                               |
//! | `AF a`      | `!EG !a`                                    |
//! | `AG a`      | `!E[true U !a]`                             |
//! | `A[a U b]`  | `!(E[!b U (!a & !b)] \| EG !b)`             |

mod trace;

use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::expr::Expr;
use crate::frontend::CheckedFormula;
use crate::graph::{Composition, Lts};
use crate::logic::{Formula, Logic};

pub use trace::{explain_false, explain_true, replay, step_label, ReplayError, Step, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("LTL operator `{0}` cannot be checked natively (emit a NuSMV program instead)")]
    UnsupportedOperator(&'static str),
    #[error("cannot evaluate atom `{0}`: {1}")]
    AtomResolution(String, String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Formula in base form over indices into an atom table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Base {
    True,
    Atom(usize),
    Not(Box<Base>),
    And(Box<Base>, Box<Base>),
    EX(Box<Base>),
    EU(Box<Base>, Box<Base>),
    EG(Box<Base>),
}

impl Base {
    fn not(b: Base) -> Base {
        match b {
            Base::Not(inner) => *inner,
            b => Base::Not(Box::new(b)),
        }
    }
    fn and(a: Base, b: Base) -> Base {
        Base::And(Box::new(a), Box::new(b))
    }
    fn or(a: Base, b: Base) -> Base {
        Base::not(Base::and(Base::not(a), Base::not(b)))
    }
}

/// Rewrites a CTL formula into [`Base`] form.
pub fn to_base(f: &Formula<usize>) -> Result<Base, CheckError> {
    use Formula as F;
    let b = |x: &Formula<usize>| to_base(x);
    Ok(match f {
        F::True => Base::True,
        F::False => Base::not(Base::True),
        F::Atom(i) => Base::Atom(*i),
        F::Not(a) => Base::not(b(a)?),
        F::And(x, y) => Base::and(b(x)?, b(y)?),
        F::Or(x, y) => Base::or(b(x)?, b(y)?),
        F::Implies(x, y) => Base::not(Base::and(b(x)?, Base::not(b(y)?))),
        F::Iff(x, y) => {
            let (x, y) = (b(x)?, b(y)?);
            Base::and(
                Base::not(Base::and(x.clone(), Base::not(y.clone()))),
                Base::not(Base::and(y, Base::not(x))),
            )
        }
        F::EX(a) => Base::EX(Box::new(b(a)?)),
        F::AX(a) => Base::not(Base::EX(Box::new(Base::not(b(a)?)))),
        F::EF(a) => Base::EU(Box::new(Base::True), Box::new(b(a)?)),
        F::AF(a) => Base::not(Base::EG(Box::new(Base::not(b(a)?)))),
        F::EG(a) => Base::EG(Box::new(b(a)?)),
        F::AG(a) => Base::not(Base::EU(Box::new(Base::True), Box::new(Base::not(b(a)?)))),
        F::EU(x, y) => Base::EU(Box::new(b(x)?), Box::new(b(y)?)),
        F::AU(x, y) => {
            let (x, y) = (b(x)?, b(y)?);
            let not_y = Base::not(y);
            Base::not(Base::or(
                Base::EU(Box::new(not_y.clone()), Box::new(Base::and(Base::not(x), not_y.clone()))),
                Base::EG(Box::new(not_y)),
            ))
        }
        F::X(_) => return Err(CheckError::UnsupportedOperator("X")),
        F::F(_) => return Err(CheckError::UnsupportedOperator("F")),
        F::G(_) => return Err(CheckError::UnsupportedOperator("G")),
        F::U(..) => return Err(CheckError::UnsupportedOperator("U")),
    })
}

/// Satisfaction-set computation over one LTS and an atom table.
pub struct Sat<'a> {
    lts: &'a Lts,
    atoms: &'a [FixedBitSet],
    pred_offsets: Vec<u32>,
    preds: Vec<u32>,
    /// Sizes of the EU iterates and EG iterates, per fixpoint computed.
    pub eu_iterations: Vec<Vec<usize>>,
    pub eg_iterations: Vec<Vec<usize>>,
}

impl<'a> Sat<'a> {
    pub fn new(lts: &'a Lts, atoms: &'a [FixedBitSet]) -> Self {
        let n = lts.num_states();
        let mut pred_offsets = vec![0u32; n + 1];
        for s in 0..n as u32 {
            for e in lts.succ(s) {
                pred_offsets[e.dst as usize + 1] += 1;
            }
        }
        for i in 0..n {
            pred_offsets[i + 1] += pred_offsets[i];
        }
        let mut fill = pred_offsets.clone();
        let mut preds = vec![0u32; pred_offsets[n] as usize];
        for s in 0..n as u32 {
            for e in lts.succ(s) {
                let slot = &mut fill[e.dst as usize];
                preds[*slot as usize] = s;
                *slot += 1;
            }
        }
        Sat { lts, atoms, pred_offsets, preds, eu_iterations: Vec::new(), eg_iterations: Vec::new() }
    }

    pub fn lts(&self) -> &Lts {
        self.lts
    }

    fn n(&self) -> usize {
        self.lts.num_states()
    }

    fn pred(&self, s: u32) -> &[u32] {
        &self.preds[self.pred_offsets[s as usize] as usize..self.pred_offsets[s as usize + 1] as usize]
    }

    fn full(&self) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(self.n());
        s.insert_range(..);
        s
    }

    fn complement(&self, mut s: FixedBitSet) -> FixedBitSet {
        s.toggle_range(..);
        s
    }

    pub fn eval(&mut self, f: &Base) -> FixedBitSet {
        match f {
            Base::True => self.full(),
            Base::Atom(i) => self.atoms[*i].clone(),
            Base::Not(a) => {
                let s = self.eval(a);
                self.complement(s)
            }
            Base::And(a, b) => {
                let mut s = self.eval(a);
                s.intersect_with(&self.eval(b));
                s
            }
            Base::EX(a) => {
                let target = self.eval(a);
                self.pre_exists(&target)
            }
            Base::EU(a, b) => {
                let (sa, sb) = (self.eval(a), self.eval(b));
                self.eu(&sa, &sb)
            }
            Base::EG(a) => {
                let sa = self.eval(a);
                self.eg(&sa)
            }
        }
    }

    /// States with at least one successor in `target`.
    pub fn pre_exists(&self, target: &FixedBitSet) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.n());
        for t in target.ones() {
            for &p in self.pred(t as u32) {
                out.insert(p as usize);
            }
        }
        out
    }

    /// Least fixpoint `Z = b | (a & EX Z)`, by backward breadth-first layers.
    pub fn eu(&mut self, a: &FixedBitSet, b: &FixedBitSet) -> FixedBitSet {
        let mut z = b.clone();
        let mut frontier: Vec<u32> = b.ones().map(|s| s as u32).collect();
        let mut sizes = vec![z.count_ones(..)];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &t in &frontier {
                for &p in self.pred(t) {
                    if a.contains(p as usize) && !z.contains(p as usize) {
                        z.insert(p as usize);
                        next.push(p);
                    }
                }
            }
            if !next.is_empty() {
                sizes.push(z.count_ones(..));
            }
            frontier = next;
        }
        self.eu_iterations.push(sizes);
        z
    }

    /// Greatest fixpoint `Z = a & EX Z`: repeatedly drops states of `a`
    /// without a successor left in the set.
    pub fn eg(&mut self, a: &FixedBitSet) -> FixedBitSet {
        let mut z = a.clone();
        let mut count = vec![0u32; self.n()];
        let mut dead = Vec::new();
        for s in a.ones() {
            count[s] = self.lts.succ(s as u32).iter().filter(|e| a.contains(e.dst as usize)).count() as u32;
            if count[s] == 0 {
                dead.push(s as u32);
            }
        }
        let mut sizes = vec![z.count_ones(..)];
        for &s in &dead {
            z.set(s as usize, false);
        }
        while !dead.is_empty() {
            sizes.push(z.count_ones(..));
            let mut next = Vec::new();
            for &s in &dead {
                for &p in self.pred(s) {
                    if z.contains(p as usize) {
                        let c = &mut count[p as usize];
                        *c -= 1;
                        if *c == 0 {
                            z.set(p as usize, false);
                            next.push(p);
                        }
                    }
                }
            }
            dead = next;
        }
        self.eg_iterations.push(sizes);
        z
    }

    /// `AG p` directly as the greatest fixpoint `Z = p & AX Z`.
    pub fn ag_direct(&self, p: &FixedBitSet) -> FixedBitSet {
        let mut z = p.clone();
        let mut queue: Vec<u32> = (0..self.n() as u32).filter(|s| !p.contains(*s as usize)).collect();
        while let Some(s) = queue.pop() {
            for &q in self.pred(s) {
                if z.contains(q as usize) {
                    z.set(q as usize, false);
                    queue.push(q);
                }
            }
        }
        z
    }

    /// `AF p` directly as the least fixpoint `Z = p | AX Z`.
    pub fn af_direct(&self, p: &FixedBitSet) -> FixedBitSet {
        let mut z = p.clone();
        let mut missing: Vec<u32> = (0..self.n() as u32).map(|s| self.lts.succ(s).len() as u32).collect();
        let mut queue: Vec<u32> = p.ones().map(|s| s as u32).collect();
        while let Some(s) = queue.pop() {
            for &q in self.pred(s) {
                let m = &mut missing[q as usize];
                *m -= 1;
                if *m == 0 && !z.contains(q as usize) {
                    z.insert(q as usize);
                    queue.push(q);
                }
            }
        }
        z
    }

    /// Checks `Sat(AG p) = S \ Sat(EF !p)` and `Sat(AF p) = S \ Sat(EG !p)`.
    pub fn duality_holds(&mut self, p: &FixedBitSet) -> bool {
        let not_p = self.complement(p.clone());
        let ef_not = self.eu(&self.full(), &not_p);
        let eg_not = self.eg(&not_p);
        self.ag_direct(p) == self.complement(ef_not) && self.af_direct(p) == self.complement(eg_not)
    }
}

/// Satisfaction set of a CTL formula over atom indices.
pub fn sat_set(lts: &Lts, atoms: &[FixedBitSet], f: &Formula<usize>) -> Result<FixedBitSet, CheckError> {
    let base = to_base(f)?;
    let mut sat = Sat::new(lts, atoms);
    let out = sat.eval(&base);
    if cfg!(debug_assertions) {
        debug_check_duality(&mut sat, f)?;
    }
    Ok(out)
}

fn debug_check_duality(sat: &mut Sat, f: &Formula<usize>) -> Result<(), CheckError> {
    let mut result = Ok(());
    let mut stack = vec![f];
    while let Some(g) = stack.pop() {
        if let Formula::AG(p) | Formula::AF(p) = g {
            let set = sat.eval(&to_base(p)?);
            if !sat.duality_holds(&set) {
                result = Err(CheckError::Internal("AG/EF or AF/EG duality violated".into()));
            }
        }
        stack.extend(g.children());
    }
    result
}

/// Lowers atoms of a global-state formula to satisfaction sets.
pub fn atom_table(lts: &Lts, c: &Composition, f: &Formula<Expr>) -> Result<(Formula<usize>, Vec<FixedBitSet>), CheckError> {
    let mut table: Vec<FixedBitSet> = Vec::new();
    let mut exprs: Vec<Expr> = Vec::new();
    let lowered = f.try_map(&mut |e: &Expr| {
        if let Some(i) = exprs.iter().position(|x| x == e) {
            return Ok(i);
        }
        let set = lts
            .eval_set(e)
            .map_err(|err| CheckError::AtomResolution(c.render_expr(e), err.to_string()))?;
        exprs.push(e.clone());
        table.push(set);
        Ok(exprs.len() - 1)
    })?;
    Ok((lowered, table))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Holds,
    Fails,
    /// LTL: left to the emitted NuSMV program.
    Delegated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjunctVerdict {
    pub text: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub text: String,
    pub logic: Logic,
    pub outcome: Outcome,
    pub evidence: Option<Trace>,
    /// Per top-level conjunct, when the formula is a conjunction.
    pub conjuncts: Vec<ConjunctVerdict>,
    pub states: usize,
    pub elapsed: Duration,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.outcome == Outcome::Holds
    }
}

/// Checks one formula: it holds iff every initial state satisfies it. A
/// failure carries a counterexample rooted at the lowest failing initial state.
pub fn check_formula(lts: &Lts, c: &Composition, f: &CheckedFormula) -> Result<Verdict, CheckError> {
    let start = Instant::now();
    if f.logic == Logic::Ltl {
        return Ok(Verdict {
            text: f.text.clone(),
            logic: f.logic,
            outcome: Outcome::Delegated,
            evidence: None,
            conjuncts: Vec::new(),
            states: lts.num_states(),
            elapsed: start.elapsed(),
        });
    }
    let (lowered, atoms) = atom_table(lts, c, &f.formula)?;
    let sat = sat_set(lts, &atoms, &lowered)?;
    let bad = lts.initial().iter().copied().find(|s| !sat.contains(*s as usize));
    let evidence = match bad {
        Some(s) => Some(explain_false(lts, &atoms, &lowered, s)?),
        None => None,
    };
    let conjunct_forms = f.formula.conjuncts();
    let mut conjuncts = Vec::new();
    if conjunct_forms.len() > 1 {
        for g in conjunct_forms {
            let (lg, ag) = atom_table(lts, c, g)?;
            let set = sat_set(lts, &ag, &lg)?;
            conjuncts.push(ConjunctVerdict {
                text: g.render(&|e| c.render_expr(e)),
                holds: lts.initial().iter().all(|s| set.contains(*s as usize)),
            });
        }
    }
    Ok(Verdict {
        text: f.text.clone(),
        logic: f.logic,
        outcome: if bad.is_none() { Outcome::Holds } else { Outcome::Fails },
        evidence,
        conjuncts,
        states: lts.num_states(),
        elapsed: start.elapsed(),
    })
}

/// Checks every formula of the composition in declaration order.
pub fn check(lts: &Lts, c: &Composition) -> Result<Vec<Verdict>, CheckError> {
    c.formulas.iter().map(|f| check_formula(lts, c, f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(n: usize, on: &[usize]) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(n);
        on.iter().for_each(|i| b.insert(*i));
        b
    }

    /// 0 -> 1 -> 2 -> 2, 0 -> 3 -> 3; p holds in {2}, q in {0, 3}.
    fn sample() -> (Lts, Vec<FixedBitSet>) {
        let lts = Lts::from_parts(4, &[(0, 1), (1, 2), (2, 2), (0, 3), (3, 3)], vec![0], vec![]);
        (lts, vec![bits(4, &[2]), bits(4, &[0, 3])])
    }

    fn atom(i: usize) -> Box<Formula<usize>> {
        Box::new(Formula::Atom(i))
    }

    #[test]
    fn true_is_everything() {
        let (l, a) = sample();
        assert_eq!(sat_set(&l, &a, &Formula::True).unwrap().count_ones(..), 4);
    }

    #[test]
    fn temporal_operators_on_sample() {
        let (l, a) = sample();
        let s = |f: Formula<usize>| sat_set(&l, &a, &f).unwrap().ones().collect::<Vec<_>>();
        assert_eq!(s(Formula::EF(atom(0))), vec![0, 1, 2]);
        assert_eq!(s(Formula::AF(atom(0))), vec![1, 2]);
        assert_eq!(s(Formula::EG(atom(1))), vec![0, 3]);
        assert_eq!(s(Formula::AG(atom(1))), vec![3]);
        assert_eq!(s(Formula::EX(atom(0))), vec![1, 2]);
        assert_eq!(s(Formula::AX(atom(1))), vec![3]);
        assert_eq!(s(Formula::AU(atom(1), atom(0))), vec![2]);
        assert_eq!(s(Formula::EU(atom(1), atom(0))), vec![2]);
    }

    #[test]
    fn ltl_is_unsupported() {
        let (l, a) = sample();
        let err = sat_set(&l, &a, &Formula::G(atom(0))).unwrap_err();
        assert_eq!(err, CheckError::UnsupportedOperator("G"));
    }

    #[test]
    fn fixpoint_iterates_are_monotone() {
        let (l, a) = sample();
        let mut sat = Sat::new(&l, &a);
        sat.eu(&bits(4, &[0, 1, 2, 3]), &a[0]);
        sat.eg(&bits(4, &[0, 1, 3]));
        let eu = &sat.eu_iterations[0];
        assert!(eu.windows(2).all(|w| w[0] <= w[1]));
        let eg = &sat.eg_iterations[0];
        assert!(eg.windows(2).all(|w| w[0] >= w[1]));
        assert!(eu.len() <= 4 && eg.len() <= 4);
    }

    #[test]
    fn duality() {
        let (l, a) = sample();
        let mut sat = Sat::new(&l, &a);
        assert!(sat.duality_holds(&a[0]));
        assert!(sat.duality_holds(&a[1]));
    }
}
