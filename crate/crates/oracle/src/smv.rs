//! Explicit-state interpreter for the NuSMV subset the emitter writes: one
//! `MODULE main` with `VAR`, `IVAR`, `ASSIGN init(..)`, `INIT`, `DEFINE`,
//! `TRANS`, `CTLSPEC` and `LTLSPEC` sections and no `case` expressions.
//!
//! The first `TRANS` section must be a disjunction of conjunctions in which
//! every state variable is fixed by an equation `next(x) = e`; later
//! sections only filter the resulting pairs. CTL specifications are decided
//! on the reachable states with [`Kripke`]; LTL ones are left undecided.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use ssiv_core::logic::Formula;

use crate::ctl::Kripke;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Val {
    Bool(bool),
    Int(i64),
    Sym(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Ty {
    Bool,
    Range(i64, i64),
    Enum(Vec<String>),
}

impl Ty {
    fn domain(&self) -> Vec<Val> {
        match self {
            Ty::Bool => vec![Val::Bool(false), Val::Bool(true)],
            Ty::Range(lo, hi) => (*lo..=*hi).map(Val::Int).collect(),
            Ty::Enum(names) => names.iter().cloned().map(Val::Sym).collect(),
        }
    }

    fn admits(&self, v: &Val) -> bool {
        match (self, v) {
            (Ty::Bool, Val::Bool(_)) => true,
            (Ty::Range(lo, hi), Val::Int(n)) => lo <= n && n <= hi,
            (Ty::Enum(names), Val::Sym(s)) => names.contains(s),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Un {
    Not,
    Neg,
    EX,
    AX,
    EF,
    AF,
    EG,
    AG,
    X,
    F,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bin {
    Add,
    Sub,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Xor,
    Iff,
    Implies,
    EU,
    AU,
    U,
}

#[derive(Debug, Clone, PartialEq)]
enum E {
    Lit(Val),
    Id(String),
    Next(String),
    Un(Un, Box<E>),
    Bin(Bin, Box<E>, Box<E>),
}

impl E {
    fn temporal(&self) -> bool {
        match self {
            E::Un(op, a) => !matches!(op, Un::Not | Un::Neg) || a.temporal(),
            E::Bin(op, a, b) => matches!(op, Bin::EU | Bin::AU | Bin::U) || a.temporal() || b.temporal(),
            _ => false,
        }
    }

    fn mentions_next(&self) -> bool {
        match self {
            E::Next(_) => true,
            E::Un(_, a) => a.mentions_next(),
            E::Bin(_, a, b) => a.mentions_next() || b.mentions_next(),
            _ => false,
        }
    }

    fn flatten(&self, op: Bin, out: &mut Vec<E>) {
        match self {
            E::Bin(o, a, b) if *o == op => {
                a.flatten(op, out);
                b.flatten(op, out);
            }
            e => out.push(e.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Num(i64),
    Sym(&'static str),
}

fn lex(text: &str) -> Result<Vec<Tok>, String> {
    const SYMS: &[&str] =
        &["<->", ":=", "->", "!=", "<=", ">=", "..", "=", "<", ">", "&", "|", "!", "+", "-", "(", ")", "{", "}", "[", "]", ":", ";", ","];
    let mut out = Vec::new();
    let b = text.as_bytes();
    let mut i = 0;
    'outer: while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if text[i..].starts_with("--") {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push(Tok::Id(text[start..i].to_string()));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Tok::Num(text[start..i].parse().map_err(|e| format!("{e}"))?));
            continue;
        }
        for s in SYMS {
            if text[i..].starts_with(s) {
                out.push(Tok::Sym(s));
                i += s.len();
                continue 'outer;
            }
        }
        return Err(format!("unexpected character `{c}`"));
    }
    Ok(out)
}

const SECTIONS: &[&str] = &["MODULE", "VAR", "IVAR", "ASSIGN", "INIT", "DEFINE", "TRANS", "CTLSPEC", "LTLSPEC", "SPEC", "INVAR"];

struct Parser {
    toks: Vec<Tok>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at)
    }

    fn next(&mut self) -> Result<Tok, String> {
        let t = self.toks.get(self.at).cloned().ok_or("unexpected end of input")?;
        self.at += 1;
        Ok(t)
    }

    fn eat(&mut self, s: &str) -> bool {
        let hit = match self.peek() {
            Some(Tok::Sym(x)) => *x == s,
            Some(Tok::Id(x)) => x == s,
            _ => false,
        };
        if hit {
            self.at += 1;
        }
        hit
    }

    fn expect(&mut self, s: &str) -> Result<(), String> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(format!("expected `{s}`, found {:?}", self.peek()))
        }
    }

    fn ident(&mut self) -> Result<String, String> {
        match self.next()? {
            Tok::Id(s) => Ok(s),
            t => Err(format!("expected identifier, found {t:?}")),
        }
    }

    fn at_section(&self) -> bool {
        matches!(self.peek(), Some(Tok::Id(s)) if SECTIONS.contains(&s.as_str())) || self.peek().is_none()
    }

    fn expr(&mut self) -> Result<E, String> {
        let a = self.iff()?;
        if self.eat("->") {
            let b = self.expr()?;
            return Ok(E::Bin(Bin::Implies, Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn iff(&mut self) -> Result<E, String> {
        let mut a = self.or()?;
        while self.eat("<->") {
            a = E::Bin(Bin::Iff, Box::new(a), Box::new(self.or()?));
        }
        Ok(a)
    }

    fn or(&mut self) -> Result<E, String> {
        let mut a = self.and()?;
        loop {
            let op = if self.eat("|") {
                Bin::Or
            } else if self.eat("xor") {
                Bin::Xor
            } else {
                return Ok(a);
            };
            a = E::Bin(op, Box::new(a), Box::new(self.and()?));
        }
    }

    fn and(&mut self) -> Result<E, String> {
        let mut a = self.cmp()?;
        while self.eat("&") {
            a = E::Bin(Bin::And, Box::new(a), Box::new(self.cmp()?));
        }
        Ok(a)
    }

    fn cmp(&mut self) -> Result<E, String> {
        let a = self.add()?;
        for (s, op) in [("=", Bin::Eq), ("!=", Bin::Ne), ("<=", Bin::Le), (">=", Bin::Ge), ("<", Bin::Lt), (">", Bin::Gt)] {
            if self.eat(s) {
                return Ok(E::Bin(op, Box::new(a), Box::new(self.add()?)));
            }
        }
        Ok(a)
    }

    fn add(&mut self) -> Result<E, String> {
        let mut a = self.unary()?;
        loop {
            let op = if self.eat("+") {
                Bin::Add
            } else if self.eat("-") {
                Bin::Sub
            } else {
                return Ok(a);
            };
            a = E::Bin(op, Box::new(a), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<E, String> {
        let ops = [
            ("!", Un::Not),
            ("-", Un::Neg),
            ("EX", Un::EX),
            ("AX", Un::AX),
            ("EF", Un::EF),
            ("AF", Un::AF),
            ("EG", Un::EG),
            ("AG", Un::AG),
            ("X", Un::X),
            ("F", Un::F),
            ("G", Un::G),
        ];
        for (s, op) in ops {
            if self.eat(s) {
                return Ok(E::Un(op, Box::new(self.unary()?)));
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<E, String> {
        for (q, op) in [("E", Bin::EU), ("A", Bin::AU)] {
            if matches!(self.peek(), Some(Tok::Id(s)) if s == q)
                && matches!(self.toks.get(self.at + 1), Some(Tok::Sym("[")))
            {
                self.at += 2;
                let a = self.expr()?;
                self.expect("U")?;
                let b = self.expr()?;
                self.expect("]")?;
                return Ok(E::Bin(op, Box::new(a), Box::new(b)));
            }
        }
        match self.next()? {
            Tok::Sym("(") => {
                let a = self.expr()?;
                let e = if self.eat("U") { E::Bin(Bin::U, Box::new(a), Box::new(self.expr()?)) } else { a };
                self.expect(")")?;
                Ok(e)
            }
            Tok::Num(n) => Ok(E::Lit(Val::Int(n))),
            Tok::Id(s) if s == "TRUE" => Ok(E::Lit(Val::Bool(true))),
            Tok::Id(s) if s == "FALSE" => Ok(E::Lit(Val::Bool(false))),
            Tok::Id(s) if s == "next" => {
                self.expect("(")?;
                let x = self.ident()?;
                self.expect(")")?;
                Ok(E::Next(x))
            }
            Tok::Id(s) => Ok(E::Id(s)),
            t => Err(format!("unexpected token {t:?}")),
        }
    }

    fn ty(&mut self) -> Result<Ty, String> {
        if self.eat("boolean") {
            return Ok(Ty::Bool);
        }
        if self.eat("{") {
            let mut names = Vec::new();
            loop {
                names.push(self.ident()?);
                if self.eat("}") {
                    return Ok(Ty::Enum(names));
                }
                self.expect(",")?;
            }
        }
        let lo = self.int()?;
        self.expect("..")?;
        Ok(Ty::Range(lo, self.int()?))
    }

    fn int(&mut self) -> Result<i64, String> {
        let neg = self.eat("-");
        match self.next()? {
            Tok::Num(n) => Ok(if neg { -n } else { n }),
            t => Err(format!("expected integer, found {t:?}")),
        }
    }
}

/// A parsed program.
#[derive(Debug, Clone)]
pub struct SmvProgram {
    vars: Vec<(String, Ty)>,
    ivars: Vec<(String, Ty)>,
    init_assign: Vec<(String, E)>,
    init: Vec<E>,
    defines: HashMap<String, E>,
    trans: Vec<E>,
    /// `true` for CTL.
    specs: Vec<(bool, E)>,
    constants: HashSet<String>,
}

pub fn parse(text: &str) -> Result<SmvProgram, String> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    p.expect("MODULE")?;
    p.expect("main")?;
    let mut m = SmvProgram {
        vars: Vec::new(),
        ivars: Vec::new(),
        init_assign: Vec::new(),
        init: Vec::new(),
        defines: HashMap::new(),
        trans: Vec::new(),
        specs: Vec::new(),
        constants: HashSet::new(),
    };
    while let Some(tok) = p.peek().cloned() {
        let Tok::Id(section) = tok else { return Err(format!("expected a section, found {tok:?}")) };
        p.at += 1;
        match section.as_str() {
            "VAR" | "IVAR" => {
                while !p.at_section() {
                    let name = p.ident()?;
                    p.expect(":")?;
                    let ty = p.ty()?;
                    p.expect(";")?;
                    if let Ty::Enum(names) = &ty {
                        m.constants.extend(names.iter().cloned());
                    }
                    if section == "VAR" { &mut m.vars } else { &mut m.ivars }.push((name, ty));
                }
            }
            "ASSIGN" => {
                while !p.at_section() {
                    p.expect("init")?;
                    p.expect("(")?;
                    let x = p.ident()?;
                    p.expect(")")?;
                    p.expect(":=")?;
                    let e = p.expr()?;
                    p.expect(";")?;
                    m.init_assign.push((x, e));
                }
            }
            "DEFINE" => {
                while !p.at_section() {
                    let x = p.ident()?;
                    p.expect(":=")?;
                    let e = p.expr()?;
                    p.expect(";")?;
                    m.defines.insert(x, e);
                }
            }
            "INIT" => m.init.push(p.expr()?),
            "TRANS" => m.trans.push(p.expr()?),
            "CTLSPEC" | "SPEC" => m.specs.push((true, p.expr()?)),
            "LTLSPEC" => m.specs.push((false, p.expr()?)),
            other => return Err(format!("unsupported section {other}")),
        }
    }
    Ok(m)
}

struct Ctx<'a> {
    m: &'a SmvProgram,
    index: &'a HashMap<&'a str, Slot>,
    cur: &'a [Val],
    next: Option<&'a [Val]>,
    ivals: &'a [Val],
}

#[derive(Clone, Copy)]
enum Slot {
    Var(usize),
    Ivar(usize),
}

impl Ctx<'_> {
    fn bool(&self, e: &E) -> Result<bool, String> {
        match self.eval(e)? {
            Val::Bool(b) => Ok(b),
            v => Err(format!("expected a boolean, got {v:?}")),
        }
    }

    fn int(&self, e: &E) -> Result<i64, String> {
        match self.eval(e)? {
            Val::Int(n) => Ok(n),
            v => Err(format!("expected an integer, got {v:?}")),
        }
    }

    fn eval(&self, e: &E) -> Result<Val, String> {
        Ok(match e {
            E::Lit(v) => v.clone(),
            E::Id(x) => match self.index.get(x.as_str()) {
                Some(Slot::Var(i)) => self.cur[*i].clone(),
                Some(Slot::Ivar(i)) => self.ivals[*i].clone(),
                None => match self.m.defines.get(x) {
                    Some(d) => self.eval(d)?,
                    None if self.m.constants.contains(x) => Val::Sym(x.clone()),
                    None => return Err(format!("unknown identifier `{x}`")),
                },
            },
            E::Next(x) => match (self.index.get(x.as_str()), self.next) {
                (Some(Slot::Var(i)), Some(n)) => n[*i].clone(),
                _ => return Err(format!("`next({x})` outside a transition")),
            },
            E::Un(Un::Not, a) => Val::Bool(!self.bool(a)?),
            E::Un(Un::Neg, a) => Val::Int(-self.int(a)?),
            E::Un(..) => return Err("temporal operator inside a state expression".into()),
            E::Bin(op, a, b) => match op {
                Bin::Add => Val::Int(self.int(a)? + self.int(b)?),
                Bin::Sub => Val::Int(self.int(a)? - self.int(b)?),
                Bin::Eq | Bin::Ne => {
                    let (x, y) = (self.eval(a)?, self.eval(b)?);
                    if std::mem::discriminant(&x) != std::mem::discriminant(&y) {
                        return Err(format!("comparing {x:?} with {y:?}"));
                    }
                    Val::Bool((x == y) == (*op == Bin::Eq))
                }
                Bin::Lt => Val::Bool(self.int(a)? < self.int(b)?),
                Bin::Le => Val::Bool(self.int(a)? <= self.int(b)?),
                Bin::Gt => Val::Bool(self.int(a)? > self.int(b)?),
                Bin::Ge => Val::Bool(self.int(a)? >= self.int(b)?),
                Bin::And => Val::Bool(self.bool(a)? && self.bool(b)?),
                Bin::Or => Val::Bool(self.bool(a)? || self.bool(b)?),
                Bin::Xor => Val::Bool(self.bool(a)? != self.bool(b)?),
                Bin::Iff => Val::Bool(self.bool(a)? == self.bool(b)?),
                Bin::Implies => Val::Bool(!self.bool(a)? || self.bool(b)?),
                Bin::EU | Bin::AU | Bin::U => return Err("temporal operator inside a state expression".into()),
            },
        })
    }
}

/// Reachable part of a program's transition system with its verdicts.
#[derive(Debug, Clone)]
pub struct SmvRun {
    pub states: Vec<Vec<Val>>,
    pub initial: Vec<u32>,
    pub succ: Vec<Vec<u32>>,
    /// Per specification; `None` for LTL.
    pub verdicts: Vec<Option<bool>>,
}

impl SmvProgram {
    fn index(&self) -> HashMap<&str, Slot> {
        let mut ix = HashMap::new();
        for (i, (n, _)) in self.vars.iter().enumerate() {
            ix.insert(n.as_str(), Slot::Var(i));
        }
        for (i, (n, _)) in self.ivars.iter().enumerate() {
            ix.insert(n.as_str(), Slot::Ivar(i));
        }
        ix
    }

    fn var(&self, name: &str) -> Result<usize, String> {
        self.vars.iter().position(|(n, _)| n == name).ok_or_else(|| format!("unknown variable `{name}`"))
    }

    fn initial_states(&self, index: &HashMap<&str, Slot>) -> Result<Vec<Vec<Val>>, String> {
        let blank = vec![Val::Bool(false); self.vars.len()];
        let ctx = Ctx { m: self, index, cur: &blank, next: None, ivals: &[] };
        let mut fixed: Vec<Option<Val>> = vec![None; self.vars.len()];
        for (x, e) in &self.init_assign {
            fixed[self.var(x)?] = Some(ctx.eval(e)?);
        }
        let mut alternatives = Vec::new();
        match self.init.first() {
            None => alternatives.push(fixed.clone()),
            Some(first) => {
                let mut disjuncts = Vec::new();
                first.flatten(Bin::Or, &mut disjuncts);
                for d in disjuncts {
                    let mut conj = Vec::new();
                    d.flatten(Bin::And, &mut conj);
                    let mut vals = fixed.clone();
                    for c in conj {
                        match c {
                            E::Bin(Bin::Eq, x, v) if matches!(&*x, E::Id(n) if self.var(n).is_ok()) => {
                                let E::Id(n) = *x else { unreachable!() };
                                vals[self.var(&n)?] = Some(ctx.eval(&v)?);
                            }
                            E::Lit(Val::Bool(false)) => vals.clear(),
                            other => return Err(format!("unsupported INIT conjunct {other:?}")),
                        }
                    }
                    if !vals.is_empty() {
                        alternatives.push(vals);
                    }
                }
            }
        }
        let mut out = BTreeSet::new();
        for alt in alternatives {
            let state: Vec<Val> = alt
                .into_iter()
                .enumerate()
                .map(|(i, v)| v.ok_or_else(|| format!("`{}` has no initial value", self.vars[i].0)))
                .collect::<Result<_, _>>()?;
            if !state.iter().zip(&self.vars).all(|(v, (_, t))| t.admits(v)) {
                continue;
            }
            let ctx = Ctx { m: self, index, cur: &state, next: None, ivals: &[] };
            if self.init.iter().skip(1).map(|e| ctx.bool(e)).collect::<Result<Vec<_>, _>>()?.into_iter().all(|b| b) {
                out.insert(state);
            }
        }
        Ok(out.into_iter().collect())
    }

    /// Splits the first `TRANS` into guarded assignments to every variable.
    fn generators(&self) -> Result<Vec<(Vec<E>, Vec<(usize, E)>)>, String> {
        let first = self.trans.first().ok_or("no TRANS section")?;
        let mut disjuncts = Vec::new();
        first.flatten(Bin::Or, &mut disjuncts);
        let mut out = Vec::new();
        for d in disjuncts {
            let mut conj = Vec::new();
            d.flatten(Bin::And, &mut conj);
            let (mut guards, mut eqs) = (Vec::new(), Vec::new());
            for c in conj {
                match c {
                    E::Bin(Bin::Eq, x, v) if matches!(&*x, E::Next(_)) && !v.mentions_next() => {
                        let E::Next(n) = *x else { unreachable!() };
                        eqs.push((self.var(&n)?, *v));
                    }
                    c if !c.mentions_next() => guards.push(c),
                    other => return Err(format!("unsupported TRANS conjunct {other:?}")),
                }
            }
            out.push((guards, eqs));
        }
        Ok(out)
    }

    /// Explores the reachable states (at most `cap`) and decides every CTL spec.
    pub fn run(&self, cap: usize) -> Result<SmvRun, String> {
        let index = self.index();
        let gens = self.generators()?;
        let mut ivals: Vec<Vec<Val>> = vec![Vec::new()];
        for (_, t) in &self.ivars {
            ivals = ivals.into_iter().flat_map(|p| t.domain().into_iter().map(move |v| [p.clone(), vec![v]].concat())).collect();
        }

        let mut ids: HashMap<Vec<Val>, u32> = HashMap::new();
        let mut states: Vec<Vec<Val>> = Vec::new();
        let mut queue = VecDeque::new();
        let mut initial = Vec::new();
        for s in self.initial_states(&index)? {
            let id = states.len() as u32;
            ids.insert(s.clone(), id);
            states.push(s);
            initial.push(id);
            queue.push_back(id);
        }
        let mut succ: Vec<Vec<u32>> = Vec::new();
        while let Some(id) = queue.pop_front() {
            let cur = states[id as usize].clone();
            let mut next_ids = BTreeSet::new();
            for iv in &ivals {
                let ctx = Ctx { m: self, index: &index, cur: &cur, next: None, ivals: iv };
                for (guards, eqs) in &gens {
                    if !guards.iter().map(|g| ctx.bool(g)).collect::<Result<Vec<_>, _>>()?.into_iter().all(|b| b) {
                        continue;
                    }
                    let mut next: Vec<Option<Val>> = vec![None; self.vars.len()];
                    for (i, e) in eqs {
                        next[*i] = Some(ctx.eval(e)?);
                    }
                    let next: Vec<Val> = next
                        .into_iter()
                        .enumerate()
                        .map(|(i, v)| v.ok_or_else(|| format!("`{}` is unconstrained by a transition", self.vars[i].0)))
                        .collect::<Result<_, _>>()?;
                    if !next.iter().zip(&self.vars).all(|(v, (_, t))| t.admits(v)) {
                        continue;
                    }
                    let full = Ctx { m: self, index: &index, cur: &cur, next: Some(&next), ivals: iv };
                    if !self.trans[1..].iter().map(|t| full.bool(t)).collect::<Result<Vec<_>, _>>()?.into_iter().all(|b| b) {
                        continue;
                    }
                    let nid = match ids.get(&next) {
                        Some(n) => *n,
                        None => {
                            let n = states.len() as u32;
                            if states.len() >= cap {
                                return Err(format!("more than {cap} states"));
                            }
                            ids.insert(next.clone(), n);
                            states.push(next);
                            queue.push_back(n);
                            n
                        }
                    };
                    next_ids.insert(nid);
                }
            }
            if succ.len() <= id as usize {
                succ.resize(id as usize + 1, Vec::new());
            }
            succ[id as usize] = next_ids.into_iter().collect();
        }
        succ.resize(states.len(), Vec::new());
        if let Some(s) = succ.iter().position(|s| s.is_empty()) {
            return Err(format!("state {s} has no successor"));
        }

        let mut verdicts = Vec::new();
        for (ctl, spec) in &self.specs {
            if !ctl {
                verdicts.push(None);
                continue;
            }
            let mut atoms = Vec::new();
            let f = lower(spec, &mut atoms)?;
            let mut labels = Vec::new();
            for a in &atoms {
                let row = states
                    .iter()
                    .map(|s| Ctx { m: self, index: &index, cur: s, next: None, ivals: &[] }.bool(a))
                    .collect::<Result<Vec<bool>, _>>()?;
                labels.push(row);
            }
            let k = Kripke { succ: succ.clone(), labels };
            let sat = k.sat(&f);
            verdicts.push(Some(initial.iter().all(|s| sat[*s as usize])));
        }
        Ok(SmvRun { states, initial, succ, verdicts })
    }
}

/// CTL structure over atoms that are maximal temporal-free subexpressions.
fn lower(e: &E, atoms: &mut Vec<E>) -> Result<Formula<usize>, String> {
    if !e.temporal() {
        atoms.push(e.clone());
        return Ok(Formula::Atom(atoms.len() - 1));
    }
    let b = Box::new;
    Ok(match e {
        E::Un(op, a) => {
            let a = b(lower(a, atoms)?);
            match op {
                Un::Not => Formula::Not(a),
                Un::EX => Formula::EX(a),
                Un::AX => Formula::AX(a),
                Un::EF => Formula::EF(a),
                Un::AF => Formula::AF(a),
                Un::EG => Formula::EG(a),
                Un::AG => Formula::AG(a),
                other => return Err(format!("operator {other:?} in a CTL specification")),
            }
        }
        E::Bin(op, x, y) => {
            let (x, y) = (b(lower(x, atoms)?), b(lower(y, atoms)?));
            match op {
                Bin::And => Formula::And(x, y),
                Bin::Or => Formula::Or(x, y),
                Bin::Implies => Formula::Implies(x, y),
                Bin::Iff => Formula::Iff(x, y),
                Bin::EU => Formula::EU(x, y),
                Bin::AU => Formula::AU(x, y),
                other => return Err(format!("operator {other:?} over temporal operands")),
            }
        }
        other => return Err(format!("unexpected specification node {other:?}")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counter_with_scheduler() {
        let text = "\
MODULE main
VAR
  pc : {A, B};
  n : 0..2;
IVAR
  sched : 0..0;
ASSIGN
  init(pc) := A;
  init(n) := 0;
TRANS
  (sched = 0 & pc = A & (n < 2) & next(pc) = A & next(n) = (n + 1))
  | (sched = 0 & pc = A & (n = 2) & next(pc) = B & next(n) = n)
  | (sched = 0 & pc = B & next(pc) = B & next(n) = n)
CTLSPEC (AF (pc = B))
CTLSPEC (AG (n < 2))
CTLSPEC E [ (pc = A) U (n = 2) ]
LTLSPEC (F (pc = B))
";
        let run = parse(text).unwrap().run(100).unwrap();
        assert_eq!(run.states.len(), 4);
        assert_eq!(run.succ, vec![vec![1], vec![2], vec![3], vec![3]]);
        assert_eq!(run.verdicts, vec![Some(true), Some(false), Some(true), None]);
    }

    #[test]
    fn second_trans_filters_pairs() {
        let text = "\
MODULE main
VAR
  x : boolean;
IVAR
  s : 0..1;
INIT
  (x = FALSE)
DEFINE
  go := !x;
TRANS
  (s = 0 & next(x) = x) | (s = 1 & next(x) = TRUE)
TRANS
  (next(x) = x) -> !go
CTLSPEC (AX x)
";
        let run = parse(text).unwrap().run(10).unwrap();
        assert_eq!(run.succ, vec![vec![1], vec![1]]);
        assert_eq!(run.verdicts, vec![Some(true)]);
    }

    #[test]
    fn precedence_follows_nusmv() {
        let mut p = Parser { toks: lex("!a = b & c | d -> e -> f").unwrap(), at: 0 };
        let e = p.expr().unwrap();
        let E::Bin(Bin::Implies, lhs, rhs) = e else { panic!() };
        assert!(matches!(*rhs, E::Bin(Bin::Implies, _, _)));
        let E::Bin(Bin::Or, and, _) = *lhs else { panic!() };
        let E::Bin(Bin::And, eq, _) = *and else { panic!() };
        assert!(matches!(*eq, E::Bin(Bin::Eq, ref n, _) if matches!(**n, E::Un(Un::Not, _))));
    }
}
