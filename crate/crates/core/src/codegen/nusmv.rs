use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;
use std::path::Path;
use std::process::Command;

use crate::expr::{type_of, CmpOp, Expr, SemType, Sym, Value, VarId, NONE_SYM};
use crate::frontend::CheckedFormula;
use crate::graph::{initial_states, Composition, Layout};
use crate::logic::{Formula, Logic};

use super::EmitError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NusmvProgram {
    pub text: String,
    /// Identifiers renamed to dodge NuSMV keywords or other names.
    pub warnings: Vec<String>,
}

const RESERVED: &[&str] = &[
    "MODULE", "DEFINE", "MDEFINE", "CONSTANTS", "VAR", "IVAR", "FROZENVAR", "INIT", "TRANS", "INVAR", "SPEC",
    "CTLSPEC", "LTLSPEC", "PSLSPEC", "COMPUTE", "NAME", "INVARSPEC", "FAIRNESS", "JUSTICE", "COMPASSION", "ISA",
    "ASSIGN", "CONSTRAINT", "SIMPWFF", "CTLWFF", "LTLWFF", "PSLWFF", "COMPWFF", "IN", "MIN", "MAX", "MIRROR", "PRED",
    "PREDICATES", "process", "array", "of", "boolean", "integer", "real", "word", "word1", "bool", "signed",
    "unsigned", "extend", "resize", "sizeof", "uwconst", "swconst", "EX", "AX", "EF", "AF", "EG", "AG", "E", "F",
    "O", "G", "H", "X", "Y", "Z", "A", "U", "S", "V", "T", "BU", "EBF", "ABF", "EBG", "ABG", "case", "esac", "mod",
    "next", "init", "union", "in", "xor", "xnor", "self", "TRUE", "FALSE", "count", "abs", "max", "min", "toint",
    "floor", "pi", "exp", "sin", "cos", "tan", "ln", "time", "W",
];

/// Hands out NuSMV identifiers, renaming on keyword or duplicate collisions.
struct Namer {
    used: HashSet<String>,
    warnings: Vec<String>,
}

impl Namer {
    fn new() -> Self {
        Namer { used: RESERVED.iter().map(|s| s.to_string()).collect(), warnings: Vec::new() }
    }

    fn sanitize(raw: &str) -> String {
        let mut s: String =
            raw.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
        if !s.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
            s.insert(0, '_');
        }
        s
    }

    fn fresh(&mut self, raw: &str) -> String {
        let base = Self::sanitize(raw);
        let mut name = base.clone();
        let mut n = 1;
        while self.used.contains(&name) {
            name = format!("{base}_{n}");
            n += 1;
        }
        if name != base {
            self.warnings.push(format!("identifier `{raw}` renamed to `{name}`"));
        }
        self.used.insert(name.clone());
        name
    }
}

struct Emitter<'a> {
    c: &'a Composition,
    /// Constant per universe symbol.
    syms: Vec<String>,
    /// Constant per instance declarator.
    decls: Vec<Vec<String>>,
    pcs: Vec<String>,
    /// Scalar name for each variable, or the per-symbol booleans of a set.
    vars: Vec<String>,
    set_bits: Vec<Vec<String>>,
}

impl<'a> Emitter<'a> {
    fn new(c: &'a Composition, namer: &mut Namer) -> Self {
        // Symbolic constants share one namespace in NuSMV; declarator names
        // equal to a string literal map to the same constant.
        let mut consts: BTreeMap<String, String> = BTreeMap::new();
        let mut constant = |raw: &str, namer: &mut Namer| -> String {
            consts.entry(raw.to_string()).or_insert_with(|| namer.fresh(raw)).clone()
        };
        let syms: Vec<String> = c.universe.iter().map(|(_, n)| constant(n, namer)).collect();
        let decls: Vec<Vec<String>> = c
            .instances
            .iter()
            .map(|i| i.graph.declarators.iter().map(|d| constant(&d.name, namer)).collect())
            .collect();
        let pcs = c.instances.iter().map(|i| namer.fresh(&format!("pc_{}", i.alias))).collect();
        let mut vars = Vec::new();
        let mut set_bits = Vec::new();
        for v in &c.vars {
            let base = v.name.replace('.', "__");
            let name = namer.fresh(&base);
            let bits = if v.ty == SemType::Set {
                c.universe
                    .iter()
                    .map(|(s, n)| if s == NONE_SYM { String::new() } else { namer.fresh(&format!("{name}__{n}")) })
                    .collect()
            } else {
                Vec::new()
            };
            vars.push(name);
            set_bits.push(bits);
        }
        Emitter { c, syms, decls, pcs, vars, set_bits }
    }

    fn ty(&self, e: &Expr) -> SemType {
        type_of(e, &|v: VarId| self.c.vars[v.0 as usize].ty)
    }

    fn elems(&self) -> impl Iterator<Item = Sym> {
        1..self.c.universe.len() as Sym
    }

    fn value(&self, v: &Value) -> String {
        match v {
            Value::Bool(true) => "TRUE".into(),
            Value::Bool(false) => "FALSE".into(),
            Value::Int(i) => i.to_string(),
            Value::Str(s) => self.syms[*s as usize].clone(),
            Value::Set(_) => unreachable!("set values are lowered per element"),
        }
    }

    /// Scalar (boolean, integer or string) expression.
    fn scalar(&self, e: &Expr) -> Result<String, EmitError> {
        Ok(match e {
            Expr::Lit(v @ Value::Set(_)) => return Err(EmitError::Unsupported(format!("set value {v:?} in scalar position"))),
            Expr::Lit(v) => self.value(v),
            Expr::Var(v) if self.c.vars[v.0 as usize].ty == SemType::Set => {
                return Err(EmitError::Unsupported("set variable in scalar position".into()))
            }
            Expr::Var(v) => self.vars[v.0 as usize].clone(),
            Expr::Param(i) => return Err(EmitError::Unsupported(format!("unbound system argument ${i}"))),
            Expr::At { instance, declarator } => {
                format!("{} = {}", self.pcs[*instance as usize], self.decls[*instance as usize][*declarator as usize])
            }
            Expr::Not(a) => format!("!({})", self.scalar(a)?),
            Expr::And(a, b) => format!("({} & {})", self.scalar(a)?, self.scalar(b)?),
            Expr::Or(a, b) => format!("({} | {})", self.scalar(a)?, self.scalar(b)?),
            Expr::Cmp(op, a, b) if self.ty(a) == SemType::Set => {
                let eq = self.and_all(self.elems().map(|s| Ok(iff(&self.member(a, s)?, &self.member(b, s)?))))?;
                match op {
                    CmpOp::Eq => eq,
                    CmpOp::Ne => format!("!({eq})"),
                    _ => return Err(EmitError::Unsupported("ordering on sets".into())),
                }
            }
            Expr::Cmp(op, a, b) => format!("({} {} {})", self.scalar(a)?, op.symbol(), self.scalar(b)?),
            Expr::In(x, set) => match &**x {
                Expr::Lit(Value::Str(s)) => self.member(set, *s)?,
                _ => {
                    let x = self.scalar(x)?;
                    self.or_any(self.elems().map(|s| Ok(format!("({x} = {} & {})", self.syms[s as usize], self.member(set, s)?))))?
                }
            },
            Expr::Add(a, b) => format!("({} + {})", self.scalar(a)?, self.scalar(b)?),
            Expr::Sub(a, b) => format!("({} - {})", self.scalar(a)?, self.scalar(b)?),
            Expr::SetOf(_) => return Err(EmitError::Unsupported("set literal in scalar position".into())),
            Expr::Conforms(t, vc) => {
                if self.ty(vc) == SemType::Set {
                    let empty = self.and_all(self.elems().map(|s| Ok(format!("!{}", paren(&self.member(vc, s)?)))))?;
                    let t = self.scalar(t)?;
                    let has = self.or_any(
                        self.elems().map(|s| Ok(format!("({t} = {} & {})", self.syms[s as usize], self.member(vc, s)?))),
                    )?;
                    format!("({empty} | {has})")
                } else {
                    let (t, vc) = (self.scalar(t)?, self.scalar(vc)?);
                    format!("({vc} = {} | {vc} = {t})", self.syms[NONE_SYM as usize])
                }
            }
        })
    }

    /// Whether symbol `s` belongs to the set-valued expression `e`.
    fn member(&self, e: &Expr, s: Sym) -> Result<String, EmitError> {
        if s == NONE_SYM {
            return Ok("FALSE".into());
        }
        Ok(match e {
            Expr::Var(v) => self.set_bits[v.0 as usize][s as usize].clone(),
            Expr::Lit(Value::Set(set)) => self.value(&Value::Bool(set.contains(s))),
            Expr::SetOf(items) => {
                let mut parts = Vec::new();
                for it in items {
                    match it {
                        Expr::Lit(Value::Str(x)) if *x == s => return Ok("TRUE".into()),
                        Expr::Lit(Value::Str(_)) => {}
                        other => parts.push(format!("{} = {}", self.scalar(other)?, self.syms[s as usize])),
                    }
                }
                if parts.is_empty() {
                    "FALSE".into()
                } else {
                    format!("({})", parts.join(" | "))
                }
            }
            Expr::Add(a, b) => {
                let x = self.member(a, s)?;
                let y = self.elem_of(b, s)?;
                or2(&x, &y)
            }
            Expr::Sub(a, b) => {
                let x = self.member(a, s)?;
                let y = self.elem_of(b, s)?;
                match y.as_str() {
                    "FALSE" => x,
                    "TRUE" => "FALSE".into(),
                    _ => format!("({x} & !{})", paren(&y)),
                }
            }
            other => return Err(EmitError::Unsupported(format!("set expression {other:?}"))),
        })
    }

    /// Right operand of set `+`/`-`: a string (element) or a set.
    fn elem_of(&self, e: &Expr, s: Sym) -> Result<String, EmitError> {
        if self.ty(e) == SemType::Set {
            return self.member(e, s);
        }
        Ok(match e {
            Expr::Lit(Value::Str(x)) => self.value(&Value::Bool(*x == s)),
            other => format!("{} = {}", self.scalar(other)?, self.syms[s as usize]),
        })
    }

    fn and_all(&self, parts: impl Iterator<Item = Result<String, EmitError>>) -> Result<String, EmitError> {
        let v: Vec<String> = parts.collect::<Result<_, _>>()?;
        Ok(if v.is_empty() { "TRUE".into() } else { format!("({})", v.join(" & ")) })
    }

    fn or_any(&self, parts: impl Iterator<Item = Result<String, EmitError>>) -> Result<String, EmitError> {
        let v: Vec<String> = parts.collect::<Result<_, _>>()?;
        Ok(if v.is_empty() { "FALSE".into() } else { format!("({})", v.join(" | ")) })
    }

    /// Equations `next(x) = e` for a variable.
    fn next_eq(&self, v: VarId, e: &Expr) -> Result<Vec<String>, EmitError> {
        let i = v.0 as usize;
        if self.c.vars[i].ty == SemType::Set {
            self.elems()
                .map(|s| Ok(format!("next({}) = {}", self.set_bits[i][s as usize], self.member(e, s)?)))
                .collect()
        } else {
            Ok(vec![format!("next({}) = {}", self.vars[i], self.scalar(e)?)])
        }
    }

    /// Names of the NuSMV variables standing for a source variable.
    fn cells(&self, v: usize) -> Vec<String> {
        if self.c.vars[v].ty == SemType::Set {
            self.set_bits[v].iter().skip(1).cloned().collect()
        } else {
            vec![self.vars[v].clone()]
        }
    }

    /// Final writes of a transition: effect, then the target's assignment.
    fn writes(&self, k: usize, t: usize) -> BTreeMap<VarId, &'a Expr> {
        let g = &self.c.instances[k].graph;
        let tr = &g.transitions[t];
        let mut w = BTreeMap::new();
        for (v, e) in tr.writes.iter().chain(g.declarators[tr.dst as usize].assigns.iter()) {
            w.insert(*v, e);
        }
        w
    }

    fn transition(&self, k: usize, t: usize) -> Result<String, EmitError> {
        let g = &self.c.instances[k].graph;
        let tr = &g.transitions[t];
        let mut parts = vec![format!("{} = {}", self.pcs[k], self.decls[k][tr.src as usize])];
        if !tr.guard.is_true() {
            parts.push(self.scalar(&tr.guard)?);
        }
        parts.push(format!("next({}) = {}", self.pcs[k], self.decls[k][tr.dst as usize]));
        for (j, pc) in self.pcs.iter().enumerate() {
            if j != k {
                parts.push(format!("next({pc}) = {pc}"));
            }
        }
        let writes = self.writes(k, t);
        for v in 0..self.c.vars.len() {
            match writes.get(&VarId(v as u32)) {
                Some(e) => parts.extend(self.next_eq(VarId(v as u32), e)?),
                None => parts.extend(self.cells(v).into_iter().map(|x| format!("next({x}) = {x}"))),
            }
        }
        Ok(parts.join(" & "))
    }

    /// Transition `(k, t)` is enabled and moves to a different configuration.
    fn progress(&self, k: usize, t: usize) -> Result<String, EmitError> {
        let tr = &self.c.instances[k].graph.transitions[t];
        let mut en = format!("{} = {}", self.pcs[k], self.decls[k][tr.src as usize]);
        if !tr.guard.is_true() {
            en = format!("{en} & {}", self.scalar(&tr.guard)?);
        }
        if tr.src != tr.dst {
            return Ok(format!("({en})"));
        }
        let mut changes = Vec::new();
        for (v, e) in self.writes(k, t) {
            let i = v.0 as usize;
            if self.c.vars[i].ty == SemType::Set {
                for s in self.elems() {
                    let m = self.member(e, s)?;
                    changes.push(format!("!{}", paren(&iff(&m, &self.set_bits[i][s as usize]))));
                }
            } else {
                changes.push(format!("{} != {}", self.scalar(e)?, self.vars[i]));
            }
        }
        if changes.is_empty() {
            return Ok("FALSE".into());
        }
        Ok(format!("({en} & ({}))", changes.join(" | ")))
    }

    fn assignment(&self, layout: &Layout, words: &[u32]) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (k, pc) in self.pcs.iter().enumerate() {
            out.push((pc.clone(), self.decls[k][words[k] as usize].clone()));
        }
        for v in 0..self.c.vars.len() {
            match layout.value(words, VarId(v as u32)) {
                Value::Set(set) => {
                    for s in self.elems() {
                        out.push((self.set_bits[v][s as usize].clone(), self.value(&Value::Bool(set.contains(s)))));
                    }
                }
                val => out.push((self.vars[v].clone(), self.value(&val))),
            }
        }
        out
    }

    fn formula(&self, f: &Formula<Expr>) -> Result<String, EmitError> {
        use Formula as F;
        let r = |x: &Formula<Expr>| self.formula(x);
        Ok(match f {
            F::True => "TRUE".into(),
            F::False => "FALSE".into(),
            F::Atom(e) => format!("({})", self.scalar(e)?),
            F::Not(a) => format!("!{}", r(a)?),
            F::And(a, b) => format!("({} & {})", r(a)?, r(b)?),
            F::Or(a, b) => format!("({} | {})", r(a)?, r(b)?),
            F::Implies(a, b) => format!("({} -> {})", r(a)?, r(b)?),
            F::Iff(a, b) => format!("({} <-> {})", r(a)?, r(b)?),
            F::EX(a) => format!("(EX {})", r(a)?),
            F::AX(a) => format!("(AX {})", r(a)?),
            F::EF(a) => format!("(EF {})", r(a)?),
            F::AF(a) => format!("(AF {})", r(a)?),
            F::EG(a) => format!("(EG {})", r(a)?),
            F::AG(a) => format!("(AG {})", r(a)?),
            F::EU(a, b) => format!("E [ {} U {} ]", r(a)?, r(b)?),
            F::AU(a, b) => format!("A [ {} U {} ]", r(a)?, r(b)?),
            F::X(a) => format!("(X {})", r(a)?),
            F::F(a) => format!("(F {})", r(a)?),
            F::G(a) => format!("(G {})", r(a)?),
            F::U(a, b) => format!("({} U {})", r(a)?, r(b)?),
        })
    }
}

fn paren(s: &str) -> String {
    if s.starts_with('(') || !s.contains(' ') {
        s.to_string()
    } else {
        format!("({s})")
    }
}

fn iff(a: &str, b: &str) -> String {
    match (a, b) {
        (x, "TRUE") | ("TRUE", x) => x.to_string(),
        (x, "FALSE") | ("FALSE", x) => format!("!{}", paren(x)),
        _ => format!("({} <-> {})", a, b),
    }
}

fn or2(a: &str, b: &str) -> String {
    match (a, b) {
        ("TRUE", _) | (_, "TRUE") => "TRUE".into(),
        (x, "FALSE") | ("FALSE", x) => x.to_string(),
        _ => format!("({a} | {b})"),
    }
}

/// Emits a single `MODULE main` whose reachable behaviour equals the
/// explicit-state semantics: an input variable `sched` picks the firing
/// instance, each disjunct of the first `TRANS` frames every unwritten
/// variable, and the second `TRANS` drops a global stutter step whenever
/// some transition would change the configuration.
pub fn emit_nusmv(c: &Composition, formulas: &[CheckedFormula]) -> Result<NusmvProgram, EmitError> {
    let mut namer = Namer::new();
    let em = Emitter::new(c, &mut namer);
    let sched = namer.fresh("sched");
    let progress = namer.fresh("can_progress");
    let clause_names: Vec<Vec<String>> = c
        .instances
        .iter()
        .map(|i| i.graph.clauses.iter().map(|(n, _)| namer.fresh(&n.replace('.', "__"))).collect())
        .collect();

    let mut out = String::new();
    writeln!(out, "-- {} (asynchronous composition of {} instances)", c.name, c.instances.len()).unwrap();
    writeln!(out, "MODULE main").unwrap();
    writeln!(out, "VAR").unwrap();
    for (pc, decls) in em.pcs.iter().zip(&em.decls) {
        writeln!(out, "  {pc} : {{{}}};", decls.join(", ")).unwrap();
    }
    for (i, v) in c.vars.iter().enumerate() {
        match v.ty {
            SemType::Bool => writeln!(out, "  {} : boolean;", em.vars[i]).unwrap(),
            SemType::Int { lo, hi } => writeln!(out, "  {} : {lo}..{hi};", em.vars[i]).unwrap(),
            SemType::Str => writeln!(out, "  {} : {{{}}};", em.vars[i], em.syms.join(", ")).unwrap(),
            SemType::Set => {
                for s in em.elems() {
                    writeln!(out, "  {} : boolean;", em.set_bits[i][s as usize]).unwrap();
                }
            }
        }
    }
    if !c.instances.is_empty() {
        writeln!(out, "IVAR").unwrap();
        writeln!(out, "  {sched} : 0..{};", c.instances.len() - 1).unwrap();
    }

    let layout = Layout::new(c);
    let inits = initial_states(c, &layout).map_err(|e| EmitError::Init(e.to_string()))?;
    if inits.len() == 1 {
        writeln!(out, "ASSIGN").unwrap();
        for (x, v) in em.assignment(&layout, &inits[0]) {
            writeln!(out, "  init({x}) := {v};").unwrap();
        }
    } else {
        writeln!(out, "INIT").unwrap();
        let alts: Vec<String> = inits
            .iter()
            .map(|w| {
                let eqs: Vec<String> = em.assignment(&layout, w).into_iter().map(|(x, v)| format!("{x} = {v}")).collect();
                format!("  ({})", eqs.join(" & "))
            })
            .collect();
        writeln!(out, "{}", if alts.is_empty() { "  FALSE".to_string() } else { alts.join("\n  | ") }).unwrap();
    }

    writeln!(out, "DEFINE").unwrap();
    let mut prog = Vec::new();
    for (k, inst) in c.instances.iter().enumerate() {
        for t in 0..inst.graph.transitions.len() {
            let p = em.progress(k, t)?;
            if p != "FALSE" {
                prog.push(p);
            }
        }
    }
    writeln!(out, "  {progress} := {};", if prog.is_empty() { "FALSE".into() } else { prog.join("\n    | ") }).unwrap();
    for (k, inst) in c.instances.iter().enumerate() {
        for (j, (_, e)) in inst.graph.clauses.iter().enumerate() {
            writeln!(out, "  {} := {};", clause_names[k][j], em.scalar(e)?).unwrap();
        }
    }

    writeln!(out, "TRANS").unwrap();
    let mut alts = Vec::new();
    for (k, inst) in c.instances.iter().enumerate() {
        for t in 0..inst.graph.transitions.len() {
            alts.push(format!("  ({sched} = {k} & {})", em.transition(k, t)?));
        }
    }
    writeln!(out, "{}", if alts.is_empty() { "  FALSE".to_string() } else { alts.join("\n  | ") }).unwrap();

    let mut same: Vec<String> = em.pcs.iter().map(|p| format!("next({p}) = {p}")).collect();
    for v in 0..c.vars.len() {
        same.extend(em.cells(v).into_iter().map(|x| format!("next({x}) = {x}")));
    }
    writeln!(out, "TRANS").unwrap();
    writeln!(out, "  ({}) -> !{progress}", same.join(" & ")).unwrap();

    for f in formulas {
        let kw = match f.logic {
            Logic::Ctl => "CTLSPEC",
            Logic::Ltl => "LTLSPEC",
        };
        writeln!(out, "{kw} {}", em.formula(&f.formula)?).unwrap();
    }
    Ok(NusmvProgram { text: out, warnings: namer.warnings })
}

#[derive(Debug, thiserror::Error)]
pub enum NusmvRunError {
    #[error("cannot run `{0}`: {1}")]
    Spawn(String, std::io::Error),
    #[error("NuSMV reported an error:\n{0}")]
    Failed(String),
    #[error("expected {expected} specification results, NuSMV printed {found}")]
    Count { expected: usize, found: usize },
}

/// Parses `-- specification ... is true|false` lines.
pub fn parse_nusmv_output(out: &str) -> Vec<bool> {
    out.lines()
        .filter_map(|l| {
            let l = l.trim();
            if !l.starts_with("-- specification") {
                return None;
            }
            if l.ends_with("is true") {
                Some(true)
            } else if l.ends_with("is false") {
                Some(false)
            } else {
                None
            }
        })
        .collect()
}

/// Runs `nusmv <file>` and returns one verdict per specification.
pub fn run_nusmv(nusmv: &Path, file: &Path, expected: usize) -> Result<Vec<bool>, NusmvRunError> {
    let output = Command::new(nusmv)
        .arg(file)
        .output()
        .map_err(|e| NusmvRunError::Spawn(nusmv.display().to_string(), e))?;
    let stdout = String::from_utf8_lossy(&output.stdout);
    let verdicts = parse_nusmv_output(&stdout);
    if !output.status.success() && verdicts.is_empty() {
        return Err(NusmvRunError::Failed(String::from_utf8_lossy(&output.stderr).into_owned()));
    }
    if verdicts.len() != expected {
        return Err(NusmvRunError::Count { expected, found: verdicts.len() });
    }
    Ok(verdicts)
}
