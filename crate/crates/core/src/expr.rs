//! Finite value domains, typed expressions and their evaluation.
//!
//! Every variable ranges over a finite domain. Strings are interned into a
//! per-compilation [`Universe`] whose first symbol is always the `"NONE"`
//! sentinel; sets are subsets of that universe.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Interned string symbol.
pub type Sym = u32;

/// The sentinel standing for "absent" in string and set domains.
pub const NONE_SYM: Sym = 0;
pub const NONE_STR: &str = "NONE";

/// All string literals of a compilation, plus the `"NONE"` sentinel at index 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    names: Vec<String>,
    index: HashMap<String, Sym>,
}

impl Default for Universe {
    fn default() -> Self {
        Self::from_literals(std::iter::empty::<&str>())
    }
}

impl Universe {
    /// Builds the universe: `"NONE"` first, the remaining literals sorted.
    pub fn from_literals<I, S>(literals: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut rest: Vec<String> = literals
            .into_iter()
            .map(|s| s.as_ref().to_string())
            .filter(|s| s != NONE_STR)
            .collect();
        rest.sort();
        rest.dedup();
        let mut names = Vec::with_capacity(rest.len() + 1);
        names.push(NONE_STR.to_string());
        names.extend(rest);
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as Sym))
            .collect();
        Universe { names, index }
    }

    pub fn sym(&self, name: &str) -> Option<Sym> {
        self.index.get(name).copied()
    }

    pub fn name(&self, sym: Sym) -> &str {
        &self.names[sym as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = (Sym, &str)> {
        self.names.iter().enumerate().map(|(i, n)| (i as Sym, n.as_str()))
    }

    /// Number of 32-bit words a set over this universe occupies in a state vector.
    pub fn set_words(&self) -> usize {
        self.names.len().div_ceil(32)
    }
}

/// Semantic type of a variable or expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SemType {
    Bool,
    Int { lo: i64, hi: i64 },
    /// String enumeration over the universe.
    Str,
    /// Finite set of strings over the universe.
    Set,
}

impl SemType {
    /// Compatibility for comparisons and assignments (int bounds are ignored).
    pub fn compatible(&self, other: &SemType) -> bool {
        matches!(
            (self, other),
            (SemType::Bool, SemType::Bool)
                | (SemType::Int { .. }, SemType::Int { .. })
                | (SemType::Str, SemType::Str)
                | (SemType::Set, SemType::Set)
        )
    }

    /// Words used in a packed state vector.
    pub fn width(&self, universe: &Universe) -> usize {
        match self {
            SemType::Set => universe.set_words(),
            _ => 1,
        }
    }

    /// The first value of the domain, used as a default for unassigned locals.
    pub fn first_value(&self) -> Value {
        match self {
            SemType::Bool => Value::Bool(false),
            SemType::Int { lo, .. } => Value::Int(*lo),
            SemType::Str => Value::Str(NONE_SYM),
            SemType::Set => Value::Set(SymSet::default()),
        }
    }

    /// Enumerates the whole domain in canonical order.
    pub fn domain(&self, universe: &Universe) -> Vec<Value> {
        match self {
            SemType::Bool => vec![Value::Bool(false), Value::Bool(true)],
            SemType::Int { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
            SemType::Str => (0..universe.len() as Sym).map(Value::Str).collect(),
            // `NONE` is never a member, so sets range over the other symbols.
            SemType::Set => {
                let n = universe.len() - 1;
                assert!(n <= 16, "set domain enumeration over {n} symbols");
                (0u32..(1 << n))
                    .map(|mask| {
                        Value::Set(SymSet((0..n as Sym).filter(|s| mask & (1 << s) != 0).map(|s| s + 1).collect()))
                    })
                    .collect()
            }
        }
    }

    pub fn contains(&self, value: &Value, universe: &Universe) -> bool {
        match (self, value) {
            (SemType::Bool, Value::Bool(_)) => true,
            (SemType::Int { lo, hi }, Value::Int(v)) => lo <= v && v <= hi,
            (SemType::Str, Value::Str(s)) => (*s as usize) < universe.len(),
            (SemType::Set, Value::Set(set)) => set.0.iter().all(|s| (*s as usize) < universe.len()),
            _ => false,
        }
    }
}

impl fmt::Display for SemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemType::Bool => write!(f, "bool"),
            SemType::Int { lo, hi } => write!(f, "int[{lo}..{hi}]"),
            SemType::Str => write!(f, "string"),
            SemType::Set => write!(f, "set<string>"),
        }
    }
}

/// Sorted, duplicate-free set of symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymSet(pub Vec<Sym>);

impl SymSet {
    pub fn contains(&self, s: Sym) -> bool {
        self.0.binary_search(&s).is_ok()
    }

    pub fn insert(&mut self, s: Sym) {
        if let Err(pos) = self.0.binary_search(&s) {
            self.0.insert(pos, s);
        }
    }

    pub fn remove(&mut self, s: Sym) {
        if let Ok(pos) = self.0.binary_search(&s) {
            self.0.remove(pos);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<Sym> for SymSet {
    fn from_iter<T: IntoIterator<Item = Sym>>(iter: T) -> Self {
        let mut v: Vec<Sym> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        SymSet(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Str(Sym),
    Set(SymSet),
}

impl Value {
    pub fn as_bool(&self) -> bool {
        matches!(self, Value::Bool(true))
    }

    /// Renders the value with universe names (strings quoted).
    pub fn render(&self, universe: &Universe) -> String {
        match self {
            Value::Bool(b) => b.to_string(),
            Value::Int(i) => i.to_string(),
            Value::Str(s) => format!("\"{}\"", universe.name(*s)),
            Value::Set(set) => {
                let items: Vec<String> =
                    set.0.iter().map(|s| format!("\"{}\"", universe.name(*s))).collect();
                format!("{{{}}}", items.join(", "))
            }
        }
    }

    /// Writes the value into `words` (which has the width of the value's type).
    pub fn encode(&self, ty: &SemType, words: &mut [u32]) {
        match (self, ty) {
            (Value::Bool(b), _) => words[0] = *b as u32,
            (Value::Int(v), SemType::Int { lo, .. }) => words[0] = (v - lo) as u32,
            (Value::Str(s), _) => words[0] = *s,
            (Value::Set(set), _) => {
                words.iter_mut().for_each(|w| *w = 0);
                for s in &set.0 {
                    words[(*s / 32) as usize] |= 1 << (s % 32);
                }
            }
            (v, t) => panic!("cannot encode {v:?} as {t}"),
        }
    }

    pub fn decode(ty: &SemType, words: &[u32]) -> Value {
        match ty {
            SemType::Bool => Value::Bool(words[0] != 0),
            SemType::Int { lo, .. } => Value::Int(lo + words[0] as i64),
            SemType::Str => Value::Str(words[0]),
            SemType::Set => {
                let mut items = Vec::new();
                for (wi, w) in words.iter().enumerate() {
                    let mut bits = *w;
                    while bits != 0 {
                        let b = bits.trailing_zeros();
                        items.push(wi as Sym * 32 + b);
                        bits &= bits - 1;
                    }
                }
                Value::Set(SymSet(items))
            }
        }
    }
}

/// Index of a variable in some variable table (system-local or global,
/// depending on where the expression lives).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Typed, resolved expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(Value),
    Var(VarId),
    /// System argument; only present before instantiation.
    Param(u32),
    /// Instance occupies a declarator; only present in lowered formulas.
    At { instance: u32, declarator: u32 },
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    /// Element membership in a set.
    In(Box<Expr>, Box<Expr>),
    /// Integer addition, or set insertion when the left operand is a set.
    Add(Box<Expr>, Box<Expr>),
    /// Integer subtraction, or set removal when the left operand is a set.
    Sub(Box<Expr>, Box<Expr>),
    SetOf(Vec<Expr>),
    /// Conformity of a ground-truth attribute with a credential slot: the slot
    /// is empty, or it embeds exactly (string) / contains (set) the attribute.
    Conforms(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn lit_bool(b: bool) -> Expr {
        Expr::Lit(Value::Bool(b))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Expr, b: Expr) -> Expr {
        Expr::Or(Box::new(a), Box::new(b))
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Expr::Lit(Value::Bool(true)))
    }

    /// Rewrites the tree: `f` may replace a node, otherwise its children are rewritten.
    pub fn map(&self, f: &mut impl FnMut(&Expr) -> Option<Expr>) -> Expr {
        self.map_dyn(f)
    }

    fn map_dyn(&self, f: &mut dyn FnMut(&Expr) -> Option<Expr>) -> Expr {
        if let Some(e) = f(self) {
            return e;
        }
        let mut b = |e: &Expr| Box::new(e.map_dyn(f));
        match self {
            Expr::Lit(_) | Expr::Var(_) | Expr::Param(_) | Expr::At { .. } => self.clone(),
            Expr::Not(a) => Expr::Not(b(a)),
            Expr::And(x, y) => Expr::And(b(x), b(y)),
            Expr::Or(x, y) => Expr::Or(b(x), b(y)),
            Expr::Cmp(op, x, y) => Expr::Cmp(*op, b(x), b(y)),
            Expr::In(x, y) => Expr::In(b(x), b(y)),
            Expr::Add(x, y) => Expr::Add(b(x), b(y)),
            Expr::Sub(x, y) => Expr::Sub(b(x), b(y)),
            Expr::SetOf(items) => Expr::SetOf(items.iter().map(|e| *b(e)).collect()),
            Expr::Conforms(x, y) => Expr::Conforms(b(x), b(y)),
        }
    }

    /// Visits every node top-down.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Lit(_) | Expr::Var(_) | Expr::Param(_) | Expr::At { .. } => {}
            Expr::Not(a) => a.visit(f),
            Expr::And(x, y)
            | Expr::Or(x, y)
            | Expr::Cmp(_, x, y)
            | Expr::In(x, y)
            | Expr::Add(x, y)
            | Expr::Sub(x, y)
            | Expr::Conforms(x, y) => {
                x.visit(f);
                y.visit(f);
            }
            Expr::SetOf(items) => items.iter().for_each(|e| e.visit(f)),
        }
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Var(v) = e {
                out.push(*v);
            }
        });
        out.sort();
        out.dedup();
        out
    }

    /// Substitutes variable ids through `map`.
    pub fn remap_vars(&self, map: &[VarId]) -> Expr {
        self.map(&mut |e| match e {
            Expr::Var(v) => Some(Expr::Var(map[v.0 as usize])),
            _ => None,
        })
    }

    /// Replaces system arguments by constants.
    pub fn bind_params(&self, args: &[Value]) -> Expr {
        self.map(&mut |e| match e {
            Expr::Param(i) => Some(Expr::Lit(args[*i as usize].clone())),
            _ => None,
        })
    }

    /// Splits a propositional expression into its atomic propositions.
    pub fn decompose(&self, out: &mut Vec<Expr>) {
        match self {
            Expr::Lit(Value::Bool(_)) => {}
            Expr::Not(a) => a.decompose(out),
            Expr::And(a, b) | Expr::Or(a, b) => {
                a.decompose(out);
                b.decompose(out);
            }
            atom => {
                if !out.contains(atom) {
                    out.push(atom.clone());
                }
            }
        }
    }

    /// Renders the expression with a naming callback for variables.
    pub fn render(&self, names: &dyn Fn(VarId) -> String, universe: &Universe) -> String {
        self.render_with(names, &|i, d| format!("@{i}:{d}"), universe)
    }

    /// Like [`Expr::render`], with a naming callback for occupancy atoms too.
    pub fn render_with(
        &self,
        names: &dyn Fn(VarId) -> String,
        at: &dyn Fn(u32, u32) -> String,
        universe: &Universe,
    ) -> String {
        self.render_prec(&Names { var: names, at }, universe, 0)
    }

    fn render_prec(&self, names: &Names, u: &Universe, prec: u8) -> String {
        let (s, p) = match self {
            Expr::Lit(v) => (v.render(u), 9),
            Expr::Var(v) => ((names.var)(*v), 9),
            Expr::Param(i) => (format!("$arg{i}"), 9),
            Expr::At { instance, declarator } => ((names.at)(*instance, *declarator), 9),
            Expr::Not(a) => (format!("!{}", a.render_prec(names, u, 8)), 8),
            Expr::And(a, b) => (
                format!("{} & {}", a.render_prec(names, u, 3), b.render_prec(names, u, 3)),
                3,
            ),
            Expr::Or(a, b) => (
                format!("{} | {}", a.render_prec(names, u, 2), b.render_prec(names, u, 2)),
                2,
            ),
            Expr::Cmp(op, a, b) => (
                format!(
                    "{} {} {}",
                    a.render_prec(names, u, 5),
                    op.symbol(),
                    b.render_prec(names, u, 5)
                ),
                4,
            ),
            Expr::In(a, b) => (
                format!("{} in {}", a.render_prec(names, u, 5), b.render_prec(names, u, 5)),
                4,
            ),
            Expr::Add(a, b) => (
                format!("{} + {}", a.render_prec(names, u, 5), b.render_prec(names, u, 6)),
                5,
            ),
            Expr::Sub(a, b) => (
                format!("{} - {}", a.render_prec(names, u, 5), b.render_prec(names, u, 6)),
                5,
            ),
            Expr::SetOf(items) => {
                let parts: Vec<String> =
                    items.iter().map(|e| e.render_prec(names, u, 0)).collect();
                (format!("{{{}}}", parts.join(", ")), 9)
            }
            Expr::Conforms(a, b) => (
                format!("conforms({}, {})", a.render_prec(names, u, 0), b.render_prec(names, u, 0)),
                9,
            ),
        };
        if p < prec {
            format!("({s})")
        } else {
            s
        }
    }
}

struct Names<'a> {
    var: &'a dyn Fn(VarId) -> String,
    at: &'a dyn Fn(u32, u32) -> String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("type mismatch while evaluating {0}")]
    Type(&'static str),
    #[error("system argument ${0} was never bound")]
    UnboundParam(u32),
    #[error("value {value} outside domain {ty}")]
    OutOfDomain { value: i64, ty: SemType },
}

/// Read access to a concrete configuration.
pub trait Valuation {
    fn value(&self, var: VarId) -> Value;
    fn at(&self, instance: u32, declarator: u32) -> bool;
}

impl Expr {
    pub fn eval(&self, env: &dyn Valuation) -> Result<Value, EvalError> {
        Ok(match self {
            Expr::Lit(v) => v.clone(),
            Expr::Var(v) => env.value(*v),
            Expr::Param(i) => return Err(EvalError::UnboundParam(*i)),
            Expr::At { instance, declarator } => Value::Bool(env.at(*instance, *declarator)),
            Expr::Not(a) => Value::Bool(!a.eval_bool(env)?),
            Expr::And(a, b) => Value::Bool(a.eval_bool(env)? && b.eval_bool(env)?),
            Expr::Or(a, b) => Value::Bool(a.eval_bool(env)? || b.eval_bool(env)?),
            Expr::Cmp(op, a, b) => {
                let (x, y) = (a.eval(env)?, b.eval(env)?);
                let r = match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    _ => {
                        let (Value::Int(x), Value::Int(y)) = (x, y) else {
                            return Err(EvalError::Type("ordering comparison"));
                        };
                        match op {
                            CmpOp::Lt => x < y,
                            CmpOp::Le => x <= y,
                            CmpOp::Gt => x > y,
                            _ => x >= y,
                        }
                    }
                };
                Value::Bool(r)
            }
            Expr::In(a, b) => match (a.eval(env)?, b.eval(env)?) {
                (Value::Str(s), Value::Set(set)) => Value::Bool(set.contains(s)),
                _ => return Err(EvalError::Type("membership")),
            },
            Expr::Add(a, b) => match (a.eval(env)?, b.eval(env)?) {
                (Value::Int(x), Value::Int(y)) => Value::Int(x + y),
                (Value::Set(mut set), Value::Str(s)) => {
                    if s != NONE_SYM {
                        set.insert(s);
                    }
                    Value::Set(set)
                }
                (Value::Set(mut set), Value::Set(other)) => {
                    other.0.iter().for_each(|s| set.insert(*s));
                    Value::Set(set)
                }
                _ => return Err(EvalError::Type("addition")),
            },
            Expr::Sub(a, b) => match (a.eval(env)?, b.eval(env)?) {
                (Value::Int(x), Value::Int(y)) => Value::Int(x - y),
                (Value::Set(mut set), Value::Str(s)) => {
                    set.remove(s);
                    Value::Set(set)
                }
                (Value::Set(mut set), Value::Set(other)) => {
                    other.0.iter().for_each(|s| set.remove(*s));
                    Value::Set(set)
                }
                _ => return Err(EvalError::Type("subtraction")),
            },
            Expr::SetOf(items) => {
                let mut set = SymSet::default();
                for e in items {
                    match e.eval(env)? {
                        Value::Str(s) if s != NONE_SYM => set.insert(s),
                        Value::Str(_) => {}
                        _ => return Err(EvalError::Type("set element")),
                    }
                }
                Value::Set(set)
            }
            Expr::Conforms(truth, vc) => match (truth.eval(env)?, vc.eval(env)?) {
                (Value::Str(t), Value::Str(v)) => Value::Bool(v == NONE_SYM || v == t),
                (Value::Str(t), Value::Set(set)) => Value::Bool(set.is_empty() || set.contains(t)),
                _ => return Err(EvalError::Type("conformity")),
            },
        })
    }

    pub fn eval_bool(&self, env: &dyn Valuation) -> Result<bool, EvalError> {
        match self.eval(env)? {
            Value::Bool(b) => Ok(b),
            _ => Err(EvalError::Type("boolean context")),
        }
    }
}

/// Infers the type of a well-typed expression.
pub fn type_of(expr: &Expr, var_ty: &dyn Fn(VarId) -> SemType) -> SemType {
    match expr {
        Expr::Lit(Value::Bool(_)) => SemType::Bool,
        Expr::Lit(Value::Int(v)) => SemType::Int { lo: *v, hi: *v },
        Expr::Lit(Value::Str(_)) => SemType::Str,
        Expr::Lit(Value::Set(_)) => SemType::Set,
        Expr::Var(v) => var_ty(*v),
        Expr::Param(_) => SemType::Str,
        Expr::Add(a, b) | Expr::Sub(a, b) => match type_of(a, var_ty) {
            SemType::Int { lo, hi } => {
                let (l2, h2) = match type_of(b, var_ty) {
                    SemType::Int { lo, hi } => (lo, hi),
                    _ => (0, 0),
                };
                if matches!(expr, Expr::Add(..)) {
                    SemType::Int { lo: lo + l2, hi: hi + h2 }
                } else {
                    SemType::Int { lo: lo - h2, hi: hi - l2 }
                }
            }
            other => other,
        },
        Expr::SetOf(_) => SemType::Set,
        _ => SemType::Bool,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<Value>);

    impl Valuation for Fixed {
        fn value(&self, var: VarId) -> Value {
            self.0[var.0 as usize].clone()
        }
        fn at(&self, _: u32, _: u32) -> bool {
            false
        }
    }

    #[test]
    fn universe_puts_none_first_and_sorts() {
        let u = Universe::from_literals(["b", "NONE", "a", "b"]);
        assert_eq!(u.name(0), "NONE");
        assert_eq!(u.sym("a"), Some(1));
        assert_eq!(u.sym("b"), Some(2));
        assert_eq!(u.len(), 3);
    }

    #[test]
    fn set_encoding_round_trips_across_words() {
        let names: Vec<String> = (0..70).map(|i| format!("s{i:02}")).collect();
        let u = Universe::from_literals(&names);
        let v = Value::Set([0, 31, 32, 69].into_iter().collect());
        let mut words = vec![0; SemType::Set.width(&u)];
        v.encode(&SemType::Set, &mut words);
        assert_eq!(Value::decode(&SemType::Set, &words), v);
    }

    #[test]
    fn conformity_is_vacuous_on_empty_slots() {
        let env = Fixed(vec![Value::Str(1), Value::Str(0), Value::Set(SymSet::default())]);
        let truth = Box::new(Expr::Var(VarId(0)));
        let empty_str = Expr::Conforms(truth.clone(), Box::new(Expr::Var(VarId(1))));
        let empty_set = Expr::Conforms(truth.clone(), Box::new(Expr::Var(VarId(2))));
        assert!(empty_str.eval_bool(&env).unwrap());
        assert!(empty_set.eval_bool(&env).unwrap());
        let same = Expr::Conforms(truth.clone(), truth);
        assert!(same.eval_bool(&env).unwrap());
        let forged = Expr::Conforms(Box::new(Expr::Lit(Value::Str(1))), Box::new(Expr::Lit(Value::Str(2))));
        assert!(!forged.eval_bool(&env).unwrap());
    }

    #[test]
    fn set_insertion_ignores_the_sentinel() {
        let env = Fixed(vec![Value::Set(SymSet::default())]);
        let e = Expr::Add(Box::new(Expr::Var(VarId(0))), Box::new(Expr::Lit(Value::Str(NONE_SYM))));
        assert_eq!(e.eval(&env).unwrap(), Value::Set(SymSet::default()));
    }

    #[test]
    fn decompose_collects_distinct_atoms() {
        let a = Expr::cmp(CmpOp::Eq, Expr::Var(VarId(0)), Expr::Lit(Value::Str(1)));
        let b = Expr::Var(VarId(1));
        let e = Expr::and(a.clone(), Expr::or(Expr::not(b.clone()), a.clone()));
        let mut atoms = Vec::new();
        e.decompose(&mut atoms);
        assert_eq!(atoms, vec![a, b]);
    }
}
