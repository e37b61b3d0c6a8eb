//! Name resolution and type checking: `SourceUnit` to [`Program`].

use std::collections::{HashMap, HashSet};

use crate::expr::{CmpOp, Expr, SemType, Sym, SymSet, Universe, Value, VarId, NONE_SYM};
use crate::logic::{Formula, Logic};

use super::ast::*;
use super::diag::{DiagKind, Diagnostic, Span};
use super::printer::print_formula;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub ty: SemType,
    /// Shared environment variable (as opposed to a system-local one).
    pub env: bool,
}

pub type Assignment = Vec<(VarId, Expr)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckedDeclarator {
    pub name: String,
    /// Partial evaluation, sorted by variable.
    pub assigns: Assignment,
    /// Declared with an explicit `NAME = { ... }` block.
    pub explicit: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckedTransition {
    pub src: u32,
    pub dst: u32,
    pub guard: Expr,
    pub effect: Assignment,
    pub effect_name: Option<String>,
    pub action: Option<String>,
}

/// A type-checked system declaration. Expressions use [`VarId`]s indexing
/// `vars` (locals first, then environment variables) and [`Expr::Param`] for
/// system arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckedSystem {
    pub name: String,
    pub params: Vec<(String, SemType)>,
    pub vars: Vec<VarDecl>,
    pub declarators: Vec<CheckedDeclarator>,
    pub init: u32,
    pub init_guard: Option<Expr>,
    pub transitions: Vec<CheckedTransition>,
    pub props: Vec<(String, Expr)>,
}

impl CheckedSystem {
    pub fn local_count(&self) -> usize {
        self.vars.iter().filter(|v| !v.env).count()
    }

    pub fn declarator(&self, name: &str) -> Option<u32> {
        self.declarators.iter().position(|d| d.name == name).map(|i| i as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckedInstance {
    pub alias: String,
    pub system: usize,
    pub args: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckedFormula {
    pub logic: Logic,
    /// Canonical source text.
    pub text: String,
    /// Atoms over global variables ([`Program::global_vars`]) and declarator occupancy.
    pub formula: Formula<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckedControl {
    pub name: String,
    pub env_vars: Vec<VarDecl>,
    pub env_init: Vec<Value>,
    pub instances: Vec<CheckedInstance>,
    pub formulas: Vec<CheckedFormula>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub universe: Universe,
    pub systems: Vec<CheckedSystem>,
    pub control: Option<CheckedControl>,
}

impl Program {
    pub fn system(&self, name: &str) -> Option<&CheckedSystem> {
        self.systems.iter().find(|s| s.name == name)
    }

    /// Global variable table of the composition: environment variables, then
    /// each instance's locals as `alias.var`.
    pub fn global_vars(&self) -> Vec<VarDecl> {
        let Some(c) = &self.control else { return Vec::new() };
        let mut out = c.env_vars.clone();
        for inst in &c.instances {
            let sys = &self.systems[inst.system];
            for v in sys.vars.iter().filter(|v| !v.env) {
                out.push(VarDecl { name: format!("{}.{}", inst.alias, v.name), ty: v.ty, env: false });
            }
        }
        out
    }

    /// Maps instance `k`'s system-local [`VarId`]s to global ones.
    pub fn instance_var_map(&self, k: usize) -> Vec<VarId> {
        let c = self.control.as_ref().expect("program has a control system");
        let mut offset = c.env_vars.len();
        for inst in &c.instances[..k] {
            offset += self.systems[inst.system].local_count();
        }
        let sys = &self.systems[c.instances[k].system];
        let mut local = 0;
        sys.vars
            .iter()
            .map(|v| {
                if v.env {
                    let g = c.env_vars.iter().position(|e| e.name == v.name).expect("env var checked");
                    VarId(g as u32)
                } else {
                    local += 1;
                    VarId((offset + local - 1) as u32)
                }
            })
            .collect()
    }
}

// ------------------------------------------------------------------ typing

fn err(kind: DiagKind, span: Span, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(kind, Some(span), msg)
}

fn type_err(span: Span, msg: impl Into<String>) -> Diagnostic {
    err(DiagKind::Type, span, msg)
}

trait Scope {
    fn name(&self, id: &Ident) -> Result<(Expr, SemType), Diagnostic>;
    fn qualified(&self, a: &Ident, b: &Ident) -> Result<(Expr, SemType), Diagnostic>;
}

struct Typer<'a> {
    universe: &'a Universe,
}

impl Typer<'_> {
    fn sym(&self, s: &str) -> Sym {
        self.universe.sym(s).expect("universe contains every literal")
    }

    fn expr(&self, sc: &dyn Scope, e: &ExprAst, expected: Option<SemType>) -> Result<(Expr, SemType), Diagnostic> {
        Ok(match e {
            ExprAst::Str(s, _) => (Expr::Lit(Value::Str(self.sym(s))), SemType::Str),
            ExprAst::Int(n, _) => (Expr::Lit(Value::Int(*n)), SemType::Int { lo: *n, hi: *n }),
            ExprAst::Bool(b, _) => (Expr::lit_bool(*b), SemType::Bool),
            ExprAst::Empty(span) => match expected {
                Some(SemType::Set) => (Expr::Lit(Value::Set(SymSet::default())), SemType::Set),
                Some(SemType::Str) | None => (Expr::Lit(Value::Str(NONE_SYM)), SemType::Str),
                Some(t) => return Err(type_err(*span, format!("`{{}}` cannot stand for a value of type {t}"))),
            },
            ExprAst::Name(id) => sc.name(id)?,
            ExprAst::Qualified(a, b) => sc.qualified(a, b)?,
            ExprAst::SetLit(items, _) => {
                let mut out = Vec::new();
                for it in items {
                    let (x, t) = self.expr(sc, it, Some(SemType::Str))?;
                    if t != SemType::Str {
                        return Err(type_err(it.span(), format!("set element must be a string, found {t}")));
                    }
                    out.push(x);
                }
                (Expr::SetOf(out), SemType::Set)
            }
            ExprAst::Not(a, _) => (Expr::not(self.boolean(sc, a)?), SemType::Bool),
            ExprAst::Binary(op, a, b) => self.binary(sc, *op, a, b)?,
        })
    }

    /// Types `e` in a boolean context: strings test `!= "NONE"`, sets test non-emptiness.
    fn boolean(&self, sc: &dyn Scope, e: &ExprAst) -> Result<Expr, Diagnostic> {
        let (x, t) = self.expr(sc, e, None)?;
        Ok(match t {
            SemType::Bool => x,
            SemType::Str => Expr::cmp(CmpOp::Ne, x, Expr::Lit(Value::Str(NONE_SYM))),
            SemType::Set => Expr::not(Expr::cmp(CmpOp::Eq, x, Expr::Lit(Value::Set(SymSet::default())))),
            t @ SemType::Int { .. } => {
                return Err(type_err(e.span(), format!("expected a condition, found a value of type {t}")))
            }
        })
    }

    /// Types both operands, using whichever side is not `{}` to direct the other.
    fn pair(
        &self,
        sc: &dyn Scope,
        a: &ExprAst,
        b: &ExprAst,
    ) -> Result<((Expr, SemType), (Expr, SemType)), Diagnostic> {
        if matches!(a, ExprAst::Empty(_)) {
            let rb = self.expr(sc, b, None)?;
            let ra = self.expr(sc, a, Some(rb.1))?;
            Ok((ra, rb))
        } else {
            let ra = self.expr(sc, a, None)?;
            let rb = self.expr(sc, b, Some(ra.1))?;
            Ok((ra, rb))
        }
    }

    fn binary(&self, sc: &dyn Scope, op: BinOp, a: &ExprAst, b: &ExprAst) -> Result<(Expr, SemType), Diagnostic> {
        let span = a.span().to(b.span());
        let bx = Box::new;
        Ok(match op {
            BinOp::And => (Expr::and(self.boolean(sc, a)?, self.boolean(sc, b)?), SemType::Bool),
            BinOp::Or => (Expr::or(self.boolean(sc, a)?, self.boolean(sc, b)?), SemType::Bool),
            BinOp::Eq | BinOp::Ne => {
                let ((x, tx), (y, ty)) = self.pair(sc, a, b)?;
                if !tx.compatible(&ty) {
                    return Err(type_err(span, format!("cannot compare {tx} with {ty}")));
                }
                let c = if op == BinOp::Eq { CmpOp::Eq } else { CmpOp::Ne };
                (Expr::cmp(c, x, y), SemType::Bool)
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let (x, tx) = self.expr(sc, a, None)?;
                let (y, ty) = self.expr(sc, b, None)?;
                if !matches!((tx, ty), (SemType::Int { .. }, SemType::Int { .. })) {
                    return Err(type_err(span, format!("`{}` needs integers, found {tx} and {ty}", op.symbol())));
                }
                let c = match op {
                    BinOp::Lt => CmpOp::Lt,
                    BinOp::Le => CmpOp::Le,
                    BinOp::Gt => CmpOp::Gt,
                    _ => CmpOp::Ge,
                };
                (Expr::cmp(c, x, y), SemType::Bool)
            }
            BinOp::In | BinOp::NotIn => {
                let (x, tx) = self.expr(sc, a, Some(SemType::Str))?;
                let (y, ty) = self.expr(sc, b, Some(SemType::Set))?;
                if tx != SemType::Str || ty != SemType::Set {
                    return Err(type_err(span, format!("membership needs string in set<string>, found {tx} in {ty}")));
                }
                let m = Expr::In(bx(x), bx(y));
                (if op == BinOp::In { m } else { Expr::not(m) }, SemType::Bool)
            }
            BinOp::Conforms => {
                let (x, tx) = self.expr(sc, a, Some(SemType::Str))?;
                let (y, ty) = self.expr(sc, b, None)?;
                if tx != SemType::Str || !matches!(ty, SemType::Str | SemType::Set) {
                    return Err(type_err(span, format!("conformity needs a string and a credential slot, found {tx} and {ty}")));
                }
                (Expr::Conforms(bx(x), bx(y)), SemType::Bool)
            }
            BinOp::Add | BinOp::Sub => {
                let (x, tx) = self.expr(sc, a, None)?;
                let expected = if tx == SemType::Set { Some(SemType::Str) } else { None };
                let (y, ty) = self.expr(sc, b, expected)?;
                let t = match (tx, ty) {
                    (SemType::Int { lo, hi }, SemType::Int { lo: l2, hi: h2 }) => {
                        if op == BinOp::Add {
                            SemType::Int { lo: lo + l2, hi: hi + h2 }
                        } else {
                            SemType::Int { lo: lo - h2, hi: hi - l2 }
                        }
                    }
                    (SemType::Set, SemType::Str | SemType::Set) => SemType::Set,
                    _ => {
                        return Err(type_err(span, format!("`{}` is not defined on {tx} and {ty}", op.symbol())))
                    }
                };
                let e = if op == BinOp::Add { Expr::Add(bx(x), bx(y)) } else { Expr::Sub(bx(x), bx(y)) };
                (e, t)
            }
        })
    }

    /// Checks an assignment `var: value` against the variable's declared type.
    fn assign(&self, sc: &dyn Scope, var_ty: SemType, value: &ExprAst) -> Result<Expr, Diagnostic> {
        let (x, t) = self.expr(sc, value, Some(var_ty))?;
        if !var_ty.compatible(&t) {
            return Err(type_err(value.span(), format!("cannot assign a value of type {t} to a variable of type {var_ty}")));
        }
        if let (SemType::Int { lo, hi }, Expr::Lit(Value::Int(n))) = (var_ty, &x) {
            if *n < lo || *n > hi {
                return Err(err(DiagKind::Domain, value.span(), format!("{n} is outside {var_ty}")));
            }
        }
        Ok(x)
    }

    /// Evaluates a constant expression (control `init` values, instance arguments).
    fn constant(&self, e: &ExprAst, ty: SemType) -> Result<Value, Diagnostic> {
        let sc = NoNames;
        let x = self.assign(&sc, ty, e)?;
        let v = x.eval(&NoVals).map_err(|m| type_err(e.span(), m.to_string()))?;
        Ok(v)
    }
}

struct NoNames;

impl Scope for NoNames {
    fn name(&self, id: &Ident) -> Result<(Expr, SemType), Diagnostic> {
        Err(err(DiagKind::Name, id.span, format!("expected a constant, found name `{}`", id.name)))
    }
    fn qualified(&self, a: &Ident, b: &Ident) -> Result<(Expr, SemType), Diagnostic> {
        Err(err(DiagKind::Name, a.span.to(b.span), format!("expected a constant, found `{}.{}`", a.name, b.name)))
    }
}

struct NoVals;

impl crate::expr::Valuation for NoVals {
    fn value(&self, _: VarId) -> Value {
        unreachable!("constant expressions read no variables")
    }
    fn at(&self, _: u32, _: u32) -> bool {
        unreachable!()
    }
}

fn sem_type(t: &TypeAst, span: Span) -> Result<SemType, Diagnostic> {
    Ok(match t {
        TypeAst::Bool => SemType::Bool,
        TypeAst::Str => SemType::Str,
        TypeAst::Set => SemType::Set,
        TypeAst::Int { lo, hi } => {
            if lo > hi {
                return Err(err(DiagKind::Domain, span, format!("empty integer range {lo}..{hi}")));
            }
            SemType::Int { lo: *lo, hi: *hi }
        }
    })
}

// ----------------------------------------------------------------- systems

struct SysScope<'a> {
    sys_name: &'a str,
    vars: &'a [VarDecl],
    params: &'a [(String, SemType)],
    props: HashMap<String, Expr>,
}

impl Scope for SysScope<'_> {
    fn name(&self, id: &Ident) -> Result<(Expr, SemType), Diagnostic> {
        if let Some(i) = self.vars.iter().position(|v| v.name == id.name) {
            return Ok((Expr::Var(VarId(i as u32)), self.vars[i].ty));
        }
        if let Some(i) = self.params.iter().position(|p| p.0 == id.name) {
            return Ok((Expr::Param(i as u32), self.params[i].1));
        }
        if let Some(clause) = self.props.get(&id.name) {
            return Ok((clause.clone(), SemType::Bool));
        }
        Err(err(DiagKind::Name, id.span, format!("unbound name `{}` in system `{}`", id.name, self.sys_name)))
    }

    fn qualified(&self, a: &Ident, b: &Ident) -> Result<(Expr, SemType), Diagnostic> {
        Err(err(
            DiagKind::Name,
            a.span.to(b.span),
            format!("qualified name `{}.{}` is only allowed in formulas", a.name, b.name),
        ))
    }
}

struct Resolver<'a> {
    unit: &'a SourceUnit,
    typer: Typer<'a>,
    diags: Vec<Diagnostic>,
}

impl<'a> Resolver<'a> {
    fn varset(&self, name: &Ident) -> Result<&'a VarsetDecl, Diagnostic> {
        self.unit
            .varsets
            .iter()
            .find(|v| v.name.name == name.name)
            .ok_or_else(|| err(DiagKind::Name, name.span, format!("unknown varset `{}`", name.name)))
    }

    fn varset_vars(&mut self, vs: &VarsetDecl, env: bool, out: &mut Vec<VarDecl>) -> Result<(), Diagnostic> {
        for d in &vs.vars {
            let ty = sem_type(&d.ty, d.name.span)?;
            match out.iter().find(|v| v.name == d.name.name) {
                Some(prev) if prev.ty == ty && prev.env && env => {}
                Some(_) => {
                    return Err(err(
                        DiagKind::Name,
                        d.name.span,
                        format!("variable `{}` is declared more than once with conflicting roles or types", d.name.name),
                    ))
                }
                None => out.push(VarDecl { name: d.name.name.clone(), ty, env }),
            }
        }
        Ok(())
    }

    fn system(&mut self, s: &SystemDecl) -> Result<CheckedSystem, Diagnostic> {
        let mut params = Vec::new();
        for p in &s.params {
            if params.iter().any(|(n, _)| n == &p.name.name) {
                return Err(err(DiagKind::Name, p.name.span, format!("duplicate argument `{}`", p.name.name)));
            }
            params.push((p.name.name.clone(), sem_type(&p.ty, p.name.span)?));
        }
        let mut vars = Vec::new();
        if let Some(l) = &s.local {
            let vs = self.varset(l)?;
            self.varset_vars(vs, false, &mut vars)?;
        }
        for e in &s.envs {
            let vs = self.varset(e)?;
            self.varset_vars(vs, true, &mut vars)?;
        }
        for (name, _) in &params {
            if vars.iter().any(|v| &v.name == name) {
                let span = s.params.iter().find(|p| &p.name.name == name).unwrap().name.span;
                return Err(err(DiagKind::Name, span, format!("argument `{name}` shadows a variable")));
            }
        }

        // Declarators, in order of first appearance.
        let mut names: Vec<String> = Vec::new();
        let mut note = |n: &str| {
            if !names.iter().any(|x| x == n) {
                names.push(n.to_string());
            }
        };
        if let Some(i) = &s.init {
            note(&i.name);
        }
        for t in &s.transitions {
            note(&t.src.name);
            note(&t.dst.name);
        }
        for d in &s.declarators {
            note(&d.name.name);
        }
        let Some(init) = &s.init else {
            return Err(err(DiagKind::Init, s.name.span, format!("system `{}` has no `init` declarator", s.name.name)));
        };

        let mut sc = SysScope { sys_name: &s.name.name, vars: &vars, params: &params, props: HashMap::new() };
        let mut props = Vec::new();
        for p in &s.props {
            if sc.props.contains_key(&p.name.name) {
                return Err(err(DiagKind::Name, p.name.span, format!("duplicate prop `{}`", p.name.name)));
            }
            if names.contains(&p.name.name) {
                return Err(err(
                    DiagKind::PropClash,
                    p.name.span,
                    format!("prop `{}` has the same name as a declarator", p.name.name),
                ));
            }
            if vars.iter().any(|v| v.name == p.name.name) || params.iter().any(|x| x.0 == p.name.name) {
                return Err(err(DiagKind::Name, p.name.span, format!("prop `{}` shadows a variable", p.name.name)));
            }
            let clause = self.typer.boolean(&sc, &p.clause)?;
            sc.props.insert(p.name.name.clone(), clause.clone());
            props.push((p.name.name.clone(), clause));
        }

        let block = |this: &Self, assigns: &[Assign]| -> Result<Assignment, Diagnostic> {
            let mut out: Assignment = Vec::new();
            for a in assigns {
                let Some(i) = vars.iter().position(|v| v.name == a.var.name) else {
                    let msg = if params.iter().any(|p| p.0 == a.var.name) {
                        format!("system argument `{}` cannot be assigned", a.var.name)
                    } else {
                        format!("unbound variable `{}`", a.var.name)
                    };
                    return Err(err(DiagKind::Name, a.var.span, msg));
                };
                let id = VarId(i as u32);
                if out.iter().any(|(v, _)| *v == id) {
                    return Err(err(DiagKind::Name, a.var.span, format!("`{}` is assigned twice", a.var.name)));
                }
                out.push((id, this.typer.assign(&sc, vars[i].ty, &a.value)?));
            }
            out.sort_by_key(|(v, _)| *v);
            Ok(out)
        };

        let mut declarators: Vec<CheckedDeclarator> = names
            .iter()
            .map(|n| CheckedDeclarator { name: n.clone(), assigns: Vec::new(), explicit: false })
            .collect();
        for d in &s.declarators {
            let i = declarators.iter().position(|x| x.name == d.name.name).unwrap();
            if declarators[i].explicit {
                return Err(err(DiagKind::Name, d.name.span, format!("declarator `{}` is defined twice", d.name.name)));
            }
            declarators[i].assigns = block(self, &d.assigns)?;
            declarators[i].explicit = true;
        }
        for (i, a) in declarators.iter().enumerate() {
            for b in &declarators[..i] {
                if a.explicit && b.explicit && a.assigns == b.assigns {
                    let span = s.declarators.iter().find(|d| d.name.name == a.name).unwrap().name.span;
                    return Err(err(
                        DiagKind::Uniqueness,
                        span,
                        format!("declarators `{}` and `{}` have identical assignments", b.name, a.name),
                    ));
                }
            }
        }

        let mut effects: HashMap<&str, Assignment> = HashMap::new();
        for e in &s.effects {
            if effects.contains_key(e.name.name.as_str()) {
                return Err(err(DiagKind::Name, e.name.span, format!("effect `@{}` is defined twice", e.name.name)));
            }
            effects.insert(&e.name.name, block(self, &e.assigns)?);
        }

        let decl_idx = |n: &str| declarators.iter().position(|d| d.name == n).unwrap() as u32;
        let mut transitions = Vec::new();
        for t in &s.transitions {
            let guard = match &t.guard {
                Some(g) => self.typer.boolean(&sc, g)?,
                None => Expr::lit_bool(true),
            };
            let (effect, effect_name) = match &t.effect {
                None => (Vec::new(), None),
                Some(EffectRef::Inline(a)) => (block(self, a)?, None),
                Some(EffectRef::Named(n)) => match effects.get(n.name.as_str()) {
                    Some(e) => (e.clone(), Some(n.name.clone())),
                    None => return Err(err(DiagKind::Name, n.span, format!("unknown effect `@{}`", n.name))),
                },
            };
            transitions.push(CheckedTransition {
                src: decl_idx(&t.src.name),
                dst: decl_idx(&t.dst.name),
                guard,
                effect,
                effect_name,
                action: t.action.as_ref().map(|a| a.name.clone()),
            });
        }

        let init_guard = match &s.init_guard {
            Some(g) => {
                let e = self.typer.boolean(&sc, g)?;
                if let Some(v) = e.vars().into_iter().find(|v| vars[v.0 as usize].env) {
                    return Err(err(
                        DiagKind::Init,
                        g.span(),
                        format!("`init where` may only constrain locals, found `{}`", vars[v.0 as usize].name),
                    ));
                }
                Some(e)
            }
            None => None,
        };

        Ok(CheckedSystem {
            name: s.name.name.clone(),
            params,
            init: decl_idx(&init.name),
            vars,
            declarators,
            init_guard,
            transitions,
            props,
        })
    }

    fn control(&mut self, c: &ControlSystemDecl, systems: &[CheckedSystem]) -> Result<CheckedControl, Diagnostic> {
        let mut env_vars = Vec::new();
        for e in &c.envs {
            let vs = self.varset(e)?;
            self.varset_vars(vs, true, &mut env_vars)?;
        }
        let mut env_init: Vec<Option<Value>> = vec![None; env_vars.len()];
        for a in &c.init {
            let Some(i) = env_vars.iter().position(|v| v.name == a.var.name) else {
                return Err(err(DiagKind::Name, a.var.span, format!("`{}` is not an environment variable", a.var.name)));
            };
            if env_init[i].is_some() {
                return Err(err(DiagKind::Init, a.var.span, format!("`{}` is initialized twice", a.var.name)));
            }
            env_init[i] = Some(self.typer.constant(&a.value, env_vars[i].ty)?);
        }
        let missing: Vec<&str> = env_vars
            .iter()
            .zip(&env_init)
            .filter(|(_, v)| v.is_none())
            .map(|(d, _)| d.name.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(err(
                DiagKind::Init,
                c.name.span,
                format!("environment variables not initialized: {}", missing.join(", ")),
            ));
        }

        let mut instances = Vec::new();
        for inst in &c.instances {
            if instances.iter().any(|i: &CheckedInstance| i.alias == inst.alias.name) {
                return Err(err(DiagKind::Alias, inst.alias.span, format!("alias `{}` is used twice", inst.alias.name)));
            }
            let Some(si) = systems.iter().position(|s| s.name == inst.system.name) else {
                return Err(err(DiagKind::Name, inst.system.span, format!("unknown system `{}`", inst.system.name)));
            };
            let sys = &systems[si];
            if sys.params.len() != inst.args.len() {
                return Err(err(
                    DiagKind::Arity,
                    inst.system.span,
                    format!("`{}` takes {} argument(s), {} given", sys.name, sys.params.len(), inst.args.len()),
                ));
            }
            let mut args = Vec::new();
            for (a, (_, ty)) in inst.args.iter().zip(&sys.params) {
                args.push(self.typer.constant(a, *ty)?);
            }
            for v in sys.vars.iter().filter(|v| v.env) {
                match env_vars.iter().find(|e| e.name == v.name) {
                    Some(e) if e.ty == v.ty => {}
                    _ => {
                        return Err(err(
                            DiagKind::EnvMismatch,
                            inst.system.span,
                            format!(
                                "`{}` uses environment variable `{}` which the control system does not provide",
                                sys.name, v.name
                            ),
                        ))
                    }
                }
            }
            instances.push(CheckedInstance { alias: inst.alias.name.clone(), system: si, args });
        }

        Ok(CheckedControl {
            name: c.name.name.clone(),
            env_vars,
            env_init: env_init.into_iter().map(Option::unwrap).collect(),
            instances,
            formulas: Vec::new(),
        })
    }
}

// ---------------------------------------------------------------- formulas

struct FormulaScope<'a> {
    program: &'a Program,
    globals: Vec<VarDecl>,
}

impl FormulaScope<'_> {
    fn control(&self) -> &CheckedControl {
        self.program.control.as_ref().unwrap()
    }
}

impl Scope for FormulaScope<'_> {
    fn name(&self, id: &Ident) -> Result<(Expr, SemType), Diagnostic> {
        match self.control().env_vars.iter().position(|v| v.name == id.name) {
            Some(i) => Ok((Expr::Var(VarId(i as u32)), self.globals[i].ty)),
            None => Err(err(
                DiagKind::Name,
                id.span,
                format!("unbound name `{}` (instance members are written `alias.name`)", id.name),
            )),
        }
    }

    fn qualified(&self, a: &Ident, b: &Ident) -> Result<(Expr, SemType), Diagnostic> {
        let c = self.control();
        let Some(k) = c.instances.iter().position(|i| i.alias == a.name) else {
            return Err(err(DiagKind::Name, a.span, format!("unknown instance `{}`", a.name)));
        };
        let inst = &c.instances[k];
        let sys = &self.program.systems[inst.system];
        let map = self.program.instance_var_map(k);
        let globalize = |e: &Expr| e.bind_params(&inst.args).remap_vars(&map);
        if let Some(i) = sys.vars.iter().position(|v| v.name == b.name) {
            return Ok((Expr::Var(map[i]), sys.vars[i].ty));
        }
        if let Some(i) = sys.params.iter().position(|p| p.0 == b.name) {
            return Ok((Expr::Lit(inst.args[i].clone()), sys.params[i].1));
        }
        if let Some((_, clause)) = sys.props.iter().find(|p| p.0 == b.name) {
            return Ok((globalize(clause), SemType::Bool));
        }
        if let Some(d) = sys.declarator(&b.name) {
            return Ok((Expr::At { instance: k as u32, declarator: d }, SemType::Bool));
        }
        Err(err(
            DiagKind::Name,
            a.span.to(b.span),
            format!("`{}` ({}) has no prop, declarator, variable or argument `{}`", a.name, sys.name, b.name),
        ))
    }
}

fn lower_formula(
    program: &Program,
    f: &Formula<ExprAst>,
) -> Result<Formula<Expr>, Diagnostic> {
    let sc = FormulaScope { program, globals: program.global_vars() };
    let typer = Typer { universe: &program.universe };
    f.try_map(&mut |atom| typer.boolean(&sc, atom))
}

// -------------------------------------------------------------------- entry

fn collect_literals<'a>(unit: &'a SourceUnit, extra: &'a [Formula<ExprAst>], out: &mut Vec<&'a str>) {
    for s in &unit.systems {
        for t in &s.transitions {
            if let Some(g) = &t.guard {
                g.literals(out);
            }
            if let Some(EffectRef::Inline(a)) = &t.effect {
                a.iter().for_each(|a| a.value.literals(out));
            }
        }
        if let Some(g) = &s.init_guard {
            g.literals(out);
        }
        for d in &s.declarators {
            d.assigns.iter().for_each(|a| a.value.literals(out));
        }
        for e in &s.effects {
            e.assigns.iter().for_each(|a| a.value.literals(out));
        }
        for p in &s.props {
            p.clause.literals(out);
        }
    }
    for c in &unit.controls {
        c.init.iter().for_each(|a| a.value.literals(out));
        for i in &c.instances {
            i.args.iter().for_each(|a| a.literals(out));
        }
        for f in &c.formulas {
            f.formula.atoms().into_iter().for_each(|a| a.literals(out));
        }
    }
    for f in extra {
        f.atoms().into_iter().for_each(|a| a.literals(out));
    }
}

/// Resolves and type-checks a merged unit. `extra` formulas (already parsed)
/// are appended after the control system's own formulas.
pub fn resolve(
    unit: &SourceUnit,
    extra: &[(Logic, Formula<ExprAst>, Span)],
) -> Result<Program, Vec<Diagnostic>> {
    let extra_f: Vec<Formula<ExprAst>> = extra.iter().map(|e| e.1.clone()).collect();
    let mut lits = Vec::new();
    collect_literals(unit, &extra_f, &mut lits);
    let universe = Universe::from_literals(lits);

    let mut diags = Vec::new();
    let mut seen = HashSet::new();
    for v in &unit.varsets {
        if !seen.insert(v.name.name.as_str()) {
            diags.push(err(DiagKind::Name, v.name.span, format!("varset `{}` is declared twice", v.name.name)));
        }
        let mut names = HashSet::new();
        for d in &v.vars {
            if !names.insert(d.name.name.as_str()) {
                diags.push(err(
                    DiagKind::Name,
                    d.name.span,
                    format!("variable `{}` is declared twice in `{}`", d.name.name, v.name.name),
                ));
            }
        }
    }
    let mut seen = HashSet::new();
    for s in &unit.systems {
        if !seen.insert(s.name.name.as_str()) {
            diags.push(err(DiagKind::Name, s.name.span, format!("system `{}` is declared twice", s.name.name)));
        }
    }
    if unit.controls.len() > 1 {
        diags.push(err(
            DiagKind::Control,
            unit.controls[1].name.span,
            "more than one `main control system` in the compilation",
        ));
    }

    let mut r = Resolver { unit, typer: Typer { universe: &universe }, diags: Vec::new() };
    let mut systems = Vec::new();
    for s in &unit.systems {
        match r.system(s) {
            Ok(cs) => systems.push(cs),
            Err(d) => diags.push(d),
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    let control = match unit.controls.first() {
        Some(c) => match r.control(c, &systems) {
            Ok(cc) => Some(cc),
            Err(d) => return Err(vec![d]),
        },
        None => None,
    };
    diags.append(&mut r.diags);

    let mut program = Program { universe: universe.clone(), systems, control };
    let mut formulas = Vec::new();
    let decls: Vec<(Logic, &Formula<ExprAst>, Span)> = unit
        .controls
        .first()
        .map(|c| c.formulas.iter().map(|f| (f.logic, &f.formula, f.span)).collect())
        .unwrap_or_default();
    let all = decls.into_iter().chain(extra.iter().map(|(l, f, s)| (*l, f, *s)));
    for (logic, f, span) in all {
        if program.control.is_none() {
            diags.push(err(DiagKind::Control, span, "formulas need a `main control system`"));
            break;
        }
        if let Err(d) = super::parser::check_logic(f, logic, Some(span)) {
            diags.push(d);
            continue;
        }
        match lower_formula(&program, f) {
            Ok(lowered) => formulas.push(CheckedFormula { logic, text: print_formula(f), formula: lowered }),
            Err(d) => diags.push(d),
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    if let Some(c) = &mut program.control {
        c.formulas = formulas;
    }
    Ok(program)
}
