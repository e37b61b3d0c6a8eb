//! Parsed (unresolved) modeling-language programs.

use crate::logic::{Formula, Logic};

use super::diag::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>, span: Span) -> Self {
        Ident { name: name.into(), span }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceUnit {
    pub varsets: Vec<VarsetDecl>,
    pub systems: Vec<SystemDecl>,
    pub controls: Vec<ControlSystemDecl>,
}

impl SourceUnit {
    /// Concatenates the declarations of several files into one compilation unit.
    pub fn merge(units: impl IntoIterator<Item = SourceUnit>) -> SourceUnit {
        let mut out = SourceUnit::default();
        for u in units {
            out.varsets.extend(u.varsets);
            out.systems.extend(u.systems);
            out.controls.extend(u.controls);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeAst {
    Bool,
    Int { lo: i64, hi: i64 },
    Str,
    Set,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDeclAst {
    pub name: Ident,
    pub ty: TypeAst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarsetDecl {
    pub name: Ident,
    pub vars: Vec<VarDeclAst>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assign {
    pub var: Ident,
    pub value: ExprAst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeclaratorDecl {
    pub name: Ident,
    pub assigns: Vec<Assign>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectBlock {
    pub name: Ident,
    pub assigns: Vec<Assign>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EffectRef {
    Named(Ident),
    Inline(Vec<Assign>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionDecl {
    pub src: Ident,
    pub guard: Option<ExprAst>,
    pub effect: Option<EffectRef>,
    pub action: Option<Ident>,
    pub dst: Ident,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropDecl {
    pub name: Ident,
    pub clause: ExprAst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemDecl {
    pub name: Ident,
    pub params: Vec<VarDeclAst>,
    pub local: Option<Ident>,
    pub envs: Vec<Ident>,
    pub init: Option<Ident>,
    pub init_guard: Option<ExprAst>,
    pub transitions: Vec<TransitionDecl>,
    pub declarators: Vec<DeclaratorDecl>,
    pub effects: Vec<EffectBlock>,
    pub props: Vec<PropDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceDecl {
    pub system: Ident,
    pub args: Vec<ExprAst>,
    pub alias: Ident,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaDecl {
    pub logic: Logic,
    pub formula: Formula<ExprAst>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlSystemDecl {
    pub name: Ident,
    pub envs: Vec<Ident>,
    pub init: Vec<Assign>,
    pub instances: Vec<InstanceDecl>,
    pub formulas: Vec<FormulaDecl>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    And,
    Or,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    NotIn,
    Add,
    Sub,
    Conforms,
}

impl BinOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinOp::And => "&",
            BinOp::Or => "|",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::In => "in",
            BinOp::NotIn => "not in",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Conforms => "conforms",
        }
    }

    pub fn is_comparison(&self) -> bool {
        matches!(
            self,
            BinOp::Eq
                | BinOp::Ne
                | BinOp::Lt
                | BinOp::Le
                | BinOp::Gt
                | BinOp::Ge
                | BinOp::In
                | BinOp::NotIn
                | BinOp::Conforms
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprAst {
    Str(String, Span),
    Int(i64, Span),
    Bool(bool, Span),
    /// `{}` / `∅`: the empty set, or `"NONE"` where a string is expected.
    Empty(Span),
    Name(Ident),
    Qualified(Ident, Ident),
    SetLit(Vec<ExprAst>, Span),
    Not(Box<ExprAst>, Span),
    Binary(BinOp, Box<ExprAst>, Box<ExprAst>),
}

impl ExprAst {
    pub fn span(&self) -> Span {
        match self {
            ExprAst::Str(_, s)
            | ExprAst::Int(_, s)
            | ExprAst::Bool(_, s)
            | ExprAst::Empty(s)
            | ExprAst::SetLit(_, s)
            | ExprAst::Not(_, s) => *s,
            ExprAst::Name(i) => i.span,
            ExprAst::Qualified(a, b) => a.span.to(b.span),
            ExprAst::Binary(_, a, b) => a.span().to(b.span()),
        }
    }

    /// String literals occurring in the expression.
    pub fn literals<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ExprAst::Str(s, _) => out.push(s),
            ExprAst::SetLit(items, _) => items.iter().for_each(|e| e.literals(out)),
            ExprAst::Not(a, _) => a.literals(out),
            ExprAst::Binary(_, a, b) => {
                a.literals(out);
                b.literals(out);
            }
            _ => {}
        }
    }
}
