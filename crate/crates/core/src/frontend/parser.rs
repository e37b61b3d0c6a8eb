//! Recursive-descent parser for `.sz` sources and standalone formulas.

use crate::logic::{Formula, Logic};

use super::ast::*;
use super::diag::{DiagKind, Diagnostic, Span};
use super::lexer::{tokenize, Tok, Token};

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

fn expected(span: Span, what: &[&str], found: &Tok) -> Diagnostic {
    let list = match what {
        [one] => one.to_string(),
        many => format!("one of {}", many.join(", ")),
    };
    Diagnostic::error(DiagKind::Parse, Some(span), format!("expected {list}, found {found}"))
}

impl Parser {
    fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<Span> {
        if self.peek() == &tok {
            Ok(self.bump().span)
        } else {
            Err(expected(self.span(), &[&tok.to_string()], self.peek()))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().span;
                Ok(Ident::new(name, span))
            }
            other => Err(expected(self.span(), &["identifier"], &other)),
        }
    }

    fn peek_ident_is(&self, n: usize, word: &str) -> bool {
        matches!(self.peek_at(n), Tok::Ident(s) if s == word)
    }

    // ---------------------------------------------------------------- unit

    fn unit(&mut self) -> (SourceUnit, Vec<Diagnostic>) {
        let mut unit = SourceUnit::default();
        let mut errors = Vec::new();
        loop {
            let result = match self.peek() {
                Tok::Eof => break,
                Tok::Varset => self.varset().map(|v| unit.varsets.push(v)),
                Tok::System => self.system().map(|s| unit.systems.push(s)),
                Tok::Main => self.control().map(|c| unit.controls.push(c)),
                other => Err(expected(self.span(), &["`varset`", "`system`", "`main`"], other)),
            };
            if let Err(d) = result {
                errors.push(d);
                self.recover();
            }
        }
        (unit, errors)
    }

    /// Skips to the next top-level declaration keyword.
    fn recover(&mut self) {
        self.bump();
        while !matches!(self.peek(), Tok::Varset | Tok::System | Tok::Main | Tok::Eof) {
            self.bump();
        }
    }

    fn ty(&mut self) -> PResult<TypeAst> {
        match self.peek().clone() {
            Tok::Bool => {
                self.bump();
                Ok(TypeAst::Bool)
            }
            Tok::StringKw => {
                self.bump();
                Ok(TypeAst::Str)
            }
            Tok::SetKw => {
                self.bump();
                self.expect(Tok::Lt)?;
                self.expect(Tok::StringKw)?;
                self.expect(Tok::Gt)?;
                Ok(TypeAst::Set)
            }
            Tok::IntKw => {
                self.bump();
                self.expect(Tok::LBracket)?;
                let (lo, hi) = self.range()?;
                self.expect(Tok::RBracket)?;
                Ok(TypeAst::Int { lo, hi })
            }
            Tok::Int(_) | Tok::Minus => {
                let (lo, hi) = self.range()?;
                Ok(TypeAst::Int { lo, hi })
            }
            other => Err(expected(self.span(), &["`bool`", "`int[lo..hi]`", "`string`", "`set<string>`"], &other)),
        }
    }

    fn signed_int(&mut self) -> PResult<i64> {
        let neg = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(if neg { -n } else { n })
            }
            other => Err(expected(self.span(), &["integer"], &other)),
        }
    }

    fn range(&mut self) -> PResult<(i64, i64)> {
        let lo = self.signed_int()?;
        self.expect(Tok::DotDot)?;
        let hi = self.signed_int()?;
        Ok((lo, hi))
    }

    fn var_decls(&mut self, close: Tok) -> PResult<Vec<VarDeclAst>> {
        let mut vars = Vec::new();
        while self.peek() != &close {
            let name = self.ident()?;
            self.expect(Tok::ColonColon)?;
            let ty = self.ty()?;
            vars.push(VarDeclAst { name, ty });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(close)?;
        Ok(vars)
    }

    fn varset(&mut self) -> PResult<VarsetDecl> {
        self.expect(Tok::Varset)?;
        let name = self.ident()?;
        self.expect(Tok::LBrace)?;
        let vars = self.var_decls(Tok::RBrace)?;
        Ok(VarsetDecl { name, vars })
    }

    fn env_list(&mut self) -> PResult<Vec<Ident>> {
        let mut envs = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            envs.push(self.ident()?);
        }
        Ok(envs)
    }

    fn system(&mut self) -> PResult<SystemDecl> {
        self.expect(Tok::System)?;
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let params = self.var_decls(Tok::RParen)?;
        let local = if self.eat(&Tok::Over) { Some(self.ident()?) } else { None };
        let envs = if self.eat(&Tok::With) { self.env_list()? } else { Vec::new() };
        self.expect(Tok::LBrace)?;
        let mut sys = SystemDecl {
            name,
            params,
            local,
            envs,
            init: None,
            init_guard: None,
            transitions: Vec::new(),
            declarators: Vec::new(),
            effects: Vec::new(),
            props: Vec::new(),
        };
        loop {
            match self.peek().clone() {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Init if self.peek_at(1) == &Tok::Where => {
                    let at = self.span();
                    self.bump();
                    self.bump();
                    let g = self.expr()?;
                    if sys.init_guard.replace(g).is_some() {
                        return Err(Diagnostic::error(DiagKind::Parse, Some(at), "duplicate `init where` guard"));
                    }
                }
                Tok::Init => {
                    let at = self.span();
                    self.bump();
                    let head = self.ident()?;
                    if let Some(prev) = &sys.init {
                        if prev.name != head.name {
                            return Err(Diagnostic::error(
                                DiagKind::Parse,
                                Some(at),
                                format!("second initial declarator `{}` (already `{}`)", head.name, prev.name),
                            ));
                        }
                    }
                    sys.init = Some(head.clone());
                    self.chain(head, &mut sys.transitions)?;
                }
                Tok::At => {
                    self.bump();
                    let name = self.ident()?;
                    self.expect(Tok::Eq)?;
                    let assigns = self.assign_block()?;
                    sys.effects.push(EffectBlock { name, assigns });
                }
                Tok::Prop => {
                    self.bump();
                    let name = self.ident()?;
                    self.expect(Tok::LBrace)?;
                    let clause = self.expr()?;
                    self.expect(Tok::RBrace)?;
                    sys.props.push(PropDecl { name, clause });
                }
                Tok::Ident(_) if self.peek_at(1) == &Tok::Eq => {
                    let name = self.ident()?;
                    self.bump();
                    let assigns = self.assign_block()?;
                    sys.declarators.push(DeclaratorDecl { name, assigns });
                }
                Tok::Ident(_) => {
                    let head = self.ident()?;
                    if !matches!(self.peek(), Tok::Arrow | Tok::LBracket) {
                        return Err(expected(self.span(), &["`->`", "`[`", "`=`"], self.peek()));
                    }
                    self.chain(head, &mut sys.transitions)?;
                }
                other => {
                    return Err(expected(
                        self.span(),
                        &["transition", "declarator block", "effect block", "`prop`", "`}`"],
                        &other,
                    ))
                }
            }
        }
        Ok(sys)
    }

    /// `A [g]? -> [g]? (@eff)? (act())? B -> ... C`
    fn chain(&mut self, mut src: Ident, out: &mut Vec<TransitionDecl>) -> PResult<()> {
        while matches!(self.peek(), Tok::Arrow | Tok::LBracket) {
            let start = src.span;
            let mut guard = if self.peek() == &Tok::LBracket { Some(self.guard()?) } else { None };
            self.expect(Tok::Arrow)?;
            if self.peek() == &Tok::LBracket {
                let at = self.span();
                let g = self.guard()?;
                if guard.replace(g).is_some() {
                    return Err(Diagnostic::error(
                        DiagKind::Parse,
                        Some(at),
                        "a transition takes one guard, before or after `->`",
                    ));
                }
            }
            let effect = if self.eat(&Tok::At) {
                if self.peek() == &Tok::LBrace {
                    Some(EffectRef::Inline(self.assign_block()?))
                } else {
                    Some(EffectRef::Named(self.ident()?))
                }
            } else {
                None
            };
            let action = if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::LParen {
                let a = self.ident()?;
                self.expect(Tok::LParen)?;
                self.expect(Tok::RParen)?;
                Some(a)
            } else {
                None
            };
            let dst = self.ident()?;
            out.push(TransitionDecl {
                src: src.clone(),
                guard,
                effect,
                action,
                dst: dst.clone(),
                span: start.to(dst.span),
            });
            src = dst;
        }
        Ok(())
    }

    fn guard(&mut self) -> PResult<ExprAst> {
        self.expect(Tok::LBracket)?;
        let g = self.expr()?;
        self.expect(Tok::RBracket)?;
        Ok(g)
    }

    fn assign_block(&mut self) -> PResult<Vec<Assign>> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        while self.peek() != &Tok::RBrace {
            let var = self.ident()?;
            self.expect(Tok::Colon)?;
            let value = self.expr()?;
            out.push(Assign { var, value });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(out)
    }

    fn control(&mut self) -> PResult<ControlSystemDecl> {
        let start = self.expect(Tok::Main)?;
        self.expect(Tok::Control)?;
        self.expect(Tok::System)?;
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        self.expect(Tok::RParen)?;
        let envs = if self.eat(&Tok::Over) { self.env_list()? } else { Vec::new() };
        self.expect(Tok::LBrace)?;
        let mut ctl = ControlSystemDecl {
            name,
            envs,
            init: Vec::new(),
            instances: Vec::new(),
            formulas: Vec::new(),
            span: start,
        };
        loop {
            match self.peek().clone() {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Init => {
                    self.bump();
                    let block = self.assign_block()?;
                    ctl.init.extend(block);
                }
                Tok::Async => {
                    self.bump();
                    loop {
                        let system = self.ident()?;
                        self.expect(Tok::LParen)?;
                        let mut args = Vec::new();
                        while self.peek() != &Tok::RParen {
                            args.push(self.expr()?);
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                        self.expect(Tok::RParen)?;
                        self.expect(Tok::As)?;
                        let alias = self.ident()?;
                        ctl.instances.push(InstanceDecl { system, args, alias });
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                Tok::Ctl | Tok::Ltl => {
                    let logic = if self.bump().tok == Tok::Ctl { Logic::Ctl } else { Logic::Ltl };
                    let start = self.span();
                    let formula = self.formula()?;
                    let span = start.to(self.prev_span());
                    ctl.formulas.push(FormulaDecl { logic, formula, span });
                }
                other => {
                    return Err(expected(
                        self.span(),
                        &["`init`", "`async`", "`ctl`", "`ltl`", "`}`"],
                        &other,
                    ))
                }
            }
        }
        Ok(ctl)
    }

    // ---------------------------------------------------------- expressions

    fn expr(&mut self) -> PResult<ExprAst> {
        let mut lhs = self.and_expr()?;
        while matches!(self.peek(), Tok::Pipe | Tok::Or) {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = ExprAst::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<ExprAst> {
        let mut lhs = self.not_expr()?;
        while matches!(self.peek(), Tok::Amp | Tok::And) {
            self.bump();
            let rhs = self.not_expr()?;
            lhs = ExprAst::Binary(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<ExprAst> {
        if matches!(self.peek(), Tok::Bang | Tok::Not) {
            let span = self.bump().span;
            let inner = self.not_expr()?;
            return Ok(ExprAst::Not(Box::new(inner), span));
        }
        self.cmp_expr()
    }

    fn cmp_op(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::In => BinOp::In,
            Tok::NotIn => BinOp::NotIn,
            Tok::Succ | Tok::Conforms => BinOp::Conforms,
            Tok::Not if self.peek_at(1) == &Tok::In => BinOp::NotIn,
            _ => return None,
        })
    }

    fn cmp_expr(&mut self) -> PResult<ExprAst> {
        let lhs = self.add_expr()?;
        if let Some(op) = self.cmp_op() {
            if self.bump().tok == Tok::Not {
                self.bump();
            }
            let rhs = self.add_expr()?;
            return Ok(ExprAst::Binary(op, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> PResult<ExprAst> {
        let mut lhs = self.primary()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.primary()?;
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> PResult<ExprAst> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(ExprAst::Str(s, span))
            }
            Tok::Int(n) => {
                self.bump();
                Ok(ExprAst::Int(n, span))
            }
            Tok::Minus if matches!(self.peek_at(1), Tok::Int(_)) => {
                self.bump();
                let Tok::Int(n) = self.bump().tok else { unreachable!() };
                Ok(ExprAst::Int(-n, span.to(self.prev_span())))
            }
            Tok::True => {
                self.bump();
                Ok(ExprAst::Bool(true, span))
            }
            Tok::False => {
                self.bump();
                Ok(ExprAst::Bool(false, span))
            }
            Tok::EmptySet => {
                self.bump();
                Ok(ExprAst::Empty(span))
            }
            Tok::LBrace => {
                self.bump();
                let mut items = Vec::new();
                while self.peek() != &Tok::RBrace {
                    items.push(self.expr()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                let span = span.to(self.prev_span());
                Ok(if items.is_empty() { ExprAst::Empty(span) } else { ExprAst::SetLit(items, span) })
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Conforms => {
                self.bump();
                self.expect(Tok::LParen)?;
                let a = self.expr()?;
                self.expect(Tok::Comma)?;
                let b = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(ExprAst::Binary(BinOp::Conforms, Box::new(a), Box::new(b)))
            }
            Tok::Ident(_) => {
                let first = self.ident()?;
                if self.peek() == &Tok::Dot {
                    self.bump();
                    let second = self.ident()?;
                    Ok(ExprAst::Qualified(first, second))
                } else {
                    Ok(ExprAst::Name(first))
                }
            }
            other => Err(expected(span, &["expression"], &other)),
        }
    }

    // ------------------------------------------------------------- formulas

    fn formula(&mut self) -> PResult<Formula<ExprAst>> {
        let lhs = self.f_iff()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn f_iff(&mut self) -> PResult<Formula<ExprAst>> {
        let lhs = self.f_or()?;
        if self.eat(&Tok::Iff) {
            let rhs = self.f_or()?;
            return Ok(Formula::Iff(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn f_or(&mut self) -> PResult<Formula<ExprAst>> {
        let mut lhs = self.f_and()?;
        while matches!(self.peek(), Tok::Pipe | Tok::Or) {
            self.bump();
            let rhs = self.f_and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn f_and(&mut self) -> PResult<Formula<ExprAst>> {
        let mut lhs = self.f_until()?;
        while matches!(self.peek(), Tok::Amp | Tok::And) {
            self.bump();
            let rhs = self.f_until()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn f_until(&mut self) -> PResult<Formula<ExprAst>> {
        let lhs = self.f_unary()?;
        if self.peek_ident_is(0, "U") && self.peek_at(1) != &Tok::Dot {
            self.bump();
            let rhs = self.f_until()?;
            return Ok(Formula::U(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    /// Temporal operator spelled as an identifier (`AG`, `A` `G`, `E[`, `G`, ...).
    fn temporal_word(&self) -> Option<(String, usize)> {
        let Tok::Ident(w) = self.peek() else { return None };
        if self.peek_at(1) == &Tok::Dot {
            return None;
        }
        match w.as_str() {
            "AX" | "EX" | "AF" | "EF" | "AG" | "EG" | "X" | "F" | "G" => Some((w.clone(), 1)),
            "A" | "E" => match self.peek_at(1) {
                Tok::Ident(t) if matches!(t.as_str(), "X" | "F" | "G") && self.peek_at(2) != &Tok::Dot => {
                    Some((format!("{w}{t}"), 2))
                }
                Tok::LBracket => Some((format!("{w}["), 1)),
                _ => None,
            },
            _ => None,
        }
    }

    fn f_unary(&mut self) -> PResult<Formula<ExprAst>> {
        let b = Box::new;
        match self.peek() {
            Tok::Bang | Tok::Not => {
                self.bump();
                return Ok(Formula::not(self.f_unary()?));
            }
            Tok::ForAll | Tok::Exists | Tok::NExists => {
                let q = self.bump().tok;
                let op = self.bump();
                let inner = b(self.f_unary()?);
                return match (q, op.tok) {
                    (Tok::ForAll, Tok::Diamond) => Ok(Formula::AF(inner)),
                    (Tok::ForAll, Tok::BoxOp) => Ok(Formula::AG(inner)),
                    (Tok::Exists, Tok::Diamond) => Ok(Formula::EF(inner)),
                    (Tok::Exists, Tok::BoxOp) => Ok(Formula::EG(inner)),
                    (Tok::NExists, Tok::Diamond) => Ok(Formula::not(Formula::EF(inner))),
                    (Tok::NExists, Tok::BoxOp) => Ok(Formula::not(Formula::EG(inner))),
                    (_, t) => Err(expected(op.span, &["`◇`", "`□`"], &t)),
                };
            }
            Tok::Diamond => {
                self.bump();
                return Ok(Formula::F(b(self.f_unary()?)));
            }
            Tok::BoxOp => {
                self.bump();
                return Ok(Formula::G(b(self.f_unary()?)));
            }
            _ => {}
        }
        if let Some((word, len)) = self.temporal_word() {
            for _ in 0..len {
                self.bump();
            }
            if word.ends_with('[') {
                self.expect(Tok::LBracket)?;
                let lhs = self.formula_no_until()?;
                if !self.peek_ident_is(0, "U") {
                    return Err(expected(self.span(), &["`U`"], self.peek()));
                }
                self.bump();
                let rhs = self.formula()?;
                self.expect(Tok::RBracket)?;
                return Ok(if word.starts_with('A') {
                    Formula::AU(b(lhs), b(rhs))
                } else {
                    Formula::EU(b(lhs), b(rhs))
                });
            }
            let inner = b(self.f_unary()?);
            return Ok(match word.as_str() {
                "AX" => Formula::AX(inner),
                "EX" => Formula::EX(inner),
                "AF" => Formula::AF(inner),
                "EF" => Formula::EF(inner),
                "AG" => Formula::AG(inner),
                "EG" => Formula::EG(inner),
                "X" => Formula::X(inner),
                "F" => Formula::F(inner),
                _ => Formula::G(inner),
            });
        }
        self.f_primary()
    }

    /// Left operand of `A[.. U ..]`: a formula whose top level has no `U`.
    fn formula_no_until(&mut self) -> PResult<Formula<ExprAst>> {
        let mut lhs = self.f_unary()?;
        loop {
            match self.peek() {
                Tok::Amp | Tok::And => {
                    self.bump();
                    lhs = Formula::and(lhs, self.f_unary()?);
                }
                Tok::Pipe | Tok::Or => {
                    self.bump();
                    lhs = Formula::or(lhs, self.f_unary()?);
                }
                Tok::Arrow => {
                    self.bump();
                    lhs = Formula::implies(lhs, self.f_unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn f_primary(&mut self) -> PResult<Formula<ExprAst>> {
        match self.peek() {
            Tok::True if self.cmp_op_at(1).is_none() => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False if self.cmp_op_at(1).is_none() => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::LParen => {
                let save = self.pos;
                self.bump();
                let inner = self.formula();
                if let Ok(f) = inner {
                    if self.eat(&Tok::RParen) && self.cmp_op().is_none() && !matches!(self.peek(), Tok::Plus | Tok::Minus) {
                        return Ok(f);
                    }
                }
                self.pos = save;
                Ok(Formula::Atom(self.cmp_expr()?))
            }
            _ => Ok(Formula::Atom(self.cmp_expr()?)),
        }
    }

    fn cmp_op_at(&self, n: usize) -> Option<()> {
        matches!(
            self.peek_at(n),
            Tok::Eq | Tok::Ne | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge | Tok::In | Tok::NotIn | Tok::Succ
        )
        .then_some(())
    }
}

/// Parses one file. On failure, every declaration-level error found (after
/// recovery) is returned.
pub fn parse_unit(tokens: Vec<Token>) -> Result<SourceUnit, Vec<Diagnostic>> {
    let mut p = Parser::new(tokens);
    let (unit, errors) = p.unit();
    if errors.is_empty() {
        Ok(unit)
    } else {
        Err(errors)
    }
}

pub fn parse_source(text: &str, file: u32) -> Result<SourceUnit, Vec<Diagnostic>> {
    let toks = tokenize(text, file).map_err(|d| vec![d])?;
    parse_unit(toks)
}

/// Which logic a formula is written in: CTL if it uses path quantifiers, LTL
/// if it uses bare temporal operators, CTL if it uses neither.
pub fn infer_logic<A>(f: &Formula<A>, span: Option<Span>) -> Result<Logic, Diagnostic> {
    let ctl = f.any(&|n| n.is_path_quantified());
    let ltl = f.any(&|n| n.is_linear_temporal());
    match (ctl, ltl) {
        (true, true) => Err(Diagnostic::error(
            DiagKind::MixedLogic,
            span,
            "formula mixes CTL path quantifiers with LTL temporal operators",
        )),
        (false, true) => Ok(Logic::Ltl),
        _ => Ok(Logic::Ctl),
    }
}

/// Checks that a formula declared with `logic` only uses that logic's operators.
pub fn check_logic<A>(f: &Formula<A>, logic: Logic, span: Option<Span>) -> Result<(), Diagnostic> {
    let bad = match logic {
        Logic::Ctl => f.any(&|n| n.is_linear_temporal()),
        Logic::Ltl => f.any(&|n| n.is_path_quantified()),
    };
    if bad {
        let msg = match logic {
            Logic::Ctl => "LTL temporal operator inside a `ctl` formula",
            Logic::Ltl => "CTL path quantifier inside an `ltl` formula",
        };
        return Err(Diagnostic::error(DiagKind::MixedLogic, span, msg));
    }
    Ok(())
}

/// Parses standalone property text. With `logic = None` the logic is inferred.
pub fn parse_formula(
    text: &str,
    logic: Option<Logic>,
    file: u32,
) -> Result<(Logic, Formula<ExprAst>), Diagnostic> {
    let toks = tokenize(text, file)?;
    let mut p = Parser::new(toks);
    let f = p.formula()?;
    if p.peek() != &Tok::Eof {
        return Err(expected(p.span(), &["end of formula"], p.peek()));
    }
    let span = Some(Span::new(file, 0, text.len()));
    let logic = match logic {
        Some(l) => {
            check_logic(&f, l, span)?;
            l
        }
        None => infer_logic(&f, span)?,
    };
    Ok((logic, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn name(s: &str) -> ExprAst {
        ExprAst::Name(Ident::new(s, Span::default()))
    }

    fn q(a: &str, b: &str) -> ExprAst {
        ExprAst::Qualified(Ident::new(a, Span::default()), Ident::new(b, Span::default()))
    }

    fn string(s: &str) -> ExprAst {
        ExprAst::Str(s.into(), Span::default())
    }

    const HOLDER: &str = r#"
system Holder(pkH :: string, vcH :: string, vcHash :: string) over HolderVars with Environment {

    init IDLE -> REQ_PK_V -> @sendGetPKvReq sendGetPKvReq() WAIT_PK_V
    HAVE_VC_CONF -> DONE -> DONE
    @sendGetPKvReq = {
        reqGetPKvPayload: pkH
    }
    HAVE_PK_V = {
        state: "HAVE_PK_V",
        pkV: resGetPKvPayloadContent
    }
    prop receivedConf {
        resPostVCPayloadKey = pkH & resPostVCPayloadContent = vcHash
    }

    prop isDone {
        state = "DONE"
    }
}

varset HolderVars {
    pkV :: string,
    state :: string
}
"#;

    #[test]
    fn holder_listing_parses() {
        let unit = parse_source(HOLDER, 0).unwrap();
        assert_eq!(unit.systems.len(), 1);
        let h = &unit.systems[0];
        assert_eq!(h.name.name, "Holder");
        assert_eq!(h.params.len(), 3);
        assert_eq!(h.local.as_ref().unwrap().name, "HolderVars");
        assert_eq!(h.envs[0].name, "Environment");
        assert_eq!(h.init.as_ref().unwrap().name, "IDLE");
        let props: Vec<_> = h.props.iter().map(|p| p.name.name.as_str()).collect();
        assert_eq!(props, ["receivedConf", "isDone"]);
        assert_eq!(unit.varsets[0].name.name, "HolderVars");
    }

    #[test]
    fn chain_splits_into_transitions() {
        let unit = parse_source(HOLDER, 0).unwrap();
        let t = &unit.systems[0].transitions;
        assert_eq!(t.len(), 4);
        assert_eq!((t[0].src.name.as_str(), t[0].dst.name.as_str()), ("IDLE", "REQ_PK_V"));
        assert!(t[0].guard.is_none() && t[0].effect.is_none() && t[0].action.is_none());
        assert_eq!((t[1].src.name.as_str(), t[1].dst.name.as_str()), ("REQ_PK_V", "WAIT_PK_V"));
        assert_eq!(
            t[1].effect,
            Some(EffectRef::Named(Ident::new("sendGetPKvReq", Span::default())))
        );
        assert_eq!(t[1].action.as_ref().unwrap().name, "sendGetPKvReq");
        assert_eq!((t[3].src.name.as_str(), t[3].dst.name.as_str()), ("DONE", "DONE"));
    }

    #[test]
    fn guard_before_arrow_and_self_loops() {
        let src = r#"system MiddleMan(pkM :: string) over MiddleManVars with Environment {
            init IDLE -> IDLE [reqGetPKvPayload] -> parseInterceptedGetPKvPayload() HAVE_PK_H -> sendManipulatedGetPKvReq() WAIT_PK_V
            WAIT_PK_V -> WAIT_PK_V [resGetPKvPayloadKey = pkM] -> parseGetPKvPayload() HAVE_PK_V
        }"#;
        let unit = parse_source(src, 0).unwrap();
        let t = &unit.systems[0].transitions;
        assert_eq!(t.len(), 5);
        assert_eq!(t[0].src.name, "IDLE");
        assert_eq!(t[0].dst.name, "IDLE");
        assert_eq!(t[1].guard, Some(name("reqGetPKvPayload")));
        assert_eq!(t[1].action.as_ref().unwrap().name, "parseInterceptedGetPKvPayload");
        assert_eq!(t[1].dst.name, "HAVE_PK_H");
        assert_eq!(
            t[4].guard,
            Some(ExprAst::Binary(BinOp::Eq, Box::new(name("resGetPKvPayloadKey")), Box::new(name("pkM"))))
        );
    }

    #[test]
    fn control_system_listing_parses() {
        let src = r#"main control system Main() over Environment {
            init {
                reqGetPKvPayload : "NONE",
                resGetPKvPayloadKey : "NONE",
            }
            async Holder("PK_H", "VC_H", "VC_H_HASH") as h, Vendor("PK_V") as v
            ctl AF (h.isDone and v.isDone)
        }"#;
        let unit = parse_source(src, 0).unwrap();
        let c = &unit.controls[0];
        assert_eq!(c.init.len(), 2);
        assert_eq!(c.instances.len(), 2);
        assert_eq!(c.instances[0].alias.name, "h");
        assert_eq!(c.instances[0].args.len(), 3);
        assert_eq!(c.formulas.len(), 1);
        assert_eq!(
            c.formulas[0].formula,
            Formula::AF(Box::new(Formula::and(
                Formula::Atom(q("h", "isDone")),
                Formula::Atom(q("v", "isDone"))
            )))
        );
    }

    #[test]
    fn empty_file_is_an_empty_unit() {
        assert_eq!(parse_source("", 0).unwrap(), SourceUnit::default());
        assert_eq!(parse_source("// only a comment\n", 0).unwrap(), SourceUnit::default());
    }

    #[test]
    fn dangling_effect_ref_is_an_error() {
        let errs = parse_source("system S() { init A -> @", 0).unwrap_err();
        assert_eq!(errs[0].kind, DiagKind::Parse);
        assert!(errs[0].message.contains("expected identifier"), "{}", errs[0].message);
    }

    #[test]
    fn recovery_reports_one_error_per_bad_declaration() {
        let src = "varset A { x :: }\nvarset B { y :: bool }\nsystem S( { }\nvarset C { z :: string }";
        let errs = parse_source(src, 0).unwrap_err();
        assert_eq!(errs.len(), 2);
    }

    #[test]
    fn formula_examples() {
        let (l, f) = parse_formula("AF (h.isDone and v.isDone)", None, 0).unwrap();
        assert_eq!(l, Logic::Ctl);
        assert_eq!(
            f,
            Formula::AF(Box::new(Formula::and(
                Formula::Atom(q("h", "isDone")),
                Formula::Atom(q("v", "isDone"))
            )))
        );
        let (_, f) = parse_formula("!E F (m.vc = h.vcH)", None, 0).unwrap();
        let atom = ExprAst::Binary(BinOp::Eq, Box::new(q("m", "vc")), Box::new(q("h", "vcH")));
        assert_eq!(f, Formula::not(Formula::EF(Box::new(Formula::Atom(atom.clone())))));
        let (_, g) = parse_formula("∄◇(m.vc = h.vcH)", None, 0).unwrap();
        assert_eq!(f, g);
        let (_, f) = parse_formula("AG true", None, 0).unwrap();
        assert_eq!(f, Formula::AG(Box::new(Formula::True)));
    }

    #[test]
    fn until_forms() {
        let (_, f) = parse_formula("A[p.a U q.b]", None, 0).unwrap();
        assert!(matches!(f, Formula::AU(..)));
        let (_, f) = parse_formula("E [ p.a & p.c U q.b ]", None, 0).unwrap();
        assert!(matches!(f, Formula::EU(..)));
        let (l, f) = parse_formula("G (req.isReady -> F res.isOk)", None, 0).unwrap();
        assert_eq!(l, Logic::Ltl);
        assert!(matches!(f, Formula::G(_)));
        let (l, f) = parse_formula("p.a U q.b", None, 0).unwrap();
        assert_eq!(l, Logic::Ltl);
        assert!(matches!(f, Formula::U(..)));
    }

    #[test]
    fn mixed_logic_is_rejected() {
        let e = parse_formula("AG F p.x", None, 0).unwrap_err();
        assert_eq!(e.kind, DiagKind::MixedLogic);
        let e = parse_formula("G p.x", Some(Logic::Ctl), 0).unwrap_err();
        assert_eq!(e.kind, DiagKind::MixedLogic);
        let e = parse_formula("AG p.x", Some(Logic::Ltl), 0).unwrap_err();
        assert_eq!(e.kind, DiagKind::MixedLogic);
    }

    #[test]
    fn table_glyphs_parse() {
        let (_, f) = parse_formula("∀□ (h.attr ≻ v.vcH)", None, 0).unwrap();
        assert_eq!(
            f,
            Formula::AG(Box::new(Formula::Atom(ExprAst::Binary(
                BinOp::Conforms,
                Box::new(q("h", "attr")),
                Box::new(q("v", "vcH"))
            ))))
        );
        let (_, f) = parse_formula("AG (h.REQ_SENT -> AF h.vcH != ∅)", None, 0).unwrap();
        let Formula::AG(inner) = f else { panic!() };
        assert!(matches!(*inner, Formula::Implies(..)));
        let (_, f) = parse_formula("AG !(a1.sk in m.disclose)", None, 0).unwrap();
        assert!(matches!(f, Formula::AG(_)));
        let (_, f) = parse_formula("(x.n + 1) = 2", None, 0).unwrap();
        assert!(matches!(f, Formula::Atom(ExprAst::Binary(BinOp::Eq, ..))));
        let (_, f) = parse_formula("m.s = \"A\"", None, 0).unwrap();
        assert_eq!(
            f,
            Formula::Atom(ExprAst::Binary(BinOp::Eq, Box::new(q("m", "s")), Box::new(string("A"))))
        );
    }
}
