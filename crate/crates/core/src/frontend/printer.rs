//! Canonical pretty printer. Its output reparses to an equal AST.

use std::fmt::Write;

use super::ast::*;

pub fn print_unit(unit: &SourceUnit) -> String {
    let mut out = String::new();
    for v in &unit.varsets {
        print_varset(&mut out, v);
        out.push('\n');
    }
    for s in &unit.systems {
        print_system(&mut out, s);
        out.push('\n');
    }
    for c in &unit.controls {
        print_control(&mut out, c);
        out.push('\n');
    }
    out
}

fn print_type(t: &TypeAst) -> String {
    match t {
        TypeAst::Bool => "bool".into(),
        TypeAst::Int { lo, hi } => format!("int[{lo}..{hi}]"),
        TypeAst::Str => "string".into(),
        TypeAst::Set => "set<string>".into(),
    }
}

fn var_list(vars: &[VarDeclAst]) -> String {
    vars.iter()
        .map(|v| format!("{} :: {}", v.name.name, print_type(&v.ty)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn print_varset(out: &mut String, v: &VarsetDecl) {
    writeln!(out, "varset {} {{", v.name.name).unwrap();
    for (i, d) in v.vars.iter().enumerate() {
        let sep = if i + 1 < v.vars.len() { "," } else { "" };
        writeln!(out, "    {} :: {}{sep}", d.name.name, print_type(&d.ty)).unwrap();
    }
    out.push_str("}\n");
}

fn assign_block(assigns: &[Assign]) -> String {
    if assigns.is_empty() {
        return "{ }".into();
    }
    let parts: Vec<String> =
        assigns.iter().map(|a| format!("{}: {}", a.var.name, print_expr(&a.value))).collect();
    format!("{{ {} }}", parts.join(", "))
}

fn print_system(out: &mut String, s: &SystemDecl) {
    write!(out, "system {}({})", s.name.name, var_list(&s.params)).unwrap();
    if let Some(l) = &s.local {
        write!(out, " over {}", l.name).unwrap();
    }
    if !s.envs.is_empty() {
        let envs: Vec<&str> = s.envs.iter().map(|e| e.name.as_str()).collect();
        write!(out, " with {}", envs.join(", ")).unwrap();
    }
    out.push_str(" {\n");
    if let Some(i) = &s.init {
        writeln!(out, "    init {}", i.name).unwrap();
    }
    if let Some(g) = &s.init_guard {
        writeln!(out, "    init where {}", print_expr(g)).unwrap();
    }
    for t in &s.transitions {
        let mut line = format!("    {}", t.src.name);
        if let Some(g) = &t.guard {
            write!(line, " [{}]", print_expr(g)).unwrap();
        }
        line.push_str(" ->");
        match &t.effect {
            Some(EffectRef::Named(n)) => write!(line, " @{}", n.name).unwrap(),
            Some(EffectRef::Inline(a)) => write!(line, " @{}", assign_block(a)).unwrap(),
            None => {}
        }
        if let Some(a) = &t.action {
            write!(line, " {}()", a.name).unwrap();
        }
        writeln!(out, "{line} {}", t.dst.name).unwrap();
    }
    for d in &s.declarators {
        writeln!(out, "    {} = {}", d.name.name, assign_block(&d.assigns)).unwrap();
    }
    for e in &s.effects {
        writeln!(out, "    @{} = {}", e.name.name, assign_block(&e.assigns)).unwrap();
    }
    for p in &s.props {
        writeln!(out, "    prop {} {{ {} }}", p.name.name, print_expr(&p.clause)).unwrap();
    }
    out.push_str("}\n");
}

fn print_control(out: &mut String, c: &ControlSystemDecl) {
    write!(out, "main control system {}()", c.name.name).unwrap();
    if !c.envs.is_empty() {
        let envs: Vec<&str> = c.envs.iter().map(|e| e.name.as_str()).collect();
        write!(out, " over {}", envs.join(", ")).unwrap();
    }
    out.push_str(" {\n");
    if !c.init.is_empty() {
        out.push_str("    init {\n");
        for a in &c.init {
            writeln!(out, "        {}: {},", a.var.name, print_expr(&a.value)).unwrap();
        }
        out.push_str("    }\n");
    }
    if !c.instances.is_empty() {
        let parts: Vec<String> = c
            .instances
            .iter()
            .map(|i| {
                let args: Vec<String> = i.args.iter().map(print_expr).collect();
                format!("{}({}) as {}", i.system.name, args.join(", "), i.alias.name)
            })
            .collect();
        writeln!(out, "    async {}", parts.join(", ")).unwrap();
    }
    for f in &c.formulas {
        writeln!(out, "    {} {}", f.logic, print_formula(&f.formula)).unwrap();
    }
    out.push_str("}\n");
}

pub fn print_formula(f: &crate::logic::Formula<ExprAst>) -> String {
    f.render(&|e| print_expr(e))
}

pub fn print_expr(e: &ExprAst) -> String {
    expr_prec(e, 0)
}

fn expr_prec(e: &ExprAst, prec: u8) -> String {
    let (s, p) = match e {
        ExprAst::Str(s, _) => (format!("\"{s}\""), 9),
        ExprAst::Int(i, _) => (i.to_string(), 9),
        ExprAst::Bool(b, _) => (b.to_string(), 9),
        ExprAst::Empty(_) => ("{}".to_string(), 9),
        ExprAst::Name(i) => (i.name.clone(), 9),
        ExprAst::Qualified(a, b) => (format!("{}.{}", a.name, b.name), 9),
        ExprAst::SetLit(items, _) => {
            let parts: Vec<String> = items.iter().map(|i| expr_prec(i, 0)).collect();
            (format!("{{{}}}", parts.join(", ")), 9)
        }
        ExprAst::Not(a, _) => (format!("!{}", expr_prec(a, 3)), 3),
        ExprAst::Binary(BinOp::Conforms, a, b) => {
            (format!("conforms({}, {})", expr_prec(a, 0), expr_prec(b, 0)), 9)
        }
        ExprAst::Binary(op, a, b) => match op {
            BinOp::Or => (format!("{} | {}", expr_prec(a, 1), expr_prec(b, 2)), 1),
            BinOp::And => (format!("{} & {}", expr_prec(a, 2), expr_prec(b, 3)), 2),
            BinOp::Add | BinOp::Sub => {
                (format!("{} {} {}", expr_prec(a, 5), op.symbol(), expr_prec(b, 6)), 5)
            }
            _ => (format!("{} {} {}", expr_prec(a, 5), op.symbol(), expr_prec(b, 5)), 4),
        },
    };
    if p < prec {
        format!("({s})")
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::{parse_formula, parse_source};
    use super::*;

    #[test]
    fn listing_round_trip() {
        let src = r#"
varset HolderVars { pkV :: string, state :: string, n :: int[-1..3], s :: set<string> }
system Holder(pkH :: string) over HolderVars with Environment, Other {
    init IDLE -> REQ [!(n + 1 = 2) & "A" in s] -> @snd snd() WAIT -> @{ s: s + "B", n: n - -1 } DONE -> DONE
    init where n > 0 | pkV = {}
    DONE = { state: "DONE" }
    @snd = { req: pkH }
    prop isDone { state = "DONE" }
}
main control system Main() over Environment {
    init { req: "NONE" }
    async Holder("PK_H") as h
    ctl AF (h.isDone and h.DONE) & E[h.IDLE | h.REQ U h.pkV = "X"]
    ltl G (h.isDone -> F h.DONE)
}
"#;
        let a = parse_source(src, 0).unwrap();
        let printed = print_unit(&a);
        let b = parse_source(&printed, 0).unwrap();
        assert_eq!(a, b, "{printed}");
        assert_eq!(print_unit(&b), printed);
    }

    #[test]
    fn formula_round_trip_keeps_structure() {
        for text in [
            "a.x & (b.y & c.z)",
            "(a.x | b.y) & c.z",
            "!EF (m.vc = h.vcH)",
            "AG (h.p -> AF v.q) -> EX true",
            "A[(a.x & b.y) U c.z]",
            "((a.x & b.y) = c.z)",
            "p.a U (q.b U r.c)",
        ] {
            let (_, f) = parse_formula(text, None, 0).unwrap();
            let printed = print_formula(&f);
            let (_, g) = parse_formula(&printed, None, 0).unwrap();
            assert_eq!(f, g, "{text} -> {printed}");
        }
    }
}
