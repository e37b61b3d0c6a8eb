//! Lexing, parsing, resolution and type checking of `.sz` sources.

pub mod ast;
pub mod diag;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod resolve;

use crate::logic::Logic;

pub use diag::{CompileError, DiagKind, Diagnostic, SourceFile, Span};
pub use parser::{parse_formula, parse_source};
pub use resolve::{
    CheckedControl, CheckedDeclarator, CheckedFormula, CheckedInstance, CheckedSystem,
    CheckedTransition, Program, VarDecl,
};

/// Result of compiling a set of files: the checked program plus the source
/// table used to render diagnostics.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub program: Program,
    pub files: Vec<SourceFile>,
}

/// Compiles files as one flat unit. `extra` formulas (e.g. given on the
/// command line) are checked against the control system and appended after
/// its own formulas; `None` infers the logic.
pub fn compile(
    files: &[SourceFile],
    extra: &[(Option<Logic>, String)],
) -> Result<Compiled, (CompileError, Vec<SourceFile>)> {
    let mut table = files.to_vec();
    let mut diags = Vec::new();
    let mut units = Vec::new();
    for (i, f) in files.iter().enumerate() {
        match parse_source(&f.text, i as u32) {
            Ok(u) => units.push(u),
            Err(mut d) => diags.append(&mut d),
        }
    }
    let mut formulas = Vec::new();
    for (j, (logic, text)) in extra.iter().enumerate() {
        let id = (files.len() + j) as u32;
        table.push(SourceFile::new(format!("<formula {}>", j + 1), text.clone()));
        match parse_formula(text, *logic, id) {
            Ok((l, f)) => formulas.push((l, f, Span::new(id, 0, text.len()))),
            Err(d) => diags.push(d),
        }
    }
    if !diags.is_empty() {
        return Err((CompileError { diagnostics: diags }, table));
    }
    let unit = ast::SourceUnit::merge(units);
    match resolve::resolve(&unit, &formulas) {
        Ok(program) => Ok(Compiled { program, files: table }),
        Err(d) => Err((CompileError { diagnostics: d }, table)),
    }
}

/// Compiles in-memory sources named `<input N>`; convenient in tests.
pub fn compile_str(sources: &[&str]) -> Result<Program, CompileError> {
    let files: Vec<SourceFile> = sources
        .iter()
        .enumerate()
        .map(|(i, s)| SourceFile::new(format!("<input {i}>"), *s))
        .collect();
    compile(&files, &[]).map(|c| c.program).map_err(|(e, _)| e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Expr, SemType, Value, VarId};
    use crate::logic::Formula;

    const EX1: &str = r#"
varset Environment { req :: string, res :: string }
varset HVars { state :: string, pkV :: string }
system Holder(pkH :: string, vcH :: string) over HVars with Environment {
    init IDLE -> @{ req: pkH } SENT [res] -> HAVE -> DONE -> DONE
    HAVE = { state: "HAVE", pkV: res }
    DONE = { state: "DONE" }
    prop isDone { state = "DONE" }
}
main control system Main() over Environment {
    init { req: "NONE", res: "NONE" }
    async Holder("PK_H", "VC_H") as h
    ctl AF h.isDone
    ctl !EF (h.pkV = h.vcH) & AG (h.DONE -> h.isDone)
}
"#;

    #[test]
    fn compiles_and_lowers_formulas() {
        let p = compile_str(&[EX1]).unwrap();
        let c = p.control.as_ref().unwrap();
        assert_eq!(c.env_vars.len(), 2);
        assert_eq!(c.instances[0].args, vec![Value::Str(p.universe.sym("PK_H").unwrap()), Value::Str(p.universe.sym("VC_H").unwrap())]);
        let globals = p.global_vars();
        let names: Vec<&str> = globals.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["req", "res", "h.state", "h.pkV"]);
        assert_eq!(c.formulas.len(), 2);
        // h.isDone lowers to the clause over the global copy of h.state
        let Formula::AF(inner) = &c.formulas[0].formula else { panic!() };
        let Formula::Atom(Expr::Cmp(_, lhs, _)) = &**inner else { panic!("{inner:?}") };
        assert_eq!(**lhs, Expr::Var(VarId(2)));
        assert_eq!(c.formulas[1].text, "!EF (h.pkV = h.vcH) & AG (h.DONE -> h.isDone)");
    }

    #[test]
    fn bare_string_guard_desugars_to_not_none() {
        let p = compile_str(&[EX1]).unwrap();
        let h = p.system("Holder").unwrap();
        let t = h.transitions.iter().find(|t| h.declarators[t.src as usize].name == "SENT").unwrap();
        assert_eq!(t.guard.render(&|v| h.vars[v.0 as usize].name.clone(), &p.universe), "res != \"NONE\"");
        assert_eq!(h.vars[0].ty, SemType::Str);
    }

    #[test]
    fn declarator_order_follows_first_appearance() {
        let p = compile_str(&[EX1]).unwrap();
        let h = p.system("Holder").unwrap();
        let names: Vec<&str> = h.declarators.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["IDLE", "SENT", "HAVE", "DONE"]);
        assert_eq!(h.init, 0);
    }

    #[test]
    fn uniqueness_violation() {
        let src = "varset V { x :: string }\nsystem S() over V { init A -> B -> A\n A = { x: \"1\" }\n B = { x: \"1\" } }";
        let e = compile_str(&[src]).unwrap_err();
        assert!(e.has(DiagKind::Uniqueness), "{e:?}");
    }

    #[test]
    fn listing_two_arity_ok_and_mismatch() {
        let bad = EX1.replace("Holder(\"PK_H\", \"VC_H\")", "Holder(\"PK_H\")");
        assert!(compile_str(&[&bad]).unwrap_err().has(DiagKind::Arity));
    }

    #[test]
    fn unknown_prop_in_formula() {
        let bad = EX1.replace("ctl AF h.isDone", "ctl AF h.noSuchProp");
        let e = compile_str(&[&bad]).unwrap_err();
        assert!(e.has(DiagKind::Name));
        assert!(e.diagnostics[0].message.contains("noSuchProp"));
    }

    #[test]
    fn missing_env_init() {
        let bad = EX1.replace("res: \"NONE\" ", "");
        let e = compile_str(&[&bad]).unwrap_err();
        assert!(e.has(DiagKind::Init), "{e:?}");
    }

    #[test]
    fn prop_declarator_clash() {
        let bad = EX1.replace("prop isDone", "prop DONE");
        assert!(compile_str(&[&bad]).unwrap_err().has(DiagKind::PropClash));
    }

    #[test]
    fn duplicate_alias() {
        let bad = EX1.replace("as h", "as h, Holder(\"A\", \"B\") as h");
        assert!(compile_str(&[&bad]).unwrap_err().has(DiagKind::Alias));
    }

    #[test]
    fn type_errors() {
        let bad = EX1.replace("[res]", "[res < 2]");
        assert!(compile_str(&[&bad]).unwrap_err().has(DiagKind::Type));
        let src = "varset V { n :: int[0..2] }\nsystem S() over V { init A -> A\n A = { n: 5 } }";
        assert!(compile_str(&[src]).unwrap_err().has(DiagKind::Domain));
    }

    #[test]
    fn env_mismatch() {
        let src = format!("{EX1}\nvarset Other {{ q :: string }}");
        let src = src.replace("with Environment", "with Environment, Other");
        assert!(compile_str(&[&src]).unwrap_err().has(DiagKind::EnvMismatch));
    }

    #[test]
    fn two_controls_rejected() {
        let src = format!("{EX1}\nmain control system M2() {{ }}");
        assert!(compile_str(&[&src]).unwrap_err().has(DiagKind::Control));
    }

    #[test]
    fn extra_formula_literals_join_the_universe() {
        let files = [SourceFile::new("a.sz", EX1)];
        let c = compile(&files, &[(None, "AG (h.pkV != \"ZZZ\")".into())]).map_err(|e| e.0).unwrap();
        assert!(c.program.universe.sym("ZZZ").is_some());
        assert_eq!(c.program.control.unwrap().formulas.len(), 3);
        let err = compile(&files, &[(Some(Logic::Ltl), "AG h.isDone".into())]).unwrap_err();
        assert!(err.0.has(DiagKind::MixedLogic));
    }

    #[test]
    fn diagnostics_render_with_position() {
        let files = [SourceFile::new("m.sz", "varset V { x :: string }\nsystem S() over V {\n  init A -> B [y] -> A\n}")];
        let (e, table) = compile(&files, &[]).unwrap_err();
        assert_eq!(e.render(&table), "m.sz:3:16: error: unbound name `y` in system `S`");
    }
}
