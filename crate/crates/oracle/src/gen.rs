//! Random inputs for the property tests.

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::Rng;

use ssiv_core::graph::Lts;
use ssiv_core::logic::Formula;

use crate::ctl::Kripke;

/// A random total transition system: every state has 1 to `max_out`
/// successors and each of the `atoms` atoms holds with probability 1/2.
/// State 0 is initial.
pub fn random_lts<R: Rng>(rng: &mut R, n: usize, max_out: usize, atoms: usize) -> (Lts, Vec<FixedBitSet>, Kripke) {
    let mut succ = vec![Vec::new(); n];
    let mut edges = Vec::new();
    for (s, out) in succ.iter_mut().enumerate() {
        let k = rng.gen_range(1..=max_out);
        for _ in 0..k {
            let t = if rng.gen_bool(0.7) {
                // mostly local edges so that long paths and cycles both occur
                let lo = s.saturating_sub(3);
                let hi = (s + 4).min(n);
                rng.gen_range(lo..hi) as u32
            } else {
                rng.gen_range(0..n) as u32
            };
            if !out.contains(&t) {
                out.push(t);
                edges.push((s as u32, t));
            }
        }
    }
    let mut labels = Vec::new();
    let mut bools = Vec::new();
    for _ in 0..atoms {
        let row: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let mut set = FixedBitSet::with_capacity(n);
        row.iter().enumerate().filter(|(_, b)| **b).for_each(|(i, _)| set.insert(i));
        labels.push(set);
        bools.push(row);
    }
    // `from_parts` stores edges grouped by source in input order
    let kripke = Kripke { succ, labels: bools };
    (Lts::from_parts(n, &edges, vec![0], labels.clone()), labels, kripke)
}

/// A random CTL formula of depth at most `depth` over atoms `0..atoms`.
pub fn random_formula<R: Rng>(rng: &mut R, depth: usize, atoms: usize) -> Formula<usize> {
    let b = Box::new;
    if depth == 0 || rng.gen_bool(0.15) {
        return match rng.gen_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::Atom(rng.gen_range(0..atoms)),
        };
    }
    let d = depth - 1;
    let op = rng.gen_range(0..16);
    let mut sub = || b(random_formula(rng, d, atoms));
    match op {
        0 => Formula::Not(sub()),
        1 => Formula::And(sub(), sub()),
        2 => Formula::Or(sub(), sub()),
        3 => Formula::Implies(sub(), sub()),
        4 => Formula::Iff(sub(), sub()),
        5 => Formula::EX(sub()),
        6 => Formula::AX(sub()),
        7 => Formula::EF(sub()),
        8 => Formula::AF(sub()),
        9 => Formula::EG(sub()),
        10 => Formula::AG(sub()),
        11 | 12 => Formula::EU(sub(), sub()),
        _ => Formula::AU(sub(), sub()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Bool,
    Int,
    Str,
    Set,
}

impl Ty {
    fn decl(self) -> &'static str {
        match self {
            Ty::Bool => "bool",
            Ty::Int => "int[0..2]",
            Ty::Str => "string",
            Ty::Set => "set<string>",
        }
    }
}

const STRS: [&str; 3] = ["A", "B", "NONE"];

struct Scope {
    vars: Vec<(String, Ty)>,
}

impl Scope {
    fn of<R: Rng>(&self, rng: &mut R, ty: Ty) -> Option<&str> {
        let c: Vec<&(String, Ty)> = self.vars.iter().filter(|v| v.1 == ty).collect();
        c.choose(rng).map(|v| v.0.as_str())
    }
}

fn lit<R: Rng>(rng: &mut R, ty: Ty) -> String {
    match ty {
        Ty::Bool => if rng.gen() { "true" } else { "false" }.into(),
        Ty::Int => rng.gen_range(0..=2).to_string(),
        Ty::Str => format!("\"{}\"", STRS.choose(rng).unwrap()),
        Ty::Set => match rng.gen_range(0..3) {
            0 => "{}".into(),
            1 => "{\"A\"}".into(),
            _ => "{\"A\", \"B\"}".into(),
        },
    }
}

/// A value of `ty`: a literal, a same-typed variable, or a set update.
fn value<R: Rng>(rng: &mut R, s: &Scope, ty: Ty) -> String {
    if rng.gen_bool(0.5) {
        if let Some(v) = s.of(rng, ty) {
            if ty == Ty::Set && rng.gen_bool(0.5) {
                let op = if rng.gen() { "+" } else { "-" };
                return format!("{v} {op} \"{}\"", ["A", "B"].choose(rng).unwrap());
            }
            return v.to_string();
        }
    }
    lit(rng, ty)
}

fn guard<R: Rng>(rng: &mut R, s: &Scope, depth: usize) -> String {
    if depth > 0 && rng.gen_bool(0.3) {
        return match rng.gen_range(0..3) {
            0 => format!("!({})", guard(rng, s, depth - 1)),
            1 => format!("({} & {})", guard(rng, s, depth - 1), guard(rng, s, depth - 1)),
            _ => format!("({} | {})", guard(rng, s, depth - 1), guard(rng, s, depth - 1)),
        };
    }
    let (name, ty) = s.vars.choose(rng).unwrap().clone();
    match (ty, rng.gen_range(0..3)) {
        (Ty::Bool, 0) => name,
        (Ty::Int, 0) => format!("{name} + 1 = {}", rng.gen_range(1..=3)),
        (Ty::Int, 1) => format!("{name} < {}", rng.gen_range(0..=2)),
        (Ty::Str, 0) => name,
        (Ty::Str, 1) => format!("conforms({name}, {})", value(rng, s, Ty::Set)),
        (Ty::Set, 0) => format!("\"{}\" in {name}", ["A", "B"].choose(rng).unwrap()),
        (Ty::Set, 1) => format!("{name} = {{}}"),
        _ => {
            let op = if rng.gen() { "=" } else { "!=" };
            format!("{name} {op} {}", value(rng, s, ty))
        }
    }
}

fn any_ty<R: Rng>(rng: &mut R) -> Ty {
    *[Ty::Bool, Ty::Int, Ty::Str, Ty::Str, Ty::Set].choose(rng).unwrap()
}

fn assigns<R: Rng>(rng: &mut R, s: &Scope, targets: &[(String, Ty)], literal_only: bool) -> String {
    let mut chosen: Vec<&(String, Ty)> = targets.iter().filter(|_| rng.gen_bool(0.5)).collect();
    if chosen.is_empty() {
        chosen.push(targets.choose(rng).unwrap());
    }
    let parts: Vec<String> = chosen
        .iter()
        .map(|(n, t)| {
            let v = if literal_only { lit(rng, *t) } else { value(rng, s, *t) };
            format!("{n}: {v}")
        })
        .collect();
    format!("{{ {} }}", parts.join(", "))
}

/// A random `.sz` model with one to three instances. Initial declarators
/// assign literals only, and writes never leave an integer domain, so the
/// only runtime failure a model can have is a deadlock. The result may
/// still be rejected by the front end (for instance by the uniqueness rule).
pub fn random_model<R: Rng>(rng: &mut R) -> String {
    let env: Vec<(String, Ty)> = (0..rng.gen_range(1..=2)).map(|i| (format!("e{i}"), any_ty(rng))).collect();
    let mut out = String::new();
    let fields = |vs: &[(String, Ty)]| vs.iter().map(|(n, t)| format!("{n} :: {}", t.decl())).collect::<Vec<_>>().join(", ");
    out.push_str(&format!("varset Env {{ {} }}\n", fields(&env)));

    let n_systems = rng.gen_range(1..=2);
    let mut has_free_init = Vec::new();
    for si in 0..n_systems {
        let locals: Vec<(String, Ty)> = (0..rng.gen_range(0..=2)).map(|i| (format!("x{i}"), any_ty(rng))).collect();
        if !locals.is_empty() {
            out.push_str(&format!("varset L{si} {{ {} }}\n", fields(&locals)));
        }
        let scope = Scope { vars: env.iter().chain(&locals).cloned().collect() };
        let n_decl = rng.gen_range(1..=4);
        let over = if locals.is_empty() { String::new() } else { format!(" over L{si}") };
        out.push_str(&format!("system S{si}(){over} with Env {{\n"));
        let n_tr = rng.gen_range(1..=5);
        for t in 0..n_tr {
            let src = if t == 0 { 0 } else { rng.gen_range(0..n_decl) };
            let dst = rng.gen_range(0..n_decl);
            let init = if t == 0 { "init " } else { "" };
            let g = if rng.gen_bool(0.6) { format!(" [{}]", guard(rng, &scope, 2)) } else { String::new() };
            let eff = if rng.gen_bool(0.5) {
                format!("@{} ", assigns(rng, &scope, &scope.vars, false))
            } else {
                String::new()
            };
            let act = if rng.gen_bool(0.5) { format!("act{t}() ") } else { String::new() };
            out.push_str(&format!("    {init}D{src}{g} -> {eff}{act}D{dst}\n"));
        }
        // a terminal self-loop keeps most, but not all, models deadlock free
        if rng.gen_bool(0.6) {
            let d = rng.gen_range(0..n_decl);
            out.push_str(&format!("    D{d} -> D{d}\n"));
        }
        if !locals.is_empty() {
            for d in 0..n_decl {
                if rng.gen_bool(0.5) {
                    let block = assigns(rng, &scope, &locals, d == 0);
                    out.push_str(&format!("    D{d} = {block}\n"));
                }
            }
        }
        // an initial guard over the locals leaves some of them free
        let free = !locals.is_empty() && rng.gen_bool(0.3);
        if free {
            let s = Scope { vars: locals.clone() };
            out.push_str(&format!("    init where {}\n", guard(rng, &s, 1)));
        }
        has_free_init.push(free);
        out.push_str(&format!("    prop p {{ {} }}\n", guard(rng, &scope, 1)));
        out.push_str("}\n");
    }

    let inits: Vec<String> = env.iter().map(|(n, t)| format!("{n}: {}", lit(rng, *t))).collect();
    out.push_str(&format!("main control system M() over Env {{\n    init {{ {} }}\n", inits.join(", ")));
    let n_inst = rng.gen_range(1..=3);
    let insts: Vec<String> = (0..n_inst).map(|k| format!("S{}() as i{k}", rng.gen_range(0..n_systems))).collect();
    out.push_str(&format!("    async {}\n", insts.join(", ")));
    out.push_str("    ctl AG (i0.p | i0.D0)\n}\n");
    out
}
