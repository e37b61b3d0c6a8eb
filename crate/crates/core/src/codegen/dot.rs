use std::fmt::Write;

use crate::graph::Composition;

/// Graphviz DOT text with one cluster per instance, one node per declarator
/// (the initial one drawn with a double border) and one edge per transition.
pub fn emit_dot(c: &Composition) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(&c.name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  node [shape=box, style=rounded];").unwrap();
    for inst in &c.instances {
        let g = &inst.graph;
        writeln!(out, "  subgraph {} {{", quote(&format!("cluster_{}", inst.alias))).unwrap();
        writeln!(out, "    label={};", quote(&format!("{} : {}", inst.alias, inst.system))).unwrap();
        for (i, d) in g.declarators.iter().enumerate() {
            let id = quote(&format!("{}.{}", inst.alias, d.name));
            let extra = if i as u32 == g.init { ", peripheries=2" } else { "" };
            writeln!(out, "    {id} [label={}{extra}];", quote(&d.name)).unwrap();
        }
        for t in &g.transitions {
            let src = quote(&format!("{}.{}", inst.alias, g.declarators[t.src as usize].name));
            let dst = quote(&format!("{}.{}", inst.alias, g.declarators[t.dst as usize].name));
            let mut label = Vec::new();
            if !t.guard.is_true() {
                label.push(format!("[{}]", c.render_expr(&t.guard)));
            }
            if let Some(a) = &t.action {
                label.push(format!("/ {a}"));
            }
            writeln!(out, "    {src} -> {dst} [label={}];", quote(&label.join(" "))).unwrap();
        }
        writeln!(out, "  }}").unwrap();
    }
    writeln!(out, "}}").unwrap();
    out
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}
