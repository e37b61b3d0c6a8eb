//! NuSMV and Graphviz back ends.

mod dot;
mod nusmv;

use thiserror::Error;

pub use dot::emit_dot;
pub use nusmv::{emit_nusmv, parse_nusmv_output, run_nusmv, NusmvProgram, NusmvRunError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("cannot emit {0}")]
    Unsupported(String),
    #[error("cannot compute initial states: {0}")]
    Init(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::compile_str;
    use crate::graph::{compose_async, Composition};

    fn compose(src: &str) -> Composition {
        compose_async(&compile_str(&[src]).unwrap()).unwrap()
    }

    const BAG: &str = r#"
varset Env { seen :: set<string>, last :: string }
system Add() with Env {
    init IDLE -> @{ seen: seen + "A", last: "A" } DONE -> DONE
}
system Drop() with Env {
    init WAIT ["A" in seen] -> @{ seen: seen - "A", last: "B" } DONE -> DONE
}
main control system Main() over Env {
    init { seen: {}, last: "NONE" }
    async Add() as a, Drop() as d
    ctl AG (last = "B" -> !("A" in seen))
    ltl G F (last = "B")
}
"#;

    #[test]
    fn nusmv_output_is_deterministic() {
        let c = compose(BAG);
        let one = emit_nusmv(&c, &c.formulas).unwrap();
        let two = emit_nusmv(&compose(BAG), &c.formulas).unwrap();
        assert_eq!(one, two);
        assert_eq!(one.text.matches("CTLSPEC").count(), 1);
        assert_eq!(one.text.matches("LTLSPEC").count(), 1);
    }

    #[test]
    fn no_specs_without_formulas() {
        let c = compose(BAG);
        let p = emit_nusmv(&c, &[]).unwrap();
        assert!(!p.text.contains("CTLSPEC"));
        assert!(!p.text.contains("LTLSPEC"));
        assert!(p.text.starts_with("-- Main"));
    }

    #[test]
    fn sets_become_one_boolean_per_symbol() {
        let c = compose(BAG);
        let text = emit_nusmv(&c, &[]).unwrap().text;
        assert!(text.contains("  seen__A : boolean;"), "{text}");
        assert!(text.contains("  seen__B : boolean;"), "{text}");
        assert!(!text.contains("seen__NONE"), "{text}");
        assert!(!text.contains("  seen :"), "{text}");
        assert!(text.contains("  init(seen__A) := FALSE;"), "{text}");
    }

    #[test]
    fn dot_has_a_cluster_per_instance_and_an_edge_per_transition() {
        let c = compose(BAG);
        let dot = emit_dot(&c);
        assert_eq!(dot, emit_dot(&compose(BAG)));
        assert_eq!(dot.matches("subgraph").count(), 2);
        let edges: usize = c.instances.iter().map(|i| i.graph.transitions.len()).sum();
        assert_eq!(dot.matches(" -> ").count(), edges);
        assert_eq!(dot.matches("peripheries=2").count(), 2);
        assert!(dot.contains(r#""a.IDLE" -> "a.DONE""#), "{dot}");
    }
}
