//! System graphs, their instantiation and asynchronous composition, and
//! concretization into a finite labeled transition system.

mod compose;
mod explore;
mod state;

pub use compose::{compose_async, ComposeError, Composition, Instance};
pub use explore::{concretize, render_words, ConcretizeError, Edge, ExploreOptions, Lts, Parent, DEFAULT_MAX_STATES};
pub use state::{fire, initial_states, Layout, StateView};

use crate::expr::{Expr, SemType, Value, VarId};
use crate::frontend::{CheckedSystem, VarDecl};

/// A named partial evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declarator {
    pub name: String,
    pub assigns: Vec<(VarId, Expr)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub src: u32,
    pub dst: u32,
    pub guard: Expr,
    /// Action name; `None` is an ε transition.
    pub action: Option<String>,
    /// Effect applied when the transition fires, evaluated in the source state.
    pub writes: Vec<(VarId, Expr)>,
}

impl Transition {
    pub fn is_epsilon(&self) -> bool {
        self.action.is_none()
    }
}

/// A system graph: declarators, guarded transitions, an initial declarator
/// with optional initial guard, and named clauses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemGraph {
    pub name: String,
    pub params: Vec<(String, SemType)>,
    /// Variable table indexed by the graph's [`VarId`]s.
    pub vars: Vec<VarDecl>,
    pub declarators: Vec<Declarator>,
    pub transitions: Vec<Transition>,
    pub init: u32,
    /// Constrains the locals left free by the initial declarator; `true` by default.
    pub init_guard: Expr,
    pub clauses: Vec<(String, Expr)>,
}

impl SystemGraph {
    pub fn declarator(&self, name: &str) -> Option<u32> {
        self.declarators.iter().position(|d| d.name == name).map(|i| i as u32)
    }

    pub fn clause(&self, name: &str) -> Option<&Expr> {
        self.clauses.iter().find(|c| c.0 == name).map(|c| &c.1)
    }
}

/// Builds the graph of a checked system declaration. Transitions carrying
/// an effect but no action name are labeled with the effect's name.
pub fn build_system_graph(sys: &CheckedSystem) -> SystemGraph {
    let transitions = sys
        .transitions
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let action = match (&t.action, &t.effect_name) {
                (Some(a), _) => Some(a.clone()),
                (None, Some(e)) => Some(e.clone()),
                (None, None) if !t.effect.is_empty() => Some(format!("effect{i}")),
                (None, None) => None,
            };
            Transition { src: t.src, dst: t.dst, guard: t.guard.clone(), action, writes: t.effect.clone() }
        })
        .collect();
    SystemGraph {
        name: sys.name.clone(),
        params: sys.params.clone(),
        vars: sys.vars.clone(),
        declarators: sys
            .declarators
            .iter()
            .map(|d| Declarator { name: d.name.clone(), assigns: d.assigns.clone() })
            .collect(),
        transitions,
        init: sys.init,
        init_guard: sys.init_guard.clone().unwrap_or(Expr::lit_bool(true)),
        clauses: sys.props.clone(),
    }
}

/// Relabels every transition whose action writes nothing as ε.
pub fn eliminate_actions(g: &SystemGraph) -> SystemGraph {
    let mut out = g.clone();
    for t in &mut out.transitions {
        if t.writes.is_empty() {
            t.action = None;
        }
    }
    out
}

/// Substitutes arguments and prefixes locals with `alias`.
pub fn instantiate(g: &SystemGraph, args: &[Value], alias: &str) -> SystemGraph {
    assert_eq!(g.params.len(), args.len(), "arity is checked by the front end");
    let bind = |e: &Expr| e.bind_params(args);
    let bind_all = |a: &[(VarId, Expr)]| a.iter().map(|(v, e)| (*v, bind(e))).collect::<Vec<_>>();
    SystemGraph {
        name: alias.to_string(),
        params: Vec::new(),
        vars: g
            .vars
            .iter()
            .map(|v| VarDecl {
                name: if v.env { v.name.clone() } else { format!("{alias}.{}", v.name) },
                ty: v.ty,
                env: v.env,
            })
            .collect(),
        declarators: g
            .declarators
            .iter()
            .map(|d| Declarator { name: d.name.clone(), assigns: bind_all(&d.assigns) })
            .collect(),
        transitions: g
            .transitions
            .iter()
            .map(|t| Transition {
                src: t.src,
                dst: t.dst,
                guard: bind(&t.guard),
                action: t.action.clone(),
                writes: bind_all(&t.writes),
            })
            .collect(),
        init: g.init,
        init_guard: bind(&g.init_guard),
        clauses: g.clauses.iter().map(|(n, c)| (format!("{alias}.{n}"), bind(c))).collect(),
    }
}

/// Rewrites a graph's variable ids through `map` and installs `vars` as its table.
pub(crate) fn remap(g: &SystemGraph, map: &[VarId], vars: Vec<VarDecl>) -> SystemGraph {
    let r = |e: &Expr| e.remap_vars(map);
    let ra = |a: &[(VarId, Expr)]| {
        let mut v: Vec<(VarId, Expr)> = a.iter().map(|(x, e)| (map[x.0 as usize], r(e))).collect();
        v.sort_by_key(|p| p.0);
        v
    };
    SystemGraph {
        name: g.name.clone(),
        params: g.params.clone(),
        vars,
        declarators: g
            .declarators
            .iter()
            .map(|d| Declarator { name: d.name.clone(), assigns: ra(&d.assigns) })
            .collect(),
        transitions: g
            .transitions
            .iter()
            .map(|t| Transition {
                src: t.src,
                dst: t.dst,
                guard: r(&t.guard),
                action: t.action.clone(),
                writes: ra(&t.writes),
            })
            .collect(),
        init: g.init,
        init_guard: r(&g.init_guard),
        clauses: g.clauses.iter().map(|(n, c)| (n.clone(), r(c))).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::compile_str;

    const HOLDER: &str = r#"
varset Environment { req :: string, res :: string }
varset HolderVars { pkV :: string, state :: string }
system Holder(pkH :: string, vcH :: string, vcHash :: string) over HolderVars with Environment {
    init IDLE -> REQ_PK_V -> @sendReq sendReq() WAIT_PK_V [res] -> HAVE_PK_V -> noop() HAVE_VC_CONF -> DONE -> DONE
    @sendReq = { req: pkH }
    HAVE_PK_V = { state: "HAVE_PK_V", pkV: res }
    DONE = { state: "DONE" }
    prop receivedConf { res = vcHash }
    prop isDone { state = "DONE" }
}
system Loop() { init S -> S }
"#;

    #[test]
    fn holder_graph_shape() {
        let p = compile_str(&[HOLDER]).unwrap();
        let g = build_system_graph(p.system("Holder").unwrap());
        let names: Vec<&str> = g.declarators.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["IDLE", "REQ_PK_V", "WAIT_PK_V", "HAVE_PK_V", "HAVE_VC_CONF", "DONE"]);
        let clauses: Vec<&str> = g.clauses.iter().map(|c| c.0.as_str()).collect();
        assert_eq!(clauses, ["receivedConf", "isDone"]);
        assert!(g.init_guard.is_true());
        // pkV bound to the environment variable's value at entry
        let have = &g.declarators[3];
        assert_eq!(have.assigns[0], (VarId(0), Expr::Var(VarId(3))));
    }

    #[test]
    fn single_declarator_self_loop() {
        let p = compile_str(&[HOLDER]).unwrap();
        let g = build_system_graph(p.system("Loop").unwrap());
        assert_eq!(g.declarators.len(), 1);
        assert_eq!(g.transitions.len(), 1);
        assert_eq!((g.transitions[0].src, g.transitions[0].dst), (0, 0));
    }

    #[test]
    fn elimination_relabels_only_effect_free_actions() {
        let p = compile_str(&[HOLDER]).unwrap();
        let g = build_system_graph(p.system("Holder").unwrap());
        let e = eliminate_actions(&g);
        let noop = g.transitions.iter().position(|t| t.action.as_deref() == Some("noop")).unwrap();
        let send = g.transitions.iter().position(|t| t.action.as_deref() == Some("sendReq")).unwrap();
        assert!(e.transitions[noop].is_epsilon());
        assert_eq!(e.transitions[send], g.transitions[send]);
        assert_eq!(e.declarators, g.declarators);
        assert_eq!(eliminate_actions(&e), e);
    }

    #[test]
    fn instantiation_binds_arguments() {
        let p = compile_str(&[HOLDER]).unwrap();
        let g = build_system_graph(p.system("Holder").unwrap());
        let u = &p.universe;
        let args: Vec<Value> = ["PK_H", "VC_H", "VC_H_HASH"]
            .iter()
            .map(|s| Value::Str(u.sym(s).unwrap_or(0)))
            .collect();
        let h = instantiate(&g, &args, "h");
        assert_eq!(h.vars[0].name, "h.pkV");
        assert_eq!(h.vars[2].name, "req");
        assert!(h.clause("h.isDone").is_some());
        let send = h.transitions.iter().find(|t| t.action.as_deref() == Some("sendReq")).unwrap();
        assert_eq!(send.writes[0].1, Expr::Lit(args[0].clone()));
        let mut params = 0;
        for t in &h.transitions {
            t.guard.visit(&mut |e| params += matches!(e, Expr::Param(_)) as usize);
        }
        assert_eq!(params, 0);
    }
}
