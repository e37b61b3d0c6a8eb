use thiserror::Error;

use crate::expr::{Universe, Value};
use crate::frontend::{CheckedFormula, Program, VarDecl};

use super::{build_system_graph, eliminate_actions, instantiate, remap, SystemGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("no main control system")]
    NoControl,
    #[error("alias `{0}` is used by more than one instance")]
    AliasClash(String),
    #[error("instance `{alias}` needs environment variable `{var}` which the control system does not provide")]
    EnvMismatch { alias: String, var: String },
    #[error("no instance named `{0}`")]
    UnknownInstance(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub alias: String,
    pub system: String,
    pub args: Vec<Value>,
    /// Instantiated graph over the composition's global variable table.
    pub graph: SystemGraph,
}

/// Asynchronous (interleaving) composition over a shared environment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Composition {
    pub name: String,
    pub universe: Universe,
    /// Environment variables first, then every instance's locals.
    pub vars: Vec<VarDecl>,
    pub env_init: Vec<Value>,
    pub instances: Vec<Instance>,
    pub formulas: Vec<CheckedFormula>,
}

impl Composition {
    pub fn env_count(&self) -> usize {
        self.env_init.len()
    }

    pub fn instance(&self, alias: &str) -> Option<usize> {
        self.instances.iter().position(|i| i.alias == alias)
    }

    /// Removes an instance's behaviour: it keeps its initial configuration
    /// (so formulas mentioning it stay meaningful) but never fires.
    pub fn freeze(&mut self, alias: &str) -> Result<(), ComposeError> {
        let k = self.instance(alias).ok_or_else(|| ComposeError::UnknownInstance(alias.to_string()))?;
        self.instances[k].graph.transitions.clear();
        Ok(())
    }

    /// The same composition with `eliminate_actions` applied to every instance.
    pub fn eliminated(&self) -> Composition {
        let mut c = self.clone();
        for i in &mut c.instances {
            i.graph = eliminate_actions(&i.graph);
        }
        c
    }

    /// `alias.name` for global variables, plain names for environment ones.
    pub fn var_name(&self, v: crate::expr::VarId) -> String {
        self.vars[v.0 as usize].name.clone()
    }

    pub fn declarator_name(&self, instance: u32, declarator: u32) -> String {
        let i = &self.instances[instance as usize];
        format!("{}.{}", i.alias, i.graph.declarators[declarator as usize].name)
    }

    /// Renders an expression over global variables.
    pub fn render_expr(&self, e: &crate::expr::Expr) -> String {
        e.render_with(&|v| self.var_name(v), &|k, d| self.declarator_name(k, d), &self.universe)
    }
}

/// Instantiates every control-system instance and lays out the global state.
pub fn compose_async(program: &Program) -> Result<Composition, ComposeError> {
    let control = program.control.as_ref().ok_or(ComposeError::NoControl)?;
    let vars = program.global_vars();
    let mut instances: Vec<Instance> = Vec::new();
    for (k, ci) in control.instances.iter().enumerate() {
        if instances.iter().any(|i| i.alias == ci.alias) {
            return Err(ComposeError::AliasClash(ci.alias.clone()));
        }
        let sys = &program.systems[ci.system];
        for v in sys.vars.iter().filter(|v| v.env) {
            if !control.env_vars.iter().any(|e| e.name == v.name && e.ty == v.ty) {
                return Err(ComposeError::EnvMismatch { alias: ci.alias.clone(), var: v.name.clone() });
            }
        }
        let g = instantiate(&build_system_graph(sys), &ci.args, &ci.alias);
        let map = program.instance_var_map(k);
        instances.push(Instance {
            alias: ci.alias.clone(),
            system: sys.name.clone(),
            args: ci.args.clone(),
            graph: remap(&g, &map, vars.clone()),
        });
    }
    Ok(Composition {
        name: control.name.clone(),
        universe: program.universe.clone(),
        vars,
        env_init: control.env_init.clone(),
        instances,
        formulas: control.formulas.clone(),
    })
}
