//! Compiler and explicit-state CTL model checker for the `.sz` system-graph
//! modeling language.

pub mod checker;
pub mod codegen;
pub mod expr;
pub mod frontend;
pub mod graph;
pub mod library;
pub mod logic;
