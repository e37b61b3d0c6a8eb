//! Reference implementations used only by tests: a brute-force constructor
//! of the concretized transition system, a naive recursive CTL evaluator,
//! an interpreter for emitted NuSMV programs, and random generators for
//! models, transition systems and formulas.

pub mod brute;
pub mod ctl;
pub mod gen;
pub mod smv;
