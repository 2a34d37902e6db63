//! Core library: the MML modeling language, a concrete evaluator, a small
//! satisfiability solver, region decomposition, bounded verification, test
//! generation, and benchmark metric scoring.

pub mod decomp;
pub mod eval;
pub mod lang;
pub mod metrics;
pub mod solver;
pub mod testgen;
pub mod util;
pub mod verify;
