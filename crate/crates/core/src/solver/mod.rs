//! Constraint solving over booleans, linear arithmetic, constructor tests
//! and uninterpreted application atoms.

pub mod arith;
mod sat;
mod term;
mod valuation;

pub use sat::{canonicalize, check_sat, SatResult, UnknownReason, DEFAULT_BUDGET};
pub use term::{num_text, AdtSig, ArithOp, Atom, CmpOp, Formula, LinExpr, NumKind, SVal, FALSE, TRUE};
pub use valuation::{build_value, eval_formula, eval_lin, eval_sval, InputValuation, Model, ModelValuation, Valuation};
