//! Concrete evaluation of admitted programs.

mod interp;
mod replay;
mod value;

pub use interp::{arith, default_value, eval_call, literal_value, EvalError, Evaluator, DEFAULT_STEP_BUDGET};
pub use replay::{replay, replay_counterexample, Counterexample, ReplayReport, ReplaySemantics};
pub use value::Value;
