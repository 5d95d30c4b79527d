//! Source language: terms, clauses, assertions, cost expressions,
//! parsing and printing.

pub mod assertion;
pub mod cost_expr;
pub mod parser;
pub mod poly;
pub mod prelude;
pub mod printer;
pub mod program;
pub mod term;

use std::collections::BTreeMap;

pub use assertion::{
    normalize_assertions, AssertionKind, AssertionStatus, CostKind, CostQualifier, CostSpec,
    OrderIdent, OrderSpec, PredAssertion, PropFormula,
};
pub use cost_expr::{CostExpr, CostValue, EvalError};
pub use parser::{parse_assertion_text, parse_cost_expr_text, parse_goal_term, parse_program};
pub use poly::{PolyExp, Rat};
pub use printer::{assertion_to_string, program_to_string, term_to_string};
pub use program::{Clause, CostModel, Goal, PredRole, Program};
pub use term::{PredId, Sym, Term};

/// Evaluate a cost expression under a natural-number size assignment.
/// Exact rational arithmetic; `Infinity` propagates.
pub fn eval_cost_expr(f: &CostExpr, env: &BTreeMap<Sym, Rat>) -> Result<CostValue, EvalError> {
    f.eval(env)
}

#[cfg(test)]
pub(crate) mod tests;
