//! Library properties available to every program: `list/1`, `intlist/1`.
//!
//! These are ordinary clause-defined properties so that checking them has
//! a measurable step cost (a length-n list costs n+1 resolution steps for
//! `list/1`). Programs may define further properties with `:- prop`.

use super::parser::parse_program;
use super::program::Program;
use super::term::PredId;

const PRELUDE_SRC: &str = "\
:- prop list/1.
list([]).
list([_|Xs]) :- list(Xs).

:- prop intlist/1.
intlist([]).
intlist([X|Xs]) :- num(X), intlist(Xs).
";

pub fn is_prelude_prop(pid: PredId) -> bool {
    let name = pid.name.name();
    pid.arity == 1 && (name == "list" || name == "intlist")
}

/// Add prelude properties the program does not define itself.
pub fn extend(program: &Program) -> Program {
    let prelude = parse_program(PRELUDE_SRC).expect("prelude parses");
    let mut out = program.clone();
    for &pid in prelude.pred_ids() {
        if !out.has_pred(pid) {
            for cl in prelude.clauses_of(pid) {
                out.add_clause(cl.clone());
            }
            out.props.insert(pid);
        }
    }
    out
}

/// Property implication facts used by the syntactic discharger:
/// `implies(p, q)` means any term satisfying `p` satisfies `q`.
pub fn implies(p: PredId, q: PredId) -> bool {
    if p == q {
        return true;
    }
    if p.arity != 1 || q.arity != 1 {
        return false;
    }
    let (pn, qn) = (p.name.name(), q.name.name());
    matches!(
        (pn.as_str(), qn.as_str()),
        ("intlist", "list") | ("list", "term") | ("intlist", "term") | (_, "term")
    )
}
