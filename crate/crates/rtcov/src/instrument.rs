//! Run-time check instrumentation: wrapper clauses, reified property
//! checks combined with bitwise operations, and the off/full/opt
//! scenarios.
//!
//! For a predicate `p` with check assertions, `full` replaces its clauses
//! by a renamed predicate and inserts wrappers:
//!
//! ```text
//! p(X..)   :- p_c(X.., R..), p_r(X..), p_s(X.., R..).
//! p_c(...) :- <reified Pre checks>,  warn_if_false(_, 'calls').
//! p_s(...) :- <reified Post checks>, warn_if_false(_, 'success').
//! p_r(..)  := the original clauses of p
//! ```
//!
//! Status variables `R..` carry each precondition result into the success
//! block so preconditions are never evaluated twice. `opt` keeps only the
//! checks a discharge set could not eliminate; exported predicates retain
//! a calls-only interface wrapper with an interface split (`p_r` calling
//! an internal `p_i`), and internal calls bypass the interface.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::InstrumentError;
use crate::lang::assertion::{AssertionKind, AssertionStatus, PredAssertion, PropFormula};
use crate::lang::program::{ArithExpr, ArithOp, Clause, Goal, PredRole, TestKind};
use crate::lang::{PredId, Program, Sym, Term};

mod discharge;
pub use discharge::{parse_discharge_file, syntactic_discharge};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum DischargePart {
    /// Precondition holds at every internal call site.
    Pre,
    /// Postcondition statically proven.
    Post,
    /// Interface calls check proven for all callers (user-supplied only).
    Calls,
}

pub type DischargeSet = BTreeSet<(PredId, usize, DischargePart)>;

#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    Off,
    Full,
    Opt(DischargeSet),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Off => "off",
            Scenario::Full => "full",
            Scenario::Opt(_) => "opt",
        }
    }
}

/// Compiled check blocks for one predicate.
#[derive(Clone, Debug)]
pub struct CheckBlock {
    pub checker_c: Option<PredId>,
    pub checker_s: Option<PredId>,
    /// One status variable per retained precondition group.
    pub status_vars: Vec<Sym>,
    pub compiled_c: Vec<Goal>,
    pub compiled_s: Vec<Goal>,
    /// First property reified anywhere in the blocks.
    pub first_prop: Option<PredId>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Origin {
    pub original: PredId,
    pub role: PredRole,
}

/// An instrumented program plus the map from generated predicates back to
/// source predicates. Reports speak in source names via this map.
#[derive(Clone, Debug)]
pub struct InstrumentedProgram {
    pub program: Program,
    pub origin: BTreeMap<PredId, Origin>,
}

impl InstrumentedProgram {
    pub fn original_of(&self, pid: PredId) -> PredId {
        self.origin.get(&pid).map(|o| o.original).unwrap_or(pid)
    }
}

/// Which check parts to keep for one assertion of a predicate.
#[derive(Clone, Copy, Debug)]
struct Retained {
    pre: bool,
    post: bool,
}

fn fresh_pred(program: &Program, base: &str, arity: usize) -> Result<PredId, InstrumentError> {
    for i in 0..1000 {
        let name = if i == 0 {
            base.to_string()
        } else {
            format!("{base}{i}")
        };
        let pid = PredId::new(&name, arity);
        if !program.has_pred(pid) {
            return Ok(pid);
        }
    }
    Err(InstrumentError::FreshNameExhausted(base.to_string()))
}

fn prop_pred_of(program: &Program, lit: &Term) -> Result<PredId, InstrumentError> {
    let pid = lit
        .pred_id()
        .ok_or_else(|| InstrumentError::NotAProperty(format!("{lit:?}")))?;
    let is_builtin = pid.arity == 1 && TestKind::from_name(&pid.name.name()).is_some();
    if is_builtin || program.is_prop(pid) {
        Ok(pid)
    } else {
        Err(InstrumentError::NotAProperty(pid.to_string()))
    }
}

/// Bitwise combination of reified results mirroring the formula shape:
/// conjunction with `/\`, disjunction with `\/`, right-associated.
fn combine(shape: &FormulaShape) -> ArithExpr {
    match shape {
        FormulaShape::Leaf(v) => ArithExpr::Var(*v),
        FormulaShape::And(xs) => fold_op(ArithOp::BitAnd, xs),
        FormulaShape::Or(xs) => fold_op(ArithOp::BitOr, xs),
    }
}

fn fold_op(op: ArithOp, xs: &[FormulaShape]) -> ArithExpr {
    let mut it = xs.iter().rev();
    let mut acc = combine(it.next().expect("non-empty"));
    for x in it {
        acc = ArithExpr::Bin(op, Box::new(combine(x)), Box::new(acc));
    }
    acc
}

enum FormulaShape {
    Leaf(Sym),
    And(Vec<FormulaShape>),
    Or(Vec<FormulaShape>),
}

struct VarGen {
    counter: usize,
    prefix: &'static str,
}

impl VarGen {
    fn new(prefix: &'static str) -> VarGen {
        VarGen { counter: 0, prefix }
    }

    fn next(&mut self) -> Sym {
        self.counter += 1;
        Sym::new(&format!("{}{}", self.prefix, self.counter))
    }
}

/// Emit reify goals for a formula; returns the combination shape.
/// Size-binding annotation literals carry no run-time check.
fn is_size_binding(lit: &Term) -> bool {
    match lit.pred_id() {
        Some(pid) if pid.arity == 2 => matches!(
            pid.name.name().as_str(),
            "length" | "row_length" | "depth" | "value"
        ),
        _ => false,
    }
}

fn reify_formula(
    program: &Program,
    f: &PropFormula,
    gen: &mut VarGen,
    goals: &mut Vec<Goal>,
    first_prop: &mut Option<PredId>,
) -> Result<Option<FormulaShape>, InstrumentError> {
    match f {
        PropFormula::Lit(lit) => {
            if is_size_binding(lit) {
                return Ok(None);
            }
            let pid = prop_pred_of(program, lit)?;
            if first_prop.is_none() {
                *first_prop = Some(pid);
            }
            let v = gen.next();
            goals.push(Goal::ReifyCheck(lit.clone(), Term::Var(v)));
            Ok(Some(FormulaShape::Leaf(v)))
        }
        PropFormula::And(xs) => {
            let mut shapes = vec![];
            for x in xs {
                if let Some(s) = reify_formula(program, x, gen, goals, first_prop)? {
                    shapes.push(s);
                }
            }
            Ok(if shapes.is_empty() {
                None
            } else {
                Some(FormulaShape::And(shapes))
            })
        }
        PropFormula::Or(xs) => {
            let mut shapes = vec![];
            for x in xs {
                match reify_formula(program, x, gen, goals, first_prop)? {
                    Some(s) => shapes.push(s),
                    // an empty disjunct is trivially true
                    None => return Ok(None),
                }
            }
            Ok(if shapes.is_empty() {
                None
            } else {
                Some(FormulaShape::Or(shapes))
            })
        }
    }
}

/// Compile the pre/post checks of one predicate's assertions.
///
/// `compiled_c` reifies each precondition, combines each group with
/// bitwise and/or, joins groups with `\/` (at least one precondition must
/// hold) and ends with a `'calls'` warning. `compiled_s` reifies each
/// retained postcondition and guards it with the corresponding status
/// variable: `(R # 1) \/ Post`, joined with `/\` and a `'success'`
/// warning.
fn compile_checks_impl(
    program: &Program,
    assertions: &[(&PredAssertion, Retained)],
) -> Result<CheckBlock, InstrumentError> {
    let mut gen = VarGen::new("R_");
    let mut first_prop = None;

    let mut compiled_c: Vec<Goal> = vec![];
    let mut status_vars: Vec<Sym> = vec![];
    let mut group_results: Vec<Sym> = vec![];
    let mut pre_status: HashMap<usize, Sym> = HashMap::new();

    for (idx, (a, keep)) in assertions.iter().enumerate() {
        if !keep.pre {
            continue;
        }
        let Some(pre) = &a.pre else { continue };
        let shape = reify_formula(program, pre, &mut gen, &mut compiled_c, &mut first_prop)?;
        let rvar = match shape {
            Some(FormulaShape::Leaf(v)) => v,
            Some(s) => {
                let r = gen.next();
                compiled_c.push(Goal::BitCombine(Term::Var(r), combine(&s)));
                r
            }
            None => {
                // vacuously true precondition: a constant-true combination
                let r = gen.next();
                compiled_c.push(Goal::BitCombine(Term::Var(r), ArithExpr::Int(1)));
                r
            }
        };
        status_vars.push(rvar);
        group_results.push(rvar);
        pre_status.insert(idx, rvar);
    }

    if !group_results.is_empty() {
        let warn_on = if group_results.len() == 1 {
            group_results[0]
        } else {
            let shapes: Vec<FormulaShape> = group_results
                .iter()
                .map(|v| FormulaShape::Leaf(*v))
                .collect();
            let r = gen.next();
            compiled_c.push(Goal::BitCombine(
                Term::Var(r),
                fold_op(ArithOp::BitOr, &shapes),
            ));
            r
        };
        compiled_c.push(Goal::WarnIfFalse(Term::Var(warn_on), Sym::new("calls")));
    }

    let mut compiled_s: Vec<Goal> = vec![];
    let mut impl_results: Vec<Sym> = vec![];
    for (idx, (a, keep)) in assertions.iter().enumerate() {
        if !keep.post {
            continue;
        }
        let Some(post) = &a.post else { continue };
        let shape = reify_formula(program, post, &mut gen, &mut compiled_s, &mut first_prop)?;
        let Some(shape) = shape else { continue };
        let post_var = match shape {
            FormulaShape::Leaf(v) => v,
            s => {
                let h = gen.next();
                compiled_s.push(Goal::BitCombine(Term::Var(h), combine(&s)));
                h
            }
        };
        let result = match pre_status.get(&idx) {
            Some(rvar) => {
                // (R # 1) \/ Post
                let k = gen.next();
                compiled_s.push(Goal::BitCombine(
                    Term::Var(k),
                    ArithExpr::Bin(
                        ArithOp::BitOr,
                        Box::new(ArithExpr::Bin(
                            ArithOp::BitXor,
                            Box::new(ArithExpr::Var(*rvar)),
                            Box::new(ArithExpr::Int(1)),
                        )),
                        Box::new(ArithExpr::Var(post_var)),
                    ),
                ));
                k
            }
            // precondition discharged: the implication reduces to the post
            None => post_var,
        };
        impl_results.push(result);
    }

    if !impl_results.is_empty() {
        let warn_on = if impl_results.len() == 1 {
            impl_results[0]
        } else {
            let shapes: Vec<FormulaShape> = impl_results
                .iter()
                .map(|v| FormulaShape::Leaf(*v))
                .collect();
            let s = gen.next();
            compiled_s.push(Goal::BitCombine(
                Term::Var(s),
                fold_op(ArithOp::BitAnd, &shapes),
            ));
            s
        };
        compiled_s.push(Goal::WarnIfFalse(Term::Var(warn_on), Sym::new("success")));
    }

    Ok(CheckBlock {
        checker_c: None,
        checker_s: None,
        status_vars,
        compiled_c,
        compiled_s,
        first_prop,
    })
}

/// Public entry matching the operation contract: compile the checks of
/// all check-status assertions of `pid`.
pub fn compile_pred_checks(program: &Program, pid: PredId) -> Result<CheckBlock, InstrumentError> {
    let assertions = program.assertions_of(pid);
    let with_keep: Vec<(&PredAssertion, Retained)> = assertions
        .iter()
        .filter(|a| a.status == AssertionStatus::Check)
        .map(|a| {
            (
                *a,
                Retained {
                    pre: a.pre.is_some(),
                    post: a.post.is_some() && a.kind == AssertionKind::Pred,
                },
            )
        })
        .collect();
    compile_checks_impl(program, &with_keep)
}

fn head_args(pid: PredId) -> Vec<Term> {
    (0..pid.arity)
        .map(|i| Term::var(&crate::lang::assertion::canonical_arg_name(i)))
        .collect()
}

fn rename_functor(t: &Term, from: PredId, to: PredId) -> Term {
    match t {
        Term::Comp(f, args) if *f == from.name && args.len() == from.arity => {
            Term::Comp(to.name, args.clone())
        }
        Term::Atom(a) if *a == from.name && from.arity == 0 => Term::Atom(to.name),
        other => other.clone(),
    }
}

fn rewrite_calls(body: &[Goal], map: &HashMap<PredId, PredId>) -> Vec<Goal> {
    body.iter()
        .map(|g| match g {
            Goal::Call(t) => {
                if let Some(pid) = t.pred_id() {
                    if let Some(to) = map.get(&pid) {
                        return Goal::Call(rename_functor(t, pid, *to));
                    }
                }
                g.clone()
            }
            other => other.clone(),
        })
        .collect()
}

struct WrapOutcome {
    origin: Vec<(PredId, Origin)>,
}

/// Wrap predicate `pid` in `out` (which already contains the original
/// clauses under `pid`). `interface_split` selects the opt-style layout.
fn wrap_predicate(
    out: &mut Program,
    pid: PredId,
    block: &CheckBlock,
    interface_split: bool,
) -> Result<WrapOutcome, InstrumentError> {
    let base = pid.name.name();
    let renamed = fresh_pred(out, &format!("{base}_r"), pid.arity)?;
    let args = head_args(pid);
    let status_args: Vec<Term> = block.status_vars.iter().map(|v| Term::Var(*v)).collect();

    let has_c = !block.compiled_c.is_empty();
    let has_s = !block.compiled_s.is_empty();

    let mut origin = vec![];
    let mut wrapper_body: Vec<Goal> = vec![];

    let checker_c = if has_c {
        let arity = pid.arity + if has_s { block.status_vars.len() } else { 0 };
        let c = fresh_pred(out, &format!("{base}_c"), arity)?;
        let mut cargs = args.clone();
        if has_s {
            cargs.extend(status_args.clone());
        }
        wrapper_body.push(Goal::Call(Term::comp(&c.name.name(), cargs.clone())));
        out.add_clause(Clause {
            head: Term::comp(&c.name.name(), cargs),
            body: block.compiled_c.clone(),
        });
        out.roles.insert(c, PredRole::CheckerC);
        origin.push((
            c,
            Origin {
                original: pid,
                role: PredRole::CheckerC,
            },
        ));
        Some(c)
    } else {
        None
    };

    wrapper_body.push(Goal::Call(Term::comp(&renamed.name.name(), args.clone())));

    let checker_s = if has_s {
        let arity = pid.arity + block.status_vars.len();
        let s = fresh_pred(out, &format!("{base}_s"), arity)?;
        let mut sargs = args.clone();
        sargs.extend(status_args.clone());
        wrapper_body.push(Goal::Call(Term::comp(&s.name.name(), sargs.clone())));
        out.add_clause(Clause {
            head: Term::comp(&s.name.name(), sargs),
            body: block.compiled_s.clone(),
        });
        out.roles.insert(s, PredRole::CheckerS);
        origin.push((
            s,
            Origin {
                original: pid,
                role: PredRole::CheckerS,
            },
        ));
        Some(s)
    } else {
        None
    };

    // move original clauses to the renamed predicate
    let original_clauses: Vec<Clause> = out.clauses_of(pid).to_vec();
    out.remove_pred(pid);

    // wrapper clause takes the original name
    out.add_clause(Clause {
        head: Term::comp(&pid.name.name(), args.clone()),
        body: wrapper_body,
    });
    out.roles.insert(pid, PredRole::Wrapper);
    origin.push((
        pid,
        Origin {
            original: pid,
            role: PredRole::Wrapper,
        },
    ));

    if interface_split {
        // p_r(X..) :- p_i(X..).   p_i := original clauses
        let internal = fresh_pred(out, &format!("{base}_i"), pid.arity)?;
        out.add_clause(Clause {
            head: Term::comp(&renamed.name.name(), args.clone()),
            body: vec![Goal::Call(Term::comp(&internal.name.name(), args.clone()))],
        });
        out.roles.insert(renamed, PredRole::InterfaceSplit);
        origin.push((
            renamed,
            Origin {
                original: pid,
                role: PredRole::InterfaceSplit,
            },
        ));
        for cl in original_clauses {
            out.add_clause(Clause {
                head: rename_functor(&cl.head, pid, internal),
                body: cl.body,
            });
        }
        out.roles.insert(internal, PredRole::Renamed);
        origin.push((
            internal,
            Origin {
                original: pid,
                role: PredRole::Renamed,
            },
        ));
    } else {
        for cl in original_clauses {
            out.add_clause(Clause {
                head: rename_functor(&cl.head, pid, renamed),
                body: cl.body,
            });
        }
        out.roles.insert(renamed, PredRole::Renamed);
        origin.push((
            renamed,
            Origin {
                original: pid,
                role: PredRole::Renamed,
            },
        ));
    }

    if let Some(fp) = block.first_prop {
        out.first_prop.insert(pid, fp);
        if let Some(c) = checker_c {
            out.first_prop.insert(c, fp);
        }
        if let Some(s) = checker_s {
            out.first_prop.insert(s, fp);
        }
        if interface_split {
            out.first_prop.insert(renamed, fp);
        }
    }
    for (p, o) in &origin {
        out.origin_owner.insert(*p, o.original);
    }

    Ok(WrapOutcome { origin })
}

/// Indices (1-based) of check assertions per predicate.
fn check_assertions(program: &Program, pid: PredId) -> Vec<(usize, PredAssertion)> {
    program
        .assertions_of(pid)
        .into_iter()
        .filter(|a| a.status == AssertionStatus::Check)
        .cloned()
        .enumerate()
        .map(|(i, a)| (i + 1, a))
        .collect()
}

/// Apply an instrumentation scenario to a normalized program.
pub fn apply_scenario(
    program: &Program,
    scenario: &Scenario,
) -> Result<InstrumentedProgram, InstrumentError> {
    match scenario {
        Scenario::Off => Ok(InstrumentedProgram {
            program: program.clone(),
            origin: BTreeMap::new(),
        }),
        Scenario::Full => apply_full(program),
        Scenario::Opt(discharge) => apply_opt(program, discharge),
    }
}

fn apply_full(program: &Program) -> Result<InstrumentedProgram, InstrumentError> {
    let mut out = program.clone();
    let mut origin = BTreeMap::new();
    for &pid in program.pred_ids() {
        if program.is_prop(pid) {
            continue;
        }
        let checks = check_assertions(program, pid);
        if checks.is_empty() || !program.has_pred(pid) {
            continue;
        }
        let retained: Vec<(&PredAssertion, Retained)> = checks
            .iter()
            .map(|(_, a)| {
                (
                    a,
                    Retained {
                        pre: a.pre.is_some(),
                        post: a.post.is_some() && a.kind == AssertionKind::Pred,
                    },
                )
            })
            .collect();
        let block = compile_checks_impl(&out, &retained)?;
        if block.compiled_c.is_empty() && block.compiled_s.is_empty() {
            continue;
        }
        let o = wrap_predicate(&mut out, pid, &block, false)?;
        origin.extend(o.origin);
    }
    Ok(InstrumentedProgram {
        program: out,
        origin,
    })
}

fn apply_opt(
    program: &Program,
    discharge: &DischargeSet,
) -> Result<InstrumentedProgram, InstrumentError> {
    // validate discharge entries
    for (pid, idx, _) in discharge {
        let checks = check_assertions(program, *pid);
        if !checks.iter().any(|(i, _)| i == idx) {
            return Err(InstrumentError::BadDischarge(format!(
                "{pid} assertion {idx}"
            )));
        }
    }

    let has = |pid: PredId, idx: usize, part: DischargePart| discharge.contains(&(pid, idx, part));

    let mut out = program.clone();
    let mut origin = BTreeMap::new();
    // predicates whose internal calls bypass the interface wrapper
    let mut rewire: HashMap<PredId, PredId> = HashMap::new();
    let mut wrapped_exported: Vec<PredId> = vec![];

    for &pid in program.pred_ids() {
        if program.is_prop(pid) {
            continue;
        }
        let checks = check_assertions(program, pid);
        if checks.is_empty() {
            continue;
        }
        let exported = program.exports.contains(&pid);

        if exported {
            // interface checks: pres unless calls-discharged; posts unless
            // post-discharged
            let retained: Vec<(&PredAssertion, Retained)> = checks
                .iter()
                .map(|(i, a)| {
                    (
                        a,
                        Retained {
                            pre: a.pre.is_some() && !has(pid, *i, DischargePart::Calls),
                            post: a.post.is_some()
                                && a.kind == AssertionKind::Pred
                                && !has(pid, *i, DischargePart::Post),
                        },
                    )
                })
                .collect();
            let block = compile_checks_impl(&out, &retained)?;
            let o = wrap_predicate(&mut out, pid, &block, true)?;
            // internal calls may bypass the interface when every
            // precondition was verified at internal call sites
            let all_pre_ok = checks
                .iter()
                .all(|(i, a)| a.pre.is_none() || has(pid, *i, DischargePart::Pre));
            if all_pre_ok {
                let internal = o
                    .origin
                    .iter()
                    .find(|(_, og)| og.role == PredRole::Renamed)
                    .map(|(p, _)| *p)
                    .expect("split wrap has an internal predicate");
                // posts hold for internal callers only if discharged too
                let all_post_ok = checks
                    .iter()
                    .all(|(i, a)| a.post.is_none() || has(pid, *i, DischargePart::Post));
                if all_post_ok {
                    rewire.insert(pid, internal);
                }
            }
            wrapped_exported.push(pid);
            origin.extend(o.origin);
        } else {
            let retained: Vec<(&PredAssertion, Retained)> = checks
                .iter()
                .map(|(i, a)| {
                    (
                        a,
                        Retained {
                            pre: a.pre.is_some() && !has(pid, *i, DischargePart::Pre),
                            post: a.post.is_some()
                                && a.kind == AssertionKind::Pred
                                && !has(pid, *i, DischargePart::Post),
                        },
                    )
                })
                .collect();
            let block = compile_checks_impl(&out, &retained)?;
            if block.compiled_c.is_empty() && block.compiled_s.is_empty() {
                continue; // fully discharged: keep the predicate bare
            }
            let o = wrap_predicate(&mut out, pid, &block, false)?;
            origin.extend(o.origin);
        }
    }

    // rewire internal calls of renamed/internal clause bodies
    if !rewire.is_empty() {
        let ids: Vec<PredId> = out.pred_ids().to_vec();
        for pid in ids {
            let role = out.role(pid);
            if !matches!(role, PredRole::Renamed | PredRole::Normal) {
                continue;
            }
            if program.is_prop(pid) {
                continue;
            }
            let rewritten: Vec<Clause> = out
                .clauses_of(pid)
                .iter()
                .map(|cl| Clause {
                    head: cl.head.clone(),
                    body: rewrite_calls(&cl.body, &rewire),
                })
                .collect();
            let all = out.clauses_of(pid).to_vec();
            if rewritten != all {
                out.remove_pred(pid);
                for cl in rewritten {
                    out.add_clause(cl);
                }
                // restore source position is not tracked; order only
                // affects reporting, not semantics
            }
        }
    }

    Ok(InstrumentedProgram {
        program: out,
        origin,
    })
}

#[cfg(test)]
mod tests;
