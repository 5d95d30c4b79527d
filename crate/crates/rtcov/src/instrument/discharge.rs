//! A small syntactic check discharger plus the discharge-file format.
//!
//! The discharger proves, by structural rules only, that some checks can
//! never fail: postconditions whose output is built from `[]`/`[H|T]`
//! with an inductively shaped tail, and internal call preconditions whose
//! arguments are destructured inputs, arithmetic results, or outputs of
//! already-discharged predicates. It never discharges the calls check of
//! an exported predicate. An empty result is always sound.

use std::collections::{BTreeSet, HashMap};

use super::{DischargePart, DischargeSet};
use crate::error::InstrumentError;
use crate::lang::assertion::{AssertionKind, AssertionStatus, PropFormula};
use crate::lang::prelude::implies;
use crate::lang::program::Goal;
use crate::lang::{PredId, Program, Sym, Term};

/// Inductive output shapes the rule set can establish.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Shape {
    /// List of numbers.
    IntList,
    List,
    Unknown,
}

impl Shape {
    fn join(self, other: Shape) -> Shape {
        use Shape::*;
        match (self, other) {
            (IntList, IntList) => IntList,
            (Unknown, _) | (_, Unknown) => Unknown,
            _ => List,
        }
    }

    fn proves(self, prop: &str) -> bool {
        match self {
            Shape::IntList => prop == "intlist" || prop == "list" || prop == "term",
            Shape::List => prop == "list" || prop == "term",
            Shape::Unknown => prop == "term",
        }
    }
}

/// What is known about a clause-body variable.
#[derive(Clone, PartialEq, Debug)]
enum Fact {
    /// The j-th head argument (0-based), possibly with a pre property.
    Input(usize),
    /// Tail of an input satisfying the named list property.
    TailOf(Sym),
    /// Element of an input satisfying the named list property.
    ElemOf(Sym),
    /// Result of an `is/2` goal.
    Num,
    /// Bound as output `k` (0-based) of a call to `q`.
    OutOf(PredId, usize),
    /// Appears only in an output-argument head pattern: unbound at call.
    FreshOut,
}

struct ClauseInfo {
    facts: HashMap<Sym, Fact>,
    /// variables in order of first occurrence in the body
    first_occurrence: HashMap<Sym, usize>,
}

struct Analysis<'a> {
    program: &'a Program,
    /// first check assertion per predicate (pre/post formulas)
    pre_props: HashMap<PredId, Vec<(usize, Term)>>,
    output_args: HashMap<PredId, Vec<usize>>,
    shapes: HashMap<(PredId, usize), Shape>,
}

fn unary_prop(lit: &Term) -> Option<(Sym, Sym)> {
    match lit {
        Term::Comp(p, args) if args.len() == 1 => match &args[0] {
            Term::Var(v) => Some((*p, *v)),
            _ => None,
        },
        _ => None,
    }
}

impl<'a> Analysis<'a> {
    fn new(program: &'a Program) -> Analysis<'a> {
        let mut pre_props: HashMap<PredId, Vec<(usize, Term)>> = HashMap::new();
        let mut output_args: HashMap<PredId, Vec<usize>> = HashMap::new();
        for &pid in program.pred_ids() {
            let mut props = vec![];
            let mut outs = vec![];
            for a in program.assertions_of(pid) {
                if a.status != AssertionStatus::Check {
                    continue;
                }
                let head_vars = a.head_vars();
                if let Some(pre) = &a.pre {
                    for lit in pre.lits() {
                        if let Some((p, v)) = unary_prop(lit) {
                            if let Some(j) = head_vars.iter().position(|h| *h == v) {
                                if p.name() == "var" {
                                    outs.push(j);
                                } else {
                                    props.push((j, lit.clone()));
                                }
                            }
                        }
                    }
                }
                break; // facts come from the first check assertion
            }
            pre_props.insert(pid, props);
            output_args.insert(pid, outs);
        }
        let mut shapes = HashMap::new();
        for &pid in program.pred_ids() {
            for j in 0..pid.arity {
                // optimistic start; weakened to fixpoint
                shapes.insert((pid, j), Shape::IntList);
            }
        }
        Analysis {
            program,
            pre_props,
            output_args,
            shapes,
        }
    }

    fn input_prop(&self, pid: PredId, j: usize) -> Option<Sym> {
        self.pre_props
            .get(&pid)?
            .iter()
            .find(|(k, _)| *k == j)
            .map(|(_, lit)| lit.pred_id().unwrap().name)
    }

    /// Gather per-variable facts for one clause of `pid`.
    fn clause_info(&self, pid: PredId, head: &Term, body: &[Goal]) -> ClauseInfo {
        let mut facts: HashMap<Sym, Fact> = HashMap::new();
        let outs = self.output_args.get(&pid).cloned().unwrap_or_default();
        for (j, arg) in head.args().iter().enumerate() {
            if outs.contains(&j) {
                // output pattern: its variables start unbound and may be
                // (re)bound by body calls later
                let mut vs = vec![];
                arg.vars(&mut vs);
                for v in vs {
                    facts.entry(v).or_insert(Fact::FreshOut);
                }
                continue;
            }
            match arg {
                Term::Var(v) => {
                    facts.entry(*v).or_insert(Fact::Input(j));
                }
                // [X|Xs] destructuring of an input with a list property
                Term::Comp(f, parts) if f.name() == "." && parts.len() == 2 => {
                    if let Some(prop) = self.input_prop(pid, j) {
                        if let Term::Var(x) = &parts[0] {
                            facts.entry(*x).or_insert(Fact::ElemOf(prop));
                        }
                        let mut tail = &parts[1];
                        // walk [X,Y|Zs] chains
                        loop {
                            match tail {
                                Term::Var(v) => {
                                    facts.entry(*v).or_insert(Fact::TailOf(prop));
                                    break;
                                }
                                Term::Comp(g, ps) if g.name() == "." && ps.len() == 2 => {
                                    if let Term::Var(x) = &ps[0] {
                                        facts.entry(*x).or_insert(Fact::ElemOf(prop));
                                    }
                                    tail = &ps[1];
                                }
                                _ => break,
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        let mut first_occurrence: HashMap<Sym, usize> = HashMap::new();
        let upgradeable = |f: Option<&Fact>| matches!(f, None | Some(Fact::FreshOut));
        for (gi, g) in body.iter().enumerate() {
            let mut vs = vec![];
            g.vars(&mut vs);
            for v in vs {
                first_occurrence.entry(v).or_insert(gi);
            }
            match g {
                Goal::Is(Term::Var(v), _) => {
                    if upgradeable(facts.get(v)) {
                        facts.insert(*v, Fact::Num);
                    }
                }
                Goal::Call(t) => {
                    if let Some(q) = t.pred_id() {
                        for (k, arg) in t.args().iter().enumerate() {
                            if let Term::Var(v) = arg {
                                if upgradeable(facts.get(v)) {
                                    facts.insert(*v, Fact::OutOf(q, k));
                                }
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        ClauseInfo {
            facts,
            first_occurrence,
        }
    }

    /// Shape of a constructed term under current claims.
    fn shape_of(&self, t: &Term, info: &ClauseInfo, pid: PredId) -> Shape {
        match t {
            Term::Atom(a) if a.name() == "[]" => Shape::IntList,
            Term::Comp(f, parts) if f.name() == "." && parts.len() == 2 => {
                let tail = self.shape_of(&parts[1], info, pid);
                if tail == Shape::Unknown {
                    return Shape::Unknown;
                }
                let elem_num = self.elem_is_num(&parts[0], info);
                if tail == Shape::IntList && elem_num {
                    Shape::IntList
                } else {
                    Shape::List
                }
            }
            Term::Var(v) => match info.facts.get(v) {
                Some(Fact::Input(j)) => match self.input_prop(pid, *j) {
                    Some(p) if p.name() == "intlist" => Shape::IntList,
                    Some(p) if p.name() == "list" => Shape::List,
                    _ => Shape::Unknown,
                },
                Some(Fact::TailOf(p)) => match p.name().as_str() {
                    "intlist" => Shape::IntList,
                    "list" => Shape::List,
                    _ => Shape::Unknown,
                },
                Some(Fact::OutOf(q, k)) => self
                    .shapes
                    .get(&(*q, *k))
                    .copied()
                    .unwrap_or(Shape::Unknown),
                _ => Shape::Unknown,
            },
            _ => Shape::Unknown,
        }
    }

    fn elem_is_num(&self, t: &Term, info: &ClauseInfo) -> bool {
        match t {
            Term::Int(_) => true,
            Term::Var(v) => match info.facts.get(v) {
                Some(Fact::Num) => true,
                Some(Fact::ElemOf(p)) => p.name() == "intlist",
                _ => false,
            },
            _ => false,
        }
    }

    /// Weaken output shapes to a fixpoint.
    fn solve_shapes(&mut self) {
        loop {
            let mut changed = false;
            for &pid in self.program.pred_ids() {
                for cl in self.program.clauses_of(pid) {
                    let info = self.clause_info(pid, &cl.head, &cl.body);
                    for (j, arg) in cl.head.args().iter().enumerate() {
                        let claimed = self.shapes[&(pid, j)];
                        if claimed == Shape::Unknown {
                            continue;
                        }
                        let evident = self.shape_of(arg, &info, pid);
                        let joined = claimed.join(evident);
                        if joined != claimed {
                            self.shapes.insert((pid, j), joined);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return;
            }
        }
    }
}

/// Conservative syntactic discharge. Returns entries `(pred, index, part)`
/// in the same shape as a discharge file.
pub fn syntactic_discharge(program: &Program) -> DischargeSet {
    let mut analysis = Analysis::new(program);
    analysis.solve_shapes();

    let mut discharged: DischargeSet = BTreeSet::new();
    // iterate: callee-post facts can unlock caller discharges
    for _ in 0..3 {
        let before = discharged.len();
        discharge_round(program, &analysis, &mut discharged);
        if discharged.len() == before {
            break;
        }
    }
    discharged
}

fn discharge_round(program: &Program, analysis: &Analysis<'_>, discharged: &mut DischargeSet) {
    for &pid in program.pred_ids() {
        if program.is_prop(pid) {
            continue;
        }
        let checks: Vec<(usize, _)> = program
            .assertions_of(pid)
            .into_iter()
            .filter(|a| a.status == AssertionStatus::Check)
            .cloned()
            .enumerate()
            .map(|(i, a)| (i + 1, a))
            .collect();
        for (idx, a) in &checks {
            // posts: provable from preserved inputs and output shapes
            if a.kind == AssertionKind::Pred {
                if let Some(post) = &a.post {
                    if post_provable(program, analysis, pid, a.pre.as_ref(), post, discharged) {
                        discharged.insert((pid, *idx, DischargePart::Post));
                    }
                }
            }
            // pres: provable at every internal call site
            if let Some(pre) = &a.pre {
                if all_call_sites_ok(program, analysis, pid, pre, discharged) {
                    discharged.insert((pid, *idx, DischargePart::Pre));
                }
            }
        }
    }
}

fn head_var_index(a: &crate::lang::PredAssertion, v: Sym) -> Option<usize> {
    a.head_vars().iter().position(|h| *h == v)
}

fn pre_prop_of(pre: Option<&PropFormula>, j: usize, a: &crate::lang::PredAssertion) -> Option<Sym> {
    let pre = pre?;
    for lit in pre.lits() {
        if let Some((p, v)) = unary_prop(lit) {
            if head_var_index(a, v) == Some(j) && p.name() != "var" {
                return Some(p);
            }
        }
    }
    None
}

fn post_provable(
    program: &Program,
    analysis: &Analysis<'_>,
    pid: PredId,
    pre: Option<&PropFormula>,
    post: &PropFormula,
    _discharged: &DischargeSet,
) -> bool {
    let Some(a) = program
        .assertions_of(pid)
        .into_iter()
        .find(|a| a.status == AssertionStatus::Check)
        .cloned()
    else {
        return false;
    };
    for lit in post.lits() {
        let Some((p, v)) = unary_prop(lit) else {
            return false;
        };
        if p.name() == "term" {
            continue;
        }
        let Some(j) = head_var_index(&a, v) else {
            return false;
        };
        // preserved input with an implying pre property
        if let Some(prop) = pre_prop_of(pre, j, &a) {
            if implies(
                PredId {
                    name: prop,
                    arity: 1,
                },
                PredId { name: p, arity: 1 },
            ) {
                continue;
            }
        }
        // output with a provable shape
        let shape = analysis
            .shapes
            .get(&(pid, j))
            .copied()
            .unwrap_or(Shape::Unknown);
        if analysis
            .output_args
            .get(&pid)
            .map(|o| o.contains(&j))
            .unwrap_or(false)
            && shape.proves(&p.name())
        {
            continue;
        }
        return false;
    }
    true
}

/// Check one pre literal against the facts at a call site.
#[allow(clippy::too_many_arguments)]
fn site_lit_ok(
    program: &Program,
    analysis: &Analysis<'_>,
    caller: PredId,
    info: &ClauseInfo,
    arg: &Term,
    prop: Sym,
    goal_index: usize,
    discharged: &DischargeSet,
) -> bool {
    let pname = prop.name();
    if pname == "term" {
        return true;
    }
    // literal arguments
    match arg {
        Term::Int(_) => return pname == "num" || pname == "int" || pname == "nat",
        Term::Atom(x) if x.name() == "[]" => {
            return pname == "list" || pname == "intlist";
        }
        _ => {}
    }
    let Term::Var(v) = arg else { return false };
    if pname == "var" {
        return match info.facts.get(v) {
            // caller output slot, unbound by the caller's own pre
            Some(Fact::Input(j)) => analysis
                .output_args
                .get(&caller)
                .map(|o| o.contains(j))
                .unwrap_or(false),
            Some(Fact::FreshOut) => true,
            Some(Fact::OutOf(_, _)) | None => {
                // fresh if this very goal is its first occurrence
                info.first_occurrence.get(v).copied() == Some(goal_index)
            }
            _ => false,
        };
    }
    match info.facts.get(v) {
        Some(Fact::Input(j)) => {
            if let Some(p) = analysis.input_prop(caller, *j) {
                return implies(
                    PredId { name: p, arity: 1 },
                    PredId {
                        name: prop,
                        arity: 1,
                    },
                );
            }
            false
        }
        Some(Fact::TailOf(p)) => implies(
            PredId { name: *p, arity: 1 },
            PredId {
                name: prop,
                arity: 1,
            },
        ),
        Some(Fact::ElemOf(p)) => p.name() == "intlist" && (pname == "num" || pname == "int"),
        Some(Fact::Num) => pname == "num" || pname == "int",
        Some(Fact::OutOf(q, k)) => {
            // output shape of q
            let shape = analysis
                .shapes
                .get(&(*q, *k))
                .copied()
                .unwrap_or(Shape::Unknown);
            if shape.proves(&pname) {
                return true;
            }
            // or q's discharged post asserts an implying property
            let q_checks: Vec<_> = program
                .assertions_of(*q)
                .into_iter()
                .filter(|x| x.status == AssertionStatus::Check)
                .cloned()
                .collect();
            for (i, qa) in q_checks.iter().enumerate() {
                if !discharged.contains(&(*q, i + 1, DischargePart::Post)) {
                    continue;
                }
                if let Some(post) = &qa.post {
                    for lit in post.lits() {
                        if let Some((pp, pv)) = unary_prop(lit) {
                            if head_var_index(qa, pv) == Some(*k)
                                && implies(
                                    PredId { name: pp, arity: 1 },
                                    PredId {
                                        name: prop,
                                        arity: 1,
                                    },
                                )
                            {
                                return true;
                            }
                        }
                    }
                }
            }
            false
        }
        _ => false,
    }
}

fn all_call_sites_ok(
    program: &Program,
    analysis: &Analysis<'_>,
    pid: PredId,
    pre: &PropFormula,
    discharged: &DischargeSet,
) -> bool {
    let Some(a) = program
        .assertions_of(pid)
        .into_iter()
        .find(|x| x.status == AssertionStatus::Check)
        .cloned()
    else {
        return false;
    };
    for &caller in program.pred_ids() {
        if program.is_prop(caller) {
            continue;
        }
        for cl in program.clauses_of(caller) {
            let info = analysis.clause_info(caller, &cl.head, &cl.body);
            for (gi, g) in cl.body.iter().enumerate() {
                let Goal::Call(t) = g else { continue };
                if t.pred_id() != Some(pid) {
                    continue;
                }
                for lit in pre.lits() {
                    let Some((prop, hv)) = unary_prop(lit) else {
                        return false;
                    };
                    let Some(j) = head_var_index(&a, hv) else {
                        return false;
                    };
                    let arg = &t.args()[j];
                    if !site_lit_ok(program, analysis, caller, &info, arg, prop, gi, discharged) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Parse a discharge file: one `discharge(Pred/Arity, Index, pre|post|calls).`
/// entry per line; `%` comments and blank lines allowed.
pub fn parse_discharge_file(text: &str) -> Result<DischargeSet, InstrumentError> {
    let mut set = BTreeSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let bad = || {
            InstrumentError::BadDischarge(format!(
                "line {}: expected discharge(p/N, Index, pre|post|calls).",
                lineno + 1
            ))
        };
        let inner = line
            .strip_prefix("discharge(")
            .and_then(|s| s.strip_suffix(").").or_else(|| s.strip_suffix(")")))
            .ok_or_else(bad)?;
        let parts: Vec<&str> = inner.split(',').map(|s| s.trim()).collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let (name, arity) = parts[0].split_once('/').ok_or_else(bad)?;
        let arity: usize = arity.parse().map_err(|_| bad())?;
        let index: usize = parts[1].parse().map_err(|_| bad())?;
        let part = match parts[2] {
            "pre" => DischargePart::Pre,
            "post" => DischargePart::Post,
            "calls" => DischargePart::Calls,
            _ => return Err(bad()),
        };
        set.insert((PredId::new(name.trim(), arity), index, part));
    }
    Ok(set)
}
