//! Size metrics and argument-size relations.
//!
//! Assigns each predicate argument a size metric (list length, inner list
//! length, tree depth, integer value) from assertion properties with a
//! structural fallback, then infers closed-form bounds on output-argument
//! sizes as functions of input sizes, SCC by SCC, using the shared
//! recurrence solver.

use std::collections::{BTreeSet, HashMap};

use crate::error::AnalysisError;
use crate::lang::assertion::AssertionStatus;
use crate::lang::poly::PolyExp;
use crate::lang::program::Goal;
use crate::lang::{PredId, Program, Sym, Term};
use crate::recur::{self, Guard, Mode, Recurrence};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Metric {
    /// List length.
    Len,
    /// Length of the elements of a list (rectangular use).
    Inner,
    /// Tree depth.
    Depth,
    /// Integer value.
    IntVal,
}

impl Metric {
    pub fn code(self) -> &'static str {
        match self {
            Metric::Len => "len",
            Metric::Inner => "inner",
            Metric::Depth => "depth",
            Metric::IntVal => "val",
        }
    }
}

/// Size parameter symbol for an argument metric of a predicate.
pub fn param(pid: PredId, arg: usize, m: Metric) -> Sym {
    Sym::new(&format!("#{}_{}_{}_{}", pid.name, pid.arity, arg, m.code()))
}

/// Reserved symbol standing for the size of the recursive output while a
/// size recurrence is being set up.
fn self_sym() -> Sym {
    Sym::new("#self")
}

#[derive(Clone, Debug, Default)]
pub struct Metrics {
    pub args: HashMap<PredId, Vec<BTreeSet<Metric>>>,
    /// Arguments declared unbound-at-call by `var/1` in the precondition.
    pub outputs: HashMap<PredId, BTreeSet<usize>>,
}

impl Metrics {
    pub fn of(&self, pid: PredId, arg: usize) -> BTreeSet<Metric> {
        self.args
            .get(&pid)
            .and_then(|v| v.get(arg))
            .cloned()
            .unwrap_or_default()
    }

    pub fn is_output(&self, pid: PredId, arg: usize) -> bool {
        self.outputs
            .get(&pid)
            .map(|s| s.contains(&arg))
            .unwrap_or(false)
    }

    /// Input size parameters of a predicate, in argument order.
    pub fn params_of(&self, pid: PredId) -> Vec<(usize, Metric, Sym)> {
        let mut out = vec![];
        for j in 0..pid.arity {
            if self.is_output(pid, j) {
                continue;
            }
            for m in self.of(pid, j) {
                out.push((j, m, param(pid, j, m)));
            }
        }
        out
    }
}

fn prop_metrics(program: &Program, prop: PredId) -> BTreeSet<Metric> {
    let name = prop.name.name();
    let mut out = BTreeSet::new();
    match name.as_str() {
        "list" | "intlist" => {
            out.insert(Metric::Len);
        }
        "num" | "int" | "nat" => {
            out.insert(Metric::IntVal);
        }
        "var" | "term" | "atm" | "atomic" => {}
        _ => {
            // structural inspection of a clause-defined property
            for cl in program.clauses_of(prop) {
                if let Some(arg) = cl.head.args().first() {
                    match arg {
                        Term::Atom(a) if a.name() == "[]" => {
                            out.insert(Metric::Len);
                        }
                        Term::Comp(f, parts) if f.name() == "." && parts.len() == 2 => {
                            out.insert(Metric::Len);
                        }
                        Term::Atom(_) => {}
                        Term::Comp(..) => {
                            out.insert(Metric::Depth);
                        }
                        _ => {}
                    }
                }
            }
            // a property checking every element is numeric traverses a
            // matrix row by row; detect the nested-list case
            if out.contains(&Metric::Len) && prop_checks_element_lists(program, prop) {
                out.insert(Metric::Inner);
            }
        }
    }
    out
}

/// Does this list property run a Len-metric check on list elements?
fn prop_checks_element_lists(program: &Program, prop: PredId) -> bool {
    for cl in program.clauses_of(prop) {
        let elem_vars: Vec<Sym> = cl
            .head
            .args()
            .first()
            .map(|a| match a {
                Term::Comp(f, parts) if f.name() == "." && parts.len() == 2 => {
                    let mut vs = vec![];
                    parts[0].vars(&mut vs);
                    vs
                }
                _ => vec![],
            })
            .unwrap_or_default();
        for g in &cl.body {
            if let Goal::Call(t) = g {
                if let (Some(q), [Term::Var(v)]) = (t.pred_id(), t.args()) {
                    if elem_vars.contains(v)
                        && q != prop
                        && matches!(q.name.name().as_str(), "list" | "intlist" | "sorted")
                    {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Infer argument metrics for every predicate reachable in the program.
/// Assertion preconditions drive the assignment; predicates without
/// assertions fall back to head-pattern structure.
pub fn infer_metrics(program: &Program, entry: PredId) -> Result<Metrics, AnalysisError> {
    if !program.has_pred(entry) {
        return Err(AnalysisError::UnknownEntry(entry.to_string()));
    }
    let entry_assert = program.assertions_of(entry).into_iter().any(|a| {
        matches!(
            a.status,
            AssertionStatus::Check | AssertionStatus::True | AssertionStatus::Trust
        ) && a.pre.is_some()
    });
    if !entry_assert {
        return Err(AnalysisError::NoEntryAssertion(entry.to_string()));
    }

    let mut metrics = Metrics::default();
    for &pid in program.pred_ids() {
        let mut per_arg: Vec<BTreeSet<Metric>> = vec![BTreeSet::new(); pid.arity];
        let mut outs: BTreeSet<usize> = BTreeSet::new();
        let mut from_assertion = false;
        for a in program.assertions_of(pid) {
            if !matches!(
                a.status,
                AssertionStatus::Check | AssertionStatus::True | AssertionStatus::Trust
            ) {
                continue;
            }
            let Some(pre) = &a.pre else { continue };
            from_assertion = true;
            let head_vars = a.head_vars();
            for lit in pre.lits() {
                let Some(p) = lit.pred_id() else { continue };
                if p.arity != 1 {
                    continue;
                }
                let Some(Term::Var(v)) = lit.args().first() else {
                    continue;
                };
                let Some(j) = head_vars.iter().position(|h| h == v) else {
                    continue;
                };
                if p.name.name() == "var" {
                    outs.insert(j);
                } else {
                    for m in prop_metrics(program, p) {
                        per_arg[j].insert(m);
                    }
                }
            }
            // output-argument metrics come from the postcondition
            if let Some(post) = &a.post {
                for lit in post.lits() {
                    let Some(p) = lit.pred_id() else { continue };
                    if p.arity != 1 || p.name.name() == "var" {
                        continue;
                    }
                    let Some(Term::Var(v)) = lit.args().first() else {
                        continue;
                    };
                    let Some(j) = head_vars.iter().position(|h| h == v) else {
                        continue;
                    };
                    for m in prop_metrics(program, p) {
                        per_arg[j].insert(m);
                    }
                }
            }
            break;
        }
        if !from_assertion {
            if program.is_prop(pid) && pid.arity == 1 {
                // properties know their own metric, including the
                // nested-list case
                for m in prop_metrics(program, pid) {
                    per_arg[0].insert(m);
                }
            } else {
                // structural fallback from clause-head patterns
                for cl in program.clauses_of(pid) {
                    for (j, arg) in cl.head.args().iter().enumerate() {
                        match arg {
                            Term::Atom(a) if a.name() == "[]" => {
                                per_arg[j].insert(Metric::Len);
                            }
                            Term::Comp(f, parts) if f.name() == "." && parts.len() == 2 => {
                                per_arg[j].insert(Metric::Len);
                            }
                            Term::Int(_) => {
                                per_arg[j].insert(Metric::IntVal);
                            }
                            Term::Comp(..) => {
                                per_arg[j].insert(Metric::Depth);
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
        for (j, ms) in per_arg.iter().enumerate() {
            if ms.contains(&Metric::Len) && ms.contains(&Metric::Depth)
                || ms.contains(&Metric::Len) && ms.contains(&Metric::IntVal)
                || ms.contains(&Metric::Depth) && ms.contains(&Metric::IntVal)
            {
                return Err(AnalysisError::MetricConflict(pid.to_string(), j));
            }
        }
        metrics.args.insert(pid, per_arg);
        metrics.outputs.insert(pid, outs);
    }

    // instrumentation-generated predicates carry their source predicate's
    // argument metrics (the wrapper keeps the original name and assertion)
    use crate::lang::program::PredRole;
    for &pid in program.pred_ids() {
        if !matches!(
            program.role(pid),
            PredRole::Renamed | PredRole::InterfaceSplit
        ) {
            continue;
        }
        let Some(&owner) = program.origin_owner.get(&pid) else {
            continue;
        };
        if owner.arity != pid.arity {
            continue;
        }
        if let Some(args) = metrics.args.get(&owner).cloned() {
            metrics.args.insert(pid, args);
        }
        if let Some(outs) = metrics.outputs.get(&owner).cloned() {
            metrics.outputs.insert(pid, outs);
        }
    }

    // propagate metrics through shared variables to unasserted helpers:
    // a helper argument holding a variable whose size matters elsewhere
    // in the clause gets that metric too
    let asserted: Vec<PredId> = program
        .pred_ids()
        .iter()
        .copied()
        .filter(|pid| {
            program.assertions_of(*pid).iter().any(|a| {
                matches!(
                    a.status,
                    AssertionStatus::Check | AssertionStatus::True | AssertionStatus::Trust
                ) && a.pre.is_some()
            })
        })
        .collect();
    loop {
        let mut changed = false;
        for &pid in program.pred_ids() {
            for cl in program.clauses_of(pid) {
                // metrics per variable from head positions and call sites
                let mut var_metrics: HashMap<Sym, BTreeSet<Metric>> = HashMap::new();
                let mut note = |t: &Term, ms: &BTreeSet<Metric>| {
                    if let Term::Var(v) = t {
                        var_metrics
                            .entry(*v)
                            .or_default()
                            .extend(ms.iter().copied());
                    }
                };
                for (j, arg) in cl.head.args().iter().enumerate() {
                    note(arg, &metrics.of(pid, j));
                }
                let calls: Vec<&Term> = cl
                    .body
                    .iter()
                    .filter_map(|g| match g {
                        Goal::Call(t) => Some(t),
                        _ => None,
                    })
                    .collect();
                for t in &calls {
                    if let Some(q) = t.pred_id() {
                        for (k, arg) in t.args().iter().enumerate() {
                            note(arg, &metrics.of(q, k));
                        }
                    }
                }
                for t in &calls {
                    let Some(q) = t.pred_id() else { continue };
                    if asserted.contains(&q) || !program.has_pred(q) {
                        continue;
                    }
                    for (k, arg) in t.args().iter().enumerate() {
                        let Term::Var(v) = arg else { continue };
                        let Some(ms) = var_metrics.get(v) else {
                            continue;
                        };
                        for m in ms {
                            let entry = metrics.args.get_mut(&q).and_then(|a| a.get_mut(k));
                            if let Some(set) = entry {
                                if set.insert(*m) {
                                    changed = true;
                                }
                            }
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(metrics)
}

/// Lower/upper bounds on a size; `None` upper means unbounded.
#[derive(Clone, PartialEq, Debug)]
pub struct SizeBound {
    pub lo: PolyExp,
    pub hi: Option<PolyExp>,
}

impl SizeBound {
    pub fn unknown() -> SizeBound {
        SizeBound {
            lo: PolyExp::zero(),
            hi: None,
        }
    }

    pub fn exact(p: PolyExp) -> SizeBound {
        SizeBound {
            lo: p.clone(),
            hi: Some(p),
        }
    }

    pub fn constant(k: i64) -> SizeBound {
        SizeBound::exact(PolyExp::int(k))
    }

    pub fn add_const(&self, k: i64) -> SizeBound {
        SizeBound {
            lo: self.lo.add(&PolyExp::int(k)),
            hi: self.hi.as_ref().map(|h| h.add(&PolyExp::int(k))),
        }
    }

    fn contains_self(&self) -> bool {
        let s = self_sym();
        self.lo.vars().contains(&s)
            || self
                .hi
                .as_ref()
                .map(|h| h.vars().contains(&s))
                .unwrap_or(false)
    }
}

pub type SizeRelations = HashMap<(PredId, usize, Metric), SizeBound>;

/// Per-clause size environment: bounds for each (variable, metric).
#[derive(Clone, Debug, Default)]
pub struct SizeEnv {
    map: HashMap<(Sym, Metric), SizeBound>,
}

impl SizeEnv {
    pub fn get(&self, v: Sym, m: Metric) -> Option<&SizeBound> {
        self.map.get(&(v, m))
    }

    fn insert(&mut self, v: Sym, m: Metric, b: SizeBound) {
        self.map.entry((v, m)).or_insert(b);
    }

    pub fn insert_pub(&mut self, v: Sym, m: Metric, b: SizeBound) {
        self.insert(v, m, b);
    }
}

/// A call site discovered while walking a clause body.
#[derive(Clone, Debug)]
pub struct CallSite {
    pub callee: PredId,
    /// Bound for each (arg, metric) of the callee, in callee params when
    /// substituted by the caller.
    pub arg_sizes: std::collections::BTreeMap<(usize, Metric), SizeBound>,
    pub via_reify: bool,
}

#[derive(Clone, Debug)]
pub struct WalkedClause {
    pub env: SizeEnv,
    pub sites: Vec<CallSite>,
}

/// Size of a term under an environment.
pub fn term_size(t: &Term, m: Metric, env: &SizeEnv) -> SizeBound {
    match (m, t) {
        (Metric::Len, Term::Atom(a)) if a.name() == "[]" => SizeBound::constant(0),
        (Metric::Len, Term::Comp(f, parts)) if f.name() == "." && parts.len() == 2 => {
            term_size(&parts[1], Metric::Len, env).add_const(1)
        }
        (Metric::IntVal, Term::Int(n)) if *n >= 0 => SizeBound::constant(*n),
        (Metric::Depth, Term::Atom(_)) => SizeBound::constant(0),
        (Metric::Inner, Term::Atom(a)) if a.name() == "[]" => SizeBound::constant(0),
        // first element as the representative row length (rectangular use)
        (Metric::Inner, Term::Comp(f, parts)) if f.name() == "." && parts.len() == 2 => {
            term_size(&parts[0], Metric::Len, env)
        }
        (_, Term::Var(v)) => env.get(*v, m).cloned().unwrap_or_else(SizeBound::unknown),
        _ => SizeBound::unknown(),
    }
}

fn subst_bound(rel: &SizeBound, bindings: &HashMap<Sym, SizeBound>) -> SizeBound {
    // lower side: substitute lower bounds; upper: upper bounds.
    // assumes relations are monotone in their parameters.
    let mut lo = rel.lo.clone();
    for (p, b) in bindings {
        match lo.subst(*p, &b.lo) {
            Some(next) => lo = next,
            None => return SizeBound::unknown(),
        }
    }
    let hi = match &rel.hi {
        None => None,
        Some(h) => {
            let mut h = h.clone();
            let mut ok = true;
            for (p, b) in bindings {
                if !h.vars().contains(p) {
                    continue;
                }
                match &b.hi {
                    None => {
                        ok = false;
                        break;
                    }
                    Some(bh) => match h.subst(*p, bh) {
                        Some(next) => h = next,
                        None => {
                            ok = false;
                            break;
                        }
                    },
                }
            }
            if ok {
                Some(h)
            } else {
                None
            }
        }
    };
    SizeBound { lo, hi }
}

/// Populate the environment from an input argument's head pattern.
fn bind_input_pattern(
    env: &mut SizeEnv,
    pid: PredId,
    arg_index: usize,
    pattern: &Term,
    metrics: &Metrics,
) {
    let ms = metrics.of(pid, arg_index);
    for m in &ms {
        let p = PolyExp::var(param(pid, arg_index, *m));
        match (m, pattern) {
            (Metric::Len, Term::Var(v)) => {
                env.insert(*v, Metric::Len, SizeBound::exact(p.clone()));
            }
            (Metric::Len, _) => {
                // cons chain [X,Y|T]: tail gets param - k, elements get
                // the inner length when tracked
                let mut depth = 0i64;
                let mut cur = pattern;
                loop {
                    match cur {
                        Term::Comp(f, parts) if f.name() == "." && parts.len() == 2 => {
                            depth += 1;
                            if let Term::Var(x) = &parts[0] {
                                if ms.contains(&Metric::Inner) {
                                    env.insert(
                                        *x,
                                        Metric::Len,
                                        SizeBound::exact(PolyExp::var(param(
                                            pid,
                                            arg_index,
                                            Metric::Inner,
                                        ))),
                                    );
                                }
                            }
                            cur = &parts[1];
                        }
                        Term::Var(v) => {
                            let tail = SizeBound::exact(p.add(&PolyExp::int(-depth)));
                            env.insert(*v, Metric::Len, tail);
                            if ms.contains(&Metric::Inner) {
                                env.insert(
                                    *v,
                                    Metric::Inner,
                                    SizeBound::exact(PolyExp::var(param(
                                        pid,
                                        arg_index,
                                        Metric::Inner,
                                    ))),
                                );
                            }
                            break;
                        }
                        _ => break,
                    }
                }
            }
            (Metric::Inner, Term::Var(v)) => {
                env.insert(*v, Metric::Inner, SizeBound::exact(p.clone()));
            }
            (Metric::Depth, Term::Var(v)) => {
                env.insert(*v, Metric::Depth, SizeBound::exact(p.clone()));
            }
            (Metric::Depth, Term::Comp(_, parts)) => {
                // children of a depth-d tree: depth between 0 and d-1
                for part in parts {
                    if let Term::Var(v) = part {
                        env.insert(
                            *v,
                            Metric::Depth,
                            SizeBound {
                                lo: PolyExp::zero(),
                                hi: Some(p.add(&PolyExp::int(-1))),
                            },
                        );
                    }
                }
            }
            (Metric::IntVal, Term::Var(v)) => {
                env.insert(*v, Metric::IntVal, SizeBound::exact(p.clone()));
            }
            _ => {}
        }
    }
}

/// Walk one clause: bind head-pattern sizes, then process body calls in
/// order, deriving output sizes from callee relations. In size mode
/// (`solving` set), outputs of in-SCC calls for the solved position are
/// the reserved `#self` symbol.
#[allow(clippy::too_many_arguments)]
pub fn walk_clause(
    program: &Program,
    metrics: &Metrics,
    rels: &SizeRelations,
    scc: &[PredId],
    pid: PredId,
    clause_head: &Term,
    clause_body: &[Goal],
    solving: Option<(usize, Metric)>,
) -> WalkedClause {
    let mut env = SizeEnv::default();
    for (j, arg) in clause_head.args().iter().enumerate() {
        if metrics.is_output(pid, j) {
            continue;
        }
        bind_input_pattern(&mut env, pid, j, arg, metrics);
    }
    walk_body(program, metrics, rels, scc, env, clause_body, solving)
}

/// Walk a body under a caller-provided environment (used for checker
/// clauses whose argument sizes come from the wrapped predicate).
pub fn walk_with_env(
    program: &Program,
    metrics: &Metrics,
    rels: &SizeRelations,
    scc: &[PredId],
    env: SizeEnv,
    clause_body: &[Goal],
) -> WalkedClause {
    walk_body(program, metrics, rels, scc, env, clause_body, None)
}

fn walk_body(
    program: &Program,
    metrics: &Metrics,
    rels: &SizeRelations,
    scc: &[PredId],
    mut env: SizeEnv,
    clause_body: &[Goal],
    solving: Option<(usize, Metric)>,
) -> WalkedClause {
    // collect call/reify targets in body order
    let calls: Vec<(&Term, bool)> = clause_body
        .iter()
        .filter_map(|g| match g {
            Goal::Call(t) => Some((t, false)),
            Goal::ReifyCheck(p, _) => Some((p, true)),
            _ => None,
        })
        .filter(|(t, _)| {
            t.pred_id()
                .map(|q| {
                    program.has_pred(q)
                        || crate::lang::program::TestKind::from_name(&q.name.name()).is_some()
                })
                .unwrap_or(false)
        })
        .collect();

    // Two binding passes: first the declared outputs of asserted callees
    // (this pins recursion outputs even when an earlier helper consumes
    // the same variable), then everything a size relation can supply.
    let mut sites = vec![];
    for pass in 0..2 {
        if pass == 1 {
            sites.clear();
        }
        for (t, via_reify) in &calls {
            let q = t.pred_id().expect("filtered above");
            let mut arg_sizes: std::collections::BTreeMap<(usize, Metric), SizeBound> =
                std::collections::BTreeMap::new();
            let mut bindings: HashMap<Sym, SizeBound> = HashMap::new();
            for (k, arg) in t.args().iter().enumerate() {
                for m in metrics.of(q, k) {
                    let sz = term_size(arg, m, &env);
                    bindings.insert(param(q, k, m), sz.clone());
                    arg_sizes.insert((k, m), sz);
                }
            }
            for (k, arg) in t.args().iter().enumerate() {
                let Term::Var(v) = arg else { continue };
                let declared_out = metrics.is_output(q, k);
                if pass == 0 && !declared_out {
                    continue;
                }
                for m in metrics.of(q, k) {
                    if env.get(*v, m).is_some() {
                        continue;
                    }
                    let in_scc = scc.contains(&q);
                    let bound = if in_scc {
                        match solving {
                            Some((sj, sm)) if sj == k && sm == m => {
                                SizeBound::exact(PolyExp::var(self_sym()))
                            }
                            _ => match rels.get(&(q, k, m)) {
                                Some(rel) => subst_bound(rel, &bindings),
                                None => SizeBound::unknown(),
                            },
                        }
                    } else {
                        match rels.get(&(q, k, m)) {
                            Some(rel) => subst_bound(rel, &bindings),
                            None => SizeBound::unknown(),
                        }
                    };
                    env.insert(*v, m, bound);
                }
            }
            if pass == 1 {
                sites.push(CallSite {
                    callee: q,
                    arg_sizes,
                    via_reify: *via_reify,
                });
            }
        }
    }
    WalkedClause { env, sites }
}

/// Guard on the primary (arg, metric) induced by a head pattern.
pub fn pattern_guard(pattern: &Term, m: Metric) -> Guard {
    match (m, pattern) {
        (Metric::Len, Term::Atom(a)) if a.name() == "[]" => Guard::Exactly(0),
        (Metric::Len, Term::Comp(f, parts)) if f.name() == "." && parts.len() == 2 => {
            let mut k = 1;
            let mut cur = &parts[1];
            loop {
                match cur {
                    Term::Comp(g, ps) if g.name() == "." && ps.len() == 2 => {
                        k += 1;
                        cur = &ps[1];
                    }
                    Term::Atom(a) if a.name() == "[]" => return Guard::Exactly(k),
                    _ => return Guard::AtLeast(k),
                }
            }
        }
        (Metric::Depth, Term::Atom(_)) => Guard::Exactly(0),
        (Metric::Depth, Term::Comp(..)) => Guard::AtLeast(1),
        (Metric::IntVal, Term::Int(n)) if *n >= 0 => Guard::Exactly(*n as u32),
        _ => Guard::AtLeast(0),
    }
}

/// The call graph restricted to defined predicates, including reified
/// property calls.
pub fn call_graph_sccs(program: &Program) -> Vec<Vec<PredId>> {
    let nodes: Vec<PredId> = program.pred_ids().to_vec();
    recur::sccs(&nodes, |p| program.callees(p))
}

/// Solve output-size relations for all predicates, bottom-up by SCC.
/// Unsolvable sizes fall back to `[0, infinity)`.
pub fn solve_sizes(program: &Program, metrics: &Metrics) -> SizeRelations {
    let mut rels: SizeRelations = HashMap::new();
    for scc in call_graph_sccs(program) {
        // iterate within the SCC so mutually dependent outputs settle
        for _ in 0..2 {
            for &pid in &scc {
                solve_pred_sizes(program, metrics, &mut rels, &scc, pid);
            }
        }
    }
    rels
}

fn solve_pred_sizes(
    program: &Program,
    metrics: &Metrics,
    rels: &mut SizeRelations,
    scc: &[PredId],
    pid: PredId,
) {
    if program.is_prop(pid) {
        return; // properties have no output sizes to relate
    }
    // wrapper predicates inherit the renamed body's size behaviour; walk
    // the clauses that actually decompose arguments
    let clauses_src = size_clause_source(program, scc, pid);
    let declared = metrics
        .outputs
        .get(&pid)
        .map(|o| !o.is_empty())
        .unwrap_or(false);
    for j in 0..pid.arity {
        if declared && !metrics.is_output(pid, j) {
            continue; // an input of an asserted predicate
        }
        for m in metrics.of(pid, j) {
            if rels.contains_key(&(pid, j, m)) {
                continue;
            }
            if let Some(b) = solve_one_size(program, metrics, rels, scc, pid, clauses_src, j, m) {
                // a relation equal to the argument's own parameter marks
                // a plain input; store nothing for those
                let own = PolyExp::var(param(pid, j, m));
                if b.lo == own && b.hi.as_ref() == Some(&own) {
                    continue;
                }
                rels.insert((pid, j, m), b);
            }
        }
    }
}

/// For full-scenario wrappers, size recurrences live in the renamed
/// predicate's clauses with self-calls pointing back at the wrapper.
fn size_clause_source(program: &Program, scc: &[PredId], pid: PredId) -> PredId {
    use crate::lang::program::PredRole;
    if program.role(pid) == PredRole::Wrapper {
        for &m in scc {
            if program.role(m) == PredRole::Renamed {
                return m;
            }
        }
    }
    pid
}

#[allow(clippy::too_many_arguments)]
fn solve_one_size(
    program: &Program,
    metrics: &Metrics,
    rels: &SizeRelations,
    scc: &[PredId],
    pid: PredId,
    clauses_of: PredId,
    j: usize,
    m: Metric,
) -> Option<SizeBound> {
    let clauses = program.clauses_of(clauses_of);
    if clauses.is_empty() {
        return None;
    }

    // walk every clause, collecting out-size formulas (#self marks the
    // recursive output) and the recursion shift across all clauses
    let mut walked_sizes: Vec<SizeBound> = vec![];
    let mut primary: Option<(usize, Metric)> = None;
    for cl in clauses {
        let walked = walk_clause(
            program,
            metrics,
            rels,
            scc,
            clauses_of,
            &cl.head,
            &cl.body,
            Some((j, m)),
        );
        let out = cl.head.args().get(j)?;
        walked_sizes.push(out_term_size(out, m, &walked.env));
        for site in &walked.sites {
            if !scc.contains(&site.callee) {
                continue;
            }
            let mut candidates: Vec<(usize, Metric)> = vec![];
            for ((k, mm), sz) in &site.arg_sizes {
                if let Some(hi) = &sz.hi {
                    // wrappers pass arguments through positionally, so the
                    // shift is visible in the walked predicate's params
                    let pvar = PolyExp::var(param(clauses_of, *k, *mm));
                    if *hi == pvar.add(&PolyExp::int(-1)) {
                        candidates.push((*k, *mm));
                    }
                }
            }
            candidates.sort();
            if let Some(first) = candidates.first() {
                let cur = primary.get_or_insert(*first);
                if *first < *cur {
                    *cur = *first;
                }
            }
        }
    }
    let mut per_clause: Vec<(Guard, SizeBound)> = vec![];
    for (cl, size) in clauses.iter().zip(walked_sizes) {
        let guard = match primary {
            Some((k, mm)) => cl
                .head
                .args()
                .get(k)
                .map(|p| pattern_guard(p, mm))
                .unwrap_or(Guard::AtLeast(0)),
            None => Guard::AtLeast(0),
        };
        per_clause.push((guard, size));
    }

    let selfs = self_sym();
    let has_self = per_clause.iter().any(|(_, b)| b.contains_self());
    // relations are expressed over the walked predicate's parameters;
    // wrapper results rename to the wrapper's own
    let rename_out = |b: SizeBound| -> Option<SizeBound> {
        if clauses_of == pid {
            return Some(b);
        }
        let ren = |p: PolyExp| -> Option<PolyExp> {
            let mut out = p;
            for k in 0..pid.arity {
                for mm in metrics.of(clauses_of, k) {
                    let from = param(clauses_of, k, mm);
                    let to = PolyExp::var(param(pid, k, mm));
                    out = out.subst(from, &to)?;
                }
            }
            Some(out)
        };
        Some(SizeBound {
            lo: ren(b.lo)?,
            hi: match b.hi {
                None => None,
                Some(h) => Some(ren(h)?),
            },
        })
    };
    if !has_self {
        // non-recursive join: min of lowers, max of uppers
        let lows: Vec<PolyExp> = per_clause.iter().map(|(_, b)| b.lo.clone()).collect();
        let lo = recur::select_dominant(&lows, Mode::Lower).unwrap_or(PolyExp::zero());
        let his: Option<Vec<PolyExp>> = per_clause.iter().map(|(_, b)| b.hi.clone()).collect();
        let hi = his.and_then(|hs| recur::select_dominant(&hs, Mode::Upper));
        return rename_out(SizeBound { lo, hi });
    }

    // recursive: build one recurrence per bound side
    let (parg, pm) = primary?;
    let prim = param(clauses_of, parg, pm);
    let build = |side_hi: bool| -> Option<PolyExp> {
        let mut eqs = vec![];
        for (guard, b) in &per_clause {
            let side = if side_hi { b.hi.clone()? } else { b.lo.clone() };
            // side = self_coeff * #self + add
            let mut self_coeff = 0u32;
            let mut add = PolyExp::zero();
            for t in &side.terms {
                if t.mono.get(&selfs).copied().unwrap_or(0) > 0 || t.exps.contains_key(&selfs) {
                    if t.mono.get(&selfs) == Some(&1)
                        && t.mono.len() == 1
                        && t.exps.is_empty()
                        && t.coeff == crate::lang::poly::rat(1)
                    {
                        self_coeff += 1;
                    } else {
                        return None;
                    }
                } else {
                    add = add.add(&PolyExp {
                        terms: vec![t.clone()],
                    });
                }
            }
            eqs.push(crate::recur::Equation {
                guard: *guard,
                add,
                self_calls: self_coeff,
                loose_lower: false,
            });
        }
        let rec = Recurrence {
            primary: prim,
            equations: eqs,
        };
        recur::solve(&rec, if side_hi { Mode::Upper } else { Mode::Lower })
    };
    let lo = build(false).unwrap_or(PolyExp::zero());
    let hi = build(true);
    rename_out(SizeBound { lo, hi })
}

/// Size of an output head pattern at clause success.
fn out_term_size(t: &Term, m: Metric, env: &SizeEnv) -> SizeBound {
    term_size(t, m, env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{solve as run, SolveOptions};
    use crate::lang::poly::rat;
    use crate::lang::tests::REV_SRC;
    use crate::lang::{normalize_assertions, parse_goal_term, parse_program, prelude};

    fn prep(src: &str) -> Program {
        prelude::extend(&normalize_assertions(&parse_program(src).unwrap()).unwrap())
    }

    const APP_SRC: &str = "\
:- export(app/3).
:- check pred app(A,B,C) : (list(A),list(B),var(C)) => (list(A),list(B),list(C)).
app([], B, B).
app([X|Xs], B, [X|Ys]) :- app(Xs, B, Ys).
";

    #[test]
    fn metrics_for_rev_example() {
        let p = prep(REV_SRC);
        let m = infer_metrics(&p, PredId::new("rev", 2)).unwrap();
        let rev = PredId::new("rev", 2);
        let app = PredId::new("app", 3);
        assert_eq!(m.of(rev, 0), BTreeSet::from([Metric::Len]));
        assert!(m.is_output(rev, 1));
        assert_eq!(m.of(app, 0), BTreeSet::from([Metric::Len]));
        assert!(m.of(app, 1).is_empty(), "term arg carries no metric");
        assert!(m.is_output(app, 2));
    }

    #[test]
    fn metrics_integer_argument() {
        let p = prep(":- check pred f(A,B) : (nat(A),var(B)).\nf(0,z).\n");
        let m = infer_metrics(&p, PredId::new("f", 2)).unwrap();
        assert_eq!(
            m.of(PredId::new("f", 2), 0),
            BTreeSet::from([Metric::IntVal])
        );
    }

    #[test]
    fn metrics_tree_depth_from_declared_property() {
        let src = "\
:- prop(bst/1).
bst(leaf).
bst(node(L,V,R)) :- num(V), bst(L), bst(R).
:- check pred bsts(N,T) : (num(N), bst(T)).
bsts(N,T) :- bmemb(N,T).
bmemb(N, node(_,V,_)) :- N =:= V.
bmemb(N, node(L,V,_)) :- N < V, bmemb(N,L).
bmemb(N, node(_,V,R)) :- N > V, bmemb(N,R).
";
        let p = prep(src);
        let m = infer_metrics(&p, PredId::new("bsts", 2)).unwrap();
        assert_eq!(
            m.of(PredId::new("bsts", 2), 1),
            BTreeSet::from([Metric::Depth])
        );
    }

    #[test]
    fn entry_without_assertion_is_an_error() {
        let p = prep("f(a).\n");
        assert!(matches!(
            infer_metrics(&p, PredId::new("f", 1)),
            Err(AnalysisError::NoEntryAssertion(_))
        ));
    }

    #[test]
    fn app_output_length_is_sum_of_inputs() {
        let p = prep(APP_SRC);
        let app = PredId::new("app", 3);
        let m = infer_metrics(&p, app).unwrap();
        let rels = solve_sizes(&p, &m);
        let r = &rels[&(app, 2, Metric::Len)];
        let expect =
            PolyExp::var(param(app, 0, Metric::Len)).add(&PolyExp::var(param(app, 1, Metric::Len)));
        assert_eq!(r.lo, expect);
        assert_eq!(r.hi, Some(expect.clone()));
        // oracle: enumerate runs for all sizes <= 6 and compare
        for la in 0..=6usize {
            for lb in 0..=6usize {
                let mk = |n: usize| {
                    let items: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
                    format!("[{}]", items.join(","))
                };
                let goal = parse_goal_term(&format!("app({},{},C)", mk(la), mk(lb))).unwrap();
                let res = run(&p, &goal, &[], SolveOptions::default()).unwrap();
                let out = &res.answers[0][0].1;
                let measured = out.matches("e").count();
                let env = std::collections::BTreeMap::from([
                    (param(app, 0, Metric::Len), rat(la as i64)),
                    (param(app, 1, Metric::Len), rat(lb as i64)),
                ]);
                assert_eq!(r.lo.eval(&env).unwrap(), rat(measured as i64));
            }
        }
    }

    #[test]
    fn rev_output_length_is_input_length() {
        let p = prep(REV_SRC);
        let rev = PredId::new("rev", 2);
        let m = infer_metrics(&p, rev).unwrap();
        let rels = solve_sizes(&p, &m);
        let r = &rels[&(rev, 1, Metric::Len)];
        let expect = PolyExp::var(param(rev, 0, Metric::Len));
        assert_eq!(r.lo, expect);
        assert_eq!(r.hi, Some(expect));
    }

    #[test]
    fn identity_fact_propagates_size() {
        let p = prep(":- check pred q(X,Y) : (list(X),var(Y)) => list(Y).\nq(X,X).\n");
        let q = PredId::new("q", 2);
        let m = infer_metrics(&p, q).unwrap();
        let rels = solve_sizes(&p, &m);
        let r = &rels[&(q, 1, Metric::Len)];
        assert_eq!(r.lo, PolyExp::var(param(q, 0, Metric::Len)));
    }

    #[test]
    fn filtering_recursion_gets_interval_bounds() {
        let src = "\
:- export(ldiff/3).
:- check pred ldiff(A,B,C) : (list(A),list(B),var(C)) => list(C).
ldiff([], _, []).
ldiff([X|Xs], B, C) :- inb(X, B, R), pick(R, X, Cs, C), ldiff(Xs, B, Cs).
inb(_, [], 0).
inb(X, [Y|_], 1) :- X == Y.
inb(X, [Y|Ys], R) :- X \\== Y, inb(X, Ys, R).
pick(1, _, Cs, Cs).
pick(0, X, Cs, [X|Cs]).
";
        let p = prep(src);
        let ldiff = PredId::new("ldiff", 3);
        let m = infer_metrics(&p, ldiff).unwrap();
        let rels = solve_sizes(&p, &m);
        let r = &rels[&(ldiff, 2, Metric::Len)];
        assert_eq!(r.lo, PolyExp::zero());
        assert_eq!(r.hi, Some(PolyExp::var(param(ldiff, 0, Metric::Len))));
    }

    #[test]
    fn sizes_flow_through_full_instrumentation() {
        use crate::instrument::{apply_scenario, Scenario};
        let p = prep(REV_SRC);
        let inst = apply_scenario(&p, &Scenario::Full).unwrap();
        let rev = PredId::new("rev", 2);
        let m = infer_metrics(&inst.program, rev).unwrap();
        let rels = solve_sizes(&inst.program, &m);
        let r = &rels[&(rev, 1, Metric::Len)];
        assert_eq!(r.lo, PolyExp::var(param(rev, 0, Metric::Len)));
        assert_eq!(r.hi, Some(PolyExp::var(param(rev, 0, Metric::Len))));
    }

    #[test]
    fn small_term_size_safety() {
        // measured output sizes stay inside [lo, hi] for exhaustive
        // small inputs on the append program
        let p = prep(APP_SRC);
        let app = PredId::new("app", 3);
        let m = infer_metrics(&p, app).unwrap();
        let rels = solve_sizes(&p, &m);
        let r = &rels[&(app, 2, Metric::Len)];
        for la in 0..=8usize {
            let items: Vec<String> = (0..la).map(|i| format!("x{i}")).collect();
            let goal = parse_goal_term(&format!("app([{}],[y],C)", items.join(","))).unwrap();
            let res = run(&p, &goal, &[], SolveOptions::default()).unwrap();
            let out_len = res.answers[0][0].1.split(',').count();
            let env = std::collections::BTreeMap::from([
                (param(app, 0, Metric::Len), rat(la as i64)),
                (param(app, 1, Metric::Len), rat(1)),
            ]);
            let lo = r.lo.eval(&env).unwrap();
            let hi = r.hi.as_ref().unwrap().eval(&env).unwrap();
            assert!(rat(out_len as i64) >= lo && rat(out_len as i64) <= hi);
        }
    }
}
