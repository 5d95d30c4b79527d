//! Cost recurrences, closed-form bounds, accumulated per-center costs,
//! overhead ratios, asymptotic orders, and hot-spot ranking.
//!
//! Costs are solved SCC by SCC over the (possibly instrumented) program.
//! A predicate's clauses yield recurrence equations whose steps are the
//! cost-model charges plus closed forms of callee costs at the argument
//! sizes the size analysis provides. Full-scenario wrappers form an SCC
//! with their checkers and renamed body; their equations come from the
//! renamed clauses plus a per-level overhead for the check blocks.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::error::AnalysisError;
use crate::instrument::{apply_scenario, InstrumentedProgram, Scenario};
use crate::interp::CenterId;
use crate::lang::assertion::AssertionStatus;
use crate::lang::poly::{rat, PolyExp, Rat};
use crate::lang::program::{CostModel, Goal, PredRole, TestKind};
use crate::lang::{CostExpr, PredId, Program, Sym, Term};
use crate::recur::{self, Equation, Guard, Mode, Recurrence};
use crate::sizes::{
    self, call_graph_sccs, infer_metrics, param, pattern_guard, solve_sizes, Metric, Metrics,
    SizeBound, SizeRelations,
};

/// Closed-form lower/upper cost bounds; `upper == None` means unbounded.
#[derive(Clone, PartialEq, Debug)]
pub struct Bound {
    pub lower: PolyExp,
    pub upper: Option<PolyExp>,
}

impl Bound {
    pub fn exact(&self) -> bool {
        self.upper.as_ref() == Some(&self.lower)
    }

    pub fn unknown() -> Bound {
        Bound {
            lower: PolyExp::zero(),
            upper: None,
        }
    }

    pub fn zero() -> Bound {
        Bound {
            lower: PolyExp::zero(),
            upper: Some(PolyExp::zero()),
        }
    }

    pub fn constant(k: i64) -> Bound {
        Bound {
            lower: PolyExp::int(k),
            upper: Some(PolyExp::int(k)),
        }
    }

    pub fn add(&self, other: &Bound) -> Bound {
        Bound {
            lower: self.lower.add(&other.lower),
            upper: match (&self.upper, &other.upper) {
                (Some(a), Some(b)) => Some(a.add(b)),
                _ => None,
            },
        }
    }

    pub fn upper_expr(&self) -> CostExpr {
        match &self.upper {
            Some(u) => CostExpr::from_polyexp(u),
            None => CostExpr::Infinity,
        }
    }

    pub fn lower_expr(&self) -> CostExpr {
        CostExpr::from_polyexp(&self.lower)
    }
}

/// Which slice of the cost a solve computes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
enum Projection {
    /// Everything (the standard cost).
    Standard,
    /// Steps not captured by any center inside the call: they belong to
    /// the nearest enclosing center of the caller.
    Escape,
    /// Steps attributed to one center within the call.
    Captured(CenterId),
}

/// Where a single contribution lands at run time.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Route {
    Center(CenterId),
    Outer,
}

struct Ctx<'a> {
    program: &'a Program,
    metrics: &'a Metrics,
    rels: &'a SizeRelations,
    model: CostModel,
    centers: Vec<CenterId>,
    /// solved per-predicate, per-projection bounds
    table: HashMap<(PredId, Projection), Bound>,
}

impl<'a> Ctx<'a> {
    fn is_center(&self, pid: PredId) -> bool {
        self.centers.contains(&CenterId::Pred(pid))
    }

    /// Context of a member's body inside the SCC of `rep`.
    fn body_ctx(&self, member: PredId, rep: PredId) -> Route {
        if self.is_center(member) {
            Route::Center(CenterId::Pred(member))
        } else if self.is_center(rep) {
            Route::Center(CenterId::Pred(rep))
        } else {
            Route::Outer
        }
    }

    /// Attribution of a member's clause step.
    fn clause_route(&self, member: PredId, rep: PredId) -> Route {
        match self.program.role(member) {
            PredRole::Wrapper
            | PredRole::CheckerC
            | PredRole::CheckerS
            | PredRole::InterfaceSplit => {
                if let Some(fp) = self.program.first_prop.get(&member) {
                    if self.is_center(*fp) {
                        return Route::Center(CenterId::Pred(*fp));
                    }
                }
                self.body_ctx(member, rep)
            }
            _ => self.body_ctx(member, rep),
        }
    }

    fn bitops_route(&self, member: PredId, rep: PredId) -> Route {
        if self.centers.contains(&CenterId::BitOps) {
            Route::Center(CenterId::BitOps)
        } else {
            self.body_ctx(member, rep)
        }
    }

    fn include(&self, proj: &Projection, route: Route) -> bool {
        match proj {
            Projection::Standard => true,
            Projection::Escape => route == Route::Outer,
            Projection::Captured(c) => route == Route::Center(*c),
        }
    }

    /// Cost contributed by a call to solved predicate `q` under `proj`,
    /// seen from a body whose context is `ctx`.
    fn callee_cost(
        &self,
        q: PredId,
        bindings: &HashMap<Sym, SizeBound>,
        proj: &Projection,
        ctx: Route,
    ) -> Bound {
        let lookup = |p: Projection| -> Bound {
            self.table
                .get(&(q, p))
                .cloned()
                .unwrap_or_else(Bound::unknown)
        };
        let subst = |b: &Bound| subst_cost(b, bindings);
        match proj {
            Projection::Standard => subst(&lookup(Projection::Standard)),
            _ => {
                let mut total = Bound::zero();
                if self.is_center(q) {
                    // q claims its own escaped steps
                    let inner = match proj {
                        Projection::Captured(c) if *c == CenterId::Pred(q) => {
                            lookup(Projection::Escape)
                        }
                        _ => Bound::zero(),
                    };
                    total = total.add(&subst(&inner));
                } else {
                    // q's escaped steps flow to the caller's context
                    let goes_here = match proj {
                        Projection::Captured(c) => ctx == Route::Center(*c),
                        Projection::Escape => ctx == Route::Outer,
                        Projection::Standard => unreachable!(),
                    };
                    if goes_here {
                        total = total.add(&subst(&lookup(Projection::Escape)));
                    }
                }
                if let Projection::Captured(c) = proj {
                    total = total.add(&subst(&lookup(Projection::Captured(*c))));
                }
                total
            }
        }
    }
}

/// Substitute size parameters into a bound (lowers into the lower side,
/// uppers into the upper side; cost functions are monotone in sizes).
fn subst_cost(b: &Bound, bindings: &HashMap<Sym, SizeBound>) -> Bound {
    let mut lo = b.lower.clone();
    for (p, sb) in bindings {
        match lo.subst(*p, &sb.lo) {
            Some(next) => lo = next,
            None => return Bound::unknown(),
        }
    }
    let hi = match &b.upper {
        None => None,
        Some(h) => {
            let mut h = h.clone();
            let mut ok = true;
            for (p, sb) in bindings {
                if !h.vars().contains(p) {
                    continue;
                }
                match &sb.hi {
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
    Bound {
        lower: lo,
        upper: hi,
    }
}

/// One clause's cost contribution before recurrence solving.
struct ClauseCost {
    guard: Guard,
    lo: PolyExp,
    hi: Option<PolyExp>,
    self_calls: u32,
    /// every self call's lower size shift is exactly primary - 1
    lower_shift_exact: bool,
}

/// Size bindings for a callee's parameters at a call site.
fn site_bindings(
    callee: PredId,
    arg_sizes: &std::collections::BTreeMap<(usize, Metric), SizeBound>,
) -> HashMap<Sym, SizeBound> {
    arg_sizes
        .iter()
        .map(|((k, m), sz)| (param(callee, *k, *m), sz.clone()))
        .collect()
}

/// Cost of one body, given the walked call sites in order.
#[allow(clippy::too_many_arguments)]
fn body_cost(
    ctx: &Ctx<'_>,
    proj: &Projection,
    member: PredId,
    rep: PredId,
    scc: &[PredId],
    body: &[Goal],
    sites: &[sizes::CallSite],
    out: &mut ClauseCost,
) -> Option<()> {
    let mctx = ctx.body_ctx(member, rep);
    let add_charge = |amount: u64, route: Route, out: &mut ClauseCost| {
        if amount == 0 || !ctx.include(proj, route) {
            return;
        }
        let c = PolyExp::int(amount as i64);
        out.lo = out.lo.add(&c);
        out.hi = out.hi.as_ref().map(|h| h.add(&c));
    };
    let add_bound = |b: Bound, out: &mut ClauseCost| {
        out.lo = out.lo.add(&b.lower);
        out.hi = match (&out.hi, &b.upper) {
            (Some(a), Some(bb)) => Some(a.add(bb)),
            _ => None,
        };
    };

    let mut site_iter = sites.iter();
    for g in body {
        match g {
            Goal::True => {}
            Goal::Is(..) => add_charge(ctx.model.is_goal, mctx, out),
            Goal::BitCombine(..) => {
                add_charge(ctx.model.is_goal, ctx.bitops_route(member, rep), out)
            }
            Goal::Compare(..) | Goal::TermCmp(..) => add_charge(ctx.model.compare, mctx, out),
            Goal::TypeTest(..) => add_charge(ctx.model.type_test, mctx, out),
            Goal::WarnIfFalse(..) => add_charge(ctx.model.warn, mctx, out),
            Goal::ReifyCheck(p, _) => {
                add_charge(ctx.model.reify, mctx, out);
                let Some(q) = p.pred_id() else { continue };
                // advance to this site
                let site = site_iter.find(|s| s.via_reify && s.callee == q)?;
                if let Some(k) = TestKind::from_name(&q.name.name()) {
                    let _ = k;
                    let route = if ctx.is_center(q) {
                        Route::Center(CenterId::Pred(q))
                    } else {
                        mctx
                    };
                    add_charge(ctx.model.type_test, route, out);
                    continue;
                }
                if scc.contains(&q) {
                    return None; // property recursion into the SCC
                }
                let bindings = site_bindings(q, &site.arg_sizes);
                let b = ctx.callee_cost(q, &bindings, proj, mctx);
                add_bound(b, out);
            }
            Goal::Call(t) => {
                let Some(q) = t.pred_id() else { continue };
                if let Some(_k) = TestKind::from_name(&q.name.name()) {
                    if !ctx.program.has_pred(q) {
                        add_charge(ctx.model.type_test, mctx, out);
                        continue;
                    }
                }
                if !ctx.program.has_pred(q) {
                    continue;
                }
                let site = site_iter.find(|s| !s.via_reify && s.callee == q)?;
                if scc.contains(&q) {
                    if q == rep {
                        out.self_calls += 1;
                        // shift soundness is validated by the caller
                        continue;
                    }
                    return None; // non-representative mutual recursion
                }
                let bindings = site_bindings(q, &site.arg_sizes);
                let b = ctx.callee_cost(q, &bindings, proj, mctx);
                add_bound(b, out);
            }
        }
    }
    Some(())
}

/// Representative of an SCC: the wrapper when the SCC is a full-scenario
/// wrap group, otherwise the single member.
fn per_clause_uses(p: &PolyExp, v: Sym) -> bool {
    p.vars().contains(&v)
}

fn scc_rep(program: &Program, scc: &[PredId]) -> Option<(PredId, PredId)> {
    if scc.len() == 1 {
        return Some((scc[0], scc[0]));
    }
    let wrapper = scc
        .iter()
        .find(|p| program.role(**p) == PredRole::Wrapper)?;
    let renamed = scc
        .iter()
        .find(|p| program.role(**p) == PredRole::Renamed)?;
    Some((*wrapper, *renamed))
}

/// Per-level overhead of a wrapper: its own clause step, plus each
/// checker's clause step and check body, evaluated at the renamed
/// predicate's parameters.
fn wrapper_overhead(
    ctx: &Ctx<'_>,
    proj: &Projection,
    scc: &[PredId],
    wrapper: PredId,
    renamed: PredId,
) -> Option<ClauseCost> {
    let mut out = ClauseCost {
        guard: Guard::AtLeast(0),
        lo: PolyExp::zero(),
        hi: Some(PolyExp::zero()),
        self_calls: 0,
        lower_shift_exact: true,
    };
    // wrapper clause step
    if ctx.include(proj, ctx.clause_route(wrapper, wrapper)) {
        let c = PolyExp::int(ctx.model.clause as i64);
        out.lo = out.lo.add(&c);
        out.hi = out.hi.map(|h| h.add(&c));
    }
    let wrapper_clause = &ctx.program.clauses_of(wrapper)[0];
    for g in &wrapper_clause.body {
        let Goal::Call(t) = g else { continue };
        let q = t.pred_id()?;
        if q == renamed {
            continue; // the renamed clauses carry their own steps
        }
        // checker: clause step + body at wrapper sizes
        if ctx.include(proj, ctx.clause_route(q, wrapper)) {
            let c = PolyExp::int(ctx.model.clause as i64);
            out.lo = out.lo.add(&c);
            out.hi = out.hi.as_ref().map(|h| h.add(&c));
        }
        let checker_clause = &ctx.program.clauses_of(q)[0];
        // environment: checker head vars are the wrapper args positionally;
        // inputs get the renamed predicate's params, outputs the solved
        // output relation of the wrapper
        let mut env = sizes::SizeEnv::default();
        let owner = ctx.program.origin_owner.get(&q).copied().unwrap_or(wrapper);
        for (j, arg) in checker_clause.head.args().iter().enumerate() {
            let Term::Var(v) = arg else { continue };
            if j >= owner.arity {
                continue; // status variables carry no size
            }
            for m in ctx.metrics.of(wrapper, j) {
                if ctx.metrics.is_output(wrapper, j) {
                    if let Some(rel) = ctx.rels.get(&(wrapper, j, m)) {
                        // rename wrapper params to renamed params
                        let renamed_rel = rename_params(rel, ctx.metrics, wrapper, renamed)?;
                        env.insert_pub(*v, m, renamed_rel);
                    }
                } else {
                    env.insert_pub(*v, m, SizeBound::exact(PolyExp::var(param(renamed, j, m))));
                }
            }
        }
        let walked = sizes::walk_with_env(
            ctx.program,
            ctx.metrics,
            ctx.rels,
            scc,
            env,
            &checker_clause.body,
        );
        body_cost(
            ctx,
            proj,
            q,
            wrapper,
            scc,
            &checker_clause.body,
            &walked.sites,
            &mut out,
        )?;
        if out.self_calls > 0 {
            return None; // checkers must not recurse
        }
    }
    Some(out)
}

fn rename_params(b: &SizeBound, metrics: &Metrics, from: PredId, to: PredId) -> Option<SizeBound> {
    let ren = |p: &PolyExp| -> Option<PolyExp> {
        let mut out = p.clone();
        for k in 0..from.arity {
            for m in metrics.of(from, k) {
                out = out.subst(param(from, k, m), &PolyExp::var(param(to, k, m)))?;
            }
        }
        Some(out)
    };
    Some(SizeBound {
        lo: ren(&b.lo)?,
        hi: match &b.hi {
            None => None,
            Some(h) => Some(ren(h)?),
        },
    })
}

/// Build and solve the cost recurrence of one SCC under one projection;
/// store the result in the context table.
/// A trusted cost assertion on a predicate is taken as an analyzer input
/// fact: its function (with size-binding literals naming the parameters)
/// replaces analysis of that predicate.
fn trusted_bound(program: &Program, pid: PredId) -> Option<Bound> {
    for a in program.assertions_of(pid) {
        if a.status != AssertionStatus::Trust {
            continue;
        }
        let spec = a.comp.iter().find(|c| {
            c.resource.name() == "steps" && c.kind == crate::lang::assertion::CostKind::Std
        })?;
        // map size names from the assertion's binding literals to params
        let head_vars = a.head_vars();
        let mut names: Vec<(Sym, Sym)> = vec![];
        if let Some(pre) = &a.pre {
            for lit in pre.lits() {
                let Some(p) = lit.pred_id() else { continue };
                if p.arity != 2 {
                    continue;
                }
                let m = match p.name.name().as_str() {
                    "length" => Metric::Len,
                    "row_length" => Metric::Inner,
                    "depth" => Metric::Depth,
                    "value" => Metric::IntVal,
                    _ => continue,
                };
                if let (Some(Term::Var(x)), Some(Term::Var(k))) =
                    (lit.args().first(), lit.args().get(1))
                {
                    if let Some(j) = head_vars.iter().position(|h| h == x) {
                        names.push((*k, param(pid, j, m)));
                    }
                }
            }
        }
        let to_poly = |e: &CostExpr| -> Option<PolyExp> {
            let mut p = e.to_polyexp()?;
            for (from, to) in &names {
                p = p.subst(*from, &PolyExp::var(*to))?;
            }
            // every remaining variable must be a size parameter
            if p.vars().iter().all(|v| v.name().starts_with('#')) {
                Some(p)
            } else {
                None
            }
        };
        use crate::lang::assertion::CostQualifier as Q;
        let bound = match &spec.qualifier {
            Q::Exact(f) => {
                let p = to_poly(f)?;
                Bound {
                    lower: p.clone(),
                    upper: Some(p),
                }
            }
            Q::Ub(f) => Bound {
                lower: PolyExp::zero(),
                upper: Some(to_poly(f)?),
            },
            Q::Lb(f) => Bound {
                lower: to_poly(f)?,
                upper: None,
            },
            Q::Band(l, u) => Bound {
                lower: to_poly(l)?,
                upper: Some(to_poly(u)?),
            },
            _ => return None,
        };
        return Some(bound);
    }
    None
}

fn solve_scc_cost(ctx: &mut Ctx<'_>, scc: &[PredId], proj: &Projection) {
    // trusted facts short-circuit analysis (standard projection only; a
    // trusted function carries no per-center split)
    if *proj == Projection::Standard && scc.len() == 1 {
        if let Some(b) = trusted_bound(ctx.program, scc[0]) {
            ctx.table.insert((scc[0], Projection::Standard), b);
            return;
        }
    }
    let Some((rep, clauses_src)) = scc_rep(ctx.program, scc) else {
        for &p in scc {
            ctx.table.insert((p, proj.clone()), Bound::unknown());
        }
        return;
    };

    let overhead = if rep != clauses_src {
        match wrapper_overhead(ctx, proj, scc, rep, clauses_src) {
            Some(o) => Some(o),
            None => {
                ctx.table.insert((rep, proj.clone()), Bound::unknown());
                return;
            }
        }
    } else {
        None
    };

    let clauses = ctx.program.clauses_of(clauses_src).to_vec();
    if clauses.is_empty() {
        ctx.table.insert((rep, proj.clone()), Bound::zero());
        return;
    }

    let mut per_clause: Vec<ClauseCost> = vec![];
    let mut primary: Option<(usize, Metric)> = None;
    let mut shift_ok = true;
    for cl in &clauses {
        let walked = sizes::walk_clause(
            ctx.program,
            ctx.metrics,
            ctx.rels,
            scc,
            clauses_src,
            &cl.head,
            &cl.body,
            None,
        );
        let mut cc = ClauseCost {
            guard: Guard::AtLeast(0),
            lo: PolyExp::zero(),
            hi: Some(PolyExp::zero()),
            self_calls: 0,
            lower_shift_exact: true,
        };
        // the clause's own resolution step
        if ctx.include(proj, ctx.clause_route(clauses_src, rep)) {
            let c = PolyExp::int(ctx.model.clause as i64);
            cc.lo = cc.lo.add(&c);
            cc.hi = cc.hi.map(|h| h.add(&c));
        }
        let done = body_cost(
            ctx,
            proj,
            clauses_src,
            rep,
            scc,
            &cl.body,
            &walked.sites,
            &mut cc,
        );
        if done.is_none() {
            cc.hi = None;
        }
        if let Some(o) = &overhead {
            cc.lo = cc.lo.add(&o.lo);
            cc.hi = match (&cc.hi, &o.hi) {
                (Some(a), Some(b)) => Some(a.add(b)),
                _ => None,
            };
        }
        // recursion shift detection: smallest decreasing (arg, metric)
        for site in &walked.sites {
            if site.callee != rep || !scc.contains(&site.callee) {
                continue;
            }
            let mut candidates: Vec<(usize, Metric)> = vec![];
            for ((k, m), sz) in &site.arg_sizes {
                if let Some(hi) = &sz.hi {
                    let pv = PolyExp::var(param(clauses_src, *k, *m));
                    if *hi == pv.add(&PolyExp::int(-1)) {
                        candidates.push((*k, *m));
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
        per_clause.push(cc);
    }

    // guards from the primary argument's patterns
    if let Some((k, m)) = primary {
        let pv = PolyExp::var(param(clauses_src, k, m));
        let want = pv.add(&PolyExp::int(-1));
        let mut co_shifted: Vec<(Sym, bool)> = vec![];
        for (cl, cc) in clauses.iter().zip(per_clause.iter_mut()) {
            cc.guard = cl
                .head
                .args()
                .get(k)
                .map(|p| pattern_guard(p, m))
                .unwrap_or(Guard::AtLeast(0));
            let walked = sizes::walk_clause(
                ctx.program,
                ctx.metrics,
                ctx.rels,
                scc,
                clauses_src,
                &cl.head,
                &cl.body,
                None,
            );
            for site in &walked.sites {
                if site.callee != rep {
                    continue;
                }
                // upper bounds need every recursive size at most primary-1
                match site.arg_sizes.get(&(k, m)) {
                    Some(sz) => {
                        if sz.hi.as_ref() != Some(&want) {
                            shift_ok = false;
                        }
                        if sz.lo != want {
                            cc.lower_shift_exact = false;
                        }
                    }
                    None => shift_ok = false,
                }
                // any other shifted parameter: freezing it at the caller's
                // value is sound for upper bounds when the size only
                // decreases
                for ((k2, m2), sz) in &site.arg_sizes {
                    if (*k2, *m2) == (k, m) {
                        continue;
                    }
                    // positional identity: wrapper args match the walked
                    // predicate's args
                    let own = PolyExp::var(param(clauses_src, *k2, *m2));
                    let unchanged = sz.lo == own && sz.hi.as_ref() == Some(&own);
                    if !unchanged {
                        let p2 = param(clauses_src, *k2, *m2);
                        let decreasing = sz
                            .hi
                            .as_ref()
                            .map(|h| recur::sampled_ge(&own, h))
                            .unwrap_or(false);
                        if !decreasing {
                            // an unknown or growing shift leaves the
                            // recurrence outside the supported class
                            co_shifted.push((p2, false));
                        } else if !co_shifted.contains(&(p2, true)) {
                            co_shifted.push((p2, true));
                        }
                    }
                }
            }
        }
        // the recursion reshapes the co-shifted sizes: uppers freeze them
        // (sound: they only decrease), lowers floor them at zero
        for (p2, decreasing) in &co_shifted {
            let used = per_clause.iter().any(|c| {
                per_clause_uses(&c.lo, *p2)
                    || c.hi
                        .as_ref()
                        .map(|h| per_clause_uses(h, *p2))
                        .unwrap_or(false)
            });
            if !used {
                continue;
            }
            if !*decreasing {
                shift_ok = false;
                continue;
            }
            for cc in per_clause.iter_mut() {
                if let Some(lo) = cc.lo.subst(*p2, &PolyExp::zero()) {
                    cc.lo = lo;
                }
                cc.lower_shift_exact = false;
            }
        }
    } else if per_clause.iter().any(|c| c.self_calls > 0) {
        // recursion with no decreasing size: unsolvable
        let out = Bound::unknown();
        ctx.table.insert((rep, proj.clone()), out);
        return;
    }

    // A wrapper's checks run for any call; when no renamed clause matches
    // (sizes below every guard) the call still pays the wrapper and its
    // calls block before failing. Add that base point explicitly.
    if let Some(o) = &overhead {
        if let Some((k, m)) = primary {
            let min_step = per_clause
                .iter()
                .filter(|c| c.self_calls > 0)
                .filter_map(|c| match c.guard {
                    Guard::AtLeast(g) => Some(g),
                    Guard::Exactly(_) => None,
                })
                .min()
                .unwrap_or(0);
            for g in 0..min_step {
                let covered = per_clause.iter().any(|c| match c.guard {
                    Guard::Exactly(e) => e == g,
                    Guard::AtLeast(a) => a <= g && c.self_calls == 0,
                });
                if !covered {
                    let _ = (k, m);
                    per_clause.push(ClauseCost {
                        guard: Guard::Exactly(g),
                        lo: PolyExp::zero(),
                        hi: o.hi.clone(),
                        self_calls: 0,
                        lower_shift_exact: true,
                    });
                }
            }
        }
    }

    let has_self = per_clause.iter().any(|c| c.self_calls > 0);
    let bound = if !has_self {
        let lows: Vec<PolyExp> = per_clause.iter().map(|c| c.lo.clone()).collect();
        let lower = recur::select_dominant(&lows, Mode::Lower).unwrap_or(PolyExp::zero());
        let his: Option<Vec<PolyExp>> = per_clause.iter().map(|c| c.hi.clone()).collect();
        let upper = his.and_then(|hs| recur::select_dominant(&hs, Mode::Upper));
        Bound { lower, upper }
    } else if !shift_ok {
        Bound::unknown()
    } else {
        let (k, m) = primary.unwrap();
        let prim = param(clauses_src, k, m);
        let upper = {
            let eqs: Option<Vec<Equation>> = per_clause
                .iter()
                .map(|c| {
                    c.hi.clone().map(|h| Equation {
                        guard: c.guard,
                        add: h,
                        self_calls: c.self_calls,
                        loose_lower: false,
                    })
                })
                .collect();
            eqs.and_then(|eqs| {
                recur::solve(
                    &Recurrence {
                        primary: prim,
                        equations: eqs,
                    },
                    Mode::Upper,
                )
            })
        };
        let lower = {
            let eqs: Vec<Equation> = per_clause
                .iter()
                .map(|c| Equation {
                    guard: c.guard,
                    add: c.lo.clone(),
                    self_calls: c.self_calls,
                    loose_lower: !c.lower_shift_exact,
                })
                .collect();
            recur::solve(
                &Recurrence {
                    primary: prim,
                    equations: eqs,
                },
                Mode::Lower,
            )
            .unwrap_or(PolyExp::zero())
        };
        Bound { lower, upper }
    };

    // express wrapper bounds over the wrapper's own parameters
    let bound = if rep != clauses_src {
        let as_sb = SizeBound {
            lo: bound.lower.clone(),
            hi: bound.upper.clone(),
        };
        match rename_params(&as_sb, ctx.metrics, clauses_src, rep) {
            Some(sb) => Bound {
                lower: sb.lo,
                upper: sb.hi,
            },
            None => Bound::unknown(),
        }
    } else {
        bound
    };

    for &p in scc {
        if p == rep {
            ctx.table.insert((p, proj.clone()), bound.clone());
        } else if scc.len() > 1 {
            // members other than the representative are internal; their
            // costs are already folded into the representative's bound
            ctx.table.insert((p, proj.clone()), Bound::zero());
        }
    }
}

/// Everything the analysis produces for one entry and scenario.
pub struct Analysis {
    pub instrumented: InstrumentedProgram,
    pub metrics: Metrics,
    pub rels: SizeRelations,
    /// entry bound over display-named size variables
    pub bound: Bound,
    /// display renaming applied to `bound`
    pub display: BTreeMap<Sym, Sym>,
    pub entry: PredId,
}

/// Infer the entry's standard cost bound under a scenario.
pub fn analyze(
    program: &Program,
    entry: PredId,
    scenario: &Scenario,
) -> Result<Analysis, AnalysisError> {
    let instrumented = apply_scenario(program, scenario)
        .map_err(|e| AnalysisError::UnknownEntry(e.to_string()))?;
    analyze_instrumented(instrumented, entry, &[])
}

fn analyze_instrumented(
    instrumented: InstrumentedProgram,
    entry: PredId,
    centers: &[CenterId],
) -> Result<Analysis, AnalysisError> {
    let prog = &instrumented.program;
    if !prog.has_pred(entry) {
        return Err(AnalysisError::UnknownEntry(entry.to_string()));
    }
    let metrics = infer_metrics(prog, entry)?;
    let rels = solve_sizes(prog, &metrics);
    let mut ctx = Ctx {
        program: prog,
        metrics: &metrics,
        rels: &rels,
        model: prog.cost_model(),
        centers: centers.to_vec(),
        table: HashMap::new(),
    };
    for scc in call_graph_sccs(prog) {
        solve_scc_cost(&mut ctx, &scc, &Projection::Standard);
    }
    let bound = ctx
        .table
        .get(&(entry, Projection::Standard))
        .cloned()
        .unwrap_or_else(Bound::unknown);
    let links = size_links(prog, entry);
    let bound = apply_links(&bound, &links);
    let display = display_names(prog, &metrics, entry);
    let bound = rename_display(&bound, &display);
    Ok(Analysis {
        metrics,
        rels,
        bound,
        display,
        instrumented,
        entry,
    })
}

/// Accumulated cost per center for one entry call.
pub struct AccumulatedCost {
    pub per_center: BTreeMap<CenterId, Bound>,
    pub display: BTreeMap<Sym, Sym>,
}

/// Infer accumulated costs: each resolution step is attributed to the
/// nearest enclosing cost center, statically.
pub fn analyze_accumulated(
    program: &Program,
    entry: PredId,
    scenario: &Scenario,
    centers: &[CenterId],
) -> Result<AccumulatedCost, AnalysisError> {
    let instrumented = apply_scenario(program, scenario)
        .map_err(|e| AnalysisError::UnknownEntry(e.to_string()))?;
    let prog = &instrumented.program;
    if !prog.has_pred(entry) {
        return Err(AnalysisError::UnknownEntry(entry.to_string()));
    }
    let mut centers = centers.to_vec();
    let entry_center = CenterId::Pred(entry);
    if !centers.contains(&entry_center) {
        centers.push(entry_center);
    }
    let metrics = infer_metrics(prog, entry)?;
    let rels = solve_sizes(prog, &metrics);
    let mut ctx = Ctx {
        program: prog,
        metrics: &metrics,
        rels: &rels,
        model: prog.cost_model(),
        centers: centers.clone(),
        table: HashMap::new(),
    };
    let mut projections: Vec<Projection> = vec![Projection::Standard, Projection::Escape];
    for c in &centers {
        projections.push(Projection::Captured(*c));
    }
    for scc in call_graph_sccs(prog) {
        for proj in &projections {
            solve_scc_cost(&mut ctx, &scc, proj);
        }
    }
    let links = size_links(prog, entry);
    let display = display_names(prog, &metrics, entry);
    let mut per_center = BTreeMap::new();
    for c in &centers {
        let mut b = ctx
            .table
            .get(&(entry, Projection::Captured(*c)))
            .cloned()
            .unwrap_or_else(Bound::unknown);
        if *c == entry_center {
            let esc = ctx
                .table
                .get(&(entry, Projection::Escape))
                .cloned()
                .unwrap_or_else(Bound::unknown);
            b = b.add(&esc);
        }
        per_center.insert(*c, rename_display(&apply_links(&b, &links), &display));
    }
    Ok(AccumulatedCost {
        per_center,
        display,
    })
}

/// Size-variable links from the entry's size-binding literals: two
/// annotations sharing the same variable (e.g. `row_length(A,K),
/// length(B,K)`) identify the two parameters.
fn size_links(program: &Program, entry: PredId) -> Vec<(Sym, Sym)> {
    let mut by_key: BTreeMap<Sym, Vec<Sym>> = BTreeMap::new();
    for a in program.assertions_of(entry) {
        if !matches!(
            a.status,
            AssertionStatus::Check | AssertionStatus::True | AssertionStatus::Trust
        ) {
            continue;
        }
        let head_vars = a.head_vars();
        let Some(pre) = &a.pre else { continue };
        for lit in pre.lits() {
            let Some(pid) = lit.pred_id() else { continue };
            if pid.arity != 2 {
                continue;
            }
            let m = match pid.name.name().as_str() {
                "length" => Metric::Len,
                "row_length" => Metric::Inner,
                "depth" => Metric::Depth,
                "value" => Metric::IntVal,
                _ => continue,
            };
            let (Some(Term::Var(x)), Some(Term::Var(k))) = (lit.args().first(), lit.args().get(1))
            else {
                continue;
            };
            let Some(j) = head_vars.iter().position(|h| h == x) else {
                continue;
            };
            by_key.entry(*k).or_default().push(param(entry, j, m));
        }
        break;
    }
    let mut out = vec![];
    for (_, params) in by_key {
        for later in params.iter().skip(1) {
            out.push((*later, params[0]));
        }
    }
    out
}

fn apply_links(b: &Bound, links: &[(Sym, Sym)]) -> Bound {
    let ren = |p: &PolyExp| -> PolyExp {
        let mut out = p.clone();
        for (from, to) in links {
            if let Some(next) = out.subst(*from, &PolyExp::var(*to)) {
                out = next;
            }
        }
        out
    };
    Bound {
        lower: ren(&b.lower),
        upper: b.upper.as_ref().map(ren),
    }
}

/// Display names for the entry's size parameters: a single list-length
/// input is `L`; otherwise `l_X`/`c_X`/`d_X`/`v_X` after the assertion's
/// argument variable `X`.
fn display_names(program: &Program, metrics: &Metrics, entry: PredId) -> BTreeMap<Sym, Sym> {
    let mut head_vars: Vec<Sym> = vec![];
    for a in program.assertions_of(entry) {
        if matches!(
            a.status,
            AssertionStatus::Check | AssertionStatus::True | AssertionStatus::Trust
        ) {
            head_vars = a.head_vars();
            break;
        }
    }
    let params = metrics.params_of(entry);
    let len_count = params.iter().filter(|(_, m, _)| *m == Metric::Len).count();
    let mut out = BTreeMap::new();
    for (j, m, sym) in params {
        let var = head_vars
            .get(j)
            .map(|v| v.name())
            .unwrap_or_else(|| format!("A{j}"));
        let name = match m {
            Metric::Len if len_count == 1 => "L".to_string(),
            Metric::Len => format!("l_{var}"),
            Metric::Inner => format!("c_{var}"),
            Metric::Depth => format!("d_{var}"),
            Metric::IntVal => format!("v_{var}"),
        };
        out.insert(sym, Sym::new(&name));
    }
    out
}

fn rename_display(b: &Bound, names: &BTreeMap<Sym, Sym>) -> Bound {
    let ren = |p: &PolyExp| -> PolyExp {
        let mut out = p.clone();
        for (from, to) in names {
            if let Some(next) = out.subst(*from, &PolyExp::var(*to)) {
                out = next;
            }
        }
        out
    };
    Bound {
        lower: ren(&b.lower),
        upper: b.upper.as_ref().map(ren),
    }
}

/// Inferred band for the overhead ratio of instrumented over base cost.
#[derive(Clone, Debug)]
pub struct RatioBand {
    pub lower: CostExpr,
    pub upper: CostExpr,
}

/// Ratio band: lower = rtc.lower/base.upper, upper = rtc.upper/base.lower,
/// with exact polynomial division applied when it leaves no remainder.
pub fn overhead_ratio(rtc: &Bound, base: &Bound) -> Result<RatioBand, AnalysisError> {
    if base.lower.is_zero() {
        return Ok(RatioBand {
            lower: CostExpr::int(0),
            upper: CostExpr::Infinity,
        });
    }
    let lower = match &base.upper {
        None => CostExpr::int(0),
        Some(bu) => simplify_quotient(&rtc.lower, bu),
    };
    let upper = match &rtc.upper {
        None => CostExpr::Infinity,
        Some(ru) => simplify_quotient(ru, &base.lower),
    };
    Ok(RatioBand { lower, upper })
}

/// `num/den` with monomial-wise exact division when `den` is a single
/// term; otherwise a symbolic quotient.
pub fn simplify_quotient(num: &PolyExp, den: &PolyExp) -> CostExpr {
    if let Some(c) = den.as_constant() {
        if !c.is_zero() {
            return CostExpr::from_polyexp(&num.scale(&(Rat::one() / c)));
        }
    }
    if den.terms.len() == 1 {
        let d = &den.terms[0];
        let mut parts: Vec<CostExpr> = vec![];
        let mut poly_acc = PolyExp::zero();
        for t in &num.terms {
            // try exact term division
            let mut mono = t.mono.clone();
            let mut ok = true;
            for (v, p) in &d.mono {
                let e = mono.entry(*v).or_insert(0);
                if *e < *p {
                    ok = false;
                    break;
                }
                *e -= p;
            }
            let mut exps = t.exps.clone();
            if ok {
                for (v, b) in &d.exps {
                    match exps.get(v) {
                        Some(nb) => {
                            let q = nb / b;
                            if q == Rat::one() {
                                exps.remove(v);
                            } else if q > Rat::one() {
                                exps.insert(*v, q);
                            } else {
                                ok = false;
                                break;
                            }
                        }
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
            }
            if ok {
                let mono: BTreeMap<Sym, u32> = mono.into_iter().filter(|(_, p)| *p > 0).collect();
                poly_acc = poly_acc.add(&PolyExp {
                    terms: vec![crate::lang::poly::PTerm {
                        coeff: &t.coeff / &d.coeff,
                        mono,
                        exps,
                    }],
                });
            } else {
                // cancel shared factors before emitting the quotient
                let mut tn = t.clone();
                let mut td = d.clone();
                tn.coeff = Rat::one();
                td.coeff = Rat::one();
                let shared: Vec<(Sym, u32)> = tn
                    .mono
                    .iter()
                    .filter_map(|(v, p)| td.mono.get(v).map(|q| (*v, (*p).min(*q))))
                    .collect();
                for (v, k) in shared {
                    let np = tn.mono[&v] - k;
                    let dp = td.mono[&v] - k;
                    if np == 0 {
                        tn.mono.remove(&v);
                    } else {
                        tn.mono.insert(v, np);
                    }
                    if dp == 0 {
                        td.mono.remove(&v);
                    } else {
                        td.mono.insert(v, dp);
                    }
                }
                let nn = PolyExp { terms: vec![tn] }.normalized();
                let dd = PolyExp { terms: vec![td] }.normalized();
                if let Some(c) = dd.as_constant() {
                    if c == Rat::one() {
                        poly_acc = poly_acc.add(&nn);
                        continue;
                    }
                }
                parts.push(CostExpr::Div(
                    Box::new(CostExpr::from_polyexp(&nn)),
                    Box::new(CostExpr::from_polyexp(&dd)),
                ));
            }
        }
        let mut all = parts;
        if !poly_acc.is_zero() {
            all.insert(0, CostExpr::from_polyexp(&poly_acc));
        }
        return match all.len() {
            0 => CostExpr::int(0),
            1 => all.pop().unwrap(),
            _ => CostExpr::Add(all),
        };
    }
    CostExpr::Div(
        Box::new(CostExpr::from_polyexp(num)),
        Box::new(CostExpr::from_polyexp(den)),
    )
}

/// The overhead-ratio order: quotient of the dominant-monomial skeletons
/// of the instrumented and base upper bounds, term-wise simplified.
pub fn ovhd_order_expr(rtc_upper: &PolyExp, base_upper: &PolyExp) -> CostExpr {
    let num = rtc_upper.skeleton();
    let den = base_upper.skeleton();
    simplify_quotient(&num, &den).canonical()
}

/// Asymptotic complexity order under the joint limit where every size
/// variable grows as a common parameter N.
#[derive(Clone, PartialEq, Debug)]
pub struct ComplexityOrder {
    /// exponential base (1 = polynomial)
    pub exp_base: Rat,
    /// polynomial degree in N (can be negative inside ratio orders)
    pub degree: i64,
    /// logarithmic factors
    pub log_power: i32,
}

impl ComplexityOrder {
    pub fn constant() -> ComplexityOrder {
        ComplexityOrder {
            exp_base: Rat::one(),
            degree: 0,
            log_power: 0,
        }
    }

    pub fn polynomial(degree: i64) -> ComplexityOrder {
        ComplexityOrder {
            exp_base: Rat::one(),
            degree,
            log_power: 0,
        }
    }

    pub fn name(&self) -> String {
        if self.exp_base > Rat::one() {
            return "exponential".into();
        }
        match (self.degree, self.log_power) {
            (0, 0) => "constant".into(),
            (0, _) => "logarithmic".into(),
            (1, 0) => "linear".into(),
            (2, 0) => "quadratic".into(),
            (3, 0) => "cubic".into(),
            (d, 0) => format!("poly^{d}"),
            (d, l) => format!("poly^{d}*log^{l}"),
        }
    }
}

impl PartialOrd for ComplexityOrder {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some((self.exp_base.clone(), self.degree, self.log_power).cmp(&(
            other.exp_base.clone(),
            other.degree,
            other.log_power,
        )))
    }
}

/// Order of a cost expression under the N-joint convention.
pub fn asymptotic_order(f: &CostExpr) -> ComplexityOrder {
    match f {
        CostExpr::Infinity => ComplexityOrder {
            exp_base: rat(i64::MAX / 2),
            degree: 0,
            log_power: 0,
        },
        CostExpr::Log2(x) => {
            let inner = asymptotic_order(x);
            if inner > ComplexityOrder::constant() {
                ComplexityOrder {
                    exp_base: Rat::one(),
                    degree: 0,
                    log_power: 1,
                }
            } else {
                ComplexityOrder::constant()
            }
        }
        CostExpr::Div(a, b) => {
            let oa = asymptotic_order(a);
            let ob = asymptotic_order(b);
            ComplexityOrder {
                exp_base: oa.exp_base / ob.exp_base,
                degree: oa.degree - ob.degree,
                log_power: oa.log_power - ob.log_power,
            }
        }
        CostExpr::Add(xs) | CostExpr::Mul(xs) => {
            let orders: Vec<ComplexityOrder> = xs.iter().map(asymptotic_order).collect();
            if matches!(f, CostExpr::Add(_)) {
                orders
                    .into_iter()
                    .max_by(|a, b| a.partial_cmp(b).unwrap())
                    .unwrap_or_else(ComplexityOrder::constant)
            } else {
                let mut acc = ComplexityOrder::constant();
                for o in orders {
                    acc = ComplexityOrder {
                        exp_base: acc.exp_base * o.exp_base,
                        degree: acc.degree + o.degree,
                        log_power: acc.log_power + o.log_power,
                    };
                }
                acc
            }
        }
        CostExpr::Max(a, b) => {
            let (oa, ob) = (asymptotic_order(a), asymptotic_order(b));
            if oa >= ob {
                oa
            } else {
                ob
            }
        }
        CostExpr::Pow(x, k) => {
            let o = asymptotic_order(x);
            ComplexityOrder {
                exp_base: o.exp_base,
                degree: o.degree * *k as i64,
                log_power: o.log_power * *k as i32,
            }
        }
        CostExpr::Exp(base, e) => {
            let inner = asymptotic_order(e);
            if inner > ComplexityOrder::constant() && *base > Rat::one() {
                ComplexityOrder {
                    exp_base: base.clone(),
                    degree: 0,
                    log_power: 0,
                }
            } else {
                ComplexityOrder::constant()
            }
        }
        CostExpr::Var(_) => ComplexityOrder::polynomial(1),
        CostExpr::Const(_) => ComplexityOrder::constant(),
    }
}

/// Rank accumulated costs: highest asymptotic order first, ties by
/// leading coefficient, then by value at a reference size (1000). The
/// entry's own center is excluded from the ranking.
pub fn hotspot_ranking(acc: &AccumulatedCost, entry: PredId) -> Vec<(CenterId, Bound)> {
    let mut items: Vec<(CenterId, Bound)> = acc
        .per_center
        .iter()
        .filter(|(c, _)| **c != CenterId::Pred(entry))
        .map(|(c, b)| (*c, b.clone()))
        .collect();
    let key = |b: &Bound| -> (ComplexityOrder, Rat, Rat) {
        let up = match &b.upper {
            Some(u) => u.clone(),
            None => {
                return (
                    asymptotic_order(&CostExpr::Infinity),
                    Rat::zero(),
                    Rat::zero(),
                )
            }
        };
        let order = asymptotic_order(&CostExpr::from_polyexp(&up));
        // leading coefficient: sum of coefficients of maximal terms
        let lead: Rat = {
            let sk = up.skeleton();
            up.terms
                .iter()
                .filter(|t| {
                    sk.terms
                        .iter()
                        .any(|s| s.mono == t.mono && s.exps == t.exps)
                })
                .map(|t| t.coeff.clone())
                .fold(Rat::zero(), |a, b| a + b)
        };
        let reference: Rat = {
            let env: BTreeMap<Sym, Rat> = up.vars().into_iter().map(|v| (v, rat(1000))).collect();
            up.eval(&env).unwrap_or_else(Rat::zero)
        };
        (order, lead, reference)
    };
    items.sort_by(|a, b| {
        let ka = key(&a.1);
        let kb = key(&b.1);
        kb.0.partial_cmp(&ka.0)
            .unwrap()
            .then(kb.1.cmp(&ka.1))
            .then(kb.2.cmp(&ka.2))
    });
    items
}

/// Size assignment (display names) for a concrete goal's arguments.
pub fn goal_size_env(analysis: &Analysis, goal: &Term) -> BTreeMap<Sym, Rat> {
    let entry = analysis.entry;
    let mut env = BTreeMap::new();
    for (j, m, sym) in analysis.metrics.params_of(entry) {
        let Some(arg) = goal.args().get(j) else {
            continue;
        };
        let value = match m {
            Metric::Len => arg.list_len().map(|n| n as i64),
            Metric::Inner => match arg {
                Term::Comp(f, parts) if f.name() == "." && parts.len() == 2 => {
                    parts[0].list_len().map(|n| n as i64)
                }
                _ => Some(0),
            },
            Metric::Depth => Some(term_depth(arg) as i64),
            Metric::IntVal => match arg {
                Term::Int(n) => Some(*n),
                _ => None,
            },
        };
        if let Some(v) = value {
            let name = analysis.display.get(&sym).copied().unwrap_or(sym);
            env.insert(name, rat(v));
        }
    }
    env
}

fn term_depth(t: &Term) -> usize {
    match t {
        Term::Comp(f, args) if f.name() != "." => {
            1 + args.iter().map(term_depth).max().unwrap_or(0)
        }
        Term::Comp(_, args) => args.iter().map(term_depth).max().unwrap_or(0),
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::syntactic_discharge;
    use crate::interp::{solve as run, SolveOptions};
    use crate::lang::tests::REV_SRC;
    use crate::lang::{normalize_assertions, parse_goal_term, parse_program, prelude};

    fn prep(src: &str) -> Program {
        prelude::extend(&normalize_assertions(&parse_program(src).unwrap()).unwrap())
    }

    fn rev_program() -> Program {
        let mut p = prep(REV_SRC);
        p.exports.insert(PredId::new("rev", 2));
        p
    }

    fn poly(src: &str) -> PolyExp {
        crate::lang::parse_cost_expr_text(src)
            .unwrap()
            .to_polyexp()
            .unwrap()
    }

    #[test]
    fn rev_off_is_exact_quadratic() {
        let p = rev_program();
        let a = analyze(&p, PredId::new("rev", 2), &Scenario::Off).unwrap();
        assert!(a.bound.exact());
        assert_eq!(a.bound.lower, poly("0.5*L**2+1.5*L+1"));
    }

    #[test]
    fn rev_full_is_exact_cubic_with_half_leading_term() {
        let p = rev_program();
        let a = analyze(&p, PredId::new("rev", 2), &Scenario::Full).unwrap();
        assert!(a.bound.exact());
        assert_eq!(a.bound.lower, poly("0.5*L**3+8.5*L**2+19*L+11"));
    }

    #[test]
    fn rev_opt_matches_interface_only_cost() {
        let p = rev_program();
        let d = syntactic_discharge(&p);
        let a = analyze(&p, PredId::new("rev", 2), &Scenario::Opt(d)).unwrap();
        assert!(a.bound.exact());
        assert_eq!(a.bound.lower, poly("0.5*L**2+2.5*L+7"));
    }

    #[test]
    fn nonrecursive_fact_costs_one_step() {
        let p = prep(":- check pred p(A) : list(A).\np(a).\n");
        let a = analyze(&p, PredId::new("p", 1), &Scenario::Off).unwrap();
        assert!(a.bound.exact());
        assert_eq!(a.bound.lower, poly("1"));
    }

    #[test]
    fn static_equals_dynamic_for_every_scenario_and_size() {
        // the central exactness property: evaluating the inferred bound
        // equals the interpreter's count, size by size
        let p = rev_program();
        let scen = [
            Scenario::Off,
            Scenario::Full,
            Scenario::Opt(syntactic_discharge(&p)),
        ];
        for scenario in &scen {
            let a = analyze(&p, PredId::new("rev", 2), scenario).unwrap();
            assert!(a.bound.exact(), "{scenario:?}");
            for n in 0..=12usize {
                let items: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
                let goal = parse_goal_term(&format!("rev([{}],Y)", items.join(","))).unwrap();
                let r = run(&a.instrumented.program, &goal, &[], SolveOptions::default()).unwrap();
                let env = goal_size_env(&a, &goal);
                let expect = a.bound.lower.eval(&env).unwrap();
                assert_eq!(expect, rat(r.steps.total as i64), "{scenario:?} at n={n}");
            }
        }
    }

    const APP_SRC: &str = "\
:- export(app/3).
:- check pred app(A,B,C) : (list(A),list(B),var(C)) => (list(A),list(B),list(C)).
app([], B, B).
app([X|Xs], B, [X|Ys]) :- app(Xs, B, Ys).
";

    #[test]
    fn app_off_cost_is_length_plus_one() {
        let p = prep(APP_SRC);
        let a = analyze(&p, PredId::new("app", 3), &Scenario::Off).unwrap();
        assert!(a.bound.exact());
        assert_eq!(a.bound.lower, poly("l_A+1"));
    }

    #[test]
    fn app_full_cost_and_cross_check() {
        let p = prep(APP_SRC);
        let a = analyze(&p, PredId::new("app", 3), &Scenario::Full).unwrap();
        assert!(a.bound.exact());
        assert_eq!(
            a.bound.lower,
            poly("1.5*l_A**2+3*l_A*l_B+14.5*l_A+3*l_B+13")
        );
        for (la, lb) in [(0usize, 0usize), (1, 0), (0, 1), (3, 2), (5, 7)] {
            let mk = |n: usize, c: char| {
                let items: Vec<String> = (0..n).map(|i| format!("{c}{i}")).collect();
                format!("[{}]", items.join(","))
            };
            let goal = parse_goal_term(&format!("app({},{},C)", mk(la, 'a'), mk(lb, 'b'))).unwrap();
            let r = run(&a.instrumented.program, &goal, &[], SolveOptions::default()).unwrap();
            let env = goal_size_env(&a, &goal);
            assert_eq!(
                a.bound.lower.eval(&env).unwrap(),
                rat(r.steps.total as i64),
                "la={la} lb={lb}"
            );
        }
    }

    #[test]
    fn accumulated_centers_reproduce_hotspot_table() {
        // instrumented append: var/1 and the entry collect l_A + 1 each,
        // the combination goals 3(l_A + 1), and list/1 the quadratic rest
        let p = prep(APP_SRC);
        let app = PredId::new("app", 3);
        let centers = [
            CenterId::Pred(app),
            CenterId::Pred(PredId::new("list", 1)),
            CenterId::Pred(PredId::new("var", 1)),
            CenterId::BitOps,
        ];
        let acc = analyze_accumulated(&p, app, &Scenario::Full, &centers).unwrap();
        let b = |c: &CenterId| acc.per_center[c].clone();
        assert_eq!(b(&centers[0]).lower, poly("l_A+1"));
        assert!(b(&centers[0]).exact());
        assert_eq!(b(&centers[2]).lower, poly("l_A+1"));
        assert_eq!(b(&CenterId::BitOps).lower, poly("3*l_A+3"));
        let list = b(&centers[1]);
        assert!(list.exact());
        assert_eq!(
            asymptotic_order(&list.lower_expr()),
            ComplexityOrder::polynomial(2)
        );
        assert_eq!(list.lower, poly("1.5*l_A**2+3*l_A*l_B+9.5*l_A+3*l_B+8"));

        // decomposition identity: the centers sum to the standard cost
        let std = analyze(&p, app, &Scenario::Full).unwrap();
        let mut total = Bound::zero();
        for c in &centers {
            total = total.add(&b(c));
        }
        assert_eq!(total.lower, std.bound.lower);
        assert_eq!(total.upper, std.bound.upper);
    }

    #[test]
    fn base_cost_recovery_at_entry_center() {
        // accumulated cost at the entry center equals the off cost
        let p = prep(APP_SRC);
        let app = PredId::new("app", 3);
        let centers = [
            CenterId::Pred(app),
            CenterId::Pred(PredId::new("list", 1)),
            CenterId::Pred(PredId::new("var", 1)),
            CenterId::BitOps,
        ];
        let acc = analyze_accumulated(&p, app, &Scenario::Full, &centers).unwrap();
        let off = analyze(&p, app, &Scenario::Off).unwrap();
        assert_eq!(acc.per_center[&CenterId::Pred(app)].lower, off.bound.lower);
    }

    #[test]
    fn accumulated_matches_interpreter_per_center() {
        let p = prep(APP_SRC);
        let app = PredId::new("app", 3);
        let centers = [
            CenterId::Pred(app),
            CenterId::Pred(PredId::new("list", 1)),
            CenterId::Pred(PredId::new("var", 1)),
            CenterId::BitOps,
        ];
        let acc = analyze_accumulated(&p, app, &Scenario::Full, &centers).unwrap();
        let a = analyze(&p, app, &Scenario::Full).unwrap();
        for (la, lb) in [(2usize, 1usize), (4, 3), (0, 2)] {
            let mk = |n: usize, c: char| {
                let items: Vec<String> = (0..n).map(|i| format!("{c}{i}")).collect();
                format!("[{}]", items.join(","))
            };
            let goal = parse_goal_term(&format!("app({},{},C)", mk(la, 'a'), mk(lb, 'b'))).unwrap();
            let r = run(
                &a.instrumented.program,
                &goal,
                &centers,
                SolveOptions::default(),
            )
            .unwrap();
            let env = goal_size_env(&a, &goal);
            for c in &centers {
                let expect = acc.per_center[c].lower.eval(&env).unwrap();
                let measured = r.steps.per_center.get(c).copied().unwrap_or(0);
                assert_eq!(expect, rat(measured as i64), "center {c} la={la} lb={lb}");
            }
        }
    }

    #[test]
    fn singleton_center_set_recovers_standard_bound() {
        let p = prep(APP_SRC);
        let app = PredId::new("app", 3);
        let acc = analyze_accumulated(&p, app, &Scenario::Full, &[CenterId::Pred(app)]).unwrap();
        let std = analyze(&p, app, &Scenario::Full).unwrap();
        assert_eq!(acc.per_center[&CenterId::Pred(app)].lower, std.bound.lower);
    }

    #[test]
    fn ratio_of_identical_bounds_is_one() {
        let b = Bound {
            lower: poly("0.5*L**2+1.5*L+1"),
            upper: Some(poly("0.5*L**2+1.5*L+1")),
        };
        let r = overhead_ratio(&b, &b).unwrap();
        // lower = upper = quotient of equal polynomials
        let env: BTreeMap<Sym, f64> = [(Sym::new("L"), 17.0)].into();
        assert!((r.lower.eval_f64(&env) - 1.0).abs() < 1e-9);
        assert!((r.upper.eval_f64(&env) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn overhead_order_expressions() {
        // full append over base append: (l_A^2 + l_A l_B)/l_A = l_A + l_B
        let q = ovhd_order_expr(
            &poly("1.5*l_A**2+3*l_A*l_B+14.5*l_A+3*l_B+13"),
            &poly("l_A+1"),
        );
        assert_eq!(
            q,
            crate::lang::parse_cost_expr_text("l_A+l_B")
                .unwrap()
                .canonical()
        );
        // interface-only append: (l_A + l_B)/l_A = 1 + l_B/l_A
        let q = ovhd_order_expr(&poly("2*l_A+l_B+8"), &poly("l_A+1"));
        let expect = crate::lang::parse_cost_expr_text("l_B/l_A+1")
            .unwrap()
            .canonical();
        assert_eq!(q, expect);
        // cubic over quadratic: linear
        let q = ovhd_order_expr(
            &poly("0.5*L**3+8.5*L**2+19*L+11"),
            &poly("0.5*L**2+1.5*L+1"),
        );
        assert_eq!(q, CostExpr::Var(Sym::new("L")));
        // matching orders: constant 1
        let q = ovhd_order_expr(&poly("0.5*L**2+2.5*L+7"), &poly("0.5*L**2+1.5*L+1"));
        assert_eq!(q, CostExpr::int(1));
        // exponential over linear stays a quotient
        let q = ovhd_order_expr(&poly("3*2**D+4*D+14"), &poly("D+3"));
        match q {
            CostExpr::Div(num, den) => {
                assert_eq!(*num, crate::lang::parse_cost_expr_text("2**D").unwrap());
                assert_eq!(*den, CostExpr::Var(Sym::new("D")));
            }
            other => panic!("expected 2**D/D, got {other}"),
        }
    }

    #[test]
    fn asymptotic_order_classification() {
        let cubic = crate::lang::parse_cost_expr_text("0.5*L**3+7*L**2+14.5*L+8").unwrap();
        assert_eq!(asymptotic_order(&cubic), ComplexityOrder::polynomial(3));
        assert_eq!(asymptotic_order(&cubic).name(), "cubic");
        let c = crate::lang::parse_cost_expr_text("7").unwrap();
        assert_eq!(asymptotic_order(&c), ComplexityOrder::constant());
        // 2^D / D dominates every polynomial
        let q = crate::lang::parse_cost_expr_text("2**D/D").unwrap();
        let o = asymptotic_order(&q);
        assert!(o.exp_base > Rat::one());
        assert!(o > ComplexityOrder::polynomial(10));
        assert_eq!(o.name(), "exponential");
        // multivariate joint order: l_A * l_B is quadratic in N
        let m = crate::lang::parse_cost_expr_text("l_A*l_B").unwrap();
        assert_eq!(asymptotic_order(&m), ComplexityOrder::polynomial(2));
    }

    #[test]
    fn hotspot_ranking_orders_by_growth() {
        let p = prep(APP_SRC);
        let app = PredId::new("app", 3);
        let list = CenterId::Pred(PredId::new("list", 1));
        let var = CenterId::Pred(PredId::new("var", 1));
        let centers = [CenterId::Pred(app), list, var, CenterId::BitOps];
        let acc = analyze_accumulated(&p, app, &Scenario::Full, &centers).unwrap();
        let ranking = hotspot_ranking(&acc, app);
        let order: Vec<CenterId> = ranking.iter().map(|(c, _)| *c).collect();
        assert_eq!(order, vec![list, CenterId::BitOps, var]);
    }

    #[test]
    fn hotspot_singleton_and_coefficient_tiebreak() {
        let mk = |s: &str| Bound {
            lower: poly(s),
            upper: Some(poly(s)),
        };
        let mut per_center = BTreeMap::new();
        let three_n = CenterId::Pred(PredId::new("a", 1));
        let one_n = CenterId::Pred(PredId::new("b", 1));
        per_center.insert(three_n, mk("3*n"));
        per_center.insert(one_n, mk("n"));
        let acc = AccumulatedCost {
            per_center,
            display: BTreeMap::new(),
        };
        let ranking = hotspot_ranking(&acc, PredId::new("zz", 0));
        assert_eq!(ranking[0].0, three_n);
        assert_eq!(ranking[1].0, one_n);
    }

    #[test]
    fn unsolvable_recursion_reports_unknown_upper() {
        // recursion that never decreases any measured size
        let src = "\
:- check pred spin(A) : list(A).
spin(X) :- spin(X).
";
        let p = prep(src);
        let a = analyze(&p, PredId::new("spin", 1), &Scenario::Off).unwrap();
        assert!(a.bound.upper.is_none());
    }
}
